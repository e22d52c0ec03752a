//! Test functions on sequences of (component, chart point): the binomial
//! basis, its symmetrised dual, lattice Taylor polynomials and the remainder
//! estimate.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{permutations, MultiIndex, Point, Rect};
use crate::linalg::Matrix;
use crate::monomials::{enumerate_v_bar_plus, MonomialKey, SpeciesTable};
use crate::scalar::{binom_i128, floor_i64, from_i128, int, Rational};

/// One argument slot: a field component and a point in chart coordinates.
pub type Arg = (usize, Point);

/// An exact function of finitely many slots. Arguments arrive sorted by
/// component; a function vanishes on component patterns it does not declare.
pub trait TestFunction {
    fn eval(&self, args: &[Arg]) -> Result<Rational>;

    /// Region where the function is defined; `None` means everywhere.
    fn domain(&self) -> Option<&Rect> {
        None
    }

    /// True when the function is already invariant under `S`.
    fn is_symmetric(&self) -> bool {
        false
    }
}

impl<T: TestFunction + ?Sized> TestFunction for &T {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        (**self).eval(args)
    }
    fn domain(&self) -> Option<&Rect> {
        (**self).domain()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

impl<T: TestFunction + ?Sized> TestFunction for Box<T> {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        (**self).eval(args)
    }
    fn domain(&self) -> Option<&Rect> {
        (**self).domain()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

fn signature_of(args: &[Arg]) -> impl Iterator<Item = usize> + '_ {
    args.iter().map(|a| a.0)
}

/// The component-preserving slot permutations of a signature, each with the
/// sign of its action on fermionic slots.
#[derive(Debug, Clone)]
pub struct SlotSymmetry {
    perms: Vec<(Vec<usize>, i8)>,
}

impl SlotSymmetry {
    pub fn new(signature: &[usize], table: &SpeciesTable) -> Self {
        let odd: Vec<bool> = signature.iter().map(|&c| table.is_fermion(c)).collect();
        slot_symmetry_from_flags(signature, &odd)
    }

    /// `|Sigma(m)|`.
    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[(Vec<usize>, i8)] {
        &self.perms
    }
}

fn parity(p: &[usize]) -> i8 {
    let mut sign = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

thread_local! {
    static SYMMETRY_CACHE: std::cell::RefCell<HashMap<(Vec<usize>, Vec<bool>), SlotSymmetry>> =
        std::cell::RefCell::new(HashMap::new());
}

fn with_symmetry<R>(signature: &[usize], table: &SpeciesTable, f: impl FnOnce(&SlotSymmetry) -> R) -> R {
    let odd: Vec<bool> = signature.iter().map(|&c| table.is_fermion(c)).collect();
    SYMMETRY_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let sym = cache
            .entry((signature.to_vec(), odd))
            .or_insert_with(|| SlotSymmetry::new(signature, table));
        f(sym)
    })
}

/// `(S g)(z)`: average over component-preserving permutations with fermionic signs.
pub fn symmetrised_eval(g: &dyn TestFunction, args: &[Arg], table: &SpeciesTable) -> Result<Rational> {
    if g.is_symmetric() {
        return g.eval(args);
    }
    let signature: Vec<usize> = signature_of(args).collect();
    with_symmetry(&signature, table, |sym| {
        let mut acc = Rational::zero();
        let mut permuted = args.to_vec();
        for (p, s) in sym.perms() {
            for (k, &pk) in p.iter().enumerate() {
                permuted[k] = args[pk].clone();
            }
            let v = g.eval(&permuted)?;
            if *s < 0 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        Ok(acc / int(sym.order() as i64))
    })
}

/// The symmetrised test function `S g`.
pub struct Symmetrised<'a, G: TestFunction> {
    pub inner: G,
    pub table: &'a SpeciesTable,
}

impl<G: TestFunction> TestFunction for Symmetrised<'_, G> {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        symmetrised_eval(&self.inner, args, self.table)
    }
    fn domain(&self) -> Option<&Rect> {
        self.inner.domain()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

fn binomial_product(key: &MonomialKey, base: &Point, args: &[Arg]) -> i128 {
    let mut acc: i128 = 1;
    for ((_, alpha), (_, z)) in key.factors().iter().zip(args) {
        for (axis, &c) in alpha.counts().iter().step_by(2).enumerate() {
            if c == 0 {
                continue;
            }
            let b = binom_i128(z.coords()[axis] - base.coords()[axis], u32::from(c));
            if b == 0 {
                return 0;
            }
            acc = acc.checked_mul(b).expect("binomial product overflow");
        }
    }
    acc
}

fn signature_matches(key: &MonomialKey, args: &[Arg]) -> bool {
    key.degree() == args.len() && key.factors().iter().zip(args).all(|((i, _), (j, _))| i == j)
}

/// `b_m^{(a)}(z) = prod_k binom(z_k - a, alpha_k)` for a forward key `m`.
#[derive(Debug, Clone)]
pub struct Binomial {
    pub key: MonomialKey,
    pub base: Point,
}

impl Binomial {
    pub fn new(key: MonomialKey, base: Point) -> Result<Self> {
        if !key.is_forward() {
            return Err(Error::precondition("binomial basis needs forward multi-indices"));
        }
        Ok(Binomial { key, base })
    }
}

impl TestFunction for Binomial {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        if !signature_matches(&self.key, args) {
            return Ok(Rational::zero());
        }
        Ok(from_i128(binomial_product(&self.key, &self.base, args)))
    }
}

/// `f_m^{(a)} = N_m S b_m^{(a)}` with `N_m = |Sigma(m)| / |Sigma_0(m)|`.
#[derive(Debug, Clone)]
pub struct DualBasis {
    pub key: MonomialKey,
    pub base: Point,
    signature: Vec<usize>,
    odd: Vec<bool>,
    repeat: i64,
}

impl DualBasis {
    pub fn new(key: MonomialKey, base: Point, table: &SpeciesTable) -> Result<Self> {
        if !key.is_forward() || !key.is_canonical(table) {
            return Err(Error::precondition("dual basis needs a canonical forward key"));
        }
        let signature = key.signature();
        let odd = signature.iter().map(|&c| table.is_fermion(c)).collect();
        let repeat = key.repeat_factorial() as i64;
        Ok(DualBasis { key, base, signature, odd, repeat })
    }

    /// `N_m` as a rational.
    pub fn normalisation(key: &MonomialKey, table: &SpeciesTable) -> Rational {
        let sym = SlotSymmetry::new(&key.signature(), table);
        Rational::new(BigInt::from(sym.order()), BigInt::from(key.repeat_factorial()))
    }
}

impl TestFunction for DualBasis {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        if !signature_matches(&self.key, args) {
            return Ok(Rational::zero());
        }
        let odd = &self.odd;
        let total = SYMMETRY_CACHE.with(|cache| {
            let mut cache = cache.borrow_mut();
            let sym = cache
                .entry((self.signature.clone(), odd.clone()))
                .or_insert_with(|| slot_symmetry_from_flags(&self.signature, odd));
            let mut acc: i128 = 0;
            let mut permuted: Vec<Arg> = args.to_vec();
            for (p, s) in sym.perms() {
                for (k, &pk) in p.iter().enumerate() {
                    permuted[k].1 = args[pk].1.clone();
                }
                acc += i128::from(*s) * binomial_product(&self.key, &self.base, &permuted);
            }
            acc
        });
        Ok(Rational::new(BigInt::from(total), BigInt::from(self.repeat)))
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

fn slot_symmetry_from_flags(signature: &[usize], odd: &[bool]) -> SlotSymmetry {
    let mut perms: Vec<(Vec<usize>, i8)> = vec![((0..signature.len()).collect(), 1)];
    let mut start = 0;
    while start < signature.len() {
        let mut end = start + 1;
        while end < signature.len() && signature[end] == signature[start] {
            end += 1;
        }
        let n = end - start;
        if n > 1 {
            let local = permutations(n);
            let mut next = Vec::with_capacity(perms.len() * local.len());
            for (p, s) in &perms {
                for q in &local {
                    let mut p2 = p.clone();
                    for (k, &qk) in q.iter().enumerate() {
                        p2[start + k] = p[start + qk];
                    }
                    let sign = if odd[start] { s * parity(q) } else { *s };
                    next.push((p2, sign));
                }
            }
            perms = next;
        }
        start = end;
    }
    SlotSymmetry { perms }
}

/// A rational combination of binomial basis functions at one base point;
/// this is how elements of the polynomial class are represented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialCombination {
    pub base: Point,
    pub terms: Vec<(MonomialKey, Rational)>,
}

impl TestFunction for BinomialCombination {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (key, c) in &self.terms {
            if signature_matches(key, args) {
                let b = binomial_product(key, &self.base, args);
                if b != 0 {
                    acc += c * from_i128(b);
                }
            }
        }
        Ok(acc)
    }
}

/// A test function given by a table of values on one component pattern,
/// defined on a window and extended by zero outside it.
#[derive(Debug, Clone)]
pub struct TableFunction {
    pub signature: Vec<usize>,
    pub window: Rect,
    pub values: HashMap<Vec<Point>, Rational>,
}

impl TestFunction for TableFunction {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        if args.len() != self.signature.len() || !signature_of(args).eq(self.signature.iter().copied()) {
            return Ok(Rational::zero());
        }
        if args.iter().any(|(_, p)| !self.window.contains(p)) {
            return Ok(Rational::zero());
        }
        let pts: Vec<Point> = args.iter().map(|a| a.1.clone()).collect();
        self.values
            .get(&pts)
            .cloned()
            .ok_or_else(|| Error::domain("test function value missing inside its window"))
    }

    fn domain(&self) -> Option<&Rect> {
        Some(&self.window)
    }
}

/// A test function given by a closure on listed component patterns.
pub struct FnTestFunction<F: Fn(&[Arg]) -> Rational> {
    pub signatures: Vec<Vec<usize>>,
    pub f: F,
}

impl<F: Fn(&[Arg]) -> Rational> TestFunction for FnTestFunction<F> {
    fn eval(&self, args: &[Arg]) -> Result<Rational> {
        if self
            .signatures
            .iter()
            .any(|s| s.len() == args.len() && signature_of(args).eq(s.iter().copied()))
        {
            Ok((self.f)(args))
        } else {
            Ok(Rational::zero())
        }
    }
}

fn check_domain(g: &dyn TestFunction, points: &[Point]) -> Result<()> {
    if let Some(rect) = g.domain() {
        if let Some(p) = points.iter().find(|p| !rect.contains(p)) {
            return Err(Error::domain(format!("stencil point {p} escapes the test function window")));
        }
    }
    Ok(())
}

/// `nabla^{alpha_1} ... nabla^{alpha_p} g` at the sequence `z`, one multi-index
/// per slot (any directions).
pub fn slot_derivative(g: &dyn TestFunction, components: &[usize], alphas: &[MultiIndex], z: &[Point]) -> Result<Rational> {
    let stencils: Vec<Vec<(Point, i128)>> = alphas.iter().map(|a| a.stencil().into_iter().collect()).collect();
    let mut acc = Rational::zero();
    let mut idx = vec![0usize; stencils.len()];
    loop {
        let mut coeff: i128 = 1;
        let mut args: Vec<Arg> = Vec::with_capacity(stencils.len());
        for (k, st) in stencils.iter().enumerate() {
            let (off, c) = &st[idx[k]];
            coeff *= c;
            args.push((components[k], z[k].add(off)));
        }
        let pts: Vec<Point> = args.iter().map(|a| a.1.clone()).collect();
        check_domain(g, &pts)?;
        let v = g.eval(&args)?;
        if !v.is_zero() {
            acc += v * from_i128(coeff);
        }
        let mut k = stencils.len();
        loop {
            if k == 0 {
                return Ok(acc);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < stencils[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `(nabla^m g)` at `(a, ..., a)` with the components of `m`.
pub fn key_derivative_at(g: &dyn TestFunction, key: &MonomialKey, base: &Point) -> Result<Rational> {
    let comps = key.signature();
    let alphas: Vec<MultiIndex> = key.factors().iter().map(|(_, a)| a.clone()).collect();
    let z = vec![base.clone(); key.degree()];
    slot_derivative(g, &comps, &alphas, &z)
}

/// `Tay_a g = sum_{m in v_bar_plus} (nabla^m g)_a b_m^{(a)}`.
pub fn taylor(g: &dyn TestFunction, base: &Point, table: &SpeciesTable, d_plus: &Rational) -> Result<BinomialCombination> {
    let d = base.dim();
    let mut terms = Vec::new();
    for key in enumerate_v_bar_plus(table, d, d_plus)? {
        let c = key_derivative_at(g, &key, base)?;
        if !c.is_zero() {
            terms.push((key, c));
        }
    }
    Ok(BinomialCombination { base: base.clone(), terms })
}

/// Outcome of one remainder estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemainderCheck {
    pub lhs: Rational,
    pub rhs: Rational,
    pub sup_derivative: Rational,
    pub s: u32,
    pub t: u32,
}

impl RemainderCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Taylor degree `s = floor(d_plus - sum of slot dimensions)` for a component pattern.
pub fn taylor_degree(components: &[usize], table: &SpeciesTable, d_plus: &Rational) -> Result<u32> {
    let mut rest = d_plus.clone();
    for &c in components {
        match table.dimension(c).finite() {
            Some(q) => rest -= q,
            None => return Err(Error::precondition("infinite-dimension slot has no Taylor polynomial")),
        }
    }
    if rest.is_negative() {
        return Err(Error::precondition("slot dimensions exceed d_plus"));
    }
    Ok(floor_i64(&rest) as u32)
}

/// Forward multi-indices on `n` coordinates with total order `k`, as count vectors.
fn compositions(n: usize, k: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in compositions(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Checks `|nabla^beta (g - Tay_a g)_z| <= M binom(|z - a|_1, s - t + 1)` where
/// `M` is the largest forward derivative of total order `s + 1` over the box
/// between `a - s` and `z`. Requires `z >= a` and also `z - (backward part of beta) >= a`.
pub fn taylor_remainder_bound_check(
    g: &dyn TestFunction,
    base: &Point,
    components: &[usize],
    z: &[Point],
    beta: &[MultiIndex],
    table: &SpeciesTable,
    d_plus: &Rational,
) -> Result<RemainderCheck> {
    let p = components.len();
    if z.len() != p || beta.len() != p {
        return Err(Error::precondition("slot count mismatch"));
    }
    let d = base.dim();
    let s = taylor_degree(components, table, d_plus)?;
    let t: u32 = beta.iter().map(MultiIndex::order).sum();
    if t > s {
        return Err(Error::precondition(format!("|beta| = {t} exceeds s = {s}")));
    }
    for (zk, bk) in z.iter().zip(beta) {
        for axis in 0..d {
            let back = i64::from(bk.get(crate::lattice::UnitVector::minus(axis)));
            if zk.coords()[axis] - back < base.coords()[axis] {
                return Err(Error::precondition(format!(
                    "point {zk} (after backward shifts) lies below the base point {base}"
                )));
            }
        }
    }
    let tay = taylor(g, base, table, d_plus)?;
    let lhs = (slot_derivative(g, components, beta, z)? - slot_derivative(&tay, components, beta, z)?).abs();

    // Sup of |nabla^alpha g| over y in the box and forward alpha of order s + 1.
    let coords = p * d;
    let mut boxes: Vec<Rect> = Vec::with_capacity(p);
    for zk in z {
        let lo = Point(base.coords().iter().map(|c| c - i64::from(s)).collect());
        boxes.push(Rect::new(lo, zk.clone()));
    }
    let alphas: Vec<Vec<MultiIndex>> = compositions(coords, s + 1)
        .into_iter()
        .map(|counts| counts.chunks(d).map(MultiIndex::forward).collect())
        .collect();
    let slot_points: Vec<Vec<Point>> = boxes.iter().map(Rect::points).collect();
    let mut sup = Rational::zero();
    let mut idx = vec![0usize; p];
    'outer: loop {
        let y: Vec<Point> = idx.iter().enumerate().map(|(k, &i)| slot_points[k][i].clone()).collect();
        for alpha in &alphas {
            let v = slot_derivative(g, components, alpha, &y)?.abs();
            if v > sup {
                sup = v;
            }
        }
        let mut k = p;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < slot_points[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let dist: i64 = z.iter().map(|zk| zk.sub(base).l1()).sum();
    let rhs = &sup * from_i128(binom_i128(dist, s - t + 1));
    Ok(RemainderCheck { lhs, rhs, sup_derivative: sup, s, t })
}

fn big_binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Both sides of the multivariate Vandermonde identity
/// `sum_{|beta| <= s} binom(y, beta) binom(z_p, s - |beta| + 1) + binom(|y|, s + 1) = binom(|y| + z_p, s + 1)`.
pub fn vandermonde_check(y: &[u64], zp: u64, s: u32) -> (BigInt, BigInt) {
    let mut lhs = BigInt::zero();
    for order in 0..=s {
        for beta in compositions(y.len(), order) {
            let mut term = big_binom(zp, u64::from(s - order + 1));
            for (yi, bi) in y.iter().zip(&beta) {
                term *= big_binom(*yi, u64::from(*bi));
            }
            lhs += term;
        }
    }
    let ysum: u64 = y.iter().sum();
    lhs += big_binom(ysum, u64::from(s) + 1);
    (lhs, big_binom(ysum + zp, u64::from(s) + 1))
}

/// Whether `g`, restricted to `window`, agrees with an element of the
/// polynomial class on each listed component pattern.
pub fn pi_membership(
    g: &dyn TestFunction,
    base: &Point,
    window: &Rect,
    signatures: &[Vec<usize>],
    table: &SpeciesTable,
    d_plus: &Rational,
) -> Result<bool> {
    let d = base.dim();
    let bar = enumerate_v_bar_plus(table, d, d_plus)?;
    for sig in signatures {
        let s_max = match taylor_degree(sig, table, d_plus) {
            Ok(s) => i64::from(s),
            Err(_) => -1,
        };
        let need = s_max + 2;
        if (0..d).any(|axis| window.side(axis) < need.max(1)) {
            return Err(Error::precondition(format!(
                "window too small: need at least {need} points per axis to decide membership"
            )));
        }
        let cols: Vec<&MonomialKey> = bar.iter().filter(|k| k.signature() == *sig).collect();
        let pts = window.points();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut idx = vec![0usize; sig.len()];
        loop {
            let args: Vec<Arg> = idx.iter().zip(sig).map(|(&i, &c)| (c, pts[i].clone())).collect();
            rows.push(
                cols.iter()
                    .map(|k| from_i128(binomial_product(k, base, &args)))
                    .collect::<Vec<_>>(),
            );
            rhs.push(g.eval(&args)?);
            let mut k = sig.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < pts.len() {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
        if cols.is_empty() {
            if rhs.iter().any(|v| !v.is_zero()) {
                return Ok(false);
            }
            continue;
        }
        let m = Matrix::from_rows(rows);
        if m.solve(&rhs).is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}
