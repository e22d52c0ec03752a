//! Torus geometry, unit vectors, multi-indices, coordinate patches,
//! lattice automorphisms and finite differences.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{from_i128, Rational};

/// A lattice point. On the torus the coordinates are canonical
/// representatives in `0..period`; in a patch chart they are unwrapped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(pub SmallVec<[i64; 4]>);

impl Point {
    pub fn new(coords: &[i64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn origin(d: usize) -> Self {
        Point(SmallVec::from_elem(0, d))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn shifted(&self, e: UnitVector, steps: i64) -> Point {
        let mut p = self.clone();
        p.0[e.axis] += e.sign() * steps;
        p
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// One of the `2d` unit vectors `+e_i`, `-e_i` (axis is zero based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitVector {
    pub axis: usize,
    pub positive: bool,
}

impl UnitVector {
    pub fn plus(axis: usize) -> Self {
        UnitVector { axis, positive: true }
    }

    pub fn minus(axis: usize) -> Self {
        UnitVector { axis, positive: false }
    }

    pub fn sign(self) -> i64 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn reversed(self) -> Self {
        UnitVector { axis: self.axis, positive: !self.positive }
    }

    /// Slot in a multi-index count vector: axis order, `+` before `-`.
    pub fn slot(self) -> usize {
        2 * self.axis + usize::from(!self.positive)
    }

    pub fn from_slot(slot: usize) -> Self {
        UnitVector { axis: slot / 2, positive: slot.is_multiple_of(2) }
    }

    pub fn all(d: usize) -> impl Iterator<Item = UnitVector> {
        (0..2 * d).map(UnitVector::from_slot)
    }

    /// Parse `"+2"` / `"-1"` (one based axis).
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let (positive, rest) = match s.as_bytes().first() {
            Some(b'+') => (true, &s[1..]),
            Some(b'-') => (false, &s[1..]),
            _ => return Err(Error::config(format!("bad direction {s:?}"))),
        };
        let axis: usize = rest
            .parse()
            .map_err(|_| Error::config(format!("bad direction {s:?}")))?;
        if axis == 0 || axis > d {
            return Err(Error::config(format!("direction {s:?} out of range for d={d}")));
        }
        Ok(UnitVector { axis: axis - 1, positive })
    }
}

impl fmt::Display for UnitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.axis + 1)
    }
}

/// Counts of unit vectors; `nabla^alpha` is the commuting product of the
/// corresponding forward differences.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(SmallVec<[u8; 8]>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, 2 * d))
    }

    pub fn unit(d: usize, e: UnitVector) -> Self {
        let mut m = MultiIndex::zero(d);
        m.0[e.slot()] = 1;
        m
    }

    /// From per-axis forward counts.
    pub fn forward(counts: &[u32]) -> Self {
        let mut m = MultiIndex::zero(counts.len());
        for (axis, &c) in counts.iter().enumerate() {
            m.0[2 * axis] = u8::try_from(c).expect("derivative count too large");
        }
        m
    }

    pub fn from_counts(counts: &[u8]) -> Self {
        assert!(counts.len().is_multiple_of(2));
        MultiIndex(SmallVec::from_slice(counts))
    }

    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, e: UnitVector) -> u32 {
        u32::from(self.0[e.slot()])
    }

    pub fn set(&mut self, e: UnitVector, n: u32) {
        self.0[e.slot()] = u8::try_from(n).expect("derivative count too large");
    }

    pub fn with_added(&self, e: UnitVector, n: u32) -> Self {
        let mut m = self.clone();
        m.set(e, m.get(e) + n);
        m
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|&c| u32::from(c)).sum()
    }

    pub fn linf(&self) -> u32 {
        self.0.iter().map(|&c| u32::from(c)).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// No negative unit vector occurs.
    pub fn is_forward(&self) -> bool {
        self.0.iter().skip(1).step_by(2).all(|&c| c == 0)
    }

    /// Per-axis forward counts (only meaningful for forward indices).
    pub fn forward_counts(&self) -> SmallVec<[u32; 4]> {
        self.0.iter().step_by(2).map(|&c| u32::from(c)).collect()
    }

    /// Nonzero entries in slot order.
    pub fn entries(&self) -> impl Iterator<Item = (UnitVector, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (UnitVector::from_slot(s), u32::from(c)))
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Largest backward reach per axis (for stencil radii).
    pub fn reach(&self) -> u32 {
        self.linf()
    }

    /// Point-evaluation stencil: `nabla^alpha f(x) = sum_o c_o f(x + o)`.
    pub fn stencil(&self) -> BTreeMap<Point, i128> {
        let d = self.dim();
        let mut acc: BTreeMap<Point, i128> = BTreeMap::new();
        acc.insert(Point::origin(d), 1);
        for (e, n) in self.entries() {
            let mut next: BTreeMap<Point, i128> = BTreeMap::new();
            for (p, c) in &acc {
                for k in 0..=n {
                    let w = crate::scalar::binom_i128(i64::from(n), k)
                        * if (n - k) % 2 == 0 { 1 } else { -1 };
                    *next.entry(p.shifted(e, i64::from(k))).or_insert(0) += c * w;
                }
            }
            next.retain(|_, c| *c != 0);
            acc = next;
        }
        acc
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return Ok(());
        }
        for (e, n) in self.entries() {
            for _ in 0..n {
                write!(f, "D{e}")?;
            }
        }
        Ok(())
    }
}

/// The discrete torus of side `L^N` in dimension `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusGeometry {
    pub d: usize,
    pub l: u64,
    pub n: u32,
    period: i64,
}

impl TorusGeometry {
    pub fn new(d: usize, l: u64, n: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::config("dimension d must be positive"));
        }
        if l < 2 || n < 1 {
            return Err(Error::config("need L >= 2 and N >= 1"));
        }
        let period = l
            .checked_pow(n)
            .and_then(|p| i64::try_from(p).ok())
            .filter(|p| *p < (1 << 40))
            .ok_or_else(|| Error::config("torus period L^N too large"))?;
        Ok(TorusGeometry { d, l, n, period })
    }

    pub fn period(&self) -> i64 {
        self.period
    }

    pub fn canonical(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.d, "point dimension mismatch");
        Point(x.0.iter().map(|c| c.rem_euclid(self.period)).collect())
    }

    pub fn shift(&self, x: &Point, delta: &Point) -> Point {
        self.canonical(&x.add(delta))
    }

    pub fn step(&self, x: &Point, e: UnitVector, steps: i64) -> Point {
        self.canonical(&x.shifted(e, steps))
    }
}

/// A box of chart coordinates `lo <= x <= hi` (inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn new(lo: Point, hi: Point) -> Self {
        assert_eq!(lo.dim(), hi.dim());
        Rect { lo, hi }
    }

    pub fn cube(d: usize, lo: i64, hi: i64) -> Self {
        Rect::new(Point(SmallVec::from_elem(lo, d)), Point(SmallVec::from_elem(hi, d)))
    }

    /// Bounding box of a non-empty point set.
    pub fn hull<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.clone(), first.clone());
        for p in it {
            for i in 0..p.dim() {
                lo.0[i] = lo.0[i].min(p.0[i]);
                hi.0[i] = hi.0[i].max(p.0[i]);
            }
        }
        Some(Rect { lo, hi })
    }

    pub fn inflate(&self, r: i64) -> Rect {
        Rect {
            lo: Point(self.lo.0.iter().map(|c| c - r).collect()),
            hi: Point(self.hi.0.iter().map(|c| c + r).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.0.iter().zip(&self.hi.0).any(|(a, b)| a > b)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.0.iter()
            .zip(self.lo.0.iter().zip(&self.hi.0))
            .all(|(c, (lo, hi))| lo <= c && c <= hi)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.is_empty() || (self.contains(&other.lo) && self.contains(&other.hi))
    }

    pub fn side(&self, axis: usize) -> i64 {
        (self.hi.0[axis] - self.lo.0[axis] + 1).max(0)
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|i| self.side(i) as usize).product()
    }

    /// All points, lexicographic order.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.len());
        if self.is_empty() {
            return out;
        }
        let mut cur = self.lo.clone();
        loop {
            out.push(cur.clone());
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur.0[axis] < self.hi.0[axis] {
                    cur.0[axis] += 1;
                    break;
                }
                cur.0[axis] = self.lo.0[axis];
            }
        }
    }
}

/// A torus region with an injective chart onto the rectangle
/// `|x_i| <= r_i`, with a margin of `max(1, p_phi)` that must also embed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinatePatch {
    torus: TorusGeometry,
    anchor: Point,
    radii: Vec<i64>,
    margin: i64,
}

impl CoordinatePatch {
    pub fn new(torus: &TorusGeometry, anchor: &Point, radii: &[i64], p_phi: u32) -> Result<Self> {
        if anchor.dim() != torus.d || radii.len() != torus.d {
            return Err(Error::config("patch anchor/radii dimension mismatch"));
        }
        if radii.iter().any(|&r| r < 0) {
            return Err(Error::config("patch radii must be non-negative"));
        }
        let margin = i64::from(p_phi.max(1));
        for &r in radii {
            if 2 * (r + margin) >= torus.period() {
                return Err(Error::config(format!(
                    "patch radius {r} with margin {margin} does not embed in a torus of period {}",
                    torus.period()
                )));
            }
        }
        Ok(CoordinatePatch {
            torus: torus.clone(),
            anchor: torus.canonical(anchor),
            radii: radii.to_vec(),
            margin,
        })
    }

    pub fn torus(&self) -> &TorusGeometry {
        &self.torus
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn radii(&self) -> &[i64] {
        &self.radii
    }

    pub fn margin(&self) -> i64 {
        self.margin
    }

    /// The chart rectangle `|x_i| <= r_i`.
    pub fn rect(&self) -> Rect {
        Rect::new(
            Point(self.radii.iter().map(|r| -r).collect()),
            Point(self.radii.iter().copied().collect()),
        )
    }

    /// Unwrapped coordinates relative to the anchor, in the symmetric range.
    pub fn chart(&self, x: &Point) -> Point {
        let p = self.torus.period();
        Point(
            x.0.iter()
                .zip(&self.anchor.0)
                .map(|(c, a)| {
                    let r = (c - a).rem_euclid(p);
                    if 2 * r > p {
                        r - p
                    } else {
                        r
                    }
                })
                .collect(),
        )
    }

    pub fn unchart(&self, c: &Point) -> Point {
        self.torus.canonical(&self.anchor.add(c))
    }

    pub fn contains_point(&self, x: &Point) -> bool {
        self.rect().contains(&self.chart(x))
    }

    /// True iff every point of `xs` maps into the patch rectangle.
    pub fn contains<'a>(&self, xs: impl IntoIterator<Item = &'a Point>) -> bool {
        xs.into_iter().all(|x| self.contains_point(x))
    }

    /// All torus points of the patch.
    pub fn points(&self) -> Vec<Point> {
        self.rect().points().iter().map(|c| self.unchart(c)).collect()
    }

    /// The image patch under an automorphism.
    pub fn transformed(&self, e: &Automorphism) -> CoordinatePatch {
        let mut radii = vec![0; self.radii.len()];
        for (i, &r) in self.radii.iter().enumerate() {
            radii[e.linear.perm[i]] = r;
        }
        CoordinatePatch {
            torus: self.torus.clone(),
            anchor: e.apply(&self.torus, &self.anchor),
            radii,
            margin: self.margin,
        }
    }
}

/// A signed permutation of the unit vectors: `e_i -> (-1)^{neg_i} e_{perm_i}`.
/// These form the hyperoctahedral group, acting on `Z^d` and on multi-indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub neg: Vec<bool>,
}

impl SignedPermutation {
    pub fn identity(d: usize) -> Self {
        SignedPermutation { perm: (0..d).collect(), neg: vec![false; d] }
    }

    pub fn new(perm: Vec<usize>, neg: Vec<bool>) -> Result<Self> {
        let d = perm.len();
        if neg.len() != d {
            return Err(Error::config("signed permutation length mismatch"));
        }
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::config("not a permutation"));
            }
            seen[p] = true;
        }
        Ok(SignedPermutation { perm, neg })
    }

    /// Reflection of one axis.
    pub fn flip(d: usize, axis: usize) -> Self {
        let mut s = SignedPermutation::identity(d);
        s.neg[axis] = true;
        s
    }

    /// Exchange of two axes.
    pub fn swap(d: usize, a: usize, b: usize) -> Self {
        let mut s = SignedPermutation::identity(d);
        s.perm.swap(a, b);
        s
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.neg.iter().all(|n| !n)
    }

    /// Pure sign change (element of the axis reflection subgroup).
    pub fn is_reflection(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Pure permutation of axes.
    pub fn is_axis_permutation(&self) -> bool {
        self.neg.iter().all(|n| !n)
    }

    pub fn apply_unit(&self, e: UnitVector) -> UnitVector {
        UnitVector { axis: self.perm[e.axis], positive: e.positive != self.neg[e.axis] }
    }

    pub fn apply_point(&self, x: &Point) -> Point {
        let mut y = Point::origin(x.dim());
        for i in 0..x.dim() {
            y.0[self.perm[i]] = if self.neg[i] { -x.0[i] } else { x.0[i] };
        }
        y
    }

    /// Pushforward: `(theta alpha)(theta e) = alpha(e)`.
    pub fn apply_multi_index(&self, alpha: &MultiIndex) -> MultiIndex {
        let mut out = MultiIndex::zero(alpha.dim());
        for (e, n) in alpha.entries() {
            out.set(self.apply_unit(e), n);
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SignedPermutation) -> SignedPermutation {
        let d = self.dim();
        let mut perm = vec![0; d];
        let mut neg = vec![false; d];
        for i in 0..d {
            let j = other.perm[i];
            perm[i] = self.perm[j];
            neg[i] = other.neg[i] != self.neg[j];
        }
        SignedPermutation { perm, neg }
    }

    pub fn inverse(&self) -> SignedPermutation {
        let d = self.dim();
        let mut perm = vec![0; d];
        let mut neg = vec![false; d];
        for i in 0..d {
            perm[self.perm[i]] = i;
            neg[self.perm[i]] = self.neg[i];
        }
        SignedPermutation { perm, neg }
    }

    /// Factor as `reflection ∘ axis_permutation`.
    pub fn decompose(&self) -> (SignedPermutation, SignedPermutation) {
        let d = self.dim();
        let p = SignedPermutation { perm: self.perm.clone(), neg: vec![false; d] };
        let mut neg = vec![false; d];
        for i in 0..d {
            neg[self.perm[i]] = self.neg[i];
        }
        (SignedPermutation { perm: (0..d).collect(), neg }, p)
    }

    /// All `2^d` axis reflections.
    pub fn reflections(d: usize) -> Vec<SignedPermutation> {
        (0..1usize << d)
            .map(|mask| SignedPermutation {
                perm: (0..d).collect(),
                neg: (0..d).map(|i| mask >> i & 1 == 1).collect(),
            })
            .collect()
    }

    /// All `d!` axis permutations.
    pub fn axis_permutations(d: usize) -> Vec<SignedPermutation> {
        permutations(d)
            .into_iter()
            .map(|perm| SignedPermutation { perm, neg: vec![false; d] })
            .collect()
    }

    /// The whole hyperoctahedral group.
    pub fn all(d: usize) -> Vec<SignedPermutation> {
        let mut out = Vec::new();
        for r in SignedPermutation::reflections(d) {
            for p in SignedPermutation::axis_permutations(d) {
                out.push(r.compose(&p));
            }
        }
        out
    }

    /// Generators: one reflection and adjacent transpositions.
    pub fn generators(d: usize) -> Vec<SignedPermutation> {
        let mut out = vec![SignedPermutation::flip(d, 0)];
        for a in 0..d.saturating_sub(1) {
            out.push(SignedPermutation::swap(d, a, a + 1));
        }
        out
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// A torus automorphism `x -> R x + t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    pub linear: SignedPermutation,
    pub translation: Point,
}

impl Automorphism {
    pub fn translation(t: Point) -> Self {
        Automorphism { linear: SignedPermutation::identity(t.dim()), translation: t }
    }

    pub fn linear(r: SignedPermutation) -> Self {
        let d = r.dim();
        Automorphism { linear: r, translation: Point::origin(d) }
    }

    /// A linear map fixing the point `centre` instead of the origin.
    pub fn about(r: SignedPermutation, centre: &Point) -> Self {
        let t = centre.sub(&r.apply_point(centre));
        Automorphism { linear: r, translation: t }
    }

    pub fn apply(&self, torus: &TorusGeometry, x: &Point) -> Point {
        torus.canonical(&self.linear.apply_point(x).add(&self.translation))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            linear: self.linear.compose(&other.linear),
            translation: self.linear.apply_point(&other.translation).add(&self.translation),
        }
    }

    pub fn inverse(&self) -> Automorphism {
        let inv = self.linear.inverse();
        let t = inv.apply_point(&self.translation);
        Automorphism {
            linear: inv,
            translation: Point(t.0.iter().map(|c| -c).collect()),
        }
    }
}

/// An exact function on (a subset of) `Z^d`.
pub trait LatticeFunction {
    fn value(&self, x: &Point) -> Option<Rational>;
}

impl LatticeFunction for HashMap<Point, Rational> {
    fn value(&self, x: &Point) -> Option<Rational> {
        self.get(x).cloned()
    }
}

impl<F: Fn(&Point) -> Option<Rational>> LatticeFunction for F {
    fn value(&self, x: &Point) -> Option<Rational> {
        self(x)
    }
}

fn value_at(f: &dyn LatticeFunction, x: &Point) -> Result<Rational> {
    f.value(x)
        .ok_or_else(|| Error::domain(format!("lattice function undefined at {x}")))
}

/// `nabla^e f(x) = f(x + e) - f(x)`.
pub fn forward_difference(f: &dyn LatticeFunction, e: UnitVector, x: &Point) -> Result<Rational> {
    Ok(value_at(f, &x.shifted(e, 1))? - value_at(f, x)?)
}

/// `nabla^alpha f(x)` by stencil expansion.
pub fn apply_multi_index(f: &dyn LatticeFunction, alpha: &MultiIndex, x: &Point) -> Result<Rational> {
    let mut acc = Rational::default();
    for (off, c) in alpha.stencil() {
        acc += from_i128(c) * value_at(f, &x.add(&off))?;
    }
    Ok(acc)
}

/// Checks `(nabla^e + nabla^{-e}) f(x) = -nabla^{-e} nabla^e f(x)`.
pub fn redundancy_identity_check(f: &dyn LatticeFunction, e: UnitVector, x: &Point) -> Result<bool> {
    let d = x.dim();
    let lhs = forward_difference(f, e, x)? + forward_difference(f, e.reversed(), x)?;
    let both = MultiIndex::unit(d, e).with_added(e.reversed(), 1);
    let rhs = -apply_multi_index(f, &both, x)?;
    Ok(lhs == rhs)
}
