//! The localisation operators `loc_{+,a}`, `loc_X`, `loc_{X,Y}` and the
//! observable-graded `Loc`.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::functionals::{sum_over, Functional, GradedFunctional, Sector};
use crate::lattice::{CoordinatePatch, Point, Rect, TorusGeometry};
use crate::linalg::Matrix;
use crate::monomials::{enumerate_v_bar_plus, FieldPolynomial, MonomialKey, PHatStrategy, PHatTable, SpeciesTable};
use crate::scalar::{int, Rational};
use crate::testfn::{symmetrised_eval, Arg, Binomial, DualBasis, TestFunction};

/// Whether `loc_X` re-checks its defining pairing property on every call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    On,
    Off,
}

impl VerifyMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(VerifyMode::On),
            "off" => Ok(VerifyMode::Off),
            _ => Err(Error::config(format!("verify must be on or off, got {s:?}"))),
        }
    }
}

/// Everything `loc_X` needs: species, basis table, torus and coordinate patch.
#[derive(Debug, Clone)]
pub struct LocContext {
    phat: Arc<PHatTable>,
    torus: TorusGeometry,
    patch: CoordinatePatch,
    verify: VerifyMode,
    by_signature: Arc<HashMap<Vec<usize>, Vec<usize>>>,
}

/// Result of `loc_X F`: the polynomial `V` with `V(X) = loc_X F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocResult {
    pub base: Point,
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
    pub polynomial: FieldPolynomial,
    pub points: Vec<Point>,
}

impl LocResult {
    fn empty(n: usize) -> Self {
        LocResult {
            base: Point::origin(0),
            alpha: vec![Rational::zero(); n],
            beta: vec![Rational::zero(); n],
            polynomial: FieldPolynomial::zero(),
            points: Vec::new(),
        }
    }
}

/// One nonzero residual `<F - loc_X F, b_m^{(a')}>_0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    pub base: Point,
    pub key: MonomialKey,
    pub value: Rational,
}

impl LocContext {
    pub fn new(
        table: &SpeciesTable,
        torus: TorusGeometry,
        patch: CoordinatePatch,
        d_plus: &Rational,
        strategy: PHatStrategy,
        verify: VerifyMode,
    ) -> Result<Self> {
        let phat = PHatTable::build(table, torus.d, d_plus, strategy)?;
        LocContext::from_table(Arc::new(phat), torus, patch, verify)
    }

    pub fn from_table(phat: Arc<PHatTable>, torus: TorusGeometry, patch: CoordinatePatch, verify: VerifyMode) -> Result<Self> {
        if phat.d() != torus.d {
            return Err(Error::config("basis table and torus disagree on dimension"));
        }
        let mut by_signature: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (i, k) in phat.keys().iter().enumerate() {
            by_signature.entry(k.signature()).or_default().push(i);
        }
        Ok(LocContext { phat, torus, patch, verify, by_signature: Arc::new(by_signature) })
    }

    /// Same table and torus on another patch.
    pub fn with_patch(&self, patch: CoordinatePatch) -> Self {
        LocContext { patch, ..self.clone() }
    }

    pub fn with_verify(&self, verify: VerifyMode) -> Self {
        LocContext { verify, ..self.clone() }
    }

    pub fn phat(&self) -> &PHatTable {
        &self.phat
    }

    pub fn table(&self) -> &SpeciesTable {
        self.phat.species()
    }

    pub fn torus(&self) -> &TorusGeometry {
        &self.torus
    }

    pub fn patch(&self) -> &CoordinatePatch {
        &self.patch
    }

    pub fn basis(&self) -> &[MonomialKey] {
        self.phat.keys()
    }

    /// Base point: the point of `X` with the smallest chart coordinates.
    pub fn base_point<'a>(&self, xs: impl IntoIterator<Item = &'a Point>) -> Option<Point> {
        xs.into_iter().min_by_key(|x| self.patch.chart(x)).cloned()
    }

    fn duals(&self, a: &Point) -> Vec<DualBasis> {
        let ca = self.patch.chart(a);
        self.basis()
            .iter()
            .map(|k| DualBasis::new(k.clone(), ca.clone(), self.table()).expect("basis keys are canonical and forward"))
            .collect()
    }

    fn charted(&self, slots: &[(usize, Point)]) -> Result<Vec<Arg>> {
        slots
            .iter()
            .map(|(i, x)| {
                if self.patch.contains_point(x) {
                    Ok((*i, self.patch.chart(x)))
                } else {
                    Err(Error::domain(format!("support point {x} lies outside the coordinate patch")))
                }
            })
            .collect()
    }

    /// `alpha_m = <F, f_m^{(a)}>_0` for every basis key.
    pub fn dual_coefficients(&self, f: &Functional, a: &Point) -> Result<Vec<Rational>> {
        let duals = self.duals(a);
        let mut out = vec![Rational::zero(); duals.len()];
        for (slots, c) in f.terms() {
            let sig: Vec<usize> = slots.iter().map(|s| s.0).collect();
            let Some(idx) = self.by_signature.get(&sig) else {
                continue;
            };
            let args = self.charted(slots)?;
            for &i in idx {
                let v = duals[i].eval(&args)?;
                if !v.is_zero() {
                    out[i] += c * v;
                }
            }
        }
        Ok(out)
    }

    /// `loc_{+,a} F = sum_m <F, f_m^{(a)}>_0 M_m`.
    pub fn loc_plus_a(&self, f: &Functional, a: &Point) -> Result<FieldPolynomial> {
        let alpha = self.dual_coefficients(f, a)?;
        let mut out = FieldPolynomial::zero();
        for (k, c) in self.basis().iter().zip(alpha) {
            out.add_term(k.clone(), c);
        }
        Ok(out)
    }

    /// Checks that `X` inflated by the stencil reach fits in the patch.
    pub fn check_extension(&self, xs: &[Point]) -> Result<()> {
        let charted: Vec<Point> = xs
            .iter()
            .map(|x| {
                if self.patch.contains_point(x) {
                    Ok(self.patch.chart(x))
                } else {
                    Err(Error::domain(format!("point {x} of X lies outside the coordinate patch")))
                }
            })
            .collect::<Result<_>>()?;
        if let Some(hull) = Rect::hull(&charted) {
            let ext = hull.inflate(i64::from(self.phat.reach()));
            if !self.patch.rect().contains_rect(&ext) {
                return Err(Error::domain("stencil extension of X leaves the coordinate patch"));
            }
        }
        Ok(())
    }

    /// `B_{m',m} = <P_hat_{m'}(X), f_m^{(a)}>_0`, with the triangular structure asserted.
    pub fn b_matrix(&self, xs: &[Point], a: &Point) -> Result<Matrix> {
        self.check_extension(xs)?;
        let n = self.basis().len();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let image = sum_over(self.phat.image(i), xs, &self.torus, self.table());
            rows.push(self.dual_coefficients(&image, a)?);
        }
        let b = Matrix::from_rows(rows);
        let size = int(xs.len() as i64);
        let table = self.table();
        for (i, mi) in self.basis().iter().enumerate() {
            let di = mi.dimension(table);
            for (j, mj) in self.basis().iter().enumerate() {
                if di >= mj.dimension(table) {
                    let expected = if i == j { size.clone() } else { Rational::zero() };
                    if b[(i, j)] != expected {
                        return Err(Error::Verification(format!(
                            "B[{}, {}] = {} breaks triangularity",
                            mi.display(table),
                            mj.display(table),
                            b[(i, j)]
                        )));
                    }
                }
            }
        }
        Ok(b)
    }

    /// `A^{-1}` for `A = B / |X|`, by the finite Neumann series.
    pub fn a_inverse(&self, b: &Matrix, size: usize) -> Result<Matrix> {
        let a = b.scale(&Rational::new(1.into(), (size as i64).into()));
        let inv = a
            .unipotent_inverse()
            .ok_or_else(|| Error::Verification("normalised B is not unipotent".into()))?;
        if a.mul(&inv) != Matrix::identity(a.rows()) {
            return Err(Error::Verification("A A^{-1} differs from the identity".into()));
        }
        Ok(inv)
    }

    /// `loc_X F` as the polynomial `V`.
    pub fn loc(&self, f: &Functional, xs: &[Point]) -> Result<LocResult> {
        let n = self.basis().len();
        let xs: Vec<Point> = xs.iter().map(|x| self.torus.canonical(x)).collect::<BTreeSet<_>>().into_iter().collect();
        let Some(a) = self.base_point(&xs) else {
            return Ok(LocResult::empty(n));
        };
        self.loc_at(f, &xs, &a)
    }

    /// `loc_X F` computed with a chosen base point `a` in `X`.
    pub fn loc_at(&self, f: &Functional, xs: &[Point], a: &Point) -> Result<LocResult> {
        if !xs.contains(a) {
            return Err(Error::precondition(format!("base point {a} is not in X")));
        }
        self.charted(&f.support().into_iter().map(|x| (0, x)).collect::<Vec<_>>())?;
        let b = self.b_matrix(xs, a)?;
        let inv = self.a_inverse(&b, xs.len())?;
        let alpha = self.dual_coefficients(f, a)?;
        let size = int(xs.len() as i64);
        let scaled: Vec<Rational> = alpha.iter().map(|v| v / &size).collect();
        let beta = inv.left_mul_vec(&scaled);
        let polynomial = self.phat.combine(&beta);
        let result = LocResult { base: a.clone(), alpha, beta, polynomial, points: xs.to_vec() };
        if self.verify == VerifyMode::On {
            let res = self.residuals(f, &result, std::slice::from_ref(a))?;
            if let Some(r) = res.first() {
                return Err(Error::Verification(format!(
                    "defining property fails for {} at {}: residual {}",
                    r.key.display(self.table()),
                    r.base,
                    r.value
                )));
            }
        }
        Ok(result)
    }

    /// `loc_X F` as a functional, `V(X)`.
    pub fn loc_functional(&self, f: &Functional, xs: &[Point]) -> Result<Functional> {
        let r = self.loc(f, xs)?;
        Ok(self.evaluate(&r.polynomial, &r.points))
    }

    /// `loc_{X,Y} F = V(Y)`.
    pub fn loc_xy(&self, f: &Functional, xs: &[Point], ys: &[Point]) -> Result<Functional> {
        let xset: BTreeSet<Point> = xs.iter().map(|x| self.torus.canonical(x)).collect();
        let yset: BTreeSet<Point> = ys.iter().map(|y| self.torus.canonical(y)).collect();
        if !yset.is_subset(&xset) {
            return Err(Error::precondition("Y must be a subset of X"));
        }
        let r = self.loc(f, xs)?;
        Ok(sum_over(&r.polynomial, &yset, &self.torus, self.table()))
    }

    pub fn evaluate(&self, p: &FieldPolynomial, xs: &[Point]) -> Functional {
        sum_over(p, xs, &self.torus, self.table())
    }

    /// Nonzero pairings `<F - V(X), b_m^{(a')}>_0` over `m` in the Taylor index
    /// set and the listed base points.
    pub fn residuals(&self, f: &Functional, r: &LocResult, bases: &[Point]) -> Result<Vec<Residual>> {
        let diff = f.sub(&self.evaluate(&r.polynomial, &r.points));
        let table = self.table();
        let bar = enumerate_v_bar_plus(table, self.torus.d, self.phat.d_plus())?;
        let mut by_sig: HashMap<Vec<usize>, Vec<&MonomialKey>> = HashMap::new();
        for k in &bar {
            by_sig.entry(k.signature()).or_default().push(k);
        }
        let mut grouped: HashMap<Vec<usize>, Vec<(Vec<Arg>, &Rational)>> = HashMap::new();
        for (slots, c) in diff.terms() {
            let sig: Vec<usize> = slots.iter().map(|s| s.0).collect();
            grouped.entry(sig).or_default().push((self.charted(slots)?, c));
        }
        let mut out = Vec::new();
        for base in bases {
            let cb = self.patch.chart(base);
            for (sig, keys) in &by_sig {
                let Some(terms) = grouped.get(sig) else { continue };
                for key in keys {
                    let g = Binomial::new((*key).clone(), cb.clone())?;
                    let mut acc = Rational::zero();
                    for (args, c) in terms {
                        acc += *c * symmetrised_eval(&g, args, table)?;
                    }
                    if !acc.is_zero() {
                        out.push(Residual { base: base.clone(), key: (*key).clone(), value: acc });
                    }
                }
            }
        }
        Ok(out)
    }

    /// The functionals `c_n = sum_m (B^{-1})_{n,m} f_m^{(a)}` dual to `P_hat_n(X)`,
    /// returned as the coefficient matrix over the dual basis.
    pub fn dual_vectors(&self, xs: &[Point]) -> Result<Matrix> {
        let a = self.base_point(xs).ok_or_else(|| Error::precondition("X is empty"))?;
        let b = self.b_matrix(xs, &a)?;
        let inv = self.a_inverse(&b, xs.len())?;
        Ok(inv.scale(&Rational::new(1.into(), (xs.len() as i64).into())))
    }
}

/// Per-sector contexts and the observable points `a, b` for the graded `Loc`.
#[derive(Debug, Clone)]
pub struct GradedLoc {
    pub sectors: [LocContext; 4],
    pub a: Point,
    pub b: Point,
}

/// Default per-sector thresholds: `d_plus`, `d_plus/2`, `d_plus/2`, `0`.
pub fn default_sector_d_plus(d_plus: &Rational) -> [Rational; 4] {
    let half = d_plus / int(2);
    [d_plus.clone(), half.clone(), half, Rational::zero()]
}

impl GradedLoc {
    pub fn new(
        table: &SpeciesTable,
        torus: TorusGeometry,
        patch: CoordinatePatch,
        d_plus: [Rational; 4],
        strategy: PHatStrategy,
        verify: VerifyMode,
        a: Point,
        b: Point,
    ) -> Result<Self> {
        let mk = |dp: &Rational| LocContext::new(table, torus.clone(), patch.clone(), dp, strategy, verify);
        Ok(GradedLoc {
            sectors: [mk(&d_plus[0])?, mk(&d_plus[1])?, mk(&d_plus[2])?, mk(&d_plus[3])?],
            a: torus.canonical(&a),
            b: torus.canonical(&b),
        })
    }

    pub fn context(&self, s: Sector) -> &LocContext {
        &self.sectors[s.index()]
    }

    /// `X(alpha)`.
    pub fn restrict(&self, s: Sector, xs: &[Point]) -> Vec<Point> {
        let keep = |x: &Point| match s {
            Sector::Empty => true,
            Sector::A => *x == self.a,
            Sector::B => *x == self.b,
            Sector::AB => *x == self.a || *x == self.b,
        };
        let torus = self.sectors[0].torus();
        xs.iter().map(|x| torus.canonical(x)).filter(|x| keep(x)).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// `Loc_{X,Y} F`, sector by sector.
    pub fn loc_xy(&self, f: &GradedFunctional, xs: &[Point], ys: &[Point]) -> Result<GradedFunctional> {
        let mut out = GradedFunctional::zero();
        for s in Sector::ALL {
            let xa = self.restrict(s, xs);
            let ya = self.restrict(s, ys);
            if xa.is_empty() || f.sector(s).is_zero() {
                continue;
            }
            *out.sector_mut(s) = self.context(s).loc_xy(f.sector(s), &xa, &ya)?;
        }
        Ok(out)
    }

    /// `Loc_X F = Loc_{X,X} F`.
    pub fn loc(&self, f: &GradedFunctional, xs: &[Point]) -> Result<GradedFunctional> {
        self.loc_xy(f, xs, xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MultiIndex;
    use crate::scalar::rat;

    fn setup(d: usize, dp: i64) -> LocContext {
        let table = SpeciesTable::single_boson(int(1));
        let torus = TorusGeometry::new(d, 4, 2).unwrap();
        let patch = CoordinatePatch::new(&torus, &Point::origin(d), &vec![4; d], 2).unwrap();
        LocContext::new(&table, torus, patch, &int(dp), PHatStrategy::Symmetrise, VerifyMode::On).unwrap()
    }

    #[test]
    fn identity_on_basis_monomials() {
        let ctx = setup(1, 3);
        let a = Point::new(&[1]);
        for k in ctx.basis().to_vec() {
            let f = ctx.evaluate(&FieldPolynomial::monomial(k.clone()), std::slice::from_ref(&a));
            assert_eq!(ctx.loc_plus_a(&f, &a).unwrap(), FieldPolynomial::monomial(k));
        }
    }

    #[test]
    fn b_matrix_diagonal() {
        let ctx = setup(2, 3);
        let xs = vec![Point::new(&[0, 0]), Point::new(&[1, 0]), Point::new(&[0, 1])];
        let b = ctx.b_matrix(&xs, &xs[0]).unwrap();
        for i in 0..b.rows() {
            assert_eq!(b[(i, i)], int(3));
        }
    }

    #[test]
    fn odd_symmetrisation_kills_constant_mode() {
        let ctx = setup(1, 3);
        let a = Point::new(&[0]);
        let k = MonomialKey(vec![(0, MultiIndex::forward(&[0])), (0, MultiIndex::forward(&[1]))]);
        let i = ctx.phat().position(&k).unwrap();
        let j = ctx.phat().position(&MonomialKey(vec![(0, MultiIndex::zero(1)), (0, MultiIndex::zero(1))])).unwrap();
        let b = ctx.b_matrix(std::slice::from_ref(&a), &a).unwrap();
        assert_eq!(b[(i, j)], int(0));
    }

    #[test]
    fn high_dimension_functional_localises_to_zero() {
        let ctx = setup(1, 4);
        let x = Point::new(&[0]);
        let f = Functional::term(ctx.table(), vec![(0, x.clone()); 6], rat(1, 1));
        assert!(ctx.loc(&f, std::slice::from_ref(&x)).unwrap().polynomial.is_zero());
    }

    #[test]
    fn translated_pair_defining_property() {
        let ctx = setup(1, 3);
        let f = Functional::term(ctx.table(), vec![(0, Point::new(&[0])), (0, Point::new(&[2]))], int(1));
        let xs = vec![Point::new(&[0]), Point::new(&[1]), Point::new(&[2])];
        let r = ctx.loc(&f, &xs).unwrap();
        let bases: Vec<Point> = ctx.patch().points();
        assert!(ctx.residuals(&f, &r, &bases).unwrap().is_empty());
    }
}
