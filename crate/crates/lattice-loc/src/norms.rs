//! Test-function norms on finite windows, upper bounds for the zero-field
//! functional semi-norm, and the scaling experiment for `1 - loc`.

use std::collections::HashMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::lattice::{CoordinatePatch, MultiIndex, Point, Rect, TorusGeometry};
use crate::loc::{LocContext, VerifyMode};
use crate::monomials::{enumerate_v_plus, FieldPolynomial, MonomialKey, PHatStrategy, SpeciesTable};
use crate::scalar::{binom_i128, from_i128, int, pow, to_f64, Rational};
use crate::testfn::{slot_derivative, TestFunction};

/// Weights `h_i` per component, scale `R` and derivative cap `p_Phi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormParams {
    pub h: Vec<Rational>,
    pub r: Rational,
    pub p_phi: u32,
}

impl NormParams {
    pub fn new(h: Vec<Rational>, r: Rational, p_phi: u32) -> Result<Self> {
        if h.iter().any(|x| !x.is_positive()) || !r.is_positive() {
            return Err(Error::config("norm weights and scale must be positive"));
        }
        Ok(NormParams { h, r, p_phi })
    }

    /// `h_i = L^{-j [phi_i]}`, `R = L^j`; every `j [phi_i]` must be an integer.
    pub fn at_scale(table: &SpeciesTable, l: u64, j: u32, p_phi: u32) -> Result<Self> {
        let lq = int(l as i64);
        let mut h = Vec::with_capacity(table.len());
        for i in 0..table.len() {
            let dim = table
                .dimension(i)
                .finite()
                .ok_or_else(|| Error::config("norm weights need finite dimensions"))?;
            let e = dim * int(i64::from(j));
            if !e.is_integer() {
                return Err(Error::config(format!("j [phi] = {e} is not an integer")));
            }
            h.push(pow(&lq, -e.to_integer().to_i64().expect("small exponent")));
        }
        NormParams::new(h, pow(&lq, i64::from(j)), p_phi)
    }

    /// `h^m R^{-|alpha'|} 2^{|alpha| - |alpha'|}` with `alpha'` capped at `p_Phi` per direction.
    pub fn monomial_weight(&self, key: &MonomialKey) -> Rational {
        let mut w = Rational::one();
        let two = int(2);
        for (i, alpha) in key.factors() {
            w *= &self.h[*i];
            for &c in alpha.counts() {
                let c = u32::from(c);
                let kept = c.min(self.p_phi);
                w *= pow(&self.r, -i64::from(kept)) * pow(&two, i64::from(c - kept));
            }
        }
        w
    }
}

/// `sup h^{-z} R^{|alpha|_1} |nabla^alpha g_z|` over `z` in `window^p` for each
/// listed component pattern and forward `alpha` with `|alpha|_inf <= p_Phi`.
pub fn phi_norm_window(g: &dyn TestFunction, params: &NormParams, window: &Rect, signatures: &[Vec<usize>]) -> Result<Rational> {
    let d = window.dim();
    let pts = window.points();
    let per_slot: Vec<MultiIndex> = {
        let mut out = vec![Vec::<u32>::new()];
        for _ in 0..d {
            let mut next = Vec::new();
            for a in &out {
                for c in 0..=params.p_phi {
                    let mut b = a.clone();
                    b.push(c);
                    next.push(b);
                }
            }
            out = next;
        }
        out.iter().map(|c| MultiIndex::forward(c)).collect()
    };
    let mut sup = Rational::zero();
    for sig in signatures {
        let p = sig.len();
        let mut hz = Rational::one();
        for &i in sig {
            hz /= &params.h[i];
        }
        let mut zi = vec![0usize; p];
        loop {
            let z: Vec<Point> = zi.iter().map(|&k| pts[k].clone()).collect();
            let mut ai = vec![0usize; p];
            loop {
                let alphas: Vec<MultiIndex> = ai.iter().map(|&k| per_slot[k].clone()).collect();
                let order: u32 = alphas.iter().map(MultiIndex::order).sum();
                let v = slot_derivative(g, sig, &alphas, &z)?.abs() * &hz * pow(&params.r, i64::from(order));
                if v > sup {
                    sup = v;
                }
                if !advance(&mut ai, per_slot.len()) {
                    break;
                }
            }
            if !advance(&mut zi, pts.len()) {
                break;
            }
        }
    }
    Ok(sup)
}

fn advance(idx: &mut [usize], n: usize) -> bool {
    let mut k = idx.len();
    loop {
        if k == 0 {
            return false;
        }
        k -= 1;
        idx[k] += 1;
        if idx[k] < n {
            return true;
        }
        idx[k] = 0;
    }
}

/// Termwise bound `sum |c| prod h`.
pub fn t0_upper(f: &Functional, params: &NormParams) -> Rational {
    let mut acc = Rational::zero();
    for (slots, c) in f.terms() {
        let mut w = c.abs();
        for (i, _) in slots {
            w *= &params.h[*i];
        }
        acc += w;
    }
    acc
}

/// Forward Newton expansion `phi_x = sum_alpha binom(x - a, alpha) nabla^alpha phi_a`
/// of every term, merged into canonical forward monomials at `a` (chart coordinates).
pub fn newton_expand(
    f: &Functional,
    patch: &CoordinatePatch,
    base: &Point,
    table: &SpeciesTable,
) -> Result<FieldPolynomial> {
    let mut merged: HashMap<MonomialKey, Rational> = HashMap::new();
    let mut slot_cache: HashMap<Point, Vec<(MultiIndex, i128)>> = HashMap::new();
    for (slots, c) in f.terms() {
        let mut offsets = Vec::with_capacity(slots.len());
        for (i, x) in slots {
            let off = patch.chart(x).sub(base);
            if off.coords().iter().any(|&v| v < 0) {
                return Err(Error::precondition(format!("point {x} lies below the expansion base")));
            }
            slot_cache.entry(off.clone()).or_insert_with(|| newton_slot(&off));
            offsets.push((*i, off));
        }
        let per_slot: Vec<(usize, &Vec<(MultiIndex, i128)>)> =
            offsets.iter().map(|(i, off)| (*i, &slot_cache[off])).collect();
        let mut idx = vec![0usize; per_slot.len()];
        loop {
            let mut w: i128 = 1;
            let mut factors = Vec::with_capacity(per_slot.len());
            for (k, (i, exp)) in per_slot.iter().enumerate() {
                let (a, b) = &exp[idx[k]];
                w *= b;
                factors.push((*i, a.clone()));
            }
            if let Some((s, key)) = MonomialKey::canonical(table, factors) {
                let v = c * from_i128(w * i128::from(s));
                let e = merged.entry(key).or_insert_with(Rational::zero);
                *e += v;
            }
            let lens: Vec<usize> = per_slot.iter().map(|(_, e)| e.len()).collect();
            let mut k = idx.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < lens[k] {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
    }
    let mut out = FieldPolynomial::zero();
    for (k, v) in merged {
        out.add_term(k, v);
    }
    Ok(out)
}

fn newton_slot(off: &Point) -> Vec<(MultiIndex, i128)> {
    let mut out: Vec<(Vec<u32>, i128)> = vec![(Vec::new(), 1)];
    for &o in off.coords() {
        let mut next = Vec::new();
        for (a, w) in &out {
            for k in 0..=o as u32 {
                let mut b = a.clone();
                b.push(k);
                next.push((b, w * binom_i128(o, k)));
            }
        }
        out = next;
    }
    out.into_iter().map(|(a, w)| (MultiIndex::forward(&a), w)).collect()
}

/// Upper bound on the zero-field semi-norm that sees lattice smoothness:
/// expand forward around the lower corner of the support hull and weigh
/// each monomial by [`NormParams::monomial_weight`].
pub fn t0_local_upper(f: &Functional, params: &NormParams, patch: &CoordinatePatch, table: &SpeciesTable) -> Result<Rational> {
    let charted: Vec<Point> = f.support().iter().map(|x| patch.chart(x)).collect();
    let Some(hull) = Rect::hull(&charted) else {
        return Ok(f.terms().map(|(_, c)| c.abs()).sum());
    };
    let poly = newton_expand(f, patch, &hull.lo, table)?;
    let mut acc = Rational::zero();
    for (k, c) in poly.terms() {
        acc += c.abs() * params.monomial_weight(k);
    }
    Ok(acc)
}

/// Smallest dimension of a monomial outside the local polynomial basis.
pub fn d_plus_prime(table: &SpeciesTable, d: usize, d_plus: &Rational) -> Result<Rational> {
    let max_dim = table
        .components()
        .iter()
        .filter_map(|c| c.dimension.finite().cloned())
        .max()
        .ok_or_else(|| Error::config("no finite-dimension component"))?;
    let bound = d_plus + max_dim + int(1);
    enumerate_v_plus(table, d, &bound)?
        .iter()
        .filter_map(|k| k.dimension(table).finite().cloned())
        .filter(|dim| dim > d_plus)
        .min()
        .ok_or_else(|| Error::config("could not determine d_plus'"))
}

/// Inputs of the contraction experiment.
#[derive(Debug, Clone)]
pub struct ContractionConfig {
    pub table: SpeciesTable,
    pub d: usize,
    pub d_plus: Rational,
    pub j: u32,
    pub ls: Vec<u64>,
    pub strategy: PHatStrategy,
    /// The integer `A` of the reference rate.
    pub a: u32,
}

/// One scale of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionRow {
    pub l: u64,
    pub j: u32,
    #[serde(skip)]
    pub ratio: Rational,
    pub ratio_num: String,
    pub ratio_den: String,
    pub log_ratio: f64,
    pub worst: String,
    pub gamma: f64,
    pub members: Vec<(String, f64)>,
}

/// Per-scale ratios, fitted log-slope and the reference exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub rows: Vec<ContractionRow>,
    pub slope: Option<f64>,
    pub d_plus_prime: f64,
    pub reference_slope: f64,
    pub vacuous: bool,
    pub local_ratio_zero: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Geometry for one `L`: torus, block `X = [0, L^j - 1]^d`, a patch around it
/// and `p_Phi` large enough that no Newton order is truncated.
pub struct ScaleGeometry {
    pub torus: TorusGeometry,
    pub patch: CoordinatePatch,
    pub block: Vec<Point>,
    pub p_phi: u32,
}

pub fn scale_geometry(d: usize, l: u64, j: u32, reach: u32) -> Result<ScaleGeometry> {
    let side = l.pow(j) as i64;
    let centre = side / 2;
    let radius = side - centre + i64::from(reach) + 1;
    let p_phi = (side + 2 * i64::from(reach) + 2) as u32;
    let mut n = j + 1;
    loop {
        let period = (l as i64).checked_pow(n).ok_or_else(|| Error::config("torus period overflows"))?;
        if 2 * (radius + i64::from(p_phi)) < period {
            break;
        }
        n += 1;
    }
    let torus = TorusGeometry::new(d, l, n)?;
    let patch = CoordinatePatch::new(&torus, &Point(vec![centre; d].into()), &vec![radius; d], p_phi)?;
    let block = Rect::cube(d, 0, side - 1).points();
    Ok(ScaleGeometry { torus, patch, block, p_phi })
}

/// Named members of the test family, built on the block `X`.
pub fn contraction_family(table: &SpeciesTable, block: &[Point], d: usize) -> Result<Vec<(String, Functional)>> {
    let phi = (0..table.len())
        .find(|&i| !table.is_fermion(i))
        .ok_or_else(|| Error::config("the contraction family needs a boson component"))?;
    let inside = |p: &Point| block.contains(p);
    let lo = block.iter().min().cloned().ok_or_else(|| Error::config("empty block"))?;
    let hi = block.iter().max().cloned().expect("nonempty");
    let centre = block[block.len() / 2].clone();
    let e1 = {
        let mut c = vec![0i64; d];
        c[0] = 1;
        Point::new(&c)
    };
    let mut family = Vec::new();

    let mut nn = Functional::zero();
    for x in block {
        let y = x.add(&e1);
        if inside(&y) {
            nn.add_term(table, vec![(phi, x.clone()), (phi, y)], int(1));
        }
    }
    family.push(("nearest-neighbour pair sum".to_string(), nn));

    family.push((
        "corner pair".to_string(),
        Functional::term(table, vec![(phi, lo.clone()), (phi, hi.clone())], int(1)),
    ));

    let mut grad = Functional::zero();
    for x in block {
        let y = x.add(&e1);
        if inside(&y) {
            grad.add_term(table, vec![(phi, y.clone()), (phi, y.clone())], int(1));
            grad.add_term(table, vec![(phi, x.clone()), (phi, y.clone())], int(-2));
            grad.add_term(table, vec![(phi, x.clone()), (phi, x.clone())], int(1));
        }
    }
    family.push(("gradient square sum".to_string(), grad));

    family.push(("cubic at centre".to_string(), Functional::term(table, vec![(phi, centre.clone()); 3], int(1))));

    let next = if inside(&centre.add(&e1)) { centre.add(&e1) } else { centre.sub(&e1) };
    family.push((
        "quartic pair".to_string(),
        Functional::term(table, vec![(phi, centre.clone()), (phi, centre), (phi, next.clone()), (phi, next)], int(1)),
    ));
    Ok(family)
}

/// For each `L`, the largest `t0'((1 - loc_X) F) / t0(F)` over the family, with
/// unprimed weights at scale `j` and primed weights at scale `j + 1`.
pub fn contraction_experiment(cfg: &ContractionConfig) -> Result<ContractionReport> {
    let dpp = d_plus_prime(&cfg.table, cfg.d, &cfg.d_plus)?;
    let phi_min = cfg.table.min_dimension().ok_or_else(|| Error::config("no finite dimension"))?;
    let mut rows = Vec::new();
    let mut vacuous = true;
    let mut local_zero = true;
    for &l in &cfg.ls {
        if l < 2 {
            return Err(Error::config("L must be at least 2"));
        }
        let probe = crate::monomials::PHatTable::build(&cfg.table, cfg.d, &cfg.d_plus, cfg.strategy)?;
        let geo = scale_geometry(cfg.d, l, cfg.j, probe.reach())?;
        let ctx = LocContext::from_table(std::sync::Arc::new(probe), geo.torus.clone(), geo.patch.clone(), VerifyMode::Off)?;
        let params = NormParams::at_scale(&cfg.table, l, cfg.j, geo.p_phi)?;
        let primed = NormParams::at_scale(&cfg.table, l, cfg.j + 1, geo.p_phi)?;
        let table = ctx.table().clone();

        let mut best: Option<(Rational, String)> = None;
        let mut members = Vec::new();
        for (name, f) in contraction_family(&table, &geo.block, cfg.d)? {
            let localised = ctx.loc_functional(&f, &geo.block)?;
            let rest = f.sub(&localised);
            if !rest.is_zero() {
                vacuous = false;
            }
            let den = t0_local_upper(&f, &params, &geo.patch, &table)?;
            if den.is_zero() {
                continue;
            }
            let ratio = t0_local_upper(&rest, &primed, &geo.patch, &table)? / den;
            members.push((name.clone(), to_f64(&ratio)));
            if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                best = Some((ratio, name));
            }
        }

        let mut in_v = FieldPolynomial::zero();
        for (k, i) in ctx.basis().iter().zip(1i64..) {
            in_v.add_scaled(ctx.phat().image(ctx.phat().position(k).expect("basis key")), &int(i));
        }
        let v_of_x = ctx.evaluate(&in_v, &geo.block);
        let rest = v_of_x.sub(&ctx.loc_functional(&v_of_x, &geo.block)?);
        if !t0_local_upper(&rest, &primed, &geo.patch, &table)?.is_zero() {
            local_zero = false;
        }

        let (ratio, worst) = best.ok_or_else(|| Error::config("contraction family is empty"))?;
        let lf = l as f64;
        let gamma = lf.powf(-to_f64(&dpp)) + lf.powf(-f64::from(cfg.a + 1) * to_f64(&phi_min));
        rows.push(ContractionRow {
            l,
            j: cfg.j,
            ratio_num: ratio.numer().to_string(),
            ratio_den: ratio.denom().to_string(),
            log_ratio: if ratio.is_positive() { to_f64(&ratio).ln() } else { f64::NEG_INFINITY },
            ratio,
            worst,
            gamma,
            members,
        });
    }
    rows.sort_by_key(|r| r.l);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.ratio.is_positive())
        .map(|r| ((r.l as f64).ln(), r.log_ratio))
        .collect();
    Ok(ContractionReport {
        slope: fit_slope(&pts),
        d_plus_prime: to_f64(&dpp),
        reference_slope: -to_f64(&dpp),
        rows,
        vacuous,
        local_ratio_zero: local_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::testfn::FnTestFunction;

    #[test]
    fn norm_of_constant_and_zero() {
        let params = NormParams::new(vec![rat(1, 3)], int(2), 2).unwrap();
        let window = Rect::cube(1, 0, 3);
        let one = FnTestFunction { signatures: vec![vec![0]], f: |_: &[crate::testfn::Arg]| int(1) };
        assert_eq!(phi_norm_window(&one, &params, &window, &[vec![0]]).unwrap(), int(3));
        let zero = FnTestFunction { signatures: vec![vec![0]], f: |_: &[crate::testfn::Arg]| int(0) };
        assert_eq!(phi_norm_window(&zero, &params, &window, &[vec![0]]).unwrap(), int(0));
    }

    #[test]
    fn termwise_bound_single_field() {
        let table = SpeciesTable::single_boson(int(1));
        let params = NormParams::new(vec![rat(1, 5)], int(2), 2).unwrap();
        let f = Functional::term(&table, vec![(0, Point::new(&[0]))], int(-3));
        assert_eq!(t0_upper(&f, &params), rat(3, 5));
    }

    #[test]
    fn newton_expansion_round_trip() {
        let table = SpeciesTable::single_boson(int(1));
        let torus = TorusGeometry::new(1, 4, 2).unwrap();
        let patch = CoordinatePatch::new(&torus, &Point::new(&[0]), &[4], 2).unwrap();
        let f = Functional::term(&table, vec![(0, Point::new(&[1])), (0, Point::new(&[3]))], int(1));
        let p = newton_expand(&f, &patch, &Point::new(&[0]), &table).unwrap();
        let back = crate::functionals::evaluate_polynomial_at(&p, &Point::new(&[0]), &torus, &table);
        assert_eq!(back, f);
    }

    #[test]
    fn d_plus_prime_examples() {
        let table = SpeciesTable::single_boson(int(1));
        assert_eq!(d_plus_prime(&table, 2, &int(2)).unwrap(), int(3));
        assert_eq!(d_plus_prime(&table, 4, &int(4)).unwrap(), int(5));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0f64, 3.0, 5.0].iter().map(|l| (l.ln(), -3.0 * l.ln() + 1.0)).collect();
        assert!((fit_slope(&pts).unwrap() + 3.0).abs() < 1e-12);
    }
}
