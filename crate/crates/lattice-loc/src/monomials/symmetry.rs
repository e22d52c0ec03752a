use num_traits::One;

use super::key::{Factor, MonomialKey};
use super::polynomial::FieldPolynomial;
use super::species::SpeciesTable;
use crate::error::{Error, Result};
use crate::lattice::{MultiIndex, SignedPermutation, UnitVector};
use crate::scalar::{int, Rational};

/// `theta M`, re-canonicalised; `None` if it vanishes.
pub fn sigma_act_key(theta: &SignedPermutation, key: &MonomialKey, table: &SpeciesTable) -> Option<(i8, MonomialKey)> {
    let factors: Vec<Factor> = key
        .factors()
        .iter()
        .map(|(i, a)| (*i, theta.apply_multi_index(a)))
        .collect();
    MonomialKey::canonical(table, factors)
}

/// Linear extension of the action of the signed permutation group.
pub fn sigma_act(theta: &SignedPermutation, p: &FieldPolynomial, table: &SpeciesTable) -> FieldPolynomial {
    p.map_keys(|k| sigma_act_key(theta, k, table))
}

/// `lambda(theta, M) = (-1)^{number of derivatives of M reversed by theta}`
/// for a pure reflection `theta`.
pub fn reflection_sign(theta: &SignedPermutation, key: &MonomialKey) -> i8 {
    debug_assert!(theta.is_reflection());
    let mut reversed = 0u32;
    for (_, a) in key.factors() {
        for axis in 0..theta.dim() {
            if theta.neg[axis] {
                reversed += a.get(UnitVector::plus(axis)) + a.get(UnitVector::minus(axis));
            }
        }
    }
    if reversed.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `2^{-d} sum_theta lambda(theta, N) theta N` over all reflections, for any key.
pub fn reflection_average(key: &MonomialKey, d: usize, table: &SpeciesTable) -> FieldPolynomial {
    let group = SignedPermutation::reflections(d);
    let weight = Rational::new(1.into(), (group.len() as i64).into());
    let mut out = FieldPolynomial::zero();
    for theta in &group {
        let lambda = reflection_sign(theta, key);
        if let Some((s, k)) = sigma_act_key(theta, key, table) {
            let c = if s * lambda < 0 { -weight.clone() } else { weight.clone() };
            out.add_term(k, c);
        }
    }
    out
}

/// `P(M)` for a forward monomial.
pub fn symmetrise_p(key: &MonomialKey, d: usize, table: &SpeciesTable) -> Result<FieldPolynomial> {
    if !key.is_forward() {
        return Err(Error::precondition(format!(
            "symmetrisation needs a forward monomial, got {}",
            key.display(table)
        )));
    }
    Ok(reflection_average(key, d, table))
}

/// Laplacian-style variant: each forward pair `nabla^e nabla^e` inside a
/// factor becomes `-nabla^{-e} nabla^e` before symmetrising the rest.
pub fn laplacian_p(key: &MonomialKey, d: usize, table: &SpeciesTable) -> Result<FieldPolynomial> {
    if !key.is_forward() {
        return Err(Error::precondition(format!(
            "symmetrisation needs a forward monomial, got {}",
            key.display(table)
        )));
    }
    let mut pairs = 0u32;
    let factors: Vec<Factor> = key
        .factors()
        .iter()
        .map(|(i, a)| {
            let mut b = MultiIndex::zero(d);
            for axis in 0..d {
                let c = a.get(UnitVector::plus(axis));
                let k = c / 2;
                pairs += k;
                b.set(UnitVector::plus(axis), c - k);
                b.set(UnitVector::minus(axis), k);
            }
            (*i, b)
        })
        .collect();
    let Some((s, mixed)) = MonomialKey::canonical(table, factors) else {
        return Ok(FieldPolynomial::zero());
    };
    let sign = if (pairs % 2 == 1) != (s < 0) { -1 } else { 1 };
    Ok(reflection_average(&mixed, d, table).scale(&int(sign)))
}

fn mixed_axis(a: &MultiIndex) -> Option<usize> {
    (0..a.dim()).find(|&axis| a.get(UnitVector::plus(axis)) > 0 && a.get(UnitVector::minus(axis)) > 0)
}

/// Rewrite every `nabla^e nabla^{-e}` inside a factor as `-(nabla^e + nabla^{-e})`
/// until no factor mixes directions along an axis. The result is the unique
/// normal form; a polynomial lies in the redundancy ideal iff it reduces to zero.
pub fn r1_normal_form(p: &FieldPolynomial, table: &SpeciesTable) -> FieldPolynomial {
    let mut out = FieldPolynomial::zero();
    let mut work: Vec<(MonomialKey, Rational)> = p.terms().map(|(k, v)| (k.clone(), v.clone())).collect();
    while let Some((key, c)) = work.pop() {
        let hit = key
            .factors()
            .iter()
            .enumerate()
            .find_map(|(pos, (_, a))| mixed_axis(a).map(|axis| (pos, axis)));
        let Some((pos, axis)) = hit else {
            out.add_term(key, c);
            continue;
        };
        let (comp, a) = key.factors()[pos].clone();
        let (plus, minus) = (UnitVector::plus(axis), UnitVector::minus(axis));
        let mut base = a.clone();
        base.set(plus, a.get(plus) - 1);
        base.set(minus, a.get(minus) - 1);
        for e in [plus, minus] {
            let mut factors = key.factors().to_vec();
            factors[pos] = (comp, base.with_added(e, 1));
            if let Some((s, k)) = MonomialKey::canonical(table, factors) {
                work.push((k, if s < 0 { c.clone() } else { -c.clone() }));
            }
        }
    }
    out
}

/// Lowest order symbol: every backward derivative becomes forward with a sign.
/// Two polynomials of dimension `t` agree modulo higher dimension and the
/// redundancy ideal iff their symbols agree.
pub fn leading_symbol(p: &FieldPolynomial, table: &SpeciesTable) -> FieldPolynomial {
    p.map_keys(|k| {
        let mut sign = 1i8;
        let factors: Vec<Factor> = k
            .factors()
            .iter()
            .map(|(i, a)| {
                let d = a.dim();
                let mut f = MultiIndex::zero(d);
                for axis in 0..d {
                    let back = a.get(UnitVector::minus(axis));
                    if back % 2 == 1 {
                        sign = -sign;
                    }
                    f.set(UnitVector::plus(axis), a.get(UnitVector::plus(axis)) + back);
                }
                (*i, f)
            })
            .collect();
        MonomialKey::canonical(table, factors).map(|(s, key)| (s * sign, key))
    })
}

/// Membership of `q` in `P_{>t} + R_1`, for `q` without terms of dimension below `t`.
pub fn vanishes_mod_higher(q: &FieldPolynomial, t: &Rational, table: &SpeciesTable) -> Result<bool> {
    let mut lowest = FieldPolynomial::zero();
    for (k, v) in q.terms() {
        match k.dimension(table).finite() {
            Some(dim) if dim < t => {
                return Err(Error::precondition(format!(
                    "monomial {} has dimension below {}",
                    k.display(table),
                    crate::scalar::display(t)
                )))
            }
            Some(dim) if dim == t => lowest.add_term(k.clone(), v.clone()),
            _ => {}
        }
    }
    Ok(leading_symbol(&lowest, table).is_zero())
}

/// `sum_theta` over a subgroup, used for orbit sums in tests.
pub fn orbit_sum(p: &FieldPolynomial, group: &[SignedPermutation], table: &SpeciesTable) -> FieldPolynomial {
    let mut out = FieldPolynomial::zero();
    for g in group {
        out.add_scaled(&sigma_act(g, p, table), &Rational::one());
    }
    out
}
