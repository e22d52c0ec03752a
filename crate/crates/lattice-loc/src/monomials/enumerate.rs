use num_traits::Signed;

use super::key::{Factor, MonomialKey};
use super::species::SpeciesTable;
use crate::error::{Error, Result};
use crate::lattice::{permutations, MultiIndex};
use crate::scalar::{floor_i64, int, Rational};

/// All forward multi-indices in `d` dimensions with `|alpha|_1 <= max_order`.
pub fn forward_indices(d: usize, max_order: u32) -> Vec<MultiIndex> {
    fn rec(d: usize, axis: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if axis == d {
            out.push(MultiIndex::forward(cur));
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(d, axis + 1, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, 0, max_order, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Forward factor types `(i, alpha)` with `[phi_i] + |alpha| <= d_plus`, in canonical order.
fn factor_types(table: &SpeciesTable, d: usize, d_plus: &Rational) -> Vec<(Factor, Rational)> {
    let mut out = Vec::new();
    for i in 0..table.len() {
        let Some(dim) = table.dimension(i).finite() else {
            continue;
        };
        if dim > d_plus {
            continue;
        }
        let max_order = floor_i64(&(d_plus - dim)) as u32;
        for a in forward_indices(d, max_order) {
            let w = dim + int(i64::from(a.order()));
            out.push(((i, a), w));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

fn check_d_plus(d_plus: &Rational) -> Result<()> {
    if d_plus.is_negative() {
        return Err(Error::config("d_plus must be non-negative"));
    }
    Ok(())
}

/// The index set of the local polynomial basis: canonical forward monomials
/// with `[M] <= d_plus`, ordered by dimension, degree, then lexicographically.
pub fn enumerate_v_plus(table: &SpeciesTable, d: usize, d_plus: &Rational) -> Result<Vec<MonomialKey>> {
    check_d_plus(d_plus)?;
    let types = factor_types(table, d, d_plus);
    let mut out = Vec::new();
    let mut cur: Vec<Factor> = Vec::new();
    fn rec(
        table: &SpeciesTable,
        types: &[(Factor, Rational)],
        start: usize,
        budget: &Rational,
        cur: &mut Vec<Factor>,
        out: &mut Vec<MonomialKey>,
    ) {
        out.push(MonomialKey(cur.clone()));
        for t in start..types.len() {
            let (f, w) = &types[t];
            if w > budget {
                continue;
            }
            let next = if table.is_fermion(f.0) { t + 1 } else { t };
            cur.push(f.clone());
            rec(table, types, next, &(budget - w), cur, out);
            cur.pop();
        }
    }
    rec(table, &types, 0, d_plus, &mut cur, &mut out);
    out.sort_by(|a, b| a.basis_cmp(b, table));
    Ok(out)
}

/// Distinct orderings of a multiset, lexicographic.
fn distinct_orderings(items: &[MultiIndex]) -> Vec<Vec<MultiIndex>> {
    let mut out: Vec<Vec<MultiIndex>> = permutations(items.len())
        .into_iter()
        .map(|p| p.iter().map(|&i| items[i].clone()).collect())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Taylor index set: as `v_plus` but with the multi-indices of each component
/// block in any order.
pub fn enumerate_v_bar_plus(table: &SpeciesTable, d: usize, d_plus: &Rational) -> Result<Vec<MonomialKey>> {
    let mut out = Vec::new();
    for key in enumerate_v_plus(table, d, d_plus)? {
        let mut blocks: Vec<(usize, Vec<MultiIndex>)> = Vec::new();
        for (i, a) in key.factors() {
            match blocks.last_mut() {
                Some((c, v)) if c == i => v.push(a.clone()),
                _ => blocks.push((*i, vec![a.clone()])),
            }
        }
        let mut partial: Vec<Vec<Factor>> = vec![Vec::new()];
        for (c, alphas) in &blocks {
            let mut next = Vec::new();
            for prefix in &partial {
                for order in distinct_orderings(alphas) {
                    let mut f = prefix.clone();
                    f.extend(order.into_iter().map(|a| (*c, a)));
                    next.push(f);
                }
            }
            partial = next;
        }
        out.extend(partial.into_iter().map(MonomialKey));
    }
    out.sort_by(|a, b| a.basis_cmp(b, table));
    Ok(out)
}

/// Relevance class of a basis monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relevance {
    Relevant,
    Marginal,
}

pub fn classify(key: &MonomialKey, table: &SpeciesTable, d_plus: &Rational) -> Relevance {
    match key.dimension(table).finite() {
        Some(dim) if dim < d_plus => Relevance::Relevant,
        _ => Relevance::Marginal,
    }
}
