use std::cmp::Ordering;
use std::fmt;

use serde_json::{Map, Value};

use super::species::{ScalingDimension, SpeciesTable};
use crate::error::{Error, Result};
use crate::lattice::{MultiIndex, UnitVector};

/// Sort `items`, returning the sign of the permutation restricted to the
/// anticommuting items. Returns `None` when two anticommuting items coincide
/// (the product vanishes).
pub fn graded_sort<T: Ord + Clone>(items: &[T], odd: impl Fn(&T) -> bool) -> Option<(i8, Vec<T>)> {
    let mut sorted = items.to_vec();
    sorted.sort();
    let odd_seq: Vec<&T> = items.iter().filter(|t| odd(t)).collect();
    let mut sign = 1i8;
    for i in 0..odd_seq.len() {
        for j in i + 1..odd_seq.len() {
            match odd_seq[i].cmp(odd_seq[j]) {
                Ordering::Greater => sign = -sign,
                Ordering::Equal => return None,
                Ordering::Less => {}
            }
        }
    }
    Some((sign, sorted))
}

/// One factor `nabla^alpha phi_i` of a monomial.
pub type Factor = (usize, MultiIndex);

/// A sequence of factors `(i_k, alpha_k)`. Canonical keys are sorted by
/// `(component, alpha)` and index elements of the polynomial algebra; the
/// unsorted variant indexes the Taylor basis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonomialKey(pub Vec<Factor>);

impl MonomialKey {
    pub fn empty() -> Self {
        MonomialKey(Vec::new())
    }

    /// Bring an arbitrary factor sequence into canonical order. Returns the
    /// fermionic reordering sign, or `None` if the monomial is zero.
    pub fn canonical(table: &SpeciesTable, factors: Vec<Factor>) -> Option<(i8, MonomialKey)> {
        let (sign, sorted) = graded_sort(&factors, |f| table.is_fermion(f.0))?;
        Some((sign, MonomialKey(sorted)))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_forward(&self) -> bool {
        self.0.iter().all(|(_, a)| a.is_forward())
    }

    pub fn is_canonical(&self, table: &SpeciesTable) -> bool {
        self.0.windows(2).all(|w| {
            w[0] < w[1] || (w[0] == w[1] && !table.is_fermion(w[0].0))
        })
    }

    /// Component of every factor, in order.
    pub fn signature(&self) -> Vec<usize> {
        self.0.iter().map(|f| f.0).collect()
    }

    /// Total derivative count.
    pub fn order(&self) -> u32 {
        self.0.iter().map(|(_, a)| a.order()).sum()
    }

    /// `[M] = sum_k ([phi_{i_k}] + |alpha_k|_1)`.
    pub fn dimension(&self, table: &SpeciesTable) -> ScalingDimension {
        let mut acc = ScalingDimension::zero();
        for (i, a) in &self.0 {
            acc = &acc + table.dimension(*i);
            if let ScalingDimension::Finite(q) = &mut acc {
                *q += crate::scalar::int(i64::from(a.order()));
            }
        }
        acc
    }

    /// Total order used for basis listings: dimension, then degree, then lexicographic.
    pub fn basis_cmp(&self, other: &MonomialKey, table: &SpeciesTable) -> Ordering {
        self.dimension(table)
            .cmp(&other.dimension(table))
            .then(self.degree().cmp(&other.degree()))
            .then(self.cmp(other))
    }

    /// `|Sigma_0(m)| = prod n_{(i, alpha)}!` over repeated factors.
    pub fn repeat_factorial(&self) -> u64 {
        let mut out = 1u64;
        let mut run = 1u64;
        for w in self.0.windows(2) {
            if w[0] == w[1] {
                run += 1;
                out *= run;
            } else {
                run = 1;
            }
        }
        out
    }

    /// JSON: a list of `[component, {direction: count}]` pairs.
    pub fn to_json(&self, table: &SpeciesTable) -> Value {
        Value::Array(
            self.0
                .iter()
                .map(|(i, a)| {
                    let mut dirs = Map::new();
                    for (e, n) in a.entries() {
                        dirs.insert(e.to_string(), Value::from(n));
                    }
                    Value::Array(vec![Value::from(table.name(*i)), Value::Object(dirs)])
                })
                .collect(),
        )
    }

    /// Parse the JSON form; the result is canonicalised with its sign.
    pub fn from_json(v: &Value, table: &SpeciesTable, d: usize, path: &str) -> Result<(i8, MonomialKey)> {
        let items = v
            .as_array()
            .ok_or_else(|| Error::config(format!("{path}: monomial must be a list")))?;
        let mut factors = Vec::new();
        for (k, item) in items.iter().enumerate() {
            let pair = item
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::config(format!("{path}[{k}]: expected [component, {{direction: count}}]")))?;
            let name = pair[0]
                .as_str()
                .ok_or_else(|| Error::config(format!("{path}[{k}]: component must be a string")))?;
            let comp = table.index(name)?;
            let dirs = pair[1]
                .as_object()
                .ok_or_else(|| Error::config(format!("{path}[{k}]: directions must be an object")))?;
            let mut alpha = MultiIndex::zero(d);
            for (dir, count) in dirs {
                let e = UnitVector::parse(dir, d)?;
                let n = count
                    .as_u64()
                    .ok_or_else(|| Error::config(format!("{path}[{k}]: counts must be non-negative integers")))?;
                alpha.set(e, alpha.get(e) + n as u32);
            }
            factors.push((comp, alpha));
        }
        MonomialKey::canonical(table, factors)
            .ok_or_else(|| Error::config(format!("{path}: monomial vanishes (repeated fermion factor)")))
    }

    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> KeyDisplay<'a> {
        KeyDisplay { key: self, table }
    }
}

pub struct KeyDisplay<'a> {
    key: &'a MonomialKey,
    table: &'a SpeciesTable,
}

impl fmt::Display for KeyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            return write!(f, "1");
        }
        for (k, (i, a)) in self.key.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}{}", self.table.name(*i))?;
        }
        Ok(())
    }
}
