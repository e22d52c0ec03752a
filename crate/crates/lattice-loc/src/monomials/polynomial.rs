use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use super::key::{Factor, MonomialKey};
use super::species::SpeciesTable;
use crate::scalar::{display, to_json, Rational};

/// A finite rational combination of canonical monomials; zero coefficients
/// are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldPolynomial {
    terms: BTreeMap<MonomialKey, Rational>,
}

impl FieldPolynomial {
    pub fn zero() -> Self {
        FieldPolynomial::default()
    }

    pub fn monomial(key: MonomialKey) -> Self {
        let mut p = FieldPolynomial::zero();
        p.terms.insert(key, Rational::one());
        p
    }

    /// The monomial of an arbitrary factor sequence, canonicalised.
    pub fn from_factors(table: &SpeciesTable, factors: Vec<Factor>, coeff: Rational) -> Self {
        let mut p = FieldPolynomial::zero();
        p.add_factors(table, factors, coeff);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &MonomialKey) -> Rational {
        self.terms.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    /// Add `c * key` for a key already in canonical order.
    pub fn add_term(&mut self, key: MonomialKey, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Add `c * prod factors` after canonical reordering.
    pub fn add_factors(&mut self, table: &SpeciesTable, factors: Vec<Factor>, c: Rational) {
        if let Some((sign, key)) = MonomialKey::canonical(table, factors) {
            self.add_term(key, if sign < 0 { -c } else { c });
        }
    }

    pub fn add(&self, other: &FieldPolynomial) -> FieldPolynomial {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    pub fn sub(&self, other: &FieldPolynomial) -> FieldPolynomial {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> FieldPolynomial {
        if c.is_zero() {
            return FieldPolynomial::zero();
        }
        FieldPolynomial {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &FieldPolynomial, c: &Rational) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v * c);
        }
    }

    /// Product in the graded commutative algebra.
    pub fn mul(&self, other: &FieldPolynomial, table: &SpeciesTable) -> FieldPolynomial {
        let mut out = FieldPolynomial::zero();
        for (k1, v1) in &self.terms {
            for (k2, v2) in &other.terms {
                let mut factors = k1.0.clone();
                factors.extend(k2.0.iter().cloned());
                out.add_factors(table, factors, v1 * v2);
            }
        }
        out
    }

    /// Apply a sign-aware relabelling of every monomial.
    pub fn map_keys(&self, mut f: impl FnMut(&MonomialKey) -> Option<(i8, MonomialKey)>) -> FieldPolynomial {
        let mut out = FieldPolynomial::zero();
        for (k, v) in &self.terms {
            if let Some((s, k2)) = f(k) {
                out.add_term(k2, if s < 0 { -v.clone() } else { v.clone() });
            }
        }
        out
    }

    /// Sum of absolute values of the coefficients.
    pub fn l1(&self) -> Rational {
        self.terms.values().map(|v| v.abs()).sum()
    }

    /// JSON: list of `{coeff: [num, den], monomial: [...]}`.
    pub fn to_json(&self, table: &SpeciesTable) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(k, v)| {
                    serde_json::json!({
                        "coeff": to_json(v),
                        "monomial": k.to_json(table),
                    })
                })
                .collect(),
        )
    }

    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, table }
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a FieldPolynomial,
    table: &'a SpeciesTable,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (n, (k, v)) in self.poly.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}) {}", display(v), k.display(self.table))?;
        }
        Ok(())
    }
}
