use std::collections::HashMap;

use super::enumerate::enumerate_v_plus;
use super::key::MonomialKey;
use super::polynomial::FieldPolynomial;
use super::species::SpeciesTable;
use super::symmetry::{laplacian_p, sigma_act, sigma_act_key, symmetrise_p, vanishes_mod_higher};
use crate::error::{Error, Result};
use crate::lattice::SignedPermutation;
use crate::scalar::{int, Rational};

/// How the covariant representative of each basis monomial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PHatStrategy {
    /// Reflection average with the derivative-reversal sign.
    Symmetrise,
    /// As `Symmetrise`, except repeated forward derivatives `nabla^e nabla^e`
    /// become `-nabla^{-e} nabla^e`.
    Laplacian,
}

impl PHatStrategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "symmetrise" | "symmetrize" => Ok(PHatStrategy::Symmetrise),
            "laplacian" => Ok(PHatStrategy::Laplacian),
            _ => Err(Error::config(format!("unknown P-hat strategy {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PHatStrategy::Symmetrise => "symmetrise",
            PHatStrategy::Laplacian => "laplacian",
        }
    }
}

/// The basis of local polynomials: for each `m` in `v_plus` (in basis order)
/// a polynomial `P_hat(M_m)` with the covariance, congruence and
/// equivariance properties checked at construction.
#[derive(Debug, Clone)]
pub struct PHatTable {
    table: SpeciesTable,
    d: usize,
    d_plus: Rational,
    keys: Vec<MonomialKey>,
    images: Vec<FieldPolynomial>,
    index: HashMap<MonomialKey, usize>,
}

impl PHatTable {
    pub fn build(table: &SpeciesTable, d: usize, d_plus: &Rational, strategy: PHatStrategy) -> Result<Self> {
        PHatTable::build_with_overrides(table, d, d_plus, strategy, &[])
    }

    /// Build with some images replaced; the replacements are validated like any other.
    pub fn build_with_overrides(
        table: &SpeciesTable,
        d: usize,
        d_plus: &Rational,
        strategy: PHatStrategy,
        overrides: &[(MonomialKey, FieldPolynomial)],
    ) -> Result<Self> {
        let keys = enumerate_v_plus(table, d, d_plus)?;
        let mut images = Vec::with_capacity(keys.len());
        for k in &keys {
            let img = match overrides.iter().find(|(m, _)| m == k) {
                Some((_, p)) => p.clone(),
                None => match strategy {
                    PHatStrategy::Symmetrise => symmetrise_p(k, d, table)?,
                    PHatStrategy::Laplacian => laplacian_p(k, d, table)?,
                },
            };
            images.push(img);
        }
        for (m, _) in overrides {
            if !keys.contains(m) {
                return Err(Error::config(format!(
                    "override for {} which is not a basis monomial",
                    m.display(table)
                )));
            }
        }
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let out = PHatTable {
            table: table.clone(),
            d,
            d_plus: d_plus.clone(),
            keys,
            images,
            index,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn species(&self) -> &SpeciesTable {
        &self.table
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_plus(&self) -> &Rational {
        &self.d_plus
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[MonomialKey] {
        &self.keys
    }

    pub fn image(&self, i: usize) -> &FieldPolynomial {
        &self.images[i]
    }

    pub fn position(&self, key: &MonomialKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Largest `|alpha|_inf` over all factors of all images: the stencil reach.
    pub fn reach(&self) -> u32 {
        self.images
            .iter()
            .flat_map(|p| p.terms())
            .flat_map(|(k, _)| k.factors().iter().map(|(_, a)| a.linf()))
            .max()
            .unwrap_or(0)
    }

    /// Expand `sum_m beta_m P_hat(M_m)` into monomials.
    pub fn combine(&self, beta: &[Rational]) -> FieldPolynomial {
        let mut out = FieldPolynomial::zero();
        for (b, img) in beta.iter().zip(&self.images) {
            out.add_scaled(img, b);
        }
        out
    }

    fn fail(&self, condition: &str, key: &MonomialKey, detail: String) -> Error {
        Error::Construction {
            condition: condition.into(),
            monomial: key.display(&self.table).to_string(),
            detail,
        }
    }

    fn validate(&self) -> Result<()> {
        let table = &self.table;
        for (k, img) in self.keys.iter().zip(&self.images) {
            let dim = k.dimension(table);
            for (t, _) in img.terms() {
                if t.degree() != k.degree() || t.signature() != k.signature() {
                    return Err(self.fail("ii", k, format!("term {} changes the field content", t.display(table))));
                }
            }
            // (i) covariance under each single-axis reflection generates covariance
            // under the whole reflection group with a multiplicative sign.
            for axis in 0..self.d {
                let theta = SignedPermutation::flip(self.d, axis);
                let moved = sigma_act(&theta, img, table);
                if moved != *img && moved != img.scale(&int(-1)) {
                    return Err(self.fail(
                        "i",
                        k,
                        format!("reflection of axis {} maps the image outside its span", axis + 1),
                    ));
                }
            }
            // (ii) M - P_hat(M) vanishes modulo higher dimension and the redundancy ideal.
            let diff = FieldPolynomial::monomial(k.clone()).sub(img);
            let t = dim.finite().expect("basis monomials have finite dimension");
            match vanishes_mod_higher(&diff, t, table) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(self.fail("ii", k, "M - P_hat(M) has a nonzero leading symbol".into()));
                }
                Err(e) => return Err(self.fail("ii", k, e.to_string())),
            }
        }
        // (iii) equivariance under axis permutations.
        for (k, img) in self.keys.iter().zip(&self.images) {
            for theta in SignedPermutation::axis_permutations(self.d) {
                let (s, moved_key) = sigma_act_key(&theta, k, table).expect("permutation keeps a nonzero monomial");
                let j = self.index[&moved_key];
                let lhs = self.images[j].scale(&int(i64::from(s)));
                let rhs = sigma_act(&theta, img, table);
                if lhs != rhs {
                    return Err(self.fail(
                        "iii",
                        k,
                        format!("not equivariant under axis permutation {:?}", theta.perm),
                    ));
                }
            }
        }
        Ok(())
    }
}
