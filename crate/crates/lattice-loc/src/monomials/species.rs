use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{display, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Boson,
    Fermion,
}

/// A scaling dimension: a positive rational, or infinite for species that
/// never enter local polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScalingDimension {
    Finite(Rational),
    Infinite,
}

impl ScalingDimension {
    pub fn zero() -> Self {
        ScalingDimension::Finite(Rational::zero())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ScalingDimension::Finite(q) => Some(q),
            ScalingDimension::Infinite => None,
        }
    }

    pub fn le(&self, bound: &Rational) -> bool {
        matches!(self, ScalingDimension::Finite(q) if q <= bound)
    }
}

impl Add for &ScalingDimension {
    type Output = ScalingDimension;
    fn add(self, rhs: &ScalingDimension) -> ScalingDimension {
        match (self, rhs) {
            (ScalingDimension::Finite(a), ScalingDimension::Finite(b)) => ScalingDimension::Finite(a + b),
            _ => ScalingDimension::Infinite,
        }
    }
}

impl PartialOrd for ScalingDimension {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScalingDimension {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ScalingDimension::Finite(a), ScalingDimension::Finite(b)) => a.cmp(b),
            (ScalingDimension::Finite(_), ScalingDimension::Infinite) => Ordering::Less,
            (ScalingDimension::Infinite, ScalingDimension::Finite(_)) => Ordering::Greater,
            (ScalingDimension::Infinite, ScalingDimension::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ScalingDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingDimension::Finite(q) => write!(f, "{}", display(q)),
            ScalingDimension::Infinite => write!(f, "inf"),
        }
    }
}

/// Declaration of one field species.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesSpec {
    pub name: String,
    pub statistics: Statistics,
    pub dimension: ScalingDimension,
    /// Component names; a conjugate pair has exactly two.
    pub components: Vec<String>,
    pub conjugate: bool,
}

impl SpeciesSpec {
    pub fn real_boson(name: &str, dim: Rational) -> Self {
        SpeciesSpec {
            name: name.into(),
            statistics: Statistics::Boson,
            dimension: ScalingDimension::Finite(dim),
            components: vec![name.into()],
            conjugate: false,
        }
    }

    pub fn complex(name: &str, conj: &str, statistics: Statistics, dim: Rational) -> Self {
        SpeciesSpec {
            name: name.into(),
            statistics,
            dimension: ScalingDimension::Finite(dim),
            components: vec![name.into(), conj.into()],
            conjugate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub species: usize,
    pub statistics: Statistics,
    pub dimension: ScalingDimension,
    pub conjugate: Option<usize>,
}

/// Field species flattened into components. Component order is the
/// declaration order and fixes the ordering of monomial factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesTable {
    species: Vec<SpeciesSpec>,
    components: Vec<Component>,
}

impl SpeciesTable {
    pub fn new(species: Vec<SpeciesSpec>) -> Result<Self> {
        if species.is_empty() {
            return Err(Error::config("species table is empty"));
        }
        let mut components: Vec<Component> = Vec::new();
        for (s, spec) in species.iter().enumerate() {
            if let ScalingDimension::Finite(q) = &spec.dimension {
                if !q.is_positive() {
                    return Err(Error::config(format!(
                        "species {:?} has non-positive dimension {}",
                        spec.name,
                        display(q)
                    )));
                }
            }
            if spec.components.is_empty() {
                return Err(Error::config(format!("species {:?} has no components", spec.name)));
            }
            if spec.conjugate && spec.components.len() != 2 {
                return Err(Error::config(format!(
                    "conjugate species {:?} needs exactly two components",
                    spec.name
                )));
            }
            let base = components.len();
            for (k, name) in spec.components.iter().enumerate() {
                if components.iter().any(|c| &c.name == name) {
                    return Err(Error::config(format!("duplicate component name {name:?}")));
                }
                components.push(Component {
                    name: name.clone(),
                    species: s,
                    statistics: spec.statistics,
                    dimension: spec.dimension.clone(),
                    conjugate: spec.conjugate.then_some(base + 1 - k),
                });
            }
        }
        Ok(SpeciesTable { species, components })
    }

    /// One real boson of dimension `dim`.
    pub fn single_boson(dim: Rational) -> Self {
        SpeciesTable::new(vec![SpeciesSpec::real_boson("phi", dim)]).expect("valid table")
    }

    /// Complex boson `phi, phibar` and complex fermion `psi, psibar` of equal dimension.
    pub fn supersymmetric(dim: Rational) -> Self {
        SpeciesTable::new(vec![
            SpeciesSpec::complex("phi", "phibar", Statistics::Boson, dim.clone()),
            SpeciesSpec::complex("psi", "psibar", Statistics::Fermion, dim),
        ])
        .expect("valid table")
    }

    pub fn species(&self) -> &[SpeciesSpec] {
        &self.species
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, i: usize) -> &Component {
        &self.components[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.components[i].name
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.components
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::config(format!("unknown field component {name:?}")))
    }

    pub fn is_fermion(&self, i: usize) -> bool {
        self.components[i].statistics == Statistics::Fermion
    }

    pub fn dimension(&self, i: usize) -> &ScalingDimension {
        &self.components[i].dimension
    }

    pub fn conjugate(&self, i: usize) -> Option<usize> {
        self.components[i].conjugate
    }

    /// Smallest finite component dimension.
    pub fn min_dimension(&self) -> Option<Rational> {
        self.components.iter().filter_map(|c| c.dimension.finite().cloned()).min()
    }
}
