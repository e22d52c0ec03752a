//! Polynomial field functionals: finite sums of products of point
//! evaluations, their zero-field pairing with test functions, lattice
//! automorphisms, the supersymmetry generator and observable sectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{Automorphism, CoordinatePatch, Point, TorusGeometry};
use crate::monomials::{graded_sort, FieldPolynomial, SpeciesTable, Statistics};
use crate::scalar::{self, from_i128, int, Rational};
use crate::testfn::{symmetrised_eval, Arg, TestFunction};

/// A point evaluation `phi_{i,x}`.
pub type Slot = (usize, Point);

/// Canonical order: by component, then point; fermionic reordering signs go
/// into the coefficient and a repeated fermionic slot kills the term.
fn canonical_slots(table: &SpeciesTable, slots: Vec<Slot>) -> Option<(i8, Vec<Slot>)> {
    graded_sort(&slots, |s: &Slot| table.is_fermion(s.0))
}

/// A finite sum of coefficient times product of point evaluations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Functional {
    terms: BTreeMap<Vec<Slot>, Rational>,
}

impl Functional {
    pub fn zero() -> Self {
        Functional::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut f = Functional::zero();
        f.add_canonical(Vec::new(), c);
        f
    }

    pub fn term(table: &SpeciesTable, slots: Vec<Slot>, coeff: Rational) -> Self {
        let mut f = Functional::zero();
        f.add_term(table, slots, coeff);
        f
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

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Slot>, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, slots: &[Slot]) -> Rational {
        self.terms.get(slots).cloned().unwrap_or_else(Rational::zero)
    }

    /// Add a term whose slots are already canonical.
    pub fn add_canonical(&mut self, slots: Vec<Slot>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(slots) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_term(&mut self, table: &SpeciesTable, slots: Vec<Slot>, c: Rational) {
        if let Some((s, canon)) = canonical_slots(table, slots) {
            self.add_canonical(canon, if s < 0 { -c } else { c });
        }
    }

    pub fn add(&self, other: &Functional) -> Functional {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::one());
        out
    }

    pub fn sub(&self, other: &Functional) -> Functional {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        out
    }

    pub fn add_scaled(&mut self, other: &Functional, c: &Rational) {
        for (k, v) in &other.terms {
            self.add_canonical(k.clone(), v * c);
        }
    }

    pub fn scale(&self, c: &Rational) -> Functional {
        let mut out = Functional::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn mul(&self, other: &Functional, table: &SpeciesTable) -> Functional {
        let mut out = Functional::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut slots = a.clone();
                slots.extend(b.iter().cloned());
                out.add_term(table, slots, ca * cb);
            }
        }
        out
    }

    /// All points carrying a field in some term.
    pub fn support(&self) -> BTreeSet<Point> {
        self.terms.keys().flat_map(|k| k.iter().map(|s| s.1.clone())).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Rewrite every slot; `f` returns the new slot or `None` to drop the term.
    pub fn map_slots(&self, table: &SpeciesTable, f: impl Fn(&Slot) -> Slot) -> Functional {
        let mut out = Functional::zero();
        for (k, c) in &self.terms {
            out.add_term(table, k.iter().map(&f).collect(), c.clone());
        }
        out
    }

    /// `<F, g>_0 = sum coeff * (S g)(chart of the slot sequence)`.
    pub fn pair_zero(&self, g: &dyn TestFunction, patch: &CoordinatePatch, table: &SpeciesTable) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (k, c) in &self.terms {
            let mut args: Vec<Arg> = Vec::with_capacity(k.len());
            for (i, x) in k {
                if !patch.contains_point(x) {
                    return Err(Error::domain(format!("functional support point {x} lies outside the patch")));
                }
                args.push((*i, patch.chart(x)));
            }
            let v = symmetrised_eval(g, &args, table)?;
            if !v.is_zero() {
                acc += c * v;
            }
        }
        Ok(acc)
    }

    /// The action of a lattice automorphism: every point moves to `E x`.
    pub fn automorphism_act(&self, e: &Automorphism, torus: &TorusGeometry, table: &SpeciesTable) -> Functional {
        self.map_slots(table, |(i, x)| (*i, e.apply(torus, x)))
    }

    /// Simultaneous relabelling of components, e.g. swapping a field with its conjugate.
    pub fn relabel_components(&self, map: &[usize], table: &SpeciesTable) -> Functional {
        self.map_slots(table, |(i, x)| (map[*i], x.clone()))
    }

    /// Canonical text form, one term per line.
    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> FunctionalDisplay<'a> {
        FunctionalDisplay { f: self, table }
    }

    pub fn to_json(&self, table: &SpeciesTable) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(k, c)| {
                    let factors: Vec<Value> = k
                        .iter()
                        .map(|(i, x)| {
                            let mut v: Vec<Value> = x.coords().iter().map(|&c| json!(c)).collect();
                            v.push(json!(table.name(*i)));
                            Value::Array(v)
                        })
                        .collect();
                    json!({"coeff": scalar::to_json(c), "factors": factors})
                })
                .collect(),
        )
    }
}

pub struct FunctionalDisplay<'a> {
    f: &'a Functional,
    table: &'a SpeciesTable,
}

impl fmt::Display for FunctionalDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.f.is_zero() {
            return write!(out, "0");
        }
        for (n, (k, c)) in self.f.terms.iter().enumerate() {
            if n > 0 {
                write!(out, " + ")?;
            }
            write!(out, "{}", scalar::display(c))?;
            for (i, x) in k {
                write!(out, " {}{}", self.table.name(*i), x)?;
            }
        }
        Ok(())
    }
}

/// `P_x`: each `nabla^alpha phi_i(x)` expanded into point evaluations on the torus.
pub fn evaluate_polynomial_at(p: &FieldPolynomial, x: &Point, torus: &TorusGeometry, table: &SpeciesTable) -> Functional {
    let mut out = Functional::zero();
    for (key, c) in p.terms() {
        let stencils: Vec<(usize, Vec<(Point, i128)>)> = key
            .factors()
            .iter()
            .map(|(i, a)| (*i, a.stencil().into_iter().collect()))
            .collect();
        let mut idx = vec![0usize; stencils.len()];
        loop {
            let mut w: i128 = 1;
            let mut slots = Vec::with_capacity(stencils.len());
            for (k, (i, st)) in stencils.iter().enumerate() {
                let (off, sc) = &st[idx[k]];
                w *= sc;
                slots.push((*i, torus.shift(x, off)));
            }
            out.add_term(table, slots, c * from_i128(w));
            let mut k = stencils.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < stencils[k].1.len() {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
    }
    out
}

/// `P(X) = sum_{x in X} P_x`.
pub fn sum_over<'a>(
    p: &FieldPolynomial,
    xs: impl IntoIterator<Item = &'a Point>,
    torus: &TorusGeometry,
    table: &SpeciesTable,
) -> Functional {
    let mut out = Functional::zero();
    for x in xs {
        out.add_scaled(&evaluate_polynomial_at(p, x, torus, table), &Rational::one());
    }
    out
}

/// The components `(phi, phibar, psi, psibar)` on which the supersymmetry generator acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quartet {
    pub phi: usize,
    pub phibar: usize,
    pub psi: usize,
    pub psibar: usize,
}

impl Quartet {
    /// Locate a complex boson and a complex fermion of equal dimension.
    pub fn find(table: &SpeciesTable) -> Result<Self> {
        let pair = |stats: Statistics| {
            table.components().iter().enumerate().find_map(|(i, c)| {
                (c.statistics == stats).then_some(())?;
                let j = c.conjugate?;
                (j > i).then_some((i, j))
            })
        };
        let (phi, phibar) = pair(Statistics::Boson).ok_or_else(|| Error::config("no complex boson for Q"))?;
        let (psi, psibar) = pair(Statistics::Fermion).ok_or_else(|| Error::config("no complex fermion for Q"))?;
        if table.dimension(phi) != table.dimension(psi) {
            return Err(Error::config("boson and fermion of the quartet differ in dimension"));
        }
        Ok(Quartet { phi, phibar, psi, psibar })
    }

    /// `Q phi = psi, Q psi = -phi, Q phibar = psibar, Q psibar = phibar`.
    pub fn image(&self, i: usize) -> Option<(i8, usize)> {
        if i == self.phi {
            Some((1, self.psi))
        } else if i == self.psi {
            Some((-1, self.phi))
        } else if i == self.phibar {
            Some((1, self.psibar))
        } else if i == self.psibar {
            Some((1, self.phibar))
        } else {
            None
        }
    }

    /// Component map exchanging each field with its conjugate.
    pub fn conjugation(&self, table: &SpeciesTable) -> Vec<usize> {
        let mut map: Vec<usize> = (0..table.len()).collect();
        for (a, b) in [(self.phi, self.phibar), (self.psi, self.psibar)] {
            map[a] = b;
            map[b] = a;
        }
        map
    }
}

/// Apply an odd antiderivation defined on generators to factor lists.
fn antiderivation<K: Clone>(
    factors: &[K],
    comp: impl Fn(&K) -> usize,
    with_comp: impl Fn(&K, usize) -> K,
    q: &Quartet,
    table: &SpeciesTable,
    mut emit: impl FnMut(Vec<K>, i8),
) {
    let mut odd_before = 0usize;
    for (k, f) in factors.iter().enumerate() {
        let i = comp(f);
        if let Some((s, j)) = q.image(i) {
            let sign = if odd_before % 2 == 1 { -s } else { s };
            let mut out = factors.to_vec();
            out[k] = with_comp(f, j);
            emit(out, sign);
        }
        if table.is_fermion(i) {
            odd_before += 1;
        }
    }
}

/// `Q` on functionals.
pub fn supersymmetry_q(f: &Functional, q: &Quartet, table: &SpeciesTable) -> Functional {
    let mut out = Functional::zero();
    for (k, c) in f.terms() {
        antiderivation(k, |s| s.0, |s, j| (j, s.1.clone()), q, table, |slots, s| {
            out.add_term(table, slots, if s < 0 { -c.clone() } else { c.clone() });
        });
    }
    out
}

/// `Q` on local polynomials (it commutes with lattice derivatives).
pub fn supersymmetry_q_polynomial(p: &FieldPolynomial, q: &Quartet, table: &SpeciesTable) -> FieldPolynomial {
    let mut out = FieldPolynomial::zero();
    for (key, c) in p.terms() {
        antiderivation(key.factors(), |f| f.0, |f, j| (j, f.1.clone()), q, table, |factors, s| {
            out.add_factors(table, factors, c * int(i64::from(s)));
        });
    }
    out
}

/// Observable sectors `1, sigma, sigmabar, sigma sigmabar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    Empty,
    A,
    B,
    AB,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::Empty, Sector::A, Sector::B, Sector::AB];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::Empty => "0",
            Sector::A => "a",
            Sector::B => "b",
            Sector::AB => "ab",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "" | "0" | "empty" => Ok(Sector::Empty),
            "a" => Ok(Sector::A),
            "b" => Ok(Sector::B),
            "ab" => Ok(Sector::AB),
            _ => Err(Error::config(format!("unknown sector {s:?}"))),
        }
    }
}

/// `F = F_0 + sigma F_a + sigmabar F_b + sigma sigmabar F_ab`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GradedFunctional {
    pub sectors: [Functional; 4],
}

impl GradedFunctional {
    pub fn zero() -> Self {
        GradedFunctional::default()
    }

    pub fn pure(sector: Sector, f: Functional) -> Self {
        let mut g = GradedFunctional::zero();
        g.sectors[sector.index()] = f;
        g
    }

    pub fn sector(&self, s: Sector) -> &Functional {
        &self.sectors[s.index()]
    }

    pub fn sector_mut(&mut self, s: Sector) -> &mut Functional {
        &mut self.sectors[s.index()]
    }

    /// `pi_alpha`.
    pub fn project(&self, s: Sector) -> GradedFunctional {
        GradedFunctional::pure(s, self.sector(s).clone())
    }

    pub fn add(&self, other: &GradedFunctional) -> GradedFunctional {
        let mut out = self.clone();
        for s in Sector::ALL {
            out.sectors[s.index()] = self.sector(s).add(other.sector(s));
        }
        out
    }

    pub fn sub(&self, other: &GradedFunctional) -> GradedFunctional {
        let mut out = self.clone();
        for s in Sector::ALL {
            out.sectors[s.index()] = self.sector(s).sub(other.sector(s));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.sectors.iter().all(Functional::is_zero)
    }

    /// Parse `[{coeff, factors: [[coords..., name], ...], sector?}, ...]`.
    pub fn from_json(v: &Value, table: &SpeciesTable, torus: &TorusGeometry, path: &str) -> Result<Self> {
        let items = v
            .as_array()
            .ok_or_else(|| Error::config(format!("{path}: expected a list of terms")))?;
        let mut out = GradedFunctional::zero();
        for (n, item) in items.iter().enumerate() {
            let p = format!("{path}[{n}]");
            let coeff = scalar::from_json(
                item.get("coeff").ok_or_else(|| Error::config(format!("{p}: missing coeff")))?,
                &format!("{p}.coeff"),
            )?;
            let sector = match item.get("sector") {
                None | Some(Value::Null) => Sector::Empty,
                Some(Value::String(s)) => Sector::parse(s)?,
                Some(_) => return Err(Error::config(format!("{p}.sector: expected a string"))),
            };
            let factors = item
                .get("factors")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::config(format!("{p}: missing factors list")))?;
            let mut slots = Vec::with_capacity(factors.len());
            for (m, fac) in factors.iter().enumerate() {
                let fp = format!("{p}.factors[{m}]");
                let arr = fac
                    .as_array()
                    .ok_or_else(|| Error::config(format!("{fp}: expected [coords..., name]")))?;
                if arr.len() != torus.d + 1 {
                    return Err(Error::config(format!("{fp}: expected {} coordinates and a name", torus.d)));
                }
                let name = arr[torus.d]
                    .as_str()
                    .ok_or_else(|| Error::config(format!("{fp}: last entry must be a component name")))?;
                let comp = table.index(name)?;
                let coords: Vec<i64> = arr[..torus.d]
                    .iter()
                    .map(|c| c.as_i64().ok_or_else(|| Error::config(format!("{fp}: coordinates must be integers"))))
                    .collect::<Result<_>>()?;
                slots.push((comp, torus.canonical(&Point::new(&coords))));
            }
            out.sector_mut(sector).add_term(table, slots, coeff);
        }
        Ok(out)
    }

    pub fn to_json(&self, table: &SpeciesTable) -> Value {
        let mut map = serde_json::Map::new();
        for s in Sector::ALL {
            if !self.sector(s).is_zero() {
                map.insert(s.name().into(), self.sector(s).to_json(table));
            }
        }
        Value::Object(map)
    }
}
