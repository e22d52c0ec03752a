//! Scenario documents: one JSON object describing geometry, species,
//! thresholds, sets and the functional to localise.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::functionals::GradedFunctional;
use crate::lattice::{CoordinatePatch, Point, TorusGeometry};
use crate::loc::default_sector_d_plus;
use crate::monomials::{FieldPolynomial, MonomialKey, PHatStrategy, SpeciesSpec, SpeciesTable, Statistics};
use crate::scalar::{self, Rational};

/// Contraction experiment settings.
#[derive(Debug, Clone)]
pub struct ContractionSpec {
    pub ls: Vec<u64>,
    pub j: u32,
    pub a: u32,
}

/// A parsed and cross-checked scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub raw: Value,
    pub table: SpeciesTable,
    pub torus: TorusGeometry,
    pub d_plus: Rational,
    pub sector_d_plus: [Rational; 4],
    pub p_phi: u32,
    pub patch: CoordinatePatch,
    pub x: Vec<Point>,
    pub y: Option<Vec<Point>>,
    pub observables: Option<(Point, Point)>,
    pub functional: GradedFunctional,
    pub strategy: PHatStrategy,
    pub overrides: Vec<(MonomialKey, FieldPolynomial)>,
    pub contraction: Option<ContractionSpec>,
    pub trials: usize,
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::config(format!("{path}: missing field {key:?}")))
}

fn as_u64(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::config(format!("{path}: expected a non-negative integer")))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(format!("{path}: expected a string")))
}

fn parse_point(v: &Value, d: usize, path: &str) -> Result<Point> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == d)
        .ok_or_else(|| Error::config(format!("{path}: expected {d} integer coordinates")))?;
    let coords: Vec<i64> = arr
        .iter()
        .map(|c| c.as_i64().ok_or_else(|| Error::config(format!("{path}: coordinates must be integers"))))
        .collect::<Result<_>>()?;
    Ok(Point::new(&coords))
}

fn parse_points(v: &Value, torus: &TorusGeometry, path: &str) -> Result<Vec<Point>> {
    let arr = v.as_array().ok_or_else(|| Error::config(format!("{path}: expected a list of points")))?;
    let mut out: Vec<Point> = arr
        .iter()
        .enumerate()
        .map(|(i, p)| parse_point(p, torus.d, &format!("{path}[{i}]")).map(|p| torus.canonical(&p)))
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn parse_species(v: &Value) -> Result<SpeciesTable> {
    let arr = v.as_array().ok_or_else(|| Error::config("species: expected a list"))?;
    let mut specs = Vec::new();
    for (i, s) in arr.iter().enumerate() {
        let path = format!("species[{i}]");
        let name = as_str(field(s, "name", &path)?, &format!("{path}.name"))?;
        let stats = match s.get("statistics").map(|x| as_str(x, &format!("{path}.statistics"))).transpose()? {
            None | Some("boson") => Statistics::Boson,
            Some("fermion") => Statistics::Fermion,
            Some(other) => return Err(Error::config(format!("{path}.statistics: unknown value {other:?}"))),
        };
        let dim = scalar::from_json(field(s, "dimension", &path)?, &format!("{path}.dimension"))?;
        let spec = match s.get("conjugate") {
            None | Some(Value::Null) => {
                if stats == Statistics::Fermion {
                    return Err(Error::config(format!("{path}: a fermion species needs a conjugate")));
                }
                SpeciesSpec::real_boson(name, dim)
            }
            Some(c) => SpeciesSpec::complex(name, as_str(c, &format!("{path}.conjugate"))?, stats, dim),
        };
        specs.push(spec);
    }
    SpeciesTable::new(specs)
}

fn parse_polynomial(v: &Value, table: &SpeciesTable, d: usize, path: &str) -> Result<FieldPolynomial> {
    let arr = v.as_array().ok_or_else(|| Error::config(format!("{path}: expected a list of terms")))?;
    let mut out = FieldPolynomial::zero();
    for (i, t) in arr.iter().enumerate() {
        let tp = format!("{path}[{i}]");
        let c = scalar::from_json(field(t, "coeff", &tp)?, &format!("{tp}.coeff"))?;
        let (s, key) = MonomialKey::from_json(field(t, "monomial", &tp)?, table, d, &format!("{tp}.monomial"))?;
        out.add_term(key, if s < 0 { -c } else { c });
    }
    Ok(out)
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read scenario {}: {e}", path.display())))?;
        let raw: Value =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("scenario is not valid JSON: {e}")))?;
        Scenario::from_value(raw)
    }

    pub fn from_value(raw: Value) -> Result<Self> {
        if !raw.is_object() {
            return Err(Error::config("scenario must be a JSON object"));
        }
        let geo = field(&raw, "geometry", "scenario")?;
        let d = as_u64(field(geo, "d", "geometry")?, "geometry.d")? as usize;
        let l = as_u64(field(geo, "L", "geometry")?, "geometry.L")?;
        let n = as_u64(field(geo, "N", "geometry")?, "geometry.N")? as u32;
        let torus = TorusGeometry::new(d, l, n)?;
        let table = parse_species(field(&raw, "species", "scenario")?)?;
        let d_plus = scalar::from_json(field(&raw, "d_plus", "scenario")?, "d_plus")?;
        let mut sector_d_plus = default_sector_d_plus(&d_plus);
        if let Some(s) = raw.get("sector_d_plus") {
            let obj = s.as_object().ok_or_else(|| Error::config("sector_d_plus: expected an object"))?;
            for (k, v) in obj {
                let sec = crate::functionals::Sector::parse(k)?;
                sector_d_plus[sec.index()] = scalar::from_json(v, &format!("sector_d_plus.{k}"))?;
            }
        }
        let p_phi = match raw.get("p_phi") {
            None => 2,
            Some(v) => as_u64(v, "p_phi")? as u32,
        };
        let (anchor, radii) = match raw.get("patch") {
            None => {
                let r = (torus.period() - 1) / 2 - i64::from(p_phi.max(1));
                (Point::origin(d), vec![r; d])
            }
            Some(p) => {
                let anchor = match p.get("anchor") {
                    None => Point::origin(d),
                    Some(a) => parse_point(a, d, "patch.anchor")?,
                };
                let r = field(p, "radius", "patch")?;
                let radii = if let Some(v) = r.as_i64() {
                    vec![v; d]
                } else {
                    parse_point(r, d, "patch.radius")?.coords().to_vec()
                };
                (anchor, radii)
            }
        };
        let patch = CoordinatePatch::new(&torus, &anchor, &radii, p_phi)?;
        let x = match raw.get("X") {
            None => Vec::new(),
            Some(v) => parse_points(v, &torus, "X")?,
        };
        let y = raw.get("Y").map(|v| parse_points(v, &torus, "Y")).transpose()?;
        for (name, set) in [("X", Some(&x)), ("Y", y.as_ref())] {
            if let Some(set) = set {
                if let Some(p) = set.iter().find(|p| !patch.contains_point(p)) {
                    return Err(Error::config(format!("{name}: point {p} is outside the patch")));
                }
            }
        }
        let observables = match raw.get("observables") {
            None => None,
            Some(o) => {
                let a = torus.canonical(&parse_point(field(o, "a", "observables")?, d, "observables.a")?);
                let b = torus.canonical(&parse_point(field(o, "b", "observables")?, d, "observables.b")?);
                Some((a, b))
            }
        };
        let functional = match raw.get("functional") {
            None => GradedFunctional::zero(),
            Some(v) => GradedFunctional::from_json(v, &table, &torus, "functional")?,
        };
        let strategy = match raw.get("strategy") {
            None => PHatStrategy::Symmetrise,
            Some(v) => PHatStrategy::parse(as_str(v, "strategy")?)?,
        };
        let mut overrides = Vec::new();
        if let Some(v) = raw.get("phat_overrides") {
            let arr = v.as_array().ok_or_else(|| Error::config("phat_overrides: expected a list"))?;
            for (i, o) in arr.iter().enumerate() {
                let p = format!("phat_overrides[{i}]");
                let (_, key) = MonomialKey::from_json(field(o, "monomial", &p)?, &table, d, &format!("{p}.monomial"))?;
                let poly = parse_polynomial(field(o, "image", &p)?, &table, d, &format!("{p}.image"))?;
                overrides.push((key, poly));
            }
        }
        let contraction = match raw.get("contraction") {
            None => None,
            Some(c) => {
                let ls = field(c, "L", "contraction")?
                    .as_array()
                    .ok_or_else(|| Error::config("contraction.L: expected a list"))?
                    .iter()
                    .map(|v| as_u64(v, "contraction.L"))
                    .collect::<Result<Vec<_>>>()?;
                let j = c.get("j").map(|v| as_u64(v, "contraction.j")).transpose()?.unwrap_or(1) as u32;
                let a = c.get("A").map(|v| as_u64(v, "contraction.A")).transpose()?.unwrap_or(4) as u32;
                Some(ContractionSpec { ls, j, a })
            }
        };
        let trials = raw.get("trials").map(|v| as_u64(v, "trials")).transpose()?.unwrap_or(20) as usize;
        Ok(Scenario {
            raw,
            table,
            torus,
            d_plus,
            sector_d_plus,
            p_phi,
            patch,
            x,
            y,
            observables,
            functional,
            strategy,
            overrides,
            contraction,
            trials,
        })
    }

    /// Whether the functional uses observable sectors.
    pub fn is_graded(&self) -> bool {
        self.observables.is_some()
            || crate::functionals::Sector::ALL[1..].iter().any(|&s| !self.functional.sector(s).is_zero())
    }
}
