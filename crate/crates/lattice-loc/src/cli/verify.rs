//! The randomised identity battery behind `verify`.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::{Report, Scenario};
use crate::error::{Error, Result};
use crate::functionals::{supersymmetry_q, Functional, GradedFunctional, Quartet, Sector};
use crate::lattice::{Automorphism, Point, Rect, SignedPermutation};
use crate::loc::{GradedLoc, LocContext, VerifyMode};
use crate::monomials::{sigma_act, FieldPolynomial, PHatTable};
use crate::random::{
    random_functional, random_signed_permutation, random_subset, random_translation, seeded, FunctionalShape,
    SeededRng,
};
use crate::scalar::Rational;

/// Result of one family of checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub trials: usize,
    pub passed: bool,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl CheckOutcome {
    fn skipped(name: &str, why: &str) -> Self {
        CheckOutcome { name: name.into(), trials: 0, passed: true, skipped: true, counterexample: Some(why.into()) }
    }
}

/// Failures of the identities themselves become counterexamples; input
/// problems still abort the run.
fn absorb(e: Error) -> Result<String> {
    match e {
        Error::Verification(_) | Error::Construction { .. } => Ok(e.to_string()),
        other => Err(other),
    }
}

fn run_trials(
    name: &str,
    trials: usize,
    rng: &mut SeededRng,
    mut one: impl FnMut(&mut SeededRng) -> Result<Option<String>>,
) -> Result<CheckOutcome> {
    for _ in 0..trials {
        let bad = match one(rng) {
            Ok(v) => v,
            Err(e) => Some(absorb(e)?),
        };
        if let Some(c) = bad {
            return Ok(CheckOutcome { name: name.into(), trials, passed: false, skipped: false, counterexample: Some(c) });
        }
    }
    Ok(CheckOutcome { name: name.into(), trials, passed: true, skipped: false, counterexample: None })
}

fn points_text(xs: &[Point]) -> String {
    let v: Vec<String> = xs.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Sampling region: a box about the patch anchor small enough that `X`,
/// the stencil extension and translated supports stay inside the patch.
struct Sampler {
    region: Vec<Point>,
    shape: FunctionalShape,
}

impl Sampler {
    fn new(ctx: &LocContext) -> Result<Self> {
        let patch = ctx.patch();
        let reach = i64::from(ctx.phat().reach());
        let spare = patch.radii().iter().map(|r| r - reach).min().unwrap_or(0);
        if spare < 0 {
            return Err(Error::config("patch is too small for the stencil reach of the basis table"));
        }
        let rho = (spare / 2).min(1);
        let region: Vec<Point> = Rect::cube(ctx.torus().d, -rho, rho).points().iter().map(|c| patch.unchart(c)).collect();
        let shape = FunctionalShape::new(ctx.table(), region.clone(), 4, 5);
        Ok(Sampler { region, shape })
    }

    fn functional(&self, rng: &mut SeededRng, ctx: &LocContext) -> Functional {
        random_functional(rng, ctx.table(), &self.shape)
    }

    fn subset(&self, rng: &mut SeededRng) -> Vec<Point> {
        random_subset(rng, &self.region, 4)
    }
}

/// Runs the whole battery with `trials` random inputs per check.
pub fn run_checks(sc: &Scenario, seed: u64, trials: usize) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let phat = match PHatTable::build_with_overrides(&sc.table, sc.torus.d, &sc.d_plus, sc.strategy, &sc.overrides) {
        Ok(p) => {
            out.push(CheckOutcome { name: "phat_table".into(), trials: 1, passed: true, skipped: false, counterexample: None });
            p
        }
        Err(e @ Error::Construction { .. }) => {
            out.push(CheckOutcome {
                name: "phat_table".into(),
                trials: 1,
                passed: false,
                skipped: false,
                counterexample: Some(e.to_string()),
            });
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let ctx = LocContext::from_table(Arc::new(phat), sc.torus.clone(), sc.patch.clone(), VerifyMode::Off)?;
    let sampler = Sampler::new(&ctx)?;
    let mut rng = seeded(seed);
    let torus = ctx.torus().clone();
    let table = ctx.table().clone();
    let d = torus.d;

    out.push(run_trials("duality", trials.min(sampler.region.len()), &mut rng, |rng| {
        let a = sampler.region[rng.gen_range(0..sampler.region.len())].clone();
        for (i, k) in ctx.basis().iter().enumerate() {
            let f = ctx.evaluate(&FieldPolynomial::monomial(k.clone()), std::slice::from_ref(&a));
            let alpha = ctx.dual_coefficients(&f, &a)?;
            for (j, v) in alpha.iter().enumerate() {
                let expected = if i == j { Rational::from_integer(1.into()) } else { Rational::default() };
                if *v != expected {
                    return Ok(Some(format!(
                        "<{}({a}), f_{}> = {v}",
                        k.display(&table),
                        ctx.basis()[j].display(&table)
                    )));
                }
            }
        }
        Ok(None)
    })?);

    let patch_points = ctx.patch().points();
    out.push(run_trials("defining_property", trials, &mut rng, |rng| {
        let f = sampler.functional(rng, &ctx);
        let xs = sampler.subset(rng);
        let r = ctx.loc(&f, &xs)?;
        let mut bases = vec![r.base.clone()];
        if patch_points.len() <= 64 {
            bases = patch_points.clone();
        } else {
            for _ in 0..4 {
                bases.push(patch_points[rng.gen_range(0..patch_points.len())].clone());
            }
        }
        let res = ctx.residuals(&f, &r, &bases)?;
        Ok(res.first().map(|x| {
            format!(
                "F = {}, X = {}: <F - loc F, b_{}^({})> = {}",
                f.display(&table),
                points_text(&xs),
                x.key.display(&table),
                x.base,
                x.value
            )
        }))
    })?);

    out.push(run_trials("composition", trials, &mut rng, |rng| {
        let f = sampler.functional(rng, &ctx);
        let (xs, xp) = (sampler.subset(rng), sampler.subset(rng));
        let inner = ctx.loc_functional(&f, &xp)?;
        let lhs = ctx.loc_functional(&inner, &xs)?;
        let rhs = ctx.loc_functional(&f, &xs)?;
        Ok((lhs != rhs).then(|| {
            format!("F = {}, X = {}, X' = {}", f.display(&table), points_text(&xs), points_text(&xp))
        }))
    })?);

    out.push(run_trials("idempotence", trials, &mut rng, |rng| {
        let f = sampler.functional(rng, &ctx);
        let xs = sampler.subset(rng);
        let rest = f.sub(&ctx.loc_functional(&f, &xs)?);
        let again = ctx.loc_functional(&rest, &xs)?;
        Ok((!again.is_zero()).then(|| format!("F = {}, X = {}", f.display(&table), points_text(&xs))))
    })?);

    out.push(run_trials("base_point_independence", trials, &mut rng, |rng| {
        let f = sampler.functional(rng, &ctx);
        let xs = sampler.subset(rng);
        let r = ctx.loc(&f, &xs)?;
        let a = r.points[rng.gen_range(0..r.points.len())].clone();
        let other = ctx.loc_at(&f, &r.points, &a)?;
        Ok((other.polynomial != r.polynomial).then(|| {
            format!("F = {}, X = {}, a = {} vs {}", f.display(&table), points_text(&xs), r.base, a)
        }))
    })?);

    out.push(run_trials("partition", trials, &mut rng, |rng| {
        let f = sampler.functional(rng, &ctx);
        let xs = sampler.subset(rng);
        let (x1, x2): (Vec<Point>, Vec<Point>) = xs.iter().cloned().partition(|_| rng.gen_bool(0.5));
        let sum = ctx.loc_xy(&f, &xs, &x1)?.add(&ctx.loc_xy(&f, &xs, &x2)?);
        let whole = ctx.loc_functional(&f, &xs)?;
        Ok((sum != whole).then(|| {
            format!("F = {}, X1 = {}, X2 = {}", f.display(&table), points_text(&x1), points_text(&x2))
        }))
    })?);

    let anchor = ctx.patch().anchor().clone();
    out.push(run_trials("additivity", trials, &mut rng, |rng| {
        let f0 = sampler.functional(rng, &ctx);
        let xs = sampler.subset(rng);
        let p = ctx.loc(&f0, std::slice::from_ref(&anchor))?.polynomial;
        let mut total = Functional::zero();
        for x in &xs {
            let shift = Automorphism::translation(ctx.patch().chart(x));
            let fx = f0.automorphism_act(&shift, &torus, &table);
            let single = ctx.loc_functional(&fx, std::slice::from_ref(x))?;
            if single != ctx.evaluate(&p, std::slice::from_ref(x)) {
                return Ok(Some(format!("loc at {x} of the translate of {} differs from P_x", f0.display(&table))));
            }
            total = total.add(&fx);
        }
        let lhs = ctx.loc_functional(&total, &xs)?;
        Ok((lhs != ctx.evaluate(&p, &xs)).then(|| format!("F_0 = {}, X = {}", f0.display(&table), points_text(&xs))))
    })?);

    out.push(run_trials("euclidean_covariance", trials, &mut rng, |rng| {
        let f = sampler.functional(rng, &ctx);
        let xs = sampler.subset(rng);
        let e = match rng.gen_range(0..3) {
            0 => random_translation(rng, d, 2),
            1 => {
                let gens = SignedPermutation::generators(d);
                Automorphism::about(gens[rng.gen_range(0..gens.len())].clone(), &anchor)
            }
            _ => Automorphism::about(random_signed_permutation(rng, d), &anchor).compose(&random_translation(rng, d, 1)),
        };
        let moved = ctx.with_patch(ctx.patch().transformed(&e));
        let ex: Vec<Point> = xs.iter().map(|x| e.apply(&torus, x)).collect();
        let lhs = ctx.loc_functional(&f, &xs)?.automorphism_act(&e, &torus, &table);
        let rhs = moved.loc_functional(&f.automorphism_act(&e, &torus, &table), &ex)?;
        Ok((lhs != rhs).then(|| format!("F = {}, X = {}, E = {:?}", f.display(&table), points_text(&xs), e)))
    })?);

    let group: Vec<Automorphism> =
        SignedPermutation::all(d).into_iter().map(|t| Automorphism::about(t, &anchor)).collect();
    let sym_trials = if d >= 4 { trials.min(5) } else { trials };
    out.push(run_trials("symmetry_inheritance", sym_trials, &mut rng, |rng| {
        let f0 = sampler.functional(rng, &ctx);
        let mut f = Functional::zero();
        for e in &group {
            f = f.add(&f0.automorphism_act(e, &torus, &table));
        }
        let p = ctx.loc(&f, &sampler.region)?.polynomial;
        for theta in SignedPermutation::generators(d) {
            if sigma_act(&theta, &p, &table) != p {
                return Ok(Some(format!("F_0 = {}, generator {:?}", f0.display(&table), theta)));
            }
        }
        Ok(None)
    })?);

    match Quartet::find(&table) {
        Ok(q) => {
            out.push(run_trials("supersymmetry", trials, &mut rng, |rng| {
                let f = sampler.functional(rng, &ctx);
                let xs = sampler.subset(rng);
                let lhs = supersymmetry_q(&ctx.loc_functional(&f, &xs)?, &q, &table);
                let rhs = ctx.loc_functional(&supersymmetry_q(&f, &q, &table), &xs)?;
                Ok((lhs != rhs).then(|| format!("F = {}, X = {}", f.display(&table), points_text(&xs))))
            })?);
            let swap = q.conjugation(&table);
            out.push(run_trials("conjugation_swap", trials, &mut rng, |rng| {
                let f = sampler.functional(rng, &ctx);
                let xs = sampler.subset(rng);
                let lhs = ctx.loc_functional(&f, &xs)?.relabel_components(&swap, &table);
                let rhs = ctx.loc_functional(&f.relabel_components(&swap, &table), &xs)?;
                Ok((lhs != rhs).then(|| format!("F = {}, X = {}", f.display(&table), points_text(&xs))))
            })?);
        }
        Err(_) => {
            out.push(CheckOutcome::skipped("supersymmetry", "no boson/fermion pair of equal dimension"));
            out.push(CheckOutcome::skipped("conjugation_swap", "no boson/fermion pair of equal dimension"));
        }
    }

    match &sc.observables {
        Some((a, b)) if sc.overrides.is_empty() => {
            let graded = GradedLoc::new(
                &table,
                torus.clone(),
                ctx.patch().clone(),
                sc.sector_d_plus.clone(),
                sc.strategy,
                VerifyMode::Off,
                a.clone(),
                b.clone(),
            )?;
            let gsampler = |rng: &mut SeededRng| {
                let mut g = GradedFunctional::zero();
                for s in Sector::ALL {
                    *g.sector_mut(s) = sampler.functional(rng, &ctx);
                }
                let mut xs = sampler.subset(rng);
                for p in [a, b] {
                    if ctx.patch().contains_point(p) && rng.gen_bool(0.5) && !xs.contains(p) {
                        xs.push(p.clone());
                    }
                }
                xs.sort();
                (g, xs)
            };
            out.push(run_trials("graded_projection", trials, &mut rng, |rng| {
                let (f, xs) = gsampler(rng);
                let whole = graded.loc(&f, &xs)?;
                for s in Sector::ALL {
                    if graded.loc(&f.project(s), &xs)? != whole.project(s) {
                        return Ok(Some(format!("sector {} with X = {}", s.name(), points_text(&xs))));
                    }
                }
                Ok(None)
            })?);
            out.push(run_trials("graded_partition", trials, &mut rng, |rng| {
                let (f, xs) = gsampler(rng);
                let (x1, x2): (Vec<Point>, Vec<Point>) = xs.iter().cloned().partition(|_| rng.gen_bool(0.5));
                let sum = graded.loc_xy(&f, &xs, &x1)?.add(&graded.loc_xy(&f, &xs, &x2)?);
                Ok((sum != graded.loc(&f, &xs)?).then(|| format!("X1 = {}, X2 = {}", points_text(&x1), points_text(&x2))))
            })?);
            out.push(run_trials("graded_composition", trials, &mut rng, |rng| {
                let (f, xs) = gsampler(rng);
                let xp = random_subset(rng, &xs, xs.len());
                let lhs = graded.loc(&graded.loc(&f, &xs)?, &xp)?;
                Ok((lhs != graded.loc(&f, &xp)?).then(|| format!("X = {}, X' = {}", points_text(&xs), points_text(&xp))))
            })?);
            out.push(run_trials("graded_idempotence", trials, &mut rng, |rng| {
                let (f, xs) = gsampler(rng);
                let rest = f.sub(&graded.loc(&f, &xs)?);
                Ok((!graded.loc(&rest, &xs)?.is_zero()).then(|| format!("X = {}", points_text(&xs))))
            })?);
        }
        _ => {
            for name in ["graded_projection", "graded_partition", "graded_composition", "graded_idempotence"] {
                out.push(CheckOutcome::skipped(name, "no observables in the scenario"));
            }
        }
    }

    out.push(negative_control(sc, &ctx));
    Ok(out)
}

/// Replaces the image of the first derivative monomial by the raw monomial,
/// which breaks reflection covariance; the build must reject it under (i).
fn negative_control(sc: &Scenario, ctx: &LocContext) -> CheckOutcome {
    let name = "negative_control";
    let table = ctx.table();
    let Some(key) = ctx.basis().iter().find(|k| k.order() > 0) else {
        return CheckOutcome::skipped(name, "no derivative monomial in the basis");
    };
    let bad = vec![(key.clone(), FieldPolynomial::monomial(key.clone()))];
    let expected = key.display(table).to_string();
    let (passed, detail) = match PHatTable::build_with_overrides(table, sc.torus.d, &sc.d_plus, sc.strategy, &bad) {
        Err(Error::Construction { condition, monomial, .. }) if condition == "i" && monomial == expected => {
            (true, format!("corrupted {expected} rejected under condition (i)"))
        }
        Err(e) => (false, format!("unexpected rejection: {e}")),
        Ok(_) => (false, format!("corrupted {expected} was accepted")),
    };
    CheckOutcome { name: name.into(), trials: 1, passed, skipped: false, counterexample: Some(detail) }
}

pub fn cmd_verify(sc: &Scenario, seed: u64) -> Result<Report> {
    let checks = run_checks(sc, seed, sc.trials)?;
    let ok = checks.iter().all(|c| c.passed);
    let mut rows = Vec::new();
    let mut text = String::new();
    for c in &checks {
        let status = if c.skipped {
            "skip"
        } else if c.passed {
            "pass"
        } else {
            "FAIL"
        };
        let detail = c.counterexample.clone().unwrap_or_default();
        rows.push(vec![c.name.clone(), c.trials.to_string(), status.to_string(), detail.clone()]);
        text.push_str(&format!("{status} {} ({} trials)", c.name, c.trials));
        if !detail.is_empty() {
            text.push_str(&format!(": {detail}"));
        }
        text.push('\n');
    }
    Ok(Report {
        json: json!({
            "command": "verify",
            "scenario": sc.raw,
            "seed": seed,
            "trials": sc.trials,
            "checks": checks,
            "ok": ok,
        }),
        header: ["check", "trials", "status", "detail"].map(String::from).to_vec(),
        rows,
        text,
        ok,
    })
}
