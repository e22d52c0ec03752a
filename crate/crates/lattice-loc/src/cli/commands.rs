use std::sync::Arc;

use serde_json::{json, Value};

use super::{Report, Scenario};
use crate::error::{Error, Result};
use crate::functionals::Sector;
use crate::loc::{GradedLoc, LocContext, LocResult, VerifyMode};
use crate::monomials::{classify, enumerate_v_bar_plus, enumerate_v_plus, PHatTable, Relevance};
use crate::norms::{contraction_experiment, ContractionConfig};
use crate::scalar::{self, display};

pub fn cmd_enumerate(sc: &Scenario) -> Result<Report> {
    let table = &sc.table;
    let keys = enumerate_v_plus(table, sc.torus.d, &sc.d_plus)?;
    let mut rows = Vec::new();
    let mut items = Vec::new();
    let (mut relevant, mut marginal) = (0usize, 0usize);
    let mut text = String::new();
    for k in &keys {
        let class = match classify(k, table, &sc.d_plus) {
            Relevance::Relevant => {
                relevant += 1;
                "relevant"
            }
            Relevance::Marginal => {
                marginal += 1;
                "marginal"
            }
        };
        let dim = k.dimension(table).finite().cloned().expect("finite");
        let name = k.display(table).to_string();
        rows.push(vec![name.clone(), display(&dim), k.degree().to_string(), class.to_string()]);
        text.push_str(&format!("{name}\t{}\t{class}\n", display(&dim)));
        items.push(json!({
            "monomial": k.to_json(table),
            "display": name,
            "dimension": scalar::to_json(&dim),
            "degree": k.degree(),
            "class": class,
        }));
    }
    text.push_str(&format!("relevant {relevant}, marginal {marginal}, total {}\n", keys.len()));
    Ok(Report {
        json: json!({
            "command": "enumerate",
            "scenario": sc.raw,
            "counts": {"relevant": relevant, "marginal": marginal, "total": keys.len()},
            "monomials": items,
        }),
        header: ["monomial", "dimension", "degree", "class"].map(String::from).to_vec(),
        rows,
        text,
        ok: true,
    })
}

fn sector_result(
    ctx: &LocContext,
    sector: Sector,
    f: &crate::functionals::Functional,
    xs: &[crate::lattice::Point],
    ys: &[crate::lattice::Point],
    verify: VerifyMode,
) -> Result<(Value, Vec<Vec<String>>, String)> {
    let table = ctx.table();
    let r: LocResult = ctx.loc(f, xs)?;
    let image = ctx.evaluate(&r.polynomial, ys);
    let mut rows = Vec::new();
    let mut text = String::new();
    for (k, c) in r.polynomial.terms() {
        rows.push(vec![
            sector.name().to_string(),
            k.display(table).to_string(),
            c.numer().to_string(),
            c.denom().to_string(),
        ]);
    }
    let coefficients: Vec<Value> = ctx
        .basis()
        .iter()
        .zip(&r.beta)
        .filter(|(_, b)| !num_traits::Zero::is_zero(*b))
        .map(|(k, b)| json!({"basis": k.display(table).to_string(), "coeff": scalar::to_json(b)}))
        .collect();
    text.push_str(&format!("[{}] {}\n", sector.name(), r.polynomial.display(table)));
    let checked = if verify == VerifyMode::On && !xs.is_empty() {
        enumerate_v_bar_plus(table, ctx.torus().d, ctx.phat().d_plus())?.len()
    } else {
        0
    };
    let v = json!({
        "sector": sector.name(),
        "X": xs.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
        "Y": ys.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
        "base_point": if xs.is_empty() { Value::Null } else { json!(r.base.coords()) },
        "polynomial": r.polynomial.to_json(table),
        "basis_coefficients": coefficients,
        "functional": image.to_json(table),
        "verification": {
            "mode": if verify == VerifyMode::On { "on" } else { "off" },
            "pairings_checked": checked,
            "status": if verify == VerifyMode::On { "pass" } else { "skipped" },
        },
    });
    Ok((v, rows, text))
}

pub fn cmd_loc(sc: &Scenario, verify: VerifyMode) -> Result<Report> {
    let ys = sc.y.clone().unwrap_or_else(|| sc.x.clone());
    if !ys.iter().all(|y| sc.x.contains(y)) {
        return Err(Error::precondition("Y must be a subset of X"));
    }
    let mut sectors = Vec::new();
    let mut rows = Vec::new();
    let mut text = String::new();
    if sc.is_graded() {
        if !sc.overrides.is_empty() {
            return Err(Error::config("phat_overrides are not supported with observable sectors"));
        }
        let (a, b) = sc
            .observables
            .clone()
            .ok_or_else(|| Error::config("graded functionals need observables {a, b}"))?;
        let graded = GradedLoc::new(
            &sc.table,
            sc.torus.clone(),
            sc.patch.clone(),
            sc.sector_d_plus.clone(),
            sc.strategy,
            verify,
            a,
            b,
        )?;
        for s in Sector::ALL {
            let f = sc.functional.sector(s);
            if f.is_zero() {
                continue;
            }
            let xa = graded.restrict(s, &sc.x);
            let ya = graded.restrict(s, &ys);
            let (v, r, t) = sector_result(graded.context(s), s, f, &xa, &ya, verify)?;
            sectors.push(v);
            rows.extend(r);
            text.push_str(&t);
        }
    } else {
        let phat = PHatTable::build_with_overrides(&sc.table, sc.torus.d, &sc.d_plus, sc.strategy, &sc.overrides)?;
        let ctx = LocContext::from_table(Arc::new(phat), sc.torus.clone(), sc.patch.clone(), verify)?;
        let (v, r, t) = sector_result(&ctx, Sector::Empty, sc.functional.sector(Sector::Empty), &sc.x, &ys, verify)?;
        sectors.push(v);
        rows.extend(r);
        text.push_str(&t);
    }
    Ok(Report {
        json: json!({
            "command": "loc",
            "scenario": sc.raw,
            "strategy": sc.strategy.name(),
            "results": sectors,
        }),
        header: ["sector", "monomial", "coeff_num", "coeff_den"].map(String::from).to_vec(),
        rows,
        text,
        ok: true,
    })
}

pub fn cmd_contract(sc: &Scenario, verify: VerifyMode) -> Result<Report> {
    let spec = sc.contraction.clone().unwrap_or(super::ContractionSpec { ls: vec![2, 3, 4, 5, 8], j: 1, a: 4 });
    let cfg = ContractionConfig {
        table: sc.table.clone(),
        d: sc.torus.d,
        d_plus: sc.d_plus.clone(),
        j: spec.j,
        ls: spec.ls,
        strategy: sc.strategy,
        a: spec.a,
    };
    let rep = contraction_experiment(&cfg)?;
    let threshold = rep.reference_slope + 0.5;
    let slope_ok = rep.slope.is_some_and(|s| s <= threshold);
    let ok = rep.local_ratio_zero && !rep.vacuous && (verify == VerifyMode::Off || slope_ok);
    let mut rows = Vec::new();
    let mut text = String::new();
    for r in &rep.rows {
        rows.push(vec![
            r.l.to_string(),
            r.j.to_string(),
            r.ratio_num.clone(),
            r.ratio_den.clone(),
            format!("{:.12}", r.log_ratio),
        ]);
        text.push_str(&format!("L={} j={} ratio={} log={:.6} worst={}\n", r.l, r.j, r.ratio, r.log_ratio, r.worst));
    }
    text.push_str(&format!(
        "slope {} (reference {}, threshold {}), local ratio zero: {}, vacuous: {}\n",
        rep.slope.map_or("n/a".to_string(), |s| format!("{s:.6}")),
        rep.reference_slope,
        threshold,
        rep.local_ratio_zero,
        rep.vacuous
    ));
    Ok(Report {
        json: json!({
            "command": "contract",
            "scenario": sc.raw,
            "report": rep,
            "slope_threshold": threshold,
            "slope_within_threshold": slope_ok,
        }),
        header: ["L", "j", "ratio_num", "ratio_den", "log_ratio"].map(String::from).to_vec(),
        rows,
        text,
        ok,
    })
}
