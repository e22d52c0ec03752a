//! Acceptance run: one line per criterion. Runs without the libtest harness
//! so the lines are always printed.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde_json::json;

use lattice_loc::cli::{run_checks, CheckOutcome, Scenario};
use lattice_loc::functionals::{sum_over, Functional};
use lattice_loc::lattice::{CoordinatePatch, MultiIndex, Point, Rect, TorusGeometry, UnitVector};
use lattice_loc::loc::{LocContext, VerifyMode};
use lattice_loc::monomials::{
    classify, enumerate_v_bar_plus, enumerate_v_plus, FieldPolynomial, MonomialKey, PHatStrategy, Relevance,
    SpeciesSpec, SpeciesTable, Statistics,
};
use lattice_loc::norms::{contraction_experiment, d_plus_prime, ContractionConfig};
use lattice_loc::random::{random_functional, random_subset, seeded, small_rational, FunctionalShape};
use lattice_loc::scalar::{int, rat, Rational};
use lattice_loc::testfn::{
    key_derivative_at, slot_derivative, taylor, taylor_remainder_bound_check, vandermonde_check, Arg, Binomial,
    BinomialCombination, DualBasis, FnTestFunction, Symmetrised, TestFunction,
};
use lattice_loc::Result;

struct Outcome {
    pass: bool,
    /// Failure that matches a documented discrepancy in the published values.
    known: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, known: false, detail: detail.into() }
}

fn within(limit: Duration, start: Instant, mut o: Outcome) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        o.pass = false;
        o.detail = format!("{}; took {:.1}s, limit {}s", o.detail, took.as_secs_f64(), limit.as_secs());
    }
    o
}

fn boson(name: &str, dim: Rational) -> SpeciesSpec {
    SpeciesSpec::real_boson(name, dim)
}

// 1. Duality of the monomials M_{m,a} and the dual basis f_{m'}^{(a)}.

fn duality(table: &SpeciesTable, d: usize, d_plus: &Rational) -> Result<(usize, Option<String>)> {
    let torus = TorusGeometry::new(d, 4, 2)?;
    let patch = CoordinatePatch::new(&torus, &Point::origin(d), &vec![4; d], 2)?;
    let keys = enumerate_v_plus(table, d, d_plus)?;
    let mut count = 0;
    let bases = [Point::origin(d), Point::new(&(0..d).map(|i| if i % 2 == 0 { 1 } else { -2 }).collect::<Vec<_>>())];
    for a in &bases {
        let ca = patch.chart(a);
        let duals: Vec<DualBasis> =
            keys.iter().map(|k| DualBasis::new(k.clone(), ca.clone(), table)).collect::<Result<_>>()?;
        for (i, m) in keys.iter().enumerate() {
            let f = sum_over(&FieldPolynomial::monomial(m.clone()), std::iter::once(a), &torus, table);
            for (j, g) in duals.iter().enumerate() {
                let v = f.pair_zero(g, &patch, table)?;
                let expected = if i == j { int(1) } else { int(0) };
                count += 1;
                if v != expected {
                    return Ok((count, Some(format!("<{}, f_{}> = {v} at {a}", m.display(table), keys[j].display(table)))));
                }
            }
        }
    }
    Ok((count, None))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let configs: Vec<(&str, SpeciesTable, usize, Rational)> = vec![
        ("d=1 boson", SpeciesTable::single_boson(rat(1, 2)), 1, int(2)),
        (
            "d=2 boson + fermion pair",
            SpeciesTable::new(vec![
                boson("phi", rat(1, 2)),
                SpeciesSpec::complex("psi", "psibar", Statistics::Fermion, rat(1, 2)),
            ])
            .unwrap(),
            2,
            int(2),
        ),
        (
            "d=2 bosons of dimension 1 and 3/2",
            SpeciesTable::new(vec![boson("phi", int(1)), boson("chi", rat(3, 2))]).unwrap(),
            2,
            int(4),
        ),
    ];
    let mut parts = Vec::new();
    for (name, table, d, dp) in &configs {
        match duality(table, *d, dp) {
            Ok((n, None)) => parts.push(format!("{name}: {n} pairings")),
            Ok((_, Some(bad))) => return outcome(false, format!("{name}: {bad}")),
            Err(e) => return outcome(false, format!("{name}: {e}")),
        }
    }
    within(Duration::from_secs(60), start, outcome(true, parts.join(", ")))
}

// 2. Defining property on random functionals, every m and every base point.

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let configs: Vec<(SpeciesTable, usize, Rational, i64)> = vec![
        (SpeciesTable::single_boson(rat(1, 2)), 1, int(2), 6),
        (SpeciesTable::single_boson(int(1)), 2, int(3), 3),
        (SpeciesTable::supersymmetric(rat(1, 2)), 2, int(2), 3),
    ];
    let mut rng = seeded(2024);
    let mut functionals = 0;
    let mut pairings = 0usize;
    for (table, d, dp, radius) in &configs {
        let torus = TorusGeometry::new(*d, 4, 3).unwrap();
        let patch = CoordinatePatch::new(&torus, &Point::origin(*d), &vec![*radius; *d], 2).unwrap();
        let ctx = LocContext::new(table, torus, patch.clone(), dp, PHatStrategy::Symmetrise, VerifyMode::Off).unwrap();
        let reach = i64::from(ctx.phat().reach());
        let half = (radius - reach).min(if *d == 1 { 4 } else { 1 });
        let region: Vec<Point> = Rect::cube(*d, -half, half).points().iter().map(|c| patch.unchart(c)).collect();
        let shape = FunctionalShape::new(table, region.clone(), 4, 5);
        let bases = patch.points();
        let bar = enumerate_v_bar_plus(table, *d, dp).unwrap().len();
        for _ in 0..34 {
            let f = random_functional(&mut rng, table, &shape);
            let xs = random_subset(&mut rng, &region, 9);
            let r = match ctx.loc(&f, &xs) {
                Ok(r) => r,
                Err(e) => return outcome(false, e.to_string()),
            };
            let res = ctx.residuals(&f, &r, &bases).unwrap();
            if let Some(x) = res.first() {
                return outcome(
                    false,
                    format!("F = {}: residual {} for {} at {}", f.display(table), x.value, x.key.display(table), x.base),
                );
            }
            functionals += 1;
            pairings += bar * bases.len();
        }
    }
    within(
        Duration::from_secs(300),
        start,
        outcome(true, format!("{functionals} functionals, {pairings} (m, a') pairs, all residuals zero")),
    )
}

// 3. Nearest-neighbour examples (ii) and (iii), against direct summation.

fn raw_key_poly(table: &SpeciesTable, terms: &[(Vec<(usize, MultiIndex)>, Rational)]) -> FieldPolynomial {
    let mut p = FieldPolynomial::zero();
    for (factors, c) in terms {
        p.add_factors(table, factors.clone(), c.clone());
    }
    p
}

fn criterion_3() -> Outcome {
    let d = 4;
    let table = SpeciesTable::new(vec![SpeciesSpec::complex("phi", "phibar", Statistics::Boson, int(1))]).unwrap();
    let (phi, phibar) = (table.index("phi").unwrap(), table.index("phibar").unwrap());
    let torus = TorusGeometry::new(d, 3, 3).unwrap();
    let patch = CoordinatePatch::new(&torus, &Point::origin(d), &[4; 4], 2).unwrap();
    let ctx = LocContext::new(&table, torus.clone(), patch, &int(4), PHatStrategy::Laplacian, VerifyMode::On).unwrap();
    let zero = MultiIndex::zero(d);
    let lap = |i: usize| MultiIndex::unit(d, UnitVector::plus(i)).with_added(UnitVector::minus(i), 1);
    let mut rng = seeded(15);
    let xsets: Vec<Vec<Point>> = vec![
        vec![Point::origin(d)],
        vec![Point::origin(d), Point::new(&[1, 0, 0, 0])],
        vec![Point::new(&[0, -1, 0, 0]), Point::new(&[1, 1, 0, 0]), Point::new(&[0, 0, 0, 1])],
    ];
    let mut cases = 0;
    for trial in 0..6 {
        let (q0, q1) = (small_rational(&mut rng), small_rational(&mut rng));
        let mut q: Vec<(Point, Rational)> = vec![(Point::origin(d), q0.clone())];
        for e in UnitVector::all(d) {
            q.push((Point::origin(d).shifted(e, 1), q1.clone()));
        }
        // Oracle: moments by direct summation over the support of q.
        let q_one: Rational = q.iter().map(|(_, c)| c.clone()).sum();
        let q_star: Rational = q.iter().map(|(x, c)| c * int(x.coords()[0] * x.coords()[0])).sum();
        for i in 0..d {
            let first: Rational = q.iter().map(|(x, c)| c * int(x.coords()[i])).sum();
            if !first.is_zero() {
                return outcome(false, "first moment of q is not zero");
            }
            for j in 0..d {
                let second: Rational = q.iter().map(|(x, c)| c * int(x.coords()[i] * x.coords()[j])).sum();
                if second != if i == j { q_star.clone() } else { int(0) } {
                    return outcome(false, "second moments of q are not diagonal");
                }
            }
        }
        if q_one != &q0 + int(2 * d as i64) * &q1 || q_star != int(2) * &q1 {
            return outcome(false, "moment oracle disagrees with q0 + 2d q1 and 2 q1");
        }
        let half = rat(1, 2);
        let mut sigma_terms = Vec::new();
        let mut sym_terms = Vec::new();
        for i in 0..d {
            let pd = vec![(phi, zero.clone()), (phibar, lap(i))];
            let dp = vec![(phi, lap(i)), (phibar, zero.clone())];
            sigma_terms.push((pd.clone(), -&half));
            sigma_terms.push((dp.clone(), -&half));
            sym_terms.push((pd, -&half));
            sym_terms.push((dp, -&half));
        }
        for e in UnitVector::all(d) {
            let u = MultiIndex::unit(d, e);
            sigma_terms.push((vec![(phi, u.clone()), (phibar, u)], half.clone()));
        }
        let tau = raw_key_poly(&table, &[(vec![(phi, zero.clone()), (phibar, zero.clone())], int(1))]);
        let sigma = raw_key_poly(&table, &sigma_terms);
        let sym = raw_key_poly(&table, &sym_terms);
        let expected_ii = tau.scale(&q_one).add(&sigma.scale(&q_star));
        let expected_iii = tau.scale(&(int(2) * &q_one)).add(&sym.scale(&q_star));
        let xs = &xsets[trial % xsets.len()];
        let mut f = Functional::zero();
        let mut fp = Functional::zero();
        for x in xs {
            for (off, c) in &q {
                let y = torus.canonical(&x.sub(off));
                f.add_term(&table, vec![(phi, y.clone()), (phibar, y.clone())], c.clone());
                fp.add_term(&table, vec![(phi, x.clone()), (phibar, y.clone())], c.clone());
                fp.add_term(&table, vec![(phi, y.clone()), (phibar, x.clone())], c.clone());
            }
        }
        for (label, func, expected) in [("(ii)", &f, &expected_ii), ("(iii)", &fp, &expected_iii)] {
            let got = match ctx.loc_functional(func, xs) {
                Ok(g) => g,
                Err(e) => return outcome(false, format!("{label}: {e}")),
            };
            if got != sum_over(expected, xs, &torus, &table) {
                return outcome(false, format!("{label} with q0 = {q0}, q1 = {q1}, |X| = {}", xs.len()));
            }
            cases += 1;
        }
    }
    outcome(true, format!("{cases} exact matches with nearest-neighbour q"))
}

// 4. The d = 4 boson list with d_plus = 4.

type Shape = Vec<Vec<u32>>;

fn forward_indices_upto(d: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for v in &out {
            for n in 0..=max {
                let mut w = v.clone();
                w.push(n);
                if w.iter().sum::<u32>() <= max {
                    next.push(w);
                }
            }
        }
        out = next;
    }
    out
}

/// Brute force: multisets of forward-derivative factors of total dimension <= 4.
fn brute_force_1_1() -> BTreeSet<(Shape, u32)> {
    let alphas = forward_indices_upto(4, 3);
    let mut out = BTreeSet::new();
    fn rec(alphas: &[Vec<u32>], start: usize, cur: &mut Shape, dim: u32, out: &mut BTreeSet<(Shape, u32)>) {
        out.insert((cur.clone(), dim));
        for i in start..alphas.len() {
            let nd = dim + 1 + alphas[i].iter().sum::<u32>();
            if nd <= 4 {
                cur.push(alphas[i].clone());
                rec(alphas, i, cur, nd, out);
                cur.pop();
            }
        }
    }
    rec(&alphas, 0, &mut Vec::new(), 0, &mut out);
    out.into_iter().map(|(mut s, dim)| {
        s.sort();
        (s, dim)
    }).collect()
}

fn e(i: usize) -> Vec<u32> {
    let mut v = vec![0; 4];
    v[i] += 1;
    v
}

fn add(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sorted(mut s: Shape) -> Shape {
    s.sort();
    s
}

fn criterion_4() -> Outcome {
    let table = SpeciesTable::single_boson(int(1));
    let keys = enumerate_v_plus(&table, 4, &int(4)).unwrap();
    let shape_of = |k: &MonomialKey| -> Shape { sorted(k.factors().iter().map(|(_, a)| a.forward_counts().to_vec()).collect()) };
    let mut relevant = BTreeSet::new();
    let mut marginal = BTreeSet::new();
    for k in &keys {
        match classify(k, &table, &int(4)) {
            Relevance::Relevant => relevant.insert(shape_of(k)),
            Relevance::Marginal => marginal.insert(shape_of(k)),
        };
    }
    let z = vec![0u32; 4];
    let mut listed_rel: BTreeSet<Shape> = BTreeSet::new();
    let mut listed_mar: BTreeSet<Shape> = BTreeSet::new();
    for p in 0..=3 {
        listed_rel.insert(vec![z.clone(); p]);
    }
    listed_mar.insert(vec![z.clone(); 4]);
    for i in 0..4 {
        listed_rel.insert(vec![e(i)]);
        listed_rel.insert(sorted(vec![z.clone(), e(i)]));
        listed_mar.insert(sorted(vec![z.clone(), z.clone(), e(i)]));
        for j in 0..4 {
            listed_rel.insert(vec![add(&e(i), &e(j))]);
            listed_mar.insert(sorted(vec![z.clone(), add(&e(i), &e(j))]));
            for k in 0..4 {
                listed_mar.insert(vec![add(&add(&e(i), &e(j)), &e(k))]);
            }
        }
    }
    let oracle = brute_force_1_1();
    let oracle_rel: BTreeSet<Shape> = oracle.iter().filter(|(_, d)| *d < 4).map(|(s, _)| s.clone()).collect();
    let oracle_mar: BTreeSet<Shape> = oracle.iter().filter(|(_, d)| *d == 4).map(|(s, _)| s.clone()).collect();
    let a = relevant == listed_rel;
    let b = relevant == oracle_rel && marginal == oracle_mar;
    let missing: BTreeSet<Shape> = marginal.difference(&listed_mar).cloned().collect();
    let gradient_pairs: BTreeSet<Shape> =
        (0..4).flat_map(|i| (0..4).map(move |j| sorted(vec![e(i), e(j)]))).collect();
    let c = keys.len() == 57;
    let detail = format!(
        "relevant partition {} ({} listed); enumeration vs brute force {} ({} + {}); total {} vs 57 {}; \
         the {} marginal monomials absent from the list are exactly nabla_i phi nabla_j phi: {}",
        if a { "matches" } else { "differs" },
        listed_rel.len(),
        if b { "agrees" } else { "differs" },
        relevant.len(),
        marginal.len(),
        keys.len(),
        if c { "ok" } else { "FAIL" },
        missing.len(),
        missing == gradient_pairs && listed_mar.is_subset(&marginal),
    );
    Outcome { pass: a && b && c, known: a && b && !c && missing == gradient_pairs, detail }
}

// 5 and 6. Randomised identities through the verify battery, 50 inputs each.

fn scenario_susy() -> Scenario {
    Scenario::from_value(json!({
        "geometry": {"d": 2, "L": 4, "N": 2},
        "species": [
            {"name": "phi", "conjugate": "phibar", "dimension": [1, 2]},
            {"name": "psi", "conjugate": "psibar", "statistics": "fermion", "dimension": [1, 2]}
        ],
        "d_plus": 2,
        "patch": {"radius": 4},
        "observables": {"a": [0, 0], "b": [1, 0]}
    }))
    .unwrap()
}

fn scenario_line() -> Scenario {
    Scenario::from_value(json!({
        "geometry": {"d": 1, "L": 4, "N": 2},
        "species": [{"name": "phi", "dimension": [1, 2]}],
        "d_plus": 3,
        "patch": {"radius": 5},
        "observables": {"a": [0], "b": [-1]}
    }))
    .unwrap()
}

fn battery() -> &'static Vec<(&'static str, Vec<CheckOutcome>)> {
    static RUNS: OnceLock<Vec<(&'static str, Vec<CheckOutcome>)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        vec![
            ("d=2 supersymmetric", run_checks(&scenario_susy(), 7, 50).unwrap()),
            ("d=1 boson", run_checks(&scenario_line(), 8, 50).unwrap()),
        ]
    })
}

fn report_checks(names: &[&str], need_all_runs: bool) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in names {
        let mut ran = 0;
        for (label, checks) in battery() {
            let Some(c) = checks.iter().find(|c| c.name == *name) else {
                pass = false;
                parts.push(format!("{name} missing in {label}"));
                continue;
            };
            if c.skipped {
                if need_all_runs {
                    pass = false;
                    parts.push(format!("{name} skipped in {label}"));
                }
                continue;
            }
            if !c.passed || c.trials < 50 {
                pass = false;
                parts.push(format!("{name} failed in {label}: {}", c.counterexample.clone().unwrap_or_default()));
            }
            ran += c.trials;
        }
        if ran == 0 {
            pass = false;
        }
        parts.push(format!("{name} {ran}"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_5() -> Outcome {
    report_checks(
        &[
            "composition",
            "idempotence",
            "additivity",
            "partition",
            "euclidean_covariance",
            "base_point_independence",
            "graded_projection",
            "graded_partition",
            "graded_composition",
            "graded_idempotence",
        ],
        true,
    )
}

fn criterion_6() -> Outcome {
    report_checks(&["supersymmetry", "conjugation_swap"], false)
}

// 7. Lattice Taylor polynomials.

fn hashed(seed: u64, signatures: Vec<Vec<usize>>) -> FnTestFunction<impl Fn(&[Arg]) -> Rational> {
    FnTestFunction {
        signatures,
        f: move |args: &[Arg]| {
            let mut h = DefaultHasher::new();
            seed.hash(&mut h);
            for (c, p) in args {
                c.hash(&mut h);
                p.coords().hash(&mut h);
            }
            int((h.finish() % 13) as i64 - 6)
        },
    }
}

fn all_args(sig: &[usize], window: &Rect) -> Vec<Vec<Arg>> {
    let pts = window.points();
    let mut out: Vec<Vec<Arg>> = vec![vec![]];
    for &c in sig {
        out = out
            .into_iter()
            .flat_map(|v| {
                pts.iter().map(move |p| {
                    let mut w = v.clone();
                    w.push((c, p.clone()));
                    w
                })
            })
            .collect();
    }
    out
}

fn agree(f: &dyn TestFunction, g: &dyn TestFunction, sigs: &[Vec<usize>], window: &Rect) -> Result<bool> {
    for sig in sigs {
        for args in all_args(sig, window) {
            if f.eval(&args)? != g.eval(&args)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn lemma_taylor(table: &SpeciesTable, d: usize, d_plus: &Rational, window: &Rect, seed: u64) -> Result<Option<String>> {
    let bar = enumerate_v_bar_plus(table, d, d_plus)?;
    let mut sigs: Vec<Vec<usize>> = bar.iter().map(|k| k.signature()).collect();
    sigs.sort();
    sigs.dedup();
    let mut rng = seeded(seed);
    // Uniqueness in (i): the derivative map is the identity on the binomial basis.
    let a0 = Point::origin(d);
    for m in &bar {
        for mp in &bar {
            let v = key_derivative_at(&Binomial::new(mp.clone(), a0.clone())?, m, &a0)?;
            if v != if m == mp { int(1) } else { int(0) } {
                return Ok(Some(format!("nabla^m b_m' is not the identity at {}", m.display(table))));
            }
        }
    }
    for trial in 0..8 {
        let a = Point::new(&(0..d).map(|_| rng.gen_range(-1..=1)).collect::<Vec<_>>());
        let g = hashed(seed * 100 + trial, sigs.clone());
        let tay = taylor(&g, &a, table, d_plus)?;
        for m in &bar {
            if key_derivative_at(&g, m, &a)? != key_derivative_at(&tay, m, &a)? {
                return Ok(Some(format!("(i) fails for {}", m.display(table))));
            }
        }
        let sg = Symmetrised { inner: &g, table };
        let lhs = taylor(&sg, &a, table, d_plus)?;
        let rhs = Symmetrised { inner: tay.clone(), table };
        if !agree(&lhs, &rhs, &sigs, window)? {
            return Ok(Some(format!("(ii) fails at base {a}")));
        }
        let b = Point::new(&(0..d).map(|_| rng.gen_range(-2..=2)).collect::<Vec<_>>());
        let p = BinomialCombination {
            base: b,
            terms: bar
                .iter()
                .filter_map(|k| rng.gen_bool(0.6).then(|| (k.clone(), small_rational(&mut rng))))
                .collect(),
        };
        let tp = taylor(&p, &a, table, d_plus)?;
        if !agree(&tp, &p, &sigs, window)? {
            return Ok(Some(format!("(iii) fails at base {a}")));
        }
    }
    Ok(None)
}

fn remainder_instances(n: usize) -> Result<(usize, usize, Option<String>)> {
    let configs: Vec<(SpeciesTable, usize, Rational, Vec<Vec<usize>>, i64)> = vec![
        (SpeciesTable::single_boson(rat(1, 2)), 1, rat(7, 2), vec![vec![0], vec![0, 0], vec![0, 0, 0]], 3),
        (SpeciesTable::single_boson(int(1)), 2, int(3), vec![vec![0], vec![0, 0]], 2),
    ];
    let mut rng = seeded(77);
    let mut positive = 0;
    for i in 0..n {
        let (table, d, dp, comps_list, spread) = &configs[i % configs.len()];
        let comps = &comps_list[rng.gen_range(0..comps_list.len())];
        let s = lattice_loc::testfn::taylor_degree(comps, table, dp)?;
        assert!(s <= 3);
        let t = rng.gen_range(0..=s);
        let p = comps.len();
        let mut beta = vec![MultiIndex::zero(*d); p];
        for _ in 0..t {
            let k = rng.gen_range(0..p);
            let axis = rng.gen_range(0..*d);
            let e = if rng.gen_bool(0.5) { UnitVector::plus(axis) } else { UnitVector::minus(axis) };
            beta[k] = beta[k].with_added(e, 1);
        }
        let a = Point::new(&(0..*d).map(|_| rng.gen_range(-1..=1)).collect::<Vec<_>>());
        let z: Vec<Point> = beta
            .iter()
            .map(|bk| {
                let c: Vec<i64> = (0..*d)
                    .map(|ax| a.coords()[ax] + i64::from(bk.get(UnitVector::minus(ax))) + rng.gen_range(0..=*spread))
                    .collect();
                Point::new(&c)
            })
            .collect();
        let g = hashed(1000 + i as u64, vec![comps.clone()]);
        let r = taylor_remainder_bound_check(&g, &a, comps, &z, &beta, table, dp)?;
        if !r.holds() {
            return Ok((i + 1, positive, Some(format!("lhs {} > rhs {} at a = {a}, z = {z:?}", r.lhs, r.rhs))));
        }
        if !r.lhs.is_zero() {
            positive += 1;
        }
    }
    Ok((n, positive, None))
}

fn binom_u128(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn vandermonde_all() -> (usize, Option<String>) {
    let mut count = 0;
    for s in 0..=4u32 {
        for len in 1..=3usize {
            for y in forward_indices_upto(len, 10) {
                let ysum: u32 = y.iter().sum();
                for zp in 0..=(10 - ysum) {
                    let yv: Vec<u64> = y.iter().map(|&v| u64::from(v)).collect();
                    let (lhs, rhs) = vandermonde_check(&yv, u64::from(zp), s);
                    let oracle = BigInt::from(binom_u128(u128::from(ysum + zp), u128::from(s) + 1));
                    count += 1;
                    if lhs != rhs || rhs != oracle {
                        return (count, Some(format!("y = {y:?}, z_p = {zp}, s = {s}: {lhs} vs {rhs}")));
                    }
                }
            }
        }
    }
    (count, None)
}

/// Two cases outside the proven statement: a backward derivative at `z = a`,
/// and the sup taken over `|alpha|_inf = s + 1` only. Both break the bound.
fn remainder_counterexamples() -> Result<bool> {
    let table = SpeciesTable::single_boson(rat(1, 2));
    let square = FnTestFunction { signatures: vec![vec![0]], f: |args: &[Arg]| int(args[0].1.coords()[0].pow(2)) };
    let a = Point::new(&[0]);
    let back = MultiIndex::unit(1, UnitVector::minus(0));
    let rejected = taylor_remainder_bound_check(&square, &a, &[0], std::slice::from_ref(&a), std::slice::from_ref(&back), &table, &int(2)).is_err();
    let tay = taylor(&square, &a, &table, &int(2))?;
    let lhs = slot_derivative(&square, &[0], std::slice::from_ref(&back), std::slice::from_ref(&a))? - slot_derivative(&tay, &[0], &[back], std::slice::from_ref(&a))?;
    let backward_breaks = lhs.abs() > int(0);

    let table2 = SpeciesTable::single_boson(int(1));
    let xy = FnTestFunction {
        signatures: vec![vec![0]],
        f: |args: &[Arg]| int(args[0].1.coords()[0] * args[0].1.coords()[1]),
    };
    let o = Point::origin(2);
    let z = Point::new(&[1, 1]);
    let r = taylor_remainder_bound_check(&xy, &o, &[0], std::slice::from_ref(&z), &[MultiIndex::zero(2)], &table2, &int(2))?;
    let mut sup_inf = Rational::zero();
    for y in Rect::new(Point::new(&[-1, -1]), z.clone()).points() {
        for c in forward_indices_upto(2, 4) {
            if c.iter().copied().max() == Some(2) {
                let v = slot_derivative(&xy, &[0], &[MultiIndex::forward(&c)], std::slice::from_ref(&y))?;
                if v.abs() > sup_inf {
                    sup_inf = v.abs();
                }
            }
        }
    }
    let inf_breaks = r.lhs > sup_inf * int(1);
    Ok(rejected && backward_breaks && r.holds() && inf_breaks)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let lemma_cfgs: Vec<(&str, SpeciesTable, usize, Rational, Rect)> = vec![
        ("1-d", SpeciesTable::single_boson(rat(1, 2)), 1, int(2), Rect::cube(1, -2, 2)),
        (
            "1-d with fermions",
            SpeciesTable::new(vec![
                boson("phi", rat(1, 2)),
                SpeciesSpec::complex("psi", "psibar", Statistics::Fermion, rat(1, 2)),
            ])
            .unwrap(),
            1,
            rat(3, 2),
            Rect::cube(1, -2, 2),
        ),
        ("2-d", SpeciesTable::single_boson(int(1)), 2, int(3), Rect::cube(2, -1, 1)),
    ];
    for (i, (name, table, d, dp, window)) in lemma_cfgs.iter().enumerate() {
        match lemma_taylor(table, *d, dp, window, 31 + i as u64) {
            Ok(None) => parts.push(format!("Tay (i)-(iii) on {name} window")),
            Ok(Some(bad)) => return outcome(false, format!("{name}: {bad}")),
            Err(e) => return outcome(false, format!("{name}: {e}")),
        }
    }
    match remainder_instances(500) {
        Ok((n, pos, None)) => parts.push(format!("remainder bound on {n} instances ({pos} with nonzero remainder)")),
        Ok((_, _, Some(bad))) => return outcome(false, format!("remainder: {bad}")),
        Err(e) => return outcome(false, format!("remainder: {e}")),
    }
    match vandermonde_all() {
        (n, None) => parts.push(format!("Vandermonde on {n} cases")),
        (_, Some(bad)) => return outcome(false, format!("Vandermonde: {bad}")),
    }
    match remainder_counterexamples() {
        Ok(true) => parts.push("both out-of-hypothesis counterexamples reproduce".into()),
        Ok(false) => return outcome(false, "counterexample controls did not behave as documented"),
        Err(e) => return outcome(false, format!("controls: {e}")),
    }
    within(Duration::from_secs(300), start, outcome(true, parts.join(", ")))
}

// 8. Contraction of 1 - loc across scales.

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let table = SpeciesTable::single_boson(int(1));
    let cfg = ContractionConfig {
        table: table.clone(),
        d: 2,
        d_plus: int(2),
        j: 1,
        ls: vec![2, 3, 4, 5, 8],
        strategy: PHatStrategy::Symmetrise,
        a: 3,
    };
    let rep = match contraction_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let dpp = d_plus_prime(&table, 2, &int(2)).unwrap();
    let slope_ok = rep.slope.is_some_and(|s| s <= -2.5);
    let pass = slope_ok && rep.local_ratio_zero && !rep.vacuous && dpp == int(3) && rep.rows.len() == 5;
    let detail = format!(
        "slope {} (need <= -2.5), d_plus' = {dpp}, local ratio exactly zero: {}, vacuous: {}",
        rep.slope.map_or("n/a".into(), |s| format!("{s:.4}")),
        rep.local_ratio_zero,
        rep.vacuous
    );
    within(Duration::from_secs(600), start, outcome(pass, detail))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("duality", criterion_1),
        ("defining property", criterion_2),
        ("nearest-neighbour example", criterion_3),
        ("d=4 monomial list", criterion_4),
        ("operator identities", criterion_5),
        ("supersymmetry commutation", criterion_6),
        ("lattice Taylor", criterion_7),
        ("contraction", criterion_8),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} [{name}]: {status} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
        if o.pass {
            passed += 1;
        } else if !o.known {
            unexpected += 1;
        }
    }
    println!("acceptance: {passed}/8 pass, {} known failure(s), {unexpected} unexpected", 8 - passed - unexpected);
    if unexpected > 0 {
        std::process::exit(1);
    }
}
