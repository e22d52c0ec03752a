use std::collections::BTreeSet;

use super::*;
use crate::lattice::{MultiIndex, SignedPermutation, UnitVector};
use crate::scalar::{int, rat};

fn fwd(counts: &[u32]) -> MultiIndex {
    MultiIndex::forward(counts)
}

/// Independent count: multisets of per-factor forward derivative vectors for
/// one boson of dimension 1 in `d` dimensions with `[M] <= d_plus`.
fn brute_force_boson_count(d: usize, d_plus: u32) -> usize {
    let mut alphas: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for a in &alphas {
            for c in 0..=d_plus {
                let mut b = a.clone();
                b.push(c);
                if b.iter().sum::<u32>() <= d_plus {
                    next.push(b);
                }
            }
        }
        alphas = next;
    }
    let mut seen: BTreeSet<Vec<Vec<u32>>> = BTreeSet::new();
    let mut frontier: Vec<Vec<Vec<u32>>> = vec![vec![]];
    while let Some(seq) = frontier.pop() {
        let dim: u32 = seq.iter().map(|a| 1 + a.iter().sum::<u32>()).sum();
        if dim > d_plus {
            continue;
        }
        let mut sorted = seq.clone();
        sorted.sort();
        if !seen.insert(sorted) {
            continue;
        }
        for a in &alphas {
            let mut s = seq.clone();
            s.push(a.clone());
            frontier.push(s);
        }
    }
    seen.len()
}

#[test]
fn enumeration_matches_brute_force() {
    for (d, dp) in [(1, 3), (2, 4), (3, 3), (4, 4)] {
        let table = SpeciesTable::single_boson(int(1));
        let keys = enumerate_v_plus(&table, d, &int(dp as i64)).unwrap();
        assert_eq!(keys.len(), brute_force_boson_count(d, dp), "d={d} d_plus={dp}");
    }
}

#[test]
fn four_dimensional_counts() {
    let table = SpeciesTable::single_boson(int(1));
    let keys = enumerate_v_plus(&table, 4, &int(4)).unwrap();
    let relevant = keys
        .iter()
        .filter(|k| classify(k, &table, &int(4)) == Relevance::Relevant)
        .count();
    assert_eq!(relevant, 1 + 1 + 1 + 1 + 4 + 10 + 4);
    // phi^4, D^3 phi, phi D^2 phi, phi^2 D phi and (D phi)(D phi).
    assert_eq!(keys.len() - relevant, 1 + 20 + 10 + 4 + 10);
}

#[test]
fn zero_threshold_gives_only_the_constant() {
    let table = SpeciesTable::single_boson(int(1));
    assert_eq!(enumerate_v_plus(&table, 2, &int(0)).unwrap(), vec![MonomialKey::empty()]);
}

#[test]
fn fermion_factors_do_not_repeat() {
    let table = SpeciesTable::supersymmetric(int(1));
    let psi = table.index("psi").unwrap();
    let a = fwd(&[0]);
    assert!(MonomialKey::canonical(&table, vec![(psi, a.clone()), (psi, a.clone())]).is_none());
    let (s, _) = MonomialKey::canonical(&table, vec![(psi, fwd(&[1])), (psi, a)]).unwrap();
    assert_eq!(s, -1);
    for k in enumerate_v_plus(&table, 1, &int(3)).unwrap() {
        assert!(k.is_canonical(&table));
    }
}

#[test]
fn symmetrised_second_derivative() {
    let table = SpeciesTable::single_boson(int(1));
    let key = MonomialKey(vec![(0, fwd(&[0])), (0, fwd(&[2]))]);
    let p = symmetrise_p(&key, 1, &table).unwrap();
    let mut back = MultiIndex::zero(1);
    back.set(UnitVector::minus(0), 2);
    let mut expected = FieldPolynomial::zero();
    expected.add_term(key.clone(), rat(1, 2));
    expected.add_term(MonomialKey(vec![(0, fwd(&[0])), (0, back)]), rat(1, 2));
    assert_eq!(p, expected);
}

#[test]
fn two_representatives_agree_modulo_higher_dimension() {
    let table = SpeciesTable::single_boson(int(1));
    let key = MonomialKey(vec![(0, fwd(&[0])), (0, fwd(&[2]))]);
    let p = symmetrise_p(&key, 1, &table).unwrap();
    let lap = laplacian_p(&key, 1, &table).unwrap();
    let mut mixed = MultiIndex::zero(1);
    mixed.set(UnitVector::plus(0), 1);
    mixed.set(UnitVector::minus(0), 1);
    assert_eq!(lap, FieldPolynomial::from_factors(&table, vec![(0, fwd(&[0])), (0, mixed)], int(-1)));
    assert!(vanishes_mod_higher(&p.sub(&lap), &int(4), &table).unwrap());
    assert!(!vanishes_mod_higher(&p, &int(4), &table).unwrap());
}

#[test]
fn normal_form_is_idempotent_and_kills_the_relation() {
    let table = SpeciesTable::single_boson(int(1));
    let e = UnitVector::plus(0);
    let mixed = MultiIndex::unit(1, e).with_added(e.reversed(), 1);
    let rel = FieldPolynomial::from_factors(&table, vec![(0, mixed.clone())], int(1))
        .add(&FieldPolynomial::from_factors(&table, vec![(0, MultiIndex::unit(1, e))], int(1)))
        .add(&FieldPolynomial::from_factors(&table, vec![(0, MultiIndex::unit(1, e.reversed()))], int(1)));
    assert!(r1_normal_form(&rel, &table).is_zero());
    let heavy = FieldPolynomial::from_factors(&table, vec![(0, mixed.add(&mixed)), (0, mixed)], int(3));
    let nf = r1_normal_form(&heavy, &table);
    assert_eq!(r1_normal_form(&nf, &table), nf);
    assert!(!nf.is_zero());
}

#[test]
fn phat_tables_validate() {
    let configs = vec![
        (SpeciesTable::single_boson(int(1)), 4usize, int(4)),
        (SpeciesTable::supersymmetric(rat(1, 2)), 2, int(2)),
        (
            SpeciesTable::new(vec![
                SpeciesSpec::real_boson("phi", int(1)),
                SpeciesSpec::real_boson("chi", rat(3, 2)),
            ])
            .unwrap(),
            2,
            int(4),
        ),
    ];
    for (table, d, dp) in configs {
        for strategy in [PHatStrategy::Symmetrise, PHatStrategy::Laplacian] {
            let t = PHatTable::build(&table, d, &dp, strategy).unwrap();
            assert_eq!(t.len(), enumerate_v_plus(&table, d, &dp).unwrap().len());
        }
    }
}

#[test]
fn corrupted_table_fails_covariance() {
    let table = SpeciesTable::single_boson(int(1));
    let key = MonomialKey(vec![(0, fwd(&[1, 0]))]);
    let bad = FieldPolynomial::monomial(key.clone());
    let err = PHatTable::build_with_overrides(&table, 2, &int(3), PHatStrategy::Symmetrise, &[(key, bad)])
        .unwrap_err();
    match err {
        crate::Error::Construction { condition, monomial, .. } => {
            assert_eq!(condition, "i");
            assert_eq!(monomial, "D+1phi");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn basis_closed_under_axis_permutations() {
    let table = SpeciesTable::new(vec![
        SpeciesSpec::real_boson("phi", int(1)),
        SpeciesSpec::complex("psi", "psibar", Statistics::Fermion, int(1)),
    ])
    .unwrap();
    let keys = enumerate_v_plus(&table, 3, &int(3)).unwrap();
    let set: BTreeSet<_> = keys.iter().cloned().collect();
    for theta in SignedPermutation::axis_permutations(3) {
        for k in &keys {
            let (_, moved) = sigma_act_key(&theta, k, &table).unwrap();
            assert!(set.contains(&moved));
        }
    }
}

#[test]
fn bar_set_contains_orderings() {
    let table = SpeciesTable::single_boson(int(1));
    let bar = enumerate_v_bar_plus(&table, 1, &int(4)).unwrap();
    // degree 2 with |a1|+|a2| <= 2 gives 6 ordered pairs, degree 3 gives 4, degree 4 gives 1.
    let count = |deg: usize| bar.iter().filter(|k| k.degree() == deg).count();
    assert_eq!((count(0), count(1), count(2), count(3), count(4)), (1, 4, 6, 4, 1));
}

#[test]
fn key_json_round_trip() {
    let table = SpeciesTable::supersymmetric(int(1));
    for k in enumerate_v_plus(&table, 2, &int(3)).unwrap() {
        let (s, back) = MonomialKey::from_json(&k.to_json(&table), &table, 2, "k").unwrap();
        assert_eq!((s, back), (1, k));
    }
}
