//! Seeded generators for random functionals, points and automorphisms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functionals::Functional;
use crate::lattice::{Automorphism, Point, SignedPermutation};
use crate::monomials::SpeciesTable;
use crate::scalar::{rat, Rational};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small nonzero rational `n / d` with `|n| <= 9`, `1 <= d <= 4`.
pub fn small_rational(rng: &mut SeededRng) -> Rational {
    let n = loop {
        let n: i64 = rng.gen_range(-9..=9);
        if n != 0 {
            break n;
        }
    };
    rat(n, rng.gen_range(1..=4))
}

/// Shape of the random functionals: where fields sit and how many.
#[derive(Debug, Clone)]
pub struct FunctionalShape {
    pub points: Vec<Point>,
    pub components: Vec<usize>,
    pub max_degree: usize,
    pub max_terms: usize,
}

impl FunctionalShape {
    pub fn new(table: &SpeciesTable, points: Vec<Point>, max_degree: usize, max_terms: usize) -> Self {
        FunctionalShape { points, components: (0..table.len()).collect(), max_degree, max_terms }
    }
}

/// A random polynomial functional with terms of degree `0..=max_degree`.
pub fn random_functional(rng: &mut SeededRng, table: &SpeciesTable, shape: &FunctionalShape) -> Functional {
    let mut f = Functional::zero();
    let n = rng.gen_range(1..=shape.max_terms.max(1));
    for _ in 0..n {
        let deg = rng.gen_range(0..=shape.max_degree);
        let slots = (0..deg)
            .map(|_| {
                let c = *shape.components.choose(rng).expect("components");
                let x = shape.points.choose(rng).expect("points").clone();
                (c, x)
            })
            .collect();
        f.add_term(table, slots, small_rational(rng));
    }
    f
}

/// A random signed permutation of `d` axes.
pub fn random_signed_permutation(rng: &mut SeededRng, d: usize) -> SignedPermutation {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let neg = (0..d).map(|_| rng.gen_bool(0.5)).collect();
    SignedPermutation::new(perm, neg).expect("valid permutation")
}

/// A random translation by at most `max_shift` per axis.
pub fn random_translation(rng: &mut SeededRng, d: usize, max_shift: i64) -> Automorphism {
    let t: Vec<i64> = (0..d).map(|_| rng.gen_range(-max_shift..=max_shift)).collect();
    Automorphism::translation(Point::new(&t))
}

/// A nonempty random subset of `points`.
pub fn random_subset(rng: &mut SeededRng, points: &[Point], max_len: usize) -> Vec<Point> {
    let n = rng.gen_range(1..=max_len.min(points.len()).max(1));
    let mut v: Vec<Point> = points.choose_multiple(rng, n).cloned().collect();
    v.sort();
    v
}
