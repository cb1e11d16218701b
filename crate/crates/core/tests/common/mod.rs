#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigcore::structure::{PathSetSystem, StructureFunction, SubsetMask};
use sigcore::{LifetimeModel, Marginal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every semicoherent structure on `n` components (monotone, non-constant), for small `n`.
pub fn all_semicoherent(n: usize) -> Vec<StructureFunction> {
    let size = 1usize << n;
    assert!(size <= 16, "exhaustive enumeration only for n <= 4");
    (0u64..1 << size)
        .filter_map(|table| {
            let phi = StructureFunction::from_fn(n, |m| table >> m & 1 == 1).unwrap();
            phi.is_semicoherent().then_some(phi)
        })
        .collect()
}

/// Random semicoherent structure: the upward closure of a few random nonempty sets.
pub fn random_semicoherent(rng: &mut impl Rng, n: usize) -> StructureFunction {
    let full = (1u32 << n) - 1;
    let count = rng.random_range(1..=n + 2);
    let generators: Vec<u32> = (0..count).map(|_| rng.random_range(1..=full)).collect();
    StructureFunction::from_fn(n, |m| generators.iter().any(|&g| g & !m == 0)).unwrap()
}

pub fn random_path_system(rng: &mut impl Rng, n: usize) -> PathSetSystem {
    random_semicoherent(rng, n).minimal_path_sets().unwrap()
}

pub fn random_weibull(rng: &mut impl Rng, n: usize) -> (f64, Vec<f64>) {
    let alpha = rng.random_range(0.5..=3.0);
    let lambdas = (0..n).map(|_| rng.random_range(0.1..=10.0)).collect();
    (alpha, lambdas)
}

pub fn random_marginal(rng: &mut impl Rng) -> Marginal {
    match rng.random_range(0..4) {
        0 => Marginal::weibull(rng.random_range(0.5..=3.0), rng.random_range(0.1..=10.0)).unwrap(),
        1 => Marginal::exponential(rng.random_range(0.1..=10.0)).unwrap(),
        2 => {
            let a = rng.random_range(0.0..=1.0);
            Marginal::uniform(a, a + rng.random_range(0.2..=3.0)).unwrap()
        }
        _ => Marginal::lognormal(rng.random_range(-1.0..=1.0), rng.random_range(0.2..=1.5)).unwrap(),
    }
}

pub fn random_independent(rng: &mut impl Rng, n: usize) -> LifetimeModel {
    LifetimeModel::independent((0..n).map(|_| random_marginal(rng)).collect()).unwrap()
}

pub fn mask(n: usize, components: &[usize]) -> SubsetMask {
    SubsetMask::from_components(n, components).unwrap()
}

/// x1 AND (x2 OR x3).
pub fn series_parallel() -> StructureFunction {
    StructureFunction::from_path_sets(&PathSetSystem::from_components(3, &[vec![1, 2], vec![1, 3]]).unwrap())
}

/// The named systems of the oracle corpus.
pub fn corpus_systems() -> Vec<(&'static str, PathSetSystem)> {
    let ps = |n, p: &[&[usize]]| {
        PathSetSystem::from_components(n, &p.iter().map(|s| s.to_vec()).collect::<Vec<_>>()).unwrap()
    };
    vec![
        ("series", ps(3, &[&[1, 2, 3]])),
        ("parallel", ps(3, &[&[1], &[2], &[3]])),
        ("2-of-3", ps(3, &[&[1, 2], &[1, 3], &[2, 3]])),
        ("x1 and (x2 or x3)", ps(3, &[&[1, 2], &[1, 3]])),
        ("bridge", ps(5, &[&[1, 4], &[2, 5], &[1, 3, 5], &[2, 3, 4]])),
    ]
}

/// The lifetime models of the oracle corpus for `n` components.
pub fn corpus_models(n: usize) -> Vec<(&'static str, LifetimeModel)> {
    vec![
        (
            "iid Exp(1)",
            LifetimeModel::independent(vec![Marginal::exponential(1.0).unwrap(); n]).unwrap(),
        ),
        (
            "Weibull alpha=2",
            LifetimeModel::weibull(2.0, (1..=n).map(|i| i as f64).collect()).unwrap(),
        ),
        (
            "Uniform/Exponential mix",
            LifetimeModel::independent(
                (0..n)
                    .map(|i| {
                        if i % 2 == 0 {
                            Marginal::uniform(0.0, 2.0).unwrap()
                        } else {
                            Marginal::exponential(1.0 + i as f64 / 2.0).unwrap()
                        }
                    })
                    .collect(),
            )
            .unwrap(),
        ),
    ]
}
