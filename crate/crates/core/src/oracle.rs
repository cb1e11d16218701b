//! Ground-truth engines: exhaustive enumeration of failure orderings and
//! Monte Carlo simulation of the system lifetime.
//!
//! Monte Carlo runs are split into batches of `batch_size` samples; batch
//! `b` draws from substream `b` of the generator seeded with `seed`. Counts
//! are integers merged by summation, so a report depends only on
//! `(seed, samples, batch_size)` and not on thread scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lifetimes::{LifetimeModel, OrderProbabilities, Sampler, MAX_ORDER_COMPONENTS};
use crate::perm::{factorial, Permutations};
use crate::signature::SignatureVector;
use crate::structure::{full_mask, PathSetSystem, StructureFunction, SubsetMask};

/// Largest size for enumeration with equally likely orderings.
pub const MAX_UNIFORM_ENUMERATION: usize = 10;
/// Largest size for Monte Carlo estimation of the quality table.
pub const MAX_QUALITY_SIMULATION: usize = 12;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_BATCH_SIZE: usize = 1 << 16;

/// Ordering law used by the enumeration oracle.
#[derive(Clone, Copy, Debug)]
pub enum OrderingLaw<'a> {
    Uniform,
    Probabilities(&'a OrderProbabilities),
}

/// `p_k = Σ_σ Pr(σ) [φ({σ(k),…,σ(n)}) - φ({σ(k+1),…,σ(n)})]` by enumeration.
///
/// With equally likely orderings this is `n_k / n!`, where `n_k` counts the
/// orderings in which the `k`th failure brings the system down.
pub fn permutation_signature(
    phi: &StructureFunction,
    law: OrderingLaw<'_>,
) -> Result<SignatureVector> {
    phi.require_semicoherent()?;
    let n = phi.n();
    match law {
        OrderingLaw::Uniform => {
            if n > MAX_UNIFORM_ENUMERATION {
                return Err(Error::InvalidArgument(format!(
                    "enumerating {n}! orderings is too costly (limit n = {MAX_UNIFORM_ENUMERATION}); \
                     use Monte Carlo simulation"
                )));
            }
            let mut counts = vec![0u64; n];
            for sigma in Permutations::new(n) {
                counts[failure_rank(phi, &sigma) - 1] += 1;
            }
            let total = factorial(n) as f64;
            Ok(SignatureVector::new(
                counts.iter().map(|&c| c as f64 / total).collect(),
            ))
        }
        OrderingLaw::Probabilities(probs) => {
            if probs.n() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: probs.n(),
                });
            }
            if n > MAX_ORDER_COMPONENTS {
                return Err(Error::InvalidArgument(format!(
                    "ordering probabilities support at most {MAX_ORDER_COMPONENTS} components; \
                     use Monte Carlo simulation"
                )));
            }
            let mut p = vec![0.0; n];
            for (sigma, prob) in probs.iter() {
                // survivors after the first k-1 failures: {σ(k), …, σ(n)}
                let mut alive = full_mask(n);
                let mut before = phi.value(alive);
                for (k, &c) in sigma.iter().enumerate() {
                    alive &= !(1 << c);
                    let after = phi.value(alive);
                    let jump = f64::from(u8::from(before)) - f64::from(u8::from(after));
                    p[k] += prob * jump;
                    before = after;
                }
            }
            Ok(SignatureVector::new(p))
        }
    }
}

/// Rank of the failure that brings the system down when components fail in order `sigma`.
fn failure_rank(phi: &StructureFunction, sigma: &[usize]) -> usize {
    let mut alive = full_mask(phi.n());
    for (k, &c) in sigma.iter().enumerate() {
        alive &= !(1 << c);
        if !phi.value(alive) {
            return k + 1;
        }
    }
    unreachable!("semicoherent structure fails once every component has failed")
}

/// How the system lifetime is evaluated per sample.
#[derive(Clone, Copy, Debug)]
pub enum LifeFunction<'a> {
    /// `T = max_j min_{i ∈ P_j} X_i`.
    Paths(&'a PathSetSystem),
    /// Remove components in failure order until `φ` drops to 0.
    Table(&'a StructureFunction),
}

impl<'a> From<&'a PathSetSystem> for LifeFunction<'a> {
    fn from(p: &'a PathSetSystem) -> Self {
        LifeFunction::Paths(p)
    }
}

impl<'a> From<&'a StructureFunction> for LifeFunction<'a> {
    fn from(phi: &'a StructureFunction) -> Self {
        LifeFunction::Table(phi)
    }
}

impl LifeFunction<'_> {
    fn n(&self) -> usize {
        match self {
            LifeFunction::Paths(p) => p.n(),
            LifeFunction::Table(phi) => phi.n(),
        }
    }

    /// `k` such that `T = X_{k:n}`; equal lifetimes are ordered by component index.
    fn order_statistic_rank(&self, x: &[f64], order: &mut [usize]) -> usize {
        match self {
            LifeFunction::Paths(paths) => {
                let (t, owner) = paths.lifetime(x);
                1 + x
                    .iter()
                    .enumerate()
                    .filter(|&(j, &v)| v < t || (v == t && j < owner))
                    .count()
            }
            LifeFunction::Table(phi) => {
                sort_by_lifetime(x, order);
                failure_rank(phi, order)
            }
        }
    }
}

fn sort_by_lifetime(x: &[f64], order: &mut [usize]) {
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

impl MonteCarloConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        MonteCarloConfig {
            samples,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(())
    }

    fn batches(&self) -> impl IndexedParallelIterator<Item = (u64, usize)> {
        let samples = self.samples;
        let size = self.batch_size;
        let count = samples.div_ceil(size);
        (0..count)
            .into_par_iter()
            .map(move |b| (b as u64, size.min(samples - b * size)))
    }
}

/// Runs `visit` on every sampled row and merges the per-batch integer tallies.
fn tally(
    model: &LifetimeModel,
    config: &MonteCarloConfig,
    cells: usize,
    visit: impl Fn(&[f64], &mut [usize], &mut [u64]) + Sync,
) -> Result<Vec<u64>> {
    config.validate()?;
    let n = model.n();
    // fail early, outside the parallel section
    Sampler::new(model, config.seed, 0)?;
    let counts = config
        .batches()
        .map(|(stream, len)| {
            let mut sampler = Sampler::new(model, config.seed, stream).expect("samplable model");
            let mut row = vec![0.0; n];
            let mut scratch = vec![0usize; n];
            let mut counts = vec![0u64; cells];
            for _ in 0..len {
                sampler.fill(&mut row);
                visit(&row, &mut scratch, &mut counts);
            }
            counts
        })
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

fn standard_error(p: f64, samples: usize) -> f64 {
    (p * (1.0 - p) / samples as f64).sqrt()
}

/// Empirical signature with per-entry standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl SimulationReport {
    fn from_counts(counts: Vec<u64>, config: &MonteCarloConfig) -> Self {
        let total = config.samples as f64;
        let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let standard_errors = estimates
            .iter()
            .map(|&p| standard_error(p, config.samples))
            .collect();
        SimulationReport {
            estimates,
            standard_errors,
            counts,
            samples: config.samples,
            seed: config.seed,
            batch_size: config.batch_size,
        }
    }

    /// Largest `|p̂_k - p_k| / SE_k`; entries with zero standard error must match exactly.
    pub fn max_z_score(&self, exact: &[f64]) -> f64 {
        self.estimates
            .iter()
            .zip(&self.standard_errors)
            .zip(exact)
            .map(|((est, se), p)| {
                let d = (est - p).abs();
                if *se > 0.0 {
                    d / se
                } else if d <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Estimates `p_k = Pr(T = X_{k:n})` by simulating the component lifetimes.
pub fn monte_carlo_signature<'a>(
    system: impl Into<LifeFunction<'a>>,
    model: &LifetimeModel,
    config: &MonteCarloConfig,
) -> Result<SimulationReport> {
    let system = system.into();
    let n = system.n();
    if model.n() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: model.n(),
        });
    }
    if let LifeFunction::Table(phi) = system {
        phi.require_semicoherent()?;
    }
    let counts = tally(model, config, n, |row, scratch, counts| {
        counts[system.order_statistic_rank(row, scratch) - 1] += 1;
    })?;
    Ok(SimulationReport::from_counts(counts, config))
}

/// Empirical relative quality table `q̂(S)` with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityEstimate {
    pub n: usize,
    pub estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
}

impl QualityEstimate {
    /// Level sums of the empirical frequencies for `k = 1..=n`.
    pub fn level_count_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n + 1];
        for (m, &c) in self.counts.iter().enumerate() {
            sums[(m as u32).count_ones() as usize] += c;
        }
        sums.remove(0);
        sums
    }
}

/// Each sample credits, for every `k`, the set of its `k` longest-lived components.
pub fn monte_carlo_quality(
    model: &LifetimeModel,
    config: &MonteCarloConfig,
) -> Result<QualityEstimate> {
    let n = model.n();
    if n > MAX_QUALITY_SIMULATION {
        return Err(Error::InvalidArgument(format!(
            "quality simulation supports at most {MAX_QUALITY_SIMULATION} components, got {n}"
        )));
    }
    let counts = tally(model, config, 1 << n, |row, order, counts| {
        sort_by_lifetime(row, order);
        let mut top = 0u32;
        counts[0] += 1;
        for &c in order.iter().rev() {
            top |= 1 << c;
            counts[top as usize] += 1;
        }
    })?;
    let estimates: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / config.samples as f64)
        .collect();
    let standard_errors = estimates
        .iter()
        .map(|&p| standard_error(p, config.samples))
        .collect();
    Ok(QualityEstimate {
        n,
        estimates,
        standard_errors,
        counts,
        samples: config.samples,
        seed: config.seed,
    })
}

/// Frequency with which the shortest-lived component belongs to `s`.
pub fn monte_carlo_shortest_lifetime(
    model: &LifetimeModel,
    s: SubsetMask,
    config: &MonteCarloConfig,
) -> Result<(f64, f64)> {
    if s.n() != model.n() {
        return Err(Error::ArityMismatch {
            expected: model.n(),
            got: s.n(),
        });
    }
    let counts = tally(model, config, 1, |row, _, counts| {
        let mut argmin = 0;
        for (i, &v) in row.iter().enumerate() {
            if v < row[argmin] {
                argmin = i;
            }
        }
        if s.contains(argmin) {
            counts[0] += 1;
        }
    })?;
    let p = counts[0] as f64 / config.samples as f64;
    Ok((p, standard_error(p, config.samples)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetimes::Marginal;

    fn fig() -> StructureFunction {
        StructureFunction::from_fn(3, |m| m & 1 == 1 && m & 6 != 0).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let p = permutation_signature(&fig(), OrderingLaw::Uniform).unwrap();
        assert_eq!(p.values(), &[1.0 / 3.0, 2.0 / 3.0, 0.0]);
        let p = permutation_signature(&StructureFunction::bridge(), OrderingLaw::Uniform).unwrap();
        assert_eq!(p.values(), &[0.0, 0.2, 0.6, 0.2, 0.0]);
        let skew = OrderProbabilities::new(
            3,
            &[(vec![1, 2, 3], 0.5), (vec![3, 2, 1], 0.25), (vec![2, 1, 3], 0.25)],
        )
        .unwrap();
        let kofn = StructureFunction::k_out_of_n(3, 2).unwrap();
        let p = permutation_signature(&kofn, OrderingLaw::Probabilities(&skew)).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn enumeration_limits() {
        let big = StructureFunction::series(11).unwrap();
        let err = permutation_signature(&big, OrderingLaw::Uniform).unwrap_err();
        assert!(err.to_string().contains("Monte Carlo"));
        let probs = OrderProbabilities::uniform(3).unwrap();
        assert!(permutation_signature(&StructureFunction::series(4).unwrap(), OrderingLaw::Probabilities(&probs)).is_err());
    }

    #[test]
    fn series_and_parallel_are_exact() {
        let model = LifetimeModel::independent(vec![
            Marginal::uniform(0.0, 2.0).unwrap(),
            Marginal::exponential(1.0).unwrap(),
            Marginal::lognormal(0.0, 1.0).unwrap(),
        ])
        .unwrap();
        let config = MonteCarloConfig::new(10_000, 7);
        let series = StructureFunction::series(3).unwrap();
        let paths = series.minimal_path_sets().unwrap();
        let r = monte_carlo_signature(&paths, &model, &config).unwrap();
        assert_eq!(r.estimates, vec![1.0, 0.0, 0.0]);
        let parallel = StructureFunction::parallel(3).unwrap();
        let r = monte_carlo_signature(&parallel, &model, &config).unwrap();
        assert_eq!(r.estimates, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn path_and_table_evaluation_agree() {
        let model = LifetimeModel::weibull(1.5, vec![1.0, 0.5, 2.0, 1.2, 0.8]).unwrap();
        let config = MonteCarloConfig {
            samples: 20_000,
            seed: 3,
            batch_size: 4096,
        };
        let bridge = StructureFunction::bridge();
        let paths = bridge.minimal_path_sets().unwrap();
        let a = monte_carlo_signature(&paths, &model, &config).unwrap();
        let b = monte_carlo_signature(&bridge, &model, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reproducible_and_batch_dependent_only_through_config() {
        let model = LifetimeModel::weibull(1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let config = MonteCarloConfig {
            samples: 50_000,
            seed: 11,
            batch_size: 1000,
        };
        let a = monte_carlo_signature(&fig(), &model, &config).unwrap();
        let b = monte_carlo_signature(&fig(), &model, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>(), 50_000);
        assert!((a.estimates.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_batch_matches_plain_sampling() {
        let model = LifetimeModel::weibull(1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let rows = crate::lifetimes::sample(&model, 5, 500).unwrap();
        let config = MonteCarloConfig {
            samples: 500,
            seed: 5,
            batch_size: 500,
        };
        let r = monte_carlo_shortest_lifetime(&model, SubsetMask::from_components(3, &[2]).unwrap(), &config).unwrap();
        let direct = rows
            .iter_rows()
            .filter(|x| x[1] < x[0] && x[1] < x[2])
            .count() as f64
            / 500.0;
        assert_eq!(r.0, direct);
    }

    #[test]
    fn quality_levels_are_exact() {
        let model = LifetimeModel::weibull(2.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let q = monte_carlo_quality(&model, &MonteCarloConfig::new(10_000, 1)).unwrap();
        assert!(q.level_count_sums().iter().all(|&c| c == 10_000));
        assert_eq!(q.estimates[0], 1.0);
        assert_eq!(q.estimates[15], 1.0);
    }

    #[test]
    fn refuses_unsamplable_models() {
        let model = LifetimeModel::iid(3).unwrap();
        let err = monte_carlo_signature(&fig(), &model, &MonteCarloConfig::new(10, 0)).unwrap_err();
        assert!(matches!(err, Error::NotSamplable(_)));
        let model = LifetimeModel::weibull(1.0, vec![1.0, 1.0]).unwrap();
        assert!(monte_carlo_signature(&fig(), &model, &MonteCarloConfig::new(10, 0)).is_err());
        assert!(monte_carlo_signature(&StructureFunction::series(2).unwrap(), &model, &MonteCarloConfig::new(0, 0)).is_err());
    }
}
