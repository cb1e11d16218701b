//! Component lifetime models.
//!
//! Marginal laws expose density, distribution, survival and quantile
//! functions. Sampling uses inverse transforms driven by a ChaCha8 stream,
//! so draws are reproducible for a given `(seed, stream)` pair.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::perm;
use crate::structure::check_arity;

/// Largest component count for models given by ordering probabilities (8! entries).
pub const MAX_ORDER_COMPONENTS: usize = 8;

/// Tolerance on the total mass of ordering probabilities.
pub const ORDER_PROB_SUM_TOL: f64 = 1e-12;

/// Continuous marginal law on `[0, ∞)` with `F(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Marginal {
    /// `F(t) = 1 - exp(-(rate * t)^shape)`.
    Weibull { shape: f64, rate: f64 },
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Marginal {
    pub fn weibull(shape: f64, rate: f64) -> Result<Self> {
        positive("weibull shape", shape)?;
        positive("weibull rate", rate)?;
        Ok(Marginal::Weibull { shape, rate })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("exponential rate", rate)?;
        Ok(Marginal::Exponential { rate })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
            return Err(Error::InvalidModel(format!(
                "uniform bounds must satisfy 0 <= a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(Marginal::Uniform { a, b })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidModel(format!("lognormal mu must be finite, got {mu}")));
        }
        positive("lognormal sigma", sigma)?;
        Ok(Marginal::LogNormal { mu, sigma })
    }

    /// Re-checks parameters of a value built directly from the enum variants.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Weibull { shape, rate } => Self::weibull(shape, rate).map(drop),
            Marginal::Exponential { rate } => Self::exponential(rate).map(drop),
            Marginal::Uniform { a, b } => Self::uniform(a, b).map(drop),
            Marginal::LogNormal { mu, sigma } => Self::lognormal(mu, sigma).map(drop),
        }
    }

    fn as_weibull(&self) -> Option<(f64, f64)> {
        match *self {
            Marginal::Weibull { shape, rate } => Some((shape, rate)),
            Marginal::Exponential { rate } => Some((1.0, rate)),
            _ => None,
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if let Some((shape, rate)) = self.as_weibull() {
            if t == 0.0 {
                return if shape < 1.0 {
                    f64::INFINITY
                } else if shape == 1.0 {
                    rate
                } else {
                    0.0
                };
            }
            let z = (rate * t).powf(shape);
            return shape / t * z * (-z).exp();
        }
        match *self {
            Marginal::Uniform { a, b } => {
                if t >= a && t <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Marginal::LogNormal { mu, sigma } => {
                if t == 0.0 {
                    return 0.0;
                }
                let z = (t.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (t * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            _ => unreachable!(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if let Some((shape, rate)) = self.as_weibull() {
            return -(-(rate * t).powf(shape)).exp_m1();
        }
        match *self {
            Marginal::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Marginal::LogNormal { mu, sigma } => {
                0.5 * erfc(-(t.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
            }
            _ => unreachable!(),
        }
    }

    /// Survival function `1 - F(t)`, computed without cancellation where possible.
    pub fn sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if let Some((shape, rate)) = self.as_weibull() {
            return (-(rate * t).powf(shape)).exp();
        }
        match *self {
            Marginal::Uniform { a, b } => ((b - t) / (b - a)).clamp(0.0, 1.0),
            Marginal::LogNormal { mu, sigma } => {
                0.5 * erfc((t.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
            }
            _ => unreachable!(),
        }
    }

    /// Inverse distribution function on `[0, 1]`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "quantile level {p} outside [0, 1]"
            )));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        if let Some((shape, rate)) = self.as_weibull() {
            return (-(-p).ln_1p()).powf(1.0 / shape) / rate;
        }
        match *self {
            Marginal::Uniform { a, b } => a + p * (b - a),
            Marginal::LogNormal { mu, sigma } => {
                if p == 0.0 {
                    return 0.0;
                }
                if p == 1.0 {
                    return f64::INFINITY;
                }
                (mu + sigma * standard_normal_quantile(p)).exp()
            }
            _ => unreachable!(),
        }
    }

    /// Points where the density is not smooth, besides the origin.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Marginal::Uniform { a, b } if a > 0.0 => vec![a, b],
            Marginal::Uniform { b, .. } => vec![b],
            _ => Vec::new(),
        }
    }
}

fn standard_normal_quantile(p: f64) -> f64 {
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // erfc_inv is only accurate to a few ulps of its argument; polish with Newton steps
    for _ in 0..2 {
        let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density == 0.0 {
            break;
        }
        z -= (cdf - p) / density;
    }
    z
}

/// Ordering probabilities `Pr(X_σ(1) < ... < X_σ(n))` for every permutation `σ`.
///
/// Stored densely by lexicographic rank of `σ`; permutations not supplied
/// carry probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderProbabilities {
    n: usize,
    probs: Vec<f64>,
}

impl OrderProbabilities {
    /// Builds from `(σ, p)` pairs with `σ` listed as 1-based component indices.
    pub fn new(n: usize, entries: &[(Vec<usize>, f64)]) -> Result<Self> {
        check_arity(n)?;
        if n > MAX_ORDER_COMPONENTS {
            return Err(Error::InvalidModel(format!(
                "ordering probabilities support at most {MAX_ORDER_COMPONENTS} components, got {n}"
            )));
        }
        let mut probs = vec![0.0; perm::factorial(n)];
        let mut seen = vec![false; probs.len()];
        for (sigma, p) in entries {
            let zero_based = sigma
                .iter()
                .map(|&c| c.checked_sub(1))
                .collect::<Option<Vec<usize>>>()
                .filter(|s| perm::is_permutation(s, n))
                .ok_or_else(|| {
                    Error::InvalidModel(format!("{sigma:?} is not a permutation of 1..={n}"))
                })?;
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "probability {p} of ordering {sigma:?} is negative or not finite"
                )));
            }
            let r = perm::rank(&zero_based);
            if seen[r] {
                return Err(Error::InvalidModel(format!("ordering {sigma:?} listed twice")));
            }
            seen[r] = true;
            probs[r] = *p;
        }
        Self::from_dense(n, probs)
    }

    /// Builds from a dense vector indexed by lexicographic permutation rank.
    pub fn from_dense(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_arity(n)?;
        if n > MAX_ORDER_COMPONENTS {
            return Err(Error::InvalidModel(format!(
                "ordering probabilities support at most {MAX_ORDER_COMPONENTS} components, got {n}"
            )));
        }
        if probs.len() != perm::factorial(n) {
            return Err(Error::InvalidModel(format!(
                "expected {} ordering probabilities, got {}",
                perm::factorial(n),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidModel(format!(
                "ordering probability {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > ORDER_PROB_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "ordering probabilities sum to {total}, expected 1"
            )));
        }
        Ok(OrderProbabilities { n, probs })
    }

    /// Every ordering equally likely.
    pub fn uniform(n: usize) -> Result<Self> {
        check_arity(n)?;
        if n > MAX_ORDER_COMPONENTS {
            return Err(Error::InvalidModel(format!(
                "ordering probabilities support at most {MAX_ORDER_COMPONENTS} components, got {n}"
            )));
        }
        let count = perm::factorial(n);
        Self::from_dense(n, vec![1.0 / count as f64; count])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Probabilities indexed by lexicographic rank.
    pub fn dense(&self) -> &[f64] {
        &self.probs
    }

    /// `(σ, p)` pairs in lexicographic order of `σ` (0-based).
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        perm::Permutations::new(self.n).zip(self.probs.iter().copied())
    }
}

/// Joint law of the component lifetimes.
#[derive(Clone, Debug, PartialEq)]
pub enum LifetimeModel {
    /// Independent and identically distributed; the common law is irrelevant to `q`.
    Iid { n: usize },
    Exchangeable { n: usize },
    IndependentMarginals { marginals: Vec<Marginal> },
    /// Independent Weibull lifetimes sharing one shape.
    Weibull { alpha: f64, lambdas: Vec<f64> },
    OrderProbabilities(OrderProbabilities),
}

impl LifetimeModel {
    pub fn iid(n: usize) -> Result<Self> {
        check_arity(n)?;
        Ok(LifetimeModel::Iid { n })
    }

    pub fn exchangeable(n: usize) -> Result<Self> {
        check_arity(n)?;
        Ok(LifetimeModel::Exchangeable { n })
    }

    pub fn independent(marginals: Vec<Marginal>) -> Result<Self> {
        check_arity(marginals.len())?;
        for m in &marginals {
            m.validate()?;
        }
        Ok(LifetimeModel::IndependentMarginals { marginals })
    }

    pub fn weibull(alpha: f64, lambdas: Vec<f64>) -> Result<Self> {
        check_arity(lambdas.len())?;
        positive("weibull alpha", alpha)?;
        for &l in &lambdas {
            positive("weibull lambda", l)?;
        }
        Ok(LifetimeModel::Weibull { alpha, lambdas })
    }

    pub fn n(&self) -> usize {
        match self {
            LifetimeModel::Iid { n } | LifetimeModel::Exchangeable { n } => *n,
            LifetimeModel::IndependentMarginals { marginals } => marginals.len(),
            LifetimeModel::Weibull { lambdas, .. } => lambdas.len(),
            LifetimeModel::OrderProbabilities(o) => o.n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LifetimeModel::Iid { .. } => "iid",
            LifetimeModel::Exchangeable { .. } => "exchangeable",
            LifetimeModel::IndependentMarginals { .. } => "independent",
            LifetimeModel::Weibull { .. } => "weibull",
            LifetimeModel::OrderProbabilities(_) => "order_probs",
        }
    }

    /// Per-component marginals for the samplable model kinds.
    pub fn marginals(&self) -> Result<Vec<Marginal>> {
        match self {
            LifetimeModel::IndependentMarginals { marginals } => Ok(marginals.clone()),
            LifetimeModel::Weibull { alpha, lambdas } => Ok(lambdas
                .iter()
                .map(|&rate| Marginal::Weibull {
                    shape: *alpha,
                    rate,
                })
                .collect()),
            other => Err(Error::NotSamplable(other.kind())),
        }
    }
}

/// Row-major `count × n` matrix of lifetimes.
#[derive(Clone, Debug, PartialEq)]
pub struct LifetimeSamples {
    n: usize,
    data: Vec<f64>,
}

impl LifetimeSamples {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }
}

/// Inverse-transform sampler over independent marginals.
#[derive(Clone, Debug)]
pub struct Sampler {
    marginals: Vec<Marginal>,
    rng: ChaCha8Rng,
}

impl Sampler {
    /// Sampler on substream `stream` of the generator seeded with `seed`.
    pub fn new(model: &LifetimeModel, seed: u64, stream: u64) -> Result<Self> {
        let marginals = model.marginals()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Sampler { marginals, rng })
    }

    pub fn n(&self) -> usize {
        self.marginals.len()
    }

    pub fn fill(&mut self, row: &mut [f64]) {
        for (x, m) in row.iter_mut().zip(&self.marginals) {
            let u: f64 = self.rng.sample(Open01);
            *x = m.quantile_unchecked(u);
        }
    }
}

/// Draws `count` independent rows of component lifetimes from stream 0.
pub fn sample(model: &LifetimeModel, seed: u64, count: usize) -> Result<LifetimeSamples> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut sampler = Sampler::new(model, seed, 0)?;
    let n = sampler.n();
    let mut data = vec![0.0; count * n];
    for row in data.chunks_exact_mut(n) {
        sampler.fill(row);
    }
    Ok(LifetimeSamples { n, data })
}
