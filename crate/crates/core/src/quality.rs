//! Relative quality functions.
//!
//! `q(S)` is the probability that every component in `S` outlives every
//! component outside `S`, with `q(∅) = q([n]) = 1`. For each cardinality
//! `k`, the values on `k`-subsets sum to one.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lifetimes::{LifetimeModel, Marginal, OrderProbabilities};
use crate::numeric::{submasks_by_size, CompensatedSum};
use crate::quadrature::{self, integrate_half_line};
use crate::structure::{binomial, check_arity, full_mask, s_difference_at, SubsetMask};

/// Level-sum tolerance for the exact and closed-form routes.
pub const LEVEL_SUM_TOL_EXACT: f64 = 1e-12;
/// Level-sum tolerance for quadrature output.
pub const LEVEL_SUM_TOL_QUADRATURE: f64 = 1e-6;
/// Default absolute tolerance per subset integral.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-9;
/// Above this size the alternating Weibull sum is flagged as ill-conditioned.
pub const WEIBULL_CLOSED_FORM_WARN_N: usize = 16;
/// Largest size accepted by the difference-operator route.
pub const WEIBULL_DIFFERENCE_MAX_N: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QualityRoute {
    Exchangeable,
    OrderProbs,
    Quadrature,
    WeibullClosedForm,
    WeibullDifference,
}

impl QualityRoute {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityRoute::Exchangeable => "exchangeable",
            QualityRoute::OrderProbs => "order_probs",
            QualityRoute::Quadrature => "quadrature",
            QualityRoute::WeibullClosedForm => "weibull_closed_form",
            QualityRoute::WeibullDifference => "weibull_difference",
        }
    }

    /// Level-sum tolerance appropriate for values produced by this route.
    pub fn level_tolerance(self) -> f64 {
        match self {
            QualityRoute::Quadrature => LEVEL_SUM_TOL_QUADRATURE,
            _ => LEVEL_SUM_TOL_EXACT,
        }
    }
}

impl fmt::Display for QualityRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exchangeable" => QualityRoute::Exchangeable,
            "order_probs" => QualityRoute::OrderProbs,
            "quadrature" => QualityRoute::Quadrature,
            "weibull_closed_form" => QualityRoute::WeibullClosedForm,
            "weibull_difference" => QualityRoute::WeibullDifference,
            other => return Err(Error::Parse(format!("unknown quality route {other:?}"))),
        })
    }
}

/// Dense relative quality function indexed by subset mask.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityFunction {
    n: usize,
    values: Vec<f64>,
}

impl QualityFunction {
    /// Wraps raw values; requires the `q(∅) = q([n]) = 1` convention and finite entries.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_arity(n)?;
        if values.len() != 1 << n {
            return Err(Error::InvalidQuality(format!(
                "expected {} values, got {}",
                1usize << n,
                values.len()
            )));
        }
        if let Some(m) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidQuality(format!(
                "value at {} is not finite",
                SubsetMask::new(n, m as u32)?
            )));
        }
        if values[0] != 1.0 || values[full_mask(n) as usize] != 1.0 {
            return Err(Error::InvalidQuality(
                "q(empty set) and q([n]) must both equal 1".into(),
            ));
        }
        Ok(QualityFunction { n, values })
    }

    fn with_conventions(n: usize, mut values: Vec<f64>) -> Self {
        values[0] = 1.0;
        values[full_mask(n) as usize] = 1.0;
        QualityFunction { n, values }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    pub fn value(&self, s: SubsetMask) -> Result<f64> {
        if s.n() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: s.n(),
            });
        }
        Ok(self.get(s.bits()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_{|S|=k} q(S)` for `k = 1..=n`, summed in ascending mask order.
    pub fn level_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n + 1];
        for (m, &v) in self.values.iter().enumerate() {
            sums[(m as u32).count_ones() as usize] += v;
        }
        sums.remove(0);
        sums
    }

    /// Largest `|Σ_{|S|=k} q(S) - 1|` over `k`.
    pub fn max_level_deviation(&self) -> f64 {
        self.level_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Checks range and level-sum normalization.
    pub fn validate(&self, level_tol: f64) -> Result<()> {
        if let Some((m, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| **v < -level_tol || **v > 1.0 + level_tol)
        {
            return Err(Error::InvalidQuality(format!(
                "q({}) = {v} outside [0, 1]",
                SubsetMask::new(self.n, m as u32)?
            )));
        }
        for (k, s) in self.level_sums().iter().enumerate() {
            if (s - 1.0).abs() > level_tol {
                return Err(Error::InvalidQuality(format!(
                    "values on subsets of size {} sum to {s}, expected 1",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Rescales every cardinality level to sum to one.
    pub fn normalize_levels(&self) -> Result<Self> {
        let sums = self.level_sums();
        if let Some(k) = sums.iter().position(|s| s.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::InvalidQuality(format!(
                "cannot normalize: level {} has nonpositive total",
                k + 1
            )));
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(m, &v)| {
                let k = (m as u32).count_ones() as usize;
                if k == 0 {
                    v
                } else {
                    v / sums[k - 1]
                }
            })
            .collect();
        Ok(QualityFunction::with_conventions(self.n, values))
    }

    /// `q̃(S) = C(n, |S|) q(S)`.
    pub fn tilde(&self) -> NormalizedQuality {
        let n = self.n;
        NormalizedQuality {
            n,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(m, &v)| binomial(n, (m as u32).count_ones() as usize) as f64 * v)
                .collect(),
        }
    }

    /// `Σ_{i∈S} q([n] \ {i})`, the probability that the shortest lifetime lies in `S`
    /// when `q` comes from Weibull lifetimes with a common shape.
    pub fn shortest_lifetime_probability(&self, s: SubsetMask) -> Result<f64> {
        if s.n() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: s.n(),
            });
        }
        let full = full_mask(self.n);
        Ok(s.members().map(|i| self.get(full & !(1 << i))).sum())
    }
}

/// `q̃(S) = C(n, |S|) q(S)`; identically one for exchangeable lifetimes.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedQuality {
    n: usize,
    values: Vec<f64>,
}

impl NormalizedQuality {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `q(S) = 1 / C(n, |S|)`.
pub fn quality_exchangeable(n: usize) -> Result<QualityFunction> {
    check_arity(n)?;
    let weights: Vec<f64> = (0..=n).map(|k| 1.0 / binomial(n, k) as f64).collect();
    let values = (0..=full_mask(n))
        .map(|m| weights[m.count_ones() as usize])
        .collect();
    Ok(QualityFunction::with_conventions(n, values))
}

/// Accumulates each ordering's probability onto its top-`k` set at every level.
pub fn quality_from_order_probabilities(model: &OrderProbabilities) -> QualityFunction {
    let n = model.n();
    let mut values = vec![0.0; 1 << n];
    for (sigma, p) in model.iter() {
        if p == 0.0 {
            continue;
        }
        // σ lists components from shortest to longest lifetime
        let mut top = 0u32;
        for &c in sigma.iter().rev().take(n.saturating_sub(1)) {
            top |= 1 << c;
            values[top as usize] += p;
        }
    }
    QualityFunction::with_conventions(n, values)
}

fn subset_integrand(marginals: &[Marginal], s: u32) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| {
        let mut outside = 1.0;
        let mut inside: Vec<(f64, f64)> = Vec::with_capacity(marginals.len());
        for (i, m) in marginals.iter().enumerate() {
            if s >> i & 1 == 1 {
                inside.push((m.pdf(t), m.sf(t)));
            } else {
                outside *= m.cdf(t);
                if outside == 0.0 {
                    return 0.0;
                }
            }
        }
        // Σ_j f_j ∏_{i≠j} (1 - F_i) via prefix and suffix products
        let len = inside.len();
        let mut suffix = vec![1.0; len + 1];
        for j in (0..len).rev() {
            suffix[j] = suffix[j + 1] * inside[j].1;
        }
        let mut prefix = 1.0;
        let mut acc = 0.0;
        for j in 0..len {
            let density = inside[j].0;
            if density != 0.0 {
                acc += density * prefix * suffix[j + 1];
            }
            prefix *= inside[j].1;
        }
        acc * outside
    }
}

/// One-dimensional integral representation for independent lifetimes.
///
/// Each proper nonempty subset is integrated separately over `[0, ∞)` to
/// absolute tolerance `tol`; subsets are evaluated in parallel but each value
/// is independent of scheduling.
pub fn quality_independent_quadrature(marginals: &[Marginal], tol: f64) -> Result<QualityFunction> {
    let n = marginals.len();
    check_arity(n)?;
    if tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    for m in marginals {
        m.validate()?;
    }
    let mut breakpoints: Vec<f64> = marginals.iter().flat_map(|m| m.breakpoints()).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let full = full_mask(n);
    let values = (0..=full)
        .into_par_iter()
        .map(|s| {
            if s == 0 || s == full {
                return Ok(1.0);
            }
            let f = subset_integrand(marginals, s);
            match integrate_half_line(f, &breakpoints, tol, quadrature::MAX_SUBDIVISIONS) {
                Ok(est) => Ok(est.value),
                Err(failure) => Err(Error::QuadratureFailed {
                    subset: SubsetMask::new(n, s)?.to_string(),
                    error: failure.best.error,
                    tol,
                }),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(QualityFunction::with_conventions(n, values))
}

/// `λ_α(T)` for every mask `T`, given per-component weights `λ_i^α`.
fn additive_table(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let mut table = vec![0.0; 1 << n];
    for m in 1..table.len() {
        let low = m.trailing_zeros() as usize;
        table[m] = table[m & (m - 1)] + weights[low];
    }
    table
}

/// `Σ_{K ⊆ [n]∖S} (-1)^{|K|} w(S) / w(K ∪ S)` for every nonempty `S`.
fn alternating_quotient_sum(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let full = full_mask(n);
    let table = additive_table(weights);
    (0..=full)
        .into_par_iter()
        .map(|s| {
            if s == 0 || s == full {
                return 1.0;
            }
            let ws = table[s as usize];
            let mut acc = CompensatedSum::new();
            for k in submasks_by_size(full & !s) {
                let term = ws / table[(k | s) as usize];
                if k.count_ones() % 2 == 0 {
                    acc.add(term);
                } else {
                    acc.add(-term);
                }
            }
            acc.value()
        })
        .collect()
}

fn check_weibull(alpha: f64, lambdas: &[f64]) -> Result<()> {
    LifetimeModel::weibull(alpha, lambdas.to_vec()).map(drop)
}

/// Closed form for independent Weibull lifetimes with a common shape `alpha`.
pub fn quality_weibull(alpha: f64, lambdas: &[f64]) -> Result<QualityFunction> {
    check_weibull(alpha, lambdas)?;
    let n = lambdas.len();
    if n > WEIBULL_CLOSED_FORM_WARN_N {
        warn!(
            "alternating Weibull sum over {n} components may lose accuracy; \
             consider the quadrature route"
        );
    }
    let weights: Vec<f64> = lambdas.iter().map(|l| l.powf(alpha)).collect();
    Ok(QualityFunction::with_conventions(n, alternating_quotient_sum(&weights)))
}

/// Weibull quality through the `([n]∖S)`-difference of `1/λ_α` evaluated at `S`.
///
/// `1/λ_α` has a pole at the empty set, which the difference at a nonempty
/// `S` never reaches; a query there is reported as an error.
pub fn quality_weibull_via_difference(alpha: f64, lambdas: &[f64]) -> Result<QualityFunction> {
    check_weibull(alpha, lambdas)?;
    let n = lambdas.len();
    if n > WEIBULL_DIFFERENCE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "difference route supports at most {WEIBULL_DIFFERENCE_MAX_N} components, got {n}"
        )));
    }
    let weights: Vec<f64> = lambdas.iter().map(|l| l.powf(alpha)).collect();
    let table = additive_table(&weights);
    let inverse = |m: u32| -> Result<f64> {
        if m == 0 {
            return Err(Error::Numerical(
                "1/lambda_alpha queried at the empty set".into(),
            ));
        }
        Ok(1.0 / table[m as usize])
    };
    let full = full_mask(n);
    let values = (0..=full)
        .into_par_iter()
        .map(|s| {
            if s == 0 || s == full {
                return Ok(1.0);
            }
            let at = SubsetMask::new(n, s)?;
            let diff = s_difference_at(inverse, at.complement(), at)?;
            let sign = if (n - at.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
            Ok(sign * table[s as usize] * diff)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(QualityFunction::with_conventions(n, values))
}

/// Outcome of testing whether `q` arises from Weibull lifetimes with a common shape.
#[derive(Clone, Debug, PartialEq)]
pub struct WeibullCheck {
    pub is_weibull_compatible: bool,
    /// `q([n] ∖ {i})`, proportional to `λ_i^α`, when compatible.
    pub recovered_rates: Option<Vec<f64>>,
    /// Largest deviation from the alternating-sum identity (infinite when positivity fails).
    pub max_deviation: f64,
    pub reason: Option<String>,
}

/// Positivity of `q([n]∖{i})` plus the alternating-sum identity with
/// `λ_α({i}) := q([n]∖{i})`, within `tol` at every nonempty `S`.
pub fn weibull_characterization_check(q: &QualityFunction, tol: f64) -> WeibullCheck {
    let n = q.n();
    let full = full_mask(n);
    let rates: Vec<f64> = (0..n).map(|i| q.get(full & !(1 << i))).collect();
    if let Some(i) = rates.iter().position(|r| r.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
        return WeibullCheck {
            is_weibull_compatible: false,
            recovered_rates: None,
            max_deviation: f64::INFINITY,
            reason: Some(format!(
                "positivity violated: q([n] minus {{{}}}) = {}",
                i + 1,
                rates[i]
            )),
        };
    }
    let expected = alternating_quotient_sum(&rates);
    let mut worst = (0.0, 0u32);
    for s in 1..=full {
        let d = (q.get(s) - expected[s as usize]).abs();
        if d > worst.0 {
            worst = (d, s);
        }
    }
    let ok = worst.0 <= tol;
    WeibullCheck {
        is_weibull_compatible: ok,
        recovered_rates: ok.then_some(rates),
        max_deviation: worst.0,
        reason: (!ok).then(|| {
            format!(
                "alternating-sum identity violated at {}: deviation {:e} > {tol:e}",
                SubsetMask::new(n, worst.1).expect("mask within range"),
                worst.0
            )
        }),
    }
}

/// `λ_α(S) / λ_α([n])`: probability that the shortest lifetime belongs to `S`.
pub fn shortest_lifetime_in_set_probability(
    alpha: f64,
    lambdas: &[f64],
    s: SubsetMask,
) -> Result<f64> {
    check_weibull(alpha, lambdas)?;
    if s.n() != lambdas.len() {
        return Err(Error::ArityMismatch {
            expected: lambdas.len(),
            got: s.n(),
        });
    }
    let weights: Vec<f64> = lambdas.iter().map(|l| l.powf(alpha)).collect();
    let total: f64 = weights.iter().sum();
    Ok(s.members().map(|i| weights[i]).sum::<f64>() / total)
}

/// Picks the natural route for a model: exchangeable for i.i.d. and
/// exchangeable laws, closed form for Weibull, quadrature for independent
/// marginals, and direct accumulation for ordering probabilities.
pub fn auto_route(model: &LifetimeModel) -> QualityRoute {
    match model {
        LifetimeModel::Iid { .. } | LifetimeModel::Exchangeable { .. } => QualityRoute::Exchangeable,
        LifetimeModel::Weibull { .. } => QualityRoute::WeibullClosedForm,
        LifetimeModel::IndependentMarginals { .. } => QualityRoute::Quadrature,
        LifetimeModel::OrderProbabilities(_) => QualityRoute::OrderProbs,
    }
}

/// Common shape and rates when every marginal is Weibull or exponential with one shape.
fn shared_weibull(marginals: &[Marginal]) -> Option<(f64, Vec<f64>)> {
    let mut shape = None;
    let mut rates = Vec::with_capacity(marginals.len());
    for m in marginals {
        let (a, r) = match *m {
            Marginal::Weibull { shape, rate } => (shape, rate),
            Marginal::Exponential { rate } => (1.0, rate),
            _ => return None,
        };
        match shape {
            None => shape = Some(a),
            Some(s) if s != a => return None,
            _ => {}
        }
        rates.push(r);
    }
    shape.map(|s| (s, rates))
}

/// Computes `q` for `model` along `route`, failing when the route does not apply.
pub fn quality_for_model(
    model: &LifetimeModel,
    route: QualityRoute,
    tol: f64,
) -> Result<QualityFunction> {
    let mismatch = || {
        Error::RouteMismatch(format!(
            "route {route} does not apply to a {} model",
            model.kind()
        ))
    };
    match route {
        QualityRoute::Exchangeable => match model {
            LifetimeModel::Iid { n } | LifetimeModel::Exchangeable { n } => quality_exchangeable(*n),
            _ => Err(mismatch()),
        },
        QualityRoute::OrderProbs => match model {
            LifetimeModel::OrderProbabilities(o) => Ok(quality_from_order_probabilities(o)),
            _ => Err(mismatch()),
        },
        QualityRoute::Quadrature => match model {
            LifetimeModel::IndependentMarginals { .. } | LifetimeModel::Weibull { .. } => {
                quality_independent_quadrature(&model.marginals()?, tol)
            }
            _ => Err(mismatch()),
        },
        QualityRoute::WeibullClosedForm | QualityRoute::WeibullDifference => {
            let (alpha, lambdas) = match model {
                LifetimeModel::Weibull { alpha, lambdas } => (*alpha, lambdas.clone()),
                LifetimeModel::IndependentMarginals { marginals } => {
                    shared_weibull(marginals).ok_or_else(mismatch)?
                }
                _ => return Err(mismatch()),
            };
            if route == QualityRoute::WeibullClosedForm {
                quality_weibull(alpha, &lambdas)
            } else {
                quality_weibull_via_difference(alpha, &lambdas)
            }
        }
    }
}
