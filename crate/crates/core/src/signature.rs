//! Tail probabilities, signatures and the weighted symmetric projection.
//!
//! With `q` the relative quality function of the lifetimes and `φ` a
//! semicoherent structure,
//!
//! ```text
//! Pr(T >= X_{k:n}) = Σ_{|x| = n-k+1} q(x) φ(x)
//! p_k = Pr(T = X_{k:n}) = Pr(T >= X_{k:n}) - Pr(T >= X_{k+1:n})
//! ```
//!
//! Every level sum runs over masks in ascending order, so routes that share
//! weights agree bit for bit.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::lifetimes::LifetimeModel;
use crate::quality::{auto_route, quality_exchangeable, quality_for_model, QualityFunction, QualityRoute};
use crate::structure::{OrderStatisticFunction, SetFunction, StructureFunction};

/// Negative `p_k` above this magnitude is rejected rather than clamped.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// `p = (p_1, ..., p_n)` with `p_k = Pr(T = X_{k:n})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureVector {
    p: Vec<f64>,
}

impl SignatureVector {
    pub fn new(p: Vec<f64>) -> Self {
        SignatureVector { p }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Raw values, including floating-point noise below zero.
    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Values with tiny negatives clamped to zero, for reports.
    pub fn clamped(&self) -> Vec<f64> {
        self.p.iter().map(|&v| v.max(0.0)).collect()
    }

    pub fn max_abs_diff(&self, other: &SignatureVector) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `t_k = Pr(T >= X_{k:n})` for `k = 1..=n+1`, with `t_{n+1} = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailProbabilityVector {
    values: Vec<f64>,
}

impl TailProbabilityVector {
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// `t_1, ..., t_n` (the formal `t_{n+1}` excluded).
    pub fn tails(&self) -> &[f64] {
        &self.values[..self.n()]
    }

    /// `t_k` for `k` in `1..=n+1`.
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn to_signature(&self) -> SignatureVector {
        SignatureVector::new(self.values.windows(2).map(|w| w[0] - w[1]).collect())
    }
}

fn check_same_arity(phi: &StructureFunction, q: &QualityFunction) -> Result<()> {
    if phi.n() != q.n() {
        return Err(Error::ArityMismatch {
            expected: phi.n(),
            got: q.n(),
        });
    }
    Ok(())
}

/// `L_j = Σ_{|x| = j} w(x) φ(x)` for `j = 0..=n`, ascending masks within a level.
fn weighted_level_sums(phi: &StructureFunction, weight: impl Fn(u32) -> f64) -> Vec<f64> {
    let n = phi.n();
    let mut sums = vec![0.0; n + 1];
    for m in 0..1u32 << n {
        let phi_x = if phi.value(m) { 1.0 } else { 0.0 };
        sums[m.count_ones() as usize] += weight(m) * phi_x;
    }
    sums
}

fn tails_from_level_sums(levels: &[f64]) -> TailProbabilityVector {
    let n = levels.len() - 1;
    // t_k = L_{n-k+1}, k = 1..=n+1
    TailProbabilityVector {
        values: (1..=n + 1).map(|k| levels[n + 1 - k]).collect(),
    }
}

fn check_signs(p: SignatureVector, tol: f64) -> Result<SignatureVector> {
    if let Some((k, v)) = p.values().iter().enumerate().find(|(_, v)| **v < -tol) {
        return Err(Error::Numerical(format!(
            "p_{} = {v:e} is negative beyond tolerance {tol:e}; q is not a valid quality function",
            k + 1
        )));
    }
    Ok(p)
}

/// Boland's i.i.d. signature: differences of level means of `φ`.
pub fn boland_signature(phi: &StructureFunction) -> Result<SignatureVector> {
    phi.require_semicoherent()?;
    let n = phi.n();
    let inverse_counts: Vec<f64> = (0..=n)
        .map(|j| 1.0 / crate::structure::binomial(n, j) as f64)
        .collect();
    let levels = weighted_level_sums(phi, |m| inverse_counts[m.count_ones() as usize]);
    Ok(tails_from_level_sums(&levels).to_signature())
}

pub fn tail_probabilities(
    phi: &StructureFunction,
    q: &QualityFunction,
) -> Result<TailProbabilityVector> {
    check_same_arity(phi, q)?;
    phi.require_semicoherent()?;
    Ok(tails_from_level_sums(&weighted_level_sums(phi, |m| q.get(m))))
}

/// `p_k = t_k - t_{k+1}`, rejecting negatives beyond [`NEGATIVE_TOL`].
pub fn signature_from_quality(
    phi: &StructureFunction,
    q: &QualityFunction,
) -> Result<SignatureVector> {
    signature_from_quality_tol(phi, q, NEGATIVE_TOL)
}

/// As [`signature_from_quality`] with an explicit negativity tolerance, for
/// `q` computed numerically.
pub fn signature_from_quality_tol(
    phi: &StructureFunction,
    q: &QualityFunction,
    negative_tol: f64,
) -> Result<SignatureVector> {
    check_signs(tail_probabilities(phi, q)?.to_signature(), negative_tol)
}

/// `p_k = Σ_x r_k(x) φ(x)` with `r_k = q (-os_{k+1:n} + 2 os_{k:n} - os_{k-1:n})`.
pub fn signature_via_rk(phi: &StructureFunction, q: &QualityFunction) -> Result<SignatureVector> {
    check_same_arity(phi, q)?;
    phi.require_semicoherent()?;
    let n = phi.n();
    let os: Vec<OrderStatisticFunction> = (0..=n + 1)
        .map(|k| OrderStatisticFunction::new(n, k))
        .collect::<Result<_>>()?;
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    let p = (1..=n)
        .map(|k| {
            let mut acc = CompensatedSum::new();
            for m in 0..1u32 << n {
                if !phi.value(m) {
                    continue;
                }
                let r = q.get(m)
                    * (-indicator(os[k + 1].value(m)) + 2.0 * indicator(os[k].value(m))
                        - indicator(os[k - 1].value(m)));
                acc.add(r);
            }
            acc.value()
        })
        .collect();
    check_signs(SignatureVector::new(p), NEGATIVE_TOL)
}

/// `f* = constant + Σ_k c_k os_{k:n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricApproximation {
    n: usize,
    pub constant: f64,
    pub coefficients: Vec<f64>,
}

impl SymmetricApproximation {
    /// `n` is taken from the number of coefficients.
    pub fn new(constant: f64, coefficients: Vec<f64>) -> Self {
        SymmetricApproximation {
            n: coefficients.len(),
            constant,
            coefficients,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn evaluate(&self, mask: u32) -> f64 {
        // os_{k:n}(x) = 1 iff k >= n - |x| + 1
        let size = mask.count_ones() as usize;
        self.constant + self.coefficients[self.n - size..].iter().sum::<f64>()
    }

    pub fn to_set_function(&self) -> SetFunction {
        SetFunction::from_fn(self.n, |m| self.evaluate(m)).expect("valid arity")
    }
}

fn check_weights(f: &SetFunction, w: &SetFunction) -> Result<Vec<f64>> {
    if f.n() != w.n() {
        return Err(Error::ArityMismatch {
            expected: f.n(),
            got: w.n(),
        });
    }
    if let Some(m) = w.values().iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "weight at mask {m} is negative or not finite"
        )));
    }
    let mut totals = vec![0.0; f.n() + 1];
    for (m, &v) in w.values().iter().enumerate() {
        totals[(m as u32).count_ones() as usize] += v;
    }
    if let Some(j) = totals.iter().position(|t| t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::InvalidArgument(format!(
            "weights on subsets of size {j} have nonpositive total"
        )));
    }
    Ok(totals)
}

/// Weighted least-squares projection of `f` onto the symmetric functions.
///
/// `c_k` is the difference of the level-`(n-k+1)` and level-`(n-k)`
/// weighted means of `f`, with weights renormalized within each level.
pub fn symmetric_projection(f: &SetFunction, w: &SetFunction) -> Result<SymmetricApproximation> {
    let totals = check_weights(f, w)?;
    let n = f.n();
    let mut means = vec![0.0; n + 1];
    for m in 0..1u32 << n {
        let j = m.count_ones() as usize;
        let normalized = w.get(m) / totals[j];
        means[j] += normalized * f.get(m);
    }
    let coefficients = (1..=n).map(|k| means[n - k + 1] - means[n - k]).collect();
    Ok(SymmetricApproximation {
        n,
        constant: f.get(0),
        coefficients,
    })
}

/// `⟨f, g⟩ = Σ_x w(x) f(x) g(x)`.
pub fn weighted_inner_product(f: &SetFunction, g: &SetFunction, w: &SetFunction) -> f64 {
    let mut acc = CompensatedSum::new();
    for ((a, b), c) in f.values().iter().zip(g.values()).zip(w.values()) {
        acc.add(a * b * c);
    }
    acc.value()
}

/// `Σ_x w(x) (f(x) - g(x))^2`.
pub fn weighted_squared_distance(f: &SetFunction, g: &SetFunction, w: &SetFunction) -> f64 {
    let mut acc = CompensatedSum::new();
    for ((a, b), c) in f.values().iter().zip(g.values()).zip(w.values()) {
        acc.add(c * (a - b) * (a - b));
    }
    acc.value()
}

/// Largest `|⟨f - f*, g⟩|` over `g` in `{1, os_{1:n}, ..., os_{n:n}}`.
pub fn projection_residual_check(
    f: &SetFunction,
    w: &SetFunction,
    approx: &SymmetricApproximation,
) -> Result<f64> {
    check_weights(f, w)?;
    if approx.n() != f.n() {
        return Err(Error::ArityMismatch {
            expected: f.n(),
            got: approx.n(),
        });
    }
    let n = f.n();
    let fitted = approx.to_set_function();
    let residual = SetFunction::new(
        n,
        f.values()
            .iter()
            .zip(fitted.values())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let mut worst = weighted_inner_product(&residual, &SetFunction::constant(n, 1.0)?, w).abs();
    for k in 1..=n {
        let os = OrderStatisticFunction::new(n, k)?.to_set_function();
        worst = worst.max(weighted_inner_product(&residual, &os, w).abs());
    }
    Ok(worst)
}

/// Signature under exchangeable lifetimes through the general quality route.
pub fn exchangeable_signature(phi: &StructureFunction) -> Result<SignatureVector> {
    signature_from_quality(phi, &quality_exchangeable(phi.n())?)
}

/// How a model-level signature is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignatureRoute {
    /// Boland for i.i.d. and exchangeable models, otherwise the model's natural quality route.
    Auto,
    /// Boland's formula; i.i.d. and exchangeable models only.
    Boland,
    Quality(QualityRoute),
}

impl std::str::FromStr for SignatureRoute {
    type Err = Error;

    /// Accepts `auto`, `boland`, the quality route names, and the short
    /// forms `closed-form`, `difference` and `order-probs`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => SignatureRoute::Auto,
            "boland" => SignatureRoute::Boland,
            "closed-form" => SignatureRoute::Quality(QualityRoute::WeibullClosedForm),
            "difference" => SignatureRoute::Quality(QualityRoute::WeibullDifference),
            "order-probs" => SignatureRoute::Quality(QualityRoute::OrderProbs),
            other => SignatureRoute::Quality(other.parse()?),
        })
    }
}

/// Signature of `phi` under `model`, with its tail probabilities and the name of the route taken.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSignature {
    pub signature: SignatureVector,
    pub tails: TailProbabilityVector,
    pub route: &'static str,
}

/// Computes the signature of `phi` under `model`.
///
/// `tol` is the per-subset quadrature tolerance; `normalize_levels` rescales
/// each level of `q` to sum to one first. Negative entries are tolerated up
/// to the level-sum tolerance of the route.
pub fn signature_for_model(
    phi: &StructureFunction,
    model: &LifetimeModel,
    route: SignatureRoute,
    tol: f64,
    normalize_levels: bool,
) -> Result<ModelSignature> {
    if model.n() != phi.n() {
        return Err(Error::ArityMismatch {
            expected: phi.n(),
            got: model.n(),
        });
    }
    let exchangeable = matches!(
        model,
        LifetimeModel::Iid { .. } | LifetimeModel::Exchangeable { .. }
    );
    let quality_route = match route {
        SignatureRoute::Boland | SignatureRoute::Auto if exchangeable => {
            let q = quality_exchangeable(phi.n())?;
            return Ok(ModelSignature {
                signature: boland_signature(phi)?,
                tails: tail_probabilities(phi, &q)?,
                route: "boland",
            });
        }
        SignatureRoute::Boland => {
            return Err(Error::RouteMismatch(format!(
                "route boland does not apply to a {} model",
                model.kind()
            )))
        }
        SignatureRoute::Auto => auto_route(model),
        SignatureRoute::Quality(r) => r,
    };
    let q = quality_for_model(model, quality_route, tol)?;
    let q = if normalize_levels { q.normalize_levels()? } else { q };
    q.validate(quality_route.level_tolerance())?;
    Ok(ModelSignature {
        signature: signature_from_quality_tol(phi, &q, quality_route.level_tolerance())?,
        tails: tail_probabilities(phi, &q)?,
        route: quality_route.as_str(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::quality_weibull;

    fn fig() -> StructureFunction {
        // x1 ∧ (x2 ∨ x3)
        StructureFunction::from_fn(3, |m| m & 1 == 1 && m & 6 != 0).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn boland_known_values() {
        let s = boland_signature(&fig()).unwrap();
        assert_close(s.values(), &[1.0 / 3.0, 2.0 / 3.0, 0.0], 1e-15);
        let s = boland_signature(&StructureFunction::bridge()).unwrap();
        assert_close(s.values(), &[0.0, 0.2, 0.6, 0.2, 0.0], 1e-15);
        for k in 1..=5 {
            let s = boland_signature(&StructureFunction::k_out_of_n(5, k).unwrap()).unwrap();
            let unit: Vec<f64> = (1..=5).map(|j| if j == k { 1.0 } else { 0.0 }).collect();
            assert_close(s.values(), &unit, 1e-15);
        }
    }

    #[test]
    fn boland_rejects_non_semicoherent() {
        let zero = StructureFunction::from_fn(3, |_| false).unwrap();
        assert!(matches!(boland_signature(&zero), Err(Error::NotSemicoherent(_))));
    }

    #[test]
    fn tail_examples() {
        let q = quality_weibull(1.0, &[1.0, 2.0]).unwrap();
        let t = tail_probabilities(&StructureFunction::series(2).unwrap(), &q).unwrap();
        assert_eq!(t.get(1), 1.0);
        assert_eq!(t.get(2), 0.0);
        assert_eq!(t.get(3), 0.0);
        let q = quality_weibull(1.0, &[1.0, 2.0, 0.5, 3.0]).unwrap();
        let t = tail_probabilities(&StructureFunction::parallel(4).unwrap(), &q).unwrap();
        assert!((t.get(4) - 1.0).abs() < 1e-12);
        let err = tail_probabilities(&StructureFunction::parallel(3).unwrap(), &q).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { .. }));
    }

    #[test]
    fn exchangeable_reduction_is_bit_exact() {
        for phi in [fig(), StructureFunction::bridge(), StructureFunction::k_out_of_n(6, 3).unwrap()] {
            assert_eq!(exchangeable_signature(&phi).unwrap(), boland_signature(&phi).unwrap());
        }
    }

    #[test]
    fn rk_form_agrees() {
        let q = quality_weibull(1.0, &[1.0, 1.0, 2.0]).unwrap();
        let a = signature_from_quality(&fig(), &q).unwrap();
        let b = signature_via_rk(&fig(), &q).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
        let series = StructureFunction::series(2).unwrap();
        let p = signature_via_rk(&series, &quality_exchangeable(2).unwrap()).unwrap();
        assert_eq!(p.values(), &[1.0, 0.0]);
    }

    #[test]
    fn k_out_of_n_unit_vectors_for_weibull_q() {
        let q = quality_weibull(0.7, &[0.3, 1.0, 2.2, 5.0]).unwrap();
        for k in 1..=4 {
            let p = signature_from_quality(&StructureFunction::k_out_of_n(4, k).unwrap(), &q).unwrap();
            for (j, v) in p.values().iter().enumerate() {
                let expected = if j + 1 == k { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_signature_rejected() {
        // q with a level summing to 1 but concentrated where φ misbehaves relative to levels
        let q = QualityFunction::new(2, vec![1.0, 0.0, 1.5, 1.0]).unwrap();
        let phi = StructureFunction::from_fn(2, |m| m == 3 || m == 2).unwrap();
        // t_2 = q({2}) = 1.5 > t_1 = 1 -> p_1 = -0.5
        assert!(matches!(signature_from_quality(&phi, &q), Err(Error::Numerical(_))));
    }

    #[test]
    fn projection_of_symmetric_and_constant() {
        let w = SetFunction::from_fn(3, |m| 1.0 + m as f64).unwrap();
        let sym = SetFunction::from_fn(3, |m| [0.5, -1.0, 2.0, 4.0][m.count_ones() as usize]).unwrap();
        let approx = symmetric_projection(&sym, &w).unwrap();
        assert_close(approx.to_set_function().values(), sym.values(), 1e-15);
        assert_eq!(approx.constant, 0.5);
        assert_close(&approx.coefficients, &[2.0, 3.0, -1.5], 1e-15);
        assert_eq!(projection_residual_check(&sym, &w, &approx).unwrap(), 0.0);

        let c = SetFunction::constant(3, 2.5).unwrap();
        let approx = symmetric_projection(&c, &w).unwrap();
        assert_eq!(approx.constant, 2.5);
        assert!(approx.coefficients.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn projection_weight_errors() {
        let f = SetFunction::constant(2, 1.0).unwrap();
        let zero_level = SetFunction::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(symmetric_projection(&f, &zero_level).is_err());
        let negative = SetFunction::new(2, vec![1.0, -1.0, 2.0, 1.0]).unwrap();
        assert!(symmetric_projection(&f, &negative).is_err());
        // zeros are fine as long as each level has positive mass
        let sparse = SetFunction::new(2, vec![1.0, 0.0, 2.0, 1.0]).unwrap();
        assert!(symmetric_projection(&f, &sparse).is_ok());
    }

    #[test]
    fn projection_recovers_signature() {
        let q = quality_weibull(1.0, &[1.0, 1.0, 2.0]).unwrap();
        let phi = fig();
        let approx = symmetric_projection(&phi.to_set_function(), &SetFunction::new(3, q.values().to_vec()).unwrap()).unwrap();
        let p = signature_from_quality(&phi, &q).unwrap();
        assert_eq!(approx.constant, 0.0);
        assert_close(&approx.coefficients, p.values(), 1e-12);
    }
}
