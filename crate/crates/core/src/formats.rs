//! JSON and CSV file formats.
//!
//! Component indices are 1-based in files and 0-based in memory. Floats are
//! written with 17 significant digits.

use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lifetimes::{LifetimeModel, Marginal, OrderProbabilities};
use crate::oracle::{QualityEstimate, SimulationReport};
use crate::quality::{QualityFunction, QualityRoute, WeibullCheck};
use crate::signature::{SignatureVector, SymmetricApproximation, TailProbabilityVector};
use crate::structure::{full_mask, masks_by_level, PathSetSystem, SetFunction, StructureFunction, SubsetMask};

/// Formats `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0.0 as well
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Float written with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Float17(pub f64);

impl Serialize for Float17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(format_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

fn floats(values: &[f64]) -> Vec<Float17> {
    values.iter().copied().map(Float17).collect()
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize")
}

// ---------------------------------------------------------------- structures

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StructureKind {
    Paths { minimal_path_sets: Vec<Vec<usize>> },
    Table { bits: String },
    KOutOfN { k: usize },
    Series,
    Parallel,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct StructureFile {
    pub n: usize,
    pub structure: StructureKind,
}

/// A parsed system: its truth table plus minimal path sets when they were given.
#[derive(Clone, Debug)]
pub struct System {
    pub phi: StructureFunction,
    pub paths: Option<PathSetSystem>,
}

impl System {
    pub fn n(&self) -> usize {
        self.phi.n()
    }
}

impl StructureFile {
    pub fn build(&self) -> Result<System> {
        let n = self.n;
        Ok(match &self.structure {
            StructureKind::Paths { minimal_path_sets } => {
                let paths = PathSetSystem::from_components(n, minimal_path_sets)?;
                System {
                    phi: StructureFunction::from_path_sets(&paths),
                    paths: Some(paths),
                }
            }
            StructureKind::Table { bits } => System {
                phi: StructureFunction::from_bit_string(n, bits)?,
                paths: None,
            },
            StructureKind::KOutOfN { k } => System {
                phi: StructureFunction::k_out_of_n(n, *k)?,
                paths: None,
            },
            StructureKind::Series => System {
                phi: StructureFunction::series(n)?,
                paths: None,
            },
            StructureKind::Parallel => System {
                phi: StructureFunction::parallel(n)?,
                paths: None,
            },
        })
    }
}

pub fn parse_system(text: &str) -> Result<System> {
    parse_json::<StructureFile>(text, "structure file")?.build()
}

/// Structure file carrying the truth table of `phi`.
pub fn structure_to_json(phi: &StructureFunction) -> String {
    to_json(&StructureFile {
        n: phi.n(),
        structure: StructureKind::Table {
            bits: phi.to_bit_string(),
        },
    })
}

// ---------------------------------------------------------------- lifetime models

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum MarginalEntry {
    Weibull { alpha: f64, rate: f64 },
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Lognormal { mu: f64, sigma: f64 },
}

impl MarginalEntry {
    fn build(&self) -> Result<Marginal> {
        match *self {
            MarginalEntry::Weibull { alpha, rate } => Marginal::weibull(alpha, rate),
            MarginalEntry::Exponential { rate } => Marginal::exponential(rate),
            MarginalEntry::Uniform { a, b } => Marginal::uniform(a, b),
            MarginalEntry::Lognormal { mu, sigma } => Marginal::lognormal(mu, sigma),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct OrderingEntry {
    pub perm: Vec<usize>,
    pub p: f64,
}

/// Lifetime model file. `n` is optional everywhere and required for
/// `iid`/`exchangeable` models unless supplied by a companion system file.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelFile {
    Iid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Exchangeable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Weibull {
        alpha: f64,
        lambda: Vec<f64>,
    },
    Independent {
        marginals: Vec<MarginalEntry>,
    },
    OrderProbs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        probs: Vec<OrderingEntry>,
    },
}

fn resolve_n(declared: Option<usize>, hint: Option<usize>) -> Result<usize> {
    match (declared, hint) {
        (Some(a), Some(b)) if a != b => Err(Error::ArityMismatch {
            expected: b,
            got: a,
        }),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::Parse(
            "model file must give \"n\" for this model type".into(),
        )),
    }
}

impl ModelFile {
    /// Builds the model; `n_hint` is the component count of an accompanying system.
    pub fn build(&self, n_hint: Option<usize>) -> Result<LifetimeModel> {
        let model = match self {
            ModelFile::Iid { n } => LifetimeModel::iid(resolve_n(*n, n_hint)?)?,
            ModelFile::Exchangeable { n } => LifetimeModel::exchangeable(resolve_n(*n, n_hint)?)?,
            ModelFile::Weibull { alpha, lambda } => LifetimeModel::weibull(*alpha, lambda.clone())?,
            ModelFile::Independent { marginals } => LifetimeModel::independent(
                marginals.iter().map(MarginalEntry::build).collect::<Result<_>>()?,
            )?,
            ModelFile::OrderProbs { n, probs } => {
                let inferred = probs.first().map(|e| e.perm.len());
                let n = resolve_n(n.or(inferred), None)?;
                let entries: Vec<(Vec<usize>, f64)> =
                    probs.iter().map(|e| (e.perm.clone(), e.p)).collect();
                LifetimeModel::OrderProbabilities(OrderProbabilities::new(n, &entries)?)
            }
        };
        if let Some(expected) = n_hint {
            if model.n() != expected {
                return Err(Error::ArityMismatch {
                    expected,
                    got: model.n(),
                });
            }
        }
        Ok(model)
    }
}

/// Parses a model file, returning the model and the raw JSON for echoing.
pub fn parse_model(text: &str, n_hint: Option<usize>) -> Result<(LifetimeModel, Value)> {
    let raw: Value = parse_json(text, "model file")?;
    let file: ModelFile = serde_json::from_value(raw.clone())
        .map_err(|e| Error::Parse(format!("model file: {e}")))?;
    Ok((file.build(n_hint)?, raw))
}

pub fn model_to_file(model: &LifetimeModel) -> ModelFile {
    match model {
        LifetimeModel::Iid { n } => ModelFile::Iid { n: Some(*n) },
        LifetimeModel::Exchangeable { n } => ModelFile::Exchangeable { n: Some(*n) },
        LifetimeModel::Weibull { alpha, lambdas } => ModelFile::Weibull {
            alpha: *alpha,
            lambda: lambdas.clone(),
        },
        LifetimeModel::IndependentMarginals { marginals } => ModelFile::Independent {
            marginals: marginals
                .iter()
                .map(|m| match *m {
                    Marginal::Weibull { shape, rate } => MarginalEntry::Weibull { alpha: shape, rate },
                    Marginal::Exponential { rate } => MarginalEntry::Exponential { rate },
                    Marginal::Uniform { a, b } => MarginalEntry::Uniform { a, b },
                    Marginal::LogNormal { mu, sigma } => MarginalEntry::Lognormal { mu, sigma },
                })
                .collect(),
        },
        LifetimeModel::OrderProbabilities(o) => ModelFile::OrderProbs {
            n: Some(o.n()),
            probs: o
                .iter()
                .filter(|(_, p)| *p != 0.0)
                .map(|(sigma, p)| OrderingEntry {
                    perm: sigma.iter().map(|c| c + 1).collect(),
                    p,
                })
                .collect(),
        },
    }
}

pub fn model_to_json(model: &LifetimeModel) -> String {
    to_json(&model_to_file(model))
}

// ---------------------------------------------------------------- quality

#[derive(Serialize)]
struct SetValue {
    set: Vec<usize>,
    value: Float17,
}

#[derive(Deserialize)]
struct SetValueIn {
    set: Vec<usize>,
    value: f64,
}

#[derive(Serialize)]
struct QualityOut {
    n: usize,
    q: Vec<SetValue>,
    level_sums: Vec<Float17>,
    route: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_tilde: Option<Vec<SetValue>>,
}

fn set_values(n: usize, values: impl Fn(u32) -> f64) -> Vec<SetValue> {
    masks_by_level(n)
        .into_iter()
        .flatten()
        .map(|m| SetValue {
            set: SubsetMask::new(n, m).expect("mask within range").to_components(),
            value: Float17(values(m)),
        })
        .collect()
}

/// Quality output; entries sorted by (cardinality, mask).
pub fn quality_to_json(q: &QualityFunction, route: QualityRoute, tilde: bool) -> String {
    let n = q.n();
    let tilde_values = tilde.then(|| q.tilde());
    to_json(&QualityOut {
        n,
        q: set_values(n, |m| q.get(m)),
        level_sums: floats(&q.level_sums()),
        route: route.as_str(),
        q_tilde: tilde_values.map(|t| set_values(n, |m| t.get(m))),
    })
}

pub fn quality_to_csv(q: &QualityFunction) -> String {
    let mut out = String::from("set,value\n");
    for m in masks_by_level(q.n()).into_iter().flatten() {
        let set = SubsetMask::new(q.n(), m).expect("mask within range").to_components();
        let names: Vec<String> = set.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("{},{}\n", names.join(" "), format_f64(q.get(m))));
    }
    out
}

#[derive(Deserialize)]
struct QualityIn {
    n: usize,
    q: Vec<SetValueIn>,
}

fn set_values_to_table(n: usize, entries: &[SetValueIn], what: &str) -> Result<Vec<Option<f64>>> {
    crate::structure::check_arity(n)?;
    let mut values: Vec<Option<f64>> = vec![None; 1 << n];
    for e in entries {
        let m = SubsetMask::from_components(n, &e.set)
            .map_err(|err| Error::Parse(format!("{what}: {err}")))?
            .bits() as usize;
        if values[m].is_some() {
            return Err(Error::Parse(format!("{what}: set {:?} listed twice", e.set)));
        }
        values[m] = Some(e.value);
    }
    Ok(values)
}

/// Reads a quality file. Missing `∅`/`[n]` entries default to 1; every other set is required.
pub fn parse_quality(text: &str) -> Result<QualityFunction> {
    let input: QualityIn = parse_json(text, "quality file")?;
    let n = input.n;
    let table = set_values_to_table(n, &input.q, "quality file")?;
    let full = full_mask(n) as usize;
    let values = table
        .into_iter()
        .enumerate()
        .map(|(m, v)| match v {
            Some(v) => Ok(v),
            None if m == 0 || m == full => Ok(1.0),
            None => Err(Error::Parse(format!(
                "quality file: missing value for set {}",
                SubsetMask::new(n, m as u32).expect("mask within range")
            ))),
        })
        .collect::<Result<Vec<f64>>>()?;
    QualityFunction::new(n, values)
}

// ---------------------------------------------------------------- real tables (projection)

#[derive(Deserialize)]
#[serde(untagged)]
enum TableIn {
    Dense { n: usize, values: Vec<f64> },
    Sets { n: usize, q: Vec<SetValueIn> },
    Structure(StructureFile),
}

#[derive(Serialize)]
struct TableOut {
    n: usize,
    values: Vec<Float17>,
}

/// Reads a real-valued set function: `{"n", "values": [...]}` indexed by mask,
/// a set-keyed list such as the quality output, or a structure file.
pub fn parse_set_function(text: &str) -> Result<SetFunction> {
    match parse_json::<TableIn>(text, "function file")? {
        TableIn::Dense { n, values } => SetFunction::new(n, values),
        TableIn::Sets { n, q } => {
            let values = set_values_to_table(n, &q, "function file")?
                .into_iter()
                .enumerate()
                .map(|(m, v)| {
                    v.ok_or_else(|| {
                        Error::Parse(format!("function file: missing value for mask {m}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            SetFunction::new(n, values)
        }
        TableIn::Structure(file) => Ok(file.build()?.phi.to_set_function()),
    }
}

pub fn set_function_to_json(f: &SetFunction) -> String {
    to_json(&TableOut {
        n: f.n(),
        values: floats(f.values()),
    })
}

// ---------------------------------------------------------------- signature outputs

#[derive(Serialize)]
struct Checks {
    sum_p: Float17,
    min_p: Float17,
}

#[derive(Serialize)]
struct SignatureOut {
    p: Vec<Float17>,
    p_raw: Vec<Float17>,
    tails: Vec<Float17>,
    route: String,
    checks: Checks,
}

pub fn signature_to_json(p: &SignatureVector, tails: &TailProbabilityVector, route: &str) -> String {
    to_json(&SignatureOut {
        p: floats(&p.clamped()),
        p_raw: floats(p.values()),
        tails: floats(tails.tails()),
        route: route.to_string(),
        checks: Checks {
            sum_p: Float17(p.sum()),
            min_p: Float17(p.min()),
        },
    })
}

pub fn signature_to_csv(p: &SignatureVector) -> String {
    let mut out = String::from("k,p\n");
    for (k, v) in p.clamped().iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, format_f64(*v)));
    }
    out
}

#[derive(Serialize)]
struct ProjectionOut {
    constant: Float17,
    c: Vec<Float17>,
    residual_orthogonality: Float17,
}

pub fn projection_to_json(approx: &SymmetricApproximation, residual: f64) -> String {
    to_json(&ProjectionOut {
        constant: Float17(approx.constant),
        c: floats(&approx.coefficients),
        residual_orthogonality: Float17(residual),
    })
}

#[derive(Serialize)]
struct SimulationOut<'a> {
    p_hat: Vec<Float17>,
    se: Vec<Float17>,
    n_samples: usize,
    seed: u64,
    batch_size: usize,
    model: &'a Value,
}

pub fn simulation_to_json(report: &SimulationReport, model: &Value) -> String {
    to_json(&SimulationOut {
        p_hat: floats(&report.estimates),
        se: floats(&report.standard_errors),
        n_samples: report.samples,
        seed: report.seed,
        batch_size: report.batch_size,
        model,
    })
}

pub fn simulation_to_csv(report: &SimulationReport) -> String {
    let mut out = String::from("k,p_hat,se\n");
    for (k, (p, se)) in report.estimates.iter().zip(&report.standard_errors).enumerate() {
        out.push_str(&format!("{},{},{}\n", k + 1, format_f64(*p), format_f64(*se)));
    }
    out
}

#[derive(Serialize)]
struct QualityEstimateOut<'a> {
    n: usize,
    q_hat: Vec<SetValue>,
    se: Vec<SetValue>,
    n_samples: usize,
    seed: u64,
    model: &'a Value,
}

pub fn quality_estimate_to_json(est: &QualityEstimate, model: &Value) -> String {
    to_json(&QualityEstimateOut {
        n: est.n,
        q_hat: set_values(est.n, |m| est.estimates[m as usize]),
        se: set_values(est.n, |m| est.standard_errors[m as usize]),
        n_samples: est.samples,
        seed: est.seed,
        model,
    })
}

#[derive(Serialize)]
struct WeibullCheckOut {
    is_weibull_compatible: bool,
    recovered_rates: Option<Vec<Float17>>,
    max_deviation: Float17,
    reason: Option<String>,
}

pub fn weibull_check_to_json(check: &WeibullCheck) -> String {
    to_json(&WeibullCheckOut {
        is_weibull_compatible: check.is_weibull_compatible,
        recovered_rates: check.recovered_rates.as_deref().map(floats),
        max_deviation: Float17(check.max_deviation),
        reason: check.reason.clone(),
    })
}
