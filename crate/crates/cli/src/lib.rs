//! Command implementations behind the `startensor` binary. Every command
//! returns its exit code and the JSON report for standard output.

pub mod model;

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::{json, Value};
use startensor::network::{check_causal_with, evaluate_with, validate as validate_network, NetworkError, PlanStrategy};
use startensor::star_tensor::{check_normalized_with, check_positive_with, Positivity, PSD_TOLERANCE};
use startensor::{Direction, StarTensor, Tolerance};

use model::{BuildOptions, Model, OutputMode, ParseError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Plan {
    Greedy,
    Exact,
}

impl Plan {
    fn strategy(self) -> PlanStrategy {
        match self {
            Plan::Greedy => PlanStrategy::Greedy,
            Plan::Exact => PlanStrategy::Exhaustive,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Plan::Greedy => "greedy",
            Plan::Exact => "exact",
        }
    }
}

pub struct Outcome {
    pub code: i32,
    pub report: String,
}

impl Outcome {
    fn new<T: Serialize>(code: i32, report: &T) -> Outcome {
        let mut report = serde_json::to_string_pretty(report).expect("reports serialize");
        report.push('\n');
        Outcome { code, report }
    }

    fn parse_error(e: &ParseError) -> Outcome {
        log::error!("{e}");
        Outcome::new(EXIT_PARSE, &json!({ "error": e.to_string(), "passed": false }))
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    detail: Value,
}

fn tolerance(tol: Option<f64>) -> Tolerance {
    tol.map(|t| Tolerance::new(t, Tolerance::default().rtol)).unwrap_or_default()
}

fn load(path: &Path, max_n: usize, tol: Option<f64>) -> Result<Model, ParseError> {
    let file = model::read(path)?;
    Model::build(file, &BuildOptions { max_n, tol: tol.unwrap_or(1e-10) })
}

fn failure_checks(m: &Model) -> Vec<Check> {
    let algebras = m.algebra_failures.iter().map(|f| Check {
        name: format!("algebra:{}", f.name),
        passed: false,
        detail: json!(f),
    });
    let tensors =
        m.tensor_failures.iter().map(|f| Check { name: format!("tensor:{}", f.name), passed: false, detail: json!(f) });
    algebras.chain(tensors).collect()
}

fn positivity_detail(p: &Positivity) -> Value {
    match p {
        Positivity::Positive(c) => json!({ "residual": c.residual }),
        Positivity::NotPositive(w) => json!({ "witness": w }),
    }
}

/// Axioms of every algebra, construction of every tensor, positivity and
/// normalization of every tensor, network validity and causality.
pub fn validate(path: &Path, max_n: usize, tol: Option<f64>) -> Outcome {
    let m = match load(path, max_n, tol) {
        Ok(m) => m,
        Err(e) => return Outcome::parse_error(&e),
    };
    let t = tolerance(tol);
    let mut checks = failure_checks(&m);
    for (name, a) in &m.algebras {
        let r = a.verify_axioms_with(max_n, tol.unwrap_or(1e-10));
        checks.push(Check { name: format!("algebra:{name}"), passed: r.passed(), detail: json!(r) });
    }
    for (name, st) in &m.tensors {
        let p = check_positive_with(st, tol.unwrap_or(PSD_TOLERANCE));
        checks.push(Check { name: format!("positive:{name}"), passed: p.is_positive(), detail: positivity_detail(&p) });
        if st.directions().is_some() {
            let r = check_normalized_with(st, t).expect("directed");
            checks.push(Check { name: format!("normalized:{name}"), passed: r.passed, detail: json!(r) });
        }
    }
    if let Some(net) = &m.network {
        let v = validate_network(net);
        checks.push(Check { name: "network".into(), passed: v.is_ok(), detail: json!(v.issues) });
        if net.nodes().iter().all(|(_, t)| t.directions().is_some()) {
            let c = check_causal_with(net, t);
            checks.push(Check { name: "causal".into(), passed: c.causal, detail: json!(c.issues) });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    info!("{}: {} of {} checks passed", path.display(), checks.iter().filter(|c| c.passed).count(), checks.len());
    let code = if passed { EXIT_PASS } else { EXIT_FAIL };
    Outcome::new(code, &json!({ "checks": checks, "file": path.display().to_string(), "passed": passed }))
}

/// 17 significant digits.
fn number(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() { format!("{v:.16e}") } else { "null".into() };
    RawValue::from_string(text).expect("valid JSON number")
}

/// Fields in lexicographic order.
#[derive(Serialize)]
struct EvalReport {
    format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<String>>,
    labels: Vec<String>,
    normalized: bool,
    output: OutputMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<String>>,
    plan: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    tables: Option<BTreeMap<String, BTreeMap<String, Box<RawValue>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<BTreeMap<String, Box<RawValue>>>,
}

fn error_outcome(code: i32, e: impl std::fmt::Display) -> Outcome {
    log::error!("{e}");
    Outcome::new(code, &json!({ "error": e.to_string(), "passed": false }))
}

fn key(labels: &[String], elements: &[&str]) -> String {
    labels.iter().zip(elements).map(|(l, e)| format!("{l}={e}")).collect::<Vec<_>>().join(",")
}

/// All configurations of `positions` of `t`, with their element names.
fn configurations(t: &StarTensor, positions: &[usize]) -> Vec<(Vec<usize>, Vec<String>)> {
    let idx = t.tensor().indices();
    let mut out = vec![(Vec::new(), Vec::new())];
    for &p in positions {
        let basis = &idx[p].basis;
        out = out
            .into_iter()
            .flat_map(|(v, n): (Vec<usize>, Vec<String>)| {
                (0..basis.len()).map(move |k| {
                    let (mut v, mut n) = (v.clone(), n.clone());
                    v.push(k);
                    n.push(basis.elements()[k].clone());
                    (v, n)
                })
            })
            .collect();
    }
    out
}

pub fn eval(path: &Path, normalize: bool, plan: Plan, tol: Option<f64>) -> Outcome {
    let m = match load(path, 3, tol) {
        Ok(m) => m,
        Err(e) => return Outcome::parse_error(&e),
    };
    if m.failed() {
        let checks = failure_checks(&m);
        return Outcome::new(EXIT_FAIL, &json!({ "checks": checks, "passed": false }));
    }
    let Some(net) = &m.network else {
        return Outcome::parse_error(&ParseError::Invalid("the file declares no network".into()));
    };
    let v = validate_network(net);
    if !v.is_ok() {
        return Outcome::new(
            EXIT_FAIL,
            &json!({ "checks": [Check { name: "network".into(), passed: false, detail: json!(v.issues) }], "passed": false }),
        );
    }
    let result = match evaluate_with(net, plan.strategy()) {
        Ok(r) => r,
        Err(e @ NetworkError::PlannerLimit { .. }) => return error_outcome(EXIT_FAIL, e),
        Err(e) => return error_outcome(EXIT_FAIL, e),
    };
    let normalize = normalize || m.file.normalize;
    let labels: Vec<String> = result.labels().into_iter().map(String::from).collect();
    let mut report = EvalReport {
        format: model::FORMAT,
        inputs: None,
        labels: labels.clone(),
        normalized: normalize,
        output: m.file.output,
        outputs: None,
        plan: plan.name(),
        tables: None,
        value: None,
        values: None,
    };
    match m.file.output {
        OutputMode::Scalar => {
            let Some(v) = result.tensor().scalar_value() else {
                return error_outcome(
                    EXIT_FAIL,
                    format!("scalar output requested but the network has open indices {labels:?}"),
                );
            };
            report.value = Some(number(v));
        }
        OutputMode::Distribution => {
            let tensor = if normalize {
                match startensor::network::to_probability(&result) {
                    Ok(t) => t,
                    Err(e) => return error_outcome(EXIT_FAIL, e),
                }
            } else {
                result.tensor().clone()
            };
            let all: Vec<usize> = (0..labels.len()).collect();
            let values = configurations(&result, &all)
                .into_iter()
                .map(|(ix, names)| {
                    let names: Vec<&str> = names.iter().map(String::as_str).collect();
                    (key(&labels, &names), number(tensor.get(&ix)))
                })
                .collect();
            report.values = Some(values);
        }
        OutputMode::StochasticMap => {
            let dirs: Vec<Direction> =
                result.directions().map(<[_]>::to_vec).unwrap_or_else(|| vec![Direction::Out; labels.len()]);
            let ins: Vec<usize> = (0..labels.len()).filter(|&k| dirs[k] == Direction::In).collect();
            let outs: Vec<usize> = (0..labels.len()).filter(|&k| dirs[k] == Direction::Out).collect();
            let in_labels: Vec<String> = ins.iter().map(|&k| labels[k].clone()).collect();
            let out_labels: Vec<String> = outs.iter().map(|&k| labels[k].clone()).collect();
            let mut tables = BTreeMap::new();
            for (iv, inames) in configurations(&result, &ins) {
                let mut entries = Vec::new();
                for (ov, onames) in configurations(&result, &outs) {
                    let mut ix = vec![0; labels.len()];
                    for (p, v) in ins.iter().zip(&iv).chain(outs.iter().zip(&ov)) {
                        ix[*p] = *v;
                    }
                    entries.push((onames, result.tensor().get(&ix)));
                }
                if normalize {
                    let sum: f64 = entries.iter().map(|(_, v)| v.max(0.0)).sum();
                    if sum <= startensor::network::NEGATIVITY_TOLERANCE {
                        return error_outcome(EXIT_FAIL, NetworkError::ZeroMass(sum));
                    }
                    entries.iter_mut().for_each(|(_, v)| *v = v.max(0.0) / sum);
                }
                let inames: Vec<&str> = inames.iter().map(String::as_str).collect();
                let table = entries
                    .into_iter()
                    .map(|(names, v)| {
                        let names: Vec<&str> = names.iter().map(String::as_str).collect();
                        (key(&out_labels, &names), number(v))
                    })
                    .collect();
                tables.insert(key(&in_labels, &inames), table);
            }
            report.inputs = Some(in_labels);
            report.outputs = Some(out_labels);
            report.tables = Some(tables);
        }
    }
    info!("{}: evaluated {} open indices with the {} planner", path.display(), labels.len(), plan.name());
    Outcome::new(EXIT_PASS, &report)
}

/// Axiom report for every declared algebra.
pub fn axioms(path: &Path, max_n: usize, tol: Option<f64>) -> Outcome {
    let m = match load(path, max_n, tol) {
        Ok(m) => m,
        Err(e) => return Outcome::parse_error(&e),
    };
    if m.file.algebras.is_empty() {
        return Outcome::parse_error(&ParseError::Invalid("the file declares no algebras".into()));
    }
    let mut reports = BTreeMap::new();
    for f in &m.algebra_failures {
        reports.insert(f.name.clone(), json!(f.axioms));
    }
    for (name, a) in &m.algebras {
        reports.insert(name.clone(), json!(a.verify_axioms_with(max_n, tol.unwrap_or(1e-10))));
    }
    let passed = m.algebra_failures.is_empty()
        && reports.values().all(|r| r["checks"].as_array().is_some_and(|c| c.iter().all(|x| x["passed"] == true)));
    for (name, r) in &reports {
        for c in r["checks"].as_array().into_iter().flatten().filter(|c| c["passed"] == false) {
            log::warn!("{name}: {} failed (residual {})", c["name"], c["residual"]);
        }
    }
    let code = if passed { EXIT_PASS } else { EXIT_FAIL };
    Outcome::new(code, &json!({ "algebras": reports, "max_n": max_n, "passed": passed }))
}
