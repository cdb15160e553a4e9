//! Text encodings shared by every output file: 17 significant digits for
//! reals, one JSON object per line for datasets and traces.

use serde::Deserialize;
use smoothopt_core::optimizer::StepOutcome;
use smoothopt_core::{EvaluationRecord, RecordTag, Termination};

/// Round-trip exact decimal form of `v`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        num(v)
    } else {
        "null".into()
    }
}

fn json_array(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| json_num(*x)).collect();
    format!("[{}]", items.join(","))
}

/// One dataset line, sites in internal units.
pub fn record_line(r: &EvaluationRecord) -> String {
    format!(
        "{{\"site\":{},\"value\":{},\"iteration\":{},\"tag\":\"{}\"}}",
        json_array(&r.site),
        json_num(r.value),
        r.iteration,
        r.tag.as_str()
    )
}

/// One trace line; `x_next_physical` repeats `x_next` in physical units.
pub fn trace_line(t: &StepOutcome, x_next_physical: &[f64]) -> String {
    format!(
        concat!(
            "{{\"k\":{},\"x\":{},\"ranges\":{},\"sigmas\":{},\"x_next\":{},\"x_next_physical\":{},",
            "\"center_objective\":{},\"objective\":{},\"steps\":{},\"inner_iterations\":{},\"termination\":\"{}\",",
            "\"next_ranges\":{},\"next_sigmas\":{},\"dataset_size\":{},\"best_value\":{}}}"
        ),
        t.k,
        json_array(&t.x),
        json_array(&t.ranges),
        json_array(&t.sigmas),
        json_array(&t.x_next),
        json_array(x_next_physical),
        json_num(t.center_objective),
        json_num(t.objective),
        json_array(&t.steps),
        t.inner_iterations,
        t.termination.as_str(),
        json_array(&t.next_ranges),
        json_array(&t.next_sigmas),
        t.dataset_size,
        json_num(t.best_value),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: unknown {what} {value:?}")]
    Unknown { line: usize, what: &'static str, value: String },
}

#[derive(Deserialize)]
struct RecordJson {
    site: Vec<f64>,
    value: f64,
    iteration: usize,
    tag: String,
}

pub fn parse_records(text: &str) -> Result<Vec<EvaluationRecord>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: RecordJson = serde_json::from_str(line).map_err(|source| ParseError::Json { line: i + 1, source })?;
        let tag = RecordTag::parse(&r.tag).ok_or(ParseError::Unknown { line: i + 1, what: "tag", value: r.tag.clone() })?;
        out.push(EvaluationRecord { site: r.site, value: r.value, iteration: r.iteration, tag });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct TraceJson {
    k: usize,
    x: Vec<f64>,
    ranges: Vec<f64>,
    sigmas: Vec<f64>,
    x_next: Vec<f64>,
    center_objective: Option<f64>,
    objective: Option<f64>,
    steps: Vec<f64>,
    inner_iterations: usize,
    termination: String,
    next_ranges: Vec<f64>,
    next_sigmas: Vec<f64>,
    dataset_size: usize,
    best_value: Option<f64>,
}

fn termination(s: &str) -> Option<Termination> {
    [Termination::MaxIters, Termination::GradientSmall, Termination::StepSmall].into_iter().find(|t| t.as_str() == s)
}

/// Parses a trace; `new_records` are left empty for the caller to refill.
pub fn parse_trace(text: &str) -> Result<Vec<StepOutcome>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let t: TraceJson = serde_json::from_str(line).map_err(|source| ParseError::Json { line: i + 1, source })?;
        let term = termination(&t.termination).ok_or(ParseError::Unknown { line: i + 1, what: "termination", value: t.termination.clone() })?;
        out.push(StepOutcome {
            k: t.k,
            x: t.x,
            ranges: t.ranges,
            sigmas: t.sigmas,
            x_next: t.x_next,
            center_objective: t.center_objective.unwrap_or(f64::NAN),
            objective: t.objective.unwrap_or(f64::NAN),
            steps: t.steps,
            inner_iterations: t.inner_iterations,
            termination: term,
            next_ranges: t.next_ranges,
            next_sigmas: t.next_sigmas,
            dataset_size: t.dataset_size,
            best_value: t.best_value.unwrap_or(f64::NAN),
            new_records: Vec::new(),
        });
    }
    Ok(out)
}
