//! The `optimize`, `simulate` and `landscape` commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use smoothopt_core::cohesive::{ChainObjective, ZoneMap};
use smoothopt_core::objectives::{Quadratic, Step};
use smoothopt_core::optimizer::{Driver, Event, RunReport};
use smoothopt_core::smoothing::{estimate_objective, NormalPointSet, SmoothingConfig};
use smoothopt_core::{DesignSpace, Error, Objective, OptimizerState, ScalarField, SeededStream, SobolSet};

use crate::config::{ObjectiveKind, RunConfig};
use crate::external::ExternalObjective;
use crate::format::num;
use crate::parallel::{pool, PoolExecutor, PoolObjective};
use crate::store::{write_atomic, Resume, RunFiles, StoreError};

pub const CONFIG_ECHO: &str = "config.ini";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const LOAD_DISPLACEMENT_FILE: &str = "load_displacement.csv";
pub const LANDSCAPE_FILE: &str = "landscape.csv";
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Evaluation(String),
    #[error("{0}")]
    Io(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Evaluation(_) => 3,
            CommandError::Io(_) => 1,
        }
    }
}

impl From<StoreError> for CommandError {
    fn from(e: StoreError) -> Self {
        CommandError::Io(e.to_string())
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::SobolDimension(_) | Error::SobolCount(_) => {
                CommandError::Config(e.to_string())
            }
            _ => CommandError::Evaluation(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CommandError>;

pub fn build_objective(config: &RunConfig) -> Result<Box<dyn Objective>> {
    let dim = config.dim();
    Ok(match &config.objective.kind {
        ObjectiveKind::HerbieStep(h) => Box::new(*h),
        ObjectiveKind::Quadratic { a, b, c } => Box::new(Quadratic::new(a.clone(), b.clone(), *c)?),
        ObjectiveKind::Step { axis, location, height } => Box::new(Step { axis: *axis, location: *location, height: *height }),
        ObjectiveKind::External(spec) => Box::new(ExternalObjective::new(spec.clone())),
        ObjectiveKind::CohesiveChain(spec) => Box::new(ChainObjective::new(spec.model()?, ZoneMap { zones: dim })?),
    })
}

fn space(config: &RunConfig) -> Result<DesignSpace> {
    Ok(config.design.space()?)
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub x_star: Vec<f64>,
    pub final_objective: f64,
    pub best_raw_value: f64,
    pub best_raw_site: Vec<f64>,
    pub evaluations: usize,
}

/// Runs `config.execution.runs` seeded optimizations and writes every
/// output file under `config.execution.out`.
pub fn optimize(config: &RunConfig, resume: bool) -> Result<Vec<RunSummary>> {
    let out = &config.execution.out;
    write_atomic(&out.join(CONFIG_ECHO), config.to_ini().as_bytes())?;
    let space = space(config)?;
    let objective = build_objective(config)?;
    let workers = pool(config.execution.workers).map_err(|e| CommandError::Io(e.to_string()))?;
    let executor = PoolExecutor::new(&workers);
    let pooled = PoolObjective::new(objective.as_ref(), &workers);
    let driver = Driver::new(&config.optimizer, &space, &pooled, &executor)?;

    let mut summaries = Vec::with_capacity(config.execution.runs);
    for run in 0..config.execution.runs {
        let seed = config.execution.seed + run as u64;
        let dir = run_dir(out, run);
        let report = optimize_one(&driver, &dir, seed, resume)?;
        summaries.push(RunSummary {
            run,
            seed,
            x_star: space.to_physical(&report.x_star)?,
            final_objective: report.final_objective,
            best_raw_value: report.best_raw.as_ref().map_or(f64::NAN, |b| b.value),
            best_raw_site: match &report.best_raw {
                Some(b) => space.to_physical(&b.site)?,
                None => vec![f64::NAN; space.dim()],
            },
            evaluations: report.evaluations,
        });
    }
    write_summary(out, &summaries)?;
    Ok(summaries)
}

pub fn run_dir(out: &Path, run: usize) -> PathBuf {
    out.join(format!("run-{run:03}"))
}

fn optimize_one(driver: &Driver<'_>, dir: &Path, seed: u64, resume: bool) -> Result<RunReport> {
    let stream = SeededStream::new(seed, 0);
    let space = driver.space();
    let n0 = driver.config().move_limit.n0;
    let (mut files, state) = if resume { RunFiles::resume(dir, n0)? } else { (RunFiles::create(dir)?, Resume::Fresh) };
    let mut store_error: Option<StoreError> = None;
    let mut observer = |event: Event<'_>| -> smoothopt_core::Result<()> {
        let written = match event {
            Event::Doe(records) => files.append_records(records),
            Event::Iteration(o) => {
                let physical = space.to_physical(&o.x_next)?;
                files.append_records(&o.new_records).and_then(|_| files.append_trace(o, &physical))
            }
        };
        written.map_err(|e| {
            let msg = e.to_string();
            store_error = Some(e);
            Error::Evaluation(msg)
        })
    };
    let result = match state {
        Resume::Fresh => driver.run(stream, &mut observer),
        Resume::Doe(records) => driver.start_from(records).and_then(|s| driver.run_from(s, stream, Vec::new(), &mut observer)),
        Resume::Trace { records, trace } => {
            let last = trace.last().expect("trace resume has a last line");
            let mut dataset = smoothopt_core::NnIndex::new(space.clone());
            dataset.insert_batch(records)?;
            let state = OptimizerState::restore(
                last.k + 1,
                last.x_next.clone(),
                last.next_ranges.clone(),
                last.next_sigmas.clone(),
                Some(last.steps.clone()),
                dataset,
            )?;
            driver.run_from(state, stream, trace, &mut observer)
        }
    };
    match (result, store_error) {
        (_, Some(e)) => Err(e.into()),
        (r, None) => Ok(r?),
    }
}

/// Equal-width bins over `[min, max]`; bin index per value and counts.
pub fn histogram(values: &[f64], bins: usize) -> (Vec<(f64, f64, usize)>, Vec<Option<usize>>) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return (Vec::new(), vec![None; values.len()]);
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = if hi > lo { bins } else { 1 };
    let width = (hi - lo) / bins as f64;
    let index = |v: f64| if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
    let mut counts = vec![0; bins];
    let assigned: Vec<Option<usize>> = values
        .iter()
        .map(|&v| {
            v.is_finite().then(|| {
                let i = index(v);
                counts[i] += 1;
                i
            })
        })
        .collect();
    let table = (0..bins).map(|i| (lo + width * i as f64, if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 }, counts[i])).collect();
    (table, assigned)
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CommandError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CommandError::Io(e.to_string()))
}

fn write_summary(out: &Path, summaries: &[RunSummary]) -> Result<()> {
    let d = summaries.first().map_or(0, |s| s.x_star.len());
    let finals: Vec<f64> = summaries.iter().map(|s| s.final_objective).collect();
    let (table, bins) = histogram(&finals, HISTOGRAM_BINS);

    let mut header = vec!["run".to_string(), "seed".to_string()];
    header.extend((0..d).map(|i| format!("x_star_{i}")));
    header.push("final_objective".into());
    header.push("best_raw_value".into());
    header.extend((0..d).map(|i| format!("best_raw_{i}")));
    header.push("evaluations".into());
    header.push("histogram_bin".into());
    let rows = summaries
        .iter()
        .zip(&bins)
        .map(|(s, bin)| {
            let mut row = vec![s.run.to_string(), s.seed.to_string()];
            row.extend(s.x_star.iter().map(|v| num(*v)));
            row.push(num(s.final_objective));
            row.push(num(s.best_raw_value));
            row.extend(s.best_raw_site.iter().map(|v| num(*v)));
            row.push(s.evaluations.to_string());
            row.push(bin.map_or(String::new(), |b| b.to_string()));
            row
        })
        .collect();
    write_atomic(&out.join(SUMMARY_FILE), &csv_bytes(header, rows)?)?;

    let header = vec!["bin".into(), "lower".into(), "upper".into(), "count".into()];
    let rows = table.iter().enumerate().map(|(i, (lo, hi, c))| vec![i.to_string(), num(*lo), num(*hi), c.to_string()]).collect();
    write_atomic(&out.join(HISTOGRAM_FILE), &csv_bytes(header, rows)?)?;
    Ok(())
}

/// Parses a comma or space separated vector.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    let items = crate::config::split_list(s);
    if items.is_empty() {
        return Err(CommandError::Config(format!("empty vector {s:?}")));
    }
    items
        .iter()
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CommandError::Config(format!("malformed number {t:?} in {s:?}"))),
        })
        .collect()
}

/// One simulation at a physical design; returns the QoI. The cohesive
/// chain also writes its load-displacement history.
pub fn simulate(config: &RunConfig, design: &[f64]) -> Result<f64> {
    if design.len() != config.dim() {
        return Err(CommandError::Config(format!("design has {} entries, expected {}", design.len(), config.dim())));
    }
    match &config.objective.kind {
        ObjectiveKind::CohesiveChain(spec) => {
            let objective = ChainObjective::new(spec.model()?, ZoneMap { zones: config.dim() })?;
            let history = objective.history(design)?;
            let header = vec!["step".into(), "t".into(), "displacement".into(), "force".into()];
            let rows = history
                .steps
                .iter()
                .enumerate()
                .map(|(k, s)| vec![k.to_string(), num(s.t), num(s.displacement), num(s.force)])
                .collect();
            write_atomic(&config.execution.out.join(LOAD_DISPLACEMENT_FILE), &csv_bytes(header, rows)?)?;
            Ok(history.mechanical_work())
        }
        ObjectiveKind::External(spec) => Ok(ExternalObjective::new(spec.clone()).evaluate(design)?),
        other => Err(CommandError::Config(format!("simulate needs a cohesive_chain or external objective, not {}", other.name()))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeRequest {
    pub axes: Vec<usize>,
    pub grid: usize,
    /// Physical standard deviations applied to every axis; 0 means raw.
    pub sigmas: Vec<f64>,
    /// Fixed coordinates; defaults to the box centre.
    pub at: Option<Vec<f64>>,
}

struct Field<'a>(&'a dyn Objective);

impl ScalarField for Field<'_> {
    fn value(&self, y: &[f64]) -> smoothopt_core::Result<f64> {
        self.0.evaluate(y)
    }
}

/// Evaluates `f` and its smoothed versions on a regular grid over the
/// chosen axes and writes the landscape CSV. Returns the rows.
pub fn landscape(config: &RunConfig, request: &LandscapeRequest) -> Result<Vec<Vec<f64>>> {
    let d = config.dim();
    let design = &config.design;
    if request.axes.is_empty() || request.axes.len() > 2 {
        return Err(CommandError::Config("landscape takes one or two axes".into()));
    }
    if request.axes.iter().any(|&a| a >= d) || (request.axes.len() == 2 && request.axes[0] == request.axes[1]) {
        return Err(CommandError::Config(format!("axes {:?} must be distinct and below {d}", request.axes)));
    }
    if request.grid < 2 {
        return Err(CommandError::Config("grid needs at least two points per axis".into()));
    }
    if request.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(CommandError::Config("sigmas must be finite and non-negative".into()));
    }
    let base = match &request.at {
        Some(at) if at.len() == d => at.clone(),
        Some(at) => return Err(CommandError::Config(format!("--at has {} entries, expected {d}", at.len()))),
        None => (0..d).map(|i| 0.5 * (design.lower[i] + design.upper[i])).collect(),
    };
    let line = |axis: usize| -> Vec<f64> {
        let (lo, hi) = (design.lower[axis], design.upper[axis]);
        (0..request.grid).map(|i| lo + (hi - lo) * i as f64 / (request.grid - 1) as f64).collect()
    };
    let mut points: Vec<Vec<f64>> = Vec::new();
    match request.axes[..] {
        [a] => {
            for v in line(a) {
                let mut x = base.clone();
                x[a] = v;
                points.push(x);
            }
        }
        [a, b] => {
            for va in line(a) {
                for vb in line(b) {
                    let mut x = base.clone();
                    x[a] = va;
                    x[b] = vb;
                    points.push(x);
                }
            }
        }
        _ => unreachable!("axis count checked above"),
    }

    let objective = build_objective(config)?;
    let workers = pool(config.execution.workers).map_err(|e| CommandError::Io(e.to_string()))?;
    let normal = if request.sigmas.iter().any(|&s| s > 0.0) {
        let set = SobolSet::new(d, config.optimizer.samples, config.optimizer.skip)?;
        Some(NormalPointSet::from_sobol(&set)?)
    } else {
        None
    };
    let field = Field(objective.as_ref());
    let rows: Vec<smoothopt_core::Result<Vec<f64>>> = {
        use rayon::prelude::*;
        workers.install(|| {
            points
                .par_iter()
                .map(|x| {
                    let f = objective.evaluate(x)?;
                    let mut row: Vec<f64> = request.axes.iter().map(|&a| x[a]).collect();
                    row.push(f);
                    for &s in &request.sigmas {
                        if s == 0.0 {
                            row.push(f);
                        } else {
                            let cfg = SmoothingConfig::new(vec![s; d], config.optimizer.move_limit.delta)?;
                            row.push(estimate_objective(x, &cfg, normal.as_ref().expect("built for positive sigmas"), &field)?.mean);
                        }
                    }
                    Ok(row)
                })
                .collect()
        })
    };
    let rows = rows.into_iter().collect::<smoothopt_core::Result<Vec<_>>>()?;

    let mut header: Vec<String> = request.axes.iter().map(|a| format!("x{a}")).collect();
    header.push("f".into());
    header.extend(request.sigmas.iter().map(|s| format!("smoothed_sigma_{s}")));
    let text_rows = rows.iter().map(|r| r.iter().map(|v| num(*v)).collect()).collect();
    write_atomic(&config.execution.out.join(LANDSCAPE_FILE), &csv_bytes(header, text_rows)?)?;
    Ok(rows)
}

/// Prints the QoI in the exchange format.
pub fn print_value(out: &mut dyn Write, v: f64) -> std::io::Result<()> {
    writeln!(out, "{}", num(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_finite_value() {
        let (table, bins) = histogram(&[0.0, 1.0, 0.5, 0.99, f64::NAN], 4);
        assert_eq!(table.len(), 4);
        assert_eq!(table.iter().map(|t| t.2).sum::<usize>(), 4);
        assert_eq!(bins, vec![Some(0), Some(3), Some(2), Some(3), None]);
        assert_eq!(table[3].1, 1.0);
        let (flat, b) = histogram(&[2.0, 2.0], 10);
        assert_eq!(flat, vec![(2.0, 2.0, 2)]);
        assert_eq!(b, vec![Some(0), Some(0)]);
        assert!(histogram(&[], 3).0.is_empty());
    }

    #[test]
    fn vectors_parse_strictly() {
        assert_eq!(parse_vector("0.5, 1").unwrap(), vec![0.5, 1.0]);
        assert_eq!(parse_vector("0.5 1").unwrap(), vec![0.5, 1.0]);
        assert!(parse_vector("").is_err());
        assert!(parse_vector("1,x").is_err());
        assert!(parse_vector("nan").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CommandError::from(Error::invalid("x")).exit_code(), 2);
        assert_eq!(CommandError::from(Error::SolverDiverged { step: 1, residual: 1.0 }).exit_code(), 3);
        assert_eq!(CommandError::from(Error::Evaluation("x".into())).exit_code(), 3);
    }
}
