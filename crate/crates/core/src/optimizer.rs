//! The stochastic optimization loop: Latin hypercube start, per-iteration
//! perturbation sampling, nearest-neighbor surrogate refresh, smoothed
//! sub-problem, and the move-limit update of ranges and standard
//! deviations.
//!
//! Every random draw comes from a substream keyed by the iteration number,
//! so a run restored from its trace continues exactly as the original.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{EvaluationRecord, NnIndex, RecordTag};
use crate::error::{Error, Result};
use crate::objectives::{FailurePolicy, Objective};
use crate::sampling::{latin_hypercube, sample_truncated_normal, SeededStream, SobolSet};
use crate::smoothing::{AnchoredEstimator, NormalPointSet, Weighting};
use crate::space::{DesignSpace, ExtendedBox};
use crate::subproblem::{solve, RegionOfInterest, SubproblemSettings, Termination};

/// Perturbations this close to a stored site reuse its value.
pub const CACHE_TOLERANCE: f64 = 1e-14;
const DOE_SALT: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveLimitConfig {
    pub gamma_pan: f64,
    pub gamma_osc: f64,
    pub eta: f64,
    pub beta: f64,
    /// Perturbations per iteration are `alpha * d`.
    pub alpha: usize,
    /// Latin hypercube size.
    pub n0: usize,
    pub sigma_target: f64,
    pub sigma_max: f64,
    pub k_max: usize,
    pub delta: f64,
}

impl MoveLimitConfig {
    /// `α = 3`, `n0 = 3d`, `β = 2`, `δ = 3`, `γ_pan = 1.2`, `γ_osc = η = 0.8`,
    /// `k_max = 100`, `σ_max = 10 σ_target`.
    pub fn defaults(dim: usize, sigma_target: f64) -> Self {
        Self {
            gamma_pan: 1.2,
            gamma_osc: 0.8,
            eta: 0.8,
            beta: 2.0,
            alpha: 3,
            n0: 3 * dim,
            sigma_target,
            sigma_max: 10.0 * sigma_target,
            k_max: 100,
            delta: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        let finite = [self.gamma_pan, self.gamma_osc, self.eta, self.beta, self.sigma_target, self.sigma_max, self.delta];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("move-limit parameters must be finite".into());
        }
        if !(0.0 < self.gamma_osc) {
            return fail(format!("gamma_osc = {} must be positive", self.gamma_osc));
        }
        if !(self.gamma_osc <= self.eta) {
            return fail(format!("gamma_osc = {} must not exceed eta = {}", self.gamma_osc, self.eta));
        }
        if !(self.eta <= 1.0) {
            return fail(format!("eta = {} must not exceed 1", self.eta));
        }
        if !(1.0 <= self.gamma_pan) {
            return fail(format!("gamma_pan = {} must be at least 1", self.gamma_pan));
        }
        if !(1.0..=3.0).contains(&self.beta) {
            return fail(format!("beta = {} must lie in [1, 3]", self.beta));
        }
        if !(2..=10).contains(&self.alpha) {
            return fail(format!("alpha = {} must lie in [2, 10]", self.alpha));
        }
        if self.n0 == 0 {
            return fail("n0 must be at least 1".into());
        }
        if !(self.sigma_target > 0.0) {
            return fail(format!("sigma_target = {} must be positive", self.sigma_target));
        }
        if !(self.sigma_target <= self.sigma_max) {
            return fail(format!(
                "sigma_target = {} must not exceed sigma_max = {}",
                self.sigma_target, self.sigma_max
            ));
        }
        if !(self.delta > 0.0) {
            return fail(format!("delta = {} must be positive", self.delta));
        }
        Ok(())
    }

    pub fn clamp_sigma(&self, range: f64) -> f64 {
        (range / self.beta).max(self.sigma_target).min(self.sigma_max)
    }
}

/// New ranges and standard deviations from the normalized step `s^(k)` and
/// the previous one (`None` on the first iteration).
pub fn move_limit_update(
    step: &[f64],
    prev_step: Option<&[f64]>,
    ranges: &[f64],
    config: &MoveLimitConfig,
) -> (Vec<f64>, Vec<f64>) {
    let mut new_ranges = Vec::with_capacity(ranges.len());
    let mut sigmas = Vec::with_capacity(ranges.len());
    for i in 0..ranges.len() {
        let s = step[i].clamp(-1.0, 1.0);
        let c_hat = match prev_step {
            None => 1.0,
            Some(prev) => {
                let c = s * prev[i].clamp(-1.0, 1.0);
                c.signum() * libm::sqrt(c.abs())
            }
        };
        let c_hat = if c_hat.is_nan() { 0.0 } else { c_hat };
        let gamma = 0.5 * (config.gamma_pan * (1.0 + c_hat) + config.gamma_osc * (1.0 - c_hat));
        let lambda = config.eta + s.abs() * (gamma - config.eta);
        let r = lambda * ranges[i];
        new_ranges.push(r);
        sigmas.push(config.clamp_sigma(r));
    }
    (new_ranges, sigmas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub move_limit: MoveLimitConfig,
    pub subproblem: SubproblemSettings,
    /// Monte Carlo samples per smoothed estimate.
    pub samples: usize,
    /// Leading Sobol points dropped.
    pub skip: u64,
    pub weighting: Weighting,
    pub failure_policy: FailurePolicy,
}

impl OptimizerConfig {
    pub fn defaults(dim: usize, sigma_target: f64) -> Self {
        Self {
            move_limit: MoveLimitConfig::defaults(dim, sigma_target),
            subproblem: SubproblemSettings::default(),
            samples: 1 << 16,
            skip: (1 << 16) - 1,
            weighting: Weighting::default(),
            failure_policy: FailurePolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.move_limit.validate()?;
        self.subproblem.validate()?;
        if self.samples < 2 {
            return Err(Error::invalid("at least two Monte Carlo samples are needed"));
        }
        if let FailurePolicy::Penalty(p) = self.failure_policy {
            if !p.is_finite() {
                return Err(Error::invalid("penalty value must be finite"));
            }
        }
        Ok(())
    }
}

/// Runs independent per-index computations, possibly in parallel. Results
/// must come back in index order.
pub trait Executor: Sync {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>>;
}

/// Evaluates everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
        (0..n).map(f).collect()
    }
}

/// Lowest raw evaluation seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSeen {
    pub site: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    /// Index of the next iteration, starting at 1.
    pub k: usize,
    pub x: Vec<f64>,
    pub ranges: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub prev_steps: Option<Vec<f64>>,
    pub dataset: NnIndex,
    pub best: Option<BestSeen>,
}

impl OptimizerState {
    /// Rebuilds a state from persisted pieces; `best` is recomputed from
    /// the dataset.
    pub fn restore(
        k: usize,
        x: Vec<f64>,
        ranges: Vec<f64>,
        sigmas: Vec<f64>,
        prev_steps: Option<Vec<f64>>,
        dataset: NnIndex,
    ) -> Result<Self> {
        let d = dataset.space().dim();
        for len in [x.len(), ranges.len(), sigmas.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        if dataset.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut state = Self { k, x, ranges, sigmas, prev_steps, dataset, best: None };
        let records: Vec<EvaluationRecord> = state.dataset.records().to_vec();
        for r in &records {
            state.observe(r);
        }
        Ok(state)
    }

    fn observe(&mut self, record: &EvaluationRecord) {
        if record.tag == RecordTag::Failure {
            return;
        }
        if self.best.as_ref().map_or(true, |b| record.value < b.value) {
            self.best = Some(BestSeen { site: record.site.clone(), value: record.value });
        }
    }
}

/// One completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub k: usize,
    /// Region center `x^(k)`.
    pub x: Vec<f64>,
    pub ranges: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Sub-problem minimizer `x^(k+1)`.
    pub x_next: Vec<f64>,
    pub center_objective: f64,
    pub objective: f64,
    pub steps: Vec<f64>,
    pub inner_iterations: usize,
    pub termination: Termination,
    pub next_ranges: Vec<f64>,
    pub next_sigmas: Vec<f64>,
    pub dataset_size: usize,
    pub best_value: f64,
    /// Records appended during this iteration, in insertion order.
    pub new_records: Vec<EvaluationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Final sub-problem minimizer, internal units.
    pub x_star: Vec<f64>,
    pub final_objective: f64,
    /// Iterate with the lowest smoothed objective across the trace.
    pub best_smoothed: Option<(Vec<f64>, f64)>,
    pub sigmas: Vec<f64>,
    pub ranges: Vec<f64>,
    pub best_raw: Option<BestSeen>,
    pub evaluations: usize,
    pub trace: Vec<StepOutcome>,
}

/// Progress notifications emitted while a run advances.
#[derive(Debug)]
pub enum Event<'a> {
    Doe(&'a [EvaluationRecord]),
    Iteration(&'a StepOutcome),
}

/// Binds configuration, design space, objective and executor for one run.
pub struct Driver<'a> {
    config: &'a OptimizerConfig,
    space: &'a DesignSpace,
    objective: &'a dyn Objective,
    executor: &'a dyn Executor,
    points: NormalPointSet,
}

impl<'a> Driver<'a> {
    pub fn new(
        config: &'a OptimizerConfig,
        space: &'a DesignSpace,
        objective: &'a dyn Objective,
        executor: &'a dyn Executor,
    ) -> Result<Self> {
        config.validate()?;
        let points = NormalPointSet::from_sobol(&SobolSet::new(space.dim(), config.samples, config.skip)?)?;
        Ok(Self { config, space, objective, executor, points })
    }

    pub fn config(&self) -> &OptimizerConfig {
        self.config
    }

    pub fn space(&self) -> &DesignSpace {
        self.space
    }

    pub fn points(&self) -> &NormalPointSet {
        &self.points
    }

    /// Evaluates internal-unit sites through the objective, applying the
    /// failure policy.
    fn evaluate(&self, sites: &[Vec<f64>], iteration: usize, tag: RecordTag) -> Result<Vec<EvaluationRecord>> {
        let physical = sites.iter().map(|s| self.space.to_physical(s)).collect::<Result<Vec<_>>>()?;
        let results = self.objective.evaluate_batch(&physical);
        if results.len() != sites.len() {
            return Err(Error::Evaluation(format!("expected {} results, got {}", sites.len(), results.len())));
        }
        sites
            .iter()
            .zip(results)
            .map(|(site, result)| {
                let failure = match result {
                    Ok(v) if v.is_finite() => return Ok(EvaluationRecord { site: site.clone(), value: v, iteration, tag }),
                    Ok(v) => format!("objective returned non-finite value {v}"),
                    Err(e) => format!("{e}"),
                };
                match self.config.failure_policy {
                    FailurePolicy::Abort => Err(Error::Evaluation(failure)),
                    FailurePolicy::Penalty(p) => Ok(EvaluationRecord { site: site.clone(), value: p, iteration, tag: RecordTag::Failure }),
                }
            })
            .collect()
    }

    /// Latin hypercube start: evaluates `n0` designs and picks the first
    /// minimum as `x^(1)`.
    pub fn initialize(&self, stream: SeededStream) -> Result<OptimizerState> {
        let ml = &self.config.move_limit;
        let sites = latin_hypercube(ml.n0, self.space, stream.substream(DOE_SALT))?;
        let records = self.evaluate(&sites, 0, RecordTag::Doe)?;
        self.start_from(records)
    }

    /// Starting state from already evaluated Latin hypercube records.
    pub fn start_from(&self, records: Vec<EvaluationRecord>) -> Result<OptimizerState> {
        let ml = &self.config.move_limit;
        let d = self.space.dim();
        if records.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut best = 0;
        for (i, r) in records.iter().enumerate() {
            if r.value < records[best].value {
                best = i;
            }
        }
        let x = records[best].site.clone();
        let mut dataset = NnIndex::new(self.space.clone());
        dataset.insert_batch(records)?;
        OptimizerState::restore(1, x, vec![ml.beta * ml.sigma_max; d], vec![ml.sigma_max; d], None, dataset)
    }

    /// One pass of the loop body; advances `state` to `k + 1`.
    pub fn iterate(&self, state: &mut OptimizerState, stream: SeededStream) -> Result<StepOutcome> {
        let ml = &self.config.move_limit;
        let d = self.space.dim();
        let k = state.k;
        let n = ml.alpha * d;
        let ext = ExtendedBox::new(self.space.clone(), ml.delta, ml.sigma_target)?;
        let sites = sample_truncated_normal(&state.x, &state.sigmas, n, &ext, stream.substream(k as u64))?;

        let mut cached: Vec<Option<f64>> = Vec::with_capacity(n);
        for site in &sites {
            let hit = state.dataset.nn_query(site)?;
            cached.push((hit.distance <= CACHE_TOLERANCE).then_some(hit.value));
        }
        let fresh: Vec<Vec<f64>> = sites.iter().zip(&cached).filter(|(_, c)| c.is_none()).map(|(s, _)| s.clone()).collect();
        let mut evaluated = self.evaluate(&fresh, k, RecordTag::Perturbation)?.into_iter();
        let new_records: Vec<EvaluationRecord> = sites
            .iter()
            .zip(&cached)
            .map(|(site, c)| match c {
                Some(v) => EvaluationRecord { site: site.clone(), value: *v, iteration: k, tag: RecordTag::Perturbation },
                None => evaluated.next().expect("one result per fresh site"),
            })
            .collect();
        state.dataset.insert_batch(new_records.iter().cloned())?;
        for r in &new_records {
            state.observe(r);
        }

        let dataset = &state.dataset;
        let anchor = &state.x;
        let sigmas = &state.sigmas;
        let points = &self.points;
        let values = self.executor.map(points.count(), &|i| {
            let w = points.point(i);
            let z: Vec<f64> = (0..d).map(|j| anchor[j] + sigmas[j] * w[j]).collect();
            dataset.nn_predict(&z)
        })?;
        let estimator = AnchoredEstimator::from_values(anchor, sigmas, points, values)?.with_weighting(self.config.weighting);
        let roi = RegionOfInterest::new(self.space, &state.x, &state.ranges)?;
        let result = solve(&roi, &estimator, &self.config.subproblem)?;

        let x_next: Vec<f64> = (0..d).map(|i| self.space.wrap(i, result.minimizer[i])).collect();
        let steps: Vec<f64> = (0..d)
            .map(|i| (self.space.axis_diff(i, x_next[i], state.x[i]) / state.ranges[i]).clamp(-1.0, 1.0))
            .collect();
        let (next_ranges, next_sigmas) = move_limit_update(&steps, state.prev_steps.as_deref(), &state.ranges, ml);

        let outcome = StepOutcome {
            k,
            x: state.x.clone(),
            ranges: state.ranges.clone(),
            sigmas: state.sigmas.clone(),
            x_next: x_next.clone(),
            center_objective: result.center_objective,
            objective: result.objective,
            steps: steps.clone(),
            inner_iterations: result.iterations,
            termination: result.termination,
            next_ranges: next_ranges.clone(),
            next_sigmas: next_sigmas.clone(),
            dataset_size: state.dataset.len(),
            best_value: state.best.as_ref().map_or(f64::NAN, |b| b.value),
            new_records,
        };
        state.x = x_next;
        state.ranges = next_ranges;
        state.sigmas = next_sigmas;
        state.prev_steps = Some(steps);
        state.k = k + 1;
        Ok(outcome)
    }

    /// Continues `state` until `k > k_max`, reporting each iteration.
    pub fn run_from(
        &self,
        mut state: OptimizerState,
        stream: SeededStream,
        mut trace: Vec<StepOutcome>,
        observer: &mut dyn FnMut(Event<'_>) -> Result<()>,
    ) -> Result<RunReport> {
        while state.k <= self.config.move_limit.k_max {
            let outcome = self.iterate(&mut state, stream)?;
            observer(Event::Iteration(&outcome))?;
            trace.push(outcome);
        }
        let final_objective = trace.last().map_or(f64::NAN, |t| t.objective);
        let best_smoothed = trace
            .iter()
            .fold(None::<&StepOutcome>, |best, t| match best {
                Some(b) if b.objective <= t.objective => Some(b),
                _ => Some(t),
            })
            .map(|t| (t.x_next.clone(), t.objective));
        Ok(RunReport {
            x_star: state.x.clone(),
            final_objective,
            best_smoothed,
            sigmas: state.sigmas.clone(),
            ranges: state.ranges.clone(),
            best_raw: state.best.clone(),
            evaluations: state.dataset.len(),
            trace,
        })
    }

    /// Full run from a fresh Latin hypercube start.
    pub fn run(&self, stream: SeededStream, observer: &mut dyn FnMut(Event<'_>) -> Result<()>) -> Result<RunReport> {
        let state = self.initialize(stream)?;
        observer(Event::Doe(state.dataset.records()))?;
        self.run_from(state, stream, Vec::new(), observer)
    }
}
