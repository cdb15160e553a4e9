//! Reduced delamination model: a half-beam chain bonded to a rigid
//! mid-plane through an exponential cohesive law, pulled open at its first
//! node under displacement control.
//!
//! Each load step minimizes
//!
//! ```text
//! Π(u) = ½ k_bend Σ (u_{i-1} - 2u_i + u_{i+1})² + Σ_bonded h s_j φ(2u_j, 0)
//! ```
//!
//! with `u_0` prescribed, starting from the previous step's solution. The
//! quantity of interest is the negative trapezoidal external work.

mod law;

pub use law::{cohesive_potential, cohesive_traction, CohesiveParams};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::BandedSpd;
use crate::objectives::Objective;
use law::{normal_stiffness_unchecked, potential_unchecked, traction_unchecked};

/// Newton iteration cap per load step.
pub const NEWTON_MAX_ITERS: usize = 200;
/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;
/// Backtracking factor.
pub const BACKTRACK: f64 = 0.5;
/// Smallest step fraction tried by the line search.
const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;
/// Energy rise tolerated when the line search stalls on rounding.
const ROUNDING_SLACK: f64 = 1e-12;
/// Multiple of `ε·‖H‖·‖u‖` below which the residual is treated as converged.
const ROUNDING_FLOOR: f64 = 64.0;
/// Multiple of `ε·|E|` below which a predicted energy decrease is not resolvable.
const ENERGY_NOISE: f64 = 1e3;
/// Relative Hessian shift used when the Newton matrix is not positive definite.
const SHIFT_SEED: f64 = 1e-8;

/// Node count of the reference chain.
pub const REFERENCE_NODES: usize = 101;
/// Bending stiffness of the reference chain. The peak reaction of the uniform
/// chain is then about twice the peak force of one bonded node.
pub const REFERENCE_K_BEND: f64 = 1e4;
/// Unbonded nodes at the loaded end of the reference chain.
pub const REFERENCE_PRECRACK: usize = 10;
/// Reference load ramp.
pub const REFERENCE_LOAD: LoadSchedule = LoadSchedule { final_displacement: 0.2, steps: 100 };

/// Linear displacement ramp `û(t) = t` up to `final_displacement` in
/// `steps` equal increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSchedule {
    pub final_displacement: f64,
    pub steps: usize,
}

impl LoadSchedule {
    pub fn dt(&self) -> f64 {
        self.final_displacement / self.steps as f64
    }

    pub fn displacement(&self, k: usize) -> f64 {
        if k == self.steps {
            self.final_displacement
        } else {
            k as f64 * self.dt()
        }
    }
}

/// Maps a design vector of per-zone strength multipliers onto the bonded
/// nodes, split into equal contiguous blocks (earlier blocks take one extra
/// node when the split is uneven).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneMap {
    pub zones: usize,
}

impl ZoneMap {
    pub fn strength(&self, design: &[f64], n_nodes: usize, precrack: usize) -> Result<Vec<f64>> {
        if design.len() != self.zones {
            return Err(Error::DimensionMismatch { expected: self.zones, got: design.len() });
        }
        if let Some(&v) = design.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(alloc::format!("strength multiplier {v} must be positive")));
        }
        let bonded = n_nodes - precrack;
        if self.zones == 0 || self.zones > bonded {
            return Err(Error::invalid("zone count must lie between 1 and the bonded node count"));
        }
        let mut s = vec![1.0; n_nodes];
        let base = bonded / self.zones;
        let extra = bonded % self.zones;
        let mut j = precrack;
        for (z, &v) in design.iter().enumerate() {
            let len = base + usize::from(z < extra);
            for node in &mut s[j..j + len] {
                *node = v;
            }
            j += len;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub n_nodes: usize,
    pub k_bend: f64,
    /// Total chain length; element length is `length / (n_nodes - 1)`.
    pub length: f64,
    /// Nodes `0..precrack` carry no interface.
    pub precrack: usize,
    /// Per-node multiplier on `φ_n` and `φ_s`.
    pub strength: Vec<f64>,
    pub cohesive: CohesiveParams,
    pub load: LoadSchedule,
    /// Clamp every bonded node at zero opening instead of using the law.
    pub rigid_interface: bool,
}

impl ChainModel {
    pub fn new(n_nodes: usize, k_bend: f64, precrack: usize, cohesive: CohesiveParams, load: LoadSchedule) -> Result<Self> {
        let model = Self {
            n_nodes,
            k_bend,
            length: 1.0,
            precrack,
            strength: vec![1.0; n_nodes],
            cohesive,
            load,
            rigid_interface: false,
        };
        model.validate()?;
        Ok(model)
    }

    /// The pinned reference chain with uniform unit strength.
    pub fn reference() -> Self {
        Self::new(REFERENCE_NODES, REFERENCE_K_BEND, REFERENCE_PRECRACK, CohesiveParams::default(), REFERENCE_LOAD)
            .expect("reference chain is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 3 {
            return Err(Error::invalid("chain needs at least three nodes"));
        }
        if !(self.k_bend > 0.0 && self.k_bend.is_finite()) {
            return Err(Error::invalid("k_bend must be positive"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("chain length must be positive"));
        }
        if self.precrack == 0 || self.precrack >= self.n_nodes {
            return Err(Error::invalid("precrack must leave the loaded node free and at least one node bonded"));
        }
        if self.strength.len() != self.n_nodes {
            return Err(Error::DimensionMismatch { expected: self.n_nodes, got: self.strength.len() });
        }
        if self.strength.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("strength multipliers must be positive"));
        }
        if self.load.steps == 0 || !self.load.final_displacement.is_finite() {
            return Err(Error::invalid("load schedule needs a finite displacement and at least one step"));
        }
        self.cohesive.validate()
    }

    pub fn element_length(&self) -> f64 {
        self.length / (self.n_nodes - 1) as f64
    }

    /// Free unknowns are `u[1..free_end]`.
    fn free_end(&self) -> usize {
        if self.rigid_interface {
            self.precrack
        } else {
            self.n_nodes
        }
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n_nodes {
            return Err(Error::DimensionMismatch { expected: self.n_nodes, got: u.len() });
        }
        Ok(())
    }

    /// Total potential energy of the opening profile `u` (with `u[0]` the
    /// prescribed displacement).
    pub fn total_energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        Ok(self.energy(u))
    }

    /// Gradient of [`ChainModel::total_energy`] with respect to every entry of `u`.
    pub fn energy_gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        Ok(self.gradient(u))
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let mut bend = 0.0;
        for i in 1..self.n_nodes - 1 {
            let c = u[i - 1] - 2.0 * u[i] + u[i + 1];
            bend += c * c;
        }
        let h = self.element_length();
        let mut interface = 0.0;
        if !self.rigid_interface {
            for j in self.precrack..self.n_nodes {
                interface += h * self.strength[j] * potential_unchecked(2.0 * u[j], 0.0, &self.cohesive);
            }
        }
        0.5 * self.k_bend * bend + interface
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n_nodes;
        let mut g = vec![0.0; n];
        for i in 1..n - 1 {
            let c = self.k_bend * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
            g[i - 1] += c;
            g[i] -= 2.0 * c;
            g[i + 1] += c;
        }
        if !self.rigid_interface {
            let h = self.element_length();
            for j in self.precrack..n {
                g[j] += h * self.strength[j] * 2.0 * traction_unchecked(2.0 * u[j], 0.0, &self.cohesive).0;
            }
        }
        g
    }

    /// Hessian block of the free unknowns `u[1..free_end]`.
    fn free_hessian(&self, u: &[f64]) -> BandedSpd {
        let end = self.free_end();
        let m = end - 1;
        let mut hess = BandedSpd::zeros(m, 2);
        let stencil = [1.0, -2.0, 1.0];
        for i in 1..self.n_nodes - 1 {
            for (a, &ca) in stencil.iter().enumerate() {
                for (b, &cb) in stencil.iter().enumerate().take(a + 1) {
                    let (ra, rb) = (i - 1 + a, i - 1 + b);
                    if (1..end).contains(&ra) && (1..end).contains(&rb) {
                        hess.add(ra - 1, rb - 1, self.k_bend * ca * cb);
                    }
                }
            }
        }
        if !self.rigid_interface {
            let h = self.element_length();
            for j in self.precrack..end {
                let k = normal_stiffness_unchecked(2.0 * u[j], 0.0, &self.cohesive);
                hess.add(j - 1, j - 1, h * self.strength[j] * 4.0 * k);
            }
        }
        hess
    }

    /// Residual tolerance on the free gradient, ∞-norm.
    pub fn tolerance(&self) -> f64 {
        1e-10 * (self.cohesive.phi_n / self.cohesive.delta_n_star).max(1.0)
    }

    /// Smallest residual the gradient can resolve in double precision.
    fn rounding_floor(&self, hess: &BandedSpd, u: &[f64]) -> f64 {
        ROUNDING_FLOOR * f64::EPSILON * hess.max_abs() * inf_norm(u)
    }

    /// Damped Newton minimization of the energy with `u[0] = boundary_disp`,
    /// started from `u_prev`. `step` only labels errors.
    pub fn solve_time_step(&self, u_prev: &[f64], boundary_disp: f64, step: usize) -> Result<StepSolution> {
        self.check_len(u_prev)?;
        let end = self.free_end();
        let mut u = u_prev.to_vec();
        u[0] = boundary_disp;
        if self.rigid_interface {
            for v in &mut u[self.precrack..] {
                *v = 0.0;
            }
        }
        let tol = self.tolerance();
        let mut energy = self.energy(&u);
        for iteration in 0..NEWTON_MAX_ITERS {
            let grad = self.gradient(&u);
            let g = &grad[1..end];
            let gnorm = inf_norm(g);
            let hess = self.free_hessian(&u);
            if gnorm <= tol.max(self.rounding_floor(&hess, &u)) {
                return Ok(StepSolution { u, iterations: iteration, energy });
            }
            let mut shift = 0.0;
            let factor = loop {
                if let Some(f) = hess.cholesky(shift) {
                    break f;
                }
                shift = (2.0 * shift).max(SHIFT_SEED * hess.max_abs());
                if !shift.is_finite() || shift == 0.0 {
                    return Err(Error::SolverDiverged { step, residual: gnorm });
                }
            };
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let p = factor.solve_factored(&neg);
            let slope: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
            let mut trial = u.clone();
            let mut alpha = 1.0;
            let mut accepted = false;
            // below this the energy decrease is lost in rounding
            let resolvable = -slope > ENERGY_NOISE * f64::EPSILON * energy.abs();
            while resolvable && alpha >= MIN_STEP {
                for i in 1..end {
                    trial[i] = u[i] + alpha * p[i - 1];
                }
                let e = self.energy(&trial);
                if e <= energy + ARMIJO_C * alpha * slope {
                    energy = e;
                    accepted = true;
                    break;
                }
                alpha *= BACKTRACK;
            }
            if !accepted {
                // near convergence the energy change drowns in rounding;
                // take the full Newton step if it still reduces the residual
                for i in 1..end {
                    trial[i] = u[i] + p[i - 1];
                }
                let g_trial = self.gradient(&trial);
                let e = self.energy(&trial);
                if inf_norm(&g_trial[1..end]) < gnorm && e <= energy + ROUNDING_SLACK * energy.abs().max(self.cohesive.phi_n) {
                    energy = e;
                } else {
                    return Err(Error::SolverDiverged { step, residual: gnorm });
                }
            }
            u = trial;
        }
        let residual = inf_norm(&self.gradient(&u)[1..end]);
        if residual <= tol.max(self.rounding_floor(&self.free_hessian(&u), &u)) {
            return Ok(StepSolution { u, iterations: NEWTON_MAX_ITERS, energy });
        }
        Err(Error::SolverDiverged { step, residual })
    }

    /// `∂Π/∂u_0`, the force the loading device applies at the loaded node.
    pub fn reaction(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        Ok(self.k_bend * (u[0] - 2.0 * u[1] + u[2]))
    }

    /// Runs the full load schedule from the unloaded state.
    pub fn simulate(&self) -> Result<SimulationHistory> {
        self.validate()?;
        let mut u = vec![0.0; self.n_nodes];
        let mut steps = Vec::with_capacity(self.load.steps + 1);
        steps.push(StepRecord { t: 0.0, displacement: 0.0, force: 0.0, iterations: 0, profile: u.clone() });
        for k in 1..=self.load.steps {
            let disp = self.load.displacement(k);
            let sol = self.solve_time_step(&u, disp, k)?;
            u = sol.u;
            steps.push(StepRecord {
                t: disp,
                displacement: disp,
                force: self.reaction(&u)?,
                iterations: sol.iterations,
                profile: u.clone(),
            });
        }
        Ok(SimulationHistory { steps })
    }

    /// Copy of the model with the strength field set from `design`.
    pub fn with_design(&self, map: &ZoneMap, design: &[f64]) -> Result<Self> {
        let mut m = self.clone();
        m.strength = map.strength(design, self.n_nodes, self.precrack)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub displacement: f64,
    pub force: f64,
    pub iterations: usize,
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationHistory {
    /// Step 0 is the unloaded state.
    pub steps: Vec<StepRecord>,
}

impl SimulationHistory {
    /// Negative trapezoidal external work `-½ Σ (F^k + F^{k-1})(û^k - û^{k-1})`.
    pub fn mechanical_work(&self) -> f64 {
        mechanical_work(
            &self.steps.iter().map(|s| s.force).collect::<Vec<_>>(),
            &self.steps.iter().map(|s| s.displacement).collect::<Vec<_>>(),
        )
    }
}

/// Negative trapezoidal integral of `forces` over `displacements`.
pub fn mechanical_work(forces: &[f64], displacements: &[f64]) -> f64 {
    let mut w = 0.0;
    for k in 1..forces.len().min(displacements.len()) {
        w += (forces[k] + forces[k - 1]) * (displacements[k] - displacements[k - 1]);
    }
    -0.5 * w
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The chain as an objective over zone strength multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainObjective {
    pub model: ChainModel,
    pub map: ZoneMap,
}

impl ChainObjective {
    pub fn new(model: ChainModel, map: ZoneMap) -> Result<Self> {
        model.validate()?;
        map.strength(&vec![1.0; map.zones], model.n_nodes, model.precrack)?;
        Ok(Self { model, map })
    }

    pub fn history(&self, design: &[f64]) -> Result<SimulationHistory> {
        self.model.with_design(&self.map, design)?.simulate()
    }
}

impl Objective for ChainObjective {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.history(x)?.mechanical_work())
    }
}

/// Two nearby designs on a 1D slice bracketing a jump of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpBracket {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub value_lo: f64,
    pub value_hi: f64,
}

impl JumpBracket {
    pub fn gap(&self) -> f64 {
        self.lo.iter().zip(&self.hi).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `|W(hi) - W(lo)| / |W(lo)|`.
    pub fn relative_jump(&self) -> f64 {
        ((self.value_hi - self.value_lo) / self.value_lo).abs()
    }
}

/// Bisects `axis` of `base` between `lo` and `hi`, keeping the half with
/// the larger value change, until the bracket is narrower than `gap`.
pub fn bisect_jump(objective: &dyn Objective, base: &[f64], axis: usize, lo: f64, hi: f64, gap: f64) -> Result<JumpBracket> {
    if axis >= base.len() {
        return Err(Error::invalid("slice axis out of range"));
    }
    if !(lo < hi) || !(gap > 0.0) {
        return Err(Error::invalid("slice needs lo < hi and a positive gap"));
    }
    let at = |v: f64| {
        let mut x = base.to_vec();
        x[axis] = v;
        x
    };
    let (mut a, mut b) = (lo, hi);
    let mut fa = objective.evaluate(&at(a))?;
    let mut fb = objective.evaluate(&at(b))?;
    while b - a > gap {
        let m = 0.5 * (a + b);
        let fm = objective.evaluate(&at(m))?;
        if (fm - fa).abs() >= (fb - fm).abs() {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(JumpBracket { lo: at(a), hi: at(b), value_lo: fa, value_hi: fb })
}
