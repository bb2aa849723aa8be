//! Restarted primal-dual hybrid gradient for `min c·x s.t. Gx ≤ h, 0 ≤ x ≤ u`.
//!
//! The solver works on the saddle function `L(x, y) = c·x − h·y + yᵀGx` over
//! `X = [0, u]` and `Y = {y ≥ 0}`. An inner loop takes projected PDHG steps and keeps a
//! uniform average of its iterates; the outer loop restarts from that average once the
//! normalized duality gap (ℓ∞ ball) has halved relative to the reference measured at the
//! start of the outer iteration, or once the inner loop hits its length cap.
//!
//! Every iteration costs exactly two sparse products. Gap and KKT evaluations share a
//! further two products at the averaged point and run on a geometric cadence: after
//! inner iteration `t` the next evaluation happens at `t + ⌈t/8⌉`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{BoxedLp, StandardLp};
use crate::sparse::{pock_chambolle_rescale, ruiz_rescale, spectral_norm_estimate, RescalingDiagonals, SparseMatrix};

/// Box-constrained LP with explicit per-variable upper bounds (lower bounds are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleProblem {
    pub matrix: SparseMatrix,
    pub cost: Vec<f64>,
    pub rhs: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SaddleProblem {
    pub fn new(matrix: SparseMatrix, cost: Vec<f64>, rhs: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let dims = [
            ("cost", matrix.n_cols(), cost.len()),
            ("rhs", matrix.n_rows(), rhs.len()),
            ("upper", matrix.n_cols(), upper.len()),
        ];
        for (context, expected, actual) in dims {
            if expected != actual {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    actual,
                });
            }
        }
        if cost.iter().chain(&rhs).chain(matrix.values()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("saddle problem data"));
        }
        if upper.iter().any(|u| u.is_nan() || *u < 0.0) {
            return Err(Error::InvalidArgument("upper bounds must be nonnegative".into()));
        }
        Ok(Self {
            matrix,
            cost,
            rhs,
            upper,
        })
    }

    pub fn from_lp<P: BoxedLp + ?Sized>(lp: &P) -> Self {
        Self {
            matrix: lp.matrix().clone(),
            cost: lp.cost().to_vec(),
            rhs: lp.rhs().to_vec(),
            upper: (0..lp.n_cols()).map(|w| lp.upper(w)).collect(),
        }
    }

    /// `diag(row) G diag(col)` with cost, rhs and bounds transformed so that
    /// `x = col ∘ x̃` and `y = row ∘ ỹ` map scaled solutions back.
    fn rescaled(lp: &(impl BoxedLp + ?Sized), iterations: usize, l1_pass: bool) -> (Self, RescalingDiagonals) {
        let (mut matrix, mut d) = ruiz_rescale(lp.matrix(), iterations);
        if l1_pass {
            let (m, extra) = pock_chambolle_rescale(&matrix);
            matrix = m;
            d = d.then(&extra);
        }
        let cost = lp.cost().iter().zip(&d.col_scale).map(|(c, s)| c * s).collect();
        let rhs = lp.rhs().iter().zip(&d.row_scale).map(|(h, s)| h * s).collect();
        let upper = d.col_scale.iter().enumerate().map(|(w, s)| lp.upper(w) / s).collect();
        (
            Self {
                matrix,
                cost,
                rhs,
                upper,
            },
            d,
        )
    }
}

impl BoxedLp for SaddleProblem {
    fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }
    fn cost(&self) -> &[f64] {
        &self.cost
    }
    fn rhs(&self) -> &[f64] {
        &self.rhs
    }
    fn upper(&self, col: usize) -> f64 {
        self.upper[col]
    }
}

/// Iterates of the two-loop scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_avg: Vec<f64>,
    pub y_avg: Vec<f64>,
    /// Inner iterations since the last restart.
    pub inner_count: usize,
    pub outer_count: usize,
    pub anchor_x: Vec<f64>,
    pub anchor_y: Vec<f64>,
    /// `‖z^{n,0} − z^{n−1,0}‖∞`.
    pub prev_anchor_distance: f64,
    /// Reference gap `ρ` at the anchor.
    pub anchor_gap: f64,
}

impl SaddleState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            x_avg: x.clone(),
            y_avg: y.clone(),
            anchor_x: x.clone(),
            anchor_y: y.clone(),
            x,
            y,
            inner_count: 0,
            outer_count: 0,
            prev_anchor_distance: 0.0,
            anchor_gap: f64::INFINITY,
        }
    }

    pub fn zeros(n_cols: usize, n_rows: usize) -> Self {
        Self::new(vec![0.0; n_cols], vec![0.0; n_rows])
    }

    /// Restarts the inner loop from the current average.
    fn restart_from_average(&mut self) {
        self.x.copy_from_slice(&self.x_avg);
        self.y.copy_from_slice(&self.y_avg);
        self.anchor_x.copy_from_slice(&self.x_avg);
        self.anchor_y.copy_from_slice(&self.y_avg);
        self.inner_count = 0;
        self.outer_count += 1;
    }
}

/// Coordinatewise clamp to `[0, 1]`.
pub fn project_primal(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// Coordinatewise `max(0, ·)`.
pub fn project_dual(v: &[f64]) -> Vec<f64> {
    v.iter().map(|y| y.max(0.0)).collect()
}

fn check_dims<P: BoxedLp + ?Sized>(lp: &P, x: Option<&[f64]>, y: Option<&[f64]>) -> Result<()> {
    if let Some(x) = x {
        if x.len() != lp.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "primal vector",
                expected: lp.n_cols(),
                actual: x.len(),
            });
        }
    }
    if let Some(y) = y {
        if y.len() != lp.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "dual vector",
                expected: lp.n_rows(),
                actual: y.len(),
            });
        }
    }
    Ok(())
}

/// Scratch space for PDHG steps.
#[derive(Debug, Clone)]
struct StepBuffers {
    gty: Vec<f64>,
    x_new: Vec<f64>,
    extrapolated: Vec<f64>,
    g_extrapolated: Vec<f64>,
    y_new: Vec<f64>,
}

impl StepBuffers {
    fn new(n_cols: usize, n_rows: usize) -> Self {
        Self {
            gty: vec![0.0; n_cols],
            x_new: vec![0.0; n_cols],
            extrapolated: vec![0.0; n_cols],
            g_extrapolated: vec![0.0; n_rows],
            y_new: vec![0.0; n_rows],
        }
    }

    /// One projected step from `(x, y)`; the result lands in `x_new`, `y_new`.
    /// Returns `false` if anything became non-finite.
    fn step<P: BoxedLp + ?Sized>(&mut self, lp: &P, x: &[f64], y: &[f64], eta: f64, tau: f64) -> Result<bool> {
        let g = lp.matrix();
        g.spmv_transpose_into(y, &mut self.gty)?;
        let cost = lp.cost();
        let mut finite = true;
        for w in 0..x.len() {
            let v = (x[w] - eta * (cost[w] + self.gty[w])).clamp(0.0, lp.upper(w));
            finite &= v.is_finite();
            self.x_new[w] = v;
            self.extrapolated[w] = 2.0 * v - x[w];
        }
        g.spmv_into(&self.extrapolated, &mut self.g_extrapolated)?;
        let rhs = lp.rhs();
        for l in 0..y.len() {
            let v = (y[l] - tau * rhs[l] + tau * self.g_extrapolated[l]).max(0.0);
            finite &= v.is_finite();
            self.y_new[l] = v;
        }
        Ok(finite)
    }
}

/// One PDHG step: `x⁺ = proj_X(x − η(c + Gᵀy))`, `y⁺ = proj_Y(y − τh + τG(2x⁺ − x))`,
/// followed by the running-average update of the inner loop.
///
/// Requires `η τ ‖G‖² < 1` for convergence; that is the caller's responsibility.
pub fn pdhg_step<P: BoxedLp + ?Sized>(state: &mut SaddleState, lp: &P, eta: f64, tau: f64) -> Result<()> {
    check_dims(lp, Some(&state.x), Some(&state.y))?;
    if !(eta > 0.0 && tau > 0.0) {
        return Err(Error::InvalidArgument("step sizes must be positive".into()));
    }
    let mut buffers = StepBuffers::new(lp.n_cols(), lp.n_rows());
    if !buffers.step(lp, &state.x, &state.y, eta, tau)? {
        return Err(Error::NonFinite("PDHG iterate"));
    }
    commit_step(state, &buffers);
    Ok(())
}

fn commit_step(state: &mut SaddleState, buffers: &StepBuffers) {
    state.x.copy_from_slice(&buffers.x_new);
    state.y.copy_from_slice(&buffers.y_new);
    state.inner_count += 1;
    let weight = 1.0 / state.inner_count as f64;
    for (a, v) in state.x_avg.iter_mut().zip(&state.x) {
        *a += (v - *a) * weight;
    }
    for (a, v) in state.y_avg.iter_mut().zip(&state.y) {
        *a += (v - *a) * weight;
    }
}

/// `D(y) = −h·y + Σ_w u_w · min(0, (c + Gᵀy)_w)`, a lower bound on the primal optimum
/// for every `y ≥ 0`.
pub fn dual_objective<P: BoxedLp + ?Sized>(lp: &P, y: &[f64]) -> Result<f64> {
    check_dims(lp, None, Some(y))?;
    let gty = lp.matrix().spmv_transpose(y)?;
    Ok(dual_objective_from(lp, y, &gty))
}

fn dual_objective_from<P: BoxedLp + ?Sized>(lp: &P, y: &[f64], gty: &[f64]) -> f64 {
    let box_part: f64 = lp
        .cost()
        .iter()
        .zip(gty)
        .enumerate()
        .map(|(w, (c, g))| {
            let reduced = c + g;
            if reduced < 0.0 {
                reduced * lp.upper(w)
            } else {
                0.0
            }
        })
        .sum();
    box_part - dot(lp.rhs(), y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ρ_r(z)` over the ℓ∞ ball of radius `r`, from the products `Gx` and `Gᵀy`.
///
/// The maximizing ball point is available in closed form, which turns the numerator into
/// a sum of nonnegative terms: `|c + Gᵀy|_w` times the room `x_w` can move against the
/// reduced cost, plus `|Gx − h|_l` times the room `y_l` can move along the residual.
fn gap_from_products<P: BoxedLp + ?Sized>(lp: &P, x: &[f64], y: &[f64], gx: &[f64], gty: &[f64], r: f64) -> f64 {
    let cost = lp.cost();
    let mut total = 0.0;
    for w in 0..x.len() {
        let reduced = cost[w] + gty[w];
        if reduced > 0.0 {
            total += reduced * r.min(x[w]);
        } else if reduced < 0.0 {
            total -= reduced * r.min(lp.upper(w) - x[w]);
        }
    }
    let rhs = lp.rhs();
    for l in 0..y.len() {
        let residual = gx[l] - rhs[l];
        if residual > 0.0 {
            total += residual * r;
        } else if residual < 0.0 {
            total -= residual * r.min(y[l]);
        }
    }
    total / r
}

/// Normalized duality gap `ρ_r(z) = max_{z̃ ∈ B_r(z) ∩ Z} (L(x, ỹ) − L(x̃, y)) / r` with
/// the ℓ∞ ball. `z` must lie in `X × Y`.
pub fn normalized_duality_gap<P: BoxedLp + ?Sized>(lp: &P, x: &[f64], y: &[f64], r: f64) -> Result<f64> {
    check_dims(lp, Some(x), Some(y))?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("gap radius must be positive, got {r}")));
    }
    let gx = lp.matrix().spmv(x)?;
    let gty = lp.matrix().spmv_transpose(y)?;
    Ok(gap_from_products(lp, x, y, &gx, &gty, r))
}

/// Relative KKT error measures used for termination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `‖(Gx − h)⁺‖∞ / (1 + ‖h‖∞)`.
    pub primal: f64,
    /// `‖x − proj_X(x − (c + Gᵀy))‖∞ / (1 + ‖c‖∞)`.
    pub dual: f64,
    /// `|c·x − D(y)| / (1 + |c·x| + |D(y)|)`.
    pub relative_gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.relative_gap)
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.primal <= tolerance && self.dual <= tolerance && self.relative_gap <= tolerance
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

fn kkt_from_products<P: BoxedLp + ?Sized>(lp: &P, x: &[f64], y: &[f64], gx: &[f64], gty: &[f64]) -> KktResiduals {
    let rhs = lp.rhs();
    let cost = lp.cost();
    let infeasibility = gx.iter().zip(rhs).fold(0.0f64, |m, (a, h)| m.max(a - h));
    let mut displacement = 0.0f64;
    for w in 0..x.len() {
        let projected = (x[w] - (cost[w] + gty[w])).clamp(0.0, lp.upper(w));
        displacement = displacement.max((x[w] - projected).abs());
    }
    let primal_objective = dot(cost, x);
    let dual_objective = dual_objective_from(lp, y, gty);
    KktResiduals {
        primal: infeasibility / (1.0 + inf_norm(rhs)),
        dual: displacement / (1.0 + inf_norm(cost)),
        relative_gap: (primal_objective - dual_objective).abs()
            / (1.0 + primal_objective.abs() + dual_objective.abs()),
        primal_objective,
        dual_objective,
    }
}

pub fn kkt_residuals<P: BoxedLp + ?Sized>(lp: &P, x: &[f64], y: &[f64]) -> Result<KktResiduals> {
    check_dims(lp, Some(x), Some(y))?;
    let gx = lp.matrix().spmv(x)?;
    let gty = lp.matrix().spmv_transpose(y)?;
    Ok(kkt_from_products(lp, x, y, &gx, &gty))
}

/// How the primal and dual step sizes evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `step_safety / ‖G‖` throughout.
    Fixed,
    /// Start from the fixed step, then accept a step `s` only if
    /// `s ≤ ‖Δz‖²_ω / (2 |Δyᵀ G Δx|)`, retrying with a smaller one otherwise.
    Adaptive,
}

/// Balance between the primal step `s/ω` and the dual step `s·ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalWeightRule {
    /// `ω = 1`.
    Unit,
    /// `ω₀ = ‖c‖₂ / ‖h‖₂`, then at each restart a geometric blend with `‖Δy‖₂ / ‖Δx‖₂`.
    Adaptive,
}

/// Point an outer iteration restarts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartCandidate {
    /// The inner-loop average.
    Average,
    /// Whichever of the average and the last iterate has the smaller gap.
    Best,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_outer: usize,
    /// Inner-loop cap; `None` means `4·(W + L)`.
    pub max_inner: Option<usize>,
    pub max_total_iterations: usize,
    pub step_safety: f64,
    /// Overrides `step_safety / ‖G‖` as the initial step.
    pub step_size: Option<f64>,
    pub rescale: bool,
    pub ruiz_iterations: usize,
    /// Follow Ruiz with one ℓ1 row/column pass.
    pub l1_rescale: bool,
    pub power_iterations: usize,
    pub seed: u64,
    /// `false` runs plain PDHG with one running average (no restarts).
    pub restart: bool,
    pub step_rule: StepRule,
    pub primal_weight: PrimalWeightRule,
    pub restart_candidate: RestartCandidate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_outer: 100_000,
            max_inner: None,
            max_total_iterations: 1_000_000,
            step_safety: 0.9,
            step_size: None,
            rescale: true,
            ruiz_iterations: 10,
            l1_rescale: true,
            power_iterations: 100,
            seed: 0,
            restart: true,
            step_rule: StepRule::Adaptive,
            primal_weight: PrimalWeightRule::Adaptive,
            restart_candidate: RestartCandidate::Best,
        }
    }
}

impl SolverConfig {
    /// The plain two-loop scheme: fixed equal steps, restarts from the average,
    /// Ruiz scaling only.
    pub fn algorithm1() -> Self {
        Self {
            l1_rescale: false,
            step_rule: StepRule::Fixed,
            primal_weight: PrimalWeightRule::Unit,
            restart_candidate: RestartCandidate::Average,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.step_safety > 0.0 && self.step_safety < 1.0) {
            return Err(Error::InvalidArgument("step_safety must lie in (0, 1)".into()));
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument("step_size must be positive".into()));
            }
        }
        if self.power_iterations == 0 {
            return Err(Error::InvalidArgument("power_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartReason {
    /// The candidate's gap fell to half the outer-loop reference.
    GapHalved,
    /// The inner loop reached `max_inner`.
    InnerLimit,
}

/// One row of the convergence log, written at every gap evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub total_iter: usize,
    pub outer: usize,
    pub inner: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub rel_gap: f64,
    /// Gap of the restart candidate at radius `‖z − z^{n,0}‖∞` (NaN when the radius is 0).
    pub rho: f64,
    pub objective: f64,
    pub dual_objective: f64,
    pub step: f64,
    pub primal_weight: f64,
    pub elapsed_s: f64,
}

pub const LOG_HEADER: &str =
    "total_iter,outer,inner,primal_res,dual_res,rel_gap,rho,objective,elapsed_s,dual_objective,step,primal_weight";

impl LogRow {
    /// One CSV line. Without `timing` the `elapsed_s` field is left empty so that
    /// repeated runs produce identical logs.
    pub fn csv(&self, timing: bool) -> String {
        let elapsed = if timing { format!("{:.6}", self.elapsed_s) } else { String::new() };
        format!(
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}",
            self.total_iter,
            self.outer,
            self.inner,
            self.primal_res,
            self.dual_res,
            self.rel_gap,
            self.rho,
            self.objective,
            elapsed,
            self.dual_objective,
            self.step,
            self.primal_weight,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    /// Accepted PDHG steps.
    pub iterations: usize,
    /// Steps rejected by the adaptive rule (each costs two products).
    pub rejected_steps: usize,
    pub restarts: usize,
    /// Reference gap at the start of every outer iteration.
    pub per_restart_gap: Vec<f64>,
    /// Why each restart fired; `restart_reasons[n]` ends outer iteration `n`.
    pub restart_reasons: Vec<RestartReason>,
    pub step_size: f64,
    pub primal_weight: f64,
    #[serde(skip)]
    pub log: Vec<LogRow>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Snapshot handed to an iteration observer, in the solver's working coordinates.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    pub total_iter: usize,
    pub outer: usize,
    pub inner: usize,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub x_avg: &'a [f64],
    pub y_avg: &'a [f64],
    /// This iteration ended with a restart; `x`, `y` are the restart point.
    pub restarted: bool,
}

pub type Observer<'o> = &'o mut dyn FnMut(&IterationEvent<'_>);

/// Solves a compiled LP.
pub fn solve(lp: &StandardLp, config: &SolverConfig) -> Result<SolveReport> {
    solve_boxed(lp, config, None)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Solves any box-constrained LP from the origin, optionally reporting every iteration.
pub fn solve_boxed<P: BoxedLp + ?Sized>(
    lp: &P,
    config: &SolverConfig,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    solve_boxed_from(lp, config, None, observer)
}

/// Like [`solve_boxed`] with an explicit starting point in original coordinates. The start
/// is projected onto the boxes.
pub fn solve_boxed_from<P: BoxedLp + ?Sized>(
    lp: &P,
    config: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    config.validate()?;
    if let Some((x, y)) = start {
        check_dims(lp, Some(x), Some(y))?;
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("starting point"));
        }
    }
    if lp.cost().iter().chain(lp.rhs()).chain(lp.matrix().values()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LP data"));
    }
    let (work, scaling) = if config.rescale {
        SaddleProblem::rescaled(lp, config.ruiz_iterations, config.l1_rescale)
    } else {
        (
            SaddleProblem::from_lp(lp),
            RescalingDiagonals::identity(lp.n_rows(), lp.n_cols()),
        )
    };
    let norm = spectral_norm_estimate(&work.matrix, config.power_iterations, config.seed)?;
    let step = config
        .step_size
        .unwrap_or(if norm > 0.0 { config.step_safety / norm } else { 1.0 });
    let omega = match config.primal_weight {
        PrimalWeightRule::Unit => 1.0,
        PrimalWeightRule::Adaptive => {
            let (c, h) = (l2(&work.cost), l2(&work.rhs));
            if c > 0.0 && h > 0.0 {
                c / h
            } else {
                1.0
            }
        }
    };
    let mut engine = Engine {
        original: lp,
        work: &work,
        scaling: &scaling,
        config,
        step,
        omega,
        started: Instant::now(),
        gx: vec![0.0; lp.n_rows()],
        gty: vec![0.0; lp.n_cols()],
        x_orig: vec![0.0; lp.n_cols()],
        y_orig: vec![0.0; lp.n_rows()],
        gx_orig: vec![0.0; lp.n_rows()],
        gty_orig: vec![0.0; lp.n_cols()],
        log: Vec::new(),
    };
    let state = match start {
        None => SaddleState::zeros(lp.n_cols(), lp.n_rows()),
        Some((x, y)) => SaddleState::new(
            x.iter()
                .zip(&scaling.col_scale)
                .enumerate()
                .map(|(w, (v, s))| (v / s).clamp(0.0, work.upper[w]))
                .collect(),
            y.iter().zip(&scaling.row_scale).map(|(v, s)| (v / s).max(0.0)).collect(),
        ),
    };
    engine.run(state, observer)
}

struct Engine<'a, P: BoxedLp + ?Sized> {
    original: &'a P,
    work: &'a SaddleProblem,
    scaling: &'a RescalingDiagonals,
    config: &'a SolverConfig,
    step: f64,
    omega: f64,
    started: Instant,
    gx: Vec<f64>,
    gty: Vec<f64>,
    x_orig: Vec<f64>,
    y_orig: Vec<f64>,
    gx_orig: Vec<f64>,
    gty_orig: Vec<f64>,
    log: Vec<LogRow>,
}

fn distance(ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    let dx = ax.iter().zip(bx).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ay.iter().zip(by).fold(dx, |m, (a, b)| m.max((a - b).abs()))
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// A point evaluated as a restart candidate.
struct Candidate {
    x: Vec<f64>,
    y: Vec<f64>,
    kkt: KktResiduals,
    radius: f64,
    rho: f64,
}

impl<'a, P: BoxedLp + ?Sized> Engine<'a, P> {
    /// Products at `(x, y)` in working coordinates, then KKT in original coordinates.
    fn evaluate(&mut self, x: &[f64], y: &[f64]) -> Result<KktResiduals> {
        self.work.matrix.spmv_into(x, &mut self.gx)?;
        self.work.matrix.spmv_transpose_into(y, &mut self.gty)?;
        let d = self.scaling;
        for w in 0..x.len() {
            self.x_orig[w] = x[w] * d.col_scale[w];
            self.gty_orig[w] = self.gty[w] / d.col_scale[w];
        }
        for l in 0..y.len() {
            self.y_orig[l] = y[l] * d.row_scale[l];
            self.gx_orig[l] = self.gx[l] / d.row_scale[l];
        }
        Ok(kkt_from_products(
            self.original,
            &self.x_orig,
            &self.y_orig,
            &self.gx_orig,
            &self.gty_orig,
        ))
    }

    /// Gap at radius `r` for the point whose products were last computed by `evaluate`.
    fn gap(&self, x: &[f64], y: &[f64], r: f64) -> f64 {
        if r > 0.0 {
            gap_from_products(self.work, x, y, &self.gx, &self.gty, r)
        } else {
            f64::NAN
        }
    }

    fn candidate(&mut self, x: &[f64], y: &[f64], state: &SaddleState) -> Result<Candidate> {
        let kkt = self.evaluate(x, y)?;
        let radius = distance(x, y, &state.anchor_x, &state.anchor_y);
        let rho = self.gap(x, y, radius);
        Ok(Candidate {
            x: x.to_vec(),
            y: y.to_vec(),
            kkt,
            radius,
            rho,
        })
    }

    fn record(&mut self, state: &SaddleState, total: usize, kkt: &KktResiduals, rho: f64) {
        self.log.push(LogRow {
            total_iter: total,
            outer: state.outer_count,
            inner: state.inner_count,
            primal_res: kkt.primal,
            dual_res: kkt.dual,
            rel_gap: kkt.relative_gap,
            rho,
            objective: kkt.primal_objective,
            dual_objective: kkt.dual_objective,
            step: self.step,
            primal_weight: self.omega,
            elapsed_s: self.started.elapsed().as_secs_f64(),
        });
    }

    /// Takes one accepted step into `buffers`, shrinking the step as needed under the
    /// adaptive rule. `gx` holds `G x` for the current iterate and is advanced without
    /// extra products: `G x⁺ = (G(2x⁺ − x) + G x) / 2`.
    fn advance(
        &mut self,
        state: &SaddleState,
        buffers: &mut StepBuffers,
        gx: &mut [f64],
        total: usize,
        rejected: &mut usize,
    ) -> Result<bool> {
        loop {
            let (eta, tau) = (self.step / self.omega, self.step * self.omega);
            if !buffers.step(self.work, &state.x, &state.y, eta, tau)? {
                return Ok(false);
            }
            let accept = match self.config.step_rule {
                StepRule::Fixed => true,
                StepRule::Adaptive => {
                    let mut interaction = 0.0;
                    let mut dy2 = 0.0;
                    for l in 0..state.y.len() {
                        let dy = buffers.y_new[l] - state.y[l];
                        interaction += dy * 0.5 * (buffers.g_extrapolated[l] - gx[l]);
                        dy2 += dy * dy;
                    }
                    let dx2 = l2_distance(&buffers.x_new, &state.x).powi(2);
                    let movement = self.omega * dx2 + dy2 / self.omega;
                    let limit = if interaction != 0.0 {
                        movement / (2.0 * interaction.abs())
                    } else {
                        f64::INFINITY
                    };
                    let k = (total + 1) as f64;
                    let ok = self.step <= limit;
                    let next = ((1.0 - (k + 1.0).powf(-0.3)) * limit).min((1.0 + (k + 1.0).powf(-0.6)) * self.step);
                    if !(next > 0.0 && next.is_finite()) {
                        return Ok(false);
                    }
                    self.step = next;
                    ok
                }
            };
            if accept {
                for (g, e) in gx.iter_mut().zip(&buffers.g_extrapolated) {
                    *g = 0.5 * (*g + e);
                }
                return Ok(true);
            }
            *rejected += 1;
        }
    }

    fn run(&mut self, mut state: SaddleState, mut observer: Option<Observer<'_>>) -> Result<SolveReport> {
        let (n_cols, n_rows) = (self.work.n_cols(), self.work.n_rows());
        let config = self.config;
        let max_inner = config.max_inner.unwrap_or(4 * (n_cols + n_rows)).max(1);
        let mut buffers = StepBuffers::new(n_cols, n_rows);
        let mut per_restart_gap = Vec::new();
        let mut restart_reasons = Vec::new();
        let mut rejected = 0usize;

        let (x0, y0) = (state.x.clone(), state.y.clone());
        let mut kkt = self.evaluate(&x0, &y0)?;
        let mut gx_current = self.gx.clone();
        let initial_radius = 1.0f64.max(inf_norm(&x0)).max(inf_norm(&y0));
        state.prev_anchor_distance = initial_radius;
        state.anchor_gap = self.gap(&state.x, &state.y, initial_radius);
        self.record(&state, 0, &kkt, state.anchor_gap);
        if kkt.within(config.tolerance) {
            return Ok(self.report(SolveStatus::Optimal, &state, 0, rejected, kkt, per_restart_gap, restart_reasons));
        }
        per_restart_gap.push(state.anchor_gap);

        let mut total = 0usize;
        let mut next_eval = 1usize;
        let status = loop {
            if !self.advance(&state, &mut buffers, &mut gx_current, total, &mut rejected)? {
                kkt = self.evaluate(&state.x_avg, &state.y_avg)?;
                break SolveStatus::NumericalFailure;
            }
            commit_step(&mut state, &buffers);
            total += 1;

            let t = state.inner_count;
            let out_of_budget = total >= config.max_total_iterations;
            let inner_capped = config.restart && t >= max_inner;
            let mut restarted = false;
            let mut finished = None;
            if t >= next_eval || inner_capped || out_of_budget {
                next_eval = t + t.div_ceil(8);
                let (xa, ya) = (state.x_avg.clone(), state.y_avg.clone());
                let mut chosen = self.candidate(&xa, &ya, &state)?;
                if config.restart_candidate == RestartCandidate::Best && t > 1 {
                    let (xc, yc) = (state.x.clone(), state.y.clone());
                    let current = self.candidate(&xc, &yc, &state)?;
                    if current.rho < chosen.rho || chosen.rho.is_nan() {
                        chosen = current;
                    } else {
                        // Leave the products and original-coordinate copies at the average.
                        self.evaluate(&xa, &ya)?;
                    }
                }
                kkt = chosen.kkt;
                self.record(&state, total, &kkt, chosen.rho);
                if kkt.within(config.tolerance) {
                    finished = Some(SolveStatus::Optimal);
                } else if out_of_budget || state.outer_count >= config.max_outer {
                    finished = Some(SolveStatus::IterationLimit);
                } else if config.restart {
                    let reason = if chosen.radius > 0.0 && chosen.rho <= 0.5 * state.anchor_gap {
                        Some(RestartReason::GapHalved)
                    } else if inner_capped {
                        Some(RestartReason::InnerLimit)
                    } else {
                        None
                    };
                    if let Some(reason) = reason {
                        if config.primal_weight == PrimalWeightRule::Adaptive {
                            let dx = l2_distance(&chosen.x, &state.anchor_x);
                            let dy = l2_distance(&chosen.y, &state.anchor_y);
                            if dx > 1e-10 && dy > 1e-10 {
                                self.omega = (0.5 * (dy / dx).ln() + 0.5 * self.omega.ln()).exp();
                            }
                        }
                        state.x_avg.copy_from_slice(&chosen.x);
                        state.y_avg.copy_from_slice(&chosen.y);
                        state.restart_from_average();
                        state.prev_anchor_distance = chosen.radius;
                        // Reference for the next outer loop, re-evaluated at the new anchor.
                        self.evaluate(&chosen.x, &chosen.y)?;
                        gx_current.copy_from_slice(&self.gx);
                        let reference = self.gap(&chosen.x, &chosen.y, chosen.radius);
                        state.anchor_gap = if reference.is_nan() { f64::INFINITY } else { reference };
                        per_restart_gap.push(state.anchor_gap);
                        restart_reasons.push(reason);
                        next_eval = 1;
                        restarted = true;
                    }
                }
            }
            if let Some(obs) = observer.as_mut() {
                obs(&IterationEvent {
                    total_iter: total,
                    outer: state.outer_count,
                    inner: state.inner_count,
                    x: &state.x,
                    y: &state.y,
                    x_avg: &state.x_avg,
                    y_avg: &state.y_avg,
                    restarted,
                });
            }
            if let Some(status) = finished {
                break status;
            }
        };
        Ok(self.report(status, &state, total, rejected, kkt, per_restart_gap, restart_reasons))
    }

    /// Builds the report for the point last passed to `evaluate`.
    #[allow(clippy::too_many_arguments)]
    fn report(
        &mut self,
        status: SolveStatus,
        state: &SaddleState,
        total: usize,
        rejected_steps: usize,
        kkt: KktResiduals,
        per_restart_gap: Vec<f64>,
        restart_reasons: Vec<RestartReason>,
    ) -> SolveReport {
        SolveReport {
            status,
            primal: self.x_orig.clone(),
            dual: self.y_orig.clone(),
            objective: kkt.primal_objective,
            dual_objective: kkt.dual_objective,
            primal_residual: kkt.primal,
            dual_residual: kkt.dual,
            relative_gap: kkt.relative_gap,
            iterations: total,
            rejected_steps,
            restarts: state.outer_count,
            per_restart_gap,
            restart_reasons,
            step_size: self.step,
            primal_weight: self.omega,
            log: std::mem::take(&mut self.log),
            wall_time: self.started.elapsed(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `min −5x  s.t.  x ≤ 1`, box `[0, 1]`.
    fn trivial() -> StandardLp {
        StandardLp::unlabeled(vec![-5.0], SparseMatrix::identity(1), vec![1.0]).unwrap()
    }

    #[test]
    fn projections() {
        assert_eq!(project_primal(&[-0.5, 0.3, 2.0]), vec![0.0, 0.3, 1.0]);
        assert_eq!(project_primal(&[0.0, 0.5, 1.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(project_dual(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(project_dual(&[0.0, 3.5]), vec![0.0, 3.5]);
    }

    proptest! {
        #[test]
        fn projections_are_idempotent(v in prop::collection::vec(-10.0f64..10.0, 0..20)) {
            let p = project_primal(&v);
            prop_assert_eq!(project_primal(&p), p.clone());
            prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
            let d = project_dual(&v);
            prop_assert_eq!(project_dual(&d), d.clone());
            prop_assert!(d.iter().all(|y| *y >= 0.0));
        }
    }

    #[test]
    fn saddle_point_is_fixed() {
        // x* = 1, y* = 5: c + Gᵀy = 0 and Gx = h.
        let lp = trivial();
        let mut state = SaddleState::new(vec![1.0], vec![5.0]);
        pdhg_step(&mut state, &lp, 0.3, 0.3).unwrap();
        assert_eq!((state.x[0], state.y[0]), (1.0, 5.0));
    }

    #[test]
    fn bilinear_step_by_hand() {
        // c = 0, G = [1], h = 0, box [0, 100] on x: x⁺ = 5 − 0.2·5 = 4,
        // y⁺ = 5 + 0.2·(2·4 − 5) = 5.6.
        let p = SaddleProblem::new(SparseMatrix::identity(1), vec![0.0], vec![0.0], vec![100.0]).unwrap();
        let mut state = SaddleState::new(vec![5.0], vec![5.0]);
        pdhg_step(&mut state, &p, 0.2, 0.2).unwrap();
        assert!((state.x[0] - 4.0).abs() < 1e-15);
        assert!((state.y[0] - 5.6).abs() < 1e-15);
        assert_eq!(state.inner_count, 1);
        assert_eq!(state.x_avg, state.x);
    }

    #[test]
    fn zero_matrix_step() {
        let lp = StandardLp::unlabeled(vec![1.0; 3], SparseMatrix::zeros(0, 3), vec![]).unwrap();
        let mut state = SaddleState::new(vec![0.7, 0.2, 1.0], vec![]);
        pdhg_step(&mut state, &lp, 1.0, 1.0).unwrap();
        assert_eq!(state.x, vec![0.0; 3]);
    }

    #[test]
    fn step_rejects_bad_input() {
        let lp = trivial();
        let mut state = SaddleState::new(vec![0.0, 0.0], vec![0.0]);
        assert!(pdhg_step(&mut state, &lp, 0.1, 0.1).is_err());
        let mut state = SaddleState::new(vec![0.0], vec![0.0]);
        assert!(pdhg_step(&mut state, &lp, 0.0, 0.1).is_err());
    }

    #[test]
    fn dual_objective_values() {
        let lp = trivial();
        // y = 0: Σ min(0, c) = −5.
        assert_eq!(dual_objective(&lp, &[0.0]).unwrap(), -5.0);
        // D(y) = −y + min(0, −5 + y), maximized at y = 5 with value −5.
        assert_eq!(dual_objective(&lp, &[5.0]).unwrap(), -5.0);
        assert_eq!(dual_objective(&lp, &[2.0]).unwrap(), -5.0);
        assert_eq!(dual_objective(&lp, &[7.0]).unwrap(), -7.0);
    }

    #[test]
    fn kkt_by_hand() {
        let lp = trivial();
        let k = kkt_residuals(&lp, &[0.0], &[0.0]).unwrap();
        assert_eq!(k.primal, 0.0);
        // ‖0 − clamp(0 + 5)‖ = 1, over 1 + ‖c‖∞ = 6.
        assert!((k.dual - 1.0 / 6.0).abs() < 1e-15);
        // |0 − (−5)| / (1 + 0 + 5).
        assert!((k.relative_gap - 5.0 / 6.0).abs() < 1e-15);
        let opt = kkt_residuals(&lp, &[1.0], &[5.0]).unwrap();
        assert!(opt.max() <= 1e-12);
        let infeasible = StandardLp::unlabeled(vec![0.0], SparseMatrix::identity(1), vec![0.5]).unwrap();
        assert!(kkt_residuals(&infeasible, &[1.0], &[0.0]).unwrap().primal > 0.0);
    }

    #[test]
    fn gap_vanishes_at_optimum() {
        let lp = trivial();
        for r in [1e-3, 0.5, 1.0, 10.0] {
            assert!(normalized_duality_gap(&lp, &[1.0], &[5.0], r).unwrap().abs() < 1e-14);
        }
        assert!(normalized_duality_gap(&lp, &[1.0], &[5.0], 0.0).is_err());
    }

    /// Grid search over the ℓ∞ ball intersected with the boxes.
    fn gap_by_grid(p: &SaddleProblem, x: f64, y: f64, r: f64) -> f64 {
        let lagrangian = |x: f64, y: f64| p.cost[0] * x - p.rhs[0] * y + y * p.matrix.values()[0] * x;
        let n = 2000;
        let xs: Vec<f64> = (0..=n)
            .map(|k| (x - r + 2.0 * r * k as f64 / n as f64).clamp(0.0, p.upper[0]))
            .collect();
        let ys: Vec<f64> = (0..=n).map(|k| (y - r + 2.0 * r * k as f64 / n as f64).max(0.0)).collect();
        let best_y = ys.iter().map(|&yt| lagrangian(x, yt)).fold(f64::MIN, f64::max);
        let best_x = xs.iter().map(|&xt| lagrangian(xt, y)).fold(f64::MAX, f64::min);
        (best_y - best_x) / r
    }

    #[test]
    fn gap_matches_grid_oracle_on_bilinear_toy() {
        let p = SaddleProblem::new(SparseMatrix::identity(1), vec![0.0], vec![0.0], vec![10.0]).unwrap();
        for &(x, y, r) in &[(5.0, 5.0, 1.0), (0.3, 0.0, 1.0), (9.5, 2.0, 0.75), (0.0, 0.2, 3.0)] {
            let got = normalized_duality_gap(&p, &[x], &[y], r).unwrap();
            let want = gap_by_grid(&p, x, y, r);
            assert!((got - want).abs() < 1e-6, "({x},{y},{r}): {got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn gap_nonincreasing_in_radius(
            x in prop::collection::vec(0.0f64..1.0, 3),
            y in prop::collection::vec(0.0f64..3.0, 2),
            r in 0.01f64..5.0,
        ) {
            let g = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, -2.0), (1, 1, 0.5), (1, 2, 1.5)]).unwrap();
            let lp = StandardLp::unlabeled(vec![-1.0, 2.0, -0.5], g, vec![0.3, 0.8]).unwrap();
            let a = normalized_duality_gap(&lp, &x, &y, r).unwrap();
            let b = normalized_duality_gap(&lp, &x, &y, 2.0 * r).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn trivial_solve() {
        for config in [SolverConfig::default(), SolverConfig::algorithm1()] {
            let report = solve(&trivial(), &config).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal);
            assert!((report.primal[0] - 1.0).abs() < 1e-5);
            assert!((report.objective + 5.0).abs() < 1e-5);
            assert!(report.primal_residual <= 1e-6 && report.dual_residual <= 1e-6 && report.relative_gap <= 1e-6);
        }
    }

    #[test]
    fn config_json_fills_defaults() {
        let c: SolverConfig = serde_json::from_str(r#"{"tolerance":1e-4,"step_rule":"fixed"}"#).unwrap();
        assert_eq!(c.tolerance, 1e-4);
        assert_eq!(c.step_rule, StepRule::Fixed);
        assert_eq!(c.restart_candidate, RestartCandidate::Best);
    }

    #[test]
    fn optimal_start_returns_immediately() {
        // Optimum at the origin with zero duals: c ≥ 0, h ≥ 0.
        let lp = StandardLp::unlabeled(vec![1.0, 2.0], SparseMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let report = solve(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let g = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let lp = StandardLp::unlabeled(vec![-1.0, -1.0], g, vec![1.0, 0.5]).unwrap();
        let config = SolverConfig {
            max_total_iterations: 3,
            tolerance: 1e-12,
            ..SolverConfig::default()
        };
        let report = solve(&lp, &config).unwrap();
        assert_eq!(report.status, SolveStatus::IterationLimit);
        assert_eq!(report.iterations, 3);
    }

    #[test]
    fn config_validation() {
        let lp = trivial();
        for bad in [
            SolverConfig { tolerance: 0.0, ..SolverConfig::default() },
            SolverConfig { step_safety: 1.0, ..SolverConfig::default() },
            SolverConfig { power_iterations: 0, ..SolverConfig::default() },
        ] {
            assert!(solve(&lp, &bad).is_err());
        }
    }

    #[test]
    fn restarts_halve_reference_gap() {
        let g = SparseMatrix::from_triplets(
            3,
            4,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0), (1, 2, -1.0), (2, 0, 1.0), (2, 3, 3.0), (2, 2, 1.0)],
        )
        .unwrap();
        let lp = StandardLp::unlabeled(vec![-1.0, -2.0, 0.5, -3.0], g, vec![1.5, 0.5, 2.0]).unwrap();
        for base in [SolverConfig::default(), SolverConfig::algorithm1()] {
            let report = solve(&lp, &SolverConfig { tolerance: 1e-9, ..base }).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal);
            assert!(report.restarts > 0);
            for (n, reason) in report.restart_reasons.iter().enumerate() {
                if *reason == RestartReason::GapHalved {
                    assert!(report.per_restart_gap[n + 1] <= 0.5 * report.per_restart_gap[n] + f64::EPSILON);
                }
            }
        }
    }

    #[test]
    fn deterministic_reports() {
        let g = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 1.0), (1, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let lp = StandardLp::unlabeled(vec![-1.0, -1.0, -1.0], g, vec![1.0, 1.5]).unwrap();
        let a = solve(&lp, &SolverConfig::default()).unwrap();
        let b = solve(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.dual, b.dual);
        assert_eq!(a.per_restart_gap, b.per_restart_gap);
    }
}
