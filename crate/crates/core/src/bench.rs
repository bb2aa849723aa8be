//! Individual versus segment personalization on one instance.
//!
//! The sweep collapses a growing random subset of action segments to shared decisions
//! while every other customer keeps individual variables. Each draw uses one random
//! segment order and collapses prefixes of it, so within a draw the feasible sets are
//! nested and the profit can only fall as the fraction grows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compile_ipwc, compile_spwc, ConstraintMenu, TargetingInstance};
use crate::pdhg::{solve, SolveStatus, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    /// `−objective`, the expected incremental profit of the policy.
    pub profit: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub restarts: usize,
    pub n_cols: usize,
    pub n_rows: usize,
    pub nnz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub collapsed_segments: usize,
    pub draws: usize,
    /// Mean profit over draws.
    pub profit: f64,
    /// IPwC profit minus the mean profit.
    pub difference: f64,
    pub all_optimal: bool,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ipwc: ModeResult,
    pub spwc: ModeResult,
    pub difference: f64,
    pub sweep: Vec<SweepRow>,
}

impl Comparison {
    pub fn all_optimal(&self) -> bool {
        self.ipwc.status == SolveStatus::Optimal
            && self.spwc.status == SolveStatus::Optimal
            && self.sweep.iter().all(|r| r.all_optimal)
    }

    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("fraction,collapsed_segments,draws,profit,difference,all_optimal,mean_iterations\n");
        for r in &self.sweep {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.fraction, r.collapsed_segments, r.draws, r.profit, r.difference, r.all_optimal as u8, r.mean_iterations
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub solver: SolverConfig,
    /// Collapse fractions in `[0, 1]`; empty skips the sweep.
    pub fractions: Vec<f64>,
    pub draws: usize,
    pub seed: u64,
    /// Worker threads for the sweep draws.
    pub threads: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig {
                tolerance: 1e-8,
                ..SolverConfig::default()
            },
            fractions: Vec::new(),
            draws: 5,
            seed: 0,
            threads: 1,
        }
    }
}

/// Instance in which the constraint segments flagged in `collapsed` share decisions and
/// every other customer decides alone. Action segments are numbered by first appearance,
/// so collapsing nothing reproduces the individual LP exactly.
pub fn collapse(instance: &TargetingInstance, collapsed: &[bool]) -> Result<TargetingInstance> {
    let k_count = instance.n_constraint_segments();
    if collapsed.len() != k_count {
        return Err(Error::DimensionMismatch {
            context: "collapse flags",
            expected: k_count,
            actual: collapsed.len(),
        });
    }
    let mut segment_id: Vec<Option<usize>> = vec![None; k_count];
    let mut next = 0;
    let action_segment = instance
        .constraint_segment
        .iter()
        .map(|&k| {
            if collapsed[k] {
                *segment_id[k].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            } else {
                next += 1;
                next - 1
            }
        })
        .collect();
    Ok(TargetingInstance {
        action_segment,
        n_action_segments: None,
        ..instance.clone()
    })
}

fn run(lp: &crate::lp::StandardLp, solver: &SolverConfig) -> Result<ModeResult> {
    let report = solve(lp, solver)?;
    Ok(ModeResult {
        profit: -report.objective,
        status: report.status,
        iterations: report.iterations,
        restarts: report.restarts,
        n_cols: lp.n_cols(),
        n_rows: lp.n_rows(),
        nnz: lp.constraints.nnz(),
    })
}

/// One draw of the sweep: SPwC results for each fraction, nested collapse sets.
fn sweep_draw(
    instance: &TargetingInstance,
    menu: &ConstraintMenu,
    config: &CompareConfig,
    draw: usize,
) -> Result<Vec<ModeResult>> {
    let k_count = instance.n_constraint_segments();
    let mut order: Vec<usize> = (0..k_count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(draw as u64);
    order.shuffle(&mut rng);
    config
        .fractions
        .iter()
        .map(|&f| {
            let count = (f * k_count as f64).round() as usize;
            let mut flags = vec![false; k_count];
            for &k in &order[..count] {
                flags[k] = true;
            }
            let lp = compile_spwc(&collapse(instance, &flags)?, menu)?;
            run(&lp, &config.solver)
        })
        .collect()
}

pub fn compare(instance: &TargetingInstance, menu: &ConstraintMenu, config: &CompareConfig) -> Result<Comparison> {
    if let Some(f) = config.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::InvalidArgument(format!("collapse fraction {f} outside [0, 1]")));
    }
    if !config.fractions.is_empty() && config.draws == 0 {
        return Err(Error::InvalidArgument("a sweep needs at least one draw".into()));
    }
    let ipwc = run(&compile_ipwc(instance, menu)?, &config.solver)?;
    let spwc = run(&compile_spwc(instance, menu)?, &config.solver)?;

    let threads = config.threads.max(1).min(config.draws.max(1));
    let mut per_draw: Vec<Option<Result<Vec<ModeResult>>>> = (0..config.draws).map(|_| None).collect();
    if !config.fractions.is_empty() {
        std::thread::scope(|scope| {
            for (worker, chunk) in per_draw.chunks_mut(config.draws.div_ceil(threads)).enumerate() {
                let first = worker * config.draws.div_ceil(threads);
                scope.spawn(move || {
                    for (offset, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(sweep_draw(instance, menu, config, first + offset));
                    }
                });
            }
        });
    }
    let draws: Vec<Vec<ModeResult>> = per_draw.into_iter().flatten().collect::<Result<_>>()?;
    let k_count = instance.n_constraint_segments();
    let sweep = config
        .fractions
        .iter()
        .enumerate()
        .map(|(index, &fraction)| {
            let results: Vec<&ModeResult> = draws.iter().map(|d| &d[index]).collect();
            let n = results.len() as f64;
            let profit = results.iter().map(|r| r.profit).sum::<f64>() / n;
            SweepRow {
                fraction,
                collapsed_segments: (fraction * k_count as f64).round() as usize,
                draws: results.len(),
                profit,
                difference: ipwc.profit - profit,
                all_optimal: results.iter().all(|r| r.status == SolveStatus::Optimal),
                mean_iterations: results.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(Comparison {
        difference: ipwc.profit - spwc.profit,
        ipwc,
        spwc,
        sweep,
    })
}
