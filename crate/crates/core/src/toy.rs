//! The bilinear saddle `min_x max_y x·y`, solved by the PDHG engine.
//!
//! Both variables are free in the original problem. They are shifted by `SHIFT` so the
//! solver sees `x' = x + B ∈ [0, 2B]` and `y' = y + B ≥ 0`, which turns the saddle into
//! `min −B·x' s.t. x' ≤ B` up to a constant. The boxes stay inactive along the path as
//! long as the start lies well inside `[−B, B]²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdhg::{solve_boxed_from, IterationEvent, SaddleProblem, SolveStatus, SolverConfig};
use crate::sparse::SparseMatrix;

pub const SHIFT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyMode {
    /// Plain PDHG with one running average.
    OneLoop,
    /// Restarted two-loop scheme.
    TwoLoop,
}

/// Averaged iterate after an iteration, in original coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyPoint {
    pub iteration: usize,
    pub outer: usize,
    pub x: f64,
    pub y: f64,
    pub restarted: bool,
}

impl ToyPoint {
    pub fn distance(&self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRun {
    pub mode: ToyMode,
    pub status: SolveStatus,
    pub restarts: usize,
    /// Starting point first, then one entry per iteration.
    pub points: Vec<ToyPoint>,
}

impl ToyRun {
    /// First iteration whose averaged iterate lies within `radius` of the saddle point.
    pub fn first_within(&self, radius: f64) -> Option<usize> {
        self.points.iter().find(|p| p.distance() <= radius).map(|p| p.iteration)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("mode,iteration,outer,x,y,restarted\n");
        let mode = match self.mode {
            ToyMode::OneLoop => "one_loop",
            ToyMode::TwoLoop => "two_loop",
        };
        for p in &self.points {
            out.push_str(&format!(
                "{mode},{},{},{:e},{:e},{}\n",
                p.iteration, p.outer, p.x, p.y, p.restarted as u8
            ));
        }
        out
    }
}

pub fn toy_problem() -> SaddleProblem {
    SaddleProblem {
        matrix: SparseMatrix::identity(1),
        cost: vec![-SHIFT],
        rhs: vec![SHIFT],
        upper: vec![2.0 * SHIFT],
    }
}

/// Runs the toy from `start` until the KKT residuals drop below `tolerance` or
/// `max_iterations` steps have been taken, using fixed equal steps.
pub fn run_toy(start: (f64, f64), mode: ToyMode, tolerance: f64, max_iterations: usize) -> Result<ToyRun> {
    let inside = |v: f64| v.is_finite() && v.abs() < 0.5 * SHIFT;
    if !(inside(start.0) && inside(start.1)) {
        return Err(Error::InvalidArgument(format!(
            "toy start must lie within {} of the origin",
            0.5 * SHIFT
        )));
    }
    let config = SolverConfig {
        tolerance,
        max_total_iterations: max_iterations,
        rescale: false,
        restart: mode == ToyMode::TwoLoop,
        ..SolverConfig::algorithm1()
    };
    let mut points = vec![ToyPoint {
        iteration: 0,
        outer: 0,
        x: start.0,
        y: start.1,
        restarted: false,
    }];
    let mut observer = |e: &IterationEvent<'_>| {
        points.push(ToyPoint {
            iteration: e.total_iter,
            outer: e.outer,
            x: e.x_avg[0] - SHIFT,
            y: e.y_avg[0] - SHIFT,
            restarted: e.restarted,
        });
    };
    let x0 = [start.0 + SHIFT];
    let y0 = [start.1 + SHIFT];
    let report = solve_boxed_from(&toy_problem(), &config, Some((&x0, &y0)), Some(&mut observer))?;
    Ok(ToyRun {
        mode,
        status: report.status,
        restarts: report.restarts,
        points,
    })
}
