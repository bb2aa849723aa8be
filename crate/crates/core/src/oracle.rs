//! Exact reference solvers for small LPs `min c·x, Ax ≤ b, 0 ≤ x ≤ u`.
//!
//! [`simplex_solve`] is a dense two-phase tableau simplex with bounded variables and
//! Bland's rule. [`vertex_enumerate`] brute-forces every basic solution and is only
//! usable for a handful of variables; it exists to cross-check the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::BoxedLp;

/// Largest `rows × cols` the dense oracle accepts.
pub const DENSE_ENTRY_LIMIT: usize = 10_000_000;
/// Largest variable count for vertex enumeration.
pub const ENUMERATION_MAX_VARS: usize = 10;

const TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLp {
    /// Row-major `L × W` constraint matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DenseLp {
    pub fn n_cols(&self) -> usize {
        self.c.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    fn check(&self) -> Result<()> {
        let w = self.n_cols();
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch {
                context: "dense rhs",
                expected: self.a.len(),
                actual: self.b.len(),
            });
        }
        if self.upper.len() != w {
            return Err(Error::DimensionMismatch {
                context: "dense bounds",
                expected: w,
                actual: self.upper.len(),
            });
        }
        if let Some(row) = self.a.iter().find(|r| r.len() != w) {
            return Err(Error::DimensionMismatch {
                context: "dense row",
                expected: w,
                actual: row.len(),
            });
        }
        if self.upper.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(Error::InvalidArgument("oracle needs finite nonnegative upper bounds".into()));
        }
        Ok(())
    }
}

/// Expands a sparse LP into dense storage, refusing anything above [`DENSE_ENTRY_LIMIT`].
pub fn densify<P: BoxedLp + ?Sized>(lp: &P) -> Result<DenseLp> {
    let (rows, cols) = (lp.n_rows(), lp.n_cols());
    if rows.saturating_mul(cols) > DENSE_ENTRY_LIMIT {
        return Err(Error::SizeGuard(format!(
            "{rows} x {cols} exceeds {DENSE_ENTRY_LIMIT} dense entries"
        )));
    }
    Ok(DenseLp {
        a: lp.matrix().to_dense(),
        b: lp.rhs().to_vec(),
        c: lp.cost().to_vec(),
        upper: (0..cols).map(|w| lp.upper(w)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub status: OracleStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// `m × n` rows of `B⁻¹ [A | I | art]`.
    t: Vec<Vec<f64>>,
    /// Current values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    pivots: usize,
    pivot_cap: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            self.lower[j]
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (dj, tj) in d.iter_mut().zip(row) {
                    *dj -= cb * tj;
                }
            }
        }
        d
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome> {
        let n = cost.len();
        let mut d = self.reduced_costs(cost);
        loop {
            if self.pivots > self.pivot_cap {
                return Err(Error::NumericalBreakdown(format!("no convergence after {} pivots", self.pivots)));
            }
            // Bland: smallest eligible index.
            let entering = (0..n).find(|&j| {
                !self.is_basic[j]
                    && self.upper[j] > self.lower[j]
                    && ((!self.at_upper[j] && d[j] < -TOL) || (self.at_upper[j] && d[j] > TOL))
            });
            let Some(j) = entering else {
                return Ok(Outcome::Optimal);
            };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // Ratio test; candidates are (step, variable index, row or None for a bound flip).
            let mut best: Option<(f64, usize, Option<usize>)> = None;
            let mut consider = |step: f64, var: usize, row: Option<usize>| {
                let better = match best {
                    None => true,
                    Some((s, v, _)) => step < s - TOL || (step <= s + TOL && var < v),
                };
                if better {
                    best = Some((step, var, row));
                }
            };
            if self.upper[j].is_finite() {
                consider(self.upper[j] - self.lower[j], j, None);
            }
            for r in 0..self.t.len() {
                let alpha = self.t[r][j] * dir;
                let var = self.basis[r];
                if alpha > PIVOT_TOL {
                    consider(((self.beta[r] - self.lower[var]) / alpha).max(0.0), var, Some(r));
                } else if alpha < -PIVOT_TOL && self.upper[var].is_finite() {
                    consider(((self.upper[var] - self.beta[r]) / -alpha).max(0.0), var, Some(r));
                }
            }
            let Some((step, _, leaving_row)) = best else {
                return Ok(Outcome::Unbounded);
            };

            for r in 0..self.t.len() {
                self.beta[r] -= self.t[r][j] * dir * step;
            }
            let Some(p) = leaving_row else {
                self.at_upper[j] = !self.at_upper[j];
                self.pivots += 1;
                continue;
            };

            let pivot = self.t[p][j];
            if pivot.abs() < PIVOT_TOL {
                return Err(Error::NumericalBreakdown(format!("pivot {pivot:e} below {PIVOT_TOL:e}")));
            }
            let leaving = self.basis[p];
            let alpha = pivot * dir;
            self.at_upper[leaving] = alpha < 0.0;
            self.is_basic[leaving] = false;
            let entering_value = self.nonbasic_value(j) + dir * step;
            self.is_basic[j] = true;
            self.at_upper[j] = false;
            self.basis[p] = j;
            self.beta[p] = entering_value;

            let pivot_row: Vec<f64> = self.t[p].iter().map(|v| v / pivot).collect();
            for (r, row) in self.t.iter_mut().enumerate() {
                if r == p {
                    continue;
                }
                let factor = row[j];
                if factor != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= factor * pv;
                    }
                    row[j] = 0.0;
                }
            }
            let dj = d[j];
            for (dv, pv) in d.iter_mut().zip(&pivot_row) {
                *dv -= dj * pv;
            }
            d[j] = 0.0;
            self.t[p] = pivot_row;
            self.t[p][j] = 1.0;
            self.pivots += 1;
        }
    }

    fn values(&self, n: usize) -> Vec<f64> {
        let mut x: Vec<f64> = (0..n).map(|j| self.nonbasic_value(j)).collect();
        for (r, &var) in self.basis.iter().enumerate() {
            if var < n {
                x[var] = self.beta[r];
            }
        }
        x
    }
}

/// Two-phase bounded-variable simplex.
pub fn simplex_solve(lp: &DenseLp) -> Result<OracleSolution> {
    lp.check()?;
    let (m, w) = (lp.n_rows(), lp.n_cols());
    let negated: Vec<bool> = lp.b.iter().map(|b| *b < 0.0).collect();
    let n_art = negated.iter().filter(|n| **n).count();
    let n = w + m + n_art;

    let mut t = vec![vec![0.0; n]; m];
    let mut beta = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut next_art = w + m;
    for r in 0..m {
        let sign = if negated[r] { -1.0 } else { 1.0 };
        for c in 0..w {
            t[r][c] = sign * lp.a[r][c];
        }
        t[r][w + r] = sign;
        beta[r] = sign * lp.b[r];
        if negated[r] {
            t[r][next_art] = 1.0;
            basis[r] = next_art;
            next_art += 1;
        } else {
            basis[r] = w + r;
        }
    }
    let mut upper = lp.upper.clone();
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_art));
    let mut is_basic = vec![false; n];
    for &v in &basis {
        is_basic[v] = true;
    }
    let mut tableau = Tableau {
        t,
        beta,
        basis,
        lower: vec![0.0; n],
        upper,
        at_upper: vec![false; n],
        is_basic,
        pivots: 0,
        pivot_cap: 50_000 * (n + m + 1),
    };

    if n_art > 0 {
        let mut phase_one = vec![0.0; n];
        phase_one[w + m..].fill(1.0);
        tableau.run(&phase_one)?;
        let infeasibility: f64 = tableau.values(n)[w + m..].iter().sum();
        let scale = 1.0 + lp.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > 1e-7 * scale {
            return Ok(OracleSolution {
                status: OracleStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                pivots: tableau.pivots,
            });
        }
        for v in w + m..n {
            tableau.upper[v] = 0.0;
            tableau.at_upper[v] = false;
        }
    }

    let mut cost = lp.c.clone();
    cost.resize(n, 0.0);
    match tableau.run(&cost)? {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Err(Error::NumericalBreakdown("unbounded ray in a bounded LP".into())),
    }
    let x: Vec<f64> = tableau.values(n)[..w].iter().zip(&lp.upper).map(|(v, u)| v.clamp(0.0, *u)).collect();
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(OracleSolution {
        status: OracleStatus::Optimal,
        x,
        objective,
        pivots: tableau.pivots,
    })
}

/// Solves `M z = r` in place by Gaussian elimination with partial pivoting.
fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let f = r.len();
    for col in 0..f {
        let p = (col..f).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[p][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, p);
        r.swap(col, p);
        for row in col + 1..f {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..f {
                    m[row][k] -= factor * m[col][k];
                }
                r[row] -= factor * r[col];
            }
        }
    }
    let mut z = vec![0.0; f];
    for row in (0..f).rev() {
        let tail: f64 = (row + 1..f).map(|k| m[row][k] * z[k]).sum();
        z[row] = (r[row] - tail) / m[row][row];
    }
    Some(z)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn walk(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            walk(i + 1, n, k, current, out);
            current.pop();
        }
    }
    walk(0, n, k, &mut current, &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Minimizes over all vertices of the feasible polytope. Every vertex fixes each variable
/// either at a bound or in a free set `F` pinned down by `|F|` tight rows.
///
/// Returns `None` when the LP is infeasible. Refuses more than [`ENUMERATION_MAX_VARS`]
/// variables.
pub fn vertex_enumerate(lp: &DenseLp) -> Result<Option<(Vec<f64>, f64)>> {
    lp.check()?;
    let (m, w) = (lp.n_rows(), lp.n_cols());
    if w > ENUMERATION_MAX_VARS {
        return Err(Error::SizeGuard(format!(
            "vertex enumeration supports at most {ENUMERATION_MAX_VARS} variables, got {w}"
        )));
    }
    let work: f64 = (0..=w.min(m)).map(|f| binomial(w, f) * 2f64.powi((w - f) as i32) * binomial(m, f)).sum();
    if work > DENSE_ENTRY_LIMIT as f64 {
        return Err(Error::SizeGuard(format!("{work:.0} candidate vertices")));
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut x = vec![0.0; w];
    for f in 0..=w.min(m) {
        let row_sets = combinations(m, f);
        for free in combinations(w, f) {
            let fixed: Vec<usize> = (0..w).filter(|c| !free.contains(c)).collect();
            for mask in 0u32..(1 << fixed.len()) {
                for (bit, &c) in fixed.iter().enumerate() {
                    x[c] = if mask >> bit & 1 == 1 { lp.upper[c] } else { 0.0 };
                }
                for rows in &row_sets {
                    if f > 0 {
                        let sub: Vec<Vec<f64>> = rows.iter().map(|&r| free.iter().map(|&c| lp.a[r][c]).collect()).collect();
                        let rhs: Vec<f64> = rows
                            .iter()
                            .map(|&r| lp.b[r] - fixed.iter().map(|&c| lp.a[r][c] * x[c]).sum::<f64>())
                            .collect();
                        let Some(z) = solve_square(sub, rhs) else {
                            continue;
                        };
                        for (&c, v) in free.iter().zip(z) {
                            x[c] = v;
                        }
                    }
                    let in_box = x.iter().zip(&lp.upper).all(|(v, u)| *v >= -TOL && *v <= u + TOL);
                    let feasible = in_box
                        && lp.a.iter().zip(&lp.b).all(|(row, b)| {
                            let lhs: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
                            lhs <= b + 1e-9 * (1.0 + b.abs())
                        });
                    if feasible {
                        let value: f64 = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
                        if best.as_ref().is_none_or(|(_, v)| value < *v) {
                            best = Some((x.clone(), value));
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}
