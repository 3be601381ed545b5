//! Dense tableau simplex for `maximize c·x  s.t.  A x ≤ b, x ≥ 0` with
//! `b ≥ 0`, so the all-slack basis is feasible and no phase one is needed.
//!
//! Pivoting follows Bland's rule (smallest eligible variable label for both
//! the entering and the leaving variable), which rules out cycling. The
//! tableau stores only the nonbasic columns, so memory is `m × n` rather than
//! `m × (n + m)`.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            num_vars: objective.len(),
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Adds `Σ coef · x[var] ≤ rhs`; requires `rhs ≥ 0`.
    pub fn add_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> Result<()> {
        if !(rhs >= 0.0) {
            return Err(Error::Lp(format!(
                "right-hand side must be nonnegative, got {rhs}"
            )));
        }
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.num_vars) {
            return Err(Error::Lp(format!("variable {v} out of range")));
        }
        self.rows.push(terms);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.num_vars;
        let m = self.rows.len();
        let width = n + 1;
        let mut tab = vec![0.0; m * width];
        for (r, (row, &b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            for &(v, a) in row {
                tab[r * width + v] += a;
            }
            tab[r * width + n] = b;
        }
        let mut reduced = self.objective.clone();
        let mut nonbasic: Vec<usize> = (0..n).collect();
        let mut basic: Vec<usize> = (n..n + m).collect();

        let max_pivots = 50 * (n + m).max(10) * (n + m).max(10);
        let mut pivots = 0;
        loop {
            let entering = (0..n)
                .filter(|&k| reduced[k] > PIVOT_EPS)
                .min_by_key(|&k| nonbasic[k]);
            let Some(k) = entering else { break };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = tab[r * width + k];
                if a > PIVOT_EPS {
                    let ratio = tab[r * width + n] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio || (ratio == best_ratio && basic[r] < basic[best])
                            {
                                Some((r, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("objective is unbounded".into()));
            };

            pivot(&mut tab, &mut reduced, width, m, r, k);
            std::mem::swap(&mut basic[r], &mut nonbasic[k]);
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Lp(format!("no convergence after {pivots} pivots")));
            }
        }

        let mut x = vec![0.0; n];
        for (r, &label) in basic.iter().enumerate() {
            if label < n {
                x[label] = tab[r * width + n].max(0.0);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots,
        })
    }
}

fn pivot(tab: &mut [f64], reduced: &mut [f64], width: usize, m: usize, r: usize, k: usize) {
    let n = width - 1;
    let p = tab[r * width + k];
    {
        let row = &mut tab[r * width..(r + 1) * width];
        for (j, v) in row.iter_mut().enumerate() {
            if j != k {
                *v /= p;
            }
        }
        row[k] = 1.0 / p;
    }
    let pivot_row: Vec<f64> = tab[r * width..(r + 1) * width].to_vec();
    for i in 0..m {
        if i == r {
            continue;
        }
        let row = &mut tab[i * width..(i + 1) * width];
        let a = row[k];
        if a == 0.0 {
            continue;
        }
        for (j, v) in row.iter_mut().enumerate() {
            if j != k {
                *v -= a * pivot_row[j];
            }
        }
        row[k] = -a / p;
    }
    let d = reduced[k];
    if d != 0.0 {
        for j in 0..n {
            if j != k {
                reduced[j] -= d * pivot_row[j];
            }
        }
        reduced[k] = -d / p;
    }
}
