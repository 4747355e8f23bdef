//! Dense two-phase simplex restricted to what membership tests need:
//! feasibility of `A q = b, q ≥ 0`, with a Farkas certificate when infeasible.

/// Pivot and feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;

/// Maximum number of columns accepted.
pub const MAX_COLUMNS: usize = 1_000_000;

/// After this many consecutive degenerate pivots Dantzig's rule gives way to
/// Bland's rule, which cannot cycle.
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// Weights `q ≥ 0` with `A q ≈ b`.
    Feasible { weights: Vec<f64> },
    /// `y` with `yᵀA_j ≤ 0` for every column and `yᵀb > 0`; `phase1` is the
    /// minimal total infeasibility.
    Infeasible { certificate: Vec<f64>, phase1: f64 },
    /// Pivot budget exhausted before optimality.
    IterationLimit,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Tests `A q = b`, `q ≥ 0`; `columns[j]` is column `j` of `A` (length `b.len()`).
pub fn feasibility(columns: &[Vec<f64>], b: &[f64]) -> Feasibility {
    let m = b.len();
    let n = columns.len();
    let width = n + m + 1;
    // Rows are flipped so that b ≥ 0; artificials form the starting basis.
    let sign: Vec<f64> = b.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        for (j, col) in columns.iter().enumerate() {
            row[j] = sign[i] * col[i];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign[i] * b[i];
    }
    // Objective row: reduced costs for min Σ artificials, and −(objective value).
    for j in 0..width {
        if j >= n && j < n + m {
            continue;
        }
        let s: f64 = (0..m).map(|i| t[i * width + j]).sum();
        t[m * width + j] = -s;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut degenerate = 0usize;
    let max_iter = 50 * (n + m) + 1000;
    let mut optimal = false;
    let scale = 1.0 + b.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for _ in 0..max_iter {
        // Zero infeasibility is optimal for phase I; further pivots can only be degenerate.
        if -t[m * width + width - 1] <= LP_TOL * scale {
            optimal = true;
            break;
        }
        let obj = &t[m * width..(m + 1) * width];
        let bland = degenerate >= DEGENERATE_SWITCH;
        let mut enter = None;
        let mut best = -LP_TOL;
        for (j, &r) in obj[..n + m].iter().enumerate() {
            if r < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = r;
            }
        }
        let Some(e) = enter else {
            optimal = true;
            break;
        };
        // Ratio test; ties broken by the smallest basis index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + e];
            if a > LP_TOL {
                let ratio = t[i * width + width - 1] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - LP_TOL || (ratio <= lr + LP_TOL && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        // Phase I is bounded below, so an entering column always has a pivot row.
        let Some((r, ratio)) = leave else {
            optimal = true;
            break;
        };
        degenerate = if ratio.abs() <= LP_TOL { degenerate + 1 } else { 0 };
        pivot(&mut t, width, m, r, e);
        basis[r] = e;
    }
    if !optimal {
        return Feasibility::IterationLimit;
    }
    let phase1 = -t[m * width + width - 1];
    if phase1 <= LP_TOL * scale {
        let mut weights = vec![0.0; n];
        for (i, &bj) in basis.iter().enumerate() {
            if bj < n {
                weights[bj] = t[i * width + width - 1].max(0.0);
            }
        }
        Feasibility::Feasible { weights }
    } else {
        // y_i = c_{t_i} − r_{t_i} = 1 − r_{t_i}, undoing the row flips.
        let certificate = (0..m).map(|i| sign[i] * (1.0 - t[m * width + n + i])).collect();
        Feasibility::Infeasible { certificate, phase1 }
    }
}

fn pivot(t: &mut [f64], width: usize, m: usize, r: usize, e: usize) {
    let p = t[r * width + e];
    for j in 0..width {
        t[r * width + j] /= p;
    }
    let pivot_row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
    for i in 0..=m {
        if i == r {
            continue;
        }
        let f = t[i * width + e];
        if f != 0.0 {
            let row = &mut t[i * width..(i + 1) * width];
            for (x, pr) in row.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
        }
    }
}
