//! Jacobi-preconditioned conjugate gradients with breakdown reporting.
//!
//! Failure is a result, not an error: an indefinite or singular operator
//! shows up as a non-positive curvature, a zero diagonal with a nonzero
//! right-hand side, a stagnating residual, or an exhausted iteration budget.

use std::fmt;

use super::sparse::CsrMatrix;

pub const DEFAULT_TOL: f64 = 1e-11;
/// Normwise backward error treated as converged when `tol` is out of reach.
pub const BACKWARD_ERROR_TOL: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target relative residual `||b - Ax|| / ||b||`.
    pub tol: f64,
    /// Iteration budget; `None` means `max(1000, 2 n)`.
    pub max_iter: Option<usize>,
    /// The best residual must halve at least once per this many iterations.
    pub stagnation_window: usize,
    /// Re-solve with a seeded random right-hand side to expose a null space.
    pub singularity_probe: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
            stagnation_window: 2000,
            singularity_probe: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Breakdown {
    /// Zero or negative diagonal entry on a row with a nonzero right-hand side.
    NonPositiveDiagonal { row: usize },
    /// `p^T A p <= 0` (relative to the diagonal scale).
    NonPositiveCurvature { iteration: usize },
    Stagnation { iteration: usize },
    MaxIterations,
    /// The solve succeeded but a random right-hand side could not be matched.
    Singular,
}

impl fmt::Display for Breakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Breakdown::NonPositiveDiagonal { row } => write!(f, "non-positive diagonal at row {row}"),
            Breakdown::NonPositiveCurvature { iteration } => {
                write!(f, "non-positive curvature at iteration {iteration}")
            }
            Breakdown::Stagnation { iteration } => write!(f, "residual stagnation at iteration {iteration}"),
            Breakdown::MaxIterations => f.write_str("iteration limit reached"),
            Breakdown::Singular => f.write_str("singular matrix (random right-hand side not reachable)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual `||b - Ax||_2 / ||b||_2` of the returned iterate.
    pub residual: f64,
    pub converged: bool,
    pub breakdown: Option<Breakdown>,
}

impl SolveReport {
    pub fn is_breakdown(&self) -> bool {
        self.breakdown.is_some()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves `A x = b` for symmetric `A` from a zero initial guess.
pub fn pcg(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> (Vec<f64>, SolveReport) {
    let n = a.n;
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
                breakdown: None,
            },
        );
    }
    let max_iter = opts.max_iter.unwrap_or((2 * n).max(1000));
    let fail = |x: Vec<f64>, it: usize, why: Breakdown| {
        let res = norm(&true_residual(a, b, &x)) / bnorm;
        (
            x,
            SolveReport {
                iterations: it,
                residual: res,
                converged: false,
                breakdown: Some(why),
            },
        )
    };

    let amax = a.max_abs();
    let diag = a.diagonal();
    let dmax = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut inv_diag = Vec::with_capacity(n);
    for (i, &d) in diag.iter().enumerate() {
        if d > 1e-14 * dmax {
            inv_diag.push(1.0 / d);
        } else if d.abs() <= 1e-14 * dmax && b[i].abs() <= 1e-14 * bmax {
            // decoupled row of a semidefinite matrix with consistent data
            inv_diag.push(1.0);
        } else {
            return fail(x, 0, Breakdown::NonPositiveDiagonal { row: i });
        }
    }

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut best = 1.0f64;
    let mut checkpoint_best = 1.0f64;
    let mut restarts = 0;

    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 1e-15 * dmax * dot(&p, &p)) {
            return fail(x, it, Breakdown::NonPositiveCurvature { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            return fail(x, it, Breakdown::NonPositiveCurvature { iteration: it });
        }
        if rel <= opts.tol {
            let tr = true_residual(a, b, &x);
            let trel = norm(&tr) / bnorm;
            if trel <= opts.tol || restarts >= 3 {
                // below tol only in exact arithmetic; accept a backward-stable iterate
                let ok = trel <= opts.tol
                    || norm(&tr) <= BACKWARD_ERROR_TOL * (amax * norm(&x) + bnorm);
                return (
                    x,
                    SolveReport {
                        iterations: it,
                        residual: trel,
                        converged: ok,
                        breakdown: if ok { None } else { Some(Breakdown::Stagnation { iteration: it }) },
                    },
                );
            }
            // recursive residual drifted from the true one; restart from it
            restarts += 1;
            r = tr;
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        best = best.min(rel);
        if it % opts.stagnation_window == 0 {
            if best > 0.5 * checkpoint_best {
                return fail(x, it, Breakdown::Stagnation { iteration: it });
            }
            checkpoint_best = best;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    fail(x, max_iter, Breakdown::MaxIterations)
}
