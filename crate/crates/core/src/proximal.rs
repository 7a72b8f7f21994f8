//! Outer proximal fixed-point loop and its diagnostics.
//!
//! One outer iteration runs the forward sweep for the current anchor, solves
//! the lines `N-1, N-2, ..., 1` in turn, and makes the result the next anchor.
//!
//! The line elimination is exact only up to the remainder
//! `E_n = a_n E_{n-1} + b_n (T(u_n) - T(u_{n+1}))`, where
//! `T(u) = (-alpha u^3 + beta u) d^2/eps + u'' d^2`. [`LineCoupling::Lagged`]
//! drops it altogether; its fixed point then differs from the root of the
//! finite-difference system by an `O(E)` defect. [`LineCoupling::Corrected`]
//! evaluates the dropped terms on the anchor, which leaves each line solve
//! linear and makes the fixed point an exact root.

use serde::{Deserialize, Serialize};

use crate::error::{GmlError, Result};
use crate::linebvp::{second_difference, solve_line};
use crate::problem::{FieldSolution, LineGrid, ProblemSpec};
use crate::sweep::{forward_sweep, refresh_c, IterateState, SweepCoefficients};

/// How the backward pass treats the elimination remainder `E_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineCoupling {
    /// `E_n` dropped; the cubic lagged on line `n + 1`.
    Lagged,
    /// `E_n` and the lag defect evaluated on the anchor and added to each
    /// line's right-hand side.
    #[default]
    Corrected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximalOptions {
    /// Stop once `sup |u - u0| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Run exactly this many outer iterations, ignoring `tol` for stopping.
    pub fixed_iters: Option<usize>,
    pub coupling: LineCoupling,
}

impl Default for ProximalOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            fixed_iters: None,
            coupling: LineCoupling::default(),
        }
    }
}

impl ProximalOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: FieldSolution,
    pub outer_iterations: usize,
    /// `sup |u - u0|` of the last outer iteration.
    pub anchor_update_norm: f64,
    pub residual_sup: f64,
    /// `sup_j |E_n|` for `n = 1..N-1`, evaluated on the final solution.
    pub error_estimates: Vec<f64>,
    pub converged: bool,
    /// Update norm of every outer iteration, in order.
    pub update_history: Vec<f64>,
}

/// Solves lines `N-1` down to `1`. `boundary_row` is the Dirichlet data on
/// line `N`; line `0` is zero.
pub fn backward_pass(
    coeffs: &SweepCoefficients,
    spec: &ProblemSpec,
    grid: &LineGrid,
    boundary_row: &[f64],
    correction: Option<&[Vec<f64>]>,
) -> Result<FieldSolution> {
    let (n_lines, m) = (grid.n_lines, grid.m_nodes);
    if boundary_row.len() != m + 1 {
        return Err(GmlError::DimensionMismatch {
            expected: m + 1,
            found: boundary_row.len(),
            context: "boundary row",
        });
    }
    if coeffs.len() != n_lines - 1 {
        return Err(GmlError::DimensionMismatch {
            expected: n_lines - 1,
            found: coeffs.len(),
            context: "sweep coefficients",
        });
    }
    let mut field = grid.zero_field();
    field.values[n_lines].copy_from_slice(boundary_row);
    for n in (1..n_lines).rev() {
        let extra = correction.map(|c| c[n - 1].as_slice());
        let row = solve_line(n, coeffs, &field.values[n + 1], spec, grid, extra)?;
        field.values[n] = row;
    }
    Ok(field)
}

/// `T(u_k)` for every line `k = 0..=N`.
fn t_rows(spec: &ProblemSpec, grid: &LineGrid, u: &FieldSolution) -> Vec<Vec<f64>> {
    let d2 = grid.d * grid.d;
    let scale = d2 / spec.epsilon;
    u.values
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let yy = second_difference(row, grid.h(k));
            row.iter()
                .zip(&yy)
                .map(|(&v, &w)| spec.reaction(v) * scale + w * d2)
                .collect()
        })
        .collect()
}

/// `E_n(s_j)` for `n = 1..N-1` evaluated on `u`, with `E_0 = 0`.
pub fn error_terms(
    coeffs: &SweepCoefficients,
    u: &FieldSolution,
    spec: &ProblemSpec,
    grid: &LineGrid,
) -> Vec<Vec<f64>> {
    let t = t_rows(spec, grid, u);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(coeffs.len());
    let mut prev = vec![0.0; grid.m_nodes + 1];
    for n in 1..grid.n_lines {
        let (a_n, b_n) = (coeffs.a(n), coeffs.b(n));
        let row: Vec<f64> = (0..=grid.m_nodes)
            .map(|j| a_n * prev[j] + b_n * (t[n][j] - t[n + 1][j]))
            .collect();
        prev.clone_from(&row);
        out.push(row);
    }
    out
}

/// Per-line `sup_j |E_n|`, an a-posteriori size of the dropped remainder.
pub fn error_estimate(
    coeffs: &SweepCoefficients,
    u: &FieldSolution,
    spec: &ProblemSpec,
    grid: &LineGrid,
) -> Vec<f64> {
    error_terms(coeffs, u, spec, grid)
        .iter()
        .map(|row| row.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .collect()
}

/// Right-hand-side correction that turns the lagged line solve into an exact
/// elimination when `u = anchor`:
/// `E_n(u0) - b_n d^2 (u0_n'' - u0_{n+1}'')`.
pub fn anchor_correction(
    coeffs: &SweepCoefficients,
    spec: &ProblemSpec,
    grid: &LineGrid,
    anchor: &FieldSolution,
) -> Vec<Vec<f64>> {
    let mut e = error_terms(coeffs, anchor, spec, grid);
    let d2 = grid.d * grid.d;
    let mut yy_next = second_difference(&anchor.values[grid.n_lines], grid.h(grid.n_lines));
    for n in (1..grid.n_lines).rev() {
        let yy = second_difference(&anchor.values[n], grid.h(n));
        let b_n = coeffs.b(n);
        for (j, v) in e[n - 1].iter_mut().enumerate() {
            *v -= b_n * d2 * (yy[j] - yy_next[j]);
        }
        yy_next = yy;
    }
    e
}

/// Sup over interior nodes of the unregularised finite-difference residual
/// `|-eps (D_xx u + D_yy u) + alpha u^3 - beta u - f|`.
pub fn residual_norm(spec: &ProblemSpec, grid: &LineGrid, u: &FieldSolution) -> f64 {
    residual_field(spec, grid, u)
        .iter()
        .flatten()
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Signed residual at interior nodes; rows `1..N-1`, columns `1..M-1`.
pub fn residual_field(spec: &ProblemSpec, grid: &LineGrid, u: &FieldSolution) -> Vec<Vec<f64>> {
    let (n_lines, m) = (grid.n_lines, grid.m_nodes);
    let inv_d2 = 1.0 / (grid.d * grid.d);
    (1..n_lines)
        .map(|n| {
            let h = grid.h(n);
            let inv_h2 = 1.0 / (h * h);
            let x = grid.abscissae[n];
            let (prev, cur, next) = (&u.values[n - 1], &u.values[n], &u.values[n + 1]);
            (1..m)
                .map(|j| {
                    let v = cur[j];
                    let dxx = (next[j] - 2.0 * v + prev[j]) * inv_d2;
                    let dyy = (cur[j + 1] - 2.0 * v + cur[j - 1]) * inv_h2;
                    let f = spec.source.eval(x, grid.y(n, j));
                    -spec.epsilon * (dxx + dyy) + spec.alpha * v * v * v - spec.beta * v - f
                })
                .collect()
        })
        .collect()
}

/// Outer proximal iteration from the zero anchor.
pub fn proximal_iterate(
    spec: &ProblemSpec,
    grid: &LineGrid,
    opts: &ProximalOptions,
) -> Result<SolveReport> {
    proximal_iterate_from(spec, grid, opts, IterateState::zero(grid))
}

pub fn proximal_iterate_from(
    spec: &ProblemSpec,
    grid: &LineGrid,
    opts: &ProximalOptions,
    mut state: IterateState,
) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(GmlError::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let budget = opts.fixed_iters.unwrap_or(opts.max_iter);
    if budget == 0 {
        return Err(GmlError::InvalidParameter(
            "need at least one outer iteration".into(),
        ));
    }
    spec.cartesian_domain()?;
    let boundary = vec![0.0; grid.m_nodes + 1];
    let mut coeffs = forward_sweep(spec, grid, &state)?;
    let mut history = Vec::new();
    let mut update = f64::INFINITY;

    for it in 0..budget {
        if it > 0 {
            coeffs = refresh_c(&coeffs, spec, grid, &state)?;
        }
        let correction = match opts.coupling {
            LineCoupling::Lagged => None,
            LineCoupling::Corrected => Some(anchor_correction(&coeffs, spec, grid, &state.anchor)),
        };
        let u = backward_pass(&coeffs, spec, grid, &boundary, correction.as_deref())?;
        update = u.sup_diff(&state.anchor);
        history.push(update);
        state.anchor = u;
        state.iteration += 1;
        if !update.is_finite() {
            break;
        }
        if opts.fixed_iters.is_none() && update <= opts.tol {
            break;
        }
    }

    let residual_sup = residual_norm(spec, grid, &state.anchor);
    let error_estimates = error_estimate(&coeffs, &state.anchor, spec, grid);
    Ok(SolveReport {
        converged: update <= opts.tol,
        outer_iterations: state.iteration,
        anchor_update_norm: update,
        residual_sup,
        error_estimates,
        update_history: history,
        solution: state.anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linebvp::{assemble_line_system, thomas_solve};
    use crate::problem::{build_cartesian_grid, CartesianDomain, Source};

    fn setup(eps: f64, k: f64, n: usize, m: usize) -> (ProblemSpec, LineGrid) {
        let spec = ProblemSpec::unit_square(eps, k).unwrap();
        let grid = build_cartesian_grid(&CartesianDomain::unit_square(), n, m).unwrap();
        (spec, grid)
    }

    #[test]
    fn homogeneous_problem_stays_zero() {
        let (mut spec, grid) = setup(0.1, 50.0, 10, 10);
        spec.source = Source::Constant(0.0);
        let report = proximal_iterate(&spec, &grid, &ProximalOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.outer_iterations, 1);
        assert_eq!(report.residual_sup, 0.0);
        assert!(report.solution.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn first_pass_is_positive() {
        let (spec, grid) = setup(0.001, 50.0, 100, 100);
        let state = IterateState::zero(&grid);
        let coeffs = forward_sweep(&spec, &grid, &state).unwrap();
        let u = backward_pass(&coeffs, &spec, &grid, &vec![0.0; 101], None).unwrap();
        for n in 1..100 {
            for j in 1..100 {
                assert!(u.values[n][j] > 0.0, "u[{n}][{j}] = {}", u.values[n][j]);
            }
        }
    }

    #[test]
    fn two_interior_lines_by_hand() {
        let (spec, grid) = setup(0.1, 50.0, 3, 4);
        let mut anchor = grid.zero_field();
        for n in 1..3 {
            for j in 1..4 {
                anchor.values[n][j] = 0.1 * (n * j) as f64;
            }
        }
        let state = IterateState::new(anchor.clone());
        let coeffs = forward_sweep(&spec, &grid, &state).unwrap();
        let u = backward_pass(&coeffs, &spec, &grid, &[0.0; 5], None).unwrap();

        // unrolled recursion
        let d = 1.0 / 3.0;
        let h = 0.25;
        let s = d * d / 0.1;
        let q = 2.0 + 50.0 * s;
        let a1 = 1.0 / q;
        let b1 = a1;
        let a2 = 1.0 / (q - a1);
        let b2 = a2 * (b1 + 1.0);
        let c1: Vec<f64> = (0..5)
            .map(|j| a1 * (50.0 * anchor.values[1][j] + 1.0) * s)
            .collect();
        let c2: Vec<f64> = (0..5)
            .map(|j| a2 * (c1[j] + (50.0 * anchor.values[2][j] + 1.0) * s))
            .collect();
        let line2 = thomas_solve(&assemble_line_system(b2, d, h, &c2[1..4]).unwrap()).unwrap();
        let rhs1: Vec<f64> = (0..3)
            .map(|i| {
                let v = line2[i];
                a1 * v + b1 * (v - v * v * v) * s + c1[i + 1]
            })
            .collect();
        let line1 = thomas_solve(&assemble_line_system(b1, d, h, &rhs1).unwrap()).unwrap();
        for i in 0..3 {
            assert!((u.values[2][i + 1] - line2[i]).abs() < 1e-13);
            assert!((u.values[1][i + 1] - line1[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn residual_of_constants() {
        let (mut spec, grid) = setup(0.1, 1.0, 6, 6);
        spec.source = Source::Constant(0.0);
        assert_eq!(residual_norm(&spec, &grid, &grid.zero_field()), 0.0);

        // a constant root of u^3 - u = 1 zeroes the residual on nodes whose
        // neighbours are all interior
        spec.source = Source::Constant(1.0);
        let r = crate::plateau_root(1.0, 1.0, 1.0).unwrap();
        let mut u = grid.zero_field();
        for n in 1..6 {
            for j in 1..6 {
                u.values[n][j] = r;
            }
        }
        let res = residual_field(&spec, &grid, &u);
        for n in 2..5 {
            for j in 2..5 {
                assert!(res[n - 1][j - 1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn error_terms_vanish_for_trivial_fields() {
        let (spec, grid) = setup(0.1, 10.0, 8, 8);
        let coeffs = forward_sweep(&spec, &grid, &IterateState::zero(&grid)).unwrap();
        assert!(error_estimate(&coeffs, &grid.zero_field(), &spec, &grid)
            .iter()
            .all(|&e| e == 0.0));

        // every line identical, boundary line included
        let mut u = grid.zero_field();
        for row in u.values.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (j as f64 * 0.4).sin();
            }
        }
        assert!(error_estimate(&coeffs, &u, &spec, &grid)
            .iter()
            .all(|&e| e == 0.0));
    }

    #[test]
    fn corrected_fixed_point_is_a_root() {
        let (spec, grid) = setup(0.1, 50.0, 20, 20);
        let opts = ProximalOptions::with_tol(1e-10);
        let report = proximal_iterate(&spec, &grid, &opts).unwrap();
        assert!(report.converged);
        // |K (u - u0)| dominates the defect; the reaction lag adds at most
        // its Lipschitz constant times the update
        let lip = report
            .solution
            .values
            .iter()
            .flatten()
            .map(|&u| (3.0 * spec.alpha * u * u - spec.beta).abs())
            .fold(0.0, f64::max);
        let bound = (spec.prox_weight + lip) * report.anchor_update_norm + 1e-12;
        assert!(
            report.residual_sup <= bound,
            "{} > {bound}",
            report.residual_sup
        );
        assert!(report.residual_sup < 1e-8);
    }

    #[test]
    fn lagged_fixed_point_keeps_a_defect() {
        let (spec, grid) = setup(0.1, 50.0, 20, 20);
        let opts = ProximalOptions {
            coupling: LineCoupling::Lagged,
            ..ProximalOptions::default()
        };
        let report = proximal_iterate(&spec, &grid, &opts).unwrap();
        assert!(report.converged);
        assert!(report.residual_sup > 1e-2);
    }

    #[test]
    fn fixed_iteration_count() {
        let (spec, grid) = setup(0.1, 10.0, 10, 10);
        let opts = ProximalOptions {
            fixed_iters: Some(7),
            ..ProximalOptions::default()
        };
        let report = proximal_iterate(&spec, &grid, &opts).unwrap();
        assert_eq!(report.outer_iterations, 7);
        assert_eq!(report.update_history.len(), 7);
    }

    #[test]
    fn deterministic_runs() {
        let (spec, grid) = setup(0.05, 50.0, 16, 12);
        let opts = ProximalOptions::default();
        let r1 = proximal_iterate(&spec, &grid, &opts).unwrap();
        let r2 = proximal_iterate(&spec, &grid, &opts).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn bad_options() {
        let (spec, grid) = setup(0.1, 1.0, 4, 4);
        assert!(proximal_iterate(&spec, &grid, &ProximalOptions::with_tol(0.0)).is_err());
        let opts = ProximalOptions {
            max_iter: 0,
            ..ProximalOptions::default()
        };
        assert!(proximal_iterate(&spec, &grid, &opts).is_err());
    }
}
