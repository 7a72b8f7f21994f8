//! Numeric proximal line solve on the annulus.
//!
//! Same sweep and radial treatment as the symbolic solver in
//! [`crate::polarsym`], but each circle holds `m_theta` sampled values and
//! the angular term `u_n'' / t_n^2` is taken implicitly on the unknown line,
//! giving a periodic tridiagonal solve per circle.

use crate::error::{GmlError, Result};
use crate::linebvp::CyclicTridiagonal;
use crate::polarsym::PolarSymbolicConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    pub radii: Vec<f64>,
    pub theta: Vec<f64>,
    /// `values[n][j]` at radius `radii[n]`, angle `theta[j]`.
    pub values: Vec<Vec<f64>>,
    pub iterations: usize,
    pub last_update: f64,
}

/// `boundary[j]` is `uf(theta_j)` on the outer circle, `theta_j = j * period / m`.
pub fn polar_numeric_solve(cfg: &PolarSymbolicConfig, boundary: &[f64]) -> Result<PolarField> {
    cfg.validate()?;
    let m = boundary.len();
    if m < 3 {
        return Err(GmlError::InvalidParameter(format!(
            "need at least 3 angular nodes, got {m}"
        )));
    }
    let n_lines = cfg.n_lines;
    let d = cfg.d();
    let d2 = d * d;
    let scale = d2 / cfg.epsilon;
    let k = cfg.prox_weight;
    let h = cfg.domain.theta_period / m as f64;
    let (a, b) = cfg.scalar_coefficients()?;

    // matches the symbolic start: every anchor, the outer circle included, is zero
    let mut anchor = vec![vec![0.0; m]; n_lines + 1];
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..cfg.iters {
        let mut c: Vec<Vec<f64>> = Vec::with_capacity(n_lines - 1);
        let mut prev = vec![0.0; m];
        for n in 1..n_lines {
            let row: Vec<f64> = (0..m)
                .map(|j| a[n - 1] * (prev[j] + (k * anchor[n][j] + cfg.source) * scale))
                .collect();
            prev.clone_from(&row);
            c.push(row);
        }

        let mut u = vec![vec![0.0; m]; n_lines + 1];
        u[n_lines].copy_from_slice(boundary);
        for n in (1..n_lines).rev() {
            let (a_n, b_n) = (a[n - 1], b[n - 1]);
            let t = cfg.radius(n);
            let g = b_n * d2 / (t * t * h * h);
            let rhs: Vec<f64> = (0..m)
                .map(|j| {
                    let v = u[n + 1][j];
                    a_n * v
                        + b_n * (-cfg.alpha * v * v * v + cfg.beta * v) * scale
                        + c[n - 1][j]
                        + b_n * d2 * (anchor[n + 1][j] - anchor[n][j]) / (t * d)
                })
                .collect();
            let sys = CyclicTridiagonal {
                sub: vec![-g; m],
                diag: vec![1.0 + 2.0 * g; m],
                sup: vec![-g; m],
            };
            u[n] = sys.solve(&rhs)?;
        }

        last_update = u
            .iter()
            .zip(&anchor)
            .flat_map(|(r, s)| r.iter().zip(s).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max);
        anchor = u;
        iterations += 1;
        if cfg.stop_tol.is_some_and(|tol| last_update <= tol) {
            break;
        }
    }

    Ok(PolarField {
        radii: (0..=n_lines).map(|n| cfg.radius(n)).collect(),
        theta: (0..m).map(|j| j as f64 * h).collect(),
        values: anchor,
        iterations,
        last_update,
    })
}
