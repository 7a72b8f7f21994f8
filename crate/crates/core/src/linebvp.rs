//! Per-line two-point boundary-value problems of the backward pass.
//!
//! Each line solves `u - gamma u'' = rhs` with `gamma = b_n d^2` and zero
//! Dirichlet ends, discretised with the 3-point stencil on the line's own
//! transverse step.

use crate::error::{GmlError, Result};
use crate::problem::{LineGrid, ProblemSpec};
use crate::sweep::SweepCoefficients;

/// Tridiagonal system over the interior unknowns of one line.
///
/// Row `j` reads `sub[j-1] x[j-1] + diag[j] x[j] + sup[j] x[j+1] = rhs[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(GmlError::InvalidParameter(
                "empty tridiagonal system".into(),
            ));
        }
        for (len, context) in [(sub.len(), "sub-diagonal"), (sup.len(), "super-diagonal")] {
            if len != n - 1 {
                return Err(GmlError::DimensionMismatch {
                    expected: n - 1,
                    found: len,
                    context,
                });
            }
        }
        if rhs.len() != n {
            return Err(GmlError::DimensionMismatch {
                expected: n,
                found: rhs.len(),
                context: "right-hand side",
            });
        }
        Ok(Self {
            sub,
            diag,
            sup,
            rhs,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x`, used by tests and diagnostics.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut v = self.diag[j] * x[j];
                if j > 0 {
                    v += self.sub[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    v += self.sup[j] * x[j + 1];
                }
                v
            })
            .collect()
    }
}

/// Encodes `(1 + 2 gamma/h^2) u_j - (gamma/h^2)(u_{j-1} + u_{j+1}) = rhs_j`,
/// `gamma = b_n d^2`, with the zero end values folded in.
pub fn assemble_line_system(
    b_n: f64,
    d: f64,
    h: f64,
    rhs_values: &[f64],
) -> Result<TridiagonalSystem> {
    if !(h > 0.0) {
        return Err(GmlError::InvalidParameter(format!(
            "transverse step must be positive, got {h}"
        )));
    }
    if !(b_n > 0.0) || !b_n.is_finite() {
        return Err(GmlError::InvalidParameter(format!(
            "b_n must be positive, got {b_n}"
        )));
    }
    if rhs_values.is_empty() {
        return Err(GmlError::InvalidParameter(
            "line needs at least one interior node".into(),
        ));
    }
    let k = b_n * d * d / (h * h);
    let n = rhs_values.len();
    Ok(TridiagonalSystem {
        sub: vec![-k; n - 1],
        diag: vec![1.0 + 2.0 * k; n],
        sup: vec![-k; n - 1],
        rhs: rhs_values.to_vec(),
    })
}

/// Forward elimination and back substitution.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.len();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut pivot = sys.diag[0];
    check_pivot(pivot, 0)?;
    if n > 1 {
        c_prime[0] = sys.sup[0] / pivot;
    }
    x[0] = sys.rhs[0] / pivot;
    for j in 1..n {
        let l = sys.sub[j - 1];
        pivot = sys.diag[j] - l * c_prime[j - 1];
        check_pivot(pivot, j)?;
        if j + 1 < n {
            c_prime[j] = sys.sup[j] / pivot;
        }
        x[j] = (sys.rhs[j] - l * x[j - 1]) / pivot;
    }
    for j in (0..n - 1).rev() {
        x[j] -= c_prime[j] * x[j + 1];
    }
    Ok(x)
}

#[inline]
fn check_pivot(pivot: f64, row: usize) -> Result<()> {
    if pivot == 0.0 || !pivot.is_finite() {
        Err(GmlError::ZeroPivot { row, pivot })
    } else {
        Ok(())
    }
}

/// Periodic tridiagonal system: row 0 couples to the last unknown through
/// `sub[0]`, the last row couples to the first through `sup[n-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl CyclicTridiagonal {
    /// Sherman-Morrison on top of [`thomas_solve`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        if n < 3 {
            return Err(GmlError::InvalidParameter(format!(
                "periodic system needs at least 3 unknowns, got {n}"
            )));
        }
        if self.sub.len() != n || self.sup.len() != n || rhs.len() != n {
            return Err(GmlError::DimensionMismatch {
                expected: n,
                found: rhs.len().min(self.sub.len()).min(self.sup.len()),
                context: "cyclic system",
            });
        }
        let top_right = self.sub[0];
        let bottom_left = self.sup[n - 1];
        let gamma = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= bottom_left * top_right / gamma;

        let base = TridiagonalSystem {
            sub: self.sub[1..].to_vec(),
            diag,
            sup: self.sup[..n - 1].to_vec(),
            rhs: rhs.to_vec(),
        };
        let mut x = thomas_solve(&base)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = bottom_left;
        let z = thomas_solve(&TridiagonalSystem { rhs: u, ..base })?;
        let fact =
            (x[0] + top_right * x[n - 1] / gamma) / (1.0 + z[0] + top_right * z[n - 1] / gamma);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi -= fact * zi;
        }
        Ok(x)
    }
}

/// Solves line `n` of the backward pass given the already known line `n + 1`.
///
/// The right-hand side is
/// `a_n u_{n+1} + b_n (-alpha u_{n+1}^3 + beta u_{n+1}) d^2/eps + c_n (+ extra)`;
/// the cubic is evaluated on the neighbour so the solve is linear. Returns
/// all `M + 1` nodes, ends set to zero.
pub fn solve_line(
    n: usize,
    coeffs: &SweepCoefficients,
    u_next: &[f64],
    spec: &ProblemSpec,
    grid: &LineGrid,
    extra: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let m = grid.m_nodes;
    if n == 0 || n >= grid.n_lines {
        return Err(GmlError::InvalidParameter(format!(
            "line {n} is not interior (1..{})",
            grid.n_lines
        )));
    }
    if u_next.len() != m + 1 {
        return Err(GmlError::DimensionMismatch {
            expected: m + 1,
            found: u_next.len(),
            context: "neighbour line",
        });
    }
    if let Some(e) = extra {
        if e.len() != m + 1 {
            return Err(GmlError::DimensionMismatch {
                expected: m + 1,
                found: e.len(),
                context: "correction term",
            });
        }
    }
    let (a_n, b_n) = (coeffs.a(n), coeffs.b(n));
    let c_n = coeffs.c(n);
    let scale = grid.d * grid.d / spec.epsilon;
    let rhs: Vec<f64> = (1..m)
        .map(|j| {
            let v = u_next[j];
            let mut r = a_n * v + b_n * spec.reaction(v) * scale + c_n[j];
            if let Some(e) = extra {
                r += e[j];
            }
            r
        })
        .collect();
    let sys = assemble_line_system(b_n, grid.d, grid.h(n), &rhs)?;
    let interior = thomas_solve(&sys)?;
    let mut out = Vec::with_capacity(m + 1);
    out.push(0.0);
    out.extend(interior);
    out.push(0.0);
    Ok(out)
}

/// 3-point second difference `(u_{j-1} - 2 u_j + u_{j+1}) / h^2` at interior
/// nodes; zero at the two ends.
pub fn second_difference(u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    let mut out = vec![0.0; m];
    let inv = 1.0 / (h * h);
    for j in 1..m.saturating_sub(1) {
        out[j] = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * inv;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_cartesian_grid, CartesianDomain, ProblemSpec, Source};
    use crate::sweep::{forward_sweep, IterateState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Gaussian elimination with partial pivoting on the dense matrix.
    fn dense_solve(sys: &TridiagonalSystem) -> Vec<f64> {
        let n = sys.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        for j in 0..n {
            a[j][j] = sys.diag[j];
            if j > 0 {
                a[j][j - 1] = sys.sub[j - 1];
            }
            if j + 1 < n {
                a[j][j + 1] = sys.sup[j];
            }
            a[j][n] = sys.rhs[j];
        }
        for col in 0..n {
            let p = (col..n)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .unwrap();
            a.swap(col, p);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (a[r][n] - s) / a[r][r];
        }
        x
    }

    fn random_dominant(rng: &mut ChaCha8Rng, n: usize) -> TridiagonalSystem {
        let sub: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sup: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let diag = (0..n)
            .map(|j| {
                let off = if j > 0 { sub[j - 1].abs() } else { 0.0 }
                    + if j + 1 < n { sup[j].abs() } else { 0.0 };
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                s * (off + rng.random_range(0.1..2.0))
            })
            .collect();
        let rhs = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        TridiagonalSystem::new(sub, diag, sup, rhs).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sys = assemble_line_system(0.3, 0.1, 0.05, &[0.0; 9]).unwrap();
        assert!(thomas_solve(&sys).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanishing_diffusion_is_identity() {
        let rhs = [1.0, -2.0, 3.5, 0.25];
        let sys = assemble_line_system(1e-300, 1e-3, 0.1, &rhs).unwrap();
        let x = thomas_solve(&sys).unwrap();
        for (a, b) in x.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_system() {
        let rhs = vec![3.0, 1.0, 4.0, 1.0, 5.0];
        let sys =
            TridiagonalSystem::new(vec![0.0; 4], vec![1.0; 5], vec![0.0; 4], rhs.clone()).unwrap();
        assert_eq!(thomas_solve(&sys).unwrap(), rhs);
    }

    #[test]
    fn single_unknown() {
        let sys = assemble_line_system(1.0, 1.0, 1.0, &[6.0]).unwrap();
        assert_eq!(sys.diag, vec![3.0]);
        assert_eq!(thomas_solve(&sys).unwrap(), vec![2.0]);
    }

    #[test]
    fn small_system_matches_dense() {
        // M = 4: three interior unknowns
        let sys = assemble_line_system(0.7, 0.2, 0.25, &[1.0, -0.5, 2.0]).unwrap();
        let x = thomas_solve(&sys).unwrap();
        let y = dense_solve(&sys);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cosh_profile_for_constant_rhs() {
        // u - gamma u'' = C, u(0) = u(1) = 0
        let (gamma, c, m) = (0.02_f64, 1.7, 400);
        let h = 1.0 / m as f64;
        let sys = assemble_line_system(gamma, 1.0, h, &vec![c; m - 1]).unwrap();
        let x = thomas_solve(&sys).unwrap();
        let k = gamma.sqrt();
        let err = x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let y = (i + 1) as f64 * h;
                let exact = c * (1.0 - ((y - 0.5) / k).cosh() / (0.5 / k).cosh());
                (v - exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "sup error {err}");
    }

    fn manufactured_error(gamma: f64, m: usize) -> f64 {
        let h = 1.0 / m as f64;
        let rhs: Vec<f64> = (1..m)
            .map(|j| (1.0 + gamma * PI * PI) * (PI * j as f64 * h).sin())
            .collect();
        let x = thomas_solve(&assemble_line_system(gamma, 1.0, h, &rhs).unwrap()).unwrap();
        x.iter()
            .enumerate()
            .map(|(i, v)| (v - (PI * (i + 1) as f64 * h).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn second_order_in_h() {
        let errs: Vec<f64> = [25, 50, 100, 200]
            .iter()
            .map(|&m| manufactured_error(0.5, m))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn random_systems_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=50);
            let sys = if n == 1 {
                TridiagonalSystem::new(vec![], vec![2.5], vec![], vec![1.0]).unwrap()
            } else {
                random_dominant(&mut rng, n)
            };
            let x = thomas_solve(&sys).unwrap();
            let y = dense_solve(&sys);
            let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn nonnegative_rhs_gives_nonnegative_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let m = rng.random_range(3..60);
            let rhs: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.0..3.0)).collect();
            let b = rng.random_range(1e-3..2.0);
            let h = rng.random_range(1e-3..0.5);
            let x = thomas_solve(&assemble_line_system(b, 0.1, h, &rhs).unwrap()).unwrap();
            assert!(x.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let sys =
            TridiagonalSystem::new(vec![1.0], vec![0.0, 1.0], vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            thomas_solve(&sys),
            Err(GmlError::ZeroPivot { row: 0, .. })
        ));
        assert!(assemble_line_system(0.0, 1.0, 1.0, &[1.0]).is_err());
        assert!(assemble_line_system(1.0, 1.0, 0.0, &[1.0]).is_err());
        assert!(TridiagonalSystem::new(vec![], vec![1.0, 1.0], vec![0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn cyclic_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3usize, 4, 7, 20] {
            let sub: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sup: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n).map(|j| sub[j].abs() + sup[j].abs() + 0.5).collect();
            let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cyc = CyclicTridiagonal {
                sub: sub.clone(),
                diag: diag.clone(),
                sup: sup.clone(),
            };
            let x = cyc.solve(&rhs).unwrap();
            for j in 0..n {
                let prev = (j + n - 1) % n;
                let next = (j + 1) % n;
                let ax = sub[j] * x[prev] + diag[j] * x[j] + sup[j] * x[next];
                assert!((ax - rhs[j]).abs() < 1e-12, "n = {n}, row {j}");
            }
        }
    }

    fn square_setup(n: usize, m: usize, f: f64) -> (ProblemSpec, LineGrid) {
        let mut spec = ProblemSpec::unit_square(0.1, 50.0).unwrap();
        spec.source = Source::Constant(f);
        let grid = build_cartesian_grid(&CartesianDomain::unit_square(), n, m).unwrap();
        (spec, grid)
    }

    #[test]
    fn zero_neighbour_and_zero_c() {
        let (spec, grid) = square_setup(6, 8, 0.0);
        let coeffs = forward_sweep(&spec, &grid, &IterateState::zero(&grid)).unwrap();
        let u = solve_line(3, &coeffs, &[0.0; 9], &spec, &grid, None).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn terminal_line_uses_c_only() {
        let (spec, grid) = square_setup(6, 8, 1.0);
        let coeffs = forward_sweep(&spec, &grid, &IterateState::zero(&grid)).unwrap();
        let n = grid.n_lines - 1;
        let u = solve_line(n, &coeffs, &[0.0; 9], &spec, &grid, None).unwrap();
        let rhs = coeffs.c(n)[1..8].to_vec();
        let direct =
            thomas_solve(&assemble_line_system(coeffs.b(n), grid.d, grid.h(n), &rhs).unwrap())
                .unwrap();
        assert_eq!(&u[1..8], &direct[..]);
    }

    #[test]
    fn linear_chain_without_reaction() {
        let (mut spec, grid) = square_setup(6, 8, 1.0);
        spec.alpha = 0.0;
        spec.beta = 0.0;
        let coeffs = forward_sweep(&spec, &grid, &IterateState::zero(&grid)).unwrap();
        let next: Vec<f64> = (0..9).map(|j| (j as f64 * 0.3).sin()).collect();
        let u = solve_line(2, &coeffs, &next, &spec, &grid, None).unwrap();
        let rhs: Vec<f64> = (1..8)
            .map(|j| coeffs.a(2) * next[j] + coeffs.c(2)[j])
            .collect();
        let direct =
            thomas_solve(&assemble_line_system(coeffs.b(2), grid.d, grid.h(2), &rhs).unwrap())
                .unwrap();
        assert_eq!(&u[1..8], &direct[..]);
    }
}
