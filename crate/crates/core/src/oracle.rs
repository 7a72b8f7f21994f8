//! Full-grid damped Newton solve of the unregularised finite-difference
//! system, used as an independent check of the line solver.
//!
//! Unknowns are the interior nodes, line-major. The Jacobian is the
//! 5-point operator scaled by `-eps` plus the diagonal `3 alpha u^2 - beta`;
//! it is banded with half-bandwidth `M - 1` and factorised by banded LU with
//! partial pivoting. The residual is [`crate::proximal::residual_field`], so
//! both solvers are measured by one definition.

use serde::Serialize;

use crate::error::{GmlError, Result};
use crate::problem::{FieldSolution, LineGrid, ProblemSpec, Source};
use crate::proximal::residual_field;

/// Largest `N` or `M` accepted.
pub const MAX_ORACLE_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once the sup residual is at or below this.
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_newton: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub field: FieldSolution,
    pub iterations: usize,
    pub residual: f64,
    /// Sup norm of every accepted (damped) step.
    pub step_norms: Vec<f64>,
    /// Whether the zero start failed and the plateau start was used.
    pub restarted: bool,
}

/// Banded matrix in LAPACK `gbtrf` layout, with room for pivoting fill-in.
struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ld: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            kv: kl + ku,
            ld,
            ab: vec![0.0; ld * n],
            ipiv: vec![0; n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kv + i - j
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, kv) = (self.n, self.kl, self.kv);
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = j;
            let mut best = self.ab[self.idx(j, j)].abs();
            for i in j + 1..=j + km {
                let v = self.ab[self.idx(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.ipiv[j] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(GmlError::ZeroPivot {
                    row: j,
                    pivot: best,
                });
            }
            ju = ju.max((p + kv - kl).min(n - 1));
            if p != j {
                for c in j..=ju {
                    let (a, b) = (self.idx(p, c), self.idx(j, c));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.idx(j, j)];
            for i in j + 1..=j + km {
                let k = self.idx(i, j);
                self.ab[k] /= pivot;
            }
            for c in j + 1..=ju {
                let top = self.ab[self.idx(j, c)];
                if top == 0.0 {
                    continue;
                }
                for i in j + 1..=j + km {
                    let l = self.ab[self.idx(i, j)];
                    let k = self.idx(i, c);
                    self.ab[k] -= l * top;
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, kl, kv) = (self.n, self.kl, self.kv);
        for j in 0..n {
            b.swap(j, self.ipiv[j]);
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            for i in j + 1..=j + km {
                b[i] -= self.ab[self.idx(i, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] -= self.ab[self.idx(i, j)] * bj;
            }
        }
    }
}

fn flat_residual(spec: &ProblemSpec, grid: &LineGrid, u: &FieldSolution) -> Vec<f64> {
    residual_field(spec, grid, u)
        .into_iter()
        .flatten()
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn jacobian(spec: &ProblemSpec, grid: &LineGrid, u: &FieldSolution) -> BandLu {
    let (n_lines, m) = (grid.n_lines, grid.m_nodes);
    let w = m - 1;
    let mut jac = BandLu::new((n_lines - 1) * w, w, w);
    let inv_d2 = 1.0 / (grid.d * grid.d);
    for n in 1..n_lines {
        let h = grid.h(n);
        let inv_h2 = 1.0 / (h * h);
        for j in 1..m {
            let row = (n - 1) * w + (j - 1);
            let v = u.values[n][j];
            let diag =
                spec.epsilon * (2.0 * inv_d2 + 2.0 * inv_h2) + 3.0 * spec.alpha * v * v - spec.beta;
            jac.set(row, row, diag);
            if j > 1 {
                jac.set(row, row - 1, -spec.epsilon * inv_h2);
            }
            if j + 1 < m {
                jac.set(row, row + 1, -spec.epsilon * inv_h2);
            }
            if n > 1 {
                jac.set(row, row - w, -spec.epsilon * inv_d2);
            }
            if n + 1 < n_lines {
                jac.set(row, row + w, -spec.epsilon * inv_d2);
            }
        }
    }
    jac
}

fn newton_from(
    spec: &ProblemSpec,
    grid: &LineGrid,
    opts: &NewtonOptions,
    mut u: FieldSolution,
) -> std::result::Result<NewtonOutcome, (usize, f64)> {
    let w = grid.m_nodes - 1;
    let mut f = flat_residual(spec, grid, &u);
    let mut steps = Vec::new();
    for it in 0..=opts.max_newton {
        let res = sup(&f);
        if res <= opts.tol {
            return Ok(NewtonOutcome {
                field: u,
                iterations: it,
                residual: res,
                step_norms: steps,
                restarted: false,
            });
        }
        if it == opts.max_newton || !res.is_finite() {
            return Err((it, res));
        }
        let mut jac = jacobian(spec, grid, &u);
        if jac.factor().is_err() {
            return Err((it, res));
        }
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        jac.solve(&mut delta);

        // halve until the residual 2-norm drops
        let base = l2(&f);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial = u.clone();
            for (k, dv) in delta.iter().enumerate() {
                trial.values[k / w + 1][k % w + 1] += lambda * dv;
            }
            let ft = flat_residual(spec, grid, &trial);
            if l2(&ft) < base {
                accepted = Some((trial, ft));
                break;
            }
            lambda *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            return Err((it, res));
        };
        steps.push(lambda * sup(&delta));
        u = next;
        f = fnext;
    }
    unreachable!("loop returns on its last iteration")
}

/// Damped Newton from `u = 0`; on failure retries once from the constant
/// plateau root of `alpha u^3 - beta u = f(centre)` on the interior.
pub fn newton_solve(
    spec: &ProblemSpec,
    grid: &LineGrid,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    if !(opts.tol > 0.0) {
        return Err(GmlError::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if grid.n_lines > MAX_ORACLE_SIZE || grid.m_nodes > MAX_ORACLE_SIZE {
        return Err(GmlError::InvalidParameter(format!(
            "oracle grid limited to {MAX_ORACLE_SIZE} intervals per direction"
        )));
    }
    spec.cartesian_domain()?;
    let first = match newton_from(spec, grid, opts, grid.zero_field()) {
        Ok(out) => return Ok(out),
        Err(e) => e,
    };

    let (nc, mc) = (grid.n_lines / 2, grid.m_nodes / 2);
    let f_mid = match &spec.source {
        Source::Constant(v) => *v,
        s => s.eval(grid.abscissae[nc], grid.y(nc, mc)),
    };
    let Some(root) = crate::plateau_root(spec.alpha, spec.beta, f_mid) else {
        return Err(GmlError::NewtonDiverged {
            iterations: first.0,
            residual: first.1,
        });
    };
    let mut start = grid.zero_field();
    for row in &mut start.values[1..grid.n_lines] {
        for v in &mut row[1..grid.m_nodes] {
            *v = root;
        }
    }
    newton_from(spec, grid, opts, start)
        .map(|mut out| {
            out.restarted = true;
            out
        })
        .map_err(|(iterations, residual)| GmlError::NewtonDiverged {
            iterations: first.0 + iterations,
            residual,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldComparison {
    pub sup_diff: f64,
    /// `sqrt(sum d h_n (u1 - u2)^2)` over interior nodes.
    pub l2_diff: f64,
}

pub fn compare_fields(
    u1: &FieldSolution,
    u2: &FieldSolution,
    grid: &LineGrid,
) -> Result<FieldComparison> {
    u1.check_grid(grid, "first field")?;
    u2.check_grid(grid, "second field")?;
    let mut sup_diff: f64 = 0.0;
    let mut sum = 0.0;
    for n in 1..grid.n_lines {
        let w = grid.d * grid.h(n);
        for j in 1..grid.m_nodes {
            let e = u1.values[n][j] - u2.values[n][j];
            sup_diff = sup_diff.max(e.abs());
            sum += w * e * e;
        }
    }
    Ok(FieldComparison {
        sup_diff,
        l2_diff: sum.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_cartesian_grid, CartesianDomain};
    use crate::proximal::residual_norm;

    fn square(eps: f64, n: usize) -> (ProblemSpec, LineGrid) {
        let spec = ProblemSpec::unit_square(eps, 0.0).unwrap();
        let grid = build_cartesian_grid(&CartesianDomain::unit_square(), n, n).unwrap();
        (spec, grid)
    }

    #[test]
    fn band_lu_matches_dense_product() {
        // random banded matrix with a zero leading entry to force pivoting
        let n = 12;
        let (kl, ku) = (3, 2);
        let mut lu = BandLu::new(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v = if i == 0 && j == 0 {
                    0.0
                } else {
                    ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 0.5 } else { 0.0 }
                };
                lu.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut b: Vec<f64> = dense
            .iter()
            .map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        lu.factor().unwrap();
        lu.solve(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-10, "{a} vs {e}");
        }
    }

    #[test]
    fn homogeneous_problem() {
        let (mut spec, grid) = square(0.1, 8);
        spec.source = Source::Constant(0.0);
        let out = newton_solve(&spec, &grid, &NewtonOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.field.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn converges_and_is_symmetric() {
        let (spec, grid) = square(0.1, 20);
        let out = newton_solve(&spec, &grid, &NewtonOptions::default()).unwrap();
        assert!(out.residual <= 1e-10);
        assert!(residual_norm(&spec, &grid, &out.field) <= 1e-10);
        let u = &out.field.values;
        for n in 0..=20 {
            for j in 0..=20 {
                assert!((u[n][j] - u[j][n]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quadratic_tail() {
        let (spec, grid) = square(0.1, 16);
        let opts = NewtonOptions {
            tol: 1e-13,
            max_newton: 50,
        };
        let out = newton_solve(&spec, &grid, &opts).unwrap();
        let s = &out.step_norms;
        assert!(s.len() >= 3, "steps {s:?}");
        // last three full steps: s_{k+1} <= C s_k^2
        for w in s[s.len() - 3..].windows(2) {
            if w[0] > 1e-12 {
                assert!(w[1] <= 10.0 * w[0] * w[0] + 1e-14, "steps {s:?}");
            }
        }
    }

    #[test]
    fn thin_layer_plateau() {
        let (spec, grid) = square(0.001, 24);
        let out = newton_solve(&spec, &grid, &NewtonOptions::default()).unwrap();
        let root = crate::plateau_root(1.0, 1.0, 1.0).unwrap();
        assert!((out.field.center_value() - root).abs() < 5e-3);
    }

    #[test]
    fn comparisons() {
        let (_, grid) = square(0.1, 6);
        let mut u = grid.zero_field();
        u.values[2][3] = 1.5;
        let same = compare_fields(&u, &u, &grid).unwrap();
        assert_eq!((same.sup_diff, same.l2_diff), (0.0, 0.0));
        let mut v = u.clone();
        v.values[2][3] += 0.5;
        let c = compare_fields(&u, &v, &grid).unwrap();
        assert_eq!(c.sup_diff, 0.5);
        assert!((c.l2_diff - 0.5 / 6.0).abs() < 1e-15);
        let other = build_cartesian_grid(&CartesianDomain::unit_square(), 7, 6).unwrap();
        assert!(compare_fields(&u, &other.zero_field(), &grid).is_err());
    }

    #[test]
    fn size_limit() {
        let (spec, grid) = square(0.1, MAX_ORACLE_SIZE + 1);
        assert!(newton_solve(&spec, &grid, &NewtonOptions::default()).is_err());
    }
}
