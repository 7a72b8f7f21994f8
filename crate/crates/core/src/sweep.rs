//! Forward recursion over the lines.
//!
//! With `q = 2 + K d^2 / eps` the line-coupled system
//! `u_{n+1} - q u_n + u_{n-1} + T(u_n) + (K u0_n + f_n) d^2/eps = 0`
//! is eliminated from line 1 upwards:
//!
//! ```text
//! a_1 = 1/q,              a_n = 1/(q - a_{n-1})
//! b_1 = a_1,              b_n = a_n (b_{n-1} + 1)
//! c_1 = a_1 g_1,          c_n = a_n (c_{n-1} + g_n),   g_n = (K u0_n + f_n) d^2/eps
//! ```
//!
//! `a` and `b` depend only on the grid and the scalar parameters; `c` also
//! depends on the anchor `u0` and the source, one value per transverse node.

use crate::error::{GmlError, Result};
use crate::problem::{FieldSolution, LineGrid, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCoefficients {
    /// `a[n - 1] = a_n` for `n = 1..N-1`.
    pub a: Vec<f64>,
    /// `b[n - 1] = b_n`.
    pub b: Vec<f64>,
    /// `c[n - 1][j] = c_n(s_j)`.
    pub c: Vec<Vec<f64>>,
}

impl SweepCoefficients {
    #[inline]
    pub fn a(&self, n: usize) -> f64 {
        self.a[n - 1]
    }

    #[inline]
    pub fn b(&self, n: usize) -> f64 {
        self.b[n - 1]
    }

    #[inline]
    pub fn c(&self, n: usize) -> &[f64] {
        &self.c[n - 1]
    }

    /// Number of interior lines, `N - 1`.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Outer-iteration state: the proximal anchor `u0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub anchor: FieldSolution,
    pub iteration: usize,
}

impl IterateState {
    pub fn new(anchor: FieldSolution) -> Self {
        Self {
            anchor,
            iteration: 0,
        }
    }

    /// `u0 = 0` everywhere.
    pub fn zero(grid: &LineGrid) -> Self {
        Self::new(grid.zero_field())
    }
}

/// Diagonal term `q = 2 + K d^2/eps` of the regularised line coupling.
#[inline]
pub fn coupling_diagonal(spec: &ProblemSpec, d: f64) -> f64 {
    2.0 + spec.prox_weight * d * d / spec.epsilon
}

/// Limit `a* = (q - sqrt(q^2 - 4)) / 2` of the `a_n` recursion, evaluated
/// without the cancellation at `q` near 2.
pub fn a_fixed_point(q: f64) -> f64 {
    2.0 / (q + (q * q - 4.0).sqrt())
}

/// Scalar recursions for `a_n`, `b_n`, `n = 1..count`.
pub fn scalar_recursion(q: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    let mut a_prev = 0.0;
    let mut b_prev = 0.0;
    for n in 1..=count {
        let denom = q - a_prev;
        if !(denom > 0.0) {
            return Err(GmlError::InvalidParameter(format!(
                "sweep denominator {denom} is not positive at line {n}"
            )));
        }
        let a_n = 1.0 / denom;
        // b_1 = a_1 follows from b_0 = 0
        let b_n = a_n * (b_prev + 1.0);
        a.push(a_n);
        b.push(b_n);
        a_prev = a_n;
        b_prev = b_n;
    }
    Ok((a, b))
}

pub fn forward_sweep(
    spec: &ProblemSpec,
    grid: &LineGrid,
    state: &IterateState,
) -> Result<SweepCoefficients> {
    state.anchor.check_grid(grid, "anchor")?;
    let q = coupling_diagonal(spec, grid.d);
    let (a, b) = scalar_recursion(q, grid.n_lines - 1)?;
    let c = c_recursion(&a, spec, grid, &state.anchor);
    Ok(SweepCoefficients { a, b, c })
}

/// Recomputes `c` for a new anchor, keeping `a` and `b`.
///
/// Produces exactly what [`forward_sweep`] would for the same inputs.
pub fn refresh_c(
    coeffs: &SweepCoefficients,
    spec: &ProblemSpec,
    grid: &LineGrid,
    state: &IterateState,
) -> Result<SweepCoefficients> {
    state.anchor.check_grid(grid, "anchor")?;
    if coeffs.len() != grid.n_lines - 1 {
        return Err(GmlError::DimensionMismatch {
            expected: grid.n_lines - 1,
            found: coeffs.len(),
            context: "sweep coefficients",
        });
    }
    let c = c_recursion(&coeffs.a, spec, grid, &state.anchor);
    Ok(SweepCoefficients {
        a: coeffs.a.clone(),
        b: coeffs.b.clone(),
        c,
    })
}

fn c_recursion(
    a: &[f64],
    spec: &ProblemSpec,
    grid: &LineGrid,
    anchor: &FieldSolution,
) -> Vec<Vec<f64>> {
    let k = spec.prox_weight;
    let scale = grid.d * grid.d / spec.epsilon;
    let m = grid.m_nodes;
    let mut c: Vec<Vec<f64>> = Vec::with_capacity(a.len());
    let mut prev = vec![0.0; m + 1];
    for (idx, &a_n) in a.iter().enumerate() {
        let n = idx + 1;
        let f = grid.sample_source(&spec.source, n);
        let u0 = &anchor.values[n];
        let row: Vec<f64> = (0..=m)
            .map(|j| a_n * (prev[j] + (k * u0[j] + f[j]) * scale))
            .collect();
        prev.clone_from(&row);
        c.push(row);
    }
    c
}
