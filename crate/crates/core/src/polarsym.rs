//! Symbolic proximal line solve on the annulus `r_inner <= r <= r_outer`.
//!
//! Lines are circles `r = t_n = r_inner + n d`. The outer circle carries the
//! boundary function `uf(theta)`, the inner one is zero. Every line solution
//! is a [`BoundaryPolynomial`] in `uf` and its theta-derivatives; the backward
//! pass is fully explicit in the neighbouring line:
//!
//! ```text
//! u_n = a_n u_{n+1} + b_n (-alpha u_{n+1}^3 + beta u_{n+1}) d^2/eps + c_n
//!     + b_n d^2 u_{n+1}'' / t_n^2 + b_n d (u0_{n+1} - u0_n) / t_n
//! ```
//!
//! with `''` the second theta-derivative and `u0` the previous iterate.

use serde::Serialize;

use crate::error::{GmlError, Result};
use crate::polar::{polar_numeric_solve, PolarField};
use crate::problem::PolarDomain;
use crate::sweep::scalar_recursion;
use crate::symalg::{BoundaryPolynomial, PolynomialJson, TruncationSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarSymbolicConfig {
    pub domain: PolarDomain,
    pub n_lines: usize,
    pub prox_weight: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Constant source `f`.
    pub source: f64,
    /// Number of sweep + backward cycles.
    pub iters: usize,
    /// Optional early stop once no coefficient moves by more than this.
    pub stop_tol: Option<f64>,
    pub trunc: TruncationSpec,
}

impl PolarSymbolicConfig {
    /// `1 <= r <= 2`, 100 lines, `K = 10`, `alpha = beta = f = 1`, 149 cycles.
    pub fn reference(epsilon: f64) -> Self {
        Self {
            domain: PolarDomain::default(),
            n_lines: 100,
            prox_weight: 10.0,
            epsilon,
            alpha: 1.0,
            beta: 1.0,
            source: 1.0,
            iters: 149,
            stop_tol: None,
            trunc: TruncationSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lines < 2 {
            return Err(GmlError::InvalidParameter(format!(
                "need at least 2 radial intervals, got {}",
                self.n_lines
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(GmlError::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.prox_weight >= 0.0) {
            return Err(GmlError::InvalidParameter(format!(
                "proximal weight must be non-negative, got {}",
                self.prox_weight
            )));
        }
        if self.iters == 0 {
            return Err(GmlError::InvalidParameter("need at least one cycle".into()));
        }
        PolarDomain::new(
            self.domain.r_inner,
            self.domain.r_outer,
            self.domain.theta_period,
        )?;
        Ok(())
    }

    /// Radial line spacing.
    pub fn d(&self) -> f64 {
        (self.domain.r_outer - self.domain.r_inner) / self.n_lines as f64
    }

    /// `t_n = r_inner + n d`.
    pub fn radius(&self, n: usize) -> f64 {
        self.domain.r_inner + n as f64 * self.d()
    }

    /// `(a_n, b_n)` for `n = 1..N-1`.
    pub fn scalar_coefficients(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.d();
        let q = 2.0 + self.prox_weight * d * d / self.epsilon;
        scalar_recursion(q, self.n_lines - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicSweep {
    /// `a[n - 1] = a_n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<BoundaryPolynomial>,
}

fn check_lines(cfg: &PolarSymbolicConfig, lines: &[BoundaryPolynomial]) -> Result<()> {
    if lines.len() != cfg.n_lines + 1 {
        return Err(GmlError::DimensionMismatch {
            expected: cfg.n_lines + 1,
            found: lines.len(),
            context: "line polynomials",
        });
    }
    Ok(())
}

/// `anchors[n]` is the previous iterate on line `n = 0..=N`; entry `0` is
/// ignored (the inner circle is zero).
pub fn symbolic_sweep(
    cfg: &PolarSymbolicConfig,
    anchors: &[BoundaryPolynomial],
) -> Result<SymbolicSweep> {
    check_lines(cfg, anchors)?;
    let (a, b) = cfg.scalar_coefficients()?;
    let d = cfg.d();
    let scale = d * d / cfg.epsilon;
    let k = cfg.prox_weight;
    let mut c: Vec<BoundaryPolynomial> = Vec::with_capacity(a.len());
    for (idx, &a_n) in a.iter().enumerate() {
        let forcing = anchors[idx + 1].scale(k).add_constant(cfg.source);
        let row = match c.last() {
            None => forcing.scale(a_n * scale),
            Some(prev) => prev.add_scaled(&forcing, scale)?.scale(a_n),
        };
        c.push(row);
    }
    Ok(SymbolicSweep { a, b, c })
}

/// Lines `N-1` down to `1`; line `N` is the bare symbol `uf`.
///
/// The radial first-derivative term uses the anchors, not the lines being
/// computed.
pub fn symbolic_backward_pass(
    cfg: &PolarSymbolicConfig,
    sweep: &SymbolicSweep,
    anchors: &[BoundaryPolynomial],
) -> Result<Vec<BoundaryPolynomial>> {
    check_lines(cfg, anchors)?;
    let n_lines = cfg.n_lines;
    let d = cfg.d();
    let d2 = d * d;
    let mut lines = vec![BoundaryPolynomial::zero(cfg.trunc); n_lines + 1];
    lines[n_lines] = BoundaryPolynomial::symbol(0, cfg.trunc);
    for n in (1..n_lines).rev() {
        let (a_n, b_n) = (sweep.a[n - 1], sweep.b[n - 1]);
        let t = cfg.radius(n);
        let u = &lines[n + 1];
        let cube = u.mul(u)?.mul(u)?;
        let reaction = cube.scale(-cfg.alpha).add_scaled(u, cfg.beta)?;
        let radial = anchors[n + 1].sub(&anchors[n])?;
        let next = u
            .scale(a_n)
            .add_scaled(&reaction, b_n * d2 / cfg.epsilon)?
            .add(&sweep.c[n - 1])?
            .add_scaled(&u.diff_n(2), d2 * b_n / (t * t))?
            .add_scaled(&radial, b_n * d2 / (t * d))?;
        lines[n] = next;
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarSymbolicSolution {
    /// `lines[n]` for `n = 0..=N`; `lines[0]` is zero, `lines[N]` is `uf`.
    pub lines: Vec<BoundaryPolynomial>,
    pub iterations: usize,
    /// Largest coefficient change in the last cycle.
    pub last_change: f64,
}

impl PolarSymbolicSolution {
    pub fn line(&self, n: usize) -> &BoundaryPolynomial {
        &self.lines[n]
    }

    pub fn interior(&self) -> &[BoundaryPolynomial] {
        &self.lines[1..self.lines.len() - 1]
    }
}

/// Runs `cfg.iters` cycles from zero anchors (fewer if `stop_tol` is hit).
pub fn symbolic_solve(cfg: &PolarSymbolicConfig) -> Result<PolarSymbolicSolution> {
    cfg.validate()?;
    let mut anchors = vec![BoundaryPolynomial::zero(cfg.trunc); cfg.n_lines + 1];
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..cfg.iters {
        let sweep = symbolic_sweep(cfg, &anchors)?;
        let lines = symbolic_backward_pass(cfg, &sweep, &anchors)?;
        last_change = lines
            .iter()
            .zip(&anchors)
            .map(|(p, q)| p.max_coeff_diff(q))
            .fold(0.0, f64::max);
        anchors = lines;
        iterations += 1;
        if cfg.stop_tol.is_some_and(|tol| last_change <= tol) {
            break;
        }
    }
    Ok(PolarSymbolicSolution {
        lines: anchors,
        iterations,
        last_change,
    })
}

/// `uf`, `uf'`, `uf''` sampled on the theta nodes `j * period / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySamples {
    pub theta: Vec<f64>,
    pub value: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl BoundarySamples {
    pub fn from_fn(m_theta: usize, period: f64, f: impl Fn(f64) -> (f64, f64, f64)) -> Self {
        let theta: Vec<f64> = (0..m_theta)
            .map(|j| j as f64 * period / m_theta as f64)
            .collect();
        let (mut value, mut first, mut second) = (vec![], vec![], vec![]);
        for &t in &theta {
            let (u, u1, u2) = f(t);
            value.push(u);
            first.push(u1);
            second.push(u2);
        }
        Self {
            theta,
            value,
            first,
            second,
        }
    }

    pub fn constant(m_theta: usize, period: f64, v: f64) -> Self {
        Self::from_fn(m_theta, period, |_| (v, 0.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckReport {
    /// `sup_j |p_n(uf_j, uf'_j, uf''_j) - u_n(theta_j)|` for `n = 1..N-1`.
    pub per_line_sup: Vec<f64>,
    pub sup_diff: f64,
}

/// Evaluates the symbolic lines on sampled boundary data and compares them
/// with the numeric polar solve driven by the same samples.
pub fn cross_check_numeric(
    cfg: &PolarSymbolicConfig,
    lines: &[BoundaryPolynomial],
    boundary: &BoundarySamples,
) -> Result<(CrossCheckReport, PolarField)> {
    check_lines(cfg, lines)?;
    let numeric = polar_numeric_solve(cfg, &boundary.value)?;
    let per_line_sup: Vec<f64> = (1..cfg.n_lines)
        .map(|n| {
            (0..boundary.theta.len())
                .map(|j| {
                    let s = lines[n].eval(boundary.value[j], boundary.first[j], boundary.second[j]);
                    (s - numeric.values[n][j]).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let sup_diff = per_line_sup.iter().copied().fold(0.0, f64::max);
    Ok((
        CrossCheckReport {
            per_line_sup,
            sup_diff,
        },
        numeric,
    ))
}

/// JSON record of one line.
#[derive(Debug, Clone, Serialize)]
pub struct LineJson {
    pub line: usize,
    pub radius: f64,
    #[serde(flatten)]
    pub poly: PolynomialJson,
    pub text: String,
}

impl PolarSymbolicSolution {
    /// Interior lines in the polynomial JSON rendering plus a readable form.
    pub fn to_json_lines(&self, cfg: &PolarSymbolicConfig) -> Vec<LineJson> {
        (1..cfg.n_lines)
            .map(|n| LineJson {
                line: n,
                radius: cfg.radius(n),
                poly: self.lines[n].to_json(),
                text: self.lines[n].to_string(),
            })
            .collect()
    }
}
