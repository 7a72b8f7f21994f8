//! Problem data, domain geometry and the line grid.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{GmlError, Result};

/// Boundary curve `x -> y`.
pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pointwise source `(x, y) -> f`.
pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Strip `{(x, y) : a <= x <= b, y1(x) <= y <= y2(x)}`.
#[derive(Clone)]
pub struct CartesianDomain {
    pub a: f64,
    pub b: f64,
    pub y1: Curve,
    pub y2: Curve,
}

impl CartesianDomain {
    pub fn new(
        a: f64,
        b: f64,
        y1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        y2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(GmlError::InvalidParameter(format!(
                "need finite a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self {
            a,
            b,
            y1: Arc::new(y1),
            y2: Arc::new(y2),
        })
    }

    /// `[0, 1] x [0, 1]`.
    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 1.0, 0.0, 1.0).expect("unit square is valid")
    }

    pub fn rectangle(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(d > c) {
            return Err(GmlError::DegenerateDomain(format!(
                "rectangle needs c < d, got c = {c}, d = {d}"
            )));
        }
        Self::new(a, b, move |_| c, move |_| d)
    }
}

impl fmt::Debug for CartesianDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CartesianDomain")
            .field("a", &self.a)
            .field("b", &self.b)
            .finish_non_exhaustive()
    }
}

/// Annulus `r_inner <= r <= r_outer`, periodic in theta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarDomain {
    pub r_inner: f64,
    pub r_outer: f64,
    pub theta_period: f64,
}

impl PolarDomain {
    pub fn new(r_inner: f64, r_outer: f64, theta_period: f64) -> Result<Self> {
        if !(r_inner > 0.0 && r_outer > r_inner) {
            return Err(GmlError::InvalidParameter(format!(
                "need 0 < r_inner < r_outer, got {r_inner}, {r_outer}"
            )));
        }
        if !(theta_period > 0.0) {
            return Err(GmlError::InvalidParameter(format!(
                "theta period must be positive, got {theta_period}"
            )));
        }
        Ok(Self {
            r_inner,
            r_outer,
            theta_period,
        })
    }
}

impl Default for PolarDomain {
    /// `1 <= r <= 2`, full turn.
    fn default() -> Self {
        Self {
            r_inner: 1.0,
            r_outer: 2.0,
            theta_period: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Domain {
    Cartesian(CartesianDomain),
    Polar(PolarDomain),
}

/// Right-hand side `f`.
#[derive(Clone)]
pub enum Source {
    Constant(f64),
    Function(SourceFn),
}

impl Source {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::Function(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Source::Constant(v) => *v,
            Source::Function(f) => f(x, y),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Source::Constant(v) => Some(*v),
            Source::Function(_) => None,
        }
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(v) => write!(f, "Constant({v})"),
            Source::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Coefficients of `-eps lap(u) + alpha u^3 - beta u = f` together with the
/// proximal weight `K`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub source: Source,
    pub prox_weight: f64,
    pub domain: Domain,
}

impl ProblemSpec {
    pub fn new(
        epsilon: f64,
        alpha: f64,
        beta: f64,
        source: Source,
        prox_weight: f64,
        domain: Domain,
    ) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(GmlError::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(prox_weight >= 0.0) || !prox_weight.is_finite() {
            return Err(GmlError::InvalidParameter(format!(
                "proximal weight must be non-negative, got {prox_weight}"
            )));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(GmlError::InvalidParameter(
                "alpha and beta must be finite".into(),
            ));
        }
        Ok(Self {
            epsilon,
            alpha,
            beta,
            source,
            prox_weight,
            domain,
        })
    }

    /// Unit square, `f = 1`, `alpha = beta = 1`.
    pub fn unit_square(epsilon: f64, prox_weight: f64) -> Result<Self> {
        Self::new(
            epsilon,
            1.0,
            1.0,
            Source::Constant(1.0),
            prox_weight,
            Domain::Cartesian(CartesianDomain::unit_square()),
        )
    }

    pub fn cartesian_domain(&self) -> Result<&CartesianDomain> {
        match &self.domain {
            Domain::Cartesian(d) => Ok(d),
            Domain::Polar(_) => Err(GmlError::InvalidParameter(
                "operation requires a Cartesian domain".into(),
            )),
        }
    }

    /// `(-alpha u^3 + beta u)`, the reaction part moved to the right side.
    #[inline]
    pub fn reaction(&self, u: f64) -> f64 {
        -self.alpha * u * u * u + self.beta * u
    }
}

/// Lines `x_n = a + n d`, `n = 0..=N`, each carrying `M + 1` nodes at the
/// reference parameters `s_j = j / M`.
///
/// Node `(n, j)` sits at `y = y1(x_n) + s_j (y2(x_n) - y1(x_n))`; values on
/// neighbouring lines are matched by `j`, not by physical `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid {
    pub a: f64,
    pub b: f64,
    pub n_lines: usize,
    pub d: f64,
    pub abscissae: Vec<f64>,
    pub m_nodes: usize,
    pub reference_nodes: Vec<f64>,
    pub per_line_range: Vec<(f64, f64)>,
}

pub fn build_cartesian_grid(domain: &CartesianDomain, n: usize, m: usize) -> Result<LineGrid> {
    if n < 2 {
        return Err(GmlError::InvalidParameter(format!(
            "need at least 2 line intervals, got N = {n}"
        )));
    }
    if m < 2 {
        return Err(GmlError::InvalidParameter(format!(
            "need at least 2 transverse intervals, got M = {m}"
        )));
    }
    let d = (domain.b - domain.a) / n as f64;
    let abscissae: Vec<f64> = (0..=n).map(|k| domain.a + k as f64 * d).collect();
    let reference_nodes: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let mut per_line_range = Vec::with_capacity(n + 1);
    for (k, &x) in abscissae.iter().enumerate() {
        let lo = (domain.y1)(x);
        let hi = (domain.y2)(x);
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(GmlError::DegenerateDomain(format!(
                "line {k} at x = {x}: y2 - y1 = {} is not positive",
                hi - lo
            )));
        }
        per_line_range.push((lo, hi));
    }
    Ok(LineGrid {
        a: domain.a,
        b: domain.b,
        n_lines: n,
        d,
        abscissae,
        m_nodes: m,
        reference_nodes,
        per_line_range,
    })
}

/// Physical transverse step `h_n = (y2(x_n) - y1(x_n)) / M`.
pub fn transverse_step(grid: &LineGrid, n: usize) -> Result<f64> {
    grid.transverse_step(n)
}

impl LineGrid {
    pub fn transverse_step(&self, n: usize) -> Result<f64> {
        let (lo, hi) = self.per_line_range.get(n).ok_or_else(|| {
            GmlError::InvalidParameter(format!("line {n} out of range 0..={}", self.n_lines))
        })?;
        Ok((hi - lo) / self.m_nodes as f64)
    }

    /// Unchecked variant for hot loops; `n` must be within `0..=N`.
    #[inline]
    pub(crate) fn h(&self, n: usize) -> f64 {
        let (lo, hi) = self.per_line_range[n];
        (hi - lo) / self.m_nodes as f64
    }

    /// Physical `y` of node `j` on line `n`.
    #[inline]
    pub fn y(&self, n: usize, j: usize) -> f64 {
        let (lo, hi) = self.per_line_range[n];
        lo + self.reference_nodes[j] * (hi - lo)
    }

    pub fn zero_field(&self) -> FieldSolution {
        FieldSolution::zeros(self.n_lines, self.m_nodes)
    }

    /// `f` sampled at every node of line `n`.
    pub fn sample_source(&self, source: &Source, n: usize) -> Vec<f64> {
        let x = self.abscissae[n];
        (0..=self.m_nodes)
            .map(|j| source.eval(x, self.y(n, j)))
            .collect()
    }
}

/// `values[n][j]` is `u_n` at reference node `s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub values: Vec<Vec<f64>>,
}

impl FieldSolution {
    pub fn zeros(n_lines: usize, m_nodes: usize) -> Self {
        Self {
            values: vec![vec![0.0; m_nodes + 1]; n_lines + 1],
        }
    }

    pub fn n_lines(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn m_nodes(&self) -> usize {
        self.values.first().map_or(0, |r| r.len().saturating_sub(1))
    }

    pub fn matches(&self, grid: &LineGrid) -> bool {
        self.values.len() == grid.n_lines + 1
            && self.values.iter().all(|r| r.len() == grid.m_nodes + 1)
    }

    pub(crate) fn check_grid(&self, grid: &LineGrid, context: &'static str) -> Result<()> {
        if self.values.len() != grid.n_lines + 1 {
            return Err(GmlError::DimensionMismatch {
                expected: grid.n_lines + 1,
                found: self.values.len(),
                context,
            });
        }
        if let Some(r) = self.values.iter().find(|r| r.len() != grid.m_nodes + 1) {
            return Err(GmlError::DimensionMismatch {
                expected: grid.m_nodes + 1,
                found: r.len(),
                context,
            });
        }
        Ok(())
    }

    /// Largest `|u1 - u2|` over all nodes.
    pub fn sup_diff(&self, other: &FieldSolution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(r1, r2)| r1.iter().zip(r2).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }

    /// Value at the node nearest the grid centre.
    pub fn center_value(&self) -> f64 {
        self.values[self.n_lines() / 2][self.m_nodes() / 2]
    }

    /// Distance from the lower end of line `n` to the first node whose value
    /// reaches `fraction` of the line's mid value. `None` if never reached.
    pub fn boundary_layer_width(&self, grid: &LineGrid, n: usize, fraction: f64) -> Option<f64> {
        let row = self.values.get(n)?;
        let target = fraction * row[row.len() / 2];
        let j = row.iter().position(|&v| v >= target)?;
        Some(grid.y(n, j) - grid.per_line_range[n].0)
    }
}
