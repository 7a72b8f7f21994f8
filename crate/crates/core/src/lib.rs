//! Proximal generalized method of lines (GML) for semilinear elliptic
//! problems of Ginzburg-Landau type,
//!
//! ```text
//! -eps * lap(u) + alpha * u^3 - beta * u = f   in Omega,
//! ```
//!
//! with Dirichlet data on the boundary.
//!
//! The domain is cut into lines. A forward recursion over the lines
//! ([`sweep`]) eliminates the line coupling, and a backward pass
//! ([`proximal::backward_pass`]) solves one linear two-point problem per line
//! ([`linebvp`]). A proximal term `K (u - u0)` anchors every outer iteration to
//! the previous one; at the fixed point it vanishes.
//!
//! Besides the numeric Cartesian solver the crate carries:
//!
//! * [`symalg`]: truncated polynomials in the boundary symbols
//!   `(uf, uf', uf'', uf''', uf'''')`;
//! * [`polarsym`]: the annulus solver whose line solutions are such
//!   polynomials, plus a numeric polar counterpart in [`polar`];
//! * [`oracle`]: a damped Newton solve of the full 2D finite-difference
//!   system, used to validate the line solver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod linebvp;
pub mod oracle;
pub mod polar;
pub mod polarsym;
pub mod problem;
pub mod proximal;
pub mod sweep;
pub mod symalg;

pub use error::{GmlError, Result};
pub use linebvp::TridiagonalSystem;
pub use oracle::{compare_fields, newton_solve, FieldComparison, NewtonOptions, NewtonOutcome};
pub use polarsym::{PolarSymbolicConfig, PolarSymbolicSolution};
pub use problem::{
    build_cartesian_grid, CartesianDomain, Domain, FieldSolution, LineGrid, PolarDomain,
    ProblemSpec, Source,
};
pub use proximal::{proximal_iterate, LineCoupling, ProximalOptions, SolveReport};
pub use sweep::{forward_sweep, refresh_c, IterateState, SweepCoefficients};
pub use symalg::{BoundaryPolynomial, TruncationSpec};

/// Real root of `alpha u^3 - beta u = f` reached by scalar Newton from the
/// largest-magnitude side, i.e. the interior plateau value for small `eps`.
///
/// Returns `None` when `alpha <= 0` or the iteration does not settle.
pub fn plateau_root(alpha: f64, beta: f64, f: f64) -> Option<f64> {
    if alpha <= 0.0 {
        return None;
    }
    // start beyond every real root so Newton decreases monotonically onto
    // the largest one (f >= 0) or increases onto the smallest (f < 0)
    let bound = 1.0 + (beta.abs() + f.abs()) / alpha;
    let mut u = if f >= 0.0 { bound } else { -bound };
    for _ in 0..100 {
        let g = alpha * u * u * u - beta * u - f;
        let dg = 3.0 * alpha * u * u - beta;
        if dg == 0.0 {
            return None;
        }
        let step = g / dg;
        u -= step;
        if step.abs() <= 1e-15 * u.abs().max(1.0) {
            return Some(u);
        }
    }
    None
}
