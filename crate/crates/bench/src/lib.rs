//! Shared fixtures for the criterion benches.

use gml_core::linebvp::assemble_line_system;
use gml_core::{
    build_cartesian_grid, BoundaryPolynomial, CartesianDomain, LineGrid, ProblemSpec,
    TridiagonalSystem, TruncationSpec,
};

/// Unit square, `f = 1`, `alpha = beta = 1`, `N = M = n`.
pub fn square_problem(eps: f64, k: f64, n: usize) -> (ProblemSpec, LineGrid) {
    let spec = ProblemSpec::unit_square(eps, k).expect("valid parameters");
    let grid = build_cartesian_grid(&CartesianDomain::unit_square(), n, n).expect("valid grid");
    (spec, grid)
}

/// One line system with a smooth right-hand side and `m - 1` unknowns.
pub fn line_system(m: usize) -> TridiagonalSystem {
    let h = 1.0 / m as f64;
    let rhs: Vec<f64> = (1..m).map(|j| (3.0 * j as f64 * h).sin()).collect();
    assemble_line_system(0.3, 0.01, h, &rhs).expect("valid system")
}

/// Dense polynomial filling every slot allowed by the default caps.
pub fn full_polynomial(seed: f64) -> BoundaryPolynomial {
    let t = TruncationSpec::default();
    let mut terms = vec![];
    for i in 0..=3u8 {
        for j in 0..=1u8 {
            for k in 0..=1u8 {
                let c = (seed + (i * 4 + j * 2 + k) as f64).sin();
                terms.push(([i, j, k, 0, 0], c));
            }
        }
    }
    BoundaryPolynomial::from_terms(terms, t)
}
