use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use gml_core::io::write_field_csv;
use gml_core::polarsym::{cross_check_numeric, symbolic_solve, BoundarySamples, LineJson};
use gml_core::{
    build_cartesian_grid, compare_fields, newton_solve, CartesianDomain, Domain, FieldComparison,
    GmlError, LineCoupling, LineGrid, NewtonOptions, NewtonOutcome, PolarSymbolicConfig,
    ProblemSpec, ProximalOptions, SolveReport, Source,
};
use serde::Serialize;

use crate::expr;
use crate::{Coupling, Mode, SolveArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug)]
pub struct RunError {
    pub code: u8,
    pub message: String,
    /// Printed before the error when the run produced results anyway.
    pub summary: Option<String>,
}

impl RunError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
            summary: None,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
            summary: None,
        }
    }
}

impl From<GmlError> for RunError {
    fn from(e: GmlError) -> Self {
        let code = match e {
            GmlError::InvalidParameter(_) | GmlError::DegenerateDomain(_) => EXIT_USAGE,
            GmlError::Csv(_) => EXIT_IO,
            _ => EXIT_SOLVER,
        };
        Self {
            code,
            message: e.to_string(),
            summary: None,
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

pub fn run(args: &SolveArgs) -> RunResult<String> {
    validate(args)?;
    match args.mode {
        Mode::Cartesian => run_cartesian(args),
        Mode::PolarSymbolic => run_polar(args),
        Mode::Oracle => run_oracle(args),
        Mode::Compare => run_compare(args),
    }
}

fn validate(args: &SolveArgs) -> RunResult<()> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(RunError::usage(format!(
                "--{name} must be positive, got {v}"
            )))
        }
    };
    positive("eps", args.eps)?;
    if let Some(tol) = args.tol {
        positive("tol", tol)?;
    }
    if let Some(k) = args.k {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(RunError::usage(format!(
                "--K must be non-negative, got {k}"
            )));
        }
    }
    if args.n < 2 {
        return Err(RunError::usage("--N must be at least 2"));
    }
    if args.m.is_some_and(|m| m < 2) {
        return Err(RunError::usage("--M must be at least 2"));
    }
    if args.max_iter == 0 || args.iters == Some(0) {
        return Err(RunError::usage("iteration counts must be positive"));
    }
    if args.mode == Mode::PolarSymbolic && args.out_field.is_some() {
        return Err(RunError::usage(
            "--out-field is not produced in polar-symbolic mode",
        ));
    }
    if args.mode != Mode::PolarSymbolic && args.out_expr.is_some() {
        return Err(RunError::usage(
            "--out-expr is only produced in polar-symbolic mode",
        ));
    }
    Ok(())
}

fn parse_source(text: &str) -> RunResult<Source> {
    if let Some(v) = text.strip_prefix("const:") {
        return v
            .trim()
            .parse()
            .map(Source::Constant)
            .map_err(|_| RunError::usage(format!("--f: bad constant '{v}'")));
    }
    let body = text.strip_prefix("expr:").unwrap_or(text);
    let e = expr::parse(body).map_err(|e| RunError::usage(format!("--f: {e}")))?;
    if !e.uses_x() && !e.uses_y() {
        return Ok(Source::Constant(e.eval(0.0, 0.0)));
    }
    let e = Arc::new(e);
    Ok(Source::function(move |x, y| e.eval(x, y)))
}

fn parse_curve(flag: &str, text: &str) -> RunResult<expr::Expr> {
    let e = expr::parse(text).map_err(|e| RunError::usage(format!("--{flag}: {e}")))?;
    if e.uses_y() {
        return Err(RunError::usage(format!("--{flag} may only depend on x")));
    }
    Ok(e)
}

fn cartesian_setup(args: &SolveArgs) -> RunResult<(ProblemSpec, LineGrid)> {
    let y1 = parse_curve("y1", &args.y1)?;
    let y2 = parse_curve("y2", &args.y2)?;
    let domain = CartesianDomain::new(
        args.a,
        args.b,
        move |x| y1.eval(x, 0.0),
        move |x| y2.eval(x, 0.0),
    )?;
    let grid = build_cartesian_grid(&domain, args.n, args.m.unwrap_or(args.n))?;
    let spec = ProblemSpec::new(
        args.eps,
        args.alpha,
        args.beta,
        parse_source(&args.f)?,
        args.k.unwrap_or(50.0),
        Domain::Cartesian(domain),
    )?;
    Ok((spec, grid))
}

fn proximal_options(args: &SolveArgs) -> ProximalOptions {
    ProximalOptions {
        tol: args.tol.unwrap_or(1e-8),
        max_iter: args.max_iter,
        fixed_iters: args.iters,
        coupling: match args.coupling {
            Coupling::Lagged => LineCoupling::Lagged,
            Coupling::Corrected => LineCoupling::Corrected,
        },
    }
}

fn create(path: &Path) -> RunResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| RunError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> RunResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| RunError::io(path, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| RunError::io(path, e))
}

fn write_field(args: &SolveArgs, grid: &LineGrid, u: &gml_core::FieldSolution) -> RunResult<()> {
    if let Some(path) = &args.out_field {
        let mut w = create(path)?;
        write_field_csv(&mut w, grid, u).map_err(|e| RunError::io(path, e))?;
        w.flush().map_err(|e| RunError::io(path, e))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GmlSummary {
    outer_iterations: usize,
    converged: bool,
    anchor_update_norm: f64,
    residual_sup: f64,
    center_value: f64,
    max_error_estimate: f64,
}

impl GmlSummary {
    fn new(r: &SolveReport) -> Self {
        Self {
            outer_iterations: r.outer_iterations,
            converged: r.converged,
            anchor_update_norm: r.anchor_update_norm,
            residual_sup: r.residual_sup,
            center_value: r.solution.center_value(),
            max_error_estimate: r.error_estimates.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Serialize)]
struct OracleSummary {
    newton_iterations: usize,
    residual_sup: f64,
    restarted: bool,
    center_value: f64,
}

impl OracleSummary {
    fn new(o: &NewtonOutcome) -> Self {
        Self {
            newton_iterations: o.iterations,
            residual_sup: o.residual,
            restarted: o.restarted,
            center_value: o.field.center_value(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Parameters {
    epsilon: f64,
    alpha: f64,
    beta: f64,
    k: f64,
    n: usize,
    m: usize,
    source: String,
}

impl Parameters {
    fn new(args: &SolveArgs, spec: &ProblemSpec, grid: &LineGrid) -> Self {
        Self {
            epsilon: spec.epsilon,
            alpha: spec.alpha,
            beta: spec.beta,
            k: spec.prox_weight,
            n: grid.n_lines,
            m: grid.m_nodes,
            source: args.f.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CartesianReport {
    mode: &'static str,
    parameters: Parameters,
    tol: f64,
    coupling: LineCoupling,
    gml: GmlSummary,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    mode: &'static str,
    parameters: Parameters,
    oracle: OracleSummary,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    mode: &'static str,
    parameters: Parameters,
    coupling: LineCoupling,
    gml: GmlSummary,
    oracle: OracleSummary,
    #[serde(flatten)]
    difference: FieldComparison,
}

fn gml_line(s: &GmlSummary) -> String {
    format!(
        "iterations={} update={:.3e} residual={:.3e} center={:.6}",
        s.outer_iterations, s.anchor_update_norm, s.residual_sup, s.center_value
    )
}

fn not_converged(report: &SolveReport, summary: String) -> RunError {
    RunError {
        code: EXIT_SOLVER,
        message: format!(
            "no convergence after {} outer iterations (last update {:.3e})",
            report.outer_iterations, report.anchor_update_norm
        ),
        summary: Some(summary),
    }
}

fn run_cartesian(args: &SolveArgs) -> RunResult<String> {
    let (spec, grid) = cartesian_setup(args)?;
    let opts = proximal_options(args);
    let report = gml_core::proximal_iterate(&spec, &grid, &opts)?;
    let gml = GmlSummary::new(&report);
    let summary = format!("cartesian {}", gml_line(&gml));
    write_field(args, &grid, &report.solution)?;
    if let Some(path) = &args.out_report {
        let out = CartesianReport {
            mode: "cartesian",
            parameters: Parameters::new(args, &spec, &grid),
            tol: opts.tol,
            coupling: opts.coupling,
            gml,
        };
        write_json(path, &out)?;
    }
    if opts.fixed_iters.is_none() && !report.converged {
        return Err(not_converged(&report, summary));
    }
    Ok(summary)
}

fn run_oracle(args: &SolveArgs) -> RunResult<String> {
    let (spec, grid) = cartesian_setup(args)?;
    let opts = NewtonOptions {
        tol: args.tol.unwrap_or(NewtonOptions::default().tol),
        ..NewtonOptions::default()
    };
    let outcome = newton_solve(&spec, &grid, &opts)?;
    let oracle = OracleSummary::new(&outcome);
    write_field(args, &grid, &outcome.field)?;
    let summary = format!(
        "oracle iterations={} residual={:.3e} center={:.6}",
        oracle.newton_iterations, oracle.residual_sup, oracle.center_value
    );
    if let Some(path) = &args.out_report {
        let out = OracleReport {
            mode: "oracle",
            parameters: Parameters::new(args, &spec, &grid),
            oracle,
        };
        write_json(path, &out)?;
    }
    Ok(summary)
}

fn run_compare(args: &SolveArgs) -> RunResult<String> {
    let (spec, grid) = cartesian_setup(args)?;
    let opts = proximal_options(args);
    let report = gml_core::proximal_iterate(&spec, &grid, &opts)?;
    let outcome = newton_solve(&spec, &grid, &NewtonOptions::default())?;
    let difference = compare_fields(&report.solution, &outcome.field, &grid)?;
    let gml = GmlSummary::new(&report);
    let summary = format!(
        "compare {} sup_diff={:.3e} l2_diff={:.3e}",
        gml_line(&gml),
        difference.sup_diff,
        difference.l2_diff
    );
    write_field(args, &grid, &report.solution)?;
    if let Some(path) = &args.out_report {
        let out = CompareReport {
            mode: "compare",
            parameters: Parameters::new(args, &spec, &grid),
            coupling: opts.coupling,
            gml,
            oracle: OracleSummary::new(&outcome),
            difference,
        };
        write_json(path, &out)?;
    }
    if opts.fixed_iters.is_none() && !report.converged {
        return Err(not_converged(&report, summary));
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct PolarDocument<'a> {
    config: &'a PolarSymbolicConfig,
    iterations: usize,
    last_change: f64,
    lines: Vec<LineJson>,
}

#[derive(Debug, Serialize)]
struct PolarReport<'a> {
    mode: &'static str,
    config: &'a PolarSymbolicConfig,
    iterations: usize,
    last_change: f64,
    /// Constant term of every tenth line.
    constants: Vec<(usize, f64)>,
    m_theta: usize,
    /// Symbolic lines at `uf = 0` against the numeric polar solve.
    cross_check_sup_diff: f64,
}

fn run_polar(args: &SolveArgs) -> RunResult<String> {
    let source = match parse_source(&args.f)? {
        Source::Constant(v) => v,
        Source::Function(_) => {
            return Err(RunError::usage(
                "polar-symbolic mode needs a constant source",
            ))
        }
    };
    let cfg = PolarSymbolicConfig {
        n_lines: args.n,
        prox_weight: args.k.unwrap_or(10.0),
        alpha: args.alpha,
        beta: args.beta,
        source,
        iters: args.iters.unwrap_or(149),
        ..PolarSymbolicConfig::reference(args.eps)
    };
    let sol = symbolic_solve(&cfg)?;
    let step = (cfg.n_lines / 10).max(1);
    let constants: Vec<(usize, f64)> = (step..cfg.n_lines)
        .step_by(step)
        .map(|n| (n, sol.line(n).constant_term()))
        .collect();
    let shown: Vec<String> = constants
        .iter()
        .map(|(n, v)| format!("u{n}={v:.5}"))
        .collect();
    let summary = format!(
        "polar-symbolic iterations={} change={:.3e} {}",
        sol.iterations,
        sol.last_change,
        shown.join(" ")
    );
    if let Some(path) = &args.out_expr {
        let doc = PolarDocument {
            config: &cfg,
            iterations: sol.iterations,
            last_change: sol.last_change,
            lines: sol.to_json_lines(&cfg),
        };
        write_json(path, &doc)?;
    }
    if let Some(path) = &args.out_report {
        let boundary = BoundarySamples::constant(args.m_theta, cfg.domain.theta_period, 0.0);
        let (check, _) = cross_check_numeric(&cfg, &sol.lines, &boundary)?;
        let out = PolarReport {
            mode: "polar-symbolic",
            config: &cfg,
            iterations: sol.iterations,
            last_change: sol.last_change,
            constants,
            m_theta: args.m_theta,
            cross_check_sup_diff: check.sup_diff,
        };
        write_json(path, &out)?;
    }
    Ok(summary)
}
