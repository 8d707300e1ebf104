//! Command-line driver: run one solver or the whole catalog on a system
//! read from files, print a comparison table, and export histories.
//!
//! Exit codes: `0` when every executed method converged (methods skipped by
//! a capability gate do not count), `2` for unusable input — bad flags,
//! unreadable or malformed files, inconsistent parameters — and `1`
//! otherwise.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use ckrylov::io::{self, HistoryReport, RhsMode};
use ckrylov::{
    solve, Complex64, CountingOperator, CsrMatrix, Ilu0, Jacobi, LinearOperator, MethodId,
    Preconditioner, SolverConfig, SolverStatus, SystemRef,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PrecondKind {
    None,
    Jacobi,
    Ilu0,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Csv,
    Json,
}

/// Iterative solvers for complex linear systems `A x = y`.
#[derive(Parser, Debug)]
#[command(name = "ckrylov", version, about)]
struct Cli {
    /// Matrix Market coordinate file holding the square system matrix.
    #[arg(long, value_name = "FILE")]
    matrix: PathBuf,

    /// Right-hand side file, one "re im" pair per line.
    #[arg(long, value_name = "FILE", conflicts_with = "rhs_ones")]
    rhs: Option<PathBuf>,

    /// Use y = A * ones, making the exact solution the all-ones vector.
    #[arg(long)]
    rhs_ones: bool,

    /// Method name, or "all" to run every applicable method.
    #[arg(long, default_value = "all")]
    method: String,

    /// Relative residual tolerance, in (0, 1).
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Iteration budget. Defaults to 10 * n.
    #[arg(long)]
    maxit: Option<usize>,

    /// GMRES restart length (only with --method gmres or all).
    #[arg(long)]
    restart: Option<usize>,

    /// BiCGstab(ell) polynomial degree (only with --method bicgstabl or all).
    #[arg(long)]
    ell: Option<usize>,

    /// GPBiCG stabilized steps per mixing cycle (only with gpbicg or all).
    #[arg(long)]
    gpm: Option<usize>,

    /// GPBiCG hybrid steps per mixing cycle (only with gpbicg or all).
    #[arg(long)]
    gpn: Option<usize>,

    /// Preconditioner built from the matrix entries.
    #[arg(long, value_enum, default_value_t = PrecondKind::None)]
    precond: PrecondKind,

    /// Seed for the generated right-hand side when neither --rhs nor
    /// --rhs-ones is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Export the residual history here; in "all" mode the method name is
    /// inserted before the file extension.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Format for --out exports.
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    format: ExportFormat,
}

/// Method selection after validation.
enum Selection {
    All,
    One(MethodId),
}

/// One printed table row.
struct Row {
    method: MethodId,
    executed: bool,
    status: String,
    iters: String,
    matvecs: String,
    rel_resid: String,
    ms: String,
    note: String,
    converged: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let selection = if cli.method.eq_ignore_ascii_case("all") {
        Selection::All
    } else {
        Selection::One(cli.method.parse().map_err(|e| format!("{e}"))?)
    };

    check_parameter_consistency(&cli, &selection)?;
    if !(cli.tol > 0.0 && cli.tol < 1.0) {
        return Err(format!("--tol must lie in (0, 1), got {}", cli.tol));
    }
    if cli.maxit == Some(0) {
        return Err("--maxit must be at least 1".into());
    }

    let loaded = io::read_matrix_market_path::<f64>(&cli.matrix)
        .map_err(|e| format!("reading {}: {e}", cli.matrix.display()))?;
    let mut matrix = loaded.matrix;
    // A `general` header does not preclude a symmetric matrix; detect and
    // record symmetry so the symmetric-only methods become available.
    if !matrix.declared_symmetric() && matrix.is_complex_symmetric(1e-14) {
        matrix = matrix.into_symmetric(1e-14).expect("symmetry just verified");
    }
    let n = matrix.rows();

    let y: Vec<Complex64> = match (&cli.rhs, cli.rhs_ones) {
        (Some(path), _) => {
            let v = io::read_rhs_path::<f64>(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            if v.len() != n {
                return Err(format!(
                    "right-hand side has {} entries, matrix dimension is {n}",
                    v.len()
                ));
            }
            v
        }
        (None, true) => io::generate_rhs(&matrix, RhsMode::SolutionOfOnes),
        (None, false) => io::generate_rhs(&matrix, RhsMode::Seeded(cli.seed)),
    };

    let jacobi;
    let ilu;
    let precond: Option<&dyn Preconditioner<f64>> = match cli.precond {
        PrecondKind::None => None,
        PrecondKind::Jacobi => {
            jacobi = Jacobi::from_csr(&matrix).map_err(|e| format!("building jacobi: {e}"))?;
            Some(&jacobi)
        }
        PrecondKind::Ilu0 => {
            ilu = Ilu0::new(&matrix).map_err(|e| format!("building ilu0: {e}"))?;
            Some(&ilu)
        }
    };

    let mut cfg = SolverConfig::<f64>::with_tolerance(cli.tol, cli.maxit.unwrap_or(10 * n));
    if let Some(m) = cli.restart {
        cfg.restart_m = m;
    }
    if let Some(l) = cli.ell {
        cfg.ell = l;
    }
    if let Some(m) = cli.gpm {
        cfg.gp_m = m;
    }
    if let Some(nn) = cli.gpn {
        cfg.gp_n = nn;
    }
    cfg.validate().map_err(|e| format!("configuration: {e}"))?;

    let methods: Vec<MethodId> = match selection {
        Selection::All => MethodId::ALL.to_vec(),
        Selection::One(m) => vec![m],
    };
    let all_mode = matches!(selection, Selection::All);

    let mut rows = Vec::with_capacity(methods.len());
    for method in methods {
        if all_mode {
            if let Some(reason) = skip_reason(method, &matrix, precond.is_some()) {
                rows.push(Row {
                    method,
                    executed: false,
                    status: "SKIPPED".into(),
                    iters: "-".into(),
                    matvecs: "-".into(),
                    rel_resid: "-".into(),
                    ms: "-".into(),
                    note: reason,
                    converged: false,
                });
                continue;
            }
        }
        let row = run_method(method, &matrix, &y, precond, &cfg, &cli)?;
        rows.push(row);
    }

    print_table(&rows);

    let all_converged = rows.iter().filter(|r| r.executed).all(|r| r.converged);
    Ok(if all_converged { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Reject parameter combinations that cannot take effect.
fn check_parameter_consistency(cli: &Cli, selection: &Selection) -> Result<(), String> {
    let one = match selection {
        Selection::All => return Ok(()),
        Selection::One(m) => *m,
    };
    if cli.restart.is_some() && one != MethodId::Gmres {
        return Err(format!("--restart only applies to gmres, not {one}"));
    }
    if cli.ell.is_some() && one != MethodId::BiCgStabL {
        return Err(format!("--ell only applies to bicgstabl, not {one}"));
    }
    if (cli.gpm.is_some() || cli.gpn.is_some()) && one != MethodId::GpBiCg {
        return Err(format!("--gpm/--gpn only apply to gpbicg, not {one}"));
    }
    if cli.precond != PrecondKind::None && one.precond_side().is_none() {
        return Err(format!("{one} does not accept a preconditioner"));
    }
    Ok(())
}

/// Why a method cannot run on this input (in "all" mode).
fn skip_reason(method: MethodId, matrix: &CsrMatrix<f64>, has_precond: bool) -> Option<String> {
    if method.needs_symmetric() && !matrix.declared_symmetric() {
        return Some("needs a complex-symmetric matrix".into());
    }
    if has_precond && method.precond_side().is_none() {
        return Some("does not accept a preconditioner".into());
    }
    None
}

fn run_method(
    method: MethodId,
    matrix: &CsrMatrix<f64>,
    y: &[Complex64],
    precond: Option<&dyn Preconditioner<f64>>,
    cfg: &SolverConfig<f64>,
    cli: &Cli,
) -> Result<Row, String> {
    let counting = CountingOperator::new(matrix);
    let start = Instant::now();
    let out = solve(method, SystemRef::Split(&counting, matrix), y, precond, cfg);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let matvecs = counting.counts().total();

    if let Some(base) = &cli.out {
        let path = export_path(base, method, cli.method.eq_ignore_ascii_case("all"));
        let history: Vec<(usize, f64)> = out.history.clone();
        match cli.format {
            ExportFormat::Csv => io::write_history_csv(
                std::fs::File::create(&path)
                    .map_err(|e| format!("creating {}: {e}", path.display()))?,
                &history,
            ),
            ExportFormat::Json => io::write_history_json(
                std::fs::File::create(&path)
                    .map_err(|e| format!("creating {}: {e}", path.display()))?,
                &HistoryReport {
                    method: method.name().into(),
                    status: out.status.name().into(),
                    iterations: out.iterations,
                    operator_products: matvecs,
                    relative_residual: out.true_rel_residual,
                    elapsed_ms,
                    history,
                },
            ),
        }
        .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }

    Ok(Row {
        method,
        executed: true,
        status: out.status.name().into(),
        iters: out.iterations.to_string(),
        matvecs: matvecs.to_string(),
        rel_resid: format!("{:.3e}", out.true_rel_residual),
        ms: format!("{elapsed_ms:.3}"),
        note: out.breakdown_detail.unwrap_or_default(),
        converged: out.status == SolverStatus::Converged,
    })
}

/// Where to write one method's history: the given path, or with the method
/// name spliced in before the extension when running the whole catalog.
fn export_path(base: &Path, method: MethodId, all_mode: bool) -> PathBuf {
    if !all_mode {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("history");
    let name = match base.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.{}.{ext}", method.name()),
        None => format!("{stem}.{}", method.name()),
    };
    base.with_file_name(name)
}

/// Fixed-order, fixed-width table; the wall-time column is last so that
/// everything before it is deterministic for a given input and seed.
fn print_table(rows: &[Row]) {
    println!(
        "{:<10} {:<17} {:>6} {:>8} {:>12} {:>10}  {}",
        "method", "status", "iters", "matvecs", "rel_resid", "ms", "note"
    );
    for r in rows {
        println!(
            "{:<10} {:<17} {:>6} {:>8} {:>12} {:>10}  {}",
            r.method.name(),
            r.status,
            r.iters,
            r.matvecs,
            r.rel_resid,
            r.ms,
            r.note
        );
    }
}
