use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use fvx::config::RunConfig;
use fvx::grid::{Grid, Grid1D};
use fvx::equations::EquationModel;
use fvx::oracle::{exact_euler_riemann, exact_swe_dambreak, reference_field, Primitive, RiemannSolution};
use fvx::run::{prepare, run_config};
use fvx::snapshot::{compare, read_snapshot, write_snapshot, Snapshot};
use fvx::{Error, System};

/// Finite-volume solvers for shallow water and Euler flows.
///
/// FVX_THREADS caps the worker threads (0 or unset: one per core).
#[derive(Parser)]
#[command(name = "fvx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration, writing snapshots and a diagnostics CSV.
    Run {
        config: PathBuf,
        /// Output directory, overriding the one in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact Riemann solution (dambreak1d or sod1d) as CSV.
    Oracle {
        name: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        nx: usize,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 1.0)]
        x_max: f64,
        /// Initial discontinuity position.
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        /// Also write the cell averages as a snapshot.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Mean relative error of the depth (or density) of <a> against <b>.
    Compare { a: PathBuf, b: PathBuf },
    /// Time runs of a configuration over a list of x resolutions.
    Bench {
        config: PathBuf,
        /// Comma-separated cell counts along x.
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<usize>,
        /// Steps per resolution; without it each run goes to t_end.
        #[arg(long)]
        steps: Option<u64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::Io(_) | Error::Format { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("fvx: {msg}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Oracle {
            name,
            t,
            nx,
            x_min,
            x_max,
            x0,
            snapshot,
        } => cmd_oracle(&name, t, nx, (x_min, x_max), x0, snapshot.as_deref()),
        Command::Compare { a, b } => cmd_compare(&a, &b),
        Command::Bench {
            config,
            resolutions,
            steps,
        } => cmd_bench(&config, &resolutions, steps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fvx: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FVX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("FVX_THREADS must be a non-negative integer, got '{raw}'"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_run(config: &Path, out: Option<&Path>) -> fvx::Result<()> {
    let cfg = RunConfig::load(config)?;
    let summary = run_config(&cfg, out)?;
    println!(
        "{} steps to t = {}; {} snapshots, diagnostics in {}",
        summary.state.steps,
        summary.state.time,
        summary.snapshots.len(),
        summary.diagnostics.display()
    );
    Ok(())
}

fn cmd_oracle(name: &str, t: f64, nx: usize, (x_min, x_max): (f64, f64), x0: f64, snapshot: Option<&Path>) -> fvx::Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::config(format!("--t must be finite and >= 0, got {t}")));
    }
    let grid = Grid1D::new(x_min, x_max, nx)?;
    let (system, solution) = match name.to_ascii_lowercase().as_str() {
        "dambreak1d" => {
            let g = EquationModel::new(System::Swe1D).g;
            (System::Swe1D, RiemannSolution::Swe(exact_swe_dambreak(1.0, 0.35, g)?))
        }
        "sod1d" => {
            let gamma = EquationModel::new(System::Euler1D).gamma;
            let s = exact_euler_riemann(Primitive::new(1.0, 0.0, 1.0), Primitive::new(0.125, 0.0, 0.1), gamma)?;
            (System::Euler1D, RiemannSolution::Euler(s))
        }
        other => return Err(Error::config(format!("unknown oracle '{other}' (expected dambreak1d or sod1d)"))),
    };
    // At t = 0 the similarity variable degenerates to the two initial states.
    let xi_at = |x: f64| {
        if t > 0.0 {
            (x - x0) / t
        } else if x < x0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    };

    let stdout = std::io::stdout();
    let mut w = std::io::BufWriter::new(stdout.lock());
    match solution {
        RiemannSolution::Swe(_) => writeln!(w, "x,h,hu")?,
        RiemannSolution::Euler(_) => writeln!(w, "x,rho,u,p")?,
    }
    for i in 0..nx {
        let x = grid.center(i);
        let xi = xi_at(x);
        match solution {
            RiemannSolution::Swe(s) => {
                let q = s.sample(xi);
                writeln!(w, "{x:.16e},{:.16e},{:.16e}", q[0], q[1])?;
            }
            RiemannSolution::Euler(e) => {
                let p = e.sample_primitive(xi);
                writeln!(w, "{x:.16e},{:.16e},{:.16e},{:.16e}", p.rho, p.u, p.p)?;
            }
        }
    }
    w.flush()?;

    if let Some(path) = snapshot {
        let cells = if t > 0.0 {
            reference_field(&solution, &grid, t, x0)?
        } else {
            (0..nx).map(|i| solution.sample(xi_at(grid.center(i)))).collect()
        };
        let snap = Snapshot::new(system, &Grid::Line(grid), cells, t)?;
        write_snapshot(&snap, path)?;
    }
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path) -> fvx::Result<()> {
    let sa = read_snapshot(a)?;
    let sb = read_snapshot(b)?;
    println!("{:.16e}", compare(&sa, &sb)?);
    Ok(())
}

fn cmd_bench(config: &Path, resolutions: &[usize], steps: Option<u64>) -> fvx::Result<()> {
    let base = RunConfig::load(config)?;
    println!("resolution,wall_seconds,cell_updates_per_second");
    for &n in resolutions {
        if n == 0 {
            return Err(Error::config("resolutions must be positive"));
        }
        let mut cfg = base.clone();
        cfg.grid = cfg.grid.with_resolution(n);
        let ncells = cfg.grid.ncells() as f64;
        let p = prepare(&cfg)?;
        let mut cells = p.initial;
        p.solver.project(&mut cells);
        let (mut t, mut taken) = (0.0, 0u64);
        let start = Instant::now();
        while t < cfg.control.t_end && steps.map_or(true, |s| taken < s) {
            let dt = p.solver.compute_dt(&cfg.control, &cells, t)?;
            if dt <= 0.0 {
                break;
            }
            cells = p.solver.step(&cells, dt)?;
            t = if cfg.control.t_end - t <= dt { cfg.control.t_end } else { t + dt };
            taken += 1;
        }
        let secs = start.elapsed().as_secs_f64();
        let rate = if secs > 0.0 { ncells * taken as f64 / secs } else { 0.0 };
        println!("{n},{secs:.6e},{rate:.6e}");
    }
    Ok(())
}
