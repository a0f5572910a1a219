//! `nonlocal-feller` — command-line laboratory for elliptic problems with
//! nonlocal boundary conditions on cornered plane domains.
//!
//! Subcommands mirror the library pipeline: `validate` a domain spec,
//! inspect corner `spectrum` and eigenvalue-free `strips`, build the grid
//! `barrier`, `solve` the resolvent problem, run the backward-Euler
//! `evolve` loop, audit the whole `verify-feller` checklist, `simulate`
//! diffusion paths, and `cross-validate` the field solver against the
//! path sampler.
//!
//! Exit codes: 0 when the command succeeds and every verification passes;
//! 2 when the command ran but a verification criterion failed (the written
//! report documents the failure); 1 on usage or spec errors.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got '{s}'"))?;
    let x: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad number '{}'", a.trim()))?;
    let y: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad number '{}'", b.trim()))?;
    Ok((x, y))
}

#[derive(Parser)]
#[command(
    name = "nonlocal-feller",
    version,
    about = "Numerical laboratory for nonlocal Feller boundary problems on cornered domains"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a domain spec file against every admissibility condition.
    Validate {
        /// Domain spec file (JSON).
        spec: PathBuf,
        /// Output directory for the report and manifest.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Locate the corner-pencil eigenvalues of one orbit inside a window.
    Spectrum {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Corner orbit index.
        #[arg(long, default_value_t = 0)]
        orbit: usize,
        /// Imaginary-part window "a,b" of the search rectangle.
        #[arg(long, value_parser = parse_pair, default_value = "-5,-0.001", allow_hyphen_values = true)]
        strip: (f64, f64),
        /// Real-part half-width R: the window spans [-R, R].
        #[arg(long = "re-window", default_value_t = 20.0)]
        re_window: f64,
        /// Maximum acceptable relative determinant residual per eigenvalue.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Certify an eigenvalue-free strip below the real axis for one orbit.
    Strips {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        orbit: usize,
    },
    /// Build the positive grid barrier and report its constants.
    Barrier {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Barrier parameter q1 > 0.
        #[arg(long, default_value_t = 1.0)]
        q1: f64,
        /// Grid step.
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
    },
    /// Solve the resolvent problem q*u - P*u = f with nonlocal boundary data.
    Solve {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Resolvent parameter q > 0.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
        /// Interior source: builtin (e.g. "const:1", "sinpi:1,1",
        /// "linear:a,b,c", "gaussian:x0,y0,s") or "csv:path".
        #[arg(long, default_value = "const:1")]
        f: String,
        /// Boundary data in the same builtin/file syntax.
        #[arg(long, default_value = "const:0")]
        psi: String,
    },
    /// Run the backward-Euler semigroup evolution and log its norms.
    Evolve {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Initial state (builtin or "csv:path"); projected onto the
        /// boundary-compatible space before stepping.
        #[arg(long, default_value = "const:1")]
        u0: String,
        /// Time horizon.
        #[arg(long = "T", default_value_t = 1.0)]
        t_final: f64,
        /// Number of backward-Euler steps.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
    },
    /// Run the full Feller checklist: contraction, positivity, density,
    /// and a monitored evolution.
    VerifyFeller {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
        /// Comma-separated resolvent parameters to audit.
        #[arg(long = "q-grid", value_delimiter = ',', default_value = "1,10,100")]
        q_grid: Vec<f64>,
        /// Random right-hand sides per q.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Estimate the resolvent at one point by sampling diffusion paths.
    Simulate {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Start point "x,y" (must be interior).
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        x0: (f64, f64),
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value = "const:1")]
        f: String,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// Euler-Maruyama time step.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare the field solver and the path sampler at interior points.
    CrossValidate {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value = "const:1")]
        f: String,
        /// Semicolon-separated points "x1,y1;x2,y2;..."; defaults to a
        /// small interior stencil.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
        #[arg(long, default_value_t = 20_000)]
        paths: usize,
        #[arg(long, default_value_t = 2e-4)]
        dt: f64,
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn configure_threads() {
    if let Ok(s) = std::env::var("NONLOCAL_FELLER_THREADS")
        && let Ok(n) = s.trim().parse::<usize>()
        && n > 0
    {
        // Ignore the error when a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() {
    configure_threads();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };

    let (is_validate, result) = match cli.cmd {
        Cmd::Validate { spec, out } => (true, commands::cmd_validate(argv, spec, out)),
        Cmd::Spectrum {
            spec,
            out,
            orbit,
            strip,
            re_window,
            tol,
        } => (
            false,
            commands::cmd_spectrum(argv, spec, out, orbit, strip, re_window, tol),
        ),
        Cmd::Strips { spec, out, orbit } => (false, commands::cmd_strips(argv, spec, out, orbit)),
        Cmd::Barrier { spec, out, q1, h } => (false, commands::cmd_barrier(argv, spec, out, q1, h)),
        Cmd::Solve {
            spec,
            out,
            q,
            h,
            f,
            psi,
        } => (false, commands::cmd_solve(argv, spec, out, q, h, f, psi)),
        Cmd::Evolve {
            spec,
            out,
            u0,
            t_final,
            steps,
            h,
        } => (
            false,
            commands::cmd_evolve(argv, spec, out, u0, t_final, steps, h),
        ),
        Cmd::VerifyFeller {
            spec,
            out,
            h,
            q_grid,
            trials,
            seed,
        } => (
            false,
            commands::cmd_verify_feller(argv, spec, out, h, q_grid, trials, seed),
        ),
        Cmd::Simulate {
            spec,
            out,
            x0,
            q,
            f,
            paths,
            dt,
            seed,
        } => (
            false,
            commands::cmd_simulate(argv, spec, out, x0, q, f, paths, dt, seed),
        ),
        Cmd::CrossValidate {
            spec,
            out,
            q,
            f,
            points,
            paths,
            dt,
            h,
            seed,
        } => (
            false,
            commands::cmd_cross_validate(argv, spec, out, q, f, points, paths, dt, h, seed),
        ),
    };

    let code = match result {
        Ok(true) => 0,
        // A failed validation is a spec error; other failed verifications
        // are reported with the dedicated code.
        Ok(false) => {
            if is_validate {
                1
            } else {
                2
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}
