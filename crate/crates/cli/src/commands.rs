//! Implementations of the subcommands.
//!
//! Every command follows the same shape: load and validate the spec file,
//! derive the manifest id from the semantic inputs, write the reports (each
//! stamped with that id), then write the manifest.  The returned flag tells
//! the dispatcher whether all verification criteria held: `Ok(true)` exits
//! 0, `Ok(false)` exits 2 with the failure documented in the written
//! report, and `Err` exits 1 for usage or spec problems.

use crate::manifest::{Outputs, manifest_id, sha256_hex};
use nonlocal_feller::barrier::{BarrierError, build_barrier};
use nonlocal_feller::fdsolver::{
    BoundaryData, Grid, GridField, assemble, build_grid, solve_resolvent, verify_bounds,
};
use nonlocal_feller::fields::ScalarField;
use nonlocal_feller::geometry::specfile::parse_spec;
use nonlocal_feller::geometry::{
    Domain, Point, ValidationReport, compute_orbits, localize, validate_spec,
};
use nonlocal_feller::montecarlo::{PathConfig, cross_validate, estimate_resolvent};
use nonlocal_feller::pencil::{PencilError, PencilSystem, Rect, certify_strips, find_eigenvalues};
use nonlocal_feller::semigroup::{SemigroupError, evolve, hille_iosida_checklist, project_to_cb};
use serde_json::{Value, json};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct SpecContext {
    pub domain: Domain,
    pub validation: ValidationReport,
    pub spec_path: String,
    pub spec_sha256: String,
}

pub fn load_context(path: &Path) -> Result<SpecContext, String> {
    let bytes =
        fs::read(path).map_err(|e| format!("cannot read spec file {}: {e}", path.display()))?;
    let sha = sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|e| format!("spec file {} is not UTF-8: {e}", path.display()))?;
    let spec = parse_spec(&text).map_err(|e| format!("spec file {}: {e}", path.display()))?;
    let (domain, validation) =
        validate_spec(spec).map_err(|e| format!("spec file {}: {e}", path.display()))?;
    Ok(SpecContext {
        domain,
        validation,
        spec_path: path.display().to_string(),
        spec_sha256: sha,
    })
}

/// Shared per-run bookkeeping: spec loading, admissibility gating, manifest
/// id derivation, and manifest emission around the command body.
pub struct Driver {
    pub command: &'static str,
    pub spec: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub parameters: Value,
    /// Commands other than `validate` refuse inadmissible specs outright.
    pub require_admissible: bool,
}

impl Driver {
    pub fn execute<F>(self, argv: Vec<String>, body: F) -> Result<bool, String>
    where
        F: FnOnce(&SpecContext, &mut Outputs) -> Result<bool, String>,
    {
        let t0 = Instant::now();
        let ctx = load_context(&self.spec)?;
        if self.require_admissible
            && let Some(fail) = ctx.validation.checks.iter().find(|c| !c.passed)
        {
            return Err(format!(
                "spec {} fails admissibility condition '{}': {}",
                ctx.spec_path, fail.id, fail.detail
            ));
        }
        let id = manifest_id(
            self.command,
            TOOL_VERSION,
            &ctx.spec_sha256,
            self.seed,
            &self.parameters,
        );
        let mut outs = Outputs::new(&self.out, id)?;
        let passed = body(&ctx, &mut outs)?;
        let wall = t0.elapsed().as_millis() as u64;
        let manifest_path = outs.finish(
            TOOL_VERSION,
            argv,
            self.command,
            &ctx.spec_path,
            &ctx.spec_sha256,
            self.seed,
            self.parameters,
            wall,
        )?;
        println!("manifest: {}", manifest_path.display());
        Ok(passed)
    }
}

fn grid_for(domain: &Domain, h: f64) -> Result<Grid, String> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(format!("grid step h must be positive and finite, got {h}"));
    }
    build_grid(domain, h).map_err(|e| format!("grid construction failed: {e}"))
}

fn field_csv_rows<'a>(grid: &'a Grid, values: &'a [f64]) -> impl Iterator<Item = String> + use<'a> {
    grid.nodes
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{},{},{}", n.pos.x, n.pos.y, v))
}

fn orbit_system(domain: &Domain, orbit: usize) -> Result<PencilSystem, String> {
    let orbits = compute_orbits(domain);
    let chosen = orbits.get(orbit).ok_or_else(|| {
        format!(
            "orbit index {orbit} out of range: the corner set has {} orbit(s)",
            orbits.len()
        )
    })?;
    localize(domain, chosen).map_err(|e| format!("orbit {orbit} localization failed: {e}"))
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

pub fn cmd_validate(argv: Vec<String>, spec: PathBuf, out: PathBuf) -> Result<bool, String> {
    Driver {
        command: "validate",
        spec,
        out,
        seed: None,
        parameters: json!({}),
        require_admissible: false,
    }
    .execute(argv, |ctx, outs| {
        let all = ctx.validation.checks.iter().all(|c| c.passed);
        let payload = json!({
            "spec_name": ctx.domain.spec.name,
            "passed": all,
            "validation": ctx.validation,
        });
        outs.json("validation_report.json", &payload)?;
        println!("spec: {} ({})", ctx.domain.spec.name, ctx.spec_path);
        for c in &ctx.validation.checks {
            println!(
                "  [{}] {:<32} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.detail
            );
        }
        println!(
            "  ellipticity constant c0 = {:.6e}, orbits = {}, eps1 = {:.4}, eps = {:.4}",
            ctx.validation.c0, ctx.validation.orbit_count, ctx.validation.eps1, ctx.validation.eps
        );
        println!("verdict: {}", if all { "ADMISSIBLE" } else { "REJECTED" });
        Ok(all)
    })
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

pub fn cmd_spectrum(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    orbit: usize,
    strip: (f64, f64),
    re_window: f64,
    tol: f64,
) -> Result<bool, String> {
    let parameters = json!({
        "orbit": orbit,
        "strip": [strip.0, strip.1],
        "re_window": re_window,
        "tol": tol,
    });
    Driver {
        command: "spectrum",
        spec,
        out,
        seed: None,
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let sys = orbit_system(&ctx.domain, orbit)?;
        let window = Rect::new(-re_window, re_window, strip.0, strip.1);
        match find_eigenvalues(&sys, window, Some(tol)) {
            Ok(spectrum) => {
                let payload = json!({
                    "orbit": orbit,
                    "window": window,
                    "tol": tol,
                    "spectrum": spectrum,
                });
                outs.json("spectrum.json", &payload)?;
                outs.csv(
                    "eigenvalues.csv",
                    "re_lambda,im_lambda,count,residual",
                    spectrum.eigenvalues.iter().map(|e| {
                        format!(
                            "{},{},{},{}",
                            e.lambda.re, e.lambda.im, e.multiplicity, e.residual
                        )
                    }),
                )?;
                println!(
                    "orbit {orbit}: {} eigenvalue(s) in [{}, {}] x i[{}, {}]",
                    spectrum.total_count, window.re_lo, window.re_hi, window.im_lo, window.im_hi
                );
                for e in &spectrum.eigenvalues {
                    println!(
                        "  lambda = {:+.12} {:+.12}i  (count {}, residual {:.3e})",
                        e.lambda.re, e.lambda.im, e.multiplicity, e.residual
                    );
                }
                Ok(true)
            }
            Err(PencilError::NonConvergedSubdivision(msg)) => {
                let payload = json!({
                    "orbit": orbit,
                    "window": window,
                    "tol": tol,
                    "error": format!("window not certified: {msg}"),
                });
                outs.json("spectrum.json", &payload)?;
                println!("orbit {orbit}: certification FAILED: {msg}");
                Ok(false)
            }
            Err(PencilError::BoundaryZero) => Err(
                "an eigenvalue lies on the window boundary; nudge --strip or --re-window".into(),
            ),
            Err(e) => Err(format!("eigenvalue search failed: {e}")),
        }
    })
}

// ---------------------------------------------------------------------------
// strips
// ---------------------------------------------------------------------------

pub fn cmd_strips(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    orbit: usize,
) -> Result<bool, String> {
    let parameters = json!({ "orbit": orbit });
    Driver {
        command: "strips",
        spec,
        out,
        seed: None,
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let sys = orbit_system(&ctx.domain, orbit)?;
        let report = certify_strips(&sys).map_err(|e| format!("strip certification: {e}"))?;
        let payload = json!({ "orbit": orbit, "strip_report": report });
        outs.json("strips.json", &payload)?;
        println!(
            "orbit {orbit}: eigenvalue-free strip delta1 = {:.6}, working delta = {:.6}",
            report.delta1, report.delta
        );
        match report.leading_decay {
            Some(d) => println!("  leading corner decay exponent = {d:.6}"),
            None => println!(
                "  no eigenvalue in the reporting band{}",
                if report.capped {
                    " (search capped)"
                } else {
                    ""
                }
            ),
        }
        Ok(true)
    })
}

// ---------------------------------------------------------------------------
// barrier
// ---------------------------------------------------------------------------

pub fn cmd_barrier(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    q1: f64,
    h: f64,
) -> Result<bool, String> {
    let parameters = json!({ "q1": q1, "h": h });
    Driver {
        command: "barrier",
        spec,
        out,
        seed: None,
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let grid = grid_for(&ctx.domain, h)?;
        match build_barrier(&ctx.domain, q1, &grid) {
            Ok(b) => {
                let (pmin, pmax) = (grid.nodes[b.argmin].pos, grid.nodes[b.argmax].pos);
                let payload = json!({
                    "q1": b.q1,
                    "h": grid.h,
                    "eps": b.eps,
                    "m": b.m,
                    "c1": b.c1,
                    "argmin": [pmin.x, pmin.y],
                    "argmax": [pmax.x, pmax.y],
                    "angular_profile": b.profile,
                });
                outs.json("barrier.json", &payload)?;
                outs.csv("barrier.csv", "x,y,v", field_csv_rows(&grid, &b.v.values))?;
                println!(
                    "barrier at q1 = {q1}, h = {}: inf v = {:.6} at ({:.4}, {:.4}), sup v = c1 = {:.6}",
                    grid.h, b.m, pmin.x, pmin.y, b.c1
                );
                for (j, &(a, bb)) in b.profile.coeffs.iter().enumerate() {
                    println!(
                        "  corner {j}: phi(omega) = {a:.6} {bb:+.6}*omega on [-{0:.6}, {0:.6}]",
                        b.profile.half_openings[j]
                    );
                }
                Ok(true)
            }
            Err(
                e @ (BarrierError::PositivityFailure { .. }
                | BarrierError::NonpositiveInfimum { .. }
                | BarrierError::SingularAtZero { .. }),
            ) => {
                let payload = json!({ "q1": q1, "h": h, "error": e.to_string() });
                outs.json("barrier.json", &payload)?;
                println!("barrier certification FAILED: {e}");
                Ok(false)
            }
            Err(e) => Err(format!("barrier construction failed: {e}")),
        }
    })
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

pub fn cmd_solve(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    q: f64,
    h: f64,
    f_expr: String,
    psi_expr: String,
) -> Result<bool, String> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(format!("resolvent parameter q must be positive, got {q}"));
    }
    let f = ScalarField::parse(&f_expr).map_err(|e| format!("--f: {e}"))?;
    let psi = ScalarField::parse(&psi_expr).map_err(|e| format!("--psi: {e}"))?;
    let parameters = json!({ "q": q, "h": h, "f": f_expr, "psi": psi_expr });
    Driver {
        command: "solve",
        spec,
        out,
        seed: None,
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let grid = grid_for(&ctx.domain, h)?;
        let system = assemble(&grid, &ctx.domain.spec.coefficients, q, &ctx.domain)
            .map_err(|e| format!("assembly failed: {e}"))?;
        let fg = GridField::from_fn(&grid, |p| f.eval(p));
        let u = solve_resolvent(&system, &grid, &fg, &BoundaryData::Uniform(psi.clone()))
            .map_err(|e| format!("resolvent solve failed: {e}"))?;
        let report = verify_bounds(&grid, &system, &u, &fg, q);
        let passed = report.contraction_ok && report.positivity_ok.unwrap_or(true);
        let payload = json!({
            "q": q,
            "h": grid.h,
            "f": f_expr,
            "psi": psi_expr,
            "nodes": grid.nodes.len(),
            "report": report,
        });
        outs.json("resolvent_report.json", &payload)?;
        outs.csv("solution.csv", "x,y,u", field_csv_rows(&grid, &u.values))?;
        println!(
            "solve q = {q}, h = {}: sup|u| = {:.6e} vs bound {:.6e} -> contraction {}",
            grid.h,
            report.sup_u,
            report.bound,
            if report.contraction_ok {
                "OK"
            } else {
                "VIOLATED"
            }
        );
        match report.positivity_ok {
            Some(ok) => println!(
                "  f >= 0: min u = {:.3e} -> positivity {}",
                report.min_u,
                if ok { "OK" } else { "VIOLATED" }
            ),
            None => println!("  f changes sign: positivity not applicable"),
        }
        Ok(passed)
    })
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

pub fn cmd_evolve(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    u0_expr: String,
    t_final: f64,
    steps: usize,
    h: f64,
) -> Result<bool, String> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(format!("horizon T must be positive, got {t_final}"));
    }
    if steps == 0 {
        return Err("step count must be positive".into());
    }
    let u0_field = ScalarField::parse(&u0_expr).map_err(|e| format!("--u0: {e}"))?;
    let parameters = json!({ "u0": u0_expr, "T": t_final, "steps": steps, "h": h });
    Driver {
        command: "evolve",
        spec,
        out,
        seed: None,
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let grid = grid_for(&ctx.domain, h)?;
        let raw = GridField::from_fn(&grid, |p| u0_field.eval(p));
        let u0 = project_to_cb(&grid, &raw);
        match evolve(&ctx.domain, &grid, &u0, t_final, steps) {
            Ok(rep) => {
                let payload = json!({
                    "h": grid.h,
                    "T": rep.t_final,
                    "dt": rep.dt,
                    "steps": rep.steps,
                    "sup_norms": rep.sup_norms,
                    "mins": rep.mins,
                });
                outs.json("evolution.json", &payload)?;
                outs.csv(
                    "evolution.csv",
                    "step,t,sup_norm,min",
                    (0..=rep.steps).map(|i| {
                        format!(
                            "{},{},{},{}",
                            i,
                            i as f64 * rep.dt,
                            rep.sup_norms[i],
                            rep.mins[i]
                        )
                    }),
                )?;
                outs.csv(
                    "final_state.csv",
                    "x,y,u",
                    field_csv_rows(&grid, &rep.final_field.values),
                )?;
                println!(
                    "evolved {} step(s) of dt = {}: sup norm {:.6e} -> {:.6e}, min {:.3e} -> {:.3e}",
                    rep.steps,
                    rep.dt,
                    rep.sup_norms[0],
                    rep.sup_norms[rep.steps],
                    rep.mins[0],
                    rep.mins[rep.steps]
                );
                Ok(true)
            }
            Err(
                e @ (SemigroupError::ContractionViolation { .. }
                | SemigroupError::PositivityViolation { .. }),
            ) => {
                let payload = json!({
                    "h": h, "T": t_final, "steps": steps, "u0": u0_expr,
                    "error": e.to_string(),
                });
                outs.json("evolution.json", &payload)?;
                println!("evolution FAILED verification: {e}");
                Ok(false)
            }
            Err(e) => Err(format!("evolution failed: {e}")),
        }
    })
}

// ---------------------------------------------------------------------------
// verify-feller
// ---------------------------------------------------------------------------

pub fn cmd_verify_feller(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    h: f64,
    q_grid: Vec<f64>,
    trials: usize,
    seed: u64,
) -> Result<bool, String> {
    if q_grid.is_empty() || q_grid.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
        return Err("--q-grid needs at least one positive value".into());
    }
    if trials == 0 {
        return Err("--trials must be positive".into());
    }
    let parameters = json!({ "h": h, "q_grid": q_grid, "trials": trials });
    Driver {
        command: "verify-feller",
        spec,
        out,
        seed: Some(seed),
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let grid = grid_for(&ctx.domain, h)?;
        let report = hille_iosida_checklist(&ctx.domain, &grid, &q_grid, trials, seed)
            .map_err(|e| format!("checklist failed to run: {e}"))?;
        outs.json("feller_report.json", &report)?;
        println!(
            "Feller checklist on {} (h = {}, slack = {:.4}, {} trial(s), seed {})",
            ctx.domain.spec.name, report.h, report.slack, report.trials, report.seed
        );
        for qc in &report.qs {
            println!(
                "  q = {:<8} contraction ratio {:.6} [{}]  positivity rate {:.2} [{}]  worst min {:.2e}",
                qc.q,
                qc.contraction_ratio,
                if qc.contraction_ok { "PASS" } else { "FAIL" },
                qc.positivity_rate,
                if qc.positivity_ok { "PASS" } else { "FAIL" },
                qc.worst_min
            );
        }
        println!(
            "  density: final error {:.6e} vs bound {:.6e} [{}]",
            report.density.final_error,
            report.density.bound,
            if report.density.ok { "PASS" } else { "FAIL" }
        );
        match (&report.evolution, &report.evolution_error) {
            (Some(ev), _) => println!(
                "  evolution: {} step(s), sup {:.4} -> {:.4}, min floor {:.2e} [PASS]",
                ev.steps,
                ev.sup_norms[0],
                ev.sup_norms[ev.steps],
                ev.mins.iter().cloned().fold(f64::INFINITY, f64::min)
            ),
            (None, Some(err)) => println!("  evolution: FAILED: {err}"),
            (None, None) => println!("  evolution: not run"),
        }
        println!(
            "verdict: {}",
            if report.all_passed {
                "ALL CHECKS PASSED"
            } else {
                "CHECKS FAILED"
            }
        );
        Ok(report.all_passed)
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn cmd_simulate(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    x0: (f64, f64),
    q: f64,
    f_expr: String,
    paths: usize,
    dt: f64,
    seed: u64,
) -> Result<bool, String> {
    if paths == 0 {
        return Err("--paths must be positive".into());
    }
    let f = ScalarField::parse(&f_expr).map_err(|e| format!("--f: {e}"))?;
    let parameters = json!({
        "x0": [x0.0, x0.1], "q": q, "f": f_expr, "paths": paths, "dt": dt,
    });
    Driver {
        command: "simulate",
        spec,
        out,
        seed: Some(seed),
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let cfg = PathConfig::new(dt, q, seed);
        let start = Point::new(x0.0, x0.1);
        let est = estimate_resolvent(start, &ctx.domain, &f, q, paths, &cfg)
            .map_err(|e| format!("simulation failed: {e}"))?;
        let payload = json!({
            "x0": [x0.0, x0.1],
            "q": q,
            "f": f_expr,
            "dt": dt,
            "paths": paths,
            "estimate": est,
        });
        outs.json("simulate.json", &payload)?;
        println!(
            "resolvent estimate at ({}, {}): {:.6e} +/- {:.3e} ({} paths)",
            x0.0, x0.1, est.mean, est.stderr, est.n_paths
        );
        println!(
            "  terminations: {} killed at boundary, {} absorbed at corners, {} capped (fraction {:.2e}); mean jumps {:.3}",
            est.killed, est.absorbed, est.capped, est.cap_fraction, est.mean_jumps
        );
        Ok(true)
    })
}

// ---------------------------------------------------------------------------
// cross-validate
// ---------------------------------------------------------------------------

fn default_points(domain: &Domain) -> Vec<Point> {
    let (lo, hi) = domain.boundary.bbox;
    let margin = 0.05 * domain.boundary.diameter;
    let fracs = [0.3, 0.5, 0.7];
    let mut pts = Vec::new();
    for &fy in &fracs {
        for &fx in &fracs {
            let p = Point::new(lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y));
            if domain.boundary.is_interior(p, margin) {
                pts.push(p);
            }
        }
    }
    pts.truncate(5);
    pts
}

fn parse_points(s: &str) -> Result<Vec<Point>, String> {
    s.split(';')
        .map(|chunk| {
            let err = || format!("bad point '{chunk}': expected x,y");
            let (a, b) = chunk.split_once(',').ok_or_else(err)?;
            let x: f64 = a.trim().parse().map_err(|_| err())?;
            let y: f64 = b.trim().parse().map_err(|_| err())?;
            Ok(Point::new(x, y))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_cross_validate(
    argv: Vec<String>,
    spec: PathBuf,
    out: PathBuf,
    q: f64,
    f_expr: String,
    points_expr: Option<String>,
    paths: usize,
    dt: f64,
    h: f64,
    seed: u64,
) -> Result<bool, String> {
    if paths == 0 {
        return Err("--paths must be positive".into());
    }
    let f = ScalarField::parse(&f_expr).map_err(|e| format!("--f: {e}"))?;
    let explicit = points_expr.as_deref().map(parse_points).transpose()?;
    let parameters = json!({
        "q": q, "f": f_expr, "paths": paths, "dt": dt, "h": h,
        "points": points_expr,
    });
    Driver {
        command: "cross-validate",
        spec,
        out,
        seed: Some(seed),
        parameters,
        require_admissible: true,
    }
    .execute(argv, |ctx, outs| {
        let points = match explicit {
            Some(p) => p,
            None => default_points(&ctx.domain),
        };
        if points.is_empty() {
            return Err("no interior comparison points; pass --points x,y;x,y;...".into());
        }
        let cfg = PathConfig::new(dt, q, seed);
        let cv = cross_validate(&ctx.domain, &f, q, &points, paths, h, &cfg)
            .map_err(|e| format!("cross-validation failed: {e}"))?;
        outs.json("crossval.json", &cv)?;
        outs.csv(
            "crossval.csv",
            "x,y,u_fd,u_mc,stderr,diff,tol,pass",
            cv.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    r.x, r.y, r.u_fd, r.u_mc, r.stderr, r.diff, r.tol, r.pass
                )
            }),
        )?;
        println!(
            "cross-validation q = {q}, h = {}, dt = {}, {} path(s) per point:",
            cv.h, cv.dt, cv.n_paths
        );
        for r in &cv.rows {
            println!(
                "  ({:+.4}, {:+.4})  fd {:.6}  mc {:.6} +/- {:.1e}  |diff| {:.2e} <= {:.2e}? {}",
                r.x,
                r.y,
                r.u_fd,
                r.u_mc,
                r.stderr,
                r.diff,
                r.tol,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        println!(
            "verdict: {}",
            if cv.all_pass {
                "FIELD AND PATHS AGREE"
            } else {
                "DISAGREEMENT"
            }
        );
        Ok(cv.all_pass)
    })
}
