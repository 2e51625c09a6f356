//! End-to-end experiment orchestration: solve, verify, decay, report and
//! sweep, each writing machine-readable artifacts into one directory per
//! run.

use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::coefficients::{check_assumptions, AssumptionReport, CoefficientSet};
use crate::config::ExperimentConfig;
use crate::decay::{decay_fit, lorentz_norm, DecayReport, LorentzNorm};
use crate::error::{EdlError, Result};
use crate::grid::{Grid, ScalarField};
use crate::levelset::{auto_levels, build_family, default_grad_floor, g_of_t, LevelSetFamily};
use crate::report::{
    write_curves_csv, write_json, write_manifest, write_solution_csv, write_table_csv,
};
use crate::solver::{
    assemble, maximum_principle_check, solve, ConvergenceLog, MaxPrincipleReport,
};
use crate::verify::{
    coarea_check, cutoff_identity_check, geometric_bound_check, gradient_flux_bound,
    key_lemma_check, mean_value_tau, CoareaWeight, VerificationRecord,
};

/// Solved field with its coefficient family and iteration record.
pub struct SolveOutput {
    pub field: ScalarField,
    pub coeffs: CoefficientSet,
    pub log: ConvergenceLog,
}

/// Solve the configured problem. All-zero boundary data short-circuits to
/// the zero field without touching the Krylov solver.
pub fn solve_config(cfg: &ExperimentConfig) -> Result<SolveOutput> {
    let coeffs = cfg.coefficients()?;
    let bdata = cfg.boundary_data()?;
    if bdata.inner_values.iter().all(|v| *v == 0.0) {
        let grid = Grid::build(cfg.domain)?;
        return Ok(SolveOutput {
            field: ScalarField::constant(grid, 0.0),
            coeffs,
            log: ConvergenceLog {
                iterations: 0,
                residuals: vec![0.0],
                final_residual: 0.0,
            },
        });
    }
    let op = assemble(&coeffs, &cfg.domain, bdata)?;
    let (field, log) = solve(&op, cfg.solver.tol, cfg.solver.max_iter)?;
    info!(
        "solved {} on {}x{} grid: {} iterations, residual {:.3e}",
        coeffs.name, cfg.domain.n_radial, cfg.domain.n_angular, log.iterations, log.final_residual
    );
    Ok(SolveOutput { field, coeffs, log })
}

/// Solve and export solution.csv plus the convergence log and manifest.
pub fn run_solve(cfg: &ExperimentConfig, out: &Path, config_text: &str) -> Result<Vec<PathBuf>> {
    let solved = solve_config(cfg)?;
    let mut files = Vec::new();
    files.push(write_solution_csv(&out.join("solution.csv"), &solved.field)?);
    files.push(write_json(&out.join("convergence.json"), &solved.log)?);
    write_manifest(out, config_text, &files)?;
    Ok(files)
}

/// Aggregated verification verdicts for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySummary {
    pub family: String,
    pub assumptions: AssumptionReport,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    pub max_principle: MaxPrincipleReport,
    pub t_star: f64,
    pub n_levels: usize,
    pub n_tilde_regular: usize,
    /// Regular levels whose extracted topology breaks the unique-enclosure
    /// statement.
    pub topology_violations: usize,
    pub topology_pass: bool,
    pub records: Vec<VerificationRecord>,
    pub all_pass: bool,
}

fn sample_levels(cfg: &ExperimentConfig, u: &ScalarField) -> Result<LevelSetFamily> {
    let floor = match cfg.verification.grad_floor {
        Some(f) => f,
        None => default_grad_floor(u)?,
    };
    // densify the ladder if too few levels survive the tilde-regularity
    // filter: the flux-bound check needs at least 10
    let mut family = None;
    for mult in [1usize, 2, 3] {
        let levels = auto_levels(u, cfg.verification.n_levels * mult)?;
        let fam = build_family(u, &levels, floor)?;
        let n_tilde = fam.levels.iter().filter(|e| e.tilde_regular).count();
        family = Some(fam);
        if n_tilde >= 10 {
            break;
        }
    }
    Ok(family.unwrap())
}

/// Run the full verification suite. With `force` the pipeline continues past
/// failing assumption checks; otherwise it stops there.
pub fn run_verify(
    cfg: &ExperimentConfig,
    out: &Path,
    force: bool,
    config_text: &str,
) -> Result<VerifySummary> {
    let coeffs = cfg.coefficients()?;
    let assumptions = check_assumptions(&coeffs, &cfg.domain, cfg.seed)?;
    if !assumptions.all_pass && !force {
        let mut files = Vec::new();
        files.push(write_json(&out.join("verify.json"), &assumptions)?);
        write_manifest(out, config_text, &files)?;
        let failing: Vec<&str> = [
            (!assumptions.c1_pass, "C1"),
            (!assumptions.c2_pass, "C2"),
            (!assumptions.c3_pass, "C3"),
            (!assumptions.c4_pass, "C4"),
        ]
        .iter()
        .filter(|(f, _)| *f)
        .map(|(_, n)| *n)
        .collect();
        return Err(EdlError::CheckFailure(format!(
            "assumption check(s) {} failed for family {}; rerun with --force to continue",
            failing.join(", "),
            coeffs.name
        )));
    }

    let solved = solve_config(cfg)?;
    let u = &solved.field;
    let max_principle = maximum_principle_check(u);
    let family = sample_levels(cfg, u)?;

    let mut topology_violations = 0;
    let mut checked = 0;
    for entry in &family.levels {
        if entry.regular {
            checked += 1;
            if !entry.classification.verdict {
                topology_violations += 1;
            }
        }
    }
    let topology_pass = checked > 0 && topology_violations == 0;

    let mut records: Vec<VerificationRecord> = Vec::new();

    // six-term identity at the requested (or largest sampled) level
    let t_id = cfg
        .verification
        .identity_t
        .unwrap_or_else(|| family.levels.last().map(|e| e.t).unwrap_or(0.0));
    let rho = cfg
        .verification
        .identity_rho
        .unwrap_or(cfg.domain.truncation_radius / 4.0);
    records.push(cutoff_identity_check(u, &solved.coeffs, t_id, rho)?);

    let flux = gradient_flux_bound(u, &family)?;
    let c_star = flux.constant;
    records.push(flux);

    let t_co = cfg.verification.coarea_t.unwrap_or(t_id);
    records.push(coarea_check(u, t_co, CoareaWeight::One)?);
    records.push(coarea_check(u, t_co, CoareaWeight::Grad)?);
    let (_, mv) = mean_value_tau(u, t_co, cfg.analysis.p, c_star)?;
    records.push(mv);

    // planar length bound at every tilde-regular level, gamma(t) nested in
    // gamma(t/2), with one grid cell of slack
    for entry in &family.levels {
        if !entry.tilde_regular {
            continue;
        }
        let (Some(gamma), Some(gamma_half)) = (entry.gamma(), entry.gamma_half.as_ref()) else {
            continue;
        };
        let g = g_of_t(gamma);
        let grid = &u.grid;
        let slack = grid.radial_width(grid.ring_below(g)) + g * grid.spec.delta_theta();
        let mut rec = geometric_bound_check(gamma, gamma_half, slack)?;
        rec.inputs.insert("t".into(), entry.t);
        records.push(rec);
    }

    records.push(key_lemma_check(u, &family, cfg.analysis.p)?);

    let checks_pass = records
        .iter()
        .filter(|r| !r.details.contains_key("inconclusive"))
        .all(|r| r.verdict);
    let all_pass =
        assumptions.all_pass && max_principle.verdict && topology_pass && checks_pass;

    let summary = VerifySummary {
        family: coeffs.name.clone(),
        assumptions,
        solver_iterations: solved.log.iterations,
        solver_residual: solved.log.final_residual,
        max_principle,
        t_star: family.t_star,
        n_levels: family.levels.len(),
        n_tilde_regular: family.levels.iter().filter(|e| e.tilde_regular).count(),
        topology_violations,
        topology_pass,
        records,
        all_pass,
    };

    let mut files = Vec::new();
    files.push(write_json(&out.join("verify.json"), &summary)?);
    files.push(write_curves_csv(&out.join("curves.csv"), &family)?);
    write_manifest(out, config_text, &files)?;
    Ok(summary)
}

/// One finite-q Lorentz norm with its intra-run divergence flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteLorentz {
    pub q: f64,
    pub value: f64,
    /// True iff the level-ladder partial sums keep growing at an undiminished
    /// rate down to the smallest resolved level (the truncated norm is not
    /// settling).
    pub divergence_trend: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySummary {
    pub p: f64,
    pub weak_norm: Option<LorentzNorm>,
    pub finite_norms: Vec<FiniteLorentz>,
    pub decay: Option<DecayReport>,
    /// Set when the fitted exponent is too small to call decay inside the
    /// window (e.g. a near-logarithmic truncation profile).
    pub no_decay_in_window: bool,
}

fn divergence_trend(norm: &LorentzNorm, q: f64, t_floor: f64) -> bool {
    // partial sums of the defining integral over the geometric ladder,
    // compared over the first and last thirds of the descent; levels below
    // the truncation scale t_floor are excluded because the super-level set
    // has saturated the finite domain there
    let prof: Vec<(f64, f64)> = norm
        .tail_profile
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t_floor)
        .collect();
    if prof.len() < 6 {
        return false;
    }
    let mut increments = Vec::new();
    for w in prof.windows(2) {
        let f0 = w[0].1.powf(q);
        let f1 = w[1].1.powf(q);
        increments.push(0.5 * (f0 + f1) * (w[0].0 / w[1].0).ln());
    }
    let third = increments.len() / 3;
    let head: f64 = increments[..third].iter().sum();
    let tail: f64 = increments[increments.len() - third..].iter().sum();
    head > 0.0 && tail >= 0.8 * head
}

/// Lorentz norms and the decay fit, with plot-ready CSV exports.
pub fn run_decay(cfg: &ExperimentConfig, out: &Path, config_text: &str) -> Result<DecaySummary> {
    let solved = solve_config(cfg)?;
    let u = &solved.field;
    let p = cfg.analysis.p;
    let target = 2.0 / p;

    let summary = if u.max_value() == 0.0 {
        DecaySummary {
            p,
            weak_norm: None,
            finite_norms: cfg
                .analysis
                .q
                .iter()
                .map(|&q| FiniteLorentz {
                    q,
                    value: 0.0,
                    divergence_trend: false,
                })
                .collect(),
            decay: None,
            no_decay_in_window: false,
        }
    } else {
        let weak = lorentz_norm(u, p, None)?;
        // level at which the outer truncation starts dominating the
        // distribution function
        let ring = u.grid.ring_below(0.9 * cfg.domain.truncation_radius);
        let t_floor = (0..cfg.domain.n_angular)
            .map(|it| u.get(ring, it))
            .fold(0.0f64, f64::max);
        let mut finite = Vec::new();
        for &q in &cfg.analysis.q {
            let n = lorentz_norm(u, p, Some(q))?;
            finite.push(FiniteLorentz {
                q,
                value: n.value,
                divergence_trend: divergence_trend(&n, q, t_floor),
            });
        }
        let decay = decay_fit(u, target)?;
        let no_decay = decay.exponent < 0.1;
        DecaySummary {
            p,
            weak_norm: Some(weak),
            finite_norms: finite,
            decay: Some(decay),
            no_decay_in_window: no_decay,
        }
    };

    let mut files = Vec::new();
    files.push(write_json(&out.join("decay.json"), &summary)?);
    if let Some(weak) = &summary.weak_norm {
        let rows: Vec<Vec<f64>> = weak.tail_profile.iter().map(|(t, v)| vec![*t, *v]).collect();
        files.push(write_table_csv(
            &out.join("lorentz_tail.csv"),
            "t,t_mu_1p",
            &rows,
        )?);
    }
    if let Some(decay) = &summary.decay {
        let rows: Vec<Vec<f64>> = decay
            .prefactors
            .iter()
            .map(|(r, c)| vec![*r, c / r.powf(target), *c])
            .collect();
        files.push(write_table_csv(
            &out.join("decay_profile.csv"),
            "r,max_u,prefactor",
            &rows,
        )?);
    }
    write_manifest(out, config_text, &files)?;
    Ok(summary)
}

/// Aggregate whatever verify/decay outputs exist in `dir` into report.json
/// and return a human-readable summary table. Errors list the missing files
/// when neither input is present.
pub fn run_report(dir: &Path) -> Result<String> {
    let verify_path = dir.join("verify.json");
    let decay_path = dir.join("decay.json");
    let verify: Option<serde_json::Value> = if verify_path.exists() {
        Some(read_json(&verify_path)?)
    } else {
        None
    };
    let decay: Option<serde_json::Value> = if decay_path.exists() {
        Some(read_json(&decay_path)?)
    } else {
        None
    };
    if verify.is_none() && decay.is_none() {
        return Err(EdlError::MissingInput(format!(
            "no report inputs in {}: expected {} and/or {}",
            dir.display(),
            verify_path.display(),
            decay_path.display()
        )));
    }

    let mut lines: Vec<String> = Vec::new();
    lines.push(format!(
        "{:<28} {:>8} {:>14} {:>14} {:>12}",
        "check", "verdict", "lhs", "rhs", "constant"
    ));
    let fmt_row = |name: &str, verdict: bool, lhs: f64, rhs: f64, c: f64| {
        format!(
            "{name:<28} {:>8} {lhs:>14.6e} {rhs:>14.6e} {c:>12.4e}",
            if verdict { "pass" } else { "FAIL" }
        )
    };
    if let Some(v) = &verify {
        if let Some(a) = v.get("assumptions") {
            let ok = a
                .get("all_pass")
                .and_then(|x| x.as_bool())
                .unwrap_or(false);
            lines.push(fmt_row("assumptions(C1-C4)", ok, 0.0, 0.0, 0.0));
        }
        if let Some(mp) = v.get("max_principle") {
            let ok = mp.get("verdict").and_then(|x| x.as_bool()).unwrap_or(false);
            lines.push(fmt_row("maximum_principle", ok, 0.0, 0.0, 0.0));
        }
        if let Some(tp) = v.get("topology_pass").and_then(|x| x.as_bool()) {
            lines.push(fmt_row("level_topology", tp, 0.0, 0.0, 0.0));
        }
        if let Some(records) = v.get("records").and_then(|x| x.as_array()) {
            for r in records {
                let g = |k: &str| r.get(k).and_then(|x| x.as_f64()).unwrap_or(0.0);
                lines.push(fmt_row(
                    r.get("check").and_then(|x| x.as_str()).unwrap_or("?"),
                    r.get("verdict").and_then(|x| x.as_bool()).unwrap_or(false),
                    g("lhs"),
                    g("rhs"),
                    g("constant"),
                ));
            }
        }
    }
    if let Some(d) = &decay {
        if let Some(w) = d.get("weak_norm").and_then(|x| x.get("value")).and_then(|x| x.as_f64()) {
            lines.push(fmt_row("lorentz_weak_norm", true, w, 0.0, 0.0));
        }
        if let Some(fit) = d.get("decay") {
            let e = fit.get("exponent").and_then(|x| x.as_f64()).unwrap_or(0.0);
            let big_o = fit.get("big_o").and_then(|x| x.as_bool()).unwrap_or(false);
            lines.push(fmt_row("decay_exponent", big_o, e, 0.0, 0.0));
        }
    }
    let table = lines.join("\n") + "\n";

    let aggregate = serde_json::json!({ "verify": verify, "decay": decay });
    write_json(&dir.join("report.json"), &aggregate)?;
    Ok(table)
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(EdlError::from)?;
    serde_json::from_str(&text)
        .map_err(|e| EdlError::MissingInput(format!("unreadable {}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub pass: bool,
    pub error: Option<String>,
}

/// Expand the sweep cross product and run solve + verify + decay for each
/// combination in a `jobs`-wide rayon pool, one subdirectory per combination.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    out: &Path,
    jobs: usize,
    force: bool,
    config_text: &str,
) -> Result<Vec<SweepEntry>> {
    use rayon::prelude::*;
    let combos = cfg.expand_sweep();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EdlError::Config(format!("worker pool: {e}")))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        combos
            .par_iter()
            .map(|(label, sub)| {
                let dir = out.join(label);
                let run = || -> Result<bool> {
                    run_solve(sub, &dir, config_text)?;
                    let v = run_verify(sub, &dir, force, config_text)?;
                    run_decay(sub, &dir, config_text)?;
                    Ok(v.all_pass)
                };
                match run() {
                    Ok(pass) => SweepEntry {
                        label: label.clone(),
                        pass,
                        error: None,
                    },
                    Err(e) => SweepEntry {
                        label: label.clone(),
                        pass: false,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    write_json(&out.join("sweep.json"), &entries)?;
    Ok(entries)
}
