use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use root_barrier::barrier::{
    barrier_inclusion, default_inclusion_tol, max_abs_difference, ScalingCheck,
};
use root_barrier::montecarlo::{
    ks_distance, martingale_check, mean_tau_check, sample_hitting, scaling_check,
    scaling_check_snapped, snap_to_atoms, McConfig, McError,
};
use root_barrier::pde::{solve_family, PdeError, StreamingSolve};
use root_barrier::report::Report;
use root_barrier::volterra::{VolterraError, VolterraProblem};
use root_barrier::{Barrier, Execution, Measure};

use crate::config::{self, barrier_file_name, RunConfig};
use crate::CliError;

/// Allowed gap between a direct solve of `mu_lambda` and the rescaled
/// `lambda = 1` barrier, on top of five time steps.
const SELF_SIMILARITY_SLACK: f64 = 0.1;

fn pde_error(e: PdeError) -> CliError {
    match e {
        PdeError::Cfl { .. } => CliError::Cfl(e.to_string()),
        PdeError::NonFinite { .. } => CliError::Numeric(e.to_string()),
        PdeError::Grid(_) | PdeError::Support { .. } => CliError::Config(e.to_string()),
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path, e))
}

fn write_barrier(path: &Path, b: &Barrier, method: Option<&str>) -> Result<(), CliError> {
    let mut w = create(path)?;
    b.write_csv(&mut w, method).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

/// Solves every `mu_lambda` on the configured grid.
fn solve_all(cfg: &RunConfig, m: &Measure) -> Result<Vec<(f64, StreamingSolve)>, CliError> {
    let grid = cfg.grid()?;
    let jobs: Vec<_> = cfg.lambdas.iter().map(|&l| (l, grid)).collect();
    let results = solve_family(m, &jobs, cfg.epsilon, Execution::default());
    cfg.lambdas
        .iter()
        .zip(results)
        .map(|(&l, r)| r.map(|s| (l, s)).map_err(pde_error))
        .collect()
}

fn regularized(lambda: f64, s: &StreamingSolve) -> Result<Barrier, CliError> {
    s.barrier
        .regularize()
        .map_err(|e| CliError::Numeric(format!("lambda = {lambda}: {e}")))
}

/// The family `(lambda, barrier)`, read from `barrier_dir` when configured
/// and solved otherwise.
fn family(cfg: &RunConfig, m: &Measure) -> Result<Vec<(f64, Barrier)>, CliError> {
    if let Some(dir) = &cfg.barrier_dir {
        return cfg
            .lambdas
            .iter()
            .map(|&l| {
                let path = dir.join(barrier_file_name(l));
                let file = File::open(&path).map_err(|e| io_error(&path, e))?;
                let b = Barrier::read_csv(file).map_err(|e| io_error(&path, e))?;
                Ok((l, b))
            })
            .collect();
    }
    solve_all(cfg, m)?
        .iter()
        .map(|(l, s)| Ok((*l, regularized(*l, s)?)))
        .collect()
}

fn finish(report: &Report, path: &Path, what: &str) -> Result<(), CliError> {
    let text = report.to_string();
    write_text(path, &text)?;
    print!("{text}");
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.metric.as_str())
            .collect();
        Err(CliError::Check(format!("{what}: {}", failed.join(", "))))
    }
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.measure()?;
    let dir = prepare_out(cfg)?;
    let grid = cfg.grid()?;
    let t0 = Instant::now();
    let solves = solve_all(cfg, &m)?;
    let elapsed = t0.elapsed().as_secs_f64();

    let mut summary =
        String::from("lambda,nx,nt,dx,dt,contact_tol,contact_nodes,min_gap,r_max,never_nodes\n");
    for (lambda, s) in &solves {
        let b = regularized(*lambda, s)?;
        write_barrier(&dir.join(barrier_file_name(*lambda)), &b, None)?;
        let never = b.values().iter().filter(|r| r.is_never()).count();
        let r_max = b.max_finite().unwrap_or(0.0);
        summary.push_str(&format!(
            "{lambda},{},{},{},{},{},{},{},{r_max},{never}\n",
            grid.nx(),
            grid.nt(),
            grid.dx(),
            grid.dt(),
            s.contact_tol,
            s.contact_nodes,
            s.min_gap,
        ));
    }
    summary.push_str(&format!("# runtime_s={elapsed:.3}\n"));
    write_text(&dir.join("summary.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn family_check(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.lambdas.len() < 2 {
        return Err(CliError::Config(
            "family-check needs at least two lambdas".into(),
        ));
    }
    let Some(k1) = cfg.lambdas.iter().position(|&l| l == 1.0) else {
        return Err(CliError::Config(
            "family-check needs lambda = 1 in the list".into(),
        ));
    };
    let m = cfg.measure()?;
    let dir = prepare_out(cfg)?;
    let fam = family(cfg, &m)?;
    let b1 = &fam[k1].1;
    let mut report = Report::new();

    let sc = b1.check_scaling_condition(ScalingCheck::for_barrier(b1));
    report.push(
        "scaling_condition_lambda_1",
        if sc.holds { 1.0 } else { 0.0 },
        1.0,
        sc.holds,
    );
    if let Some((x1, x2)) = sc.witness {
        report.warn(format!(
            "r(x)/x^2 increases outwards between x = {x1} and x = {x2}"
        ));
    }

    for i in 0..fam.len() {
        for j in i + 1..fam.len() {
            let (outer, inner) = (&fam[i], &fam[j]);
            let tol = default_inclusion_tol(&inner.1, &outer.1);
            let rep = barrier_inclusion(&inner.1, &outer.1, tol);
            report.push(
                format!("inclusion_{}_in_{}", inner.0, outer.0),
                rep.max_violation,
                tol,
                rep.included,
            );
            if let (false, Some(x)) = (rep.included, rep.witness) {
                report.warn(format!(
                    "barrier for lambda = {} is not inside the one for lambda = {}: worst at x = {x}",
                    inner.0, outer.0
                ));
            }
        }
    }

    for (lambda, b) in &fam {
        if *lambda == 1.0 {
            continue;
        }
        let scaled = b1
            .scale(*lambda)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let (d, at) = max_abs_difference(b, &scaled);
        let bound = 5.0 * b.time_step() + SELF_SIMILARITY_SLACK;
        report.push(format!("self_similarity_{lambda}"), d, bound, d <= bound);
        if let (true, Some(x)) = (d > bound, at) {
            report.warn(format!(
                "lambda = {lambda}: direct and rescaled barriers differ most at x = {x}"
            ));
        }
    }
    finish(&report, &dir.join("family_report.csv"), "family check")
}

pub fn verify_embed(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.measure()?;
    let dir = prepare_out(cfg)?;
    let fam = family(cfg, &m)?;
    let min_step = fam
        .iter()
        .map(|(_, b)| b.time_step())
        .fold(f64::INFINITY, f64::min);
    let dt_sim = match cfg.mc.dt_sim {
        Some(d) => d,
        None if min_step > 0.0 && min_step.is_finite() => min_step / 4.0,
        None => {
            return Err(CliError::Config(
                "barriers carry no time step; set mc.dt_sim".into(),
            ))
        }
    };
    let t_cap = cfg
        .mc
        .t_cap
        .unwrap_or_else(|| fam.iter().map(|(_, b)| b.horizon()).fold(0.0, f64::max));
    let mc = McConfig {
        n_paths: cfg.mc.n_paths.unwrap_or(config::DEFAULT_PATHS),
        dt_sim,
        t_cap,
        seed: cfg.mc.seed.unwrap_or(config::DEFAULT_SEED),
        lambdas: cfg.lambdas.clone(),
    };
    let samples = sample_hitting(&fam, &mc, Execution::default()).map_err(|e| match e {
        McError::NotNested { .. } => CliError::Check(e.to_string()),
        McError::NonFinite { .. } => CliError::Numeric(e.to_string()),
        _ => CliError::Config(e.to_string()),
    })?;
    let path = dir.join("hitting_samples.csv");
    let mut w = create(&path)?;
    samples
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_error(&path, e))?;

    let mc_err = |e: McError| CliError::Config(e.to_string());
    let ks_max = cfg.mc.ks_max.unwrap_or(config::DEFAULT_KS_MAX);
    let mut report = Report::new();
    for (k, &lambda) in cfg.lambdas.iter().enumerate() {
        let target = m
            .scale(lambda)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let raw: Vec<f64> = samples.column(k).iter().map(|h| h.b_tau).collect();
        if target.is_atom_free() {
            let d = ks_distance(&raw, &target).map_err(mc_err)?;
            report.push(format!("ks_lambda_{lambda}"), d, ks_max, d <= ks_max);
        } else {
            let snapped = snap_to_atoms(&raw, &target, 2.0 * dt_sim.sqrt());
            let d = ks_distance(&snapped, &target).map_err(mc_err)?;
            report.push(
                format!("ks_snapped_lambda_{lambda}"),
                d,
                ks_max,
                d <= ks_max,
            );
            let d_raw = ks_distance(&raw, &target).map_err(mc_err)?;
            report.warn(format!(
                "lambda = {lambda}: ks distance before snapping to atoms {d_raw}"
            ));
        }
    }
    report.extend(mean_tau_check(&samples, &m, 2.0 * dt_sim.sqrt()));
    let bins = cfg.mc.bins.unwrap_or(config::DEFAULT_BINS);
    for w in cfg.lambdas.windows(2) {
        let mut r = martingale_check(&samples, w[0], w[1], bins).map_err(mc_err)?;
        for row in &mut r.rows {
            row.metric = format!("{}_{}_to_{}", row.metric, w[0], w[1]);
        }
        report.extend(r);
    }
    if cfg.lambdas.contains(&1.0) && mc.n_paths >= 2 {
        for &lambda in cfg.lambdas.iter().filter(|&&l| l != 1.0) {
            let r = if m.is_atom_free() {
                scaling_check(&samples, lambda)
            } else {
                scaling_check_snapped(&samples, lambda, &m, 2.0 * dt_sim.sqrt())
            };
            report.extend(r.map_err(mc_err)?);
        }
    }
    report.push(
        "tau_monotone_fraction",
        samples.monotone_fraction(),
        1.0,
        samples.monotone_fraction() == 1.0,
    );
    finish(
        &report,
        &dir.join("embed_report.csv"),
        "embedding verification",
    )
}

pub fn volterra(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.measure()?;
    let dir = prepare_out(cfg)?;
    let nodes = cfg
        .volterra
        .nodes_per_half
        .unwrap_or(config::DEFAULT_VOLTERRA_NODES);
    let t_max = cfg.volterra.t_max.unwrap_or(cfg.grid.horizon);
    let sol = VolterraProblem::new(m, nodes, t_max)
        .and_then(|p| p.solve())
        .map_err(|e| match e {
            VolterraError::Bracket { .. } | VolterraError::NonMonotone { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        })?;
    write_barrier(
        &dir.join("barrier_volterra.csv"),
        &sol.barrier,
        Some("volterra"),
    )?;
    println!(
        "nodes_per_half={nodes},t_max={t_max},r_0={},max_residual={}",
        sol.half_values[0],
        sol.max_residual()
    );
    Ok(())
}
