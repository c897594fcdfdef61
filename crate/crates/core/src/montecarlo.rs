//! Brownian hitting times of barrier families and the statistical checks
//! built on them.
//!
//! Every path draws its increments from its own ChaCha8 stream, selected by
//! `(seed, path_index)`, so the sample set does not depend on how paths are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::barrier::{barrier_inclusion, default_inclusion_tol, Barrier, BarrierTime};
use crate::exec::{pairwise_sum, Execution};
use crate::measure::Measure;
use crate::report::Report;

/// Significance level of the two-sample scaling test.
pub const SCALING_LEVEL: f64 = 0.01;

/// Number of standard errors allowed by the mean-based checks.
pub const SIGMA_MULTIPLIER: f64 = 4.0;

/// Minimum number of paths in a martingale-check bin.
pub const MIN_BIN_SIZE: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(String),
    #[error("barrier family is not nested: barrier for lambda = {inner} is not inside the one for lambda = {outer} (violation {violation} at x = {at:?})")]
    NotNested {
        inner: f64,
        outer: f64,
        violation: f64,
        at: Option<f64>,
    },
    #[error("non-finite Brownian increment on path {0}")]
    NonFinite(u64),
    #[error("lambda = {0} is not in the sample set")]
    UnknownLambda(f64),
    #[error("sample set is empty")]
    Empty,
    #[error("not enough paths: {paths} paths cannot fill a single bin of {min}")]
    Starved { paths: usize, min: usize },
    #[error("path blocks {0:?} and {1:?} overlap")]
    OverlappingBlocks(std::ops::Range<usize>, std::ops::Range<usize>),
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    /// Time step of the simulated path.
    pub dt_sim: f64,
    /// Paths still running at this time are stopped and flagged as capped.
    pub t_cap: f64,
    pub seed: u64,
    /// Scale parameters, ascending.
    pub lambdas: Vec<f64>,
}

/// Stopping data of one path for one scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitSample {
    pub tau: f64,
    pub b_tau: f64,
    pub capped: bool,
}

/// Hitting samples for every path and every scale parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingSampleSet {
    config: McConfig,
    /// Path-major: `samples[path * lambdas.len() + k]`.
    samples: Vec<HitSample>,
}

impl HittingSampleSet {
    pub fn config(&self) -> &McConfig {
        &self.config
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.config.lambdas
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    pub fn get(&self, path: usize, k: usize) -> HitSample {
        self.samples[path * self.config.lambdas.len() + k]
    }

    /// Index of `lambda` in the sample set.
    pub fn index_of(&self, lambda: f64) -> Result<usize, McError> {
        self.config
            .lambdas
            .iter()
            .position(|&l| (l - lambda).abs() <= 1e-12 * lambda.abs().max(1.0))
            .ok_or(McError::UnknownLambda(lambda))
    }

    /// Samples of one scale parameter, in path order.
    pub fn column(&self, k: usize) -> Vec<HitSample> {
        (0..self.n_paths()).map(|p| self.get(p, k)).collect()
    }

    pub fn capped_fraction(&self, k: usize) -> f64 {
        let n = self.n_paths();
        if n == 0 {
            return 0.0;
        }
        (0..n).filter(|&p| self.get(p, k).capped).count() as f64 / n as f64
    }

    /// Fraction of paths whose stopping times are non-decreasing along the
    /// scale parameters.
    pub fn monotone_fraction(&self) -> f64 {
        let n = self.n_paths();
        let m = self.config.lambdas.len();
        if n == 0 {
            return 1.0;
        }
        let ok = (0..n)
            .filter(|&p| (1..m).all(|k| self.get(p, k).tau >= self.get(p, k - 1).tau))
            .count();
        ok as f64 / n as f64
    }

    /// CSV with header `path_id,lambda,tau,b_tau,capped`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        use std::fmt::Write as _;
        let mut s = String::from("path_id,lambda,tau,b_tau,capped\n");
        for p in 0..self.n_paths() {
            for (k, &lambda) in self.config.lambdas.iter().enumerate() {
                let h = self.get(p, k);
                let _ = writeln!(s, "{p},{lambda},{},{},{}", h.tau, h.b_tau, h.capped as u8);
            }
            if s.len() > 1 << 20 {
                out.write_all(s.as_bytes())?;
                s.clear();
            }
        }
        out.write_all(s.as_bytes())
    }

    /// Replaces samples with externally produced ones; used to inject
    /// deliberately wrong samplers when testing the checks.
    pub fn from_samples(config: McConfig, samples: Vec<HitSample>) -> Result<Self, McError> {
        if samples.len() != config.n_paths * config.lambdas.len() {
            return Err(McError::Config(format!(
                "expected {} samples, got {}",
                config.n_paths * config.lambdas.len(),
                samples.len()
            )));
        }
        Ok(HittingSampleSet { config, samples })
    }
}

/// Nearest-node barrier lookup specialised to uniformly spaced abscissae.
/// Abscissae outside the sampled range take the value at the nearest end,
/// which is zero for regularized barriers.
struct Lookup {
    x0: f64,
    inv_dx: f64,
    r: Vec<f64>,
    uniform: bool,
    barrier: Barrier,
}

impl Lookup {
    fn new(b: &Barrier) -> Self {
        let xs = b.xs();
        let r: Vec<f64> = b.values().iter().map(|t| t.as_f64()).collect();
        let n = xs.len();
        let (uniform, inv_dx) = if n >= 2 {
            let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
            let uniform = xs
                .iter()
                .enumerate()
                .all(|(i, &x)| (x - (xs[0] + i as f64 * dx)).abs() <= 1e-9 * dx);
            (uniform, 1.0 / dx)
        } else {
            (false, 0.0)
        };
        Lookup {
            x0: xs[0],
            inv_dx,
            r,
            uniform,
            barrier: b.clone(),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.r.len();
        if self.uniform {
            let f = (x - self.x0) * self.inv_dx;
            if f <= 0.0 {
                return self.r[0];
            }
            if f >= (n - 1) as f64 {
                return self.r[n - 1];
            }
            let k = f.floor() as usize;
            let frac = f - k as f64;
            return if frac < 0.5 {
                self.r[k]
            } else if frac > 0.5 {
                self.r[k + 1]
            } else {
                self.r[k].min(self.r[k + 1])
            };
        }
        let xs = self.barrier.xs();
        let x = x.clamp(xs[0], xs[xs.len() - 1]);
        self.barrier.eval(x).map(BarrierTime::as_f64).unwrap_or(0.0)
    }
}

/// Simulates one Brownian path per sample and records, for each scale
/// parameter in ascending order, the first step time `t` with
/// `t >= r_lambda(B_t)`. The search for `lambda_{k+1}` resumes where the one
/// for `lambda_k` stopped, so stopping times are non-decreasing along the
/// family on every path. Families that are not nested (within two time steps)
/// are refused.
pub fn sample_hitting(
    family: &[(f64, Barrier)],
    cfg: &McConfig,
    exec: Execution,
) -> Result<HittingSampleSet, McError> {
    validate(family, cfg)?;
    for w in family.windows(2) {
        let (outer, inner) = (&w[0], &w[1]);
        let rep = barrier_inclusion(
            &inner.1,
            &outer.1,
            default_inclusion_tol(&inner.1, &outer.1),
        );
        if !rep.included {
            return Err(McError::NotNested {
                inner: inner.0,
                outer: outer.0,
                violation: rep.max_violation,
                at: rep.witness,
            });
        }
    }

    let lookups: Vec<Lookup> = family.iter().map(|(_, b)| Lookup::new(b)).collect();
    let m = lookups.len();
    let per_path = exec.map_indexed(cfg.n_paths, |p| simulate_path(p as u64, &lookups, cfg));
    let mut samples = Vec::with_capacity(cfg.n_paths * m);
    for path in per_path {
        samples.extend(path?);
    }
    Ok(HittingSampleSet {
        config: cfg.clone(),
        samples,
    })
}

fn validate(family: &[(f64, Barrier)], cfg: &McConfig) -> Result<(), McError> {
    let bad = |m: String| Err(McError::Config(m));
    if cfg.n_paths == 0 {
        return bad("n_paths must be positive".into());
    }
    if !(cfg.dt_sim > 0.0 && cfg.dt_sim.is_finite()) {
        return bad(format!("dt_sim must be positive, got {}", cfg.dt_sim));
    }
    if family.is_empty() {
        return bad("empty barrier family".into());
    }
    if family.len() != cfg.lambdas.len()
        || family.iter().zip(&cfg.lambdas).any(|((l, _), c)| l != c)
    {
        return bad("barrier family does not match the configured lambdas".into());
    }
    if cfg.lambdas.iter().any(|l| !(*l >= 0.0)) || cfg.lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return bad("lambdas must be non-negative and strictly increasing".into());
    }
    for (lambda, b) in family {
        if b.time_step() > 0.0 && cfg.dt_sim > b.time_step() * (1.0 + 1e-12) {
            return bad(format!(
                "dt_sim = {} exceeds the time step {} of the barrier for lambda = {lambda}",
                cfg.dt_sim,
                b.time_step()
            ));
        }
        if cfg.t_cap < b.horizon() {
            return bad(format!(
                "t_cap = {} is below the horizon {} of the barrier for lambda = {lambda}",
                cfg.t_cap,
                b.horizon()
            ));
        }
    }
    Ok(())
}

/// Random stream of one path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn simulate_path(path: u64, lookups: &[Lookup], cfg: &McConfig) -> Result<Vec<HitSample>, McError> {
    let mut rng = path_rng(cfg.seed, path);
    let sd = cfg.dt_sim.sqrt();
    let mut out = Vec::with_capacity(lookups.len());
    let mut b = 0.0_f64;
    let mut step = 0_u64;
    loop {
        let t = step as f64 * cfg.dt_sim;
        while out.len() < lookups.len() && t >= lookups[out.len()].eval(b) {
            out.push(HitSample {
                tau: t,
                b_tau: b,
                capped: false,
            });
        }
        if out.len() == lookups.len() {
            return Ok(out);
        }
        if t >= cfg.t_cap {
            while out.len() < lookups.len() {
                out.push(HitSample {
                    tau: t,
                    b_tau: b,
                    capped: true,
                });
            }
            return Ok(out);
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        b += sd * z;
        if !b.is_finite() {
            return Err(McError::NonFinite(path));
        }
        step += 1;
    }
}

/// Kolmogorov-Smirnov distance `sup_x |F_n(x) - F_mu(x)|`, evaluated at the
/// sample points and at the atoms of `m`, from both sides.
pub fn ks_distance(samples: &[f64], m: &Measure) -> Result<f64, McError> {
    if samples.is_empty() {
        return Err(McError::Empty);
    }
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = xs.clone();
    points.extend(m.atoms().iter().map(|a| a.position));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for z in points {
        let below = xs.partition_point(|&s| s < z) as f64 / n;
        let upto = xs.partition_point(|&s| s <= z) as f64 / n;
        d = d
            .max((upto - m.cdf(z)).abs())
            .max((below - m.cdf_left(z)).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, McError> {
    if a.is_empty() || b.is_empty() {
        return Err(McError::Empty);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let z = a[i].min(b[j]);
        while i < a.len() && a[i] <= z {
            i += 1;
        }
        while j < b.len() && b[j] <= z {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`:
/// `sqrt(-ln(alpha/2)/2) sqrt((n+m)/(nm))`.
pub fn ks_two_sample_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Moves samples within `radius` of an atom of `m` onto the atom.
pub fn snap_to_atoms(samples: &[f64], m: &Measure, radius: f64) -> Vec<f64> {
    samples
        .iter()
        .map(|&x| {
            m.atoms()
                .iter()
                .map(|a| a.position)
                .filter(|a| (x - a).abs() <= radius)
                .min_by(|a, b| (x - a).abs().total_cmp(&(x - b).abs()))
                .unwrap_or(x)
        })
        .collect()
}

struct MeanSe {
    mean: f64,
    se: f64,
    n: usize,
}

fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return MeanSe { mean, se: 0.0, n };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    MeanSe {
        mean,
        se: (var / n as f64).sqrt(),
        n,
    }
}

/// Conditional-mean test of the martingale property between two scale
/// parameters: paths are binned by quantiles of `B_{tau_from}` and every bin
/// mean of `B_{tau_to} - B_{tau_from}` (and the global mean) must lie within
/// four standard errors of zero. The number of bins shrinks until each holds
/// at least [`MIN_BIN_SIZE`] paths.
pub fn martingale_check(
    s: &HittingSampleSet,
    lambda_from: f64,
    lambda_to: f64,
    n_bins: usize,
) -> Result<Report, McError> {
    if !(lambda_from < lambda_to) {
        return Err(McError::Config(format!(
            "need lambda_from < lambda_to, got {lambda_from} and {lambda_to}"
        )));
    }
    let kf = s.index_of(lambda_from)?;
    let kt = s.index_of(lambda_to)?;
    let n = s.n_paths();
    let mut bins = n_bins.max(1).min(n / MIN_BIN_SIZE);
    if bins == 0 {
        return Err(McError::Starved {
            paths: n,
            min: MIN_BIN_SIZE,
        });
    }
    let mut report = Report::new();
    if bins < n_bins {
        report.warn(format!(
            "martingale check: reduced bins from {n_bins} to {bins}"
        ));
        bins = bins.max(1);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        s.get(a, kf)
            .b_tau
            .total_cmp(&s.get(b, kf).b_tau)
            .then(a.cmp(&b))
    });
    let increments: Vec<f64> = order
        .iter()
        .map(|&p| s.get(p, kt).b_tau - s.get(p, kf).b_tau)
        .collect();

    for i in 0..bins {
        let lo = i * n / bins;
        let hi = (i + 1) * n / bins;
        let st = mean_se(&increments[lo..hi]);
        let bound = SIGMA_MULTIPLIER * st.se;
        report.push(
            format!("martingale_bin_{i}_mean_increment"),
            st.mean,
            bound,
            st.mean.abs() <= bound,
        );
    }
    let all = mean_se(&increments);
    let bound = SIGMA_MULTIPLIER * all.se;
    report.push(
        "martingale_global_mean_increment",
        all.mean,
        bound,
        all.mean.abs() <= bound,
    );
    Ok(report)
}

/// Brownian-scaling test `B_{tau_lambda} ~ sqrt(lambda) B_{tau_1}` on the two
/// halves of the path set.
pub fn scaling_check(s: &HittingSampleSet, lambda: f64) -> Result<Report, McError> {
    let n = s.n_paths();
    scaling_check_blocks(s, lambda, 0..n / 2, n / 2..n)
}

/// Two-sample KS test between `{B_{tau_lambda}}` on `block_a` and
/// `{sqrt(lambda) B_{tau_1}}` on `block_b`, at level [`SCALING_LEVEL`]. The
/// blocks must be disjoint so the two samples are independent.
pub fn scaling_check_blocks(
    s: &HittingSampleSet,
    lambda: f64,
    block_a: std::ops::Range<usize>,
    block_b: std::ops::Range<usize>,
) -> Result<Report, McError> {
    scaling_blocks(s, lambda, block_a, block_b, None)
}

/// [`scaling_check`] for measures with atoms: both samples are first snapped
/// onto the atoms of `mu_lambda` (the image of `m1`) within `radius`, which
/// removes the discrete-monitoring overshoot that does not scale with
/// `sqrt(lambda)`.
pub fn scaling_check_snapped(
    s: &HittingSampleSet,
    lambda: f64,
    m1: &Measure,
    radius: f64,
) -> Result<Report, McError> {
    let target = m1
        .scale(lambda)
        .map_err(|e| McError::Config(e.to_string()))?;
    let n = s.n_paths();
    scaling_blocks(s, lambda, 0..n / 2, n / 2..n, Some((&target, radius)))
}

fn scaling_blocks(
    s: &HittingSampleSet,
    lambda: f64,
    block_a: std::ops::Range<usize>,
    block_b: std::ops::Range<usize>,
    snap: Option<(&Measure, f64)>,
) -> Result<Report, McError> {
    if block_a.start < block_b.end && block_b.start < block_a.end {
        return Err(McError::OverlappingBlocks(block_a, block_b));
    }
    if block_a.is_empty()
        || block_b.is_empty()
        || block_a.end > s.n_paths()
        || block_b.end > s.n_paths()
    {
        return Err(McError::Config(
            "path blocks must be non-empty and inside the sample set".into(),
        ));
    }
    let kl = s.index_of(lambda)?;
    let k1 = s.index_of(1.0)?;
    let scale = lambda.sqrt();
    let mut a: Vec<f64> = block_a.clone().map(|p| s.get(p, kl).b_tau).collect();
    let mut b: Vec<f64> = block_b
        .clone()
        .map(|p| scale * s.get(p, k1).b_tau)
        .collect();
    if let Some((m, radius)) = snap {
        a = snap_to_atoms(&a, m, radius);
        b = snap_to_atoms(&b, m, radius);
    }
    let d = ks_two_sample(&a, &b)?;
    let thr = ks_two_sample_threshold(a.len(), b.len(), SCALING_LEVEL);
    let mut report = Report::new();
    report.push(format!("scaling_ks_lambda_{lambda}"), d, thr, d <= thr);
    Ok(report)
}

/// Compares the sample mean of `tau_lambda` with `lambda int y^2 mu_1(dy)`
/// for every scale parameter. The allowance is four standard errors plus
/// `bias`. When more than 1% of the paths are capped they are excluded and a
/// warning is recorded.
pub fn mean_tau_check(s: &HittingSampleSet, m1: &Measure, bias: f64) -> Report {
    let second = m1.second_moment();
    let mut report = Report::new();
    for (k, &lambda) in s.lambdas().iter().enumerate() {
        let col = s.column(k);
        let capped = s.capped_fraction(k);
        let taus: Vec<f64> = if capped > 0.01 {
            report.warn(format!(
                "lambda = {lambda}: {:.2}% of paths capped; they are excluded and the mean is biased low",
                100.0 * capped
            ));
            col.iter().filter(|h| !h.capped).map(|h| h.tau).collect()
        } else {
            col.iter().map(|h| h.tau).collect()
        };
        let target = lambda * second;
        let st = mean_se(&taus);
        let allowance = SIGMA_MULTIPLIER * st.se + bias;
        let err = (st.mean - target).abs();
        report.push(
            format!("mean_tau_error_lambda_{lambda}"),
            err,
            allowance,
            st.n > 0 && err <= allowance,
        );
    }
    report
}

/// `E[|B| 1{|B| > K}]` for each threshold `K`; non-increasing in `K`.
pub fn tail_mean_profile(samples: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = samples.len().max(1) as f64;
    thresholds
        .iter()
        .map(|&k| {
            let tail: Vec<f64> = samples.iter().map(|b| b.abs()).filter(|&b| b > k).collect();
            pairwise_sum(&tail) / n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ExampleMeasure;

    fn flat(c: f64, half: f64) -> Barrier {
        let xs: Vec<f64> = (-100..=100).map(|i| i as f64 * half / 100.0).collect();
        let r = vec![c; xs.len()];
        Barrier::from_values(xs, &r, c.max(1.0), 0.0).unwrap()
    }

    fn two_point_barrier() -> Barrier {
        let xs: Vec<f64> = (-150..=150).map(|i| i as f64 * 0.01).collect();
        let r: Vec<f64> = xs
            .iter()
            .map(|x| {
                if x.abs() < 1.0 - 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .collect();
        Barrier::from_values(xs, &r, 3.0, 0.0).unwrap()
    }

    fn cfg(n: usize, dt: f64, lambdas: Vec<f64>) -> McConfig {
        McConfig {
            n_paths: n,
            dt_sim: dt,
            t_cap: 50.0,
            seed: 11,
            lambdas,
        }
    }

    #[test]
    fn constant_barrier_stops_at_its_level() {
        let c = 0.5;
        let s = sample_hitting(
            &[(1.0, flat(c, 5.0))],
            &cfg(4000, 1e-3, vec![1.0]),
            Execution::default(),
        )
        .unwrap();
        let col = s.column(0);
        for h in &col {
            assert!((h.tau - c).abs() <= 1e-3 + 1e-12);
        }
        let b: Vec<f64> = col.iter().map(|h| h.b_tau).collect();
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        let var = b.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b.len() - 1) as f64;
        // Var of the sample variance of a normal: 2 sigma^4 / (n - 1).
        let se = (2.0 * c * c / (b.len() - 1) as f64).sqrt();
        assert!((var - c).abs() <= 3.0 * se, "var = {var}");
    }

    #[test]
    fn two_point_barrier_gives_exit_time() {
        let s = sample_hitting(
            &[(1.0, two_point_barrier())],
            &cfg(4000, 1e-4, vec![1.0]),
            Execution::default(),
        )
        .unwrap();
        let col = s.column(0);
        let taus: Vec<f64> = col.iter().map(|h| h.tau).collect();
        let st = mean_se(&taus);
        // E[tau] = 1 for the exit time of (-1, 1); discrete monitoring adds a
        // positive overshoot of order sqrt(dt).
        assert!(
            (st.mean - 1.0).abs() <= 3.0 * st.se + 0.05,
            "mean = {}",
            st.mean
        );
        for h in &col {
            assert!((h.b_tau.abs() - 1.0).abs() <= 5.0 * 1e-2, "{}", h.b_tau);
        }
    }

    #[test]
    fn zero_barrier_stops_immediately() {
        let b = Barrier::zero(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        let s = sample_hitting(
            &[(1.0, b)],
            &cfg(100, 1e-3, vec![1.0]),
            Execution::default(),
        )
        .unwrap();
        for h in s.column(0) {
            assert_eq!((h.tau, h.b_tau, h.capped), (0.0, 0.0, false));
        }
    }

    #[test]
    fn rejects_non_nested_family() {
        let fam = [(0.5, flat(1.0, 2.0)), (1.0, flat(0.5, 2.0))];
        let err =
            sample_hitting(&fam, &cfg(10, 1e-3, vec![0.5, 1.0]), Execution::default()).unwrap_err();
        assert!(matches!(err, McError::NotNested { .. }));
    }

    #[test]
    fn rejects_bad_configs() {
        let fam = [(1.0, flat(1.0, 2.0))];
        assert!(sample_hitting(&fam, &cfg(0, 1e-3, vec![1.0]), Execution::default()).is_err());
        assert!(sample_hitting(&fam, &cfg(10, 0.0, vec![1.0]), Execution::default()).is_err());
        assert!(sample_hitting(&fam, &cfg(10, 1e-3, vec![0.5]), Execution::default()).is_err());
        let mut c = cfg(10, 1e-3, vec![1.0]);
        c.t_cap = 0.1;
        assert!(sample_hitting(&fam, &c, Execution::default()).is_err());
    }

    #[test]
    fn deterministic_and_mode_independent() {
        let fam = [(0.81, flat(0.81 * 0.3, 2.0)), (1.0, flat(0.3, 2.0))];
        let c = cfg(500, 1e-3, vec![0.81, 1.0]);
        let a = sample_hitting(&fam, &c, Execution::Sequential).unwrap();
        let b = sample_hitting(&fam, &c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.monotone_fraction(), 1.0);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_csv(&mut buf_a).unwrap();
        b.write_csv(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        assert!(String::from_utf8(buf_a)
            .unwrap()
            .starts_with("path_id,lambda,tau,b_tau,capped\n0,0.81,"));
    }

    #[test]
    fn capped_paths_are_flagged() {
        let never =
            Barrier::from_values(vec![-1.0, 1.0], &[f64::INFINITY, f64::INFINITY], 1.0, 0.0)
                .unwrap();
        let mut c = cfg(20, 1e-2, vec![1.0]);
        c.t_cap = 1.0;
        let s = sample_hitting(&[(1.0, never)], &c, Execution::default()).unwrap();
        assert_eq!(s.capped_fraction(0), 1.0);
        for h in s.column(0) {
            assert!(h.capped && (h.tau - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ks_examples() {
        let u = ExampleMeasure::Uniform.build().unwrap();
        let n = 1000;
        let q: Vec<f64> = (0..n)
            .map(|k| 2.0 * (k as f64 + 0.5) / n as f64 - 1.0)
            .collect();
        assert!(ks_distance(&q, &u).unwrap() <= 0.5 / n as f64 + 1e-12);
        let zeros = vec![0.0; 10];
        assert_eq!(ks_distance(&zeros, &Measure::dirac_zero()).unwrap(), 0.0);
        let two = ExampleMeasure::TwoPoint { a: -1.0, b: 1.0 }
            .build()
            .unwrap();
        assert_eq!(ks_distance(&zeros, &two).unwrap(), 0.5);
        assert!(matches!(ks_distance(&[], &u), Err(McError::Empty)));
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(
            ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[2.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        // c(0.01) = 1.6276...
        let t = ks_two_sample_threshold(100, 100, 0.01);
        assert!((t - 1.627_624_4 * (0.02f64).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn snapping_moves_only_nearby_samples() {
        let two = ExampleMeasure::TwoPoint { a: -1.0, b: 1.0 }
            .build()
            .unwrap();
        let s = snap_to_atoms(&[-1.01, 0.0, 0.995, 1.2], &two, 0.02);
        assert_eq!(s, vec![-1.0, 0.0, 1.0, 1.2]);
    }

    fn constant_family_samples(n: usize) -> HittingSampleSet {
        let c = 0.3;
        let fam = [(0.81, flat(0.81 * c, 3.0)), (1.0, flat(c, 3.0))];
        sample_hitting(&fam, &cfg(n, 1e-3, vec![0.81, 1.0]), Execution::default()).unwrap()
    }

    #[test]
    fn martingale_check_detects_drift() {
        let s = constant_family_samples(6000);
        let rep = martingale_check(&s, 0.81, 1.0, 10).unwrap();
        assert!(rep.passed(), "{rep}");

        let mut shifted = Vec::new();
        for p in 0..s.n_paths() {
            let from = s.get(p, 0);
            shifted.push(from);
            shifted.push(HitSample {
                b_tau: from.b_tau + 0.1,
                ..s.get(p, 1)
            });
        }
        let bad = HittingSampleSet::from_samples(s.config().clone(), shifted).unwrap();
        assert!(!martingale_check(&bad, 0.81, 1.0, 10).unwrap().passed());
    }

    #[test]
    fn martingale_check_bin_handling() {
        let s = constant_family_samples(100);
        let rep = martingale_check(&s, 0.81, 1.0, 10).unwrap();
        assert_eq!(rep.rows.len(), 3 + 1);
        assert_eq!(rep.warnings.len(), 1);
        let tiny = constant_family_samples(20);
        assert!(matches!(
            martingale_check(&tiny, 0.81, 1.0, 5),
            Err(McError::Starved { .. })
        ));
        assert!(martingale_check(&s, 1.0, 0.81, 5).is_err());
        assert!(matches!(
            martingale_check(&s, 0.5, 1.0, 5),
            Err(McError::UnknownLambda(_))
        ));
    }

    #[test]
    fn scaling_check_cases() {
        let s = constant_family_samples(8000);
        assert!(scaling_check(&s, 1.0).unwrap().passed());
        assert!(scaling_check(&s, 0.81).unwrap().passed());
        assert!(matches!(
            scaling_check_blocks(&s, 0.81, 0..5000, 4000..8000),
            Err(McError::OverlappingBlocks(..))
        ));

        // Mislabelled family: the "0.81" barrier is really the 0.4 one.
        let c = 0.3;
        let fam = [(0.81, flat(0.4 * c, 3.0)), (1.0, flat(c, 3.0))];
        let bad = sample_hitting(
            &fam,
            &cfg(8000, 1e-3, vec![0.81, 1.0]),
            Execution::default(),
        )
        .unwrap();
        assert!(!scaling_check(&bad, 0.81).unwrap().passed());
    }

    #[test]
    fn snapped_scaling_check_ignores_overshoot() {
        // Atoms at +-0.9 and +-0.8 with the same additive overshoot.
        let lambda = (0.8f64 / 0.9).powi(2);
        let m1 = ExampleMeasure::TwoPoint { a: -0.9, b: 0.9 }
            .build()
            .unwrap();
        let n = 4000;
        let mut samples = Vec::new();
        for p in 0..n {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            let over = 0.01 * ((p % 7) as f64 / 7.0);
            for atom in [0.8, 0.9] {
                samples.push(HitSample {
                    tau: atom,
                    b_tau: sign * (atom + over),
                    capped: false,
                });
            }
        }
        let s = HittingSampleSet::from_samples(cfg(n, 1e-4, vec![lambda, 1.0]), samples).unwrap();
        assert!(!scaling_check(&s, lambda).unwrap().passed());
        assert!(scaling_check_snapped(&s, lambda, &m1, 0.02)
            .unwrap()
            .passed());
    }

    #[test]
    fn mean_tau_targets() {
        let s = constant_family_samples(2000);
        let g = ExampleMeasure::GaussianTruncated {
            sigma: 0.3f64.sqrt(),
            cutoff: 6.0,
        }
        .build()
        .unwrap();
        let rep = mean_tau_check(&s, &g, 2e-3);
        assert!(rep.passed(), "{rep}");

        let zero = Barrier::zero(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        let z = sample_hitting(
            &[(0.0, zero)],
            &cfg(50, 1e-3, vec![0.0]),
            Execution::default(),
        )
        .unwrap();
        let rep = mean_tau_check(&z, &ExampleMeasure::Uniform.build().unwrap(), 0.0);
        assert!(rep.passed());
        assert_eq!(rep.rows[0].value, 0.0);
    }

    #[test]
    fn mean_tau_warns_on_capped_paths() {
        let never =
            Barrier::from_values(vec![-1.0, 1.0], &[f64::INFINITY, f64::INFINITY], 1.0, 0.0)
                .unwrap();
        let mut c = cfg(50, 1e-2, vec![1.0]);
        c.t_cap = 1.0;
        let s = sample_hitting(&[(1.0, never)], &c, Execution::default()).unwrap();
        let rep = mean_tau_check(&s, &ExampleMeasure::Uniform.build().unwrap(), 0.0);
        assert_eq!(rep.warnings.len(), 1);
        assert!(!rep.passed());
    }

    #[test]
    fn tail_profile_is_non_increasing() {
        let samples = [-2.0, -0.5, 0.1, 0.7, 1.5, 3.0];
        let prof = tail_mean_profile(&samples, &[0.0, 0.5, 1.0, 2.0, 4.0]);
        for w in prof.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(prof[4], 0.0);
    }
}
