//! Continuous barriers of symmetric atom-free measures from the Volterra
//! integral equation
//!
//! ```text
//! v_0(x) - v_mu(x) = g(r(x), x) - int_{r(y) < r(x)} g(r(x) - r(y), x - y) mu(dy)
//! ```
//!
//! with `v_0 = -|.|` and `g(t, z) = sqrt(2t/pi) exp(-z^2/2t) - |z| erfc(|z|/sqrt(2t))`.
//!
//! When the barrier is symmetric and non-increasing in `|x|`, the set
//! `{r(y) < r(x)}` only involves points further from the origin, so the
//! equation can be solved one abscissa at a time from the edge of the support
//! inwards, each step being a scalar root-finding problem.

use std::f64::consts::PI;

use thiserror::Error;

use crate::barrier::{Barrier, BarrierTime};
use crate::measure::Measure;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolterraError {
    #[error("measure has atoms; the Volterra route needs an atom-free measure")]
    Atoms,
    #[error("measure support [{0}, {1}] is not symmetric about the origin")]
    Support(f64, f64),
    #[error("density is not symmetric: f({x}) = {left} but f(-{x}) = {right}")]
    Asymmetric { x: f64, left: f64, right: f64 },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("no sign change at x = {x}: residual {low} at r = {r_low}, {high} at r = {r_high}")]
    Bracket {
        x: f64,
        r_low: f64,
        low: f64,
        r_high: f64,
        high: f64,
    },
    #[error("barrier would decrease towards the origin at x = {x} (residual {residual} > 0 at the outer value {outer})")]
    NonMonotone { x: f64, outer: f64, residual: f64 },
}

const GAUSS_POINTS: usize = 12;

/// Residual level, relative to `1 + |v_0 - v_mu|`, treated as zero where the
/// equation has no sign change.
pub const PLATEAU_TOL: f64 = 1e-6;

/// Gauss-Legendre nodes and weights on `(0, 1)`.
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out.push((0.5 * (1.0 - z), 0.5 * w));
    }
    out
}

/// The kernel `g(t, z)`, extended by `g(0, z) = 0`.
pub fn g_kernel(t: f64, z: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let z = z.abs();
    let s = (2.0 * t).sqrt();
    (2.0 * t / PI).sqrt() * (-(z * z) / (2.0 * t)).exp() - z * libm::erfc(z / s)
}

/// A symmetric, atom-free measure on `[-alpha, alpha]` and the discretisation
/// used to solve its Volterra equation.
#[derive(Debug, Clone)]
pub struct VolterraProblem {
    measure: Measure,
    alpha: f64,
    nodes_per_half: usize,
    t_max: f64,
    tol: f64,
    rule: Vec<(f64, f64)>,
}

impl VolterraProblem {
    /// `nodes_per_half` intervals subdivide `[0, alpha]`; the barrier is
    /// searched in `[0, t_max]`.
    pub fn new(measure: Measure, nodes_per_half: usize, t_max: f64) -> Result<Self, VolterraError> {
        if !measure.is_atom_free() {
            return Err(VolterraError::Atoms);
        }
        let (lo, hi) = measure.support();
        if !(hi > 0.0) || (lo + hi).abs() > 1e-9 * hi {
            return Err(VolterraError::Support(lo, hi));
        }
        if nodes_per_half < 2 {
            return Err(VolterraError::Invalid(
                "need at least two nodes per half-axis".into(),
            ));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(VolterraError::Invalid(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        let alpha = hi;
        let probe = 4 * nodes_per_half;
        for k in 0..=probe {
            let x = alpha * k as f64 / probe as f64;
            let (left, right) = (measure.density_at(x), measure.density_at(-x));
            if (left - right).abs() > 1e-9 * (1.0 + left.abs()) {
                return Err(VolterraError::Asymmetric { x, left, right });
            }
        }
        Ok(VolterraProblem {
            measure,
            alpha,
            nodes_per_half,
            t_max,
            tol: 1e-8 * t_max,
            rule: gauss_legendre_unit(GAUSS_POINTS),
        })
    }

    /// Overrides the bisection tolerance (default `1e-8 t_max`).
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spacing(&self) -> f64 {
        self.alpha / self.nodes_per_half as f64
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    fn node(&self, k: usize) -> f64 {
        if k == self.nodes_per_half {
            self.alpha
        } else {
            k as f64 * self.spacing()
        }
    }

    /// Residual `g(r, x) - I(r) - (v_0(x) - v_mu(x))` at node `k`, given the
    /// barrier values `outer[m]` for `m > k`.
    fn residual(&self, k: usize, r: f64, outer: &[f64], density: &[f64]) -> f64 {
        let x = self.node(k);
        g_kernel(r, x) - self.integral(k, r, outer, density) - self.gap(x)
    }

    fn gap(&self, x: f64) -> f64 {
        -x.abs() - self.measure.potential(x)
    }

    /// Integral over `|y| > x`, both signs of `y` at once, with `r` and the
    /// density interpolated linearly between nodes (the node `k` itself
    /// carries the trial value `r`). Gauss-Legendre on every cell; the cell
    /// touching `y = x` is mapped by `y = x + h u^2`, which absorbs the
    /// square-root behaviour of the integrand there.
    fn integral(&self, k: usize, r: f64, outer: &[f64], density: &[f64]) -> f64 {
        let x = self.node(k);
        let n = self.nodes_per_half;
        let rule = &self.rule;
        let mut acc = 0.0;
        for m in k..n {
            let (y0, y1) = (self.node(m), self.node(m + 1));
            let h = y1 - y0;
            let r0 = if m == k { r } else { outer[m] };
            let r1 = outer[m + 1];
            let (f0, f1) = (density[m], density[m + 1]);
            let mut cell = 0.0;
            for &(u, w) in rule {
                // u in (0, 1)
                let (theta, jac) = if m == k { (u * u, 2.0 * u) } else { (u, 1.0) };
                let y = y0 + h * theta;
                let s = r - (r0 + (r1 - r0) * theta);
                if s <= 0.0 {
                    continue;
                }
                let f = f0 + (f1 - f0) * theta;
                cell += w * jac * f * (g_kernel(s, x - y) + g_kernel(s, x + y));
            }
            acc += h * cell;
        }
        acc
    }

    /// Solves for the barrier on `xs = -alpha, .., alpha` (symmetric nodes).
    pub fn solve(&self) -> Result<VolterraSolution, VolterraError> {
        let n = self.nodes_per_half;
        let density: Vec<f64> = (0..=n)
            .map(|m| self.measure.density_at(self.node(m)))
            .collect();
        let mut r = vec![0.0; n + 1];
        let mut residuals = vec![0.0; n + 1];
        for k in (0..n).rev() {
            let x = self.node(k);
            let lo = r[k + 1];
            let f_lo = self.residual(k, lo, &r, &density);
            let noise = PLATEAU_TOL * (1.0 + self.gap(x).abs());
            if f_lo > 0.0 {
                if f_lo <= noise {
                    r[k] = lo;
                    residuals[k] = f_lo;
                    continue;
                }
                return Err(VolterraError::NonMonotone {
                    x,
                    outer: lo,
                    residual: f_lo,
                });
            }
            let hi = self.t_max;
            let f_hi = self.residual(k, hi, &r, &density);
            if f_hi < 0.0 {
                // Past the top of the barrier every path has stopped and the
                // residual is flat in r up to discretisation noise.
                if f_lo >= -noise {
                    r[k] = lo;
                    residuals[k] = f_lo;
                    continue;
                }
                return Err(VolterraError::Bracket {
                    x,
                    r_low: lo,
                    low: f_lo,
                    r_high: hi,
                    high: f_hi,
                });
            }
            let (mut a, mut b) = (lo, hi);
            while b - a > self.tol {
                let mid = 0.5 * (a + b);
                if self.residual(k, mid, &r, &density) <= 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            r[k] = 0.5 * (a + b);
            residuals[k] = self.residual(k, r[k], &r, &density);
        }

        let mut xs = Vec::with_capacity(2 * n + 1);
        let mut values = Vec::with_capacity(2 * n + 1);
        for k in (1..=n).rev() {
            xs.push(-self.node(k));
            values.push(BarrierTime::At(r[k]));
        }
        for (k, &rk) in r.iter().enumerate() {
            xs.push(self.node(k));
            values.push(BarrierTime::At(rk));
        }
        let barrier = Barrier::new(xs, values, self.t_max, 0.0)
            .expect("symmetric nodes are sorted and values lie in [0, t_max]")
            .regularize()
            .expect("r vanishes at the support edges");
        Ok(VolterraSolution {
            barrier,
            half_values: r,
            residuals,
        })
    }
}

/// Output of [`VolterraProblem::solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub barrier: Barrier,
    /// `r` at the nodes `0, h, .., alpha`.
    pub half_values: Vec<f64>,
    /// Equation residual at the same nodes.
    pub residuals: Vec<f64>,
}

impl VolterraSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}
