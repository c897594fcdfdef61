//! Sampled Root barriers.
//!
//! A barrier is stored through its barrier function `r`, sampled on a sorted
//! set of abscissae: the barrier itself is the epigraph `{(t, x) : t >= r(x)}`.
//! Points that are not reached within the solve horizon carry the
//! [`BarrierTime::Never`] sentinel.

use std::fmt::Write as _;
use std::io::{Read, Write};

use thiserror::Error;

use crate::pde::ValueField;

/// Relative contact tolerance: `eps = CONTACT_TOL_SCALE * (1 + max |v|)`.
pub const CONTACT_TOL_SCALE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BarrierError {
    #[error("barrier needs at least one abscissa")]
    Empty,
    #[error("abscissae must be finite and strictly increasing (at index {0})")]
    Abscissae(usize),
    #[error("abscissae and values have different lengths ({0} vs {1})")]
    Length(usize, usize),
    #[error("barrier value {value} at x = {x} is outside [0, {horizon}]")]
    Value { x: f64, value: f64, horizon: f64 },
    #[error("no zero of the barrier function on the {0} side of the origin; enlarge the grid")]
    NoZero(&'static str),
    #[error("scale parameter must be positive, got {0}")]
    Scale(f64),
    #[error("x = {x} is outside the sampled range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("malformed barrier CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Value of a barrier function: a first-contact time or "not hit".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierTime {
    At(f64),
    Never,
}

impl BarrierTime {
    pub fn is_never(self) -> bool {
        matches!(self, BarrierTime::Never)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            BarrierTime::At(t) => Some(t),
            BarrierTime::Never => None,
        }
    }

    /// The time as a float, `+inf` for [`BarrierTime::Never`].
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    fn scaled(self, lambda: f64) -> Self {
        match self {
            BarrierTime::At(t) => BarrierTime::At(lambda * t),
            BarrierTime::Never => BarrierTime::Never,
        }
    }
}

/// A barrier function sampled on a grid, with the metadata it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    xs: Vec<f64>,
    r: Vec<BarrierTime>,
    horizon: f64,
    time_step: f64,
    contact_tol: f64,
    regularized: bool,
}

impl Barrier {
    /// Builds a barrier from samples. `time_step` is the resolution of the
    /// contact times (zero for synthetic barriers).
    pub fn new(
        xs: Vec<f64>,
        r: Vec<BarrierTime>,
        horizon: f64,
        time_step: f64,
    ) -> Result<Self, BarrierError> {
        if xs.is_empty() {
            return Err(BarrierError::Empty);
        }
        if xs.len() != r.len() {
            return Err(BarrierError::Length(xs.len(), r.len()));
        }
        for i in 0..xs.len() {
            if !xs[i].is_finite() || (i > 0 && xs[i] <= xs[i - 1]) {
                return Err(BarrierError::Abscissae(i));
            }
            if let BarrierTime::At(t) = r[i] {
                if !(t >= 0.0 && t <= horizon) {
                    return Err(BarrierError::Value {
                        x: xs[i],
                        value: t,
                        horizon,
                    });
                }
            }
        }
        Ok(Barrier {
            xs,
            r,
            horizon,
            time_step,
            contact_tol: 0.0,
            regularized: false,
        })
    }

    /// Convenience constructor: `NaN` or `inf` entries become `Never`.
    pub fn from_values(
        xs: Vec<f64>,
        r: &[f64],
        horizon: f64,
        time_step: f64,
    ) -> Result<Self, BarrierError> {
        let r = r
            .iter()
            .map(|&t| {
                if t.is_finite() {
                    BarrierTime::At(t)
                } else {
                    BarrierTime::Never
                }
            })
            .collect();
        Barrier::new(xs, r, horizon, time_step)
    }

    /// The identically zero barrier (stop immediately), e.g. for `delta_0`.
    pub fn zero(xs: Vec<f64>, horizon: f64) -> Result<Self, BarrierError> {
        let n = xs.len();
        let mut b = Barrier::new(xs, vec![BarrierTime::At(0.0); n], horizon, 0.0)?;
        b.regularized = true;
        Ok(b)
    }

    pub(crate) fn with_contact_tol(mut self, eps: f64) -> Self {
        self.contact_tol = eps;
        self
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[BarrierTime] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn contact_tol(&self) -> f64 {
        self.contact_tol
    }

    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    /// Smallest spacing between consecutive abscissae.
    pub fn spacing(&self) -> f64 {
        self.xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest finite value of the barrier function.
    pub fn max_finite(&self) -> Option<f64> {
        self.r.iter().filter_map(|t| t.finite()).reduce(f64::max)
    }

    /// First zeros of `r` on each side of the origin, scanning outward.
    pub fn zero_bracket(&self) -> Result<(f64, f64), BarrierError> {
        let (lo, hi) = self.zero_bracket_indices()?;
        Ok((self.xs[lo], self.xs[hi]))
    }

    fn zero_bracket_indices(&self) -> Result<(usize, usize), BarrierError> {
        let is_zero = |i: usize| self.r[i] == BarrierTime::At(0.0);
        let first_nonneg = self.xs.partition_point(|&x| x < 0.0);
        let last_nonpos = self.xs.partition_point(|&x| x <= 0.0);
        let left = (0..last_nonpos)
            .rev()
            .find(|&i| is_zero(i))
            .ok_or(BarrierError::NoZero("left"))?;
        let right = (first_nonneg..self.xs.len())
            .find(|&i| is_zero(i))
            .ok_or(BarrierError::NoZero("right"))?;
        Ok((left, right))
    }

    /// Sets `r` to zero outside `[x_-, x_+]`, the first zeros on each side of
    /// the origin.
    pub fn regularize(&self) -> Result<Barrier, BarrierError> {
        let (lo, hi) = self.zero_bracket_indices()?;
        let mut out = self.clone();
        for (i, t) in out.r.iter_mut().enumerate() {
            if i < lo || i > hi {
                *t = BarrierTime::At(0.0);
            }
        }
        out.regularized = true;
        Ok(out)
    }

    /// Self-similar image `r_lambda(x) = lambda r(x / sqrt(lambda))`: the
    /// abscissae are multiplied by `sqrt(lambda)` and the times by `lambda`.
    pub fn scale(&self, lambda: f64) -> Result<Barrier, BarrierError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(BarrierError::Scale(lambda));
        }
        let s = lambda.sqrt();
        Ok(Barrier {
            xs: self.xs.iter().map(|x| s * x).collect(),
            r: self.r.iter().map(|t| t.scaled(lambda)).collect(),
            horizon: lambda * self.horizon,
            time_step: lambda * self.time_step,
            contact_tol: s * self.contact_tol,
            regularized: self.regularized,
        })
    }

    /// Nearest-node value at `x`. An exact tie between two nodes resolves to
    /// the smaller barrier time (`Never` counts as the largest).
    pub fn eval(&self, x: f64) -> Result<BarrierTime, BarrierError> {
        let (lo, hi) = (self.xs[0], self.xs[self.xs.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(BarrierError::OutOfRange { x, lo, hi });
        }
        let k = self.xs.partition_point(|&p| p < x);
        if k == 0 {
            return Ok(self.r[0]);
        }
        if self.xs[k] == x {
            return Ok(self.r[k]);
        }
        let (dl, dr) = (x - self.xs[k - 1], self.xs[k] - x);
        let tie = (dl - dr).abs() <= 1e-12 * (self.xs[k] - self.xs[k - 1]);
        Ok(if tie {
            if self.r[k - 1].as_f64() <= self.r[k].as_f64() {
                self.r[k - 1]
            } else {
                self.r[k]
            }
        } else if dl < dr {
            self.r[k - 1]
        } else {
            self.r[k]
        })
    }

    /// Checks that `x -> r(x)/x^2` is non-decreasing on the negative axis and
    /// non-increasing on the positive axis.
    ///
    /// Adjacent sampled points with `|x| > exclusion_radius` are compared. For
    /// a pair with inner point `i` (closer to the origin) and outer point `o`,
    /// the condition fails when `r(o) > r(i) (o/i)^2 + slack`. `Never` is
    /// treated as `+inf`, so `Never` at the inner point always passes and
    /// `Never` at the outer point after a finite inner value fails.
    pub fn check_scaling_condition(&self, opts: ScalingCheck) -> ScalingReport {
        let mut report = ScalingReport {
            holds: true,
            witness: None,
            pairs_checked: 0,
        };
        let eligible = |x: f64| x.abs() > opts.exclusion_radius;
        // Negative side walks right (towards 0), positive side walks right
        // (away from 0); in both cases `a < b` are adjacent eligible samples.
        for w in (0..self.xs.len()).collect::<Vec<_>>().windows(2) {
            let (ia, ib) = (w[0], w[1]);
            let (xa, xb) = (self.xs[ia], self.xs[ib]);
            if !eligible(xa) || !eligible(xb) || (xa < 0.0) != (xb < 0.0) {
                continue;
            }
            let (inner, outer) = if xb < 0.0 { (ib, ia) } else { (ia, ib) };
            report.pairs_checked += 1;
            let ok = match (self.r[inner], self.r[outer]) {
                (BarrierTime::Never, _) => true,
                (BarrierTime::At(_), BarrierTime::Never) => false,
                (BarrierTime::At(ri), BarrierTime::At(ro)) => {
                    let ratio = self.xs[outer] / self.xs[inner];
                    ro <= ri * ratio * ratio + opts.slack
                }
            };
            if !ok {
                report.holds = false;
                report.witness = Some((xa, xb));
                break;
            }
        }
        report
    }

    /// Writes the barrier as CSV with header `x,r,is_never` (plus a
    /// `method` column when `method` is given). Metadata goes into a leading
    /// `#` comment line. Floats use shortest round-trip formatting.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        method: Option<&str>,
    ) -> Result<(), BarrierError> {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# horizon={},time_step={},contact_tol={},regularized={}",
            self.horizon, self.time_step, self.contact_tol, self.regularized as u8
        );
        s.push_str("x,r,is_never");
        if method.is_some() {
            s.push_str(",method");
        }
        s.push('\n');
        for (x, t) in self.xs.iter().zip(&self.r) {
            match t {
                BarrierTime::At(v) => {
                    let _ = write!(s, "{x},{v},0");
                }
                BarrierTime::Never => {
                    let _ = write!(s, "{x},,1");
                }
            }
            if let Some(m) = method {
                let _ = write!(s, ",method={m}");
            }
            s.push('\n');
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Reads the format produced by [`Barrier::write_csv`]. The metadata line
    /// is optional; without it the horizon is the largest finite value.
    pub fn read_csv<R: Read>(mut input: R) -> Result<Barrier, BarrierError> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let bad = |m: String| BarrierError::Csv(m);

        let mut meta = Meta::default();
        for line in text.lines().filter(|l| l.starts_with('#')) {
            meta.parse(line.trim_start_matches('#')).map_err(bad)?;
        }

        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(false)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 3 || names[..3] != ["x", "r", "is_never"] {
            return Err(bad(format!(
                "expected header x,r,is_never, found {}",
                names.join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut r = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |field: &str| -> Result<f64, BarrierError> {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {}: cannot parse `{field}`", line + 1)))
            };
            xs.push(num(&rec[0])?);
            match rec[2].trim() {
                "1" => {
                    if !rec[1].trim().is_empty() {
                        return Err(bad(format!(
                            "row {}: r must be empty when is_never=1",
                            line + 1
                        )));
                    }
                    r.push(BarrierTime::Never);
                }
                "0" => r.push(BarrierTime::At(num(&rec[1])?)),
                other => {
                    return Err(bad(format!(
                        "row {}: is_never must be 0 or 1, found `{other}`",
                        line + 1
                    )))
                }
            }
        }
        let horizon = meta
            .horizon
            .unwrap_or_else(|| r.iter().filter_map(|t| t.finite()).fold(0.0, f64::max));
        let mut b = Barrier::new(xs, r, horizon, meta.time_step.unwrap_or(0.0))?;
        b.contact_tol = meta.contact_tol.unwrap_or(0.0);
        b.regularized = meta.regularized.unwrap_or(false);
        Ok(b)
    }
}

#[derive(Default)]
struct Meta {
    horizon: Option<f64>,
    time_step: Option<f64>,
    contact_tol: Option<f64>,
    regularized: Option<bool>,
}

impl Meta {
    fn parse(&mut self, line: &str) -> Result<(), String> {
        for kv in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("bad metadata `{kv}`"))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| format!("bad metadata value `{kv}`"))
            };
            match k {
                "horizon" => self.horizon = Some(num()?),
                "time_step" => self.time_step = Some(num()?),
                "contact_tol" => self.contact_tol = Some(num()?),
                "regularized" => self.regularized = Some(v == "1" || v == "true"),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Options for [`Barrier::check_scaling_condition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    /// Samples with `|x| <= exclusion_radius` are skipped.
    pub exclusion_radius: f64,
    /// Allowed excess, in time units.
    pub slack: f64,
}

impl ScalingCheck {
    /// Exclusion radius of two grid cells and a slack of two time steps.
    pub fn for_barrier(b: &Barrier) -> Self {
        let dx = if b.len() > 1 { b.spacing() } else { 0.0 };
        ScalingCheck {
            exclusion_radius: 2.0 * dx,
            slack: 2.0 * b.time_step,
        }
    }

    pub fn exact() -> Self {
        ScalingCheck {
            exclusion_radius: 0.0,
            slack: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub holds: bool,
    /// First violating adjacent pair `(x1, x2)` with `x1 < x2`.
    pub witness: Option<(f64, f64)>,
    pub pairs_checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    pub included: bool,
    /// `max(r_outer - r_inner, 0)` over the common abscissae.
    pub max_violation: f64,
    /// Abscissa where the largest violation occurs.
    pub witness: Option<f64>,
    pub tolerance: f64,
}

/// Reads the barrier off a solved value field: `r(x_j)` is the first grid
/// time with `u - v <= eps`, `Never` if there is none.
pub fn extract_barrier(field: &ValueField, eps: f64) -> Barrier {
    let grid = field.grid();
    let nx = grid.nx();
    let mut r = vec![BarrierTime::Never; nx + 1];
    for (j, slot) in r.iter_mut().enumerate() {
        let v = field.obstacle()[j];
        if let Some(n) = (0..=grid.nt()).find(|&n| field.value(n, j) - v <= eps) {
            *slot = BarrierTime::At(grid.t(n));
        }
    }
    let xs = (0..=nx).map(|j| grid.x(j)).collect();
    Barrier::new(xs, r, grid.horizon(), grid.dt())
        .expect("grid abscissae are sorted and times lie in [0, T]")
        .with_contact_tol(eps)
}

/// Default contact tolerance for a given obstacle.
pub fn default_contact_tol(obstacle: &[f64]) -> f64 {
    let vmax = obstacle.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    CONTACT_TOL_SCALE * (1.0 + vmax)
}

/// Tests `R_inner ⊂ R_outer`, i.e. `r_inner >= r_outer - tol` at every
/// abscissa of either barrier inside the common range. Values between nodes
/// come from [`Barrier::eval`].
pub fn barrier_inclusion(inner: &Barrier, outer: &Barrier, tol: f64) -> InclusionReport {
    let lo = inner.xs[0].max(outer.xs[0]);
    let hi = inner.xs[inner.len() - 1].min(outer.xs[outer.len() - 1]);
    let mut points: Vec<f64> = inner
        .xs
        .iter()
        .chain(outer.xs.iter())
        .copied()
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut max_violation = 0.0_f64;
    let mut witness = None;
    for x in points {
        let ri = inner.eval(x).expect("inside common range");
        let ro = outer.eval(x).expect("inside common range");
        let gap = match (ri, ro) {
            (BarrierTime::Never, _) => 0.0,
            (BarrierTime::At(_), BarrierTime::Never) => f64::INFINITY,
            (BarrierTime::At(a), BarrierTime::At(b)) => b - a,
        };
        if gap > max_violation {
            max_violation = gap;
            witness = Some(x);
        }
    }
    InclusionReport {
        included: max_violation <= tol,
        max_violation,
        witness,
        tolerance: tol,
    }
}

/// Inclusion tolerance of two time steps of the coarser barrier.
pub fn default_inclusion_tol(a: &Barrier, b: &Barrier) -> f64 {
    2.0 * a.time_step.max(b.time_step)
}

/// Largest `|r_a - r_b|` over the abscissae of `a` that lie in the range of
/// `b`. Returns `inf` when one is `Never` and the other is not.
pub fn max_abs_difference(a: &Barrier, b: &Barrier) -> (f64, Option<f64>) {
    let (lo, hi) = (b.xs[0], b.xs[b.len() - 1]);
    let mut worst = 0.0_f64;
    let mut at = None;
    for (&x, &ra) in a.xs.iter().zip(&a.r) {
        if x < lo || x > hi {
            continue;
        }
        let rb = b.eval(x).expect("inside range");
        let d = match (ra, rb) {
            (BarrierTime::Never, BarrierTime::Never) => 0.0,
            (BarrierTime::At(p), BarrierTime::At(q)) => (p - q).abs(),
            _ => f64::INFINITY,
        };
        if d > worst {
            worst = d;
            at = Some(x);
        }
    }
    (worst, at)
}
