//! Explicit finite-difference scheme for the Root obstacle problem.
//!
//! On the mesh `t_n = n dt`, `x_j = a + j dx` the discrete solution is
//!
//! ```text
//! u(0, x_j)       = -|x_j|
//! u(t_{n+1}, x_j) = max(v(x_j), S[u](t_n, x_j))
//! ```
//!
//! where `S` is one explicit heat step with coefficient `dt / (2 dx^2)` in the
//! interior, and `S = -|x_j|` on the first step and on the two boundary
//! columns. Under `dt < dx^2` every coefficient of `S` is non-negative, so the
//! scheme is monotone: it preserves ordering of data and `u` decreases in time.

use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;

use crate::barrier::{default_contact_tol, Barrier, BarrierTime};
use crate::exec::Execution;
use crate::measure::Measure;

/// Rows narrower than this are updated sequentially even in parallel mode;
/// below it the per-step synchronisation costs more than the update.
pub const PARALLEL_ROW_MIN: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("CFL condition violated: dt = {dt} is not below dx^2 = {dx2}")]
    Cfl { dt: f64, dx2: f64 },
    #[error("support [{lo}, {hi}] of the measure is not strictly inside the domain ({a}, {b})")]
    Support { lo: f64, hi: f64, a: f64, b: f64 },
    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },
}

/// Uniform time-space mesh on `[0, T] x [a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverGrid {
    a: f64,
    b: f64,
    horizon: f64,
    nx: usize,
    nt: usize,
}

impl SolverGrid {
    pub fn new(a: f64, b: f64, horizon: f64, nx: usize, nt: usize) -> Result<Self, PdeError> {
        if !(a.is_finite() && b.is_finite() && a < 0.0 && b > 0.0) {
            return Err(PdeError::Grid(format!(
                "need a < 0 < b, got a = {a}, b = {b}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(PdeError::Grid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if nx < 2 || nt < 1 {
            return Err(PdeError::Grid(format!(
                "need nx >= 2 and nt >= 1, got nx = {nx}, nt = {nt}"
            )));
        }
        Ok(SolverGrid {
            a,
            b,
            horizon,
            nx,
            nt,
        })
    }

    /// Builds a grid from target step sizes; the counts are rounded to the
    /// nearest integer.
    pub fn with_steps(a: f64, b: f64, horizon: f64, dx: f64, dt: f64) -> Result<Self, PdeError> {
        if !(dx > 0.0 && dt > 0.0) {
            return Err(PdeError::Grid("step sizes must be positive".into()));
        }
        let nx = ((b - a) / dx).round() as usize;
        let nt = (horizon / dt).round() as usize;
        SolverGrid::new(a, b, horizon, nx, nt)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.nx as f64
    }
    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }
    pub fn x(&self, j: usize) -> f64 {
        if j == self.nx {
            self.b
        } else {
            self.a + j as f64 * self.dx()
        }
    }
    pub fn t(&self, n: usize) -> f64 {
        if n == self.nt {
            self.horizon
        } else {
            n as f64 * self.dt()
        }
    }

    /// The strict CFL condition `dt < dx^2`.
    pub fn cfl_check(&self) -> Result<(), PdeError> {
        let (dt, dx) = (self.dt(), self.dx());
        if dt < dx * dx {
            Ok(())
        } else {
            Err(PdeError::Cfl { dt, dx2: dx * dx })
        }
    }

    /// Image grid for the scaled problem: `sqrt(lambda) [a, b]`, horizon
    /// `lambda T`, same node counts.
    pub fn scaled(&self, lambda: f64) -> Result<SolverGrid, PdeError> {
        if !(lambda > 0.0) {
            return Err(PdeError::Grid(format!(
                "scale must be positive, got {lambda}"
            )));
        }
        let s = lambda.sqrt();
        SolverGrid::new(
            s * self.a,
            s * self.b,
            lambda * self.horizon,
            self.nx,
            self.nt,
        )
    }

    fn check_support(&self, m: &Measure) -> Result<(), PdeError> {
        let (lo, hi) = m.support();
        if lo > self.a && hi < self.b {
            Ok(())
        } else {
            Err(PdeError::Support {
                lo,
                hi,
                a: self.a,
                b: self.b,
            })
        }
    }
}

/// Discrete solution on every node of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    grid: SolverGrid,
    values: Vec<f64>,
    obstacle: Vec<f64>,
    measure_id: String,
}

impl ValueField {
    pub fn grid(&self) -> &SolverGrid {
        &self.grid
    }

    /// `u(t_n, x_j)`.
    pub fn value(&self, n: usize, j: usize) -> f64 {
        self.values[n * (self.grid.nx + 1) + j]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.grid.nx + 1;
        &self.values[n * w..(n + 1) * w]
    }

    /// Potential `v(x_j)` on the grid columns.
    pub fn obstacle(&self) -> &[f64] {
        &self.obstacle
    }

    pub fn measure_id(&self) -> &str {
        &self.measure_id
    }

    /// CSV with header `t,x,u,v`, one row per node, time-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut s = String::from("t,x,u,v\n");
        for n in 0..=self.grid.nt {
            let t = self.grid.t(n);
            for j in 0..=self.grid.nx {
                let _ = writeln!(
                    s,
                    "{t},{},{},{}",
                    self.grid.x(j),
                    self.value(n, j),
                    self.obstacle[j]
                );
            }
            if s.len() > 1 << 20 {
                out.write_all(s.as_bytes())?;
                s.clear();
            }
        }
        out.write_all(s.as_bytes())
    }
}

/// Time stepper shared by the full-field and streaming solvers.
struct Stepper<'a> {
    grid: SolverGrid,
    obstacle: &'a [f64],
    initial: Vec<f64>,
    coeff: f64,
    exec: Execution,
}

impl<'a> Stepper<'a> {
    fn new(grid: SolverGrid, obstacle: &'a [f64], exec: Execution) -> Self {
        let initial = (0..=grid.nx).map(|j| -grid.x(j).abs()).collect();
        let coeff = grid.dt() / (2.0 * grid.dx() * grid.dx());
        Stepper {
            grid,
            obstacle,
            initial,
            coeff,
            exec,
        }
    }

    /// Computes row `n + 1` from row `n`.
    fn step(&self, n: usize, prev: &[f64], next: &mut [f64]) {
        let nx = self.grid.nx;
        let v = self.obstacle;
        if n == 0 {
            for j in 0..=nx {
                next[j] = v[j].max(self.initial[j]);
            }
            return;
        }
        next[0] = v[0].max(self.initial[0]);
        next[nx] = v[nx].max(self.initial[nx]);
        let c = self.coeff;
        let interior = |j: usize| {
            let heat = prev[j] + c * (prev[j + 1] - 2.0 * prev[j] + prev[j - 1]);
            v[j].max(heat)
        };
        let exec = if nx + 1 >= PARALLEL_ROW_MIN {
            self.exec
        } else {
            Execution::Sequential
        };
        exec.fill_indexed(&mut next[1..nx], 1, interior);
    }
}

fn prepare(m: &Measure, grid: &SolverGrid) -> Result<Vec<f64>, PdeError> {
    grid.cfl_check()?;
    grid.check_support(m)?;
    Ok((0..=grid.nx).map(|j| m.potential(grid.x(j))).collect())
}

/// Solves the obstacle problem and stores the whole field.
pub fn solve_obstacle(m: &Measure, grid: &SolverGrid) -> Result<ValueField, PdeError> {
    solve_obstacle_with(m, grid, Execution::default(), "")
}

pub fn solve_obstacle_with(
    m: &Measure,
    grid: &SolverGrid,
    exec: Execution,
    measure_id: &str,
) -> Result<ValueField, PdeError> {
    let obstacle = prepare(m, grid)?;
    let w = grid.nx + 1;
    let mut values = vec![0.0; (grid.nt + 1) * w];
    {
        let stepper = Stepper::new(*grid, &obstacle, exec);
        values[..w].copy_from_slice(&stepper.initial);
        for n in 0..grid.nt {
            let (done, rest) = values.split_at_mut((n + 1) * w);
            let prev = &done[n * w..];
            let next = &mut rest[..w];
            stepper.step(n, prev, next);
            if next.iter().any(|u| !u.is_finite()) {
                return Err(PdeError::NonFinite { step: n + 1 });
            }
        }
    }
    Ok(ValueField {
        grid: *grid,
        values,
        obstacle,
        measure_id: measure_id.to_string(),
    })
}

/// Result of a streaming solve: the barrier plus contact statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamingSolve {
    pub barrier: Barrier,
    /// Contact tolerance used for extraction.
    pub contact_tol: f64,
    /// Number of grid columns in contact at the horizon.
    pub contact_nodes: usize,
    /// Smallest `u - v` over all nodes (obstacle dominance means `>= 0`).
    pub min_gap: f64,
}

/// Solves the obstacle problem keeping only two rows and records the first
/// contact time `min{t_n : u(t_n, x_j) - v(x_j) <= eps}` of every column.
/// `eps = None` selects [`default_contact_tol`]. The returned barrier is not
/// regularized.
pub fn solve_barrier(
    m: &Measure,
    grid: &SolverGrid,
    eps: Option<f64>,
    exec: Execution,
) -> Result<StreamingSolve, PdeError> {
    let obstacle = prepare(m, grid)?;
    let eps = eps.unwrap_or_else(|| default_contact_tol(&obstacle));
    let stepper = Stepper::new(*grid, &obstacle, exec);
    let w = grid.nx + 1;
    let mut prev = stepper.initial.clone();
    let mut next = vec![0.0; w];
    let mut first = vec![BarrierTime::Never; w];
    let mut min_gap = f64::INFINITY;

    let mut record = |n: usize, row: &[f64], first: &mut [BarrierTime]| {
        for j in 0..w {
            let gap = row[j] - obstacle[j];
            min_gap = min_gap.min(gap);
            if first[j].is_never() && gap <= eps {
                first[j] = BarrierTime::At(grid.t(n));
            }
        }
    };
    record(0, &prev, &mut first);
    for n in 0..grid.nt {
        stepper.step(n, &prev, &mut next);
        if next.iter().any(|u| !u.is_finite()) {
            return Err(PdeError::NonFinite { step: n + 1 });
        }
        record(n + 1, &next, &mut first);
        std::mem::swap(&mut prev, &mut next);
    }
    let contact_nodes = (0..w).filter(|&j| prev[j] - obstacle[j] <= eps).count();
    let xs = (0..w).map(|j| grid.x(j)).collect();
    let barrier = Barrier::new(xs, first, grid.horizon, grid.dt())
        .expect("grid abscissae are sorted and times lie in [0, T]")
        .with_contact_tol(eps);
    Ok(StreamingSolve {
        barrier,
        contact_tol: eps,
        contact_nodes,
        min_gap,
    })
}

/// Solves `mu_lambda` for every `lambda` on its own grid. The solves are
/// independent and run concurrently under `Execution::Parallel`; the output
/// order follows `jobs`.
pub fn solve_family(
    base: &Measure,
    jobs: &[(f64, SolverGrid)],
    eps: Option<f64>,
    exec: Execution,
) -> Vec<Result<StreamingSolve, PdeError>> {
    exec.map_indexed(jobs.len(), |i| {
        let (lambda, grid) = jobs[i];
        let m = base
            .scale(lambda)
            .map_err(|e| PdeError::Grid(e.to_string()))?;
        solve_barrier(&m, &grid, eps, Execution::Sequential)
    })
}
