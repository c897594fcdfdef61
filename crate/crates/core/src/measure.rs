//! Centered probability measures on the line and their potential functions.
//!
//! A [`Measure`] is a finite list of atoms plus a list of density panels. Each
//! panel carries uniformly spaced samples of the density, interpolated
//! linearly in between, so that masses, moments, the distribution function and
//! the potential `v(x) = -int |x - y| mu(dy)` are all computed in closed form.

use std::fmt::Write as _;

use thiserror::Error;

/// Tolerance on total mass and on the first moment.
pub const MOMENT_TOL: f64 = 1e-9;

/// Number of density samples used by the builders for curved densities.
pub const DEFAULT_PANEL_SAMPLES: usize = 2001;

/// Default truncation of the Gaussian, in standard deviations.
pub const DEFAULT_GAUSSIAN_CUTOFF: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has neither atoms nor density panels")]
    Empty,
    #[error("atom at {position} has mass {mass}, expected a value in (0, 1]")]
    AtomMass { position: f64, mass: f64 },
    #[error("atom positions must be finite and strictly increasing (at index {index})")]
    AtomOrder { index: usize },
    #[error("panel {index} is malformed: {reason}")]
    Panel { index: usize, reason: &'static str },
    #[error("panels must be sorted and disjoint (panel {index} overlaps its predecessor)")]
    PanelOrder { index: usize },
    #[error("total mass is {0}, expected 1")]
    Mass(f64),
    #[error("first moment is {0}, expected 0 (the measure must be centered)")]
    NotCentered(f64),
    #[error("scale parameter must be non-negative, got {0}")]
    NegativeScale(f64),
    #[error("invalid parameter for {measure}: {reason}")]
    Parameter {
        measure: &'static str,
        reason: String,
    },
    #[error("cannot parse measure document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// A density panel on `[left, right]` sampled at `values.len()` equally
/// spaced points (both endpoints included).
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub left: f64,
    pub right: f64,
    pub values: Vec<f64>,
}

impl Panel {
    fn step(&self) -> f64 {
        (self.right - self.left) / (self.values.len() - 1) as f64
    }

    fn node(&self, i: usize) -> f64 {
        if i + 1 == self.values.len() {
            self.right
        } else {
            self.left + i as f64 * self.step()
        }
    }

    /// Iterator over the linear pieces `(y0, y1, f0, f1)`.
    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.values.len() - 1).map(move |i| {
            (
                self.node(i),
                self.node(i + 1),
                self.values[i],
                self.values[i + 1],
            )
        })
    }

    fn density_at(&self, x: f64) -> f64 {
        if x < self.left || x > self.right {
            return 0.0;
        }
        let h = self.step();
        let k = (((x - self.left) / h).floor() as usize).min(self.values.len() - 2);
        let (y0, y1) = (self.node(k), self.node(k + 1));
        let w = ((x - y0) / (y1 - y0)).clamp(0.0, 1.0);
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// Mass and first moment of the linear density through `(y0, f0)`, `(y1, f1)`.
fn piece_moments(y0: f64, y1: f64, f0: f64, f1: f64) -> (f64, f64) {
    let h = y1 - y0;
    let m0 = 0.5 * h * (f0 + f1);
    let m1 = h * (f0 * (2.0 * y0 + y1) + f1 * (y0 + 2.0 * y1)) / 6.0;
    (m0, m1)
}

fn piece_second_moment(y0: f64, y1: f64, f0: f64, f1: f64) -> f64 {
    // int_{y0}^{y1} y^2 (f0 + (f1 - f0)(y - y0)/h) dy, expanded exactly.
    let h = y1 - y0;
    let slope = (f1 - f0) / h;
    let c = f0 - slope * y0;
    let p3 = (y1.powi(3) - y0.powi(3)) / 3.0;
    let p4 = (y1.powi(4) - y0.powi(4)) / 4.0;
    c * p3 + slope * p4
}

/// `int |x - y| f(y) dy` over one linear piece.
fn piece_abs_moment(x: f64, y0: f64, y1: f64, f0: f64, f1: f64) -> f64 {
    if x <= y0 {
        let (m0, m1) = piece_moments(y0, y1, f0, f1);
        m1 - x * m0
    } else if x >= y1 {
        let (m0, m1) = piece_moments(y0, y1, f0, f1);
        x * m0 - m1
    } else {
        let fx = f0 + (f1 - f0) * (x - y0) / (y1 - y0);
        let (l0, l1) = piece_moments(y0, x, f0, fx);
        let (r0, r1) = piece_moments(x, y1, fx, f1);
        (x * l0 - l1) + (r1 - x * r0)
    }
}

/// Mass of the piece on `[y0, min(x, y1)]`.
fn piece_mass_below(x: f64, y0: f64, y1: f64, f0: f64, f1: f64) -> f64 {
    if x <= y0 {
        0.0
    } else if x >= y1 {
        0.5 * (y1 - y0) * (f0 + f1)
    } else {
        let fx = f0 + (f1 - f0) * (x - y0) / (y1 - y0);
        0.5 * (x - y0) * (f0 + fx)
    }
}

/// A centered probability measure with bounded support.
///
/// Immutable once built; all invariants are checked by [`Measure::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    atoms: Vec<Atom>,
    panels: Vec<Panel>,
    support: (f64, f64),
}

impl Measure {
    pub fn new(atoms: Vec<Atom>, panels: Vec<Panel>) -> Result<Self, MeasureError> {
        if atoms.is_empty() && panels.is_empty() {
            return Err(MeasureError::Empty);
        }
        for (i, a) in atoms.iter().enumerate() {
            if !a.position.is_finite() || (i > 0 && a.position <= atoms[i - 1].position) {
                return Err(MeasureError::AtomOrder { index: i });
            }
            if !(a.mass > 0.0 && a.mass <= 1.0) {
                return Err(MeasureError::AtomMass {
                    position: a.position,
                    mass: a.mass,
                });
            }
        }
        for (i, p) in panels.iter().enumerate() {
            let bad = |reason| MeasureError::Panel { index: i, reason };
            if !(p.left.is_finite() && p.right.is_finite() && p.left < p.right) {
                return Err(bad("expected finite left < right"));
            }
            if p.values.len() < 2 {
                return Err(bad("needs at least two density samples"));
            }
            if p.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(bad("density samples must be finite and non-negative"));
            }
            if i > 0 && p.left < panels[i - 1].right {
                return Err(MeasureError::PanelOrder { index: i });
            }
        }

        let lo = atoms
            .first()
            .map(|a| a.position)
            .into_iter()
            .chain(panels.first().map(|p| p.left))
            .fold(f64::INFINITY, f64::min);
        let hi = atoms
            .last()
            .map(|a| a.position)
            .into_iter()
            .chain(panels.last().map(|p| p.right))
            .fold(f64::NEG_INFINITY, f64::max);

        let m = Measure {
            atoms,
            panels,
            support: (lo, hi),
        };
        let mass = m.total_mass();
        if (mass - 1.0).abs() > MOMENT_TOL {
            return Err(MeasureError::Mass(mass));
        }
        let mean = m.mean();
        if mean.abs() > MOMENT_TOL {
            return Err(MeasureError::NotCentered(mean));
        }
        Ok(m)
    }

    /// The Dirac mass at the origin.
    pub fn dirac_zero() -> Self {
        Measure {
            atoms: vec![Atom {
                position: 0.0,
                mass: 1.0,
            }],
            panels: Vec::new(),
            support: (0.0, 0.0),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Smallest closed interval containing every atom and panel.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn is_atom_free(&self) -> bool {
        self.atoms.is_empty()
    }

    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.panels.iter().flat_map(Panel::pieces)
    }

    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let dens: f64 = self
            .pieces()
            .map(|(a, b, f, g)| piece_moments(a, b, f, g).0)
            .sum();
        atoms + dens
    }

    pub fn mean(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * a.position).sum();
        let dens: f64 = self
            .pieces()
            .map(|(a, b, f, g)| piece_moments(a, b, f, g).1)
            .sum();
        atoms + dens
    }

    /// `int |y| mu(dy)`.
    pub fn first_absolute_moment(&self) -> f64 {
        -self.potential_raw(0.0)
    }

    /// `int y^2 mu(dy)`.
    pub fn second_moment(&self) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * a.position * a.position)
            .sum();
        let dens: f64 = self
            .pieces()
            .map(|(a, b, f, g)| piece_second_moment(a, b, f, g))
            .sum();
        atoms + dens
    }

    /// Density of the absolutely continuous part at `x` (zero off the panels).
    pub fn density_at(&self, x: f64) -> f64 {
        self.panels.iter().map(|p| p.density_at(x)).sum()
    }

    /// Right-continuous distribution function `mu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .take_while(|a| a.position <= x)
            .map(|a| a.mass)
            .sum();
        (atoms + self.density_mass_below(x)).min(1.0)
    }

    /// Left limit `mu((-inf, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .take_while(|a| a.position < x)
            .map(|a| a.mass)
            .sum();
        (atoms + self.density_mass_below(x)).min(1.0)
    }

    fn density_mass_below(&self, x: f64) -> f64 {
        self.pieces()
            .map(|(a, b, f, g)| piece_mass_below(x, a, b, f, g))
            .sum()
    }

    fn potential_raw(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * (x - a.position).abs())
            .sum();
        let dens: f64 = self
            .pieces()
            .map(|(a, b, f, g)| piece_abs_moment(x, a, b, f, g))
            .sum();
        -(atoms + dens)
    }

    /// Potential function `v(x) = -int |x - y| mu(dy)`.
    ///
    /// Outside the support this is `-|x|` exactly, the tail identity of a
    /// centered measure; inside it is the exact integral of `|x - y|` against
    /// the atoms and the piecewise-linear density.
    pub fn potential(&self, x: f64) -> f64 {
        if x >= self.support.1 || x <= self.support.0 {
            return -x.abs();
        }
        self.potential_raw(x)
    }

    /// Image of the measure under `y -> sqrt(lambda) y`; `lambda = 0` gives
    /// the Dirac mass at the origin.
    pub fn scale(&self, lambda: f64) -> Result<Measure, MeasureError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(MeasureError::NegativeScale(lambda));
        }
        if lambda == 0.0 {
            return Ok(Measure::dirac_zero());
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        let s = lambda.sqrt();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                position: s * a.position,
                mass: a.mass,
            })
            .collect();
        let panels = self
            .panels
            .iter()
            .map(|p| Panel {
                left: s * p.left,
                right: s * p.right,
                values: p.values.iter().map(|v| v / s).collect(),
            })
            .collect();
        Ok(Measure {
            atoms,
            panels,
            support: (s * self.support.0, s * self.support.1),
        })
    }

    /// Serializes to the `atoms = [[pos, mass], ..]` / `panels = [[left,
    /// right, [v0, ..]], ..]` document. Floats are written in shortest
    /// round-trip form, so parsing the output gives back the same bits.
    pub fn to_document(&self) -> String {
        let mut s = String::from("atoms = [");
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "[{:?}, {:?}]", a.position, a.mass);
        }
        s.push_str("]\npanels = [");
        for (i, p) in self.panels.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "[{:?}, {:?}, [", p.left, p.right);
            for (k, v) in p.values.iter().enumerate() {
                if k > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{v:?}");
            }
            s.push_str("]]");
        }
        s.push_str("]\n");
        s
    }

    /// Parses the document produced by [`Measure::to_document`]. Integer
    /// literals are accepted wherever a real is expected; either key may be
    /// omitted.
    pub fn from_document(text: &str) -> Result<Measure, MeasureError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| MeasureError::Parse(e.to_string()))?;
        let perr = |m: &str| MeasureError::Parse(m.to_string());

        let mut atoms = Vec::new();
        if let Some(v) = table.get("atoms") {
            for item in v
                .as_array()
                .ok_or_else(|| perr("`atoms` must be an array"))?
            {
                let pair = item
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| perr("each atom must be [position, mass]"))?;
                atoms.push(Atom {
                    position: real(&pair[0])?,
                    mass: real(&pair[1])?,
                });
            }
        }
        let mut panels = Vec::new();
        if let Some(v) = table.get("panels") {
            for item in v
                .as_array()
                .ok_or_else(|| perr("`panels` must be an array"))?
            {
                let triple = item
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| perr("each panel must be [left, right, [values]]"))?;
                let values = triple[2]
                    .as_array()
                    .ok_or_else(|| perr("panel values must be an array"))?
                    .iter()
                    .map(real)
                    .collect::<Result<Vec<_>, _>>()?;
                panels.push(Panel {
                    left: real(&triple[0])?,
                    right: real(&triple[1])?,
                    values,
                });
            }
        }
        Measure::new(atoms, panels)
    }
}

fn real(v: &toml::Value) -> Result<f64, MeasureError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(MeasureError::Parse(format!(
            "expected a number, found {other}"
        ))),
    }
}

/// The measures used as worked examples: densities on `[-1, 1]`, two- and
/// three-point laws and a truncated Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleMeasure {
    /// Density 1/2 on `[-1, 1]`.
    Uniform,
    /// Density `0.75 sqrt|x|` on `[-1, 1]`.
    SqrtAbs,
    /// Density `|x|` on `[-1, 1]`.
    Abs,
    /// `b/(|a|+b) delta_a + |a|/(|a|+b) delta_b` with `a < 0 < b`.
    TwoPoint { a: f64, b: f64 },
    /// `p delta_{-a} + (1 - 2p) delta_0 + p delta_a` with `a > 0`, `0 < p <= 1/2`.
    ThreePoint { a: f64, p: f64 },
    /// `N(0, sigma^2)` restricted to `[-cutoff sigma, cutoff sigma]` and
    /// renormalised.
    GaussianTruncated { sigma: f64, cutoff: f64 },
}

impl ExampleMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            ExampleMeasure::Uniform => "uniform",
            ExampleMeasure::SqrtAbs => "sqrt_abs",
            ExampleMeasure::Abs => "abs",
            ExampleMeasure::TwoPoint { .. } => "two_point",
            ExampleMeasure::ThreePoint { .. } => "three_point",
            ExampleMeasure::GaussianTruncated { .. } => "gaussian_truncated",
        }
    }

    pub fn build(&self) -> Result<Measure, MeasureError> {
        match *self {
            ExampleMeasure::Uniform => Measure::new(
                Vec::new(),
                vec![Panel {
                    left: -1.0,
                    right: 1.0,
                    values: vec![0.5, 0.5],
                }],
            ),
            // |x| is piecewise linear with a node at 0: three samples are exact.
            ExampleMeasure::Abs => Measure::new(
                Vec::new(),
                vec![Panel {
                    left: -1.0,
                    right: 1.0,
                    values: vec![1.0, 0.0, 1.0],
                }],
            ),
            ExampleMeasure::SqrtAbs => {
                symmetric_panel(1.0, DEFAULT_PANEL_SAMPLES, |y| 0.75 * y.sqrt())
            }
            ExampleMeasure::TwoPoint { a, b } => {
                let param = |reason: &str| MeasureError::Parameter {
                    measure: "two_point",
                    reason: reason.to_string(),
                };
                if !(a < 0.0) || !a.is_finite() {
                    return Err(param("left atom `a` must be negative"));
                }
                if !(b > 0.0) || !b.is_finite() {
                    return Err(param("right atom `b` must be positive"));
                }
                let span = a.abs() + b;
                Measure::new(
                    vec![
                        Atom {
                            position: a,
                            mass: b / span,
                        },
                        Atom {
                            position: b,
                            mass: a.abs() / span,
                        },
                    ],
                    Vec::new(),
                )
            }
            ExampleMeasure::ThreePoint { a, p } => {
                let param = |reason: &str| MeasureError::Parameter {
                    measure: "three_point",
                    reason: reason.to_string(),
                };
                if !(a > 0.0) || !a.is_finite() {
                    return Err(param("`a` must be positive"));
                }
                if !(p > 0.0 && p <= 0.5) {
                    return Err(param("`p` must lie in (0, 1/2]"));
                }
                let mut atoms = vec![Atom {
                    position: -a,
                    mass: p,
                }];
                let middle = 1.0 - 2.0 * p;
                if middle > 0.0 {
                    atoms.push(Atom {
                        position: 0.0,
                        mass: middle,
                    });
                }
                atoms.push(Atom {
                    position: a,
                    mass: p,
                });
                Measure::new(atoms, Vec::new())
            }
            ExampleMeasure::GaussianTruncated { sigma, cutoff } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(MeasureError::Parameter {
                        measure: "gaussian_truncated",
                        reason: "`sigma` must be positive".into(),
                    });
                }
                if !(cutoff > 0.0) || !cutoff.is_finite() {
                    return Err(MeasureError::Parameter {
                        measure: "gaussian_truncated",
                        reason: "`cutoff` must be positive".into(),
                    });
                }
                symmetric_panel(cutoff * sigma, DEFAULT_PANEL_SAMPLES, |y| {
                    (-0.5 * (y / sigma).powi(2)).exp()
                })
            }
        }
    }
}

/// One panel on `[-half, half]` with an odd number of samples of the even
/// function `f(|y|)`, renormalised to unit mass. The samples are exactly
/// symmetric so the first moment vanishes up to rounding.
fn symmetric_panel(
    half: f64,
    samples: usize,
    f: impl Fn(f64) -> f64,
) -> Result<Measure, MeasureError> {
    let samples = samples | 1;
    let mid = (samples - 1) / 2;
    let h = half / mid as f64;
    let mut values: Vec<f64> = (0..samples)
        .map(|i| f((i as f64 - mid as f64).abs() * h))
        .collect();
    let raw = Measure {
        atoms: Vec::new(),
        panels: vec![Panel {
            left: -half,
            right: half,
            values: values.clone(),
        }],
        support: (-half, half),
    };
    let mass = raw.total_mass();
    for v in &mut values {
        *v /= mass;
    }
    // Renormalisation can break the bitwise mirror symmetry; restore it.
    for i in 0..mid {
        values[samples - 1 - i] = values[i];
    }
    Measure::new(
        Vec::new(),
        vec![Panel {
            left: -half,
            right: half,
            values,
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> Measure {
        ExampleMeasure::TwoPoint { a: -1.0, b: 1.0 }
            .build()
            .unwrap()
    }

    /// Midpoint-rule oracle for the density part of the potential.
    fn potential_by_quadrature(m: &Measure, x: f64, n: usize) -> f64 {
        let mut acc = m
            .atoms()
            .iter()
            .map(|a| a.mass * (x - a.position).abs())
            .sum::<f64>();
        for p in m.panels() {
            let h = (p.right - p.left) / n as f64;
            for i in 0..n {
                let y = p.left + (i as f64 + 0.5) * h;
                acc += (x - y).abs() * p.density_at(y) * h;
            }
        }
        -acc
    }

    #[test]
    fn potential_examples() {
        assert_eq!(Measure::dirac_zero().potential(2.0), -2.0);
        assert_eq!(two_point().potential(0.0), -1.0);
        let u = ExampleMeasure::Uniform.build().unwrap();
        assert!((u.potential(0.0) + 0.5).abs() < 1e-15);
        assert_eq!(u.potential(3.0), -3.0);
        assert_eq!(two_point().potential(-3.0), -3.0);
    }

    #[test]
    fn potential_matches_quadrature_oracle() {
        for m in [
            ExampleMeasure::Uniform.build().unwrap(),
            ExampleMeasure::Abs.build().unwrap(),
            ExampleMeasure::SqrtAbs.build().unwrap(),
        ] {
            for &x in &[-0.93, -0.4, 0.0, 0.17, 0.5, 0.999] {
                let oracle = potential_by_quadrature(&m, x, 200_000);
                assert!((m.potential(x) - oracle).abs() < 1e-8, "x={x}");
            }
        }
    }

    #[test]
    fn scale_examples() {
        let m = two_point();
        assert_eq!(m.scale(1.0).unwrap(), m);
        let q = m.scale(0.25).unwrap();
        assert_eq!(
            q.atoms()[0],
            Atom {
                position: -0.5,
                mass: 0.5
            }
        );
        assert_eq!(
            q.atoms()[1],
            Atom {
                position: 0.5,
                mass: 0.5
            }
        );

        let u = ExampleMeasure::Uniform.build().unwrap().scale(4.0).unwrap();
        assert_eq!(u.support(), (-2.0, 2.0));
        assert_eq!(u.panels()[0].values, vec![0.25, 0.25]);
        assert!((u.total_mass() - 1.0).abs() < 1e-15);

        assert_eq!(m.scale(0.0).unwrap(), Measure::dirac_zero());
        assert!(matches!(m.scale(-1.0), Err(MeasureError::NegativeScale(_))));
    }

    #[test]
    fn builder_examples() {
        let m = ExampleMeasure::ThreePoint {
            a: 0.9,
            p: 7.0 / 20.0,
        }
        .build()
        .unwrap();
        let atoms: Vec<(f64, f64)> = m.atoms().iter().map(|a| (a.position, a.mass)).collect();
        assert_eq!(atoms.len(), 3);
        assert_eq!((atoms[0].0, atoms[1].0, atoms[2].0), (-0.9, 0.0, 0.9));
        assert!((atoms[0].1 - 0.35).abs() < 1e-15);
        assert!((atoms[1].1 - 0.30).abs() < 1e-15);
        assert!((atoms[2].1 - 0.35).abs() < 1e-15);

        let u = ExampleMeasure::Uniform.build().unwrap();
        assert_eq!(u.panels()[0].values, vec![0.5, 0.5]);
        assert_eq!(u.support(), (-1.0, 1.0));

        let t = two_point();
        assert_eq!(
            t.atoms(),
            &[
                Atom {
                    position: -1.0,
                    mass: 0.5
                },
                Atom {
                    position: 1.0,
                    mass: 0.5
                }
            ]
        );

        let skew = ExampleMeasure::TwoPoint { a: -1.0, b: 3.0 }
            .build()
            .unwrap();
        assert!((skew.atoms()[0].mass - 0.75).abs() < 1e-15);
        assert!(skew.mean().abs() < 1e-15);

        let half = ExampleMeasure::ThreePoint { a: 1.0, p: 0.5 }
            .build()
            .unwrap();
        assert_eq!(half.atoms().len(), 2);
    }

    #[test]
    fn builder_rejections() {
        assert!(ExampleMeasure::ThreePoint { a: 1.0, p: 0.0 }
            .build()
            .is_err());
        assert!(ExampleMeasure::ThreePoint { a: 1.0, p: 0.6 }
            .build()
            .is_err());
        assert!(ExampleMeasure::ThreePoint { a: -1.0, p: 0.3 }
            .build()
            .is_err());
        assert!(ExampleMeasure::TwoPoint { a: 0.0, b: 1.0 }.build().is_err());
        assert!(ExampleMeasure::TwoPoint { a: 0.5, b: 1.0 }.build().is_err());
        assert!(ExampleMeasure::GaussianTruncated {
            sigma: 0.0,
            cutoff: 6.0
        }
        .build()
        .is_err());
    }

    #[test]
    fn builders_are_centered_probability_measures() {
        for e in [
            ExampleMeasure::Uniform,
            ExampleMeasure::SqrtAbs,
            ExampleMeasure::Abs,
            ExampleMeasure::TwoPoint { a: -0.3, b: 2.0 },
            ExampleMeasure::ThreePoint { a: 0.9, p: 0.25 },
            ExampleMeasure::GaussianTruncated {
                sigma: 0.5,
                cutoff: 6.0,
            },
        ] {
            let m = e.build().unwrap();
            assert!((m.total_mass() - 1.0).abs() < 1e-9, "{}", e.name());
            assert!(m.mean().abs() < 1e-9, "{}", e.name());
        }
    }

    #[test]
    fn moments() {
        let u = ExampleMeasure::Uniform.build().unwrap();
        assert!((u.second_moment() - 1.0 / 3.0).abs() < 1e-15);
        assert!((u.first_absolute_moment() - 0.5).abs() < 1e-15);
        let a = ExampleMeasure::Abs.build().unwrap();
        assert!((a.second_moment() - 0.5).abs() < 1e-15);
        let g = ExampleMeasure::GaussianTruncated {
            sigma: 0.5,
            cutoff: 6.0,
        }
        .build()
        .unwrap();
        assert!((g.second_moment() - 0.25).abs() < 1e-5);
    }

    #[test]
    fn cdf_left_and_right() {
        let t = two_point();
        assert_eq!(t.cdf(-1.0), 0.5);
        assert_eq!(t.cdf_left(-1.0), 0.0);
        assert_eq!(t.cdf(0.0), 0.5);
        assert_eq!(t.cdf(1.0), 1.0);
        let u = ExampleMeasure::Uniform.build().unwrap();
        assert!((u.cdf(0.5) - 0.75).abs() < 1e-15);
        assert_eq!(u.cdf(-2.0), 0.0);
        assert_eq!(u.cdf(2.0), 1.0);
    }

    #[test]
    fn construction_errors() {
        let off_center = Measure::new(
            vec![Atom {
                position: 0.5,
                mass: 1.0,
            }],
            Vec::new(),
        );
        assert!(matches!(off_center, Err(MeasureError::NotCentered(_))));
        let light = Measure::new(
            vec![Atom {
                position: 0.0,
                mass: 0.5,
            }],
            Vec::new(),
        );
        assert!(matches!(light, Err(MeasureError::Mass(_))));
        let unsorted = Measure::new(
            vec![
                Atom {
                    position: 1.0,
                    mass: 0.5,
                },
                Atom {
                    position: -1.0,
                    mass: 0.5,
                },
            ],
            Vec::new(),
        );
        assert!(matches!(
            unsorted,
            Err(MeasureError::AtomOrder { index: 1 })
        ));
        assert_eq!(
            Measure::new(Vec::new(), Vec::new()),
            Err(MeasureError::Empty)
        );
        let overlap = Measure::new(
            Vec::new(),
            vec![
                Panel {
                    left: -1.0,
                    right: 0.5,
                    values: vec![0.5, 0.5],
                },
                Panel {
                    left: 0.0,
                    right: 1.0,
                    values: vec![0.5, 0.5],
                },
            ],
        );
        assert!(matches!(
            overlap,
            Err(MeasureError::PanelOrder { index: 1 })
        ));
    }

    #[test]
    fn document_round_trip_is_exact() {
        for m in [
            two_point(),
            ExampleMeasure::SqrtAbs.build().unwrap(),
            ExampleMeasure::ThreePoint { a: 0.9, p: 0.35 }
                .build()
                .unwrap(),
        ] {
            let doc = m.to_document();
            assert_eq!(Measure::from_document(&doc).unwrap(), m);
        }
        let parsed = Measure::from_document("atoms = [[-1, 0.5], [1, 0.5]]\n").unwrap();
        assert_eq!(parsed, two_point());
        assert!(Measure::from_document("atoms = [[0.5, 1.0]]").is_err());
        assert!(Measure::from_document("atoms = 3").is_err());
    }
}
