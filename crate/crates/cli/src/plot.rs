use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use root_barrier::{Barrier, BarrierTime};

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 48.0;
const BLUE: &str = "#1f4fd1";
const RED: &str = "#d1321f";
const GREEN: &str = "#2a8f4a";

fn lambda_from_name(path: &Path) -> Option<f64> {
    path.file_stem()?
        .to_str()?
        .strip_prefix("barrier_")?
        .parse()
        .ok()
}

fn colour(lambda: f64) -> &'static str {
    if lambda == 1.0 {
        BLUE
    } else if lambda < 1.0 {
        RED
    } else {
        GREEN
    }
}

pub fn run(inputs: &[PathBuf], out: &Path, lambdas: Option<&[f64]>) -> Result<(), CliError> {
    if let Some(l) = lambdas {
        if l.len() != inputs.len() {
            return Err(CliError::Config(format!(
                "{} lambdas given for {} input files",
                l.len(),
                inputs.len()
            )));
        }
    }
    let mut layers = Vec::with_capacity(inputs.len());
    for (i, path) in inputs.iter().enumerate() {
        let file =
            File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let b = Barrier::read_csv(file)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let lambda = lambdas
            .map(|l| l[i])
            .or_else(|| lambda_from_name(path))
            .unwrap_or(1.0);
        layers.push((lambda, b));
    }
    // Larger lambda means a smaller region, drawn on top.
    layers.sort_by(|a, b| a.0.total_cmp(&b.0));
    let svg = render(&layers);
    let target = if out.is_dir() {
        out.join("barriers.svg")
    } else {
        out.to_path_buf()
    };
    fs::write(&target, svg).map_err(|e| CliError::Config(format!("{}: {e}", target.display())))
}

/// Time runs left to right, space bottom to top. Each node contributes the
/// cell `[x_j - dx/2, x_j + dx/2] x [r(x_j), T]`; `Never` nodes stay empty.
pub fn render(layers: &[(f64, Barrier)]) -> String {
    let t_max = layers
        .iter()
        .map(|(_, b)| b.horizon())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let x_lo = layers
        .iter()
        .map(|(_, b)| b.xs()[0])
        .fold(f64::INFINITY, f64::min);
    let x_hi = layers
        .iter()
        .map(|(_, b)| b.xs()[b.len() - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |t: f64| LEFT + pw * t / t_max;
    let py = |x: f64| TOP + ph * (x_hi - x) / span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    for (lambda, b) in layers {
        let xs = b.xs();
        let n = xs.len();
        let mut d = String::new();
        for (j, r) in b.values().iter().enumerate() {
            let BarrierTime::At(t) = *r else { continue };
            if t >= b.horizon() {
                continue;
            }
            let lo = if j == 0 {
                xs[0]
            } else {
                0.5 * (xs[j - 1] + xs[j])
            };
            let hi = if j + 1 == n {
                xs[n - 1]
            } else {
                0.5 * (xs[j] + xs[j + 1])
            };
            let _ = write!(
                d,
                "M{:.2} {:.2}H{:.2}V{:.2}H{:.2}Z",
                px(t),
                py(hi),
                px(b.horizon()),
                py(lo),
                px(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="{}" fill-opacity="0.85" stroke="none"><title>lambda = {lambda}</title></path>"#,
            colour(*lambda)
        );
    }

    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = t_max * i as f64 / 4.0;
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick(t)
        );
        let v = x_lo + span * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle">x</text>"#,
        TOP + ph / 2.0
    );
    for (i, (lambda, _)) in layers.iter().rev().enumerate() {
        let y = TOP + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="14" fill="{}"/><text x="{:.2}" y="{:.2}">lambda = {lambda}</text>"#,
            y - 11.0,
            colour(*lambda),
            lx + 20.0,
            y
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}
