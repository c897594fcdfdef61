use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use root_barrier::{Barrier, BarrierTime};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_root-barrier"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const UNIFORM_GRID: &str = "[grid]\na = -1.5\nb = 1.5\nhorizon = 0.8\nnx = 75\nnt = 2000\n";

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn uniform_config(dir: &Path, extra: &str) -> PathBuf {
    write_config(
        dir,
        "uniform.toml",
        &format!("lambdas = [0.81, 1.0]\nout = \"out\"\n{extra}\n[measure]\nname = \"uniform\"\n\n{UNIFORM_GRID}"),
    )
}

fn read_barrier(path: &Path) -> Barrier {
    Barrier::read_csv(fs::File::open(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_two_point_gives_vertical_band() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "two.toml",
        "lambdas = [1.0]\n[measure]\nname = \"two_point\"\na = -1.0\nb = 1.0\n[grid]\na = -2.0\nb = 2.0\nhorizon = 3.0\nnx = 100\nnt = 4000\n",
    );
    let out = dir.path().join("res");
    let o = run(&["solve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let b = read_barrier(&out.join("barrier_1.csv"));
    for (&x, &r) in b.xs().iter().zip(b.values()) {
        if x.abs() >= 1.0 - 1e-9 {
            assert_eq!(r, BarrierTime::At(0.0), "x = {x}");
        } else if x.abs() <= 0.9 {
            assert!(r.is_never(), "x = {x}");
        }
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("lambda,nx,nt,"));
    assert!(summary.contains("# runtime_s="));
}

#[test]
fn solve_uniform_is_symmetric_with_peak_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(dir.path(), "");
    assert_eq!(code(&run(&["solve", "--config", s(&cfg)])), 0);
    let b = read_barrier(&dir.path().join("out/barrier_1.csv"));
    let r: Vec<f64> = b.values().iter().map(|v| v.as_f64()).collect();
    let n = r.len();
    for i in 0..n {
        assert_eq!(r[i], r[n - 1 - i]);
    }
    let top = r.iter().cloned().fold(0.0, f64::max);
    assert_eq!(r[n / 2], top);
    assert!(dir.path().join("out/barrier_0.81.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(dir.path(), "[mc]\nn_paths = 400\n");
    let read = |sub: &str| {
        ["barrier_1.csv", "barrier_0.81.csv", "hitting_samples.csv"]
            .iter()
            .map(|f| fs::read(dir.path().join(sub).join(f)).unwrap())
            .collect::<Vec<_>>()
    };
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        assert_eq!(
            code(&run(&["solve", "--config", s(&cfg), "--out", s(&out)])),
            0
        );
        let o = run(&[
            "verify-embed",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--seed",
            "9",
        ]);
        assert!(matches!(code(&o), 0 | 5));
    }
    assert_eq!(read("a"), read("b"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(dir.path(), "");
    assert_eq!(
        code(&run(&["solve", "--config", s(&cfg), "--lambda", ""])),
        2
    );
    assert_eq!(
        code(&run(&["solve", "--config", s(&cfg), "--lambda", "1,0.5"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "solve",
            "--config",
            s(&dir.path().join("missing.toml"))
        ])),
        2
    );
    let unknown = write_config(
        dir.path(),
        "bad.toml",
        &format!("[measure]\nname = \"cauchy\"\n{UNIFORM_GRID}"),
    );
    assert_eq!(code(&run(&["solve", "--config", s(&unknown)])), 2);
    let narrow = write_config(
        dir.path(),
        "narrow.toml",
        "[measure]\nname = \"uniform\"\n[grid]\na = -0.5\nb = 0.5\nhorizon = 0.1\nnx = 10\nnt = 100\n",
    );
    assert_eq!(code(&run(&["solve", "--config", s(&narrow)])), 2);
}

#[test]
fn cfl_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfl.toml",
        "[measure]\nname = \"uniform\"\n[grid]\na = -2.0\nb = 2.0\nhorizon = 0.4\nnx = 200\nnt = 1000\n",
    );
    let o = run(&["solve", "--config", s(&cfg)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("CFL"));
}

#[test]
fn family_check_passes_and_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(dir.path(), "");
    let o = run(&["family-check", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = fs::read_to_string(dir.path().join("out/family_report.csv")).unwrap();
    assert!(report.contains("inclusion_1_in_0.81"));

    // Raise r_1 far above r_0.81 at one node.
    assert_eq!(code(&run(&["solve", "--config", s(&cfg)])), 0);
    let path = dir.path().join("out/barrier_0.81.csv");
    let b = read_barrier(&path);
    let mut r: Vec<f64> = b.values().iter().map(|v| v.as_f64()).collect();
    let mid = r.len() / 2;
    r[mid] += 0.3;
    let bad = Barrier::from_values(b.xs().to_vec(), &r, b.horizon() + 0.3, b.time_step()).unwrap();
    bad.write_csv(fs::File::create(&path).unwrap(), None)
        .unwrap();
    let corrupted = uniform_config(dir.path(), "barrier_dir = \"out\"\n");
    let o = run(&[
        "family-check",
        "--config",
        s(&corrupted),
        "--out",
        s(&dir.path().join("check")),
    ]);
    assert_eq!(code(&o), 5);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("inclusion_1_in_0.81"));
    assert!(stdout.contains("worst at x = "), "{stdout}");
}

#[test]
fn family_check_needs_lambda_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(dir.path(), "");
    assert_eq!(
        code(&run(&[
            "family-check",
            "--config",
            s(&cfg),
            "--lambda",
            "0.5,0.81"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "family-check",
            "--config",
            s(&cfg),
            "--lambda",
            "1"
        ])),
        2
    );
}

#[test]
fn verify_embed_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(
        dir.path(),
        "[mc]\nn_paths = 4000\ndt_sim = 1e-4\nks_max = 0.05\n",
    );
    let o = run(&["verify-embed", "--config", s(&cfg), "--seed", "5"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    for metric in [
        "ks_lambda_1,",
        "mean_tau_error_lambda_1,",
        "martingale_global",
        "scaling_ks_lambda_0.81",
        "tau_monotone_fraction,1,1,1",
    ] {
        assert!(stdout.contains(metric), "{metric} missing");
    }
    let samples = fs::read_to_string(dir.path().join("out/hitting_samples.csv")).unwrap();
    assert!(samples.starts_with("path_id,lambda,tau,b_tau,capped\n"));
    assert_eq!(samples.lines().count(), 1 + 2 * 4000);
}

#[test]
fn verify_embed_statistical_failure_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(
        dir.path(),
        "[mc]\nn_paths = 4000\ndt_sim = 1e-4\nks_max = 0.0001\n",
    );
    let o = run(&["verify-embed", "--config", s(&cfg)]);
    assert_eq!(code(&o), 5);
}

#[test]
fn volterra_writes_method_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "abs.toml",
        &format!("[measure]\nname = \"abs\"\n[volterra]\nnodes_per_half = 40\nt_max = 1.5\n{UNIFORM_GRID}"),
    );
    assert_eq!(code(&run(&["volterra", "--config", s(&cfg)])), 0);
    let path = dir.path().join("out/barrier_volterra.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",method"));
    let b = read_barrier(&path);
    assert_eq!(b.len(), 81);
    let r0 = b.eval(0.0).unwrap().as_f64();
    assert!((r0 - 0.80).abs() < 0.02, "r(0) = {r0}");

    let atoms = write_config(
        dir.path(),
        "atoms.toml",
        &format!("[measure]\nname = \"three_point\"\na = 0.9\np = 0.35\n{UNIFORM_GRID}"),
    );
    assert_eq!(code(&run(&["volterra", "--config", s(&atoms)])), 2);
}

#[test]
fn plot_overlays_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = uniform_config(dir.path(), "");
    assert_eq!(code(&run(&["solve", "--config", s(&cfg)])), 0);
    let out = dir.path().join("out");
    let inputs = [out.join("barrier_1.csv"), out.join("barrier_0.81.csv")];
    let svg_a = dir.path().join("a.svg");
    let svg_b = dir.path().join("b.svg");
    for svg in [&svg_a, &svg_b] {
        assert_eq!(
            code(&run(&[
                "plot",
                s(&inputs[0]),
                s(&inputs[1]),
                "--out",
                s(svg)
            ])),
            0
        );
    }
    let a = fs::read_to_string(&svg_a).unwrap();
    assert_eq!(a, fs::read_to_string(&svg_b).unwrap());
    assert!(a.contains("lambda = 0.81") && a.contains("lambda = 1"));
    assert!(a.find("#d1321f").unwrap() < a.find("#1f4fd1").unwrap());

    assert_eq!(code(&run(&["plot", s(&inputs[0]), "--out", s(&out)])), 0);
    let single = fs::read_to_string(out.join("barriers.svg")).unwrap();
    assert_eq!(single.matches("<path").count(), 1);
}

#[test]
fn plot_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("barrier_1.csv");
    fs::write(&bad, "x,r,is_never\n0.0,abc,0\n").unwrap();
    assert_eq!(
        code(&run(&[
            "plot",
            s(&bad),
            "--out",
            s(&dir.path().join("p.svg"))
        ])),
        2
    );
}
