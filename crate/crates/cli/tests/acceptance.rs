//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! MNIST is read from `$CHEBYKAN_MNIST_DIR`, defaulting to `data/mnist` at
//! the workspace root.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chebykan::chebyshev::{eval_basis, eval_basis_derivative, extrema, orthogonality_integral, roots, PolyKind};
use chebykan::data::{load_mnist_dir, FractalParams, Split};
use chebykan::experiments::{
    grad_check, run_approx, run_fractal, run_mnist, ApproxConfig, FractalConfig, GradCheckConfig, RunRecord, TrainConfig,
};
use chebykan::{param_count, ArchSpec, Dataset, InitMethod, Rng};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64, what: &str) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || {
        format!("{what} took {:.0}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn param_counts() -> Check {
    let expected = [(2, 77_376), (3, 103_136), (4, 128_896), (5, 154_656)];
    for (d, want) in expected {
        let got = param_count(&ArchSpec::mnist(d, PolyKind::First));
        ensure(got == want, || format!("degree {d}: {got} != {want}"))?;
    }
    Ok("77376/103136/128896/154656".into())
}

fn gradients() -> Check {
    let start = Instant::now();
    let report = grad_check(&GradCheckConfig::default()).map_err(|e| e.to_string())?;
    within(start.elapsed(), 60, "gradcheck")?;
    ensure(report.max_rel_err <= 1e-5, || {
        format!("max_rel_err {:e} > 1e-5 at {:?}", report.max_rel_err, report.worst)
    })?;
    Ok(format!(
        "max_rel_err {:.2e} over {} trials / {} coordinates",
        report.max_rel_err, report.trials, report.coordinates
    ))
}

fn chebyshev_suite() -> Check {
    let err = |e: chebykan::Error| e.to_string();
    let mut rng = Rng::named(42, "acceptance-chebyshev");
    let mut worst_t: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    for _ in 0..1000 {
        let theta = rng.uniform(0.0, PI);
        let t = eval_basis(theta.cos(), 30, PolyKind::First).map_err(err)?;
        for (n, v) in t.iter().enumerate() {
            worst_t = worst_t.max((v - (n as f64 * theta).cos()).abs());
        }
        let theta = rng.uniform(0.1, PI - 0.1);
        let u = eval_basis(theta.cos(), 30, PolyKind::Second).map_err(err)?;
        for (n, v) in u.iter().enumerate() {
            worst_u = worst_u.max((v - ((n + 1) as f64 * theta).sin() / theta.sin()).abs());
        }
    }
    ensure(worst_t <= 1e-11, || format!("first-kind trig error {worst_t:e}"))?;
    ensure(worst_u <= 1e-10, || format!("second-kind trig error {worst_u:e}"))?;

    let h = 1e-6;
    let mut worst_d: f64 = 0.0;
    for kind in PolyKind::ALL {
        for k in 0..=1900 {
            let x = -0.95 + 0.001 * k as f64;
            let d = eval_basis_derivative(x, 10, kind).map_err(err)?;
            let p = eval_basis(x + h, 10, kind).map_err(err)?;
            let m = eval_basis(x - h, 10, kind).map_err(err)?;
            for j in 0..=10 {
                let fd = (p[j] - m[j]) / (2.0 * h);
                worst_d = worst_d.max((d[j] - fd).abs() / fd.abs().max(1.0));
            }
        }
    }
    ensure(worst_d <= 1e-6, || format!("derivative vs finite difference {worst_d:e}"))?;

    let mut worst_bound: f64 = 0.0;
    for k in 0..10_000 {
        let x = -1.0 + 2.0 * k as f64 / 9_999.0;
        let t = eval_basis(x, 50, PolyKind::First).map_err(err)?;
        worst_bound = worst_bound.max(t.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
    }
    ensure(worst_bound <= 1.0 + 1e-12, || format!("max |T_n| on [-1,1] is {worst_bound}"))?;

    for n in 1..=20 {
        for r in roots(n).map_err(err)? {
            let v = eval_basis(r, n, PolyKind::First).map_err(err)?[n];
            ensure(v.abs() <= 1e-10, || format!("T_{n} at root {r} is {v:e}"))?;
        }
        for (k, x) in extrema(n).map_err(err)?.into_iter().enumerate() {
            let v = eval_basis(x, n, PolyKind::First).map_err(err)?[n];
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            ensure((v - want).abs() <= 1e-10, || format!("T_{n} at extremum {k} is {v}"))?;
        }
    }

    for kind in PolyKind::ALL {
        for m in 0..=10 {
            for n in 0..=10 {
                let got = orthogonality_integral(m, n, kind, 64).map_err(err)?;
                let want = match (kind, m == n, m) {
                    (_, false, _) => 0.0,
                    (PolyKind::First, true, 0) => PI,
                    _ => PI / 2.0,
                };
                ensure((got - want).abs() <= 1e-10, || format!("{kind} <{m},{n}> = {got}, want {want}"))?;
            }
        }
    }
    Ok(format!(
        "trig {worst_t:.1e}/{worst_u:.1e}, derivative {worst_d:.1e}, bound {worst_bound}, roots/extrema/orthogonality ok"
    ))
}

struct Mnist {
    train: Dataset,
    test: Dataset,
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("CHEBYKAN_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn load_mnist() -> Result<Mnist, String> {
    let dir = mnist_dir();
    let load = |split| load_mnist_dir(&dir, split).map_err(|e| format!("MNIST unavailable: {e}"));
    Ok(Mnist {
        train: load(Split::Train)?,
        test: load(Split::Test)?,
    })
}

fn train_mnist(data: &Mnist, cfg: &TrainConfig) -> Result<(RunRecord, Duration), String> {
    let start = Instant::now();
    let out = run_mnist(&data.train, &data.test, cfg).map_err(|e| e.to_string())?;
    Ok((out.record, start.elapsed()))
}

fn accuracy(data: &Mnist, cfg: &TrainConfig) -> Result<(f64, Duration), String> {
    train_mnist(data, cfg).map(|(r, t)| (r.final_metric(), t))
}

/// Accuracy per init method, in `InitMethod::ALL` order; Xavier is the degree-3 headline.
fn mnist_headline(data: &Result<Mnist, String>, inits: &mut Vec<(InitMethod, f64)>) -> Check {
    let data = data.as_ref().map_err(Clone::clone)?;
    let mut headline_time = Duration::ZERO;
    let mut losses = (0.0, 0.0);
    for init in InitMethod::ALL {
        let (record, t) = train_mnist(data, &TrainConfig { init, ..TrainConfig::default() })?;
        let acc = record.final_metric();
        eprintln!("    init {init}: accuracy {acc:.4} ({:.0}s)", t.as_secs_f64());
        if init == InitMethod::Xavier {
            headline_time = t;
            losses = (record.rows[1].train_loss, record.last().train_loss);
        }
        inits.push((init, acc));
    }
    let xavier = inits[0].1;
    let normal = inits.iter().find(|(m, _)| *m == InitMethod::Normal).expect("normal run").1;

    let subset = Mnist {
        train: data.train.head(10_000),
        test: data.test.clone(),
    };
    let (subset_acc, subset_time) = accuracy(&subset, &TrainConfig::default())?;
    eprintln!("    subset 10000: accuracy {subset_acc:.4} ({:.0}s)", subset_time.as_secs_f64());

    let mut failures = Vec::new();
    if xavier < 0.965 {
        failures.push(format!("xavier accuracy {xavier:.4} < 0.965"));
    }
    for &(m, acc) in inits.iter() {
        if normal > acc + 0.005 {
            failures.push(format!("normal {normal:.4} beats {m} {acc:.4} by more than 0.005"));
        }
    }
    if subset_acc < 0.90 {
        failures.push(format!("subset accuracy {subset_acc:.4} < 0.90"));
    }
    if losses.1 >= losses.0 {
        failures.push(format!("train loss did not fall: epoch 1 {:.4}, final {:.4}", losses.0, losses.1));
    }
    if let Err(e) = within(headline_time, 20 * 60, "headline run") {
        failures.push(e);
    }
    if let Err(e) = within(subset_time, 3 * 60, "subset run") {
        failures.push(e);
    }
    let summary = format!(
        "xavier {xavier:.4} (train loss {:.4} -> {:.4}), normal {normal:.4} (others {}), subset {subset_acc:.4} in {:.0}s",
        losses.0,
        losses.1,
        inits
            .iter()
            .filter(|(m, _)| *m != InitMethod::Normal && *m != InitMethod::Xavier)
            .map(|(m, a)| format!("{m} {a:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
        subset_time.as_secs_f64()
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

fn degree_shape(data: &Result<Mnist, String>, deg3: Option<f64>) -> Check {
    let data = data.as_ref().map_err(Clone::clone)?;
    let deg3 = deg3.ok_or("degree-3 run unavailable")?;
    let run = |d| {
        let mut cfg = TrainConfig::default();
        cfg.arch.degree = d;
        accuracy(data, &cfg).map(|(a, _)| a)
    };
    let deg2 = run(2)?;
    let deg4 = run(4)?;
    let summary = format!("degree 2 {deg2:.4}, 3 {deg3:.4}, 4 {deg4:.4}");
    ensure(deg3 >= deg2 - 0.002, || format!("degree 3 below degree 2 - 0.002; {summary}"))?;
    ensure(deg4 < deg3, || format!("degree 4 not below degree 3; {summary}"))?;
    Ok(summary)
}

fn approximation() -> Check {
    let start = Instant::now();
    let run = run_approx(&ApproxConfig::default()).map_err(|e| e.to_string())?;
    within(start.elapsed(), 30, "approx run")?;
    let mse = run.outcome.record.final_metric();
    ensure(mse <= 5e-3, || format!("test MSE {mse:e} > 5e-3"))?;
    Ok(format!("test MSE {mse:.3e} in {:.1}s", start.elapsed().as_secs_f64()))
}

fn fractal() -> Check {
    let start = Instant::now();
    let noisy = run_fractal(&FractalConfig::default()).map_err(|e| e.to_string())?;
    let clean = run_fractal(&FractalConfig {
        params: FractalParams { b: 0.0, ..FractalParams::default() },
        ..FractalConfig::default()
    })
    .map_err(|e| e.to_string())?;
    within(start.elapsed(), 5 * 60, "fractal runs")?;
    let r = &noisy.outcome.record;
    let ratio = r.final_metric() / r.first().metric;
    let clean_mse = clean.outcome.record.final_metric();
    let summary = format!(
        "noisy MSE {:.3e} -> {:.3e} (ratio {ratio:.4}), clean final {clean_mse:.3e}",
        r.first().metric,
        r.final_metric()
    );
    ensure(ratio <= 0.1, || format!("final/initial {ratio:.4} > 0.1; {summary}"))?;
    ensure(clean_mse < r.final_metric(), || format!("b=0 not lower; {summary}"))?;
    Ok(summary)
}

/// Stdout plus every file left in the working directory, by name.
type Snapshot = (String, Vec<(String, Vec<u8>)>);

fn run_cli(dir: &Path, args: &[&str]) -> Result<Snapshot, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chebykan"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let mut files = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir).map_err(|e| e.to_string())?.flatten().collect();
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        files.push((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(|e| e.to_string())?));
    }
    Ok((String::from_utf8_lossy(&out.stdout).into_owned(), files))
}

/// Drops the trailing `wall_time_s` column of ablation tables.
fn without_wall_time(csv: &str) -> String {
    let ablation = csv.lines().any(|l| l.ends_with(",wall_time_s"));
    csv.lines()
        .map(|l| match l.rsplit_once(',') {
            Some((head, _)) if ablation && !l.starts_with('#') => head.to_string(),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism(mnist_available: bool) -> Check {
    let data = mnist_dir();
    let data = data.to_string_lossy();
    let mut commands: Vec<Vec<&str>> = vec![
        vec!["gradcheck", "--trials", "20"],
        vec!["approx", "--steps", "200"],
        vec!["approx", "--target", "step", "--steps", "100", "--f32"],
        vec!["fractal", "--grid", "16", "--epochs", "30", "--batch", "32"],
    ];
    if mnist_available {
        commands.push(vec!["mnist", "--data-dir", &data, "--subset", "1000", "--epochs", "2"]);
        commands.push(vec!["ablate", "--axis", "norm", "--data-dir", &data, "--subset", "300", "--epochs", "1"]);
    }
    for args in &commands {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (out_a, files_a) = run_cli(a.path(), args)?;
        let (out_b, files_b) = run_cli(b.path(), args)?;
        ensure(without_wall_time(&out_a) == without_wall_time(&out_b), || format!("{args:?}: CSV differs"))?;
        ensure(files_a == files_b, || format!("{args:?}: output files differ"))?;
    }
    Ok(format!(
        "{} commands byte-identical across two runs{}",
        commands.len(),
        if mnist_available { "" } else { " (MNIST commands skipped: data missing)" }
    ))
}

fn main() -> ExitCode {
    let mut all_pass = true;
    let mut report = |id: usize, name: &str, result: Check, elapsed: Duration| {
        let secs = elapsed.as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                all_pass = false;
                println!("FAIL [{id}] {name}: {detail} ({secs:.1}s)");
            }
        }
    };
    let timed = |f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let r = f();
        (r, start.elapsed())
    };

    let (r, t) = timed(&mut param_counts);
    report(1, "parameter counts", r, t);
    let (r, t) = timed(&mut gradients);
    report(2, "gradient check", r, t);
    let (r, t) = timed(&mut chebyshev_suite);
    report(3, "Chebyshev math suite", r, t);

    let data = load_mnist();
    let mut inits = Vec::new();
    let (r, t) = timed(&mut || mnist_headline(&data, &mut inits));
    report(4, "MNIST headline", r, t);
    let deg3 = inits.first().map(|&(_, acc)| acc);
    let (r, t) = timed(&mut || degree_shape(&data, deg3));
    report(5, "degree ablation shape", r, t);

    let (r, t) = timed(&mut approximation);
    report(6, "function approximation", r, t);
    let (r, t) = timed(&mut fractal);
    report(7, "fractal fit", r, t);
    let (r, t) = timed(&mut || {
        let checked = determinism(data.is_ok())?;
        data.as_ref().map(|_| checked).map_err(Clone::clone)
    });
    report(8, "determinism", r, t);

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
