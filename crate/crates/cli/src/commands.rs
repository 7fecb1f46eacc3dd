use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use chebykan::data::{load_mnist_dir, write_grid_dump, FractalParams, NormScheme, Split, TargetFn, Targets};
use chebykan::experiments::{
    grad_check, run_ablation, run_approx, run_fractal, run_mnist, write_ablation_csv, AblationAxis, ApproxConfig,
    FractalConfig, GradCheckConfig, OptimizerKind, Precision, RunRecord, TrainConfig,
};
use chebykan::{ArchSpec, Dataset, InitMethod, PolyKind};
use clap::ArgMatches;

use crate::settings::Settings;
use crate::Failure;

const GRADCHECK_GATE: f64 = 1e-5;

pub fn dispatch(matches: &ArgMatches) -> Result<(), Failure> {
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let file = match sub.get_one::<String>("config") {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?),
        None => None,
    };
    let s = Settings::resolve(name, file.as_deref(), sub)?;
    for line in s.echo() {
        eprintln!("# {line}");
    }
    match name {
        "mnist" => mnist(&s),
        "approx" => approx(&s),
        "fractal" => fractal(&s),
        "ablate" => ablate(&s),
        "gradcheck" => gradcheck(&s),
        other => Err(Failure::usage(format!("unknown command '{other}'"))),
    }
}

fn io_failure(path: &str) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::data(format!("cannot write {path}: {e}"))
}

/// Runs `write` against `--out` or stdout.
fn emit(s: &Settings, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match s.path("out") {
        Some(path) => {
            let file = File::create(path).map_err(io_failure(path))?;
            write(&mut BufWriter::new(file)).map_err(io_failure(path))
        }
        None => write(&mut io::stdout().lock()).map_err(io_failure("stdout")),
    }
}

fn write_file(path: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(io_failure(path))?;
    write(&mut BufWriter::new(file)).map_err(io_failure(path))
}

fn precision(s: &Settings) -> Result<Precision, Failure> {
    Ok(if s.flag("f32")? { Precision::F32 } else { Precision::F64 })
}

fn init(s: &Settings) -> Result<InitMethod, Failure> {
    s.raw("init").parse().map_err(|e: chebykan::Error| Failure::usage(e.to_string()))
}

fn emit_run(s: &Settings, record: &RunRecord) -> Result<(), Failure> {
    emit(s, |w| record.write_csv(w, &s.echo()))
}

fn load_mnist(s: &Settings) -> Result<(Dataset, Dataset), Failure> {
    let dir = Path::new(s.raw("data_dir"));
    let train = load_mnist_dir(dir, Split::Train)?;
    let test = load_mnist_dir(dir, Split::Test)?;
    let subset: usize = s.get("subset")?;
    Ok((if subset > 0 { train.head(subset) } else { train }, test))
}

fn mnist_config(s: &Settings, layernorm: bool) -> Result<TrainConfig, Failure> {
    let degree = s.get("degree")?;
    let kind: PolyKind = s.get("kind")?;
    let optimizer = match s.raw("optimizer") {
        "adam" => OptimizerKind::Adam,
        "sgd" => OptimizerKind::Sgd { momentum: s.get("momentum")? },
        other => return Err(Failure::usage(format!("unknown optimizer '{other}' (expected adam|sgd)"))),
    };
    Ok(TrainConfig {
        epochs: s.get("epochs")?,
        batch_size: s.get("batch")?,
        lr: s.get("lr")?,
        optimizer,
        seed: s.get("seed")?,
        init: init(s)?,
        norm: s.get::<NormScheme>("norm")?,
        arch: ArchSpec { layernorm_between: layernorm, ..ArchSpec::mnist(degree, kind) },
        precision: precision(s)?,
    })
}

fn mnist(s: &Settings) -> Result<(), Failure> {
    let cfg = mnist_config(s, s.flag("ln")?)?;
    cfg.validate()?;
    let (train, test) = load_mnist(s)?;
    let out = run_mnist(&train, &test, &cfg)?;
    emit_run(s, &out.record)?;
    if let Some(path) = s.path("save") {
        out.model.save(path)?;
    }
    eprintln!(
        "final test accuracy: {:.4} ({} parameters, {:.1}s)",
        out.record.final_metric(),
        out.record.param_count,
        out.record.wall_time_s
    );
    Ok(())
}

fn approx(s: &Settings) -> Result<(), Failure> {
    let cfg = ApproxConfig {
        target: s.get::<TargetFn>("target")?,
        lo: s.get("lo")?,
        hi: s.get("hi")?,
        samples: s.get("samples")?,
        test_samples: s.get("test_samples")?,
        widths: s.list("widths")?,
        degree: s.get("degree")?,
        kind: s.get("kind")?,
        layernorm: s.flag("ln")?,
        steps: s.get("steps")?,
        lr: s.get("lr")?,
        init: init(s)?,
        seed: s.get("seed")?,
        precision: precision(s)?,
    };
    let run = run_approx(&cfg)?;
    emit_run(s, &run.outcome.record)?;
    if let Some(path) = s.path("dump") {
        let pred = run.outcome.model.infer(&run.test.features)?;
        let Targets::Values(truth) = &run.test.targets else {
            unreachable!("regression targets")
        };
        write_file(path, |w| {
            writeln!(w, "x,y_true,y_pred")?;
            for ((x, t), p) in run.test.features.as_slice().iter().zip(truth.as_slice()).zip(pred.as_slice()) {
                writeln!(w, "{x},{t},{p}")?;
            }
            w.flush()
        })?;
    }
    eprintln!("final test MSE: {:.6e}", run.outcome.record.final_metric());
    Ok(())
}

fn fractal(s: &Settings) -> Result<(), Failure> {
    let seed = s.get("seed")?;
    let batch: usize = s.get("batch")?;
    let cfg = FractalConfig {
        params: FractalParams {
            alpha: s.get("alpha")?,
            b: s.get("b")?,
            iters: s.get("iters")?,
            grid: s.get("grid")?,
            extent: s.get("extent")?,
            seed,
        },
        widths: s.list("widths")?,
        degree: s.get("degree")?,
        kind: s.get("kind")?,
        layernorm: s.flag("ln")?,
        epochs: s.get("epochs")?,
        batch_size: Some(batch).filter(|&b| b > 0),
        lr: s.get("lr")?,
        init: init(s)?,
        seed,
        precision: precision(s)?,
    };
    let run = run_fractal(&cfg)?;
    emit_run(s, &run.outcome.record)?;
    if let Some(prefix) = s.path("dump") {
        let Targets::Values(truth) = &run.grid.targets else {
            unreachable!("regression targets")
        };
        let pred = run.outcome.model.infer(&run.grid.features)?;
        write_file(&format!("{prefix}_true.txt"), |w| write_grid_dump(w, &run.grid.features, truth.as_slice()))?;
        write_file(&format!("{prefix}_pred.txt"), |w| write_grid_dump(w, &run.grid.features, pred.as_slice()))?;
    }
    let r = &run.outcome.record;
    eprintln!(
        "train MSE: {:.6e} -> {:.6e} (ratio {:.4})",
        r.first().metric,
        r.final_metric(),
        r.final_metric() / r.first().metric
    );
    Ok(())
}

fn ablate(s: &Settings) -> Result<(), Failure> {
    let axis: AblationAxis = match s.raw("axis") {
        "" => return Err(Failure::usage("--axis is required (init|degree|norm|kind)")),
        raw => raw.parse().map_err(|e: chebykan::Error| Failure::usage(e.to_string()))?,
    };
    let base = TrainConfig {
        epochs: s.get("epochs")?,
        batch_size: s.get("batch")?,
        lr: s.get("lr")?,
        optimizer: OptimizerKind::Adam,
        seed: s.get("seed")?,
        init: init(s)?,
        norm: s.get("norm")?,
        arch: ArchSpec::mnist(s.get("degree")?, s.get("kind")?),
        precision: precision(s)?,
    };
    base.validate()?;
    let approx = ApproxConfig {
        seed: base.seed,
        precision: base.precision,
        ..ApproxConfig::default()
    };
    let (train, test) = load_mnist(s)?;
    let rows = run_ablation(axis, &base, &train, &test, &approx)?;
    emit(s, |w| write_ablation_csv(w, &rows, &s.echo()))?;
    for r in &rows {
        match r.test_accuracy {
            Some(acc) => eprintln!("{}: accuracy {acc:.4}", r.axis_value),
            None => eprintln!("{}: MSE {:.6e}", r.axis_value, r.test_loss),
        }
    }
    Ok(())
}

fn gradcheck(s: &Settings) -> Result<(), Failure> {
    if s.flag("f32")? {
        return Err(Failure::usage("gradcheck runs in 64-bit only; drop --f32"));
    }
    let cfg = GradCheckConfig {
        trials: s.get("trials")?,
        h: s.get("h")?,
        seed: s.get("seed")?,
        fault: None,
    };
    let report = grad_check(&cfg)?;
    emit(s, |w| {
        for line in s.echo() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "trials,coordinates,max_rel_err")?;
        writeln!(w, "{},{},{}", report.trials, report.coordinates, report.max_rel_err)?;
        w.flush()
    })?;
    eprintln!("max_rel_err: {:e}", report.max_rel_err);
    if report.max_rel_err > GRADCHECK_GATE {
        return Err(Failure::numerical(format!(
            "max_rel_err {:e} exceeds {GRADCHECK_GATE:e} (worst: {:?})",
            report.max_rel_err, report.worst
        )));
    }
    Ok(())
}
