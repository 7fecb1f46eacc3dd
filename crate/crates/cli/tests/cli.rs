use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chebykan::data::{write_idx, IdxHeader, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC, MNIST_FILES};
use tempfile::TempDir;

fn chebykan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chebykan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Writes a 40/20-image MNIST look-alike: each digit lights one pixel row.
fn fake_mnist(dir: &Path) {
    let write = |images: &str, labels: &str, n: u32| {
        let mut pixels = vec![0u8; n as usize * 784];
        let labels_bytes: Vec<u8> = (0..n).map(|k| (k % 10) as u8).collect();
        for (k, &label) in labels_bytes.iter().enumerate() {
            let row = 2 + 2 * label as usize;
            for col in 4..24 {
                pixels[k * 784 + row * 28 + col] = 255;
            }
        }
        write_idx(&dir.join(images), &IdxHeader { magic: IDX_IMAGES_MAGIC, dims: vec![n, 28, 28] }, &pixels).unwrap();
        write_idx(&dir.join(labels), &IdxHeader { magic: IDX_LABELS_MAGIC, dims: vec![n] }, &labels_bytes).unwrap();
    };
    write(MNIST_FILES[0], MNIST_FILES[1], 40);
    write(MNIST_FILES[2], MNIST_FILES[3], 20);
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn mnist_zero_epochs_emits_single_row() {
    let tmp = TempDir::new().unwrap();
    fake_mnist(tmp.path());
    let out = chebykan(tmp.path(), &["mnist", "--data-dir", ".", "--epochs", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let rows = body(&csv);
    assert_eq!(rows[0], "epoch,train_loss,test_loss,metric");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,"));
    assert!(csv.starts_with("# command=mnist\n"));
    assert!(csv.contains("# epochs=0\n"));
    assert!(stderr(&out).contains("final test accuracy"));
}

#[test]
fn mnist_trains_saves_and_writes_out_file() {
    let tmp = TempDir::new().unwrap();
    fake_mnist(tmp.path());
    let out = chebykan(
        tmp.path(),
        &["mnist", "--data-dir", ".", "--epochs", "2", "--degree", "2", "--batch", "8", "--out", "run.csv", "--save", "m.bin"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let csv = fs::read_to_string(tmp.path().join("run.csv")).unwrap();
    assert_eq!(body(&csv).len(), 4);
    let model = chebykan::Sequential::load(tmp.path().join("m.bin")).unwrap();
    assert_eq!(model.param_count(), chebykan::param_count(&chebykan::ArchSpec::mnist(2, chebykan::PolyKind::First)));
}

#[test]
fn config_file_is_applied_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    fake_mnist(tmp.path());
    fs::write(tmp.path().join("run.cfg"), "# quick run\nepochs = 1\ndegree = 2\ndata_dir = .\n").unwrap();
    let out = chebykan(tmp.path(), &["mnist", "--config", "run.cfg", "--epochs", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    assert!(csv.contains("# degree=2\n"));
    assert!(csv.contains("# epochs=0\n"));
    assert_eq!(body(&csv).len(), 2);
}

#[test]
fn unknown_config_key_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let out = chebykan(tmp.path(), &["approx", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("colour"));
}

#[test]
fn bad_init_lists_all_methods() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["mnist", "--init", "foo"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for m in ["xavier", "he", "normal", "uniform", "lecun", "orthogonal"] {
        assert!(err.contains(m), "{err}");
    }
}

#[test]
fn bad_axis_and_unknown_flag_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(chebykan(tmp.path(), &["ablate", "--axis", "bogus"]).status.code(), Some(1));
    assert_eq!(chebykan(tmp.path(), &["ablate"]).status.code(), Some(1));
    assert_eq!(chebykan(tmp.path(), &["approx", "--colour", "blue"]).status.code(), Some(1));
    assert_eq!(chebykan(tmp.path(), &["gradcheck", "--f32"]).status.code(), Some(1));
}

#[test]
fn missing_data_is_data_error() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["mnist", "--data-dir", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("train-images-idx3-ubyte"));
}

#[test]
fn divergence_is_numerical_error() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["approx", "--steps", "50", "--lr", "1e300", "--dump", ""]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn approx_zero_samples_is_validation_error() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["approx", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn approx_step_target_writes_dump() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["approx", "--target", "step", "--steps", "20", "--test-samples", "10", "--dump", "d.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let dump = fs::read_to_string(tmp.path().join("d.csv")).unwrap();
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines[0], "x,y_true,y_pred");
    assert_eq!(lines.len(), 11);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v[1], if v[0] < 0.0 { 0.0 } else { 1.0 });
    }
    assert_eq!(body(&stdout(&out)).len(), 22);
}

#[test]
fn fractal_zero_iters_matches_zero_b() {
    let tmp = TempDir::new().unwrap();
    let small = ["fractal", "--grid", "8", "--epochs", "3", "--widths", "2,4,1"];
    let a = chebykan(tmp.path(), &[&small[..], &["--iters", "0", "--dump", "a"]].concat());
    let b = chebykan(tmp.path(), &[&small[..], &["--b", "0", "--dump", "b"]].concat());
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    assert_eq!(body(&stdout(&a)), body(&stdout(&b)));
    let read = |name: &str| fs::read_to_string(tmp.path().join(name)).unwrap();
    assert_eq!(read("a_true.txt"), read("b_true.txt"));
    assert_eq!(read("a_pred.txt"), read("b_pred.txt"));
    assert_eq!(read("a_true.txt").lines().count(), 64);
}

#[test]
fn gradcheck_prints_error_and_passes() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["gradcheck", "--trials", "10"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("max_rel_err"));
    let csv = stdout(&out);
    let rows = body(&csv);
    assert_eq!(rows[0], "trials,coordinates,max_rel_err");
    let err: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(err <= 1e-5);
}

#[test]
fn f32_flag_is_accepted_and_recorded() {
    let tmp = TempDir::new().unwrap();
    let out = chebykan(tmp.path(), &["approx", "--f32", "--steps", "5", "--dump", ""]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("# f32=true\n"));
}
