use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::record::write_comments;
use super::{evaluate, run_approx, run_mnist, ApproxConfig, TrainConfig};
use crate::chebyshev::PolyKind;
use crate::data::{Dataset, NormScheme};
use crate::error::{Error, Result};
use crate::layers::InitMethod;
use crate::network::param_count;

pub const ABLATION_CSV_HEADER: &str = "axis_value,test_accuracy,test_loss,param_count,wall_time_s";

pub const DEGREE_SWEEP: [usize; 4] = [2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    Init,
    Degree,
    Norm,
    Kind,
}

impl AblationAxis {
    pub const ALL: [AblationAxis; 4] = [AblationAxis::Init, AblationAxis::Degree, AblationAxis::Norm, AblationAxis::Kind];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationAxis::Init => "init",
            AblationAxis::Degree => "degree",
            AblationAxis::Norm => "norm",
            AblationAxis::Kind => "kind",
        }
    }
}

impl fmt::Display for AblationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown axis '{s}' (expected init|degree|norm|kind)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub axis_value: String,
    /// `None` for regression rows.
    pub test_accuracy: Option<f64>,
    /// Cross-entropy for MNIST rows, MSE for regression rows.
    pub test_loss: f64,
    pub param_count: usize,
    pub wall_time_s: f64,
}

pub fn write_ablation_csv<W: Write>(mut w: W, rows: &[AblationRow], comments: &[String]) -> io::Result<()> {
    write_comments(&mut w, comments)?;
    writeln!(w, "{ABLATION_CSV_HEADER}")?;
    for r in rows {
        let acc = r.test_accuracy.map(|a| a.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", r.axis_value, acc, r.test_loss, r.param_count, r.wall_time_s)?;
    }
    w.flush()
}

/// The configurations an axis sweeps, labelled by their `axis_value`.
pub fn sweep_configs(axis: AblationAxis, base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    let with = |f: &dyn Fn(&mut TrainConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    match axis {
        AblationAxis::Init => InitMethod::ALL
            .iter()
            .map(|&m| (m.to_string(), with(&|c| c.init = m)))
            .collect(),
        AblationAxis::Degree => DEGREE_SWEEP
            .iter()
            .map(|&d| (d.to_string(), with(&|c| c.arch.degree = d)))
            .collect(),
        AblationAxis::Norm => NormScheme::ALL
            .iter()
            .map(|&n| (n.to_string(), with(&|c| c.norm = n)))
            .collect(),
        AblationAxis::Kind => PolyKind::ALL
            .iter()
            .map(|&k| (format!("mnist:{k}"), with(&|c| c.arch.kind = k)))
            .collect(),
    }
}

/// Runs one sweep. The kind axis additionally appends one regression row per
/// kind, labelled `<target>:<kind>`, from `approx`.
pub fn run_ablation(
    axis: AblationAxis,
    base: &TrainConfig,
    train_raw: &Dataset,
    test_raw: &Dataset,
    approx: &ApproxConfig,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for (label, cfg) in sweep_configs(axis, base) {
        let out = run_mnist(train_raw, test_raw, &cfg)?;
        let last = out.record.last();
        rows.push(AblationRow {
            axis_value: label,
            test_accuracy: Some(last.metric),
            test_loss: last.test_loss,
            param_count: param_count(&cfg.arch),
            wall_time_s: out.record.wall_time_s,
        });
    }
    if axis == AblationAxis::Kind {
        for kind in PolyKind::ALL {
            let cfg = ApproxConfig { kind, ..approx.clone() };
            let out = run_approx(&cfg)?;
            let eval = evaluate(&out.outcome.model, &out.test)?;
            rows.push(AblationRow {
                axis_value: format!("{}:{kind}", cfg.target),
                test_accuracy: None,
                test_loss: eval.metric,
                param_count: param_count(&cfg.arch()),
                wall_time_s: out.outcome.record.wall_time_s,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_sizes() {
        let base = TrainConfig::default();
        assert_eq!(sweep_configs(AblationAxis::Init, &base).len(), 6);
        assert_eq!(sweep_configs(AblationAxis::Norm, &base).len(), 3);
        assert_eq!(sweep_configs(AblationAxis::Kind, &base).len(), 2);
        let degrees: Vec<usize> = sweep_configs(AblationAxis::Degree, &base)
            .iter()
            .map(|(_, c)| param_count(&c.arch))
            .collect();
        assert_eq!(degrees, [77_376, 103_136, 128_896, 154_656]);
    }

    #[test]
    fn axis_names() {
        for a in AblationAxis::ALL {
            assert_eq!(a.as_str().parse::<AblationAxis>().unwrap(), a);
        }
        assert!("bogus".parse::<AblationAxis>().is_err());
    }

    #[test]
    fn csv_leaves_accuracy_empty_for_regression() {
        let rows = [AblationRow {
            axis_value: "sin_plus_sq:first".into(),
            test_accuracy: None,
            test_loss: 0.5,
            param_count: 40,
            wall_time_s: 1.0,
        }];
        let mut out = Vec::new();
        write_ablation_csv(&mut out, &rows, &["axis=kind".into()]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("# axis=kind\n{ABLATION_CSV_HEADER}\nsin_plus_sq:first,,0.5,40,1\n")
        );
    }
}
