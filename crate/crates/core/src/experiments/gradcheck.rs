use super::dd::{Dd, DdNet};
use crate::chebyshev::PolyKind;
use crate::error::{Error, Result};
use crate::layers::InitMethod;
use crate::ndcore::Mat;
use crate::network::{ArchSpec, Layer, Sequential};
use crate::rng::{Dist, Rng};

/// Deliberate backward-pass corruption, used to show the harness can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    FlipInputGradSign,
    FlipCoeffGradSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub h: f64,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            trials: 100,
            h: 1e-6,
            seed: 42,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub arch: ArchSpec,
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub trials: usize,
    pub coordinates: usize,
    pub max_rel_err: f64,
    /// Configuration that produced `max_rel_err`.
    pub worst: Option<TrialSpec>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1e-12)
}

/// Trial `t` cycles degree through 0..=6, then kind, then LayerNorm on/off;
/// widths and batch size are drawn from `rng`. Hidden widths start at 3: a
/// two-feature LayerNorm maps every row to roughly `±1`, so gradients through
/// it are of order `eps`, below what the f64 backward pass resolves to 1e-5.
pub fn sample_trial(t: usize, rng: &mut Rng) -> TrialSpec {
    let degree = t % 7;
    let kind = if (t / 7).is_multiple_of(2) { PolyKind::First } else { PolyKind::Second };
    let layernorm = (t / 14).is_multiple_of(2);
    let depth = rng.int_in(2, 3);
    let widths = (0..=depth)
        .map(|k| if k == 0 || k == depth { rng.int_in(1, 4) } else { rng.int_in(3, 5) })
        .collect();
    let batch = rng.int_in(1, 3);
    TrialSpec {
        arch: ArchSpec::new(widths, degree, kind, layernorm),
        batch,
    }
}

/// Worst relative error between the analytic gradients of
/// `L = Σ r ⊙ net(x)` and central differences with step `h`, over every
/// parameter and input coordinate.
///
/// The differences are taken on a double-double re-evaluation of the
/// network, so the step is exact and the quotient carries no f64 roundoff
/// (which would otherwise be about `1e-16·|L|/h`, as large as the gradient
/// itself for coordinates with `|∂L| ~ 1e-5`).
pub fn check_network(net: &mut Sequential, x: &Mat, r: &Mat, h: f64, fault: Option<Fault>) -> Result<(f64, usize)> {
    net.set_training(true);
    net.forward(x)?;
    let mut dx = net.backward(r)?;
    let mut analytic = Vec::new();
    let mut is_coeff = Vec::new();
    for layer in net.layers_mut() {
        let kan = matches!(layer, Layer::Kan(_));
        for (_, g) in layer.param_groups() {
            analytic.extend_from_slice(g);
            is_coeff.extend(std::iter::repeat_n(kan, g.len()));
        }
    }
    match fault {
        Some(Fault::FlipInputGradSign) => dx = dx.scale(-1.0),
        Some(Fault::FlipCoeffGradSign) => {
            for (g, &c) in analytic.iter_mut().zip(&is_coeff) {
                if c {
                    *g = -*g;
                }
            }
        }
        None => {}
    }
    net.set_training(false);

    let oracle = DdNet::of(net);
    let loss = |params: &[Dd], x: &[Dd]| -> Dd {
        let out = net.output_dim();
        let mut total = Dd::ZERO;
        for (b, row) in x.chunks(net.input_dim()).enumerate() {
            let y = oracle.forward_row(params, row);
            for (o, &v) in y.iter().enumerate() {
                total = total + v * Dd::from(r.as_slice()[b * out + o]);
            }
        }
        total
    };
    let step = Dd::from(h);
    let central = |plus: Dd, minus: Dd| ((plus - minus) / (step + step)).hi;
    let mut worst: f64 = 0.0;

    let mut p: Vec<Dd> = net.params_flat().into_iter().map(Dd::from).collect();
    let xs: Vec<Dd> = x.as_slice().iter().copied().map(Dd::from).collect();
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + step;
        let plus = loss(&p, &xs);
        p[k] = orig - step;
        let minus = loss(&p, &xs);
        p[k] = orig;
        worst = worst.max(relative_error(analytic[k], central(plus, minus)));
    }

    let mut xp = xs.clone();
    for k in 0..xs.len() {
        xp[k] = xs[k] + step;
        let plus = loss(&p, &xp);
        xp[k] = xs[k] - step;
        let minus = loss(&p, &xp);
        xp[k] = xs[k];
        worst = worst.max(relative_error(dx.as_slice()[k], central(plus, minus)));
    }
    if !worst.is_finite() {
        return Err(Error::NonFinite("gradient check"));
    }
    Ok((worst, p.len() + xs.len()))
}

/// Runs `cfg.trials` randomly configured small networks through
/// [`check_network`]. LayerNorm scales and shifts are perturbed away from
/// their identity initialization so their gradients are exercised.
pub fn grad_check(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    if !(cfg.h > 0.0 && cfg.h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be > 0, got {}", cfg.h)));
    }
    let root = Rng::named(cfg.seed, "gradcheck");
    let mut report = GradCheckReport {
        trials: cfg.trials,
        coordinates: 0,
        max_rel_err: 0.0,
        worst: None,
    };
    for t in 0..cfg.trials {
        let mut rng = root.substream_index(t as u64);
        let spec = sample_trial(t, &mut rng);
        let mut net = Sequential::build(&spec.arch, InitMethod::Xavier, &rng.substream("init"))?;
        for layer in net.layers_mut() {
            if let Layer::Norm(ln) = layer {
                rng.fill(ln.gamma_mut(), Dist::Uniform { lo: 0.5, hi: 1.5 })?;
                rng.fill(ln.beta_mut(), Dist::Normal { mean: 0.0, std: 0.3 })?;
            }
        }
        let x = Mat::random(spec.batch, spec.arch.input_dim(), &mut rng, Dist::Uniform { lo: -1.0, hi: 1.0 })?;
        let r = Mat::random(spec.batch, spec.arch.output_dim(), &mut rng, Dist::Normal { mean: 0.0, std: 1.0 })?;
        let (err, coords) = check_network(&mut net, &x, &r, cfg.h, cfg.fault)?;
        report.coordinates += coords;
        if err > report.max_rel_err || report.worst.is_none() {
            report.max_rel_err = report.max_rel_err.max(err);
            report.worst = Some(spec);
        }
    }
    Ok(report)
}
