//! Sequential networks of KAN, LayerNorm and dense layers.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::chebyshev::PolyKind;
use crate::error::{Error, Result};
use crate::layers::{Activation, ChebyKanLayer, DenseLayer, InitMethod, LayerNorm};
use crate::ndcore::Mat;
use crate::rng::Rng;

/// Magic token at the start of a serialized model.
pub const MODEL_MAGIC: &str = "chebykan-v1";

/// Layer widths plus the shared polynomial settings of a KAN stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub widths: Vec<usize>,
    pub degree: usize,
    pub kind: PolyKind,
    /// Insert a LayerNorm at every interior boundary.
    pub layernorm_between: bool,
}

impl ArchSpec {
    pub fn new(widths: Vec<usize>, degree: usize, kind: PolyKind, layernorm_between: bool) -> Self {
        ArchSpec {
            widths,
            degree,
            kind,
            layernorm_between,
        }
    }

    /// The MNIST classifier: `784 → 32 → 16 → 10` with LayerNorm after the
    /// two hidden KAN layers.
    ///
    /// Its parameter count is `25,760·(d+1) + 96`: `784·32 + 32·16 + 16·10 =
    /// 25,760` coefficients per basis function and `2·(32+16) = 96`
    /// LayerNorm parameters, which gives 77,376 / 103,136 / 128,896 /
    /// 154,656 for degrees 2 through 5.
    pub fn mnist(degree: usize, kind: PolyKind) -> Self {
        ArchSpec::new(vec![784, 32, 16, 10], degree, kind, true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "architecture needs at least 2 widths, got {:?}",
                self.widths
            )));
        }
        if self.widths.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "all widths must be >= 1, got {:?}",
                self.widths
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap_or(&0)
    }
}

/// Number of trainable parameters in the network `spec` describes.
pub fn param_count(spec: &ArchSpec) -> usize {
    let basis = spec.degree + 1;
    let kan: usize = spec.widths.windows(2).map(|w| w[0] * w[1] * basis).sum();
    let norm: usize = if spec.layernorm_between && spec.widths.len() > 2 {
        spec.widths[1..spec.widths.len() - 1].iter().map(|w| 2 * w).sum()
    } else {
        0
    };
    kan + norm
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths: Vec<String> = self.widths.iter().map(usize::to_string).collect();
        write!(
            f,
            "widths={};degree={};kind={};ln={}",
            widths.join(","),
            self.degree,
            self.kind,
            u8::from(self.layernorm_between)
        )
    }
}

impl FromStr for ArchSpec {
    type Err = Error;

    /// Parses `widths=784,32,16,10;degree=3;kind=first;ln=1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("arch string '{s}': {msg}"));
        let (mut widths, mut degree, mut kind, mut ln) = (None, None, None, None);
        for part in s.split(';').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("'{part}' is not key=value")))?;
            let value = value.trim();
            match key.trim() {
                "widths" => {
                    let parsed: std::result::Result<Vec<usize>, _> =
                        value.split(',').map(|w| w.trim().parse::<usize>()).collect();
                    widths = Some(parsed.map_err(|e| bad(format!("widths: {e}")))?);
                }
                "degree" => degree = Some(value.parse::<usize>().map_err(|e| bad(format!("degree: {e}")))?),
                "kind" => kind = Some(value.parse::<PolyKind>()?),
                "ln" => {
                    ln = Some(match value {
                        "1" | "true" => true,
                        "0" | "false" => false,
                        _ => return Err(bad(format!("ln must be 0 or 1, got '{value}'"))),
                    })
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        let spec = ArchSpec {
            widths: widths.ok_or_else(|| bad("missing widths".into()))?,
            degree: degree.ok_or_else(|| bad("missing degree".into()))?,
            kind: kind.ok_or_else(|| bad("missing kind".into()))?,
            layernorm_between: ln.ok_or_else(|| bad("missing ln".into()))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Kan(ChebyKanLayer),
    Norm(LayerNorm),
    Dense(DenseLayer),
}

macro_rules! dispatch {
    ($self:expr, $layer:ident => $body:expr) => {
        match $self {
            Layer::Kan($layer) => $body,
            Layer::Norm($layer) => $body,
            Layer::Dense($layer) => $body,
        }
    };
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Kan(l) => l.input_dim(),
            Layer::Norm(l) => l.dim(),
            Layer::Dense(l) => l.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Layer::Kan(l) => l.output_dim(),
            Layer::Norm(l) => l.dim(),
            Layer::Dense(l) => l.output_dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        dispatch!(self, l => l.param_count())
    }

    pub fn forward(&mut self, x: &Mat) -> Result<Mat> {
        dispatch!(self, l => l.forward(x))
    }

    pub fn infer(&self, x: &Mat) -> Result<Mat> {
        dispatch!(self, l => l.infer(x))
    }

    pub fn backward(&mut self, grad_out: &Mat) -> Result<Mat> {
        dispatch!(self, l => l.backward(grad_out))
    }

    fn clear_cache(&mut self) {
        dispatch!(self, l => l.clear_cache())
    }

    /// `(params, grads)` slices in serialization order.
    pub fn param_groups(&mut self) -> Vec<(&mut [f64], &[f64])> {
        match self {
            Layer::Kan(l) => l.param_groups().into(),
            Layer::Norm(l) => l.param_groups().into(),
            Layer::Dense(l) => l.param_groups().into(),
        }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Kan(l) => l.params().into(),
            Layer::Norm(l) => l.params().into(),
            Layer::Dense(l) => l.params().into(),
        }
    }
}

/// Layers applied in order.
#[derive(Debug, Clone)]
pub struct Sequential {
    layers: Vec<Layer>,
    arch: Option<ArchSpec>,
    training: bool,
}

impl Sequential {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    "Sequential::new",
                    format!("layer {} input width {}", k + 1, pair[0].output_dim()),
                    format!("{}", pair[1].input_dim()),
                ));
            }
        }
        Ok(Sequential {
            layers,
            arch: None,
            training: true,
        })
    }

    /// KAN stack with zero coefficients.
    pub fn zeroed(spec: &ArchSpec) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::new();
        let last = spec.widths.len() - 2;
        for (k, w) in spec.widths.windows(2).enumerate() {
            layers.push(Layer::Kan(ChebyKanLayer::new(w[0], w[1], spec.degree, spec.kind)));
            if spec.layernorm_between && k < last {
                layers.push(Layer::Norm(LayerNorm::new(w[1])));
            }
        }
        let mut net = Sequential::new(layers)?;
        net.arch = Some(spec.clone());
        Ok(net)
    }

    /// KAN stack initialized with `init`; KAN layer `k` draws from substream `k` of `rng`.
    pub fn build(spec: &ArchSpec, init: InitMethod, rng: &Rng) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        let mut k: u64 = 0;
        for layer in &mut net.layers {
            if let Layer::Kan(l) = layer {
                l.init_coeffs(init, &mut rng.substream_index(k))?;
                k += 1;
            }
        }
        Ok(net)
    }

    /// ReLU multilayer perceptron baseline with a linear output layer.
    pub fn mlp(widths: &[usize], init: InitMethod, rng: &Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid MLP widths {widths:?}")));
        }
        let last = widths.len() - 2;
        let mut layers = Vec::new();
        for (k, w) in widths.windows(2).enumerate() {
            let act = if k < last { Activation::Relu } else { Activation::None };
            let mut d = DenseLayer::new(w[0], w[1], act);
            d.init_weights(init, &mut rng.substream_index(k as u64))?;
            layers.push(Layer::Dense(d));
        }
        Sequential::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn arch(&self) -> Option<&ArchSpec> {
        self.arch.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    /// In eval mode `forward` keeps no activations.
    pub fn set_training(&mut self, training: bool) {
        self.training = training;
        if !training {
            self.layers.iter_mut().for_each(Layer::clear_cache);
        }
    }

    pub fn forward(&mut self, x: &Mat) -> Result<Mat> {
        if !self.training {
            return self.infer(x);
        }
        let mut h = self.layers[0].forward(x)?;
        for layer in &mut self.layers[1..] {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    /// Read-only forward pass; safe to share across threads.
    pub fn infer(&self, x: &Mat) -> Result<Mat> {
        let mut h = self.layers[0].infer(x)?;
        for layer in &self.layers[1..] {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Populates every layer's gradients and returns `∂L/∂x`.
    pub fn backward(&mut self, grad_out: &Mat) -> Result<Mat> {
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Populates every layer's gradients without computing `∂L/∂x` for the
    /// first layer.
    pub fn backward_params(&mut self, grad_out: &Mat) -> Result<()> {
        let (first, rest) = self.layers.split_first_mut().expect("non-empty");
        let mut g = grad_out.clone();
        for layer in rest.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        match first {
            Layer::Kan(l) => l.backward_params(&g),
            other => other.backward(&g).map(|_| ()),
        }
    }

    /// Calls `f(group_index, params, grads)` for every parameter group in
    /// serialization order.
    pub fn for_each_param_group<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(usize, &mut [f64], &[f64]) -> Result<()>,
    {
        let mut idx = 0;
        for layer in &mut self.layers {
            for (p, g) in layer.param_groups() {
                f(idx, p, g)?;
                idx += 1;
            }
        }
        Ok(())
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .flat_map(|p| p.iter().copied())
            .collect()
    }

    pub fn grads_flat(&mut self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &mut self.layers {
            for (_, g) in layer.param_groups() {
                out.extend_from_slice(g);
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::shape(
                "Sequential::set_params_flat",
                format!("{} values", self.param_count()),
                format!("{}", values.len()),
            ));
        }
        let mut offset = 0;
        self.for_each_param_group(|_, p, _| {
            p.copy_from_slice(&values[offset..offset + p.len()]);
            offset += p.len();
            Ok(())
        })
    }

    /// Header line `chebykan-v1 <arch> <degree> <kind>` followed by every
    /// parameter as little-endian `f64`, in declaration order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let arch = self.arch.as_ref().ok_or_else(|| {
            Error::ModelFormat("only networks built from an ArchSpec can be serialized".into())
        })?;
        let io = |e| Error::io("<model stream>", e);
        writeln!(w, "{MODEL_MAGIC} {arch} {} {}", arch.degree, arch.kind).map_err(io)?;
        for v in self.params_flat() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let io = |e| Error::io("<model stream>", e);
        let mut header = String::new();
        r.read_line(&mut header).map_err(io)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [magic, arch, degree, kind] = fields[..] else {
            return Err(Error::ModelFormat(format!("malformed header '{}'", header.trim_end())));
        };
        if magic != MODEL_MAGIC {
            return Err(Error::ModelFormat(format!("unknown format tag '{magic}'")));
        }
        let spec: ArchSpec = arch.parse()?;
        if degree != spec.degree.to_string() || kind != spec.kind.as_str() {
            return Err(Error::ModelFormat(format!(
                "header degree/kind '{degree} {kind}' disagree with arch '{arch}'"
            )));
        }
        let mut net = Sequential::zeroed(&spec)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io)?;
        let expected = net.param_count() * 8;
        if bytes.len() != expected {
            return Err(Error::ModelFormat(format!(
                "expected {expected} parameter bytes, found {}",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        net.set_params_flat(&values)?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
