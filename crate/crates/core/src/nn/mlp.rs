use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};

/// One fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `(out_dim, in_dim)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    layers: Vec<Dense>,
}

/// Per-parameter gradient, shaped like the network it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Activations retained by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache always holds the input")
    }

    pub fn into_output(mut self) -> Array2<f64> {
        self.activations.pop().expect("cache always holds the input")
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidConfig(format!(
            "network needs at least two non-zero layer widths, got {dims:?}"
        )));
    }
    Ok(())
}

impl Mlp {
    /// He-uniform hidden weights with biases uniform in `+-1/sqrt(fan_in)`;
    /// small uniform output weights with a zero bias.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        check_dims(dims)?;
        let depth = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = if l + 1 < depth {
                    (6.0 / fan_in as f64).sqrt()
                } else {
                    0.1 / (fan_in as f64).sqrt()
                };
                let weights =
                    Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..=limit));
                let bias = if l + 1 < depth {
                    let b = 1.0 / (fan_in as f64).sqrt();
                    Array1::from_shape_fn(fan_out, |_| rng.random_range(-b..=b))
                } else {
                    Array1::zeros(fan_out)
                };
                Dense { weights, bias }
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let layers = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
        })
    }

    /// Builds a network from explicit layers; consecutive shapes must chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidConfig("network needs at least one layer".into()))?;
        let mut dims = vec![first.weights.ncols()];
        for layer in &layers {
            let (out, inp) = layer.weights.dim();
            if inp != *dims.last().unwrap() {
                return Err(Error::DimensionMismatch {
                    expected: *dims.last().unwrap(),
                    got: inp,
                });
            }
            if layer.bias.len() != out {
                return Err(Error::DimensionMismatch {
                    expected: out,
                    got: layer.bias.len(),
                });
            }
            dims.push(out);
        }
        check_dims(&dims)?;
        Ok(Self { dims, layers })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Mutable access to parameters; shapes stay fixed.
    pub fn layer_mut(&mut self, l: usize) -> &mut Dense {
        &mut self.layers[l]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    /// Parameters flattened layer by layer: weights row-major, then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        unflatten_into(&mut self.layers, params)
    }

    /// Overwrites this network's parameters with `other`'s (same shape required).
    pub fn copy_from(&mut self, other: &Mlp) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::InvalidConfig(format!(
                "cannot copy {:?} into {:?}",
                other.dims, self.dims
            )));
        }
        self.layers.clone_from(&other.layers);
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut a = Array1::from(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&a);
            z += &layer.bias;
            if l < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a.to_vec())
    }

    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: inputs.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_owned());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = activations[l].dot(&layer.weights.t());
            z += &layer.bias;
            if l < last {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Gradient of `sum_b <upstream[b], output[b]>` with respect to every
    /// parameter, given the cache of the corresponding forward pass.
    pub fn backward(&self, cache: &ForwardCache, upstream: ArrayView2<'_, f64>) -> Result<Gradients> {
        let out = cache.output();
        if upstream.dim() != out.dim() {
            return Err(Error::DimensionMismatch {
                expected: out.ncols(),
                got: upstream.ncols(),
            });
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.to_owned();
        for l in (0..self.layers.len()).rev() {
            let input = &cache.activations[l];
            grads.push(Dense {
                weights: delta.t().dot(input),
                bias: delta.sum_axis(Axis(0)),
            });
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights);
                // ReLU derivative; post-activation is zero exactly where the unit was off.
                Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Single-sample backward pass.
    pub fn gradient(&self, input: &[f64], upstream: &[f64]) -> Result<Gradients> {
        if upstream.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let cache = self.forward_batch(x)?;
        let up = ArrayView2::from_shape((1, upstream.len()), upstream).expect("row vector");
        self.backward(&cache, up)
    }
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.weights.ncols(), l.weights.nrows()))
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.weights *= factor;
            layer.bias *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    pub(crate) fn matches(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, p)| g.weights.dim() == p.weights.dim() && g.bias.len() == p.bias.len())
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

pub(crate) fn flatten(layers: &[Dense]) -> Vec<f64> {
    let mut out = Vec::with_capacity(layers.iter().map(Dense::param_count).sum());
    for layer in layers {
        out.extend(layer.weights.iter());
        out.extend(layer.bias.iter());
    }
    out
}

pub(crate) fn unflatten_into(layers: &mut [Dense], params: &[f64]) -> Result<()> {
    let expected: usize = layers.iter().map(Dense::param_count).sum();
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    let mut offset = 0;
    for layer in layers {
        for w in layer.weights.iter_mut() {
            *w = params[offset];
            offset += 1;
        }
        for b in layer.bias.iter_mut() {
            *b = params[offset];
            offset += 1;
        }
    }
    Ok(())
}
