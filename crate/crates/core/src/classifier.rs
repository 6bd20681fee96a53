//! Single-hidden-layer network trained with mean-square error on one-hot
//! targets. Backprop also yields δ⁰, the sensitivity at the pooled-feature
//! input, which drives the pooling-map update.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::{checksum_f64, Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the activation value `y = f(x)`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Network parameters. Matrices are row-major: `v1` is `hidden × inputs`,
/// `v2` is `outputs × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub v1: Vec<f64>,
    pub b1: Vec<f64>,
    pub v2: Vec<f64>,
    pub b2: Vec<f64>,
    pub activation: Activation,
}

/// Gradients of J (not negated) for each parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGrads {
    pub v1: Vec<f64>,
    pub b1: Vec<f64>,
    pub v2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl ClassifierGrads {
    fn zeros_like(state: &ClassifierState) -> Self {
        Self {
            v1: vec![0.0; state.v1.len()],
            b1: vec![0.0; state.b1.len()],
            v2: vec![0.0; state.v2.len()],
            b2: vec![0.0; state.b2.len()],
        }
    }

    fn add_assign(&mut self, other: &ClassifierGrads) {
        for (a, b) in
            [(&mut self.v1, &other.v1), (&mut self.b1, &other.b1), (&mut self.v2, &other.v2), (&mut self.b2, &other.b2)]
        {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackpropResult {
    /// `J = ½ Σ_o (output_o − target_o)²`.
    pub loss: f64,
    pub grads: ClassifierGrads,
    /// `−∂J/∂a` at the hidden pre-activation `a`.
    pub delta1: Vec<f64>,
    /// `v1ᵀ δ¹ = −∂J/∂h̄`.
    pub delta0: Vec<f64>,
    pub outputs: Vec<f64>,
}

struct Activations {
    hidden: Vec<f64>,
    outputs: Vec<f64>,
}

/// One-hot target vector.
pub fn one_hot(label: usize, classes: usize) -> Vec<f64> {
    let mut t = vec![0.0; classes];
    t[label] = 1.0;
    t
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl ClassifierState {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            hidden,
            outputs,
            v1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            v2: vec![0.0; outputs * hidden],
            b2: vec![0.0; outputs],
            activation,
        }
    }

    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, activation: Activation, rng: &mut Rng) -> Self {
        let mut s = Self::zeros(inputs, hidden, outputs, activation);
        let a1 = 1.0 / libm::sqrt(inputs.max(1) as f64);
        s.v1.iter_mut().for_each(|w| *w = rng.random_range(-a1..=a1));
        let a2 = 1.0 / libm::sqrt(hidden.max(1) as f64);
        s.v2.iter_mut().for_each(|w| *w = rng.random_range(-a2..=a2));
        s
    }

    /// Validates block sizes against the declared dimensions.
    pub fn check(&self) -> Result<()> {
        let ok = self.v1.len() == self.hidden * self.inputs
            && self.b1.len() == self.hidden
            && self.v2.len() == self.outputs * self.hidden
            && self.b2.len() == self.outputs;
        if !ok {
            return Err(Error::argument("classifier parameter blocks have inconsistent sizes"));
        }
        if self.params().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite classifier parameter".into()));
        }
        Ok(())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.v1.iter().chain(&self.b1).chain(&self.v2).chain(&self.b2)
    }

    pub fn checksum(&self) -> u64 {
        [&self.v1, &self.b1, &self.v2, &self.b2]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, block)| acc ^ checksum_f64(block).rotate_left(i as u32 * 7))
    }

    fn check_input(&self, h_bar: &[f64]) -> Result<()> {
        if h_bar.len() != self.inputs {
            return Err(Error::argument(format!("classifier expects {} inputs, got {}", self.inputs, h_bar.len())));
        }
        Ok(())
    }

    fn run(&self, h_bar: &[f64]) -> Activations {
        let hidden: Vec<f64> = self
            .v1
            .chunks_exact(self.inputs.max(1))
            .take(self.hidden)
            .zip(&self.b1)
            .map(|(row, b)| {
                let a = row.iter().zip(h_bar).map(|(w, x)| w * x).sum::<f64>() + b;
                self.activation.apply(a)
            })
            .collect();
        let outputs = (0..self.outputs)
            .map(|o| {
                let row = &self.v2[o * self.hidden..(o + 1) * self.hidden];
                row.iter().zip(&hidden).map(|(w, x)| w * x).sum::<f64>() + self.b2[o]
            })
            .collect();
        Activations { hidden, outputs }
    }

    /// `v2 · f(v1 · h̄ + b1) + b2`.
    pub fn forward(&self, h_bar: &[f64]) -> Result<Vec<f64>> {
        self.check_input(h_bar)?;
        Ok(self.run(h_bar).outputs)
    }

    pub fn predict(&self, h_bar: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(h_bar)?))
    }

    pub fn loss(&self, h_bar: &[f64], target: &[f64]) -> Result<f64> {
        let out = self.forward(h_bar)?;
        if target.len() != out.len() {
            return Err(Error::argument("target length differs from output count"));
        }
        Ok(half_sq_error(&out, target))
    }

    pub fn backward(&self, h_bar: &[f64], target: &[f64]) -> Result<BackpropResult> {
        self.check_input(h_bar)?;
        if target.len() != self.outputs {
            return Err(Error::argument(format!(
                "target has {} entries, network has {} outputs",
                target.len(),
                self.outputs
            )));
        }
        let ones = target.iter().filter(|&&v| v == 1.0).count();
        let zeros = target.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != target.len() {
            return Err(Error::argument("target is not one-hot"));
        }

        let Activations { hidden, outputs } = self.run(h_bar);
        let loss = half_sq_error(&outputs, target);
        // Output sensitivity −∂J/∂out for a linear output layer.
        let delta2: Vec<f64> = target.iter().zip(&outputs).map(|(t, y)| t - y).collect();

        let mut grads = ClassifierGrads::zeros_like(self);
        for (o, d) in delta2.iter().enumerate() {
            grads.b2[o] = -d;
            for (g, x) in grads.v2[o * self.hidden..(o + 1) * self.hidden].iter_mut().zip(&hidden) {
                *g = -d * x;
            }
        }
        let delta1: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let back: f64 = (0..self.outputs).map(|o| self.v2[o * self.hidden + j] * delta2[o]).sum();
                back * self.activation.derivative_from_output(hidden[j])
            })
            .collect();
        for (j, d) in delta1.iter().enumerate() {
            grads.b1[j] = -d;
            for (g, x) in grads.v1[j * self.inputs..(j + 1) * self.inputs].iter_mut().zip(h_bar) {
                *g = -d * x;
            }
        }
        let mut delta0 = vec![0.0; self.inputs];
        for (j, d) in delta1.iter().enumerate() {
            for (acc, w) in delta0.iter_mut().zip(&self.v1[j * self.inputs..(j + 1) * self.inputs]) {
                *acc += w * d;
            }
        }
        Ok(BackpropResult { loss, grads, delta1, delta0, outputs })
    }

    /// Averages gradients over the batch (in batch order) and takes one step.
    /// Returns the mean loss of the batch before the step.
    pub fn sgd_step(&mut self, batch: &[(&[f64], &[f64])], eta_net: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::argument("empty training batch"));
        }
        let results = crate::par::map_indexed(batch.len(), |i| self.backward(batch[i].0, batch[i].1));
        let mut total = ClassifierGrads::zeros_like(self);
        let mut loss = 0.0;
        for r in results {
            let r = r?;
            loss += r.loss;
            total.add_assign(&r.grads);
        }
        let scale = eta_net / batch.len() as f64;
        for (p, g) in
            [(&mut self.v1, &total.v1), (&mut self.b1, &total.b1), (&mut self.v2, &total.v2), (&mut self.b2, &total.b2)]
        {
            p.iter_mut().zip(g).for_each(|(w, d)| *w -= scale * d);
        }
        Ok(loss / batch.len() as f64)
    }
}

fn half_sq_error(outputs: &[f64], target: &[f64]) -> f64 {
    0.5 * outputs.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>()
}
