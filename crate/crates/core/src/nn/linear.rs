//! Dense affine map over flat vectors (used by the dynamic kernel generators).

use super::params::{Init, ParamSpec, ParamStore};

/// `y = W x + b` with `W` stored row-major as `[out][in]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub name: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(name: impl Into<String>, in_dim: usize, out_dim: usize) -> Self {
        Self {
            name: name.into(),
            in_dim,
            out_dim,
        }
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::trainable(
                self.weight_name(),
                vec![self.out_dim, self.in_dim],
                Init::FanInUniform { fan_in: self.in_dim },
            ),
            ParamSpec::trainable(
                self.bias_name(),
                vec![self.out_dim],
                Init::FanInUniform { fan_in: self.in_dim },
            ),
        ]
    }

    pub fn forward(&self, ps: &ParamStore, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim, "{}: input length mismatch", self.name);
        let w = ps.value(&self.weight_name());
        let b = ps.value(&self.bias_name());
        let mut y = b.to_vec();
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
            *yo += row.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        y
    }

    /// Accumulates parameter gradients; returns the input gradient.
    pub fn backward(&self, ps: &mut ParamStore, x: &[f64], gout: &[f64]) -> Vec<f64> {
        let mut gw = vec![0.0; self.out_dim * self.in_dim];
        let mut gx = vec![0.0; self.in_dim];
        {
            let w = ps.value(&self.weight_name());
            for o in 0..self.out_dim {
                let g = gout[o];
                let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
                let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    grow[i] += g * x[i];
                    gx[i] += g * row[i];
                }
            }
        }
        ps.add_grad(&self.weight_name(), &gw);
        ps.add_grad(&self.bias_name(), gout);
        gx
    }
}
