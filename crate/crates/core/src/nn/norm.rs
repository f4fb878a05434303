//! Per-channel batch normalization over the spatial extent of one map.
//!
//! Training mode normalizes with the statistics of the map being processed
//! (each example carries thousands of spatial samples per channel, so the
//! estimates are stable and examples stay independent). Inference mode uses
//! the tracked running statistics.

use super::params::{Init, ParamSpec, ParamStore};
use crate::tensor::FeatureMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub name: String,
    pub channels: usize,
    pub eps: f64,
    pub momentum: f64,
}

/// Values backward needs from the forward pass.
#[derive(Clone, Debug)]
pub struct BnCache {
    pub mode: Mode,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BatchNorm {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        Self {
            name: name.into(),
            channels,
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    pub fn gamma_name(&self) -> String {
        format!("{}.gamma", self.name)
    }

    pub fn beta_name(&self) -> String {
        format!("{}.beta", self.name)
    }

    pub fn running_mean_name(&self) -> String {
        format!("{}.running_mean", self.name)
    }

    pub fn running_var_name(&self) -> String {
        format!("{}.running_var", self.name)
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::trainable(self.gamma_name(), vec![self.channels], Init::Ones),
            ParamSpec::trainable(self.beta_name(), vec![self.channels], Init::Zeros),
            ParamSpec::tracked(self.running_mean_name(), vec![self.channels], Init::Zeros),
            ParamSpec::tracked(self.running_var_name(), vec![self.channels], Init::Ones),
        ]
    }

    pub fn forward(&self, ps: &ParamStore, x: &FeatureMap, mode: Mode) -> (FeatureMap, BnCache) {
        assert_eq!(x.channels(), self.channels, "{}: channel mismatch", self.name);
        let gamma = ps.value(&self.gamma_name());
        let beta = ps.value(&self.beta_name());
        let c = self.channels;
        let n = (x.height() * x.width()) as f64;

        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; c];
                for px in x.data().chunks_exact(c) {
                    for (m, v) in mean.iter_mut().zip(px.iter()) {
                        *m += v;
                    }
                }
                for m in mean.iter_mut() {
                    *m /= n;
                }
                let mut var = vec![0.0; c];
                for px in x.data().chunks_exact(c) {
                    for ((vv, v), m) in var.iter_mut().zip(px.iter()).zip(mean.iter()) {
                        let d = v - m;
                        *vv += d * d;
                    }
                }
                for v in var.iter_mut() {
                    *v /= n;
                }
                (mean, var)
            }
            Mode::Eval => (
                ps.value(&self.running_mean_name()).to_vec(),
                ps.value(&self.running_var_name()).to_vec(),
            ),
        };

        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut out = x.clone();
        for px in out.data_mut().chunks_exact_mut(c) {
            for ch in 0..c {
                px[ch] = gamma[ch] * (px[ch] - mean[ch]) * inv_std[ch] + beta[ch];
            }
        }
        (out, BnCache { mode, mean, var })
    }

    /// Folds one map's batch statistics into the running estimates.
    pub fn update_running(&self, ps: &mut ParamStore, cache: &BnCache) {
        let mom = self.momentum;
        {
            let rm = ps.value_mut(&self.running_mean_name());
            for (r, m) in rm.iter_mut().zip(cache.mean.iter()) {
                *r = (1.0 - mom) * *r + mom * m;
            }
        }
        let rv = ps.value_mut(&self.running_var_name());
        for (r, v) in rv.iter_mut().zip(cache.var.iter()) {
            *r = (1.0 - mom) * *r + mom * v;
        }
    }

    pub fn backward(
        &self,
        ps: &mut ParamStore,
        x: &FeatureMap,
        cache: &BnCache,
        gout: &FeatureMap,
    ) -> FeatureMap {
        let c = self.channels;
        let gamma = ps.value(&self.gamma_name()).to_vec();
        let inv_std: Vec<f64> = cache
            .var
            .iter()
            .map(|v| 1.0 / (v + self.eps).sqrt())
            .collect();

        let mut g_gamma = vec![0.0; c];
        let mut g_beta = vec![0.0; c];
        let mut gx = FeatureMap::zeros(x.height(), x.width(), c);

        match cache.mode {
            Mode::Eval => {
                for ((xpx, gpx), opx) in x
                    .data()
                    .chunks_exact(c)
                    .zip(gout.data().chunks_exact(c))
                    .zip(gx.data_mut().chunks_exact_mut(c))
                {
                    for ch in 0..c {
                        let xhat = (xpx[ch] - cache.mean[ch]) * inv_std[ch];
                        g_gamma[ch] += gpx[ch] * xhat;
                        g_beta[ch] += gpx[ch];
                        opx[ch] = gpx[ch] * gamma[ch] * inv_std[ch];
                    }
                }
            }
            Mode::Train => {
                let n = (x.height() * x.width()) as f64;
                // per-channel sums of dxhat and dxhat * xhat
                let mut sum_dxhat = vec![0.0; c];
                let mut sum_dxhat_xhat = vec![0.0; c];
                for (xpx, gpx) in x.data().chunks_exact(c).zip(gout.data().chunks_exact(c)) {
                    for ch in 0..c {
                        let xhat = (xpx[ch] - cache.mean[ch]) * inv_std[ch];
                        let dxhat = gpx[ch] * gamma[ch];
                        sum_dxhat[ch] += dxhat;
                        sum_dxhat_xhat[ch] += dxhat * xhat;
                        g_gamma[ch] += gpx[ch] * xhat;
                        g_beta[ch] += gpx[ch];
                    }
                }
                for ((xpx, gpx), opx) in x
                    .data()
                    .chunks_exact(c)
                    .zip(gout.data().chunks_exact(c))
                    .zip(gx.data_mut().chunks_exact_mut(c))
                {
                    for ch in 0..c {
                        let xhat = (xpx[ch] - cache.mean[ch]) * inv_std[ch];
                        let dxhat = gpx[ch] * gamma[ch];
                        opx[ch] = inv_std[ch]
                            * (dxhat - sum_dxhat[ch] / n - xhat * sum_dxhat_xhat[ch] / n);
                    }
                }
            }
        }
        ps.add_grad(&self.gamma_name(), &g_gamma);
        ps.add_grad(&self.beta_name(), &g_beta);
        gx
    }
}
