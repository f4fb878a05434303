//! The Conv-BN-ReLU block used throughout the backbone and heads.

use super::conv::Conv2d;
use super::norm::{BatchNorm, BnCache, Mode};
use super::ops::{relu, relu_backward};
use super::params::{ParamSpec, ParamStore};
use crate::error::Result;
use crate::tensor::FeatureMap;

#[derive(Clone, Debug)]
pub struct ConvBnRelu {
    pub conv: Conv2d,
    pub bn: BatchNorm,
}

#[derive(Clone, Debug)]
pub struct ConvBnReluCache {
    pub input: FeatureMap,
    pub pre_bn: FeatureMap,
    pub pre_relu: FeatureMap,
    pub bn: BnCache,
}

impl ConvBnRelu {
    pub fn new(name: &str, kh: usize, kw: usize, cin: usize, cout: usize, stride: usize) -> Self {
        Self {
            conv: Conv2d::new(format!("{name}.conv"), kh, kw, cin, cout, stride),
            bn: BatchNorm::new(format!("{name}.bn"), cout),
        }
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        let mut s = self.conv.specs();
        s.extend(self.bn.specs());
        s
    }

    pub fn forward(
        &self,
        ps: &ParamStore,
        x: &FeatureMap,
        mode: Mode,
    ) -> Result<(FeatureMap, ConvBnReluCache)> {
        let pre_bn = self.conv.forward(ps, x)?;
        let (pre_relu, bn) = self.bn.forward(ps, &pre_bn, mode);
        let out = relu(&pre_relu);
        Ok((
            out,
            ConvBnReluCache {
                input: x.clone(),
                pre_bn,
                pre_relu,
                bn,
            },
        ))
    }

    pub fn backward(
        &self,
        ps: &mut ParamStore,
        cache: &ConvBnReluCache,
        gout: &FeatureMap,
    ) -> FeatureMap {
        let g = relu_backward(&cache.pre_relu, gout);
        let g = self.bn.backward(ps, &cache.pre_bn, &cache.bn, &g);
        self.conv.backward(ps, &cache.input, &g)
    }

    pub fn update_running(&self, ps: &mut ParamStore, cache: &ConvBnReluCache) {
        self.bn.update_running(ps, &cache.bn);
    }
}
