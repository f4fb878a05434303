//! Plain 2-D convolution with implicit zero padding.

use super::params::{Init, ParamSpec, ParamStore};
use crate::error::{invalid, Result};
use crate::tensor::FeatureMap;

/// Convolution layer description. Weights are stored as
/// `[kh][kw][cin][cout]`, padding is `(k - 1) / 2` per axis, so spatial size
/// is preserved at stride 1 and halved at stride 2 for even inputs.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub name: String,
    pub kh: usize,
    pub kw: usize,
    pub cin: usize,
    pub cout: usize,
    pub stride: usize,
}

impl Conv2d {
    pub fn new(name: impl Into<String>, kh: usize, kw: usize, cin: usize, cout: usize, stride: usize) -> Self {
        assert!(kh % 2 == 1 && kw % 2 == 1, "only odd kernels are used here");
        assert!(stride == 1 || stride == 2);
        Self {
            name: name.into(),
            kh,
            kw,
            cin,
            cout,
            stride,
        }
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        let fan_in = self.kh * self.kw * self.cin;
        vec![
            ParamSpec::trainable(
                self.weight_name(),
                vec![self.kh, self.kw, self.cin, self.cout],
                Init::FanInUniform { fan_in },
            ),
            ParamSpec::trainable(self.bias_name(), vec![self.cout], Init::FanInUniform { fan_in }),
        ]
    }

    fn out_size(&self, h: usize, w: usize) -> (usize, usize) {
        let ph = (self.kh - 1) / 2;
        let pw = (self.kw - 1) / 2;
        (
            (h + 2 * ph - self.kh) / self.stride + 1,
            (w + 2 * pw - self.kw) / self.stride + 1,
        )
    }

    pub fn forward(&self, ps: &ParamStore, x: &FeatureMap) -> Result<FeatureMap> {
        if x.channels() != self.cin {
            return Err(invalid(format!(
                "{}: input has {} channels, expected {}",
                self.name,
                x.channels(),
                self.cin
            )));
        }
        let w = ps.value(&self.weight_name());
        let b = ps.value(&self.bias_name());
        Ok(conv2d_forward(
            x, w, b, self.kh, self.kw, self.cin, self.cout, self.stride,
        ))
    }

    /// Accumulates weight/bias gradients into the store and returns the
    /// gradient with respect to the input.
    pub fn backward(
        &self,
        ps: &mut ParamStore,
        x: &FeatureMap,
        gout: &FeatureMap,
    ) -> FeatureMap {
        let (gx, gw, gb) = {
            let w = ps.value(&self.weight_name());
            conv2d_backward(x, w, gout, self.kh, self.kw, self.cin, self.cout, self.stride)
        };
        ps.add_grad(&self.weight_name(), &gw);
        ps.add_grad(&self.bias_name(), &gb);
        gx
    }
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d_forward(
    x: &FeatureMap,
    w: &[f64],
    b: &[f64],
    kh: usize,
    kw: usize,
    cin: usize,
    cout: usize,
    stride: usize,
) -> FeatureMap {
    let (h, ww) = (x.height(), x.width());
    let ph = (kh - 1) / 2;
    let pw = (kw - 1) / 2;
    let ho = (h + 2 * ph - kh) / stride + 1;
    let wo = (ww + 2 * pw - kw) / stride + 1;
    let mut out = FeatureMap::zeros(ho, wo, cout);
    let mut acc = vec![0.0; cout];
    for yo in 0..ho {
        for xo in 0..wo {
            acc.copy_from_slice(b);
            for ky in 0..kh {
                let iy = (yo * stride + ky) as isize - ph as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..kw {
                    let ix = (xo * stride + kx) as isize - pw as isize;
                    if ix < 0 || ix >= ww as isize {
                        continue;
                    }
                    let px = x.pixel(iy as usize, ix as usize);
                    let base = ((ky * kw + kx) * cin) * cout;
                    for (ci, &v) in px.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let wrow = &w[base + ci * cout..base + (ci + 1) * cout];
                        for (a, wv) in acc.iter_mut().zip(wrow.iter()) {
                            *a += v * wv;
                        }
                    }
                }
            }
            out.pixel_mut(yo, xo).copy_from_slice(&acc);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward(
    x: &FeatureMap,
    w: &[f64],
    gout: &FeatureMap,
    kh: usize,
    kw: usize,
    cin: usize,
    cout: usize,
    stride: usize,
) -> (FeatureMap, Vec<f64>, Vec<f64>) {
    let (h, ww) = (x.height(), x.width());
    let ph = (kh - 1) / 2;
    let pw = (kw - 1) / 2;
    let mut gx = FeatureMap::zeros(h, ww, cin);
    let mut gw = vec![0.0; kh * kw * cin * cout];
    let mut gb = vec![0.0; cout];
    for yo in 0..gout.height() {
        for xo in 0..gout.width() {
            let g = gout.pixel(yo, xo);
            for (a, gv) in gb.iter_mut().zip(g.iter()) {
                *a += gv;
            }
            for ky in 0..kh {
                let iy = (yo * stride + ky) as isize - ph as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..kw {
                    let ix = (xo * stride + kx) as isize - pw as isize;
                    if ix < 0 || ix >= ww as isize {
                        continue;
                    }
                    let px = x.pixel(iy as usize, ix as usize);
                    let gp = gx.pixel_mut(iy as usize, ix as usize);
                    let base = ((ky * kw + kx) * cin) * cout;
                    for ci in 0..cin {
                        let wrow = &w[base + ci * cout..base + (ci + 1) * cout];
                        let gwrow = &mut gw[base + ci * cout..base + (ci + 1) * cout];
                        let v = px[ci];
                        let mut s = 0.0;
                        for co in 0..cout {
                            s += wrow[co] * g[co];
                            gwrow[co] += v * g[co];
                        }
                        gp[ci] += s;
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_follow_stride() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamStore::new();
        let c1 = Conv2d::new("c1", 3, 3, 2, 4, 1);
        let c2 = Conv2d::new("c2", 3, 3, 4, 4, 2);
        ps.register_all(&c1.specs(), &mut rng);
        ps.register_all(&c2.specs(), &mut rng);
        let x = FeatureMap::random(8, 6, 2, 1.0, &mut rng);
        let y = c1.forward(&ps, &x).unwrap();
        assert_eq!(y.shape(), (8, 6, 4));
        let z = c2.forward(&ps, &y).unwrap();
        assert_eq!(z.shape(), (4, 3, 4));
    }

    #[test]
    fn identity_kernel_passes_values_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ps = ParamStore::new();
        let c = Conv2d::new("c", 3, 3, 1, 1, 1);
        ps.register_all(&c.specs(), &mut rng);
        let w = ps.value_mut(&c.weight_name());
        w.fill(0.0);
        // center tap is (ky=1, kx=1)
        w[(1 * 3 + 1) * 1 * 1] = 1.0;
        ps.value_mut(&c.bias_name()).fill(0.0);
        let x = FeatureMap::random(5, 5, 1, 1.0, &mut rng);
        let y = c.forward(&ps, &x).unwrap();
        assert!(x.max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn rejects_channel_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamStore::new();
        let c = Conv2d::new("c", 3, 3, 2, 2, 1);
        ps.register_all(&c.specs(), &mut rng);
        let x = FeatureMap::zeros(4, 4, 3);
        assert!(c.forward(&ps, &x).is_err());
    }
}
