//! Small differentiable building blocks: activations, pooling, upsampling.

use crate::tensor::FeatureMap;

pub fn relu(x: &FeatureMap) -> FeatureMap {
    x.map(|v| v.max(0.0))
}

/// Gradient of relu given the forward *input*.
pub fn relu_backward(x: &FeatureMap, gout: &FeatureMap) -> FeatureMap {
    assert_eq!(x.shape(), gout.shape());
    let mut g = gout.clone();
    for (gv, xv) in g.data_mut().iter_mut().zip(x.data().iter()) {
        if *xv <= 0.0 {
            *gv = 0.0;
        }
    }
    g
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_map(x: &FeatureMap) -> FeatureMap {
    x.map(sigmoid)
}

pub fn tanh_map(x: &FeatureMap) -> FeatureMap {
    x.map(f64::tanh)
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample_nearest2(x: &FeatureMap) -> FeatureMap {
    let (h, w, c) = x.shape();
    FeatureMap::from_fn(h * 2, w * 2, c, |y, xx, ch| x.get(y / 2, xx / 2, ch))
}

/// Adjoint of [`upsample_nearest2`]: sums each 2x2 block.
pub fn upsample_nearest2_backward(gout: &FeatureMap) -> FeatureMap {
    let (h2, w2, c) = gout.shape();
    let (h, w) = (h2 / 2, w2 / 2);
    let mut g = FeatureMap::zeros(h, w, c);
    for y in 0..h2 {
        for x in 0..w2 {
            let src = gout.pixel(y, x);
            let dst = g.pixel_mut(y / 2, x / 2);
            for ch in 0..c {
                dst[ch] += src[ch];
            }
        }
    }
    g
}

/// Spatial mean per channel.
pub fn global_avg_pool(x: &FeatureMap) -> Vec<f64> {
    let c = x.channels();
    let n = (x.height() * x.width()) as f64;
    let mut out = vec![0.0; c];
    for px in x.data().chunks_exact(c) {
        for (o, v) in out.iter_mut().zip(px.iter()) {
            *o += v;
        }
    }
    for o in out.iter_mut() {
        *o /= n;
    }
    out
}

/// Adjoint of [`global_avg_pool`].
pub fn global_avg_pool_backward(gout: &[f64], h: usize, w: usize) -> FeatureMap {
    let c = gout.len();
    let n = (h * w) as f64;
    FeatureMap::from_fn(h, w, c, |_, _, ch| gout[ch] / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsample_roundtrip_shapes() {
        let x = FeatureMap::from_fn(2, 3, 1, |y, xx, _| (y * 3 + xx) as f64);
        let up = upsample_nearest2(&x);
        assert_eq!(up.shape(), (4, 6, 1));
        assert_eq!(up.get(3, 5, 0), 5.0);
        let back = upsample_nearest2_backward(&up);
        // each source cell received its own value 4 times
        assert_eq!(back.get(1, 2, 0), 20.0);
    }

    #[test]
    fn gap_is_mean() {
        let x = FeatureMap::from_fn(2, 2, 2, |y, xx, ch| (y + xx + ch) as f64);
        let p = global_avg_pool(&x);
        assert_eq!(p, vec![1.0, 2.0]);
    }
}
