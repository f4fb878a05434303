//! Dense rank-3 feature maps, the array type flowing through backbone and heads.
//!
//! Layout is channel-last (`(y, x, c)` row-major), which keeps the per-pixel
//! channel vector contiguous for the 1x1 convolutions and bilinear sampling
//! used throughout the model.

use crate::error::{invalid, Result};

/// A `height x width x channels` array of `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    h: usize,
    w: usize,
    c: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self {
            h,
            w,
            c,
            data: vec![0.0; h * w * c],
        }
    }

    pub fn from_vec(h: usize, w: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != h * w * c {
            return Err(invalid(format!(
                "feature map data length {} does not match {}x{}x{}",
                data.len(),
                h,
                w,
                c
            )));
        }
        Ok(Self { h, w, c, data })
    }

    pub fn from_fn(h: usize, w: usize, c: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(h * w * c);
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    data.push(f(y, x, ch));
                }
            }
        }
        Self { h, w, c, data }
    }

    /// Fills a map with uniform values in `[-scale, scale)` from the given RNG.
    pub fn random(h: usize, w: usize, c: usize, scale: f64, rng: &mut impl rand::Rng) -> Self {
        let data = (0..h * w * c)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        Self { h, w, c, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.h
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.c)
    }

    #[inline]
    fn idx(&self, y: usize, x: usize, ch: usize) -> usize {
        (y * self.w + x) * self.c + ch
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, ch: usize) -> f64 {
        debug_assert!(y < self.h && x < self.w && ch < self.c);
        self.data[self.idx(y, x, ch)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, ch: usize, v: f64) {
        let i = self.idx(y, x, ch);
        self.data[i] = v;
    }

    #[inline]
    pub fn add(&mut self, y: usize, x: usize, ch: usize, v: f64) {
        let i = self.idx(y, x, ch);
        self.data[i] += v;
    }

    /// Contiguous channel vector at one spatial location.
    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[f64] {
        let i = (y * self.w + x) * self.c;
        &self.data[i..i + self.c]
    }

    #[inline]
    pub fn pixel_mut(&mut self, y: usize, x: usize) -> &mut [f64] {
        let i = (y * self.w + x) * self.c;
        &mut self.data[i..i + self.c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.shape() == other.shape()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FeatureMap {
        FeatureMap {
            h: self.h,
            w: self.w,
            c: self.c,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self += scale * other`; shapes must match.
    pub fn axpy(&mut self, scale: f64, other: &FeatureMap) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn max_abs_diff(&self, other: &FeatureMap) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_channel_last() {
        let mut m = FeatureMap::zeros(2, 3, 4);
        m.set(1, 2, 3, 7.0);
        assert_eq!(m.data()[(1 * 3 + 2) * 4 + 3], 7.0);
        assert_eq!(m.get(1, 2, 3), 7.0);
        assert_eq!(m.pixel(1, 2), &[0.0, 0.0, 0.0, 7.0]);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(FeatureMap::from_vec(2, 2, 2, vec![0.0; 7]).is_err());
        assert!(FeatureMap::from_vec(2, 2, 2, vec![0.0; 8]).is_ok());
    }
}
