//! Rotation Convolution Layer: a convolution whose sampling grid is rotated
//! per output location by an angle field.
//!
//! For every location `p0` and every grid offset `p_n`, the tap offset is
//! augmented by `dp_n = M_r(theta) * p_n - p_n`, so the effective sample site
//! is `p0 + M_r(theta) * p_n`. Fractional sites are read with bilinear
//! interpolation and zero padding. The center tap is a fixed point of every
//! rotation, so a kernel with only its center tap active ignores the angle
//! field entirely.

use crate::error::{invalid, Result};
use crate::obb::rotation_matrix;
use crate::tensor::FeatureMap;
use serde::{Deserialize, Serialize};

/// Kernel footprints supported by the feature selection module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelShape {
    Square3x3,
    Flat1x3,
    Slender3x1,
}

impl KernelShape {
    pub fn rows_cols(self) -> (usize, usize) {
        match self {
            KernelShape::Square3x3 => (3, 3),
            KernelShape::Flat1x3 => (1, 3),
            KernelShape::Slender3x1 => (3, 1),
        }
    }

    pub fn from_rows_cols(rows: usize, cols: usize) -> Result<Self> {
        match (rows, cols) {
            (3, 3) => Ok(KernelShape::Square3x3),
            (1, 3) => Ok(KernelShape::Flat1x3),
            (3, 1) => Ok(KernelShape::Slender3x1),
            _ => Err(invalid(format!("unsupported kernel shape ({rows}, {cols})"))),
        }
    }
}

/// The regular sampling grid of a kernel: centered integer `(dx, dy)`
/// offsets enumerated row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    pub rows: usize,
    pub cols: usize,
    pub offsets: Vec<(i32, i32)>,
}

/// Builds the centered grid for one of the supported shapes.
pub fn make_grid(shape: KernelShape) -> KernelGrid {
    let (rows, cols) = shape.rows_cols();
    let mut offsets = Vec::with_capacity(rows * cols);
    let rr = (rows as i32 - 1) / 2;
    let rc = (cols as i32 - 1) / 2;
    for dy in -rr..=rr {
        for dx in -rc..=rc {
            offsets.push((dx, dy));
        }
    }
    KernelGrid { rows, cols, offsets }
}

/// Per-tap displacement `M_r(theta) * p - p` for every grid point.
pub fn rotation_offsets(theta: f64, grid: &KernelGrid) -> Vec<(f64, f64)> {
    let m = rotation_matrix(theta).expect("finite angle");
    grid.offsets
        .iter()
        .map(|&(dx, dy)| {
            let p = (dx as f64, dy as f64);
            let r = m.apply(p);
            (r.0 - p.0, r.1 - p.1)
        })
        .collect()
}

/// Where each angle map came from; gradients flow into the angle path only
/// for predicted angles (targets are constants during training).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleSource {
    Target,
    Predicted,
}

/// A per-location angle map, radians, tagged with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleField {
    h: usize,
    w: usize,
    values: Vec<f64>,
    pub source: AngleSource,
}

impl AngleField {
    pub fn new(h: usize, w: usize, values: Vec<f64>, source: AngleSource) -> Result<Self> {
        if values.len() != h * w {
            return Err(invalid("angle field length does not match its shape"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(invalid("angle field contains non-finite values"));
        }
        Ok(Self { h, w, values, source })
    }

    pub fn constant(h: usize, w: usize, theta: f64, source: AngleSource) -> Self {
        Self::new(h, w, vec![theta; h * w], source).expect("finite constant angle")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.w + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Rotation-convolution weights: `[tap][cin][cout]` with taps in grid order,
/// plus a per-output-channel bias.
#[derive(Clone, Debug)]
pub struct ConvParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub cin: usize,
    pub cout: usize,
}

impl ConvParams {
    pub fn validate(&self, grid: &KernelGrid) -> Result<()> {
        let taps = grid.offsets.len();
        if self.weights.len() != taps * self.cin * self.cout {
            return Err(invalid(format!(
                "weights length {} does not match {} taps x {} in x {} out",
                self.weights.len(),
                taps,
                self.cin,
                self.cout
            )));
        }
        if self.bias.len() != self.cout {
            return Err(invalid("bias length does not match output channels"));
        }
        Ok(())
    }
}

/// Bilinear read with zero padding outside the map; returns all channels at
/// the fractional location.
pub fn bilinear_sample(fm: &FeatureMap, point: (f64, f64)) -> Vec<f64> {
    let mut out = vec![0.0; fm.channels()];
    bilinear_sample_into(fm, point, &mut out);
    out
}

#[inline]
fn corner_pixel(fm: &FeatureMap, y: isize, x: isize) -> Option<&[f64]> {
    if y < 0 || x < 0 || y >= fm.height() as isize || x >= fm.width() as isize {
        None
    } else {
        Some(fm.pixel(y as usize, x as usize))
    }
}

fn bilinear_sample_into(fm: &FeatureMap, point: (f64, f64), out: &mut [f64]) {
    out.fill(0.0);
    let (px, py) = point;
    let x0 = px.floor();
    let y0 = py.floor();
    let fx = px - x0;
    let fy = py - y0;
    let x0 = x0 as isize;
    let y0 = y0 as isize;
    let weights = [
        (y0, x0, (1.0 - fx) * (1.0 - fy)),
        (y0, x0 + 1, fx * (1.0 - fy)),
        (y0 + 1, x0, (1.0 - fx) * fy),
        (y0 + 1, x0 + 1, fx * fy),
    ];
    for (y, x, wgt) in weights {
        if wgt == 0.0 {
            continue;
        }
        if let Some(px) = corner_pixel(fm, y, x) {
            for (o, v) in out.iter_mut().zip(px.iter()) {
                *o += wgt * v;
            }
        }
    }
}

/// Spatial derivative of the bilinear read: for each channel, `d value / dx`
/// and `d value / dy` at the fractional location.
fn bilinear_spatial_grad(fm: &FeatureMap, point: (f64, f64), gx: &mut [f64], gy: &mut [f64]) {
    gx.fill(0.0);
    gy.fill(0.0);
    let (px, py) = point;
    let x0f = px.floor();
    let y0f = py.floor();
    let fx = px - x0f;
    let fy = py - y0f;
    let x0 = x0f as isize;
    let y0 = y0f as isize;
    let zero = vec![0.0; fm.channels()];
    let v00 = corner_pixel(fm, y0, x0).unwrap_or(&zero);
    let v10 = corner_pixel(fm, y0, x0 + 1).unwrap_or(&zero);
    let v01 = corner_pixel(fm, y0 + 1, x0).unwrap_or(&zero);
    let v11 = corner_pixel(fm, y0 + 1, x0 + 1).unwrap_or(&zero);
    for c in 0..fm.channels() {
        gx[c] = (1.0 - fy) * (v10[c] - v00[c]) + fy * (v11[c] - v01[c]);
        gy[c] = (1.0 - fx) * (v01[c] - v00[c]) + fx * (v11[c] - v10[c]);
    }
}

/// Scatters `coeff` into the four bilinear corners around `point`.
fn bilinear_scatter(g: &mut FeatureMap, point: (f64, f64), coeff: &[f64]) {
    let (px, py) = point;
    let x0 = px.floor();
    let y0 = py.floor();
    let fx = px - x0;
    let fy = py - y0;
    let x0 = x0 as isize;
    let y0 = y0 as isize;
    let weights = [
        (y0, x0, (1.0 - fx) * (1.0 - fy)),
        (y0, x0 + 1, fx * (1.0 - fy)),
        (y0 + 1, x0, (1.0 - fx) * fy),
        (y0 + 1, x0 + 1, fx * fy),
    ];
    let (h, w) = (g.height() as isize, g.width() as isize);
    for (y, x, wgt) in weights {
        if wgt == 0.0 || y < 0 || x < 0 || y >= h || x >= w {
            continue;
        }
        let dst = g.pixel_mut(y as usize, x as usize);
        for (d, c) in dst.iter_mut().zip(coeff.iter()) {
            *d += wgt * c;
        }
    }
}

fn check_shapes(
    xc: &FeatureMap,
    params: &ConvParams,
    angles: &AngleField,
    grid: &KernelGrid,
) -> Result<()> {
    params.validate(grid)?;
    if xc.channels() != params.cin {
        return Err(invalid(format!(
            "input has {} channels, weights expect {}",
            xc.channels(),
            params.cin
        )));
    }
    if angles.shape() != (xc.height(), xc.width()) {
        return Err(invalid("angle field does not match the input spatial size"));
    }
    Ok(())
}

/// Forward pass. Output keeps the input's spatial size (stride 1, implicit
/// zero padding through the sampler).
pub fn rcl_forward(
    xc: &FeatureMap,
    params: &ConvParams,
    angles: &AngleField,
    grid: &KernelGrid,
) -> Result<FeatureMap> {
    check_shapes(xc, params, angles, grid)?;
    let (h, w) = (xc.height(), xc.width());
    let cin = params.cin;
    let cout = params.cout;
    let mut out = FeatureMap::zeros(h, w, cout);
    let mut sample = vec![0.0; cin];
    let mut acc = vec![0.0; cout];
    for y in 0..h {
        for x in 0..w {
            let theta = angles.get(y, x);
            let m = rotation_matrix(theta).expect("finite angle field");
            acc.copy_from_slice(&params.bias);
            for (n, &(dx, dy)) in grid.offsets.iter().enumerate() {
                let r = m.apply((dx as f64, dy as f64));
                let pos = (x as f64 + r.0, y as f64 + r.1);
                bilinear_sample_into(xc, pos, &mut sample);
                let base = n * cin * cout;
                for (ci, &v) in sample.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    let wrow = &params.weights[base + ci * cout..base + (ci + 1) * cout];
                    for (a, wv) in acc.iter_mut().zip(wrow.iter()) {
                        *a += v * wv;
                    }
                }
            }
            out.pixel_mut(y, x).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Gradients produced by [`rcl_backward`].
#[derive(Clone, Debug)]
pub struct RclGrads {
    pub input: FeatureMap,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Present only when the angle source is `Predicted`.
    pub angles: Option<Vec<f64>>,
}

/// Backward pass, recomputing sampling geometry from the forward inputs.
pub fn rcl_backward(
    xc: &FeatureMap,
    params: &ConvParams,
    angles: &AngleField,
    grid: &KernelGrid,
    gout: &FeatureMap,
) -> Result<RclGrads> {
    check_shapes(xc, params, angles, grid)?;
    if gout.shape() != (xc.height(), xc.width(), params.cout) {
        return Err(invalid("output gradient shape mismatch"));
    }
    let (h, w) = (xc.height(), xc.width());
    let cin = params.cin;
    let cout = params.cout;
    let want_angle_grad = angles.source == AngleSource::Predicted;

    let mut g_input = FeatureMap::zeros(h, w, cin);
    let mut g_weights = vec![0.0; params.weights.len()];
    let mut g_bias = vec![0.0; cout];
    let mut g_angles = if want_angle_grad {
        Some(vec![0.0; h * w])
    } else {
        None
    };

    let mut sample = vec![0.0; cin];
    let mut coeff = vec![0.0; cin];
    let mut sgx = vec![0.0; cin];
    let mut sgy = vec![0.0; cin];

    for y in 0..h {
        for x in 0..w {
            let theta = angles.get(y, x);
            let (s, c) = theta.sin_cos();
            let g = gout.pixel(y, x);
            for (b, gv) in g_bias.iter_mut().zip(g.iter()) {
                *b += gv;
            }
            let mut dtheta = 0.0;
            for (n, &(dx, dy)) in grid.offsets.iter().enumerate() {
                let p = (dx as f64, dy as f64);
                let r = (c * p.0 - s * p.1, s * p.0 + c * p.1);
                let pos = (x as f64 + r.0, y as f64 + r.1);
                bilinear_sample_into(xc, pos, &mut sample);
                let base = n * cin * cout;
                // coeff[ci] = sum_co w[n,ci,co] * g[co]; weight grads on the way
                for ci in 0..cin {
                    let wrow = &params.weights[base + ci * cout..base + (ci + 1) * cout];
                    let gwrow = &mut g_weights[base + ci * cout..base + (ci + 1) * cout];
                    let v = sample[ci];
                    let mut s_acc = 0.0;
                    for co in 0..cout {
                        s_acc += wrow[co] * g[co];
                        gwrow[co] += v * g[co];
                    }
                    coeff[ci] = s_acc;
                }
                bilinear_scatter(&mut g_input, pos, &coeff);
                if want_angle_grad && (dx != 0 || dy != 0) {
                    bilinear_spatial_grad(xc, pos, &mut sgx, &mut sgy);
                    // d pos / d theta = d(M_r(theta) p)/d theta
                    let dpx = -s * p.0 - c * p.1;
                    let dpy = c * p.0 - s * p.1;
                    for ci in 0..cin {
                        dtheta += coeff[ci] * (sgx[ci] * dpx + sgy[ci] * dpy);
                    }
                }
            }
            if let Some(ga) = g_angles.as_mut() {
                ga[y * w + x] += dtheta;
            }
        }
    }

    Ok(RclGrads {
        input: g_input,
        weights: g_weights,
        bias: g_bias,
        angles: g_angles,
    })
}
