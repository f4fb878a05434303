//! Central-difference gradient verification helpers.
//!
//! These drive every "analytic vs finite difference" check in the test
//! suites: the analytic side comes from the layer backward passes, the
//! numeric side only ever re-runs the forward closure.

use super::params::ParamStore;
use rand::seq::SliceRandom;
use rand::Rng;

/// Relative error with a floor so near-zero gradients compare sanely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Central difference of `f` along coordinate `i` of `values`.
pub fn central_diff(values: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = values[i];
    values[i] = orig + h;
    let fp = f(values);
    values[i] = orig - h;
    let fm = f(values);
    values[i] = orig;
    (fp - fm) / (2.0 * h)
}

/// Checks analytic parameter gradients already accumulated in `ps` against
/// central differences of `loss` for up to `samples_per_param` random
/// coordinates of every trainable parameter. Returns the worst relative
/// error observed.
pub fn check_param_grads(
    ps: &mut ParamStore,
    samples_per_param: usize,
    h: f64,
    rng: &mut impl Rng,
    mut loss: impl FnMut(&ParamStore) -> f64,
) -> f64 {
    let names: Vec<String> = ps
        .iter()
        .filter(|(_, p)| p.trainable)
        .map(|(n, _)| n.clone())
        .collect();
    let mut worst: f64 = 0.0;
    for name in names {
        let len = ps.get(&name).value.len();
        let mut idxs: Vec<usize> = (0..len).collect();
        idxs.shuffle(rng);
        idxs.truncate(samples_per_param);
        for i in idxs {
            let analytic = ps.get(&name).grad[i];
            let orig = ps.get(&name).value[i];
            ps.value_mut(&name)[i] = orig + h;
            let fp = loss(ps);
            ps.value_mut(&name)[i] = orig - h;
            let fm = loss(ps);
            ps.value_mut(&name)[i] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let err = relative_error(analytic, numeric);
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

/// Same pattern for a flat array gradient (inputs, angles, ...).
pub fn check_array_grad(
    values: &mut [f64],
    analytic: &[f64],
    samples: usize,
    h: f64,
    rng: &mut impl Rng,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    assert_eq!(values.len(), analytic.len());
    let mut idxs: Vec<usize> = (0..values.len()).collect();
    idxs.shuffle(rng);
    idxs.truncate(samples);
    let mut worst: f64 = 0.0;
    for i in idxs {
        let numeric = central_diff(values, i, h, &mut loss);
        let err = relative_error(analytic[i], numeric);
        if err > worst {
            worst = err;
        }
    }
    worst
}
