//! Finite-difference verification of the rotation convolution backward pass.

use drn_core::nn::gradcheck::{check_array_grad, relative_error};
use drn_core::rcl::{
    make_grid, rcl_backward, rcl_forward, AngleField, AngleSource, ConvParams, KernelShape,
};
use drn_core::FeatureMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: usize = 6;
const W: usize = 6;
const CIN: usize = 4;
const COUT: usize = 3;
const FD_STEP: f64 = 1e-6;
const TOL: f64 = 1e-4;

struct Fixture {
    x: FeatureMap,
    params: ConvParams,
    angles: AngleField,
    weight_loss: FeatureMap,
}

/// Random input, params, and a generic angle field: angles avoid multiples of
/// pi/2 so every sample point is fractional and the bilinear read is smooth
/// around it.
fn fixture(shape: KernelShape, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = make_grid(shape);
    let taps = grid.offsets.len();
    let x = FeatureMap::random(H, W, CIN, 1.0, &mut rng);
    let params = ConvParams {
        weights: (0..taps * CIN * COUT)
            .map(|_| rng.gen_range(-0.5..0.5))
            .collect(),
        bias: (0..COUT).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        cin: CIN,
        cout: COUT,
    };
    let angle_vals: Vec<f64> = (0..H * W)
        .map(|_| rng.gen_range(0.15..1.25))
        .collect();
    let angles = AngleField::new(H, W, angle_vals, AngleSource::Predicted).unwrap();
    let weight_loss = FeatureMap::random(H, W, COUT, 1.0, &mut rng);
    Fixture {
        x,
        params,
        angles,
        weight_loss,
    }
}

/// Scalar loss: weighted sum of the forward output.
fn loss_of(out: &FeatureMap, weights: &FeatureMap) -> f64 {
    out.data()
        .iter()
        .zip(weights.data().iter())
        .map(|(a, b)| a * b)
        .sum()
}

fn run_check(shape: KernelShape, seed: u64) {
    let fx = fixture(shape, seed);
    let grid = make_grid(shape);
    let out = rcl_forward(&fx.x, &fx.params, &fx.angles, &grid).unwrap();
    let grads = rcl_backward(&fx.x, &fx.params, &fx.angles, &grid, &fx.weight_loss).unwrap();
    let _ = out;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);

    // input gradient
    let mut x_vals = fx.x.data().to_vec();
    let worst_x = check_array_grad(
        &mut x_vals,
        grads.input.data(),
        40,
        FD_STEP,
        &mut rng,
        |vals| {
            let xm = FeatureMap::from_vec(H, W, CIN, vals.to_vec()).unwrap();
            let o = rcl_forward(&xm, &fx.params, &fx.angles, &grid).unwrap();
            loss_of(&o, &fx.weight_loss)
        },
    );
    assert!(worst_x <= TOL, "{shape:?}: input grad error {worst_x}");

    // weight gradient
    let mut w_vals = fx.params.weights.clone();
    let worst_w = check_array_grad(
        &mut w_vals,
        &grads.weights,
        40,
        FD_STEP,
        &mut rng,
        |vals| {
            let p = ConvParams {
                weights: vals.to_vec(),
                bias: fx.params.bias.clone(),
                cin: CIN,
                cout: COUT,
            };
            let o = rcl_forward(&fx.x, &p, &fx.angles, &grid).unwrap();
            loss_of(&o, &fx.weight_loss)
        },
    );
    assert!(worst_w <= TOL, "{shape:?}: weight grad error {worst_w}");

    // bias gradient
    let mut b_vals = fx.params.bias.clone();
    let worst_b = check_array_grad(&mut b_vals, &grads.bias, COUT, FD_STEP, &mut rng, |vals| {
        let p = ConvParams {
            weights: fx.params.weights.clone(),
            bias: vals.to_vec(),
            cin: CIN,
            cout: COUT,
        };
        let o = rcl_forward(&fx.x, &p, &fx.angles, &grid).unwrap();
        loss_of(&o, &fx.weight_loss)
    });
    assert!(worst_b <= TOL, "{shape:?}: bias grad error {worst_b}");

    // angle gradient (predicted source)
    let ga = grads.angles.expect("predicted angles carry gradients");
    let mut a_vals = fx.angles.values().to_vec();
    let worst_a = check_array_grad(&mut a_vals, &ga, 36, FD_STEP, &mut rng, |vals| {
        let a = AngleField::new(H, W, vals.to_vec(), AngleSource::Predicted).unwrap();
        let o = rcl_forward(&fx.x, &fx.params, &a, &grid).unwrap();
        loss_of(&o, &fx.weight_loss)
    });
    assert!(worst_a <= TOL, "{shape:?}: angle grad error {worst_a}");
}

#[test]
fn square_grid_gradients_match_finite_differences() {
    run_check(KernelShape::Square3x3, 101);
}

#[test]
fn flat_grid_gradients_match_finite_differences() {
    run_check(KernelShape::Flat1x3, 102);
}

#[test]
fn slender_grid_gradients_match_finite_differences() {
    run_check(KernelShape::Slender3x1, 103);
}

#[test]
fn relative_error_floors_small_magnitudes() {
    assert!(relative_error(0.0, 1e-9) < 1e-2);
}
