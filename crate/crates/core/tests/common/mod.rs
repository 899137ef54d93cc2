#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pkm_compliance::kinematics::{chain_geometry, ChainState, Pose};
use pkm_compliance::model::{builtin_fixture, ChainModel, Dimension, ManipulatorModel, FIXTURE_NAMES};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixtures() -> Vec<ManipulatorModel> {
    FIXTURE_NAMES.iter().map(|n| builtin_fixture(n).unwrap()).collect()
}

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn around(rng: &mut ChaCha8Rng, center: f64, half: f64) -> f64 {
    center + rng.gen_range(-half..=half)
}

/// Random joint state near home: actuators ±0.1, passive ±0.15, springs ±2e-3.
pub fn random_state(chain: &ChainModel, rng: &mut ChaCha8Rng) -> ChainState {
    let mut s = chain.home_state();
    s.rho.iter_mut().for_each(|x| *x = around(rng, *x, 0.1));
    s.q.iter_mut().for_each(|x| *x = around(rng, *x, 0.15));
    s.theta.iter_mut().for_each(|x| *x = around(rng, *x, 2e-3));
    s
}

/// Rigid state (springs at rest) near home.
pub fn random_rigid_state(chain: &ChainModel, rng: &mut ChaCha8Rng) -> ChainState {
    let mut s = random_state(chain, rng);
    s.theta = chain.rest();
    s
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

/// Random wrench with forces ±`force` and moments ±`moment`.
pub fn random_wrench(rng: &mut ChaCha8Rng, dim: Dimension, force: f64, moment: f64) -> DVector<f64> {
    DVector::from_fn(dim.size(), |k, _| {
        let s = if dim.is_translational(k) { force } else { moment };
        rng.gen_range(-s..=s)
    })
}

/// Random pose displacement with translations ±`trans` and rotations ±`rot`.
pub fn random_displacement(rng: &mut ChaCha8Rng, dim: Dimension, trans: f64, rot: f64) -> DVector<f64> {
    DVector::from_fn(dim.size(), |k, _| {
        let s = if dim.is_translational(k) { trans } else { rot };
        rng.gen_range(-s..=s)
    })
}

pub fn pose_of(chain: &ChainModel, dim: Dimension, s: &ChainState) -> Pose {
    chain_geometry(chain, dim, s)
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Central-difference Jacobian of `f` at `x`.
pub fn fd_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let y0 = f(x);
    let mut out = DMatrix::zeros(y0.len(), x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        out.set_column(k, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    out
}
