mod common;

use common::*;
use nalgebra::DVector;
use pkm_compliance::equilibrium::{
    chain_equilibrium, chain_force, deflected_pose, solve_chain, total_force, Assembly, ChainAnchor,
    EquilibriumOptions, EquilibriumResult,
};
use pkm_compliance::kinematics::{chain_geometry, chain_jacobians, Pose};
use pkm_compliance::model::{builtin_fixture, ChainModel, ManipulatorModel};
use pkm_compliance::stiffness::{chain_stiffness, total_stiffness};
use rand_chacha::ChaCha8Rng;

/// A random command pose reachable by every chain, and a loaded pose near it.
fn random_case(model: &ManipulatorModel, rng: &mut ChaCha8Rng) -> (Pose, Pose) {
    let s = random_rigid_state(&model.chains[0], rng);
    let mut t0 = chain_geometry(&model.chains[0], model.dimension, &s);
    if model.name == "TWO-ORTHO" {
        // keep the two chains' rigid end-points together
        t0 = random_displacement(rng, model.dimension, 0.05, 0.0);
    }
    let t = &t0 + random_displacement(rng, model.dimension, 2e-4, 2e-3);
    (t0, t)
}

fn spring_energy(chain: &ChainModel, r: &EquilibriumResult) -> f64 {
    let dt = &r.state.theta - chain.rest();
    0.5 * dt.component_mul(&chain.joint_stiffness()).dot(&dt)
}

#[test]
fn converged_equilibria_balance_forces() {
    let mut rng = rng(21);
    let opts = EquilibriumOptions::default();
    let mut cases = 0;
    while cases < 100 {
        for model in fixtures() {
            let (t0, t) = random_case(&model, &mut rng);
            for chain in &model.chains {
                let r = chain_equilibrium(chain, model.dimension, &t, &t0, &opts).unwrap();
                let j = chain_jacobians(chain, model.dimension, &r.state);
                let passive = j.jq.tr_mul(&r.force);
                let elastic =
                    j.jtheta.tr_mul(&r.force) - chain.joint_stiffness().component_mul(&(&r.state.theta - chain.rest()));
                assert!(passive.norm() < 1e-9, "{}: Jqᵀ F = {passive}", model.name);
                assert!(elastic.norm() < 1e-9, "{}: Jθᵀ F − K(θ−θ0) = {elastic}", model.name);
                cases += 1;
            }
        }
    }
}

#[test]
fn force_is_gradient_of_spring_energy() {
    let mut rng = rng(22);
    let opts = EquilibriumOptions::default();
    for model in fixtures() {
        for _ in 0..5 {
            let (t0, t) = random_case(&model, &mut rng);
            for (i, chain) in model.chains.iter().enumerate() {
                let anchor = ChainAnchor::new(chain, model.dimension, &t0, i).unwrap();
                let r = solve_chain(chain, model.dimension, &anchor, &t, None, &opts).unwrap();
                let h = 1e-6;
                let grad = DVector::from_fn(model.d(), |k, _| {
                    let e = |s: f64| {
                        let mut tt = t.clone();
                        tt[k] += s;
                        spring_energy(
                            chain,
                            &solve_chain(chain, model.dimension, &anchor, &tt, Some(&r), &opts).unwrap(),
                        )
                    };
                    (e(h) - e(-h)) / (2.0 * h)
                });
                assert!(
                    (&grad - &r.force).norm() <= 1e-6 * r.force.norm().max(1e-3),
                    "{}: {grad} vs {}",
                    model.name,
                    r.force
                );
            }
        }
    }
}

#[test]
fn planar_rp_radial_displacement_keeps_passive_joint_unloaded() {
    let model = builtin_fixture("PLANAR-RP").unwrap();
    let chain = &model.chains[0];
    let t0 = v(&[1.0, 0.0, 0.0]);
    let t = v(&[1.0005, 0.0, 0.0]);
    let r = chain_equilibrium(chain, model.dimension, &t, &t0, &Default::default()).unwrap();
    let jq = chain_jacobians(chain, model.dimension, &r.state).jq;
    assert!(jq.tr_mul(&r.force).norm() < 1e-9);
    assert!((r.force[0] - 500.0).abs() < 1e-9 * 500.0, "{}", r.force);
}

#[test]
fn axial_force_is_linear_in_displacement() {
    let model = builtin_fixture("AXIAL-1").unwrap();
    let chain = &model.chains[0];
    let t0 = v(&[0.2, 0.0, 0.0]);
    let d = v(&[1e-4, -3e-5, 2e-3]);
    let f1 = chain_force(chain, model.dimension, &(&t0 + &d), &t0).unwrap();
    let f2 = chain_force(chain, model.dimension, &(&t0 + &d * 2.0), &t0).unwrap();
    assert!((f2 - &f1 * 2.0).amax() <= 1e-9 * f1.amax());
    assert_eq!(total_force(&model, &(&t0 + &d), &t0).unwrap(), f1);
}

#[test]
fn chain_stiffness_matches_force_differences() {
    let mut rng = rng(23);
    let opts = EquilibriumOptions::default();
    for model in fixtures() {
        for _ in 0..20 {
            let (t0, t) = random_case(&model, &mut rng);
            for (i, chain) in model.chains.iter().enumerate() {
                let anchor = ChainAnchor::new(chain, model.dimension, &t0, i).unwrap();
                let r = solve_chain(chain, model.dimension, &anchor, &t, None, &opts).unwrap();
                let kc = chain_stiffness(chain, model.dimension, &r.state, &r.force).unwrap().kc;
                let fd = fd_jacobian(
                    |tt| {
                        solve_chain(chain, model.dimension, &anchor, tt, Some(&r), &opts)
                            .unwrap()
                            .force
                    },
                    &t,
                    1e-7,
                );
                assert!(rel_err(&kc, &fd) < 1e-4, "{}: {kc} vs {fd}", model.name);
                assert!(
                    (&kc - kc.transpose()).norm() <= 1e-8 * kc.norm(),
                    "{}: asymmetric",
                    model.name
                );
            }
        }
    }
}

#[test]
fn total_stiffness_matches_force_differences() {
    let mut rng = rng(24);
    let opts = EquilibriumOptions::default();
    for model in fixtures() {
        for _ in 0..20 {
            let (t0, t) = random_case(&model, &mut rng);
            let asm = Assembly::new(&model, &t0).unwrap();
            let eq = asm.equilibria(&t, None, &opts).unwrap();
            let k = asm.stiffness(&eq).unwrap();
            let per_chain = asm.chain_stiffnesses(&eq).unwrap();
            let sum = per_chain.iter().skip(1).fold(per_chain[0].kc.clone(), |a, s| a + &s.kc);
            assert_eq!(k, sum);
            assert_eq!(total_stiffness(&model, &t, &t0).unwrap(), k);
            let fd = fd_jacobian(|tt| asm.force(tt, &opts).unwrap(), &t, 1e-7);
            assert!(rel_err(&k, &fd) < 1e-4, "{}: {k} vs {fd}", model.name);
        }
    }
}

#[test]
fn unloaded_stiffness_has_passive_null_space() {
    for model in fixtures() {
        for chain in &model.chains {
            let s = chain.home_state();
            let kc = chain_stiffness(chain, model.dimension, &s, &DVector::zeros(model.d()))
                .unwrap()
                .kc;
            let jq = chain_jacobians(chain, model.dimension, &s).jq;
            if jq.ncols() > 0 {
                assert!((&kc * &jq).norm() / kc.norm() < 1e-10, "{}", model.name);
            }
            let eig = nalgebra::SymmetricEigen::new(kc.clone()).eigenvalues;
            assert!(eig.min() >= -1e-9 * eig.amax(), "{}: {eig}", model.name);
        }
    }
}

#[test]
fn deflected_pose_inverts_total_force() {
    let mut rng = rng(25);
    for model in fixtures() {
        if model.name == "PLANAR-RP" {
            // unloaded stiffness is singular along the free rotation
            continue;
        }
        for _ in 0..10 {
            let (t0, _) = random_case(&model, &mut rng);
            let f = random_wrench(&mut rng, model.dimension, 200.0, 5.0);
            let t = deflected_pose(&model, &f, &t0).unwrap();
            let back = total_force(&model, &t, &t0).unwrap();
            assert!((&back - &f).norm() < 1e-6, "{}: {back} vs {f}", model.name);
        }
    }
}
