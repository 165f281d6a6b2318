mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qgssl::graph::{build_knn_graph, Dataset, KernelScale, SimilarityGraph};
use qgssl::propagation::{
    assign_labels, improved_poisson_learning, laplacian_learning, LabelMatrix, PropagationParams,
};
use qgssl::Error;

use common::*;

#[test]
fn two_node_example_oscillates_without_shift() {
    let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let g = SimilarityGraph::from_weights(w).unwrap();
    let ds = Dataset::new("two", DMatrix::zeros(2, 1), vec![0, 1], 2).unwrap();
    let p = PropagationParams {
        alpha2: 0.0,
        epsilon: 1e-10,
        max_iter: 500,
        ..Default::default()
    };
    match improved_poisson_learning(&g, &ds, &p) {
        Ok(out) => assert!(!out.converged),
        Err(Error::Divergence { .. }) => {}
        Err(e) => panic!("unexpected error {e}"),
    }

    let p = PropagationParams {
        alpha2: 0.5,
        epsilon: 1e-13,
        max_iter: 10_000,
        ..Default::default()
    };
    let out = improved_poisson_learning(&g, &ds, &p).unwrap();
    assert!(out.converged);
    let oracle = dense_fixed_point(&g, &ds, &p);
    assert!((out.labels.as_matrix() - oracle).abs().max() < 1e-10);
}

#[test]
fn laplacian_matches_dense_harmonic_solve() {
    let mut r = rng(3);
    let g = random_graph(5, 0.5, &mut r);
    let ds = Dataset::new("h", DMatrix::zeros(5, 1), vec![0, 1, 0, 1, 0], 2)
        .unwrap()
        .with_mask(vec![true, true, false, false, false])
        .unwrap();
    let u = laplacian_learning(&g, &ds).unwrap();
    let l = g.laplacian();
    let unl = [2usize, 3, 4];
    let lab = [0usize, 1];
    let luu = DMatrix::from_fn(3, 3, |i, j| l[(unl[i], unl[j])]);
    let wul = DMatrix::from_fn(3, 2, |i, j| g.weights()[(unl[i], lab[j])]);
    // Y_l is the identity here because node 0 has class 0 and node 1 class 1.
    let f = luu.lu().solve(&wul).unwrap();
    for (r_, &i) in unl.iter().enumerate() {
        for c in 0..2 {
            assert!((u.as_matrix()[(i, c)] - f[(r_, c)]).abs() < 1e-8);
        }
    }
    for &i in &lab {
        assert_eq!(u.as_matrix()[(i, ds.labels[i])], 1.0);
    }
}

#[test]
fn harmonic_solution_obeys_maximum_principle() {
    let moons = two_moons(30, 0.05, 4);
    let g = build_knn_graph(&moons, 6, KernelScale::SelfTuning).unwrap();
    let mut mask = vec![false; 60];
    for i in [0, 7, 33, 50] {
        mask[i] = true;
    }
    let ds = moons.with_mask(mask).unwrap();
    let u = laplacian_learning(&g, &ds).unwrap();
    for v in u.as_matrix().iter() {
        assert!((-1e-9..=1.0 + 1e-9).contains(v));
    }
    for i in ds.unlabeled_indices() {
        assert!((u.as_matrix().row(i).sum() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn default_shift_converges_on_moons() {
    let moons = two_moons(50, 0.05, 9);
    let g = build_knn_graph(&moons, 8, KernelScale::SelfTuning).unwrap();
    let mut mask = vec![false; 100];
    for i in [3, 20, 61, 88] {
        mask[i] = true;
    }
    let ds = moons.with_mask(mask).unwrap();
    let p = PropagationParams::default();
    let out = improved_poisson_learning(&g, &ds, &p).unwrap();
    assert!(out.converged);
    assert!(*out.residuals.last().unwrap() < p.epsilon);
    assert!((out.spectral_radius - iteration_radius_dense(&g, &p)).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn iteration_reaches_the_direct_solve(
        seed in 0u64..100_000,
        n in 3usize..=10,
        a1 in 0.5f64..2.0,
        a2 in -0.5f64..0.3,
        a3 in 0.2f64..3.0,
    ) {
        let mut r = rng(seed);
        let g = random_graph(n, 0.5, &mut r);
        let ds = random_labeled(n, 2, 0.4, &mut r);
        let p = PropagationParams { alpha1: a1, alpha2: a2, alpha3: a3, epsilon: 1e-12, max_iter: 200_000 };
        let rho = iteration_radius_dense(&g, &p);
        prop_assume!(rho < 0.98);
        let out = improved_poisson_learning(&g, &ds, &p).unwrap();
        prop_assert!(out.converged);
        prop_assert!(out.residuals.last().copied().unwrap_or(0.0) < p.epsilon);
        let oracle = dense_fixed_point(&g, &ds, &p);
        let err = (out.labels.as_matrix() - &oracle).abs().max();
        prop_assert!(err < 1e-8, "max error {err} at rho {rho}");

        // The iterate satisfies its own update up to the stopping tolerance.
        let (sys, rhs) = dense_system(&g, &ds, &p);
        let resid = (sys * out.labels.as_matrix() - rhs).abs().max();
        prop_assert!(resid < 1e-10, "update residual {resid}");
    }

    #[test]
    fn predictions_invariant_to_positive_scaling(
        seed in 0u64..100_000,
        scale in 0.01f64..100.0,
    ) {
        let mut r = rng(seed);
        let u = DMatrix::from_fn(12, 4, |_, _| rand::Rng::gen_range(&mut r, -1.0..1.0));
        let a = assign_labels(&LabelMatrix::new(u.clone()).unwrap());
        let b = assign_labels(&LabelMatrix::new(u * scale).unwrap());
        prop_assert_eq!(a, b);
    }
}
