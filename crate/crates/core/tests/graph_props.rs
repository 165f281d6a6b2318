mod common;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qgssl::graph::{
    build_knn_graph, iteration_spectral_radius, load_dataset, mask_labels, spectral_radius,
    standardize_features, Dataset, DatasetSchema, KernelScale, SimilarityGraph,
};

use common::*;

fn load(name: &str) -> Dataset {
    let dir = data_dir();
    let schema = DatasetSchema::from_json_file(dir.join(format!("{name}.schema.json"))).unwrap();
    load_dataset(dir.join(format!("{name}.csv")), &schema).unwrap()
}

#[test]
fn iris_shape() {
    let ds = load("iris");
    assert_eq!((ds.len(), ds.feature_count(), ds.class_count), (150, 4, 3));
}

#[test]
fn german_credit_width_matches_category_count() {
    // Independent count straight from the raw file.
    let dir = data_dir();
    let mut rdr = csv::Reader::from_path(dir.join("german_credit.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let categorical = ["chk_acct", "history", "sav_acct", "employment", "job"];
    let mut seen: Vec<BTreeSet<String>> = vec![BTreeSet::new(); categorical.len()];
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for (slot, name) in categorical.iter().enumerate() {
            let idx = header.iter().position(|h| h == name).unwrap();
            seen[slot].insert(rec[idx].trim().to_string());
        }
    }
    let numeric = header.len() - 1 /* label */ - 1 /* obs */ - categorical.len();
    let expected = numeric + seen.iter().map(BTreeSet::len).sum::<usize>();
    let ds = load("german_credit");
    assert_eq!(ds.feature_count(), expected);
    assert_eq!(ds.len(), 1000);
}

#[test]
fn iris_mask_is_15_per_class() {
    let ds = load("iris");
    let m = mask_labels(&ds, 0.30, 7).unwrap();
    assert_eq!(m.labeled_indices().len(), 45);
    for c in 0..3 {
        let count = m
            .labeled_indices()
            .iter()
            .filter(|&&i| m.labels[i] == c)
            .count();
        assert_eq!(count, 15);
    }
    assert_eq!(
        m.labeled_mask,
        mask_labels(&ds, 0.30, 7).unwrap().labeled_mask
    );
    assert_ne!(
        m.labeled_mask,
        mask_labels(&ds, 0.30, 8).unwrap().labeled_mask
    );
    assert!(mask_labels(&ds, 1.0, 3)
        .unwrap()
        .labeled_mask
        .iter()
        .all(|&b| b));
}

#[test]
fn standardize_zero_zero_ten_by_formula() {
    let raw = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 10.0]);
    let mean = 10.0 / 3.0;
    let sd = (((0.0 - mean) * (0.0f64 - mean) * 2.0 + (10.0 - mean) * (10.0 - mean)) / 2.0).sqrt();
    let out = standardize_features(&raw).unwrap().matrix;
    for (i, &x) in [0.0, 0.0, 10.0].iter().enumerate() {
        assert!((out[(i, 0)] - (x - mean) / sd).abs() < 1e-12);
    }
}

#[test]
fn two_clusters_are_block_diagonal() {
    let pts = [0.0, 0.2, 0.5, 10.0, 10.2, 10.5];
    let x = DMatrix::from_fn(6, 1, |i, _| pts[i]);
    let ds = Dataset::new("c", x.clone(), vec![0, 0, 0, 1, 1, 1], 2).unwrap();
    let g = build_knn_graph(&ds, 2, KernelScale::SelfTuning).unwrap();
    // Brute-force distances: each point's 2 nearest neighbors lie in its own cluster.
    for i in 0..6 {
        let mut d: Vec<(f64, usize)> = (0..6)
            .filter(|&j| j != i)
            .map(|j| ((pts[i] - pts[j]).abs(), j))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(d[..2].iter().all(|&(_, j)| (j < 3) == (i < 3)));
    }
    for i in 0..3 {
        for j in 3..6 {
            assert_eq!(g.weights()[(i, j)], 0.0);
            assert_eq!(g.weights()[(j, i)], 0.0);
        }
    }
}

#[test]
fn iris_graph_is_row_stochastic() {
    let mut ds = load("iris");
    ds.standardize().unwrap();
    let g = build_knn_graph(&ds, 10, KernelScale::SelfTuning).unwrap();
    let p = g.transition_dense();
    for i in 0..p.nrows() {
        assert!((p.row(i).sum() - 1.0).abs() < 1e-10);
    }
    let pi_sum: f64 = g.stationary().sum();
    assert!((pi_sum - 1.0).abs() < 1e-12);
    let l = g.laplacian();
    for i in 0..l.nrows() {
        assert!(l.row(i).sum().abs() < 1e-10);
    }
}

#[test]
fn connected_stochastic_iteration_radius_below_one() {
    let mut r = rng(11);
    for _ in 0..10 {
        let g = random_graph(5, 0.5, &mut r);
        let p = dense_transition(g.weights());
        let pi = stationary(g.weights());
        let q = DMatrix::from_fn(5, 5, |_, j| pi[j]);
        let oracle = dense_spectral_radius(&(&p - &q));
        assert!(oracle < 1.0);
        let est = iteration_spectral_radius(&g, 1.0, 0.0);
        assert!(est.converged);
        assert!(
            (est.value - oracle).abs() < 1e-6,
            "{} vs {oracle}",
            est.value
        );
    }
}

#[test]
fn spectral_radius_of_symmetric_matrix_matches_eigen() {
    let mut r = rng(5);
    let g = random_graph(6, 0.4, &mut r);
    let m = g.weights().clone();
    let oracle = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let est = spectral_radius(&m, 1e-14, 100_000);
    assert!((est.value - oracle).abs() < 1e-8);
}

fn small_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_construction_is_permutation_equivariant(pts in small_points(), seed in 0u64..1000) {
        let n = pts.len();
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { pts[i].0 } else { pts[i].1 });
        // Distance ties would make neighbor choice depend on index order.
        let mut dists: Vec<f64> = Vec::new();
        for i in 0..n { for j in (i + 1)..n {
            dists.push(((x[(i, 0)] - x[(j, 0)]).powi(2) + (x[(i, 1)] - x[(j, 1)]).powi(2)).sqrt());
        }}
        dists.sort_by(f64::total_cmp);
        prop_assume!(dists.windows(2).all(|w| w[1] - w[0] > 1e-9) && dists[0] > 1e-9);

        let mut perm: Vec<usize> = (0..n).collect();
        let mut r = rng(seed);
        for i in (1..n).rev() { perm.swap(i, rand::Rng::gen_range(&mut r, 0..=i)); }
        let xp = DMatrix::from_fn(n, 2, |i, j| x[(perm[i], j)]);
        let k = 2.min(n - 1);
        let a = build_knn_graph(&Dataset::new("a", x, vec![0; n], 1).unwrap(), k, KernelScale::SelfTuning);
        let b = build_knn_graph(&Dataset::new("b", xp, vec![0; n], 1).unwrap(), k, KernelScale::SelfTuning);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                for i in 0..n { for j in 0..n {
                    prop_assert!((b.weights()[(i, j)] - a.weights()[(perm[i], perm[j])]).abs() < 1e-15);
                }}
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "isolated-node outcome differs under permutation"),
        }
    }

    #[test]
    fn derived_matrices_reconstruct(seed in 0u64..10_000, n in 2usize..12) {
        let g = random_graph(n, 0.3, &mut rng(seed));
        let w = g.weights();
        let p = g.transition_dense();
        let p_oracle = dense_transition(w);
        prop_assert!((p - p_oracle).abs().max() < 1e-12);
        let pi = stationary(w);
        let q = g.rank_one_q();
        for i in 0..n { for j in 0..n {
            prop_assert!((q[(i, j)] - pi[j]).abs() < 1e-12);
        }}
        for i in 0..n {
            prop_assert!(w[(i, i)] == 0.0);
            for j in 0..n { prop_assert!(w[(i, j)] == w[(j, i)] && w[(i, j)] >= 0.0); }
        }
    }

    #[test]
    fn standardization_is_idempotent(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 3..20)
    ) {
        let n = rows.len();
        let raw = DMatrix::from_fn(n, 3, |i, j| rows[i][j]);
        if let Ok(once) = standardize_features(&raw) {
            let twice = standardize_features(&once.matrix).unwrap();
            prop_assert_eq!(twice.matrix.ncols(), once.matrix.ncols());
            prop_assert!((&twice.matrix - &once.matrix).abs().max() < 1e-10);
            for c in 0..once.matrix.ncols() {
                let col = once.matrix.column(c);
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                prop_assert!(mean.abs() < 1e-10 && (var.sqrt() - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn two_node_graph_has_single_edge() {
    let ds = Dataset::new(
        "p",
        DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        vec![0, 0],
        1,
    )
    .unwrap();
    let g: SimilarityGraph = build_knn_graph(&ds, 1, KernelScale::SelfTuning).unwrap();
    assert!(g.weights()[(0, 1)] > 0.0);
    assert_eq!(g.weights()[(0, 1)], g.weights()[(1, 0)]);
}
