mod common;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use qgssl::graph::{load_dataset, DatasetSchema};
use qgssl::qsim::{
    amplitude_encode, amplitude_encode_complex, build_pqc, entanglement_entropy, half_cut_entropy,
    orthogonality_error, prepare_node_state, qr_embed, reduced_density_matrix, rotation_block,
    run_circuit, StateVector,
};
use rand::Rng;

use common::*;

type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn gate_matrix(g: &[[Complex64; 2]; 2]) -> CMat {
    CMat::from_fn(2, 2, |i, j| g[i][j])
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    CMat::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |i, j| {
        a[(i / b.nrows(), j / b.ncols())] * b[(i % b.nrows(), j % b.ncols())]
    })
}

/// CNOT as a basis permutation; qubit 0 is the most significant bit.
fn cnot_matrix(q: usize, control: usize, target: usize) -> CMat {
    let dim = 1 << q;
    let bit = |qubit: usize| 1usize << (q - 1 - qubit);
    let mut m = CMat::zeros(dim, dim);
    for x in 0..dim {
        let y = if x & bit(control) != 0 {
            x ^ bit(target)
        } else {
            x
        };
        m[(y, x)] = c(1.0);
    }
    m
}

fn random_state(q: usize, r: &mut rand_chacha::ChaCha8Rng) -> StateVector {
    let v: Vec<Complex64> = (0..1 << q)
        .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    amplitude_encode_complex(&v).unwrap()
}

#[test]
fn circuit_matches_dense_kronecker_unitary() {
    for (q, layers, seed) in [(1, 3, 0), (2, 2, 1), (3, 2, 2), (4, 3, 3)] {
        let spec = build_pqc(q, layers, seed).unwrap();
        let mut u = CMat::identity(1 << q, 1 << q);
        for layer in &spec.thetas {
            let mut rot = gate_matrix(&rotation_block(&layer[0]));
            for theta in &layer[1..] {
                rot = kron(&rot, &gate_matrix(&rotation_block(theta)));
            }
            u = rot * u;
            for (ctl, tgt) in spec.entangling_pairs() {
                u = cnot_matrix(q, ctl, tgt) * u;
            }
        }
        let mut r = rng(seed + 100);
        let init = random_state(q, &mut r);
        let expected = &u * DVector::from_column_slice(init.amplitudes());
        let got = run_circuit(&spec, Some(&init)).unwrap();
        for (a, b) in got.amplitudes().iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-10, "q={q}");
        }
        let unitarity = (u.adjoint() * &u - CMat::identity(1 << q, 1 << q)).norm();
        assert!(unitarity < 1e-10);
    }
}

#[test]
fn rotation_block_matches_closed_form() {
    let t = [0.3, 1.1, -0.7];
    let g = rotation_block(&t);
    let (s, co) = (t[1] / 2.0).sin_cos();
    let e = |phi: f64| Complex64::from_polar(1.0, phi);
    let expected = [
        [e(-(t[0] + t[2]) / 2.0) * co, -e((t[0] - t[2]) / 2.0) * s],
        [e(-(t[0] - t[2]) / 2.0) * s, e((t[0] + t[2]) / 2.0) * co],
    ];
    for i in 0..2 {
        for j in 0..2 {
            assert!((g[i][j] - expected[i][j]).norm() < 1e-14);
        }
    }
}

/// ρ_A by summing over every basis index of the complement.
fn brute_partial_trace(state: &StateVector, keep: &[usize]) -> CMat {
    let q = state.qubit_count();
    let rest: Vec<usize> = (0..q).filter(|i| !keep.contains(i)).collect();
    let bit = |qubit: usize| q - 1 - qubit;
    let compose = |a: usize, b: usize| -> usize {
        let mut x = 0;
        for (pos, &qubit) in keep.iter().enumerate() {
            if a >> (keep.len() - 1 - pos) & 1 == 1 {
                x |= 1 << bit(qubit);
            }
        }
        for (pos, &qubit) in rest.iter().enumerate() {
            if b >> (rest.len() - 1 - pos) & 1 == 1 {
                x |= 1 << bit(qubit);
            }
        }
        x
    };
    let amp = state.amplitudes();
    let da = 1 << keep.len();
    CMat::from_fn(da, da, |a, a2| {
        (0..1usize << rest.len())
            .map(|b| amp[compose(a, b)] * amp[compose(a2, b)].conj())
            .sum()
    })
}

#[test]
fn reduced_density_matches_brute_force() {
    let mut r = rng(8);
    for keep in [vec![0], vec![1], vec![0, 2], vec![1, 3], vec![0, 1, 3]] {
        let state = random_state(4, &mut r);
        let rho = reduced_density_matrix(&state, &keep).unwrap();
        let oracle = brute_partial_trace(&state, &keep);
        assert!((&rho.entries - &oracle).norm() < 1e-12, "keep {keep:?}");
        assert!((rho.trace() - c(1.0)).norm() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-12);
    }
}

#[test]
fn bell_and_product_entropies() {
    let s = 1.0 / 2f64.sqrt();
    let bell = amplitude_encode(&[s, 0.0, 0.0, s]).unwrap();
    assert!((entanglement_entropy(&bell, &[0]).unwrap() - 1.0).abs() < 1e-12);
    let product = amplitude_encode(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(entanglement_entropy(&product, &[1]).unwrap().abs() < 1e-12);
}

/// Classical Gram–Schmidt; unique QR with positive diagonal for full-rank input.
fn gram_schmidt(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut q = DMatrix::zeros(a.nrows(), n);
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut v = a.column(j).clone_owned();
        for i in 0..j {
            r[(i, j)] = q.column(i).dot(&a.column(j));
            v -= q.column(i) * r[(i, j)];
        }
        r[(j, j)] = v.norm();
        q.set_column(j, &(v / r[(j, j)]));
    }
    (q, r)
}

#[test]
fn qr_matches_gram_schmidt() {
    let mut r = rng(42);
    let a = DMatrix::from_fn(6, 6, |_, _| r.gen_range(-1.0..1.0));
    let (gq, gr) = gram_schmidt(&a);
    let e = qr_embed(&a).unwrap();
    assert!((&e.q - gq).abs().max() < 1e-10);
    assert!((&e.r - gr).abs().max() < 1e-10);
    assert!((&e.q * &e.r - &a).abs().max() < 1e-12);
    assert!(orthogonality_error(&e.q) < 1e-12);
    assert_eq!(e.effective_rank, 6);
    assert_eq!(e, qr_embed(&a).unwrap());
}

#[test]
fn qr_of_rank_deficient_matrix() {
    let mut a = DMatrix::from_fn(5, 5, |i, j| ((i + 1) * (j + 2)) as f64 % 7.0);
    let col = a.column(0) * 2.0;
    a.set_column(3, &col);
    let e = qr_embed(&a).unwrap();
    assert!(orthogonality_error(&e.q) < 1e-10);
    assert!((&e.q * &e.r - &a).abs().max() < 1e-10);
    assert!(e.effective_rank < 5);
}

#[test]
fn norm_survives_fifty_layers_on_twelve_qubits() {
    let spec = build_pqc(12, 50, 3).unwrap();
    let out = run_circuit(&spec, None).unwrap();
    assert!((out.norm_sqr() - 1.0).abs() < 1e-8);
}

#[test]
fn iris_block_state_preparation() {
    let dir = data_dir();
    let schema = DatasetSchema::from_json_file(dir.join("iris.schema.json")).unwrap();
    let mut ds = load_dataset(dir.join("iris.csv"), &schema).unwrap();
    ds.standardize().unwrap();
    // 8×8 block: first 8 rows, features cycled to fill 8 columns.
    let block = DMatrix::from_fn(8, 8, |i, j| {
        ds.features[(i, j % 4)] + 0.1 * (i * 8 + j) as f64
    });
    let e = qr_embed(&block).unwrap();
    let state = prepare_node_state(&e.q).unwrap();
    assert_eq!(state.qubit_count(), 3);
    assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    for i in 0..8 {
        assert!((state.amplitudes()[i].re - e.q[(i, 0)]).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn complementary_subsystems_share_entropy(seed in 0u64..100_000, q in 2usize..=6, mask in 1u32..63) {
        let keep: Vec<usize> = (0..q).filter(|i| mask >> i & 1 == 1).collect();
        prop_assume!(!keep.is_empty() && keep.len() < q);
        let rest: Vec<usize> = (0..q).filter(|i| !keep.contains(i)).collect();
        let state = random_state(q, &mut rng(seed));
        let sa = entanglement_entropy(&state, &keep).unwrap();
        let sb = entanglement_entropy(&state, &rest).unwrap();
        prop_assert!((sa - sb).abs() < 1e-9);
        prop_assert!(sa >= -1e-12 && sa <= keep.len().min(rest.len()) as f64 + 1e-9);
    }

    #[test]
    fn pqc_entropy_is_bounded_and_nonzero(seed in 0u64..10_000, q in 2usize..=8, layers in 1usize..=6) {
        let spec = build_pqc(q, layers, seed).unwrap();
        let out = run_circuit(&spec, None).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        let s = half_cut_entropy(&out);
        prop_assert!(s <= (q / 2) as f64 + 1e-9);
        prop_assert!(s > 1e-6, "entropy {s}");
    }
}
