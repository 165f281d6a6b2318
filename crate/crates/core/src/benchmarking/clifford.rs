use std::collections::VecDeque;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::qsim::{compose, Gate2};

const PHASE_TOL: f64 = 1e-9;

/// Single-qubit Clifford group modulo global phase, with its Cayley table.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<Gate2>,
    /// `product[a][b]` is the index of `elements[a] · elements[b]`.
    product: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl CliffordGroup {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Gate2] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Gate2 {
        &self.elements[i]
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.product[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Index of `g` up to a global phase, if it belongs to the group.
    pub fn index_of(&self, g: &Gate2) -> Option<usize> {
        self.elements.iter().position(|e| equal_up_to_phase(e, g))
    }
}

pub fn hadamard() -> Gate2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn phase_s() -> Gate2 {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::new(1.0, 0.0), zero],
        [zero, Complex64::new(0.0, 1.0)],
    ]
}

pub fn identity_gate() -> Gate2 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    [[one, zero], [zero, one]]
}

pub(crate) fn equal_up_to_phase(a: &Gate2, b: &Gate2) -> bool {
    // |Tr(a†b)| = 2 exactly when b = e^{iφ} a for unitary a, b.
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            tr += a[i][j].conj() * b[i][j];
        }
    }
    (tr.norm() - 2.0).abs() < PHASE_TOL
}

/// Closure of {H, S} under multiplication, breadth first from the identity.
pub fn clifford_group_1q() -> CliffordGroup {
    let generators = [hadamard(), phase_s()];
    let mut elements = vec![identity_gate()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in &generators {
            let next = compose(g, &elements[i]);
            if !elements.iter().any(|e| equal_up_to_phase(e, &next)) {
                elements.push(next);
                queue.push_back(elements.len() - 1);
            }
        }
    }
    let lookup = |g: &Gate2| {
        elements
            .iter()
            .position(|e| equal_up_to_phase(e, g))
            .expect("group is closed under multiplication")
    };
    let product: Vec<Vec<usize>> = elements
        .iter()
        .map(|a| elements.iter().map(|b| lookup(&compose(a, b))).collect())
        .collect();
    let inverse = (0..elements.len())
        .map(|a| {
            (0..elements.len())
                .find(|&b| product[a][b] == 0)
                .expect("every group element has an inverse")
        })
        .collect();
    CliffordGroup {
        elements,
        product,
        inverse,
    }
}
