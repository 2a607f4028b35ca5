//! Reference families used throughout the tests, examples and CLI.

use crate::basis::ProductBasis;
use crate::deviation::WeightedStateFamily;
use crate::error::Result;
use crate::protocol::ProtocolTree;
use crate::qcore::{c64, unit_vector, CMat, CVec, HilbertStructure};

pub fn two_qubits() -> HilbertStructure {
    HilbertStructure::new(vec![2, 2]).expect("valid dims")
}

fn real(values: &[f64]) -> CVec {
    let v = CVec::from_iterator(values.len(), values.iter().map(|&x| c64(x, 0.0)));
    let n = v.norm();
    v.unscale(n)
}

/// The three mutually orthogonal two-qubit states with no finite LOCC
/// discrimination, in the order `|00>, |01>, |10>, |11>`.
pub fn triple_vectors() -> Vec<CVec> {
    let s3 = 3f64.sqrt();
    let q3 = 3f64.powf(0.25);
    vec![
        real(&[1.0, 0.0, 0.0, 0.0]),
        real(&[0.0, 2.0, -(s3 + 1.0), -(6f64.sqrt()) * q3]),
        real(&[0.0, 2.0, -(s3 - 1.0), 2f64.sqrt() * q3]),
    ]
}

pub fn triple_family() -> WeightedStateFamily {
    WeightedStateFamily::from_pure(two_qubits(), &triple_vectors(), None).expect("normalized states")
}

/// All computational basis states of `dims`, as a product basis in
/// lexicographic order.
pub fn computational_basis(dims: &[usize]) -> Result<ProductBasis> {
    let structure = HilbertStructure::new(dims.to_vec())?;
    let total = structure.total_dim();
    let vectors = (0..total)
        .map(|mut index| {
            let mut digits = vec![0; dims.len()];
            for r in (0..dims.len()).rev() {
                digits[r] = index % dims[r];
                index /= dims[r];
            }
            digits.iter().zip(dims).map(|(&i, &d)| unit_vector(d, i)).collect()
        })
        .collect();
    ProductBasis::new(structure, vectors)
}

/// The nine-state 3x3 domino basis: `|1>|1>`, `|0>|0±1>`, `|2>|1±2>`,
/// `|1±2>|0>`, `|0±1>|2>`.
pub fn domino_basis() -> ProductBasis {
    let e = |i: usize| unit_vector(3, i);
    let pair = |i: usize, j: usize, sign: f64| (e(i) + e(j).scale(sign)).unscale(2f64.sqrt());
    let vectors = vec![
        vec![e(1), e(1)],
        vec![e(0), pair(0, 1, 1.0)],
        vec![e(0), pair(0, 1, -1.0)],
        vec![e(2), pair(1, 2, 1.0)],
        vec![e(2), pair(1, 2, -1.0)],
        vec![pair(1, 2, 1.0), e(0)],
        vec![pair(1, 2, -1.0), e(0)],
        vec![pair(0, 1, 1.0), e(2)],
        vec![pair(0, 1, -1.0), e(2)],
    ];
    ProductBasis::new(HilbertStructure::new(vec![3, 3]).expect("valid dims"), vectors).expect("domino basis")
}

/// `|0>|0>, |0>|1>, |1>|+>, |1>|->`.
pub fn plus_minus_basis() -> ProductBasis {
    let e = |i: usize| unit_vector(2, i);
    let plus = real(&[1.0, 1.0]);
    let minus = real(&[1.0, -1.0]);
    let vectors = vec![vec![e(0), e(0)], vec![e(0), e(1)], vec![e(1), plus], vec![e(1), minus]];
    ProductBasis::new(two_qubits(), vectors).expect("orthonormal basis")
}

/// `{|00>, |10>}` with equal priors, and the single projective round on
/// the first qubit that tells them apart.
pub fn perfect_fixture() -> (ProtocolTree, WeightedStateFamily) {
    let s = two_qubits();
    let mut tree = ProtocolTree::new(s.clone());
    let p0 = CMat::from_diagonal(&real(&[1.0, 0.0]));
    let p1 = CMat::from_diagonal(&real(&[0.0, 1.0]));
    tree.add_measurement(0, 0, &[p0, p1]).expect("qubit projectors");
    let family = WeightedStateFamily::from_pure(s, &[unit_vector(4, 0), unit_vector(4, 2)], None).expect("unit vectors");
    (tree, family)
}

/// Every computational basis state of `dims` with equal priors.
pub fn computational_family(dims: &[usize]) -> Result<WeightedStateFamily> {
    Ok(computational_basis(dims)?.family())
}
