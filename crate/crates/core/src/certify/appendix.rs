//! Closed-form product operators `E_chi` for the three-state family of
//! [`crate::fixtures::triple_vectors`], valid for `1/3 <= chi <= 1`.

use crate::error::{Error, Result};
use crate::fixtures::{triple_vectors, two_qubits};
use crate::qcore::{c64, CMat, ProductOperator};

/// Slack on the `chi` range so grid endpoints computed in floating point
/// are accepted.
const RANGE_SLACK: f64 = 1e-12;

/// The quantity under the square root defining `chi~`.
pub fn chi_tilde_discriminant(chi: f64) -> f64 {
    let s3 = 3f64.sqrt();
    (115.0 - 8.0 * s3) * chi * chi - (46.0 - 10.0 * s3) * chi - 2.0 * s3 + 4.0
}

pub fn chi_tilde(chi: f64) -> f64 {
    let disc = chi_tilde_discriminant(chi);
    assert!(disc >= -1e-12, "negative discriminant {disc} at chi = {chi}");
    disc.max(0.0).sqrt()
}

fn real_matrix(entries: [[f64; 2]; 2]) -> CMat {
    CMat::from_fn(2, 2, |i, j| c64(entries[i][j], 0.0))
}

pub fn a_chi(chi: f64) -> CMat {
    let s3 = 3f64.sqrt();
    let a00 = -(12.0 * s3 - 21.0) * chi + 3.0 * s3 - 3.0;
    let a11 = (6.0 * s3 - 12.0) * chi - 2.0 * s3 + 6.0;
    let a01 = (2.0 * s3 - 3.0).sqrt() * ((5.0 * s3 - 3.0) * chi - 2.0 * s3);
    real_matrix([[a00, a01], [a01, a11]])
}

pub fn b_chi(chi: f64) -> CMat {
    let s3 = 3f64.sqrt();
    let t = chi_tilde(chi);
    real_matrix([[20.0 * chi + 2.0 * t - 4.0, 0.0], [0.0, (12.0 - s3) * chi + t + s3 - 1.0]])
}

pub fn c_chi(chi: f64) -> CMat {
    let s3 = 3f64.sqrt();
    let t = chi_tilde(chi);
    let b11 = (12.0 - s3) * chi + t + s3 - 1.0;
    real_matrix([[-(4.0 + 3.0 * s3) * chi - t + 3.0 * s3 + 5.0, 0.0], [0.0, b11]])
}

/// Unnormalised factors: `B ⊗ C` below `chi = 1/2`, `A ⊗ |1><1|` from there on.
pub fn appendix_factors(chi: f64) -> Result<[CMat; 2]> {
    if !(1.0 / 3.0 - RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&chi) {
        return Err(Error::InvalidArgument(format!("chi = {chi} outside [1/3, 1]")));
    }
    let chi = chi.clamp(1.0 / 3.0, 1.0);
    if chi < 0.5 {
        Ok([b_chi(chi), c_chi(chi)])
    } else {
        Ok([a_chi(chi), real_matrix([[0.0, 0.0], [0.0, 1.0]])])
    }
}

/// `E_chi`, normalised so that its expectations on the three states sum to one.
#[allow(non_snake_case)]
pub fn appendix_E(chi: f64) -> Result<ProductOperator> {
    let [first, second] = appendix_factors(chi)?;
    let unnormalised = first.kronecker(&second);
    let total: f64 = triple_vectors().iter().map(|v| v.dotc(&(&unnormalised * v)).re).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(format!("E_chi has non-positive total weight {total}")));
    }
    ProductOperator::new(two_qubits(), vec![first.unscale(total), second])
}
