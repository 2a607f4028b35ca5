//! Product-operator certificates for the necessary condition on perfect
//! asymptotic LOCC discrimination.
//!
//! A family `rho_1..rho_N` whose common kernel holds no product vector can
//! only be discriminated perfectly if, for every `1/N <= chi <= 1`, there is
//! a product operator `E >= 0` with `sum tr(E rho) = 1`,
//! `max tr(E rho) = chi` and `tr(E rho_mu E rho_nu) = 0` for `mu != nu`.

mod appendix;
mod extremum;
mod search;

pub use appendix::{a_chi, appendix_E, appendix_factors, b_chi, c_chi, chi_tilde, chi_tilde_discriminant};
pub use extremum::{product_vector_extremum, ExtremumMode, ProductVectorReport, SeesawConfig};
pub use search::{search_certificate, SearchConfig, SearchOutcome};

use crate::deviation::{conditional_deviation, trivial_deviation, DeviationKind, WeightedStateFamily};
use crate::error::{Error, Result};
use crate::fixtures::triple_vectors;
use crate::measure::Povm;
use crate::qcore::{kernel_basis, min_eigenvalue, projector, trace_product, CMat, CVec, ProductOperator, PSD_TOL};

/// Kernel vectors closer than this to a product vector fail the precondition.
pub const PRODUCT_OVERLAP_MARGIN: f64 = 1e-6;

/// Slack on the `chi` range checks.
const CHI_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub normalization: f64,
    pub max_trace: f64,
    pub orthogonality: f64,
    pub psd_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub e: ProductOperator,
    pub chi: f64,
    pub tol: f64,
    pub traces: Vec<f64>,
    pub residuals: Residuals,
    pub passed: bool,
}

fn check_chi(chi: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidFamily("certificates need at least two states".into()));
    }
    let lo = 1.0 / n as f64;
    if !(chi >= lo - CHI_SLACK && chi <= 1.0 + CHI_SLACK) {
        return Err(Error::InvalidArgument(format!("chi = {chi} outside [1/{n}, 1]")));
    }
    Ok(())
}

/// `tr(E rho_mu)` for every state, priors ignored.
pub fn certificate_traces(e: &CMat, family: &WeightedStateFamily) -> Vec<f64> {
    family.states().iter().map(|rho| trace_product(e, rho).re).collect()
}

/// `max_{mu != nu} |tr(E rho_mu E rho_nu)|`.
pub fn orthogonality_residual(e: &CMat, family: &WeightedStateFamily) -> f64 {
    let sandwiched: Vec<CMat> = family.states().iter().map(|rho| e * rho).collect();
    let mut worst: f64 = 0.0;
    for (mu, a) in sandwiched.iter().enumerate() {
        for (nu, b) in sandwiched.iter().enumerate() {
            if mu != nu {
                worst = worst.max(trace_product(a, b).norm());
            }
        }
    }
    worst
}

/// Recomputes the four conditions on the expanded operator.
pub fn verify_certificate(e: &ProductOperator, family: &WeightedStateFamily, chi: f64, tol: f64) -> Result<Certificate> {
    if e.structure() != family.structure() {
        return Err(Error::DimensionMismatch {
            expected: family.structure().total_dim(),
            found: e.structure().total_dim(),
        });
    }
    check_chi(chi, family.len())?;
    let full = e.expand();
    let traces = certificate_traces(&full, family);
    let total: f64 = traces.iter().sum();
    let max = traces.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let residuals = Residuals {
        normalization: (total - 1.0).abs(),
        max_trace: (max - chi).abs(),
        orthogonality: orthogonality_residual(&full, family),
        psd_margin: min_eigenvalue(&full)?,
    };
    let passed = residuals.normalization <= tol
        && residuals.max_trace <= tol
        && residuals.orthogonality <= tol
        && residuals.psd_margin >= -PSD_TOL;
    Ok(Certificate { e: e.clone(), chi, tol, traces, residuals, passed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionReport {
    pub passed: bool,
    pub kernel_dim: usize,
    /// Largest overlap of a product vector with the common kernel; zero for
    /// a trivial kernel.
    pub max_overlap: f64,
    pub closest_product: Option<Vec<CVec>>,
}

/// Checks that the common kernel of the family contains no product vector.
pub fn precondition_check(family: &WeightedStateFamily, config: &SeesawConfig) -> Result<PreconditionReport> {
    let r = family.weighted_sum();
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let kernel = kernel_basis(&r, PSD_TOL * scale)?;
    if kernel.is_empty() {
        return Ok(PreconditionReport { passed: true, kernel_dim: 0, max_overlap: 0.0, closest_product: None });
    }
    let p = projector(&kernel, r.nrows());
    let rep = product_vector_extremum(&p, family.structure(), ExtremumMode::Max, config)?;
    Ok(PreconditionReport {
        passed: rep.max_overlap() < 1.0 - PRODUCT_OVERLAP_MARGIN,
        kernel_dim: kernel.len(),
        max_overlap: rep.max_overlap(),
        closest_product: Some(rep.argmax),
    })
}

/// `eta_R`: the smallest `<xi|R|xi>` over product unit vectors, with
/// `R = sum_mu rho_mu` matching the normalisation used by
/// [`verify_certificate`]. Any valid certificate then has all eigenvalues
/// at most `1 / eta_R`.
pub fn eta_r(family: &WeightedStateFamily, config: &SeesawConfig) -> Result<ProductVectorReport> {
    let r = family.states().iter().fold(CMat::zeros(family.structure().total_dim(), family.structure().total_dim()), |acc, rho| acc + rho);
    product_vector_extremum(&r, family.structure(), ExtremumMode::Min, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdeltaReport {
    pub passed: bool,
    pub psd_margin: f64,
    /// `|sum_mu tr(gamma_mu E) - 1|`.
    pub normalization: f64,
    pub deviation: f64,
    pub deviation_residual: f64,
}

/// Membership of `E` in `M_delta`: positive, normalised against the
/// weighted states, with `d(I | sqrt(E)) = delta`.
pub fn mdelta_check(
    e: &ProductOperator,
    family: &WeightedStateFamily,
    delta: f64,
    kind: DeviationKind,
    tol: f64,
) -> Result<MdeltaReport> {
    let top = trivial_deviation(kind, family)?;
    if !(delta > 0.0 && delta < top - CHI_SLACK) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie strictly between 0 and {top}")));
    }
    let full = e.expand();
    let psd_margin = min_eigenvalue(&full)?;
    let total: f64 = family.weighted().iter().map(|g| trace_product(&full, g).re).sum();
    let root = e.sqrt()?.expand();
    let deviation = conditional_deviation(kind, &Povm::trivial(family.structure().clone()), family, &root)?;
    let normalization = (total - 1.0).abs();
    let deviation_residual = (deviation - delta).abs();
    Ok(MdeltaReport {
        passed: psd_margin >= -PSD_TOL && normalization <= tol && deviation_residual <= tol,
        psd_margin,
        normalization,
        deviation,
        deviation_residual,
    })
}

/// Rescales a certificate (normalised against the states) so that it is
/// normalised against equally weighted states instead.
pub fn equal_prior_candidate(e: &ProductOperator, states: usize) -> ProductOperator {
    e.scaled(states as f64)
}

/// Whether `family` consists of the three closed-form states, in order.
pub fn is_triple_family(family: &WeightedStateFamily) -> bool {
    let vectors = triple_vectors();
    family.structure().party_dims() == [2, 2]
        && family.len() == vectors.len()
        && family.states().iter().zip(&vectors).all(|(rho, v)| (v.dotc(&(rho * v)).re - 1.0).abs() < 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Pass,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMethod {
    ClosedForm,
    Search,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub chi: f64,
    pub status: PointStatus,
    pub method: PointMethod,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub precondition: PreconditionReport,
    pub points: Vec<ScanPoint>,
}

impl ScanReport {
    /// `chi` values without a verified certificate.
    pub fn inconclusive_at(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.status == PointStatus::Inconclusive).map(|p| p.chi).collect()
    }

    pub fn satisfied(&self) -> bool {
        self.inconclusive_at().is_empty()
    }
}

/// `grid` uniformly spaced values from `1/n` to `1`; a single point is `1/n`.
pub fn chi_grid(n: usize, grid: usize) -> Vec<f64> {
    let lo = 1.0 / n as f64;
    match grid {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..grid).map(|i| lo + (1.0 - lo) * i as f64 / (grid - 1) as f64).collect(),
    }
}

/// Looks for a certificate at every grid point. The closed form is tried
/// first when the family is recognised; otherwise, or if it fails, the
/// numerical search runs.
pub fn scan_chi(
    family: &WeightedStateFamily,
    grid: usize,
    search: &SearchConfig,
    seesaw: &SeesawConfig,
) -> Result<ScanReport> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    let precondition = precondition_check(family, seesaw)?;
    if !precondition.passed {
        return Err(Error::Precondition(format!(
            "common kernel contains a product vector (overlap {})",
            precondition.max_overlap
        )));
    }
    let closed_form = is_triple_family(family);
    let mut points = Vec::with_capacity(grid);
    for chi in chi_grid(family.len(), grid) {
        if closed_form {
            let cert = verify_certificate(&appendix_E(chi)?, family, chi, search.tol)?;
            if cert.passed {
                points.push(ScanPoint { chi, status: PointStatus::Pass, method: PointMethod::ClosedForm, certificate: cert });
                continue;
            }
        }
        let (status, certificate) = match search_certificate(family, chi, search)? {
            SearchOutcome::Found { certificate, .. } => (PointStatus::Pass, certificate),
            SearchOutcome::Inconclusive { best, .. } => (PointStatus::Inconclusive, best),
        };
        points.push(ScanPoint { chi, status, method: PointMethod::Search, certificate });
    }
    Ok(ScanReport { precondition, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{computational_family, triple_family, two_qubits};
    use crate::qcore::{c64, max_eigenvalue, sqrt_psd, unit_vector};

    fn ket00() -> ProductOperator {
        let p = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        ProductOperator::new(two_qubits(), vec![p.clone(), p]).unwrap()
    }

    #[test]
    fn identity_over_n_is_a_certificate_at_one_over_n() {
        for dims in [vec![2, 2], vec![3, 3], vec![2, 2, 2]] {
            let fam = computational_family(&dims).unwrap();
            let n = fam.len();
            let s = fam.structure().clone();
            let e = ProductOperator::identity(s).scaled(1.0 / n as f64);
            let cert = verify_certificate(&e, &fam, 1.0 / n as f64, 1e-12).unwrap();
            assert!(cert.passed, "{dims:?} {:?}", cert.residuals);
        }
        let e = ProductOperator::identity(two_qubits()).scaled(1.0 / 3.0);
        assert!(verify_certificate(&e, &triple_family(), 1.0 / 3.0, 1e-12).unwrap().passed);
    }

    #[test]
    fn projector_on_first_state_is_a_certificate_at_one() {
        let cert = verify_certificate(&ket00(), &triple_family(), 1.0, 1e-12).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.traces[1].abs() + cert.traces[2].abs(), 0.0);
    }

    #[test]
    fn appendix_operators_verify_on_the_grid() {
        let fam = triple_family();
        for chi in chi_grid(3, 101) {
            let cert = verify_certificate(&appendix_E(chi).unwrap(), &fam, chi, 1e-8).unwrap();
            assert!(cert.passed, "chi = {chi}: {:?}", cert.residuals);
        }
        let third = verify_certificate(&appendix_E(1.0 / 3.0).unwrap(), &fam, 1.0 / 3.0, 1e-8).unwrap();
        for t in third.traces {
            assert!((t - 1.0 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn wrong_chi_fails_on_max_trace() {
        let cert = verify_certificate(&appendix_E(0.75).unwrap(), &triple_family(), 0.6, 1e-8).unwrap();
        assert!(!cert.passed);
        assert!((cert.residuals.max_trace - 0.15).abs() < 1e-8);
        assert!(cert.residuals.orthogonality < 1e-8);
    }

    #[test]
    fn chi_out_of_range_and_dimension_errors() {
        let fam = triple_family();
        assert!(verify_certificate(&ket00(), &fam, 0.2, 1e-8).is_err());
        let other = ProductOperator::identity(crate::qcore::HilbertStructure::new(vec![2, 3]).unwrap());
        assert!(verify_certificate(&other, &fam, 0.5, 1e-8).is_err());
    }

    #[test]
    fn orthogonality_matches_sandwiched_states() {
        let fam = triple_family();
        let mut r = crate::random::rng(5);
        for chi in [0.4, 0.7] {
            for e in [appendix_E(chi).unwrap().expand(), crate::random::random_psd(&mut r, 4)] {
                let root = sqrt_psd(&e, PSD_TOL).unwrap();
                let out: Vec<CMat> = fam.states().iter().map(|rho| &root * rho * &root).collect();
                let mut worst: f64 = 0.0;
                for mu in 0..3 {
                    for nu in 0..3 {
                        if mu != nu {
                            worst = worst.max(trace_product(&out[mu], &out[nu]).norm());
                        }
                    }
                }
                assert!((worst - orthogonality_residual(&e, &fam)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn precondition_cases() {
        let cfg = SeesawConfig::default();
        let full = precondition_check(&computational_family(&[2, 2]).unwrap(), &cfg).unwrap();
        assert!(full.passed && full.kernel_dim == 0);

        let triple = precondition_check(&triple_family(), &cfg).unwrap();
        assert!(triple.passed);
        assert_eq!(triple.kernel_dim, 1);
        assert!(triple.max_overlap < 1.0 - 1e-3);

        let fam = WeightedStateFamily::from_pure(two_qubits(), &[unit_vector(4, 0), unit_vector(4, 1)], None).unwrap();
        let bad = precondition_check(&fam, &cfg).unwrap();
        assert!(!bad.passed);
        assert!((bad.max_overlap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_bounded_by_inverse_eta() {
        let fam = triple_family();
        let eta = eta_r(&fam, &SeesawConfig::default()).unwrap().eta();
        assert!(eta > 0.0);
        for chi in chi_grid(3, 21) {
            let e = appendix_E(chi).unwrap();
            assert!(max_eigenvalue(&e.expand()).unwrap() <= 1.0 / eta + 1e-6);
        }
        assert!(max_eigenvalue(&ket00().expand()).unwrap() <= 1.0 / eta + 1e-6);
    }

    #[test]
    fn mdelta_membership() {
        let fam = triple_family();
        let top = 2.0 / 3.0;
        let id = ProductOperator::identity(two_qubits());
        let rep = mdelta_check(&id, &fam, 0.3, DeviationKind::MeanFailure, 1e-9).unwrap();
        assert!(rep.normalization < 1e-12);
        assert!((rep.deviation - top).abs() < 1e-12);
        assert!(!rep.passed);
        assert!(mdelta_check(&id, &fam, top, DeviationKind::MeanFailure, 1e-9).is_err());

        for chi in [0.4, 0.6, 0.75, 0.9] {
            let e = equal_prior_candidate(&appendix_E(chi).unwrap(), 3);
            let rep = mdelta_check(&e, &fam, 1.0 - chi, DeviationKind::MeanFailure, 1e-8).unwrap();
            assert!(rep.passed, "chi = {chi}: {rep:?}");
            let doubled = mdelta_check(&e.scaled(2.0), &fam, 1.0 - chi, DeviationKind::MeanFailure, 1e-8).unwrap();
            assert!(!doubled.passed && (doubled.normalization - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn scan_uses_closed_form_and_honours_grid_one() {
        let fam = triple_family();
        let rep = scan_chi(&fam, 11, &SearchConfig::default(), &SeesawConfig::default()).unwrap();
        assert!(rep.satisfied());
        assert!(rep.points.iter().all(|p| p.method == PointMethod::ClosedForm));
        let one = scan_chi(&fam, 1, &SearchConfig::default(), &SeesawConfig::default()).unwrap();
        assert_eq!(one.points.len(), 1);
        assert!((one.points[0].chi - 1.0 / 3.0).abs() < 1e-15);

        let bad = WeightedStateFamily::from_pure(two_qubits(), &[unit_vector(4, 0), unit_vector(4, 1)], None).unwrap();
        assert!(matches!(
            scan_chi(&bad, 5, &SearchConfig::default(), &SeesawConfig::default()),
            Err(Error::Precondition(_))
        ));
    }
}
