//! The closed-form product certificates for the three two-qubit states
//! across the whole chi range.

use locclab::certify::{appendix_E, chi_grid, verify_certificate};
use locclab::fixtures::triple_family;

fn main() -> locclab::Result<()> {
    let family = triple_family();
    let mut worst: f64 = 0.0;
    for chi in chi_grid(family.len(), 101) {
        let cert = verify_certificate(&appendix_E(chi)?, &family, chi, 1e-8)?;
        assert!(cert.passed, "chi = {chi}");
        let r = cert.residuals;
        worst = worst.max(r.normalization).max(r.max_trace).max(r.orthogonality);
    }
    println!("101 chi values in [1/3, 1] verified, largest residual {worst:.1e}");

    for chi in [1.0 / 3.0, 0.45, 0.75, 1.0] {
        let e = appendix_E(chi)?;
        let cert = verify_certificate(&e, &family, chi, 1e-8)?;
        println!("chi = {chi:.4}: traces = {:.4?}, psd margin = {:.3e}", cert.traces, cert.residuals.psd_margin);
    }
    Ok(())
}
