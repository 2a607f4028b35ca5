//! The kernel of the summed states must hold no product vector. The
//! largest product overlap with the span also bounds every certificate.

use locclab::certify::{appendix_E, eta_r, precondition_check, SeesawConfig};
use locclab::fixtures::triple_family;
use locclab::qcore::max_eigenvalue;

fn main() -> locclab::Result<()> {
    let family = triple_family();
    let seesaw = SeesawConfig::default();
    let pre = precondition_check(&family, &seesaw)?;
    println!(
        "kernel dimension {}, best product overlap {:.6}, passed = {}",
        pre.kernel_dim, pre.max_overlap, pre.passed
    );
    let eta = eta_r(&family, &seesaw)?.eta();
    println!("eta = {eta:.6}, eigenvalue bound 1/eta = {:.6}", 1.0 / eta);
    for chi in [0.4, 0.6, 0.8, 1.0] {
        let top = max_eigenvalue(&appendix_E(chi)?.expand())?;
        println!("  chi = {chi}: max eigenvalue {top:.6}");
    }
    Ok(())
}
