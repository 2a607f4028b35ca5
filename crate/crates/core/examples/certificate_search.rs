//! Numerical search for product certificates, without using the closed
//! form, and a grid scan on a four-state family.

use locclab::certify::{scan_chi, search_certificate, SearchConfig, SearchOutcome, SeesawConfig};
use locclab::fixtures::{computational_family, triple_family};

fn main() -> locclab::Result<()> {
    let family = triple_family();
    let config = SearchConfig::default();
    for chi in [1.0 / 3.0, 0.45, 0.6, 0.75, 0.9, 1.0] {
        match search_certificate(&family, chi, &config)? {
            SearchOutcome::Found { certificate, restart } => {
                println!("chi = {chi:.4}: found on restart {restart}, traces {:.4?}", certificate.traces)
            }
            SearchOutcome::Inconclusive { restarts, .. } => println!("chi = {chi:.4}: nothing after {restarts} restarts"),
        }
    }

    let report = scan_chi(&computational_family(&[2, 2])?, 7, &config, &SeesawConfig::default())?;
    println!("computational 2x2 scan: satisfied = {}", report.satisfied());
    Ok(())
}
