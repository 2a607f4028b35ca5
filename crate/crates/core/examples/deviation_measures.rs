//! Deviation of outcome tables: mean failure, conditional entropy and the
//! finite (perfect) measure, plus monotonicity under post-processing.

use locclab::deviation::{d_ce, d_finite, d_mf, post_process, OutcomeDistribution, FINITE_TOL};

fn show(name: &str, p: &OutcomeDistribution) {
    println!(
        "{name:>10}: d_mf = {:.6}  d_ce = {:.6} nats  d_finite = {}",
        d_mf(p),
        d_ce(p),
        d_finite(p, FINITE_TOL)
    );
}

fn main() -> locclab::Result<()> {
    // rows are states (already weighted by their priors), columns outcomes
    let perfect = OutcomeDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]])?;
    let trivial = OutcomeDistribution::trivial(&[1.0 / 3.0; 3])?;
    let noisy = OutcomeDistribution::new(vec![vec![0.4, 0.1, 0.0], vec![0.05, 0.3, 0.15]])?;
    show("perfect", &perfect);
    show("trivial", &trivial);
    show("noisy", &noisy);

    // merging outcomes 1 and 2 can only increase the deviation
    let merge = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]];
    let merged = post_process(&noisy, &merge)?;
    show("merged", &merged);
    assert!(d_mf(&merged) >= d_mf(&noisy) && d_ce(&merged) >= d_ce(&noisy));
    Ok(())
}
