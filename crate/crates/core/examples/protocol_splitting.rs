//! Splits a random two-round protocol so that every branch stops exactly at
//! deviation delta, and checks that forgetting the pseudo-weak outcomes
//! gives back the original protocol.

use locclab::deviation::DeviationKind;
use locclab::fixtures::{computational_family, two_qubits};
use locclab::random::{random_sharp_protocol, rng};
use locclab::splitting::{equivalence_check, node_deviation, split_protocol, SplitConfig};

fn main() -> locclab::Result<()> {
    let family = computational_family(&[2, 2])?;
    let tree = random_sharp_protocol(&mut rng(18), &two_qubits(), 2, 3);
    for kind in [DeviationKind::MeanFailure, DeviationKind::ConditionalEntropy] {
        for delta in [0.1, 0.2, 0.3] {
            let config = SplitConfig::new(delta, kind);
            let result = split_protocol(&tree, &config, &family)?;
            let boundary = result
                .s_delta
                .iter()
                .map(|&n| node_deviation(&result.stage_one, n, kind, &family))
                .collect::<locclab::Result<Vec<_>>>()?;
            let residual = equivalence_check(&tree, &result, &family)?;
            println!(
                "{} delta = {delta}: {} pseudo-weak steps, boundary d = {:.7?}, residual = {residual:.1e}",
                kind.as_str(),
                result.pseudo_weak.len(),
                boundary
            );
        }
    }
    Ok(())
}
