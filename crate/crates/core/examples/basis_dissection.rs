//! Finite LOCC decisions for complete product bases.

use locclab::basis::{dissect, emit_protocol, OVERLAP_TOL};
use locclab::deviation::d_mf;
use locclab::fixtures::{computational_basis, domino_basis, plus_minus_basis};
use locclab::protocol::simulate;

fn main() -> locclab::Result<()> {
    let cases = [
        ("computational 2x2x2", computational_basis(&[2, 2, 2])?),
        ("plus/minus 2x2", plus_minus_basis()),
        ("domino 3x3", domino_basis()),
    ];
    for (name, basis) in cases {
        let result = dissect(&basis, OVERLAP_TOL)?;
        print!("{name}: {}", result.decision);
        match emit_protocol(&result) {
            Ok(tree) => {
                let p = simulate(&tree, &basis.family())?;
                println!(" with a depth-{} protocol, d_mf = {:.1e}", tree.max_depth(), d_mf(&p));
            }
            Err(_) => println!(", stuck on states {:?}", result.witness.unwrap_or_default()),
        }
    }
    Ok(())
}
