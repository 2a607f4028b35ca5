//! Two-round LOCC protocol on the computational two-qubit basis: Alice
//! measures first, Bob measures only when Alice sees outcome 1.

use locclab::deviation::{d_ce, d_mf};
use locclab::fixtures::{computational_family, two_qubits};
use locclab::protocol::{as_povm, simulate, validate, ProtocolTree};
use locclab::qcore::{c64, CMat};

fn projector(i: usize) -> CMat {
    CMat::from_fn(2, 2, |r, c| c64(if r == i && c == i { 1.0 } else { 0.0 }, 0.0))
}

fn main() -> locclab::Result<()> {
    let family = computational_family(&[2, 2])?;
    let mut tree = ProtocolTree::new(two_qubits());
    let alice = tree.add_measurement(tree.root(), 0, &[projector(0), projector(1)])?;
    tree.add_measurement(alice[1], 1, &[projector(0), projector(1)])?;
    assert!(validate(&tree).valid);

    let p = simulate(&tree, &family)?;
    println!("leaves: {}", tree.leaves().len());
    for (mu, row) in p.table().iter().enumerate() {
        println!("  state {mu}: {row:.3?}");
    }
    println!("d_mf = {:.4}, d_ce = {:.4} nats", d_mf(&p), d_ce(&p));

    let povm = as_povm(&tree)?;
    println!("leaf effects as a POVM: {} outcomes", povm.outcomes());
    Ok(())
}
