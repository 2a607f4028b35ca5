//! Writes the bundled JSON fixtures used by the command-line walkthroughs.
//!
//!     cargo run --example export_fixtures -- crates/core/examples/data

use std::path::PathBuf;

use locclab::certify::appendix_E;
use locclab::fixtures::{computational_basis, domino_basis, triple_vectors, perfect_fixture, two_qubits};
use locclab::io::{write_json, BasisFile, CertFile, PovmFile, ProtocolFile, StatesFile};
use locclab::measure::Povm;
use locclab::qcore::{unit_vector, CVec};
use locclab::random::{random_sharp_protocol, rng};

fn main() -> locclab::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "examples/data".into()));
    std::fs::create_dir_all(&dir)?;

    write_json(&dir.join("triple_states.json"), &StatesFile::from_vectors(&[2, 2], &triple_vectors(), None))?;
    write_json(&dir.join("triple_cert_0.75.json"), &CertFile::from_operator(&appendix_E(0.75)?))?;
    write_json(&dir.join("trivial_povm.json"), &PovmFile::from_povm(&Povm::trivial(two_qubits())))?;

    let (tree, _) = perfect_fixture();
    let perfect = [unit_vector(4, 0), unit_vector(4, 2)];
    write_json(&dir.join("perfect_states.json"), &StatesFile::from_vectors(&[2, 2], &perfect, None))?;
    write_json(&dir.join("perfect_protocol.json"), &ProtocolFile::from_tree(&tree))?;

    let s = two_qubits();
    write_json(&dir.join("computational_states.json"), &StatesFile::from_vectors(&[2, 2], &pure_basis(&[2, 2])?, None))?;
    let sharp = random_sharp_protocol(&mut rng(7), &s, 2, 3);
    write_json(&dir.join("sharp_protocol.json"), &ProtocolFile::from_tree(&sharp))?;

    write_json(&dir.join("domino_basis.json"), &BasisFile::from_basis(&domino_basis()))?;
    write_json(&dir.join("computational_3x3_basis.json"), &BasisFile::from_basis(&computational_basis(&[3, 3])?))?;

    println!("fixtures written to {}", dir.display());
    Ok(())
}

fn pure_basis(dims: &[usize]) -> locclab::Result<Vec<CVec>> {
    let basis = computational_basis(dims)?;
    Ok((0..basis.len()).map(|mu| basis.global(mu)).collect())
}
