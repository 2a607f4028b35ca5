//! A sharp qubit measurement replaced by its pseudo-weak version, then
//! undone by the recovery instruments. Forgetting the pseudo-weak outcome
//! leaves exactly the original instrument.

use locclab::measure::{
    pseudo_weak, pseudo_weak_instrument, recovery_channel_residual, recovery_identity_check, KrausInstrument,
    PseudoWeakParams,
};
use locclab::qcore::{c64, CMat, HilbertStructure};
use locclab::random::{random_density, random_instrument, rng};

fn main() -> locclab::Result<()> {
    let qubit = HilbertStructure::new(vec![2])?;
    let z0 = CMat::from_fn(2, 2, |i, j| c64(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0));
    let z1 = CMat::identity(2, 2) - &z0;
    let sharp = KrausInstrument::new(qubit.clone(), vec![z0, z1], None)?;
    let povm = sharp.povm()?;

    for b in [0.0, 0.5, 4.0, 100.0] {
        let params = PseudoWeakParams::new(vec![b, b])?;
        let pw = pseudo_weak(&povm, &params)?;
        let check = recovery_identity_check(&povm, &params, 1e-9)?;
        println!(
            "b = {b:>5}: E_0^pw diag = ({:.4}, {:.4})  recovery identity residual = {:.1e}",
            pw.effects()[0][(0, 0)].re,
            pw.effects()[0][(1, 1)].re,
            check.max_residual
        );
    }

    let mut r = rng(5);
    let inst = KrausInstrument::new(HilbertStructure::new(vec![3])?, random_instrument(&mut r, 3, 3), None)?;
    let params = PseudoWeakParams::new(vec![0.3, 1.0, 2.5])?;
    let (pw, rc) = pseudo_weak_instrument(&inst, &params)?;
    let worst = (0..5)
        .map(|_| recovery_channel_residual(&inst, &pw, &rc, &random_density(&mut r, 3)))
        .fold(0.0, f64::max);
    println!("random qutrit instrument: recovered channel residual = {worst:.1e}");
    Ok(())
}
