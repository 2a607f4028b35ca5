//! POVMs, Kraus instruments, and the pseudo-weak implementation of a
//! measurement together with its recovery measurement.
//!
//! A pseudo-weak implementation of `(E_k)` with parameters `b_k >= 0`
//! measures `E_k^pw = beta (b_k 1 + E_k)`, `beta = 1 / (1 + sum_k b_k)`.
//! After outcome `k`, the recovery POVM
//! `E^rc_(k),l = beta (b_k + delta_kl) (E_k^pw)^(-1/2) E_l (E_k^pw)^(-1/2)`
//! completes the original measurement: once the pseudo-weak outcome is
//! forgotten, the weighted post-measurement state for final outcome `l`
//! equals the one produced by the original measurement.

use crate::error::{Error, Result};
use crate::qcore::{
    inv_sqrt_psd, min_eigenvalue, op_norm, polar, sqrt_psd, CMat, HilbertStructure, PSD_TOL,
};

/// Completeness tolerance for POVMs and instruments.
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    structure: HilbertStructure,
    effects: Vec<CMat>,
}

impl Povm {
    pub fn new(structure: HilbertStructure, effects: Vec<CMat>) -> Result<Self> {
        let n = structure.total_dim();
        if effects.is_empty() {
            return Err(Error::InvalidMeasurement("POVM has no effects".into()));
        }
        let mut total = CMat::zeros(n, n);
        for (k, e) in effects.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.nrows() });
            }
            let lowest = min_eigenvalue(e)?;
            if lowest < -PSD_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "effect {k} has negative eigenvalue {lowest:e}"
                )));
            }
            total += e;
        }
        let defect = op_norm(&(total - CMat::identity(n, n)));
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidMeasurement(format!("effects sum to identity only up to {defect:e}")));
        }
        Ok(Self { structure, effects })
    }

    /// The one-outcome measurement `{1}`.
    pub fn trivial(structure: HilbertStructure) -> Self {
        let effects = vec![structure.identity()];
        Self { structure, effects }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }
}

/// A measurement with post-measurement states, `sum_k A_k^† A_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausInstrument {
    structure: HilbertStructure,
    kraus_ops: Vec<CMat>,
    party: Option<usize>,
}

impl KrausInstrument {
    pub fn new(structure: HilbertStructure, kraus_ops: Vec<CMat>, party: Option<usize>) -> Result<Self> {
        let n = structure.total_dim();
        if kraus_ops.is_empty() {
            return Err(Error::InvalidMeasurement("instrument has no Kraus operators".into()));
        }
        let mut total = CMat::zeros(n, n);
        for a in &kraus_ops {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.nrows() });
            }
            total += a.adjoint() * a;
            if let Some(p) = party {
                let defect = structure.locality_defect(a, p)?;
                if defect > COMPLETENESS_TOL {
                    return Err(Error::InvalidMeasurement(format!(
                        "Kraus operator acts non-trivially outside party {p} (defect {defect:e})"
                    )));
                }
            }
        }
        let defect = op_norm(&(total - CMat::identity(n, n)));
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidMeasurement(format!("sum A^†A = 1 only up to {defect:e}")));
        }
        Ok(Self { structure, kraus_ops, party })
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn kraus_ops(&self) -> &[CMat] {
        &self.kraus_ops
    }

    pub fn party(&self) -> Option<usize> {
        self.party
    }

    /// The POVM `E_k = A_k^† A_k` implemented by this instrument.
    pub fn povm(&self) -> Result<Povm> {
        let effects = self.kraus_ops.iter().map(|a| hermitian_part(&(a.adjoint() * a))).collect();
        Povm::new(self.structure.clone(), effects)
    }

    /// Outcome-forgetting channel `rho -> sum_k A_k rho A_k^†`.
    pub fn apply(&self, rho: &CMat) -> CMat {
        apply_kraus(&self.kraus_ops, rho)
    }
}

pub fn apply_kraus(ops: &[CMat], rho: &CMat) -> CMat {
    ops.iter().fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, a| acc + a * rho * a.adjoint())
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Interpolation weights `b_k >= 0` and `beta = 1 / (1 + sum b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoWeakParams {
    b: Vec<f64>,
    beta: f64,
}

impl PseudoWeakParams {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if let Some(bad) = b.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("pseudo-weak weight {bad} is not a finite non-negative number")));
        }
        let beta = 1.0 / (1.0 + b.iter().sum::<f64>());
        Ok(Self { b, beta })
    }

    pub fn zeros(outcomes: usize) -> Self {
        Self { b: vec![0.0; outcomes], beta: 1.0 }
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check_len(&self, outcomes: usize) -> Result<()> {
        if self.b.len() != outcomes {
            return Err(Error::DimensionMismatch { expected: outcomes, found: self.b.len() });
        }
        Ok(())
    }

    /// `beta (b_k + delta_kl)`.
    pub fn weight(&self, k: usize, l: usize) -> f64 {
        self.beta * (self.b[k] + if k == l { 1.0 } else { 0.0 })
    }
}

pub fn pseudo_weak(povm: &Povm, params: &PseudoWeakParams) -> Result<Povm> {
    params.check_len(povm.outcomes())?;
    let n = povm.structure.total_dim();
    let effects = povm
        .effects
        .iter()
        .zip(&params.b)
        .map(|(e, &bk)| (CMat::identity(n, n).scale(bk) + e).scale(params.beta))
        .collect();
    Povm::new(povm.structure.clone(), effects)
}

fn recovery_effects(povm: &Povm, params: &PseudoWeakParams, k: usize) -> Result<Vec<CMat>> {
    let n = povm.structure.total_dim();
    let outcomes = povm.outcomes();
    if params.b[k] == 0.0 {
        return Ok((0..outcomes)
            .map(|l| if l == k { CMat::identity(n, n) } else { CMat::zeros(n, n) })
            .collect());
    }
    let pw = (CMat::identity(n, n).scale(params.b[k]) + &povm.effects[k]).scale(params.beta);
    let w = inv_sqrt_psd(&pw, PSD_TOL)?;
    Ok(povm
        .effects
        .iter()
        .enumerate()
        .map(|(l, e)| hermitian_part(&(&w * e * &w)).scale(params.weight(k, l)))
        .collect())
}

/// Recovery POVM `(E^rc_(k),l)_l` following pseudo-weak outcome `k`.
pub fn recovery_povm(povm: &Povm, params: &PseudoWeakParams, k: usize) -> Result<Povm> {
    params.check_len(povm.outcomes())?;
    if k >= povm.outcomes() {
        return Err(Error::InvalidArgument(format!("outcome {k} out of range")));
    }
    Povm::new(povm.structure.clone(), recovery_effects(povm, params, k)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryCheck {
    pub passed: bool,
    pub max_residual: f64,
}

/// Checks `sqrt(E_k^pw) E^rc_(k),l sqrt(E_k^pw) = beta (b_k + delta_kl) E_l`
/// for every pair `(k, l)` in operator norm.
pub fn recovery_identity_check(povm: &Povm, params: &PseudoWeakParams, tol: f64) -> Result<RecoveryCheck> {
    let pw = pseudo_weak(povm, params)?;
    let mut max_residual: f64 = 0.0;
    for k in 0..povm.outcomes() {
        let root = sqrt_psd(&pw.effects[k], PSD_TOL)?;
        let rc = recovery_effects(povm, params, k)?;
        for (l, (erc, el)) in rc.iter().zip(&povm.effects).enumerate() {
            let lhs = &root * erc * &root;
            let rhs = el.scale(params.weight(k, l));
            max_residual = max_residual.max(op_norm(&(lhs - rhs)));
        }
    }
    Ok(RecoveryCheck { passed: max_residual <= tol, max_residual })
}

/// Pseudo-weak implementation of an instrument and the recovery
/// instrument for every pseudo-weak outcome.
///
/// The pseudo-weak Kraus operators are `sqrt(E_k^pw)`. The recovery
/// operators are `V_l U_kl sqrt(E^rc_(k),l)` with `V_l` the polar unitary
/// of `A_l` and `U_kl` the unitary mapping `sqrt(E^rc_(k),l) sqrt(E_k^pw)`
/// onto `sqrt(beta (b_k + delta_kl)) sqrt(E_l)`. Party-local instruments
/// are processed on the local factor and re-embedded, so locality is exact.
pub fn pseudo_weak_instrument(
    inst: &KrausInstrument,
    params: &PseudoWeakParams,
) -> Result<(KrausInstrument, Vec<KrausInstrument>)> {
    params.check_len(inst.kraus_ops.len())?;
    if let Some(party) = inst.party {
        let local_structure = inst.structure.local(party);
        let local_ops = inst
            .kraus_ops
            .iter()
            .map(|a| inst.structure.local_part(a, party))
            .collect::<Result<Vec<_>>>()?;
        let (pw_ops, rc_ops) = pseudo_weak_kraus(&local_structure, &local_ops, params)?;
        let embed = |ops: Vec<CMat>| -> Result<KrausInstrument> {
            let full = ops.iter().map(|a| inst.structure.embed_local(party, a)).collect::<Result<_>>()?;
            KrausInstrument::new(inst.structure.clone(), full, Some(party))
        };
        let pw = embed(pw_ops)?;
        let rc = rc_ops.into_iter().map(embed).collect::<Result<_>>()?;
        return Ok((pw, rc));
    }
    let (pw_ops, rc_ops) = pseudo_weak_kraus(&inst.structure, &inst.kraus_ops, params)?;
    let pw = KrausInstrument::new(inst.structure.clone(), pw_ops, None)?;
    let rc = rc_ops
        .into_iter()
        .map(|ops| KrausInstrument::new(inst.structure.clone(), ops, None))
        .collect::<Result<_>>()?;
    Ok((pw, rc))
}

/// Kraus-level construction behind [`pseudo_weak_instrument`].
pub fn pseudo_weak_kraus(
    structure: &HilbertStructure,
    kraus_ops: &[CMat],
    params: &PseudoWeakParams,
) -> Result<(Vec<CMat>, Vec<Vec<CMat>>)> {
    params.check_len(kraus_ops.len())?;
    let effects: Vec<CMat> = kraus_ops.iter().map(|a| hermitian_part(&(a.adjoint() * a))).collect();
    let povm = Povm::new(structure.clone(), effects)?;
    let pw = pseudo_weak(&povm, params)?;
    let pw_roots = pw.effects.iter().map(|e| sqrt_psd(e, PSD_TOL)).collect::<Result<Vec<_>>>()?;
    let effect_roots = povm.effects.iter().map(|e| sqrt_psd(e, PSD_TOL)).collect::<Result<Vec<_>>>()?;
    let polar_unitaries = kraus_ops.iter().map(|a| polar(a, PSD_TOL).map(|(v, _)| v)).collect::<Result<Vec<_>>>()?;

    let mut recovery = Vec::with_capacity(kraus_ops.len());
    for k in 0..kraus_ops.len() {
        let rc = recovery_effects(&povm, params, k)?;
        let mut ops = Vec::with_capacity(kraus_ops.len());
        for (l, erc) in rc.iter().enumerate() {
            let rc_root = sqrt_psd(erc, PSD_TOL)?;
            let x = &rc_root * &pw_roots[k];
            let y = effect_roots[l].scale(params.weight(k, l).sqrt());
            let (vx, _) = polar(&x, PSD_TOL)?;
            let (vy, _) = polar(&y, PSD_TOL)?;
            let u = vy * vx.adjoint();
            ops.push(&polar_unitaries[l] * u * rc_root);
        }
        recovery.push(ops);
    }
    Ok((pw_roots, recovery))
}

/// Unnormalised post-measurement state of outcome `l` after the
/// pseudo-weak step and its recovery, summed over pseudo-weak outcomes.
pub fn recovered_outcome_state(pw: &KrausInstrument, rc: &[KrausInstrument], l: usize, rho: &CMat) -> CMat {
    let n = rho.nrows();
    pw.kraus_ops.iter().zip(rc).fold(CMat::zeros(n, n), |acc, (a, r)| {
        let op = &r.kraus_ops[l] * a;
        acc + &op * rho * op.adjoint()
    })
}

/// Largest operator-norm distance, over outcomes `l`, between the
/// recovered outcome states and the original instrument's outcome states.
pub fn recovery_channel_residual(
    inst: &KrausInstrument,
    pw: &KrausInstrument,
    rc: &[KrausInstrument],
    rho: &CMat,
) -> f64 {
    inst.kraus_ops
        .iter()
        .enumerate()
        .map(|(l, a)| {
            let original = a * rho * a.adjoint();
            op_norm(&(recovered_outcome_state(pw, rc, l, rho) - original))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{c64, CVec};
    use crate::random::{random_density, random_instrument, random_povm, random_unitary, rng};
    use rand::Rng as _;

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&x| c64(x, 0.0))))
    }

    fn qubit() -> HilbertStructure {
        HilbertStructure::new(vec![2]).unwrap()
    }

    fn max_abs(m: &CMat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn projective() -> Povm {
        Povm::new(qubit(), vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap()
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::new(qubit(), vec![diag(&[1.0, 0.0])]).is_err());
        assert!(Povm::new(qubit(), vec![diag(&[1.5, 0.0]), diag(&[-0.5, 1.0])]).is_err());
        assert!(Povm::new(qubit(), vec![]).is_err());
    }

    #[test]
    fn zero_weights_leave_povm_unchanged() {
        let povm = projective();
        let pw = pseudo_weak(&povm, &PseudoWeakParams::zeros(2)).unwrap();
        assert_eq!(pw, povm);
    }

    #[test]
    fn pseudo_weak_hand_example() {
        let params = PseudoWeakParams::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(params.beta(), 0.5);
        let pw = pseudo_weak(&projective(), &params).unwrap();
        assert!(max_abs(&(&pw.effects()[0] - diag(&[1.0, 0.5]))) < 1e-15);
        assert!(max_abs(&(&pw.effects()[1] - diag(&[0.0, 0.5]))) < 1e-15);
    }

    #[test]
    fn pseudo_weak_is_complete_on_random_input() {
        let mut r = rng(8);
        for _ in 0..50 {
            let n = r.random_range(1..5);
            let m = r.random_range(2..5);
            let povm = Povm::new(HilbertStructure::new(vec![n]).unwrap(), random_povm(&mut r, n, m)).unwrap();
            let b = (0..m).map(|_| 3.0 * r.random::<f64>()).collect();
            let params = PseudoWeakParams::new(b).unwrap();
            let pw = pseudo_weak(&povm, &params).unwrap();
            let total = pw.effects().iter().fold(CMat::zeros(n, n), |acc, e| acc + e);
            assert!(max_abs(&(total - CMat::identity(n, n))) < 1e-12);
            assert!((params.beta() * (1.0 + params.b().iter().sum::<f64>()) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let params = PseudoWeakParams::new(vec![1.0]).unwrap();
        assert!(pseudo_weak(&projective(), &params).is_err());
        assert!(PseudoWeakParams::new(vec![-1.0]).is_err());
    }

    #[test]
    fn recovery_is_deterministic_for_zero_weight() {
        let params = PseudoWeakParams::new(vec![0.0, 2.0]).unwrap();
        let rc = recovery_povm(&projective(), &params, 0).unwrap();
        assert_eq!(rc.effects()[0], CMat::identity(2, 2));
        assert_eq!(rc.effects()[1], CMat::zeros(2, 2));
    }

    #[test]
    fn recovery_of_projective_is_complete() {
        let params = PseudoWeakParams::new(vec![1.0, 1.0]).unwrap();
        let rc = recovery_povm(&projective(), &params, 0).unwrap();
        let total = &rc.effects()[0] + &rc.effects()[1];
        assert!(max_abs(&(total - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn recovery_on_random_qutrit_povm() {
        let mut r = rng(31);
        let povm = Povm::new(HilbertStructure::new(vec![3]).unwrap(), random_povm(&mut r, 3, 3)).unwrap();
        let params = PseudoWeakParams::new(vec![0.5, 0.0, 2.0]).unwrap();
        for k in 0..3 {
            recovery_povm(&povm, &params, k).unwrap();
        }
        assert!(recovery_povm(&povm, &params, 3).is_err());
    }

    #[test]
    fn recovery_identity_examples() {
        let check = recovery_identity_check(&projective(), &PseudoWeakParams::zeros(2), 1e-12).unwrap();
        assert_eq!(check.max_residual, 0.0);
        let check =
            recovery_identity_check(&projective(), &PseudoWeakParams::new(vec![1.0, 0.0]).unwrap(), 1e-10).unwrap();
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn zero_weight_instrument_reproduces_original() {
        let mut r = rng(12);
        let ops = random_instrument(&mut r, 2, 2);
        let inst = KrausInstrument::new(qubit(), ops, None).unwrap();
        let (pw, rc) = pseudo_weak_instrument(&inst, &PseudoWeakParams::zeros(2)).unwrap();
        for (a, p) in inst.kraus_ops().iter().zip(pw.kraus_ops()) {
            let e = a.adjoint() * a;
            assert!(max_abs(&(p - sqrt_psd(&e, PSD_TOL).unwrap())) < 1e-10);
        }
        let rho = random_density(&mut r, 2);
        assert!(recovery_channel_residual(&inst, &pw, &rc, &rho) < 1e-10);
    }

    #[test]
    fn unitary_instrument_is_restored() {
        let mut r = rng(13);
        let u = random_unitary(&mut r, 3);
        let inst = KrausInstrument::new(HilbertStructure::new(vec![3]).unwrap(), vec![u], None).unwrap();
        let params = PseudoWeakParams::new(vec![4.0]).unwrap();
        let (pw, rc) = pseudo_weak_instrument(&inst, &params).unwrap();
        // a single effect equal to 1 has E^pw = 1
        assert!(max_abs(&(&pw.kraus_ops()[0] - CMat::identity(3, 3))) < 1e-12);
        for _ in 0..5 {
            let rho = random_density(&mut r, 3);
            assert!(recovery_channel_residual(&inst, &pw, &rc, &rho) < 1e-10);
        }
    }

    #[test]
    fn random_qubit_instrument_channel_matches() {
        let mut r = rng(14);
        let inst = KrausInstrument::new(qubit(), random_instrument(&mut r, 2, 2), None).unwrap();
        let params = PseudoWeakParams::new(vec![0.3, 1.7]).unwrap();
        let (pw, rc) = pseudo_weak_instrument(&inst, &params).unwrap();
        for _ in 0..20 {
            let rho = random_density(&mut r, 2);
            assert!(recovery_channel_residual(&inst, &pw, &rc, &rho) < 1e-9);
            let forgotten = rc.iter().zip(pw.kraus_ops()).fold(CMat::zeros(2, 2), |acc, (rk, a)| {
                let inner = a * &rho * a.adjoint();
                acc + rk.apply(&inner)
            });
            assert!(max_abs(&(forgotten - inst.apply(&rho))) < 1e-9);
        }
    }

    #[test]
    fn local_instrument_stays_local() {
        let mut r = rng(15);
        let s = HilbertStructure::new(vec![2, 3]).unwrap();
        let local = random_instrument(&mut r, 3, 2);
        let full = local.iter().map(|a| s.embed_local(1, a).unwrap()).collect();
        let inst = KrausInstrument::new(s.clone(), full, Some(1)).unwrap();
        let params = PseudoWeakParams::new(vec![0.0, 0.8]).unwrap();
        let (pw, rc) = pseudo_weak_instrument(&inst, &params).unwrap();
        for op in pw.kraus_ops().iter().chain(rc.iter().flat_map(|i| i.kraus_ops())) {
            assert!(s.locality_defect(op, 1).unwrap() < 1e-12);
        }
        let rho = random_density(&mut r, 6);
        assert!(recovery_channel_residual(&inst, &pw, &rc, &rho) < 1e-9);
    }

    #[test]
    fn non_local_instrument_is_rejected() {
        let mut r = rng(16);
        let s = HilbertStructure::new(vec![2, 2]).unwrap();
        let ops = random_instrument(&mut r, 4, 2);
        assert!(KrausInstrument::new(s, ops, Some(0)).is_err());
    }
}
