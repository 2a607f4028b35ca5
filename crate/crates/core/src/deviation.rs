//! Deviation from perfect discrimination.
//!
//! A measure scores an outcome table `p(mu, k) = p_mu tr(rho_mu E_k)`: zero
//! means the outcome always identifies the state. Implemented are the
//! minimal mean failure probability `d_mf`, the conditional entropy
//! `d_ce = H(S|K)` in nats, and the all-or-nothing `d_finite`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::{KrausInstrument, Povm};
use crate::qcore::{min_eigenvalue, trace, trace_product, CMat, CVec, HilbertStructure, PSD_TOL};

/// Families and tables are normalised to this absolute tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Below this total weight `p_A` the conditional deviation falls back to
/// the trivial measurement on the unconditioned family.
pub const P_A_CUTOFF: f64 = 1e-14;

/// Entries at or below this are treated as zero by `d_finite` when it is
/// reached through [`DeviationKind`].
pub const FINITE_TOL: f64 = 1e-12;

const CLAMP_TOL: f64 = 1e-12;

/// States `rho_mu` with priors `p_mu`; the weighted states are `p_mu rho_mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStateFamily {
    structure: HilbertStructure,
    states: Vec<CMat>,
    priors: Vec<f64>,
}

impl WeightedStateFamily {
    pub fn new(structure: HilbertStructure, states: Vec<CMat>, priors: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidFamily("no states".into()));
        }
        if priors.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: priors.len() });
        }
        if let Some(p) = priors.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::InvalidFamily(format!("prior {p} is not positive")));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidFamily(format!("priors sum to {total}")));
        }
        let n = structure.total_dim();
        for (mu, rho) in states.iter().enumerate() {
            if rho.nrows() != n || rho.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: rho.nrows() });
            }
            let lowest = min_eigenvalue(rho)?;
            if lowest < -PSD_TOL {
                return Err(Error::InvalidFamily(format!("state {mu} has eigenvalue {lowest:e}")));
            }
            let t = trace(rho);
            if (t.re - 1.0).abs() > NORMALIZATION_TOL || t.im.abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidFamily(format!("state {mu} has trace {t}")));
            }
        }
        Ok(Self { structure, states, priors })
    }

    /// Pure states `|psi_mu><psi_mu|`; `None` gives equal priors.
    pub fn from_pure(structure: HilbertStructure, vectors: &[CVec], priors: Option<Vec<f64>>) -> Result<Self> {
        let states = vectors
            .iter()
            .map(|v| {
                let norm = v.norm();
                if norm == 0.0 {
                    return Err(Error::InvalidFamily("zero state vector".into()));
                }
                let u = v.unscale(norm);
                Ok(&u * u.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        let priors = priors.unwrap_or_else(|| equal_priors(vectors.len()));
        Self::new(structure, states, priors)
    }

    /// Same states with equal priors.
    pub fn with_equal_priors(&self) -> Self {
        Self { structure: self.structure.clone(), states: self.states.clone(), priors: equal_priors(self.len()) }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn states(&self) -> &[CMat] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Weighted states `gamma_mu = p_mu rho_mu`.
    pub fn weighted(&self) -> Vec<CMat> {
        self.states.iter().zip(&self.priors).map(|(rho, p)| rho.scale(*p)).collect()
    }

    /// `R = sum_mu gamma_mu`.
    pub fn weighted_sum(&self) -> CMat {
        let n = self.structure.total_dim();
        self.weighted().iter().fold(CMat::zeros(n, n), |acc, g| acc + g)
    }
}

pub fn equal_priors(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Joint table `p(mu, k)`: one row per state, one column per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    table: Vec<Vec<f64>>,
}

impl OutcomeDistribution {
    /// Validates the table, clamping entries in `[-1e-12, 0)` to zero.
    pub fn new(mut table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map(Vec::len).unwrap_or(0);
        if table.is_empty() || cols == 0 {
            return Err(Error::InvalidArgument("empty outcome table".into()));
        }
        let mut total = 0.0;
        for row in &mut table {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: row.len() });
            }
            for x in row.iter_mut() {
                if !x.is_finite() || *x < -CLAMP_TOL {
                    return Err(Error::InvalidArgument(format!("table entry {x} is not a probability")));
                }
                *x = x.max(0.0);
                total += *x;
            }
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!("table sums to {total}")));
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn states(&self) -> usize {
        self.table.len()
    }

    pub fn outcomes(&self) -> usize {
        self.table[0].len()
    }

    pub fn get(&self, mu: usize, k: usize) -> f64 {
        self.table[mu][k]
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.table.iter().map(move |row| row[k])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.table.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.outcomes()).map(|k| self.column(k).sum()).collect()
    }

    /// The table of the trivial measurement: a single column of row sums.
    pub fn trivial(priors: &[f64]) -> Result<Self> {
        Self::new(priors.iter().map(|&p| vec![p]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviationKind {
    MeanFailure,
    ConditionalEntropy,
    Finite,
}

impl DeviationKind {
    pub fn evaluate(self, p: &OutcomeDistribution) -> f64 {
        match self {
            DeviationKind::MeanFailure => d_mf(p),
            DeviationKind::ConditionalEntropy => d_ce(p),
            DeviationKind::Finite => d_finite(p, FINITE_TOL),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviationKind::MeanFailure => "mf",
            DeviationKind::ConditionalEntropy => "ce",
            DeviationKind::Finite => "finite",
        }
    }
}

impl fmt::Display for DeviationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mf" | "mean_failure" => Ok(DeviationKind::MeanFailure),
            "ce" | "conditional_entropy" => Ok(DeviationKind::ConditionalEntropy),
            "finite" => Ok(DeviationKind::Finite),
            other => Err(Error::InvalidArgument(format!("unknown deviation measure {other:?}"))),
        }
    }
}

fn check_dims(structure: &HilbertStructure, other: &HilbertStructure) -> Result<()> {
    if structure.total_dim() != other.total_dim() {
        return Err(Error::DimensionMismatch { expected: structure.total_dim(), found: other.total_dim() });
    }
    Ok(())
}

/// Unnormalised table `tr(E_k gamma_mu)` for arbitrary weighted operators.
fn raw_table(effects: &[CMat], weighted: &[CMat]) -> Vec<Vec<f64>> {
    weighted
        .iter()
        .map(|g| effects.iter().map(|e| trace_product(e, g).re).collect())
        .collect()
}

/// `p(mu, k) = p_mu tr(rho_mu E_k)`.
pub fn outcome_distribution(povm: &Povm, family: &WeightedStateFamily) -> Result<OutcomeDistribution> {
    check_dims(povm.structure(), family.structure())?;
    OutcomeDistribution::new(raw_table(povm.effects(), &family.weighted()))
}

/// Minimal mean failure probability `1 - sum_k max_mu p(mu, k)`.
pub fn d_mf(p: &OutcomeDistribution) -> f64 {
    let success: f64 = (0..p.outcomes()).map(|k| p.column(k).fold(0.0, f64::max)).sum();
    (1.0 - success).max(0.0)
}

/// The state announced for each outcome by the optimal guess; ties go to
/// the smallest index.
pub fn mf_announcement(p: &OutcomeDistribution) -> Vec<usize> {
    (0..p.outcomes())
        .map(|k| {
            let mut best = 0;
            for mu in 1..p.states() {
                if p.get(mu, k) > p.get(best, k) {
                    best = mu;
                }
            }
            best
        })
        .collect()
}

fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Conditional entropy `H(S, K) - H(K)` in nats.
pub fn d_ce(p: &OutcomeDistribution) -> f64 {
    let joint: f64 = -p.table().iter().flatten().map(|&x| plogp(x)).sum::<f64>();
    let marginal: f64 = -p.column_sums().into_iter().map(plogp).sum::<f64>();
    (joint - marginal).max(0.0)
}

/// Zero if every outcome is compatible with at most one state.
pub fn d_finite(p: &OutcomeDistribution, tol: f64) -> f64 {
    let ambiguous = (0..p.outcomes()).any(|k| p.column(k).filter(|&x| x > tol).count() > 1);
    if ambiguous {
        1.0
    } else {
        0.0
    }
}

/// Deviation of the trivial measurement on `family`.
pub fn trivial_deviation(kind: DeviationKind, family: &WeightedStateFamily) -> Result<f64> {
    Ok(kind.evaluate(&OutcomeDistribution::trivial(family.priors())?))
}

/// `d(E | A)`: the deviation of `povm` on the family conditioned on the
/// Kraus operator `A`, or of the trivial measurement on the unconditioned
/// family when `p_A = sum_mu tr(A gamma_mu A^†)` vanishes.
pub fn conditional_deviation(
    kind: DeviationKind,
    povm: &Povm,
    family: &WeightedStateFamily,
    a: &CMat,
) -> Result<f64> {
    check_dims(povm.structure(), family.structure())?;
    let n = family.structure().total_dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.nrows() });
    }
    let conditioned: Vec<CMat> = family.weighted().iter().map(|g| a * g * a.adjoint()).collect();
    let p_a: f64 = conditioned.iter().map(|g| trace(g).re).sum();
    if p_a <= P_A_CUTOFF {
        return trivial_deviation(kind, family);
    }
    let mut table = raw_table(povm.effects(), &conditioned);
    for row in &mut table {
        for x in row.iter_mut() {
            *x /= p_a;
        }
    }
    Ok(kind.evaluate(&OutcomeDistribution::new(table)?))
}

/// Classical post-processing `p'(mu, l) = sum_k pi[l][k] p(mu, k)`.
pub fn post_process(p: &OutcomeDistribution, pi: &[Vec<f64>]) -> Result<OutcomeDistribution> {
    validate_stochastic(pi, p.outcomes())?;
    let table = p
        .table()
        .iter()
        .map(|row| pi.iter().map(|pl| pl.iter().zip(row).map(|(w, x)| w * x).sum()).collect())
        .collect();
    OutcomeDistribution::new(table)
}

/// Checks that `pi[l][k] >= 0` and every column `k` sums to one.
pub fn validate_stochastic(pi: &[Vec<f64>], inputs: usize) -> Result<()> {
    if pi.is_empty() {
        return Err(Error::InvalidArgument("stochastic matrix has no rows".into()));
    }
    for row in pi {
        if row.len() != inputs {
            return Err(Error::DimensionMismatch { expected: inputs, found: row.len() });
        }
        if row.iter().any(|&x| !(x >= -CLAMP_TOL)) {
            return Err(Error::InvalidArgument("stochastic matrix has a negative entry".into()));
        }
    }
    for k in 0..inputs {
        let s: f64 = pi.iter().map(|row| row[k]).sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!("column {k} of the stochastic matrix sums to {s}")));
        }
    }
    Ok(())
}

/// Table of the two-stage measurement `rho -> ⊕_k E_k(A_k rho A_k^†)`;
/// columns are ordered by first-stage outcome, then follow-up outcome.
pub fn two_stage_distribution(
    first: &KrausInstrument,
    followups: &[Povm],
    family: &WeightedStateFamily,
) -> Result<OutcomeDistribution> {
    if followups.len() != first.kraus_ops().len() {
        return Err(Error::DimensionMismatch { expected: first.kraus_ops().len(), found: followups.len() });
    }
    let weighted = family.weighted();
    let mut table = vec![Vec::new(); family.len()];
    for (a, follow) in first.kraus_ops().iter().zip(followups) {
        let conditioned: Vec<CMat> = weighted.iter().map(|g| a * g * a.adjoint()).collect();
        for (row, extra) in table.iter_mut().zip(raw_table(follow.effects(), &conditioned)) {
            row.extend(extra);
        }
    }
    OutcomeDistribution::new(table)
}
