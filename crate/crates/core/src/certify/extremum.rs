//! Extremal values of `<xi|M|xi>` over product unit vectors, by alternating
//! local eigenproblems from random product starts.

use crate::error::{Error, Result};
use crate::qcore::{eigh, is_hermitian, CMat, CVec, HilbertStructure, HERMITIAN_TOL};
use crate::random::{random_vector, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumMode {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once a full sweep improves the value by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self { restarts: 64, max_iters: 500, tol: 1e-12, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductVectorReport {
    pub mode: ExtremumMode,
    /// Best `<xi|M|xi>` found, recomputed from `argmax`.
    pub value: f64,
    /// Local unit vectors of the optimal product vector.
    pub argmax: Vec<CVec>,
    /// Some restart stopped at the sweep cap before converging.
    pub iteration_cap_hit: bool,
}

impl ProductVectorReport {
    pub fn max_overlap(&self) -> f64 {
        self.value
    }

    pub fn eta(&self) -> f64 {
        self.value
    }
}

pub fn product_vector_extremum(
    m: &CMat,
    structure: &HilbertStructure,
    mode: ExtremumMode,
    config: &SeesawConfig,
) -> Result<ProductVectorReport> {
    let n = structure.total_dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    if !is_hermitian(m, HERMITIAN_TOL) {
        return Err(Error::NotHermitian { deviation: crate::qcore::hermiticity_defect(m) });
    }
    if config.restarts == 0 || config.max_iters == 0 {
        return Err(Error::InvalidArgument("seesaw needs at least one restart and one sweep".into()));
    }
    let better = |a: f64, b: f64| match mode {
        ExtremumMode::Max => a > b,
        ExtremumMode::Min => a < b,
    };
    let mut r = rng(config.seed);
    let mut best: Option<(f64, Vec<CVec>)> = None;
    let mut cap_hit = false;
    for _ in 0..config.restarts {
        let mut locals: Vec<CVec> = structure.party_dims().iter().map(|&d| random_vector(&mut r, d)).collect();
        let mut value = f64::NAN;
        let mut converged = false;
        for _ in 0..config.max_iters {
            let previous = value;
            for party in 0..structure.parties() {
                let effective = structure.local_effective(m, party, &locals)?;
                let (values, vectors) = eigh(&effective)?;
                let pick = match mode {
                    ExtremumMode::Max => values.len() - 1,
                    ExtremumMode::Min => 0,
                };
                value = values[pick];
                locals[party] = vectors.column(pick).into_owned();
            }
            if (value - previous).abs() < config.tol {
                converged = true;
                break;
            }
        }
        cap_hit |= !converged;
        let xi = structure.product_vector(&locals)?;
        let value = xi.dotc(&(m * &xi)).re;
        if best.as_ref().is_none_or(|(b, _)| better(value, *b)) {
            best = Some((value, locals));
        }
    }
    let (value, argmax) = best.expect("at least one restart");
    Ok(ProductVectorReport { mode, value, argmax, iteration_cap_hit: cap_hit })
}
