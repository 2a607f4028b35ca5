//! Numerical certificate search.
//!
//! `E = ⊗_r L_r^† L_r` is fitted by damped Gauss-Newton steps on one party's
//! `L_r` at a time, minimising
//!
//! ```text
//! w1 (sum_mu t_mu - 1)^2
//!   + w2 [(t_k - chi)^2 + sum_{mu != k} max(0, t_mu - chi)^2]
//!   + w3 sum_{mu != nu} tr(E rho_mu E rho_nu)
//! ```
//!
//! with `t_mu = tr(E rho_mu)`. Its zeros are exactly the certificates whose
//! largest trace is attained at `k`; restart `i` uses `k = i mod N`, which
//! keeps every term smooth where traces tie. The orthogonality term is the
//! squared norm of `sqrt(rho_mu) E sqrt(rho_nu)`, which is linear in `E`,
//! so its entries serve directly as residuals. Restart 0 starts from the
//! identity, which is already a certificate at `chi = 1/N`.

use nalgebra::{DMatrix, DVector};

use super::{check_chi, precondition_check, verify_certificate, Certificate, SeesawConfig};
use crate::deviation::WeightedStateFamily;
use crate::error::{Error, Result};
use crate::qcore::{c64, sqrt_psd, tensor, trace_product, CMat, ProductOperator, PSD_TOL};
use crate::random::{gaussian, rng, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Sweeps over all parties per restart.
    pub max_iters: usize,
    /// Penalty weights for normalisation, maximum trace and orthogonality.
    pub weights: [f64; 3],
    /// Tolerance handed to [`verify_certificate`].
    pub tol: f64,
    /// A restart stops when a sweep improves the objective by less than
    /// this fraction.
    pub convergence: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { restarts: 64, seed: 0, max_iters: 500, weights: [1.0, 1.0, 1.0], tol: 1e-8, convergence: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found { certificate: Certificate, restart: usize },
    /// No restart produced a verified certificate; `best` is the candidate
    /// with the smallest objective. This is not evidence of nonexistence.
    Inconclusive { best: Certificate, restarts: usize },
}

impl SearchOutcome {
    pub fn certificate(&self) -> &Certificate {
        match self {
            SearchOutcome::Found { certificate, .. } => certificate,
            SearchOutcome::Inconclusive { best, .. } => best,
        }
    }

    pub fn found(&self) -> bool {
        matches!(self, SearchOutcome::Found { .. })
    }
}

/// Objective below which a restart is treated as converged.
const OBJECTIVE_FLOOR: f64 = 1e-26;

struct Problem<'a> {
    family: &'a WeightedStateFamily,
    roots: Vec<CMat>,
    chi: f64,
    target: usize,
    sqrt_w: [f64; 3],
}

impl Problem<'_> {
    fn residuals(&self, factors: &[CMat]) -> Vec<f64> {
        let e = tensor(factors).expect("square factors");
        let traces: Vec<f64> = self.family.states().iter().map(|rho| trace_product(&e, rho).re).collect();
        let total: f64 = traces.iter().sum();
        let mut out = vec![self.sqrt_w[0] * (total - 1.0)];
        out.extend(traces.iter().enumerate().map(|(mu, &t)| {
            let excess = t - self.chi;
            self.sqrt_w[1] * if mu == self.target { excess } else { excess.max(0.0) }
        }));
        // each unordered pair stands for both orders
        let w = self.sqrt_w[2] * 2f64.sqrt();
        for mu in 0..self.roots.len() {
            let left = &self.roots[mu] * &e;
            for nu in mu + 1..self.roots.len() {
                let m = &left * &self.roots[nu];
                out.extend(m.iter().flat_map(|z| [w * z.re, w * z.im]));
            }
        }
        out
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn factor_from(params: &[f64], d: usize) -> CMat {
    let l = CMat::from_fn(d, d, |i, j| c64(params[2 * (i * d + j)], params[2 * (i * d + j) + 1]));
    l.adjoint() * l
}

struct State {
    params: Vec<Vec<f64>>,
    dims: Vec<usize>,
}

impl State {
    fn factors(&self) -> Vec<CMat> {
        self.params.iter().zip(&self.dims).map(|(p, &d)| factor_from(p, d)).collect()
    }

    /// Equalises the Frobenius norms of the factors without changing `E`.
    fn balance(&mut self) {
        let norms: Vec<f64> = self.factors().iter().map(|f| f.norm()).collect();
        if norms.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
            return;
        }
        let mean = norms.iter().map(|n| n.ln()).sum::<f64>() / norms.len() as f64;
        for (p, n) in self.params.iter_mut().zip(norms) {
            let s = ((mean.exp() / n).sqrt()).sqrt();
            p.iter_mut().for_each(|x| *x *= s);
        }
    }
}

/// One damped Gauss-Newton step on the parameters of `parties` jointly;
/// returns the new cost.
fn damped_step(problem: &Problem, state: &mut State, parties: &[usize], lambda: &mut f64) -> f64 {
    let base_factors = state.factors();
    let r0 = problem.residuals(&base_factors);
    let c0 = cost(&r0);
    let offsets: Vec<(usize, usize)> = parties.iter().flat_map(|&r| (0..state.params[r].len()).map(move |k| (r, k))).collect();
    let p = offsets.len();
    let mut jac = DMatrix::<f64>::zeros(r0.len(), p);
    let mut factors = base_factors.clone();
    for (col, &(party, k)) in offsets.iter().enumerate() {
        let d = state.dims[party];
        let x = state.params[party][k];
        let h = 1e-7 * x.abs().max(1e-3);
        let mut probe = state.params[party].clone();
        probe[k] = x + h;
        factors[party] = factor_from(&probe, d);
        let plus = problem.residuals(&factors);
        probe[k] = x - h;
        factors[party] = factor_from(&probe, d);
        let minus = problem.residuals(&factors);
        factors[party] = base_factors[party].clone();
        for i in 0..r0.len() {
            jac[(i, col)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    let r = DVector::from_vec(r0);
    let jtj = jac.transpose() * &jac;
    let g = jac.transpose() * r;
    for _ in 0..12 {
        let mut a = jtj.clone();
        for k in 0..p {
            a[(k, k)] += *lambda * jtj[(k, k)].max(1e-12);
        }
        let Some(chol) = a.cholesky() else {
            *lambda *= 10.0;
            continue;
        };
        let step = chol.solve(&(-&g));
        let mut trial = state.params.clone();
        for (&(party, k), s) in offsets.iter().zip(step.iter()) {
            trial[party][k] += s;
        }
        let trial_factors: Vec<CMat> = trial.iter().zip(&state.dims).map(|(q, &d)| factor_from(q, d)).collect();
        let c = cost(&problem.residuals(&trial_factors));
        if c < c0 {
            state.params = trial;
            *lambda = (*lambda * 0.3).max(1e-15);
            return c;
        }
        *lambda *= 10.0;
    }
    c0
}

fn start(r: &mut Rng, problem: &Problem, dims: &[usize], identity: bool) -> State {
    let params: Vec<Vec<f64>> = dims
        .iter()
        .map(|&d| {
            (0..d * d)
                .flat_map(|k| {
                    if identity {
                        [if k / d == k % d { 1.0 } else { 0.0 }, 0.0]
                    } else {
                        let z = gaussian(r);
                        [z.re, z.im]
                    }
                })
                .collect()
        })
        .collect();
    let mut state = State { params, dims: dims.to_vec() };
    let e = tensor(&state.factors()).expect("square factors");
    let total: f64 = problem.family.states().iter().map(|rho| trace_product(&e, rho).re).sum();
    if total > 0.0 {
        let s = total.powf(-0.5 / dims.len() as f64);
        state.params.iter_mut().flatten().for_each(|x| *x *= s);
    }
    state
}

/// Coordinate sweeps over the parties, then a joint polish of all
/// parameters from wherever the sweeps stalled.
fn run_restart(problem: &Problem, state: &mut State, config: &SearchConfig) -> f64 {
    let parties = state.dims.len();
    let mut lambdas = vec![1e-3; parties];
    let mut current = cost(&problem.residuals(&state.factors()));
    for _ in 0..config.max_iters {
        let before = current;
        for party in 0..parties {
            current = damped_step(problem, state, &[party], &mut lambdas[party]);
        }
        state.balance();
        if current < OBJECTIVE_FLOOR || before - current <= config.convergence * before {
            break;
        }
    }
    let all: Vec<usize> = (0..parties).collect();
    let mut lambda = 1e-3;
    for _ in 0..config.max_iters {
        if current < OBJECTIVE_FLOOR {
            break;
        }
        let before = current;
        current = damped_step(problem, state, &all, &mut lambda);
        state.balance();
        if before - current <= config.convergence * before && lambda > 1e6 {
            break;
        }
    }
    current
}

/// Multi-restart search; restarts run in order and the first verified
/// certificate is returned, so results depend only on `(seed, config)`.
pub fn search_certificate(family: &WeightedStateFamily, chi: f64, config: &SearchConfig) -> Result<SearchOutcome> {
    check_chi(chi, family.len())?;
    if config.restarts == 0 || config.max_iters == 0 || config.weights.iter().any(|&w| !(w > 0.0)) || !(config.tol > 0.0) {
        return Err(Error::InvalidArgument("search counts, weights and tolerance must be positive".into()));
    }
    let pre = precondition_check(family, &SeesawConfig { seed: config.seed, ..SeesawConfig::default() })?;
    if !pre.passed {
        return Err(Error::Precondition(format!(
            "common kernel contains a product vector (overlap {})",
            pre.max_overlap
        )));
    }
    let mut problem = Problem {
        family,
        roots: family.states().iter().map(|rho| sqrt_psd(rho, PSD_TOL)).collect::<Result<_>>()?,
        chi,
        target: 0,
        sqrt_w: config.weights.map(f64::sqrt),
    };
    let structure = family.structure();
    let mut best: Option<(f64, Certificate)> = None;
    for restart in 0..config.restarts {
        let mut r = rng(config.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        problem.target = restart % family.len();
        let mut state = start(&mut r, &problem, structure.party_dims(), restart == 0);
        let objective = run_restart(&problem, &mut state, config);
        let mut factors = state.factors();
        let e = tensor(&factors)?;
        let total: f64 = family.states().iter().map(|rho| trace_product(&e, rho).re).sum();
        if total > 0.0 {
            factors[0] = factors[0].unscale(total);
        }
        let candidate = ProductOperator::new(structure.clone(), factors)?;
        let certificate = verify_certificate(&candidate, family, chi, config.tol)?;
        if certificate.passed {
            return Ok(SearchOutcome::Found { certificate, restart });
        }
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, certificate));
        }
    }
    let (_, best) = best.expect("at least one restart");
    Ok(SearchOutcome::Inconclusive { best, restarts: config.restarts })
}
