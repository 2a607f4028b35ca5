//! Seeded random instances: Ginibre matrices, Haar unitaries, states,
//! POVMs and instruments. Used by the property suites, the examples and
//! the restart logic of the optimisers.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::protocol::ProtocolTree;
use crate::qcore::{c64, inv_sqrt_psd, CMat, CVec, HilbertStructure, C64, PSD_TOL};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(r: &mut Rng) -> C64 {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(r: &mut Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| gaussian(r))
}

pub fn random_vector(r: &mut Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| gaussian(r));
    let norm = v.norm();
    v / c64(norm, 0.0)
}

/// Haar-distributed unitary via QR with the phase correction on `R`.
pub fn random_unitary(r: &mut Rng, n: usize) -> CMat {
    let qr = random_matrix(r, n).qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        let d = rr[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random PSD matrix `G G^†` scaled to unit trace.
pub fn random_psd(r: &mut Rng, n: usize) -> CMat {
    let g = random_matrix(r, n);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.unscale(t)
}

pub fn random_density(r: &mut Rng, n: usize) -> CMat {
    random_psd(r, n)
}

/// Random POVM with `outcomes` full-rank effects.
pub fn random_povm(r: &mut Rng, n: usize, outcomes: usize) -> Vec<CMat> {
    let raw: Vec<CMat> = (0..outcomes).map(|_| random_psd(r, n)).collect();
    let total = raw.iter().fold(CMat::zeros(n, n), |acc, g| acc + g);
    let w = inv_sqrt_psd(&total, PSD_TOL).expect("sum of PSD matrices is Hermitian");
    raw.iter().map(|g| &w * g * &w).collect()
}

/// Random instrument: blocks of a Haar isometry `C^n -> C^(n*outcomes)`.
pub fn random_instrument(r: &mut Rng, n: usize, outcomes: usize) -> Vec<CMat> {
    let u = random_unitary(r, n * outcomes);
    (0..outcomes).map(|k| u.view((k * n, 0), (n, n)).into_owned()).collect()
}

/// Random stochastic matrix `pi[l][k]` whose columns sum to one.
pub fn random_stochastic(r: &mut Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut pi = vec![vec![0.0; cols]; rows];
    for k in 0..cols {
        let raw: Vec<f64> = (0..rows).map(|_| r.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        for l in 0..rows {
            pi[l][k] = raw[l] / s;
        }
    }
    pi
}

/// Random probability table with `rows x cols` entries summing to one.
/// Roughly a third of the entries are exact zeros.
pub fn random_table(r: &mut Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| if r.random::<f64>() < 0.3 { 0.0 } else { r.random::<f64>() })
                .collect()
        })
        .collect();
    let s: f64 = t.iter().flatten().sum();
    if s == 0.0 {
        t[0][0] = 1.0;
        return t;
    }
    for row in &mut t {
        for x in row {
            *x /= s;
        }
    }
    t
}

/// Random valid protocol: every node above `max_depth` measures a random
/// party with a Haar instrument of 2..=`max_outcomes` outcomes; below the
/// root, nodes stop early with probability 1/4.
pub fn random_protocol(r: &mut Rng, structure: &HilbertStructure, max_depth: usize, max_outcomes: usize) -> ProtocolTree {
    build_random(r, structure, max_depth, max_outcomes, random_instrument)
}

/// Like [`random_protocol`], but each instrument is, with probability 1/2, a
/// computational-basis projective measurement conjugated by a unitary close
/// to the identity. Such trees separate computational product states well,
/// so conditional deviations drop close to zero on some branches.
pub fn random_sharp_protocol(
    r: &mut Rng,
    structure: &HilbertStructure,
    max_depth: usize,
    max_outcomes: usize,
) -> ProtocolTree {
    build_random(r, structure, max_depth, max_outcomes, |r, d, m| {
        if r.random::<f64>() < 0.5 {
            near_identity_projective(r, d)
        } else {
            random_instrument(r, d, m)
        }
    })
}

fn near_identity_projective(r: &mut Rng, d: usize) -> Vec<CMat> {
    let g = random_matrix(r, d);
    let h = (&g + g.adjoint()).scale(0.05);
    // first-order unitary, re-orthonormalised through its polar factor
    let approx = CMat::identity(d, d) + h * c64(0.0, 1.0);
    let (u, _) = crate::qcore::polar(&approx, PSD_TOL).expect("square input");
    (0..d)
        .map(|i| {
            let col = u.column(i).into_owned();
            &col * col.adjoint()
        })
        .collect()
}

fn build_random(
    r: &mut Rng,
    structure: &HilbertStructure,
    max_depth: usize,
    max_outcomes: usize,
    mut instrument: impl FnMut(&mut Rng, usize, usize) -> Vec<CMat>,
) -> ProtocolTree {
    let mut tree = ProtocolTree::new(structure.clone());
    let mut frontier = vec![(tree.root(), 0usize)];
    while let Some((node, depth)) = frontier.pop() {
        if depth >= max_depth || (depth > 0 && r.random::<f64>() < 0.25) {
            continue;
        }
        let party = r.random_range(0..structure.parties());
        let outcomes = r.random_range(2..=max_outcomes.max(2));
        let ops = instrument(r, structure.dim(party), outcomes);
        let ids = tree.add_measurement(node, party, &ops).expect("local dimensions match");
        frontier.extend(ids.into_iter().map(|id| (id, depth + 1)));
    }
    tree
}
