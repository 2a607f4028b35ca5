//! Finite LOCC discrimination of complete orthonormal product bases.
//!
//! A local measurement that keeps every basis state intact must act as a
//! constant on each group of states whose local vectors on that party are
//! connected by non-zero overlaps. Splitting the basis along those groups,
//! party by party, either isolates every state or gets stuck on a sub-family
//! that no party can divide. Getting stuck also rules out asymptotic
//! discrimination for complete bases.

use std::fmt;

use crate::deviation::WeightedStateFamily;
use crate::error::{Error, Result};
use crate::protocol::{NodeId, ProtocolTree};
use crate::qcore::{c64, complete_orthonormal, projector, CMat, CVec, HilbertStructure};

/// Overlap above which two local vectors count as non-orthogonal.
pub const OVERLAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    structure: HilbertStructure,
    vectors: Vec<Vec<CVec>>,
}

impl ProductBasis {
    /// `vectors[mu][r]` is the local vector of state `mu` on party `r`.
    /// Local vectors are normalised; the family must be orthonormal and
    /// complete.
    pub fn new(structure: HilbertStructure, vectors: Vec<Vec<CVec>>) -> Result<Self> {
        let mut normalized = Vec::with_capacity(vectors.len());
        for (mu, locals) in vectors.into_iter().enumerate() {
            if locals.len() != structure.parties() {
                return Err(Error::InvalidBasis(format!(
                    "state {mu} has {} local vectors for {} parties",
                    locals.len(),
                    structure.parties()
                )));
            }
            let mut row = Vec::with_capacity(locals.len());
            for (r, v) in locals.into_iter().enumerate() {
                if v.len() != structure.dim(r) {
                    return Err(Error::DimensionMismatch { expected: structure.dim(r), found: v.len() });
                }
                let norm = v.norm();
                if norm < 1e-12 {
                    return Err(Error::InvalidBasis(format!("state {mu} has a zero vector on party {r}")));
                }
                row.push(v.unscale(norm));
            }
            normalized.push(row);
        }
        let basis = Self { structure, vectors: normalized };
        let n = basis.vectors.len();
        for mu in 0..n {
            for nu in mu + 1..n {
                let overlap = basis.overlap(mu, nu);
                if overlap > OVERLAP_TOL {
                    return Err(Error::InvalidBasis(format!("states {mu} and {nu} overlap by {overlap:e}")));
                }
            }
        }
        if n != basis.structure.total_dim() {
            return Err(Error::InvalidBasis(format!(
                "{n} states do not span the {}-dimensional space",
                basis.structure.total_dim()
            )));
        }
        Ok(basis)
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn vectors(&self) -> &[Vec<CVec>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn local(&self, mu: usize, party: usize) -> &CVec {
        &self.vectors[mu][party]
    }

    pub fn global(&self, mu: usize) -> CVec {
        self.structure.product_vector(&self.vectors[mu]).expect("dimensions checked on construction")
    }

    /// `|<psi_mu|psi_nu>|`, as a product of local overlaps.
    pub fn overlap(&self, mu: usize, nu: usize) -> f64 {
        self.vectors[mu].iter().zip(&self.vectors[nu]).map(|(a, b)| a.dotc(b).norm()).product()
    }

    /// The basis states with equal priors.
    pub fn family(&self) -> WeightedStateFamily {
        let globals: Vec<CVec> = (0..self.len()).map(|mu| self.global(mu)).collect();
        WeightedStateFamily::from_pure(self.structure.clone(), &globals, None).expect("orthonormal basis")
    }

    /// Applies `unitaries[r]` to every local vector of party `r`.
    pub fn rotated(&self, unitaries: &[CMat]) -> Result<Self> {
        if unitaries.len() != self.structure.parties() {
            return Err(Error::DimensionMismatch { expected: self.structure.parties(), found: unitaries.len() });
        }
        let vectors = self
            .vectors
            .iter()
            .map(|locals| locals.iter().zip(unitaries).map(|(v, u)| u * v).collect())
            .collect();
        Self::new(self.structure.clone(), vectors)
    }

    /// Reorders the states: state `i` of the result is state `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let vectors = order
            .iter()
            .map(|&mu| self.vectors.get(mu).cloned().ok_or_else(|| Error::InvalidArgument(format!("no state {mu}"))))
            .collect::<Result<_>>()?;
        Self::new(self.structure.clone(), vectors)
    }

    /// Reorders the parties: party `i` of the result is party `order[i]`.
    pub fn with_parties_permuted(&self, order: &[usize]) -> Result<Self> {
        let dims = order.iter().map(|&r| self.structure.dim(r)).collect();
        let vectors = self.vectors.iter().map(|locals| order.iter().map(|&r| locals[r].clone()).collect()).collect();
        Self::new(HilbertStructure::new(dims)?, vectors)
    }
}

/// Groups of `indices` connected by non-orthogonal local vectors on
/// `party`. Groups are sorted internally and ordered by their smallest
/// member.
pub fn orthogonality_components(basis: &ProductBasis, party: usize, indices: &[usize], tol: f64) -> Vec<Vec<usize>> {
    let n = indices.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let overlap = basis.local(indices[i], party).dotc(basis.local(indices[j], party)).norm();
            if overlap > tol {
                let (a, b) = (find(&mut root, i), find(&mut root, j));
                root[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| indices[i]);
    for i in order {
        let r = find(&mut root, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(indices[i]);
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    FiniteDiscriminable,
    NotDiscriminable,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::FiniteDiscriminable => "FINITE_DISCRIMINABLE",
            Decision::NotDiscriminable => "NOT_DISCRIMINABLE",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissectionResult {
    pub decision: Decision,
    protocol: Option<ProtocolTree>,
    /// Sub-family that no party can split, when not discriminable.
    pub witness: Option<Vec<usize>>,
    /// Basis index identified at each protocol leaf, depth-first.
    pub leaf_labels: Vec<usize>,
}

/// Runs the recursive component splitting on a complete basis.
pub fn dissect(basis: &ProductBasis, tol: f64) -> Result<DissectionResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("overlap tolerance must be positive".into()));
    }
    let mut tree = ProtocolTree::new(basis.structure().clone());
    let mut labels = vec![None; 1];
    let all: Vec<usize> = (0..basis.len()).collect();
    let root = tree.root();
    if let Some(witness) = split(basis, tol, &mut tree, &mut labels, root, &all)? {
        return Ok(DissectionResult {
            decision: Decision::NotDiscriminable,
            protocol: None,
            witness: Some(witness),
            leaf_labels: Vec::new(),
        });
    }
    let leaf_labels = tree
        .leaves()
        .into_iter()
        .map(|leaf| labels[leaf].expect("every leaf isolates one state"))
        .collect();
    Ok(DissectionResult { decision: Decision::FiniteDiscriminable, protocol: Some(tree), witness: None, leaf_labels })
}

fn split(
    basis: &ProductBasis,
    tol: f64,
    tree: &mut ProtocolTree,
    labels: &mut Vec<Option<usize>>,
    node: NodeId,
    indices: &[usize],
) -> Result<Option<Vec<usize>>> {
    if indices.len() == 1 {
        labels[node] = Some(indices[0]);
        return Ok(None);
    }
    for party in 0..basis.structure().parties() {
        let groups = orthogonality_components(basis, party, indices, tol);
        if groups.len() < 2 {
            continue;
        }
        let ops = component_projectors(basis, party, &groups);
        let children = tree.add_measurement(node, party, &ops)?;
        labels.resize(labels.len().max(children.iter().max().unwrap() + 1), None);
        for (child, group) in children.into_iter().zip(&groups) {
            if let Some(witness) = split(basis, tol, tree, labels, child, group)? {
                return Ok(Some(witness));
            }
        }
        return Ok(None);
    }
    Ok(Some(indices.to_vec()))
}

/// Orthogonal projectors onto the spans of each group's local vectors; the
/// part of the local space reached by no group goes to the first one.
fn component_projectors(basis: &ProductBasis, party: usize, groups: &[Vec<usize>]) -> Vec<CMat> {
    let d = basis.structure().dim(party);
    let mut accepted: Vec<CVec> = Vec::new();
    let mut spans: Vec<Vec<CVec>> = Vec::with_capacity(groups.len());
    for group in groups {
        let mut span = Vec::new();
        for &mu in group {
            let mut v = basis.local(mu, party).clone();
            for _ in 0..2 {
                for b in &accepted {
                    let overlap = b.dotc(&v);
                    v -= b * overlap;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                v /= c64(norm, 0.0);
                accepted.push(v.clone());
                span.push(v);
            }
        }
        spans.push(span);
    }
    spans[0].extend(complete_orthonormal(&accepted, d));
    spans.iter().map(|span| projector(span, d)).collect()
}

/// The discriminating protocol of a positive decision.
pub fn emit_protocol(result: &DissectionResult) -> Result<ProtocolTree> {
    result
        .protocol
        .clone()
        .ok_or_else(|| Error::InvalidArgument("basis is not finitely discriminable; no protocol to emit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviation::{d_finite, d_mf, FINITE_TOL};
    use crate::fixtures::{computational_basis, domino_basis, plus_minus_basis};
    use crate::protocol::{simulate, validate};
    use crate::random::{random_unitary, rng};

    fn check_sound(basis: &ProductBasis) -> DissectionResult {
        let res = dissect(basis, OVERLAP_TOL).unwrap();
        assert_eq!(res.decision, Decision::FiniteDiscriminable);
        let tree = emit_protocol(&res).unwrap();
        assert!(validate(&tree).valid);
        let p = simulate(&tree, &basis.family()).unwrap();
        assert!(d_mf(&p) <= 1e-10);
        assert_eq!(d_finite(&p, FINITE_TOL), 0.0);
        for (k, &mu) in res.leaf_labels.iter().enumerate() {
            assert!((p.get(mu, k) - 1.0 / basis.len() as f64).abs() < 1e-10);
        }
        res
    }

    #[test]
    fn components_on_small_cases() {
        let basis = computational_basis(&[2, 2]).unwrap();
        assert_eq!(orthogonality_components(&basis, 1, &[0, 1, 2, 3], OVERLAP_TOL), vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(orthogonality_components(&basis, 1, &[1, 3], OVERLAP_TOL), vec![vec![1, 3]]);
        assert_eq!(orthogonality_components(&basis, 0, &[1, 3], OVERLAP_TOL), vec![vec![1], vec![3]]);
        let pm = plus_minus_basis();
        assert_eq!(orthogonality_components(&pm, 0, &[0, 1, 2, 3], OVERLAP_TOL), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(orthogonality_components(&pm, 1, &[0, 1, 2, 3], OVERLAP_TOL), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn computational_bases_are_discriminable() {
        let res = check_sound(&computational_basis(&[2, 2]).unwrap());
        assert_eq!(emit_protocol(&res).unwrap().max_depth(), 2);
        check_sound(&computational_basis(&[3, 3]).unwrap());
        check_sound(&computational_basis(&[2, 2, 2]).unwrap());
        let single = check_sound(&computational_basis(&[1, 1]).unwrap());
        assert_eq!(emit_protocol(&single).unwrap().len(), 1);
    }

    #[test]
    fn plus_minus_basis_needs_two_rounds() {
        let res = check_sound(&plus_minus_basis());
        let tree = emit_protocol(&res).unwrap();
        assert_eq!(tree.max_depth(), 2);
        assert_eq!(tree.party(tree.children(0)[0]), Some(0));
    }

    #[test]
    fn domino_basis_is_stuck_at_the_root() {
        let basis = domino_basis();
        for r in 0..2 {
            assert_eq!(orthogonality_components(&basis, r, &(0..9).collect::<Vec<_>>(), OVERLAP_TOL).len(), 1);
        }
        let res = dissect(&basis, OVERLAP_TOL).unwrap();
        assert_eq!(res.decision, Decision::NotDiscriminable);
        assert_eq!(res.witness.as_deref(), Some(&(0..9).collect::<Vec<_>>()[..]));
        assert!(emit_protocol(&res).is_err());
    }

    #[test]
    fn decisions_survive_local_unitaries_and_permutations() {
        let cases = [
            (computational_basis(&[2, 2]).unwrap(), Decision::FiniteDiscriminable),
            (computational_basis(&[3, 3]).unwrap(), Decision::FiniteDiscriminable),
            (plus_minus_basis(), Decision::FiniteDiscriminable),
            (domino_basis(), Decision::NotDiscriminable),
        ];
        for seed in 0..5 {
            let mut r = rng(seed);
            for (basis, decision) in &cases {
                let us: Vec<CMat> = basis.structure().party_dims().iter().map(|&d| random_unitary(&mut r, d)).collect();
                let rotated = basis.rotated(&us).unwrap();
                let all: Vec<usize> = (0..basis.len()).collect();
                for party in 0..basis.structure().parties() {
                    assert_eq!(
                        orthogonality_components(basis, party, &all, OVERLAP_TOL),
                        orthogonality_components(&rotated, party, &all, 1e-8)
                    );
                }
                assert_eq!(dissect(&rotated, 1e-8).unwrap().decision, *decision);
                let mut order: Vec<usize> = (0..basis.len()).collect();
                order.rotate_left(seed as usize % basis.len());
                order.reverse();
                assert_eq!(dissect(&basis.permuted(&order).unwrap(), OVERLAP_TOL).unwrap().decision, *decision);
                let parties: Vec<usize> = (0..basis.structure().parties()).rev().collect();
                let swapped = basis.with_parties_permuted(&parties).unwrap();
                assert_eq!(dissect(&swapped, OVERLAP_TOL).unwrap().decision, *decision);
            }
        }
    }

    #[test]
    fn rejects_incomplete_or_overlapping_families() {
        let s = HilbertStructure::new(vec![2, 2]).unwrap();
        let e = |i: usize| crate::qcore::unit_vector(2, i);
        assert!(ProductBasis::new(s.clone(), vec![vec![e(0), e(0)], vec![e(1), e(1)]]).is_err());
        let plus = (e(0) + e(1)).unscale(2f64.sqrt());
        let dup = vec![vec![e(0), e(0)], vec![e(0), plus], vec![e(1), e(0)], vec![e(1), e(1)]];
        assert!(ProductBasis::new(s, dup).is_err());
    }
}
