//! Protocol splitting.
//!
//! Given a target deviation `delta` strictly between zero and the deviation
//! of the trivial measurement, the protocol is rewritten so that no branch
//! jumps from above `delta` to below it in one step. Whenever children of
//! a node `s` fall below `delta`, the local instrument at `s` is replaced by
//! its pseudo-weak implementation, with weights chosen so that each such
//! child lands exactly on `delta`, followed by a recovery level and the
//! original continuation. Forgetting the pseudo-weak outcomes gives back the
//! original protocol's statistics.
//!
//! Stage one is the modified tree cut at every node whose deviation equals
//! `delta`.

use crate::deviation::{conditional_deviation, trivial_deviation, DeviationKind, WeightedStateFamily};
use crate::error::{Error, Result};
use crate::measure::{pseudo_weak_kraus, Povm, PseudoWeakParams};
use crate::protocol::{leaf_weights, validate, NodeId, ProtocolTree};
use crate::qcore::{sqrt_psd, CMat, PSD_TOL};

/// Upper limit of the `b` bracket before giving up.
pub const B_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub delta: f64,
    pub kind: DeviationKind,
    /// Deviations within this distance of `delta` count as equal to it.
    pub level_tol: f64,
    /// Initial upper end of the `b` bracket.
    pub b_max: f64,
    pub max_bisect: usize,
}

impl SplitConfig {
    pub fn new(delta: f64, kind: DeviationKind) -> Self {
        Self { delta, kind, level_tol: 1e-6, b_max: 1.0, max_bisect: 200 }
    }

    fn check(&self, family: &WeightedStateFamily) -> Result<()> {
        if self.kind == DeviationKind::Finite {
            return Err(Error::InvalidArgument(
                "d_finite is not continuous; splitting needs mf or ce".into(),
            ));
        }
        if !(self.level_tol > 0.0 && self.b_max > 0.0 && self.max_bisect > 0) {
            return Err(Error::InvalidArgument("split tolerances must be positive".into()));
        }
        let top = trivial_deviation(self.kind, family)?;
        if !(self.delta > 0.0 && self.delta < top) {
            return Err(Error::InvalidArgument(format!(
                "delta = {} must lie strictly between 0 and the trivial deviation {top}",
                self.delta
            )));
        }
        Ok(())
    }

    fn at_delta(&self, d: f64) -> bool {
        (d - self.delta).abs() <= self.level_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub modified: ProtocolTree,
    pub stage_one: ProtocolTree,
    /// Stage-one leaves whose deviation equals `delta`.
    pub s_delta: Vec<NodeId>,
    /// For each leaf of `modified` (depth-first index), the index of the
    /// original leaf it reports once pseudo-weak outcomes are forgotten.
    pub forget_map: Vec<usize>,
    /// Pseudo-weak nodes of `modified` and their weights `b`.
    pub pseudo_weak: Vec<(NodeId, f64)>,
    /// Node of the original tree each stage-one node descends from;
    /// `None` for inserted pseudo-weak nodes.
    pub stage_one_origin: Vec<Option<NodeId>>,
    pub iterations: usize,
}

impl SplitResult {
    /// The forgetting post-processing as a stochastic matrix `pi[l][k]`.
    pub fn forget_matrix(&self, original_leaves: usize) -> Vec<Vec<f64>> {
        let mut pi = vec![vec![0.0; self.forget_map.len()]; original_leaves];
        for (k, &l) in self.forget_map.iter().enumerate() {
            pi[l][k] = 1.0;
        }
        pi
    }
}

/// `d(I | A_B(node))`.
pub fn node_deviation(tree: &ProtocolTree, node: NodeId, kind: DeviationKind, family: &WeightedStateFamily) -> Result<f64> {
    let trivial = Povm::trivial(tree.structure().clone());
    conditional_deviation(kind, &trivial, family, &tree.branch_operator(node))
}

/// Children of `node` whose deviation dropped below `delta - level_tol`.
pub fn d_delta_set(
    tree: &ProtocolTree,
    node: NodeId,
    config: &SplitConfig,
    family: &WeightedStateFamily,
) -> Result<Vec<NodeId>> {
    let mut out = Vec::new();
    for &c in tree.children(node) {
        if node_deviation(tree, c, config.kind, family)? < config.delta - config.level_tol {
            out.push(c);
        }
    }
    Ok(out)
}

/// Deviation after replacing child `c` of `s` by `sqrt(b 1 + E_c)`. The
/// overall `beta` factor is dropped: conditional deviations do not see scale.
fn pseudo_weak_deviation(
    tree: &ProtocolTree,
    s: NodeId,
    c: NodeId,
    b: f64,
    kind: DeviationKind,
    family: &WeightedStateFamily,
) -> Result<f64> {
    let party = tree.party(c).ok_or_else(|| Error::InvalidArgument("root has no operator".into()))?;
    let local = tree.local_op(c);
    let d = local.nrows();
    let effect = local.adjoint() * local;
    let pw = sqrt_psd(&(CMat::identity(d, d).scale(b) + (&effect + effect.adjoint()).scale(0.5)), PSD_TOL)?;
    let a = tree.structure().embed_local(party, &pw)? * tree.branch_operator(s);
    let trivial = Povm::trivial(tree.structure().clone());
    conditional_deviation(kind, &trivial, family, &a)
}

/// Finds `b >= 0` with `d(I | sqrt(E^pw_c) A_B(s)) = delta` by doubling an
/// upper bracket until the deviation exceeds `delta`, then bisecting.
pub fn find_b(
    tree: &ProtocolTree,
    s: NodeId,
    c: NodeId,
    config: &SplitConfig,
    family: &WeightedStateFamily,
) -> Result<f64> {
    if tree.parent(c) != Some(s) {
        return Err(Error::InvalidArgument(format!("node {c} is not a child of {s}")));
    }
    let parent_dev = node_deviation(tree, s, config.kind, family)?;
    if parent_dev <= config.delta {
        return Err(Error::InvalidArgument(format!(
            "parent deviation {parent_dev} does not exceed delta {}",
            config.delta
        )));
    }
    let f = |b: f64| pseudo_weak_deviation(tree, s, c, b, config.kind, family);
    let start = f(0.0)?;
    if start >= config.delta - config.level_tol {
        return Ok(0.0);
    }

    let mut lo = 0.0;
    let mut hi = config.b_max;
    let mut f_hi = f(hi)?;
    while f_hi < config.delta {
        lo = hi;
        hi *= 2.0;
        if hi > B_CAP {
            return Err(Error::BracketFailure { b: lo, value: f_hi, target: config.delta });
        }
        f_hi = f(hi)?;
    }
    if config.at_delta(f_hi) && (f_hi - config.delta).abs() <= 1e-2 * config.level_tol {
        return Ok(hi);
    }

    let target_tol = 1e-2 * config.level_tol;
    let mut best = (f64::INFINITY, hi);
    for _ in 0..config.max_bisect {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        let err = (fm - config.delta).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if err <= target_tol {
            return Ok(mid);
        }
        if fm < config.delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 <= config.level_tol {
        return Ok(best.1);
    }
    Err(Error::BisectionStalled { iterations: config.max_bisect, residual: best.0 })
}

/// Working copy with bookkeeping for every arena slot.
struct Work {
    tree: ProtocolTree,
    origin: Vec<Option<NodeId>>,
    weight: Vec<Option<f64>>,
}

impl Work {
    fn add(&mut self, parent: NodeId, party: usize, local: CMat, origin: Option<NodeId>, weight: Option<f64>) -> Result<NodeId> {
        let id = self.tree.add_child(parent, party, local)?;
        self.origin.resize(id + 1, None);
        self.weight.resize(id + 1, None);
        self.origin[id] = origin;
        self.weight[id] = weight;
        Ok(id)
    }

    fn graft(&mut self, dest: NodeId, snapshot: &Work, src: NodeId) -> Result<()> {
        for (s, new) in self.tree.graft_children(dest, &snapshot.tree, src)? {
            self.origin.resize(new + 1, None);
            self.weight.resize(new + 1, None);
            self.origin[new] = snapshot.origin[s];
            self.weight[new] = snapshot.weight[s];
        }
        Ok(())
    }

    /// First node in breadth-first order whose whole root path lies above
    /// `delta` and which has a child below it.
    fn next_candidate(&self, config: &SplitConfig, family: &WeightedStateFamily) -> Result<Option<(NodeId, Vec<NodeId>)>> {
        let order = self.tree.nodes_breadth_first();
        let mut open = vec![false; self.origin.len().max(order.len())];
        for s in order {
            let parent_open = self.tree.parent(s).is_none_or(|p| open[p]);
            if !parent_open {
                continue;
            }
            let d = node_deviation(&self.tree, s, config.kind, family)?;
            if d <= config.delta + config.level_tol {
                continue;
            }
            open[s] = true;
            let below = d_delta_set(&self.tree, s, config, family)?;
            if !below.is_empty() {
                return Ok(Some((s, below)));
            }
        }
        Ok(None)
    }

    fn split_node(&mut self, s: NodeId, below: &[NodeId], config: &SplitConfig, family: &WeightedStateFamily) -> Result<()> {
        let children = self.tree.children(s).to_vec();
        let party = self.tree.party(children[0]).expect("children have a party");
        let b = children
            .iter()
            .map(|c| if below.contains(c) { find_b(&self.tree, s, *c, config, family) } else { Ok(0.0) })
            .collect::<Result<Vec<_>>>()?;
        let locals: Vec<CMat> = children.iter().map(|&c| self.tree.local_op(c).clone()).collect();
        let params = PseudoWeakParams::new(b.clone())?;
        let local_structure = self.tree.structure().local(party);
        let (pw_ops, rc_ops) = pseudo_weak_kraus(&local_structure, &locals, &params)?;

        let snapshot = Work { tree: self.tree.clone(), origin: self.origin.clone(), weight: self.weight.clone() };
        self.tree.clear_children(s);
        for (i, &c) in children.iter().enumerate() {
            if b[i] == 0.0 {
                // trivial recovery folded into the pseudo-weak operator
                let op = &rc_ops[i][i] * &pw_ops[i];
                let id = self.add(s, party, op, snapshot.origin[c], snapshot.weight[c])?;
                self.graft(id, &snapshot, c)?;
            } else {
                let pw = self.add(s, party, pw_ops[i].clone(), None, Some(b[i]))?;
                for (l, &sibling) in children.iter().enumerate() {
                    let rec = self.add(pw, party, rc_ops[i][l].clone(), snapshot.origin[sibling], snapshot.weight[sibling])?;
                    self.graft(rec, &snapshot, sibling)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs the splitting procedure and extracts stage one.
pub fn split_protocol(tree: &ProtocolTree, config: &SplitConfig, family: &WeightedStateFamily) -> Result<SplitResult> {
    let report = validate(tree);
    if !report.valid {
        return Err(Error::InvalidProtocol(format!("{:?}", report.violations)));
    }
    config.check(family)?;

    let (slots, slot_map) = tree.compacted();
    let original_len = slots.len();
    let mut input_id = vec![0; original_len];
    for (old, new) in slot_map.iter().enumerate() {
        if let Some(new) = *new {
            input_id[new] = old;
        }
    }
    let mut work = Work {
        tree: slots.clone(),
        origin: input_id.iter().copied().map(Some).collect(),
        weight: vec![None; original_len],
    };
    let mut iterations = 0;
    while let Some((s, below)) = work.next_candidate(config, family)? {
        work.split_node(s, &below, config, family)?;
        iterations += 1;
        if iterations > original_len {
            return Err(Error::InvalidProtocol("splitting did not terminate".into()));
        }
    }

    let (modified, map) = work.tree.compacted();
    let mut origin = vec![None; modified.len()];
    let mut pseudo_weak = Vec::new();
    for (old, new) in map.iter().enumerate() {
        if let Some(new) = *new {
            origin[new] = work.origin[old];
            if work.origin[old].is_none() {
                pseudo_weak.push((new, work.weight[old].unwrap_or(0.0)));
            }
        }
    }
    pseudo_weak.sort_by_key(|p| p.0);

    let original_leaves = tree.leaves();
    let forget_map = modified
        .leaves()
        .into_iter()
        .map(|leaf| {
            origin[leaf]
                .and_then(|o| original_leaves.iter().position(|&l| l == o))
                .ok_or_else(|| Error::InvalidProtocol(format!("modified leaf {leaf} has no original leaf")))
        })
        .collect::<Result<Vec<_>>>()?;

    let (stage_one, stage_one_origin, s_delta) = extract_stage_one(&modified, &origin, config, family)?;
    Ok(SplitResult { modified, stage_one, s_delta, forget_map, pseudo_weak, stage_one_origin, iterations })
}

type StageOne = (ProtocolTree, Vec<Option<NodeId>>, Vec<NodeId>);

fn extract_stage_one(
    modified: &ProtocolTree,
    origin: &[Option<NodeId>],
    config: &SplitConfig,
    family: &WeightedStateFamily,
) -> Result<StageOne> {
    let mut stage = ProtocolTree::new(modified.structure().clone());
    let mut stage_origin = vec![origin[modified.root()]];
    let mut s_delta = Vec::new();
    let mut stack = vec![(modified.root(), stage.root())];
    while let Some((m, st)) = stack.pop() {
        let d = node_deviation(modified, m, config.kind, family)?;
        if m != modified.root() && config.at_delta(d) {
            s_delta.push(st);
            continue;
        }
        for &c in modified.children(m).iter().rev() {
            let party = modified.party(c).expect("non-root node has a party");
            let id = stage.add_child(st, party, modified.local_op(c).clone())?;
            stage_origin.resize(id + 1, None);
            stage_origin[id] = origin[c];
            stack.push((c, id));
        }
    }
    // children were pushed in reverse so that ids follow the stack; renumber
    let (stage, map) = stage.compacted();
    let mut renumbered = vec![None; stage.len()];
    for (old, new) in map.iter().enumerate() {
        if let Some(new) = *new {
            renumbered[new] = stage_origin[old];
        }
    }
    let mut s_delta: Vec<NodeId> = s_delta.into_iter().filter_map(|id| map[id]).collect();
    s_delta.sort_unstable();
    Ok((stage, renumbered, s_delta))
}

/// Largest entrywise gap between the original table and the modified
/// table with pseudo-weak outcomes forgotten.
pub fn equivalence_check(original: &ProtocolTree, result: &SplitResult, family: &WeightedStateFamily) -> Result<f64> {
    let before = leaf_weights(original, family)?;
    let after = leaf_weights(&result.modified, family)?;
    let leaves = original.leaves().len();
    let mut residual: f64 = 0.0;
    for (row_before, row_after) in before.iter().zip(&after) {
        let mut merged = vec![0.0; leaves];
        for (k, &l) in result.forget_map.iter().enumerate() {
            merged[l] += row_after[k];
        }
        for (a, b) in merged.iter().zip(row_before) {
            residual = residual.max((a - b).abs());
        }
    }
    Ok(residual)
}
