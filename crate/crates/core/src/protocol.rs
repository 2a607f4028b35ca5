//! Finite LOCC protocols as rooted trees.
//!
//! Every non-root node carries a Kraus operator acting on a single party.
//! The children of a node form one local instrument, so they share a party
//! and satisfy `sum_c A_c^† A_c = 1`. The branch operator of a node is the
//! product of the operators on its root path in reverse order,
//! `A_B(s) = A_(s_m) ... A_(s_1)`. Leaves, in depth-first order, are the
//! protocol outcomes.

use crate::deviation::{OutcomeDistribution, WeightedStateFamily};
use crate::error::{Error, Result};
use crate::measure::{Povm, COMPLETENESS_TOL};
use crate::qcore::{op_norm, trace_product, CMat, HilbertStructure};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    parent: Option<NodeId>,
    party: Option<usize>,
    local: CMat,
    op: CMat,
    children: Vec<NodeId>,
}

/// A finite protocol tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTree {
    structure: HilbertStructure,
    nodes: Vec<Node>,
}

impl ProtocolTree {
    /// Root-only tree: the trivial measurement.
    pub fn new(structure: HilbertStructure) -> Self {
        let id = structure.identity();
        let root = Node { parent: None, party: None, local: id.clone(), op: id, children: Vec::new() };
        Self { structure, nodes: vec![root] }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn root(&self) -> NodeId {
        0
    }

    fn check_node(&self, id: NodeId) -> Result<()> {
        if id >= self.nodes.len() {
            return Err(Error::InvalidProtocol(format!("node {id} does not exist")));
        }
        Ok(())
    }

    /// Appends a child carrying the local operator `local` on `party`.
    pub fn add_child(&mut self, parent: NodeId, party: usize, local: CMat) -> Result<NodeId> {
        self.check_node(parent)?;
        let op = self.structure.embed_local(party, &local)?;
        let id = self.nodes.len();
        self.nodes.push(Node { parent: Some(parent), party: Some(party), local, op, children: Vec::new() });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    /// Appends one child per Kraus operator of a local instrument.
    pub fn add_measurement(&mut self, parent: NodeId, party: usize, locals: &[CMat]) -> Result<Vec<NodeId>> {
        locals.iter().map(|a| self.add_child(parent, party, a.clone())).collect()
    }

    /// Drops all children of `parent` (they become unreachable).
    pub fn clear_children(&mut self, parent: NodeId) {
        self.nodes[parent].children.clear();
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn party(&self, id: NodeId) -> Option<usize> {
        self.nodes[id].party
    }

    /// Local operator of a node; the identity on the full space for the root.
    pub fn local_op(&self, id: NodeId) -> &CMat {
        &self.nodes[id].local
    }

    /// Operator of a node embedded in the full space.
    pub fn op(&self, id: NodeId) -> &CMat {
        &self.nodes[id].op
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Nodes on the path from the root to `id`, both included.
    pub fn path(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.path(id).len() - 1
    }

    /// Reachable nodes in depth-first pre-order.
    pub fn nodes_depth_first(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Reachable nodes in breadth-first order, children left to right.
    pub fn nodes_breadth_first(&self) -> Vec<NodeId> {
        let mut out = vec![self.root()];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.nodes[out[i]].children.iter().copied());
            i += 1;
        }
        out
    }

    /// Leaves in depth-first order; this is the outcome order of [`simulate`].
    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes_depth_first().into_iter().filter(|&id| self.is_leaf(id)).collect()
    }

    /// Number of reachable nodes.
    pub fn len(&self) -> usize {
        self.nodes_depth_first().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_depth(&self) -> usize {
        self.leaves().into_iter().map(|l| self.depth(l)).max().unwrap_or(0)
    }

    /// Copies the subtree below `src_node` of `src` (children only) under
    /// `dest_parent`. Returns the pairs `(source id, new id)`.
    pub fn graft_children(
        &mut self,
        dest_parent: NodeId,
        src: &ProtocolTree,
        src_node: NodeId,
    ) -> Result<Vec<(NodeId, NodeId)>> {
        let mut mapping = Vec::new();
        let mut stack: Vec<(NodeId, NodeId)> = src.children(src_node).iter().rev().map(|&c| (c, dest_parent)).collect();
        while let Some((s, parent)) = stack.pop() {
            let party = src.party(s).expect("non-root node has a party");
            let id = self.add_child(parent, party, src.local_op(s).clone())?;
            mapping.push((s, id));
            stack.extend(src.children(s).iter().rev().map(|&c| (c, id)));
        }
        Ok(mapping)
    }

    /// Copy holding only reachable nodes, renumbered depth-first. The
    /// returned map sends old ids to new ids.
    pub fn compacted(&self) -> (ProtocolTree, Vec<Option<NodeId>>) {
        let order = self.nodes_depth_first();
        let mut map = vec![None; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            map[old] = Some(new);
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old];
                Node {
                    parent: n.parent.and_then(|p| map[p]),
                    party: n.party,
                    local: n.local.clone(),
                    op: n.op.clone(),
                    children: n.children.iter().filter_map(|&c| map[c]).collect(),
                }
            })
            .collect();
        (ProtocolTree { structure: self.structure.clone(), nodes }, map)
    }

    /// `A_B(s)`: the reversed-order product of operators along the root path.
    pub fn branch_operator(&self, id: NodeId) -> CMat {
        self.path(id).into_iter().fold(self.structure.identity(), |acc, n| &self.nodes[n].op * acc)
    }

    /// Per-party factors of the branch operator; their tensor product
    /// equals [`branch_operator`](Self::branch_operator).
    pub fn branch_factors(&self, id: NodeId) -> Vec<CMat> {
        let mut factors: Vec<CMat> = self.structure.party_dims().iter().map(|&d| CMat::identity(d, d)).collect();
        for n in self.path(id) {
            if let Some(p) = self.nodes[n].party {
                factors[p] = &self.nodes[n].local * &factors[p];
            }
        }
        factors
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Completeness { node: NodeId, residual: f64 },
    MixedParties { node: NodeId },
    NonLocal { node: NodeId, defect: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub valid: bool,
    pub worst_completeness: f64,
    pub violations: Vec<Violation>,
}

/// Checks completeness and locality of every node's children.
pub fn validate(tree: &ProtocolTree) -> ValidationReport {
    let mut worst: f64 = 0.0;
    let mut violations = Vec::new();
    for id in tree.nodes_depth_first() {
        let children = tree.children(id);
        if children.is_empty() {
            continue;
        }
        let party = tree.party(children[0]).expect("children have parties");
        if children.iter().any(|&c| tree.party(c) != Some(party)) {
            violations.push(Violation::MixedParties { node: id });
            continue;
        }
        for &c in children {
            let defect = tree.structure.locality_defect(tree.op(c), party).unwrap_or(f64::INFINITY);
            if defect > COMPLETENESS_TOL {
                violations.push(Violation::NonLocal { node: c, defect });
            }
        }
        let d = tree.structure.dim(party);
        let total = children
            .iter()
            .fold(CMat::zeros(d, d), |acc, &c| acc + tree.local_op(c).adjoint() * tree.local_op(c));
        let residual = op_norm(&(total - CMat::identity(d, d)));
        worst = worst.max(residual);
        if residual > COMPLETENESS_TOL {
            violations.push(Violation::Completeness { node: id, residual });
        }
    }
    ValidationReport { valid: violations.is_empty(), worst_completeness: worst, violations }
}

fn check_family(tree: &ProtocolTree, family: &WeightedStateFamily) -> Result<()> {
    let (a, b) = (tree.structure.total_dim(), family.structure().total_dim());
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// Unnormalised table `tr(A_leaf gamma_mu A_leaf^†)` over leaves.
pub fn leaf_weights(tree: &ProtocolTree, family: &WeightedStateFamily) -> Result<Vec<Vec<f64>>> {
    check_family(tree, family)?;
    let effects: Vec<CMat> = tree
        .leaves()
        .into_iter()
        .map(|l| {
            let a = tree.branch_operator(l);
            a.adjoint() * a
        })
        .collect();
    Ok(family
        .weighted()
        .iter()
        .map(|g| effects.iter().map(|e| trace_product(e, g).re).collect())
        .collect())
}

/// Outcome table of the protocol, one column per leaf.
pub fn simulate(tree: &ProtocolTree, family: &WeightedStateFamily) -> Result<OutcomeDistribution> {
    OutcomeDistribution::new(leaf_weights(tree, family)?)
}

/// The POVM `A_leaf^† A_leaf` realised by a valid protocol.
pub fn as_povm(tree: &ProtocolTree) -> Result<Povm> {
    let report = validate(tree);
    if !report.valid {
        return Err(Error::InvalidProtocol(format!("{:?}", report.violations)));
    }
    let effects = tree
        .leaves()
        .into_iter()
        .map(|l| {
            let a = tree.branch_operator(l);
            let e = a.adjoint() * a;
            (&e + e.adjoint()).scale(0.5)
        })
        .collect();
    Povm::new(tree.structure.clone(), effects)
}
