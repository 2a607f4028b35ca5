//! JSON file formats. Complex numbers are `[re, im]` pairs and matrices are
//! row-major nested arrays.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::basis::ProductBasis;
use crate::deviation::{equal_priors, WeightedStateFamily};
use crate::error::{Error, Result};
use crate::measure::Povm;
use crate::protocol::{as_povm, validate, NodeId, ProtocolTree};
use crate::qcore::{c64, eigh, spectral_map, trace, CMat, CVec, HilbertStructure, ProductOperator};

/// Tolerance applied to normalisation of loaded states and priors.
pub const LOAD_TOL: f64 = 1e-6;

/// Negative eigenvalues smaller than this are rounding noise and left alone.
const CLIP_SILENT: f64 = 1e-12;

pub type JsonComplex = [f64; 2];
pub type JsonVector = Vec<JsonComplex>;
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

pub fn vector_to_json(v: &CVec) -> JsonVector {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &JsonVector) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|[re, im]| c64(*re, *im)))
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(m: &JsonMatrix) -> Result<CMat> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if let Some(bad) = m.iter().find(|row| row.len() != cols) {
        return Err(Error::InvalidStructure(format!("ragged matrix: row of length {} in a {cols}-column matrix", bad.len())));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| c64(m[i][j][0], m[i][j][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<JsonVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<JsonMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesFile {
    pub dims: Vec<usize>,
    pub states: Vec<StateEntry>,
}

impl StatesFile {
    /// Pure states with explicit priors.
    pub fn from_vectors(dims: &[usize], vectors: &[CVec], priors: Option<&[f64]>) -> Self {
        let states = vectors
            .iter()
            .enumerate()
            .map(|(mu, v)| StateEntry { prior: priors.map(|p| p[mu]), vector: Some(vector_to_json(v)), density: None })
            .collect();
        Self { dims: dims.to_vec(), states }
    }

    pub fn from_family(family: &WeightedStateFamily) -> Self {
        let states = family
            .states()
            .iter()
            .zip(family.priors())
            .map(|(rho, &p)| StateEntry { prior: Some(p), vector: None, density: Some(matrix_to_json(rho)) })
            .collect();
        Self { dims: family.structure().party_dims().to_vec(), states }
    }

    /// Builds the family. Returned strings are warnings about values that
    /// were renormalised within [`LOAD_TOL`].
    pub fn to_family(&self) -> Result<(WeightedStateFamily, Vec<String>)> {
        let structure = HilbertStructure::new(self.dims.clone())?;
        let n = structure.total_dim();
        let mut warnings = Vec::new();
        if self.states.is_empty() {
            return Err(Error::InvalidFamily("no states".into()));
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (mu, entry) in self.states.iter().enumerate() {
            let rho = match (&entry.vector, &entry.density) {
                (Some(v), None) => {
                    let v = vector_from_json(v);
                    if v.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
                    }
                    let norm = v.norm();
                    if norm == 0.0 {
                        return Err(Error::InvalidFamily(format!("state {mu} is the zero vector")));
                    }
                    if (norm - 1.0).abs() > LOAD_TOL {
                        warnings.push(format!("state {mu}: vector norm {norm} renormalised"));
                    }
                    let u = v.unscale(norm);
                    &u * u.adjoint()
                }
                (None, Some(d)) => load_density(mu, &matrix_from_json(d)?, n, &mut warnings)?,
                _ => return Err(Error::InvalidFamily(format!("state {mu} needs exactly one of vector or density"))),
            };
            states.push(rho);
        }
        let given: Vec<Option<f64>> = self.states.iter().map(|s| s.prior).collect();
        let priors = if given.iter().all(Option::is_none) {
            equal_priors(states.len())
        } else if given.iter().all(Option::is_some) {
            let p: Vec<f64> = given.into_iter().flatten().collect();
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > LOAD_TOL {
                return Err(Error::InvalidFamily(format!("priors sum to {total}")));
            }
            p.iter().map(|x| x / total).collect()
        } else {
            return Err(Error::InvalidFamily("priors must be given for all states or none".into()));
        };
        Ok((WeightedStateFamily::new(structure, states, priors)?, warnings))
    }
}

fn load_density(mu: usize, rho: &CMat, n: usize, warnings: &mut Vec<String>) -> Result<CMat> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.nrows() });
    }
    let t = trace(rho);
    if (t.re - 1.0).abs() > LOAD_TOL || t.im.abs() > LOAD_TOL {
        return Err(Error::InvalidFamily(format!("state {mu}: density has trace {t}")));
    }
    let (values, vectors) = eigh(rho)?;
    if values[0] < -LOAD_TOL {
        return Err(Error::InvalidFamily(format!("state {mu}: density has eigenvalue {:e}", values[0])));
    }
    let mut out = rho.clone();
    if values[0] < -CLIP_SILENT {
        warnings.push(format!("state {mu}: negative eigenvalue {:e} clipped", values[0]));
        out = spectral_map(&values, &vectors, |l| l.max(0.0));
    }
    let t = trace(&out).re;
    if (t - 1.0).abs() > 0.0 {
        out = out.unscale(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub party: usize,
    pub op: JsonMatrix,
    #[serde(default)]
    pub children: Vec<NodeFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub children: Vec<NodeFile>,
}

impl ProtocolFile {
    pub fn from_tree(tree: &ProtocolTree) -> Self {
        fn node(tree: &ProtocolTree, id: NodeId) -> NodeFile {
            NodeFile {
                party: tree.party(id).expect("non-root node"),
                op: matrix_to_json(tree.local_op(id)),
                children: tree.children(id).iter().map(|&c| node(tree, c)).collect(),
            }
        }
        Self {
            dims: tree.structure().party_dims().to_vec(),
            children: tree.children(tree.root()).iter().map(|&c| node(tree, c)).collect(),
        }
    }

    /// Builds and validates the tree.
    pub fn to_tree(&self) -> Result<ProtocolTree> {
        let mut tree = ProtocolTree::new(HilbertStructure::new(self.dims.clone())?);
        let mut stack: Vec<(NodeId, &NodeFile)> = self.children.iter().map(|c| (0, c)).collect();
        stack.reverse();
        while let Some((parent, node)) = stack.pop() {
            let id = tree.add_child(parent, node.party, matrix_from_json(&node.op)?)?;
            stack.extend(node.children.iter().rev().map(|c| (id, c)));
        }
        let (tree, _) = tree.compacted();
        let report = validate(&tree);
        if !report.valid {
            return Err(Error::InvalidProtocol(format!("{:?}", report.violations)));
        }
        Ok(tree)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub dims: Vec<usize>,
    pub effects: Vec<JsonMatrix>,
}

impl PovmFile {
    pub fn from_povm(povm: &Povm) -> Self {
        Self {
            dims: povm.structure().party_dims().to_vec(),
            effects: povm.effects().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let effects = self.effects.iter().map(matrix_from_json).collect::<Result<_>>()?;
        Povm::new(HilbertStructure::new(self.dims.clone())?, effects)
    }
}

/// Either a protocol tree or a bare POVM, told apart by their keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasurementFile {
    Protocol(ProtocolFile),
    Povm(PovmFile),
}

impl MeasurementFile {
    pub fn to_povm(&self) -> Result<Povm> {
        match self {
            MeasurementFile::Protocol(p) => as_povm(&p.to_tree()?),
            MeasurementFile::Povm(p) => p.to_povm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub dims: Vec<usize>,
    /// `states[mu][r]`: local vector of state `mu` on party `r`.
    pub states: Vec<Vec<JsonVector>>,
}

impl BasisFile {
    pub fn from_basis(basis: &ProductBasis) -> Self {
        Self {
            dims: basis.structure().party_dims().to_vec(),
            states: basis.vectors().iter().map(|locals| locals.iter().map(vector_to_json).collect()).collect(),
        }
    }

    pub fn to_basis(&self) -> Result<ProductBasis> {
        let vectors = self.states.iter().map(|locals| locals.iter().map(vector_from_json).collect()).collect();
        ProductBasis::new(HilbertStructure::new(self.dims.clone())?, vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertFile {
    pub dims: Vec<usize>,
    pub factors: Vec<JsonMatrix>,
}

impl CertFile {
    pub fn from_operator(e: &ProductOperator) -> Self {
        Self { dims: e.structure().party_dims().to_vec(), factors: e.factors().iter().map(matrix_to_json).collect() }
    }

    pub fn to_operator(&self) -> Result<ProductOperator> {
        let factors = self.factors.iter().map(matrix_from_json).collect::<Result<_>>()?;
        ProductOperator::new(HilbertStructure::new(self.dims.clone())?, factors)
    }
}

/// JSON with objects indented and every array free of objects on a single
/// line, so each vector or matrix takes one line. Ends with a newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("file types serialise");
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    out
}

fn contains_object(value: &Value) -> bool {
    match value {
        Value::Object(_) => true,
        Value::Array(items) => items.iter().any(contains_object),
        _ => false,
    }
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        Value::Array(items) if contains_object(value) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(fs::write(path, to_json_string(value))?)
}
