//! Dense complex linear algebra on multipartite Hilbert spaces.
//!
//! Everything here is built on one primitive, the Hermitian
//! eigendecomposition. Matrices are small (tens of rows at most), so
//! every routine favours robustness over speed.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default absolute tolerance on eigenvalues for PSD checks.
pub const PSD_TOL: f64 = 1e-9;

/// Tolerance used when deciding whether an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Local dimensions of a tensor product space `H = H_1 ⊗ ... ⊗ H_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertStructure {
    party_dims: Vec<usize>,
}

impl HilbertStructure {
    pub fn new(party_dims: Vec<usize>) -> Result<Self> {
        if party_dims.is_empty() {
            return Err(Error::InvalidStructure("no parties".into()));
        }
        if let Some(pos) = party_dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidStructure(format!("party {pos} has dimension 0")));
        }
        Ok(Self { party_dims })
    }

    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn parties(&self) -> usize {
        self.party_dims.len()
    }

    pub fn dim(&self, party: usize) -> usize {
        self.party_dims[party]
    }

    pub fn total_dim(&self) -> usize {
        self.party_dims.iter().product()
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.total_dim(), self.total_dim())
    }

    /// Single-party view of one party's local space.
    pub fn local(&self, party: usize) -> HilbertStructure {
        HilbertStructure { party_dims: vec![self.party_dims[party]] }
    }

    fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.parties() {
            return Err(Error::InvalidStructure(format!(
                "party {party} out of range for {} parties",
                self.parties()
            )));
        }
        Ok(())
    }

    /// `1 ⊗ ... ⊗ local ⊗ ... ⊗ 1` with `local` in slot `party`.
    pub fn embed_local(&self, party: usize, local: &CMat) -> Result<CMat> {
        self.check_party(party)?;
        let d = self.party_dims[party];
        if local.nrows() != d || local.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: local.nrows() });
        }
        let parts: Vec<CMat> = self
            .party_dims
            .iter()
            .enumerate()
            .map(|(r, &dr)| if r == party { local.clone() } else { CMat::identity(dr, dr) })
            .collect();
        tensor(&parts)
    }

    /// Tensor product of one local vector per party.
    pub fn product_vector(&self, locals: &[CVec]) -> Result<CVec> {
        if locals.len() != self.parties() {
            return Err(Error::DimensionMismatch { expected: self.parties(), found: locals.len() });
        }
        let mut out = CVec::from_element(1, c64(1.0, 0.0));
        for (v, &d) in locals.iter().zip(&self.party_dims) {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            out = out.kronecker(v);
        }
        Ok(out)
    }

    /// Contract `m` with the fixed local vectors of every party except
    /// `party`, leaving a `d_party x d_party` matrix.
    pub fn local_effective(&self, m: &CMat, party: usize, locals: &[CVec]) -> Result<CMat> {
        self.check_party(party)?;
        let d = self.party_dims[party];
        let columns: Vec<CVec> = (0..d)
            .map(|i| {
                let mut probe = locals.to_vec();
                probe[party] = unit_vector(d, i);
                self.product_vector(&probe)
            })
            .collect::<Result<_>>()?;
        let basis = CMat::from_columns(&columns);
        Ok(basis.adjoint() * m * basis)
    }
}

impl HilbertStructure {
    /// Reduced local factor of `op` on `party`: the partial trace over all
    /// other parties divided by their dimension. For `op = 1 ⊗ a ⊗ 1` this
    /// returns `a` exactly.
    pub fn local_part(&self, op: &CMat, party: usize) -> Result<CMat> {
        self.check_party(party)?;
        let n = self.total_dim();
        if op.nrows() != n || op.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: op.nrows() });
        }
        let d = self.party_dims[party];
        let inner: usize = self.party_dims[party + 1..].iter().product();
        let outer: usize = self.party_dims[..party].iter().product();
        let mut out = CMat::zeros(d, d);
        for o in 0..outer {
            for q in 0..inner {
                for i in 0..d {
                    for j in 0..d {
                        let row = (o * d + i) * inner + q;
                        let col = (o * d + j) * inner + q;
                        out[(i, j)] += op[(row, col)];
                    }
                }
            }
        }
        Ok(out.unscale((outer * inner) as f64))
    }

    /// Max-entry distance between `op` and the embedding of its local part.
    pub fn locality_defect(&self, op: &CMat, party: usize) -> Result<f64> {
        let local = self.local_part(op, party)?;
        let embedded = self.embed_local(party, &local)?;
        Ok((op - embedded).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

pub fn unit_vector(dim: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[index] = c64(1.0, 0.0);
    v
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// Kronecker product of square matrices, in the given order.
pub fn tensor(parts: &[CMat]) -> Result<CMat> {
    let mut out = CMat::from_element(1, 1, c64(1.0, 0.0));
    for p in parts {
        check_square(p)?;
        out = out.kronecker(p);
    }
    Ok(out)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= tol
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The matrix is symmetrised before decomposition so that rounding noise
/// in the anti-Hermitian part never leaks into the spectrum.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    check_square(m)?;
    let defect = hermiticity_defect(m);
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let columns: Vec<CVec> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    Ok((values, CMat::from_columns(&columns)))
}

pub fn spectral_map(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = vectors.nrows();
    let mut out = CMat::zeros(n, n);
    for (i, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        if w != 0.0 {
            let v = vectors.column(i);
            out += (v * v.adjoint()).scale(w);
        }
    }
    out
}

pub fn min_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.0.first().copied().unwrap_or(0.0))
}

pub fn max_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.0.last().copied().unwrap_or(0.0))
}

pub fn is_psd(m: &CMat, tol: f64) -> bool {
    matches!(min_eigenvalue(m), Ok(l) if l >= -tol)
}

/// Principal square root of a PSD matrix; eigenvalues in `(-tol, 0)` are clamped.
pub fn sqrt_psd(m: &CMat, tol: f64) -> Result<CMat> {
    let (values, vectors) = eigh(m)?;
    if let Some(&lowest) = values.first() {
        if lowest < -tol {
            return Err(Error::NotPsd { eigenvalue: lowest });
        }
    }
    Ok(spectral_map(&values, &vectors, |l| l.max(0.0).sqrt()))
}

/// Pseudo-inverse square root: eigenvalues above `tol` map to `1/sqrt(l)`, the rest to zero.
pub fn inv_sqrt_psd(m: &CMat, tol: f64) -> Result<CMat> {
    let (values, vectors) = eigh(m)?;
    Ok(spectral_map(&values, &vectors, |l| if l > tol { 1.0 / l.sqrt() } else { 0.0 }))
}

/// Orthonormal basis of the eigenspace with eigenvalue at most `tol`.
pub fn kernel_basis(m: &CMat, tol: f64) -> Result<Vec<CVec>> {
    let (values, vectors) = eigh(m)?;
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= tol)
        .map(|(i, _)| vectors.column(i).into_owned())
        .collect())
}

pub fn projector(vectors: &[CVec], dim: usize) -> CMat {
    vectors.iter().fold(CMat::zeros(dim, dim), |acc, v| acc + v * v.adjoint())
}

/// Extends an orthonormal set to a basis of `C^dim` by Gram-Schmidt over
/// the standard basis vectors `e_0, e_1, ...` in order.
pub fn complete_orthonormal(vectors: &[CVec], dim: usize) -> Vec<CVec> {
    let mut basis: Vec<CVec> = vectors.to_vec();
    let mut added = Vec::new();
    for i in 0..dim {
        if basis.len() >= dim {
            break;
        }
        let mut v = unit_vector(dim, i);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            v /= c64(norm, 0.0);
            basis.push(v.clone());
            added.push(v);
        }
    }
    added
}

/// Polar decomposition `A = V P` with `P = sqrt(A^† A)` and `V` unitary.
///
/// Singular triples come from the Hermitian dilation `[[0, A], [A^†, 0]]`,
/// whose eigenvalues are `±sigma`; this resolves small singular values to
/// absolute machine precision instead of squaring them. On the support of
/// `P`, `V` is fixed by `A`. On the kernel, `V` pairs the completion of the
/// domain support with the completion of the range; both completions run
/// over the standard basis in order, and support vectors are taken in
/// descending singular-value order.
pub fn polar(a: &CMat, tol: f64) -> Result<(CMat, CMat)> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    let mut dilation = CMat::zeros(2 * n, 2 * n);
    dilation.view_mut((0, n), (n, n)).copy_from(a);
    dilation.view_mut((n, 0), (n, n)).copy_from(&a.adjoint());
    let (values, vectors) = eigh(&dilation)?;

    let mut p = CMat::zeros(n, n);
    let mut domain = Vec::new();
    let mut range = Vec::new();
    let root2 = c64(std::f64::consts::SQRT_2, 0.0);
    for i in (0..2 * n).rev() {
        let sigma = values[i];
        if sigma <= tol {
            break;
        }
        let col = vectors.column(i);
        let u = col.rows(0, n).into_owned() * root2;
        let w = col.rows(n, n).into_owned() * root2;
        p += (&w * w.adjoint()).scale(sigma);
        range.push(u);
        domain.push(w);
    }
    let p = (&p + p.adjoint()).scale(0.5);
    let domain_rest = complete_orthonormal(&domain, n);
    let range_rest = complete_orthonormal(&range, n);
    let mut v = CMat::zeros(n, n);
    for (u, w) in range.iter().chain(&range_rest).zip(domain.iter().chain(&domain_rest)) {
        v += u * w.adjoint();
    }
    Ok((v, p))
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    max_eigenvalue(&((&gram + gram.adjoint()).scale(0.5))).unwrap_or(0.0).max(0.0).sqrt()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let mut acc = c64(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn ket_bra(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// A tensor product of per-party Hermitian PSD factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperator {
    structure: HilbertStructure,
    factors: Vec<CMat>,
}

impl ProductOperator {
    pub fn new(structure: HilbertStructure, factors: Vec<CMat>) -> Result<Self> {
        if factors.len() != structure.parties() {
            return Err(Error::DimensionMismatch { expected: structure.parties(), found: factors.len() });
        }
        for (f, &d) in factors.iter().zip(structure.party_dims()) {
            if f.nrows() != d || f.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: f.nrows() });
            }
            let lowest = min_eigenvalue(f)?;
            if lowest < -PSD_TOL {
                return Err(Error::NotPsd { eigenvalue: lowest });
            }
        }
        Ok(Self { structure, factors })
    }

    pub fn identity(structure: HilbertStructure) -> Self {
        let factors = structure.party_dims().iter().map(|&d| CMat::identity(d, d)).collect();
        Self { structure, factors }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn factors(&self) -> &[CMat] {
        &self.factors
    }

    pub fn expand(&self) -> CMat {
        tensor(&self.factors).expect("factors are square by construction")
    }

    /// Multiplies the operator by `s >= 0`, absorbed into the first factor.
    pub fn scaled(&self, s: f64) -> Self {
        let mut factors = self.factors.clone();
        factors[0] = factors[0].scale(s);
        Self { structure: self.structure.clone(), factors }
    }

    /// Square root, factor by factor.
    pub fn sqrt(&self) -> Result<Self> {
        let factors = self.factors.iter().map(|f| sqrt_psd(f, PSD_TOL)).collect::<Result<_>>()?;
        Ok(Self { structure: self.structure.clone(), factors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_matrix, random_psd, random_unitary, rng};

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&x| c64(x, 0.0))))
    }

    fn max_abs(m: &CMat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let out = tensor(&[CMat::identity(2, 2), CMat::identity(2, 2)]).unwrap();
        assert_eq!(out, CMat::identity(4, 4));
    }

    #[test]
    fn tensor_of_diagonals() {
        let out = tensor(&[diag(&[1.0, -1.0]), diag(&[2.0, 3.0])]).unwrap();
        assert_eq!(out, diag(&[2.0, 3.0, -2.0, -3.0]));
    }

    #[test]
    fn tensor_matches_index_formula() {
        let mut r = rng(11);
        let a = random_matrix(&mut r, 2);
        let b = random_matrix(&mut r, 2);
        let k = tensor(&[a.clone(), b.clone()]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        let expected = a[(i, j)] * b[(p, q)];
                        assert!((k[(2 * i + p, 2 * j + q)] - expected).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_rejects_non_square() {
        let m = CMat::zeros(2, 3);
        assert!(matches!(tensor(&[m]), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn tensor_is_associative_and_bilinear() {
        let mut r = rng(3);
        for _ in 0..20 {
            let a = random_matrix(&mut r, 2);
            let b = random_matrix(&mut r, 3);
            let c = random_matrix(&mut r, 2);
            let left = tensor(&[tensor(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
            let right = tensor(&[a.clone(), tensor(&[b.clone(), c.clone()]).unwrap()]).unwrap();
            assert!(max_abs(&(left - right)) < 1e-12);

            let a2 = random_matrix(&mut r, 2);
            let s = c64(0.3, -1.2);
            let lhs = tensor(&[&a + a2.clone() * s, b.clone()]).unwrap();
            let rhs = tensor(&[a.clone(), b.clone()]).unwrap() + tensor(&[a2.clone(), b.clone()]).unwrap() * s;
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = sqrt_psd(&diag(&[4.0, 9.0]), PSD_TOL).unwrap();
        assert!(max_abs(&(s - diag(&[2.0, 3.0]))) < 1e-14);
        let id = sqrt_psd(&CMat::identity(3, 3), PSD_TOL).unwrap();
        assert!(max_abs(&(id - CMat::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn sqrt_reconstructs_random_psd() {
        let mut r = rng(5);
        for n in 1..7 {
            let m = random_psd(&mut r, n);
            let s = sqrt_psd(&m, PSD_TOL).unwrap();
            assert!(max_abs(&(&s * &s - &m)) < 1e-10);
            assert!(is_hermitian(&s, 1e-12));
            assert!(min_eigenvalue(&s).unwrap() > -1e-12);
        }
    }

    #[test]
    fn sqrt_rejects_negative_and_clamps_noise() {
        assert!(matches!(sqrt_psd(&diag(&[1.0, -0.1]), PSD_TOL), Err(Error::NotPsd { .. })));
        let s = sqrt_psd(&diag(&[1.0, -1e-12]), PSD_TOL).unwrap();
        assert_eq!(s[(1, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn sqrt_rejects_non_hermitian() {
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(sqrt_psd(&m, PSD_TOL), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn inverse_sqrt_is_pseudo_inverse() {
        let x = inv_sqrt_psd(&diag(&[4.0, 0.0]), PSD_TOL).unwrap();
        assert!(max_abs(&(x - diag(&[0.5, 0.0]))) < 1e-15);
        let id = inv_sqrt_psd(&CMat::identity(2, 2), PSD_TOL).unwrap();
        assert!(max_abs(&(id - CMat::identity(2, 2))) < 1e-14);

        let mut r = rng(9);
        for n in 1..6 {
            let m = random_psd(&mut r, n) + CMat::identity(n, n).scale(0.1);
            let x = inv_sqrt_psd(&m, PSD_TOL).unwrap();
            assert!(max_abs(&(&x * &m * &x - CMat::identity(n, n))) < 1e-9);
        }
    }

    #[test]
    fn polar_of_unitary_and_positive() {
        let mut r = rng(1);
        let u = random_unitary(&mut r, 3);
        let (v, p) = polar(&u, PSD_TOL).unwrap();
        assert!(max_abs(&(v - &u)) < 1e-10);
        assert!(max_abs(&(p - CMat::identity(3, 3))) < 1e-10);

        let (v, p) = polar(&diag(&[2.0, 3.0]), PSD_TOL).unwrap();
        assert!(max_abs(&(v - CMat::identity(2, 2))) < 1e-12);
        assert!(max_abs(&(p - diag(&[2.0, 3.0]))) < 1e-12);
    }

    #[test]
    fn polar_reconstructs_random_and_rank_deficient() {
        let mut r = rng(2);
        for seed in 0..1000 {
            let n = 1 + seed % 5;
            let mut a = random_matrix(&mut r, n);
            if seed % 3 == 0 && n > 1 {
                // force a kernel
                let k = kernel_direction(&mut r, n);
                a = &a * (CMat::identity(n, n) - ket_bra(&k));
            }
            let (v, p) = polar(&a, PSD_TOL).unwrap();
            assert!(max_abs(&(&v * &p - &a)) < 1e-10, "reconstruction at seed {seed}");
            assert!(max_abs(&(v.adjoint() * &v - CMat::identity(n, n))) < 1e-10, "isometry at seed {seed}");
        }
    }

    fn kernel_direction(r: &mut crate::random::Rng, n: usize) -> CVec {
        random_unitary(r, n).column(0).into_owned()
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut r = rng(17);
        for n in 1..9 {
            for _ in 0..20 {
                let g = random_matrix(&mut r, n);
                let m = &g + g.adjoint();
                let (values, vectors) = eigh(&m).unwrap();
                assert!(values.windows(2).all(|w| w[0] <= w[1]));
                let d = CMat::from_diagonal(&CVec::from_iterator(n, values.iter().map(|&x| c64(x, 0.0))));
                assert!(max_abs(&(&vectors * d * vectors.adjoint() - &m)) < 1e-12);
                assert!(max_abs(&(vectors.adjoint() * &vectors - CMat::identity(n, n))) < 1e-12);
            }
        }
    }

    #[test]
    fn polar_is_deterministic_on_zero() {
        let (v, p) = polar(&CMat::zeros(3, 3), PSD_TOL).unwrap();
        assert_eq!(v, CMat::identity(3, 3));
        assert_eq!(p, CMat::zeros(3, 3));
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_basis(&diag(&[1.0, 0.0]), PSD_TOL).unwrap();
        assert_eq!(k.len(), 1);
        assert!((k[0][1].norm() - 1.0).abs() < 1e-14);
        assert!(kernel_basis(&CMat::identity(3, 3), PSD_TOL).unwrap().is_empty());
    }

    #[test]
    fn kernel_vectors_are_orthonormal_null_vectors() {
        let mut r = rng(21);
        for n in 2..7 {
            let rank = n / 2;
            let u = random_unitary(&mut r, n);
            let cols: Vec<CVec> = (0..rank).map(|i| u.column(i).into_owned()).collect();
            let m = projector(&cols, n);
            let k = kernel_basis(&m, PSD_TOL).unwrap();
            assert_eq!(k.len(), n - rank);
            for (i, a) in k.iter().enumerate() {
                assert!((&m * a).norm() <= 10.0 * PSD_TOL);
                for (j, b) in k.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((a.dotc(b) - c64(expected, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn embed_local_and_effective_contraction() {
        let s = HilbertStructure::new(vec![2, 3]).unwrap();
        let mut r = rng(4);
        let a = random_matrix(&mut r, 3);
        let full = s.embed_local(1, &a).unwrap();
        assert_eq!(full, tensor(&[CMat::identity(2, 2), a.clone()]).unwrap());

        let m = random_psd(&mut r, 6);
        let xi0 = random_unitary(&mut r, 2).column(0).into_owned();
        let xi1 = random_unitary(&mut r, 3).column(0).into_owned();
        let eff = s.local_effective(&m, 1, &[xi0.clone(), xi1.clone()]).unwrap();
        let direct = s.product_vector(&[xi0, xi1.clone()]).unwrap();
        let lhs = xi1.dotc(&(&eff * &xi1));
        let rhs = direct.dotc(&(&m * &direct));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn structure_validation() {
        assert!(HilbertStructure::new(vec![]).is_err());
        assert!(HilbertStructure::new(vec![2, 0]).is_err());
        assert_eq!(HilbertStructure::new(vec![2, 3, 2]).unwrap().total_dim(), 12);
    }

    #[test]
    fn product_operator_rejects_negative_factor() {
        let s = HilbertStructure::new(vec![2, 2]).unwrap();
        assert!(ProductOperator::new(s.clone(), vec![diag(&[1.0, -1.0]), diag(&[1.0, 1.0])]).is_err());
        let e = ProductOperator::new(s, vec![diag(&[1.0, 2.0]), diag(&[3.0, 0.0])]).unwrap();
        assert_eq!(e.expand(), diag(&[3.0, 0.0, 6.0, 0.0]));
    }
}
