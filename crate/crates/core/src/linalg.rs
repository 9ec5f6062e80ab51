//! Dense complex linear algebra on multipartite operators.
//!
//! An [`Operator`] is a square complex matrix together with the list of
//! subsystem dimensions its row/column index factorizes over. Indices are
//! row-major: for dims `[d0, d1]` the flat index is `i0 * d1 + i1`, matching
//! the Kronecker product convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::tol::{EIG_CLIP, HERM_TOL, SUPPORT_EIG};
use crate::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;

/// Complex square matrix with subsystem-dimension metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    dims: Vec<usize>,
}

/// Eigendecomposition of a Hermitian operator.
///
/// Eigenvalues are real and sorted in descending order; `vectors` holds the
/// corresponding orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Operator {
    /// Wrap a matrix with subsystem dims. The product of `dims` must equal the
    /// matrix dimension.
    pub fn new(mat: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if !mat.is_square() || mat.nrows() != d || dims.iter().any(|&x| x == 0) {
            return Err(Error::dim(format!(
                "matrix is {}x{} but dims {:?} give {}",
                mat.nrows(),
                mat.ncols(),
                dims,
                d
            )));
        }
        Ok(Operator { mat, dims })
    }

    /// Single-system wrapper (dims = [d]).
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        let d = mat.nrows();
        Operator::new(mat, vec![d])
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Operator {
            mat: DMatrix::zeros(d, d),
            dims: dims.to_vec(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Operator {
            mat: DMatrix::identity(d, d),
            dims: dims.to_vec(),
        }
    }

    /// Rank-one projector |v><v| (v need not be normalized).
    pub fn from_ket(v: &DVector<C64>, dims: &[usize]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if v.len() != d {
            return Err(Error::dim(format!("ket length {} vs dims {:?}", v.len(), dims)));
        }
        Ok(Operator {
            mat: v * v.adjoint(),
            dims: dims.to_vec(),
        })
    }

    /// Diagonal operator from real entries.
    pub fn from_diag(diag: &[f64], dims: &[usize]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if diag.len() != d {
            return Err(Error::dim(format!("diag length {} vs dims {:?}", diag.len(), dims)));
        }
        let mat = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Operator { mat, dims: dims.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// Replace the dims metadata without touching the data.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if d != self.dim() {
            return Err(Error::dim(format!("dims {:?} give {} but matrix is {}", dims, d, self.dim())));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn trace_re(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn transpose(&self) -> Operator {
        Operator {
            mat: self.mat.transpose(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator {
            mat: &self.mat * C64::new(s, 0.0),
            dims: self.dims.clone(),
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            mat: &self.mat + &other.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            mat: &self.mat - &other.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            mat: &self.mat * &other.mat,
            dims: self.dims.clone(),
        })
    }

    fn check_same_shape(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dim(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// Hilbert-Schmidt pairing `tr(A^dag B)`.
    pub fn hs_inner(&self, other: &Operator) -> Result<C64> {
        self.check_same_shape(other)?;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                acc += self.mat[(i, j)].conj() * other.mat[(i, j)];
            }
        }
        Ok(acc)
    }

    /// `tr(A B)` for Hermitian pairings; returns the real part.
    pub fn pair_re(&self, other: &Operator) -> Result<f64> {
        self.check_same_shape(other)?;
        let mut acc = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                acc += (self.mat[(i, j)] * other.mat[(j, i)]).re;
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius asymmetry ||M - M^dag||_F relative to max(1, ||M||_F).
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt() / self.frobenius_norm().max(1.0)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERM_TOL
    }

    /// Symmetrize to (M + M^dag)/2. Rejects when the defect exceeds tolerance.
    pub fn hermitize(&self) -> Result<Operator> {
        let defect = self.hermitian_defect();
        if defect > HERM_TOL {
            return Err(Error::NotHermitian { asym: defect });
        }
        let adj = self.mat.adjoint();
        Ok(Operator {
            mat: (&self.mat + adj) * C64::new(0.5, 0.0),
            dims: self.dims.clone(),
        })
    }
}

/// Eigendecomposition of a Hermitian operator, eigenvalues descending.
///
/// Cyclic complex Jacobi iteration: backward stable and well behaved on the
/// exactly degenerate spectra that comb plumbing produces (permutation and
/// replacer Chois), where QR-iteration eigensolvers can stall.
pub fn eig_hermitian(m: &Operator) -> Result<Spectrum> {
    let sym = m.hermitize()?;
    let n = sym.mat.nrows();
    let mut a = sym.mat;
    let mut v = DMatrix::<C64>::identity(n, n);
    let scale = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let stop = 1e-15 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b <= stop / (n as f64) {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / C64::new(b, 0.0);
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = D R with D = diag(1, conj(phase)), R the real rotation
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = phase.conj() * C64::new(-s, 0.0);
                let jqq = phase.conj() * C64::new(c, 0.0);
                // A <- J^dag A J (columns, then rows)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * jpp + aiq * jqp;
                    a[(i, q)] = aip * jpq + aiq * jqq;
                }
                for i in 0..n {
                    let api = a[(p, i)];
                    let aqi = a[(q, i)];
                    a[(p, i)] = jpp.conj() * api + jqp.conj() * aqi;
                    a[(q, i)] = jpq.conj() * api + jqq.conj() * aqi;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * jpp + viq * jqp;
                    v[(i, q)] = vip * jpq + viq * jqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.partial_cmp(&a[(x, x)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    Ok(Spectrum { values, vectors })
}

impl Spectrum {
    /// Rebuild `U f(Lambda) U^dag` with dims metadata from `template`.
    pub fn apply(&self, f: impl Fn(f64) -> f64, dims: &[usize]) -> Operator {
        let n = self.values.len();
        let mut mat = DMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let fv = f(lam);
            if fv == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            for j in 0..n {
                let cj = col[j].conj() * C64::new(fv, 0.0);
                for i in 0..n {
                    mat[(i, j)] += col[i] * cj;
                }
            }
        }
        Operator {
            mat,
            dims: dims.to_vec(),
        }
    }

    /// Projector onto eigenspaces with eigenvalue above `thresh`.
    pub fn support_projector(&self, thresh: f64, dims: &[usize]) -> Operator {
        self.apply(|l| if l > thresh { 1.0 } else { 0.0 }, dims)
    }

    pub fn min(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }
}

/// Apply a scalar function to a Hermitian PSD operator through its spectrum.
///
/// Eigenvalues in `(-EIG_CLIP, 0)` are clipped to zero; anything below
/// `-EIG_CLIP` is rejected. With `on_support` set, eigenvalues below the
/// support threshold map to zero regardless of `f` (generalized-inverse
/// convention: keeps roundoff-sized eigenvalues out of inverses and logs),
/// otherwise `f(0)` is used.
pub fn mat_fn(m: &Operator, f: impl Fn(f64) -> f64, on_support: bool) -> Result<Operator> {
    let spec = eig_hermitian(m)?;
    if spec.min() < -EIG_CLIP {
        return Err(Error::NotPsd { min_eig: spec.min() });
    }
    let g = |lam: f64| {
        let lam = lam.max(0.0);
        if on_support {
            if lam <= SUPPORT_EIG {
                0.0
            } else {
                f(lam)
            }
        } else if lam == 0.0 {
            f(0.0)
        } else {
            f(lam)
        }
    };
    Ok(spec.apply(g, m.dims()))
}

/// Principal square root of a PSD operator.
pub fn sqrt_psd(m: &Operator) -> Result<Operator> {
    mat_fn(m, |l| l.sqrt(), true)
}

/// Kronecker product; dims are concatenated.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let mat = a.mat.kronecker(&b.mat);
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator { mat, dims }
}

/// Strides of a row-major multi-index over `dims`.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn unravel(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for i in (0..dims.len()).rev() {
        out[i] = idx % dims[i];
        idx /= dims[i];
    }
}

/// Partial trace keeping the subsystems listed in `keep` (original order).
pub fn partial_trace(m: &Operator, keep: &[usize]) -> Result<Operator> {
    let k = m.dims.len();
    if keep.iter().any(|&i| i >= k) {
        return Err(Error::arg(format!("keep indices {:?} out of range for {} systems", keep, k)));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::arg("duplicate keep indices"));
    }
    let tr: Vec<usize> = (0..k).filter(|i| !keep_sorted.contains(i)).collect();
    let st = strides(&m.dims);
    let keep_dims: Vec<usize> = keep_sorted.iter().map(|&i| m.dims[i]).collect();
    let tr_dims: Vec<usize> = tr.iter().map(|&i| m.dims[i]).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = tr_dims.iter().product();

    let mut out = DMatrix::<C64>::zeros(dk, dk);
    let mut ik = vec![0usize; keep_sorted.len()];
    let mut jk = vec![0usize; keep_sorted.len()];
    let mut it = vec![0usize; tr.len()];
    for a in 0..dk {
        unravel(a, &keep_dims, &mut ik);
        for b in 0..dk {
            unravel(b, &keep_dims, &mut jk);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                unravel(t, &tr_dims, &mut it);
                let mut row = 0usize;
                let mut col = 0usize;
                for (p, &sys) in keep_sorted.iter().enumerate() {
                    row += ik[p] * st[sys];
                    col += jk[p] * st[sys];
                }
                for (p, &sys) in tr.iter().enumerate() {
                    row += it[p] * st[sys];
                    col += it[p] * st[sys];
                }
                acc += m.mat[(row, col)];
            }
            out[(a, b)] = acc;
        }
    }
    Operator::new(out, if keep_dims.is_empty() { vec![1] } else { keep_dims })
}

/// Reorder subsystems: the new system at position `p` is the old system
/// `perm[p]`.
pub fn permute_systems(m: &Operator, perm: &[usize]) -> Result<Operator> {
    let k = m.dims.len();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::arg(format!("invalid permutation {:?} for {} systems", perm, k)));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| m.dims[p]).collect();
    let st_old = strides(&m.dims);
    let d = m.dim();
    // map[new flat index] = old flat index
    let mut map = vec![0usize; d];
    let mut multi = vec![0usize; k];
    for (new_idx, slot) in map.iter_mut().enumerate() {
        unravel(new_idx, &new_dims, &mut multi);
        let mut old = 0usize;
        for p in 0..k {
            old += multi[p] * st_old[perm[p]];
        }
        *slot = old;
    }
    let mat = DMatrix::from_fn(d, d, |i, j| m.mat[(map[i], map[j])]);
    Operator::new(mat, new_dims)
}

/// Transpose the listed subsystems in place (partial transpose).
pub fn partial_transpose(m: &Operator, systems: &[usize]) -> Result<Operator> {
    let k = m.dims.len();
    if systems.iter().any(|&i| i >= k) {
        return Err(Error::arg(format!("transpose systems {:?} out of range", systems)));
    }
    let st = strides(&m.dims);
    let d = m.dim();
    let mut out = DMatrix::<C64>::zeros(d, d);
    let mut mi = vec![0usize; k];
    let mut mj = vec![0usize; k];
    for i in 0..d {
        unravel(i, &m.dims, &mut mi);
        for j in 0..d {
            unravel(j, &m.dims, &mut mj);
            let mut row = 0usize;
            let mut col = 0usize;
            for p in 0..k {
                if systems.contains(&p) {
                    row += mj[p] * st[p];
                    col += mi[p] * st[p];
                } else {
                    row += mi[p] * st[p];
                    col += mj[p] * st[p];
                }
            }
            out[(row, col)] = m.mat[(i, j)];
        }
    }
    Operator::new(out, m.dims.clone())
}

/// Trace norm (sum of singular values).
pub fn trace_norm(m: &Operator) -> f64 {
    // hermitian inputs take the cheaper eigenvalue path
    if m.is_hermitian() {
        let spec = eig_hermitian(m).expect("hermitian check passed");
        return spec.values.iter().map(|l| l.abs()).sum();
    }
    m.mat.clone().svd(false, false).singular_values.iter().sum()
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &Operator) -> f64 {
    if m.is_hermitian() {
        let spec = eig_hermitian(m).expect("hermitian check passed");
        return spec.values.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    }
    m.mat
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &s| a.max(s))
}

fn check_sub_state(m: &Operator) -> Result<()> {
    let spec = eig_hermitian(m)?;
    if spec.min() < -EIG_CLIP {
        return Err(Error::NotPsd { min_eig: spec.min() });
    }
    Ok(())
}

/// Uhlmann fidelity `F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2`, extended
/// to subnormalized inputs by the generalized fidelity
/// `F*(rho, sigma) = (||sqrt(rho) sqrt(sigma)||_1 + sqrt((1-tr rho)(1-tr sigma)))^2`.
pub fn fidelity(rho: &Operator, sigma: &Operator) -> Result<f64> {
    rho.check_same_shape(sigma)?;
    check_sub_state(rho)?;
    check_sub_state(sigma)?;
    let sr = sqrt_psd(rho)?;
    let ss = sqrt_psd(sigma)?;
    let prod = sr.matmul(&ss)?;
    let root_f = trace_norm(&prod);
    let a = (1.0 - rho.trace_re()).max(0.0);
    let b = (1.0 - sigma.trace_re()).max(0.0);
    let f = (root_f + (a * b).sqrt()).powi(2);
    Ok(f.min(1.0))
}

/// Purified distance `P = sqrt(1 - F*)`.
pub fn purified_distance(rho: &Operator, sigma: &Operator) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((1.0 - f).max(0.0).sqrt())
}

/// Projector onto the support of a PSD operator.
pub fn support_projector(m: &Operator) -> Result<Operator> {
    let spec = eig_hermitian(m)?;
    Ok(spec.support_projector(SUPPORT_EIG, m.dims()))
}

/// True when `supp(rho)` is contained in `supp(sigma)` at the support
/// eigenvalue threshold.
pub fn support_contained(rho: &Operator, sigma: &Operator) -> Result<bool> {
    let pr = support_projector(rho)?;
    let ps = support_projector(sigma)?;
    // supp(rho) <= supp(sigma)  iff  tr(P_rho (1 - P_sigma)) ~ 0
    let leak = pr.pair_re(&Operator::identity(sigma.dims()).sub(&ps)?)?;
    Ok(leak < 1e-9)
}

// ---------------------------------------------------------------------------
// JSON schema: {"dims": [...], "re": [[...]], "im": [[...]]}, row-major.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                re[i][j] = self.mat[(i, j)].re;
                im[i][j] = self.mat[(i, j)].im;
            }
        }
        OperatorJson {
            dims: self.dims.clone(),
            re,
            im,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = OperatorJson::deserialize(deserializer)?;
        let d: usize = raw.dims.iter().product();
        if raw.re.len() != d || raw.im.len() != d || raw.re.iter().chain(raw.im.iter()).any(|r| r.len() != d) {
            return Err(D::Error::custom("operator rows do not match dims"));
        }
        let mat = DMatrix::from_fn(d, d, |i, j| C64::new(raw.re[i][j], raw.im[i][j]));
        Operator::new(mat, raw.dims).map_err(D::Error::custom)
    }
}

/// Computational basis ket |i> in dimension d.
pub fn basis_ket(d: usize, i: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d);
    v[i] = C64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> Operator {
        let mat = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        Operator::from_matrix(mat).unwrap()
    }

    /// Closed-form 2x2 Hermitian eigensolver used as an independent oracle.
    fn eig2_oracle(a: f64, b: C64, d: f64) -> (f64, f64) {
        let t = (a + d) / 2.0;
        let g = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        (t + g, t - g)
    }

    #[test]
    fn eig_identity() {
        let spec = eig_hermitian(&Operator::identity(&[2])).unwrap();
        assert_abs_diff_eq!(spec.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.values[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_diagonal_sorted() {
        let m = Operator::from_diag(&[1.0, 3.0], &[2]).unwrap();
        let spec = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(spec.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.values[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_pauli_x_matches_closed_form() {
        let spec = eig_hermitian(&pauli_x()).unwrap();
        let (hi, lo) = eig2_oracle(0.0, C64::new(1.0, 0.0), 0.0);
        assert_abs_diff_eq!(spec.values[0], hi, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.values[1], lo, epsilon = 1e-12);
        // eigenvectors are |+-> up to phase
        for k in 0..2 {
            let v = spec.vectors.column(k);
            assert_abs_diff_eq!(v[0].norm(), 1.0 / 2f64.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mat = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let m = Operator::from_matrix(mat).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = crate::qobj::seeded_rng(7);
        for _ in 0..50 {
            let d = 1 + (crate::qobj::rand_unit(&mut rng) * 16.0) as usize;
            let m = crate::qobj::random_hermitian(d, &mut rng);
            let spec = eig_hermitian(&m).unwrap();
            let rebuilt = spec.apply(|l| l, m.dims());
            let err = rebuilt.sub(&m).unwrap().frobenius_norm();
            assert!(err < 1e-10 * m.frobenius_norm().max(1.0), "err {}", err);
        }
    }

    #[test]
    fn mat_fn_log_identity_is_zero() {
        let m = mat_fn(&Operator::identity(&[2]), |l| l.log2(), true).unwrap();
        assert!(m.frobenius_norm() < 1e-12);
    }

    #[test]
    fn mat_fn_sqrt_diagonal() {
        let m = Operator::from_diag(&[4.0, 9.0], &[2]).unwrap();
        let r = mat_fn(&m, |l| l.powf(0.5), true).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix()[(1, 1)].re, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn mat_fn_log_on_support() {
        // scalar oracle: log2(1/2) = -1, 0 stays 0 on support
        let m = Operator::from_diag(&[0.5, 0.0], &[2]).unwrap();
        let r = mat_fn(&m, |l| l.log2(), true).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 0)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix()[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mat_fn_rejects_negative() {
        let m = Operator::from_diag(&[1.0, -1e-6], &[2]).unwrap();
        assert!(matches!(mat_fn(&m, |l| l.sqrt(), true), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn kron_identity_dims() {
        let i2 = Operator::identity(&[2]);
        let k = kron(&i2, &i2);
        assert_eq!(k.dims(), &[2, 2]);
        assert!(k.sub(&Operator::identity(&[2, 2])).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn partial_trace_product_state() {
        let zero = Operator::from_ket(&basis_ket(2, 0), &[2]).unwrap();
        let pair = kron(&zero, &zero);
        let red = partial_trace(&pair, &[0]).unwrap();
        assert!(red.sub(&zero).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn partial_trace_bell_state() {
        let mut v = DVector::zeros(4);
        v[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        v[3] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let bell = Operator::from_ket(&v, &[2, 2]).unwrap();
        for keep in [&[0usize][..], &[1usize][..]] {
            let red = partial_trace(&bell, keep).unwrap();
            let half = Operator::identity(&[2]).scale(0.5);
            assert!(red.sub(&half).unwrap().frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn partial_trace_of_kron_factorizes() {
        let mut rng = crate::qobj::seeded_rng(11);
        let a = crate::qobj::random_density(3, 3, &mut rng);
        let b = crate::qobj::random_density(2, 2, &mut rng);
        let joint = kron(&a, &b);
        let red = partial_trace(&joint, &[0]).unwrap();
        let expect = a.scale(b.trace_re());
        assert!(red.sub(&expect).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn trace_norm_orthogonal_pure() {
        let p0 = Operator::from_ket(&basis_ket(2, 0), &[2]).unwrap();
        let p1 = Operator::from_ket(&basis_ket(2, 1), &[2]).unwrap();
        let diff = p0.sub(&p1).unwrap();
        assert_abs_diff_eq!(trace_norm(&diff), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_self_is_one() {
        let mut rng = crate::qobj::seeded_rng(3);
        let rho = crate::qobj::random_density(3, 2, &mut rng);
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_zero_plus_half() {
        // overlap oracle: |<0|+>|^2 = 1/2
        let p0 = Operator::from_ket(&basis_ket(2, 0), &[2]).unwrap();
        let mut plus = DVector::zeros(2);
        plus[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        plus[1] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let pp = Operator::from_ket(&plus, &[2]).unwrap();
        assert_abs_diff_eq!(fidelity(&p0, &pp).unwrap(), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_symmetry_and_triangle() {
        let mut rng = crate::qobj::seeded_rng(5);
        for _ in 0..25 {
            let a = crate::qobj::random_density(3, 3, &mut rng);
            let b = crate::qobj::random_density(3, 2, &mut rng);
            let c = crate::qobj::random_density(3, 1, &mut rng);
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            assert_abs_diff_eq!(fab, fba, epsilon = 1e-10);
            let pab = purified_distance(&a, &b).unwrap();
            let pbc = purified_distance(&b, &c).unwrap();
            let pac = purified_distance(&a, &c).unwrap();
            assert!(pac <= pab + pbc + 1e-9);
        }
    }

    #[test]
    fn permute_round_trip() {
        let mut rng = crate::qobj::seeded_rng(13);
        let a = crate::qobj::random_density(2, 2, &mut rng);
        let b = crate::qobj::random_density(3, 3, &mut rng);
        let ab = kron(&a, &b);
        let ba = permute_systems(&ab, &[1, 0]).unwrap();
        let expect = kron(&b, &a);
        assert!(ba.sub(&expect).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn partial_transpose_involution() {
        let mut rng = crate::qobj::seeded_rng(17);
        let m = crate::qobj::random_density(4, 4, &mut rng).with_dims(vec![2, 2]).unwrap();
        let pt = partial_transpose(&m, &[1]).unwrap();
        let back = partial_transpose(&pt, &[1]).unwrap();
        assert!(back.sub(&m).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn operator_json_round_trip() {
        let mut rng = crate::qobj::seeded_rng(19);
        let m = crate::qobj::random_density(4, 2, &mut rng).with_dims(vec![2, 2]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back.dims(), m.dims());
        assert!(back.sub(&m).unwrap().frobenius_norm() < 1e-15);
    }
}
