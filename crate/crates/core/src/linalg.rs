//! Dense complex-matrix primitives for the operator calculus on full-rank states.
//!
//! Most formulas here are evaluated in the eigenbasis of the state, where the
//! SLD equation, the RLD equation and the commutation operator all act
//! element-wise. [`StateEigensystem`] caches that basis.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Smallest eigenvalue a state may have and still count as full rank.
pub const RANK_THRESHOLD: f64 = 1e-10;

const JACOBI_THRESHOLD: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative Frobenius residual `‖a − b‖ / max(1, ‖a‖, ‖b‖)`.
pub fn residual(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = 1f64.max(a.norm()).max(b.norm());
    (a - b).norm() / scale
}

/// Real-matrix version of [`residual`].
pub fn residual_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = 1f64.max(a.norm()).max(b.norm());
    (a - b).norm() / scale
}

pub fn to_complex(a: &DMatrix<f64>) -> ComplexMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(a: &ComplexMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}

pub fn imag_part(a: &ComplexMatrix) -> DMatrix<f64> {
    a.map(|z| z.im)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

fn check_square(a: &ComplexMatrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

fn check_same(a: &ComplexMatrix, d: usize, what: &str) -> Result<()> {
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {d}x{d}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// A complex square matrix equal to its conjugate transpose.
///
/// Construction symmetrizes `(A + A†)/2`, so the Hermitian property holds
/// exactly rather than to round-off.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        check_square(&a, "Hermitian matrix")?;
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrize(a))
    }

    fn symmetrize(a: ComplexMatrix) -> Self {
        let adj = a.adjoint();
        let mut h = (a + adj).unscale(2.0);
        for k in 0..h.nrows() {
            h[(k, k)].im = 0.0;
        }
        HermitianMatrix(h)
    }

    pub fn from_real(a: &DMatrix<f64>) -> Result<Self> {
        Self::new(to_complex(a))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (k, &x) in diag.iter().enumerate() {
            m[(k, k)] = Complex64::new(x, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn identity(d: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(self.0.scale(s))
    }

    /// `U · self · U†`, which stays Hermitian for any `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::symmetrize(u * &self.0 * u.adjoint())
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// The 2x2 Pauli matrices σx, σy, σz.
pub fn pauli() -> [HermitianMatrix; 3] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let z = c(0.0, 0.0);
    [
        HermitianMatrix(ComplexMatrix::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z])),
        HermitianMatrix(ComplexMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z])),
        HermitianMatrix(ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(-1.0, 0.0)])),
    ]
}

/// Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix,
/// by cyclic complex Jacobi rotations.
pub fn hermitian_eigensystem(a: &HermitianMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let d = a.dim();
    let mut m = a.as_matrix().clone();
    let mut u = ComplexMatrix::identity(d, d);
    let scale = m.norm();

    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..d {
            for q in 0..d {
                if p != q {
                    s += m[(p, q)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= JACOBI_THRESHOLD * scale || off == 0.0 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NotConverged { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut m, &mut u, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &u.column(k));
    }
    Ok((values, vectors))
}

/// One Jacobi rotation annihilating the (p, q) entry: a phase rotation making
/// the entry real, followed by a real Givens rotation.
fn rotate(m: &mut ComplexMatrix, u: &mut ComplexMatrix, p: usize, q: usize) {
    let b = m[(p, q)];
    let abs_b = b.norm();
    if abs_b == 0.0 {
        return;
    }
    let phase = b / abs_b;
    let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
    let tau = (aqq - app) / (2.0 * abs_b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // V restricted to (p, q): diag(1, conj(phase)) · [[c, s], [-s, c]]
    let vpp = Complex64::new(c, 0.0);
    let vpq = Complex64::new(s, 0.0);
    let vqp = -phase.conj() * s;
    let vqq = phase.conj() * c;

    let d = m.nrows();
    for k in 0..d {
        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = mkp * vpp + mkq * vqp;
        m[(k, q)] = mkp * vpq + mkq * vqq;
    }
    for k in 0..d {
        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = vpp.conj() * mpk + vqp.conj() * mqk;
        m[(q, k)] = vpq.conj() * mpk + vqq.conj() * mqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
    for k in 0..d {
        let (ukp, ukq) = (u[(k, p)], u[(k, q)]);
        u[(k, p)] = ukp * vpp + ukq * vqp;
        u[(k, q)] = ukp * vpq + ukq * vqq;
    }
}

/// `f(A) = U f(Λ) U†` for a Hermitian `A` and real scalar function `f`.
pub fn hermitian_function(a: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let (values, u) = hermitian_eigensystem(a)?;
    let d = values.len();
    let mut diag = ComplexMatrix::zeros(d, d);
    for (k, &x) in values.iter().enumerate() {
        diag[(k, k)] = Complex64::new(f(x), 0.0);
    }
    HermitianMatrix::new(&u * diag * u.adjoint())
}

/// Inverse of a Hermitian matrix through its eigendecomposition, together
/// with the spectral condition number.
pub fn hermitian_inverse(a: &HermitianMatrix) -> Result<(HermitianMatrix, f64)> {
    let (values, u) = hermitian_eigensystem(a)?;
    let max = values.iter().fold(0f64, |m, x| m.max(x.abs()));
    let min = values.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < 1e15) {
        return Err(Error::Singular { condition });
    }
    let d = values.len();
    let mut diag = ComplexMatrix::zeros(d, d);
    for (k, &x) in values.iter().enumerate() {
        diag[(k, k)] = Complex64::new(1.0 / x, 0.0);
    }
    Ok((HermitianMatrix::new(&u * diag * u.adjoint())?, condition))
}

/// Smallest eigenvalue of `(A + A†)/2`.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let h = HermitianMatrix::new(a.clone())?;
    let (values, _) = hermitian_eigensystem(&h)?;
    Ok(values[0])
}

/// Spectral data of a full-rank state: eigenvalues `p_j` (ascending) and the
/// unitary whose columns are the matching eigenvectors.
#[derive(Clone, Debug)]
pub struct StateEigensystem {
    eigenvalues: Vec<f64>,
    basis: ComplexMatrix,
    rho: HermitianMatrix,
}

impl StateEigensystem {
    pub fn new(rho: &HermitianMatrix) -> Result<Self> {
        let (eigenvalues, basis) = hermitian_eigensystem(rho)?;
        let min = eigenvalues[0];
        if !(min > RANK_THRESHOLD) {
            return Err(Error::RankDeficient { min_eigenvalue: min });
        }
        Ok(StateEigensystem {
            eigenvalues,
            basis,
            rho: rho.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    /// `U† X U`
    pub fn to_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.basis.adjoint() * x * &self.basis
    }

    /// `U X U†`
    pub fn from_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.basis * x * self.basis.adjoint()
    }

    /// Apply `X_jk ↦ w(p_j, p_k) X_jk` in the eigenbasis.
    fn elementwise(&self, x: &ComplexMatrix, w: impl Fn(f64, f64) -> Complex64) -> ComplexMatrix {
        let mut y = self.to_eigenbasis(x);
        let p = &self.eigenvalues;
        for j in 0..p.len() {
            for k in 0..p.len() {
                y[(j, k)] *= w(p[j], p[k]);
            }
        }
        self.from_eigenbasis(&y)
    }

    pub fn inverse(&self) -> HermitianMatrix {
        let inv: Vec<f64> = self.eigenvalues.iter().map(|p| 1.0 / p).collect();
        HermitianMatrix::from_diagonal(&inv).conjugate_by(&self.basis)
    }
}

fn frobenius_dot(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    // Σ_jk conj(x_jk) y_jk = tr(x† y)
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// SLD inner product `½ tr ρ(Y X† + X† Y)`.
pub fn sld_inner(state: &StateEigensystem, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<Complex64> {
    let d = state.dim();
    check_same(x, d, "X")?;
    check_same(y, d, "Y")?;
    let rho = state.rho().as_matrix();
    // tr ρYX† = tr(X†ρY), tr ρX†Y = tr(X†Yρ)
    let sym = rho * y + y * rho;
    Ok(frobenius_dot(x, &sym) * 0.5)
}

/// RLD inner product `tr ρ Y X†`.
pub fn rld_inner(rho: &ComplexMatrix, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<Complex64> {
    let d = check_square(rho, "state")?;
    check_same(x, d, "X")?;
    check_same(y, d, "Y")?;
    Ok(frobenius_dot(x, &(rho * y)))
}

fn check_traceless(drho: &HermitianMatrix) -> Result<()> {
    let tr = drho.trace().re;
    if tr.abs() > 1e-10 * 1f64.max(drho.norm()) {
        return Err(Error::InvalidParameter(format!(
            "state derivative must be traceless, trace = {tr:e}"
        )));
    }
    Ok(())
}

/// Symmetric logarithmic derivative: the Hermitian `L` with `½(ρL + Lρ) = ∂ρ`,
/// given element-wise in the eigenbasis by `L_jk = 2 (∂ρ)_jk / (p_j + p_k)`.
pub fn solve_sld(state: &StateEigensystem, drho: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_same(drho, state.dim(), "state derivative")?;
    check_traceless(drho)?;
    let l = state.elementwise(drho, |pj, pk| Complex64::new(2.0 / (pj + pk), 0.0));
    HermitianMatrix::new(l)
}

/// Right logarithmic derivative `L̃ = ρ⁻¹ ∂ρ`.
pub fn solve_rld(state: &StateEigensystem, drho: &HermitianMatrix) -> Result<ComplexMatrix> {
    check_same(drho, state.dim(), "state derivative")?;
    // (ρ⁻¹∂ρ)_jk = (∂ρ)_jk / p_j in the eigenbasis
    Ok(state.elementwise(drho, |pj, _| Complex64::new(1.0 / pj, 0.0)))
}

/// Commutation operator: the `D(X)` with `[ρ, X] = i(ρD(X) + D(X)ρ)`, i.e.
/// `D(X)_jk = −i (p_j − p_k)/(p_j + p_k) X_jk` in the eigenbasis.
pub fn commutation_superop(state: &StateEigensystem, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_same(x, state.dim(), "X")?;
    Ok(state.elementwise(x, |pj, pk| Complex64::new(0.0, -(pj - pk) / (pj + pk))))
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == a.ncols() && residual(a, &a.adjoint()) < 1e-14 {
        if let Ok(h) = HermitianMatrix::new(a.clone()) {
            if let Ok((values, _)) = hermitian_eigensystem(&h) {
                return values.iter().map(|x| x.abs()).sum();
            }
        }
    }
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Orthonormal basis, in the canonical Hermitian ordering: diagonal units
/// `E_jj`, then `(E_jk + E_kj)/√2`, then `i(E_jk − E_kj)/√2` for `j < k`.
pub fn canonical_hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(j, j)] = Complex64::new(1.0, 0.0);
        basis.push(HermitianMatrix(m));
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(r, 0.0);
            m[(k, j)] = Complex64::new(r, 0.0);
            basis.push(HermitianMatrix(m));
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(0.0, r);
            m[(k, j)] = Complex64::new(0.0, -r);
            basis.push(HermitianMatrix(m));
        }
    }
    basis
}

/// Completes `spanners` to a basis of the Hermitian operators and returns the
/// `d² − len(spanners)` new elements, orthonormal under the SLD inner product
/// and orthogonal to every spanner.
///
/// Candidates are taken from [`canonical_hermitian_basis`]; at every step the
/// candidate with the largest component outside the current span is chosen
/// (lowest index on ties), which keeps the result deterministic.
pub fn sld_orthonormal_complement(
    state: &StateEigensystem,
    spanners: &[HermitianMatrix],
) -> Result<Vec<HermitianMatrix>> {
    let d = state.dim();
    let dim = d * d;
    for s in spanners {
        check_same(s, d, "spanner")?;
    }
    if spanners.len() > dim {
        return Err(Error::LinearDependence { min_eigenvalue: 0.0 });
    }
    let canon = canonical_hermitian_basis(d);

    // SLD metric in canonical coordinates
    let mut metric = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = sld_inner(state, &canon[a], &canon[b])?.re;
            metric[(a, b)] = v;
            metric[(b, a)] = v;
        }
    }
    let coords = |h: &HermitianMatrix| -> Vec<f64> {
        canon.iter().map(|e| frobenius_dot(e, h).re).collect()
    };
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for a in 0..dim {
            if u[a] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for b in 0..dim {
                row += metric[(a, b)] * v[b];
            }
            s += u[a] * row;
        }
        s
    };

    let span: Vec<Vec<f64>> = spanners.iter().map(coords).collect();
    let k = span.len();
    if k > 0 {
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                gram[(i, j)] = inner(&span[i], &span[j]);
            }
        }
        let (values, _) = hermitian_eigensystem(&HermitianMatrix::from_real(&gram)?)?;
        let max = values.iter().fold(0f64, |m, x| m.max(x.abs()));
        if !(values[0] > 1e-10 * 1f64.max(max)) {
            return Err(Error::LinearDependence { min_eigenvalue: values[0] });
        }
    }

    let project_out = |v: &mut Vec<f64>, q: &[Vec<f64>]| {
        // modified Gram-Schmidt, applied twice
        for _ in 0..2 {
            for e in q {
                let c = inner(e, v);
                for (x, y) in v.iter_mut().zip(e) {
                    *x -= c * y;
                }
            }
        }
    };
    let normalize = |v: &mut Vec<f64>| -> f64 {
        let n = inner(v, v).max(0.0).sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        n
    };

    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for s in &span {
        let mut v = s.clone();
        project_out(&mut v, &ortho);
        if normalize(&mut v) == 0.0 {
            return Err(Error::LinearDependence { min_eigenvalue: 0.0 });
        }
        ortho.push(v);
    }

    let mut remaining: Vec<usize> = (0..dim).collect();
    let mut out = Vec::with_capacity(dim - k);
    while ortho.len() < dim {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (pos, &a) in remaining.iter().enumerate() {
            let mut v = vec![0.0; dim];
            v[a] = 1.0;
            let n0 = inner(&v, &v).sqrt();
            project_out(&mut v, &ortho);
            let rel = inner(&v, &v).max(0.0).sqrt() / n0;
            if best.as_ref().is_none_or(|b| rel > b.1) {
                best = Some((pos, rel, v));
            }
        }
        let (pos, rel, mut v) = best.expect("candidates remain while span is incomplete");
        if !(rel > 1e-12) {
            return Err(Error::LinearDependence { min_eigenvalue: rel });
        }
        remaining.remove(pos);
        normalize(&mut v);
        let mut m = ComplexMatrix::zeros(d, d);
        for (c, e) in v.iter().zip(&canon) {
            m += e.as_matrix().scale(*c);
        }
        out.push(HermitianMatrix::new(m)?);
        ortho.push(v);
    }
    Ok(out)
}
