//! Seeded random states, derivatives and weights for checks and tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::model::{bloch_to_state, norm3, ModelPoint};

/// Smallest eigenvalue floor of randomly drawn states.
pub const SPECTRUM_FLOOR: f64 = 0.05;

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_complex_matrix(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

/// Unitary from Gram–Schmidt orthonormalisation of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let mut m = random_complex_matrix(rng, d);
    for j in 0..d {
        for k in 0..j {
            let proj = m.column(k).dotc(&m.column(j));
            let col_k = m.column(k).clone_owned();
            m.column_mut(j).axpy(-proj, &col_k, Complex64::new(1.0, 0.0));
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    m
}

/// Spectrum `p_j = floor + (1 − d·floor) u_j / Σu` with `u_j` uniform.
pub fn random_spectrum(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = u.iter().sum();
    let spread = 1.0 - d as f64 * SPECTRUM_FLOOR;
    u.iter().map(|x| SPECTRUM_FLOOR + spread * x / total).collect()
}

/// Full-rank state with a random spectrum in a random basis.
pub fn random_state(rng: &mut impl Rng, d: usize) -> HermitianMatrix {
    let spectrum = random_spectrum(rng, d);
    let u = random_unitary(rng, d);
    HermitianMatrix::from_diagonal(&spectrum).conjugate_by(&u)
}

/// Traceless Hermitian matrix with Gaussian entries.
pub fn random_traceless_hermitian(rng: &mut impl Rng, d: usize) -> HermitianMatrix {
    let a = random_complex_matrix(rng, d);
    let mut h = (&a + a.adjoint()).unscale(2.0);
    let shift = h.trace() / d as f64;
    for k in 0..d {
        h[(k, k)] -= shift;
    }
    HermitianMatrix::new(h).expect("finite square matrix")
}

fn check_counts(d: usize, n: usize, max: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    if n == 0 || n > max {
        return Err(Error::InvalidParameter(format!(
            "parameter count {n} must be between 1 and {max} for dimension {d}"
        )));
    }
    Ok(())
}

/// Generic regular model point: random full-rank state and `n` random
/// traceless derivatives. Draws again (up to ten times) when the derivatives
/// come out linearly dependent.
pub fn random_point(rng: &mut impl Rng, d: usize, n: usize) -> Result<ModelPoint> {
    check_counts(d, n, d * d - 1)?;
    let mut last = None;
    for _ in 0..10 {
        let rho = random_state(rng, d);
        let drho = (0..n).map(|_| random_traceless_hermitian(rng, d).into_inner()).collect();
        match ModelPoint::new(vec![0.0; n], rho.into_inner(), drho) {
            Ok(p) => return Ok(p),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Point whose state and derivatives are simultaneously diagonal in a random
/// basis, so every score commutes with the state.
pub fn random_classical_point(rng: &mut impl Rng, d: usize, n: usize) -> Result<ModelPoint> {
    check_counts(d, n, d - 1)?;
    let mut last = None;
    for _ in 0..10 {
        let spectrum = random_spectrum(rng, d);
        let u = random_unitary(rng, d);
        let rho = HermitianMatrix::from_diagonal(&spectrum).conjugate_by(&u);
        let drho = (0..n)
            .map(|_| {
                let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
                let mean = v.iter().sum::<f64>() / d as f64;
                v.iter_mut().for_each(|x| *x -= mean);
                HermitianMatrix::from_diagonal(&v).conjugate_by(&u).into_inner()
            })
            .collect();
        match ModelPoint::new(vec![0.0; n], rho.into_inner(), drho) {
            Ok(p) => return Ok(p),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Random Bloch vector with norm drawn uniformly from `[r_min, r_max]`.
pub fn random_bloch_vector(rng: &mut impl Rng, r_min: f64, r_max: f64) -> [f64; 3] {
    let mut v = [gaussian(rng), gaussian(rng), gaussian(rng)];
    let norm = norm3(&v).max(1e-12);
    let r = r_min + (r_max - r_min) * rng.random::<f64>();
    v.iter_mut().for_each(|x| *x *= r / norm);
    v
}

/// Qubit point given by a Bloch vector and the Bloch-space tangent vectors.
pub fn qubit_point(s: &[f64; 3], tangents: &[[f64; 3]]) -> Result<ModelPoint> {
    let rho = bloch_to_state(s)?;
    let [sx, sy, sz] = crate::linalg::pauli();
    let drho = tangents
        .iter()
        .map(|t| (sx.as_matrix() * Complex64::from(t[0]) + sy.as_matrix() * Complex64::from(t[1]) + sz.as_matrix() * Complex64::from(t[2])).unscale(2.0))
        .collect();
    ModelPoint::new(vec![0.0; tangents.len()], rho.into_inner(), drho)
}

/// Random qubit point: Bloch norm in `[0.1, 0.9]` and `n` Gaussian tangent vectors.
pub fn random_qubit_point(rng: &mut impl Rng, n: usize) -> Result<([f64; 3], Vec<[f64; 3]>, ModelPoint)> {
    check_counts(2, n, 3)?;
    let mut last = None;
    for _ in 0..10 {
        let s = random_bloch_vector(rng, 0.1, 0.9);
        let tangents: Vec<[f64; 3]> = (0..n).map(|_| [gaussian(rng), gaussian(rng), gaussian(rng)]).collect();
        match qubit_point(&s, &tangents) {
            Ok(p) => return Ok((s, tangents, p)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Symmetric positive-definite weight `AAᵀ/n + 0.1·I`.
pub fn random_weight(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| gaussian(rng));
    (&a * a.transpose()).unscale(n as f64) + DMatrix::identity(n, n).scale(0.1)
}
