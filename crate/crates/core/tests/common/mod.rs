//! Reference computations for the integration tests. These avoid the
//! library's eigenbasis formulas: logarithmic derivatives come from dense
//! linear solves, trace norms from SVD, and the Holevo minimum from a direct
//! search over the affine feasible set.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Solves `½(ρL + Lρ) = ∂ρ` through the vectorized Lyapunov equation
/// `(I ⊗ ρ + ρᵀ ⊗ I) vec(L) = 2 vec(∂ρ)`.
pub fn sld(rho: &CMat, drho: &CMat) -> CMat {
    let d = rho.nrows();
    let id = CMat::identity(d, d);
    let op = id.kronecker(rho) + rho.transpose().kronecker(&id);
    let rhs = DMatrix::from_iterator(d * d, 1, drho.iter().map(|z| z * 2.0));
    let x = op.lu().solve(&rhs).expect("Lyapunov operator is invertible for full-rank states");
    CMat::from_iterator(d, d, x.iter().copied())
}

pub fn rld(rho: &CMat, drho: &CMat) -> CMat {
    rho.clone().try_inverse().expect("full-rank state") * drho
}

/// `(G, G̃)` from the definitions `g_ij = tr(∂ᵢρ L_j)`, `g̃_ij = tr(ρ L̃_j L̃_i†)`.
pub fn fisher(rho: &CMat, drho: &[CMat]) -> (DMatrix<f64>, CMat) {
    let n = drho.len();
    let slds: Vec<CMat> = drho.iter().map(|d| sld(rho, d)).collect();
    let rlds: Vec<CMat> = drho.iter().map(|d| rld(rho, d)).collect();
    let g = DMatrix::from_fn(n, n, |i, j| (&drho[i] * &slds[j]).trace().re);
    let gt = CMat::from_fn(n, n, |i, j| (rho * &rlds[j] * rlds[i].adjoint()).trace());
    (g, gt)
}

pub fn trace_norm(a: &CMat) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

pub fn real_sqrt_spd(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = w.clone().symmetric_eigen();
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    &eig.eigenvectors * root * eig.eigenvectors.transpose()
}

fn to_c(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// `Tr(W Re H) + Tr|W^½ Im H W^½|`.
pub fn holevo_function(h: &CMat, w: &DMatrix<f64>) -> f64 {
    let re = h.map(|z| z.re);
    let im = h.map(|z| z.im);
    let root = real_sqrt_spd(w);
    (w * re).trace() + trace_norm(&to_c(&(&root * im * &root)))
}

/// `Tr(W G⁻¹)` and `Tr(W Re G̃⁻¹) + Tr|W^½ Im G̃⁻¹ W^½|`.
pub fn sld_and_rld_bounds(rho: &CMat, drho: &[CMat], w: &DMatrix<f64>) -> (f64, f64) {
    let (g, gt) = fisher(rho, drho);
    let g_inv = g.try_inverse().expect("invertible SLD Fisher matrix");
    let gt_inv = gt.try_inverse().expect("invertible RLD Fisher matrix");
    ((w * g_inv).trace(), holevo_function(&gt_inv, w))
}

/// Hermitian basis with real coordinates: `E_jj`, `E_jk + E_kj`, `i(E_jk − E_kj)`.
fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = Vec::new();
    for j in 0..d {
        for k in 0..d {
            let mut m = CMat::zeros(d, d);
            if j == k {
                m[(j, j)] = c(1.0, 0.0);
            } else if j < k {
                m[(j, k)] = c(1.0, 0.0);
                m[(k, j)] = c(1.0, 0.0);
            } else {
                m[(k, j)] = c(0.0, 1.0);
                m[(j, k)] = c(0.0, -1.0);
            }
            out.push(m);
        }
    }
    out
}

/// Holevo bound by direct search. The feasible set `{X : tr ρXⁱ = 0,
/// tr ∂ⱼρ Xⁱ = δ}` is parameterized as a particular solution plus the null
/// space of the constraint matrix (from SVD), and `h` is minimized by
/// compass search on a smoothed objective with the smoothing driven to zero,
/// from several starting points.
pub fn holevo_search(rho: &CMat, drho: &[CMat], w: &DMatrix<f64>) -> f64 {
    let d = rho.nrows();
    let n = drho.len();
    let basis = hermitian_basis(d);
    let m = basis.len();
    // constraint rows: tr(ρ E_a), tr(∂ⱼρ E_a), all real for Hermitian arguments
    let mut a = DMatrix::<f64>::zeros(n + 1, m);
    for (k, e) in basis.iter().enumerate() {
        a[(0, k)] = (rho * e).trace().re;
        for j in 0..n {
            a[(j + 1, k)] = (&drho[j] * e).trace().re;
        }
    }
    let svd = a.clone().svd(true, true);
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12).count();
    assert_eq!(rank, n + 1, "constraints are independent for a regular model");
    let pinv = svd.pseudo_inverse(1e-12).expect("pseudo-inverse");
    // null space: orthogonal complement of the row space
    let q = a.transpose().qr().q();
    let row_space: Vec<nalgebra::DVector<f64>> = (0..n + 1).map(|k| q.column(k).clone_owned()).collect();
    let mut null: Vec<nalgebra::DVector<f64>> = Vec::new();
    for k in 0..m {
        let mut v = nalgebra::DVector::<f64>::zeros(m);
        v[k] = 1.0;
        for _ in 0..2 {
            for u in row_space.iter().chain(null.iter()) {
                let p = u.dot(&v);
                v -= u * p;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            null.push(v.clone());
        }
        if null.len() == m - n - 1 {
            break;
        }
    }
    let k = null.len();

    let particular: Vec<nalgebra::DVector<f64>> = (0..n)
        .map(|i| {
            let mut rhs = nalgebra::DVector::<f64>::zeros(n + 1);
            rhs[i + 1] = 1.0;
            &pinv * rhs
        })
        .collect();
    let ops = |coef: &[f64]| -> Vec<CMat> {
        (0..n)
            .map(|i| {
                let mut v = particular[i].clone();
                for (b, nb) in null.iter().enumerate() {
                    v += nb * coef[i * k + b];
                }
                let mut x = CMat::zeros(d, d);
                for (idx, e) in basis.iter().enumerate() {
                    x += e * c(v[idx], 0.0);
                }
                x
            })
            .collect()
    };
    let h_of = |coef: &[f64]| -> CMat {
        let xs = ops(coef);
        CMat::from_fn(n, n, |i, j| (rho * &xs[j] * &xs[i]).trace())
    };
    let root = to_c(&real_sqrt_spd(w));
    // trace norm replaced by Σ√(σ² + μ²) over singular values
    let smoothed = |coef: &[f64], mu: f64| -> f64 {
        let h = h_of(coef);
        let re = h.map(|z| z.re);
        let im = to_c(&h.map(|z| z.im));
        let s = (&root * im * &root).svd(false, false).singular_values;
        (w * re).trace() + s.iter().map(|x| (x * x + mu * mu).sqrt()).sum::<f64>()
    };

    let dim = n * k;
    let mut best = f64::INFINITY;
    for start in 0..3 {
        let mut x: Vec<f64> = (0..dim).map(|t| 0.3 * (((t * 7 + start * 3) % 5) as f64 - 2.0) * start as f64).collect();
        let mut mu = 0.1;
        let mut step = 1.0;
        while mu > 1e-10 {
            let mut fx = smoothed(&x, mu);
            while step > 1e-10 {
                let mut improved = false;
                for t in 0..dim {
                    for sign in [1.0, -1.0] {
                        let mut y = x.clone();
                        y[t] += sign * step;
                        let fy = smoothed(&y, mu);
                        if fy < fx {
                            x = y;
                            fx = fy;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            mu *= 0.1;
            step = 10.0 * mu.max(1e-6);
        }
        best = best.min(holevo_function(&h_of(&x), w));
    }
    best
}

/// SLD Fisher matrix of a qubit from its Bloch data:
/// `g_ij = ∂ᵢs·∂ⱼs + (s·∂ᵢs)(s·∂ⱼs)/(1 − |s|²)`.
pub fn bloch_sld_fisher(s: &[f64; 3], ds: &[[f64; 3]]) -> DMatrix<f64> {
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let r2 = dot(s, s);
    DMatrix::from_fn(ds.len(), ds.len(), |i, j| {
        dot(&ds[i], &ds[j]) + dot(s, &ds[i]) * dot(s, &ds[j]) / (1.0 - r2)
    })
}

/// Qutrit rotation model `U diag(λ, cλ, 1 − (1+c)λ) U†`, `U = exp(iθ²σ₁) ⊕ 1`,
/// and its two exact derivatives.
pub fn qutrit_model(c_param: f64, theta: [f64; 2]) -> (CMat, Vec<CMat>) {
    let (lam, phi) = (theta[0], theta[1]);
    let mut u = CMat::identity(3, 3);
    u[(0, 0)] = c(phi.cos(), 0.0);
    u[(1, 1)] = c(phi.cos(), 0.0);
    u[(0, 1)] = c(0.0, phi.sin());
    u[(1, 0)] = c(0.0, phi.sin());
    let diag = |v: [f64; 3]| CMat::from_diagonal(&nalgebra::DVector::from_iterator(3, v.iter().map(|x| c(*x, 0.0))));
    let rho = &u * diag([lam, c_param * lam, 1.0 - (1.0 + c_param) * lam]) * u.adjoint();
    let d1 = &u * diag([1.0, c_param, -(1.0 + c_param)]) * u.adjoint();
    let mut sigma = CMat::zeros(3, 3);
    sigma[(0, 1)] = c(1.0, 0.0);
    sigma[(1, 0)] = c(1.0, 0.0);
    let d2 = (&sigma * &rho - &rho * &sigma) * c(0.0, 1.0);
    (rho, vec![d1, d2])
}

pub fn bloch_state(s: &[f64; 3]) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(0.5 + 0.5 * s[2], 0.0), c(0.5 * s[0], -0.5 * s[1]), c(0.5 * s[0], 0.5 * s[1]), c(0.5 - 0.5 * s[2], 0.0)],
    )
}

pub fn bloch_tangent(v: &[f64; 3]) -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.5 * v[2], 0.0), c(0.5 * v[0], -0.5 * v[1]), c(0.5 * v[0], 0.5 * v[1]), c(-0.5 * v[2], 0.0)])
}
