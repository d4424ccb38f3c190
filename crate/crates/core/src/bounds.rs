//! SLD, RLD and Holevo Cramér-Rao type bounds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::classify::classify_with;
use crate::error::{Error, Result};
use crate::infogeo::{analyze, InfoMatrices, ScoreSet};
use crate::linalg::{
    hermitian_eigensystem, hermitian_function, imag_part, real_part, rld_inner, sld_orthonormal_complement,
    to_complex, trace_norm, ComplexMatrix, HermitianMatrix, I,
};
use crate::model::ModelPoint;

/// Symmetric positive-definite weight with its cached square root.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
    sqrt: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() != w.ncols() || w.nrows() == 0 {
            return Err(Error::InvalidWeight(format!("weight must be square, got {}×{}", w.nrows(), w.ncols())));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidWeight("weight has non-finite entries".into()));
        }
        let asym = (&w - w.transpose()).norm();
        if asym > 1e-10 * 1f64.max(w.norm()) {
            return Err(Error::InvalidWeight(format!("weight is not symmetric (asymmetry {asym:e})")));
        }
        let w = (&w + w.transpose()).unscale(2.0);
        let h = HermitianMatrix::from_real(&w)?;
        let (values, _) = hermitian_eigensystem(&h)?;
        if !(values[0] > 0.0) {
            return Err(Error::InvalidWeight(format!(
                "weight is not positive definite (smallest eigenvalue {:e})",
                values[0]
            )));
        }
        let sqrt = real_part(hermitian_function(&h, f64::sqrt)?.as_matrix());
        Ok(WeightMatrix { w, sqrt })
    }

    pub fn identity(n: usize) -> Self {
        WeightMatrix { w: DMatrix::identity(n, n), sqrt: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    /// `c·W` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidWeight(format!("scale must be positive, got {c}")));
        }
        Ok(WeightMatrix { w: self.w.scale(c), sqrt: self.sqrt.scale(c.sqrt()) })
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::Dimension(format!("weight is {0}×{0}, model has {n} parameters", self.dim())));
        }
        Ok(())
    }
}

/// `Tr |W^½ S W^½|` for real antisymmetric `S`, via the Hermitian matrix `i·W^½SW^½`.
fn weighted_trace_norm(w: &WeightMatrix, s: &DMatrix<f64>) -> f64 {
    let m = w.sqrt() * s * w.sqrt();
    trace_norm(&(to_complex(&m) * I))
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// `Tr(W G⁻¹)`.
pub fn sld_cr_bound(mats: &InfoMatrices, w: &WeightMatrix) -> Result<f64> {
    w.check(mats.g.nrows())?;
    Ok(trace_product(w.matrix(), &mats.g_inv))
}

/// `Tr(W Re G̃⁻¹) + Tr|W^½ Im G̃⁻¹ W^½|`.
pub fn rld_cr_bound(mats: &InfoMatrices, w: &WeightMatrix) -> Result<f64> {
    w.check(mats.gt.nrows())?;
    Ok(trace_product(w.matrix(), &real_part(&mats.gt_inv)) + weighted_trace_norm(w, &imag_part(&mats.gt_inv)))
}

/// `h[H|W] = Tr(W Re H) + Tr|W^½ Im H W^½|` for a Hermitian `H`.
pub fn holevo_function(h: &ComplexMatrix, w: &WeightMatrix) -> Result<f64> {
    w.check(h.nrows())?;
    let h = HermitianMatrix::new(h.clone())?;
    Ok(trace_product(w.matrix(), &real_part(&h)) + weighted_trace_norm(w, &imag_part(&h)))
}

/// `H_ij = tr(ρ Xʲ Xⁱ)`, the RLD Gram matrix of the collection.
pub fn holevo_matrix(point: &ModelPoint, xs: &[HermitianMatrix]) -> Result<ComplexMatrix> {
    let n = xs.len();
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = rld_inner(point.rho(), &xs[i], &xs[j])?;
        }
    }
    Ok(HermitianMatrix::new(h)?.into_inner())
}

/// `h_θ[X|W]` for a collection of Hermitian operators.
pub fn holevo_objective(point: &ModelPoint, xs: &[HermitianMatrix], w: &WeightMatrix) -> Result<f64> {
    if xs.len() != point.param_count() {
        return Err(Error::Dimension(format!(
            "expected {} operators, got {}",
            point.param_count(),
            xs.len()
        )));
    }
    holevo_function(&holevo_matrix(point, xs)?, w)
}

/// Residuals of the locally unbiased constraints `tr ρXⁱ = 0`, `tr ∂ᵢρ Xʲ = δⁱʲ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Feasibility {
    pub unbiased: f64,
    pub dual: f64,
}

impl Feasibility {
    pub fn max(&self) -> f64 {
        self.unbiased.max(self.dual)
    }
}

pub fn check_feasible(point: &ModelPoint, xs: &[HermitianMatrix]) -> Result<Feasibility> {
    let n = point.param_count();
    if xs.len() != n {
        return Err(Error::Dimension(format!("expected {n} operators, got {}", xs.len())));
    }
    let (mut unbiased, mut dual) = (0f64, 0f64);
    for (j, x) in xs.iter().enumerate() {
        if x.dim() != point.dim() {
            return Err(Error::Dimension(format!("operator is {0}×{0}, state is {1}×{1}", x.dim(), point.dim())));
        }
        unbiased = unbiased.max((point.rho().as_matrix() * x.as_matrix()).trace().norm());
        for (i, d) in point.drho().iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            dual = dual.max(((d.as_matrix() * x.as_matrix()).trace() - delta).norm());
        }
    }
    Ok(Feasibility { unbiased, dual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolevoMethod {
    /// Closed form when the model is AC or D-invariant at the point, numeric otherwise.
    Auto,
    /// Always run the optimizer.
    Numeric,
    /// Closed form only; fails when the model is in neither class.
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    Analytic,
    CentralDifference,
}

#[derive(Clone, Debug)]
pub struct HolevoOptions {
    pub method: HolevoMethod,
    /// Tolerance used to decide the closed-form fast paths.
    pub tol_class: f64,
    pub mu_start: f64,
    pub mu_end: f64,
    pub mu_factor: f64,
    /// Stage stops when `‖∇f‖ < grad_tol·(1 + |f|)`.
    pub grad_tol: f64,
    pub max_evaluations: usize,
    pub gradient: GradientMode,
}

impl Default for HolevoOptions {
    fn default() -> Self {
        HolevoOptions {
            method: HolevoMethod::Auto,
            tol_class: crate::classify::DEFAULT_TOL,
            mu_start: 1e-2,
            mu_end: 1e-10,
            mu_factor: 0.1,
            grad_tol: 1e-7,
            max_evaluations: 100_000,
            gradient: GradientMode::Analytic,
        }
    }
}

/// How the returned value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvedBy {
    AsymptoticallyClassical,
    DInvariant,
    Optimizer,
}

/// Progress of one smoothing level.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothingStage {
    pub mu: f64,
    pub iterations: usize,
    pub smoothed_value: f64,
    pub best_value: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct HolevoSolution {
    /// Optimal operators `Xⁱ`.
    pub x: Vec<HermitianMatrix>,
    /// `H_θ[X]`.
    pub h: ComplexMatrix,
    pub value: f64,
    /// Coefficients of `Xⁱ − Lⁱ` in the complement basis (`n × (d² − n − 1)`).
    pub coefficients: DMatrix<f64>,
    pub feasibility: Feasibility,
    pub sld_bound: f64,
    pub rld_bound: f64,
    /// `value − max(C^S, C^R)`.
    pub gap_vs_lower: f64,
    /// `h` at the SLD duals, an upper bound on the infimum.
    pub dual_objective: f64,
    pub solved_by: SolvedBy,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub smoothing: Vec<SmoothingStage>,
}

/// `H(C) = Z + QCᵀ + CQ† + CRCᵀ` for `Xⁱ = Lⁱ + Σ_a C_ia B_a`.
struct Quadratic {
    z: ComplexMatrix,
    q: ComplexMatrix,
    r: ComplexMatrix,
}

impl Quadratic {
    fn h(&self, c: &DMatrix<f64>) -> ComplexMatrix {
        let c = to_complex(c);
        let qc = &self.q * c.transpose();
        let mut h = &self.z + &qc + qc.adjoint() + &c * &self.r * c.transpose();
        // exact Hermitian symmetry
        h = (&h + h.adjoint()).unscale(2.0);
        h
    }
}

/// Smoothed trace norm `Σ √(λ² + μ²)` of `i·S` and its gradient with respect to `S`.
fn smoothed_trace_norm(s: &DMatrix<f64>, mu: f64) -> (f64, DMatrix<f64>) {
    let m = HermitianMatrix::new(to_complex(s) * I).expect("finite matrix");
    let (values, v) = hermitian_eigensystem(&m).expect("small Hermitian matrix");
    let n = values.len();
    let mut value = 0.0;
    let mut deriv = ComplexMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        let root = (lam * lam + mu * mu).sqrt();
        value += root;
        deriv[(k, k)] = Complex64::new(if root > 0.0 { lam / root } else { 0.0 }, 0.0);
    }
    // d tr g(iS) = tr(i V g'(Λ) V† dS)
    let m = &v * deriv * v.adjoint() * I;
    (value, real_part(&m.transpose()))
}

struct Objective<'a> {
    quad: &'a Quadratic,
    w: &'a WeightMatrix,
    evaluations: usize,
}

impl Objective<'_> {
    fn true_value(&mut self, c: &DMatrix<f64>) -> f64 {
        self.evaluations += 1;
        let h = self.quad.h(c);
        trace_product(self.w.matrix(), &real_part(&h)) + weighted_trace_norm(self.w, &imag_part(&h))
    }

    fn smoothed(&mut self, c: &DMatrix<f64>, mu: f64) -> f64 {
        self.evaluations += 1;
        let h = self.quad.h(c);
        let s = self.w.sqrt() * imag_part(&h) * self.w.sqrt();
        trace_product(self.w.matrix(), &real_part(&h)) + smoothed_trace_norm(&s, mu).0
    }

    fn gradient(&mut self, c: &DMatrix<f64>, mu: f64, mode: GradientMode) -> DMatrix<f64> {
        match mode {
            GradientMode::Analytic => {
                self.evaluations += 1;
                let h = self.quad.h(c);
                let a = self.w.sqrt();
                let s = a * imag_part(&h) * a;
                let gs = smoothed_trace_norm(&s, mu).1;
                let g_im = a * gs * a;
                // df = Re Σ conj(Γ_ij) dH_ij with Γ = W + i·∂f/∂(Im H)
                let gamma = to_complex(self.w.matrix()) + to_complex(&g_im) * I;
                let cc = to_complex(c);
                let k = self.quad.q.adjoint() + &self.quad.r * cc.transpose();
                let j = &self.quad.q + &cc * &self.quad.r;
                real_part(&(gamma.conjugate() * k.transpose() + gamma.adjoint() * j))
            }
            GradientMode::CentralDifference => {
                let mut g = DMatrix::zeros(c.nrows(), c.ncols());
                for idx in 0..c.len() {
                    let step = 1e-6 * 1f64.max(c[idx].abs());
                    let mut plus = c.clone();
                    let mut minus = c.clone();
                    plus[idx] += step;
                    minus[idx] -= step;
                    g[idx] = (self.smoothed(&plus, mu) - self.smoothed(&minus, mu)) / (2.0 * step);
                }
                g
            }
        }
    }
}

/// Minimizes `h` over `Xⁱ = Lⁱ + Σ_a C_ia B_a` by gradient descent on the
/// smoothed objective with decreasing smoothing. Returns the best coefficients
/// by the unsmoothed objective.
fn minimize(quad: &Quadratic, w: &WeightMatrix, n: usize, m: usize, opts: &HolevoOptions) -> Minimum {
    let mut obj = Objective { quad, w, evaluations: 0 };
    let mut c = DMatrix::<f64>::zeros(n, m);
    let mut best_c = c.clone();
    let mut best = obj.true_value(&c);
    let mut stages = Vec::new();
    let mut iterations = 0;
    let mut exhausted = false;
    let mut mu = opts.mu_start;

    while mu >= opts.mu_end * (1.0 - 1e-9) && m > 0 {
        let mut f = obj.smoothed(&c, mu);
        let mut g = obj.gradient(&c, mu, opts.gradient);
        let mut prev: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
        let mut stage_iters = 0;
        loop {
            let gnorm = g.norm();
            if gnorm < opts.grad_tol * (1.0 + f.abs()) {
                break;
            }
            if obj.evaluations >= opts.max_evaluations {
                exhausted = true;
                break;
            }
            // Barzilai-Borwein initial step, backtracked until Armijo holds
            let mut step = match &prev {
                Some((dc, dg)) if dc.dot(dg) > 0.0 => dc.dot(dc) / dc.dot(dg),
                _ => 1.0 / gnorm.max(1.0),
            };
            let mut accepted = None;
            while step * gnorm > 1e-16 * (1.0 + c.norm()) {
                let trial = &c - &g * step;
                let ft = obj.smoothed(&trial, mu);
                if ft <= f - 1e-4 * step * gnorm * gnorm {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= 0.5;
                if obj.evaluations >= opts.max_evaluations {
                    break;
                }
            }
            let Some((next, fnext)) = accepted else { break };
            let gnext = obj.gradient(&next, mu, opts.gradient);
            prev = Some((&next - &c, &gnext - &g));
            c = next;
            f = fnext;
            g = gnext;
            stage_iters += 1;
            let h = obj.true_value(&c);
            if h < best {
                best = h;
                best_c = c.clone();
            }
        }
        iterations += stage_iters;
        stages.push(SmoothingStage {
            mu,
            iterations: stage_iters,
            smoothed_value: f,
            best_value: best,
            gradient_norm: g.norm(),
        });
        if exhausted {
            break;
        }
        mu *= opts.mu_factor;
    }
    Minimum { c: best_c, iterations, evaluations: obj.evaluations, converged: !exhausted, stages }
}

struct Minimum {
    c: DMatrix<f64>,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    stages: Vec<SmoothingStage>,
}

fn operators(scores: &ScoreSet, basis: &[HermitianMatrix], c: &DMatrix<f64>) -> Result<Vec<HermitianMatrix>> {
    scores
        .sld_duals
        .iter()
        .enumerate()
        .map(|(i, dual)| {
            let mut x = dual.as_matrix().clone();
            for (a, b) in basis.iter().enumerate() {
                x += b.as_matrix() * Complex64::from(c[(i, a)]);
            }
            HermitianMatrix::new(x)
        })
        .collect()
}

/// Holevo bound at a point.
pub fn holevo_bound(point: &ModelPoint, w: &WeightMatrix, opts: &HolevoOptions) -> Result<HolevoSolution> {
    let (scores, mats) = analyze(point)?;
    holevo_bound_with(point, &scores, &mats, w, opts)
}

/// Holevo bound with precomputed scores and information matrices.
pub fn holevo_bound_with(
    point: &ModelPoint,
    scores: &ScoreSet,
    mats: &InfoMatrices,
    w: &WeightMatrix,
    opts: &HolevoOptions,
) -> Result<HolevoSolution> {
    let n = point.param_count();
    w.check(n)?;
    let sld_bound = sld_cr_bound(mats, w)?;
    let rld_bound = rld_cr_bound(mats, w)?;
    let lower = sld_bound.max(rld_bound);
    let dual_objective = holevo_function(&mats.z, w)?;

    let closed = if opts.method == HolevoMethod::Numeric {
        None
    } else {
        let report = classify_with(point, scores, mats, opts.tol_class);
        if report.asymptotically_classical.verdict {
            Some((SolvedBy::AsymptoticallyClassical, sld_bound))
        } else if report.d_invariant.verdict {
            Some((SolvedBy::DInvariant, rld_bound))
        } else if opts.method == HolevoMethod::ClosedForm {
            return Err(Error::Unsupported(
                "no closed form: the model is neither asymptotically classical nor D-invariant at this point".into(),
            ));
        } else {
            None
        }
    };
    if let Some((solved_by, value)) = closed {
        let x = scores.sld_duals.clone();
        return Ok(HolevoSolution {
            feasibility: check_feasible(point, &x)?,
            x,
            h: mats.z.clone(),
            value,
            coefficients: DMatrix::zeros(n, point.dim() * point.dim() - n - 1),
            sld_bound,
            rld_bound,
            gap_vs_lower: value - lower,
            dual_objective,
            solved_by,
            iterations: 0,
            evaluations: 0,
            converged: true,
            smoothing: vec![],
        });
    }

    let mut spanners = vec![HermitianMatrix::identity(point.dim())];
    spanners.extend(scores.slds.iter().cloned());
    let basis = sld_orthonormal_complement(point.eig(), &spanners)?;
    let m = basis.len();
    let mut q = ComplexMatrix::zeros(n, m);
    for i in 0..n {
        for a in 0..m {
            q[(i, a)] = rld_inner(point.rho(), &scores.sld_duals[i], &basis[a])?;
        }
    }
    let mut r = ComplexMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            r[(a, b)] = rld_inner(point.rho(), &basis[a], &basis[b])?;
        }
    }
    let quad = Quadratic { z: mats.z.clone(), q, r };
    let min = minimize(&quad, w, n, m, opts);
    let x = operators(scores, &basis, &min.c)?;
    let h = holevo_matrix(point, &x)?;
    let value = holevo_function(&h, w)?;
    Ok(HolevoSolution {
        feasibility: check_feasible(point, &x)?,
        x,
        h,
        value,
        coefficients: min.c,
        sld_bound,
        rld_bound,
        gap_vs_lower: value - lower,
        dual_objective,
        solved_by: SolvedBy::Optimizer,
        iterations: min.iterations,
        evaluations: min.evaluations,
        converged: min.converged,
        smoothing: min.stages,
    })
}
