//! Parametric families of full-rank states and their evaluation at a point.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigensystem, pauli, ComplexMatrix, HermitianMatrix, StateEigensystem, RANK_THRESHOLD,
};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

const REGULARITY_TOL: f64 = 1e-10;

/// A state, its coordinates and its partial derivatives at one point of a model.
#[derive(Clone, Debug)]
pub struct ModelPoint {
    theta: Vec<f64>,
    rho: HermitianMatrix,
    drho: Vec<HermitianMatrix>,
    eig: StateEigensystem,
}

impl ModelPoint {
    /// Builds a point, enforcing every regularity condition.
    pub fn new(theta: Vec<f64>, rho: ComplexMatrix, drho: Vec<ComplexMatrix>) -> Result<Self> {
        let report = validate_regularity(&rho, &drho);
        if !report.passed() {
            return Err(Error::Regularity {
                theta,
                failures: report.failures().join(", "),
            });
        }
        let rho = HermitianMatrix::new(rho)?;
        let drho = drho
            .into_iter()
            .map(HermitianMatrix::new)
            .collect::<Result<Vec<_>>>()?;
        let eig = StateEigensystem::new(&rho)?;
        Ok(ModelPoint { theta, rho, drho, eig })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn drho(&self) -> &[HermitianMatrix] {
        &self.drho
    }

    pub fn eig(&self) -> &StateEigensystem {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn param_count(&self) -> usize {
        self.drho.len()
    }

    /// The same point seen through a fixed unitary change of basis `U ρ U†`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let rho = self.rho.conjugate_by(u).into_inner();
        let drho = self.drho.iter().map(|d| d.conjugate_by(u).into_inner()).collect();
        ModelPoint::new(self.theta.clone(), rho, drho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub residual: f64,
}

impl Check {
    fn at_most(residual: f64, tol: f64) -> Self {
        Check { passed: residual <= tol, residual }
    }
}

/// Pass/fail per regularity condition. For positivity and independence the
/// residual is the smallest eigenvalue (of ρ and of the derivative Gram
/// matrix respectively) and must exceed `1e-10`.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub shape: Check,
    pub trace: Check,
    pub hermiticity: Check,
    pub positivity: Check,
    pub tracelessness: Check,
    pub independence: Check,
}

impl RegularityReport {
    pub fn passed(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.passed)
    }

    pub fn checks(&self) -> [(&'static str, Check); 6] {
        [
            ("shape", self.shape),
            ("trace", self.trace),
            ("hermiticity", self.hermiticity),
            ("positivity", self.positivity),
            ("tracelessness", self.tracelessness),
            ("independence", self.independence),
        ]
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks()
            .iter()
            .filter(|(_, c)| !c.passed)
            .map(|(name, c)| format!("{name} (residual {:e})", c.residual))
            .collect()
    }
}

/// Checks the regularity conditions on raw point data without constructing a
/// [`ModelPoint`]. Never fails; every problem is reported.
pub fn validate_regularity(rho: &ComplexMatrix, drho: &[ComplexMatrix]) -> RegularityReport {
    let d = rho.nrows();
    let shape_ok = rho.ncols() == d
        && d >= 2
        && !drho.is_empty()
        && drho.iter().all(|m| m.nrows() == d && m.ncols() == d)
        && rho.iter().chain(drho.iter().flat_map(|m| m.iter())).all(|z| z.re.is_finite() && z.im.is_finite());
    if !shape_ok {
        let fail = Check { passed: false, residual: f64::NAN };
        return RegularityReport {
            shape: fail,
            trace: fail,
            hermiticity: fail,
            positivity: fail,
            tracelessness: fail,
            independence: fail,
        };
    }

    let herm_res = std::iter::once(rho)
        .chain(drho.iter())
        .map(|m| (m - m.adjoint()).norm() / 1f64.max(m.norm()))
        .fold(0.0, f64::max);
    let trace_res = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    let min_eig = HermitianMatrix::new(rho.clone())
        .and_then(|h| hermitian_eigensystem(&h))
        .map(|(v, _)| v[0])
        .unwrap_or(f64::NAN);
    let traceless_res = drho.iter().map(|m| m.trace().norm()).fold(0.0, f64::max);

    let n = drho.len();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = drho[i].iter().zip(drho[j].iter()).map(|(a, b)| (a.conj() * b).re).sum();
        }
    }
    let min_gram = HermitianMatrix::from_real(&gram)
        .and_then(|h| hermitian_eigensystem(&h))
        .map(|(v, _)| v[0])
        .unwrap_or(f64::NAN);

    RegularityReport {
        shape: Check { passed: true, residual: 0.0 },
        trace: Check::at_most(trace_res, REGULARITY_TOL),
        hermiticity: Check::at_most(herm_res, REGULARITY_TOL),
        positivity: Check { passed: min_eig > RANK_THRESHOLD, residual: min_eig },
        tracelessness: Check::at_most(traceless_res, REGULARITY_TOL),
        independence: Check { passed: min_gram > REGULARITY_TOL, residual: min_gram },
    }
}

/// How derivatives are obtained in [`evaluate`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Derivative {
    /// Closed-form derivatives where the model has them, otherwise central
    /// differences with [`DEFAULT_STEP`].
    #[default]
    Auto,
    /// Central differences with the given step, regardless of the model.
    Central(f64),
}

pub type BlochFn = Arc<dyn Fn(&[f64]) -> Result<[f64; 3]> + Send + Sync>;

/// Qubit families given by their Bloch vector `s_θ`.
#[derive(Clone)]
pub enum BlochMap {
    /// `s = θ`, three parameters.
    Full,
    /// `s = (θ¹, θ², 0)`.
    Equatorial,
    /// `s = (θ¹, θ², √(s₀² − (θ¹)² − (θ²)²))`.
    FixedRadius { s0: f64 },
    /// One parameter: `s = (a·max(θ,0)², 0, θ)`. Diagonal for θ ≤ 0 only.
    Piecewise { a: f64 },
    /// Arbitrary map; its Jacobian is taken by central differences.
    Custom { params: usize, map: BlochFn },
}

impl fmt::Debug for BlochMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlochMap::Full => write!(f, "Full"),
            BlochMap::Equatorial => write!(f, "Equatorial"),
            BlochMap::FixedRadius { s0 } => write!(f, "FixedRadius {{ s0: {s0} }}"),
            BlochMap::Piecewise { a } => write!(f, "Piecewise {{ a: {a} }}"),
            BlochMap::Custom { params, .. } => write!(f, "Custom {{ params: {params} }}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlochModel {
    name: String,
    map: BlochMap,
}

impl BlochModel {
    pub fn new(name: impl Into<String>, map: BlochMap) -> Result<Self> {
        match &map {
            BlochMap::FixedRadius { s0 } if !(*s0 > 0.0 && *s0 < 1.0) => {
                return Err(Error::InvalidParameter(format!("s0 must lie in (0, 1), got {s0}")))
            }
            BlochMap::Piecewise { a } if !a.is_finite() || *a == 0.0 => {
                return Err(Error::InvalidParameter(format!("a must be finite and nonzero, got {a}")))
            }
            BlochMap::Custom { params, .. } if !(1..=3).contains(params) => {
                return Err(Error::InvalidParameter(format!(
                    "a qubit model has between 1 and 3 parameters, got {params}"
                )))
            }
            _ => {}
        }
        Ok(BlochModel { name: name.into(), map })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn map(&self) -> &BlochMap {
        &self.map
    }

    pub fn param_count(&self) -> usize {
        match &self.map {
            BlochMap::Full => 3,
            BlochMap::Equatorial | BlochMap::FixedRadius { .. } => 2,
            BlochMap::Piecewise { .. } => 1,
            BlochMap::Custom { params, .. } => *params,
        }
    }

    fn domain_error(theta: &[f64], reason: impl Into<String>) -> Error {
        Error::Domain { theta: theta.to_vec(), reason: reason.into() }
    }

    pub fn bloch_vector(&self, theta: &[f64]) -> Result<[f64; 3]> {
        check_arity(theta, self.param_count())?;
        let s = match &self.map {
            BlochMap::Full => [theta[0], theta[1], theta[2]],
            BlochMap::Equatorial => [theta[0], theta[1], 0.0],
            BlochMap::FixedRadius { s0 } => {
                let z2 = s0 * s0 - theta[0] * theta[0] - theta[1] * theta[1];
                if !(z2 > 0.0) {
                    return Err(Self::domain_error(theta, format!("requires (θ¹)² + (θ²)² < s0² = {}", s0 * s0)));
                }
                [theta[0], theta[1], z2.sqrt()]
            }
            BlochMap::Piecewise { a } => {
                let t = theta[0].max(0.0);
                [a * t * t, 0.0, theta[0]]
            }
            BlochMap::Custom { map, .. } => map(theta)?,
        };
        let r = norm3(&s);
        if !(r < 1.0 - 1e-10) {
            return Err(Self::domain_error(theta, format!("Bloch vector length {r} is not below 1")));
        }
        Ok(s)
    }

    /// Columns `∂ᵢ s_θ`.
    pub fn jacobian(&self, theta: &[f64], deriv: Derivative) -> Result<Vec<[f64; 3]>> {
        let s = self.bloch_vector(theta)?;
        let h = match (deriv, &self.map) {
            (Derivative::Central(h), _) => Some(h),
            (Derivative::Auto, BlochMap::Custom { .. }) => Some(DEFAULT_STEP),
            (Derivative::Auto, _) => None,
        };
        if let Some(h) = h {
            let mut cols = Vec::with_capacity(theta.len());
            for i in 0..theta.len() {
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[i] += h;
                minus[i] -= h;
                let (sp, sm) = (self.bloch_vector(&plus)?, self.bloch_vector(&minus)?);
                cols.push([0, 1, 2].map(|k| (sp[k] - sm[k]) / (2.0 * h)));
            }
            return Ok(cols);
        }
        Ok(match &self.map {
            BlochMap::Full => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            BlochMap::Equatorial => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            BlochMap::FixedRadius { .. } => vec![
                [1.0, 0.0, -theta[0] / s[2]],
                [0.0, 1.0, -theta[1] / s[2]],
            ],
            BlochMap::Piecewise { a } => vec![[2.0 * a * theta[0].max(0.0), 0.0, 1.0]],
            BlochMap::Custom { .. } => unreachable!("custom maps always differentiate numerically"),
        })
    }
}

pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `ρ = (I + s·σ)/2`.
pub fn bloch_to_state(s: &[f64; 3]) -> Result<HermitianMatrix> {
    if !(norm3(s) < 1.0) {
        return Err(Error::Domain {
            theta: s.to_vec(),
            reason: "Bloch vector must have length below 1".into(),
        });
    }
    Ok(bloch_operator(0.5, &s.map(|x| 0.5 * x)))
}

/// `a·I + v·σ`
fn bloch_operator(a: f64, v: &[f64; 3]) -> HermitianMatrix {
    let sigma = pauli();
    let mut m = ComplexMatrix::identity(2, 2).scale(a);
    for k in 0..3 {
        m += sigma[k].as_matrix().scale(v[k]);
    }
    HermitianMatrix::new(m).expect("finite 2x2 Hermitian")
}

/// Inverse of [`bloch_to_state`]: `s_i = tr ρσ_i`.
pub fn state_to_bloch(rho: &ComplexMatrix) -> Result<[f64; 3]> {
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(Error::Dimension("Bloch vectors are defined for 2x2 states".into()));
    }
    let sigma = pauli();
    Ok([0, 1, 2].map(|k| (rho * sigma[k].as_matrix()).trace().re))
}

/// Built-in families of arbitrary dimension.
#[derive(Clone, Debug)]
pub enum BuiltinModel {
    /// `ρ = V diag(p_θ) V†` with a fixed unitary `V = exp(i·mix·K)` and
    /// `p_θ` the softmax of `(0, θ¹, …, θⁿ, 0, …)`.
    ClassicalDiagonal { dim: usize, params: usize, mix: f64 },
    /// `ρ = U Λ U†`, `Λ = diag(λ, cλ, 1 − (1+c)λ)` with `λ = θ¹` and
    /// `U = exp(iθ²σ₁)`, σ₁ acting on the first two levels.
    QutritQc { c: f64 },
}

/// Derivative data held by an explicit model point.
#[derive(Clone, Debug)]
pub struct ExplicitPoint {
    pub theta: Vec<f64>,
    pub rho: ComplexMatrix,
    pub drho: Vec<ComplexMatrix>,
}

#[derive(Clone, Debug)]
pub struct ExplicitModel {
    name: String,
    dim: usize,
    params: usize,
    points: Vec<ExplicitPoint>,
}

impl ExplicitModel {
    pub fn new(name: impl Into<String>, dim: usize, params: usize, points: Vec<ExplicitPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("explicit model needs at least one point".into()));
        }
        for p in &points {
            if p.theta.len() != params || p.drho.len() != params {
                return Err(Error::InvalidParameter(format!(
                    "point {:?} has {} coordinates and {} derivatives, expected {params}",
                    p.theta,
                    p.theta.len(),
                    p.drho.len()
                )));
            }
            if p.rho.nrows() != dim {
                return Err(Error::Dimension(format!(
                    "point {:?} has a {}x{} state, expected dimension {dim}",
                    p.theta,
                    p.rho.nrows(),
                    p.rho.ncols()
                )));
            }
            let report = validate_regularity(&p.rho, &p.drho);
            if !report.passed() {
                return Err(Error::Regularity {
                    theta: p.theta.clone(),
                    failures: report.failures().join(", "),
                });
            }
        }
        Ok(ExplicitModel { name: name.into(), dim, params, points })
    }

    pub fn points(&self) -> &[ExplicitPoint] {
        &self.points
    }
}

#[derive(Clone, Debug)]
pub enum ParametricModel {
    Builtin(BuiltinModel),
    Bloch(BlochModel),
    Explicit(ExplicitModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Builtin,
    Bloch,
    Explicit,
}

impl ParametricModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ParametricModel::Builtin(_) => ModelKind::Builtin,
            ParametricModel::Bloch(_) => ModelKind::Bloch,
            ParametricModel::Explicit(_) => ModelKind::Explicit,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ParametricModel::Builtin(BuiltinModel::ClassicalDiagonal { .. }) => "classical-diagonal".into(),
            ParametricModel::Builtin(BuiltinModel::QutritQc { .. }) => "qutrit-qc".into(),
            ParametricModel::Bloch(b) => b.name.clone(),
            ParametricModel::Explicit(e) => e.name.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParametricModel::Builtin(BuiltinModel::ClassicalDiagonal { dim, .. }) => *dim,
            ParametricModel::Builtin(BuiltinModel::QutritQc { .. }) => 3,
            ParametricModel::Bloch(_) => 2,
            ParametricModel::Explicit(e) => e.dim,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ParametricModel::Builtin(BuiltinModel::ClassicalDiagonal { params, .. }) => *params,
            ParametricModel::Builtin(BuiltinModel::QutritQc { .. }) => 2,
            ParametricModel::Bloch(b) => b.param_count(),
            ParametricModel::Explicit(e) => e.params,
        }
    }
}

fn check_arity(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::Dimension(format!(
            "model has {n} parameters, got {} coordinates",
            theta.len()
        )));
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain { theta: theta.to_vec(), reason: "non-finite coordinate".into() });
    }
    Ok(())
}

fn classical_mixing_unitary(dim: usize, mix: f64) -> Result<ComplexMatrix> {
    // K: fixed Hermitian generator with all off-diagonal couplings
    let mut k = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        k[(j, j)] = Complex64::new(j as f64 * 0.1, 0.0);
        for l in (j + 1)..dim {
            let z = Complex64::new(1.0, 0.5 * (l - j) as f64);
            k[(j, l)] = z;
            k[(l, j)] = z.conj();
        }
    }
    let (values, u) = hermitian_eigensystem(&HermitianMatrix::new(k)?)?;
    let mut phase = ComplexMatrix::zeros(dim, dim);
    for (i, &x) in values.iter().enumerate() {
        phase[(i, i)] = Complex64::from_polar(1.0, mix * x);
    }
    Ok(&u * phase * u.adjoint())
}

fn softmax_probabilities(dim: usize, theta: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0; dim];
    for (i, t) in theta.iter().enumerate() {
        eta[i + 1] = *t;
    }
    let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn qutrit_rotation(angle: f64) -> ComplexMatrix {
    // exp(iθσ₁) on levels {0, 1}: cos θ·I + i sin θ·σ₁, identity on level 2
    let (s, c) = angle.sin_cos();
    let mut u = ComplexMatrix::identity(3, 3);
    u[(0, 0)] = Complex64::new(c, 0.0);
    u[(1, 1)] = Complex64::new(c, 0.0);
    u[(0, 1)] = Complex64::new(0.0, s);
    u[(1, 0)] = Complex64::new(0.0, s);
    u
}

fn qutrit_sigma1() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3, 3);
    m[(0, 1)] = Complex64::new(1.0, 0.0);
    m[(1, 0)] = Complex64::new(1.0, 0.0);
    m
}

impl BuiltinModel {
    fn param_count(&self) -> usize {
        match self {
            BuiltinModel::ClassicalDiagonal { params, .. } => *params,
            BuiltinModel::QutritQc { .. } => 2,
        }
    }

    fn state(&self, theta: &[f64]) -> Result<ComplexMatrix> {
        check_arity(theta, self.param_count())?;
        match self {
            BuiltinModel::ClassicalDiagonal { dim, mix, .. } => {
                let p = softmax_probabilities(*dim, theta);
                let v = classical_mixing_unitary(*dim, *mix)?;
                Ok(HermitianMatrix::from_diagonal(&p).conjugate_by(&v).into_inner())
            }
            BuiltinModel::QutritQc { c } => {
                let lam = theta[0];
                let p = [lam, c * lam, 1.0 - (1.0 + c) * lam];
                if p.iter().any(|x| !(*x > RANK_THRESHOLD)) {
                    return Err(Error::Domain {
                        theta: theta.to_vec(),
                        reason: format!("eigenvalues {p:?} must all be positive"),
                    });
                }
                let u = qutrit_rotation(theta[1]);
                Ok(HermitianMatrix::from_diagonal(&p).conjugate_by(&u).into_inner())
            }
        }
    }

    fn analytic_derivatives(&self, theta: &[f64], rho: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
        match self {
            BuiltinModel::ClassicalDiagonal { dim, mix, params } => {
                let p = softmax_probabilities(*dim, theta);
                let v = classical_mixing_unitary(*dim, *mix)?;
                Ok((0..*params)
                    .map(|i| {
                        let pi = p[i + 1];
                        let dp: Vec<f64> = (0..*dim)
                            .map(|k| p[k] * (if k == i + 1 { 1.0 } else { 0.0 } - pi))
                            .collect();
                        HermitianMatrix::from_diagonal(&dp).conjugate_by(&v).into_inner()
                    })
                    .collect())
            }
            BuiltinModel::QutritQc { c } => {
                let u = qutrit_rotation(theta[1]);
                let d1 = HermitianMatrix::from_diagonal(&[1.0, *c, -(1.0 + c)]).conjugate_by(&u);
                // ∂ρ/∂θ² = i[σ₁, ρ]
                let s1 = qutrit_sigma1();
                let d2 = (&s1 * rho - rho * &s1) * Complex64::new(0.0, 1.0);
                Ok(vec![d1.into_inner(), d2])
            }
        }
    }
}

fn central_differences(
    theta: &[f64],
    h: f64,
    state: impl Fn(&[f64]) -> Result<ComplexMatrix>,
) -> Result<Vec<ComplexMatrix>> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("difference step must be positive, got {h}")));
    }
    (0..theta.len())
        .map(|i| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let diff = (state(&plus)? - state(&minus)?).unscale(2.0 * h);
            Ok(HermitianMatrix::new(diff)?.into_inner())
        })
        .collect()
}

/// Evaluates a model at `theta`, returning a point that satisfies every
/// regularity condition.
pub fn evaluate(model: &ParametricModel, theta: &[f64], deriv: Derivative) -> Result<ModelPoint> {
    check_arity(theta, model.param_count())?;
    let (rho, drho) = match model {
        ParametricModel::Builtin(b) => {
            let rho = b.state(theta)?;
            let drho = match deriv {
                Derivative::Auto => b.analytic_derivatives(theta, &rho)?,
                Derivative::Central(h) => central_differences(theta, h, |t| b.state(t))?,
            };
            (rho, drho)
        }
        ParametricModel::Bloch(b) => {
            let s = b.bloch_vector(theta)?;
            let rho = bloch_to_state(&s)?.into_inner();
            let drho = match (deriv, b.map()) {
                (Derivative::Central(h), _) => central_differences(theta, h, |t| {
                    Ok(bloch_to_state(&b.bloch_vector(t)?)?.into_inner())
                })?,
                _ => b
                    .jacobian(theta, deriv)?
                    .iter()
                    .map(|col| bloch_operator(0.0, &col.map(|x| 0.5 * x)).into_inner())
                    .collect(),
            };
            (rho, drho)
        }
        ParametricModel::Explicit(e) => {
            let p = e
                .points
                .iter()
                .find(|p| p.theta.iter().zip(theta).all(|(a, b)| (a - b).abs() <= 1e-12))
                .ok_or_else(|| Error::Domain {
                    theta: theta.to_vec(),
                    reason: "no stored point at these coordinates".into(),
                })?;
            (p.rho.clone(), p.drho.clone())
        }
    };
    ModelPoint::new(theta.to_vec(), rho, drho)
}

/// One parameter of a zoo model.
#[derive(Clone, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub constraint: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZooEntry {
    pub name: &'static str,
    pub kind: ModelKind,
    pub summary: &'static str,
    pub provenance: &'static str,
    pub parameters: Vec<ParamSpec>,
    /// A parameter point inside the domain, useful as a default.
    pub example_theta: Vec<f64>,
}

pub fn zoo() -> Vec<ZooEntry> {
    vec![
        ZooEntry {
            name: "classical-diagonal",
            kind: ModelKind::Builtin,
            summary: "softmax simplex family of dimension d with n parameters, diagonal in a fixed basis",
            provenance: "classical model: ρ_θ = V diag(p_θ) V† with a θ-independent unitary V",
            parameters: vec![
                ParamSpec { name: "d", default: 3.0, constraint: "integer, 2 ≤ d ≤ 8" },
                ParamSpec { name: "n", default: 2.0, constraint: "integer, 1 ≤ n ≤ d − 1" },
                ParamSpec { name: "mix", default: 0.3, constraint: "real angle of the fixed basis rotation" },
            ],
            example_theta: vec![0.2, -0.1],
        },
        ZooEntry {
            name: "qubit-full",
            kind: ModelKind::Bloch,
            summary: "three-parameter qubit model s = θ",
            provenance: "full qubit model; D-invariant (tangent space is every traceless direction), not asymptotically classical",
            parameters: vec![],
            example_theta: vec![0.3, 0.2, 0.4],
        },
        ZooEntry {
            name: "qubit-equatorial",
            kind: ModelKind::Bloch,
            summary: "two-parameter qubit model s = (θ¹, θ², 0)",
            provenance: "planar Bloch model; ∂₁s × ∂₂s is orthogonal to s, so it is asymptotically classical",
            parameters: vec![],
            example_theta: vec![0.5, 0.0],
        },
        ZooEntry {
            name: "qubit-fixed-radius",
            kind: ModelKind::Bloch,
            summary: "two-parameter qubit model s = (θ¹, θ², √(s0² − (θ¹)² − (θ²)²))",
            provenance: "constant Bloch radius, hence D-invariant, but the family is not unitary",
            parameters: vec![ParamSpec { name: "s0", default: 0.8, constraint: "0 < s0 < 1" }],
            example_theta: vec![0.3, 0.2],
        },
        ZooEntry {
            name: "qubit-piecewise",
            kind: ModelKind::Bloch,
            summary: "one-parameter qubit model s = (a·max(θ,0)², 0, θ)",
            provenance: "classical for θ ≤ 0 (fixed z-axis), not classical for θ > 0",
            parameters: vec![ParamSpec { name: "a", default: 0.5, constraint: "nonzero real" }],
            example_theta: vec![-0.3],
        },
        ZooEntry {
            name: "qutrit-qc",
            kind: ModelKind::Builtin,
            summary: "two-parameter qutrit model U(θ²) diag(θ¹, cθ¹, 1 − (1+c)θ¹) U(θ²)†, U = exp(iθ²σ₁)",
            provenance: "quasi-classical qutrit construction: SLD operators commute but the model is not classical",
            parameters: vec![ParamSpec { name: "c", default: 2.0, constraint: "c > 0, c ≠ 1" }],
            example_theta: vec![0.2, 0.3],
        },
    ]
}

pub fn zoo_entry(name: &str) -> Result<ZooEntry> {
    zoo()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownModel(name.to_string()))
}

/// Builds a zoo member; missing parameters take their defaults.
pub fn build_zoo_model(name: &str, params: &BTreeMap<String, f64>) -> Result<ParametricModel> {
    let entry = zoo_entry(name)?;
    for key in params.keys() {
        if !entry.parameters.iter().any(|p| p.name == key) {
            return Err(Error::InvalidParameter(format!("model '{name}' has no parameter '{key}'")));
        }
    }
    let get = |key: &str| -> f64 {
        params.get(key).copied().unwrap_or_else(|| {
            entry.parameters.iter().find(|p| p.name == key).map(|p| p.default).unwrap_or(f64::NAN)
        })
    };
    let integer = |key: &str| -> Result<usize> {
        let v = get(key);
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::InvalidParameter(format!("{key} must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    };
    match name {
        "classical-diagonal" => {
            let dim = integer("d")?;
            let n = integer("n")?;
            let mix = get("mix");
            if !(2..=8).contains(&dim) {
                return Err(Error::InvalidParameter(format!("d must lie in [2, 8], got {dim}")));
            }
            if n < 1 || n >= dim {
                return Err(Error::InvalidParameter(format!("n must lie in [1, d − 1], got {n}")));
            }
            if !mix.is_finite() {
                return Err(Error::InvalidParameter("mix must be finite".into()));
            }
            Ok(ParametricModel::Builtin(BuiltinModel::ClassicalDiagonal { dim, params: n, mix }))
        }
        "qutrit-qc" => {
            let c = get("c");
            if !(c > 0.0) || c == 1.0 || !c.is_finite() {
                return Err(Error::InvalidParameter(format!("c must be positive and different from 1, got {c}")));
            }
            Ok(ParametricModel::Builtin(BuiltinModel::QutritQc { c }))
        }
        "qubit-full" => Ok(ParametricModel::Bloch(BlochModel::new(name, BlochMap::Full)?)),
        "qubit-equatorial" => Ok(ParametricModel::Bloch(BlochModel::new(name, BlochMap::Equatorial)?)),
        "qubit-fixed-radius" => Ok(ParametricModel::Bloch(BlochModel::new(
            name,
            BlochMap::FixedRadius { s0: get("s0") },
        )?)),
        "qubit-piecewise" => Ok(ParametricModel::Bloch(BlochModel::new(
            name,
            BlochMap::Piecewise { a: get("a") },
        )?)),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

/// The numeric parameters a zoo model was built with.
pub fn zoo_parameters(model: &ParametricModel) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    match model {
        ParametricModel::Builtin(BuiltinModel::ClassicalDiagonal { dim, params, mix }) => {
            out.insert("d".into(), *dim as f64);
            out.insert("n".into(), *params as f64);
            out.insert("mix".into(), *mix);
        }
        ParametricModel::Builtin(BuiltinModel::QutritQc { c }) => {
            out.insert("c".into(), *c);
        }
        ParametricModel::Bloch(b) => match b.map() {
            BlochMap::FixedRadius { s0 } => {
                out.insert("s0".into(), *s0);
            }
            BlochMap::Piecewise { a } => {
                out.insert("a".into(), *a);
            }
            _ => {}
        },
        ParametricModel::Explicit(_) => {}
    }
    out
}
