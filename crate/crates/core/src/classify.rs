//! Model classification: classical, quasi-classical, D-invariant and
//! asymptotically classical, each decided by one primary matrix condition and
//! cross-checked against the equivalent alternatives.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infogeo::{analyze, InfoMatrices, ScoreSet};
use crate::linalg::{commutation_superop, commutator, imag_part, residual, to_complex, ComplexMatrix};
use crate::model::{cross3, dot3, evaluate, norm3, BlochModel, Derivative, ModelPoint, ParametricModel};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Classification threshold and the grid used for global verdicts.
#[derive(Clone, Debug)]
pub struct ToleranceConfig {
    pub tol_class: f64,
    pub grid: Grid,
}

impl ToleranceConfig {
    pub fn new(tol_class: f64, grid: Grid) -> Result<Self> {
        check_tol(tol_class)?;
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(ToleranceConfig { tol_class, grid })
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Cartesian product of per-coordinate sample lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>) -> Self {
        Grid { axes }
    }

    /// A grid holding the single point `theta`.
    pub fn single(theta: &[f64]) -> Self {
        Grid { axes: theta.iter().map(|&t| vec![t]).collect() }
    }

    /// Parses `a:b:k` per axis, axes joined by `x`, e.g. `0.1:0.4:4x0.1:0.4:4`.
    /// Each axis holds `k` evenly spaced values from `a` to `b` inclusive; a bare
    /// number is a single value.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for axis in spec.split('x') {
            let fields: Vec<&str> = axis.split(':').map(str::trim).collect();
            let num = |s: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| Error::Parse(format!("bad grid number '{s}' in '{spec}'")))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("grid value '{s}' is not finite")));
                }
                Ok(v)
            };
            let values = match fields.as_slice() {
                [single] => vec![num(single)?],
                [a, b, k] => {
                    let (a, b) = (num(a)?, num(b)?);
                    let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad grid count '{k}' in '{spec}'")))?;
                    match k {
                        0 => return Err(Error::EmptyGrid),
                        1 => vec![a],
                        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
                    }
                }
                _ => return Err(Error::Parse(format!("grid axis '{axis}' is not of the form a:b:k"))),
            };
            axes.push(values);
        }
        Ok(Grid { axes })
    }

    pub fn arity(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(Vec::len).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, the first coordinate varying slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![vec![]];
        if self.is_empty() {
            return vec![];
        }
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Verdict of one class test with its residuals.
#[derive(Clone, Debug, Serialize)]
pub struct ClassTest {
    pub verdict: bool,
    pub primary_residual: f64,
    pub cross_residuals: BTreeMap<String, f64>,
    /// Primary residual lies within a factor of two of the tolerance.
    pub marginal: bool,
    /// Primary residual is far below the tolerance but some cross-check is far above it.
    pub inconsistent: bool,
}

impl ClassTest {
    fn new(primary: f64, cross: Vec<(&str, f64)>, tol: f64) -> Self {
        let cross_residuals: BTreeMap<String, f64> = cross.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let inconsistent = primary <= tol / 10.0 && cross_residuals.values().any(|&r| !(r <= 10.0 * tol));
        ClassTest {
            verdict: primary <= tol,
            primary_residual: primary,
            marginal: primary >= tol / 2.0 && primary <= 2.0 * tol,
            inconsistent,
            cross_residuals,
        }
    }
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    residual(a, b)
}

fn scaled(num: f64, scale: f64) -> f64 {
    num / 1f64.max(scale)
}

/// All score pairs commute.
pub fn is_quasi_classical(_point: &ModelPoint, scores: &ScoreSet, tol: f64) -> ClassTest {
    let n = scores.slds.len();
    let mut worst = 0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&scores.slds[i], &scores.slds[j]);
            worst = worst.max(scaled(commutator(a, b).norm(), a.norm() * b.norm()));
        }
    }
    ClassTest::new(worst, vec![], tol)
}

/// `Im Z = 0`, cross-checked by `tr ρ[L_i, L_j] = 0`.
pub fn is_asymptotically_classical(point: &ModelPoint, scores: &ScoreSet, mats: &InfoMatrices, tol: f64) -> ClassTest {
    let primary = scaled(imag_part(&mats.z).norm(), mats.z.norm());
    let rho = point.rho().as_matrix();
    let n = scores.slds.len();
    let mut worst = 0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = (rho * commutator(&scores.slds[i], &scores.slds[j])).trace().norm();
            worst = worst.max(scaled(c, (mats.g[(i, i)] * mats.g[(j, j)]).sqrt()));
        }
    }
    ClassTest::new(primary, vec![("state_commutator_trace", worst)], tol)
}

/// `Z = G̃⁻¹`, cross-checked by `Lⁱ = L̃ⁱ`, `D(Lⁱ) = Σⱼ (Im Z)ʲⁱ L_j` and `G⁻¹ = Z̃`.
pub fn is_d_invariant(point: &ModelPoint, scores: &ScoreSet, mats: &InfoMatrices, tol: f64) -> ClassTest {
    let primary = rel(&mats.z, &mats.gt_inv);
    let n = scores.slds.len();
    let im_z = imag_part(&mats.z);
    let (mut duals, mut action) = (0f64, 0f64);
    for i in 0..n {
        duals = duals.max(rel(&scores.sld_duals[i], &scores.rld_duals[i]));
        let d_dual = commutation_superop(point.eig(), &scores.sld_duals[i]).expect("shapes agree");
        let mut combo = ComplexMatrix::zeros(point.dim(), point.dim());
        for j in 0..n {
            combo += scores.slds[j].as_matrix() * num_complex::Complex64::from(im_z[(j, i)]);
        }
        action = action.max(rel(&d_dual, &combo));
    }
    let g_inv = to_complex(&mats.g_inv);
    ClassTest::new(
        primary,
        vec![
            ("dual_scores_equal", duals),
            ("commutation_action", action),
            ("g_inv_equals_zt", rel(&g_inv, &mats.zt)),
        ],
        tol,
    )
}

/// `G = G̃`, cross-checked by `[L_i, ρ] = 0`, `L_i = L̃_i`, `D(L_i) = 0`,
/// `G̃⁻¹ = Z̃` and `Z = Z̃`.
pub fn is_classical(point: &ModelPoint, scores: &ScoreSet, mats: &InfoMatrices, tol: f64) -> ClassTest {
    let primary = rel(&to_complex(&mats.g), &mats.gt);
    let rho = point.rho().as_matrix();
    let (mut comm, mut equal, mut dnorm) = (0f64, 0f64, 0f64);
    for (l, lt) in scores.slds.iter().zip(&scores.rlds) {
        comm = comm.max(scaled(commutator(l, rho).norm(), l.norm() * rho.norm()));
        equal = equal.max(rel(l, lt));
        let dl = commutation_superop(point.eig(), l).expect("shapes agree");
        dnorm = dnorm.max(scaled(dl.norm(), l.norm()));
    }
    ClassTest::new(
        primary,
        vec![
            ("state_commutator", comm),
            ("sld_equals_rld", equal),
            ("commutation_kernel", dnorm),
            ("gt_inv_equals_zt", rel(&mats.gt_inv, &mats.zt)),
            ("z_equals_zt", rel(&mats.z, &mats.zt)),
        ],
        tol,
    )
}

/// Whether the verdicts respect the containments between the classes.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyFlags {
    pub classical_implies_quasi_classical: bool,
    pub classical_iff_d_invariant_and_ac: bool,
    pub quasi_classical_implies_ac: bool,
    /// Some class has a primary residual far below tolerance while a
    /// cross-check residual is far above it.
    pub cross_check_disagreement: bool,
}

impl ConsistencyFlags {
    pub fn consistent(&self) -> bool {
        self.classical_implies_quasi_classical
            && self.classical_iff_d_invariant_and_ac
            && self.quasi_classical_implies_ac
            && !self.cross_check_disagreement
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub theta: Vec<f64>,
    pub tol: f64,
    pub classical: ClassTest,
    pub quasi_classical: ClassTest,
    pub d_invariant: ClassTest,
    pub asymptotically_classical: ClassTest,
    pub consistency: ConsistencyFlags,
    /// Set when the verdicts break a containment or the cross-checks disagree,
    /// which signals a tolerance problem rather than a property of the model.
    pub internal_inconsistency: bool,
    pub ill_conditioned: bool,
}

impl ClassificationReport {
    /// Verdicts in the order (classical, quasi-classical, D-invariant, AC).
    pub fn verdicts(&self) -> [bool; 4] {
        [
            self.classical.verdict,
            self.quasi_classical.verdict,
            self.d_invariant.verdict,
            self.asymptotically_classical.verdict,
        ]
    }

    pub fn tests(&self) -> [(&'static str, &ClassTest); 4] {
        [
            ("classical", &self.classical),
            ("quasi_classical", &self.quasi_classical),
            ("d_invariant", &self.d_invariant),
            ("asymptotically_classical", &self.asymptotically_classical),
        ]
    }
}

/// Runs the four tests with precomputed scores and matrices.
pub fn classify_with(point: &ModelPoint, scores: &ScoreSet, mats: &InfoMatrices, tol: f64) -> ClassificationReport {
    let classical = is_classical(point, scores, mats, tol);
    let quasi_classical = is_quasi_classical(point, scores, tol);
    let d_invariant = is_d_invariant(point, scores, mats, tol);
    let asymptotically_classical = is_asymptotically_classical(point, scores, mats, tol);
    let consistency = ConsistencyFlags {
        classical_implies_quasi_classical: !classical.verdict || quasi_classical.verdict,
        classical_iff_d_invariant_and_ac: classical.verdict == (d_invariant.verdict && asymptotically_classical.verdict),
        quasi_classical_implies_ac: !quasi_classical.verdict || asymptotically_classical.verdict,
        cross_check_disagreement: [&classical, &quasi_classical, &d_invariant, &asymptotically_classical]
            .iter()
            .any(|t| t.inconsistent),
    };
    ClassificationReport {
        theta: point.theta().to_vec(),
        tol,
        internal_inconsistency: !consistency.consistent(),
        ill_conditioned: mats.ill_conditioned(),
        classical,
        quasi_classical,
        d_invariant,
        asymptotically_classical,
        consistency,
    }
}

/// Classifies a single point.
pub fn classify_point(point: &ModelPoint, tol: f64) -> Result<ClassificationReport> {
    check_tol(tol)?;
    let (scores, mats) = analyze(point)?;
    Ok(classify_with(point, &scores, &mats, tol))
}

pub const CLASS_NAMES: [&str; 4] = ["classical", "quasi_classical", "d_invariant", "asymptotically_classical"];

#[derive(Clone, Debug, Serialize)]
pub struct GlobalVerdict {
    pub verdict: bool,
    pub max_primary_residual: f64,
    /// Grid points where the class fails.
    pub failing_theta: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalReport {
    pub model: String,
    pub tol: f64,
    pub grid_size: usize,
    pub points: Vec<ClassificationReport>,
    pub global: BTreeMap<String, GlobalVerdict>,
    pub internal_inconsistency: bool,
}

impl GlobalReport {
    pub fn verdict(&self, class: &str) -> bool {
        self.global.get(class).map(|g| g.verdict).unwrap_or(false)
    }
}

fn check_grid(model_params: usize, grid: &Grid) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.arity() != model_params {
        return Err(Error::Dimension(format!(
            "grid has {} coordinates, model has {model_params} parameters",
            grid.arity()
        )));
    }
    Ok(())
}

fn evaluate_points<T: Send>(
    model: &ParametricModel,
    thetas: &[Vec<f64>],
    f: impl Fn(&ModelPoint) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if thetas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    thetas
        .par_iter()
        .map(|theta| {
            evaluate(model, theta, Derivative::Auto)
                .and_then(|p| f(&p))
                .map_err(|e| Error::GridPoint { theta: theta.clone(), source: Box::new(e) })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Classifies every grid point (concurrently); a class holds globally when it
/// holds at every sampled point. Any irregular point aborts with its location.
pub fn classify_global(model: &ParametricModel, grid: &Grid, tol: f64) -> Result<GlobalReport> {
    check_grid(model.param_count(), grid)?;
    classify_points(model, &grid.points(), tol)
}

/// [`classify_global`] over an arbitrary list of points.
pub fn classify_points(model: &ParametricModel, thetas: &[Vec<f64>], tol: f64) -> Result<GlobalReport> {
    check_tol(tol)?;
    let points = evaluate_points(model, thetas, |p| classify_point(p, tol))?;
    let mut global = BTreeMap::new();
    for (k, name) in CLASS_NAMES.iter().enumerate() {
        let mut g = GlobalVerdict { verdict: true, max_primary_residual: 0.0, failing_theta: vec![] };
        for r in &points {
            let t = r.tests()[k].1;
            g.max_primary_residual = g.max_primary_residual.max(t.primary_residual);
            if !t.verdict {
                g.verdict = false;
                g.failing_theta.push(r.theta.clone());
            }
        }
        global.insert(name.to_string(), g);
    }
    Ok(GlobalReport {
        model: model.name(),
        tol,
        grid_size: points.len(),
        internal_inconsistency: points.iter().any(|r| r.internal_inconsistency),
        points,
        global,
    })
}

/// Residuals of the Bloch-vector criteria at one point.
#[derive(Clone, Debug, Serialize)]
pub struct BlochPointReport {
    pub theta: Vec<f64>,
    pub bloch_vector: [f64; 3],
    pub radius: f64,
    /// Zero exactly when the tangent space is closed under `D`: `s × ∂s = 0`
    /// for one parameter, `s · ∂ᵢs = 0` for two, always zero for three.
    pub d_invariant_residual: f64,
    /// `max |s · (∂ᵢs × ∂ⱼs)|`, relative.
    pub ac_residual: f64,
    /// `max ‖∂ᵢs × ∂ⱼs‖`, relative.
    pub qc_residual: f64,
    /// Bloch verdicts (classical, quasi-classical, D-invariant, AC).
    pub bloch_verdicts: [bool; 4],
    /// Verdicts of [`classify_point`] at the same point.
    pub general_verdicts: [bool; 4],
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlochReport {
    pub model: String,
    pub tol: f64,
    pub points: Vec<BlochPointReport>,
    /// Variance of `|s_θ|` over the grid.
    pub radial_variance: f64,
    pub max_ac_residual: f64,
    pub max_qc_residual: f64,
    pub max_d_invariant_residual: f64,
    /// Conjunction of the Bloch verdicts over the grid.
    pub global: BTreeMap<String, bool>,
    pub all_agree: bool,
}

/// Bloch-vector residuals for a qubit point with Bloch vector `s` and
/// tangent vectors `ds`.
pub fn bloch_residuals(s: &[f64; 3], ds: &[[f64; 3]]) -> (f64, f64, f64) {
    let n = ds.len();
    let r = norm3(s);
    let d_inv = match n {
        1 => scaled(norm3(&cross3(s, &ds[0])), r * norm3(&ds[0])),
        2 => ds.iter().map(|v| scaled(dot3(s, v).abs(), r * norm3(v))).fold(0.0, f64::max),
        _ => 0.0,
    };
    let (mut ac, mut qc) = (0f64, 0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let c = cross3(&ds[i], &ds[j]);
            let scale = norm3(&ds[i]) * norm3(&ds[j]);
            ac = ac.max(scaled(dot3(s, &c).abs(), r * scale));
            qc = qc.max(scaled(norm3(&c), scale));
        }
    }
    (d_inv, ac, qc)
}

/// Classifies a qubit model from its Bloch vector and compares each verdict
/// with [`classify_point`].
pub fn bloch_classify(model: &ParametricModel, grid: &Grid, tol: f64) -> Result<BlochReport> {
    check_grid(model.param_count(), grid)?;
    bloch_classify_points(model, &grid.points(), tol)
}

/// [`bloch_classify`] over an arbitrary list of points.
pub fn bloch_classify_points(model: &ParametricModel, thetas: &[Vec<f64>], tol: f64) -> Result<BlochReport> {
    check_tol(tol)?;
    let bloch: &BlochModel = match model {
        ParametricModel::Bloch(b) => b,
        _ => {
            return Err(Error::Unsupported(format!(
                "Bloch classification needs a qubit Bloch model, '{}' is not one",
                model.name()
            )))
        }
    };
    let points = evaluate_points(model, thetas, |p| {
        let theta = p.theta();
        let s = bloch.bloch_vector(theta)?;
        let ds = bloch.jacobian(theta, Derivative::Auto)?;
        let (d_inv, ac, qc) = bloch_residuals(&s, &ds);
        let (dv, av, qv) = (d_inv <= tol, ac <= tol, ds.len() == 1 || qc <= tol);
        let bloch_verdicts = [dv && av, qv, dv, av];
        let general_verdicts = classify_point(p, tol)?.verdicts();
        Ok(BlochPointReport {
            theta: theta.to_vec(),
            bloch_vector: s,
            radius: norm3(&s),
            d_invariant_residual: d_inv,
            ac_residual: ac,
            qc_residual: qc,
            bloch_verdicts,
            general_verdicts,
            agree: bloch_verdicts == general_verdicts,
        })
    })?;
    let m = points.len() as f64;
    let mean = points.iter().map(|p| p.radius).sum::<f64>() / m;
    let radial_variance = points.iter().map(|p| (p.radius - mean).powi(2)).sum::<f64>() / m;
    let mut global = BTreeMap::new();
    for (k, name) in CLASS_NAMES.iter().enumerate() {
        global.insert(name.to_string(), points.iter().all(|p| p.bloch_verdicts[k]));
    }
    Ok(BlochReport {
        model: model.name(),
        tol,
        radial_variance,
        max_ac_residual: points.iter().map(|p| p.ac_residual).fold(0.0, f64::max),
        max_qc_residual: points.iter().map(|p| p.qc_residual).fold(0.0, f64::max),
        max_d_invariant_residual: points.iter().map(|p| p.d_invariant_residual).fold(0.0, f64::max),
        global,
        all_agree: points.iter().all(|p| p.agree),
        points,
    })
}
