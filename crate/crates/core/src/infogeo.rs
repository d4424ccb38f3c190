//! Scores, dual scores, the four information matrices, and numerical checks
//! of the identities relating them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    commutation_superop, hermitian_inverse, imag_part, min_eigenvalue, real_part, residual, residual_real,
    rld_inner, sld_inner, solve_rld, solve_sld, to_complex, ComplexMatrix, HermitianMatrix, I,
};
use crate::model::ModelPoint;
use crate::random::random_complex_matrix;

/// Condition number above which the Fisher matrices are flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Default seed for the random probes of the identity suite.
pub const DEFAULT_SEED: u64 = 42;

/// SLD and RLD operators at a point together with their dual bases.
#[derive(Clone, Debug)]
pub struct ScoreSet {
    pub slds: Vec<HermitianMatrix>,
    pub rlds: Vec<ComplexMatrix>,
    pub sld_duals: Vec<HermitianMatrix>,
    pub rld_duals: Vec<ComplexMatrix>,
}

/// `G`, `G̃`, `Z`, `Z̃` and the inverses of the two Fisher matrices.
#[derive(Clone, Debug)]
pub struct InfoMatrices {
    /// SLD Fisher information (real symmetric).
    pub g: DMatrix<f64>,
    /// RLD Fisher information (Hermitian).
    pub gt: ComplexMatrix,
    /// `z^{ij} = ⟨Lⁱ, Lʲ⟩_RLD`
    pub z: ComplexMatrix,
    /// `z̃^{ij} = ⟨L̃ⁱ, L̃ʲ⟩_SLD`
    pub zt: ComplexMatrix,
    pub g_inv: DMatrix<f64>,
    pub gt_inv: ComplexMatrix,
    pub g_condition: f64,
    pub gt_condition: f64,
}

impl InfoMatrices {
    pub fn ill_conditioned(&self) -> bool {
        self.g_condition > ILL_CONDITIONED || self.gt_condition > ILL_CONDITIONED
    }
}

fn gram(
    items: &[&ComplexMatrix],
    inner: impl Fn(&ComplexMatrix, &ComplexMatrix) -> Result<Complex64>,
) -> Result<ComplexMatrix> {
    let n = items.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = inner(items[i], items[j])?;
        }
    }
    // exact Hermitian symmetry
    Ok(HermitianMatrix::new(m)?.into_inner())
}

fn herm_refs(ops: &[HermitianMatrix]) -> Vec<&ComplexMatrix> {
    ops.iter().map(|h| h.as_matrix()).collect()
}

/// `Σⱼ inv[j][i] · ops[j]`
fn combine(inv: &ComplexMatrix, ops: &[&ComplexMatrix]) -> Vec<ComplexMatrix> {
    let n = ops.len();
    let d = ops[0].nrows();
    (0..n)
        .map(|i| {
            let mut acc = ComplexMatrix::zeros(d, d);
            for (j, op) in ops.iter().enumerate() {
                acc += *op * inv[(j, i)];
            }
            acc
        })
        .collect()
}

fn sld_fisher(point: &ModelPoint, slds: &[HermitianMatrix]) -> Result<ComplexMatrix> {
    gram(&herm_refs(slds), |x, y| sld_inner(point.eig(), x, y))
}

fn rld_fisher(point: &ModelPoint, rlds: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    gram(&rlds.iter().collect::<Vec<_>>(), |x, y| rld_inner(point.rho(), x, y))
}

/// Solves for the SLD and RLD scores and forms the dual operators
/// `Lⁱ = Σⱼ gʲⁱ L_j`, `L̃ⁱ = Σⱼ g̃ʲⁱ L̃_j`.
pub fn compute_scores(point: &ModelPoint) -> Result<ScoreSet> {
    let eig = point.eig();
    let slds = point
        .drho()
        .iter()
        .map(|d| solve_sld(eig, d))
        .collect::<Result<Vec<_>>>()?;
    let rlds = point
        .drho()
        .iter()
        .map(|d| solve_rld(eig, d))
        .collect::<Result<Vec<_>>>()?;

    let (g_inv, _) = hermitian_inverse(&HermitianMatrix::new(sld_fisher(point, &slds)?)?)?;
    let (gt_inv, _) = hermitian_inverse(&HermitianMatrix::new(rld_fisher(point, &rlds)?)?)?;
    let g_inv_real = to_complex(&real_part(&g_inv));

    let sld_duals = combine(&g_inv_real, &herm_refs(&slds))
        .into_iter()
        .map(HermitianMatrix::new)
        .collect::<Result<Vec<_>>>()?;
    let rld_duals = combine(gt_inv.as_matrix(), &rlds.iter().collect::<Vec<_>>());
    Ok(ScoreSet { slds, rlds, sld_duals, rld_duals })
}

/// Forms the SLD/RLD Fisher matrices, `Z`, `Z̃` and the two inverses.
pub fn fisher_matrices(point: &ModelPoint, scores: &ScoreSet) -> Result<InfoMatrices> {
    let g_c = sld_fisher(point, &scores.slds)?;
    let g = real_part(&g_c);
    let gt = rld_fisher(point, &scores.rlds)?;
    let (g_inv, g_condition) = hermitian_inverse(&HermitianMatrix::from_real(&g)?)?;
    let (gt_inv, gt_condition) = hermitian_inverse(&HermitianMatrix::new(gt.clone())?)?;
    let z = gram(&herm_refs(&scores.sld_duals), |x, y| rld_inner(point.rho(), x, y))?;
    let zt = gram(&scores.rld_duals.iter().collect::<Vec<_>>(), |x, y| sld_inner(point.eig(), x, y))?;
    Ok(InfoMatrices {
        g,
        gt,
        z,
        zt,
        g_inv: real_part(&g_inv),
        gt_inv: gt_inv.into_inner(),
        g_condition,
        gt_condition,
    })
}

/// Scores and information matrices in one call.
pub fn analyze(point: &ModelPoint) -> Result<(ScoreSet, InfoMatrices)> {
    let scores = compute_scores(point)?;
    let mats = fisher_matrices(point, &scores)?;
    Ok((scores, mats))
}

/// How an identity check is judged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Residual must not exceed the tolerance.
    Residual,
    /// Smallest eigenvalue must exceed `−tol`.
    MinEigenvalue,
    /// Reported only.
    Diagnostic,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub tol: f64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, kind: CheckKind, value: f64) {
        let passed = match kind {
            CheckKind::Residual => value <= self.tol,
            CheckKind::MinEigenvalue => value > -self.tol,
            CheckKind::Diagnostic => true,
        };
        self.checks.push(IdentityCheck { name: name.to_string(), kind, value, passed });
    }
}

fn scalar_residual(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).unscale(2.0)
}

/// Runs the identity and inequality checks on one point.
///
/// Checks, by name:
/// - `score_power.k{1,2,3}`: `⟨L_i^k, X⟩_SLD = ⟨L̃_i^k, X⟩_RLD` on random probes `X`
/// - `d_skew.sld`, `d_skew.rld`: `D` is anti-self-adjoint in both inner products
/// - `dual_difference.sld`, `dual_difference.rld`: `Lⁱ − L̃ⁱ` is orthogonal to both tangent spaces
/// - `z_dominates_gt_inv`, `zt_dominates_g_inv`: smallest eigenvalues of `Z − G̃⁻¹`, `Z̃ − G⁻¹`
/// - `cross_inequality.first`, `cross_inequality.second`: smallest eigenvalues of
///   `G + G̃Z̃G̃ − 2G̃` and `G̃ + GZG − 2G`
/// - `d_gram.sld_duals`, `d_gram.mixed_duals`, `d_gram.rld_duals`: `⟨Lⁱ, iD(Lʲ)⟩ = zⁱʲ − gⁱʲ`,
///   `⟨L̃ⁱ, iD(Lʲ)⟩ = g̃ⁱʲ − gⁱʲ`, `⟨L̃ⁱ, iD(L̃ʲ)⟩ = g̃ⁱʲ − z̃ⁱʲ`
/// - `sld_from_rld`: `L_i = (I + iD)(L̃_i)`
/// - `re_z_equals_g_inv`: `Re Z = G⁻¹`
/// - `dual_basis`: biorthogonality of the duals and `tr ρL_i = 0`
/// - `rld_dominates_sld`: smallest eigenvalue of `Re G̃ − G`
/// - `re_z_inverse_vs_g` (diagnostic): `Re(Z⁻¹)` against `G`, which only
///   agree when `Im Z = 0`
pub fn verify_identities(
    point: &ModelPoint,
    scores: &ScoreSet,
    mats: &InfoMatrices,
    tol: f64,
    seed: u64,
) -> Result<IdentityReport> {
    let eig = point.eig();
    let rho = point.rho().as_matrix();
    let n = point.param_count();
    let d = point.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<ComplexMatrix> = (0..3).map(|_| random_complex_matrix(&mut rng, d)).collect();
    let sld = |x: &ComplexMatrix, y: &ComplexMatrix| sld_inner(eig, x, y);
    let rld = |x: &ComplexMatrix, y: &ComplexMatrix| rld_inner(rho, x, y);
    let dop = |x: &ComplexMatrix| commutation_superop(eig, x);
    let mut report = IdentityReport { tol, checks: Vec::new() };

    for k in 1..=3u32 {
        let mut worst = 0f64;
        for i in 0..n {
            let l = scores.slds[i].as_matrix();
            let lt = &scores.rlds[i];
            let (mut lk, mut ltk) = (l.clone(), lt.clone());
            for _ in 1..k {
                lk = &lk * l;
                ltk = &ltk * lt;
            }
            for x in probes.iter().chain(std::iter::once(&ComplexMatrix::identity(d, d))) {
                worst = worst.max(scalar_residual(sld(&lk, x)?, rld(&ltk, x)?));
            }
        }
        report.push(&format!("score_power.k{k}"), CheckKind::Residual, worst);
    }

    let (mut worst_s, mut worst_r) = (0f64, 0f64);
    for pair in probes.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let (dx, dy) = (dop(x)?, dop(y)?);
        worst_s = worst_s.max(scalar_residual(sld(&dx, y)?, -sld(x, &dy)?));
        worst_r = worst_r.max(scalar_residual(rld(&dx, y)?, -rld(x, &dy)?));
    }
    report.push("d_skew.sld", CheckKind::Residual, worst_s);
    report.push("d_skew.rld", CheckKind::Residual, worst_r);

    let (mut worst_s, mut worst_r) = (0f64, 0f64);
    for i in 0..n {
        let m = scores.sld_duals[i].as_matrix() - &scores.rld_duals[i];
        for j in 0..n {
            worst_s = worst_s.max(sld(&scores.slds[j], &m)?.norm());
            worst_r = worst_r.max(rld(&scores.rlds[j], &m)?.norm());
        }
    }
    report.push("dual_difference.sld", CheckKind::Residual, worst_s);
    report.push("dual_difference.rld", CheckKind::Residual, worst_r);

    let g_c = to_complex(&mats.g);
    let g_inv_c = to_complex(&mats.g_inv);
    report.push(
        "z_dominates_gt_inv",
        CheckKind::MinEigenvalue,
        min_eigenvalue(&(&mats.z - &mats.gt_inv))?,
    );
    report.push(
        "zt_dominates_g_inv",
        CheckKind::MinEigenvalue,
        min_eigenvalue(&(&mats.zt - &g_inv_c))?,
    );
    let first = &g_c + &mats.gt * &mats.zt * &mats.gt - mats.gt.scale(2.0);
    let second = &mats.gt + &g_c * &mats.z * &g_c - g_c.scale(2.0);
    report.push("cross_inequality.first", CheckKind::MinEigenvalue, min_eigenvalue(&hermitian_part(&first))?);
    report.push("cross_inequality.second", CheckKind::MinEigenvalue, min_eigenvalue(&hermitian_part(&second))?);

    let mut lhs_a = ComplexMatrix::zeros(n, n);
    let mut lhs_b = ComplexMatrix::zeros(n, n);
    let mut lhs_c = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let id_l = dop(&scores.sld_duals[j])? * I;
        let id_lt = dop(&scores.rld_duals[j])? * I;
        for i in 0..n {
            lhs_a[(i, j)] = sld(&scores.sld_duals[i], &id_l)?;
            lhs_b[(i, j)] = sld(&scores.rld_duals[i], &id_l)?;
            lhs_c[(i, j)] = sld(&scores.rld_duals[i], &id_lt)?;
        }
    }
    report.push("d_gram.sld_duals", CheckKind::Residual, residual(&lhs_a, &(&mats.z - &g_inv_c)));
    report.push("d_gram.mixed_duals", CheckKind::Residual, residual(&lhs_b, &(&mats.gt_inv - &g_inv_c)));
    report.push("d_gram.rld_duals", CheckKind::Residual, residual(&lhs_c, &(&mats.gt_inv - &mats.zt)));

    let mut worst = 0f64;
    for (l, lt) in scores.slds.iter().zip(&scores.rlds) {
        let rebuilt = lt + dop(lt)? * I;
        worst = worst.max(residual(l, &rebuilt));
    }
    report.push("sld_from_rld", CheckKind::Residual, worst);

    report.push("re_z_equals_g_inv", CheckKind::Residual, residual_real(&real_part(&mats.z), &mats.g_inv));
    report.push("dual_basis", CheckKind::Residual, score_invariant_residual(point, scores)?);
    report.push(
        "rld_dominates_sld",
        CheckKind::MinEigenvalue,
        min_eigenvalue(&to_complex(&(real_part(&mats.gt) - &mats.g)))?,
    );
    let re_z_inv = match hermitian_inverse(&HermitianMatrix::new(mats.z.clone())?) {
        Ok((inv, _)) => residual_real(&real_part(&inv), &mats.g),
        Err(_) => f64::NAN,
    };
    report.push("re_z_inverse_vs_g", CheckKind::Diagnostic, re_z_inv);
    Ok(report)
}

/// `‖Im Z‖_F`, exposed for callers that only need the quantumness measure.
pub fn imag_z_norm(mats: &InfoMatrices) -> f64 {
    imag_part(&mats.z).norm()
}

/// Checks the dual-basis relations and tracelessness of the scores.
pub fn score_invariant_residual(point: &ModelPoint, scores: &ScoreSet) -> Result<f64> {
    let n = scores.slds.len();
    let mut worst = 0f64;
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            let s = sld_inner(point.eig(), &scores.sld_duals[i], &scores.slds[j])?;
            let r = rld_inner(point.rho(), &scores.rld_duals[i], &scores.rlds[j])?;
            worst = worst.max((s - delta).norm()).max((r - delta).norm());
        }
        let tr = (point.rho().as_matrix() * scores.slds[i].as_matrix()).trace();
        worst = worst.max(tr.norm());
    }
    if !worst.is_finite() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    Ok(worst)
}
