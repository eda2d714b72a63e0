//! Finite-dimensional POVM statistics and (in)compatibility criteria.
//!
//! Each `check_*` function returns a [`CriterionReport`]. Compatibility
//! verdicts always carry an explicit joint POVM that has been verified
//! before the verdict is issued.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    C64, ComplexMatrix, HermitianMatrix, nonnegative_projector, positive_part, trace_norm,
};
use crate::povm::{Effect, JointPovm, NORM_TOL, PSD_TOL, Povm, commutator_norm, jordan_product};

/// Slack used for every strict or non-strict inequality a verdict depends on.
pub const CERT_SLACK: f64 = 1e-9;

/// Largest dimension for which Zhu's superoperators are formed explicitly.
pub const ZHU_DENSE_MAX_DIM: usize = 12;

/// Largest outcome count for the exhaustive regularity sweep.
pub const REGULARITY_MAX_OUTCOMES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    NoiseContent,
    Jordan,
    JordanLemma,
    Cloning,
    MiyaderaImai,
    Zhu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CompatibleCertified,
    IncompatibleCertified,
    Inconclusive,
}

/// One `(i, j)` comparison `lhs` vs `rhs` of a pairwise criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMargin {
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Joint(JointPovm),
    /// `H* = 𝒢_B + (𝒢_A - 𝒢_B)₊` when formed explicitly, and the dual objective value.
    Zhu {
        h: Option<HermitianMatrix>,
        dual_value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub margins: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_pair: Option<(usize, usize)>,
    pub near_boundary: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairMargin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_path: Option<String>,
    #[serde(skip)]
    pub witness: Option<Witness>,
}

impl CriterionReport {
    fn new(criterion: Criterion, verdict: Verdict) -> Self {
        Self {
            criterion,
            verdict,
            tau: None,
            margins: BTreeMap::new(),
            worst_pair: None,
            near_boundary: false,
            pairs: Vec::new(),
            diagnostic: None,
            witness_path: None,
            witness: None,
        }
    }

    fn margin(mut self, name: &str, value: f64) -> Self {
        self.margins.insert(name.to_string(), value);
        self
    }

    pub fn joint(&self) -> Option<&JointPovm> {
        match &self.witness {
            Some(Witness::Joint(g)) => Some(g),
            _ => None,
        }
    }
}

fn same_dim(a: &Povm, b: &Povm) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVMs act on dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.dim())
}

/// Issues a compatibility certificate only if `joint` reproduces `(a, b)` and is positive.
fn certify_joint(mut report: CriterionReport, joint: JointPovm, a: &Povm, b: &Povm) -> Result<CriterionReport> {
    let defect = joint.marginal_defect(a, b)?;
    let lam = joint.min_eigenvalue()?;
    report = report.margin("joint_marginal_defect", defect).margin("joint_min_eigenvalue", lam);
    if defect <= NORM_TOL && lam >= -PSD_TOL {
        report.verdict = Verdict::CompatibleCertified;
        report.witness = Some(Witness::Joint(joint));
    } else {
        report.verdict = Verdict::Inconclusive;
        report.diagnostic = Some(format!(
            "constructed joint failed verification (marginal defect {defect:e}, λ_min {lam:e})"
        ));
    }
    Ok(report)
}

/// `4 ‖E - E²‖`.
pub fn sharpness(e: &Effect) -> Result<f64> {
    let vals = e.matrix().eigenvalues()?;
    Ok(vals
        .iter()
        .map(|&x| 4.0 * (x - x * x).abs())
        .fold(0.0, f64::max))
}

/// `max_i σ(A_i)`.
pub fn povm_unsharpness(p: &Povm) -> Result<f64> {
    p.effects()
        .iter()
        .map(sharpness)
        .try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

fn min_eigenvalues(p: &Povm) -> Result<Vec<f64>> {
    p.matrices().map(|m| Ok(m.lambda_min()?.max(0.0))).collect()
}

/// `w(A) = ∑_i λ_min(A_i)`.
pub fn noise_content(p: &Povm) -> Result<f64> {
    Ok(min_eigenvalues(p)?.iter().sum())
}

/// `w^u(A) = min_i λ_min(A_i)`.
pub fn uniform_noise_content(p: &Povm) -> Result<f64> {
    Ok(min_eigenvalues(p)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// No proper, non-empty `A_X` satisfies `A_X ⪯ I/2` or `A_X ⪰ I/2`.
pub fn is_regular(p: &Povm) -> Result<bool> {
    let k = p.outcomes();
    if k > REGULARITY_MAX_OUTCOMES {
        return Err(Error::Unsupported(format!(
            "regularity sweep over 2^{k} subsets exceeds the cap of {REGULARITY_MAX_OUTCOMES} outcomes"
        )));
    }
    let d = p.dim();
    let mats: Vec<&ComplexMatrix> = p.matrices().map(|m| m.matrix()).collect();
    for mask in 1u32..(1u32 << k) - 1 {
        let mut acc = ComplexMatrix::zeros(d, d);
        for (i, m) in mats.iter().enumerate() {
            if mask & (1 << i) != 0 {
                acc = acc.add(m)?;
            }
        }
        let vals = HermitianMatrix::new(acc)?.eigenvalues()?;
        let (lo, hi) = (vals[0], vals[d - 1]);
        if hi <= 0.5 + CERT_SLACK || lo >= 0.5 - CERT_SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `λ_max(A_i) ≥ 1 - tol` for every outcome.
pub fn has_norm1(p: &Povm, tol: f64) -> Result<bool> {
    for m in p.matrices() {
        if m.lambda_max()? < 1.0 - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compatible if `w(A) + w(B) ≥ 1`; the joint is `M_ij = t q_j A'_i + s p_i B'_j`.
pub fn check_noise_content(a: &Povm, b: &Povm) -> Result<CriterionReport> {
    let d = same_dim(a, b)?;
    let la = min_eigenvalues(a)?;
    let lb = min_eigenvalues(b)?;
    let (wa, wb): (f64, f64) = (la.iter().sum(), lb.iter().sum());
    let total = wa + wb;
    let mut report = CriterionReport::new(Criterion::NoiseContent, Verdict::Inconclusive)
        .margin("w_a", wa)
        .margin("w_b", wb)
        .margin("excess", total - 1.0);
    report.near_boundary = (total - 1.0).abs() <= CERT_SLACK;
    if total < 1.0 - CERT_SLACK {
        return Ok(report);
    }
    let (s, t) = (wa / total, wb / total);
    let split = |p: &Povm, lam: &[f64], w: f64, weight: f64| -> Result<(Vec<f64>, Vec<HermitianMatrix>)> {
        let probs: Vec<f64> = lam.iter().map(|&l| if w > 0.0 { l / w } else { 0.0 }).collect();
        let rest = p
            .matrices()
            .zip(&probs)
            .map(|(m, &pi)| {
                if weight < 1.0 {
                    m.shift(-weight * pi).scale(1.0 / (1.0 - weight))
                } else {
                    m.clone()
                }
            })
            .collect();
        Ok((probs, rest))
    };
    let (p, a_rest) = split(a, &la, wa, s)?;
    let (q, b_rest) = split(b, &lb, wb, t)?;
    let mut effects = Vec::with_capacity(a.outcomes() * b.outcomes());
    for (ai, &pi) in a_rest.iter().zip(&p) {
        for (bj, &qj) in b_rest.iter().zip(&q) {
            effects.push(ai.scale(t * qj).add(&bj.scale(s * pi))?);
        }
    }
    debug_assert!(effects.iter().all(|e| e.dim() == d));
    let joint = JointPovm::new(a.outcomes(), b.outcomes(), effects)?;
    certify_joint(report, joint, a, b)
}

fn jordan_joint(a: &Povm, b: &Povm) -> Result<(JointPovm, f64, (usize, usize))> {
    let mut effects = Vec::with_capacity(a.outcomes() * b.outcomes());
    let mut worst = f64::INFINITY;
    let mut worst_pair = (0, 0);
    for (i, ai) in a.effects().iter().enumerate() {
        for (j, bj) in b.effects().iter().enumerate() {
            let jp = jordan_product(ai, bj)?;
            let lam = jp.lambda_min()?;
            if lam < worst {
                worst = lam;
                worst_pair = (i, j);
            }
            effects.push(jp.scale(0.5));
        }
    }
    Ok((JointPovm::new(a.outcomes(), b.outcomes(), effects)?, worst, worst_pair))
}

/// Compatible if every `A_i ∘ B_j ⪰ 0`; the joint is `M_ij = (A_i ∘ B_j)/2`.
pub fn check_jordan(a: &Povm, b: &Povm) -> Result<CriterionReport> {
    same_dim(a, b)?;
    let (joint, worst, pair) = jordan_joint(a, b)?;
    let mut report = CriterionReport::new(Criterion::Jordan, Verdict::Inconclusive)
        .margin("min_jordan_eigenvalue", worst);
    report.worst_pair = Some(pair);
    report.near_boundary = worst.abs() <= CERT_SLACK;
    if worst < -CERT_SLACK {
        return Ok(report);
    }
    certify_joint(report, joint, a, b)
}

/// Condition number `λ_max/λ_min` of each effect, or `None` if one is singular.
fn condition_numbers(p: &Povm) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(p.outcomes());
    for m in p.matrices() {
        let vals = m.eigenvalues()?;
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        if lo <= 0.0 {
            return Ok(None);
        }
        out.push(hi / lo);
    }
    Ok(Some(out))
}

/// Compatible if `(√R(A_i) - 1)(√R(B_j) - 1) < 2` for all pairs, which forces every Jordan product positive.
pub fn check_jordan_lemma(a: &Povm, b: &Povm) -> Result<CriterionReport> {
    same_dim(a, b)?;
    let mut report = CriterionReport::new(Criterion::JordanLemma, Verdict::Inconclusive);
    let (Some(ra), Some(rb)) = (condition_numbers(a)?, condition_numbers(b)?) else {
        report.diagnostic = Some("an effect is singular, so R is infinite".into());
        return Ok(report);
    };
    let mut worst = f64::NEG_INFINITY;
    for (i, x) in ra.iter().enumerate() {
        for (j, y) in rb.iter().enumerate() {
            let lhs = (x.sqrt() - 1.0) * (y.sqrt() - 1.0);
            if lhs > worst {
                worst = lhs;
                report.worst_pair = Some((i, j));
            }
        }
    }
    report = report.margin("max_product", worst).margin("slack", 2.0 - worst);
    report.near_boundary = (2.0 - worst).abs() <= CERT_SLACK;
    if worst >= 2.0 - CERT_SLACK {
        return Ok(report);
    }
    let (joint, lam, _) = jordan_joint(a, b)?;
    report = report.margin("min_jordan_eigenvalue", lam);
    certify_joint(report, joint, a, b)
}

/// Compatible if `λ_min(X_i) ≥ Tr X_i / (2(1+d))` for all effects of both POVMs.
///
/// The joint is the cloning-machine pull-back
/// `G_ij = (A'_i Tr B'_j + B'_j Tr A'_i + A'_i ∘ B'_j) / (2(d+1))`
/// with `A'_i = (A_i - (1-c)/d · Tr A_i · I)/c`, `c = (d+2)/(2d+2)`.
pub fn check_cloning(a: &Povm, b: &Povm) -> Result<CriterionReport> {
    let d = same_dim(a, b)?;
    let df = d as f64;
    let threshold = 1.0 / (2.0 * (1.0 + df));
    let margin_of = |p: &Povm| -> Result<f64> {
        p.matrices()
            .map(|m| Ok(m.lambda_min()? - threshold * m.trace()))
            .try_fold(f64::INFINITY, |acc, v: Result<f64>| Ok(acc.min(v?)))
    };
    let (ma, mb) = (margin_of(a)?, margin_of(b)?);
    let mut report = CriterionReport::new(Criterion::Cloning, Verdict::Inconclusive)
        .margin("margin_a", ma)
        .margin("margin_b", mb);
    report.near_boundary = ma.abs() <= CERT_SLACK || mb.abs() <= CERT_SLACK;
    if ma < -CERT_SLACK || mb < -CERT_SLACK {
        return Ok(report);
    }
    let c = (df + 2.0) / (2.0 * df + 2.0);
    let unclone = |p: &Povm| -> Vec<HermitianMatrix> {
        p.matrices()
            .map(|m| m.shift(-(1.0 - c) / df * m.trace()).scale(1.0 / c))
            .collect()
    };
    let (ap, bp) = (unclone(a), unclone(b));
    let norm = 1.0 / (2.0 * (df + 1.0));
    let mut effects = Vec::with_capacity(ap.len() * bp.len());
    for x in &ap {
        for y in &bp {
            let xy = x.matrix().matmul(y.matrix())?;
            let anti = HermitianMatrix::new(xy.add(&xy.adjoint())?)?;
            let g = x.scale(y.trace()).add(&y.scale(x.trace()))?.add(&anti)?;
            effects.push(g.scale(norm));
        }
    }
    let joint = JointPovm::new(a.outcomes(), b.outcomes(), effects)?;
    certify_joint(report, joint, a, b)
}

/// Incompatible if `4‖[A_i, B_j]‖² > σ(A_i) σ(B_j)` for every pair.
pub fn check_miyadera_imai(a: &Povm, b: &Povm) -> Result<CriterionReport> {
    same_dim(a, b)?;
    let sa = a.effects().iter().map(sharpness).collect::<Result<Vec<_>>>()?;
    let sb = b.effects().iter().map(sharpness).collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::with_capacity(sa.len() * sb.len());
    for (i, ai) in a.effects().iter().enumerate() {
        for (j, bj) in b.effects().iter().enumerate() {
            let c = commutator_norm(ai, bj)?;
            pairs.push(PairMargin {
                i,
                j,
                lhs: 4.0 * c * c,
                rhs: sa[i] * sb[j],
            });
        }
    }
    let worst = pairs
        .iter()
        .min_by(|x, y| (x.lhs - x.rhs).total_cmp(&(y.lhs - y.rhs)))
        .copied()
        .expect("POVMs have at least one outcome");
    let min_margin = worst.lhs - worst.rhs;
    let verdict = if min_margin > CERT_SLACK {
        Verdict::IncompatibleCertified
    } else {
        Verdict::Inconclusive
    };
    let mut report = CriterionReport::new(Criterion::MiyaderaImai, verdict).margin("min_margin", min_margin);
    report.worst_pair = Some((worst.i, worst.j));
    report.near_boundary = min_margin.abs() <= CERT_SLACK;
    report.pairs = pairs;
    Ok(report)
}

/// `𝒢_A = ∑_i |A_i⟩⟨A_i| / Tr A_i`, skipping outcomes of zero trace.
pub fn zhu_superoperator(p: &Povm) -> Result<HermitianMatrix> {
    let d2 = p.dim() * p.dim();
    let cols: Vec<(Vec<C64>, f64)> = weighted_vectors(p);
    let v = ComplexMatrix::from_fn(d2, cols.len(), |r, c| cols[c].0[r] * cols[c].1);
    HermitianMatrix::new(v.matmul_adjoint(&v)?)
}

/// `(vec A_i, 1/√Tr A_i)` for outcomes of positive trace.
fn weighted_vectors(p: &Povm) -> Vec<(Vec<C64>, f64)> {
    p.matrices()
        .filter(|m| m.trace() > 0.0)
        .map(|m| (m.matrix().as_slice().to_vec(), 1.0 / m.trace().sqrt()))
        .collect()
}

/// `Tr 𝒢_A = ∑_i Tr(A_i²)/Tr A_i`.
pub fn zhu_trace(p: &Povm) -> f64 {
    weighted_vectors(p)
        .iter()
        .map(|(v, w)| v.iter().map(|z| z.norm_sqr()).sum::<f64>() * w * w)
        .sum()
}

/// `τ = ½[Tr 𝒢_A + Tr 𝒢_B + ‖𝒢_A - 𝒢_B‖₁]` through the `(k+l)`-dimensional Gram matrix.
///
/// `𝒢_A - 𝒢_B = W S W†` with `W = [V_A V_B]` and `S = diag(I, -I)` has the same
/// non-zero spectrum as `K^{1/2} S K^{1/2}`, `K = W†W`.
pub fn zhu_tau_compressed(a: &Povm, b: &Povm) -> Result<f64> {
    same_dim(a, b)?;
    let va = weighted_vectors(a);
    let vb = weighted_vectors(b);
    let all: Vec<(&Vec<C64>, f64, f64)> = va
        .iter()
        .map(|(v, w)| (v, *w, 1.0))
        .chain(vb.iter().map(|(v, w)| (v, *w, -1.0)))
        .collect();
    let m = all.len();
    let gram = ComplexMatrix::from_fn(m, m, |r, c| {
        let dot: C64 = all[r].0.iter().zip(all[c].0).map(|(x, y)| x.conj() * y).sum();
        dot * all[r].1 * all[c].1
    });
    // Restrict to the range of K so that its numerical null space does not leak in.
    let spec = HermitianMatrix::new(gram)?.eig()?;
    let u = spec.eigenvectors.as_ref().expect("eig returns eigenvectors");
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..m).filter(|&c| spec.eigenvalues[c] > 1e-12 * top).collect();
    let signs: Vec<f64> = all.iter().map(|x| x.2).collect();
    let inner = ComplexMatrix::from_fn(keep.len(), keep.len(), |r, c| {
        let (p, q) = (keep[r], keep[c]);
        let dot: C64 = (0..m).map(|x| u[(x, p)].conj() * signs[x] * u[(x, q)]).sum();
        dot * (spec.eigenvalues[p] * spec.eigenvalues[q]).sqrt()
    });
    let inner = HermitianMatrix::new(inner)?;
    let one_norm: f64 = inner.eigenvalues()?.iter().map(|x| x.abs()).sum();
    Ok(0.5 * (zhu_trace(a) + zhu_trace(b) + one_norm))
}

/// Incompatible if `τ(𝒢_A, 𝒢_B) > d`.
pub fn check_zhu(a: &Povm, b: &Povm) -> Result<CriterionReport> {
    let d = same_dim(a, b)?;
    let df = d as f64;
    let mut report = CriterionReport::new(Criterion::Zhu, Verdict::Inconclusive);
    if a.outcomes() + b.outcomes() <= d {
        // τ ≤ Tr 𝒢_A + Tr 𝒢_B ≤ k + l ≤ d
        let bound = zhu_trace(a) + zhu_trace(b);
        report = report.margin("tau_upper_bound", bound).margin("excess_bound", bound - df);
        report.diagnostic = Some("k + l <= d, so tau cannot exceed d".into());
        return Ok(report);
    }
    let (tau, witness) = if d <= ZHU_DENSE_MAX_DIM {
        let ga = zhu_superoperator(a)?;
        let gb = zhu_superoperator(b)?;
        let diff = ga.sub(&gb)?;
        let tau = 0.5 * (ga.trace() + gb.trace() + trace_norm(&diff)?);
        let h = gb.add(&positive_part(&diff)?)?;
        let x = nonnegative_projector(&diff)?;
        let dual = x.matrix().adjoint_matmul(diff.matrix())?.trace().re + gb.trace();
        (tau, Witness::Zhu { h: Some(h), dual_value: dual })
    } else {
        let tau = zhu_tau_compressed(a, b)?;
        (tau, Witness::Zhu { h: None, dual_value: tau })
    };
    report.tau = Some(tau);
    report = report.margin("excess", tau - df);
    report.near_boundary = (tau - df).abs() <= CERT_SLACK;
    if tau > df + CERT_SLACK {
        report.verdict = Verdict::IncompatibleCertified;
    }
    report.witness = Some(witness);
    Ok(report)
}

/// All criteria, in a fixed order.
pub fn check_all(a: &Povm, b: &Povm) -> Result<Vec<CriterionReport>> {
    Ok(vec![
        check_noise_content(a, b)?,
        check_jordan(a, b)?,
        check_jordan_lemma(a, b)?,
        check_cloning(a, b)?,
        check_miyadera_imai(a, b)?,
        check_zhu(a, b)?,
    ])
}
