//! POVMs, their algebra, and the JSON file format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ComplexMatrix, HermitianMatrix};

/// Absolute slack on `λ_min ≥ 0` and `λ_max ≤ 1`.
pub const PSD_TOL: f64 = 1e-9;
/// Max-entry slack on `∑ A_i = I`.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub psd: f64,
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd: PSD_TOL,
            normalization: NORM_TOL,
        }
    }
}

/// An operator `0 ⪯ E ⪯ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(HermitianMatrix);

impl Effect {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let vals = m.eigenvalues()?;
        let lo = vals.first().copied().unwrap_or(0.0);
        let hi = vals.last().copied().unwrap_or(0.0);
        if lo < -PSD_TOL || hi > 1.0 + PSD_TOL {
            return Err(Error::Validation(format!(
                "effect spectrum [{lo:e}, {hi}] leaves [0, 1]"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps `m` without the spectral check; for matrices that are effects by construction.
    pub fn new_unchecked(m: HermitianMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Effect>,
}

/// Worst defects found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `max_i max(0, -λ_min(A_i))`.
    pub psd_defect: f64,
    /// `max_i max(0, λ_max(A_i) - 1)`.
    pub upper_defect: f64,
    /// `‖∑ A_i - I‖_max`.
    pub normalization_defect: f64,
    pub psd_ok: bool,
    pub normalization_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.psd_ok && self.normalization_ok
    }
}

fn check_same_dims(effects: &[HermitianMatrix]) -> Result<usize> {
    let d = effects
        .first()
        .ok_or_else(|| Error::InvalidParameter("a POVM needs at least one outcome".into()))?
        .dim();
    if effects.iter().any(|e| e.dim() != d) {
        return Err(Error::DimensionMismatch("effects of different dimensions".into()));
    }
    Ok(d)
}

/// Checks positivity and normalization of a candidate list of effects.
pub fn validate_effects(effects: &[HermitianMatrix], tol: Tolerances) -> Result<ValidationReport> {
    let d = check_same_dims(effects)?;
    let mut psd_defect: f64 = 0.0;
    let mut upper_defect: f64 = 0.0;
    let mut total = ComplexMatrix::zeros(d, d);
    for e in effects {
        let vals = e.eigenvalues()?;
        if let (Some(&lo), Some(&hi)) = (vals.first(), vals.last()) {
            psd_defect = psd_defect.max(-lo);
            upper_defect = upper_defect.max(hi - 1.0);
        }
        total = total.add(e.matrix())?;
    }
    let normalization_defect = total.sub(&ComplexMatrix::identity(d))?.max_abs();
    Ok(ValidationReport {
        psd_defect,
        upper_defect,
        normalization_defect,
        psd_ok: psd_defect <= tol.psd && upper_defect <= tol.psd,
        normalization_ok: normalization_defect <= tol.normalization,
    })
}

pub fn validate(p: &Povm, tol: Tolerances) -> Result<ValidationReport> {
    let mats: Vec<HermitianMatrix> = p.effects.iter().map(|e| e.0.clone()).collect();
    validate_effects(&mats, tol)
}

impl Povm {
    /// Builds and validates with default tolerances.
    pub fn new(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let report = validate_effects(&effects, Tolerances::default())?;
        if !report.passed() {
            return Err(Error::Validation(format!(
                "PSD defect {:e}, upper defect {:e}, normalization defect {:e}",
                report.psd_defect, report.upper_defect, report.normalization_defect
            )));
        }
        Ok(Self::new_unchecked(effects))
    }

    /// Skips validation; for POVMs that are valid by construction.
    pub fn new_unchecked(effects: Vec<HermitianMatrix>) -> Self {
        Self {
            effects: effects.into_iter().map(Effect).collect(),
        }
    }

    /// `(p_1 I, …, p_k I)`.
    pub fn trivial(d: usize, probabilities: &[f64]) -> Result<Self> {
        if probabilities.iter().any(|&p| p < 0.0)
            || (probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidParameter(format!(
                "{probabilities:?} is not a probability vector"
            )));
        }
        Self::new(
            probabilities
                .iter()
                .map(|&p| HermitianMatrix::identity(d).scale(p))
                .collect(),
        )
    }

    /// Rank-one projections onto the columns of a unitary.
    pub fn from_basis(u: &ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::DimensionMismatch("basis matrix must be square".into()));
        }
        Self::new((0..u.cols()).map(|j| HermitianMatrix::outer(&u.column(j))).collect())
    }

    /// Projections onto the computational basis.
    pub fn computational_basis(d: usize) -> Self {
        Self::new_unchecked(
            (0..d)
                .map(|i| {
                    let mut diag = vec![0.0; d];
                    diag[i] = 1.0;
                    HermitianMatrix::from_real_diag(&diag)
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> Result<&Effect> {
        self.effects.get(i).ok_or(Error::OutcomeOutOfRange {
            index: i,
            outcomes: self.outcomes(),
        })
    }

    pub fn matrices(&self) -> impl Iterator<Item = &HermitianMatrix> {
        self.effects.iter().map(|e| &e.0)
    }
}

/// `A_X = ∑_{i ∈ X} A_i`.
pub fn subset_sum(p: &Povm, subset: &[usize]) -> Result<Effect> {
    let d = p.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for &i in subset {
        acc = acc.add(p.effect(i)?.0.matrix())?;
    }
    Ok(Effect(HermitianMatrix::new(acc)?))
}

fn same_dim(e: &Effect, f: &Effect) -> Result<()> {
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "effects of dimension {} and {}",
            e.dim(),
            f.dim()
        )));
    }
    Ok(())
}

/// `EF + FE`.
pub fn jordan_product(e: &Effect, f: &Effect) -> Result<HermitianMatrix> {
    same_dim(e, f)?;
    let ef = e.0.matrix().matmul(f.0.matrix())?;
    HermitianMatrix::new(ef.add(&ef.adjoint())?)
}

/// `‖EF - FE‖`.
pub fn commutator_norm(e: &Effect, f: &Effect) -> Result<f64> {
    same_dim(e, f)?;
    let ef = e.0.matrix().matmul(f.0.matrix())?;
    // i(EF - FE) is Hermitian with the same norm
    let comm = ef.sub(&ef.adjoint())?.scale(C64::new(0.0, 1.0));
    HermitianMatrix::new(comm)?.operator_norm()
}

/// `B_x = ∑_y μ[x][y] A_y` for a column-stochastic `μ` (rows index new outcomes).
pub fn post_process(p: &Povm, mu: &[Vec<f64>]) -> Result<Povm> {
    let k = p.outcomes();
    if mu.is_empty() || mu.iter().any(|row| row.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "post-processing matrix must have {k} columns"
        )));
    }
    for y in 0..k {
        let col: f64 = mu.iter().map(|row| row[y]).sum();
        if mu.iter().any(|row| !(row[y] >= 0.0)) || (col - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "column {y} of the post-processing is not a probability vector"
            )));
        }
    }
    let d = p.dim();
    let effects = mu
        .iter()
        .map(|row| {
            let mut acc = ComplexMatrix::zeros(d, d);
            for (y, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    acc = acc.add(&p.effects[y].0.matrix().scale(C64::from(w)))?;
                }
            }
            HermitianMatrix::new(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm::new_unchecked(effects))
}

/// POVM on the outcome grid `k × l`, stored row-major in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPovm {
    k: usize,
    l: usize,
    effects: Vec<HermitianMatrix>,
}

impl JointPovm {
    pub fn new(k: usize, l: usize, effects: Vec<HermitianMatrix>) -> Result<Self> {
        if k == 0 || l == 0 || effects.len() != k * l {
            return Err(Error::DimensionMismatch(format!(
                "{} joint effects for a {k}x{l} grid",
                effects.len()
            )));
        }
        check_same_dims(&effects)?;
        Ok(Self { k, l, effects })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.k, self.l)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effect(&self, i: usize, j: usize) -> &HermitianMatrix {
        &self.effects[i * self.l + j]
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    /// Smallest eigenvalue over all joint effects.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.effects
            .iter()
            .map(|e| e.lambda_min())
            .try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
    }

    /// Largest max-entry gap between the marginals and `(a, b)`.
    pub fn marginal_defect(&self, a: &Povm, b: &Povm) -> Result<f64> {
        let (ma, mb) = marginal_matrices(self)?;
        if ma.len() != a.outcomes() || mb.len() != b.outcomes() {
            return Err(Error::DimensionMismatch("marginal outcome counts".into()));
        }
        let mut worst: f64 = 0.0;
        for (m, e) in ma.iter().zip(a.matrices()).chain(mb.iter().zip(b.matrices())) {
            worst = worst.max(m.sub(e)?.matrix().max_abs());
        }
        Ok(worst)
    }
}

fn marginal_matrices(g: &JointPovm) -> Result<(Vec<HermitianMatrix>, Vec<HermitianMatrix>)> {
    let d = g.dim();
    let mut rows = vec![ComplexMatrix::zeros(d, d); g.k];
    let mut cols = vec![ComplexMatrix::zeros(d, d); g.l];
    for i in 0..g.k {
        for j in 0..g.l {
            let e = g.effect(i, j).matrix();
            rows[i] = rows[i].add(e)?;
            cols[j] = cols[j].add(e)?;
        }
    }
    let herm = |v: Vec<ComplexMatrix>| v.into_iter().map(HermitianMatrix::new).collect::<Result<Vec<_>>>();
    Ok((herm(rows)?, herm(cols)?))
}

/// `(∑_j G(·, j), ∑_i G(i, ·))`, each validated.
pub fn marginals(g: &JointPovm) -> Result<(Povm, Povm)> {
    let (a, b) = marginal_matrices(g)?;
    Ok((Povm::new(a)?, Povm::new(b)?))
}

/// Row-major flattening, so that `⟨vec X, vec Y⟩ = Tr X†Y`.
pub fn vectorize(e: &HermitianMatrix) -> Vec<C64> {
    e.matrix().as_slice().to_vec()
}

#[derive(Serialize, Deserialize)]
struct PovmFile {
    d: usize,
    k: usize,
    effects: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn to_json(p: &Povm) -> Result<String> {
    let d = p.dim();
    let file = PovmFile {
        d,
        k: p.outcomes(),
        effects: p
            .matrices()
            .map(|m| {
                (0..d)
                    .map(|i| m.matrix().row(i).iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn from_json(text: &str) -> Result<Povm> {
    let file: PovmFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.k == 0 || file.d == 0 {
        return Err(Error::Parse(format!("need d, k >= 1, got d={}, k={}", file.d, file.k)));
    }
    if file.effects.len() != file.k {
        return Err(Error::Parse(format!(
            "declared k={} but found {} effects",
            file.k,
            file.effects.len()
        )));
    }
    let d = file.d;
    let mut mats = Vec::with_capacity(file.k);
    for (idx, rows) in file.effects.iter().enumerate() {
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Parse(format!("effect {idx} is not {d}x{d}")));
        }
        let data = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
        let m = ComplexMatrix::new(d, d, data)?;
        mats.push(HermitianMatrix::new(m).map_err(|e| Error::Validation(format!("effect {idx}: {e}")))?);
    }
    Povm::new(mats)
}

pub fn write_povm(p: &Povm, path: &Path) -> Result<()> {
    fs::write(path, to_json(p)?)?;
    Ok(())
}

pub fn read_povm(path: &Path) -> Result<Povm> {
    from_json(&fs::read_to_string(path)?)
}
