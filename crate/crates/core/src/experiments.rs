//! Experiment drivers: tabular data for each named experiment, as plain records
//! plus CSV writers. Trials run on the rayon pool with one random stream per
//! trial index, and results are collected in index order so that output does
//! not depend on the number of workers.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{
    ScalingParams, criterion_region_jordan, criterion_region_noise, diagonal_boundary,
    jordan_bound_equal, jordan_boundary, limit_effect_measure, limit_unsharpness,
    noise_bound_dichotomic, noise_bound_equal, noise_boundary,
};
use crate::criteria::{CriterionReport, Criterion, Verdict, check_all};
use crate::error::{Error, Result};
use crate::linalg::{C64, ComplexMatrix, HermitianMatrix, lanczos_max_abs};
use crate::povm::{Povm, write_povm};
use crate::probrange::{
    ProbPoint, circle_example, diag_polytope, diagonal_example, pure_state_point,
};
use crate::sampling::{EnsembleParams, RandomStream, haar_effect_factor, sample_povm};
use crate::stats::{MeanEstimate, ks_statistic_with_atoms};
use crate::weingarten::moment_exact;

/// Eigenvalues this close to 0 or 1 are counted as atoms.
pub const ATOM_TOL: f64 = 1e-6;
pub const FIG5_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig5,
    Table1,
    Fig6,
    Fig7,
    Fig1,
    Moments,
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig5" => Self::Fig5,
            "table1" => Self::Table1,
            "fig6" => Self::Fig6,
            "fig7" => Self::Fig7,
            "fig1" => Self::Fig1,
            "moments" => Self::Moments,
            other => return Err(Error::Parse(format!("unknown experiment '{other}'"))),
        })
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Fig5 => "fig5",
            Self::Table1 => "table1",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig1 => "fig1",
            Self::Moments => "moments",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub params: Option<EnsembleParams>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if let Some(p) = &self.params {
            p.validate()?;
        }
        Ok(())
    }
}

/// A CSV table: header plus rows of already-formatted fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(crate::probrange::csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(crate::probrange::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON object per row; fields that parse as numbers become numbers, empty fields become null.
    pub fn to_json(&self) -> serde_json::Value {
        let records = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| {
                        let value = if v.is_empty() {
                            serde_json::Value::Null
                        } else if let Ok(x) = v.parse::<f64>() {
                            serde_json::json!(x)
                        } else {
                            serde_json::Value::String(v.clone())
                        };
                        (h.clone(), value)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(records)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `count` POVMs drawn with streams `(seed, 0..count)` into `dir`.
pub fn sample_files(params: &EnsembleParams, count: usize, seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    params.validate()?;
    std::fs::create_dir_all(dir)?;
    let povms: Vec<Povm> = (0..count as u64)
        .into_par_iter()
        .map(|i| sample_povm(params, &mut RandomStream::new(seed, i)))
        .collect::<Result<_>>()?;
    povms
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let path = dir.join(format!("povm_{i:04}.json"));
            write_povm(p, &path)?;
            Ok(path)
        })
        .collect()
}

/// Eigenvalues of `X X†`, taken from the smaller of `X X†` and `X† X`.
fn gram_eigenvalues(x: &ComplexMatrix) -> Result<Vec<f64>> {
    let (d, n) = (x.rows(), x.cols());
    let small = if d <= n { x.matmul_adjoint(x)? } else { x.adjoint_matmul(x)? };
    let mut vals = HermitianMatrix::new(small)?.eigenvalues()?;
    vals.resize(d, 0.0);
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenvalues of `M_1` for one Haar POVM `(d, k, n)`.
pub fn haar_effect_eigenvalues(d: usize, k: usize, n: usize, stream: &mut RandomStream) -> Result<Vec<f64>> {
    gram_eigenvalues(&haar_effect_factor(d, k, n, stream)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Bin {
    pub center: f64,
    pub empirical_density: f64,
    pub limit_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Atom {
    pub location: f64,
    pub empirical_mass: f64,
    pub limit_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Result {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub t: f64,
    pub ks_statistic: f64,
    pub bins: Vec<Fig5Bin>,
    pub atoms: Vec<Fig5Atom>,
    pub curve: Vec<(f64, f64)>,
}

impl Fig5Result {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["kind", "bin_center", "empirical_density", "x", "limit_density"]);
        for b in &self.bins {
            t.push(vec!["bin".into(), num(b.center), num(b.empirical_density), num(b.center), num(b.limit_density)]);
        }
        for (x, y) in &self.curve {
            t.push(vec!["curve".into(), String::new(), String::new(), num(*x), num(*y)]);
        }
        for a in &self.atoms {
            t.push(vec!["atom".into(), String::new(), num(a.empirical_mass), num(a.location), num(a.limit_mass)]);
        }
        t
    }
}

/// Snaps eigenvalues within [`ATOM_TOL`] of 0 or 1 onto the endpoint.
pub fn snap_atoms(vals: &mut [f64]) {
    for v in vals {
        if v.abs() <= ATOM_TOL {
            *v = 0.0;
        } else if (*v - 1.0).abs() <= ATOM_TOL {
            *v = 1.0;
        }
    }
}

/// KS distance between an eigenvalue sample and the limiting law with parameters `(k, t)`.
pub fn ks_against_limit(vals: &[f64], k: usize, t: f64) -> Result<f64> {
    let mu = limit_effect_measure(&ScalingParams::new(k, t)?);
    let mut snapped = vals.to_vec();
    snap_atoms(&mut snapped);
    let d = ks_statistic_with_atoms(
        &snapped,
        |x| mu.cdf(x).unwrap_or(f64::NAN),
        |x| mu.cdf_left(x).unwrap_or(f64::NAN),
    );
    if !d.is_finite() {
        return Err(Error::NoConvergence("limiting CDF evaluation failed".into()));
    }
    Ok(d)
}

/// Histogram of one sample of `M_1` against the limiting density.
pub fn fig5(d: usize, k: usize, n: usize, seed: u64) -> Result<Fig5Result> {
    let t = d as f64 / (k * n) as f64;
    let mu = limit_effect_measure(&ScalingParams::new(k, t)?);
    let mut vals = haar_effect_eigenvalues(d, k, n, &mut RandomStream::new(seed, 0))?;
    snap_atoms(&mut vals);
    let ks_statistic = ks_against_limit(&vals, k, t)?;
    let width = 1.0 / FIG5_BINS as f64;
    let mut counts = vec![0usize; FIG5_BINS];
    let (mut at0, mut at1) = (0usize, 0usize);
    for &v in &vals {
        if v == 0.0 {
            at0 += 1;
        } else if v == 1.0 {
            at1 += 1;
        } else {
            counts[((v / width) as usize).min(FIG5_BINS - 1)] += 1;
        }
    }
    let df = d as f64;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let center = (i as f64 + 0.5) * width;
            Fig5Bin {
                center,
                empirical_density: c as f64 / (df * width),
                limit_density: mu.density(center),
            }
        })
        .collect();
    let atoms = [(0.0, at0), (1.0, at1)]
        .into_iter()
        .map(|(location, c)| Fig5Atom {
            location,
            empirical_mass: c as f64 / df,
            limit_mass: mu.atom_mass_at(location),
        })
        .collect();
    let curve = (1..400).map(|i| {
        let x = i as f64 / 400.0;
        (x, mu.density(x))
    }).collect();
    Ok(Fig5Result { d, k, n, t, ks_statistic, bins, atoms, curve })
}

/// `4‖[XX†, YY†]‖²` through Lanczos on the Hermitian operator `i[A, B]`.
pub fn commutator_norm_sq_factored(x: &ComplexMatrix, y: &ComplexMatrix, start: &[C64]) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch("factors act on different dimensions".into()));
    }
    let d = x.rows();
    let c = x.adjoint_matmul(y)?;
    let c_adj = c.adjoint();
    let i = C64::new(0.0, 1.0);
    let apply = |v: &[C64]| -> Vec<C64> {
        let ab = x.matvec(&c.matvec(&y.adjoint_matvec(v)));
        let ba = y.matvec(&c_adj.matvec(&x.adjoint_matvec(v)));
        ab.iter().zip(&ba).map(|(p, q)| i * (p - q)).collect()
    };
    let top = lanczos_max_abs(d, apply, start, d.min(400), 1e-10)?;
    Ok(4.0 * top * top)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Cell {
    pub k: usize,
    pub s: f64,
    pub d: usize,
    pub n: usize,
    pub pairs: usize,
    pub mean: f64,
    pub std_error: f64,
    pub values: Vec<f64>,
}

/// `d = ⌊s k n⌋`, guarded against the floating-point product landing just below an integer.
pub fn table1_dimension(k: usize, s: f64, n: usize) -> usize {
    (s * (k * n) as f64 + 1e-9).floor() as usize
}

/// Mean of `4‖[A_1, B_1]‖²` over independent Haar POVM pairs; pair `j`
/// draws from streams `(seed, base + 3j)`, `(seed, base + 3j + 1)` and uses `base + 3j + 2` for Lanczos.
pub fn table1_cell(k: usize, s: f64, n: usize, pairs: usize, seed: u64, base: u64) -> Result<Table1Cell> {
    let d = table1_dimension(k, s, n);
    if d == 0 {
        return Err(Error::InvalidParameter(format!("s = {s} gives d = 0")));
    }
    let values: Vec<f64> = (0..pairs as u64)
        .into_par_iter()
        .map(|j| {
            let idx = base + 3 * j;
            let x = haar_effect_factor(d, k, n, &mut RandomStream::new(seed, idx))?;
            let y = haar_effect_factor(d, k, n, &mut RandomStream::new(seed, idx + 1))?;
            let start = RandomStream::new(seed, idx + 2).unit_vector(d);
            commutator_norm_sq_factored(&x, &y, &start)
        })
        .collect::<Result<_>>()?;
    let est = MeanEstimate::from_samples(&values);
    Ok(Table1Cell { k, s, d, n, pairs, mean: est.mean, std_error: est.std_error, values })
}

pub fn table1(ks: &[usize], ss: &[f64], n: usize, pairs: usize, seed: u64) -> Result<Vec<Table1Cell>> {
    let mut cells = Vec::with_capacity(ks.len() * ss.len());
    for (a, &k) in ks.iter().enumerate() {
        for (b, &s) in ss.iter().enumerate() {
            let base = ((a * ss.len() + b) as u64) << 32;
            cells.push(table1_cell(k, s, n, pairs, seed, base)?);
        }
    }
    Ok(cells)
}

pub fn table1_table(cells: &[Table1Cell]) -> Table {
    let mut t = Table::new(&["k", "s", "d", "n", "pairs", "mean", "std_error"]);
    for c in cells {
        t.push(vec![
            c.k.to_string(),
            num(c.s),
            c.d.to_string(),
            c.n.to_string(),
            c.pairs.to_string(),
            num(c.mean),
            num(c.std_error),
        ]);
    }
    t
}

/// `(s, σ(k, s), 4(k⁻¹ - k⁻²), 1)` at midpoints of `grid` equal cells of `(0, 1)`.
pub fn fig6(k: usize, grid: usize) -> Result<Table> {
    let kf = k as f64;
    let lower = 4.0 * (1.0 / kf - 1.0 / (kf * kf));
    let mut t = Table::new(&["s", "sigma", "lower_reference", "upper_reference"]);
    for i in 0..grid {
        let s = (i as f64 + 0.5) / grid as f64;
        let sigma = limit_unsharpness(&ScalingParams::new(k, s)?);
        t.push(vec![num(s), num(sigma), num(lower), num(1.0)]);
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fig7Mode {
    /// Identically distributed POVMs: boundary in `s` as a function of `k`.
    Ks,
    /// Dichotomic POVMs: boundary in `t` as a function of `s`.
    St,
}

impl FromStr for Fig7Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ks" => Ok(Self::Ks),
            "st" => Ok(Self::St),
            other => Err(Error::Parse(format!("unknown fig7 mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig7Row {
    pub abscissa: f64,
    pub noise: Option<f64>,
    pub noise_closed_form: Option<f64>,
    pub jordan: Option<f64>,
    /// `ks`: the closed-form Jordan bound; `st`: the boundary of the simplified dichotomic condition.
    pub jordan_closed_form: Option<f64>,
}

/// Largest `t` with `√(s(1-s)) + √(t(1-t)) < 1/4`.
fn jordan_simplified_boundary(s: f64) -> Option<f64> {
    let c = 0.25 - (s * (1.0 - s)).sqrt();
    (c > 0.0).then(|| 0.5 * (1.0 - (1.0 - 4.0 * c * c).sqrt()))
}

/// Boundary curves of the two compatibility regions. In `ks` mode the
/// abscissae are `k = 2, …, grid + 1`; in `st` mode they are `grid`
/// midpoints of `(0, 1/2)`.
pub fn fig7(mode: Fig7Mode, grid: usize) -> Result<Vec<Fig7Row>> {
    let mut rows = Vec::with_capacity(grid);
    match mode {
        Fig7Mode::Ks => {
            for k in 2..grid + 2 {
                rows.push(Fig7Row {
                    abscissa: k as f64,
                    noise: diagonal_boundary(k, criterion_region_noise),
                    noise_closed_form: Some(noise_bound_equal(k)),
                    jordan: diagonal_boundary(k, criterion_region_jordan),
                    jordan_closed_form: Some(jordan_bound_equal(k)),
                });
            }
        }
        Fig7Mode::St => {
            for i in 0..grid {
                let s = 0.5 * (i as f64 + 0.5) / grid as f64;
                let a = ScalingParams::new(2, s)?;
                rows.push(Fig7Row {
                    abscissa: s,
                    noise: noise_boundary(&a, 2),
                    noise_closed_form: noise_bound_dichotomic(s),
                    jordan: jordan_boundary(&a, 2),
                    jordan_closed_form: jordan_simplified_boundary(s),
                });
            }
        }
    }
    Ok(rows)
}

pub fn fig7_table(mode: Fig7Mode, rows: &[Fig7Row]) -> Table {
    let first = match mode {
        Fig7Mode::Ks => "k",
        Fig7Mode::St => "s",
    };
    let mut t = Table::new(&[first, "noise_bound", "noise_closed_form", "jordan_bound", "jordan_closed_form"]);
    for r in rows {
        t.push(vec![
            num(r.abscissa),
            opt(r.noise),
            opt(r.noise_closed_form),
            opt(r.jordan),
            opt(r.jordan_closed_form),
        ]);
    }
    t
}

/// Grid points where the noise-content region holds but the Jordan region does not,
/// over `grid × grid` points; in `ks` mode `k = 2, …, grid + 1` against `s`.
pub fn region_dominance_violations(mode: Fig7Mode, grid: usize) -> Result<Vec<(f64, f64)>> {
    let mut bad = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let y = (j as f64 + 0.5) / grid as f64;
            let (a, b, x) = match mode {
                Fig7Mode::Ks => {
                    let k = i + 2;
                    let p = ScalingParams::new(k, y)?;
                    (p, p, k as f64)
                }
                Fig7Mode::St => {
                    let x = (i as f64 + 0.5) / grid as f64;
                    (ScalingParams::new(2, x)?, ScalingParams::new(2, y)?, x)
                }
            };
            if criterion_region_noise(&a, &b) && !criterion_region_jordan(&a, &b) {
                bad.push((x, y));
            }
        }
    }
    Ok(bad)
}

/// Probability-range data for the two three-outcome examples: polytope
/// vertices and sampled points for the diagonal POVM, sampled points for the
/// circle POVM.
pub fn fig1(samples: usize, seed: u64) -> Result<Table> {
    let diag = diagonal_example();
    let circle = circle_example();
    let mut t = Table::new(&["panel", "kind", "q1", "q2", "q3"]);
    let row = |panel: &str, kind: &str, p: &ProbPoint| {
        let mut r = vec![panel.to_string(), kind.to_string()];
        r.extend(p.as_slice().iter().map(|&x| num(x)));
        r
    };
    for v in diag_polytope(&diag)?.vertices {
        t.push(row("diagonal", "vertex", &v));
    }
    for (panel, p, index) in [("diagonal", &diag, 0u64), ("circle", &circle, 1u64)] {
        let mut stream = RandomStream::new(seed, index);
        for _ in 0..samples {
            let psi = stream.unit_vector(p.dim());
            t.push(row(panel, "point", &pure_state_point(p, &psi)?));
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub p: usize,
    pub exact: f64,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Empirical `E Tr M_1^p`, `p = 1..=max_p`, from full Haar POVM draws, next to the exact values.
pub fn moments(d: usize, k: usize, n: usize, max_p: usize, trials: usize, seed: u64) -> Result<Vec<MomentRow>> {
    let params = EnsembleParams::Haar { d, k, n };
    params.validate()?;
    let traces: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let povm = sample_povm(&params, &mut RandomStream::new(seed, i))?;
            let vals = povm.effects()[0].matrix().eigenvalues()?;
            Ok((1..=max_p).map(|p| vals.iter().map(|v| v.powi(p as i32)).sum()).collect())
        })
        .collect::<Result<_>>()?;
    (1..=max_p)
        .map(|p| {
            let xs: Vec<f64> = traces.iter().map(|t| t[p - 1]).collect();
            let est = MeanEstimate::from_samples(&xs);
            Ok(MomentRow {
                p,
                exact: moment_exact(d as u64, k as u64, n as u64, p)?,
                mean: est.mean,
                std_error: est.std_error,
                trials,
            })
        })
        .collect()
}

pub fn moments_table(rows: &[MomentRow]) -> Table {
    let mut t = Table::new(&["p", "exact", "mean", "std_error", "trials"]);
    for r in rows {
        t.push(vec![r.p.to_string(), num(r.exact), num(r.mean), num(r.std_error), r.trials.to_string()]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Summary {
    Compatible,
    Incompatible,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaBundle {
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decided_by: Option<Criterion>,
    pub reports: Vec<CriterionReport>,
}

/// Runs every criterion. Any incompatibility certificate decides the summary,
/// then any compatibility certificate; holding both is reported as an error.
pub fn criteria_bundle(a: &Povm, b: &Povm) -> Result<CriteriaBundle> {
    let reports = check_all(a, b)?;
    let first = |v: Verdict| reports.iter().find(|r| r.verdict == v).map(|r| r.criterion);
    let (inc, comp) = (first(Verdict::IncompatibleCertified), first(Verdict::CompatibleCertified));
    let (summary, decided_by) = match (inc, comp) {
        (Some(x), Some(y)) => {
            return Err(Error::Validation(format!(
                "conflicting certificates: {x:?} certifies incompatibility, {y:?} compatibility"
            )));
        }
        (Some(x), None) => (Summary::Incompatible, Some(x)),
        (None, Some(y)) => (Summary::Compatible, Some(y)),
        (None, None) => (Summary::Unknown, None),
    };
    Ok(CriteriaBundle { summary, decided_by, reports })
}
