//! Random matrix ensembles and random POVM samplers.
//!
//! Every draw comes from a [`RandomStream`], so a `(seed, index)` pair fully
//! determines its output regardless of how trials are scheduled.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    C64, ComplexMatrix, HermitianMatrix, INV_SQRT_TOL, cholesky_lower, inv_sqrt,
    lower_triangular_inverse,
};
use crate::povm::Povm;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random source keyed by a master seed and a stream index.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    index: u64,
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ splitmix64(index);
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Standard complex Gaussian: real and imaginary parts i.i.d. `N(0, 1/2)`.
    pub fn complex_gaussian(&mut self) -> C64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    }

    /// Uniformly distributed unit vector in `C^d`.
    pub fn unit_vector(&mut self, d: usize) -> Vec<C64> {
        loop {
            let v: Vec<C64> = (0..d).map(|_| self.complex_gaussian()).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n > 0.0 {
                return v.into_iter().map(|z| z / n).collect();
            }
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Parameters of the random POVM ensembles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnsembleParams {
    Haar { d: usize, k: usize, n: usize },
    Wishart { d: usize, s: Vec<f64> },
    Lebesgue { d: usize, k: usize },
    BasisMixture { d: usize, t: f64 },
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Haar { d, k, n } => {
                if *d == 0 || *k == 0 || *n == 0 {
                    return Err(Error::InvalidParameter("d, k, n must be positive".into()));
                }
                if d > &(k * n) {
                    return Err(Error::InvalidParameter(format!(
                        "Haar ensemble needs d <= kn, got d={d}, kn={}",
                        k * n
                    )));
                }
            }
            Self::Wishart { d, s } => {
                if *d == 0 || s.is_empty() {
                    return Err(Error::InvalidParameter("need d >= 1 and k >= 1".into()));
                }
                for &si in s {
                    let integral = si.fract() == 0.0 && si >= 1.0;
                    if !(integral || si >= *d as f64) {
                        return Err(Error::InvalidParameter(format!(
                            "Wishart parameter {si} is neither an integer >= 1 nor >= d"
                        )));
                    }
                }
                if s.iter().sum::<f64>() < *d as f64 {
                    return Err(Error::InvalidParameter("need s_1 + ... + s_k >= d".into()));
                }
            }
            Self::Lebesgue { d, k } => {
                if *d == 0 || *k == 0 {
                    return Err(Error::InvalidParameter("d, k must be positive".into()));
                }
            }
            Self::BasisMixture { d, t } => {
                if *d == 0 || !(0.0..=1.0).contains(t) {
                    return Err(Error::InvalidParameter(format!(
                        "need d >= 1 and t in [0, 1], got d={d}, t={t}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Haar { d, .. }
            | Self::Wishart { d, .. }
            | Self::Lebesgue { d, .. }
            | Self::BasisMixture { d, .. } => *d,
        }
    }

    pub fn outcomes(&self) -> usize {
        match self {
            Self::Haar { k, .. } | Self::Lebesgue { k, .. } => *k,
            Self::Wishart { s, .. } => s.len(),
            Self::BasisMixture { d, .. } => *d,
        }
    }
}

pub fn ginibre(rows: usize, cols: usize, stream: &mut RandomStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| stream.complex_gaussian())
}

/// `W = G†G` with `G` an `s × d` Ginibre matrix.
pub fn wishart(d: usize, s: usize, stream: &mut RandomStream) -> Result<HermitianMatrix> {
    if d == 0 || s == 0 {
        return Err(Error::InvalidParameter("Wishart needs d, s >= 1".into()));
    }
    let g = ginibre(s, d, stream);
    HermitianMatrix::new(g.adjoint_matmul(&g)?)
}

/// `D × d` isometry distributed according to Haar measure.
pub fn haar_isometry(d: usize, big_d: usize, stream: &mut RandomStream) -> Result<ComplexMatrix> {
    if d > big_d {
        return Err(Error::InvalidParameter(format!(
            "no isometry from C^{d} into C^{big_d}"
        )));
    }
    if d == 0 {
        return Ok(ComplexMatrix::zeros(big_d, 0));
    }
    let g = ginibre(big_d, d, stream);
    let qr = DMatrix::from_row_slice(big_d, d, g.as_slice()).qr();
    let (q, r) = (qr.q(), qr.r());
    // Q diag(r_jj / |r_jj|) makes the triangular factor's diagonal positive.
    let phases: Vec<C64> = (0..d)
        .map(|j| {
            let z = r[(j, j)];
            if z.norm() == 0.0 { C64::from(1.0) } else { z / z.norm() }
        })
        .collect();
    Ok(ComplexMatrix::from_fn(big_d, d, |i, j| q[(i, j)] * phases[j]))
}

pub fn haar_unitary(d: usize, stream: &mut RandomStream) -> Result<ComplexMatrix> {
    haar_isometry(d, d, stream)
}

/// Draws a POVM from the given ensemble.
pub fn sample_povm(params: &EnsembleParams, stream: &mut RandomStream) -> Result<Povm> {
    params.validate()?;
    match params {
        &EnsembleParams::Haar { d, k, n } => {
            let v = haar_isometry(d, k * n, stream)?;
            let effects = (0..k)
                .map(|i| {
                    let block = v.row_block(i * n, (i + 1) * n);
                    HermitianMatrix::new(block.adjoint_matmul(&block)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Povm::new_unchecked(effects))
        }
        EnsembleParams::Wishart { d, s } => {
            let sizes = s
                .iter()
                .map(|&si| {
                    if si.fract() == 0.0 {
                        Ok(si as usize)
                    } else {
                        Err(Error::Unsupported(format!(
                            "sampling needs integer Wishart parameters, got {si}"
                        )))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            wishart_povm(*d, &sizes, stream)
        }
        &EnsembleParams::Lebesgue { d, k } => wishart_povm(d, &vec![d; k], stream),
        &EnsembleParams::BasisMixture { d, t } => {
            let u = haar_unitary(d, stream)?;
            let noise = HermitianMatrix::identity(d).scale((1.0 - t) / d as f64);
            let effects = (0..d)
                .map(|i| HermitianMatrix::outer(&u.column(i)).scale(t).add(&noise))
                .collect::<Result<Vec<_>>>()?;
            Ok(Povm::new_unchecked(effects))
        }
    }
}

fn wishart_povm(d: usize, s: &[usize], stream: &mut RandomStream) -> Result<Povm> {
    let ws = s
        .iter()
        .map(|&si| wishart(d, si, stream))
        .collect::<Result<Vec<_>>>()?;
    let mut total = HermitianMatrix::zeros(d);
    for w in &ws {
        total = total.add(w)?;
    }
    let r = inv_sqrt(&total, INV_SQRT_TOL)?;
    let effects = ws
        .iter()
        .map(|w| {
            let rw = r.matrix().matmul(w.matrix())?;
            HermitianMatrix::new(rw.matmul(r.matrix())?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm::new_unchecked(effects))
}

/// `∑_i (s_i - d) log det m_i`, the Wishart-POVM log-density up to its normalization.
///
/// Outcomes with `s_i = d` contribute exactly zero. A singular `m_i` gives `-∞`
/// when `s_i > d` and `+∞` when `s_i < d`.
pub fn wishart_povm_log_density(m: &Povm, s: &[f64]) -> Result<f64> {
    if s.len() != m.outcomes() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for {} outcomes",
            s.len(),
            m.outcomes()
        )));
    }
    let d = m.dim() as f64;
    let mut total = 0.0;
    for (e, &si) in m.matrices().zip(s) {
        let exponent = si - d;
        if exponent == 0.0 {
            continue;
        }
        let vals = e.eigenvalues()?;
        let log_det = if vals.iter().any(|&v| v <= 0.0) {
            f64::NEG_INFINITY
        } else {
            vals.iter().map(|v| v.ln()).sum()
        };
        total += exponent * log_det;
    }
    Ok(total)
}

/// `d × n` matrix `X` with `X X†` distributed as one effect of a Haar POVM `(d, k, n)`.
///
/// With `W` a Haar isometry `C^n → C^{kn}`, the effect `M_1` has the law of
/// `W_top W_top†` where `W_top` holds the first `d` rows of `W`. Taking
/// `W = G L^{-†}` for Ginibre `G` and `G†G = L L†` reproduces the QR
/// construction without forming the full isometry.
pub fn haar_effect_factor(
    d: usize,
    k: usize,
    n: usize,
    stream: &mut RandomStream,
) -> Result<ComplexMatrix> {
    EnsembleParams::Haar { d, k, n }.validate()?;
    let g = ginibre(k * n, n, stream);
    let gram = HermitianMatrix::new(g.adjoint_matmul(&g)?)?;
    let l = cholesky_lower(&gram)?;
    let l_inv = lower_triangular_inverse(&l)?;
    g.row_block(0, d).matmul_adjoint(&l_inv)
}
