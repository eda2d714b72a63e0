//! Unitary Weingarten calculus over `S_p` and exact trace moments of
//! Haar-random POVM effects.
//!
//! The Weingarten function is a class function, so [`wg_exact`] inverts the
//! Gram operator `σ ↦ N^{#σ}` on the class algebra (at most 15 unknowns for
//! `p ≤ 7`) instead of on the full group.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perm::{CycleType, Permutation, all_permutations};

/// Largest supported `p` for exact Weingarten sums.
pub const MAX_EXACT_DEGREE: usize = 7;

/// Values of `Wg(N, ·)` on every conjugacy class of `S_p`.
#[derive(Debug, Clone)]
pub struct WgTable {
    degree: usize,
    dimension: u64,
    values: BTreeMap<CycleType, f64>,
}

impl WgTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> u64 {
        self.dimension
    }

    pub fn get(&self, class: &CycleType) -> Option<f64> {
        self.values.get(class).copied()
    }

    /// `Wg(N, σ)`.
    pub fn value(&self, sigma: &Permutation) -> f64 {
        assert_eq!(sigma.degree(), self.degree, "permutation degree mismatch");
        self.values[&sigma.cycle_type()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CycleType, f64)> {
        self.values.iter().map(|(c, &v)| (c, v))
    }
}

fn check_degree(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidParameter("degree p must be at least 1".into()));
    }
    if p > MAX_EXACT_DEGREE {
        return Err(Error::Unsupported(format!(
            "exact Weingarten sums are capped at p = {MAX_EXACT_DEGREE}, got {p}"
        )));
    }
    Ok(())
}

/// Exact `Wg(N, ·)` on `S_p`. Requires `N ≥ p` so the Gram operator is invertible.
pub fn wg_exact(n: u64, p: usize) -> Result<WgTable> {
    check_degree(p)?;
    if n < p as u64 {
        return Err(Error::Unsupported(format!(
            "Weingarten inversion needs N >= p (N = {n}, p = {p})"
        )));
    }
    let classes = CycleType::partitions(p);
    let index: BTreeMap<CycleType, usize> =
        classes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let perms = all_permutations(p);
    let nf = n as f64;

    // Row μ: sum over τ ∈ C_λ of N^{#(τ⁻¹ π_μ)}, for a fixed representative π_μ.
    let m = classes.len();
    let mut gram = vec![vec![0.0; m]; m];
    let class_of: Vec<usize> = perms.iter().map(|t| index[&t.cycle_type()]).collect();
    for (row, mu) in classes.iter().enumerate() {
        let rep = mu.representative();
        for (tau, &lambda) in perms.iter().zip(&class_of) {
            let c = tau.inverse().compose(&rep).cycle_count();
            gram[row][lambda] += nf.powi(c as i32);
        }
    }
    let identity_class = index[&Permutation::identity(p).cycle_type()];
    let mut rhs = vec![0.0; m];
    rhs[identity_class] = 1.0;
    let sol = solve_dense(gram, rhs)?;

    Ok(WgTable {
        degree: p,
        dimension: n,
        values: classes.into_iter().zip(sol).collect(),
    })
}

/// Gaussian elimination with partial pivoting for the small class systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return Err(Error::Degenerate("singular Weingarten Gram system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..m {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Leading-order asymptotic `N^{-(p+|σ|)} Möb(σ)`.
pub fn wg_asymptotic(n: f64, sigma: &Permutation) -> f64 {
    let e = (sigma.degree() + sigma.length()) as i32;
    sigma.moebius() as f64 * n.powi(-e)
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn check_ensemble(d: u64, k: u64, n: u64) -> Result<()> {
    if d == 0 || k == 0 || n == 0 {
        return Err(Error::InvalidParameter("d, k, n must all be positive".into()));
    }
    if d > k * n {
        return Err(Error::InvalidParameter(format!(
            "Haar-random POVM needs d <= kn (d = {d}, k = {k}, n = {n})"
        )));
    }
    Ok(())
}

/// `E Tr(M_{c_1} M_{c_2} ⋯ M_{c_p})` for a Haar-random POVM of parameters
/// `(d, k; n)`, where `colors` lists the (1-based) outcome labels `c_l`.
///
/// Evaluates `∑_{α,β} n^{#α} d^{#(βγ⁻¹)} Wg(kn, α⁻¹β)` where `α` ranges over
/// permutations preserving the labels and `γ` is the reverse full cycle.
pub fn trace_product_moment(d: u64, k: u64, n: u64, colors: &[usize]) -> Result<f64> {
    check_ensemble(d, k, n)?;
    let p = colors.len();
    check_degree(p)?;
    if let Some(&c) = colors.iter().find(|&&c| c == 0 || c as u64 > k) {
        return Err(Error::OutcomeOutOfRange {
            index: c,
            outcomes: k as usize,
        });
    }
    let wg = wg_exact(k * n, p)?;

    let perms = all_permutations(p);
    let gamma_inv = Permutation::reverse_full_cycle(p).inverse();
    // Per-permutation data: #σ, #(σγ⁻¹), inverse images.
    let cycles: Vec<usize> = perms.iter().map(|s| s.cycle_count()).collect();
    let cycles_gamma: Vec<usize> = perms
        .iter()
        .map(|s| s.compose(&gamma_inv).cycle_count())
        .collect();
    let alphas: Vec<usize> = (0..perms.len())
        .filter(|&a| (0..p).all(|l| colors[perms[a].apply(l)] == colors[l]))
        .collect();

    // Class of α⁻¹β by cycle-length multiplicities, encoded base (p+1).
    let base = p + 1;
    let mut wg_by_key = vec![0.0; base.pow(p as u32)];
    for (class, value) in wg.iter() {
        wg_by_key[class_key(class.parts(), base)] = value;
    }

    let nf = n as f64;
    let df = d as f64;
    let n_pow: Vec<f64> = (0..=p).map(|e| nf.powi(e as i32)).collect();
    let d_pow: Vec<f64> = (0..=p).map(|e| df.powi(e as i32)).collect();

    let partials: Vec<CompensatedSum> = alphas
        .par_iter()
        .map(|&a| {
            let alpha_inv = perms[a].inverse();
            let weight_n = n_pow[cycles[a]];
            let mut acc = CompensatedSum::default();
            let mut buf = [0usize; MAX_EXACT_DEGREE];
            for (b, beta) in perms.iter().enumerate() {
                for (l, slot) in buf[..p].iter_mut().enumerate() {
                    *slot = alpha_inv.apply(beta.apply(l));
                }
                let key = cycle_key(&buf[..p], base);
                acc.add(weight_n * d_pow[cycles_gamma[b]] * wg_by_key[key]);
            }
            acc
        })
        .collect();

    // Ordered reduction keeps the result independent of the worker count.
    let mut total = CompensatedSum::default();
    for part in &partials {
        total.add(part.sum);
        total.add(part.carry);
    }
    Ok(total.value())
}

fn class_key(parts: &[usize], base: usize) -> usize {
    let mut counts = [0usize; MAX_EXACT_DEGREE + 1];
    for &l in parts {
        counts[l] += 1;
    }
    counts[1..parts.iter().sum::<usize>() + 1]
        .iter()
        .rev()
        .fold(0, |acc, &c| acc * base + c)
}

fn cycle_key(images: &[usize], base: usize) -> usize {
    let p = images.len();
    let mut counts = [0usize; MAX_EXACT_DEGREE + 1];
    let mut seen = 0u32;
    for start in 0..p {
        if seen & (1 << start) != 0 {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while seen & (1 << x) == 0 {
            seen |= 1 << x;
            x = images[x];
            len += 1;
        }
        counts[len] += 1;
    }
    counts[1..p + 1].iter().rev().fold(0, |acc, &c| acc * base + c)
}

/// `E Tr M_1^p` for a Haar-random POVM of parameters `(d, k; n)`.
pub fn moment_exact(d: u64, k: u64, n: u64, p: usize) -> Result<f64> {
    trace_product_moment(d, k, n, &vec![1; p])
}

/// `E Tr M_1 M_2`, evaluated through the Weingarten sum with distinct labels.
pub fn covariance_exact(d: u64, k: u64, n: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter("covariance needs k >= 2".into()));
    }
    trace_product_moment(d, k, n, &[1, 2])
}
