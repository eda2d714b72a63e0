//! Limiting spectral laws of random POVM effects and the closed-form
//! thresholds derived from them.
//!
//! All quantities live in the regime where `k` is fixed and `d, n → ∞` with
//! `d / (kn) → t`. The continuous parts of the measures here all have
//! inverse-square-root edges; integration substitutes `x = a + (b-a) sin²θ`
//! which removes them.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

const QUAD_TOL: f64 = 1e-12;
const SNAP: f64 = 1e-14;

/// Rounds an edge onto a nearby pole so the kernel's cancellation stays exact.
fn snap(x: f64, pole: f64) -> f64 {
    if (x - pole).abs() < SNAP { pole } else { x }
}

/// Outcome count `k ≥ 2` and aspect ratio `t = lim d/(kn) ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingParams {
    k: usize,
    t: f64,
}

impl ScalingParams {
    pub fn new(k: usize, t: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need k >= 2, got {k}")));
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(format!("need t in (0, 1], got {t}")));
        }
        Ok(Self { k, t })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn inv_k(&self) -> f64 {
        1.0 / self.k as f64
    }
}

/// Point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Closed-form density families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DensityKind {
    /// `D_scale [ b_s^{⊞ power} ]`.
    FreeBernoulliPower { s: f64, power: f64, scale: f64 },
    /// Limiting law of one effect, written directly in `(k⁻¹, t)`.
    EffectLimit { inv_k: f64, t: f64 },
}

/// Absolutely continuous part supported on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuousPart {
    pub lower: f64,
    pub upper: f64,
    pub kind: DensityKind,
}

impl ContinuousPart {
    /// Right-hand pole of the kernel (the left one is always at 0).
    fn right_pole(&self) -> f64 {
        match self.kind {
            DensityKind::FreeBernoulliPower { power, scale, .. } => power * scale,
            DensityKind::EffectLimit { .. } => 1.0,
        }
    }

    /// `density(x) / sqrt((x - lower)(upper - x))`, with `rest = right_pole - x`
    /// passed separately so it keeps full precision next to the pole.
    fn kernel(&self, x: f64, rest: f64) -> f64 {
        match self.kind {
            DensityKind::FreeBernoulliPower { power, .. } => power / (2.0 * PI * x * rest),
            DensityKind::EffectLimit { t, .. } => 1.0 / (2.0 * PI * t * x * rest),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= self.lower || x >= self.upper {
            return 0.0;
        }
        self.kernel(x, self.right_pole() - x) * ((x - self.lower) * (self.upper - x)).sqrt()
    }

    /// `∫_{lower}^{min(x, upper)} g(y) density(y) dy`.
    fn integrate_up_to<G: Fn(f64) -> f64>(&self, x: f64, g: G) -> Result<f64> {
        if x <= self.lower {
            return Ok(0.0);
        }
        let width = self.upper - self.lower;
        let theta_max = if x >= self.upper {
            FRAC_PI_2
        } else {
            ((x - self.lower) / width).sqrt().asin()
        };
        // After substitution the integrand is 2 w² sin²θ cos²θ · kernel(x(θ)) · g;
        // the clamp keeps kernel finite at a zero endpoint, where the product has a finite limit.
        let integrand = |theta: f64| {
            let th = theta.clamp(1e-12, FRAC_PI_2 - 1e-12);
            let (s, c) = th.sin_cos();
            let y = self.lower + width * s * s;
            let rest = (self.right_pole() - self.upper) + width * c * c;
            2.0 * width * width * s * s * c * c * self.kernel(y, rest) * g(y)
        };
        adaptive_simpson(integrand, 0.0, theta_max, QUAD_TOL)
    }
}

/// Atoms plus an optional continuous part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
    pub continuous: Option<ContinuousPart>,
}

impl SpectralMeasure {
    fn new(atoms: impl IntoIterator<Item = Atom>, continuous: Option<ContinuousPart>) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().filter(|a| a.weight > 0.0).collect();
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let continuous = continuous.filter(|c| c.upper > c.lower);
        Self { atoms, continuous }
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Weight of the atom at exactly `x`, zero if there is none.
    pub fn atom_mass_at(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location == x).fold(0.0, |acc, a| acc + a.weight)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.continuous.map_or(0.0, |c| c.density(x))
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.moment(0)
    }

    /// `μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= x)
            .map(|a| a.weight)
            .sum();
        let cont = match &self.continuous {
            Some(c) => c.integrate_up_to(x, |_| 1.0)?,
            None => 0.0,
        };
        Ok((atoms + cont).min(1.0))
    }

    /// `μ((-∞, x))`.
    pub fn cdf_left(&self, x: f64) -> Result<f64> {
        let at_x: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location == x)
            .map(|a| a.weight)
            .sum();
        Ok((self.cdf(x)? - at_x).max(0.0))
    }

    /// `∫ x^p dμ`.
    pub fn moment(&self, p: u32) -> Result<f64> {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * a.location.powi(p as i32))
            .sum();
        let cont = match &self.continuous {
            Some(c) => c.integrate_up_to(f64::INFINITY, |y| y.powi(p as i32))?,
            None => 0.0,
        };
        Ok(atoms + cont)
    }
}

/// `measure_cdf` entry point.
pub fn measure_cdf(mu: &SpectralMeasure, x: f64) -> Result<f64> {
    mu.cdf(x)
}

/// `measure_moment` entry point.
pub fn measure_moment(mu: &SpectralMeasure, p: u32) -> Result<f64> {
    mu.moment(p)
}

/// Free additive power `b_s^{⊞T}` of the Bernoulli law `(1-s)δ_0 + sδ_1`.
pub fn bernoulli_free_power(s: f64, power: f64) -> Result<SpectralMeasure> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("need s in (0, 1), got {s}")));
    }
    if !(power >= 1.0 && power.is_finite()) {
        return Err(Error::InvalidParameter(format!("need T >= 1, got {power}")));
    }
    let centre = (power - 2.0) * s + 1.0;
    let radius = 2.0 * ((power - 1.0) * s * (1.0 - s)).sqrt();
    let atoms = [
        Atom {
            location: 0.0,
            weight: (1.0 - power * s).max(0.0),
        },
        Atom {
            location: power,
            weight: (1.0 - power * (1.0 - s)).max(0.0),
        },
    ];
    let continuous = ContinuousPart {
        lower: snap((centre - radius).max(0.0), 0.0),
        upper: snap(centre + radius, power),
        kind: DensityKind::FreeBernoulliPower {
            s,
            power,
            scale: 1.0,
        },
    };
    Ok(SpectralMeasure::new(atoms, Some(continuous)))
}

/// Push-forward under `x ↦ a x`.
pub fn dilate(a: f64, mu: &SpectralMeasure) -> Result<SpectralMeasure> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation factor must be > 0, got {a}")));
    }
    let atoms = mu.atoms.iter().map(|at| Atom {
        location: a * at.location,
        weight: at.weight,
    });
    let continuous = mu.continuous.map(|c| ContinuousPart {
        lower: a * c.lower,
        upper: a * c.upper,
        kind: match c.kind {
            DensityKind::FreeBernoulliPower { s, power, scale } => {
                DensityKind::FreeBernoulliPower {
                    s,
                    power,
                    scale: a * scale,
                }
            }
            DensityKind::EffectLimit { .. } => {
                unimplemented!("dilation of the effect-limit family is not needed")
            }
        },
    });
    Ok(SpectralMeasure::new(atoms, continuous))
}

/// Edges `φ∓ = t + k⁻¹ - 2tk⁻¹ ∓ 2√(t(1-t)k⁻¹(1-k⁻¹))`, unclipped.
pub fn phi_pm(p: &ScalingParams) -> (f64, f64) {
    let (t, u) = (p.t, p.inv_k());
    let centre = t + u - 2.0 * t * u;
    let radius = 2.0 * (t * (1.0 - t) * u * (1.0 - u)).sqrt();
    (
        snap((centre - radius).max(0.0), 0.0),
        snap((centre + radius).min(1.0), 1.0),
    )
}

/// Almost-sure limit of `λ_min` of one effect: `φ₋` below `t = 1/k`, zero from there on.
pub fn lambda_min_limit(p: &ScalingParams) -> f64 {
    if p.t < p.inv_k() { phi_pm(p).0 } else { 0.0 }
}

/// Almost-sure limit of `λ_max` of one effect.
pub fn lambda_max_limit(p: &ScalingParams) -> f64 {
    if p.t > 1.0 - p.inv_k() { 1.0 } else { phi_pm(p).1 }
}

/// Limiting eigenvalue law of a single effect of a Haar-random POVM.
pub fn limit_effect_measure(p: &ScalingParams) -> SpectralMeasure {
    let (t, u) = (p.t, p.inv_k());
    let (lower, upper) = phi_pm(p);
    let atoms = [
        Atom {
            location: 0.0,
            weight: (1.0 - u / t).max(0.0),
        },
        Atom {
            location: 1.0,
            weight: (1.0 - 1.0 / t + u / t).max(0.0),
        },
    ];
    let continuous = ContinuousPart {
        lower,
        upper,
        kind: DensityKind::EffectLimit { inv_k: u, t },
    };
    SpectralMeasure::new(atoms, Some(continuous))
}

/// `σ(k, s)`, the limit of `4‖M_i - M_i²‖`.
pub fn limit_unsharpness(p: &ScalingParams) -> f64 {
    let s = p.t;
    if s == 1.0 {
        return 0.0;
    }
    let k = p.k as f64;
    let s0 = 0.5 - (k - 1.0).sqrt() / k;
    let (lo, hi) = phi_pm(p);
    if s < s0 {
        4.0 * hi * (1.0 - hi)
    } else if s <= 1.0 - s0 {
        1.0
    } else {
        4.0 * lo * (1.0 - lo)
    }
}

/// Limit of the noise content `∑_i λ_min(M_i)`, i.e. `k φ₋(s, k)`.
pub fn asymptotic_noise_content(p: &ScalingParams) -> f64 {
    p.k as f64 * lambda_min_limit(p)
}

/// Interval of `t` on which random POVMs are asymptotically regular,
/// `(1/2 - 2√(k-1)/k, 1/2 + 2√(k-1)/k)`.
pub fn regularity_interval(k: usize) -> (f64, f64) {
    let k = k as f64;
    let half_width = 2.0 * (k - 1.0).sqrt() / k;
    (0.5 - half_width, 0.5 + half_width)
}

pub fn is_asymptotically_regular(p: &ScalingParams) -> bool {
    let (lo, hi) = regularity_interval(p.k);
    lo < p.t && p.t < hi
}

/// Norm-1 holds asymptotically iff `t > 1 - 1/k`.
pub fn norm1_threshold(k: usize) -> f64 {
    1.0 - 1.0 / k as f64
}

/// Asymptotic noise-content compatibility: `kφ₋(s,k) + lφ₋(t,l) > 1`.
pub fn criterion_region_noise(a: &ScalingParams, b: &ScalingParams) -> bool {
    asymptotic_noise_content(a) + asymptotic_noise_content(b) > 1.0
}

/// `R(k, s) = φ₊/φ₋` for `s < 1/k`, `+∞` otherwise.
pub fn big_r(p: &ScalingParams) -> f64 {
    if p.t >= p.inv_k() {
        return f64::INFINITY;
    }
    let (lo, hi) = phi_pm(p);
    if lo <= 0.0 { f64::INFINITY } else { hi / lo }
}

/// Asymptotic Jordan-product compatibility: `(√R(k,s) - 1)(√R(l,t) - 1) < 2`.
pub fn criterion_region_jordan(a: &ScalingParams, b: &ScalingParams) -> bool {
    let (ra, rb) = (big_r(a), big_r(b));
    if ra.is_infinite() || rb.is_infinite() {
        return false;
    }
    (ra.sqrt() - 1.0) * (rb.sqrt() - 1.0) < 2.0
}

/// Asymptotic cloning condition on both sides: `φ₋(s,k) > 1/(2k)` and `φ₋(t,l) > 1/(2l)`.
pub fn criterion_region_cloning(a: &ScalingParams, b: &ScalingParams) -> bool {
    lambda_min_limit(a) > 0.5 * a.inv_k() && lambda_min_limit(b) > 0.5 * b.inv_k()
}

/// Closed-form threshold on `s` for `k = l`, `s = t` under the noise-content criterion.
pub fn noise_bound_equal(k: usize) -> f64 {
    let k = k as f64;
    1.0 / (6.0 * k - 4.0 + 4.0 * ((k - 1.0) * (2.0 * k - 1.0)).sqrt())
}

/// Closed-form threshold on `s` for `k = l`, `s = t` under the Jordan criterion.
pub fn jordan_bound_equal(k: usize) -> f64 {
    let k = k as f64;
    (k * (3.0 - 2.0 * SQRT_2) + 2.0 * (SQRT_2 - 1.0)) / (k * k + 4.0 * k - 4.0)
}

/// Dichotomic case: largest `t` with noise-content compatibility against `s`,
/// `1/2 - √(√(s(1-s)) - s(1-s))`, or `None` when no `t` qualifies.
pub fn noise_bound_dichotomic(s: f64) -> Option<f64> {
    if !(s > 0.0 && s < 0.5) {
        return None;
    }
    let x = (s * (1.0 - s)).sqrt();
    Some(0.5 - (x - x * x).sqrt())
}

/// Dichotomic Jordan condition in the simplified form
/// `√(s(1-s)) + √(t(1-t)) < 1/4`. It disagrees with [`criterion_region_jordan`]
/// (e.g. along `s = t`), so it is exposed for reporting only.
pub fn jordan_dichotomic_simplified(s: f64, t: f64) -> bool {
    (s * (1.0 - s)).sqrt() + (t * (1.0 - t)).sqrt() < 0.25
}

/// Supremum of `t ∈ (0, 1/l)` for which `pred(t)` holds, found by bisection;
/// `pred` must be true near 0 and monotone.
fn bisect_boundary<F: Fn(f64) -> bool>(pred: F, hi: f64) -> Option<f64> {
    let mut lo = 1e-15;
    if !pred(lo) {
        return None;
    }
    let mut hi = hi;
    if pred(hi) {
        return Some(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Boundary in `t` (for `l` outcomes) of the noise-content region against `a`.
pub fn noise_boundary(a: &ScalingParams, l: usize) -> Option<f64> {
    bisect_boundary(
        |t| ScalingParams::new(l, t).is_ok_and(|b| criterion_region_noise(a, &b)),
        1.0,
    )
}

/// Boundary in `t` (for `l` outcomes) of the Jordan region against `a`.
pub fn jordan_boundary(a: &ScalingParams, l: usize) -> Option<f64> {
    bisect_boundary(
        |t| ScalingParams::new(l, t).is_ok_and(|b| criterion_region_jordan(a, &b)),
        1.0,
    )
}

/// Boundary in `s` of a predicate evaluated along the diagonal `k = l`, `s = t`.
pub fn diagonal_boundary<F: Fn(&ScalingParams, &ScalingParams) -> bool>(
    k: usize,
    region: F,
) -> Option<f64> {
    bisect_boundary(
        |s| ScalingParams::new(k, s).is_ok_and(|p| region(&p, &p)),
        1.0,
    )
}

/// `‖(1,…,1,0,…,0)‖_{(t)}` with `j` ones among `k` entries.
pub fn bivalued_t_norm(t: f64, j: usize, k: usize) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("need t in (0, 1), got {t}")));
    }
    if k == 0 || j > k {
        return Err(Error::InvalidParameter(format!("need 0 <= j <= k, got j={j}, k={k}")));
    }
    let u = j as f64 / k as f64;
    if t + u >= 1.0 {
        return Ok(1.0);
    }
    Ok(t + u - 2.0 * t * u + 2.0 * (t * u * (1.0 - t) * (1.0 - u)).sqrt())
}

/// Half-width `x_t` of the limiting range `{(p, 1-p) : |p - 1/2| ≤ x_t}` for `k = 2`.
pub fn k2_range_halfwidth(t: f64) -> f64 {
    if t <= 0.5 { (t * (1.0 - t)).sqrt() } else { 0.5 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(k: usize, t: f64) -> ScalingParams {
        ScalingParams::new(k, t).unwrap()
    }

    #[test]
    fn power_one_is_the_bernoulli_law() {
        let m = bernoulli_free_power(0.3, 1.0).unwrap();
        assert!(m.continuous.is_none());
        assert_eq!(m.atoms.len(), 2);
        assert!((m.atoms[0].weight - 0.7).abs() < 1e-15);
        assert!((m.atoms[1].location - 1.0).abs() < 1e-15);
        assert!((m.atoms[1].weight - 0.3).abs() < 1e-15);
    }

    #[test]
    fn half_half_power_two_has_full_support() {
        let m = bernoulli_free_power(0.5, 2.0).unwrap();
        assert!(m.atoms.is_empty());
        let c = m.continuous.unwrap();
        assert!(c.lower.abs() < 1e-15 && (c.upper - 2.0).abs() < 1e-15);
        assert!((m.total_mass().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_power_mass_grid() {
        for si in 1..=9 {
            for power in 1..=5 {
                let m = bernoulli_free_power(si as f64 / 10.0, power as f64).unwrap();
                let mass = m.total_mass().unwrap();
                assert!((mass - 1.0).abs() < 1e-8, "s={si} T={power}: {mass}");
                // mean of a ⊞T power is T·s
                let mean = m.moment(1).unwrap();
                assert!((mean - power as f64 * si as f64 / 10.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(bernoulli_free_power(0.0, 2.0).is_err());
        assert!(bernoulli_free_power(0.5, 0.5).is_err());
        assert!(ScalingParams::new(1, 0.5).is_err());
        assert!(ScalingParams::new(2, 0.0).is_err());
        assert!(ScalingParams::new(2, 1.5).is_err());
        let m = bernoulli_free_power(0.5, 2.0).unwrap();
        assert!(dilate(0.0, &m).is_err());
        assert!(dilate(-1.0, &m).is_err());
    }

    #[test]
    fn dilation_basics() {
        let m = bernoulli_free_power(0.3, 2.5).unwrap();
        assert_eq!(dilate(1.0, &m).unwrap(), m);
        let b = dilate(0.4, &bernoulli_free_power(0.3, 1.0).unwrap()).unwrap();
        assert!((b.atoms[1].location - 0.4).abs() < 1e-15);
        let d = dilate(0.4, &m).unwrap();
        let ratio = d.moment(1).unwrap() / m.moment(1).unwrap();
        assert!((ratio - 0.4).abs() < 1e-8);
    }

    #[test]
    fn effect_limit_at_t_one_is_bernoulli() {
        let m = limit_effect_measure(&sp(4, 1.0));
        assert!(m.continuous.is_none());
        assert!((m.atoms[0].weight - 0.75).abs() < 1e-15);
        assert!((m.atoms[1].weight - 0.25).abs() < 1e-15);
    }

    #[test]
    fn effect_limit_k2_half() {
        let (lo, hi) = phi_pm(&sp(2, 0.5));
        assert!(lo.abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        let m = limit_effect_measure(&sp(2, 0.5));
        assert!(m.atoms.is_empty());
    }

    #[test]
    fn effect_limit_moments() {
        for k in [2usize, 3, 5] {
            for t in [0.1, 0.3, 0.5, 0.8, 0.95] {
                let m = limit_effect_measure(&sp(k, t));
                let kf = k as f64;
                assert!((m.total_mass().unwrap() - 1.0).abs() < 1e-8);
                assert!((m.moment(1).unwrap() - 1.0 / kf).abs() < 1e-6);
                let m2 = (t * kf + 1.0 - t) / (kf * kf);
                assert!((m.moment(2).unwrap() - m2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cdf_behaviour() {
        // atom at 0 when t > 1/k
        let p = sp(4, 0.5);
        let m = limit_effect_measure(&p);
        let (lo, _) = phi_pm(&p);
        assert!(lo > 0.0);
        let w0 = m.atoms[0].weight;
        assert!((m.cdf(lo - 1e-9).unwrap() - w0).abs() < 1e-12);
        assert!((m.cdf(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(m.cdf_left(0.0).unwrap() == 0.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = m.cdf(i as f64 / 100.0).unwrap();
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
    }

    #[test]
    fn phi_edges() {
        let (lo, hi) = phi_pm(&sp(2, 1.0));
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
        let (lo, hi) = phi_pm(&sp(4, 0.5));
        let r = 3f64.sqrt() / 4.0;
        assert!((lo - (0.5 - r)).abs() < 1e-14 && (hi - (0.5 + r)).abs() < 1e-14);
        assert_eq!(lambda_min_limit(&sp(3, 1.0 / 3.0)), 0.0);
        assert_eq!(lambda_min_limit(&sp(3, 0.6)), 0.0);
        assert!(lambda_min_limit(&sp(3, 0.2)) > 0.0);
    }

    #[test]
    fn unsharpness_values() {
        for s in [0.01, 0.2, 0.5, 0.77, 0.99] {
            assert_eq!(limit_unsharpness(&sp(2, s)), 1.0);
        }
        assert_eq!(limit_unsharpness(&sp(2, 1.0)), 0.0);
        assert_eq!(limit_unsharpness(&sp(7, 1.0)), 0.0);
        let v = limit_unsharpness(&sp(5, 0.05));
        assert!((v - 0.963_42).abs() < 1e-4, "{v}");
        for k in [3usize, 5, 50] {
            let floor = 4.0 * (1.0 / k as f64 - 1.0 / (k * k) as f64);
            for i in 1..100 {
                let s = i as f64 / 100.0;
                let a = limit_unsharpness(&sp(k, s));
                let b = limit_unsharpness(&sp(k, 1.0 - s));
                assert!((a - b).abs() < 1e-10);
                assert!(a >= floor - 1e-12 && a <= 1.0);
            }
        }
    }

    #[test]
    fn scalar_thresholds() {
        let v = asymptotic_noise_content(&sp(2, 0.25));
        assert!((v - 2.0 * (0.5 - 0.1875f64.sqrt())).abs() < 1e-14);
        assert!((v - 0.1340).abs() < 1e-4);
        let (lo, hi) = regularity_interval(2);
        assert!((lo + 0.5).abs() < 1e-15 && (hi - 1.5).abs() < 1e-15);
        assert_eq!(norm1_threshold(4), 0.75);
    }

    #[test]
    fn noise_region_examples() {
        assert!(criterion_region_noise(&sp(2, 0.01), &sp(2, 0.01)));
        // one side at or past 1/k contributes nothing
        for t in [0.01, 0.2, 0.49] {
            assert!(!criterion_region_noise(&sp(2, 0.5), &sp(2, t)));
            assert!(!criterion_region_noise(&sp(3, 0.7), &sp(2, t)));
        }
        let b = noise_bound_equal(2);
        assert!((b - 1.0 / (8.0 + 4.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!(criterion_region_noise(&sp(2, b - 1e-6), &sp(2, b - 1e-6)));
        assert!(!criterion_region_noise(&sp(2, b + 1e-6), &sp(2, b + 1e-6)));
    }

    #[test]
    fn jordan_region_examples() {
        let b = jordan_bound_equal(2);
        assert!((b - (2.0 - SQRT_2) / 4.0).abs() < 1e-15);
        assert!(criterion_region_jordan(&sp(2, b - 1e-6), &sp(2, b - 1e-6)));
        assert!(!criterion_region_jordan(&sp(2, b + 1e-6), &sp(2, b + 1e-6)));
        assert!(!criterion_region_jordan(&sp(2, 0.5), &sp(2, 0.01)));
        assert!(big_r(&sp(3, 0.4)).is_infinite());
        for s in [0.05, 0.1, 0.3] {
            let x = (s * (1.0f64 - s)).sqrt();
            let r = big_r(&sp(2, s));
            assert!((r - (0.5 + x) / (0.5 - x)).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn simplified_dichotomic_jordan_form_disagrees_on_diagonal() {
        // theorem flips at s(1-s) = 1/8, the simplified form at √(s(1-s)) = 1/8
        let s = 0.1;
        assert!(criterion_region_jordan(&sp(2, s), &sp(2, s)));
        assert!(!jordan_dichotomic_simplified(s, s));
    }

    #[test]
    fn dichotomic_noise_bound_matches_bisection() {
        for s in [0.01, 0.05, 0.1, 0.2, 0.3, 0.45] {
            let closed = noise_bound_dichotomic(s).unwrap();
            let bis = noise_boundary(&sp(2, s), 2).unwrap();
            assert!((closed - bis).abs() < 1e-9, "s={s}: {closed} vs {bis}");
        }
        assert!(noise_bound_dichotomic(0.5).is_none());
    }

    #[test]
    fn bivalued_norm() {
        assert_eq!(bivalued_t_norm(0.6, 2, 4).unwrap(), 1.0);
        let v = bivalued_t_norm(0.3, 1, 2).unwrap();
        assert!((v - (0.5 + 2.0 * 0.0525f64.sqrt())).abs() < 1e-14);
        assert!((v - 0.9583).abs() < 1e-4);
        for j in 0..=5 {
            for ti in 1..10 {
                let t = ti as f64 / 10.0;
                let v = bivalued_t_norm(t, j, 5).unwrap();
                let u = j as f64 / 5.0;
                assert!(v >= u - 1e-12 && v <= 1.0 + 1e-12);
            }
        }
        assert!((k2_range_halfwidth(0.09) - 0.2862).abs() < 1e-4);
        assert_eq!(k2_range_halfwidth(0.7), 0.5);
    }
}
