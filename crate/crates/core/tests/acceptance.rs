//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the summary is printed even when every
//! check passes; the process exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;

use povmrand::asymptotics::{
    ScalingParams, bernoulli_free_power, criterion_region_jordan, criterion_region_noise,
    diagonal_boundary, dilate, jordan_bound_equal, jordan_boundary, jordan_dichotomic_simplified,
    limit_effect_measure, noise_bound_dichotomic, noise_bound_equal, noise_boundary,
};
use povmrand::criteria::zhu_superoperator;
use povmrand::experiments::{Fig7Mode, fig5, snap_atoms, moments, region_dominance_violations, table1_cell};
use povmrand::linalg::{ComplexMatrix, HermitianMatrix, nonnegative_projector, positive_part};
use povmrand::perm::{CycleType, all_permutations};
use povmrand::probrange::{circle_example, circle_range_radius, diag_polytope, diagonal_example};
use povmrand::sampling::{EnsembleParams, RandomStream, haar_unitary, sample_povm};
use povmrand::stats::{MeanEstimate, ks_two_sample};
use povmrand::weingarten::{covariance_exact, moment_exact, wg_exact};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_triples(count: usize, index: u64) -> Vec<(u64, u64, u64)> {
    let mut rng = RandomStream::new(SEED, index);
    (0..count)
        .map(|_| {
            let k = rng.random_range(2..=5u64);
            let n = rng.random_range(1..=6u64);
            let d = rng.random_range(1..=k * n);
            (d, k, n)
        })
        .collect()
}

fn first_moment() -> Outcome {
    let mut worst = 0.0f64;
    for (d, k, n) in random_triples(20, 1) {
        let m = moment_exact(d, k, n, 1).unwrap();
        worst = worst.max((m - d as f64 / k as f64).abs());
    }
    outcome(worst <= 1e-12, format!("max |E Tr M - d/k| = {worst:.2e}"))
}

fn second_moment() -> Outcome {
    let (mut wm, mut wc) = (0.0f64, 0.0f64);
    for (d, k, n) in random_triples(20, 2) {
        let (df, kf, nf) = (d as f64, k as f64, n as f64);
        let kn = kf * nf;
        if kn < 2.0 {
            continue;
        }
        let closed = df * (kf * nf * nf + df * nf * (kf - 1.0) - 1.0) / (kf * (kn * kn - 1.0));
        wm = wm.max((moment_exact(d, k, n, 2).unwrap() - closed).abs() / closed.abs().max(1.0));
        let cov = nf * df * (kn - df) / (kf * (kn * kn - 1.0));
        wc = wc.max((covariance_exact(d, k, n).unwrap() - cov).abs());
    }
    outcome(
        wm <= 1e-10 && wc <= 1e-10,
        format!("moment deviation {wm:.2e}, covariance deviation {wc:.2e}"),
    )
}

fn weingarten_golden() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [5u64, 10] {
        let nf = n as f64;
        let got = wg_exact(n, 3).unwrap().get(&CycleType::from_lengths(vec![2, 1])).unwrap();
        let want = -1.0 / ((nf * nf - 1.0) * (nf * nf - 4.0));
        ok &= rel(got, want) <= 1e-12;
        detail.push(format!("Wg({n},[2,1]) rel err {:.1e}", rel(got, want)));
    }
    let mut worst = 0.0f64;
    for n in [4u64, 7] {
        for p in 1..=4 {
            let table = wg_exact(n, p).unwrap();
            let perms = all_permutations(p);
            for sigma in &perms {
                let sum: f64 = perms
                    .iter()
                    .map(|tau| {
                        table.value(&sigma.compose(&tau.inverse())) * (n as f64).powi(tau.cycle_count() as i32)
                    })
                    .sum();
                let delta = if sigma.length() == 0 { 1.0 } else { 0.0 };
                worst = worst.max((sum - delta).abs());
            }
        }
    }
    ok &= worst <= 1e-9;
    detail.push(format!("convolution residual {worst:.2e}"));
    outcome(ok, detail.join(", "))
}

fn monte_carlo_moments() -> Outcome {
    let rows = moments(6, 2, 4, 3, 10_000, SEED).unwrap();
    let ok = rows.iter().all(|r| (r.mean - r.exact).abs() <= 3.0 * r.std_error);
    let detail = rows
        .iter()
        .map(|r| format!("p={} z={:+.2}", r.p, (r.mean - r.exact) / r.std_error))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, detail)
}

fn fig5_desk_scale() -> Outcome {
    let a = fig5(200, 2, 400, SEED).unwrap().ks_statistic;
    let b = fig5(200, 4, 100, SEED).unwrap().ks_statistic;
    outcome(a < 0.08 && b < 0.08, format!("KS (200,2,400) = {a:.4}, (200,4,100) = {b:.4}"))
}

/// `(λ_min, λ_max)` of the first effect over `draws` samples, snapped onto atoms at 0 and 1.
fn extreme_eigenvalues(params: &EnsembleParams, index: u64, draws: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = (0..draws as u64)
        .map(|i| {
            let p = sample_povm(params, &mut RandomStream::new(SEED ^ index, i)).unwrap();
            let vals = p.effects()[0].matrix().eigenvalues().unwrap();
            (vals[0], vals[vals.len() - 1])
        })
        .unzip();
    snap_atoms(&mut lo);
    snap_atoms(&mut hi);
    (lo, hi)
}

fn haar_wishart_equivalence() -> Outcome {
    let (haar_lo, haar_hi) = extreme_eigenvalues(&EnsembleParams::Haar { d: 20, k: 3, n: 10 }, 61, 2000);
    let (wis_lo, wis_hi) = extreme_eigenvalues(&EnsembleParams::Wishart { d: 20, s: vec![10.0; 3] }, 62, 2000);
    let lo = ks_two_sample(&haar_lo, &wis_lo);
    let hi = ks_two_sample(&haar_hi, &wis_hi);
    outcome(
        lo.p_value > 0.01 && hi.p_value > 0.01,
        format!(
            "λ_min: D = {:.4}, p = {:.3}; λ_max: D = {:.4}, p = {:.3}",
            lo.statistic, lo.p_value, hi.statistic, hi.p_value
        ),
    )
}

fn dirichlet_reduction() -> Outcome {
    let params = EnsembleParams::Wishart { d: 1, s: vec![2.0; 3] };
    let m1: Vec<f64> = (0..100_000u64)
        .map(|i| {
            let p = sample_povm(&params, &mut RandomStream::new(SEED, 7_000_000 + i)).unwrap();
            p.effects()[0].matrix().trace()
        })
        .collect();
    let sq: Vec<f64> = m1.iter().map(|x| x * x).collect();
    let (e1, e2) = (MeanEstimate::from_samples(&m1), MeanEstimate::from_samples(&sq));
    outcome(
        e1.within(1.0 / 3.0, 3.0) && e2.within(1.0 / 7.0, 3.0),
        format!("E m = {:.5} (z {:+.2}), E m^2 = {:.5} (z {:+.2})", e1.mean, e1.z_score(1.0 / 3.0), e2.mean, e2.z_score(1.0 / 7.0)),
    )
}

fn commutator_table() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let smoke = Instant::now();
    for (i, (k, s, want)) in [(2usize, 0.5, 0.47205), (5, 0.9, 0.91434)].into_iter().enumerate() {
        let c = table1_cell(k, s, 300, 10, SEED, (100 + i as u64) << 32).unwrap();
        ok &= rel(c.mean, want) <= 0.25;
        detail.push(format!("n=300 (k={k},s={s}) {:.4} ({:+.1}%)", c.mean, 100.0 * (c.mean / want - 1.0)));
    }
    let smoke_time = smoke.elapsed();
    ok &= smoke_time < Duration::from_secs(60);
    detail.push(format!("smoke {:.1}s", smoke_time.as_secs_f64()));
    for (i, (k, s, want)) in [(2usize, 0.5, 0.47205), (5, 0.9, 0.91434)].into_iter().enumerate() {
        let c = table1_cell(k, s, 1000, 10, SEED, (i as u64) << 32).unwrap();
        ok &= rel(c.mean, want) <= 0.15;
        detail.push(format!("n=1000 (k={k},s={s}) {:.4} ({:+.1}%)", c.mean, 100.0 * (c.mean / want - 1.0)));
    }
    outcome(ok, detail.join(", "))
}

fn zhu_closed_form() -> Outcome {
    let mut worst_feas = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut rng = RandomStream::new(SEED, 9);
    for pair in 0..200u64 {
        let d = rng.random_range(1..=6usize);
        let draw = |j: u64, rng: &mut RandomStream| {
            let k = rng.random_range(2..=4usize);
            let n = rng.random_range(d.div_ceil(k)..=d.div_ceil(k) + 2);
            sample_povm(&EnsembleParams::Haar { d, k, n }, &mut RandomStream::new(SEED, 90_000 + 2 * pair + j)).unwrap()
        };
        let (a, b) = (draw(0, &mut rng), draw(1, &mut rng));
        let ga = zhu_superoperator(&a).unwrap();
        let gb = zhu_superoperator(&b).unwrap();
        let diff = ga.sub(&gb).unwrap();
        let h = gb.add(&positive_part(&diff).unwrap()).unwrap();
        let feas = h.sub(&ga).unwrap().lambda_min().unwrap().min(h.sub(&gb).unwrap().lambda_min().unwrap());
        worst_feas = worst_feas.min(feas);
        let x = nonnegative_projector(&diff).unwrap();
        let dual = x.matrix().adjoint_matmul(diff.matrix()).unwrap().trace().re + gb.trace();
        worst_gap = worst_gap.max((h.trace() - dual).abs());
    }
    outcome(
        worst_feas >= -1e-10 && worst_gap <= 1e-8,
        format!("min λ(H* - 𝒢) = {worst_feas:.2e}, max |Tr H* - dual| = {worst_gap:.2e}"),
    )
}

fn random_pd(d: usize, ratio: f64, stream: &mut RandomStream) -> HermitianMatrix {
    let u = haar_unitary(d, stream).unwrap();
    let mut vals: Vec<f64> = (0..d).map(|_| 1.0 + (ratio - 1.0) * stream.random::<f64>()).collect();
    vals[0] = 1.0;
    if d > 1 {
        vals[1] = ratio;
    }
    let scale = 0.1 + stream.random::<f64>();
    let diag = ComplexMatrix::from_real_diag(&vals.iter().map(|v| v * scale).collect::<Vec<_>>());
    HermitianMatrix::new(u.matmul(&diag).unwrap().matmul_adjoint(&u).unwrap()).unwrap()
}

fn jordan_lemma_soundness() -> Outcome {
    let mut stream = RandomStream::new(SEED, 10);
    let mut accepted = 0;
    let mut worst = f64::INFINITY;
    while accepted < 500 {
        let d = stream.random_range(2..=6usize);
        let rx = 1.0 + 8.0 * stream.random::<f64>();
        let ry = 1.0 + 8.0 * stream.random::<f64>();
        if (rx.sqrt() - 1.0) * (ry.sqrt() - 1.0) >= 2.0 {
            continue;
        }
        accepted += 1;
        let x = random_pd(d, rx, &mut stream);
        let y = random_pd(d, ry, &mut stream);
        let xy = x.matrix().matmul(y.matrix()).unwrap();
        let anti = HermitianMatrix::new(xy.add(&xy.adjoint()).unwrap()).unwrap();
        let scale = x.lambda_max().unwrap() * y.lambda_max().unwrap();
        worst = worst.min(anti.lambda_min().unwrap() / scale);
    }
    outcome(worst > -1e-9, format!("min λ(XY+YX)/(‖X‖‖Y‖) = {worst:.3e} over 500 pairs"))
}

fn region_consistency() -> Outcome {
    let mut worst = 0.0f64;
    for k in 2..=12 {
        let n = diagonal_boundary(k, criterion_region_noise).unwrap();
        let j = diagonal_boundary(k, criterion_region_jordan).unwrap();
        worst = worst.max((n - noise_bound_equal(k)).abs()).max((j - jordan_bound_equal(k)).abs());
    }
    for i in 1..50 {
        let s = i as f64 / 100.0;
        let a = ScalingParams::new(2, s).unwrap();
        if let (Some(b), Some(f)) = (noise_boundary(&a, 2), noise_bound_dichotomic(s)) {
            worst = worst.max((b - f).abs());
        }
    }
    let ks = region_dominance_violations(Fig7Mode::Ks, 100).unwrap().len();
    let st = region_dominance_violations(Fig7Mode::St, 100).unwrap().len();
    let mut disagree = 0;
    for i in 0..100 {
        for j in 0..100 {
            let (s, t) = ((i as f64 + 0.5) / 100.0, (j as f64 + 0.5) / 100.0);
            let thm = criterion_region_jordan(&ScalingParams::new(2, s).unwrap(), &ScalingParams::new(2, t).unwrap());
            disagree += usize::from(thm != jordan_dichotomic_simplified(s, t));
        }
    }
    let s01 = jordan_boundary(&ScalingParams::new(2, 0.01).unwrap(), 2);
    outcome(
        worst <= 1e-9 && ks == 0 && st == 0,
        format!(
            "max boundary deviation {worst:.1e}, dominance violations ks={ks} st={st}; \
             simplified dichotomic Jordan form disagrees on {disagree}/10000 points (reported only, \
             theorem boundary at s=0.01 is t={:.4})",
            s01.unwrap_or(f64::NAN)
        ),
    )
}

fn limit_measure_consistency() -> Outcome {
    let (mut mass, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    let mut fact = 0.0f64;
    for k in 2..=10usize {
        for ti in 1..=9 {
            let t = ti as f64 / 10.0;
            let kf = k as f64;
            let mu = limit_effect_measure(&ScalingParams::new(k, t).unwrap());
            mass = mass.max((mu.total_mass().unwrap() - 1.0).abs());
            m1 = m1.max((mu.moment(1).unwrap() - 1.0 / kf).abs());
            m2 = m2.max((mu.moment(2).unwrap() - (t * kf + 1.0 - t) / (kf * kf)).abs());
            let nu = dilate(t, &bernoulli_free_power(1.0 / kf, 1.0 / t).unwrap()).unwrap();
            for i in 1..=200 {
                let x = i as f64 / 201.0;
                fact = fact.max((mu.density(x) - nu.density(x)).abs());
            }
            for x in [0.0, 1.0] {
                fact = fact.max((mu.atom_mass_at(x) - nu.atom_mass_at(x)).abs());
            }
        }
    }
    outcome(
        mass <= 1e-8 && m1 <= 1e-6 && m2 <= 1e-6 && fact <= 1e-8,
        format!("mass {mass:.1e}, m1 {m1:.1e}, m2 {m2:.1e}, factorization {fact:.1e}"),
    )
}

fn probability_range() -> Outcome {
    let r = circle_range_radius(&circle_example(), 10_000, &mut RandomStream::new(SEED, 13)).unwrap();
    let poly = diag_polytope(&diagonal_example()).unwrap();
    let want = [
        [3.0, 2.0, 1.0],
        [2.0, 3.0, 1.0],
        [1.0, 3.0, 2.0],
        [1.0, 2.0, 3.0],
        [2.0, 1.0, 3.0],
        [3.0, 1.0, 2.0],
    ];
    let exact = poly
        .vertices
        .iter()
        .zip(want)
        .all(|(v, w)| v.as_slice() == w.map(|x| x / 6.0).as_slice());
    outcome(
        (r - 1.0 / 6.0f64.sqrt()).abs() <= 1e-3 && exact,
        format!("radius {r:.6} vs {:.6}, vertices exact: {exact}", 1.0 / 6.0f64.sqrt()),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 13] = [
        ("exact first moment", 1, first_moment),
        ("exact second moment and covariance", 1, second_moment),
        ("Weingarten golden values and convolution", 10, weingarten_golden),
        ("Monte Carlo moments vs exact", 120, monte_carlo_moments),
        ("eigenvalue histogram vs limit (KS)", 60, fig5_desk_scale),
        ("Haar/Wishart lambda_min equivalence", 120, haar_wishart_equivalence),
        ("Dirichlet reduction", 60, dirichlet_reduction),
        ("commutator table", 600, commutator_table),
        ("Zhu closed form", 60, zhu_closed_form),
        ("Jordan lemma soundness", 60, jordan_lemma_soundness),
        ("criterion region consistency", 10, region_consistency),
        ("limiting measure self-consistency", 10, limit_measure_consistency),
        ("probability range examples", 30, probability_range),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run);
        let elapsed = start.elapsed().as_secs_f64();
        let (passed, detail) = match result {
            Ok(o) => (o.passed && elapsed < *budget as f64, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        failures += usize::from(!passed);
        println!(
            "[{}] criterion {:>2}: {name} ({elapsed:.2}s, budget {budget}s): {detail}",
            if passed { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
