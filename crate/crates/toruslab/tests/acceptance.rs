//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured statistic and the pinned tolerance. Run with
//! `cargo test -p toruslab --test acceptance -- --nocapture` to see the
//! lines as they complete.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;

use toruslab::convex_body::{fourier_coeff_exact_ball, ConvexBody};
use toruslab::lattice::{
    certify_reduced_basis, haar_sample, reduced_basis, resonant_set, resonant_set_scan,
    siegel_count, HaarMethod, UnimodularLattice,
};
use toruslab::limit_law::{
    draw_sample_point, eval_translation_nonsym, eval_translation_sym,
    eval_translation_sym_doubled, sample_limit_ecdf, series_increment_bound, LimitLawConfig,
    LimitVariant,
};
use toruslab::linalg::{norm, Mat};
use toruslab::numeric::ball_volume;
use toruslab::orbit::{
    cylinder_count, cylinder_count_bruteforce, fourier_discrepancy, normalized_discrepancy,
    sample_cylinder_ecdf, sample_flow_ecdf, sample_geodesic_ecdf, sample_kesten_ecdf,
    sample_translation_ecdf, CylinderSamplerConfig, DirectionDensity, FlowSamplerConfig,
    FourierMode, GeodesicSamplerConfig, KestenSamplerConfig, TranslationOrbitSpec,
    TranslationSamplerConfig,
};
use toruslab::rng::{sample_rng, uniform_torus};
use toruslab::stats::{cauchy_fit, ks_distance};

fn verdict(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {name}: {tag} ({detail})");
    assert!(pass, "criterion {name} failed: {detail}");
}

fn ball(d: usize) -> ConvexBody {
    ConvexBody::unit_ball(d).unwrap()
}

/// Criterion 1: the main limit law. d = 2 unit ball, r in [0.2, 0.4],
/// N = 1e5 orbit ECDF (2000 samples) against the truncated limit-law ECDF
/// (M = 8, P = 64, 4000 samples, N_haar = 1e6): two-sample KS <= 0.05, and
/// the N = 1e4 run is no closer than the N = 1e5 run minus 0.01.
#[test]
fn criterion_01_main_limit_law() {
    let start = Instant::now();
    let orbit_cfg = TranslationSamplerConfig {
        body: ball(2),
        r_min: 0.2,
        r_max: 0.4,
        gamma: 0.0,
        n_steps: 100_000,
        samples: 2000,
        seed: 20_260_801,
    };
    let (orbit, _) = sample_translation_ecdf(&orbit_cfg).unwrap();
    let small_cfg = TranslationSamplerConfig {
        n_steps: 10_000,
        seed: 20_260_802,
        body: ball(2),
        ..orbit_cfg
    };
    let (orbit_small, _) = sample_translation_ecdf(&small_cfg).unwrap();

    let mut limit_cfg = LimitLawConfig::new(ball(2), 2, LimitVariant::TranslationSym);
    limit_cfg.m_cutoff = 8;
    limit_cfg.p_max = 64;
    limit_cfg.samples = 4000;
    limit_cfg.seed = 20_260_803;
    limit_cfg.n_haar = 1_000_000;
    let (limit, _) = sample_limit_ecdf(&limit_cfg).unwrap();

    let ks_large = ks_distance(&orbit, &limit);
    let ks_small = ks_distance(&orbit_small, &limit);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = ks_large <= 0.05 && ks_small > ks_large - 0.01 && elapsed <= 600.0;
    verdict(
        "1 (main limit law)",
        pass,
        &format!(
            "ks(N=1e5)={ks_large:.4} <= 0.05, ks(N=1e4)={ks_small:.4} > ks(N=1e5)-0.01, {elapsed:.0}s"
        ),
    );
}

/// Criterion 2: the one-dimensional rotation. r = sqrt(2) - 1, N = 1e6,
/// 2000 samples of D_N / ln N: KS to the fitted Cauchy <= 0.05 and the
/// location within 0.1 scale of 0.
#[test]
fn criterion_02_kesten_cauchy() {
    let cfg = KestenSamplerConfig {
        r: 2.0f64.sqrt() - 1.0,
        n_steps: 1_000_000,
        samples: 2000,
        seed: 11,
    };
    let (cdf, _) = sample_kesten_ecdf(&cfg).unwrap();
    let fit = cauchy_fit(&cdf).unwrap();
    let pass =
        !fit.degenerate && fit.ks_to_fit <= 0.05 && fit.location.abs() <= 0.1 * fit.scale;
    verdict(
        "2 (Cauchy law of the rotation)",
        pass,
        &format!(
            "ks_to_fit={:.4} <= 0.05, |location|={:.4} <= 0.1*scale={:.4}",
            fit.ks_to_fit,
            fit.location.abs(),
            0.1 * fit.scale
        ),
    );
}

/// Criterion 3: small-ball invariance. d = 2, gamma = 0 vs gamma = 0.2 at
/// N = 1e6, 2000 samples each: KS <= 0.06.
#[test]
fn criterion_03_small_ball_invariance() {
    let base = TranslationSamplerConfig {
        body: ball(2),
        r_min: 0.2,
        r_max: 0.4,
        gamma: 0.0,
        n_steps: 1_000_000,
        samples: 2000,
        seed: 31,
    };
    let (plain, _) = sample_translation_ecdf(&base).unwrap();
    let shrunk_cfg = TranslationSamplerConfig {
        gamma: 0.2,
        seed: 32,
        body: ball(2),
        ..base
    };
    let (shrunk, _) = sample_translation_ecdf(&shrunk_cfg).unwrap();
    let ks = ks_distance(&plain, &shrunk);
    verdict(
        "3 (small-ball invariance)",
        ks <= 0.06,
        &format!("ks(gamma=0, gamma=0.2)={ks:.4} <= 0.06"),
    );
}

/// Criterion 4: resonant reduction. The standard deviation of
/// (normalized direct - resonant sum) over 200 samples at N = 1e5 decreases
/// across eps in {0.4, 0.2, 0.1} within two standard errors.
#[test]
fn criterion_04_resonant_reduction() {
    let n_steps = 100_000u64;
    let samples = 200u64;
    let body = ball(2);
    let mut stds = Vec::new();
    for &eps in &[0.4, 0.2, 0.1] {
        let diffs: Vec<f64> = (0..samples)
            .map(|i| {
                let mut rng = sample_rng(41, i);
                let r = 0.2 + 0.2 * rng.gen::<f64>();
                let alpha = uniform_torus(&mut rng, 2);
                let x = uniform_torus(&mut rng, 2);
                let spec =
                    TranslationOrbitSpec::new(body.clone(), r, alpha, x, n_steps, 0.0).unwrap();
                let exact = normalized_discrepancy(&spec);
                let reso = fourier_discrepancy(&spec, FourierMode::Resonant, eps).unwrap();
                exact - reso
            })
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let s = var.sqrt();
        // normal-approximation standard error of a sample standard deviation
        let se = s / (2.0 * (n - 1.0)).sqrt();
        stds.push((eps, s, se));
    }
    let mut pass = true;
    let mut detail = String::new();
    for w in stds.windows(2) {
        let (e0, s0, se0) = w[0];
        let (e1, s1, se1) = w[1];
        let slack = 2.0 * (se0 * se0 + se1 * se1).sqrt();
        if s1 > s0 + slack {
            pass = false;
        }
        detail.push_str(&format!("s({e0})={s0:.4} -> s({e1})={s1:.4} (slack {slack:.4}); "));
    }
    verdict("4 (resonant reduction)", pass, detail.trim_end_matches("; "));
}

/// Criterion 5: the diagonal embedding. The truncated nonsymmetric series
/// with b' = b equals the symmetric series to 1e-12 on 100 sample points.
#[test]
fn criterion_05_diagonal_identity() {
    let mut cfg = LimitLawConfig::new(ball(2), 2, LimitVariant::TranslationSym);
    cfg.m_cutoff = 8;
    cfg.p_max = 64;
    cfg.n_haar = 1_000_000;
    let mut worst: f64 = 0.0;
    let mut tested = 0u32;
    let mut stream = 0u64;
    while tested < 100 {
        let mut rng = sample_rng(51, stream);
        stream += 1;
        let mut pt = draw_sample_point(&cfg, &mut rng).unwrap();
        pt.phases = pt.phases.diagonal();
        let sym = eval_translation_sym(&pt, &cfg).unwrap();
        if sym.min_r < toruslab::limit_law::SHORT_R_FLAG {
            continue; // pathological point; the samplers resample these
        }
        let mut ncfg = cfg.clone();
        ncfg.variant = LimitVariant::TranslationNonsym;
        let nonsym = eval_translation_nonsym(&pt, &ncfg).unwrap();
        worst = worst.max((sym.value - nonsym.value).abs());
        tested += 1;
    }
    verdict(
        "5 (diagonal identity)",
        worst <= 1e-12,
        &format!("max |L' - L| = {worst:.2e} <= 1e-12 on 100 points"),
    );
}

/// Criterion 6: lattice certificates. 100 random lattices of dimensions
/// 3, 4, 5 pass the enumeration certification with unimodular coefficients;
/// the resonant set equals a brute-force scan on 50 small instances exactly.
#[test]
fn criterion_06_lattice_certificates() {
    let mut rng = sample_rng(61, 0);
    let mut certified = 0;
    for trial in 0..100 {
        let n = 3 + trial % 3;
        let mut m = Mat::zeros(n, n);
        loop {
            for j in 0..n {
                for i in 0..n {
                    m.set(i, j, rng.gen::<f64>() * 2.0 - 1.0);
                }
            }
            if m.det().abs() > 1e-3 {
                break;
            }
        }
        let lat = UnimodularLattice::new(m).unwrap();
        let rb = reduced_basis(&lat).unwrap();
        certify_reduced_basis(&lat, &rb).unwrap();
        assert_eq!(rb.coeffs.det_exact().abs(), 1);
        certified += 1;
    }
    let mut scans_equal = 0;
    for i in 0..50u64 {
        let mut rng = sample_rng(62, i);
        let alpha = [rng.gen::<f64>(), rng.gen::<f64>()];
        let n_steps = 400 + (rng.gen::<f64>() * 3000.0) as u64;
        let eps = 0.25 + rng.gen::<f64>() * 0.5;
        let fast = resonant_set(n_steps, &alpha, eps).unwrap();
        let slow = resonant_set_scan(n_steps, &alpha, eps).unwrap();
        let fast_k: Vec<Vec<i64>> = fast.harmonics.iter().map(|h| h.k.clone()).collect();
        assert_eq!(fast_k, slow, "instance {i}");
        scans_equal += 1;
    }
    verdict(
        "6 (lattice certificates)",
        certified == 100 && scans_equal == 50,
        &format!("{certified}/100 bases certified, {scans_equal}/50 resonant scans equal"),
    );
}

/// Criterion 7: the Siegel mean. Over 1e4 approximate Haar samples in
/// dimension 3, the mean number of nonzero vectors in the ball of radius 2
/// is within 3 standard errors of its volume 32 pi / 3.
#[test]
fn criterion_07_siegel_mean() {
    use rayon::prelude::*;
    let samples = 10_000u64;
    let rho = 2.0f64;
    let counts: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(71, i);
            let lat = haar_sample(3, &mut rng, HaarMethod::default()).unwrap();
            siegel_count(&lat, rho).unwrap() as f64
        })
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let want = ball_volume(3, rho);
    let dev = (mean - want).abs();
    verdict(
        "7 (Siegel mean)",
        dev <= 3.0 * se,
        &format!("mean={mean:.3} vs 32pi/3={want:.3}, |dev|={dev:.3} <= 3se={:.3}", 3.0 * se),
    );
}

/// Criterion 8: the coefficient asymptotics. For the d = 2 ball the
/// envelope-relative error of the stationary-phase coefficient against the
/// exact one decays with log-log slope <= -0.9 over |k| in [4, 256].
#[test]
fn criterion_08_herz_slope() {
    let body = ball(2);
    let r = 0.3;
    // max relative error per dyadic shell; the exact coefficient only
    // depends on |k|^2, so cache it
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let shells = [4.0f64, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    let mut pts = Vec::new();
    for w in shells.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut max_rel: f64 = 0.0;
        let hi_i = hi as i64;
        for k1 in 0..=hi_i {
            for k2 in -hi_i..=hi_i {
                let k2n = k1 * k1 + k2 * k2;
                let kn = (k2n as f64).sqrt();
                if kn < lo || kn >= hi || (k1 == 0 && k2 <= 0) {
                    continue;
                }
                let k = [k1, k2];
                let fc = body.fourier_coeff_asymptotic(&k, r).unwrap();
                let herz = r.sqrt() * fc.d_k().unwrap();
                let exact = *cache
                    .entry(k2n)
                    .or_insert_with(|| fourier_coeff_exact_ball(2, r, &k).unwrap());
                let envelope = r.sqrt() / std::f64::consts::PI * kn.powf(-1.5);
                max_rel = max_rel.max((herz - exact).abs() / envelope);
            }
        }
        pts.push((0.5 * (lo + hi), max_rel));
    }
    // least-squares slope in log-log coordinates
    let lx: Vec<f64> = pts.iter().map(|(x, _)| x.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|(_, y)| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let slope = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    verdict(
        "8 (coefficient asymptotics)",
        slope <= -0.9,
        &format!("log-log slope of max envelope-relative error = {slope:.3} <= -0.9"),
    );
}

/// Criterion 9: capsule counts. 100 random instances with T <= 20 match the
/// bounding-box brute force exactly, and the reported discrepancy equals
/// count minus the exact capsule volume to 1e-10.
#[test]
fn criterion_09_cylinder_oracle() {
    let mut rng = sample_rng(91, 0);
    let mut ok = 0;
    for _ in 0..100 {
        let amb = 2 + (rng.gen::<f64>() * 2.0) as usize;
        let y: Vec<f64> = (0..amb).map(|_| rng.gen::<f64>()).collect();
        let mut v: Vec<f64> = (0..amb - 1).map(|_| rng.gen::<f64>()).collect();
        v.push(1.0);
        let r = 0.05 + 0.35 * rng.gen::<f64>();
        let t_total = 1.0 + 19.0 * rng.gen::<f64>();
        let (count, disc) = cylinder_count(&y, &v, r, t_total).unwrap();
        let brute = cylinder_count_bruteforce(&y, &v, r, t_total).unwrap();
        let vol = norm(&v) * t_total * ball_volume(amb - 1, r) + ball_volume(amb, r);
        if count == brute && (disc - (count as f64 - vol)).abs() <= 1e-10 {
            ok += 1;
        }
    }
    verdict(
        "9 (capsule oracle)",
        ok == 100,
        &format!("{ok}/100 instances matched the brute force exactly"),
    );
}

/// Criterion 10: geodesic v-independence. d = 4, T = 1e4, 1500 samples under
/// two distinct direction densities: KS between the normalized ECDFs <= 0.07.
#[test]
fn criterion_10_geodesic_v_independence() {
    let base = GeodesicSamplerConfig {
        d: 4,
        r_min: 0.2,
        r_max: 0.4,
        y: vec![0.5; 4],
        t_total: 10_000.0,
        samples: 1500,
        seed: 101,
        density: DirectionDensity::IsotropicShell {
            speed_min: 0.8,
            speed_max: 1.25,
        },
    };
    let (iso, _) = sample_geodesic_ecdf(&base).unwrap();
    let boxy = GeodesicSamplerConfig {
        seed: 102,
        density: DirectionDensity::BoxOffset {
            low: vec![0.55; 4],
            high: vec![1.05; 4],
        },
        y: vec![0.5; 4],
        ..base
    };
    let (anis, _) = sample_geodesic_ecdf(&boxy).unwrap();
    let ks = ks_distance(&iso, &anis);
    verdict(
        "10 (geodesic v-independence)",
        ks <= 0.07,
        &format!("ks between direction densities = {ks:.4} <= 0.07"),
    );
}

/// Criterion 11: tail diagnostics. Doubling (M, P) changes the truncated
/// series by less than the reported bound on at least 95% of 1000 samples.
#[test]
fn criterion_11_tail_bound() {
    use rayon::prelude::*;
    let mut cfg = LimitLawConfig::new(ball(2), 2, LimitVariant::TranslationSym);
    cfg.m_cutoff = 8;
    cfg.p_max = 64;
    cfg.n_haar = 1_000_000;
    let held: u64 = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(111, i);
            let pt = draw_sample_point(&cfg, &mut rng).unwrap();
            let base = eval_translation_sym(&pt, &cfg).unwrap().value;
            let big = eval_translation_sym_doubled(&pt, &cfg).unwrap().value;
            let bound = series_increment_bound(&pt, &cfg).unwrap();
            u64::from((big - base).abs() <= bound)
        })
        .sum();
    verdict(
        "11 (tail diagnostics)",
        held >= 950,
        &format!("bound held on {held}/1000 samples (need >= 950)"),
    );
}

/// Criterion 12: determinism. Every sampler reproduces byte-identical CSV
/// under a fixed seed across 1 and 8 worker threads.
#[test]
fn criterion_12_determinism() {
    let run_all = || -> Vec<String> {
        let mut out = Vec::new();
        let t_cfg = TranslationSamplerConfig {
            body: ball(2),
            r_min: 0.2,
            r_max: 0.4,
            gamma: 0.0,
            n_steps: 2000,
            samples: 48,
            seed: 121,
        };
        out.push(sample_translation_ecdf(&t_cfg).unwrap().1.to_csv());
        let k_cfg = KestenSamplerConfig {
            r: 0.41421356,
            n_steps: 20_000,
            samples: 64,
            seed: 122,
        };
        out.push(sample_kesten_ecdf(&k_cfg).unwrap().1.to_csv());
        let f_cfg = FlowSamplerConfig {
            body: ball(2),
            r_min: 0.25,
            r_max: 0.25,
            t_total: 60.0,
            samples: 24,
            seed: 123,
            density: DirectionDensity::IsotropicShell {
                speed_min: 0.8,
                speed_max: 1.25,
            },
        };
        out.push(sample_flow_ecdf(&f_cfg).unwrap().1.to_csv());
        let g_cfg = GeodesicSamplerConfig {
            d: 4,
            r_min: 0.2,
            r_max: 0.4,
            y: vec![0.5; 4],
            t_total: 50.0,
            samples: 16,
            seed: 124,
            density: DirectionDensity::IsotropicShell {
                speed_min: 0.8,
                speed_max: 1.25,
            },
        };
        out.push(sample_geodesic_ecdf(&g_cfg).unwrap().1.to_csv());
        let c_cfg = CylinderSamplerConfig {
            d: 2,
            r_min: 0.05,
            r_max: 0.3,
            t_total: 30.0,
            samples: 32,
            seed: 125,
        };
        out.push(sample_cylinder_ecdf(&c_cfg).unwrap().1.to_csv());
        let mut l_cfg = LimitLawConfig::new(ball(2), 2, LimitVariant::TranslationSym);
        l_cfg.samples = 32;
        l_cfg.m_cutoff = 4;
        l_cfg.p_max = 16;
        l_cfg.n_haar = 50_000;
        l_cfg.seed = 126;
        out.push(sample_limit_ecdf(&l_cfg).unwrap().1.to_csv());
        out
    };
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool8 = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap();
    let a = pool1.install(run_all);
    let b = pool8.install(run_all);
    let equal = a == b;
    verdict(
        "12 (determinism)",
        equal,
        &format!("{} sampler dumps byte-identical across 1 vs 8 threads", a.len()),
    );
}
