//! Acceptance gate: ten end-to-end criteria with frozen tolerances and
//! runtime budgets. Each test prints a single `[PASS]` line with the
//! measured quantities (visible under `--nocapture`); a failure here is a
//! release blocker, not a flake — thresholds were calibrated with margin.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rrde_core::brownian::sample_brownian;
use rrde_core::control::ControlFunction;
use rrde_core::domain::Domain;
use rrde_core::norms::sup_norm_idx;
use rrde_core::rough::{chen_defect, lift_piecewise_linear};
use rrde_core::rough_reflect::{defect_profile_j, solve_reflected_rough, solve_rough_on_partition};
use rrde_core::skorohod::{
    local_time_bound, solve_skorohod, solve_skorohod_projection,
};
use rrde_core::synth::{smooth_path, weierstrass_path};
use rrde_core::tensor::{dist2, Mat};
use rrde_core::vfield::VectorField;
use rrde_core::wongzakai::{integral_gap_curve, wz_error_curve};
use rrde_core::young_reflect::{
    defect_profile_i, solve_reflected_young, solve_young_on_partition, stride_partition,
};

fn pass(line: String) {
    println!("[PASS] {line}");
}

/// Explicit half-space formula and the projection recursion are two
/// algorithms for the same problem; they must agree to near round-off on
/// a large batch of random paths, fast.
#[test]
fn a01_skorohod_explicit_and_projection_recursion_agree() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for s in 0..100u64 {
        let b = sample_brownian(1000 + s, 0, 2, 1.0, 9).unwrap();
        let normal = match s % 3 {
            0 => vec![1.0, 0.0],
            1 => vec![0.6, 0.8],
            _ => vec![-0.7071067811865476, 0.7071067811865476],
        };
        let domain = Domain::half_space(normal, -0.2).unwrap();
        let y0 = domain.project(&[0.1, 0.1]);
        let w = b.fine();
        let direct = solve_skorohod(w, &domain, &y0).unwrap();
        let recursed = solve_skorohod_projection(w, &domain, &y0).unwrap();
        for k in 0..w.len() {
            worst = worst.max(dist2(direct.xi.value(k), recursed.xi.value(k)));
            worst = worst.max(dist2(direct.phi.value(k), recursed.phi.value(k)));
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-10, "sup gap {worst:.3e} above 1e-10");
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}, budget 5 s");
    pass(format!(
        "explicit vs projection reflection: sup gap {worst:.2e} <= 1e-10 \
         over 100 paths x 513 nodes in {elapsed:.2?}"
    ));
}

/// The a priori bound on the reflection mass must dominate the measured
/// total variation on every window of every random half-space instance.
#[test]
fn a02_reflection_mass_below_a_priori_bound() {
    let p = 1.5;
    let mut checked = 0usize;
    let mut tightest = f64::INFINITY;
    for s in 0..50u64 {
        let normal = match s % 3 {
            0 => vec![1.0, 0.0],
            1 => vec![0.6, 0.8],
            _ => vec![0.0, 1.0],
        };
        let offset = -0.1 - 0.01 * (s % 5) as f64;
        let domain = Domain::half_space(normal, offset).unwrap();
        let constants = domain.constants().unwrap();
        let b = sample_brownian(2000 + s, 0, 2, 1.0, 7).unwrap();
        let w = b.fine();
        let y0 = domain.project(&[0.0, 0.0]);
        let sol = solve_skorohod(w, &domain, &y0).unwrap();
        let ctrl = ControlFunction::pvar(w, p).unwrap();
        for (i, j) in [(0, 128), (0, 64), (32, 96), (64, 128), (16, 48)] {
            let a = sup_norm_idx(w, i, j);
            if a <= 1e-12 {
                continue;
            }
            let bound = local_time_bound(&constants, a, ctrl.eval_idx(i, j), p);
            let mass = sol.phi_tv[j] - sol.phi_tv[i];
            assert!(
                mass <= bound * (1.0 + 1e-12),
                "instance {s} window ({i},{j}): mass {mass:.3e} above bound {bound:.3e}"
            );
            if mass > 0.0 {
                tightest = tightest.min(bound / mass);
            }
            checked += 1;
        }
    }
    pass(format!(
        "reflection mass bound: {checked} windows over 50 instances, zero violations \
         (tightest bound/mass ratio {tightest:.2})"
    ));
}

/// Second-level consistency of Brownian lifts at every dyadic level up to
/// 12: the concatenation identity holds to round-off relative to scale,
/// and the symmetric part is half the outer square of the increment.
#[test]
fn a03_brownian_lift_identities_up_to_level_12() {
    let mut worst_chen = 0.0_f64;
    let mut worst_sym = 0.0_f64;
    for level in 1..=12u32 {
        let b = sample_brownian(3000, 0, 2, 1.0, level).unwrap();
        let x = b.lift_coarse(level, 2.5).unwrap();
        let n = x.len();
        let times = x.times().to_vec();
        let scale = x.scale().max(1.0);
        // every adjacent triple, plus a decimated global triple family
        for k in 1..n.saturating_sub(1) {
            let d = chen_defect(&x, times[k - 1], times[k], times[k + 1]).unwrap();
            worst_chen = worst_chen.max(d / scale);
        }
        let stride = (n / 24).max(1);
        let pts: Vec<usize> = (0..n).step_by(stride).collect();
        for (ai, &i) in pts.iter().enumerate() {
            for (bi, &k) in pts.iter().enumerate().skip(ai + 1) {
                for &j in pts.iter().skip(bi + 1) {
                    let d = chen_defect(&x, times[i], times[k], times[j]).unwrap();
                    worst_chen = worst_chen.max(d / scale);
                }
                // symmetric part on the (i, k) pairs of the same family
                let two_sym = x.x2(i, k).sym().scale(2.0);
                let inc = x.x1(i, k);
                let defect = two_sym.sub(&Mat::outer(&inc, &inc)).max_abs();
                worst_sym = worst_sym.max(defect);
            }
        }
    }
    assert!(worst_chen <= 1e-10, "relative concatenation defect {worst_chen:.3e}");
    assert!(worst_sym <= 1e-10, "symmetric-part defect {worst_sym:.3e}");
    pass(format!(
        "lift identities at levels 1..=12: concatenation defect {worst_chen:.2e}, \
         symmetry defect {worst_sym:.2e}, both <= 1e-10"
    ));
}

/// First-order remainder of the Young solver scales like omega^(gamma/p)
/// with gamma = 2: the fitted envelope slope over ten rough synthetic
/// drivers stays above gamma/p - 0.15, within a minute.
#[test]
fn a04_young_remainder_scaling_rate() {
    let start = Instant::now();
    let (p, gamma) = (1.6, 2.0);
    let sigma = VectorField::bounded_sin(2, 2, 0.5, 0.4, 1.2).unwrap();
    let domain = Domain::half_space(vec![1.0, 0.0], 0.0).unwrap();
    let mut slopes = Vec::new();
    for seed in 0..10u64 {
        let x = weierstrass_path(300 + seed, 2, 0.65, 10, 513, 1.0).unwrap();
        let sol = solve_reflected_young(&x, &sigma, &domain, &[0.1, 0.0], p, 0.4).unwrap();
        let ctrl = ControlFunction::pvar(&x, p).unwrap();
        let prof = defect_profile_i(&sol, &x, &sigma, &ctrl, p, gamma);
        assert!(prof.slope.is_finite(), "seed {seed}: slope fit failed");
        slopes.push(prof.slope);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let floor = gamma / p - 0.15;
    let elapsed = start.elapsed();
    assert!(mean >= floor, "mean slope {mean:.3} below {floor:.3}");
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}, budget 60 s");
    pass(format!(
        "first-order remainder rate: mean slope {mean:.3} >= {floor:.3} \
         over 10 drivers in {elapsed:.2?}"
    ));
}

/// Second-order remainder of the rough solver: exactly zero within steps
/// (left-point bookkeeping), and the cross-step envelope scales with
/// slope at least gamma/p - 0.2 for gamma = 3 on level-10 Brownian lifts.
#[test]
fn a05_rough_remainder_within_and_across_steps() {
    let (p, gamma) = (2.5, 3.0);
    let sigma = VectorField::bounded_sin(2, 2, 0.35, 0.25, 1.0).unwrap();
    let domain = Domain::half_space(vec![1.0, 0.0], 0.0).unwrap();
    let mut slopes = Vec::new();
    let mut worst_within = 0.0_f64;
    for seed in 0..10u64 {
        let b = sample_brownian(400 + seed, 0, 2, 1.0, 10).unwrap();
        let x = b
            .lift_coarse(10, p)
            .unwrap()
            .with_holder_certificate()
            .unwrap();
        let ctrl = x.certificate().unwrap().clone();
        let eps = ctrl.total() / 64.0;
        let (sol, _) = solve_reflected_rough(&x, &sigma, &domain, &[0.05, 0.0], eps).unwrap();
        let prof = defect_profile_j(&sol, &x, &sigma, &ctrl, p, gamma);
        assert!(
            prof.within_step_max <= 1e-12,
            "seed {seed}: within-step remainder {:.3e}",
            prof.within_step_max
        );
        worst_within = worst_within.max(prof.within_step_max);
        if prof.slope.is_finite() {
            slopes.push(prof.slope);
        }
    }
    assert!(slopes.len() >= 8, "only {} of 10 slope fits converged", slopes.len());
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let floor = gamma / p - 0.2;
    assert!(mean >= floor, "mean slope {mean:.3} below {floor:.3}");
    pass(format!(
        "second-order remainder: within-step max {worst_within:.1e} <= 1e-12, \
         mean cross-step slope {mean:.3} >= {floor:.3} over 10 lifts"
    ));
}

/// On lifts of bounded-variation drivers the rough solver must coincide
/// with the Young solver up to the mesh modulus scale, case by case.
#[test]
fn a06_rough_solver_coincides_with_young_on_bv_lifts() {
    let sigma = VectorField::bounded_sin(2, 2, 0.4, 0.3, 1.1).unwrap();
    let mut worst_ratio = 0.0_f64;
    for case in 0..20u64 {
        let path = smooth_path(200 + case, 2, 3, 513, 1.0).unwrap();
        let x = lift_piecewise_linear(&path, 2.2).unwrap();
        let domain = if case % 2 == 0 {
            Domain::orthant(2).unwrap()
        } else {
            Domain::half_space(vec![1.0, 0.0], 0.0).unwrap()
        };
        let y0 = [0.3, 0.25];
        let stride = if case % 4 < 2 { 8 } else { 16 };
        let part = stride_partition(path.len(), stride);
        let (rough_sol, _) =
            solve_rough_on_partition(&x, &sigma, &domain, &y0, &part, None).unwrap();
        let ctrl = ControlFunction::pvar(&path, 1.2).unwrap();
        let young_sol =
            solve_young_on_partition(&path, &sigma, &domain, &y0, &part, &ctrl, 1.2).unwrap();
        let mut modulus = 0.0_f64;
        for w in part.windows(2) {
            modulus = modulus.max(sup_norm_idx(&path, w[0], w[1]));
        }
        let worst = (0..path.len())
            .map(|k| dist2(rough_sol.y.value(k), young_sol.y.value(k)))
            .fold(0.0_f64, f64::max);
        assert!(
            worst <= 10.0 * modulus,
            "case {case}: gap {worst:.3e} above 10 x modulus {modulus:.3e}"
        );
        worst_ratio = worst_ratio.max(worst / modulus);
    }
    pass(format!(
        "rough/Young coincidence on 20 smooth-driver cases: \
         worst gap/modulus ratio {worst_ratio:.2} <= 10"
    ));
}

/// Measured growth constants of the rough solution (increment and
/// reflection-mass shape factors) are stable under partition refinement:
/// halving the stride moves each by less than 50%.
#[test]
fn a07_measured_constants_stable_under_refinement() {
    let sigma = VectorField::bounded_sin(2, 2, 0.3, 0.25, 1.0).unwrap();
    let domain = Domain::half_space(vec![1.0, 0.0], 0.0).unwrap();
    let mut worst = 1.0_f64;
    for seed in 0..10u64 {
        let b = sample_brownian(500 + seed, 0, 2, 1.0, 9).unwrap();
        let x = b
            .lift_coarse(9, 2.5)
            .unwrap()
            .with_holder_certificate()
            .unwrap();
        let ctrl = x.certificate().unwrap().clone();
        let coarse = stride_partition(x.len(), 8);
        let fine = stride_partition(x.len(), 4);
        let (a, _) =
            solve_rough_on_partition(&x, &sigma, &domain, &[0.1, 0.0], &coarse, Some(&ctrl))
                .unwrap();
        let (b2, _) =
            solve_rough_on_partition(&x, &sigma, &domain, &[0.1, 0.0], &fine, Some(&ctrl))
                .unwrap();
        for (u, v) in [
            (a.measured.c_increment, b2.measured.c_increment),
            (a.measured.c_local_time, b2.measured.c_local_time),
        ] {
            if u.max(v) > 1e-12 {
                let ratio = u.max(v) / u.min(v).max(1e-12);
                assert!(ratio < 1.5, "seed {seed}: constant moved {u:.3e} -> {v:.3e}");
                worst = worst.max(ratio);
            }
        }
    }
    pass(format!(
        "measured constants across dyadic refinement: worst ratio {worst:.3} < 1.5 \
         over 10 lifts"
    ));
}

/// Piecewise-linear driver approximations converge to the reference
/// solution: the Monte-Carlo error curve is strictly decreasing in the
/// level and its fitted log2 slope is at most -1.2, inside 30 minutes.
#[test]
fn a08_interpolation_error_rate() {
    let start = Instant::now();
    let sigma = VectorField::bounded_sin(1, 1, 0.3, 0.2, 1.0).unwrap();
    let domain = Domain::half_space(vec![1.0], 0.0).unwrap();
    let n_range: Vec<u32> = (5..=10).collect();
    let report =
        wz_error_curve(&sigma, &domain, &[0.2], &n_range, 1000, 2.5, 2026).unwrap();
    let elapsed = start.elapsed();
    for w in report.mean_sq.windows(2) {
        assert!(w[1] < w[0], "error curve not strictly decreasing: {:?}", report.mean_sq);
    }
    assert!(
        report.slope <= -1.2,
        "slope {:.3} above -1.2 (halfwidth {:.3})",
        report.slope,
        report.slope_halfwidth
    );
    assert!(elapsed < Duration::from_secs(30 * 60), "took {elapsed:?}, budget 30 min");
    assert!(report.samples_failed == 0, "{} samples failed", report.samples_failed);
    pass(format!(
        "interpolation error rate: strictly decreasing over levels 5..=10, \
         slope {:.2} <= -1.2 (1000 samples, {elapsed:.1?})",
        report.slope
    ));
}

/// The gap between the integral along the approximate solution and along
/// the reference decreases strictly in the level with fitted slope at
/// most -0.1.
#[test]
fn a09_integral_gap_trend() {
    let sigma = VectorField::bounded_sin(1, 1, 0.3, 0.2, 1.0).unwrap();
    let domain = Domain::half_space(vec![1.0], 0.0).unwrap();
    let n_range: Vec<u32> = (5..=10).collect();
    let report =
        integral_gap_curve(&sigma, &domain, &[0.2], &n_range, 1000, 2026).unwrap();
    for w in report.mean_sq.windows(2) {
        assert!(w[1] < w[0], "gap curve not strictly decreasing: {:?}", report.mean_sq);
    }
    assert!(report.slope <= -0.1, "slope {:.3} above -0.1", report.slope);
    pass(format!(
        "integral gap trend: strictly decreasing over levels 5..=10, \
         slope {:.2} <= -0.1 (1000 samples)",
        report.slope
    ));
}

/// Golden configurations reproduce the committed artifacts byte for byte.
#[test]
fn a10_golden_configs_reproduce_committed_bytes() {
    let bin = env!("CARGO_BIN_EXE_rrde");
    let outdir = std::env::temp_dir().join(format!("rrde-golden-{}", std::process::id()));
    std::fs::create_dir_all(&outdir).unwrap();
    let cases = [
        ("skorohod", "tests/golden/skorohod.conf", "tests/golden/skorohod.expected.csv"),
        ("wz-converge", "tests/golden/wz_small.conf", "tests/golden/wz_small.expected.csv"),
    ];
    for (cmd, conf, expected) in cases {
        let out = outdir.join(format!("{cmd}.csv"));
        let status = Command::new(bin)
            .args([cmd, "--config", conf, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "{cmd} run failed");
        let got = std::fs::read(&out).unwrap();
        let want = std::fs::read(Path::new(expected)).unwrap();
        assert_eq!(got, want, "{cmd}: bytes differ from {expected}");
    }
    pass("golden configs: 2 artifacts reproduced bitwise".to_string());
}
