//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qkflow::convexgeom::{sphere_area, SphereGrid, SupportSurface};
use qkflow::flatside::{
    assemble_b_matrix, check_star, eigen_asymptotics_check, exp_coordinate_seminorms, f_chart_approach,
    geometric_z_grid, interface_curvatures, model_jet, run_pressure, verify_interface_law, weighted_holder_norms,
    BMatrix, FJet, HolderGrid, ModelJet, PressureConfig, PressureProfile, PressureStop,
};
use qkflow::flowcore::{extinction_time_estimate, run, run_coupled, FlowConfig, Scheme, StopReason};
use qkflow::linearization::{
    check_a11_scaling, check_aii_lower_bound, check_speed_derivative_bounds, compare_methods, lambda_series,
    linearized_coefficients, Method,
};
use qkflow::symfun::{dieter_lower_bound, positivity_identity_check, qk_gradient, qk_quotient, CurvatureVector};
use qkflow::viscosity::{approximate, dilation_uniqueness_check, family_flow_limit};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn sphere_law() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, k) in [(2, 1), (2, 2), (3, 2), (3, 3)] {
        let start = Instant::now();
        let grid = SphereGrid::axial(n, 64).unwrap();
        let s = SupportSurface::sphere(grid, 1.0);
        let c = 2.0 * (n - k + 1) as f64 / k as f64;
        let t_ext = 1.0 / c;
        let mut cfg = FlowConfig::new(n, k, 1e-4, 2.0 * t_ext, grid);
        cfg.extinction_fraction = Some(0.05);
        let trace = run(&s, &cfg).unwrap();
        let ball = sphere_area(n) / (n as f64 + 1.0);
        let err = trace
            .times
            .iter()
            .zip(&trace.volume)
            .map(|(t, v)| ((v / ball).powf(2.0 / (n as f64 + 1.0)) - (1.0 - c * t)).abs())
            .fold(0.0, f64::max);
        let est = extinction_time_estimate(&trace).unwrap_or(f64::NAN);
        let rel = ((est - t_ext) / t_ext).abs();
        let secs = start.elapsed().as_secs_f64();
        let good = trace.stop == StopReason::Extinct && err <= 1e-3 && rel <= 0.02 && secs <= 30.0;
        ok &= good;
        parts.push(format!("({n},{k}) err={err:.1e} T={est:.5} ({rel:.1e}) {secs:.2}s"));
    }
    verdict(ok, parts.join("; "))
}

fn monotone_quantities() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    // the explicit scheme is checked on a coarser grid to bound its step count
    for (scheme, grid) in [
        (Scheme::SemiImplicit, SphereGrid::lat_lon(24, 48).unwrap()),
        (Scheme::Explicit, SphereGrid::lat_lon(16, 32).unwrap()),
    ] {
        let s = SupportSurface::ellipsoid(grid, &[1.0, 1.0, 1.5], &[0.0; 3]).unwrap();
        let mut cfg = FlowConfig::new(2, 2, 1e-3, 3.0, grid);
        cfg.scheme = scheme;
        let trace = run(&s, &cfg).unwrap();
        let m = trace.monitor_report(&cfg.monitor_tolerances);
        ok &= m.passed && trace.stop == StopReason::Extinct;
        parts.push(format!(
            "{scheme:?} {grid:?}: {} steps to t={:.4}, worst F_min drop {:.1e}, worst H/F rise {:.1e}",
            trace.len() - 1,
            trace.times.last().unwrap(),
            m.worst_f_min_drop,
            m.worst_h_over_f_rise
        ));
    }
    verdict(ok, parts.join("; "))
}

fn rotation(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (a, b, c) = (
        rng.gen_range(0.0..std::f64::consts::TAU),
        rng.gen_range(0.0..std::f64::consts::PI),
        rng.gen_range(0.0..std::f64::consts::TAU),
    );
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let rx = |t: f64| [[1.0, 0.0, 0.0], [0.0, t.cos(), -t.sin()], [0.0, t.sin(), t.cos()]];
    let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|l| p[i][l] * q[l][j]).sum();
            }
        }
        r
    };
    mul(mul(rz(a), rx(b)), rz(c)).iter().map(|r| r.to_vec()).collect()
}

fn comparison_principle() -> Verdict {
    let grid = SphereGrid::lat_lon(16, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut steps = 0;
    let mut extinct = 0;
    for _ in 0..50 {
        let k = rng.gen_range(1..=2);
        let axes: Vec<f64> = (0..3).map(|_| rng.gen_range(0.7..1.5)).collect();
        let rot = rotation(&mut rng);
        let outer = SupportSurface::rotated_ellipsoid(grid, &axes, &rot, &[0.0; 3]).unwrap();
        // inside the inscribed ball of the outer body
        let r_in = axes.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = rng.gen_range(0.3..0.8);
        let inner_axes: Vec<f64> = (0..3).map(|_| r_in * scale * rng.gen_range(0.6..1.0)).collect();
        let dir: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let len = rng.gen_range(0.0..0.9) * (1.0 - scale) * r_in;
        let shift: Vec<f64> = dir.iter().map(|x| x / norm * len).collect();
        let inner = SupportSurface::rotated_ellipsoid(grid, &inner_axes, &rotation(&mut rng), &shift).unwrap();
        assert!(outer.encloses(&inner).unwrap(), "initial pair must be nested");
        let mut cfg = FlowConfig::new(2, k, 1e-3, 10.0, grid);
        cfg.scheme = Scheme::SemiImplicit;
        let traces = run_coupled(&[inner, outer], &cfg, |_, _, s| {
            steps += 1;
            let m = s[1].enclosure_margin(&s[0]).unwrap();
            worst = worst.min(m);
            if m < 0.0 {
                violations += 1;
            }
        })
        .unwrap();
        if traces[0].stop == StopReason::Extinct {
            extinct += 1;
        }
    }
    verdict(
        violations == 0 && extinct == 50,
        format!("50 pairs, {steps} steps, {extinct} inner extinctions, {violations} violations, min margin {worst:.3e}"),
    )
}

fn dilation_uniqueness() -> Verdict {
    let mut consts = Vec::new();
    let dilation = |n_theta: usize, delta: f64| {
        let grid = SphereGrid::axial(2, n_theta).unwrap();
        let s = SupportSurface::ellipsoid(grid, &[1.0, 1.0, 1.5], &[0.0; 3]).unwrap();
        let mut cfg = FlowConfig::new(2, 2, 0.1 * grid.d_theta().powi(2), 0.8, grid);
        cfg.adaptive = false;
        cfg.snapshot_times = vec![0.2, 0.4, 0.6, 0.8];
        dilation_uniqueness_check(&s, delta, &cfg).unwrap()
    };
    for delta in [0.1, 0.05, 0.025] {
        consts.push(dilation(64, delta).constant);
    }
    let max = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = consts.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max / min - 1.0;
    let refine: Vec<f64> = [32, 64, 128].iter().map(|&nt| dilation(nt, 0.1).max_scaling_error).collect();
    let decreasing = refine.windows(2).all(|w| w[1] < 0.5 * w[0]);
    verdict(
        spread <= 0.2 && decreasing,
        format!("C(delta) = {consts:.4?}, spread {spread:.3}; scaling error under refinement {:.2e}, {:.2e}, {:.2e}", refine[0], refine[1], refine[2]),
    )
}

fn viscosity_convergence() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for n_theta in [64, 128] {
        let grid = SphereGrid::axial(2, n_theta).unwrap();
        let lens = SupportSurface::flat_sided_lens(grid, 0.5, 0.5);
        let fam = approximate(&lens, &[0.1, 0.05, 0.025, 0.0125]).unwrap();
        let cfg = FlowConfig::new(2, 2, 1e-3, 0.3, grid);
        let rep = family_flow_limit(&fam, &cfg, &[0.05, 0.1, 0.2, 0.3]).unwrap();
        let worst = rep
            .probes
            .iter()
            .flat_map(|p| p.ratios.iter().copied())
            .fold(0.0, f64::max);
        let nested = rep.probes.iter().all(|p| p.nested);
        let good = rep.failure.is_none() && worst <= 0.6 && rep.probes.len() == 4 && nested;
        ok &= good;
        parts.push(format!("n_theta={n_theta}: worst ratio {worst:.3}, nested {nested}"));
    }
    verdict(ok, parts.join("; "))
}

fn interface_law() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, k) in [(2, 2), (3, 2), (3, 3)] {
        let p0 = PressureProfile::lens(n, k, 0.5, 0.5, 0.8, 201).unwrap();
        let a = (n - k + 1) as f64 / (k - 1) as f64;
        let cfg = PressureConfig {
            dt: 1e-3,
            t_end: 0.3 * 0.25 / (2.0 * a),
            cfl: 0.4,
            lambda: None,
            snapshot_times: Vec::new(),
        };
        let mut run = run_pressure(&p0, &cfg).unwrap();
        let fit = verify_interface_law(&mut run.trajectory, n, k, 0.25).unwrap();
        let min_star = run.min_lambda_star();
        let good = run.stop == PressureStop::Horizon && fit.relative_error <= 0.05 && min_star >= run.lambda / 2.0;
        ok &= good;
        parts.push(format!(
            "({n},{k}) slope {:.5} vs {:.1} ({:.1e}), min lambda* {min_star:.3} vs lambda {:.3}",
            fit.fitted_slope, fit.predicted_slope, fit.relative_error, run.lambda
        ));
    }
    // the (★) constant at the start is the reference lambda
    let p0 = PressureProfile::lens(2, 2, 0.5, 0.5, 0.8, 201).unwrap();
    ok &= check_star(&p0, 0.0).unwrap().lambda_star > 0.0;
    verdict(ok, parts.join("; "))
}

fn subset_sum(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| v[i]).product::<f64>())
        .sum()
}

fn symfun_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_q: f64 = 0.0;
    let mut worst_g: f64 = 0.0;
    let mut bad_ineq = 0;
    let mut samples = 0;
    for n in 1..=8 {
        for _ in 0..10_000 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range((0.05f64).ln()..(20f64).ln()).exp()).collect();
            let k = rng.gen_range(1..=n);
            let lam = CurvatureVector::new(v.clone()).unwrap();
            let oracle = |w: &[f64]| {
                if k == 1 {
                    w.iter().sum::<f64>()
                } else {
                    subset_sum(w, k) / subset_sum(w, k - 1)
                }
            };
            let q = qk_quotient(&lam, k).unwrap();
            let q0 = oracle(&v);
            worst_q = worst_q.max(((q - q0) / q0).abs());
            let g = qk_gradient(&lam, k).unwrap();
            worst_q = worst_q.max(((g.value - q0) / q0).abs());
            let gmax = g.gradient.iter().copied().fold(0.0, f64::max);
            for p in 0..n {
                // fourth-order central difference on the oracle
                let h = 1e-3 * v[p];
                let at = |s: f64| {
                    let mut w = v.clone();
                    w[p] += s * h;
                    oracle(&w)
                };
                let fd = (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h);
                worst_g = worst_g.max((fd - g.gradient[p]).abs() / gmax);
            }
            let (lhs, rhs) = positivity_identity_check(&lam, k).unwrap();
            let dieter = dieter_lower_bound(&lam, k).unwrap();
            let positive = g.gradient.iter().all(|x| *x > 0.0) && q > 0.0;
            let dieter_ok = g.gradient.iter().zip(&dieter).all(|(a, b)| *a >= b * (1.0 - 1e-12));
            if !(lhs >= rhs * (1.0 - 1e-12) && positive && dieter_ok) {
                bad_ineq += 1;
            }
            samples += 1;
        }
    }
    verdict(
        worst_q <= 1e-12 && worst_g <= 1e-8 && bad_ineq == 0,
        format!("{samples} samples: quotient rel err {worst_q:.1e}, gradient rel err {worst_g:.1e}, inequality failures {bad_ineq}"),
    )
}

fn appendix_audit() -> Verdict {
    let m = ModelJet {
        c0: 1.0,
        a: 0.5,
        c: vec![1.0, 1.5],
        d: vec![0.0, 0.0],
    };
    let k = 2;
    let jets: Vec<FJet> = geometric_z_grid(1e-1, 1e-6)
        .into_iter()
        .map(|z| model_jet(&m, z, &[0.0, 0.0]))
        .collect();
    let a11 = check_a11_scaling(&jets, k).unwrap();
    let aii = check_aii_lower_bound(&jets, k, 0.0).unwrap();
    let speed = check_speed_derivative_bounds(&lambda_series(&jets).unwrap(), k).unwrap();
    let mut agree: f64 = 0.0;
    for j in &jets {
        let x = linearized_coefficients(j, k, Method::Minors).unwrap();
        let y = linearized_coefficients(j, k, Method::FiniteDifference).unwrap();
        let g = compare_methods(&x, &y);
        agree = agree.max(g.max_rel_a).max(g.max_rel_b);
    }
    let (z_lo, z_hi) = (jets.last().unwrap().z, jets[0].z);
    verdict(
        (a11.exponent - 2.0).abs() <= 0.1
            && aii.min_aii > 0.0
            && (speed.slope - 1.0).abs() <= 0.05
            && agree <= 1e-5
            && z_lo <= 1e-6 * 1.0001
            && z_hi >= 1e-1 * 0.9999,
        format!(
            "z in [{z_lo:.1e}, {z_hi:.1e}]: a11 exponent {:.4}, min a_ii {:.4}, dQ/dlambda1 slope {:.4}, minors vs FD {agree:.1e}",
            a11.exponent, aii.min_aii, speed.slope
        ),
    )
}

fn eigen_asymptotics() -> Verdict {
    let p = PressureProfile::lens(3, 2, 0.5, 0.5, 0.8, 301).unwrap();
    let samples = f_chart_approach(&p, &[0.1, 0.0], 1e-2, 1e-6).unwrap();
    let series: Vec<BMatrix> = samples.iter().map(|s| assemble_b_matrix(&s.jet).unwrap()).collect();
    let iface = interface_curvatures(&p, &[0.0, 0.0]).unwrap();
    let rep = eigen_asymptotics_check(&series, &iface);
    let target = 1.0 / p.rho;
    let lim_err = rep
        .limiting_tangential
        .iter()
        .map(|l| ((l - target) / target).abs())
        .fold(0.0, f64::max);
    let decades = (rep.z[0] / rep.z[rep.z.len() - 1]).log10();
    verdict(
        rep.failures.is_empty() && rep.band_ratio <= 1.1 && rep.gap_monotone && lim_err <= 0.02 && decades >= 2.0,
        format!(
            "{decades:.1} decades: sqrt(z) lambda1 band {:.4}, gap monotone {}, limiting tangential {:.5?} vs 1/rho = {target} ({lim_err:.1e})",
            rep.band_ratio, rep.gap_monotone, rep.limiting_tangential
        ),
    )
}

fn holder_machinery() -> Verdict {
    let grid = HolderGrid::new(1e-6, 1.0, 41, 1, 0.5, 5);
    let f = |z: f64, _: &[f64]| z.sqrt();
    let norms = weighted_holder_norms(&f, &grid, 0.5).unwrap();
    let (sbar, classical) = exp_coordinate_seminorms(&f, &grid, 0.5);
    let mut worst = ((sbar - classical) / classical).abs();
    // a function with x-dependence, through both code paths
    let g = |z: f64, x: &[f64]| z.sqrt() * (1.0 + x[0] * x[0]) + x[0];
    let (s2, c2) = exp_coordinate_seminorms(&g, &grid, 0.5);
    worst = worst.max(((s2 - c2) / c2).abs());
    verdict(
        (norms.c0_w - 1.0).abs() <= 1e-6 && worst <= 1e-6,
        format!("C0_w = {:.9}, exp-coordinate mismatch {worst:.1e}", norms.c0_w),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("sphere shrink law", sphere_law),
        ("monotone quantities", monotone_quantities),
        ("comparison principle", comparison_principle),
        ("dilation uniqueness", dilation_uniqueness),
        ("viscosity convergence", viscosity_convergence),
        ("interface law", interface_law),
        ("symfun oracle equivalence", symfun_oracles),
        ("linearization audit", appendix_audit),
        ("eigenvalue asymptotics", eigen_asymptotics),
        ("Holder machinery", holder_machinery),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        if !v.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {} ({:.1}s) {}",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
