//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{
    expm, linear_family, max_diff, random_group, random_matrix, random_path,
    random_polynomial_family, rng, uniform_vec,
};
use rand::Rng;
use roughreach::flows::{
    apply_ddiffeo, flow, pushforward, DDiffeo, Direction, FlowRequest, IntegratorSettings,
};
use roughreach::orbit::{bracket_span_rank, distribution_rank, rank_profile, OrbitOptions};
use roughreach::rde::{pure_area, solve_ode, solve_rde};
use roughreach::reach::{
    reach_shooting, verify_accessibility, ReachStatus, ShootingOptions, VerifyOptions,
};
use roughreach::signature::{chen_concat, oscillating_path, sig_pl, PiecewiseLinearPath};
use roughreach::tensor::{shuffle_check, TruncatedTensor};
use roughreach::vf::VectorFieldFamily;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn signature_start(n: usize, depth: usize) -> Vec<f64> {
    TruncatedTensor::identity(n, depth).unwrap().to_flat()
}

fn oscillating_signature() -> Outcome {
    let clock = Instant::now();
    let path = oscillating_path(5, 20_000).unwrap();
    let s = sig_pl(&path, 2).unwrap().group;
    let elapsed = clock.elapsed();
    let level1 = s.level(1).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = [0.0, PI, -PI, 0.0];
    let level2 = max_diff(s.level(2), &target);
    // inscribed 800-gon per loop, 25 loops of radius 1/5
    let m = 800.0;
    let polygon_area = 25.0 * 0.5 * m * 0.04 * (2.0 * PI / m).sin();
    let oracle_gap = (s.coeff(&[0, 1]) - polygon_area).abs();
    outcome(
        level1 <= 1e-10 && level2 <= 1e-6 && elapsed < Duration::from_secs(2),
        format!(
            "level-1 err {level1:.2e} (tol 1e-10), level-2 err {level2:.2e} (tol 1e-6), \
             polygon-area oracle gap {oracle_gap:.2e}, {elapsed:.2?} (limit 2s)"
        ),
    )
}

fn signature_ode_identity() -> Outcome {
    let clock = Instant::now();
    let fam = VectorFieldFamily::signature_ode(3, 2).unwrap();
    let start = signature_start(2, 3);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let path = random_path(2, 5, seed);
        let y = solve_ode(&fam, &path, &start, 64).unwrap().terminal;
        let s = sig_pl(&path, 3).unwrap().group.to_flat();
        worst = worst.max(max_diff(&y, &s));
    }
    let elapsed = clock.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "100 paths, worst coefficient err {worst:.2e} (tol 1e-9), {elapsed:.2?} (limit 10s)"
        ),
    )
}

fn pure_area_terminal() -> Vec<f64> {
    let fam = VectorFieldFamily::signature_ode(2, 2).unwrap();
    let rough = pure_area(2, (0, 1), PI, 1).unwrap();
    solve_rde(&fam, &rough, &signature_start(2, 2), 64)
        .unwrap()
        .terminal
}

fn pure_area_rde() -> Outcome {
    let y = pure_area_terminal();
    let expected = [1.0, 0.0, 0.0, 0.0, PI, -PI, 0.0];
    let err = max_diff(&y, &expected);
    outcome(err <= 1e-12, format!("terminal err {err:.2e} (tol 1e-12)"))
}

fn accessibility_round_trip() -> Outcome {
    let fam = VectorFieldFamily::signature_ode(2, 2).unwrap();
    let rough = pure_area(2, (0, 1), PI, 1).unwrap();
    let start = signature_start(2, 2);
    let rep = verify_accessibility(&fam, &start, &rough, &VerifyOptions::default()).unwrap();
    let rde_terminal = pure_area_terminal();
    let ode_terminal = solve_ode(&fam, &rep.control.realize(), &start, 64)
        .unwrap()
        .terminal;
    let err = max_diff(&ode_terminal, &rde_terminal);
    let segments = rep.control.segments.len();
    outcome(
        rep.status == ReachStatus::Exact && segments <= 5 && err <= 1e-9,
        format!(
            "status {:?}, {segments} segments (max 5), ODE vs RDE err {err:.2e} (tol 1e-9)",
            rep.status
        ),
    )
}

fn orbit_ranks() -> Outcome {
    let opts = OrbitOptions::default();
    let demo = VectorFieldFamily::bracket_demo();
    let rot = VectorFieldFamily::rotation();
    let d_demo = distribution_rank(&demo, &[0.0, 0.0], &opts).unwrap().rank;
    let b_demo = bracket_span_rank(&demo, &[0.0, 0.0], 2, 1e-8).unwrap().rank;
    let r0 = distribution_rank(&rot, &[0.0, 0.0], &opts).unwrap().rank;
    let r1 = distribution_rank(&rot, &[1.0, 0.0], &opts).unwrap().rank;
    let b0 = bracket_span_rank(&rot, &[0.0, 0.0], 2, 1e-8).unwrap().rank;
    let b1 = bracket_span_rank(&rot, &[1.0, 0.0], 2, 1e-8).unwrap().rank;
    outcome(
        d_demo == 2 && b_demo == 2 && r0 == 0 && r1 == 1 && b0 == 0 && b1 == 1,
        format!(
            "bracket demo at origin: sampled {d_demo}, brackets {b_demo} (want 2, 2); \
             rotation at origin {r0}/{b0} (want 0), at (1,0) {r1}/{b1} (want 1)"
        ),
    )
}

fn trajectory_on_orbit() -> Outcome {
    let fam = VectorFieldFamily::bracket_demo();
    let rough = pure_area(2, (0, 1), 1.0, 1).unwrap();
    let sol = solve_rde(&fam, &rough, &[0.0, 0.0], 64).unwrap();
    let last = sol.states.len() - 1;
    let points: Vec<Vec<f64>> = (0..10).map(|k| sol.states[k * last / 9].clone()).collect();
    let profile = rank_profile(&fam, &points, &OrbitOptions::default()).unwrap();
    outcome(
        profile.constant && profile.ranks.iter().all(|&r| r == 2) && profile.ranks.len() == 10,
        format!("ranks {:?}", profile.ranks),
    )
}

fn shooting_reachability() -> Outcome {
    let fam = VectorFieldFamily::rotation();
    let opts = ShootingOptions {
        segments: 1,
        tol: 1e-6,
        ..Default::default()
    };
    let clock = Instant::now();
    let on = reach_shooting(&fam, &[1.0, 0.0], &[0.0, 1.0], &opts).unwrap();
    let elapsed = clock.elapsed();
    let off = reach_shooting(&fam, &[1.0, 0.0], &[2.0, 0.0], &opts).unwrap();
    outcome(
        on.status == ReachStatus::Converged
            && elapsed < Duration::from_secs(5)
            && off.status == ReachStatus::Failed
            && off.residual >= 0.9,
        format!(
            "(0,1): {:?} residual {:.2e} in {elapsed:.2?} (limit 5s); (2,0): {:?} residual {:.3} (want >= 0.9)",
            on.status, on.residual, off.status, off.residual
        ),
    )
}

fn property_suites() -> Outcome {
    const CASES: u64 = 100;
    let clock = Instant::now();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let mut chen = 0.0f64;
    let mut shuffle = 0.0f64;
    let mut exp_log = 0.0f64;
    for seed in 0..CASES {
        let n = 1 + (seed % 3) as usize;
        let x = random_path(n, 3, seed);
        let y = random_path(n, 4, seed + 1000);
        let t0 = x.end_time();
        let y = PiecewiseLinearPath::new(
            n,
            y.times().iter().map(|t| t + t0).collect(),
            y.points().to_vec(),
        )
        .unwrap();
        let joined = sig_pl(&x.concat(&y).unwrap(), 3).unwrap().group;
        let chained = chen_concat(&sig_pl(&x, 3).unwrap(), &sig_pl(&y, 3).unwrap())
            .unwrap()
            .group;
        chen = chen.max(joined.max_abs_diff(&chained).unwrap());

        shuffle = shuffle.max(shuffle_check(&joined, 1e-10).unwrap().worst_violation);

        let g = random_group(n, 4, seed);
        let back = g.log().unwrap().exp().unwrap();
        exp_log = exp_log.max(back.max_abs_diff(&g).unwrap());
    }
    check("chen", chen <= 1e-10);
    check("shuffle", shuffle <= 1e-10);
    check("exp/log", exp_log <= 1e-12);

    let settings = IntegratorSettings::default();
    let mut group_law = 0.0f64;
    let mut fd = 0.0f64;
    let mut antisym = 0.0f64;
    for seed in 0..CASES {
        let fam = random_polynomial_family(2, seed);
        let mut r = rng(seed);
        let y = uniform_vec(&mut r, 2, 0.5);
        let t = r.gen_range(-1.0..1.0);
        let req = |t: f64, start: Vec<f64>| FlowRequest {
            family: &fam,
            direction: Direction::Field(0),
            time: t,
            start,
            settings,
        };
        let fwd = flow(&req(t, y.clone())).unwrap();
        let back = flow(&req(-t, fwd)).unwrap();
        group_law = group_law.max(max_diff(&back, &y));
        if flow(&req(0.0, y.clone())).unwrap() != y {
            group_law = f64::INFINITY;
        }

        let g = DDiffeo::new(vec![(0, 0.4), (1, -0.3)]);
        let pf = pushforward(&g, &fam, &y, settings).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut p = y.clone();
            p[i] += h;
            let mut m = y.clone();
            m[i] -= h;
            let a = apply_ddiffeo(&g, &fam, &p, settings).unwrap();
            let b = apply_ddiffeo(&g, &fam, &m, settings).unwrap();
            for row in 0..2 {
                let ex = pf.jacobian[(row, i)];
                fd = fd.max(((a[row] - b[row]) / (2.0 * h) - ex).abs() / (1.0 + ex.abs()));
            }
        }

        let ab = fam.lie_bracket(0, 1).unwrap().eval(&y).unwrap();
        let ba = fam.lie_bracket(1, 0).unwrap().eval(&y).unwrap();
        antisym = antisym.max(
            ab.iter()
                .zip(&ba)
                .map(|(p, q)| (p + q).abs())
                .fold(0.0, f64::max),
        );
    }
    check("flow group law", group_law <= 1e-9);
    check("pushforward vs finite differences", fd < 1e-4);
    check("bracket antisymmetry", antisym <= 1e-10);

    let mut expm_err = 0.0f64;
    for seed in 0..CASES {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, 3, 0.3);
        let fam = linear_family(std::slice::from_ref(&a));
        let y = uniform_vec(&mut r, 3, 1.0);
        let pf = pushforward(&DDiffeo::new(vec![(0, 1.0)]), &fam, &y, settings).unwrap();
        expm_err = expm_err.max((pf.jacobian - expm(&a)).abs().max());
    }
    check("pushforward vs matrix exponential", expm_err <= 1e-8);

    let elapsed = clock.elapsed();
    check("runtime", elapsed < Duration::from_secs(60));
    outcome(
        failures.is_empty(),
        format!(
            "{CASES} cases each: chen {chen:.1e}, shuffle {shuffle:.1e}, exp/log {exp_log:.1e}, \
             group law {group_law:.1e}, pushforward/FD {fd:.1e}, pushforward/expm {expm_err:.1e}, \
             antisymmetry {antisym:.1e}; {elapsed:.2?} (limit 60s){}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failures.join(", "))
            }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oscillating-path signature", oscillating_signature),
        ("signature-ODE identity", signature_ode_identity),
        ("pure-area RDE", pure_area_rde),
        ("accessibility round trip", accessibility_round_trip),
        ("orbit rank", orbit_ranks),
        ("trajectory stays on orbit", trajectory_on_orbit),
        ("shooting reachability", shooting_reachability),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {} {:<28} {}  {}",
            k + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
