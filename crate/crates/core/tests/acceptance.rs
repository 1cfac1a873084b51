//! Acceptance criteria. Each test prints one PASS/FAIL line with the measured
//! quantities, then asserts.

use std::f64::consts::PI;
use std::fs;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walker_guidance::geometry::{Point, Pose};
use walker_guidance::guidance::{
    desired_omega, lyapunov_value, GainSchedule, GuidanceGains, QuantizedGuidance, TrackingError,
};
use walker_guidance::kinematics::{ackermann_split, step_unicycle, SteeredGeometry};
use walker_guidance::metrics::compute_metrics;
use walker_guidance::paths::{make_study_path, Path, StudyShape, C_RADIUS, S_RADIUS};
use walker_guidance::report::write_report;
use walker_guidance::scenario::{run_scenario, Scenario};
use walker_guidance::sim::{
    run_trial, GuidanceCue, GuidanceMode, SimConfig, TraceSample, TrialTrace, UserModel,
};
use walker_guidance::sound::{
    binaural_quantize, classify_lr, compute_sound_point, head_compensate, ConeSet, SoundPointCase,
};

fn verdict(id: &str, pass: bool, elapsed: Duration, budget_s: f64, detail: &str) -> bool {
    let in_time = elapsed.as_secs_f64() < budget_s;
    let ok = pass && in_time;
    println!(
        "{id} {}: {detail} [{:.3} s, budget {budget_s} s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

/// Piece lists of the study paths, kept apart from the library builder.
fn pieces(shape: StudyShape) -> Vec<(f64, f64)> {
    match shape {
        StudyShape::I => vec![(10.0, 0.0)],
        StudyShape::C => vec![(6.37 * PI / 2.0, 1.0 / 6.37)],
        StudyShape::S => {
            let k = 1.0 / 4.78;
            vec![
                (4.78 * PI / 6.0, k),
                (4.78 * PI / 3.0, -k),
                (4.78 * PI / 6.0, k),
            ]
        }
    }
}

/// Point and tangent at abscissa `s` by direct arc formulas from the origin.
fn reference_point(pieces: &[(f64, f64)], s: f64) -> (f64, f64, f64) {
    let (mut x, mut y, mut h) = (0.0f64, 0.0f64, 0.0f64);
    let mut rest = s;
    for (i, &(len, k)) in pieces.iter().enumerate() {
        let u = if i + 1 == pieces.len() {
            rest
        } else {
            rest.min(len)
        };
        let (nx, ny) = if k == 0.0 {
            (x + u * h.cos(), y + u * h.sin())
        } else {
            (
                x + ((h + k * u).sin() - h.sin()) / k,
                y - ((h + k * u).cos() - h.cos()) / k,
            )
        };
        if i + 1 == pieces.len() || rest <= len {
            return (nx, ny, h + k * u);
        }
        x = nx;
        y = ny;
        h += k * len;
        rest -= len;
    }
    unreachable!()
}

#[test]
fn ac1_path_geometry() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for shape in StudyShape::ALL {
        for mirrored in [false, true] {
            let path = make_study_path(shape, mirrored, Pose::origin());
            let len = path.total_length();
            pass &= (len - 10.0).abs() <= 0.02;
            if !mirrored {
                detail.push(format!("{shape}={len:.4} m"));
            }
            let expected_radius = match shape {
                StudyShape::I => None,
                StudyShape::C => Some(6.37),
                StudyShape::S => Some(4.78),
            };
            for k in 0..=100 {
                let s = len * k as f64 / 100.0;
                let c = path.point_at(s).unwrap().curvature;
                match expected_radius {
                    None => pass &= c == 0.0,
                    Some(r) => pass &= (1.0 / c.abs()) == r,
                }
            }
        }
    }
    pass &= C_RADIUS == 6.37 && S_RADIUS == 4.78;
    detail.push("radii 6.37/4.78 recovered exactly from curvature".into());
    assert!(verdict("AC1", pass, t0.elapsed(), 1.0, &detail.join(", ")));
}

#[test]
fn ac2_projection_oracle() {
    const DENSE: usize = 100_000;
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC2);
    let mut worst_y = 0.0f64;
    let mut worst_s = 0.0f64;
    for shape in StudyShape::ALL {
        let pieces = pieces(shape);
        let path = make_study_path(shape, false, Pose::origin());
        let total: f64 = pieces.iter().map(|p| p.0).sum();
        let dense: Vec<(f64, f64)> = (0..=DENSE)
            .map(|k| {
                let (x, y, _) = reference_point(&pieces, total * k as f64 / DENSE as f64);
                (x, y)
            })
            .collect();
        for _ in 0..1000 {
            let s0 = rng.gen_range(-1.0..total + 1.0);
            let (x0, y0, h0) = reference_point(&pieces, s0.clamp(0.0, total));
            let off = rng.gen_range(-1.5..1.5);
            let q = (
                x0 - off * h0.sin() + (s0 - s0.clamp(0.0, total)) * h0.cos(),
                y0 + off * h0.cos() + (s0 - s0.clamp(0.0, total)) * h0.sin(),
            );
            let pose = Pose::new(q.0, q.1, rng.gen_range(-PI..PI));

            // brute force over the dense samples, then golden-section refinement
            let d2 = |p: (f64, f64)| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
            let (best, _) =
                dense
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |(bi, bd), (i, p)| {
                        let d = d2(*p);
                        if d < bd {
                            (i, d)
                        } else {
                            (bi, bd)
                        }
                    });
            let step = total / DENSE as f64;
            let (mut a, mut b) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
            a = a.max(0.0);
            b = b.min(total);
            let f = |s: f64| {
                let (x, y, _) = reference_point(&pieces, s);
                d2((x, y))
            };
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..80 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if f(c) <= f(d) {
                    b = d
                } else {
                    a = c
                }
            }
            let s_ref = 0.5 * (a + b);
            let (fx, fy, fh) = reference_point(&pieces, s_ref);
            let y_ref =
                (-(fh.sin()) * (q.0 - fx) + fh.cos() * (q.1 - fy)).signum() * f(s_ref).sqrt();

            let fs = path.project(&pose);
            worst_y = worst_y.max((fs.y_d - y_ref).abs());
            worst_s = worst_s.max((fs.s_star - s_ref).abs());
        }
    }
    let pass = worst_y <= 1e-3 && worst_s <= 1e-3;
    let detail = format!(
        "3000 poses, worst |dy_d| = {worst_y:.2e} m, worst |ds*| = {worst_s:.2e} m (tol 1e-3)"
    );
    assert!(verdict("AC2", pass, t0.elapsed(), 10.0, &detail));
}

/// Closed-loop heading and lateral error on a straight path under `omega_d`.
fn error_rates(y: f64, th: f64, v: f64, gains: &GuidanceGains) -> (f64, f64) {
    let w = desired_omega(&TrackingError::new(y, th), v, gains).unwrap();
    (v * th.sin(), w)
}

fn rk4(y: f64, th: f64, v: f64, gains: &GuidanceGains, h: f64) -> (f64, f64) {
    let k1 = error_rates(y, th, v, gains);
    let k2 = error_rates(y + 0.5 * h * k1.0, th + 0.5 * h * k1.1, v, gains);
    let k3 = error_rates(y + 0.5 * h * k2.0, th + 0.5 * h * k2.1, v, gains);
    let k4 = error_rates(y + h * k3.0, th + h * k3.1, v, gains);
    (
        y + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        th + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

const START_GRID: [(f64, f64); 16] = {
    let mut g = [(0.0, 0.0); 16];
    let ys = [-1.0, -0.5, 0.5, 1.0];
    let ths = [-1.0, -0.3, 0.3, 1.0];
    let mut i = 0;
    while i < 16 {
        g[i] = (ys[i / 4], ths[i % 4]);
        i += 1;
    }
    g
};

#[test]
fn ac3_lyapunov_decrease() {
    let t0 = Instant::now();
    let h = 0.01;
    let v = 0.42;
    let schedule = GainSchedule::default();
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut steps = 0usize;
    for gains in [schedule.inside(), schedule.outside()] {
        for &(y0, th0) in &START_GRID {
            let (mut y, mut th) = (y0, th0);
            let mut v1 = lyapunov_value(&TrackingError::new(y, th), &gains);
            for _ in 0..(60.0 / h) as usize {
                let (ny, nth) = rk4(y, th, v, &gains, h);
                let nv1 = lyapunov_value(&TrackingError::new(ny, nth), &gains);
                let fd = (nv1 - v1) / h;
                // trapezoid of the predicted rate over the step
                let predicted = -0.5 * gains.q_theta * gains.k_theta * (th * th + nth * nth);
                worst = worst.max((fd - predicted).abs());
                monotone &= nv1 <= v1 + 1e-15;
                (y, th, v1) = (ny, nth, nv1);
                steps += 1;
            }
        }
    }
    let pass = worst <= 1e-4 && monotone;
    let detail = format!(
        "{steps} steps, worst |dV1/dt + q k_theta theta^2| = {worst:.2e} (tol 1e-4), V1 non-increasing: {monotone}"
    );
    assert!(verdict("AC3", pass, t0.elapsed(), 5.0, &detail));
}

#[test]
fn ac4_convergence() {
    let t0 = Instant::now();
    let dt = 0.01;
    let v = 0.42;
    let gains = GainSchedule::default().outside();
    let line = Path::chain(Pose::origin(), &[(100.0, 0.0)]).unwrap();
    let mut slowest = 0.0f64;
    let mut all = true;
    for &(y0, th0) in &START_GRID {
        let mut pose = Pose::new(5.0, y0, th0);
        let mut reached = None;
        for k in 0..=(60.0 / dt) as usize {
            let fs = line.project(&pose);
            if fs.y_d.abs() < 0.01 && fs.theta_d.abs() < 0.01 {
                reached = Some(k as f64 * dt);
                break;
            }
            let w = desired_omega(&TrackingError::from(&fs), v, &gains).unwrap();
            pose = step_unicycle(&pose, v, w, dt);
        }
        match reached {
            Some(t) => slowest = slowest.max(t),
            None => all = false,
        }
    }
    let detail = format!(
        "16 starts, k_y={} k_theta={} q_theta={}, slowest entry into |y_d|<1 cm and |theta_d|<0.01 rad at {slowest:.2} s (limit 60 s), all reached: {all}",
        gains.k_y, gains.k_theta, gains.q_theta
    );
    assert!(verdict("AC4", all, t0.elapsed(), 10.0, &detail));
}

#[test]
fn ac5_steering_tracking() {
    let t0 = Instant::now();
    let config = SimConfig::default();
    let user = UserModel::ideal(0.42);
    let mut errors = Vec::new();
    for shape in StudyShape::ALL {
        let path = make_study_path(shape, false, Pose::origin());
        // 0.3 m to the left of the start, aligned with the path
        let start = Pose::new(0.0, 0.3, 0.0);
        let trace = run_trial(GuidanceMode::Mechanical, &path, start, &user, &config).unwrap();
        let tail: Vec<f64> = trace
            .samples
            .iter()
            .filter(|s| s.s_star >= path.total_length() - 2.0)
            .map(|s| s.y_d.abs())
            .collect();
        let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
        errors.push((shape, mean, trace.complete && !tail.is_empty()));
    }
    let tracking = errors.iter().all(|&(_, e, ok)| ok && e < 0.05);

    let geometry = SteeredGeometry::default();
    let (l, w) = (geometry.wheelbase, geometry.track_width);
    let mut worst_center = 0.0f64;
    for k in 1..=200 {
        let phi = 1.2 * k as f64 / 200.0;
        for phi in [phi, -phi] {
            let (pl, pr) = ackermann_split(phi, &geometry);
            // wheel axes meet the rear axle line at y = y_wheel + L cot(phi_wheel)
            let center = l / phi.tan();
            let from_left = w / 2.0 + l / pl.tan();
            let from_right = -w / 2.0 + l / pr.tan();
            worst_center = worst_center
                .max((from_left - center).abs())
                .max((from_right - center).abs());
        }
    }
    let ackermann = worst_center < 1e-9;

    let listing: Vec<String> = errors
        .iter()
        .map(|(s, e, _)| format!("{s}={:.2} cm", 100.0 * e))
        .collect();
    let detail = format!(
        "final-2 m mean error {} (limit 5 cm): {}; Ackermann turn-center mismatch {worst_center:.1e} m (limit 1e-9): {}",
        listing.join(" "),
        if tracking { "ok" } else { "exceeded" },
        if ackermann { "ok" } else { "exceeded" }
    );
    assert!(verdict(
        "AC5",
        tracking && ackermann,
        t0.elapsed(),
        10.0,
        &detail
    ));
}

#[test]
fn ac6_mode_ordering() {
    let t0 = Instant::now();
    let scenario = Scenario::default();
    let records = run_scenario(&scenario).unwrap();
    let mean_error = |mode: GuidanceMode| {
        let errs: Vec<f64> = records
            .iter()
            .filter(|r| r.plan.mode == mode)
            .map(|r| r.metrics.error)
            .collect();
        errs.iter().sum::<f64>() / errs.len() as f64
    };
    let means: Vec<(GuidanceMode, f64)> = GuidanceMode::ALL
        .iter()
        .map(|&m| (m, mean_error(m)))
        .collect();
    let mech = mean_error(GuidanceMode::Mechanical);
    let pass = records.len() == 120
        && means
            .iter()
            .filter(|(m, _)| *m != GuidanceMode::Mechanical)
            .all(|&(_, e)| mech < e);
    let listing: Vec<String> = means
        .iter()
        .map(|(m, e)| format!("{m}={:.2} cm", 100.0 * e))
        .collect();
    let detail = format!(
        "{} trials, mean error {}; mechanical strictly smallest",
        records.len(),
        listing.join(" ")
    );
    assert!(verdict("AC6", pass, t0.elapsed(), 60.0, &detail));
}

#[test]
fn ac7_symmetry_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC7);
    let gate = QuantizedGuidance::default();
    let gains = GainSchedule::default();
    let cones = ConeSet::binaural();
    let mut failures = 0usize;
    for _ in 0..10_000 {
        let err = TrackingError::new(rng.gen_range(-2.0..2.0), rng.gen_range(-PI..PI));
        let v = rng.gen_range(0.05..1.5);
        for g in [gains.inside(), gains.outside()] {
            let w = desired_omega(&err, v, &g).unwrap();
            let wm = desired_omega(&err.mirrored(), v, &g).unwrap();
            failures += ((w + wm).abs() > 1e-12) as usize;
        }
        let d = gate.evaluate(&err, v).unwrap();
        let dm = gate.evaluate(&err.mirrored(), v).unwrap();
        failures += (dm.symbol != d.symbol.mirrored()) as usize;

        let range = rng.gen_range(0.01..5.0);
        let bearing: f64 = rng.gen_range(-PI..PI);
        let s_cw = Point::new(range * bearing.cos(), range * bearing.sin());
        let s_mirror = Point::new(s_cw.x, -s_cw.y);
        failures +=
            (classify_lr(&s_mirror).unwrap() != classify_lr(&s_cw).unwrap().mirrored()) as usize;

        let q = binaural_quantize(&s_cw, &cones).unwrap();
        let qm = binaural_quantize(&s_mirror, &cones).unwrap();
        failures += ((qm - Point::new(q.x, -q.y)).norm() > 1e-12) as usize;
        failures += ((q.norm() - range).abs() > 1e-12 * range.max(1.0)) as usize;

        let p = head_compensate(&q, rng.gen_range(-PI..PI));
        failures += ((p.norm() - q.norm()).abs() > 1e-12 * range.max(1.0)) as usize;
    }
    let detail = format!("10^4 random states, {failures} symmetry or range violations");
    assert!(verdict("AC7", failures == 0, t0.elapsed(), 5.0, &detail));
}

#[test]
fn ac8_sound_point_cases() {
    let t0 = Instant::now();
    let ds = 1.2;
    let mut pass = true;
    let mut detail = Vec::new();

    // directed cases on the straight path
    let i = make_study_path(StudyShape::I, false, Pose::origin());
    let at = |path: &Path, y: f64| {
        let pose = Pose::new(4.0, y, 0.0);
        compute_sound_point(&pose, &path.project(&pose), path, ds)
    };
    let two = at(&i, 0.5);
    let one = at(&i, ds);
    let none = at(&i, 2.0);
    pass &= two.case == SoundPointCase::TwoSolutions
        && (two.p - Point::new(4.0 + (ds * ds - 0.25f64).sqrt(), 0.0)).norm() < 1e-12;
    pass &= one.case == SoundPointCase::Tangent && (one.p - Point::new(4.0, 0.0)).norm() < 1e-12;
    pass &= none.case == SoundPointCase::NoSolution
        && (none.p - Point::new(4.0, 2.0 - ds)).norm() < 1e-12
        && (none.s - Point::new(4.0, 0.0)).norm() < 1e-12;
    detail.push(format!(
        "cases two/one/none -> {:?}/{:?}/{:?}",
        two.case, one.case, none.case
    ));

    // continuity across |y_d| = ds, straight and curved
    let c = make_study_path(StudyShape::C, false, Pose::origin());
    let mut worst = 0.0f64;
    for eps in [1e-13, 5e-14] {
        for side in [1.0, -1.0] {
            let inner = at(&i, side * (ds - eps));
            let outer = at(&i, side * (ds + eps));
            let tangent = at(&i, side * ds);
            pass &= inner.case == SoundPointCase::TwoSolutions
                && outer.case == SoundPointCase::NoSolution;
            worst = worst
                .max((inner.s - tangent.s).norm())
                .max((outer.s - tangent.s).norm());
        }
        // radial offsets from the C arc at s = 5
        let foot = c.point_at(5.0).unwrap();
        let normal = Point::new(-foot.theta_c.sin(), foot.theta_c.cos());
        for side in [1.0, -1.0] {
            let sp = |y: f64| {
                let q = foot.point + normal * y;
                let pose = Pose::new(q.x, q.y, foot.theta_c);
                compute_sound_point(&pose, &c.project(&pose), &c, ds)
            };
            let (inner, outer, tangent) =
                (sp(side * (ds - eps)), sp(side * (ds + eps)), sp(side * ds));
            pass &= inner.case == SoundPointCase::TwoSolutions
                && outer.case == SoundPointCase::NoSolution;
            worst = worst
                .max((inner.s - tangent.s).norm())
                .max((outer.s - tangent.s).norm());
        }
    }
    pass &= worst < 1e-6;
    detail.push(format!(
        "jump of S across |y_d| = ds {worst:.2e} m (tol 1e-6)"
    ));
    assert!(verdict("AC8", pass, t0.elapsed(), 1.0, &detail.join(", ")));
}

fn trace_from(poses: impl IntoIterator<Item = (f64, Pose)>) -> TrialTrace {
    TrialTrace {
        mode: GuidanceMode::Haptic,
        path_id: "I".into(),
        seed: 0,
        complete: true,
        samples: poses
            .into_iter()
            .map(|(t, pose)| TraceSample {
                t,
                pose,
                s_star: 0.0,
                y_d: 0.0,
                theta_d: 0.0,
                cue: GuidanceCue::None,
                wheels: None,
            })
            .collect(),
    }
}

#[test]
fn ac9_metrics() {
    let t0 = Instant::now();
    let i = make_study_path(StudyShape::I, false, Pose::origin());
    let perfect = trace_from((0..=2000).map(|k| {
        let t = k as f64 * 0.01;
        (t, Pose::new(0.5 * t, 0.0, 0.0))
    }));
    let m0 = compute_metrics(&perfect, &i).unwrap();

    // smooth weave along the S path; 10^4-point midpoint average of the same law
    let s_path = make_study_path(StudyShape::S, false, Pose::origin());
    let total = s_path.total_length();
    let offset = |s: f64| 0.12 + 0.08 * (1.7 * s).sin();
    let n = 5000;
    let weave = trace_from((0..=n).map(|k| {
        let s = total * k as f64 / n as f64;
        let p = s_path.point_at_clamped(s);
        let q = p.point + Point::new(-p.theta_c.sin(), p.theta_c.cos()) * offset(s);
        (k as f64 * 0.005, Pose::new(q.x, q.y, p.theta_c))
    }));
    let m1 = compute_metrics(&weave, &s_path).unwrap();
    let dense = (0..10_000)
        .map(|k| offset((k as f64 + 0.5) * total / 1e4).abs())
        .sum::<f64>()
        / 1e4;
    let rel = (m1.error - dense).abs() / dense;

    let pass = m0.error == 0.0
        && rel <= 0.02
        && m0.speed == m0.length / m0.time
        && m1.speed == m1.length / m1.time;
    let detail = format!(
        "perfect trace error {}, 100-sample {:.5} m vs dense {:.5} m ({:.2}% off, limit 2%), speed = length/time exactly",
        m0.error, m1.error, dense, 100.0 * rel
    );
    assert!(verdict("AC9", pass, t0.elapsed(), 1.0, &detail));
}

#[test]
fn ac10_determinism() {
    let t0 = Instant::now();
    let scenario = Scenario::default();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let records = run_scenario(&scenario).unwrap();
        write_report(dir.path(), &records).unwrap();
    }
    let mut compared = 0;
    let mut identical = true;
    let mut names: Vec<_> = fs::read_dir(dirs[0].path().join("metrics"))
        .unwrap()
        .map(|e| format!("metrics/{}", e.unwrap().file_name().to_string_lossy()))
        .collect();
    names.sort();
    names.extend(["cells.csv".to_string(), "table.csv".to_string()]);
    for name in &names {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        identical &= !a.is_empty() && a == b;
        compared += 1;
    }
    let pass = identical && compared == 14;
    let detail = format!("{compared} metrics CSVs compared byte for byte across two full runs, identical: {identical}");
    assert!(verdict("AC10", pass, t0.elapsed(), 120.0, &detail));
}
