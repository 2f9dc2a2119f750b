//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix3, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use monosil::calib::{estimate_homography, verify_grid_spacing, ChessboardGrid, Correspondence, Homography};
use monosil::control::{
    build_prediction, solve_mpc, solve_unconstrained, IncrementalModel, MpcConfig, PredictionMatrices, SteeringLimits,
};
use monosil::harness::{
    compare_controllers, run_sim, Comparison, ControllerKind, SimConfig, Termination, TrackPaths, TrackSource,
};
use monosil::imaging::{preprocess, render_frame, RenderConfig};
use monosil::lane::detect_lanes;
use monosil::track::{random_spec, Complexity, RefPath};
use monosil::vehicle::{dynamics_rhs, linearize, step, tire_forces, VehicleParams, VehicleState};
use monosil::Pose;

const SUITE: &str = include_str!("../../../configs/trial_suite.json");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn suite_config() -> SimConfig {
    SimConfig::from_json(SUITE).expect("suite config parses")
}

// ---------------------------------------------------------------- 1 & 2

fn criterion_1(cmp: &Comparison, secs: f64) -> Outcome {
    let (Some(pid), Some(mpc)) = (cmp.pid.lateral_msd, cmp.mpc.lateral_msd) else {
        return outcome(false, "an aggregate is missing (failed runs)".into());
    };
    let (pa, ma) = (cmp.pid.angular_msd.unwrap(), cmp.mpc.angular_msd.unwrap());
    let all_done = cmp.pid.completed == 5 && cmp.mpc.completed == 5;
    let in_band = |v: f64| (0.0005..=0.1).contains(&v);
    let pass = all_done && pid < mpc && in_band(pid) && in_band(mpc) && pa < 0.01 && ma < 0.01 && secs < 180.0;
    outcome(
        pass,
        format!(
            "lateral MSD PID {pid:.4e} < MPC {mpc:.4e} m^2 (band [5e-4, 0.1]); angular MSD PID {pa:.4e}, MPC {ma:.4e} rad^2 (< 0.01); suite {secs:.1} s"
        ),
    )
}

fn criterion_2(cmp: &Comparison, cfg: &SimConfig) -> Outcome {
    let peaks = |c: ControllerKind| -> Vec<f64> {
        cmp.runs
            .iter()
            .filter(|r| r.controller == c)
            .map(|r| r.metrics().map_or(f64::NAN, |m| m.peak_yaw_rate))
            .collect()
    };
    let (pid, mpc) = (peaks(ControllerKind::Pid), peaks(ControllerKind::Mpc));
    let wins = pid.iter().zip(&mpc).filter(|(p, m)| p >= m).count();
    // the rate limit bounds every steering change between MPC ticks
    let limit = cfg.vehicle.ddelta_max * (1.0 + 1e-8);
    let worst_step = cmp
        .runs
        .iter()
        .filter(|r| r.controller == ControllerKind::Mpc)
        .filter_map(|r| r.metrics())
        .map(|m| m.max_steer_step)
        .fold(0.0, f64::max);
    outcome(
        wins >= 4 && worst_step <= limit,
        format!(
            "PID peak |yaw rate| >= MPC in {wins}/5 trials (PID {pid:.3?}, MPC {mpc:.3?}); max MPC steering step {worst_step:.4} rad <= ddelta_max {:.4}",
            cfg.vehicle.ddelta_max
        ),
    )
}

// ---------------------------------------------------------------- 3

/// Lateral coordinate (vehicle frame) where `path` crosses `forward == fwd`,
/// searching ahead of the pose's projection.
fn truth_lateral(path: &RefPath, pose: &Pose, fwd: f64) -> Option<f64> {
    let (s, c) = pose.phi.sin_cos();
    let local = |p: &monosil::track::PathPoint| {
        let (dx, dy) = (p.x - pose.x, p.y - pose.y);
        (c * dx + s * dy, -s * dx + c * dy)
    };
    let start = path.project(Point2::new(pose.x, pose.y), None).index;
    let n = path.len() - 1;
    for k in 0..n / 4 {
        let (i, j) = ((start + k) % n, (start + k + 1) % n);
        let (f0, l0) = local(&path.points[i]);
        let (f1, l1) = local(&path.points[j]);
        if f1 < f0 {
            // the path turned back on itself within view
            return None;
        }
        if f0 <= fwd && fwd <= f1 && f1 > f0 {
            let t = (fwd - f0) / (f1 - f0);
            return Some(l0 + t * (l1 - l0));
        }
    }
    None
}

struct Perception {
    rms: f64,
    /// RMS of the best per-frame quadratic through the truth stations: the
    /// floor any quadratic lane model can reach on this track.
    floor: f64,
    stations: usize,
    failed: usize,
}

fn quadratic_residual_sq(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].0.powi(j as i32));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let sol = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
    (&a * sol - b).norm_squared()
}

fn perception_rms(noise_sigma: f64) -> Perception {
    let cfg = SimConfig::default();
    let track = TrackPaths::build(&random_spec(11, Complexity::Default)).unwrap();
    let render = RenderConfig {
        noise_sigma,
        ..cfg.render
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut sq, mut floor_sq, mut n, mut failed) = (0.0, 0.0, 0usize, 0usize);
    let stride = (track.center.len() - 1) / 50;
    for f in 0..50 {
        let p = track.center.points[f * stride];
        let lat: f64 = rng.random_range(-0.1..0.1);
        let head: f64 = rng.random_range(-0.05..0.05);
        let (sh, ch) = p.heading.sin_cos();
        let pose = Pose::new(p.x - sh * lat, p.y + ch * lat, p.heading + head);
        let img = render_frame(&track.left, &track.right, &pose, &cfg.camera, &render, &mut rng);
        let mask = preprocess(&img, &cfg.preprocess);
        let Ok(det) = detect_lanes(&mask, &cfg.detector, &cfg.camera, None) else {
            failed += 1;
            continue;
        };
        if !det.center.valid {
            failed += 1;
            continue;
        }
        let mut truths = Vec::new();
        for k in 0..=12 {
            let d = 0.5 + 0.25 * k as f64;
            // stations where the true centerline lies inside the image
            let Some(truth) = truth_lateral(&track.center, &pose, d) else {
                continue;
            };
            if truth.abs() > cfg.camera.half_width_m() - 0.5 {
                continue;
            }
            sq += (det.center.eval(d) - truth).powi(2);
            truths.push((d, truth));
            n += 1;
        }
        floor_sq += quadratic_residual_sq(&truths);
    }
    let nf = n.max(1) as f64;
    Perception {
        rms: (sq / nf).sqrt(),
        floor: (floor_sq / nf).sqrt(),
        stations: n,
        failed,
    }
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let clean = perception_rms(0.0);
    let noisy = perception_rms(RenderConfig::default().noise_sigma);
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        clean.rms < 0.02
            && noisy.rms < 0.04
            && clean.failed + noisy.failed == 0
            && clean.stations > 400
            && secs < 10.0,
        format!(
            "noise-free RMS {:.2} cm over {} stations, default-noise RMS {:.2} cm over {}; best-quadratic floor {:.2} cm; {} frames without a lane; {secs:.1} s",
            clean.rms * 100.0,
            clean.stations,
            noisy.rms * 100.0,
            noisy.stations,
            clean.floor * 100.0,
            clean.failed + noisy.failed
        ),
    )
}

// ---------------------------------------------------------------- 4

fn random_homography(rng: &mut ChaCha8Rng) -> Homography {
    loop {
        let m = Matrix3::new(
            rng.random_range(0.5..1.5),
            rng.random_range(-0.3..0.3),
            rng.random_range(-50.0..50.0),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.5..1.5),
            rng.random_range(-50.0..50.0),
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-3..1e-3),
            1.0,
        );
        if let Ok(h) = Homography::new(m) {
            return h;
        }
    }
}

fn brute_spacing(g: &ChessboardGrid) -> f64 {
    let at = |r: usize, c: usize| g.corners[r * g.cols + c];
    let dist = |a: Point2<f64>, b: Point2<f64>| ((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y)).sqrt();
    let mut h = Vec::new();
    let mut v = Vec::new();
    for r in 0..g.rows {
        for c in 0..g.cols - 1 {
            h.push(dist(at(r, c), at(r, c + 1)));
        }
    }
    for r in 0..g.rows - 1 {
        for c in 0..g.cols {
            v.push(dist(at(r, c), at(r + 1, c)));
        }
    }
    let mut worst = 0.0f64;
    for set in [&h, &v] {
        let mut sum = 0.0;
        for d in set.iter() {
            sum += d;
        }
        let m = sum / set.len() as f64;
        for d in set.iter() {
            worst = worst.max((d - m).abs() / m);
        }
    }
    worst
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h = random_homography(&mut rng);
        let pairs: Vec<Correspondence> = (0..8)
            .map(|_| {
                let s = Point2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
                Correspondence {
                    src: s,
                    dst: h.apply(s).unwrap(),
                }
            })
            .collect();
        let est = estimate_homography(&pairs).unwrap().normalized().to_row_major();
        let want = h.normalized().to_row_major();
        for (a, b) in est.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    let board = ChessboardGrid::default_board(Point2::new(100.0, 80.0), 40.0);
    let ident = verify_grid_spacing(&board.transformed(&Homography::identity()).unwrap()).unwrap();
    let mild = Homography::new(Matrix3::new(1.02, 0.03, 4.0, -0.01, 0.98, 2.0, 1e-4, -5e-5, 1.0)).unwrap();
    let skewed = board.transformed(&mild).unwrap();
    let got = verify_grid_spacing(&skewed).unwrap().max_rel_dev;
    let oracle = brute_spacing(&skewed);
    outcome(
        worst < 1e-8 && ident.max_rel_dev == 0.0 && got == oracle && (board.rows, board.cols) == (4, 5),
        format!(
            "max elementwise error {worst:.2e} over 100 maps; identity spacing deviation {:e}; projective grid {got:.6e} == oracle {oracle:.6e}",
            ident.max_rel_dev
        ),
    )
}

// ---------------------------------------------------------------- 5

fn state_vec(d: &monosil::vehicle::StateDerivative) -> [f64; 4] {
    [d.y_dot, d.v_y_dot, d.phi_dot, d.phi_ddot]
}

fn criterion_5() -> Outcome {
    let p = VehicleParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_rel = 0.0f64;
    for _ in 0..1000 {
        let op = VehicleState {
            x: rng.random_range(-10.0..10.0),
            y: rng.random_range(-10.0..10.0),
            phi: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            v_y: rng.random_range(-1.0..1.0),
            phi_dot: rng.random_range(-2.0..2.0),
        };
        let delta = rng.random_range(-p.delta_max..p.delta_max);
        let (a, b) = linearize(&op, delta, &p);
        let h = 1e-6;
        let mut fd = DMatrix::<f64>::zeros(4, 5);
        for j in 0..5 {
            let bump = |sgn: f64| {
                let mut s = op;
                let mut d = delta;
                match j {
                    0 => s.y += sgn * h,
                    1 => s.v_y += sgn * h,
                    2 => s.phi += sgn * h,
                    3 => s.phi_dot += sgn * h,
                    _ => d += sgn * h,
                }
                state_vec(&dynamics_rhs(&s, d, &p))
            };
            let (fp, fm) = (bump(1.0), bump(-1.0));
            for i in 0..4 {
                fd[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let mut analytic = DMatrix::<f64>::zeros(4, 5);
        analytic.view_mut((0, 0), (4, 4)).copy_from(&a);
        analytic.view_mut((0, 4), (4, 1)).copy_from(&b);
        // matrix-relative error: largest entry difference over largest entry
        let scale = analytic.amax().max(1e-12);
        worst_rel = worst_rel.max((&analytic - &fd).amax() / scale);
    }

    // convergence order by dt halving against a fine reference
    let s0 = VehicleState {
        v_y: 0.3,
        phi_dot: -0.8,
        phi: 0.4,
        ..VehicleState::default()
    };
    let steer = |t: f64| 0.2 * (3.0 * t).sin();
    // constant steering keeps the input zero-order hold exact across dt
    let integrate = |dt: f64| {
        let n = (1.0 / dt).round() as usize;
        let mut s = s0;
        for _ in 0..n {
            s = step(&s, 0.15, &p, dt).unwrap().state;
        }
        s
    };
    let reference = integrate(0.02 / 64.0);
    let err = |s: VehicleState| {
        [
            s.x - reference.x,
            s.y - reference.y,
            s.phi - reference.phi,
            s.v_y - reference.v_y,
            s.phi_dot - reference.phi_dot,
        ]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| err(integrate(dt))).collect();
    let order = errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);

    // equilibrium
    let rest = VehicleState::default();
    let t = tire_forces(&rest, 0.0, &p);
    let d = dynamics_rhs(&rest, 0.0, &p);
    let eq = [
        t.alpha_f,
        t.alpha_r,
        t.f_cf,
        t.f_cr,
        d.x_dot - p.v_x,
        d.y_dot,
        d.phi_dot,
        d.v_y_dot,
        d.phi_ddot,
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));

    // mirror symmetry over a steered manoeuvre
    let mut s = VehicleState {
        v_y: 0.1,
        phi: 0.2,
        phi_dot: 0.3,
        ..VehicleState::default()
    };
    let mut m = VehicleState {
        v_y: -0.1,
        phi: -0.2,
        phi_dot: -0.3,
        ..VehicleState::default()
    };
    let mut mirror = 0.0f64;
    for k in 0..500 {
        let u = steer(k as f64 * 0.01);
        s = step(&s, u, &p, 0.01).unwrap().state;
        m = step(&m, -u, &p, 0.01).unwrap().state;
        for v in [
            s.x - m.x,
            s.y + m.y,
            s.phi + m.phi,
            s.v_y + m.v_y,
            s.phi_dot + m.phi_dot,
        ] {
            mirror = mirror.max(v.abs());
        }
    }
    outcome(
        worst_rel < 1e-5 && order >= 3.8 && eq <= 1e-12 && mirror <= 1e-12,
        format!(
            "Jacobian relative error {worst_rel:.2e} over 1000 points; RK4 order {order:.2} (errors {}); equilibrium residual {eq:e}; mirror residual {mirror:.1e}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 6

fn random_model(rng: &mut ChaCha8Rng) -> IncrementalModel {
    let a = DMatrix::from_fn(4, 4, |r, c| {
        rng.random_range(-0.3..0.3) + if r == c { 0.7 } else { 0.0 }
    });
    let b = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
    IncrementalModel::from_discrete(&a, &b, &c)
}

/// Propagates the augmented system step by step.
fn simulate(models: &[IncrementalModel], chi: &DVector<f64>, du: &DVector<f64>) -> DVector<f64> {
    let p = models[0].n_outputs();
    let mut y = DVector::zeros(p * models.len());
    let mut x = chi.clone();
    for (i, m) in models.iter().enumerate() {
        let u = if i < du.len() { du[i] } else { 0.0 };
        x = &m.a_aug * &x + &m.b_aug * u;
        y.rows_mut(i * p, p).copy_from(&(&m.c_aug * &x));
    }
    y
}

fn ls_oracle(
    pm: &PredictionMatrices,
    chi: &DVector<f64>,
    y_ref: &DVector<f64>,
    q: &DVector<f64>,
    r: f64,
) -> DVector<f64> {
    let rows = pm.phi.nrows();
    let n_c = pm.n_c;
    let mut a = DMatrix::zeros(rows + n_c, n_c);
    let mut rhs = DVector::zeros(rows + n_c);
    let e0 = y_ref - &pm.f * chi;
    for i in 0..rows {
        let w = q[i].sqrt();
        for j in 0..n_c {
            a[(i, j)] = w * pm.phi[(i, j)];
        }
        rhs[i] = w * e0[i];
    }
    for j in 0..n_c {
        a[(rows + j, j)] = r.sqrt();
    }
    a.svd(true, true).solve(&rhs, 1e-14).unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut pred_err, mut ls_err) = (0.0f64, 0.0f64);
    let mut unequal = 0;
    for _ in 0..200 {
        let n_p = rng.random_range(1..=12);
        let n_c = rng.random_range(1..=n_p);
        unequal += (n_p != n_c) as usize;
        let models: Vec<IncrementalModel> = (0..n_p).map(|_| random_model(&mut rng)).collect();
        let pm = build_prediction(&models, n_c).unwrap();
        let chi = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let du = DVector::from_fn(n_c, |_, _| rng.random_range(-1.0..1.0));
        let stacked = &pm.f * &chi + &pm.phi * &du;
        pred_err = pred_err.max((stacked - simulate(&models, &chi, &du)).amax());

        let y_ref = DVector::from_fn(2 * n_p, |_, _| rng.random_range(-1.0..1.0));
        let q = DVector::from_fn(2 * n_p, |_, _| rng.random_range(0.1..5.0));
        let r = rng.random_range(0.1..3.0);
        let (got, _) = solve_unconstrained(&pm, &chi, &y_ref, &q, r).unwrap();
        ls_err = ls_err.max((got - ls_oracle(&pm, &chi, &y_ref, &q, r)).amax());
    }

    let pm = PredictionMatrices {
        f: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        phi: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        n_p: 1,
        n_c: 1,
        n_out: 2,
    };
    let cfg = MpcConfig {
        n_p: 1,
        n_c: 1,
        q_y: 1.0,
        q_phi: 0.0,
        r_du: 1.0,
        ..MpcConfig::default()
    };
    let limits = SteeringLimits {
        delta_max: 1.0,
        ddelta_max: 1.0,
    };
    let scalar = solve_mpc(
        &pm,
        &DVector::zeros(1),
        &DVector::from_vec(vec![1.0, 0.0]),
        &cfg,
        &limits,
        0.0,
    )
    .unwrap()
    .delta_u;
    outcome(
        pred_err < 1e-10 && ls_err < 1e-8 && scalar == 0.5 && unequal > 0,
        format!(
            "prediction vs simulation {pred_err:.2e} over 200 instances ({unequal} with N_p != N_c); LS oracle {ls_err:.2e}; scalar example du* = {scalar}"
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7(cmp: &Comparison, suite: &SimConfig) -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    for r in &cmp.runs {
        let m = r.metrics();
        let ok = r.completed() && m.is_some_and(|m| m.laps_completed >= 1 && m.lane_valid_fraction >= 0.99);
        pass &= ok;
        rows.push(format!(
            "s{}/{}:{}",
            r.seed,
            r.controller.name(),
            m.map_or("-".into(), |m| format!(
                "{}lap {:.3}",
                m.laps_completed, m.lane_valid_fraction
            ))
        ));
    }
    for c in [ControllerKind::Pid, ControllerKind::Mpc] {
        let cfg = SimConfig {
            controller: c,
            track: TrackSource::Random {
                seed: 0,
                preset: Complexity::Circle,
            },
            ..suite.clone()
        };
        let (_, out) = run_sim(&cfg).unwrap();
        let m = out.metrics;
        let ok = out.log.termination == Termination::Duration && m.laps_completed >= 1 && m.lane_valid_fraction >= 0.99;
        pass &= ok;
        rows.push(format!(
            "circle/{}:{}lap {:.3}",
            c.name(),
            m.laps_completed,
            m.lane_valid_fraction
        ));
    }
    outcome(
        pass,
        format!("laps and lane-valid fraction per run: {}", rows.join(" ")),
    )
}

// ---------------------------------------------------------------- 8

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_monosil");
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"duration": 6.0, "initial_lateral": 0.1, "track": {"random": {"seed": 4, "preset": "default"}}}"#,
    )
    .unwrap();
    let run = |args: &[&str]| {
        let st = Command::new(bin).args(args).output().unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    };
    let cfg = cfg_path.to_str().unwrap();
    let mut trees = Vec::new();
    for i in 0..2 {
        let r = tmp.path().join(format!("run{i}"));
        let c = tmp.path().join(format!("cmp{i}"));
        run(&[
            "run",
            "--config",
            cfg,
            "--controller",
            "mpc",
            "--out-dir",
            r.to_str().unwrap(),
        ]);
        run(&[
            "compare",
            "--seeds",
            "1..2",
            "--config",
            cfg,
            "--out-dir",
            c.to_str().unwrap(),
        ]);
        trees.push((read_tree(&r), read_tree(&c)));
    }
    let count = |t: &BTreeMap<String, Vec<u8>>| t.keys().filter(|k| k.ends_with(".csv") || k.ends_with(".svg")).count();
    let files = count(&trees[0].0) + count(&trees[0].1);
    let same = trees[0] == trees[1];
    outcome(
        same && count(&trees[0].0) == 4 && count(&trees[0].1) == 1 + 2 + 4 * 4,
        format!("{files} CSV/SVG files from run + compare, byte-identical across invocations: {same}"),
    )
}

fn main() {
    // skip when invoked only to list tests
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let suite = suite_config();
    let t0 = Instant::now();
    let seeds = [1, 2, 3, 4, 5];
    let cmp = compare_controllers(&seeds, &suite);
    let suite_secs = t0.elapsed().as_secs_f64();

    let results = [
        ("1 PID vs MPC deviation ordering", criterion_1(&cmp, suite_secs)),
        ("2 PID yaw spikes vs MPC regulation", criterion_2(&cmp, &suite)),
        ("3 perception accuracy", criterion_3()),
        ("4 homography suite", criterion_4()),
        ("5 dynamics verification", criterion_5()),
        ("6 MPC math verification", criterion_6()),
        ("7 closed-loop robustness", criterion_7(&cmp, &suite)),
        ("8 determinism", criterion_8()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "[{}] criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
