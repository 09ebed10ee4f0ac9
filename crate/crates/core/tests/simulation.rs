//! End-to-end behaviour of the simulation loop and parameter sweeps.

use ergsim::contact::ground_force;
use ergsim::dynamics::{clamp_leg_lengths, foot_position, foot_velocity, rk4_step, FullState, Leg};
use ergsim::gait::{advance_phase, reference_trajectory, rotate_reference, stance_command, TrotController};
use ergsim::math::Vec3;
use ergsim::sim::{run, sweep, SimConfig, TrajectoryLog};
use ergsim::tip::ref_state;

fn csv_bytes(log: &TrajectoryLog) -> Vec<u8> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    buf
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn zero_speed_target_stands_still() {
    let mut cfg = SimConfig::default();
    cfg.set("gait.v_target", "0").unwrap();
    let m = run(&cfg).unwrap().metrics;
    println!("mean_speed={} violations={} fall={}", m.mean_speed, m.violation_samples, m.fall);
    assert!(m.completed && !m.fall);
    assert!(m.mean_speed.abs() <= 0.02);
    assert_eq!(m.violation_samples, 0);
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg = SimConfig::default();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(csv_bytes(&a.log), csv_bytes(&b.log));
}

#[test]
fn every_step_logs_one_finite_row() {
    let cfg = SimConfig::default();
    let out = run(&cfg).unwrap();
    assert!(out.metrics.completed);
    let n = out.log.len();
    let expected = cfg.total_time() / cfg.dt;
    assert!((n as f64 - expected).abs() <= 1.0, "{n} rows for {expected} steps");
    assert_eq!(n, out.metrics.steps);
    let t = out.log.column("t").unwrap();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    for (i, row) in out.log.rows().enumerate() {
        assert!(row.iter().all(|x| x.is_finite()), "row {i} not finite");
    }
    assert!(out.metrics.steps_per_second > 0.0);
}

#[test]
fn fall_flag_matches_height_band() {
    let out = run(&SimConfig::default()).unwrap();
    let z = out.log.column("p_z").unwrap();
    let outside = z.iter().chain([&out.final_state.body.p.z]).any(|&h| !(0.15..=0.9).contains(&h));
    assert_eq!(out.metrics.fall, outside);
}

#[test]
fn saved_run_has_log_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::default();
    cfg.set("gait.n_steps", "2").unwrap();
    let out = run(&cfg).unwrap();
    let (log_path, metrics_path) = out.save(dir.path()).unwrap();
    let back = TrajectoryLog::read_csv(&std::fs::read_to_string(log_path).unwrap()).unwrap();
    assert_eq!(back, out.log);
    let sidecar = std::fs::read_to_string(metrics_path).unwrap();
    assert!(sidecar.lines().all(|l| l.contains(" = ")));
    assert!(sidecar.contains("steps_per_second = "));
}

/// The trot and PD stance loop assembled by hand, with no governor anywhere.
/// Stops where the integrator rejects a state, as the pipeline does.
fn plain_pd_trot(cfg: &SimConfig) -> Vec<[f64; 3]> {
    let params = cfg.robot;
    let dt = cfg.dt;
    let origin = Vec3::new(0.0, 0.0, cfg.init_height);
    let settle = cfg.settle_steps();
    let mut state = FullState::standing(origin, cfg.init_leg_length);
    let mut ctl = TrotController::new(&state, &params, cfg.gait, cfg.pid);
    let mut path = Vec::new();
    for k in 0..cfg.total_steps() {
        path.push(state.body.p.to_array());
        let walking = k >= settle;
        let t_gait = k.saturating_sub(settle) as f64 * dt;
        let phase = (walking && cfg.gait.v_target != 0.0).then(|| advance_phase(t_gait, &cfg.gait));
        let x_p = ref_state(state.body.p, state.body.v);
        let x_r = if walking { reference_trajectory(t_gait, &cfg.gait, origin) } else { ref_state(origin, Vec3::zero()) };
        let rot = state.body.rot;
        let a = stance_command(&rotate_reference(&x_r, &rot), &rotate_reference(&x_p, &rot), &cfg.pd);
        let out = ctl.update(&state, &params, a, phase.as_ref(), dt);
        let u_g = Leg::ALL
            .map(|leg| ground_force(foot_position(&state, &params, leg), foot_velocity(&state, &params, leg), &cfg.ground).f);
        match rk4_step(&state, &out.u_l, &u_g, dt, &params) {
            Ok(next) => state = next,
            Err(_) => break,
        }
        clamp_leg_lengths(&mut state, &params);
    }
    path
}

#[test]
fn disabled_governor_reduces_to_plain_pd_trot() {
    let mut cfg = SimConfig::default();
    cfg.set("ground.mu_s", "1.0").unwrap();
    cfg.set("erg.enabled", "false").unwrap();
    let out = run(&cfg).unwrap();
    let want = plain_pd_trot(&cfg);
    let xs = out.log.column("p_x").unwrap();
    let ys = out.log.column("p_y").unwrap();
    let zs = out.log.column("p_z").unwrap();
    assert_eq!(xs.len(), want.len());
    let worst = want
        .iter()
        .enumerate()
        .map(|(i, w)| (xs[i] - w[0]).abs().max((ys[i] - w[1]).abs()).max((zs[i] - w[2]).abs()))
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "trajectories differ by {worst} m");
}

#[test]
fn sweep_of_friction_keeps_robot_up_and_violations_non_increasing() {
    let table = sweep(&SimConfig::default(), "ground.mu_s", &strings(&["0.2", "0.4", "0.8"])).unwrap();
    assert_eq!(table.failures().count(), 0);
    let rows: Vec<_> = table.metrics().collect();
    for (v, m) in &rows {
        println!("mu_s={v}: completed={} fall={} violations={}", m.completed, m.fall, m.violation_samples);
    }
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|(_, m)| m.completed && !m.fall));
    assert!(rows.windows(2).all(|w| w[1].1.violation_samples <= w[0].1.violation_samples));
}

#[test]
fn empty_sweep_gives_empty_table() {
    let table = sweep(&SimConfig::default(), "ground.mu_s", &[]).unwrap();
    assert_eq!(table.entries.len(), 0);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
}

#[test]
fn halving_the_step_moves_final_position_little() {
    let table = sweep(&SimConfig::default(), "sim.dt", &strings(&["1e-3", "5e-4"])).unwrap();
    let rows: Vec<_> = table.metrics().collect();
    assert_eq!(rows.len(), 2);
    let (a, b) = (rows[0].1.final_position, rows[1].1.final_position);
    let gap = (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
    println!("final positions {a:?} vs {b:?}, gap {gap}");
    assert!(gap <= 1e-2, "final positions differ by {gap} m");
}

#[test]
fn invalid_sweep_value_is_reported_and_others_run() {
    let table = sweep(&SimConfig::default(), "gait.period", &strings(&["0.25", "-1", "oops"])).unwrap();
    assert_eq!(table.metrics().count(), 1);
    assert_eq!(table.failures().count(), 2);
}
