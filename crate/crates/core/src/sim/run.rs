//! The main simulation loop.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info, warn};

use super::config::{ConfigError, SimConfig};
use super::log::TrajectoryLog;
use super::metrics::{PhaseTiming, RunMetrics};
use crate::contact::{ground_force, GroundForce};
use crate::dynamics::{clamp_leg_lengths, foot_position, foot_velocity, rk4_step, FullState, Leg};
use crate::erg::{lyapunov_value, ErgGains, ErgState};
use crate::gait::{advance_phase, reference_trajectory, rotate_reference, stance_command, Pair, TrotController};
use crate::math::{vecn, Vec3};
use crate::tip::{constraint_values, extract_affine, ref_state, ConstraintParams, RefState6, TipGeometry, TipSolver};

/// Safe body-height band; leaving it sets the fall flag.
pub const FALL_BAND: (f64, f64) = (0.15, 0.9);

/// Tangential slack over `μ_s f_z` before a sample counts as outside the pyramid (N).
pub const PYRAMID_SLACK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    LegClamped,
    SingularLeg,
    DegenerateSupport,
    GaitFault,
    Fall,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: TrajectoryLog,
    pub metrics: RunMetrics,
    pub events: Vec<Event>,
    pub final_state: FullState<f64>,
}

/// File names written by [`RunOutput::save`].
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.txt";

impl RunOutput {
    /// Writes the trajectory CSV and the metrics sidecar into `dir`,
    /// creating it if needed. Returns both paths.
    pub fn save(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let log_path = dir.join(TRAJECTORY_FILE);
        let metrics_path = dir.join(METRICS_FILE);
        self.log.save(&log_path)?;
        std::fs::write(&metrics_path, self.metrics.to_text())?;
        Ok((log_path, metrics_path))
    }
}

/// Tracks contiguous episodes so repeated conditions are reported once.
#[derive(Default)]
struct Episodes {
    active: [bool; 4],
}

impl Episodes {
    fn enter(&mut self, i: usize, on: bool) -> bool {
        let started = on && !self.active[i];
        self.active[i] = on;
        started
    }
}

pub fn run(cfg: &SimConfig) -> Result<RunOutput, ConfigError> {
    cfg.validate()?;
    Ok(simulate(cfg))
}

fn simulate(cfg: &SimConfig) -> RunOutput {
    let params = cfg.robot;
    let cparams = cfg.constraint_params();
    let dt = cfg.dt;
    let erg_gains = ErgGains { dt, ..cfg.erg };
    let n = cfg.total_steps();
    let n_settle = cfg.settle_steps();
    let origin = Vec3::new(0.0, 0.0, cfg.init_height);
    let stand_ref = ref_state(origin, Vec3::zero());

    let mut state = FullState::standing(origin, cfg.init_leg_length);
    let mut ctl = TrotController::new(&state, &params, cfg.gait, cfg.pid);
    let mut erg: Option<ErgState<f64>> = None;
    let mut log = TrajectoryLog::with_capacity(super::log::standard_columns(), n);
    let mut events = Vec::new();
    let mut row = Vec::with_capacity(log.columns().len());

    let mut timing = PhaseTiming::default();
    let mut m = RunMetrics {
        steps: 0,
        sim_time: 0.0,
        completed: false,
        abort_reason: None,
        erg_enabled: cfg.erg_enabled,
        distance: 0.0,
        mean_speed: 0.0,
        final_position: origin.to_array(),
        fall: false,
        min_height: origin.z,
        max_height: origin.z,
        min_h_w: f64::INFINITY,
        governed_steps: 0,
        stance_samples: 0,
        slip_samples: 0,
        violation_samples: 0,
        violation_time: 0.0,
        branch_counts: [0; 5],
        degenerate_support: 0,
        singular_leg_events: 0,
        clamp_events: 0,
        gait_faults: 0,
        timing,
        steps_per_second: 0.0,
    };

    let mut clamp_ep = Episodes::default();
    let mut singular_ep = Episodes::default();
    let mut fault_ep = Episodes::default();
    let mut gait_start_x = origin.x;
    let mut h_r = [0.0; 6];
    let mut h_w = [0.0; 6];
    let mut x_w = stand_ref;
    let mut tip = (Vec3::zero(), Vec3::zero());

    let loop_start = Instant::now();
    for k in 0..n {
        let t = k as f64 * dt;
        let gait_active = k >= n_settle;
        let t_gait = k.saturating_sub(n_settle) as f64 * dt;
        // A zero speed target keeps all four feet down.
        let trotting = gait_active && cfg.gait.v_target != 0.0;
        let phase = trotting.then(|| advance_phase(t_gait, &cfg.gait));
        if k == n_settle {
            gait_start_x = state.body.p.x;
        }

        // Governor.
        let clock = Instant::now();
        let x_p = ref_state(state.body.p, state.body.v);
        let x_r = if gait_active { reference_trajectory(t_gait, &cfg.gait, origin) } else { stand_ref };
        let governed = gait_active && cfg.erg_enabled;
        if governed && erg.is_none() {
            erg = Some(ErgState::new(x_p));
        }
        let pair = phase.map_or(Pair::FlRr, |g| g.active_pair);
        let (front, rear) = pair.stance();
        let solver = TipGeometry::new(
            state.body.p,
            state.body.v,
            foot_position(&state, &params, front),
            foot_position(&state, &params, rear),
        )
        .and_then(|g| TipSolver::new(&g, &cfg.pd, params.mass, params.gravity));
        let mut branch_code = -1.0;
        match solver {
            Ok(solver) => {
                match erg.as_mut().filter(|_| governed) {
                    Some(e) => {
                        let cs = extract_affine(&solver, &cparams, &e.x_w);
                        let diag = e.step(&cs, &x_r, &erg_gains);
                        m.branch_counts[diag.branch.code() as usize] += 1;
                        branch_code = f64::from(diag.branch.code());
                        x_w = e.x_w;
                    }
                    None => x_w = x_r,
                }
                // Logged rows use each force's own signs and no margin.
                let raw = ConstraintParams { margin: 0.0, ..cparams };
                let rows = |x: &RefState6<f64>| {
                    let (u1, u2) = solver.forces(x);
                    constraint_values(&GroundForce::contact(u1), &GroundForce::contact(u2), &raw)
                };
                h_r = rows(&x_r);
                h_w = rows(&x_w);
                tip = solver.forces(&x_w);
                if governed {
                    m.min_h_w = m.min_h_w.min(vecn::min(&h_w));
                }
            }
            Err(e) => {
                m.degenerate_support += 1;
                events.push(Event { t, kind: EventKind::DegenerateSupport, detail: e.to_string() });
                if governed {
                    m.min_h_w = f64::NEG_INFINITY;
                } else {
                    x_w = x_r;
                }
            }
        }
        if governed {
            m.governed_steps += 1;
        }
        let lyap = lyapunov_value(&x_r, &x_w, &cfg.erg.p);
        timing.governor += clock.elapsed().as_secs_f64();

        // Stance and swing control in the body frame.
        let clock = Instant::now();
        let rot = state.body.rot;
        let a_body = stance_command(&rotate_reference(&x_w, &rot), &rotate_reference(&x_p, &rot), &cfg.pd);
        let out = ctl.update(&state, &params, a_body, phase.as_ref(), dt);
        for leg in Leg::ALL {
            let i = leg.index();
            if singular_ep.enter(i, out.singular.contains(&leg)) {
                m.singular_leg_events += 1;
                warn!("t={t:.4}: leg {} singular, holding previous command", leg.label());
                events.push(Event { t, kind: EventKind::SingularLeg, detail: leg.label().into() });
            }
        }
        timing.control += clock.elapsed().as_secs_f64();

        // Ground contact.
        let clock = Instant::now();
        let grf: [GroundForce<f64>; 4] = Leg::ALL.map(|leg| {
            ground_force(foot_position(&state, &params, leg), foot_velocity(&state, &params, leg), &cfg.ground)
        });
        if gait_active {
            let mut loaded = 0;
            for leg in Leg::ALL {
                let g = &grf[leg.index()];
                if !(ctl.is_stance(leg) && g.in_contact) {
                    continue;
                }
                loaded += 1;
                m.stance_samples += 1;
                let f = g.f;
                let limit = cfg.ground.mu_s * f.z + PYRAMID_SLACK;
                let exceed = f.x.abs() > limit || f.y.abs() > limit;
                let slip = foot_velocity(&state, &params, leg).horizontal().norm() > cfg.ground.v_s;
                m.violation_samples += usize::from(exceed);
                m.slip_samples += usize::from(slip);
            }
            if fault_ep.enter(0, loaded == 0) {
                m.gait_faults += 1;
                events.push(Event { t, kind: EventKind::GaitFault, detail: "both stance feet airborne".into() });
            }
        }
        let u_g = grf.map(|g| g.f);
        timing.contact += clock.elapsed().as_secs_f64();

        // Record the state at t with the inputs applied over [t, t + dt).
        let clock = Instant::now();
        row.clear();
        let b = &state.body;
        row.push(t);
        row.extend(b.p.to_array());
        row.extend(b.rot.matrix().to_flat());
        row.extend(b.v.to_array());
        row.extend(b.omega.to_array());
        for q in &state.legs.q {
            row.extend(q.to_array());
        }
        for qd in &state.legs.qd {
            row.extend(qd.to_array());
        }
        for g in &grf {
            row.extend(g.f.to_array());
        }
        for leg in Leg::ALL {
            row.push(if ctl.is_stance(leg) { 1.0 } else { 0.0 });
        }
        row.extend(tip.0.to_array());
        row.extend(tip.1.to_array());
        row.extend(h_r);
        row.extend(h_w);
        row.extend(x_r);
        row.extend(x_w);
        row.extend([branch_code, lyap, if governed { 1.0 } else { 0.0 }]);
        log.push_row(&row);
        timing.record += clock.elapsed().as_secs_f64();
        m.steps += 1;

        // Integrate.
        let clock = Instant::now();
        let next = rk4_step(&state, &out.u_l, &u_g, dt, &params);
        timing.integrate += clock.elapsed().as_secs_f64();
        match next {
            Ok(s) => state = s,
            Err(e) => {
                m.abort_reason = Some(format!("t={:.4}: {e}", t + dt));
                events.push(Event { t: t + dt, kind: EventKind::NonFinite, detail: e.to_string() });
                break;
            }
        }
        let clamped = clamp_leg_lengths(&mut state, &params);
        for leg in Leg::ALL {
            if clamp_ep.enter(leg.index(), clamped.contains(&leg)) {
                m.clamp_events += 1;
                info!("t={:.4}: leg {} length clamped", t + dt, leg.label());
                events.push(Event { t: t + dt, kind: EventKind::LegClamped, detail: leg.label().into() });
            }
        }
        let z = state.body.p.z;
        m.min_height = m.min_height.min(z);
        m.max_height = m.max_height.max(z);
        if !m.fall && !(FALL_BAND.0..=FALL_BAND.1).contains(&z) {
            m.fall = true;
            warn!("t={:.4}: body height {z:.3} m left the safe band", t + dt);
            events.push(Event { t: t + dt, kind: EventKind::Fall, detail: format!("z={z}") });
        }
    }
    let elapsed = loop_start.elapsed().as_secs_f64();

    m.completed = m.abort_reason.is_none();
    m.sim_time = m.steps as f64 * dt;
    m.final_position = state.body.p.to_array();
    m.distance = state.body.p.x - gait_start_x;
    let gait_time = m.steps.saturating_sub(n_settle) as f64 * dt;
    m.mean_speed = if gait_time > 0.0 { m.distance / gait_time } else { 0.0 };
    m.violation_time = m.violation_samples as f64 * dt;
    m.timing = timing;
    m.steps_per_second = m.steps as f64 / elapsed.max(1e-12);
    debug!("run finished: {} steps, {:.0} steps/s", m.steps, m.steps_per_second);

    RunOutput { log, metrics: m, events, final_state: state }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.set("gait.n_steps", "2").unwrap();
        cfg
    }

    #[test]
    fn one_row_per_step_and_finite() {
        let cfg = short();
        let out = run(&cfg).unwrap();
        assert!(out.metrics.completed);
        assert_eq!(out.log.len(), cfg.total_steps());
        assert!(out.log.rows().all(|r| r.iter().all(|x| x.is_finite())));
        let t = out.log.column("t").unwrap();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = SimConfig::default();
        cfg.dt = -1.0;
        assert!(run(&cfg).is_err());
    }
}
