//! Trot gait: diagonal stance pairs switched on a fixed period, quartic
//! Bézier swing arcs, and foot-space PID tracking mapped to joint
//! accelerations.
//!
//! Stance feet are driven kinematically: a commanded body acceleration `a`
//! becomes a relative foot acceleration `−a` in the body frame, integrated
//! into a desired foot trajectory that the leg PID follows.

use thiserror::Error;

use crate::dynamics::{foot_in_body, leg_jacobian, leg_jdot_qdot, FullState, JointInput, Leg, RobotParams};
use crate::math::{Rot3, Vec3};
use crate::tip::{ref_position, ref_state, ref_velocity, PdGains, RefState6};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GaitError {
    #[error("leg {0:?} is at a kinematic singularity")]
    SingularLeg(Leg),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitConfig<T> {
    /// Time between stance-pair switches (s).
    pub period: T,
    pub n_steps: usize,
    /// Apex height of the swing arc above its chord (m).
    pub swing_height: T,
    /// Touchdown point ahead of the hip (m).
    pub step_ahead: T,
    /// Forward speed of the body reference (m/s).
    pub v_target: T,
    /// Touchdown target below ground level, ensuring contact (m).
    pub touchdown_depth: T,
}

impl<T: Real> Default for GaitConfig<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            period: l(0.25),
            n_steps: 20,
            swing_height: l(0.2),
            step_ahead: l(0.08),
            v_target: l(0.2),
            touchdown_depth: l(0.002),
        }
    }
}

impl<T: Real> GaitConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.period > T::zero()) {
            return Err(format!("gait period must be positive, got {}", self.period));
        }
        if !(self.swing_height > T::zero()) {
            return Err(format!("swing height must be positive, got {}", self.swing_height));
        }
        if self.n_steps == 0 {
            return Err("n_steps must be at least 1".into());
        }
        if !self.step_ahead.is_finite() || !self.v_target.is_finite() || !(self.touchdown_depth >= T::zero()) {
            return Err("step_ahead, v_target and touchdown_depth must be finite".into());
        }
        Ok(())
    }

    pub fn duration(&self) -> T {
        self.period * T::from_usize(self.n_steps).unwrap_or_else(T::zero)
    }
}

/// Diagonal stance pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    /// Front-left with rear-right.
    FlRr,
    /// Front-right with rear-left.
    FrRl,
}

impl Pair {
    /// `(front, rear)` stance feet.
    pub fn stance(self) -> (Leg, Leg) {
        match self {
            Pair::FlRr => (Leg::FrontLeft, Leg::RearRight),
            Pair::FrRl => (Leg::FrontRight, Leg::RearLeft),
        }
    }

    pub fn swing(self) -> (Leg, Leg) {
        self.other().stance()
    }

    pub fn other(self) -> Pair {
        match self {
            Pair::FlRr => Pair::FrRl,
            Pair::FrRl => Pair::FlRr,
        }
    }

    pub fn contains(self, leg: Leg) -> bool {
        let (a, b) = self.stance();
        leg == a || leg == b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitPhase<T> {
    pub t: T,
    pub active_pair: Pair,
    /// Fraction of the current period, in `[0, 1)`.
    pub phase: T,
    /// Index of the current period.
    pub step: usize,
}

pub fn advance_phase<T: Real>(t: T, cfg: &GaitConfig<T>) -> GaitPhase<T> {
    let cycles = t / cfg.period;
    let whole = cycles.floor();
    let step = whole.to_usize().unwrap_or(0);
    let phase = (cycles - whole).max(T::zero()).min(T::one() - T::epsilon());
    let active_pair = if step % 2 == 0 { Pair::FlRr } else { Pair::FrRl };
    GaitPhase { t, active_pair, phase, step }
}

/// Quartic Bézier arc with zero end velocities and a fixed apex clearance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingPlan<T> {
    pub control: [Vec3<T>; 5],
    pub period: T,
}

impl<T: Real> SwingPlan<T> {
    /// Doubling the first and last control points pins both end velocities
    /// to zero; the middle point sits `8h/3` above the chord midpoint, which
    /// puts the arc `16 h s²(1−s)²` above the chord.
    pub fn new(start: Vec3<T>, end: Vec3<T>, height: T, period: T) -> Self {
        let mid = (start + end).scale(T::half()) + Vec3::unit_z().scale(T::lit(8.0) / T::lit(3.0) * height);
        Self { control: [start, start, mid, end, end], period }
    }

    pub fn start(&self) -> Vec3<T> {
        self.control[0]
    }

    pub fn end(&self) -> Vec3<T> {
        self.control[4]
    }

    fn bernstein(s: T) -> [T; 5] {
        let u = T::one() - s;
        let (four, six) = (T::lit(4.0), T::lit(6.0));
        [u * u * u * u, four * s * u * u * u, six * s * s * u * u, four * s * s * s * u, s * s * s * s]
    }

    fn combine(points: &[Vec3<T>], w: &[T]) -> Vec3<T> {
        points.iter().zip(w).map(|(p, &c)| p.scale(c)).sum()
    }

    pub fn position(&self, s: T) -> Vec3<T> {
        Self::combine(&self.control, &Self::bernstein(s))
    }

    /// Time derivative at phase `s`.
    pub fn velocity(&self, s: T) -> Vec3<T> {
        let c = &self.control;
        let diffs: [Vec3<T>; 4] = std::array::from_fn(|i| c[i + 1] - c[i]);
        let u = T::one() - s;
        let three = T::lit(3.0);
        let w = [u * u * u, three * s * u * u, three * s * s * u, s * s * s];
        Self::combine(&diffs, &w).scale(T::lit(4.0) / self.period)
    }

    pub fn acceleration(&self, s: T) -> Vec3<T> {
        let c = &self.control;
        let second: [Vec3<T>; 3] = std::array::from_fn(|i| c[i + 2] - c[i + 1].scale(T::two()) + c[i]);
        let u = T::one() - s;
        let w = [u * u, T::two() * s * u, s * s];
        Self::combine(&second, &w).scale(T::lit(12.0) / (self.period * self.period))
    }
}

/// Position and velocity on the arc at phase `s`.
pub fn swing_target<T: Real>(s: T, plan: &SwingPlan<T>) -> (Vec3<T>, Vec3<T>) {
    let s = s.max(T::zero()).min(T::one());
    (plan.position(s), plan.velocity(s))
}

/// PD body acceleration toward the applied reference.
pub fn stance_command<T: Real>(x_w: &RefState6<T>, x_p: &RefState6<T>, gains: &PdGains<T>) -> Vec3<T> {
    gains.accel(x_w, x_p)
}

/// Both blocks premultiplied by `R_Bᵀ`.
pub fn rotate_reference<T: Real>(x: &RefState6<T>, rot: &Rot3<T>) -> RefState6<T> {
    ref_state(rot.inverse_rotate(ref_position(x)), rot.inverse_rotate(ref_velocity(x)))
}

/// Constant-height, constant-speed body reference starting at `origin`.
pub fn reference_trajectory<T: Real>(t: T, cfg: &GaitConfig<T>, origin: Vec3<T>) -> RefState6<T> {
    let v = Vec3::new(cfg.v_target, T::zero(), T::zero());
    ref_state(origin + v.scale(t), v)
}

/// Per-axis foot-space PID gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

impl<T: Real> Default for PidGains<T> {
    fn default() -> Self {
        Self { kp: T::lit(400.0), ki: T::lit(20.0), kd: T::lit(40.0) }
    }
}

/// Desired body-frame foot trajectory point (relative to the CoM).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootTarget<T> {
    pub pos: Vec3<T>,
    pub vel: Vec3<T>,
    pub acc: Vec3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootPid<T> {
    pub integral: Vec3<T>,
}

impl<T: Real> FootPid<T> {
    pub fn reset(&mut self) {
        self.integral = Vec3::zero();
    }

    /// Corrected acceleration `a + K_P e + K_I ∫e + K_D ė`.
    pub fn correct(&mut self, target: &FootTarget<T>, pos: Vec3<T>, vel: Vec3<T>, g: &PidGains<T>, dt: T) -> Vec3<T> {
        let e = target.pos - pos;
        self.integral += e.scale(dt);
        target.acc + e.scale(g.kp) + self.integral.scale(g.ki) + (target.vel - vel).scale(g.kd)
    }
}

/// Body-frame foot position and velocity relative to the CoM.
pub fn foot_relative<T: Real>(state: &FullState<T>, params: &RobotParams<T>, leg: Leg) -> (Vec3<T>, Vec3<T>) {
    let i = leg.index();
    let q = state.legs.q[i];
    (foot_in_body(q, params.hip_offsets[i]), leg_jacobian(q).mul_vec(state.legs.qd[i]))
}

/// Joint accelerations realizing the body-frame foot acceleration `acc`.
pub fn leg_accel<T: Real>(state: &FullState<T>, leg: Leg, acc: Vec3<T>) -> Result<Vec3<T>, GaitError> {
    let i = leg.index();
    let (q, qd) = (state.legs.q[i], state.legs.qd[i]);
    let jac = leg_jacobian(q);
    if jac.determinant().abs() < T::lit(1e-8) {
        return Err(GaitError::SingularLeg(leg));
    }
    let inv = jac.inverse().ok_or(GaitError::SingularLeg(leg))?;
    let out = inv.mul_vec(acc - leg_jdot_qdot(q, qd));
    if out.is_finite() {
        Ok(out)
    } else {
        Err(GaitError::SingularLeg(leg))
    }
}

/// PID-corrected joint accelerations for every leg.
pub fn joints_from_feet<T: Real>(
    state: &FullState<T>,
    params: &RobotParams<T>,
    desired: &[FootTarget<T>; 4],
    pid: &mut [FootPid<T>; 4],
    gains: &PidGains<T>,
    dt: T,
) -> Result<JointInput<T>, GaitError> {
    let mut u = JointInput::default();
    for leg in Leg::ALL {
        let i = leg.index();
        let (pos, vel) = foot_relative(state, params, leg);
        let acc = pid[i].correct(&desired[i], pos, vel, gains, dt);
        u.accel[i] = leg_accel(state, leg, acc)?;
    }
    Ok(u)
}

/// Body-frame target for a swing foot whose inertial arc is `plan`.
fn swing_relative<T: Real>(state: &FullState<T>, plan: &SwingPlan<T>, phase: T, body_acc: Vec3<T>) -> FootTarget<T> {
    let b = &state.body;
    let (p, v) = swing_target(phase, plan);
    let a = plan.acceleration(phase.max(T::zero()).min(T::one()));
    let pos = b.rot.inverse_rotate(p - b.p);
    let vel = b.rot.inverse_rotate(v - b.v) - b.omega.cross(pos);
    let acc = b.rot.inverse_rotate(a) - body_acc;
    FootTarget { pos, vel, acc }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LegMode<T> {
    /// Desired body-frame foot state, integrated from `−a_B`.
    Stance { pos: Vec3<T>, vel: Vec3<T> },
    /// Inertial arc planned at liftoff.
    Swing { plan: SwingPlan<T> },
}

/// Outcome of one controller update.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput<T> {
    pub u_l: JointInput<T>,
    /// Legs whose command fell back to the previous value.
    pub singular: Vec<Leg>,
    /// Desired body-frame foot targets used this step.
    pub targets: [FootTarget<T>; 4],
    /// Set on the step where the stance pair changed.
    pub switched: bool,
}

/// Stance/swing sequencing and foot tracking for a trot.
#[derive(Debug, Clone)]
pub struct TrotController<T> {
    cfg: GaitConfig<T>,
    pid_gains: PidGains<T>,
    modes: [LegMode<T>; 4],
    pid: [FootPid<T>; 4],
    pair: Option<Pair>,
    last: JointInput<T>,
}

impl<T: Real> TrotController<T> {
    /// All four feet in stance, anchored where they are.
    pub fn new(state: &FullState<T>, params: &RobotParams<T>, cfg: GaitConfig<T>, pid_gains: PidGains<T>) -> Self {
        let modes = Leg::ALL.map(|leg| {
            let (pos, vel) = foot_relative(state, params, leg);
            LegMode::Stance { pos, vel }
        });
        Self { cfg, pid_gains, modes, pid: Default::default(), pair: None, last: JointInput::default() }
    }

    pub fn pair(&self) -> Option<Pair> {
        self.pair
    }

    pub fn is_stance(&self, leg: Leg) -> bool {
        matches!(self.modes[leg.index()], LegMode::Stance { .. })
    }

    /// Current desired body-frame position of a stance foot.
    pub fn stance_anchor(&self, leg: Leg) -> Option<Vec3<T>> {
        match self.modes[leg.index()] {
            LegMode::Stance { pos, .. } => Some(pos),
            LegMode::Swing { .. } => None,
        }
    }

    /// Touchdown point fixed at liftoff: `step_ahead` in front of where the
    /// hip will be at touchdown, along the horizontal heading, just below the
    /// ground plane.
    fn touchdown_world(&self, state: &FullState<T>, params: &RobotParams<T>, leg: Leg) -> Vec3<T> {
        let b = &state.body;
        let hip = b.p + b.rot.rotate(params.hip_offsets[leg.index()]);
        let heading = b.rot.rotate(Vec3::unit_x()).horizontal();
        let n = heading.norm();
        let fwd = if n > T::lit(1e-9) { heading.scale(T::one() / n) } else { Vec3::unit_x() };
        let mut target = hip + fwd.scale(self.cfg.step_ahead);
        // The hip keeps moving during the swing.
        target += b.v.horizontal().scale(self.cfg.period);
        Vec3::new(target.x, target.y, -self.cfg.touchdown_depth)
    }

    /// Switches the stance pair if `gait` says so. `None` keeps four-leg stance.
    fn sequence(&mut self, state: &FullState<T>, params: &RobotParams<T>, gait: Option<&GaitPhase<T>>) -> bool {
        let Some(g) = gait else { return false };
        if self.pair == Some(g.active_pair) {
            return false;
        }
        for leg in Leg::ALL {
            let i = leg.index();
            let stance = g.active_pair.contains(leg);
            match (self.modes[i], stance) {
                (LegMode::Swing { plan }, true) => {
                    // Touchdown: continue from the commanded end of the arc.
                    let t = swing_relative(state, &plan, T::one(), Vec3::zero());
                    self.modes[i] = LegMode::Stance { pos: t.pos, vel: t.vel };
                    self.pid[i].reset();
                }
                (LegMode::Stance { .. }, false) => {
                    let start = crate::dynamics::foot_position(state, params, leg);
                    let end = self.touchdown_world(state, params, leg);
                    let plan = SwingPlan::new(start, end, self.cfg.swing_height, self.cfg.period);
                    self.modes[i] = LegMode::Swing { plan };
                    self.pid[i].reset();
                }
                _ => {}
            }
        }
        self.pair = Some(g.active_pair);
        true
    }

    /// One control update. `body_acc` is the commanded body-frame body
    /// acceleration; `gait` is `None` while standing on all four feet.
    pub fn update(
        &mut self,
        state: &FullState<T>,
        params: &RobotParams<T>,
        body_acc: Vec3<T>,
        gait: Option<&GaitPhase<T>>,
        dt: T,
    ) -> ControlOutput<T> {
        let switched = self.sequence(state, params, gait);
        let phase = gait.map_or(T::zero(), |g| g.phase);
        let mut targets = [FootTarget::default(); 4];
        for leg in Leg::ALL {
            let i = leg.index();
            targets[i] = match &mut self.modes[i] {
                LegMode::Stance { pos, vel } => {
                    let acc = -body_acc;
                    *vel += acc.scale(dt);
                    *pos += vel.scale(dt);
                    FootTarget { pos: *pos, vel: *vel, acc }
                }
                LegMode::Swing { plan } => swing_relative(state, plan, phase, body_acc),
            };
        }

        let mut u_l = self.last;
        let mut singular = Vec::new();
        for leg in Leg::ALL {
            let i = leg.index();
            let (pos, vel) = foot_relative(state, params, leg);
            let acc = self.pid[i].correct(&targets[i], pos, vel, &self.pid_gains, dt);
            match leg_accel(state, leg, acc) {
                Ok(a) => u_l.accel[i] = a,
                Err(_) => singular.push(leg),
            }
        }
        self.last = u_l;
        ControlOutput { u_l, singular, targets, switched }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{foot_position, leg_vector, rk4_step};
    use crate::math::{rot_z, Mat3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phase_schedule() {
        let cfg = GaitConfig::<f64>::default();
        let p0 = advance_phase(0.0, &cfg);
        assert_eq!((p0.active_pair, p0.phase, p0.step), (Pair::FlRr, 0.0, 0));
        let p1 = advance_phase(0.25, &cfg);
        assert_eq!((p1.active_pair, p1.phase), (Pair::FrRl, 0.0));
        let p2 = advance_phase(0.375, &cfg);
        assert_eq!(p2.active_pair, Pair::FrRl);
        assert!((p2.phase - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pairs_partition_the_legs() {
        for pair in [Pair::FlRr, Pair::FrRl] {
            let stance = Leg::ALL.iter().filter(|&&l| pair.contains(l)).count();
            assert_eq!(stance, 2);
            let (f, r) = pair.stance();
            assert!(f.is_front() && !r.is_front());
            let (a, b) = pair.swing();
            assert!(!pair.contains(a) && !pair.contains(b));
        }
    }

    #[test]
    fn swing_endpoints_and_apex() {
        let start = Vec3::new(0.1, 0.15, 0.0);
        let end = Vec3::new(0.3, 0.17, -0.01);
        let plan = SwingPlan::new(start, end, 0.2, 0.25);
        let (p0, v0) = swing_target(0.0, &plan);
        let (p1, v1) = swing_target(1.0, &plan);
        assert_eq!(p0, start);
        assert!((p1 - end).norm_inf() < 1e-15);
        assert_eq!(v0, Vec3::zero());
        assert!(v1.norm_inf() < 1e-15);

        // Clearance above the chord, sampled densely.
        let chord = end - start;
        let mut best: f64 = 0.0;
        for k in 0..=10_000 {
            let s = k as f64 / 10_000.0;
            let p = plan.position(s);
            let frac = (p - start).horizontal().dot(chord.horizontal()) / chord.horizontal().norm_squared();
            best = best.max(p.z - (start.z + frac * chord.z));
        }
        assert!((best - 0.2).abs() < 1e-9, "{best}");
    }

    #[test]
    fn swing_derivatives_match_finite_differences() {
        let plan = SwingPlan::new(Vec3::new(0.0, 0.1, 0.0), Vec3::new(0.2, 0.0, 0.05), 0.2, 0.25);
        let h = 1e-6;
        for k in 1..20 {
            let s = k as f64 / 20.0;
            let fd_v = (plan.position(s + h) - plan.position(s - h)).scale(0.5 / h / plan.period);
            let fd_a = (plan.velocity(s + h) - plan.velocity(s - h)).scale(0.5 / h / plan.period);
            assert!((fd_v - plan.velocity(s)).norm_inf() < 1e-6);
            assert!((fd_a - plan.acceleration(s)).norm_inf() < 1e-4);
        }
    }

    #[test]
    fn stance_command_definition() {
        let gains = PdGains::isotropic(7.0, 0.0);
        let x_p = [0.1, 0.2, 0.3, 0.0, 0.0, 0.0];
        assert_eq!(stance_command(&x_p, &x_p, &gains), Vec3::zero());
        let x_w = [0.2, 0.2, 0.1, 0.0, 0.0, 0.0];
        let a = stance_command(&x_w, &x_p, &gains);
        assert!((a - Vec3::new(0.7, 0.0, -1.4)).norm_inf() < 1e-12);
    }

    #[test]
    fn stance_command_slope_matches_gains() {
        let gains = PdGains {
            kp: Mat3::from_rows([[30.0, 1.0, 0.0], [1.0, 25.0, 0.0], [0.0, 0.0, 40.0]]),
            kd: Mat3::diag(Vec3::new(8.0, 6.0, 9.0)),
        };
        let x_p = [0.0, 0.0, 0.45, 0.1, 0.0, 0.0];
        let x_w = [0.1, -0.05, 0.46, 0.2, 0.0, 0.01];
        // The map is affine, so a wide stencil is exact up to rounding.
        let h = 1e-3;
        for k in 0..6 {
            let mut a = x_w;
            let mut b = x_w;
            a[k] += h;
            b[k] -= h;
            let slope = (stance_command(&a, &x_p, &gains) - stance_command(&b, &x_p, &gains)).scale(0.5 / h);
            let want = if k < 3 { gains.kp.col(k) } else { gains.kd.col(k - 3) };
            assert!((slope - want).norm_inf() < 1e-9);
        }
    }

    #[test]
    fn straight_leg_vertical_accel_maps_to_r() {
        let s = FullState::standing(Vec3::new(0.0, 0.0, 0.45), 0.45);
        let u = leg_accel(&s, Leg::FrontLeft, Vec3::new(0.0, 0.0, 1.3)).unwrap();
        assert!((u - Vec3::new(0.0, 0.0, -1.3)).norm_inf() < 1e-12);
    }

    #[test]
    fn singular_leg_is_reported() {
        let mut s = FullState::standing(Vec3::zero(), 0.45);
        s.legs.q[1].y = std::f64::consts::FRAC_PI_2;
        assert_eq!(leg_accel(&s, Leg::FrontRight, Vec3::zero()), Err(GaitError::SingularLeg(Leg::FrontRight)));
    }

    #[test]
    fn zero_error_keeps_feet_still() {
        let params = RobotParams { gravity: Vec3::zero(), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut s = FullState::standing(Vec3::new(0.0, 0.0, 0.45), 0.45);
        for q in s.legs.q.iter_mut() {
            *q = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(0.3..0.5));
        }
        let desired = Leg::ALL.map(|leg| {
            let (pos, vel) = foot_relative(&s, &params, leg);
            FootTarget { pos, vel, acc: Vec3::zero() }
        });
        let mut pid = [FootPid::default(); 4];
        let dt = 1e-3;
        let u = joints_from_feet(&s, &params, &desired, &mut pid, &PidGains::default(), dt).unwrap();
        let next = rk4_step(&s, &u, &[Vec3::zero(); 4], dt, &params).unwrap();
        for leg in Leg::ALL {
            let moved = (foot_position(&next, &params, leg) - foot_position(&s, &params, leg)).norm();
            assert!(moved <= 1e-6, "{moved}");
        }
    }

    #[test]
    fn commanded_foot_accel_is_realized() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let mut s = FullState::standing(Vec3::zero(), 0.45);
            let i = rng.gen_range(0..4);
            s.legs.q[i] = Vec3::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(0.2..0.6));
            s.legs.qd[i] = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
            let want = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let qdd = leg_accel(&s, Leg::ALL[i], want).unwrap();
            let got = leg_jacobian(s.legs.q[i]).mul_vec(qdd) + leg_jdot_qdot(s.legs.q[i], s.legs.qd[i]);
            assert!((got - want).norm_inf() < 1e-9);
        }
    }

    #[test]
    fn leg_jacobian_finite_difference_over_joints() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-6;
        for _ in 0..100 {
            let q: Vec3<f64> = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..0.7));
            let j = leg_jacobian(q);
            for k in 0..3 {
                let (mut a, mut b) = (q, q);
                a[k] += h;
                b[k] -= h;
                let fd = (leg_vector(a) - leg_vector(b)).scale(0.5 / h);
                assert!((fd - j.col(k)).norm() <= 1e-6 * j.col(k).norm().max(1.0));
            }
        }
    }

    #[test]
    fn reference_rotation() {
        let x = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0];
        assert_eq!(rotate_reference(&x, &Rot3::identity()), x);
        let y = rotate_reference(&x, &rot_z(std::f64::consts::FRAC_PI_2));
        let want = [0.0, -1.0, 0.0, 2.0, 0.0, 0.0];
        for k in 0..6 {
            assert!((y[k] - want[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn reference_rotation_group_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let r1 = crate::math::axis_angle(Vec3::new(rng.gen(), rng.gen(), rng.gen()), rng.gen_range(-3.0..3.0));
            let r2 = crate::math::axis_angle(Vec3::new(rng.gen(), rng.gen(), rng.gen()), rng.gen_range(-3.0..3.0));
            let x: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            // (R1 R2)ᵀ x = R2ᵀ (R1ᵀ x).
            let direct = rotate_reference(&x, &r1.compose(&r2));
            let chained = rotate_reference(&rotate_reference(&x, &r1), &r2);
            for k in 0..6 {
                assert!((direct[k] - chained[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_schedule() {
        let cfg = GaitConfig::<f64>::default();
        let origin = Vec3::new(0.0, 0.0, 0.45);
        assert_eq!(reference_trajectory(0.0, &cfg, origin), [0.0, 0.0, 0.45, 0.2, 0.0, 0.0]);
        let later = reference_trajectory(5.0, &cfg, origin);
        assert!((later[0] - 1.0).abs() < 1e-12);
        assert_eq!(later[2], 0.45);
    }

    #[test]
    fn touchdown_continuity_and_exclusivity() {
        let params = RobotParams::default();
        let cfg = GaitConfig::default();
        let mut s = FullState::standing(Vec3::new(0.0, 0.0, 0.45), 0.45);
        s.body.v = Vec3::new(0.2, 0.0, 0.0);
        let mut ctl = TrotController::new(&s, &params, cfg, PidGains::default());
        let dt = 1e-3;
        let mut last_targets = None;
        for k in 0..600 {
            let t = k as f64 * dt;
            let g = advance_phase(t, &cfg);
            let out = ctl.update(&s, &params, Vec3::zero(), Some(&g), dt);
            let stance = Leg::ALL.iter().filter(|&&l| ctl.is_stance(l)).count();
            assert_eq!(stance, 2);
            if out.switched && k > 0 {
                let prev: [FootTarget<f64>; 4] = last_targets.unwrap();
                for leg in Leg::ALL.into_iter().filter(|&l| g.active_pair.contains(l)) {
                    // The new stance anchor continues the arc's end point
                    // (integrated once by this step's update).
                    let anchor = out.targets[leg.index()].pos;
                    let jump = (anchor - prev[leg.index()].pos).norm();
                    assert!(jump < 2e-3, "jump {jump}");
                }
            }
            last_targets = Some(out.targets);
            s.body.p += s.body.v.scale(dt);
        }
    }
}
