//! Randomized soundness checks of the force solver, the affine constraint
//! extraction, the governor, the integrator and the Jacobians, each against
//! an independent computation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{
    contact_jacobian, foot_position, foot_velocity, leg_jacobian, rk4_step, BodyState, FullState,
    JointInput, LegJointState, Leg, RobotParams,
};
use crate::erg::{erg_velocity, lyapunov_value, ErgGains};
use crate::math::{axis_angle, vecn, Matrix, Vec3};
use crate::tip::{extract_affine, ConstraintParams, ConstraintSystem, PdGains, RefState6, TipGeometry, TipSolver};

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
/// `None` when a pivot falls below `1e-12` of the largest entry.
pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        let piv = a[c][c];
        for j in 0..n {
            a[c][j] /= piv;
        }
        b[c] /= piv;
        for i in 0..n {
            if i != c && a[i][c] != 0.0 {
                let f = a[i][c];
                for j in 0..n {
                    a[i][j] -= f * a[c][j];
                }
                b[i] -= f * b[c];
            }
        }
    }
    Some(b)
}

/// Closest point to `x_r` in `{x : J x + d ≥ 0}`, by enumerating every
/// subset of rows as the active set and keeping the best feasible
/// projection. `None` if no subset yields a feasible point.
pub fn min_energy_feasible(j: &[[f64; 6]; 6], d: &[f64; 6], x_r: &[f64; 6]) -> Option<[f64; 6]> {
    let feasible = |x: &[f64; 6]| (0..6).all(|k| dot(&j[k], x) + d[k] >= -1e-9);
    let mut best: Option<([f64; 6], f64)> = None;
    for mask in 0u32..64 {
        let rows: Vec<usize> = (0..6).filter(|k| mask & (1 << k) != 0).collect();
        let x = if rows.is_empty() {
            *x_r
        } else {
            let g: Vec<Vec<f64>> = rows.iter().map(|&a| rows.iter().map(|&b| dot(&j[a], &j[b])).collect()).collect();
            let rhs: Vec<f64> = rows.iter().map(|&a| -(dot(&j[a], x_r) + d[a])).collect();
            let Some(lambda) = gauss_jordan(g, rhs) else { continue };
            let mut x = *x_r;
            for (&a, l) in rows.iter().zip(&lambda) {
                for c in 0..6 {
                    x[c] += l * j[a][c];
                }
            }
            x
        };
        if !feasible(&x) {
            continue;
        }
        let dist: f64 = (0..6).map(|c| (x[c] - x_r[c]).powi(2)).sum();
        if best.map_or(true, |(_, b)| dist < b) {
            best = Some((x, dist));
        }
    }
    best.map(|(x, _)| x)
}

fn dot(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn uniform3(rng: &mut ChaCha8Rng, lo: Vec3<f64>, hi: Vec3<f64>) -> Vec3<f64> {
    Vec3::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y), rng.gen_range(lo.z..hi.z))
}

/// Random diagonal stance under a body near standing height.
#[derive(Debug, Clone, Copy)]
pub struct TipInstance {
    pub geom: TipGeometry<f64>,
    pub gains: PdGains<f64>,
    pub mass: f64,
    pub gravity: Vec3<f64>,
    pub x_ref: RefState6<f64>,
}

pub fn random_tip_instance(rng: &mut ChaCha8Rng) -> TipInstance {
    let s = Vec3::new(1.0, 1.0, 1.0);
    let p_b = uniform3(rng, Vec3::new(-0.05, -0.05, 0.35), Vec3::new(0.05, 0.05, 0.55));
    let v_b = uniform3(rng, s.scale(-0.3), s.scale(0.3));
    let ly = if rng.gen_bool(0.5) { 0.15 } else { -0.15 };
    let p_f1 = uniform3(rng, Vec3::new(0.15, ly - 0.05, -0.004), Vec3::new(0.35, ly + 0.05, 0.0));
    let p_f2 = uniform3(rng, Vec3::new(-0.35, -ly - 0.05, -0.004), Vec3::new(-0.15, -ly + 0.05, 0.0));
    let geom = TipGeometry::new(p_b, v_b, p_f1, p_f2).expect("separated feet");
    let gains = PdGains::isotropic(rng.gen_range(10.0..60.0), rng.gen_range(2.0..15.0));
    let x_ref = std::array::from_fn(|k| {
        let base = if k < 3 { p_b[k] } else { v_b[k - 3] };
        base + rng.gen_range(-0.05..0.05)
    });
    TipInstance { geom, gains, mass: rng.gen_range(2.0..8.0), gravity: Vec3::new(0.0, 0.0, -9.81), x_ref }
}

/// Worst residuals of the force split over random instances.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TipResiduals {
    pub newton: f64,
    pub lateral: f64,
    pub moment: f64,
    pub instances: usize,
}

pub fn tip_soundness(instances: usize, seed: u64) -> TipResiduals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = TipResiduals { instances, ..Default::default() };
    for _ in 0..instances {
        let inst = random_tip_instance(&mut rng);
        let g = &inst.geom;
        let solver = TipSolver::new(g, &inst.gains, inst.mass, inst.gravity).expect("regular support");
        let (u1, u2) = solver.forces(&inst.x_ref);
        // Commanded acceleration from scratch.
        let kp = inst.gains.kp.m[0][0];
        let kd = inst.gains.kd.m[0][0];
        let a = Vec3::new(
            kp * (inst.x_ref[0] - g.p_b.x) + kd * (inst.x_ref[3] - g.v_b.x),
            kp * (inst.x_ref[1] - g.p_b.y) + kd * (inst.x_ref[4] - g.v_b.y),
            kp * (inst.x_ref[2] - g.p_b.z) + kd * (inst.x_ref[5] - g.v_b.z),
        );
        let total = (a - inst.gravity).scale(inst.mass);
        r.newton = r.newton.max((u1 + u2 - total).norm_inf());
        r.lateral = r.lateral.max((u1.y - u2.y).abs());
        // Ground-plane distances from the CoM projection, clamped to the segment.
        let (fx, fy) = (g.p_f2.x - g.p_f1.x, g.p_f2.y - g.p_f1.y);
        let len = fx.hypot(fy);
        let t = (((g.p_b.x - g.p_f1.x) * fx + (g.p_b.y - g.p_f1.y) * fy) / (len * len)).clamp(0.0, 1.0);
        let (d1, d2) = (t * len, (1.0 - t) * len);
        r.moment = r.moment.max((d1 * u1.z - d2 * u2.z).abs());
    }
    r
}

/// Worst gap between direct evaluation and the affine model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AffineResiduals {
    pub max_error: f64,
    pub instances: usize,
    pub samples: usize,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Constraint rows evaluated directly from the forces, rows per foot
/// `[μ u_z − |u_x|, μ u_z − |u_y|, u_z − f_min]` minus the margin.
fn direct_rows(u1: Vec3<f64>, u2: Vec3<f64>, p: &ConstraintParams<f64>) -> [f64; 6] {
    let f = |u: Vec3<f64>| {
        [p.mu_s * u.z - sign(u.x) * u.x - p.margin, p.mu_s * u.z - sign(u.y) * u.y - p.margin, u.z - p.f_z_min - p.margin]
    };
    let (a, b) = (f(u1), f(u2));
    [a[0], a[1], a[2], b[0], b[1], b[2]]
}

pub fn affine_soundness(instances: usize, per_instance: usize, seed: u64) -> AffineResiduals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = AffineResiduals { instances, ..Default::default() };
    for _ in 0..instances {
        let inst = random_tip_instance(&mut rng);
        let solver = TipSolver::new(&inst.geom, &inst.gains, inst.mass, inst.gravity).expect("regular support");
        let params = ConstraintParams {
            mu_s: rng.gen_range(0.1..1.0),
            f_z_min: rng.gen_range(0.0..5.0),
            margin: rng.gen_range(0.0..2.0),
        };
        let cs = extract_affine(&solver, &params, &inst.x_ref);
        let frozen = |u1: Vec3<f64>, u2: Vec3<f64>| {
            [[sign(u1.x), sign(u1.y)], [sign(u2.x), sign(u2.y)]] == cs.signs
        };
        let mut taken = 0;
        let mut tries = 0;
        let mut radius = 0.05;
        while taken < per_instance && tries < 100 * per_instance {
            tries += 1;
            let x: [f64; 6] = std::array::from_fn(|k| inst.x_ref[k] + rng.gen_range(-radius..radius));
            let (u1, u2) = solver.forces(&x);
            if !frozen(u1, u2) {
                radius = (radius * 0.7).max(1e-6);
                continue;
            }
            let direct = direct_rows(u1, u2, &params);
            let model = cs.eval(&x);
            r.max_error = r.max_error.max(vecn::norm_inf(&vecn::sub(&direct, &model)));
            taken += 1;
        }
        r.samples += taken;
    }
    r
}

/// Random affine system with `x_w0` strictly inside it.
pub fn random_constraints(rng: &mut ChaCha8Rng, x_w0: &[f64; 6]) -> ConstraintSystem<f64> {
    let j: [[f64; 6]; 6] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let d: [f64; 6] = std::array::from_fn(|k| -dot(&j[k], x_w0) + rng.gen_range(0.1..1.0));
    ConstraintSystem {
        j_r: Matrix::from_rows(j),
        d_r: d,
        params: ConstraintParams::default(),
        signs: [[0.0; 2]; 2],
    }
}

/// Outcome of iterating the governor on one static instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorTrial {
    pub reference_feasible: bool,
    pub converged: bool,
    pub steps: usize,
    /// Largest relative growth of `V` on a step that started admissible.
    pub worst_v_increase: f64,
    /// `|min h_w|` at the final point.
    pub final_violation: f64,
    /// `‖x_w − x_r‖∞` at the final point.
    pub final_error: f64,
    /// `(V − V*) / V*` against the enumeration oracle, zero if `V* = 0`.
    pub oracle_gap: f64,
    pub final_speed: f64,
}

impl GovernorTrial {
    pub fn passed(&self) -> bool {
        let target = if self.reference_feasible {
            self.final_error <= 1e-5
        } else {
            self.final_violation <= 1e-3 && self.oracle_gap.abs() <= 0.05
        };
        self.converged && self.worst_v_increase <= 0.0 && target
    }
}

pub const GOVERNOR_MAX_STEPS: usize = 100_000;
pub const GOVERNOR_SPEED_TOL: f64 = 1e-6;

pub fn governor_trial(cs: &ConstraintSystem<f64>, x_r: &[f64; 6], x_w0: &[f64; 6], gains: &ErgGains<f64>) -> GovernorTrial {
    let mut x = *x_w0;
    let mut worst = 0.0f64;
    let mut converged = false;
    let mut steps = 0;
    let mut speed = f64::INFINITY;
    while steps < GOVERNOR_MAX_STEPS {
        let (xdot, d) = erg_velocity(cs, x_r, &x, gains);
        speed = vecn::norm(&xdot);
        if speed < GOVERNOR_SPEED_TOL {
            converged = true;
            break;
        }
        let next = vecn::axpy(&x, gains.dt, &xdot);
        if d.min_h_w >= 0.0 {
            let v_next = lyapunov_value(x_r, &next, &gains.p);
            let growth = (v_next - d.lyapunov) / d.lyapunov.max(1e-300);
            // Rounding slack of a few ulps.
            if growth > 1e-12 {
                worst = worst.max(growth);
            }
        }
        x = next;
        steps += 1;
    }
    let h_r = cs.eval(x_r);
    let h_w = cs.eval(&x);
    let reference_feasible = vecn::min(&h_r) >= 0.0;
    let oracle = min_energy_feasible(&cs.j_r.rows, &cs.d_r, x_r).expect("x_w0 is feasible");
    let v = lyapunov_value(x_r, &x, &gains.p);
    let v_star = lyapunov_value(x_r, &oracle, &gains.p);
    let oracle_gap = if v_star > 0.0 { (v - v_star) / v_star } else { 0.0 };
    GovernorTrial {
        reference_feasible,
        converged,
        steps,
        worst_v_increase: worst,
        final_violation: vecn::min(&h_w).min(0.0).abs(),
        final_error: vecn::norm_inf(&vecn::sub(&x, x_r)),
        oracle_gap,
        final_speed: speed,
    }
}

/// Governor trials on random instances, identity Lyapunov weight.
pub fn governor_soundness(instances: usize, seed: u64, gains: &ErgGains<f64>) -> Vec<GovernorTrial> {
    let gains = ErgGains { p: Matrix::identity(), ..*gains };
    (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let x_w0: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let cs = random_constraints(&mut rng, &x_w0);
            let spread = rng.gen_range(0.05..2.0);
            let x_r: [f64; 6] = std::array::from_fn(|k| x_w0[k] + rng.gen_range(-spread..spread));
            governor_trial(&cs, &x_r, &x_w0, &gains)
        })
        .collect()
}

fn spin(dt: f64, t_end: f64, params: &RobotParams<f64>) -> (FullState<f64>, f64) {
    let mut s = FullState::standing(Vec3::zero(), 0.45);
    s.body.omega = Vec3::new(1.0, 4.0, 0.5);
    let n = (t_end / dt).round() as usize;
    let mut worst_drift = 0.0f64;
    for _ in 0..n {
        let before = s.body.rot.orthonormality_error();
        s = rk4_step(&s, &JointInput::default(), &[Vec3::zero(); 4], dt, params).expect("finite spin");
        worst_drift = worst_drift.max(s.body.rot.orthonormality_error() - before);
    }
    (s, worst_drift)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorReport {
    /// Rotation error ratio when the step halves (about 16 for order four).
    pub convergence_ratio: f64,
    pub orthonormality_drift: f64,
    pub ballistic_error: f64,
}

pub fn integrator_soundness() -> IntegratorReport {
    let params = RobotParams::default();
    let t_end = 2.0;
    let (reference, _) = spin(1e-2 / 64.0, t_end, &params);
    let err = |dt: f64| spin(dt, t_end, &params).0.body.rot.angle_to(&reference.body.rot);
    let convergence_ratio = err(2e-2) / err(1e-2);
    let (_, orthonormality_drift) = spin(1e-3, 10.0, &params);

    let mut s = FullState::standing(Vec3::new(0.1, -0.2, 1.0), 0.45);
    s.body.v = Vec3::new(0.5, 0.3, 2.0);
    let (p0, v0) = (s.body.p, s.body.v);
    let g = params.gravity;
    let mut ballistic_error = 0.0f64;
    let dt = 1e-3;
    for k in 1..=1000 {
        s = rk4_step(&s, &JointInput::default(), &[Vec3::zero(); 4], dt, &params).expect("finite flight");
        let t = k as f64 * dt;
        let p = p0 + v0.scale(t) + g.scale(0.5 * t * t);
        let v = v0 + g.scale(t);
        ballistic_error = ballistic_error.max((s.body.p - p).norm_inf()).max((s.body.v - v).norm_inf());
    }
    IntegratorReport { convergence_ratio, orthonormality_drift, ballistic_error }
}

fn random_state(rng: &mut ChaCha8Rng) -> FullState<f64> {
    let s = Vec3::new(1.0, 1.0, 1.0);
    let axis = uniform3(rng, -s, s);
    let angle = rng.gen_range(-3.0..3.0);
    let body = BodyState {
        p: uniform3(rng, -s, s),
        rot: axis_angle(axis, angle),
        v: uniform3(rng, -s, s),
        omega: uniform3(rng, s.scale(-2.0), s.scale(2.0)),
    };
    let q = std::array::from_fn(|_| Vec3::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(0.3..0.7)));
    let qd = std::array::from_fn(|_| uniform3(rng, s.scale(-2.0), s.scale(2.0)));
    FullState { body, legs: LegJointState { q, qd } }
}

/// Worst relative gap between analytic Jacobians and central differences.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JacobianReport {
    pub contact: f64,
    pub leg: f64,
    pub states: usize,
}

pub fn jacobian_soundness(states: usize, seed: u64) -> JacobianReport {
    let params = RobotParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut r = JacobianReport { states, ..Default::default() };
    for _ in 0..states {
        let s = random_state(&mut rng);
        for leg in Leg::ALL {
            // ∂ṗ_F / ∂[v, ω].
            let jac = contact_jacobian(&s, &params, leg);
            let scale = jac.norm_inf().max(1.0);
            for k in 0..6 {
                let bump = |e: f64| {
                    let mut t = s;
                    if k < 3 {
                        t.body.v[k] += e;
                    } else {
                        t.body.omega[k - 3] += e;
                    }
                    foot_velocity(&t, &params, leg)
                };
                let fd = (bump(h) - bump(-h)).scale(0.5 / h);
                let col = Vec3::from_array(jac.col(k));
                r.contact = r.contact.max((fd - col).norm_inf() / scale);
            }
            // ∂p_F / ∂q through the full forward kinematics.
            let i = leg.index();
            let jl = leg_jacobian(s.legs.q[i]);
            let lscale = jl.norm_inf().max(1.0);
            for k in 0..3 {
                let bump = |e: f64| {
                    let mut t = s;
                    t.legs.q[i][k] += e;
                    s.body.rot.inverse_rotate(foot_position(&t, &params, leg) - s.body.p)
                };
                let fd = (bump(h) - bump(-h)).scale(0.5 / h);
                r.leg = r.leg.max((fd - jl.col(k)).norm_inf() / lscale);
            }
        }
    }
    r
}
