//! Reduced-order quadruped: a single rigid body carrying four massless,
//! variable-length legs.
//!
//! Each leg hangs from a hip offset `l_h` (body frame) and is described by a
//! frontal hip angle `φ`, a sagittal hip angle `γ` and a prismatic length `r`:
//!
//! ```text
//! p_F = p_B + R_B l_h + R_B R_y(φ) R_x(γ) [0, 0, -r]ᵀ
//! ```
//!
//! The legs carry no inertia, so the body sees them only through the ground
//! reaction forces applied at the feet. Joint variables are driven directly
//! by their accelerations `q̈_L = u_L`.

use thiserror::Error;

use crate::math::{skew, Mat3, Matrix, Rot3, Vec3};
use crate::Real;

/// Leg identifiers in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leg {
    FrontLeft = 0,
    FrontRight = 1,
    RearLeft = 2,
    RearRight = 3,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::FrontLeft, Leg::FrontRight, Leg::RearLeft, Leg::RearRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::FrontLeft | Leg::FrontRight)
    }

    pub fn label(self) -> &'static str {
        match self {
            Leg::FrontLeft => "fl",
            Leg::FrontRight => "fr",
            Leg::RearLeft => "rl",
            Leg::RearRight => "rr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite state derivative")]
    NonFiniteState,
}

/// Mass properties and geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams<T> {
    /// Body mass (kg).
    pub mass: T,
    /// Body-frame inertia tensor (kg·m²).
    pub inertia: Mat3<T>,
    /// Hip offsets in the body frame (m), indexed by [`Leg::index`].
    pub hip_offsets: [Vec3<T>; 4],
    /// Gravity (m/s²), inertial frame.
    pub gravity: Vec3<T>,
    /// Prismatic length bounds (m).
    pub r_min: T,
    pub r_max: T,
}

impl<T: Real> Default for RobotParams<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            mass: l(4.3),
            inertia: Mat3::diag(Vec3::new(l(0.035), l(0.091), l(0.100))),
            hip_offsets: [
                Vec3::new(l(0.25), l(0.15), T::zero()),
                Vec3::new(l(0.25), l(-0.15), T::zero()),
                Vec3::new(l(-0.25), l(0.15), T::zero()),
                Vec3::new(l(-0.25), l(-0.15), T::zero()),
            ],
            gravity: Vec3::new(T::zero(), T::zero(), l(-9.81)),
            r_min: l(0.15),
            r_max: l(0.70),
        }
    }
}

impl<T: Real> RobotParams<T> {
    /// Checks mass positivity, inertia symmetry/definiteness and finiteness.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(format!("mass must be positive, got {}", self.mass));
        }
        let i = &self.inertia;
        if !i.is_finite() || !i.is_symmetric(T::lit(1e-12)) {
            return Err("inertia must be finite and symmetric".into());
        }
        let m = Matrix::<T, 3, 3>::from_rows(i.m);
        if !m.is_positive_definite() {
            return Err("inertia must be positive definite".into());
        }
        if !self.gravity.is_finite() || self.hip_offsets.iter().any(|h| !h.is_finite()) {
            return Err("gravity and hip offsets must be finite".into());
        }
        if !(T::zero() < self.r_min && self.r_min < self.r_max) {
            return Err(format!("need 0 < r_min < r_max, got [{}, {}]", self.r_min, self.r_max));
        }
        Ok(())
    }
}

/// Per-leg joint coordinates stored as `(φ, γ, r)` in a [`Vec3`].
pub type JointVec<T> = Vec3<T>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LegJointState<T> {
    /// `(φ, γ, r)` per leg (rad, rad, m).
    pub q: [JointVec<T>; 4],
    /// `(φ̇, γ̇, ṙ)` per leg.
    pub qd: [JointVec<T>; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState<T> {
    /// CoM position, inertial (m).
    pub p: Vec3<T>,
    /// Body-to-inertial rotation.
    pub rot: Rot3<T>,
    /// CoM velocity, inertial (m/s).
    pub v: Vec3<T>,
    /// Angular velocity, body frame (rad/s).
    pub omega: Vec3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState<T> {
    pub body: BodyState<T>,
    pub legs: LegJointState<T>,
}

impl<T: Real> Default for BodyState<T> {
    fn default() -> Self {
        Self { p: Vec3::zero(), rot: Rot3::identity(), v: Vec3::zero(), omega: Vec3::zero() }
    }
}

impl<T: Real> Default for FullState<T> {
    fn default() -> Self {
        Self { body: BodyState::default(), legs: LegJointState::default() }
    }
}

impl<T: Real> FullState<T> {
    /// Body at `p` with identity attitude and every leg straight down at length `r`.
    pub fn standing(p: Vec3<T>, r: T) -> Self {
        let q = Vec3::new(T::zero(), T::zero(), r);
        Self {
            body: BodyState { p, ..Default::default() },
            legs: LegJointState { q: [q; 4], qd: [Vec3::zero(); 4] },
        }
    }

    pub fn is_finite(&self) -> bool {
        let b = &self.body;
        b.p.is_finite()
            && b.v.is_finite()
            && b.omega.is_finite()
            && b.rot.matrix().is_finite()
            && self.legs.q.iter().chain(&self.legs.qd).all(|x| x.is_finite())
    }
}

/// Joint accelerations `(φ̈, γ̈, r̈)` per leg.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointInput<T> {
    pub accel: [JointVec<T>; 4],
}

/// Time derivative of [`FullState`], with the attitude derivative `Ṙ` kept
/// as a raw matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative<T> {
    pub p_dot: Vec3<T>,
    pub rot_dot: Mat3<T>,
    pub v_dot: Vec3<T>,
    pub omega_dot: Vec3<T>,
    pub q_dot: [JointVec<T>; 4],
    pub q_ddot: [JointVec<T>; 4],
}

impl<T: Real> StateDerivative<T> {
    fn is_finite(&self) -> bool {
        self.p_dot.is_finite()
            && self.rot_dot.is_finite()
            && self.v_dot.is_finite()
            && self.omega_dot.is_finite()
            && self.q_dot.iter().chain(&self.q_ddot).all(|x| x.is_finite())
    }
}

/// Leg vector `R_y(φ) R_x(γ) [0, 0, -r]ᵀ` in the body frame.
pub fn leg_vector<T: Real>(q: JointVec<T>) -> Vec3<T> {
    let (sp, cp) = q.x.sin_cos();
    let (sg, cg) = q.y.sin_cos();
    Vec3::new(-cg * sp, sg, -cg * cp).scale(q.z)
}

/// Hip-to-foot plus hip offset, i.e. CoM-to-foot lever in the body frame.
pub fn foot_in_body<T: Real>(q: JointVec<T>, hip: Vec3<T>) -> Vec3<T> {
    hip + leg_vector(q)
}

/// `∂(leg_vector)/∂(φ, γ, r)`, columns in that order.
pub fn leg_jacobian<T: Real>(q: JointVec<T>) -> Mat3<T> {
    let (sp, cp) = q.x.sin_cos();
    let (sg, cg) = q.y.sin_cos();
    let r = q.z;
    let u = Vec3::new(-cg * sp, sg, -cg * cp);
    let u_phi = Vec3::new(-cg * cp, T::zero(), cg * sp);
    let u_gamma = Vec3::new(sg * sp, cg, sg * cp);
    Mat3::from_cols(u_phi.scale(r), u_gamma.scale(r), u)
}

/// The velocity-product term `J̇ q̇` of the leg vector's second derivative.
pub fn leg_jdot_qdot<T: Real>(q: JointVec<T>, qd: JointVec<T>) -> Vec3<T> {
    let (sp, cp) = q.x.sin_cos();
    let (sg, cg) = q.y.sin_cos();
    let r = q.z;
    let (dp, dg, dr) = (qd.x, qd.y, qd.z);
    let u = Vec3::new(-cg * sp, sg, -cg * cp);
    let u_phi = Vec3::new(-cg * cp, T::zero(), cg * sp);
    let u_gamma = Vec3::new(sg * sp, cg, sg * cp);
    let u_phiphi = Vec3::new(cg * sp, T::zero(), cg * cp);
    let u_phigamma = Vec3::new(sg * cp, T::zero(), -sg * sp);
    let u_gammagamma = -u;
    let u_dot = u_phi.scale(dp) + u_gamma.scale(dg);
    let curv = u_phiphi.scale(dp * dp) + u_phigamma.scale(T::two() * dp * dg) + u_gammagamma.scale(dg * dg);
    u_dot.scale(T::two() * dr) + curv.scale(r)
}

/// Inertial foot position.
pub fn foot_position<T: Real>(state: &FullState<T>, params: &RobotParams<T>, leg: Leg) -> Vec3<T> {
    let i = leg.index();
    let b = &state.body;
    b.p + b.rot.rotate(foot_in_body(state.legs.q[i], params.hip_offsets[i]))
}

/// Inertial foot velocity, including the joint-rate contribution.
pub fn foot_velocity<T: Real>(state: &FullState<T>, params: &RobotParams<T>, leg: Leg) -> Vec3<T> {
    let i = leg.index();
    let b = &state.body;
    let q = state.legs.q[i];
    let lever = foot_in_body(q, params.hip_offsets[i]);
    let rel = b.omega.cross(lever) + leg_jacobian(q).mul_vec(state.legs.qd[i]);
    b.v + b.rot.rotate(rel)
}

/// `∂ṗ_F/∂v` with `v = [ṗ_B, ω_B]`: `[I₃ | −R_B [l]ₓ]`.
pub fn contact_jacobian<T: Real>(
    state: &FullState<T>,
    params: &RobotParams<T>,
    leg: Leg,
) -> Matrix<T, 3, 6> {
    let i = leg.index();
    let lever = foot_in_body(state.legs.q[i], params.hip_offsets[i]);
    let ang = -(*state.body.rot.matrix() * skew(lever));
    let mut jac = Matrix::zeros();
    for r in 0..3 {
        jac.rows[r][r] = T::one();
        for c in 0..3 {
            jac.rows[r][3 + c] = ang.m[r][c];
        }
    }
    jac
}

/// Integration stage: the state with `R_B` as an unconstrained matrix.
#[derive(Debug, Clone, Copy)]
struct Stage<T> {
    p: Vec3<T>,
    rot: Mat3<T>,
    v: Vec3<T>,
    omega: Vec3<T>,
    q: [JointVec<T>; 4],
    qd: [JointVec<T>; 4],
}

impl<T: Real> Stage<T> {
    fn from_state(s: &FullState<T>) -> Self {
        Self {
            p: s.body.p,
            rot: *s.body.rot.matrix(),
            v: s.body.v,
            omega: s.body.omega,
            q: s.legs.q,
            qd: s.legs.qd,
        }
    }

    fn advanced(&self, d: &StateDerivative<T>, h: T) -> Self {
        Self {
            p: self.p + d.p_dot.scale(h),
            rot: self.rot + d.rot_dot.scale(h),
            v: self.v + d.v_dot.scale(h),
            omega: self.omega + d.omega_dot.scale(h),
            q: std::array::from_fn(|i| self.q[i] + d.q_dot[i].scale(h)),
            qd: std::array::from_fn(|i| self.qd[i] + d.q_ddot[i].scale(h)),
        }
    }
}

fn stage_deriv<T: Real>(
    s: &Stage<T>,
    u_l: &JointInput<T>,
    u_g: &[Vec3<T>; 4],
    params: &RobotParams<T>,
) -> StateDerivative<T> {
    let force: Vec3<T> = u_g.iter().copied().sum();
    let v_dot = params.gravity + force.scale(T::one() / params.mass);

    // Moments of the foot forces through the transposed contact Jacobian:
    // the angular block of Bᵀu is l × (Rᵀ u).
    let mut torque = Vec3::zero();
    for i in 0..4 {
        let lever = foot_in_body(s.q[i], params.hip_offsets[i]);
        torque += lever.cross(s.rot.tr_mul_vec(u_g[i]));
    }
    // The Σ r_Bj × ∂L/∂r_Bj term vanishes: the Lagrangian has no attitude
    // dependence (gravity acts at the CoM).
    let gyro = s.omega.cross(params.inertia.mul_vec(s.omega));
    let inv_inertia = params.inertia.inverse().unwrap_or_else(Mat3::zero);
    let omega_dot = inv_inertia.mul_vec(torque - gyro);

    StateDerivative {
        p_dot: s.v,
        rot_dot: s.rot * skew(s.omega),
        v_dot,
        omega_dot,
        q_dot: s.qd,
        q_ddot: u_l.accel,
    }
}

/// `ẋ = f(x, u_L, u_g)`; `u_g` is the inertial force at each foot.
pub fn dynamics_deriv<T: Real>(
    state: &FullState<T>,
    u_l: &JointInput<T>,
    u_g: &[Vec3<T>; 4],
    params: &RobotParams<T>,
) -> Result<StateDerivative<T>, DynamicsError> {
    let d = stage_deriv(&Stage::from_state(state), u_l, u_g, params);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(DynamicsError::NonFiniteState)
    }
}

/// Classical RK4 with inputs held constant over the step; `R_B` is
/// projected back onto SO(3) once at the end.
pub fn rk4_step<T: Real>(
    state: &FullState<T>,
    u_l: &JointInput<T>,
    u_g: &[Vec3<T>; 4],
    dt: T,
    params: &RobotParams<T>,
) -> Result<FullState<T>, DynamicsError> {
    let s0 = Stage::from_state(state);
    let half = dt * T::half();
    let k1 = stage_deriv(&s0, u_l, u_g, params);
    let k2 = stage_deriv(&s0.advanced(&k1, half), u_l, u_g, params);
    let k3 = stage_deriv(&s0.advanced(&k2, half), u_l, u_g, params);
    let k4 = stage_deriv(&s0.advanced(&k3, dt), u_l, u_g, params);
    for k in [&k1, &k2, &k3, &k4] {
        if !k.is_finite() {
            return Err(DynamicsError::NonFiniteState);
        }
    }
    let sixth = dt / T::lit(6.0);
    let two = T::two();
    let comb = |a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>| (a + b.scale(two) + c.scale(two) + d).scale(sixth);
    let rot_raw = s0.rot
        + (k1.rot_dot + k2.rot_dot.scale(two) + k3.rot_dot.scale(two) + k4.rot_dot).scale(sixth);
    let rot = Rot3::from_matrix(rot_raw).ok_or(DynamicsError::NonFiniteState)?;
    let next = FullState {
        body: BodyState {
            p: s0.p + comb(k1.p_dot, k2.p_dot, k3.p_dot, k4.p_dot),
            rot,
            v: s0.v + comb(k1.v_dot, k2.v_dot, k3.v_dot, k4.v_dot),
            omega: s0.omega + comb(k1.omega_dot, k2.omega_dot, k3.omega_dot, k4.omega_dot),
        },
        legs: LegJointState {
            q: std::array::from_fn(|i| s0.q[i] + comb(k1.q_dot[i], k2.q_dot[i], k3.q_dot[i], k4.q_dot[i])),
            qd: std::array::from_fn(|i| {
                s0.qd[i] + comb(k1.q_ddot[i], k2.q_ddot[i], k3.q_ddot[i], k4.q_ddot[i])
            }),
        },
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(DynamicsError::NonFiniteState)
    }
}

/// Clamps every prismatic length into `[r_min, r_max]`, zeroing the rate of
/// a clamped joint. Returns the legs that were clamped.
pub fn clamp_leg_lengths<T: Real>(state: &mut FullState<T>, params: &RobotParams<T>) -> Vec<Leg> {
    let mut clamped = Vec::new();
    for leg in Leg::ALL {
        let i = leg.index();
        let r = state.legs.q[i].z;
        let c = r.max(params.r_min).min(params.r_max);
        if c != r {
            state.legs.q[i].z = c;
            state.legs.qd[i].z = T::zero();
            clamped.push(leg);
        }
    }
    clamped
}

/// Inertial angular momentum about the CoM, `R_B I_B ω_B`.
pub fn angular_momentum<T: Real>(state: &FullState<T>, params: &RobotParams<T>) -> Vec3<T> {
    state.body.rot.rotate(params.inertia.mul_vec(state.body.omega))
}
