//! Two-foot inverted-pendulum estimate of the stance GRFs and the affine
//! no-slip constraint `h = J x_ref + d ≥ 0` built from it.
//!
//! The body is a point mass on two massless legs. Given a reference
//! `x_ref = [p_ref, v_ref]` the PD law `a = K_p(p_ref − p) + K_d(v_ref − v)`
//! fixes the total GRF; three extra equations split it between the feet:
//! equal lateral components, normal forces in inverse ratio to the
//! distances from the CoM projection, and the same lever balance on the
//! in-plane normal `e_g` of the support line.

use thiserror::Error;

use crate::contact::GroundForce;
use crate::math::{vecn, LinalgError, Lu, Mat3, Matrix, Vec3};
use crate::Real;

/// `[p_x, p_y, p_z, v_x, v_y, v_z]` (m, m/s).
pub type RefState6<T> = [T; 6];

pub fn ref_state<T: Real>(p: Vec3<T>, v: Vec3<T>) -> RefState6<T> {
    [p.x, p.y, p.z, v.x, v.y, v.z]
}

pub fn ref_position<T: Real>(x: &RefState6<T>) -> Vec3<T> {
    Vec3::new(x[0], x[1], x[2])
}

pub fn ref_velocity<T: Real>(x: &RefState6<T>) -> Vec3<T> {
    Vec3::new(x[3], x[4], x[5])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TipError {
    #[error("degenerate support: {0}")]
    DegenerateSupport(&'static str),
}

impl From<LinalgError> for TipError {
    fn from(_: LinalgError) -> Self {
        TipError::DegenerateSupport("singular force-distribution system")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipGeometry<T> {
    pub p_b: Vec3<T>,
    pub v_b: Vec3<T>,
    /// Front stance foot.
    pub p_f1: Vec3<T>,
    /// Rear stance foot.
    pub p_f2: Vec3<T>,
    /// Ground-plane distance from the CoM projection to each foot, measured
    /// along the support line.
    pub d1: T,
    pub d2: T,
    /// Unit ground-plane normal of the support line.
    pub e_g: Vec3<T>,
}

impl<T: Real> TipGeometry<T> {
    /// Projects the CoM horizontally onto the segment `p_f1`–`p_f2`, clamping to
    /// the segment ends.
    pub fn new(p_b: Vec3<T>, v_b: Vec3<T>, p_f1: Vec3<T>, p_f2: Vec3<T>) -> Result<Self, TipError> {
        if (p_f1 - p_f2).norm() <= T::lit(1e-6) {
            return Err(TipError::DegenerateSupport("coincident feet"));
        }
        let line = (p_f2 - p_f1).horizontal();
        let len_sq = line.norm_squared();
        if len_sq <= T::lit(1e-12) {
            return Err(TipError::DegenerateSupport("feet stacked vertically"));
        }
        let t = ((p_b - p_f1).horizontal().dot(line) / len_sq).max(T::zero()).min(T::one());
        let len = len_sq.sqrt();
        let e_g = Vec3::unit_z().cross(-line).scale(T::one() / len);
        Ok(Self { p_b, v_b, p_f1, p_f2, d1: t * len, d2: (T::one() - t) * len, e_g })
    }

    pub fn x_p(&self) -> RefState6<T> {
        ref_state(self.p_b, self.v_b)
    }

    /// Same support with the foot labels exchanged.
    pub fn swapped(&self) -> Self {
        Self { p_f1: self.p_f2, p_f2: self.p_f1, d1: self.d2, d2: self.d1, e_g: -self.e_g, ..*self }
    }
}

/// Body PD gains (1/s², 1/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains<T> {
    pub kp: Mat3<T>,
    pub kd: Mat3<T>,
}

impl<T: Real> Default for PdGains<T> {
    fn default() -> Self {
        Self::isotropic(T::lit(30.0), T::lit(8.0))
    }
}

impl<T: Real> PdGains<T> {
    pub fn isotropic(kp: T, kd: T) -> Self {
        Self { kp: Mat3::diag(Vec3::new(kp, kp, kp)), kd: Mat3::diag(Vec3::new(kd, kd, kd)) }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, m) in [("kp", &self.kp), ("kd", &self.kd)] {
            let sym = m.is_symmetric(T::lit(1e-12));
            if !m.is_finite() || !sym || !Matrix::<T, 3, 3>::from_rows(m.m).is_positive_definite() {
                return Err(format!("{name} must be symmetric positive definite"));
            }
        }
        Ok(())
    }

    /// `K_p (p_ref − p) + K_d (v_ref − v)`.
    pub fn accel(&self, x_ref: &RefState6<T>, x_p: &RefState6<T>) -> Vec3<T> {
        let e = vecn::sub(x_ref, x_p);
        self.kp.mul_vec(ref_position(&e)) + self.kd.mul_vec(ref_velocity(&e))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { kp: self.kp.scale(s), kd: self.kd.scale(s) }
    }
}

/// Friction/unilaterality limits used to build the constraint rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintParams<T> {
    pub mu_s: T,
    /// Minimum normal force per foot (N).
    pub f_z_min: T,
    /// Safety margin subtracted from every row (N).
    pub margin: T,
}

impl<T: Real> Default for ConstraintParams<T> {
    fn default() -> Self {
        Self { mu_s: T::lit(0.2), f_z_min: T::one(), margin: T::zero() }
    }
}

/// Frozen `[sgn(u_x), sgn(u_y)]` per foot.
pub type SignSnapshot<T> = [[T; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSystem<T> {
    pub j_r: Matrix<T, 6, 6>,
    pub d_r: [T; 6],
    pub params: ConstraintParams<T>,
    pub signs: SignSnapshot<T>,
}

impl<T: Real> ConstraintSystem<T> {
    pub fn eval(&self, x: &RefState6<T>) -> [T; 6] {
        vecn::add(&self.j_r.mul_vec(x), &self.d_r)
    }

    /// Constraint values with the safety margin added back.
    pub fn eval_unmargined(&self, x: &RefState6<T>) -> [T; 6] {
        self.eval(x).map(|h| h + self.params.margin)
    }
}

/// Force-distribution system factored once for a fixed geometry; forces
/// are affine in the reference.
#[derive(Debug, Clone)]
pub struct TipSolver<T> {
    geom: TipGeometry<T>,
    gains: PdGains<T>,
    mass: T,
    gravity: Vec3<T>,
    lu: Lu<T, 6>,
}

impl<T: Real> TipSolver<T> {
    pub fn new(geom: &TipGeometry<T>, gains: &PdGains<T>, mass: T, gravity: Vec3<T>) -> Result<Self, TipError> {
        let lu = Lu::factor(&distribution_matrix(geom))?;
        Ok(Self { geom: *geom, gains: *gains, mass, gravity, lu })
    }

    pub fn condition_estimate(&self) -> T {
        self.lu.condition_estimate()
    }

    /// Right-hand side: total force `m (a − g)` on the first three rows.
    fn rhs(&self, x_ref: &RefState6<T>) -> [T; 6] {
        let total = (self.gains.accel(x_ref, &self.geom.x_p()) - self.gravity).scale(self.mass);
        [total.x, total.y, total.z, T::zero(), T::zero(), T::zero()]
    }

    pub fn forces(&self, x_ref: &RefState6<T>) -> (Vec3<T>, Vec3<T>) {
        split(&self.lu.solve(&self.rhs(x_ref)))
    }

    /// `(J, d)` with `[u1; u2] = J x_ref + d`.
    fn force_affine(&self) -> (Matrix<T, 6, 6>, [T; 6]) {
        let d = self.lu.solve(&self.rhs(&[T::zero(); 6]));
        let mut j = Matrix::zeros();
        for k in 0..6 {
            let col = self.lu.solve(&self.rhs(&vecn::unit(k)));
            j.set_col(k, vecn::sub(&col, &d));
        }
        (j, d)
    }
}

fn split<T: Real>(u: &[T; 6]) -> (Vec3<T>, Vec3<T>) {
    (Vec3::new(u[0], u[1], u[2]), Vec3::new(u[3], u[4], u[5]))
}

/// Rows: total force (3), lateral equality, normal-force moment balance,
/// `e_g` moment balance. Unknowns are `[u1; u2]`.
pub fn distribution_matrix<T: Real>(g: &TipGeometry<T>) -> Matrix<T, 6, 6> {
    let (o, z) = (T::one(), T::zero());
    let (d1, d2, e) = (g.d1, g.d2, g.e_g);
    Matrix::from_rows([
        [o, z, z, o, z, z],
        [z, o, z, z, o, z],
        [z, z, o, z, z, o],
        [z, o, z, z, -o, z],
        [z, z, d1, z, z, -d2],
        [d1 * e.x, d1 * e.y, d1 * e.z, -d2 * e.x, -d2 * e.y, -d2 * e.z],
    ])
}

pub fn tip_grf<T: Real>(
    geom: &TipGeometry<T>,
    gains: &PdGains<T>,
    x_ref: &RefState6<T>,
    mass: T,
    gravity: Vec3<T>,
) -> Result<(GroundForce<T>, GroundForce<T>), TipError> {
    let (u1, u2) = TipSolver::new(geom, gains, mass, gravity)?.forces(x_ref);
    Ok((GroundForce::contact(u1), GroundForce::contact(u2)))
}

fn signs_of<T: Real>(u1: Vec3<T>, u2: Vec3<T>) -> SignSnapshot<T> {
    [[u1.x.sgn(), u1.y.sgn()], [u2.x.sgn(), u2.y.sgn()]]
}

/// Constraint rows for given frozen signs.
pub fn constraint_values_signed<T: Real>(
    u1: Vec3<T>,
    u2: Vec3<T>,
    p: &ConstraintParams<T>,
    signs: &SignSnapshot<T>,
) -> [T; 6] {
    let rows = |u: Vec3<T>, s: [T; 2]| {
        [
            -s[0] * u.x + p.mu_s * u.z - p.margin,
            -s[1] * u.y + p.mu_s * u.z - p.margin,
            u.z - p.f_z_min - p.margin,
        ]
    };
    let (a, b) = (rows(u1, signs[0]), rows(u2, signs[1]));
    [a[0], a[1], a[2], b[0], b[1], b[2]]
}

/// Friction-pyramid and minimum-normal rows evaluated with the forces' own
/// signs; all entries non-negative iff both forces are admissible.
pub fn constraint_values<T: Real>(u1: &GroundForce<T>, u2: &GroundForce<T>, p: &ConstraintParams<T>) -> [T; 6] {
    constraint_values_signed(u1.f, u2.f, p, &signs_of(u1.f, u2.f))
}

/// Builds `(J_r, d_r)` with force signs frozen at `x_freeze`.
pub fn extract_affine<T: Real>(
    solver: &TipSolver<T>,
    params: &ConstraintParams<T>,
    x_freeze: &RefState6<T>,
) -> ConstraintSystem<T> {
    let (u1, u2) = solver.forces(x_freeze);
    let signs = signs_of(u1, u2);
    let (fj, fd) = solver.force_affine();
    let h = |u: &[T; 6]| {
        let (a, b) = split(u);
        constraint_values_signed(a, b, params, &signs)
    };
    let d_r = h(&fd);
    let mut j_r = Matrix::zeros();
    for k in 0..6 {
        let col = vecn::add(&fj.col(k), &fd);
        j_r.set_col(k, vecn::sub(&h(&col), &d_r));
    }
    ConstraintSystem { j_r, d_r, params: *params, signs }
}
