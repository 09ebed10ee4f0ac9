//! Rotation matrices: elementary rotations, integration of `Ṙ = R[ω]ₓ`
//! and projection back onto SO(3).

use super::{skew, Mat3, Vec3};
use crate::Real;

/// Proper rotation matrix. Every public constructor returns a matrix with
/// `RᵀR = I` and `det R = +1` to working precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3<T>(Mat3<T>);

impl<T: Real> Default for Rot3<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Rot3<T> {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Projects an arbitrary nonsingular matrix onto the closest rotation
    /// (orthogonal polar factor). Returns `None` for singular or reflected input.
    pub fn from_matrix(m: Mat3<T>) -> Option<Self> {
        let q = polar_orthogonal_factor(m)?;
        if q.determinant() <= T::zero() {
            return None;
        }
        Some(Self(q))
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        self.0.mul_vec(v)
    }

    /// `Rᵀ v`.
    pub fn inverse_rotate(&self, v: Vec3<T>) -> Vec3<T> {
        self.0.tr_mul_vec(v)
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0.mul_mat(&other.0))
    }

    /// `‖RᵀR − I‖∞`.
    pub fn orthonormality_error(&self) -> T {
        orthonormality_error(&self.0)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> T {
        let m = &self.0.m;
        let c = (m[0][0] + m[1][1] + m[2][2] - T::one()) * T::half();
        c.max(-T::one()).min(T::one()).acos()
    }

    /// Angle of `selfᵀ · other`, the geodesic distance on SO(3).
    pub fn angle_to(&self, other: &Self) -> T {
        self.transpose().compose(other).angle()
    }
}

pub fn rot_x<T: Real>(angle: T) -> Rot3<T> {
    let (s, c) = angle.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Rot3(Mat3::from_rows([[o, z, z], [z, c, -s], [z, s, c]]))
}

pub fn rot_y<T: Real>(angle: T) -> Rot3<T> {
    let (s, c) = angle.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Rot3(Mat3::from_rows([[c, z, s], [z, o, z], [-s, z, c]]))
}

pub fn rot_z<T: Real>(angle: T) -> Rot3<T> {
    let (s, c) = angle.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Rot3(Mat3::from_rows([[c, -s, z], [s, c, z], [z, z, o]]))
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub fn axis_angle<T: Real>(axis: Vec3<T>, angle: T) -> Rot3<T> {
    let n = axis.norm();
    if n == T::zero() {
        return Rot3::identity();
    }
    let k = skew(axis.scale(T::one() / n));
    let (s, c) = angle.sin_cos();
    Rot3(Mat3::identity() + k.scale(s) + (k * k).scale(T::one() - c))
}

pub fn orthonormality_error<T: Real>(m: &Mat3<T>) -> T {
    (m.transpose() * *m - Mat3::identity()).norm_inf()
}

/// Orthogonal factor of the polar decomposition via Newton's iteration
/// `X ← (X + X⁻ᵀ)/2`.
pub fn polar_orthogonal_factor<T: Real>(m: Mat3<T>) -> Option<Mat3<T>> {
    let tol = T::epsilon() * T::lit(4.0);
    let mut x = m;
    for _ in 0..64 {
        let inv_t = x.inverse()?.transpose();
        let next = (x + inv_t).scale(T::half());
        let step = (next - x).norm_inf();
        x = next;
        if step <= tol {
            break;
        }
    }
    // One Björck pass removes the residual left by the stopping tolerance.
    let xtx = x.transpose() * x;
    x = x.scale(T::lit(1.5)) - (x * xtx).scale(T::half());
    x.is_finite().then_some(x)
}

/// Advances `R` under `Ṙ = R[ω]ₓ` with constant body rate `omega_body`
/// using one classical RK4 step, then reorthonormalizes.
pub fn integrate_rotation<T: Real>(r: &Rot3<T>, omega_body: Vec3<T>, dt: T) -> Rot3<T> {
    let w = skew(omega_body);
    let f = |x: &Mat3<T>| *x * w;
    let r0 = *r.matrix();
    let h = dt;
    let k1 = f(&r0);
    let k2 = f(&(r0 + k1.scale(h * T::half())));
    let k3 = f(&(r0 + k2.scale(h * T::half())));
    let k4 = f(&(r0 + k3.scale(h)));
    let sum = k1 + k2.scale(T::two()) + k3.scale(T::two()) + k4;
    let raw = r0 + sum.scale(h / T::lit(6.0));
    Rot3::from_matrix(raw).unwrap_or(*r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
        [
            a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
        ]
    }

    fn quat_rotate(q: [f64; 4], v: [f64; 3]) -> [f64; 3] {
        let p = [0.0, v[0], v[1], v[2]];
        let qc = [q[0], -q[1], -q[2], -q[3]];
        let r = quat_mul(quat_mul(q, p), qc);
        [r[1], r[2], r[3]]
    }

    #[test]
    fn elementary_rotations() {
        assert_eq!(rot_x(0.0f64), Rot3::identity());
        let v = rot_y(std::f64::consts::FRAC_PI_2).rotate(Vec3::new(0.0, 0.0, -1.0));
        assert!((v - Vec3::new(-1.0, 0.0, 0.0)).norm_inf() < 1e-15);
        for r in [rot_x(0.7f64), rot_y(-2.1), rot_z(3.0)] {
            assert!(r.orthonormality_error() < 1e-15);
            assert!((r.matrix().determinant() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn composition_matches_quaternion_oracle() {
        let mut seed = 0x1234_5678_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 2.0 * std::f64::consts::PI
        };
        for _ in 0..100 {
            let (a, b) = (next(), next());
            let qy = [(a / 2.0).cos(), 0.0, (a / 2.0).sin(), 0.0];
            let qx = [(b / 2.0).cos(), (b / 2.0).sin(), 0.0, 0.0];
            let q = quat_mul(qy, qx);
            let m = rot_y(a).compose(&rot_x(b));
            for v in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, -0.2, 0.9]] {
                let want = quat_rotate(q, v);
                let got = m.rotate(Vec3::from_array(v));
                assert!((got - Vec3::from_array(want)).norm_inf() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rate_is_identity() {
        let r = integrate_rotation(&Rot3::<f64>::identity(), Vec3::zero(), 1e-3);
        assert!((*r.matrix() - Mat3::identity()).norm_inf() < 1e-15);
    }

    #[test]
    fn accumulated_spin_matches_closed_form() {
        let omega = std::f64::consts::FRAC_PI_4;
        let n = 1000;
        let dt = 1.0 / n as f64;
        let mut r = Rot3::identity();
        for _ in 0..n {
            r = integrate_rotation(&r, Vec3::new(0.0, 0.0, omega), dt);
        }
        let want = rot_z(omega);
        assert!((*r.matrix() - *want.matrix()).norm_inf() < 1e-6);
    }

    #[test]
    fn long_run_drift_stays_bounded() {
        let mut seed = 42u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut r = Rot3::identity();
        for _ in 0..100_000 {
            let w = Vec3::new(next(), next(), next()).scale(5.0);
            r = integrate_rotation(&r, w, 1e-3);
            assert!(r.orthonormality_error() <= 1e-9);
        }
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integration_converges_at_least_second_order() {
        let w = Vec3::new(0.3, -1.1, 2.0);
        let period = 2.0 * std::f64::consts::PI / w.norm();
        let exact = axis_angle(w, w.norm() * period);
        let err = |n: usize| {
            let dt = period / n as f64;
            let mut r = Rot3::identity();
            for _ in 0..n {
                r = integrate_rotation(&r, w, dt);
            }
            r.angle_to(&exact)
        };
        let ratio = err(50) / err(100);
        assert!(ratio >= 3.9, "ratio {ratio}");
    }

    #[test]
    fn polar_factor_recovers_rotation() {
        let r = rot_x(0.4f64).compose(&rot_z(-1.2));
        let noisy = *r.matrix() + Mat3::from_rows([[1e-3, -2e-3, 0.0], [0.0, 5e-4, 1e-3], [2e-3, 0.0, -1e-3]]);
        let q = Rot3::from_matrix(noisy).unwrap();
        assert!(q.orthonormality_error() < 1e-14);
        assert!(q.angle_to(&r) < 5e-3);
        assert!(Rot3::from_matrix(Mat3::diag(Vec3::new(1.0, 1.0, -1.0))).is_none());
    }

    #[test]
    fn single_precision_kernel() {
        let r = integrate_rotation(&Rot3::<f32>::identity(), Vec3::new(0.0, 0.0, 1.0), 0.01);
        assert!(r.orthonormality_error() < 1e-5);
        assert!((r.angle() - 0.01).abs() < 1e-5);
    }
}
