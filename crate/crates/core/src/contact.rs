//! Flat compliant ground at `z = 0` with Stribeck friction.

use crate::math::Vec3;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundParams<T> {
    /// Normal stiffness (N/m).
    pub k_gz: T,
    /// Normal damping (N·s/m).
    pub k_dz: T,
    pub mu_c: T,
    pub mu_s: T,
    /// Viscous coefficient (N·s/m).
    pub mu_v: T,
    /// Stribeck velocity (m/s).
    pub v_s: T,
}

impl<T: Real> GroundParams<T> {
    /// Defaults for a surface with static coefficient `mu_s`.
    pub fn with_mu_s(mu_s: T) -> Self {
        let l = T::lit;
        Self { k_gz: l(8000.0), k_dz: l(300.0), mu_c: l(0.9) * mu_s, mu_s, mu_v: l(0.1), v_s: l(0.01) }
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [self.k_gz, self.k_dz, self.mu_c, self.mu_s, self.mu_v, self.v_s];
        if all.iter().any(|x| !x.is_finite()) {
            return Err("ground parameters must be finite".into());
        }
        if !(self.k_gz > T::zero()) {
            return Err(format!("k_gz must be positive, got {}", self.k_gz));
        }
        if self.k_dz < T::zero() || self.mu_v < T::zero() {
            return Err("k_dz and mu_v must be non-negative".into());
        }
        if !(self.v_s > T::zero()) {
            return Err(format!("v_s must be positive, got {}", self.v_s));
        }
        if !(T::zero() < self.mu_c && self.mu_c <= self.mu_s) {
            return Err(format!("need 0 < mu_c <= mu_s, got mu_c={} mu_s={}", self.mu_c, self.mu_s));
        }
        Ok(())
    }
}

impl<T: Real> Default for GroundParams<T> {
    fn default() -> Self {
        Self::with_mu_s(T::lit(0.2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundForce<T> {
    /// Inertial-frame force on the foot (N).
    pub f: Vec3<T>,
    pub in_contact: bool,
}

impl<T: Real> GroundForce<T> {
    pub fn none() -> Self {
        Self { f: Vec3::zero(), in_contact: false }
    }

    pub fn contact(f: Vec3<T>) -> Self {
        Self { f, in_contact: true }
    }
}

/// Stribeck coefficient `μ_c − (μ_c − μ_s) exp(−v²/v_s²)`.
pub fn stribeck_coefficient<T: Real>(speed: T, p: &GroundParams<T>) -> T {
    let ratio = speed / p.v_s;
    p.mu_c - (p.mu_c - p.mu_s) * (-(ratio * ratio)).exp()
}

fn tangential<T: Real>(vel: T, f_z: T, p: &GroundParams<T>) -> T {
    -stribeck_coefficient(vel, p) * f_z * vel.sgn() - p.mu_v * vel
}

pub fn ground_force<T: Real>(foot_pos: Vec3<T>, foot_vel: Vec3<T>, p: &GroundParams<T>) -> GroundForce<T> {
    if foot_pos.z > T::zero() {
        return GroundForce::none();
    }
    // No adhesion: a fast-retracting foot gets zero normal force, not a pull.
    let f_z = (-p.k_gz * foot_pos.z - p.k_dz * foot_vel.z).max(T::zero());
    let f = Vec3::new(tangential(foot_vel.x, f_z, p), tangential(foot_vel.y, f_z, p), f_z);
    GroundForce::contact(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grf(z: f64, vel: Vec3<f64>, p: &GroundParams<f64>) -> GroundForce<f64> {
        ground_force(Vec3::new(0.3, -0.1, z), vel, p)
    }

    #[test]
    fn airborne_foot_feels_nothing() {
        let g = grf(0.01, Vec3::new(1.0, 1.0, -1.0), &GroundParams::default());
        assert_eq!(g, GroundForce::none());
    }

    #[test]
    fn static_penetration() {
        let p = GroundParams { k_gz: 1e4, ..GroundParams::default() };
        let g = grf(-0.001, Vec3::zero(), &p);
        assert!(g.in_contact);
        assert!((g.f - Vec3::new(0.0, 0.0, 10.0)).norm_inf() < 1e-12);
    }

    #[test]
    fn static_coefficient_recovered_at_rest() {
        let p = GroundParams::<f64>::default();
        assert!((stribeck_coefficient(0.0, &p) - p.mu_s).abs() < 1e-15);
        assert!((stribeck_coefficient(10.0, &p) - p.mu_c).abs() < 1e-15);
    }

    #[test]
    fn retracting_foot_is_not_pulled() {
        let g = grf(-0.001, Vec3::new(0.0, 0.0, 1.0), &GroundParams::default());
        assert!(g.in_contact);
        assert_eq!(g.f, Vec3::zero());
    }

    #[test]
    fn default_penetration_under_half_weight() {
        let p = GroundParams::<f64>::default();
        let depth = 4.3 * 9.81 / 2.0 / p.k_gz;
        assert!((depth - 2.6e-3).abs() < 1e-4);
        assert!(p.validate().is_ok());
    }

    proptest! {
        #[test]
        fn tangential_bound(z in -0.02f64..0.0, vx in -2.0f64..2.0, vy in -2.0f64..2.0, vz in -1.0f64..1.0, mu in 0.05f64..1.5) {
            let p = GroundParams::with_mu_s(mu);
            let g = grf(z, Vec3::new(vx, vy, vz), &p);
            prop_assert!(g.f.z >= 0.0);
            prop_assert!(g.f.x.abs() <= p.mu_s * g.f.z + p.mu_v * vx.abs() + 1e-12);
            prop_assert!(g.f.y.abs() <= p.mu_s * g.f.z + p.mu_v * vy.abs() + 1e-12);
        }

        #[test]
        fn odd_in_slip_velocity_without_viscosity(z in -0.02f64..0.0, vx in -2.0f64..2.0, vy in -2.0f64..2.0) {
            let p = GroundParams { mu_v: 0.0, ..GroundParams::default() };
            let a = grf(z, Vec3::new(vx, vy, 0.0), &p);
            let b = grf(z, Vec3::new(-vx, -vy, 0.0), &p);
            prop_assert_eq!(a.f.x, -b.f.x);
            prop_assert_eq!(a.f.y, -b.f.y);
        }

        #[test]
        fn deeper_never_pushes_less(z in -0.02f64..0.0, dz in 0.0f64..0.01) {
            let p = GroundParams::default();
            let shallow = grf(z, Vec3::zero(), &p);
            let deep = grf(z - dz, Vec3::zero(), &p);
            prop_assert!(deep.f.z >= shallow.f.z);
        }

        #[test]
        fn symmetric_axes(z in -0.02f64..0.0, v in -2.0f64..2.0) {
            let p = GroundParams::default();
            let gx = grf(z, Vec3::new(v, 0.0, 0.0), &p);
            let gy = grf(z, Vec3::new(0.0, v, 0.0), &p);
            prop_assert_eq!(gx.f.x, gy.f.y);
        }
    }
}
