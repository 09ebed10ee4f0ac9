//! Explicit reference governor.
//!
//! The governor owns the applied reference `x_w` and moves it towards the
//! desired reference `x_r` with `ẋ_w = v_r + v_t + v_n`:
//!
//! | `min h_w` | `min h_r` | active terms                                   |
//! |-----------|-----------|------------------------------------------------|
//! | ≥ 0       | ≥ 0       | `v_r` (straight attraction)                    |
//! | ≥ 0       | < 0       | `v_r + v_t` (nullspace of the violated rows)   |
//! | < 0       | ≥ 0       | `v_r`                                          |
//! | < 0       | < 0       | `v_n` (along the most violated row)            |
//!
//! and advances it with one explicit Euler step.

use crate::math::{nullspace, vecn, Matrix};
use crate::tip::{ConstraintSystem, RefState6};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgGains<T> {
    pub alpha_r: T,
    pub alpha_t: T,
    pub alpha_n: T,
    /// Lyapunov weight, symmetric positive definite.
    pub p: Matrix<T, 6, 6>,
    /// Governor step (s).
    pub dt: T,
}

impl<T: Real> Default for ErgGains<T> {
    fn default() -> Self {
        let a = T::lit(50.0);
        Self { alpha_r: a, alpha_t: a, alpha_n: a, p: Matrix::identity(), dt: T::lit(1e-3) }
    }
}

impl<T: Real> ErgGains<T> {
    pub fn uniform(alpha: T, dt: T) -> Self {
        Self { alpha_r: alpha, alpha_t: alpha, alpha_n: alpha, dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, a) in [("alpha_r", self.alpha_r), ("alpha_t", self.alpha_t), ("alpha_n", self.alpha_n)] {
            if !(a > T::zero()) || !a.is_finite() {
                return Err(format!("{name} must be positive, got {a}"));
            }
        }
        if !(self.dt > T::zero()) {
            return Err(format!("governor dt must be positive, got {}", self.dt));
        }
        if !self.p.is_symmetric(T::lit(1e-12)) || !self.p.is_positive_definite() {
            return Err("P must be symmetric positive definite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Both references admissible.
    Attract,
    /// Applied reference admissible, desired one not.
    Tangent,
    /// Applied reference inadmissible, desired one admissible.
    Mixed,
    /// Both inadmissible, pushed along `+r̂` of the worst row.
    NormalIn,
    /// Both inadmissible, pushed along `−r̂` of the worst row.
    NormalOut,
}

impl Branch {
    pub fn classify<T: Real>(min_h_w: T, min_h_r: T) -> Self {
        let w_ok = min_h_w >= T::zero();
        let r_ok = min_h_r >= T::zero();
        match (w_ok, r_ok) {
            (true, true) => Branch::Attract,
            (true, false) => Branch::Tangent,
            (false, true) => Branch::Mixed,
            (false, false) => Branch::NormalIn,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Branch::Attract => 0,
            Branch::Tangent => 1,
            Branch::Mixed => 2,
            Branch::NormalIn => 3,
            Branch::NormalOut => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Attract => "attract",
            Branch::Tangent => "tangent",
            Branch::Mixed => "mixed",
            Branch::NormalIn => "normal-in",
            Branch::NormalOut => "normal-out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    pub branch: Branch,
    pub h_r: [T; 6],
    pub h_w: [T; 6],
    pub min_h_r: T,
    pub min_h_w: T,
    /// `V` at the applied reference before the step.
    pub lyapunov: T,
    pub xdot_norm: T,
    /// Dimension of the nullspace used by the tangential term.
    pub null_dim: usize,
}

pub fn lyapunov_value<T: Real>(x_r: &RefState6<T>, x_w: &RefState6<T>, p: &Matrix<T, 6, 6>) -> T {
    p.quadratic_form(&vecn::sub(x_r, x_w))
}

fn unit_row<T: Real>(row: [T; 6]) -> [T; 6] {
    let n = vecn::norm(&row);
    if n > T::zero() {
        vecn::scale(&row, T::one() / n)
    } else {
        row
    }
}

/// `n nᵀ e` summed over `basis`.
fn project<T: Real>(basis: &[[T; 6]], e: &[T; 6]) -> [T; 6] {
    basis.iter().fold([T::zero(); 6], |acc, n| vecn::axpy(&acc, vecn::dot(n, e), n))
}

/// Governor velocity `ẋ_w` and its diagnostics.
pub fn erg_velocity<T: Real>(
    cs: &ConstraintSystem<T>,
    x_r: &RefState6<T>,
    x_w: &RefState6<T>,
    gains: &ErgGains<T>,
) -> ([T; 6], Diagnostics<T>) {
    let h_r = cs.eval(x_r);
    let h_w = cs.eval(x_w);
    let (min_h_r, min_h_w) = (vecn::min(&h_r), vecn::min(&h_w));
    let e = vecn::sub(x_r, x_w);
    let mut branch = Branch::classify(min_h_w, min_h_r);
    let mut null_dim = 0;

    let xdot = match branch {
        Branch::Attract | Branch::Mixed => vecn::scale(&e, gains.alpha_r),
        Branch::Tangent => {
            let violated: Vec<[T; 6]> = (0..6).filter(|&k| h_r[k] < T::zero()).map(|k| cs.j_r.row(k)).collect();
            let basis = nullspace(&violated);
            null_dim = basis.len();
            let v_t = vecn::scale(&project(&basis, &e), gains.alpha_t);
            vecn::axpy(&v_t, gains.alpha_r, &e)
        }
        Branch::NormalIn | Branch::NormalOut => {
            let k = vecn::argmin(&h_w);
            let r = unit_row(cs.j_r.row(k));
            let sign = if h_r[k] >= h_w[k] {
                T::one()
            } else {
                branch = Branch::NormalOut;
                -T::one()
            };
            vecn::scale(&r, sign * gains.alpha_n * vecn::dot(&r, &e))
        }
    };

    let diag = Diagnostics {
        branch,
        h_r,
        h_w,
        min_h_r,
        min_h_w,
        lyapunov: lyapunov_value(x_r, x_w, &gains.p),
        xdot_norm: vecn::norm(&xdot),
        null_dim,
    };
    (xdot, diag)
}

/// One governor update `x_w ← x_w + dt ẋ_w`.
pub fn erg_step<T: Real>(
    cs: &ConstraintSystem<T>,
    x_r: &RefState6<T>,
    x_w: &RefState6<T>,
    gains: &ErgGains<T>,
) -> (RefState6<T>, Diagnostics<T>) {
    let (xdot, diag) = erg_velocity(cs, x_r, x_w, gains);
    (vecn::axpy(x_w, gains.dt, &xdot), diag)
}

/// Governor state carried across simulation steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgState<T> {
    pub x_w: RefState6<T>,
    pub last: Option<Diagnostics<T>>,
}

impl<T: Real> ErgState<T> {
    pub fn new(x_w: RefState6<T>) -> Self {
        Self { x_w, last: None }
    }

    pub fn step(&mut self, cs: &ConstraintSystem<T>, x_r: &RefState6<T>, gains: &ErgGains<T>) -> Diagnostics<T> {
        let (x_w, diag) = erg_step(cs, x_r, &self.x_w, gains);
        self.x_w = x_w;
        self.last = Some(diag);
        diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tip::ConstraintParams;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(j: [[f64; 6]; 6], d: [f64; 6]) -> ConstraintSystem<f64> {
        ConstraintSystem { j_r: Matrix::from_rows(j), d_r: d, params: ConstraintParams::default(), signs: [[0.0; 2]; 2] }
    }

    /// One active half-space `x_0 ≤ 1` padded with slack rows.
    fn half_space() -> ConstraintSystem<f64> {
        let mut j = [[0.0; 6]; 6];
        j[0][0] = -1.0;
        system(j, [1.0, 10.0, 10.0, 10.0, 10.0, 10.0])
    }

    fn random_system(rng: &mut ChaCha8Rng, x_w0: &[f64; 6]) -> ConstraintSystem<f64> {
        let j: [[f64; 6]; 6] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let d: [f64; 6] = std::array::from_fn(|k| -vecn::dot(&j[k], x_w0) + rng.gen_range(0.1..1.0));
        system(j, d)
    }

    #[test]
    fn attraction_step() {
        let cs = half_space();
        let gains = ErgGains::uniform(1.0, 0.001);
        let x_w = [0.0; 6];
        let x_r = vecn::unit(0);
        let (next, d) = erg_step(&cs, &x_r, &x_w, &gains);
        assert_eq!(d.branch, Branch::Attract);
        assert!(vecn::norm_inf(&vecn::sub(&next, &[0.001, 0.0, 0.0, 0.0, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn fixed_point_at_desired_reference() {
        let cs = half_space();
        let x = [0.3, -0.2, 0.1, 0.0, 0.5, -0.4];
        let (next, d) = erg_step(&cs, &x, &x, &ErgGains::default());
        assert_eq!(next, x);
        assert_eq!(d.lyapunov, 0.0);
    }

    #[test]
    fn lyapunov_examples() {
        let p = Matrix::identity();
        assert_eq!(lyapunov_value(&[1.0; 6], &[1.0; 6], &p), 0.0);
        assert_eq!(lyapunov_value(&vecn::unit(0), &[0.0; 6], &p), 1.0);
    }

    #[test]
    fn tangent_motion_stays_in_violated_nullspace() {
        let cs = half_space();
        let gains = ErgGains::uniform(1.0, 0.001);
        let x_r = [3.0, 1.0, -2.0, 0.5, 0.0, 1.0];
        let (xdot, d) = erg_velocity(&cs, &x_r, &[0.0; 6], &gains);
        assert_eq!(d.branch, Branch::Tangent);
        assert_eq!(d.null_dim, 5);
        // v_t alone lies in the nullspace; v_r adds the direct pull.
        let v_t = vecn::sub(&xdot, &vecn::scale(&vecn::sub(&x_r, &[0.0; 6]), gains.alpha_r));
        assert!(vecn::dot(&cs.j_r.row(0), &v_t).abs() < 1e-9);
    }

    #[test]
    fn normal_branch_raises_worst_row() {
        let cs = half_space();
        let gains = ErgGains::uniform(1.0, 0.001);
        let x_w = [1.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        for x_r in [[2.0, 0.3, 0.0, 0.0, 0.0, 0.0], [1.2, 0.0, 0.0, 0.0, 0.0, 0.0]] {
            let (next, d) = erg_step(&cs, &x_r, &x_w, &gains);
            assert!(matches!(d.branch, Branch::NormalIn | Branch::NormalOut));
            assert!(cs.eval(&next)[0] > cs.eval(&x_w)[0]);
        }
    }

    #[test]
    fn mixed_branch_uses_attraction() {
        let cs = half_space();
        let gains = ErgGains::uniform(2.0, 0.01);
        let x_w = [1.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let x_r = [0.0; 6];
        let (xdot, d) = erg_velocity(&cs, &x_r, &x_w, &gains);
        assert_eq!(d.branch, Branch::Mixed);
        assert!((xdot[0] + 3.0).abs() < 1e-15);
    }

    #[test]
    fn fully_violated_rows_leave_no_tangent() {
        let j: [[f64; 6]; 6] = std::array::from_fn(|i| vecn::scale(&vecn::unit(i), -1.0));
        let cs = system(j, [1.0; 6]);
        let x_r = [2.0; 6];
        let (xdot, d) = erg_velocity(&cs, &x_r, &[0.0; 6], &ErgGains::uniform(1.0, 1e-3));
        assert_eq!(d.branch, Branch::Tangent);
        assert_eq!(d.null_dim, 0);
        assert!(vecn::norm_inf(&vecn::sub(&xdot, &x_r)) < 1e-15);
    }

    #[test]
    fn ties_pick_lowest_row() {
        let mut j = [[0.0; 6]; 6];
        j[2][1] = -1.0;
        j[4][2] = -1.0;
        let cs = system(j, [5.0, 5.0, 1.0, 5.0, 1.0, 5.0]);
        let x_w = [0.0, 2.0, 2.0, 0.0, 0.0, 0.0];
        let x_r = [0.0, 3.0, 3.0, 0.0, 0.0, 0.0];
        let (xdot, _) = erg_velocity(&cs, &x_r, &x_w, &ErgGains::uniform(1.0, 1e-3));
        assert!(xdot[1] != 0.0 && xdot[2] == 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn branch_matches_sign_pattern(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x_w0: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let cs = random_system(&mut rng, &x_w0);
            let x_r: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let x_w: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let (_, d) = erg_velocity(&cs, &x_r, &x_w, &ErgGains::default());
            let expect = Branch::classify(d.min_h_w, d.min_h_r);
            match expect {
                Branch::NormalIn => prop_assert!(matches!(d.branch, Branch::NormalIn | Branch::NormalOut)),
                b => prop_assert_eq!(d.branch, b),
            }
        }

        #[test]
        fn tangential_term_is_invisible_to_violated_rows(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x_w: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let cs = random_system(&mut rng, &x_w);
            let x_r: [f64; 6] = std::array::from_fn(|k| x_w[k] + rng.gen_range(-5.0..5.0));
            let gains = ErgGains::default();
            let (xdot, d) = erg_velocity(&cs, &x_r, &x_w, &gains);
            if d.branch == Branch::Tangent {
                let e = vecn::sub(&x_r, &x_w);
                let v_t = vecn::axpy(&xdot, -gains.alpha_r, &e);
                for k in (0..6).filter(|&k| d.h_r[k] < 0.0) {
                    prop_assert!(vecn::dot(&cs.j_r.row(k), &v_t).abs() <= 1e-9 * vecn::norm(&e).max(1.0) * gains.alpha_t);
                }
            }
        }

        #[test]
        fn normal_step_raises_worst_row(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let cs = random_system(&mut rng, &x0);
            let x_w: [f64; 6] = std::array::from_fn(|k| x0[k] + rng.gen_range(-4.0..4.0));
            let x_r: [f64; 6] = std::array::from_fn(|k| x0[k] + rng.gen_range(-4.0..4.0));
            let gains = ErgGains::uniform(1.0, 1e-4);
            let (next, d) = erg_step(&cs, &x_r, &x_w, &gains);
            if matches!(d.branch, Branch::NormalIn | Branch::NormalOut) {
                let k = vecn::argmin(&d.h_w);
                let before = d.h_w[k];
                let after = cs.eval(&next)[k];
                if d.h_r[k] != d.h_w[k] {
                    prop_assert!(after > before);
                }
            }
        }

        #[test]
        fn small_steps_preserve_feasibility(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x_w: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let cs = random_system(&mut rng, &x_w);
            let x_r: [f64; 6] = std::array::from_fn(|k| x_w[k] + rng.gen_range(-2.0..2.0));
            let mut gains = ErgGains::uniform(5.0, 1.0);
            let (xdot, d) = erg_velocity(&cs, &x_r, &x_w, &gains);
            let delta = d.min_h_w;
            let l = (0..6).map(|k| vecn::norm(&cs.j_r.row(k))).fold(0.0, f64::max);
            gains.dt = delta / (l * vecn::norm(&xdot)).max(1e-12);
            let (next, _) = erg_step(&cs, &x_r, &x_w, &gains);
            prop_assert!(vecn::min(&cs.eval(&next)) >= -1e-12);
        }

        #[test]
        fn lyapunov_decreases_while_admissible(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x_w0: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let cs = random_system(&mut rng, &x_w0);
            let x_r: [f64; 6] = std::array::from_fn(|k| x_w0[k] + rng.gen_range(-2.0..2.0));
            let gains = ErgGains::uniform(2.0, 1e-3);
            let mut x_w = x_w0;
            for _ in 0..200 {
                let (next, d) = erg_step(&cs, &x_r, &x_w, &gains);
                if d.min_h_w >= 0.0 {
                    prop_assert!(lyapunov_value(&x_r, &next, &gains.p) <= d.lyapunov * (1.0 + 1e-12));
                }
                x_w = next;
            }
        }
    }
}
