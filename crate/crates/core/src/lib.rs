pub mod contact;
pub mod dynamics;
pub mod erg;
pub mod gait;
pub mod math;
mod real;
pub mod sim;
pub mod tip;

pub use real::Real;

/// Double-precision instantiations used by the simulator.
pub type Vec3d = math::Vec3<f64>;
pub type Mat3d = math::Mat3<f64>;
pub type Rot3d = math::Rot3<f64>;
pub type FullStated = dynamics::FullState<f64>;
pub type RobotParamsd = dynamics::RobotParams<f64>;
pub type GroundParamsd = contact::GroundParams<f64>;
pub type ErgGainsd = erg::ErgGains<f64>;
pub type ErgStated = erg::ErgState<f64>;
pub type TipSolverd = tip::TipSolver<f64>;
pub type ConstraintSystemd = tip::ConstraintSystem<f64>;
pub type RefState6d = tip::RefState6<f64>;
