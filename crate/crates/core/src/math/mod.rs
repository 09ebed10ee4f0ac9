//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices, rotations,
//! dense systems up to 8×8 and nullspaces.

mod dense;
mod mat3;
mod rotation;
mod vec3;

pub use dense::{
    nullspace, rank, solve_linear, vecn, LinalgError, Lu, Matrix, Solution, MAX_DIM,
    RANK_TOLERANCE, SINGULAR_PIVOT,
};
pub use mat3::{skew, Mat3};
pub use rotation::{
    axis_angle, integrate_rotation, orthonormality_error, polar_orthogonal_factor, rot_x, rot_y,
    rot_z, Rot3,
};
pub use vec3::Vec3;
