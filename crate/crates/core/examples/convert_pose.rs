//! Converts a hand-measured Euler attitude and its uncertainty to the
//! axis-angle form used for calibration.
//!
//! cargo run --example convert_pose

use linecal::geom::{
    axis_angle_to_quaternion, euler_cov_to_axis_angle_cov, euler_to_rotation, rotation_to_axis_angle, rotation_to_euler,
    EulerZYX,
};
use nalgebra::Matrix3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = EulerZYX::from_degrees(-56.0, 0.0, -90.0);
    let r = euler_to_rotation(e)?;
    let aa = rotation_to_axis_angle(&r);
    println!("axis-angle {:.3?}, angle {:.2}°", aa.0.as_slice(), aa.angle().to_degrees());

    let q = axis_angle_to_quaternion(&aa);
    println!("quaternion ({:.4}, {:.4}, {:.4}, {:.4})", q.a, q.b, q.c, q.d);

    let back = rotation_to_euler(&r);
    println!("back to Euler {:.2?} deg", back.as_vector().map(f64::to_degrees).as_slice());

    let s = 2f64.to_radians();
    let cov = euler_cov_to_axis_angle_cov(e, &Matrix3::from_diagonal_element(s * s))?;
    let sd = cov.diagonal().map(f64::sqrt);
    println!("σ(2°, 2°, 2°) -> ({:.3}, {:.3}, {:.3}) rad", sd.x, sd.y, sd.z);
    Ok(())
}
