//! Scalar building blocks of the rod energies, generic over the number type
//! so that the same code yields values and exact derivatives.

use std::f64::consts::PI;

use crate::geometry::{transport, Scalar, V3};

/// Below this `‖m × m_a‖` the direction term switches to its smooth
/// small-angle form.
pub const DEGENERATE_CROSS: f64 = 1e-10;

/// Material directors `(m1, m2)` of a segment with unit tangent `t`,
/// reference director `d1` and twist angle `theta`.
pub fn material_frame<T: Scalar>(t: V3<T>, d1: V3<T>, theta: T) -> [V3<T>; 2] {
    let d2 = t.cross(d1);
    let (s, c) = theta.sin_cos();
    [d1.scale(c) + d2.scale(s), d2.scale(c) - d1.scale(s)]
}

/// Discrete curvature binormal `2 e0 × e1 / (‖e0‖‖e1‖ + e0·e1)`.
pub fn curvature_binormal<T: Scalar>(e0: V3<T>, e1: V3<T>) -> V3<T> {
    let denom = e0.norm() * e1.norm() + e0.dot(e1);
    e0.cross(e1).scale(T::from(2.0) / denom)
}

/// Material curvatures at the vertex between edges `e0` and `e1`, averaged
/// over the two adjacent material frames. `κ1` bends out of the rest plane,
/// `κ2` within it.
pub fn material_curvature<T: Scalar>(e0: V3<T>, e1: V3<T>, f0: [V3<T>; 2], f1: [V3<T>; 2]) -> [T; 2] {
    let kb = curvature_binormal(e0, e1);
    let half = T::from(0.5);
    [(kb.dot(f0[1]) + kb.dot(f1[1])) * half, -(kb.dot(f0[0]) + kb.dot(f1[0])) * half]
}

/// Signed angle about `t1` from the parallel transport of `d0` (a director of
/// the edge with tangent `t0`) to `d1`.
pub fn reference_twist<T: Scalar>(d0: V3<T>, t0: V3<T>, d1: V3<T>, t1: V3<T>) -> T {
    let u = transport(d0, t0, t1);
    u.cross(d1).dot(t1).atan2(u.dot(d1))
}

/// Angle between `m` and `m_a` via the half-angle formula,
/// `2 atan2(‖m × m_a‖, ‖m‖‖m_a‖ + m·m_a)`.
pub fn phi<T: Scalar>(m: V3<T>, m_a: V3<T>) -> T {
    let cross = m.cross(m_a);
    let c2 = cross.norm_squared();
    if c2.re() == 0.0 {
        // exactly (anti)parallel: avoid the sqrt singularity in the derivative parts
        return if m.dot(m_a).re() >= 0.0 { c2 } else { T::from(PI) + c2 };
    }
    (c2.sqrt()).atan2(m.norm() * m_a.norm() + m.dot(m_a)) * T::from(2.0)
}

/// `φ(m, m_a)²`, smooth through the parallel configuration.
///
/// Near `m ∥ m_a` the square is replaced by `sin²φ`, which agrees with `φ²`
/// up to fourth order and has finite derivatives. Near the antiparallel
/// configuration the term is treated as the constant `π²`.
pub fn direction_energy<T: Scalar>(m: V3<T>, m_a: V3<T>) -> T {
    let cross = m.cross(m_a);
    let c2 = cross.norm_squared();
    if c2.re() < DEGENERATE_CROSS * DEGENERATE_CROSS {
        if m.dot(m_a).re() >= 0.0 {
            return c2 / (m.norm_squared() * m_a.norm_squared());
        }
        return T::from(PI * PI);
    }
    let p = phi(m, m_a);
    p * p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_examples() {
        assert_eq!(phi(V3::X, V3::X), 0.0);
        assert!((phi(V3::X, V3::Y) - PI / 2.0).abs() < 1e-15);
        assert!((phi(V3::X, -V3::X) - PI).abs() < 1e-15);
    }

    #[test]
    fn phi_is_scale_and_rotation_invariant() {
        let m = V3::new(0.3, -1.2, 0.4);
        let ma = V3::new(-0.7, 0.2, 0.9);
        let q = crate::geometry::Quat::from_rotation_vector(V3::new(0.4, 1.1, -0.3));
        let p: f64 = phi(m, ma);
        assert!((phi::<f64>(m * 3.0, ma * 0.2) - p).abs() < 1e-14);
        assert!((phi(q.rotate(m), q.rotate(ma)) - p).abs() < 1e-14);
        let cos = m.dot(ma) / (m.norm() * ma.norm());
        assert!((p - cos.acos()).abs() < 1e-12);
    }

    #[test]
    fn small_angle_surrogate_matches_square() {
        let m = V3::new(1.0, 0.0, 0.0);
        let ma = V3::new(1.0, 1e-6, 0.0);
        let p: f64 = phi(m, ma);
        assert!((direction_energy::<f64>(m, ma) - p * p).abs() < 1e-20);
        let ma = V3::new(1.0, 1e-11, 0.0);
        assert!((direction_energy::<f64>(m, ma) - 1e-22).abs() < 1e-30);
    }

    #[test]
    fn planar_arc_has_in_plane_curvature() {
        let e0 = V3::new(1.0, 0.0, 0.0);
        let e1 = V3::new(1.0, 1.0, 0.0).normalized();
        let f0 = material_frame(e0, V3::Z, 0.0);
        let f1 = material_frame(e1, V3::Z, 0.0);
        let k = material_curvature(e0, e1, f0, f1);
        assert!(k[0].abs() < 1e-15);
        // turning angle π/4: κ = 2 tan(π/8)
        assert!((k[1].abs() - 2.0 * (PI / 8.0).tan()).abs() < 1e-14);
    }

    #[test]
    fn reference_twist_measures_director_rotation() {
        let t0 = V3::X;
        let t1 = V3::new(1.0, 0.3, 0.1).normalized();
        let u = transport(V3::Z, t0, t1);
        let q = crate::geometry::Quat::from_rotation_vector(t1 * 0.4);
        assert!((reference_twist(V3::Z, t0, q.rotate(u), t1) - 0.4).abs() < 1e-14);
    }
}
