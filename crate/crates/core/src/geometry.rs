//! Small fixed-size vector algebra shared by the f64 state code and the
//! dual-number derivative kernels.
//!
//! `V3<T>` is generic over any [`Scalar`], which covers plain `f64` as well as
//! the forward-mode second-order dual numbers used for per-stencil Hessians.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use num_dual::DualNum;
use serde::{Deserialize, Serialize};

/// Number type usable inside energy kernels.
pub trait Scalar: DualNum<Primitive = f64> + Copy {}
impl<T: DualNum<Primitive = f64> + Copy> Scalar for T {}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct V3<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl From<[f64; 3]> for V3 {
    fn from(a: [f64; 3]) -> Self {
        V3::new(a[0], a[1], a[2])
    }
}

impl From<V3> for [f64; 3] {
    fn from(v: V3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Serialize for V3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for V3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[f64; 3]>::deserialize(d).map(V3::from)
    }
}

impl<T: Copy> V3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn map<U: Copy>(self, f: impl Fn(T) -> U) -> V3<U> {
        V3::new(f(self.x), f(self.y), f(self.z))
    }
}

impl V3 {
    pub const ZERO: V3 = V3::new(0.0, 0.0, 0.0);
    pub const X: V3 = V3::new(1.0, 0.0, 0.0);
    pub const Y: V3 = V3::new(0.0, 1.0, 0.0);
    pub const Z: V3 = V3::new(0.0, 0.0, 1.0);

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Lifts a constant into the scalar type of a kernel.
    pub fn lift<T: Scalar>(self) -> V3<T> {
        self.map(T::from)
    }

    pub fn normalized(self) -> V3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Outer product `self * rhsᵀ`.
    pub fn outer(self, rhs: V3) -> M3 {
        let a = self.to_array();
        let b = rhs.to_array();
        M3(std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j])))
    }

    /// Some unit vector perpendicular to `self` (deterministic).
    pub fn any_perpendicular(self) -> V3 {
        let axis = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            V3::X
        } else if self.y.abs() <= self.z.abs() {
            V3::Y
        } else {
            V3::Z
        };
        self.cross(axis).normalized()
    }
}

impl<T: Scalar> V3<T> {
    pub fn zero() -> Self {
        let z = T::from(0.0);
        V3::new(z, z, z)
    }

    pub fn dot(self, o: V3<T>) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: V3<T>) -> V3<T> {
        V3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, s: T) -> V3<T> {
        V3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn re(self) -> V3 {
        V3::new(self.x.re(), self.y.re(), self.z.re())
    }
}

impl<T: Scalar> Add for V3<T> {
    type Output = V3<T>;
    fn add(self, o: V3<T>) -> V3<T> {
        V3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for V3<T> {
    type Output = V3<T>;
    fn sub(self, o: V3<T>) -> V3<T> {
        V3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for V3<T> {
    type Output = V3<T>;
    fn neg(self) -> V3<T> {
        V3::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<f64> for V3<T> {
    type Output = V3<T>;
    fn mul(self, s: f64) -> V3<T> {
        V3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> AddAssign for V3<T> {
    fn add_assign(&mut self, o: V3<T>) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for V3<T> {
    fn sub_assign(&mut self, o: V3<T>) {
        *self = *self - o;
    }
}

impl<T> Index<usize> for V3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("V3 index {i} out of range"),
        }
    }
}

/// Parallel transport of `v` from unit tangent `from` to unit tangent `to`
/// (rotation about `from × to` taking `from` onto `to`).
///
/// Exact for vectors perpendicular to `from`; singular when `to = -from`.
pub fn transport<T: Scalar>(v: V3<T>, from: V3<T>, to: V3<T>) -> V3<T> {
    let denom = T::from(1.0) + from.dot(to);
    v - (from + to).scale(v.dot(to) / denom)
}

/// Rotation matrix of a rotation vector applied to `v` (Rodrigues), written so
/// that derivatives stay finite at the zero rotation.
pub fn rotate_by_vector<T: Scalar>(omega: V3<T>, v: V3<T>) -> V3<T> {
    let a2 = omega.norm_squared();
    // sin(a)/a and (1-cos a)/a², series below a small angle
    let (s1, s2) = if a2.re() < 1e-6 {
        let one = T::from(1.0);
        (
            one - a2 / 6.0 + a2 * a2 / 120.0 - a2 * a2 * a2 / 5040.0,
            one / 2.0 - a2 / 24.0 + a2 * a2 / 720.0 - a2 * a2 * a2 / 40320.0,
        )
    } else {
        let a = a2.sqrt();
        (a.sin() / a, (T::from(1.0) - a.cos()) / a2)
    };
    let wxv = omega.cross(v);
    v + wxv.scale(s1) + omega.cross(wxv).scale(s2)
}

/// Dense 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct M3(pub [[f64; 3]; 3]);

impl M3 {
    pub const ZERO: M3 = M3([[0.0; 3]; 3]);
    pub const IDENTITY: M3 = M3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn scaled_identity(s: f64) -> M3 {
        M3::IDENTITY * s
    }

    /// Cross-product matrix: `skew(a) * b = a × b`.
    pub fn skew(a: V3) -> M3 {
        M3([[0.0, -a.z, a.y], [a.z, 0.0, -a.x], [-a.y, a.x, 0.0]])
    }

    pub fn transpose(self) -> M3 {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn mul_vec(self, v: V3) -> V3 {
        let r = |i: usize| self.0[i][0] * v.x + self.0[i][1] * v.y + self.0[i][2] * v.z;
        V3::new(r(0), r(1), r(2))
    }

    /// `vᵀ M` as a vector.
    pub fn left_mul_vec(self, v: V3) -> V3 {
        self.transpose().mul_vec(v)
    }

    pub fn matmul(self, o: M3) -> M3 {
        M3(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum())
        }))
    }

    pub fn symmetric_part(self) -> M3 {
        (self + self.transpose()) * 0.5
    }

    pub fn max_abs(self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn col(self, j: usize) -> V3 {
        V3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn from_cols(a: V3, b: V3, c: V3) -> M3 {
        M3([[a.x, b.x, c.x], [a.y, b.y, c.y], [a.z, b.z, c.z]])
    }
}

impl Add for M3 {
    type Output = M3;
    fn add(self, o: M3) -> M3 {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + o.0[i][j])))
    }
}

impl Sub for M3 {
    type Output = M3;
    fn sub(self, o: M3) -> M3 {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - o.0[i][j])))
    }
}

impl Mul<f64> for M3 {
    type Output = M3;
    fn mul(self, s: f64) -> M3 {
        M3(self.0.map(|r| r.map(|v| v * s)))
    }
}

impl Neg for M3 {
    type Output = M3;
    fn neg(self) -> M3 {
        self * -1.0
    }
}

/// Unit quaternion `w + (x, y, z)` used for connection orientations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub v: V3,
}

impl From<[f64; 4]> for Quat {
    fn from(a: [f64; 4]) -> Self {
        Quat { w: a[0], v: V3::new(a[1], a[2], a[3]) }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.v.x, q.v.y, q.v.z]
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, v: V3::ZERO };

    /// Quaternion of the rotation vector `omega` (axis × angle).
    pub fn from_rotation_vector(omega: V3) -> Quat {
        let half = 0.5 * omega.norm();
        let s = if half < 1e-8 { 0.5 * (1.0 - half * half / 6.0) } else { half.sin() / omega.norm() };
        Quat { w: half.cos(), v: omega * s }.normalized()
    }

    pub fn mul(self, o: Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.v.dot(o.v),
            v: o.v * self.w + self.v * o.w + self.v.cross(o.v),
        }
    }

    pub fn normalized(self) -> Quat {
        let n = (self.w * self.w + self.v.norm_squared()).sqrt();
        Quat { w: self.w / n, v: self.v * (1.0 / n) }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.v.norm_squared()).sqrt()
    }

    pub fn rotate(self, p: V3) -> V3 {
        let t = self.v.cross(p) * 2.0;
        p + t * self.w + self.v.cross(t)
    }

    pub fn matrix(self) -> M3 {
        M3::from_cols(self.rotate(V3::X), self.rotate(V3::Y), self.rotate(V3::Z))
    }
}
