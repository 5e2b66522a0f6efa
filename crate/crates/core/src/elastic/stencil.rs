//! Energy stencils: each term of the total energy written as a function of
//! the few generalized increments it depends on.
//!
//! Increments are taken in the local chart around the current state (see
//! [`crate::network::State::apply_step`]), so a stencil's value at zero is the
//! term's current value and its dual-number derivatives are the exact local
//! gradient and Hessian.

use nalgebra::SVector;
use num_dual::{gradient, hessian, Dual2SVec64, DualSVec64};

use super::kernels;
use crate::geometry::{rotate_by_vector, transport, Scalar, V3};
use crate::network::{RodNetwork, State, Weights};

/// A global unknown: state coordinate or design entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Var {
    X(usize),
    U(usize),
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Slots {
    pub vars: Vec<Var>,
}

impl Slots {
    fn one(&mut self, v: Var) -> usize {
        match self.vars.iter().position(|x| *x == v) {
            Some(i) => i,
            None => {
                self.vars.push(v);
                self.vars.len() - 1
            }
        }
    }

    fn triple(&mut self, first: Var) -> [usize; 3] {
        let at = |k| match first {
            Var::X(i) => Var::X(i + k),
            Var::U(i) => Var::U(i + k),
        };
        [self.one(at(0)), self.one(at(1)), self.one(at(2))]
    }
}

fn v3<T: Scalar>(d: &[T], s: [usize; 3]) -> V3<T> {
    V3::new(d[s[0]], d[s[1]], d[s[2]])
}

/// A rod vertex as a function of the local increments.
#[derive(Clone, Copy, Debug)]
pub(crate) enum PointRef {
    Joint { c: V3, s: [usize; 3] },
    Arm { c: V3, w: V3, len: f64, sc: [usize; 3], sw: [usize; 3], sl: usize },
    Free { p: V3, s: [usize; 3] },
}

impl PointRef {
    fn eval<T: Scalar>(&self, d: &[T]) -> V3<T> {
        match *self {
            PointRef::Joint { c, s } => c.lift() + v3(d, s),
            PointRef::Arm { c, w, len, sc, sw, sl } => {
                c.lift() + v3(d, sc) + rotate_by_vector(v3(d, sw), w.lift()).scale(T::from(len) + d[sl])
            }
            PointRef::Free { p, s } => p.lift() + v3(d, s),
        }
    }
}

/// The reference director and twist angle of a segment.
#[derive(Clone, Copy, Debug)]
pub(crate) enum FrameRef {
    /// Terminal segment carrying its joint's frame.
    Joint { d1: V3, sw: [usize; 3] },
    /// Interior segment: transported reference plus a twist angle.
    Free { d1: V3, t: V3, theta: f64, s: usize },
}

impl FrameRef {
    fn eval<T: Scalar>(&self, d: &[T], tangent: V3<T>) -> (V3<T>, T) {
        match *self {
            FrameRef::Joint { d1, sw } => (rotate_by_vector(v3(d, sw), d1.lift()), T::from(0.0)),
            FrameRef::Free { d1, t, theta, s } => (transport(d1.lift(), t.lift(), tangent), T::from(theta) + d[s]),
        }
    }
}

/// Anchor target entry: constant, or a design variable.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Param {
    Fixed(V3),
    Design(V3, [usize; 3]),
}

impl Param {
    fn eval<T: Scalar>(&self, d: &[T]) -> V3<T> {
        match *self {
            Param::Fixed(v) => v.lift(),
            Param::Design(v, s) => v.lift() + v3(d, s),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Term {
    Stretch { a: PointRef, b: PointRef, rest: f64 },
    Vertex { p: [PointRef; 3], f: [FrameRef; 2], kappa: [f64; 2], twist: f64, length: f64 },
    Anchor { a: PointRef, b: PointRef, frame: FrameRef, beta: f64, position: Param, direction: Param },
    ShapePoint { p: PointRef, q: V3 },
    ShapeDirection { a: PointRef, b: PointRef, frame: FrameRef, n: V3, scale: f64 },
}

#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub vars: Vec<Var>,
    pub term: Term,
}

fn segment_m1<T: Scalar>(d: &[T], a: &PointRef, b: &PointRef, frame: &FrameRef) -> V3<T> {
    let e = b.eval(d) - a.eval(d);
    let t = e.scale(e.norm().recip());
    let (d1, theta) = frame.eval(d, t);
    kernels::material_frame(t, d1, theta)[0]
}

impl Term {
    /// Square-root energy terms; returns the values and how many are used.
    pub fn residuals<T: Scalar>(&self, d: &[T], w: &Weights) -> ([T; 4], usize) {
        let z = T::from(0.0);
        match self {
            Term::Stretch { a, b, rest } => {
                let len = (b.eval(d) - a.eval(d)).norm();
                let k = (0.5 * w.stretch * rest).sqrt();
                ([(len / *rest - 1.0) * k, z, z, z], 1)
            }
            Term::Vertex { p, f, kappa, twist, length } => {
                let x = [p[0].eval(d), p[1].eval(d), p[2].eval(d)];
                let (e0, e1) = (x[1] - x[0], x[2] - x[1]);
                let t0 = e0.scale(e0.norm().recip());
                let t1 = e1.scale(e1.norm().recip());
                let (d0, th0) = f[0].eval(d, t0);
                let (d1, th1) = f[1].eval(d, t1);
                let k = kernels::material_curvature(e0, e1, kernels::material_frame(t0, d0, th0), kernels::material_frame(t1, d1, th1));
                let tau = th1 - th0 + kernels::reference_twist(d0, t0, d1, t1);
                let s = |b: f64| (b / (2.0 * length)).sqrt();
                (
                    [
                        (k[0] - kappa[0]) * s(w.bend_normal),
                        (k[1] - kappa[1]) * s(w.bend_in_plane),
                        (tau - *twist) * s(w.twist),
                        z,
                    ],
                    3,
                )
            }
            Term::Anchor { a, b, frame, beta, position, direction } => {
                let p = a.eval(d).scale(T::from(1.0 - beta)) + b.eval(d).scale(T::from(*beta));
                let r = p - position.eval(d);
                let m = segment_m1(d, a, b, frame);
                ([r.x, r.y, r.z, kernels::phi(m, direction.eval(d))], 4)
            }
            Term::ShapePoint { p, q } => {
                let r = p.eval(d) - q.lift();
                ([r.x, r.y, r.z, z], 3)
            }
            Term::ShapeDirection { a, b, frame, n, scale } => {
                let m = segment_m1(d, a, b, frame);
                ([(T::from(1.0) - m.dot(n.lift())) * *scale, z, z, z], 1)
            }
        }
    }

    pub fn energy<T: Scalar>(&self, d: &[T], w: &Weights) -> T {
        match self {
            Term::Anchor { a, b, frame, beta, position, direction } => {
                let p = a.eval(d).scale(T::from(1.0 - beta)) + b.eval(d).scale(T::from(*beta));
                let m = segment_m1(d, a, b, frame);
                (p - position.eval(d)).norm_squared() + kernels::direction_energy(m, direction.eval(d))
            }
            _ => {
                let (r, n) = self.residuals(d, w);
                r[..n].iter().fold(T::from(0.0), |acc, v| acc + *v * *v)
            }
        }
    }
}

/// Value, gradient and dense Hessian of one stencil in its local variables.
#[derive(Clone, Debug)]
pub(crate) struct LocalDerivs {
    pub energy: f64,
    pub grad: Vec<f64>,
    /// Row-major `n × n`.
    pub hess: Vec<f64>,
}

fn run<const N: usize>(st: &Stencil, w: &Weights, at: &[f64]) -> LocalDerivs {
    let n = st.vars.len();
    let mut x = SVector::<f64, N>::zeros();
    x.as_mut_slice()[..n].copy_from_slice(at);
    let (e, g, h) = hessian(|v: SVector<Dual2SVec64<N>, N>| st.term.energy(v.as_slice(), w), &x);
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            hess[i * n + j] = h[(i, j)];
        }
    }
    LocalDerivs { energy: e, grad: g.as_slice()[..n].to_vec(), hess }
}

fn run_gradient<const N: usize>(st: &Stencil, w: &Weights, at: &[f64]) -> LocalDerivs {
    let n = st.vars.len();
    let mut x = SVector::<f64, N>::zeros();
    x.as_mut_slice()[..n].copy_from_slice(at);
    let (e, g) = gradient(|v: SVector<DualSVec64<N>, N>| st.term.energy(v.as_slice(), w), &x);
    LocalDerivs { energy: e, grad: g.as_slice()[..n].to_vec(), hess: Vec::new() }
}

impl Stencil {
    pub fn value(&self, w: &Weights) -> f64 {
        self.term.energy(&vec![0.0; self.vars.len()], w)
    }

    pub fn residuals(&self, w: &Weights) -> Vec<f64> {
        let (r, n) = self.term.residuals(&vec![0.0; self.vars.len()], w);
        r[..n].to_vec()
    }

    pub fn derivatives(&self, w: &Weights) -> LocalDerivs {
        self.derivatives_at(w, &vec![0.0; self.vars.len()])
    }

    /// Derivatives at a nonzero increment `at` of the same chart.
    pub fn derivatives_at(&self, w: &Weights, at: &[f64]) -> LocalDerivs {
        match self.vars.len() {
            0..=4 => run::<4>(self, w, at),
            5..=8 => run::<8>(self, w, at),
            9..=12 => run::<12>(self, w, at),
            13..=16 => run::<16>(self, w, at),
            17..=20 => run::<20>(self, w, at),
            n => unreachable!("stencil with {n} variables"),
        }
    }

    /// Value and gradient only, at increment `at`.
    pub fn gradient_at(&self, w: &Weights, at: &[f64]) -> LocalDerivs {
        match self.vars.len() {
            0..=4 => run_gradient::<4>(self, w, at),
            5..=8 => run_gradient::<8>(self, w, at),
            9..=12 => run_gradient::<12>(self, w, at),
            13..=16 => run_gradient::<16>(self, w, at),
            17..=20 => run_gradient::<20>(self, w, at),
            n => unreachable!("stencil with {n} variables"),
        }
    }
}

/// Builds stencils against the current state.
pub(crate) struct Builder<'a> {
    pub net: &'a RodNetwork,
    pub state: &'a State,
}

impl Builder<'_> {
    fn point(&self, slots: &mut Slots, rod: usize, k: usize) -> PointRef {
        let net = self.net;
        let r = &net.rods[rod];
        let n = r.segment_count();
        let joint = |slots: &mut Slots, j: usize| PointRef::Joint {
            c: self.state.joints[j].position,
            s: slots.triple(Var::X(net.dofs.joint_position(j))),
        };
        let arm = |slots: &mut Slots, j: usize, at_end: bool| PointRef::Arm {
            c: self.state.joints[j].position,
            w: self.state.arm_direction(net, rod, at_end),
            len: self.state.rods[rod].arm_lengths[usize::from(at_end)],
            sc: slots.triple(Var::X(net.dofs.joint_position(j))),
            sw: slots.triple(Var::X(net.dofs.joint_rotation(j))),
            sl: slots.one(Var::X(net.dofs.arm_length(rod, at_end))),
        };
        match k {
            0 => joint(slots, r.start_joint),
            1 => arm(slots, r.start_joint, false),
            k if k == n => joint(slots, r.end_joint),
            k if k == n - 1 => arm(slots, r.end_joint, true),
            k => PointRef::Free { p: self.state.rods[rod].free_points[k - 2], s: slots.triple(Var::X(net.dofs.free_vertex(rod, k))) },
        }
    }

    fn frame(&self, slots: &mut Slots, rod: usize, j: usize) -> FrameRef {
        let net = self.net;
        let r = &net.rods[rod];
        let n = r.segment_count();
        if j == 0 || j == n - 1 {
            let joint = if j == 0 { r.start_joint } else { r.end_joint };
            FrameRef::Joint { d1: self.state.joints[joint].normal(), sw: slots.triple(Var::X(net.dofs.joint_rotation(joint))) }
        } else {
            let t = (self.state.point(net, rod, j + 1) - self.state.point(net, rod, j)).normalized();
            let rs = &self.state.rods[rod];
            FrameRef::Free { d1: rs.reference_d1[j - 1], t, theta: rs.angles[j - 1], s: slots.one(Var::X(net.dofs.angle(net, rod, j))) }
        }
    }

    pub fn stretch(&self, rod: usize, j: usize) -> Stencil {
        let mut s = Slots::default();
        let a = self.point(&mut s, rod, j);
        let b = self.point(&mut s, rod, j + 1);
        Stencil { vars: s.vars, term: Term::Stretch { a, b, rest: self.net.rods[rod].rest_lengths[j] } }
    }

    pub fn vertex(&self, rod: usize, i: usize) -> Stencil {
        let mut s = Slots::default();
        let p = [self.point(&mut s, rod, i - 1), self.point(&mut s, rod, i), self.point(&mut s, rod, i + 1)];
        let f = [self.frame(&mut s, rod, i - 1), self.frame(&mut s, rod, i)];
        let r = &self.net.rods[rod];
        Stencil {
            vars: s.vars,
            term: Term::Vertex { p, f, kappa: r.rest_kappa[i - 1], twist: r.rest_twist[i - 1], length: r.vertex_length(i) },
        }
    }

    /// Anchor term; with `design = Some(k)` its target entries are the design
    /// variables `6k..6k+6`.
    pub fn anchor(&self, anchor: &crate::network::Anchor, design: Option<usize>) -> Stencil {
        let mut s = Slots::default();
        let a = self.point(&mut s, anchor.rod, anchor.segment);
        let b = self.point(&mut s, anchor.rod, anchor.segment + 1);
        let frame = self.frame(&mut s, anchor.rod, anchor.segment);
        let (position, direction) = match design {
            Some(k) => (
                Param::Design(anchor.position, s.triple(Var::U(6 * k))),
                Param::Design(anchor.direction, s.triple(Var::U(6 * k + 3))),
            ),
            None => (Param::Fixed(anchor.position), Param::Fixed(anchor.direction)),
        };
        Stencil { vars: s.vars, term: Term::Anchor { a, b, frame, beta: anchor.beta, position, direction } }
    }

    /// Position mismatch `p - q` of vertex `k` of a rod.
    pub fn shape_point(&self, rod: usize, k: usize, q: V3) -> Stencil {
        let mut s = Slots::default();
        let p = self.point(&mut s, rod, k);
        Stencil { vars: s.vars, term: Term::ShapePoint { p, q } }
    }

    /// Direction mismatch `scale (1 - ⟨n, m⟩)` of one segment.
    pub fn shape_direction(&self, rod: usize, j: usize, n: V3, scale: f64) -> Stencil {
        let mut s = Slots::default();
        let a = self.point(&mut s, rod, j);
        let b = self.point(&mut s, rod, j + 1);
        let frame = self.frame(&mut s, rod, j);
        Stencil { vars: s.vars, term: Term::ShapeDirection { a, b, frame, n, scale } }
    }
}
