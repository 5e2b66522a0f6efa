//! Inverse design of anchor targets.
//!
//! The shape objective compares every vertex position and every segment's
//! first material director with a target:
//! `E_shape = ‖q - p‖² + w ‖1 - ⟨n, m⟩‖²`. Its gradient with respect to the
//! anchor targets `u = (p_a, m_a)` follows from the equilibrium condition
//! `∂E_rod/∂x = 0`: with `H = ∂²E_rod/∂x²` and `G = ∂²E_rod/∂x∂u`,
//! `dE_shape/du = λᵀ G` where `H λ = -∂E_shape/∂xᵀ` (adjoint form), or
//! equivalently `∂E_shape/∂x · (-H⁻¹ G)` (direct form).

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elastic::stencil::{Builder, Stencil};
use crate::elastic::assembly::scatter;
use crate::elastic::assemble_derivatives;
use crate::equilibrium::{solve_equilibrium, SolveSettings};
use crate::error::{Error, Result};
use crate::geometry::V3;
use crate::linalg::{diagonal_scale, factor_exact, Factor, SymmetricSolver};
use crate::network::{Anchor, MaterialParams, RodNetwork, State};

/// Target vertex positions (in [`State::vertices`] order) and target first
/// material directors (in [`State::material_directions`] order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeTarget {
    pub positions: Vec<V3>,
    pub directions: Vec<V3>,
    /// Weight of the direction term.
    #[serde(default = "unit")]
    pub direction_weight: f64,
}

fn unit() -> f64 {
    1.0
}

impl ShapeTarget {
    /// The shape of `state` itself.
    pub fn from_state(network: &RodNetwork, state: &State) -> Self {
        Self { positions: state.vertices(network), directions: state.material_directions(network), direction_weight: 1.0 }
    }

    pub fn validate(&self, network: &RodNetwork) -> Result<()> {
        if self.positions.len() != network.vertex_count() || self.directions.len() != network.segment_count() {
            return Err(Error::invalid(format!(
                "shape target has {} positions and {} directions; the network has {} vertices and {} segments",
                self.positions.len(),
                self.directions.len(),
                network.vertex_count(),
                network.segment_count()
            )));
        }
        if !(self.direction_weight >= 0.0) {
            return Err(Error::invalid("direction weight must be non-negative"));
        }
        Ok(())
    }
}

/// `‖q - p‖² + w ‖1 - ⟨n, m⟩‖²` summed over all vertices and segments.
pub fn eval_e_shape(network: &RodNetwork, target: &ShapeTarget, state: &State) -> Result<f64> {
    target.validate(network)?;
    let p: f64 = state.vertices(network).iter().zip(&target.positions).map(|(a, b)| (*a - *b).norm_squared()).sum();
    let n: f64 = state.material_directions(network).iter().zip(&target.directions).map(|(m, n)| (1.0 - m.dot(*n)).powi(2)).sum();
    Ok(p + target.direction_weight * n)
}

/// Mean distance between state vertices and target positions.
pub fn mean_vertex_distance(network: &RodNetwork, target: &ShapeTarget, state: &State) -> Result<f64> {
    target.validate(network)?;
    let v = state.vertices(network);
    Ok(v.iter().zip(&target.positions).map(|(a, b)| (*a - *b).norm()).sum::<f64>() / v.len() as f64)
}

/// Shape stencils in the order of [`State::vertices`] then
/// [`State::material_directions`].
fn shape_stencils(network: &RodNetwork, state: &State, target: &ShapeTarget) -> Vec<Stencil> {
    let b = Builder { net: network, state };
    let mut out = Vec::with_capacity(target.positions.len() + target.directions.len());
    let mut q = target.positions.iter();
    for joint in &network.joints {
        let end = joint.ends[0];
        let k = if end.at_end { network.rods[end.rod].segment_count() } else { 0 };
        out.push(b.shape_point(end.rod, k, *q.next().expect("validated length")));
    }
    for (r, rod) in network.rods.iter().enumerate() {
        for k in 1..rod.segment_count() {
            out.push(b.shape_point(r, k, *q.next().expect("validated length")));
        }
    }
    let scale = target.direction_weight.sqrt();
    let mut n = target.directions.iter();
    for (r, rod) in network.rods.iter().enumerate() {
        for j in 0..rod.segment_count() {
            out.push(b.shape_direction(r, j, *n.next().expect("validated length"), scale));
        }
    }
    out
}

/// `E_shape` and `∂E_shape/∂x` in the local chart of `state`.
pub fn shape_state_gradient(network: &RodNetwork, target: &ShapeTarget, state: &State) -> Result<(f64, Vec<f64>)> {
    target.validate(network)?;
    state.check(network)?;
    let terms = shape_stencils(network, state, target);
    let w = MaterialParams::new(1.0, 1.0, 1.0, 1.0, 1.0).weights();
    let local: Vec<_> = terms.par_iter().map(|s| s.gradient_at(&w, &vec![0.0; s.vars.len()])).collect();
    let out = scatter(&terms, &local, network.dof_count(), 0, false);
    Ok((out.energy, out.gradient))
}

/// Sensitivity of `E_shape` to the anchor targets at an equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeGradient {
    pub e_shape: f64,
    /// Adjoint-method gradient over `u` (six entries per anchor).
    pub gradient: Vec<f64>,
    /// Force norm `‖∂E_rod/∂x‖` at the state used.
    pub force_norm: f64,
    /// Set when `H` had to be shifted to be factored; the gradient is then
    /// only approximate.
    pub regularized: bool,
}

struct Sensitivity {
    e_shape: f64,
    force_norm: f64,
    dshape_dx: Vec<f64>,
    mixed: Vec<(usize, usize, f64)>,
    nu: usize,
    factor: Factor,
    regularized: bool,
}

fn sensitivity(
    network: &RodNetwork,
    params: &MaterialParams,
    state: &State,
    anchors: &[Anchor],
    target: &ShapeTarget,
    grad_tol: f64,
) -> Result<Sensitivity> {
    let d = assemble_derivatives(network, state, params, anchors, true)?;
    let force_norm = d.gradient_norm();
    if force_norm > 10.0 * grad_tol {
        return Err(Error::NotConverged { iterations: 0, force_norm });
    }
    let (e_shape, dshape_dx) = shape_state_gradient(network, target, state)?;
    let n = network.dof_count();
    let mut solver = SymmetricSolver::new();
    let (factor, regularized) = match factor_exact(&mut solver, n, &d.hessian) {
        Ok((f, _)) => (f, false),
        Err(_) => {
            log::warn!("equilibrium Hessian is singular; using a shifted factorization");
            let floor = 1e-8 * diagonal_scale(n, &d.hessian);
            (solver.shifted_cholesky(n, &d.hessian, floor, floor)?, true)
        }
    };
    Ok(Sensitivity { e_shape, force_norm, dshape_dx, mixed: d.mixed, nu: 6 * anchors.len(), factor, regularized })
}

impl Sensitivity {
    fn adjoint(&self) -> Vec<f64> {
        let rhs: Vec<f64> = self.dshape_dx.iter().map(|g| -g).collect();
        let lambda = self.factor.solve(&rhs);
        let mut out = vec![0.0; self.nu];
        for &(i, j, v) in &self.mixed {
            out[j] += lambda[i] * v;
        }
        out
    }

    fn direct(&self) -> Vec<f64> {
        let n = self.dshape_dx.len();
        let mut cols = vec![vec![0.0; n]; self.nu];
        for &(i, j, v) in &self.mixed {
            cols[j][i] -= v;
        }
        cols.iter()
            .map(|c| {
                let dx = self.factor.solve(c);
                self.dshape_dx.iter().zip(&dx).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Adjoint gradient of `E_shape` over the anchor targets.
///
/// `state` must be an equilibrium for `anchors`: states whose force norm
/// exceeds `10 grad_tol` are refused, since the sensitivity relation
/// assumes vanishing forces.
pub fn shape_gradient(
    network: &RodNetwork,
    params: &MaterialParams,
    state: &State,
    anchors: &[Anchor],
    target: &ShapeTarget,
    grad_tol: f64,
) -> Result<ShapeGradient> {
    let s = sensitivity(network, params, state, anchors, target, grad_tol)?;
    Ok(ShapeGradient { e_shape: s.e_shape, gradient: s.adjoint(), force_norm: s.force_norm, regularized: s.regularized })
}

/// Direct-method gradient: `∂E_shape/∂x · dx/du` with `dx/du = -H⁻¹ G`,
/// solved column by column with the same factorization as the adjoint.
pub fn shape_gradient_direct(
    network: &RodNetwork,
    params: &MaterialParams,
    state: &State,
    anchors: &[Anchor],
    target: &ShapeTarget,
    grad_tol: f64,
) -> Result<(ShapeGradient, Vec<f64>)> {
    let s = sensitivity(network, params, state, anchors, target, grad_tol)?;
    let g = ShapeGradient { e_shape: s.e_shape, gradient: s.adjoint(), force_norm: s.force_norm, regularized: s.regularized };
    Ok((g, s.direct()))
}

/// Concatenated design vector of all anchors.
pub fn design_vector(anchors: &[Anchor]) -> Vec<f64> {
    anchors.iter().flat_map(|a| a.design()).collect()
}

/// Anchors with their targets replaced from `u`; attachment sites are kept.
pub fn with_design(anchors: &[Anchor], u: &[f64]) -> Vec<Anchor> {
    anchors.iter().enumerate().map(|(k, a)| a.with_design(&u[6 * k..6 * k + 6])).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeOptSettings {
    pub solve: SolveSettings,
    pub max_iters: usize,
    /// Stop when `E_shape` falls below this value.
    pub objective_tol: f64,
    /// Stop when the design gradient norm falls below this value.
    pub gradient_tol: f64,
    pub initial_radius: f64,
    pub min_radius: f64,
    pub max_radius: f64,
}

impl Default for ShapeOptSettings {
    fn default() -> Self {
        Self {
            solve: SolveSettings::default(),
            max_iters: 100,
            objective_tol: 0.0,
            gradient_tol: 1e-10,
            initial_radius: 1.0,
            min_radius: 1e-10,
            max_radius: 100.0,
        }
    }
}

/// One optimizer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeIteration {
    pub iteration: usize,
    /// Best `E_shape` so far.
    pub e_shape: f64,
    pub gradient_norm: f64,
    pub radius: f64,
    pub accepted: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct ShapeOptResult {
    pub anchors: Vec<Anchor>,
    pub state: State,
    pub e_shape: f64,
    pub accepted_steps: usize,
    /// Entry 0 is the starting point.
    pub history: Vec<ShapeIteration>,
}

fn renormalize_directions(u: &mut [f64]) {
    for k in 0..u.len() / 6 {
        let m = &mut u[6 * k + 3..6 * k + 6];
        let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        m.iter_mut().for_each(|x| *x /= n);
    }
}

struct Point {
    u: Vec<f64>,
    state: State,
    e: f64,
    g: DVector<f64>,
}

fn evaluate(
    network: &RodNetwork,
    params: &MaterialParams,
    anchors0: &[Anchor],
    target: &ShapeTarget,
    u: Vec<f64>,
    start: &State,
    settings: &ShapeOptSettings,
) -> Result<Option<Point>> {
    let anchors = with_design(anchors0, &u);
    let (state, rep) = solve_equilibrium(network, params, &anchors, start, &settings.solve)?;
    if !rep.converged {
        return Ok(None);
    }
    match shape_gradient(network, params, &state, &anchors, target, rep.grad_tol) {
        Ok(g) => Ok(Some(Point { u, state, e: g.e_shape, g: DVector::from_vec(g.gradient) })),
        Err(Error::NotConverged { .. }) | Err(Error::LinearSolve(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trust-region quasi-Newton (BFGS) descent of `E_shape` over the anchor
/// targets, starting from the equilibrium reached from `x0` under
/// `anchors0`. Every trial re-solves equilibrium warm-started from the last
/// accepted state; failed solves shrink the trust region.
pub fn optimize_anchors(
    network: &RodNetwork,
    params: &MaterialParams,
    anchors0: &[Anchor],
    target: &ShapeTarget,
    x0: &State,
    settings: &ShapeOptSettings,
) -> Result<ShapeOptResult> {
    target.validate(network)?;
    if anchors0.is_empty() {
        return Err(Error::invalid("shape optimization needs at least one anchor"));
    }
    let started = Instant::now();
    let mut u0 = design_vector(anchors0);
    renormalize_directions(&mut u0);
    let mut cur = evaluate(network, params, anchors0, target, u0, x0, settings)?
        .ok_or_else(|| Error::Optimizer("equilibrium at the initial anchors failed".into()))?;
    let nu = cur.u.len();
    let mut b = DMatrix::<f64>::identity(nu, nu);
    let mut scaled = false;
    let mut radius = settings.initial_radius;
    let mut accepted_steps = 0;
    let mut history = vec![ShapeIteration {
        iteration: 0,
        e_shape: cur.e,
        gradient_norm: cur.g.norm(),
        radius,
        accepted: false,
        seconds: 0.0,
    }];

    for it in 1..=settings.max_iters {
        if cur.e <= settings.objective_tol || cur.g.norm() <= settings.gradient_tol || radius < settings.min_radius {
            break;
        }
        let mut p = match b.clone().cholesky() {
            Some(c) => -c.solve(&cur.g),
            None => {
                b = DMatrix::identity(nu, nu);
                -cur.g.clone()
            }
        };
        if !scaled {
            // first step: steepest descent of trust-region length
            p = -&cur.g * (radius / cur.g.norm());
        }
        if p.norm() > radius {
            p *= radius / p.norm();
        }
        let predicted = -(cur.g.dot(&p) + 0.5 * p.dot(&(&b * &p)));
        let trial_u: Vec<f64> = cur.u.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
        let trial = evaluate(network, params, anchors0, target, trial_u, &cur.state, settings)?;
        let mut accepted = false;
        match trial {
            Some(t) if t.e < cur.e => {
                let actual = cur.e - t.e;
                let rho = if predicted > 0.0 { actual / predicted } else { 0.0 };
                let s = p.clone();
                let y = &t.g - &cur.g;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    if !scaled {
                        b = DMatrix::identity(nu, nu) * (y.dot(&y) / sy);
                        scaled = true;
                    }
                    let bs = &b * &s;
                    b += &y * y.transpose() / sy - &bs * bs.transpose() / s.dot(&bs);
                }
                if rho > 0.75 && p.norm() > 0.99 * radius {
                    radius = (2.0 * radius).min(settings.max_radius);
                } else if rho < 0.25 {
                    radius *= 0.5;
                }
                let mut u = t.u;
                renormalize_directions(&mut u);
                cur = Point { u, ..t };
                accepted = true;
                accepted_steps += 1;
            }
            _ => radius *= 0.25,
        }
        history.push(ShapeIteration {
            iteration: it,
            e_shape: cur.e,
            gradient_norm: cur.g.norm(),
            radius,
            accepted,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    Ok(ShapeOptResult { anchors: with_design(anchors0, &cur.u), state: cur.state, e_shape: cur.e, accepted_steps, history })
}
