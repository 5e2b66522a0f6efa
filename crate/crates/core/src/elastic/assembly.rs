//! Residual vector, total energy and assembled derivatives.
//!
//! Residual order: rods by index, each with all stretch terms, then the two
//! bending curvatures of every interior vertex, then every twist term;
//! afterwards anchors by index, each with three position entries followed by
//! the direction angle. The energy is the squared norm of this vector.

use rayon::prelude::*;

use super::stencil::{Builder, LocalDerivs, Stencil, Var};
use crate::error::{Error, Result};
use crate::geometry::V3;
use crate::network::{Anchor, MaterialParams, RodNetwork, State, Weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    Stretch { rod: usize, segment: usize },
    /// `component` 0 bends out of the rest plane, 1 within it.
    Bend { rod: usize, vertex: usize, component: u8 },
    Twist { rod: usize, vertex: usize },
    AnchorPosition { anchor: usize, axis: u8 },
    AnchorDirection { anchor: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub values: Vec<f64>,
    pub kinds: Vec<ResidualKind>,
}

impl Residual {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|r| r * r).sum()
    }
}

/// Gradient and second derivatives of the total energy.
///
/// `hessian` holds `∂²E/∂x∂x` as unsorted `(row, col, value)` entries of both
/// triangles; repeated positions must be summed. `mixed` holds `∂²E/∂x∂u` as
/// `(state index, design index, value)`.
#[derive(Clone, Debug, Default)]
pub struct DerivativeBundle {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<(usize, usize, f64)>,
    pub design_gradient: Vec<f64>,
    pub mixed: Vec<(usize, usize, f64)>,
}

impl DerivativeBundle {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn hessian_dense(&self) -> Vec<Vec<f64>> {
        let n = self.gradient.len();
        let mut h = vec![vec![0.0; n]; n];
        for &(i, j, v) in &self.hessian {
            h[i][j] += v;
        }
        h
    }

    pub fn mixed_dense(&self) -> Vec<Vec<f64>> {
        let mut h = vec![vec![0.0; self.design_gradient.len()]; self.gradient.len()];
        for &(i, j, v) in &self.mixed {
            h[i][j] += v;
        }
        h
    }
}

fn check(network: &RodNetwork, state: &State, params: &MaterialParams, anchors: &[Anchor]) -> Result<Weights> {
    params.validate()?;
    state.check(network)?;
    for a in anchors {
        a.validate(network)?;
    }
    Ok(params.weights())
}

/// Stretch, vertex and (optionally design-dependent) anchor stencils in
/// residual order.
pub(crate) fn stencils(network: &RodNetwork, state: &State, anchors: &[Anchor], design: bool) -> Vec<Stencil> {
    let b = Builder { net: network, state };
    let mut out = Vec::new();
    for (r, rod) in network.rods.iter().enumerate() {
        let n = rod.segment_count();
        out.extend((0..n).map(|j| b.stretch(r, j)));
        out.extend((1..n).map(|i| b.vertex(r, i)));
    }
    out.extend(anchors.iter().enumerate().map(|(k, a)| b.anchor(a, design.then_some(k))));
    out
}

/// Sum of all term energies, evaluated directly in `f64`.
pub fn total_energy(network: &RodNetwork, state: &State, params: &MaterialParams, anchors: &[Anchor]) -> Result<f64> {
    let w = check(network, state, params, anchors)?;
    let terms = stencils(network, state, anchors, false);
    let values: Vec<f64> = terms.par_iter().map(|s| s.value(&w)).collect();
    Ok(values.iter().sum())
}

/// `E_a = ‖p - p_a‖² + φ(m, m_a)²` for a single anchor.
pub fn eval_anchor_energy(network: &RodNetwork, state: &State, anchor: &Anchor) -> Result<f64> {
    anchor.validate(network)?;
    let b = Builder { net: network, state };
    let unit = MaterialParams::new(1.0, 1.0, 1.0, 1.0, 1.0).weights();
    Ok(b.anchor(anchor, None).value(&unit))
}

/// The residual vector `r` with `E_rod = rᵀr`.
pub fn eval_elastic_terms(network: &RodNetwork, state: &State, params: &MaterialParams, anchors: &[Anchor]) -> Result<Residual> {
    let w = check(network, state, params, anchors)?;
    let b = Builder { net: network, state };
    let mut values = Vec::new();
    let mut kinds = Vec::new();
    for (r, rod) in network.rods.iter().enumerate() {
        let n = rod.segment_count();
        for j in 0..n {
            values.push(b.stretch(r, j).residuals(&w)[0]);
            kinds.push(ResidualKind::Stretch { rod: r, segment: j });
        }
        let vertex: Vec<Vec<f64>> = (1..n).map(|i| b.vertex(r, i).residuals(&w)).collect();
        for (i, v) in vertex.iter().enumerate() {
            values.extend_from_slice(&v[..2]);
            kinds.push(ResidualKind::Bend { rod: r, vertex: i + 1, component: 0 });
            kinds.push(ResidualKind::Bend { rod: r, vertex: i + 1, component: 1 });
        }
        for (i, v) in vertex.iter().enumerate() {
            values.push(v[2]);
            kinds.push(ResidualKind::Twist { rod: r, vertex: i + 1 });
        }
    }
    for (k, a) in anchors.iter().enumerate() {
        let v = b.anchor(a, None).residuals(&w);
        values.extend_from_slice(&v);
        kinds.extend((0..3).map(|axis| ResidualKind::AnchorPosition { anchor: k, axis }));
        kinds.push(ResidualKind::AnchorDirection { anchor: k });
    }
    Ok(Residual { values, kinds })
}

/// Scatters per-stencil derivatives into global arrays in stencil order, so
/// the result does not depend on how the evaluation was scheduled.
pub(crate) fn scatter(terms: &[Stencil], local: &[LocalDerivs], nx: usize, nu: usize, with_hessian: bool) -> DerivativeBundle {
    let mut out = DerivativeBundle {
        energy: 0.0,
        gradient: vec![0.0; nx],
        hessian: Vec::new(),
        design_gradient: vec![0.0; nu],
        mixed: Vec::new(),
    };
    for (st, d) in terms.iter().zip(local) {
        out.energy += d.energy;
        let n = st.vars.len();
        for (a, va) in st.vars.iter().enumerate() {
            match *va {
                Var::X(i) => out.gradient[i] += d.grad[a],
                Var::U(i) => out.design_gradient[i] += d.grad[a],
            }
            if !with_hessian {
                continue;
            }
            for (b, vb) in st.vars.iter().enumerate() {
                let h = d.hess[a * n + b];
                match (*va, *vb) {
                    (Var::X(i), Var::X(j)) => out.hessian.push((i, j, h)),
                    (Var::X(i), Var::U(j)) => out.mixed.push((i, j, h)),
                    _ => {}
                }
            }
        }
    }
    out
}

pub(crate) fn differentiate(terms: &[Stencil], w: &Weights, nx: usize, nu: usize, with_hessian: bool) -> DerivativeBundle {
    let local: Vec<LocalDerivs> = terms
        .par_iter()
        .map(|s| if with_hessian { s.derivatives(w) } else { s.gradient_at(w, &vec![0.0; s.vars.len()]) })
        .collect();
    scatter(terms, &local, nx, nu, with_hessian)
}

/// Gradient and Hessian of `E_rod` in the local chart of `state`; with
/// `design` the anchor targets `(p_a, m_a)` form the design vector `u`
/// (six entries per anchor) and `∂E/∂u`, `∂²E/∂x∂u` are filled as well.
pub fn assemble_derivatives(
    network: &RodNetwork,
    state: &State,
    params: &MaterialParams,
    anchors: &[Anchor],
    design: bool,
) -> Result<DerivativeBundle> {
    let w = check(network, state, params, anchors)?;
    let terms = stencils(network, state, anchors, design);
    let nu = if design { 6 * anchors.len() } else { 0 };
    let out = differentiate(&terms, &w, network.dof_count(), nu, true);
    if !out.energy.is_finite() || out.gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("energy or gradient".into()));
    }
    Ok(out)
}

/// Energy and gradient of `E_rod` as a function of the increment `delta`
/// in the fixed chart of `state` (the chart is not re-based at `delta`).
///
/// At `delta = 0` this is the ordinary gradient; finite differences of it
/// along `delta` reproduce the assembled Hessian.
pub fn chart_gradient(
    network: &RodNetwork,
    state: &State,
    params: &MaterialParams,
    anchors: &[Anchor],
    delta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let w = check(network, state, params, anchors)?;
    if delta.len() != network.dof_count() {
        return Err(Error::invalid("increment length does not match the state"));
    }
    let terms = stencils(network, state, anchors, false);
    let local: Vec<LocalDerivs> = terms
        .par_iter()
        .map(|s| {
            let at: Vec<f64> = s
                .vars
                .iter()
                .map(|v| match v {
                    Var::X(i) => delta[*i],
                    Var::U(_) => 0.0,
                })
                .collect();
            s.gradient_at(&w, &at)
        })
        .collect();
    let out = scatter(&terms, &local, network.dof_count(), 0, false);
    Ok((out.energy, out.gradient))
}

/// Gradient of `E_rod` only.
pub fn energy_gradient(network: &RodNetwork, state: &State, params: &MaterialParams, anchors: &[Anchor]) -> Result<(f64, Vec<f64>)> {
    let w = check(network, state, params, anchors)?;
    let terms = stencils(network, state, anchors, false);
    let out = differentiate(&terms, &w, network.dof_count(), 0, false);
    Ok((out.energy, out.gradient))
}

/// Anchors pinning the four extreme joints (min/max of `x ± y`) at their
/// current position and direction.
pub fn corner_anchor_sites(network: &RodNetwork) -> Vec<(usize, usize, f64)> {
    let score = |p: V3, k: usize| match k {
        0 => -p.x - p.y,
        1 => p.x - p.y,
        2 => p.x + p.y,
        _ => -p.x + p.y,
    };
    let mut sites: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..4 {
        let j = (0..network.joints.len())
            .max_by(|&a, &b| {
                score(network.joints[a].rest_position, k)
                    .partial_cmp(&score(network.joints[b].rest_position, k))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .expect("network without joints");
        let end = network.joints[j].ends[0];
        let rod = &network.rods[end.rod];
        let site = if end.at_end { (end.rod, rod.segment_count() - 1, 1.0) } else { (end.rod, 0, 0.0) };
        if !sites.contains(&site) {
            sites.push(site);
        }
    }
    sites
}
