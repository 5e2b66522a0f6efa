//! Static equilibrium: minimizes `E_rod` over the network state.
//!
//! Newton iterations in the local chart of the current state. The Hessian is
//! shifted by `τ I` until its Cholesky factorization exists, and steps are
//! globalized with Armijo backtracking. Accepted iterates never increase the
//! energy.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::elastic::{assemble_derivatives, energy_gradient, total_energy};
use crate::error::{Error, Result};
use crate::geometry::V3;
use crate::linalg::{diagonal_scale, SymmetricSolver};
use crate::network::{Anchor, MaterialParams, RodNetwork, State};

/// Shift increases tried per iteration when the line search stalls.
/// Consecutive iterations without progress before giving up.
const STAGNATION_LIMIT: usize = 8;
const STALL_RETRIES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    /// Absolute gradient tolerance; `None` means `1e-8 (1 + |E(x0)|)`.
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Step reduction factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Smallest nonzero Hessian shift, relative to the mean diagonal.
    pub shift_floor: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { grad_tol: None, max_iters: 500, armijo: 1e-4, backtrack: 0.5, max_backtracks: 40, shift_floor: 1e-8 }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if self.grad_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::invalid("grad_tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::invalid("line search constants must satisfy 0 < armijo < 0.5 and 0 < backtrack < 1"));
        }
        if !(self.shift_floor > 0.0) {
            return Err(Error::invalid("shift_floor must be positive"));
        }
        Ok(())
    }

    /// Tolerance in effect for a solve starting at energy `e0`.
    pub fn tolerance(&self, e0: f64) -> f64 {
        self.grad_tol.unwrap_or(1e-8 * (1.0 + e0.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub converged: bool,
    pub grad_tol: f64,
    /// Energy at the start and after every accepted step.
    pub energy_trace: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Newton minimization of `E_rod` from `x0`.
///
/// Returns the final state even when `max_iters` is reached or the line
/// search stalls; `converged` then is false.
pub fn solve_equilibrium(
    network: &RodNetwork,
    params: &MaterialParams,
    anchors: &[Anchor],
    x0: &State,
    settings: &SolveSettings,
) -> Result<(State, SolveReport)> {
    settings.validate()?;
    let started = Instant::now();
    let n = network.dof_count();
    let mut state = x0.clone();
    let mut energy = total_energy(network, &state, params, anchors)?;
    if !energy.is_finite() {
        return Err(Error::NonFinite("energy at the initial state".into()));
    }
    let tol = settings.tolerance(energy);
    let mut trace = vec![energy];
    let mut solver = SymmetricSolver::new();
    let mut shift = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut gnorm;
    let mut best_gnorm = f64::INFINITY;
    let mut stagnant = 0;

    loop {
        let d = assemble_derivatives(network, &state, params, anchors, false)?;
        gnorm = d.gradient_norm();
        if gnorm <= tol {
            converged = true;
            break;
        }
        if iterations >= settings.max_iters {
            break;
        }
        if stagnant >= STAGNATION_LIMIT {
            log::warn!("force norm stagnated at {gnorm:.3e} (tolerance {tol:.3e})");
            break;
        }
        let scale = diagonal_scale(n, &d.hessian);
        let floor = settings.shift_floor * scale;
        let minus_g: Vec<f64> = d.gradient.iter().map(|g| -g).collect();
        let mut first = if shift > floor { shift / 10.0 } else { 0.0 };
        let mut accepted = None;
        for _ in 0..STALL_RETRIES {
            let factor = solver.shifted_cholesky(n, &d.hessian, first, floor)?;
            shift = factor.shift();
            let step = factor.solve(&minus_g);
            if let Some(next) = line_search(network, params, anchors, &state, energy, &d.gradient, gnorm, &step, settings)? {
                accepted = Some(next);
                break;
            }
            first = (shift * 10.0).max(floor);
        }
        match accepted {
            Some((next, e)) => {
                // roundoff floor: neither the energy nor the force improves any more
                if energy - e <= 1e-14 * energy.abs() && gnorm >= 0.5 * best_gnorm {
                    stagnant += 1;
                } else {
                    stagnant = 0;
                }
                best_gnorm = best_gnorm.min(gnorm);
                state = next;
                energy = e;
                trace.push(e);
                iterations += 1;
            }
            None => {
                log::warn!("line search stalled at force norm {gnorm:.3e} (tolerance {tol:.3e})");
                break;
            }
        }
    }

    Ok((
        state,
        SolveReport {
            energy,
            gradient_norm: gnorm,
            iterations,
            seconds: started.elapsed().as_secs_f64(),
            converged,
            grad_tol: tol,
            energy_trace: trace,
        },
    ))
}

/// Backtracking along `step`. A full step that fails the Armijo test only
/// through roundoff is still accepted when it does not raise the energy and
/// lowers the gradient norm.
#[allow(clippy::too_many_arguments)]
fn line_search(
    network: &RodNetwork,
    params: &MaterialParams,
    anchors: &[Anchor],
    state: &State,
    energy: f64,
    gradient: &[f64],
    gnorm: f64,
    step: &[f64],
    settings: &SolveSettings,
) -> Result<Option<(State, f64)>> {
    let slope = dot(gradient, step);
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut alpha = 1.0;
    for k in 0..=settings.max_backtracks {
        let scaled: Vec<f64> = step.iter().map(|s| s * alpha).collect();
        let trial = state.apply_step(network, &scaled);
        let e = total_energy(network, &trial, params, anchors)?;
        if e.is_finite() {
            if e <= energy + settings.armijo * alpha * slope {
                return Ok(Some((trial, e)));
            }
            if k == 0 && e <= energy {
                let (_, g) = energy_gradient(network, &trial, params, anchors)?;
                if norm(&g) < gnorm {
                    return Ok(Some((trial, e)));
                }
            }
        }
        alpha *= settings.backtrack;
    }
    Ok(None)
}

/// Anchor sets moving linearly from `start` to `end`; stage `k` of `stages`
/// sits at `k / stages`. Directions are interpolated linearly and
/// renormalized.
pub fn interpolate_anchors(start: &[Anchor], end: &[Anchor], stages: usize) -> Result<Vec<Vec<Anchor>>> {
    if start.len() != end.len() || stages == 0 {
        return Err(Error::invalid("anchor schedule needs matching anchor sets and at least one stage"));
    }
    for (a, b) in start.iter().zip(end) {
        if (a.rod, a.segment) != (b.rod, b.segment) || a.beta != b.beta {
            return Err(Error::invalid("scheduled anchors must share their attachment sites"));
        }
    }
    Ok((1..=stages)
        .map(|k| {
            let s = k as f64 / stages as f64;
            start
                .iter()
                .zip(end)
                .map(|(a, b)| {
                    if k == stages {
                        return *b;
                    }
                    let lerp = |p: V3, q: V3| p * (1.0 - s) + q * s;
                    let da = a.direction.normalized();
                    let db = b.direction.normalized();
                    let dir = lerp(da, db);
                    let dir = if dir.norm() > 1e-12 { dir.normalized() } else { db };
                    Anchor { position: lerp(a.position, b.position), direction: dir * b.direction.norm(), ..*b }
                })
                .collect()
        })
        .collect())
}

/// Chains equilibrium solves over an anchor schedule, warm-starting every
/// stage from the previous equilibrium.
pub fn continuation_solve(
    network: &RodNetwork,
    params: &MaterialParams,
    schedule: &[Vec<Anchor>],
    x0: &State,
    settings: &SolveSettings,
) -> Result<(State, Vec<SolveReport>)> {
    if schedule.is_empty() {
        return Err(Error::invalid("empty anchor schedule"));
    }
    let mut state = x0.clone();
    let mut reports = Vec::with_capacity(schedule.len());
    for (k, anchors) in schedule.iter().enumerate() {
        let (next, report) =
            solve_equilibrium(network, params, anchors, &state, settings).map_err(|e| Error::Stage { stage: k, source: Box::new(e) })?;
        state = next;
        reports.push(report);
    }
    Ok((state, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{anchor_at, assemble_network};
    use crate::pattern::{build_simple_pattern, generate_hex_tiling, TilingSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> MaterialParams {
        MaterialParams::new(1e8, 1e6, 1e6, 0.6, 3.0)
    }

    fn hexagon() -> RodNetwork {
        let t = generate_hex_tiling(&TilingSpec::hexagons(1, 1, 7.0)).unwrap();
        assemble_network(&build_simple_pattern(&t, 4, None).unwrap()).unwrap()
    }

    /// Anchors at the first vertex of two rods whose start joints are
    /// farthest apart, pulled apart along their separation by `pull` mm.
    fn pulled(net: &RodNetwork, pull: f64) -> Vec<Anchor> {
        let rest = net.rest_state();
        let mut best = (0, 0, -1.0);
        for a in 0..net.rods.len() {
            for b in 0..net.rods.len() {
                let pa = net.joints[net.rods[a].start_joint].rest_position;
                let pb = net.joints[net.rods[b].start_joint].rest_position;
                let d = (pa - pb).norm();
                if d > best.2 {
                    best = (a, b, d);
                }
            }
        }
        let a = anchor_at(net, &rest, best.0, 0, 0.0).unwrap();
        let b = anchor_at(net, &rest, best.1, 0, 0.0).unwrap();
        let dir = (b.position - a.position).normalized();
        vec![
            Anchor { position: a.position - dir * (0.5 * pull), ..a },
            Anchor { position: b.position + dir * (0.5 * pull), ..b },
        ]
    }

    #[test]
    fn rest_state_is_equilibrium() {
        let net = hexagon();
        let (s, r) = solve_equilibrium(&net, &params(), &[], &net.rest_state(), &SolveSettings::default()).unwrap();
        assert!(r.converged && r.iterations <= 1);
        assert!(r.energy < 1e-20);
        assert!(s.vertices(&net).iter().zip(net.rest_state().vertices(&net)).all(|(a, b)| (*a - b).norm() < 1e-9));
    }

    #[test]
    fn satisfied_anchor_keeps_rest_state() {
        let net = hexagon();
        let rest = net.rest_state();
        let a = anchor_at(&net, &rest, 2, 1, 0.4).unwrap();
        let (_, r) = solve_equilibrium(&net, &params(), &[a], &rest, &SolveSettings::default()).unwrap();
        assert!(r.converged && r.iterations <= 1);
        assert!(r.energy.abs() < 1e-20);
    }

    #[test]
    fn pulled_hexagon_converges_monotonically() {
        let net = hexagon();
        let anchors = pulled(&net, 3.0);
        let x0 = State::perturbed(&net, &net.rest_state(), 1e-4, 7);
        let (s, r) = solve_equilibrium(&net, &params(), &anchors, &x0, &SolveSettings::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.iterations > 1);
        assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.energy > 0.0 && r.energy < r.energy_trace[0]);
        let (_, g) = energy_gradient(&net, &s, &params(), &anchors).unwrap();
        assert!(norm(&g) <= r.grad_tol);
    }

    #[test]
    fn converged_state_is_stationary_along_random_directions() {
        let net = hexagon();
        let anchors = pulled(&net, 2.0);
        let (s, r) = solve_equilibrium(&net, &params(), &anchors, &net.rest_state(), &SolveSettings::default()).unwrap();
        assert!(r.converged);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..20 {
            let mut v: Vec<f64> = (0..net.dof_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let plus: Vec<f64> = v.iter().map(|x| x * h).collect();
            let minus: Vec<f64> = v.iter().map(|x| -x * h).collect();
            let ep = total_energy(&net, &s.apply_step(&net, &plus), &params(), &anchors).unwrap();
            let em = total_energy(&net, &s.apply_step(&net, &minus), &params(), &anchors).unwrap();
            let dd = (ep - em) / (2.0 * h);
            assert!(dd.abs() <= 10.0 * r.grad_tol, "directional derivative {dd:.3e}");
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let net = hexagon();
        let anchors = pulled(&net, 3.0);
        let x0 = State::perturbed(&net, &net.rest_state(), 1e-4, 3);
        let run = || solve_equilibrium(&net, &params(), &anchors, &x0, &SolveSettings::default()).unwrap();
        let (s1, r1) = run();
        let (s2, r2) = run();
        assert_eq!(s1, s2);
        assert_eq!(r1.energy_trace, r2.energy_trace);
        assert_eq!(r1.gradient_norm.to_bits(), r2.gradient_norm.to_bits());
    }

    #[test]
    fn single_stage_schedule_matches_direct_solve() {
        let net = hexagon();
        let anchors = pulled(&net, 2.0);
        let rest = net.rest_state();
        let set = SolveSettings::default();
        let (s1, _) = solve_equilibrium(&net, &params(), &anchors, &rest, &set).unwrap();
        let (s2, reps) = continuation_solve(&net, &params(), &[anchors.clone()], &rest, &set).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(reps.len(), 1);
    }

    #[test]
    fn schedule_back_to_rest_returns_rest_state() {
        let net = hexagon();
        let rest = net.rest_state();
        let target = pulled(&net, 0.0);
        let start = pulled(&net, 2.0);
        let sched = interpolate_anchors(&start, &target, 3).unwrap();
        let (s, reps) = continuation_solve(&net, &params(), &sched, &rest, &SolveSettings::default()).unwrap();
        assert!(reps.iter().all(|r| r.converged));
        assert!(reps.last().unwrap().energy < 1e-12);
        let shift = s.vertices(&net).iter().zip(rest.vertices(&net)).map(|(a, b)| (*a - b).norm()).fold(0.0, f64::max);
        assert!(shift < 1e-5, "{shift}");
    }

    #[test]
    fn interpolation_hits_endpoints() {
        let net = hexagon();
        let a = pulled(&net, 0.0);
        let b = pulled(&net, 4.0);
        let s = interpolate_anchors(&a, &b, 4).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[3], b);
        let mid = (s[1][0].position - a[0].position).norm();
        assert!((mid - 1.0).abs() < 1e-12);
        assert!(interpolate_anchors(&a, &b[..1], 2).is_err());
    }

    #[test]
    fn rejects_bad_settings() {
        let net = hexagon();
        let bad = SolveSettings { max_iters: 0, ..Default::default() };
        assert!(solve_equilibrium(&net, &params(), &[], &net.rest_state(), &bad).is_err());
        let bad = SolveSettings { grad_tol: Some(0.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
