//! Homogenization: fits the material parameters of the simple pattern so
//! that its equilibria reproduce the connection positions and directions of
//! the complex pattern under several anchor sets.
//!
//! The objective is the sum over anchor sets of
//! `‖V_T - V_S‖² + ‖1 - ⟨N_T, N_S⟩‖²` over all connections. It is minimized
//! over the logarithms of the five parameters by Levenberg-Marquardt with a
//! central finite-difference Jacobian; every evaluation re-solves the simple
//! pattern, warm-started from the last accepted equilibria.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_equilibrium, SolveReport, SolveSettings};
use crate::error::{Error, Result};
use crate::network::{snapshot_connections, Anchor, ConnectionSnapshot, MaterialParams, RodNetwork, State};

/// Deformed connections of the complex pattern, one snapshot per anchor set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetBundle {
    pub snapshots: Vec<ConnectionSnapshot>,
}

/// Residuals whose squared norm is the mismatch between two snapshots:
/// three position differences per connection, then one `1 - ⟨n_T, n_S⟩`
/// per connection.
pub fn simpl_residuals(target: &ConnectionSnapshot, current: &ConnectionSnapshot) -> Result<Vec<f64>> {
    if target.len() != current.len() || target.directions.len() != current.directions.len() {
        return Err(Error::invalid("snapshots have different connection counts"));
    }
    let mut r = Vec::with_capacity(4 * target.len());
    for (t, c) in target.positions.iter().zip(&current.positions) {
        r.extend_from_slice(&(*t - *c).to_array());
    }
    r.extend(target.directions.iter().zip(&current.directions).map(|(t, c)| 1.0 - t.dot(*c)));
    Ok(r)
}

/// `‖V_T - V_S‖² + ‖1 - ⟨N_T, N_S⟩‖²` for one anchor set.
pub fn simpl_energy(target: &ConnectionSnapshot, current: &ConnectionSnapshot) -> Result<f64> {
    Ok(simpl_residuals(target, current)?.iter().map(|r| r * r).sum())
}

/// Mean distance between corresponding connections.
pub fn mean_corner_distance(target: &ConnectionSnapshot, current: &ConnectionSnapshot) -> Result<f64> {
    if target.len() != current.len() || target.is_empty() {
        return Err(Error::invalid("snapshots must be non-empty with equal connection counts"));
    }
    Ok(target.positions.iter().zip(&current.positions).map(|(a, b)| (*a - *b).norm()).sum::<f64>() / target.len() as f64)
}

/// Starting state for a flat pattern: rest state with a small seeded
/// out-of-plane perturbation.
pub fn flat_start(network: &RodNetwork, amplitude: f64, seed: u64) -> State {
    State::perturbed(network, &network.rest_state(), amplitude, seed)
}

/// Solves `network` under every anchor set and records the connections.
pub fn generate_targets(
    network: &RodNetwork,
    params: &MaterialParams,
    anchor_sets: &[Vec<Anchor>],
    starts: &[State],
    settings: &SolveSettings,
) -> Result<(TargetBundle, Vec<State>, Vec<SolveReport>)> {
    if starts.len() != anchor_sets.len() {
        return Err(Error::invalid("one start state per anchor set is required"));
    }
    let solved: Vec<Result<(State, SolveReport)>> =
        anchor_sets.par_iter().zip(starts).map(|(a, s)| solve_equilibrium(network, params, a, s, settings)).collect();
    let mut snapshots = Vec::new();
    let mut states = Vec::new();
    let mut reports = Vec::new();
    for (k, r) in solved.into_iter().enumerate() {
        let (s, rep) = r.map_err(|e| Error::Stage { stage: k, source: Box::new(e) })?;
        if !rep.converged {
            return Err(Error::Stage {
                stage: k,
                source: Box::new(Error::NotConverged { iterations: rep.iterations, force_norm: rep.gradient_norm }),
            });
        }
        snapshots.push(snapshot_connections(network, &s));
        states.push(s);
        reports.push(rep);
    }
    Ok((TargetBundle { snapshots }, states, reports))
}

/// Result of evaluating the objective for one parameter vector.
#[derive(Clone, Debug)]
pub struct SimplEvaluation {
    /// `E_simpl` per anchor set; `None` where the inner solve did not converge.
    pub values: Vec<Option<f64>>,
    pub states: Vec<State>,
    pub residuals: Vec<Vec<f64>>,
}

impl SimplEvaluation {
    pub fn all_converged(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Sum over converged sets.
    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }
}

/// Solves the simple pattern under every anchor set from `starts` and
/// evaluates the mismatch against `targets`. Unconverged sets are flagged
/// and skipped.
pub fn eval_e_simpl(
    targets: &TargetBundle,
    network: &RodNetwork,
    params: &MaterialParams,
    anchor_sets: &[Vec<Anchor>],
    starts: &[State],
    settings: &SolveSettings,
) -> Result<SimplEvaluation> {
    params.validate()?;
    if targets.snapshots.len() != anchor_sets.len() || starts.len() != anchor_sets.len() {
        return Err(Error::invalid("targets, anchor sets and start states must have equal counts"));
    }
    let solved: Vec<Option<State>> = anchor_sets
        .par_iter()
        .zip(starts)
        .map(|(a, s)| match solve_equilibrium(network, params, a, s, settings) {
            Ok((st, rep)) if rep.converged => Some(st),
            _ => None,
        })
        .collect();
    let mut out = SimplEvaluation { values: Vec::new(), states: Vec::new(), residuals: Vec::new() };
    for ((st, target), start) in solved.into_iter().zip(&targets.snapshots).zip(starts) {
        match st {
            Some(s) => {
                let r = simpl_residuals(target, &snapshot_connections(network, &s))?;
                out.values.push(Some(r.iter().map(|v| v * v).sum()));
                out.residuals.push(r);
                out.states.push(s);
            }
            None => {
                log::warn!("inner equilibrium solve did not converge; target skipped");
                out.values.push(None);
                out.residuals.push(Vec::new());
                out.states.push(start.clone());
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub solve: SolveSettings,
    pub max_iters: usize,
    /// Central-difference step in log-parameter space.
    pub fd_step: f64,
    /// Stop once the total objective falls below this value.
    pub objective_tol: f64,
    /// Stop when an accepted step lowers the objective by less than this
    /// fraction.
    pub rel_decrease_tol: f64,
    /// Objective assigned to parameter trials whose inner solves fail.
    pub penalty: f64,
    /// Initial damping, relative to the largest diagonal entry of `JᵀJ`.
    pub initial_damping: f64,
    /// Rejected trials allowed per iteration before giving up.
    pub max_rejections: usize,
    /// Largest change of any log-parameter in one step.
    pub max_log_step: f64,
    /// Which of `[k_stretch, k_bend, k_twist, width, thickness]` are fitted;
    /// the others keep their initial values.
    pub free: [bool; 5],
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            solve: SolveSettings::default(),
            max_iters: 40,
            fd_step: 1e-3,
            objective_tol: 0.0,
            rel_decrease_tol: 1e-10,
            penalty: 1e12,
            initial_damping: 1e-3,
            max_rejections: 10,
            max_log_step: 2.0,
            free: [true; 5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: MaterialParams,
    pub initial_objective: f64,
    pub objective: f64,
    /// `E_simpl` per anchor set at the fitted parameters.
    pub per_target: Vec<f64>,
    /// Mean connection distance per anchor set at the fitted parameters.
    pub mean_distances: Vec<f64>,
    pub iterations: usize,
    pub seconds: f64,
    /// Best objective after every iteration, starting with the initial one.
    pub history: Vec<f64>,
}

fn log_params(k: &MaterialParams) -> [f64; 5] {
    k.to_array().map(f64::ln)
}

/// Parameters from log values; fixed entries keep their exact initial value.
fn exp_params(y: &[f64], k0: &MaterialParams, free: &[bool; 5]) -> MaterialParams {
    let init = k0.to_array();
    MaterialParams::from_array(std::array::from_fn(|i| if free[i] { y[i].exp() } else { init[i] }))
}

struct Problem<'a> {
    targets: &'a TargetBundle,
    network: &'a RodNetwork,
    anchor_sets: &'a [Vec<Anchor>],
    settings: &'a FitSettings,
    k0: &'a MaterialParams,
}

impl Problem<'_> {
    fn params(&self, y: &[f64]) -> MaterialParams {
        exp_params(y, self.k0, &self.settings.free)
    }

    fn eval(&self, y: &[f64], starts: &[State]) -> Result<SimplEvaluation> {
        eval_e_simpl(self.targets, self.network, &self.params(y), self.anchor_sets, starts, &self.settings.solve)
    }

    /// Total objective with the failure penalty applied.
    fn objective(&self, e: &SimplEvaluation) -> f64 {
        if e.all_converged() {
            e.total()
        } else {
            self.settings.penalty
        }
    }

    /// Central-difference Jacobian of the stacked residuals; falls back to
    /// a one-sided difference when one probe fails and to a zero column when
    /// both do.
    fn jacobian(&self, y: &[f64], base: &SimplEvaluation) -> Result<DMatrix<f64>> {
        let h = self.settings.fd_step;
        let free: Vec<usize> = (0..5).filter(|&p| self.settings.free[p]).collect();
        let probes: Vec<(usize, f64)> = free.iter().flat_map(|&p| [(p, h), (p, -h)]).collect();
        let evals: Vec<Result<SimplEvaluation>> = probes
            .par_iter()
            .map(|&(p, d)| {
                let mut yp = y.to_vec();
                yp[p] += d;
                self.eval(&yp, &base.states)
            })
            .collect();
        let evals = evals.into_iter().collect::<Result<Vec<_>>>()?;
        let r0: Vec<f64> = base.residuals.concat();
        let mut j = DMatrix::zeros(r0.len(), 5);
        for (c, &p) in free.iter().enumerate() {
            let (plus, minus) = (&evals[2 * c], &evals[2 * c + 1]);
            let col: Option<Vec<f64>> = match (plus.all_converged(), minus.all_converged()) {
                (true, true) => Some(plus.residuals.concat().iter().zip(minus.residuals.concat()).map(|(a, b)| (a - b) / (2.0 * h)).collect()),
                (true, false) => Some(plus.residuals.concat().iter().zip(&r0).map(|(a, b)| (a - b) / h).collect()),
                (false, true) => Some(r0.iter().zip(minus.residuals.concat()).map(|(a, b)| (a - b) / h).collect()),
                (false, false) => None,
            };
            if let Some(c) = col {
                for (i, v) in c.into_iter().enumerate() {
                    j[(i, p)] = v;
                }
            }
        }
        Ok(j)
    }
}

/// Fits the simple pattern's parameters to `targets`.
///
/// `anchor_sets[i]` must be expressed on `network` and produce the motion
/// behind `targets.snapshots[i]`; `starts[i]` is the initial state of its
/// first solve.
pub fn fit_material_params(
    targets: &TargetBundle,
    network: &RodNetwork,
    k0: &MaterialParams,
    anchor_sets: &[Vec<Anchor>],
    starts: &[State],
    settings: &FitSettings,
) -> Result<FitReport> {
    k0.validate()?;
    if anchor_sets.is_empty() {
        return Err(Error::invalid("at least one anchor set is required"));
    }
    if !settings.free.iter().any(|&f| f) {
        return Err(Error::invalid("at least one parameter must be free"));
    }
    let started = Instant::now();
    let problem = Problem { targets, network, anchor_sets, settings, k0 };
    let mut y = log_params(k0).to_vec();
    let mut current = problem.eval(&y, starts)?;
    if !current.all_converged() {
        return Err(Error::Optimizer("inner solves failed at the initial parameters".into()));
    }
    let mut f = problem.objective(&current);
    let initial = f;
    let mut history = vec![f];
    let mut mu = settings.initial_damping;
    let mut nu = 2.0;
    let mut iterations = 0;

    while iterations < settings.max_iters && f > settings.objective_tol {
        iterations += 1;
        let j = problem.jacobian(&y, &current)?;
        let r = DVector::from_vec(current.residuals.concat());
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let dmax = (0..5).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        if dmax == 0.0 || g.norm() == 0.0 {
            break;
        }
        let mut accepted = false;
        for _ in 0..settings.max_rejections {
            // isotropic damping keeps weakly determined directions in place
            let a = &jtj + DMatrix::identity(5, 5) * (mu * dmax);
            let Some(chol) = a.cholesky() else {
                mu *= nu;
                nu *= 2.0;
                continue;
            };
            let mut step = chol.solve(&(-&g));
            let big = step.amax();
            if big > settings.max_log_step {
                step *= settings.max_log_step / big;
            }
            let predicted = -(2.0 * g.dot(&step) + step.dot(&(&jtj * &step)));
            let trial_y: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial = problem.eval(&trial_y, &current.states)?;
            let ft = problem.objective(&trial);
            if ft < f {
                let rho = if predicted > 0.0 { (f - ft) / predicted } else { 0.0 };
                let decrease = (f - ft) / f;
                y = trial_y;
                current = trial;
                f = ft;
                mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                accepted = true;
                if decrease < settings.rel_decrease_tol {
                    iterations = settings.max_iters;
                }
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
        history.push(f);
        if !accepted {
            break;
        }
    }

    let params = problem.params(&y);
    let per_target: Vec<f64> = current.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    let mean_distances = targets
        .snapshots
        .iter()
        .zip(&current.states)
        .map(|(t, s)| mean_corner_distance(t, &snapshot_connections(network, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FitReport {
        params,
        initial_objective: initial,
        objective: f,
        per_target,
        mean_distances,
        iterations: history.len() - 1,
        seconds: started.elapsed().as_secs_f64(),
        history,
    })
}
