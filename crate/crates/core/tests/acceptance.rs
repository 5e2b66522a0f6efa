//! Acceptance suite: one PASS/FAIL line per criterion, each checked at its
//! stated tolerance and runtime budget. Failures are reported, not hidden;
//! the process exits nonzero only if the harness itself breaks.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use metaflex::design::{
    eval_e_shape, mean_vertex_distance, optimize_anchors, shape_gradient, shape_gradient_direct, with_design, design_vector, ShapeOptSettings,
    ShapeTarget,
};
use metaflex::elastic::{
    assemble_derivatives, chart_gradient, hessian_anchor_direction, jacobian_anchor_direction, jacobian_anchor_position, DirectionConfig,
};
use metaflex::equilibrium::{solve_equilibrium, SolveSettings};
use metaflex::geometry::V3;
use metaflex::network::{anchor_at, assemble_network, Anchor, MaterialParams, RodNetwork, State};
use metaflex::pattern::{build_complex_pattern, build_simple_pattern, generate_hex_tiling, postprocess, TilingSpec, ZigZagSpec};
use metaflex::reduction::{fit_material_params, flat_start, generate_targets, mean_corner_distance, FitSettings};
use metaflex::scenarios::{rest_corner_anchors, scenario_anchors, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RADIUS: f64 = 7.0;
const SUBDIVISIONS: usize = 4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn criterion(name: &str, budget_s: f64, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f));
    let secs = t.elapsed().as_secs_f64();
    let (pass, detail) = match outcome {
        Ok(v) if secs > budget_s => (false, format!("{}; runtime {secs:.1} s exceeds {budget_s} s", v.detail)),
        Ok(v) => (v.pass, v.detail),
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!("{} {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    pass
}

fn hex(nx: usize, ny: usize) -> metaflex::pattern::Tiling {
    generate_hex_tiling(&TilingSpec::hexagons(nx, ny, RADIUS)).unwrap()
}

fn simple_network(nx: usize, ny: usize) -> RodNetwork {
    assemble_network(&build_simple_pattern(&hex(nx, ny), SUBDIVISIONS, None).unwrap()).unwrap()
}

fn complex_network(nx: usize, ny: usize) -> RodNetwork {
    let spec = ZigZagSpec::new(vec![0.3, 0.6, 0.3], 2.0);
    assemble_network(&postprocess(&build_complex_pattern(&hex(nx, ny), &spec, None).unwrap(), spec.max_seg_len).unwrap()).unwrap()
}

/// Reference material of the complex pattern.
fn complex_params() -> MaterialParams {
    MaterialParams::new(1e10, 1e6, 1e6, 0.6, 3.0)
}

/// A homogenized material for the simple pattern (rounded from a fit).
fn simple_params() -> MaterialParams {
    MaterialParams::new(4.2e3, 3.0e5, 2.9e5, 0.6, 3.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn generator_counts() -> Verdict {
    let p = build_simple_pattern(&hex(7, 6), SUBDIVISIONS, None).unwrap();
    let (v, s) = (p.vertex_count(), p.segment_count());
    verdict((v, s) == (563, 604), format!("7x6 hexagons, {SUBDIVISIONS} subdivisions: {v} vertices, {s} segments (expected 563, 604)"))
}

fn euler_audit() -> Verdict {
    let mut bad = Vec::new();
    for nx in 1..=5 {
        for ny in 1..=5 {
            let chi = hex(nx, ny).euler_characteristic();
            if chi != 1 {
                bad.push(format!("{nx}x{ny}: {chi}"));
            }
        }
    }
    verdict(bad.is_empty(), if bad.is_empty() { "V - E + F = 1 on all 25 grids".into() } else { format!("violations {bad:?}") })
}

fn random_direction_config(rng: &mut ChaCha8Rng) -> DirectionConfig {
    let mut v = || V3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    loop {
        let e = v() * 2.0;
        let d = v();
        let m_a = v();
        if e.norm() < 0.3 || m_a.norm() < 0.3 {
            continue;
        }
        let t = e.normalized();
        let d1 = (d - t * d.dot(t)).normalized();
        let cfg = DirectionConfig { e, d1, theta: 3.0 * v().x, m_a };
        // keep away from the parallel and antiparallel singularities
        if cfg.m().cross(m_a.normalized()).norm() > 0.1 && cfg.m().dot(m_a) > -0.9 * m_a.norm() {
            return cfg;
        }
    }
}

fn unit(k: usize, h: f64) -> V3 {
    let mut a = [0.0; 3];
    a[k] = h;
    V3::new(a[0], a[1], a[2])
}

/// Relative block error with a floor tied to the largest block of its kind.
fn block_error(analytic: &[f64], fd: &[f64], floor: f64) -> f64 {
    max_diff(analytic, fd) / max_abs(fd).max(floor)
}

fn anchor_derivative_blocks() -> Verdict {
    const CONFIGS: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-6;
    let (mut worst_j, mut worst_h) = (0.0f64, 0.0f64);
    for _ in 0..CONFIGS {
        // position residual (1-β) x_i + β x_{i+1} - p_a
        let beta: f64 = rng.gen_range(0.0..1.0);
        let blocks = jacobian_anchor_position(beta);
        let res = |xi: V3, xj: V3, pa: V3| xi * (1.0 - beta) + xj * beta - pa;
        let (xi, xj, pa) = (V3::new(1.0, -2.0, 0.5), V3::new(0.3, 0.7, -1.1), V3::new(2.0, 0.0, 1.0));
        for (b, block) in blocks.iter().enumerate() {
            for k in 0..3 {
                let d = unit(k, h);
                let (p, m) = match b {
                    0 => (res(xi + d, xj, pa), res(xi - d, xj, pa)),
                    1 => (res(xi, xj + d, pa), res(xi, xj - d, pa)),
                    _ => (res(xi, xj, pa + d), res(xi, xj, pa - d)),
                };
                let fd = ((p - m) * (0.5 / h)).to_array();
                worst_j = worst_j.max(block_error(&block.col(k).to_array(), &fd, 1.0));
            }
        }

        let c = random_direction_config(&mut rng);
        let j = jacobian_anchor_direction(&c).unwrap();
        let hs = hessian_anchor_direction(&c).unwrap();
        let jac = |c: &DirectionConfig| jacobian_anchor_direction(c).unwrap();
        let (mut fd_e, mut fd_a) = ([0.0; 3], [0.0; 3]);
        let (mut ee, mut e_ma, mut theta_ma) = ([[0.0; 3]; 3], [[0.0; 3]; 3], [0.0; 3]);
        for k in 0..3 {
            let (ep, em) = (c.moved_edge(c.e + unit(k, h)), c.moved_edge(c.e - unit(k, h)));
            let (ap, am) = (DirectionConfig { m_a: c.m_a + unit(k, h), ..c }, DirectionConfig { m_a: c.m_a - unit(k, h), ..c });
            fd_e[k] = (ep.phi() - em.phi()) / (2.0 * h);
            fd_a[k] = (ap.phi() - am.phi()) / (2.0 * h);
            let col_e = (jac(&ep).de - jac(&em).de) * (0.5 / h);
            let col_a = (jac(&ap).de - jac(&am).de) * (0.5 / h);
            theta_ma[k] = (jac(&ap).dtheta - jac(&am).dtheta) / (2.0 * h);
            for i in 0..3 {
                ee[i][k] = col_e[i];
                e_ma[i][k] = col_a[i];
            }
        }
        let (tp, tm) = (DirectionConfig { theta: c.theta + h, ..c }, DirectionConfig { theta: c.theta - h, ..c });
        let fd_t = (tp.phi() - tm.phi()) / (2.0 * h);
        let e_theta = ((jac(&tp).de - jac(&tm).de) * (0.5 / h)).to_array();
        let theta_theta = (jac(&tp).dtheta - jac(&tm).dtheta) / (2.0 * h);

        let jscale = 1e-3 * max_abs(&[max_abs(&fd_e), max_abs(&fd_a), fd_t.abs()]);
        worst_j = worst_j.max(block_error(&j.de.to_array(), &fd_e, jscale));
        worst_j = worst_j.max(block_error(&[j.dtheta], &[fd_t], jscale));
        worst_j = worst_j.max(block_error(&j.dm_a.to_array(), &fd_a, jscale));

        let flat = |m: [[f64; 3]; 3]| m.iter().flatten().copied().collect::<Vec<_>>();
        let blocks: [(Vec<f64>, Vec<f64>); 5] = [
            (flat(hs.ee.0), flat(ee)),
            (hs.e_theta.to_array().to_vec(), e_theta.to_vec()),
            (vec![hs.theta_theta], vec![theta_theta]),
            (flat(hs.e_ma.0), flat(e_ma)),
            (hs.theta_ma.to_array().to_vec(), theta_ma.to_vec()),
        ];
        let hscale = 1e-3 * blocks.iter().map(|(_, f)| max_abs(f)).fold(0.0, f64::max);
        for (a, f) in &blocks {
            worst_h = worst_h.max(block_error(a, f, hscale));
        }
    }
    verdict(
        worst_j <= 1e-6 && worst_h <= 1e-5,
        format!("{CONFIGS} configurations: worst Jacobian block error {worst_j:.2e} (limit 1e-6), worst Hessian block error {worst_h:.2e} (limit 1e-5)"),
    )
}

/// Off-target anchors on two rods so that every term type is active.
fn loaded_anchors(net: &RodNetwork, state: &State) -> Vec<Anchor> {
    let a = anchor_at(net, state, 0, 1, 0.3).unwrap();
    let b = anchor_at(net, state, 3, 2, 0.6).unwrap();
    vec![
        Anchor { position: a.position + V3::new(0.5, -0.3, 1.2), direction: V3::new(0.3, 0.2, 0.9), ..a },
        Anchor { position: b.position + V3::new(-0.4, 0.2, -0.8), direction: V3::new(-0.5, 0.4, 0.7), ..b },
    ]
}

fn full_energy_derivatives() -> Verdict {
    let params = MaterialParams::new(1e8, 1e6, 1e6, 0.6, 3.0);
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, net) in [("simple", simple_network(1, 1)), ("complex", complex_network(1, 1))] {
        let n = net.dof_count();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let step: Vec<f64> = (0..n).map(|_| 0.1 * rng.gen_range(-1.0..1.0)).collect();
        let x = net.rest_state().apply_step(&net, &step);
        let anchors = loaded_anchors(&net, &x);
        let d = assemble_derivatives(&net, &x, &params, &anchors, false).unwrap();
        let hess = d.hessian_dense();
        let h = 1e-6;
        let probe = |i: usize, s: f64| {
            let mut delta = vec![0.0; n];
            delta[i] = s;
            chart_gradient(&net, &x, &params, &anchors, &delta).unwrap()
        };
        let columns: Vec<usize> = (0..n).step_by(n.div_ceil(150)).collect();
        let mut fd_g = Vec::new();
        let mut an_g = Vec::new();
        let mut worst_h = 0.0f64;
        let hscale = hess.iter().map(|r| max_abs(r)).fold(0.0, f64::max);
        for i in 0..n {
            let (ep, gp) = probe(i, h);
            let (em, gm) = probe(i, -h);
            fd_g.push((ep - em) / (2.0 * h));
            an_g.push(d.gradient[i]);
            if columns.contains(&i) {
                let col: Vec<f64> = gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
                let exact: Vec<f64> = (0..n).map(|j| hess[j][i]).collect();
                worst_h = worst_h.max(max_diff(&exact, &col) / hscale);
            }
        }
        let worst_g = max_diff(&an_g, &fd_g) / max_abs(&fd_g);
        pass &= worst_g <= 1e-6 && worst_h <= 1e-5;
        lines.push(format!("{name} ({n} dofs): gradient {worst_g:.2e}, Hessian {worst_h:.2e} over {} columns", columns.len()));
    }
    verdict(pass, format!("{} (limits 1e-6, 1e-5)", lines.join("; ")))
}

fn adjoint_correctness() -> Verdict {
    let net = simple_network(1, 1);
    let params = MaterialParams::new(1e8, 1e6, 1e6, 0.6, 3.0);
    let settings = SolveSettings { grad_tol: Some(1e-9), ..Default::default() };
    let start = flat_start(&net, 1e-4, 3);
    let anchors = scenario_anchors(&net, Scenario::Dome, 0.6).unwrap();
    let (state, rep) = solve_equilibrium(&net, &params, &anchors, &start, &settings).unwrap();
    assert!(rep.converged, "base solve did not converge");
    let other = scenario_anchors(&net, Scenario::Saddle, 0.6).unwrap();
    let (goal, rep) = solve_equilibrium(&net, &params, &other, &start, &settings).unwrap();
    assert!(rep.converged, "target solve did not converge");
    let target = ShapeTarget::from_state(&net, &goal);

    let adjoint = shape_gradient(&net, &params, &state, &anchors, &target, 1e-9).unwrap();
    let (_, direct) = shape_gradient_direct(&net, &params, &state, &anchors, &target, 1e-9).unwrap();
    let scale = max_abs(&direct);
    let vs_direct = max_diff(&adjoint.gradient, &direct) / scale;

    let u0 = design_vector(&anchors);
    let h = 1e-4;
    let tight = SolveSettings { grad_tol: Some(1e-7), ..Default::default() };
    let mut fd = Vec::with_capacity(u0.len());
    for k in 0..u0.len() {
        let mut e = [0.0; 2];
        for (slot, s) in [1.0, -1.0].into_iter().enumerate() {
            let mut u = u0.clone();
            u[k] += s * h;
            let (x, r) = solve_equilibrium(&net, &params, &with_design(&anchors, &u), &state, &tight).unwrap();
            assert!(r.converged, "re-solve for design entry {k} did not converge: force norm {:.3e} after {} iterations", r.gradient_norm, r.iterations);
            e[slot] = eval_e_shape(&net, &target, &x).unwrap();
        }
        fd.push((e[0] - e[1]) / (2.0 * h));
    }
    let vs_fd = max_diff(&adjoint.gradient, &fd) / max_abs(&fd);
    verdict(
        vs_direct <= 1e-10 && vs_fd <= 1e-4,
        format!("{} design entries: adjoint vs direct {vs_direct:.2e} (limit 1e-10), vs re-solved differences {vs_fd:.2e} (limit 1e-4)", u0.len()),
    )
}

/// Ground truth and fit of the inverse-crime experiment.
fn inverse_crime(max_iters: usize) -> (usize, metaflex::reduction::FitReport) {
    let net = simple_network(2, 2);
    let truth = MaterialParams::new(3e7, 1e6, 2e6, 0.8, 2.0);
    let sets: Vec<Vec<Anchor>> = [Scenario::Dome, Scenario::Saddle].iter().map(|s| scenario_anchors(&net, *s, 1.0).unwrap()).collect();
    let starts: Vec<State> = sets.iter().map(|_| flat_start(&net, 1e-4, 1)).collect();
    let (targets, _, _) = generate_targets(&net, &truth, &sets, &starts, &SolveSettings::default()).unwrap();
    let k0 = MaterialParams::from_array(truth.to_array().map(|v| v * 10.0));
    let fit = fit_material_params(&targets, &net, &k0, &sets, &starts, &FitSettings { max_iters, ..Default::default() }).unwrap();
    (net.connection_count(), fit)
}

fn homogenization_round_trip() -> Verdict {
    let (connections, fit) = inverse_crime(40);
    let bar = 1e-8 * connections as f64;
    verdict(
        fit.objective <= bar,
        format!(
            "2x2 simple pattern, start x10 on all five parameters: objective {:.3e} -> {:.3e} in {} iterations (limit {bar:.1e})",
            fit.initial_objective, fit.objective, fit.iterations
        ),
    )
}

fn homogenization_realism() -> Verdict {
    let complex = complex_network(3, 3);
    let simple = simple_network(3, 3);
    let scenarios = [Scenario::Dome, Scenario::Saddle];
    let csets: Vec<Vec<Anchor>> = scenarios.iter().map(|s| scenario_anchors(&complex, *s, 1.0).unwrap()).collect();
    let ssets: Vec<Vec<Anchor>> = scenarios.iter().map(|s| scenario_anchors(&simple, *s, 1.0).unwrap()).collect();
    let cstarts: Vec<State> = csets.iter().map(|_| flat_start(&complex, 1e-4, 1)).collect();
    let (targets, _, _) = generate_targets(&complex, &complex_params(), &csets, &cstarts, &SolveSettings::default()).unwrap();
    let sstarts: Vec<State> = ssets.iter().map(|_| flat_start(&simple, 1e-4, 1)).collect();
    // the cross section is shared with the complex pattern; with it free the
    // stiffness values are not identifiable
    let settings = FitSettings { free: [true, true, true, false, false], ..Default::default() };
    let fit = fit_material_params(&targets, &simple, &complex_params(), &ssets, &sstarts, &settings).unwrap();
    let k = fit.params;
    let extent = simple.rest_extent();
    let limit = 0.01 * extent[0].min(extent[1]);
    let mean = fit.mean_distances.iter().sum::<f64>() / fit.mean_distances.len() as f64;
    let ordered = k.k_stretch < 0.1 * k.k_bend && k.k_bend < k.k_twist;
    // distances recomputed independently of the fit report
    let check = targets
        .snapshots
        .iter()
        .zip(&ssets)
        .zip(&sstarts)
        .map(|((t, a), s)| {
            let (x, _) = solve_equilibrium(&simple, &k, a, s, &SolveSettings::default()).unwrap();
            mean_corner_distance(t, &metaflex::network::snapshot_connections(&simple, &x)).unwrap()
        })
        .fold(0.0f64, f64::max);
    verdict(
        ordered && mean < limit && check < limit,
        format!(
            "3x3, {} anchor sets: k_stretch {:.3e}, k_bend {:.3e}, k_twist {:.3e} (stretch << bend: {}, bend < twist: {}); \
             mean corner distance {mean:.4} mm, worst set {check:.4} mm (limit {limit:.3} mm)",
            scenarios.len(),
            k.k_stretch,
            k.k_bend,
            k.k_twist,
            k.k_stretch < 0.1 * k.k_bend,
            k.k_bend < k.k_twist
        ),
    )
}

fn reduction_speedup() -> Verdict {
    let simple = simple_network(7, 6);
    let complex = complex_network(7, 6);
    let solve = |net: &RodNetwork, k: &MaterialParams| {
        let anchors = scenario_anchors(net, Scenario::Dome, 1.0).unwrap();
        let t = Instant::now();
        let (_, r) = solve_equilibrium(net, k, &anchors, &flat_start(net, 1e-4, 1), &SolveSettings::default()).unwrap();
        assert!(r.converged, "Dome solve did not converge");
        (t.elapsed().as_secs_f64(), r.iterations)
    };
    let (ts, is) = solve(&simple, &simple_params());
    let (tc, ic) = solve(&complex, &complex_params());
    let ratio = tc / ts;
    verdict(
        ratio >= 10.0,
        format!(
            "7x6 Dome: simple {} dofs {ts:.2} s ({is} iterations), complex {} dofs {tc:.2} s ({ic} iterations), speedup {ratio:.1}x (limit 10x, time saved {:.1}%)",
            simple.dof_count(),
            complex.dof_count(),
            100.0 * (1.0 - ts / tc)
        ),
    )
}

/// Dome-like target on the 3x3 simple pattern and the optimization from
/// flat corner anchors.
fn shape_design(max_iters: usize) -> (ShapeTarget, metaflex::design::ShapeOptResult, RodNetwork) {
    let net = simple_network(3, 3);
    let goal = scenario_anchors(&net, Scenario::Dome, 1.0).unwrap();
    let (s, r) = solve_equilibrium(&net, &simple_params(), &goal, &flat_start(&net, 1e-4, 1), &SolveSettings::default()).unwrap();
    assert!(r.converged, "target solve did not converge");
    let target = ShapeTarget::from_state(&net, &s);
    let flat = rest_corner_anchors(&net).unwrap();
    let settings = ShapeOptSettings { max_iters, ..Default::default() };
    let res = optimize_anchors(&net, &simple_params(), &flat, &target, &flat_start(&net, 1e-4, 1), &settings).unwrap();
    (target, res, net)
}

fn shape_optimization() -> Verdict {
    let (target, res, net) = shape_design(100);
    let e0 = res.history[0].e_shape;
    let dist = mean_vertex_distance(&net, &target, &res.state).unwrap();
    let extent = net.rest_extent();
    verdict(
        res.e_shape * 100.0 <= e0 && dist < 0.5,
        format!(
            "3x3 ({:.0} x {:.0} mm), 4 corner anchors from flat: E_shape {e0:.3e} -> {:.3e} ({:.1} orders) in {} accepted steps; mean vertex distance {dist:.2e} mm (limit 0.5 mm)",
            extent[0],
            extent[1],
            res.e_shape,
            (e0 / res.e_shape).log10(),
            res.accepted_steps
        ),
    )
}

fn bits(values: impl IntoIterator<Item = f64>) -> Vec<u64> {
    values.into_iter().map(f64::to_bits).collect()
}

fn state_bits(s: &State) -> Vec<u64> {
    bits(s.joints.iter().flat_map(|j| {
        let q: [f64; 4] = j.orientation.into();
        j.position.to_array().into_iter().chain(q)
    }))
    .into_iter()
    .chain(bits(s.rods.iter().flat_map(|r| {
        r.arm_lengths.into_iter().chain(r.free_points.iter().flat_map(|p| p.to_array())).chain(r.angles.iter().copied())
    })))
    .collect()
}

fn determinism() -> Verdict {
    let mut checks = Vec::new();
    let net = simple_network(3, 3);
    let solve = || {
        let anchors = scenario_anchors(&net, Scenario::Saddle, 1.0).unwrap();
        solve_equilibrium(&net, &simple_params(), &anchors, &flat_start(&net, 1e-4, 11), &SolveSettings::default()).unwrap()
    };
    let (a, ra) = solve();
    let (b, rb) = solve();
    checks.push(("equilibrium", state_bits(&a) == state_bits(&b) && bits(ra.energy_trace) == bits(rb.energy_trace)));

    let (_, fa) = inverse_crime(4);
    let (_, fb) = inverse_crime(4);
    checks.push(("homogenization", bits(fa.params.to_array()) == bits(fb.params.to_array()) && bits(fa.history) == bits(fb.history)));

    let (_, sa, _) = shape_design(8);
    let (_, sb, _) = shape_design(8);
    let hist = |r: &metaflex::design::ShapeOptResult| bits(r.history.iter().flat_map(|h| [h.e_shape, h.gradient_norm, h.radius]));
    checks.push(("shape design", bits(design_vector(&sa.anchors)) == bits(design_vector(&sb.anchors)) && hist(&sa) == hist(&sb)));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            "equilibrium, homogenization and shape design reruns with equal seeds are bitwise identical (wall-clock times excluded)".to_string()
        } else {
            format!("differing reruns: {failed:?}")
        },
    )
}

type Check = fn() -> Verdict;

/// Optional first argument: run only criteria whose name contains it.
fn main() {
    let filter = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let criteria: [(&str, f64, Check); 10] = [
        ("generator counts", 1.0, generator_counts),
        ("Euler audit", 1.0, euler_audit),
        ("anchor derivative blocks", 10.0, anchor_derivative_blocks),
        ("full-energy derivatives", 30.0, full_energy_derivatives),
        ("adjoint correctness", 60.0, adjoint_correctness),
        ("homogenization round-trip", 300.0, homogenization_round_trip),
        ("homogenization realism", 900.0, homogenization_realism),
        ("reduction speedup", 600.0, reduction_speedup),
        ("shape optimization", 1200.0, shape_optimization),
        ("determinism", 600.0, determinism),
    ];
    let results: Vec<bool> = criteria
        .iter()
        .filter(|(name, _, _)| filter.as_deref().is_none_or(|f| name.contains(f)))
        .map(|&(name, budget, check)| criterion(name, budget, check))
        .collect();
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
}
