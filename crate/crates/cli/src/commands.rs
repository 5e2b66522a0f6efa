//! Command implementations. Each returns the process exit code.

use std::path::Path;
use std::time::Instant;

use metaflex::design::{optimize_anchors, ShapeOptSettings};
use metaflex::equilibrium::{continuation_solve, interpolate_anchors, SolveReport};
use metaflex::network::{anchor_at, assemble_network, Anchor, MaterialParams, RodNetwork, State};
use metaflex::pattern::{build_complex_pattern, build_simple_pattern, generate_tiling, postprocess, PatternGeometry, TilingSpec, ZigZagSpec};
use metaflex::reduction::{fit_material_params, flat_start, generate_targets, FitSettings};
use metaflex::scenarios::scenario_anchors;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::cli::{AnchorsArgs, Cells, Command, ExportObjArgs, GenerateArgs, HomogenizeArgs, ShapeOptArgs, SimulateArgs};
use crate::error::{CliError, CliResult, EXIT_NOT_CONVERGED, EXIT_OK};
use crate::formats::{
    fit_report_csv, from_json, obj_polylines, objective_history_csv, pattern_from_json, shape_history_csv, solve_report_csv, to_json, AnchorPair,
    PatternFile, SceneFile, TargetFile,
};
use crate::manifest::{manifest_path_for, Session};

/// Start perturbation amplitude (mm) of homogenization and shape design.
const START_PERTURBATION: f64 = 1e-4;

pub fn run(command: &Command) -> CliResult<i32> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Anchors(a) => anchors(a),
        Command::Simulate(a) => simulate(a),
        Command::Homogenize(a) => homogenize(a),
        Command::ShapeOpt(a) => shape_opt(a),
        Command::ExportObj(a) => export_obj(a),
    }
}

fn load<T: DeserializeOwned>(session: &mut Session, path: &Path) -> CliResult<T> {
    let bytes = session.read(path)?;
    from_json(path, &bytes)
}

fn load_pattern(session: &mut Session, path: &Path) -> CliResult<(PatternGeometry, RodNetwork)> {
    let bytes = session.read(path)?;
    let pattern = pattern_from_json(path, &bytes)?;
    let network = assemble_network(&pattern)?;
    Ok((pattern, network))
}

fn load_state(session: &mut Session, network: &RodNetwork, path: &Path) -> CliResult<State> {
    let s: State = load(session, path)?;
    s.check(network).map_err(|e| parse_error(path, e.to_string()))?;
    Ok(s)
}

fn parse_error(path: &Path, message: String) -> CliError {
    CliError::Parse { path: path.to_path_buf(), message }
}

fn check_anchors(path: &Path, network: &RodNetwork, anchors: &[Anchor]) -> CliResult<()> {
    for (k, a) in anchors.iter().enumerate() {
        a.validate(network).map_err(|e| parse_error(path, format!("anchor {k}: {e}")))?;
    }
    Ok(())
}

pub fn generate(a: &GenerateArgs) -> CliResult<i32> {
    let mut session = Session::new("generate");
    let spec = match a.cells {
        Cells::Hex => TilingSpec::hexagons(a.nx, a.ny, a.radius),
        Cells::Quad => TilingSpec::rectangles(a.nx, a.ny, a.radius),
    };
    let tiling = generate_tiling(&spec)?;
    let pattern = if a.simple {
        if !a.amps.is_empty() {
            return Err(CliError::usage("--amps cannot be combined with --simple"));
        }
        build_simple_pattern(&tiling, a.subdiv, Some(spec))?
    } else {
        if a.amps.is_empty() {
            return Err(CliError::usage("a zig-zag pattern needs --amps (or pass --simple)"));
        }
        let zz = ZigZagSpec {
            amplitudes: a.amps.clone(),
            arc_samples: a.arc_samples,
            max_seg_len: a.max_seg_len,
            ellipse_full_width: a.ellipse_full_width,
        };
        postprocess(&build_complex_pattern(&tiling, &zz, Some(spec))?, a.max_seg_len)?
    };
    session.write(&a.out, &to_json(&PatternFile::from(&pattern))?)?;
    let settings = json!({
        "vertices": pattern.vertex_count(),
        "segments": pattern.segment_count(),
        "edges": pattern.edges.len(),
    });
    session.finish(&a.manifest.clone().unwrap_or_else(|| manifest_path_for(&a.out)), None, settings)?;
    println!("{}: {} vertices, {} segments", a.out.display(), pattern.vertex_count(), pattern.segment_count());
    Ok(EXIT_OK)
}

pub fn anchors(a: &AnchorsArgs) -> CliResult<i32> {
    let mut session = Session::new("anchors");
    let (_, network) = load_pattern(&mut session, &a.pattern)?;
    if !a.amount.is_finite() {
        return Err(CliError::usage("--amount must be finite"));
    }
    let set = scenario_anchors(&network, a.scenario, a.amount)?;
    session.write(&a.out, &to_json(&set)?)?;
    session.finish(
        &a.manifest.clone().unwrap_or_else(|| manifest_path_for(&a.out)),
        None,
        json!({ "scenario": a.scenario, "amount": a.amount }),
    )?;
    Ok(EXIT_OK)
}

/// Equilibrium of one anchor set, reached through `stages` continuation
/// steps from the anchors satisfied at rest.
fn solve_set(network: &RodNetwork, scene: &SceneFile, set: &[Anchor], seed: u64) -> CliResult<(State, Vec<SolveReport>)> {
    let rest = network.rest_state();
    // an unloaded network needs no symmetry breaking
    let x0 = if set.is_empty() || scene.perturbation == 0.0 { rest.clone() } else { flat_start(network, scene.perturbation, seed) };
    let start: Vec<Anchor> = set.iter().map(|a| anchor_at(network, &rest, a.rod, a.segment, a.beta)).collect::<Result<_, _>>()?;
    let schedule = if set.is_empty() { vec![Vec::new()] } else { interpolate_anchors(&start, set, scene.stages)? };
    Ok(continuation_solve(network, &scene.params, &schedule, &x0, &scene.solve)?)
}

pub fn simulate(a: &SimulateArgs) -> CliResult<i32> {
    let mut session = Session::new("simulate");
    let scene: SceneFile = load(&mut session, &a.scene)?;
    scene.validate().map_err(|m| parse_error(&a.scene, m))?;
    let pattern_path = a.scene.parent().unwrap_or(Path::new("")).join(&scene.pattern);
    let (_, network) = load_pattern(&mut session, &pattern_path)?;
    for set in &scene.anchor_sets {
        check_anchors(&a.scene, &network, set)?;
    }
    let mut reports = Vec::new();
    for (k, set) in scene.anchor_sets.iter().enumerate() {
        let (state, stage_reports) = solve_set(&network, &scene, set, a.seed)?;
        let last = stage_reports.last().cloned().expect("at least one stage");
        session.time(format!("anchor_set_{k}"), stage_reports.iter().map(|r| r.seconds).sum());
        session.write(&a.out_dir.join(format!("state_{k}.json")), &to_json(&state)?)?;
        session.write(&a.out_dir.join(format!("deformed_{k}.obj")), &obj_polylines(&network, &state))?;
        let unconverged = stage_reports.iter().filter(|r| !r.converged).count();
        if unconverged > 0 {
            eprintln!("anchor set {k}: {unconverged} of {} stages did not converge", stage_reports.len());
        }
        reports.push(SolveReport { converged: unconverged == 0, iterations: stage_reports.iter().map(|r| r.iterations).sum(), ..last });
    }
    session.write(&a.out_dir.join("report.csv"), &solve_report_csv(&reports)?)?;
    let settings = json!({ "solve": scene.solve, "perturbation": scene.perturbation, "stages": scene.stages });
    session.finish(&a.out_dir.join("manifest.json"), Some(a.seed), settings)?;
    let failed = reports.iter().filter(|r| !r.converged).count();
    if failed == 0 {
        Ok(EXIT_OK)
    } else {
        eprintln!("{failed} anchor sets did not reach equilibrium");
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Reference material of the complex pattern.
pub fn default_complex_params() -> MaterialParams {
    MaterialParams::new(1e10, 1e6, 1e6, 0.6, 3.0)
}

fn free_mask(names: &[String]) -> CliResult<[bool; 5]> {
    const NAMES: [&str; 5] = ["k_stretch", "k_bend", "k_twist", "width", "thickness"];
    let mut free = [false; 5];
    for n in names {
        let i = NAMES.iter().position(|m| m == n).ok_or_else(|| CliError::usage(format!("unknown parameter '{n}' in --fit")))?;
        free[i] = true;
    }
    Ok(free)
}

pub fn homogenize(a: &HomogenizeArgs) -> CliResult<i32> {
    let mut session = Session::new("homogenize");
    let (_, complex) = load_pattern(&mut session, &a.complex)?;
    let (_, simple) = load_pattern(&mut session, &a.simple)?;
    let k_complex = match &a.complex_params {
        Some(p) => load::<MaterialParams>(&mut session, p)?,
        None => default_complex_params(),
    };
    let k0 = match &a.init {
        Some(p) => load::<MaterialParams>(&mut session, p)?,
        None => k_complex,
    };
    k_complex.validate()?;
    k0.validate()?;
    let mut settings = match &a.settings {
        Some(p) => load::<FitSettings>(&mut session, p)?,
        None => FitSettings::default(),
    };
    if let Some(n) = a.max_iters {
        settings.max_iters = n;
    }
    settings.free = free_mask(&a.fit)?;

    let (complex_sets, simple_sets): (Vec<Vec<Anchor>>, Vec<Vec<Anchor>>) = if a.scenarios.is_empty() {
        let mut pairs = (Vec::new(), Vec::new());
        for path in &a.anchors {
            let pair: AnchorPair = load(&mut session, path)?;
            check_anchors(path, &complex, &pair.complex)?;
            check_anchors(path, &simple, &pair.simple)?;
            pairs.0.push(pair.complex);
            pairs.1.push(pair.simple);
        }
        pairs
    } else {
        let c = a.scenarios.iter().map(|s| scenario_anchors(&complex, *s, a.amount)).collect::<Result<_, _>>()?;
        let s = a.scenarios.iter().map(|s| scenario_anchors(&simple, *s, a.amount)).collect::<Result<_, _>>()?;
        (c, s)
    };

    let t = Instant::now();
    let complex_starts: Vec<State> = complex_sets.iter().map(|_| flat_start(&complex, START_PERTURBATION, a.seed)).collect();
    let (targets, _, _) = generate_targets(&complex, &k_complex, &complex_sets, &complex_starts, &settings.solve)?;
    session.time("targets", t.elapsed().as_secs_f64());

    let simple_starts: Vec<State> = simple_sets.iter().map(|_| flat_start(&simple, START_PERTURBATION, a.seed)).collect();
    let fit = fit_material_params(&targets, &simple, &k0, &simple_sets, &simple_starts, &settings)?;
    session.time("fit", fit.seconds);
    session.write(&a.out, &to_json(&fit.params)?)?;
    if let Some(p) = &a.report {
        session.write(p, &fit_report_csv(&fit.per_target, &fit.mean_distances)?)?;
    }
    if let Some(p) = &a.history {
        session.write(p, &objective_history_csv(&fit.history)?)?;
    }
    let summary = json!({
        "fit": settings,
        "complex_params": k_complex,
        "initial_params": k0,
        "scenarios": a.scenarios,
        "amount": a.amount,
        "initial_objective": fit.initial_objective,
        "objective": fit.objective,
        "iterations": fit.iterations,
    });
    session.finish(&a.manifest.clone().unwrap_or_else(|| manifest_path_for(&a.out)), Some(a.seed), summary)?;
    println!("objective {:.6e} -> {:.6e} after {} iterations", fit.initial_objective, fit.objective, fit.iterations);
    Ok(EXIT_OK)
}

pub fn shape_opt(a: &ShapeOptArgs) -> CliResult<i32> {
    let mut session = Session::new("shape-opt");
    let (_, network) = load_pattern(&mut session, &a.pattern)?;
    let params: MaterialParams = load(&mut session, &a.params)?;
    params.validate()?;
    let anchors0: Vec<Anchor> = load(&mut session, &a.anchors)?;
    check_anchors(&a.anchors, &network, &anchors0)?;
    if anchors0.is_empty() {
        return Err(parse_error(&a.anchors, "at least one anchor is required".into()));
    }
    let target_file: TargetFile = load(&mut session, &a.target)?;
    let mut target = target_file.into_target(&network).map_err(|m| parse_error(&a.target, m))?;
    if let Some(w) = a.direction_weight {
        target.direction_weight = w;
        target.validate(&network)?;
    }
    let mut settings = match &a.settings {
        Some(p) => load::<ShapeOptSettings>(&mut session, p)?,
        None => ShapeOptSettings::default(),
    };
    if let Some(n) = a.max_iters {
        settings.max_iters = n;
    }
    let x0 = match &a.start {
        Some(p) => load_state(&mut session, &network, p)?,
        None => flat_start(&network, START_PERTURBATION, a.seed),
    };
    let result = optimize_anchors(&network, &params, &anchors0, &target, &x0, &settings)?;
    session.time("optimize", result.history.last().map_or(0.0, |h| h.seconds));
    session.write(&a.out, &to_json(&result.anchors)?)?;
    if let Some(p) = &a.history {
        session.write(p, &shape_history_csv(&result.history)?)?;
    }
    if let Some(p) = &a.state_out {
        session.write(p, &to_json(&result.state)?)?;
    }
    let summary = json!({
        "optimizer": settings,
        "direction_weight": target.direction_weight,
        "initial_e_shape": result.history.first().map(|h| h.e_shape),
        "e_shape": result.e_shape,
        "accepted_steps": result.accepted_steps,
    });
    session.finish(&a.manifest.clone().unwrap_or_else(|| manifest_path_for(&a.out)), Some(a.seed), summary)?;
    println!("E_shape {:.6e} after {} accepted steps", result.e_shape, result.accepted_steps);
    Ok(EXIT_OK)
}

pub fn export_obj(a: &ExportObjArgs) -> CliResult<i32> {
    let mut session = Session::new("export-obj");
    let (_, network) = load_pattern(&mut session, &a.pattern)?;
    let state = match &a.state {
        Some(p) => load_state(&mut session, &network, p)?,
        None => network.rest_state(),
    };
    session.write(&a.out, &obj_polylines(&network, &state))?;
    session.finish(&manifest_path_for(&a.out), None, json!({}))?;
    Ok(EXIT_OK)
}
