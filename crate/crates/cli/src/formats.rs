//! File formats: pattern and scene JSON, anchor and target files, OBJ
//! polyline export and CSV reports.

use std::path::{Path, PathBuf};

use metaflex::design::{ShapeIteration, ShapeTarget};
use metaflex::equilibrium::{SolveReport, SolveSettings};
use metaflex::network::{Anchor, MaterialParams, RodNetwork, State};
use metaflex::pattern::{EdgeStyle, PatternGeometry, TilingSpec, ZigZagSpec, P2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest allowed gap between a polyline end and its tiling corner (mm).
const ENDPOINT_TOLERANCE: f64 = 1e-9;

/// Pretty JSON with a trailing newline. Floats are written in their
/// shortest round-tripping form, so load and save is lossless.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(format!("cannot serialize: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn from_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// On-disk pattern: tiling corners, edges with signs and one polyline per
/// edge, plus the generator settings. Exactly one of `zigzag_spec` and
/// `subdivisions` is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternFile {
    pub tiling_spec: Option<TilingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zigzag_spec: Option<ZigZagSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdivisions: Option<usize>,
    pub vertices: Vec<P2>,
    pub edges: Vec<[usize; 2]>,
    pub signs: Vec<i8>,
    pub polylines: Vec<Vec<P2>>,
}

impl From<&PatternGeometry> for PatternFile {
    fn from(p: &PatternGeometry) -> Self {
        let (zigzag_spec, subdivisions) = match &p.style {
            EdgeStyle::ZigZag(z) => (Some(z.clone()), None),
            EdgeStyle::Subdivided(k) => (None, Some(*k)),
        };
        PatternFile {
            tiling_spec: p.tiling_spec.clone(),
            zigzag_spec,
            subdivisions,
            vertices: p.vertices.clone(),
            edges: p.edges.clone(),
            signs: p.signs.clone(),
            polylines: p.polylines.clone(),
        }
    }
}

impl PatternFile {
    /// Checks the structural invariants and converts to a pattern.
    pub fn into_geometry(self) -> Result<PatternGeometry, String> {
        let style = match (self.zigzag_spec, self.subdivisions) {
            (Some(z), None) => EdgeStyle::ZigZag(z),
            (None, Some(k)) => EdgeStyle::Subdivided(k),
            _ => return Err("exactly one of zigzag_spec and subdivisions must be given".into()),
        };
        let n = self.vertices.len();
        if self.signs.len() != self.edges.len() || self.polylines.len() != self.edges.len() {
            return Err(format!(
                "{} edges but {} signs and {} polylines",
                self.edges.len(),
                self.signs.len(),
                self.polylines.len()
            ));
        }
        if self.vertices.iter().flatten().chain(self.polylines.iter().flatten().flatten()).any(|v| !v.is_finite()) {
            return Err("coordinates must be finite".into());
        }
        for (e, (&[a, b], line)) in self.edges.iter().zip(&self.polylines).enumerate() {
            if a >= n || b >= n || a == b {
                return Err(format!("edge {e} has invalid endpoints [{a}, {b}]"));
            }
            if !matches!(self.signs[e], 1 | -1) {
                return Err(format!("edge {e} has sign {}, expected 1 or -1", self.signs[e]));
            }
            let (Some(first), Some(last)) = (line.first(), line.last()) else {
                return Err(format!("polyline {e} is empty"));
            };
            let gap = |p: &P2, q: &P2| (p[0] - q[0]).hypot(p[1] - q[1]);
            if line.len() < 2 || gap(first, &self.vertices[a]) > ENDPOINT_TOLERANCE || gap(last, &self.vertices[b]) > ENDPOINT_TOLERANCE {
                return Err(format!("polyline {e} does not run between its edge endpoints"));
            }
        }
        Ok(PatternGeometry {
            tiling_spec: self.tiling_spec,
            style,
            vertices: self.vertices,
            edges: self.edges,
            signs: self.signs,
            polylines: self.polylines,
        })
    }
}

pub fn pattern_from_json(path: &Path, bytes: &[u8]) -> CliResult<PatternGeometry> {
    from_json::<PatternFile>(path, bytes)?.into_geometry().map_err(|message| CliError::Parse { path: path.to_path_buf(), message })
}

fn default_perturbation() -> f64 {
    1e-4
}

fn default_stages() -> usize {
    1
}

/// Simulation input: a pattern, its material and any number of anchor sets,
/// each solved independently from the flat rest state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    /// Pattern JSON, relative to the scene file's directory.
    pub pattern: PathBuf,
    pub params: MaterialParams,
    /// Anchor sets; every anchor is `[rod, segment, β, px, py, pz, mx, my, mz]`.
    pub anchor_sets: Vec<Vec<Anchor>>,
    #[serde(default)]
    pub solve: SolveSettings,
    /// Amplitude (mm) of the seeded out-of-plane perturbation of the start.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    /// Continuation stages from the rest anchors to the given ones.
    #[serde(default = "default_stages")]
    pub stages: usize,
}

impl SceneFile {
    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        self.solve.validate().map_err(|e| e.to_string())?;
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err("perturbation must be a non-negative number".into());
        }
        if self.stages == 0 {
            return Err("stages must be at least 1".into());
        }
        Ok(())
    }
}

/// Matching anchor sets on the complex and the simple pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorPair {
    pub complex: Vec<Anchor>,
    pub simple: Vec<Anchor>,
}

/// A shape target given either directly or as a state of the same network.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TargetFile {
    Target(ShapeTarget),
    State(State),
}

impl TargetFile {
    pub fn into_target(self, network: &RodNetwork) -> Result<ShapeTarget, String> {
        let target = match self {
            TargetFile::Target(t) => t,
            TargetFile::State(s) => {
                s.check(network).map_err(|e| e.to_string())?;
                ShapeTarget::from_state(network, &s)
            }
        };
        target.validate(network).map_err(|e| e.to_string())?;
        Ok(target)
    }
}

/// Wavefront OBJ with one line element per rod; vertex numbering follows
/// [`State::vertices`], so rods share their joint vertices.
pub fn obj_polylines(network: &RodNetwork, state: &State) -> Vec<u8> {
    let mut out = String::from("# metaflex rod network\n");
    for v in state.vertices(network) {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    let mut next = network.joints.len();
    for rod in &network.rods {
        let n = rod.segment_count();
        let mut ids = vec![rod.start_joint + 1];
        ids.extend((0..n - 1).map(|k| next + k + 1));
        ids.push(rod.end_joint + 1);
        next += n - 1;
        out.push('l');
        for i in ids {
            out.push_str(&format!(" {i}"));
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::usage(format!("cannot write csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::usage(format!("cannot write csv: {e}")))
}

#[derive(Serialize)]
struct SolveRow {
    anchor_set: usize,
    converged: bool,
    iterations: usize,
    energy: f64,
    gradient_norm: f64,
    grad_tol: f64,
}

/// One row per anchor set; wall-clock times go to the run manifest.
pub fn solve_report_csv(reports: &[SolveReport]) -> CliResult<Vec<u8>> {
    let rows: Vec<SolveRow> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| SolveRow {
            anchor_set: k,
            converged: r.converged,
            iterations: r.iterations,
            energy: r.energy,
            gradient_norm: r.gradient_norm,
            grad_tol: r.grad_tol,
        })
        .collect();
    csv_bytes(&rows)
}

#[derive(Serialize)]
struct FitRow {
    anchor_set: usize,
    e_simpl: f64,
    mean_corner_distance: f64,
}

/// Per anchor set: fitted mismatch and mean connection distance (mm).
pub fn fit_report_csv(per_target: &[f64], mean_distances: &[f64]) -> CliResult<Vec<u8>> {
    let rows: Vec<FitRow> = per_target
        .iter()
        .zip(mean_distances)
        .enumerate()
        .map(|(k, (&e, &d))| FitRow { anchor_set: k, e_simpl: e, mean_corner_distance: d })
        .collect();
    csv_bytes(&rows)
}

#[derive(Serialize)]
struct ObjectiveRow {
    iteration: usize,
    objective: f64,
}

/// Objective after every iteration, starting with the initial value.
pub fn objective_history_csv(history: &[f64]) -> CliResult<Vec<u8>> {
    let rows: Vec<ObjectiveRow> = history.iter().enumerate().map(|(k, &v)| ObjectiveRow { iteration: k, objective: v }).collect();
    csv_bytes(&rows)
}

#[derive(Serialize)]
struct ShapeRow {
    iteration: usize,
    e_shape: f64,
    gradient_norm: f64,
    radius: f64,
    accepted: bool,
}

/// Shape optimization history without wall-clock times.
pub fn shape_history_csv(history: &[ShapeIteration]) -> CliResult<Vec<u8>> {
    let rows: Vec<ShapeRow> = history
        .iter()
        .map(|h| ShapeRow { iteration: h.iteration, e_shape: h.e_shape, gradient_norm: h.gradient_norm, radius: h.radius, accepted: h.accepted })
        .collect();
    csv_bytes(&rows)
}
