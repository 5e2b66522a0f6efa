//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metaflex::scenarios::Scenario;

#[derive(Debug, Parser)]
#[command(name = "metaflex", version, about = "Zig-zag rod network patterns: generation, simulation, homogenization and anchor design")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a complex (zig-zag) or simple (subdivided) pattern.
    Generate(GenerateArgs),
    /// Write corner anchors for a named target deformation.
    Anchors(AnchorsArgs),
    /// Solve a scene for equilibrium under each of its anchor sets.
    Simulate(SimulateArgs),
    /// Fit the simple pattern's material parameters to the complex pattern.
    Homogenize(HomogenizeArgs),
    /// Optimize anchor targets so the equilibrium matches a target shape.
    ShapeOpt(ShapeOptArgs),
    /// Export a pattern, optionally deformed by a state, as OBJ polylines.
    ExportObj(ExportObjArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Cells {
    Hex,
    Quad,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub cells: Cells,
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub ny: usize,
    /// Cell circumradius (mm).
    #[arg(long, default_value_t = 7.0)]
    pub radius: f64,
    /// Zig-zag amplitudes relative to the incircle radius.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub amps: Vec<f64>,
    /// Polyline points per sampled semicircle.
    #[arg(long, default_value_t = 8)]
    pub arc_samples: usize,
    /// Maximum segment length of zig-zag polylines (mm).
    #[arg(long, default_value_t = 2.0)]
    pub max_seg_len: f64,
    /// Read the semi-ellipse width as the full axis.
    #[arg(long)]
    pub ellipse_full_width: bool,
    /// Straight subdivided edges instead of zig-zags.
    #[arg(long)]
    pub simple: bool,
    /// Segments per edge of a simple pattern.
    #[arg(long, default_value_t = 4)]
    pub subdiv: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out stem>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnchorsArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    /// Deformation strength; 0 reproduces the rest state.
    #[arg(long, default_value_t = 1.0)]
    pub amount: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Receives `state_<k>.json`, `deformed_<k>.obj`, `report.csv` and `manifest.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Seed of the start perturbation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct HomogenizeArgs {
    #[arg(long)]
    pub complex: PathBuf,
    #[arg(long)]
    pub simple: PathBuf,
    /// Anchor pair files `{"complex": [...], "simple": [...]}`.
    #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "scenarios")]
    pub anchors: Vec<PathBuf>,
    /// Corner anchor scenarios used instead of anchor files.
    #[arg(long, value_delimiter = ',', num_args = 1.., value_parser = parse_scenario, conflicts_with = "anchors")]
    pub scenarios: Vec<Scenario>,
    #[arg(long, default_value_t = 1.0)]
    pub amount: f64,
    /// Material of the complex pattern; defaults to stretch 1e10, bend and twist 1e6, 0.6 x 3 mm.
    #[arg(long)]
    pub complex_params: Option<PathBuf>,
    /// Initial simple-pattern material; defaults to the complex material.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Parameters to fit, any of k_stretch,k_bend,k_twist,width,thickness.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "k_stretch,k_bend,k_twist,width,thickness")]
    pub fit: Vec<String>,
    /// Fit settings JSON.
    #[arg(long)]
    pub settings: Option<PathBuf>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Objective per iteration as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShapeOptArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub anchors: PathBuf,
    /// Shape target JSON, or a state JSON of the same pattern.
    #[arg(long)]
    pub target: PathBuf,
    /// Start state JSON; defaults to the perturbed rest state.
    #[arg(long)]
    pub start: Option<PathBuf>,
    /// Optimizer settings JSON.
    #[arg(long)]
    pub settings: Option<PathBuf>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Weight of the direction term of the target.
    #[arg(long)]
    pub direction_weight: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Final equilibrium state.
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportObjArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// State JSON; the rest state is exported when absent.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: metaflex::Error| e.to_string())
}
