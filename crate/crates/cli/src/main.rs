//! `flowsparse` command-line tool.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use flowsparse::baselines::{select_grid_bucketed, select_radius_suppressed, select_top_m};
use flowsparse::graph::dimacs::write_dimacs;
use flowsparse::map::{load_map_from_path, save_map_to_path};
use flowsparse::mcmf::oracle;
use flowsparse::metrics::{
    evaluate, map_report, read_tum, write_tum, AlignMode, Trajectory, DEFAULT_MAX_OFFSET,
};
use flowsparse::sparsify::{sparsify_windowed, SelectionReport, SelectionResult, ThetaRatio};
use flowsparse::synth::{generate, perturb_trajectory, SynthConfig, TrajectoryShape};
use flowsparse::{apply_selection, build_graph, sparsify, SlamMap, SparsifyConfig};

#[derive(Parser)]
#[command(
    name = "flowsparse",
    version,
    about = "Map point sparsification via min-cost max-flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic map and its ground-truth trajectory.
    Generate(GenerateArgs),
    /// Select a subset of map points and write the reduced map.
    Sparsify(SparsifyArgs),
    /// Map attributes (C, F, S) and trajectory errors (ATE, ATE_r).
    Metrics(MetricsArgs),
    /// Run strategies across capacities and maps, emitting CSV.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Circle,
    Line,
    RandomWalk,
}

#[derive(Args, Clone)]
struct SceneArgs {
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, default_value_t = 50)]
    keyframes: usize,
    #[arg(long, value_enum, default_value = "circle")]
    trajectory: Shape,
    /// Circle radius, line length, or random-walk step, in meters.
    #[arg(long, default_value_t = 5.0)]
    trajectory_size: f64,
    /// Half-size of the scene along x and y, in meters.
    #[arg(long, default_value_t = 20.0)]
    extent: f64,
    /// Half-size of the scene along z, in meters.
    #[arg(long, default_value_t = 3.0)]
    height: f64,
    #[arg(long, default_value_t = 0.5)]
    pixel_noise: f64,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[arg(long, default_value_t = 0.3)]
    cluster_fraction: f64,
}

impl SceneArgs {
    fn config(&self, seed: u64) -> SynthConfig {
        let trajectory = match self.trajectory {
            Shape::Circle => TrajectoryShape::Circle {
                radius: self.trajectory_size,
            },
            Shape::Line => TrajectoryShape::Line {
                length: self.trajectory_size,
            },
            Shape::RandomWalk => TrajectoryShape::RandomWalk {
                step: self.trajectory_size,
            },
        };
        SynthConfig {
            n_points: self.points,
            n_keyframes: self.keyframes,
            trajectory,
            scene_extent: self.extent,
            scene_height: self.height,
            pixel_noise: self.pixel_noise,
            dropout: self.dropout,
            cluster_fraction: self.cluster_fraction,
            seed,
            ..SynthConfig::default()
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth trajectory in TUM format.
    #[arg(long)]
    gt: PathBuf,
    /// Also write a perturbed copy of the trajectory here.
    #[arg(long)]
    est: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    est_sigma_t: f64,
    #[arg(long, default_value_t = 1.0)]
    est_sigma_r_deg: f64,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Strategy {
    Flow,
    Topm,
    Grid,
    Radius,
}

impl Strategy {
    fn name(self) -> &'static str {
        match self {
            Strategy::Flow => "flow",
            Strategy::Topm => "topm",
            Strategy::Grid => "grid",
            Strategy::Radius => "radius",
        }
    }
}

#[derive(Args, Clone)]
struct SelectionArgs {
    /// Keep a point if its flow exceeds this fraction of its capacity.
    #[arg(long, default_value_t = 0.5)]
    theta_ratio: f64,
    #[arg(long)]
    no_cc: bool,
    #[arg(long)]
    no_cs: bool,
    #[arg(long)]
    no_cb: bool,
    /// Keyframes seeing fewer kept points than this are culled.
    #[arg(long, default_value_t = 10)]
    keyframe_min_points: usize,
    /// Keep points seen by fewer than two keyframes instead of dropping them.
    #[arg(long)]
    keep_underviewed: bool,
    /// Sparsify consecutive windows of this many keyframes independently.
    #[arg(long)]
    window: Option<usize>,
}

impl SelectionArgs {
    fn config(&self, capacity_m: i64) -> Result<SparsifyConfig> {
        let mut config = SparsifyConfig::new(capacity_m);
        config.graph = config
            .graph
            .with_costs(!self.no_cc, !self.no_cs, !self.no_cb);
        config.theta_ratio = ThetaRatio::from_f64(self.theta_ratio)
            .with_context(|| format!("theta ratio {} must lie in [0, 1]", self.theta_ratio))?;
        config.keyframe_min_points = self.keyframe_min_points;
        config.drop_underviewed = !self.keep_underviewed;
        Ok(config)
    }
}

#[derive(Args)]
struct SparsifyArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value = "flow")]
    strategy: Strategy,
    /// Per-frame-pair point budget M; required for the flow strategy.
    #[arg(long)]
    capacity_m: Option<i64>,
    /// Number of points to keep; required for baseline strategies.
    #[arg(long)]
    budget: Option<usize>,
    /// Sparsified map output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report output; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the flow network in DIMACS min-cost-flow format.
    #[arg(long)]
    dump_dimacs: Option<PathBuf>,
    #[command(flatten)]
    selection: SelectionArgs,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    map: Option<PathBuf>,
    /// Estimated trajectory (TUM format).
    #[arg(long, requires = "gt")]
    est: Option<PathBuf>,
    /// Ground-truth trajectory (TUM format).
    #[arg(long, requires = "est")]
    gt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rigid")]
    align: Align,
    #[arg(long, default_value_t = DEFAULT_MAX_OFFSET)]
    max_offset: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Align {
    Rigid,
    Sim,
    None,
}

#[derive(Args)]
struct CompareArgs {
    /// Existing map to compare on; otherwise maps are generated.
    #[arg(long, conflicts_with = "seeds")]
    map: Option<PathBuf>,
    /// Number of generated maps, seeded `seed_base..seed_base + N`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    capacities: Vec<i64>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "flow,topm,grid,radius"
    )]
    strategies: Vec<Strategy>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    scene: SceneArgs,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Sparsify(a) => cmd_sparsify(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_map(path: &Path) -> Result<SlamMap> {
    load_map_from_path(path).with_context(|| format!("cannot load map {}", path.display()))
}

fn load_tum(path: &Path) -> Result<Trajectory> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_tum(BufReader::new(f))
        .with_context(|| format!("cannot read trajectory {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let config = a.scene.config(a.seed);
    let (map, gt) = generate(&config).context("generation failed")?;
    save_map_to_path(&map, &a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    write_tum(&gt, create(&a.gt)?)?;
    if let Some(est) = &a.est {
        let noisy = perturb_trajectory(
            &gt,
            a.est_sigma_t,
            a.est_sigma_r_deg,
            a.seed.wrapping_add(1),
        );
        write_tum(&noisy, create(est)?)?;
    }
    eprintln!(
        "seed {}: {} points, {} keyframes, {} observations",
        a.seed,
        map.points().len(),
        map.keyframes().len(),
        map.observations().len()
    );
    Ok(())
}

/// Runs one strategy. `budget` is ignored by flow; `capacity_m` by baselines.
fn run_strategy(
    map: &SlamMap,
    strategy: Strategy,
    capacity_m: Option<i64>,
    budget: Option<usize>,
    selection: &SelectionArgs,
) -> Result<SelectionResult> {
    if strategy == Strategy::Flow {
        let m = capacity_m.context("--capacity-m is required for the flow strategy")?;
        let config = selection.config(m)?;
        let result = match selection.window {
            Some(w) => sparsify_windowed(map, &config, w),
            None => sparsify(map, &config),
        };
        return result.context("flow selection failed");
    }
    let budget = budget.context("--budget is required for baseline strategies")?;
    let t = Instant::now();
    let kept: BTreeSet<_> = match strategy {
        Strategy::Topm => select_top_m(map, budget),
        Strategy::Grid => select_grid_bucketed(map, budget),
        Strategy::Radius => select_radius_suppressed(map, budget),
        Strategy::Flow => unreachable!(),
    };
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(SelectionResult::from_points(
        map,
        kept,
        selection.keyframe_min_points,
        ms,
    ))
}

#[derive(Serialize)]
struct SparsifyOutput {
    strategy: Strategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity_m: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<usize>,
    theta_ratio: f64,
    #[serde(flatten)]
    report: SelectionReport,
}

fn cmd_sparsify(a: &SparsifyArgs) -> Result<()> {
    if let Some(m) = a.capacity_m {
        if m < 1 {
            bail!("--capacity-m must be >= 1, got {m}");
        }
    }
    let map = load_map(&a.map)?;
    if let Some(path) = &a.dump_dimacs {
        let m = a
            .capacity_m
            .context("--dump-dimacs needs --capacity-m to build the network")?;
        let graph = build_graph(&map, &a.selection.config(m)?.graph)?;
        let supply = oracle::max_flow(graph.network());
        write_dimacs(graph.network(), supply, create(path)?)?;
    }
    let result = run_strategy(&map, a.strategy, a.capacity_m, a.budget, &a.selection)?;
    if let Some(out) = &a.out {
        save_map_to_path(&apply_selection(&map, &result), out)
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    let output = SparsifyOutput {
        strategy: a.strategy,
        capacity_m: a.capacity_m.filter(|_| a.strategy == Strategy::Flow),
        budget: a.budget.filter(|_| a.strategy != Strategy::Flow),
        theta_ratio: a.selection.theta_ratio,
        report: result.to_report(true),
    };
    write_json(&output, a.report.as_deref())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let mut report = match &a.map {
        Some(path) => serde_json::to_value(map_report(&load_map(path)?))?,
        None => serde_json::json!({}),
    };
    if let (Some(est), Some(gt)) = (&a.est, &a.gt) {
        let mode = match a.align {
            Align::Rigid => AlignMode::Rigid,
            Align::Sim => AlignMode::Sim,
            Align::None => AlignMode::None,
        };
        let errors = evaluate(&load_tum(est)?, &load_tum(gt)?, mode, a.max_offset)
            .context("trajectory evaluation failed")?;
        report["trajectory"] = serde_json::to_value(errors)?;
    } else if a.map.is_none() {
        bail!("nothing to measure: pass --map, or --est with --gt");
    }
    write_json(&report, None)
}

/// Stable CSV column set of `compare`.
const CSV_HEADER: &str = "seed,strategy,capacity_m,budget,kept_points,input_points,mp_percent,\
culled_keyframes,input_keyframes,kf_percent,c,f,s,total_flow,total_cost,graph_build_ms,solve_ms";

struct Row {
    seed: Option<u64>,
    strategy: Strategy,
    capacity_m: i64,
    budget: usize,
    result: SelectionResult,
    c: f64,
    f: Option<u64>,
    s: f64,
}

impl Row {
    fn csv(&self) -> String {
        let r = &self.result;
        format!(
            "{},{},{},{},{},{},{:.4},{},{},{:.4},{:.4},{},{:.4},{},{},{:.3},{:.3}",
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.strategy.name(),
            self.capacity_m,
            self.budget,
            r.kept_point_ids.len(),
            r.input_points,
            r.mp_percent(),
            r.culled_keyframe_ids.len(),
            r.input_keyframes,
            r.kf_percent(),
            self.c,
            self.f.map(|f| f.to_string()).unwrap_or_default(),
            self.s,
            r.total_flow,
            r.total_cost,
            r.timings.graph_build_ms,
            r.timings.solve_ms,
        )
    }
}

/// All rows for one map. Baselines get the flow selection's kept count as
/// budget at each capacity.
fn compare_map(map: &SlamMap, seed: Option<u64>, a: &CompareArgs) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &m in &a.capacities {
        let flow = run_strategy(map, Strategy::Flow, Some(m), None, &a.selection)?;
        let budget = flow.kept_point_ids.len();
        let mut results = vec![(Strategy::Flow, flow)];
        for &s in a.strategies.iter().filter(|s| **s != Strategy::Flow) {
            results.push((s, run_strategy(map, s, None, Some(budget), &a.selection)?));
        }
        for (strategy, result) in results {
            if !a.strategies.contains(&strategy) {
                continue;
            }
            let reduced = apply_selection(map, &result);
            let attrs = map_report(&reduced);
            rows.push(Row {
                seed,
                strategy,
                capacity_m: m,
                budget,
                result,
                c: attrs.c,
                f: attrs.f,
                s: attrs.s,
            });
        }
    }
    Ok(rows)
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if a.capacities.iter().any(|&m| m < 1) {
        bail!("capacities must be >= 1");
    }
    let header_note = match &a.map {
        Some(p) => format!("# flowsparse compare map={}", p.display()),
        None => format!(
            "# flowsparse compare seeds={}..{} points={} keyframes={}",
            a.seed_base,
            a.seed_base + a.seeds,
            a.scene.points,
            a.scene.keyframes
        ),
    };
    let mut rows: Vec<Row> = match &a.map {
        Some(p) => compare_map(&load_map(p)?, None, a)?,
        None => (a.seed_base..a.seed_base + a.seeds)
            .into_par_iter()
            .map(|seed| {
                let (map, _) = generate(&a.scene.config(seed))
                    .with_context(|| format!("generation failed for seed {seed}"))?;
                compare_map(&map, Some(seed), a)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect(),
    };
    rows.sort_by_key(|r| (r.seed, r.capacity_m, r.strategy));

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "{header_note}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in &rows {
        writeln!(out, "{}", r.csv())?;
    }
    out.flush()?;
    Ok(())
}
