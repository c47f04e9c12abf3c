use std::path::{Path, PathBuf};

use qkp_core::clustering::ClusteringMethod;
use qkp_core::kernels::build_gram_matrix;
use qkp_core::pipeline::{
    hierarchical_extract, load_and_preprocess, load_image, matching_experiment, render_heatmap, render_matches,
    render_overlay, rotate_image, rotated_matching_experiment, split_patches, Keypoint, KernelChoice, LevelConfig,
};
use qkp_core::qubo::QuboProblem;
use qkp_core::solvers::{solve as run_solver, BitstringSample, SolverKind};
use serde::Serialize;

use crate::config::{FileConfig, Resolved};
use crate::error::CliError;
use crate::manifest::RunManifest;

pub struct Context {
    file: FileConfig,
    seed: Option<u64>,
    out_dir: PathBuf,
}

#[derive(Debug, Default)]
pub struct SolverOverrides {
    pub preset: Option<String>,
    pub kind: Option<SolverKind>,
    pub shots: Option<usize>,
    pub sweeps: Option<usize>,
}

impl Context {
    pub fn new(file: FileConfig, seed: Option<u64>, out_dir: PathBuf) -> Self {
        Self { file, seed, out_dir }
    }

    fn resolve(&self, o: &SolverOverrides) -> Result<Resolved, CliError> {
        let mut r = self.file.resolve(o.preset.as_deref())?;
        let s = &mut r.solver;
        if let Some(kind) = o.kind {
            s.solver_kind = kind;
        }
        if let Some(shots) = o.shots {
            s.shots = shots;
        }
        if let Some(sweeps) = o.sweeps {
            s.sa_sweeps = sweeps;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s.validate()?;
        Ok(r)
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(&self.out_dir, e))?;
        Ok(&self.out_dir)
    }
}

/// Keypoint entry of the JSON outputs.
#[derive(Debug, Serialize)]
struct KeypointRecord<'a> {
    index: usize,
    level: usize,
    col: usize,
    row: usize,
    patch_path: &'a [usize],
}

fn records(kps: &[Keypoint]) -> Vec<KeypointRecord<'_>> {
    kps.iter()
        .enumerate()
        .map(|(index, k)| KeypointRecord {
            index,
            level: k.level,
            col: k.col,
            row: k.row,
            patch_path: &k.patch_path,
        })
        .collect()
}

pub struct KeypointOverrides {
    pub k: Option<usize>,
    pub grid: Option<[usize; 2]>,
    pub size: Option<[usize; 2]>,
    pub method: Option<ClusteringMethod>,
}

pub fn keypoints(ctx: Context, image: &Path, o: KeypointOverrides, solver: &SolverOverrides) -> Result<(), CliError> {
    let mut resolved = ctx.resolve(solver)?;
    let p = &mut resolved.pipeline;
    if let Some(k) = o.k {
        let mut level = LevelConfig::new([1, 1], k);
        level.method = p.levels.first().map_or(level.method, |l| l.method);
        p.levels = vec![level];
    }
    if let Some(g) = o.grid {
        p.patch_grid = g;
    }
    if let Some(s) = o.size {
        p.target_size = Some(s);
    }
    if let Some(m) = o.method {
        p.levels.iter_mut().for_each(|l| l.method = m);
    }
    p.validate()?;

    let mut manifest = RunManifest::new("keypoints", resolved.clone(), &[image]);
    let pre = manifest.time("load", || load_and_preprocess(image, &resolved.pipeline))?;
    let extraction = manifest.time("extract", || hierarchical_extract(&pre.image, &resolved.pipeline, &resolved.solver))?;
    let dir = ctx.out_dir()?;
    manifest.write_json(dir, "keypoints.json", &records(&extraction.keypoints))?;
    manifest.write_png(dir, "overlay.png", &render_overlay(&pre.image, &extraction.keypoints))?;
    manifest.details = serde_json::json!({
        "image_size": [pre.image.width(), pre.image.height()],
        "patches": pre.patches.len(),
        "patch_size": extraction.patch_size,
        "levels": extraction.levels,
    });
    println!(
        "{} keypoints from {} patches of {}x{}",
        extraction.keypoints.len(),
        pre.patches.len(),
        extraction.patch_size.0,
        extraction.patch_size.1
    );
    manifest.finish(dir)
}

pub struct MatchOverrides {
    pub keypoints: Option<usize>,
    pub k_max: Option<usize>,
}

#[derive(Debug, Serialize)]
struct AlphaSummary {
    alpha: f64,
    matches: usize,
    feasible: bool,
    energy: f64,
}

pub fn matching(
    ctx: Context,
    image_a: &Path,
    image_b: Option<&Path>,
    rotate: Option<f64>,
    mut alphas: Vec<f64>,
    o: MatchOverrides,
    solver: &SolverOverrides,
) -> Result<(), CliError> {
    if alphas.is_empty() {
        alphas.push(0.2);
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(CliError::Config(format!("alpha must lie in [0, 1], got {a}")));
    }
    if image_b.is_some() && rotate.is_some() {
        return Err(CliError::Config("give either a second image or --rotate, not both".into()));
    }
    let mut resolved = ctx.resolve(solver)?;
    if let Some(n) = o.keypoints {
        resolved.matching.keypoints = n;
    }
    if let Some(k) = o.k_max {
        resolved.matching.matching.k_max = k;
    }
    for &alpha in &alphas {
        qkp_core::matching::MatchingSpec { alpha, ..resolved.matching.matching }.validate()?;
    }

    let inputs: Vec<&Path> = std::iter::once(image_a).chain(image_b).collect();
    let mut manifest = RunManifest::new("match", resolved.clone(), &inputs);
    let a = manifest.time("load", || load_image(image_a))?;
    let (exp, angle) = match image_b {
        Some(path) => {
            let b = manifest.time("load", || load_image(path))?;
            let exp = manifest.time("match", || matching_experiment(&a, b, &resolved.matching, &alphas, &resolved.solver))?;
            (exp, None)
        }
        None => {
            let angle = rotate.unwrap_or(20.0);
            let exp = manifest.time("match", || {
                rotated_matching_experiment(&a, angle, &resolved.matching, &alphas, &resolved.solver)
            })?;
            (exp, Some(angle))
        }
    };

    let dir = ctx.out_dir()?;
    if angle.is_some() {
        manifest.write_png(dir, "rotated.png", &rotate_image(&a, angle.unwrap_or(0.0)))?;
    }
    manifest.write_json(dir, "keypoints_a.json", &records(&exp.keypoints_a))?;
    manifest.write_json(dir, "keypoints_b.json", &records(&exp.keypoints_b))?;
    let mut summary = Vec::new();
    for run in &exp.runs {
        let stem = if exp.runs.len() == 1 { "matches".to_string() } else { format!("matches_alpha_{}", run.alpha) };
        manifest.write_json(dir, &format!("{stem}.json"), &run.outcome.matches)?;
        let vis = render_matches(&a, &exp.rotated, &exp.keypoints_a, &exp.keypoints_b, &run.outcome.matches);
        manifest.write_png(dir, &format!("{stem}.png"), &vis)?;
        println!(
            "alpha {}: {} matches{}",
            run.alpha,
            run.outcome.matches.len(),
            if run.outcome.report.is_feasible() { "" } else { " (infeasible)" }
        );
        summary.push(AlphaSummary {
            alpha: run.alpha,
            matches: run.outcome.matches.len(),
            feasible: run.outcome.report.is_feasible(),
            energy: run.outcome.sample.energy,
        });
    }
    manifest.details = serde_json::json!({ "rotation_degrees": angle, "runs": summary });
    manifest.finish(dir)
}

#[derive(Debug, Clone, Copy)]
pub enum KernelKind {
    Gaussian,
    Cosine,
    Quantum,
}

pub struct KernelOptions {
    pub scale: f64,
    pub gamma: f64,
    pub shots: Option<u64>,
    pub cell: u32,
}

/// Rows of numbers from `.csv` or `.json`; any other extension is read as
/// an image and yields one pixel vector per pixel.
fn read_points(path: &Path, location_weight: f64) -> Result<Vec<Vec<f64>>, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let points: Vec<Vec<f64>> = match ext.as_deref() {
        Some("csv") => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(n, line)| {
                    line.split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<f64>()
                                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), n + 1)))
                        })
                        .collect()
                })
                .collect::<Result<_, _>>()?
        }
        Some("json") => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        _ => {
            let img = load_image(path)?;
            split_patches(&img, [1, 1], location_weight)
                .remove(0)
                .pixels
                .into_iter()
                .map(|p| p.0.to_vec())
                .collect()
        }
    };
    if points.is_empty() {
        return Err(CliError::Config(format!("{}: no points", path.display())));
    }
    if points.iter().any(|p| p.len() != points[0].len() || p.is_empty()) {
        return Err(CliError::Config(format!("{}: rows must be non-empty and of equal length", path.display())));
    }
    Ok(points)
}

pub fn kernel_matrix(ctx: Context, input: &Path, kind: KernelKind, o: KernelOptions) -> Result<(), CliError> {
    let resolved = ctx.resolve(&SolverOverrides::default())?;
    let choice = match kind {
        KernelKind::Gaussian => KernelChoice::Gaussian { gamma: o.gamma },
        KernelKind::Cosine => KernelChoice::Cosine,
        KernelKind::Quantum => KernelChoice::Quantum {
            scale: o.scale,
            shots: o.shots,
            seed: resolved.solver.seed,
        },
    };
    let mut manifest = RunManifest::new("kernel-matrix", resolved.clone(), &[input]);
    let points = manifest.time("load", || read_points(input, resolved.pipeline.location_weight))?;
    let kernel = choice.build(points[0].len())?;
    let matrix = manifest.time("kernel", || build_gram_matrix(&points, kernel.as_ref()))?;
    let dir = ctx.out_dir()?;
    manifest.write_text(dir, "kernel.csv", &matrix.to_csv())?;
    manifest.write_png(dir, "kernel.png", &render_heatmap(&matrix, o.cell))?;
    manifest.details = serde_json::json!({ "kernel": choice, "points": points.len() });
    println!("{0}x{0} {1} kernel matrix", points.len(), kernel.name());
    manifest.finish(dir)
}

#[derive(Debug, Serialize)]
struct SolveOutput<'a> {
    best: &'a BitstringSample,
    all_samples: &'a [BitstringSample],
}

pub fn solve(ctx: Context, path: &Path, solver: &SolverOverrides) -> Result<(), CliError> {
    let resolved = ctx.resolve(solver)?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let problem: QuboProblem =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut manifest = RunManifest::new("solve", resolved.clone(), &[path]);
    let result = manifest.time("solve", || run_solver(&problem, &resolved.solver))?;
    let dir = ctx.out_dir()?;
    manifest.write_json(
        dir,
        "solve.json",
        &SolveOutput {
            best: &result.best,
            all_samples: &result.all_samples,
        },
    )?;
    manifest.details = serde_json::json!({
        "dim": problem.dim(),
        "shot_seconds": result.shot_wall_times.iter().map(|d| d.as_secs_f64()).collect::<Vec<_>>(),
    });
    let bits: String = result.best.bits.iter().map(|b| char::from(b'0' + b)).collect();
    println!("energy {} bits {bits}", result.best.energy);
    manifest.finish(dir)
}
