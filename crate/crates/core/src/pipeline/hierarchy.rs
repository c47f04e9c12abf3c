use image::RgbImage;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::preprocess::{pixel_vector, PixelVector};
use super::{PipelineConfig, PipelineError};
use crate::clustering::extract_keypoints;
use crate::solvers::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub level: usize,
    pub col: usize,
    pub row: usize,
    /// Set index at every level the keypoint survived, starting with its
    /// level-0 patch.
    pub patch_path: Vec<usize>,
    /// Feature relative to the set it was last selected from.
    #[serde(skip)]
    pub feature: Option<PixelVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub sets: usize,
    pub set_size: (usize, usize),
    pub candidates: usize,
    pub selected: usize,
    /// Sets whose best sample needed cardinality repair.
    pub repaired: usize,
    /// Sets with at most `k` candidates, all of which were kept.
    pub undersized: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub keypoints: Vec<Keypoint>,
    pub levels: Vec<LevelReport>,
    pub patch_size: (usize, usize),
}

struct Set {
    origin: (usize, usize),
    size: (usize, usize),
    members: Vec<Keypoint>,
}

/// Selects keypoints per set at every level, then merges the survivors of
/// each `regroup` block into the next level's sets.
///
/// `image` is used as is; resampling happens in preprocessing. Sets at
/// level `l` are solved in parallel with seeds derived from
/// `(solver.seed, l, set index)`, so results do not depend on thread count.
pub fn hierarchical_extract(
    image: &RgbImage,
    config: &PipelineConfig,
    solver: &SolverConfig,
) -> Result<Extraction, PipelineError> {
    config.validate()?;
    let grids = config.level_grids()?;
    let (w, h) = (image.width() as usize, image.height() as usize);
    let [gc, gr] = config.patch_grid;
    let (pw, ph) = (w / gc, h / gr);
    if pw == 0 || ph == 0 {
        return Err(PipelineError::Config(format!("{w}×{h} image is smaller than the {gc}×{gr} patch grid")));
    }

    let mut sets: Vec<Set> = (0..gc * gr)
        .map(|p| {
            let origin = ((p % gc) * pw, (p / gc) * ph);
            let members = (0..pw * ph)
                .map(|i| Keypoint {
                    level: 0,
                    col: origin.0 + i % pw,
                    row: origin.1 + i / pw,
                    patch_path: Vec::new(),
                    feature: None,
                })
                .collect();
            Set { origin, size: (pw, ph), members }
        })
        .collect();
    let mut prev_grid = config.patch_grid;
    let mut reports = Vec::with_capacity(config.levels.len());

    for (l, level) in config.levels.iter().enumerate() {
        if l > 0 {
            sets = regroup(sets, prev_grid, level.regroup);
        }
        prev_grid = grids[l];
        let kernel = level.kernel.build(5)?;
        let results: Vec<(Vec<Keypoint>, bool, bool)> = sets
            .par_iter()
            .enumerate()
            .map(|(s, set)| -> Result<_, PipelineError> {
                let features: Vec<PixelVector> = set
                    .members
                    .iter()
                    .map(|kp| {
                        let rgb = image.get_pixel(kp.col as u32, kp.row as u32).0;
                        let (c, r) = (kp.col - set.origin.0, kp.row - set.origin.1);
                        pixel_vector(c, r, set.size.0, set.size.1, rgb, config.location_weight)
                    })
                    .collect();
                let tag = |kp: &Keypoint, f: PixelVector| {
                    let mut kp = kp.clone();
                    kp.level = l;
                    kp.patch_path.push(s);
                    kp.feature = Some(f);
                    kp
                };
                if set.members.len() <= level.k {
                    let all = set.members.iter().zip(&features).map(|(kp, &f)| tag(kp, f)).collect();
                    return Ok((all, false, set.members.len() < level.k));
                }
                let points: Vec<Vec<f64>> = features.iter().map(|f| f.0.to_vec()).collect();
                let spec = level.clustering_spec(points.len());
                let cfg = solver.clone().with_seed(set_seed(solver.seed, l, s));
                let sel = extract_keypoints(&points, level.method, kernel.as_ref(), &spec, &cfg)?;
                let chosen = sel.indices.iter().map(|&i| tag(&set.members[i], features[i])).collect();
                Ok((chosen, sel.repaired, false))
            })
            .collect::<Result<_, _>>()?;

        let candidates = sets.iter().map(|s| s.members.len()).sum();
        let set_size = sets[0].size;
        let mut report = LevelReport {
            level: l,
            sets: sets.len(),
            set_size,
            candidates,
            selected: 0,
            repaired: 0,
            undersized: 0,
        };
        for (set, (chosen, repaired, undersized)) in sets.iter_mut().zip(results) {
            report.selected += chosen.len();
            report.repaired += repaired as usize;
            report.undersized += undersized as usize;
            set.members = chosen;
        }
        reports.push(report);
    }

    Ok(Extraction {
        keypoints: sets.into_iter().flat_map(|s| s.members).collect(),
        levels: reports,
        patch_size: (pw, ph),
    })
}

/// Merges `[a, b]` blocks of a `grid` of sets, row-major, keeping member
/// order block by block.
fn regroup(sets: Vec<Set>, grid: [usize; 2], [a, b]: [usize; 2]) -> Vec<Set> {
    let new_cols = grid[0] / a;
    let new_rows = grid[1] / b;
    let mut slots: Vec<Option<Set>> = sets.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(new_cols * new_rows);
    for gr in 0..new_rows {
        for gc in 0..new_cols {
            let mut members = Vec::new();
            let mut origin = None;
            let mut size = (0, 0);
            for dr in 0..b {
                for dc in 0..a {
                    let child = slots[(gr * b + dr) * grid[0] + gc * a + dc].take().expect("each set merged once");
                    origin.get_or_insert(child.origin);
                    size = (child.size.0 * a, child.size.1 * b);
                    members.extend(child.members);
                }
            }
            out.push(Set {
                origin: origin.expect("regroup block is non-empty"),
                size,
                members,
            });
        }
    }
    out
}

fn set_seed(seed: u64, level: usize, set: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 32) | set as u64);
    rng.next_u64()
}
