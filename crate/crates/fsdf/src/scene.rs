//! Ground-truthed evaluation fixtures: carving overlapping submaps out of
//! an analytic scene from known viewpoints.

use rayon::prelude::*;

use crate::grid::VoxelIndex;
use crate::submap::SdfSubmap;
use crate::synth::{rasterize_in_frame, SceneSpec, SynthError};
use crate::transform::RigidTransform;

/// A submap pair with its ground truth.
#[derive(Clone, Debug)]
pub struct EvaluationPair {
    /// Indices into the carved submap list.
    pub a: usize,
    pub b: usize,
    /// True relative pose: `p_A = T_AB · p_B`.
    pub t_ab: RigidTransform,
    /// Overlap volume, m³ (voxels of A landing in B).
    pub overlap_volume: f64,
    pub is_match: bool,
}

/// Carves one submap per viewpoint: the scene is rasterized into a frame
/// co-located with the viewpoint, restricted to its extent box. Ids follow
/// viewpoint order; noise is independent per submap.
pub fn carve_submaps(spec: &SceneSpec) -> Result<Vec<SdfSubmap>, SynthError> {
    spec.validate()?;
    if spec.viewpoints.is_empty() {
        return Err(SynthError::NoViewpoints);
    }
    let submaps: Vec<SdfSubmap> = spec
        .viewpoints
        .par_iter()
        .enumerate()
        .map(|(i, vp)| rasterize_in_frame(spec, &vp.pose, &vp.extent, i as u32, i as u64 + 1))
        .collect();
    for (i, s) in submaps.iter().enumerate() {
        if s.is_empty() {
            return Err(SynthError::EmptyCarve(i));
        }
    }
    Ok(submaps)
}

/// Volume of A's stored voxels whose centers, transformed into B's frame
/// (`p_B = T_AB⁻¹ p_A`), land inside stored voxels of B.
pub fn overlap_volume(a: &SdfSubmap, b: &SdfSubmap, t_ab: &RigidTransform) -> f64 {
    debug_assert!((a.voxel_size() - b.voxel_size()).abs() < 1e-12);
    let vs = a.voxel_size();
    let t_ba = t_ab.inverse();
    let count = a
        .grid()
        .iter()
        .filter(|(idx, _)| {
            let p_b = t_ba.apply(&idx.center(vs));
            b.grid().contains(VoxelIndex::containing(&p_b, vs))
        })
        .count();
    count as f64 * vs * vs * vs
}

/// Ground-truth labels for every unordered submap pair (lower index
/// first): overlap volume against `match_volume`.
pub fn evaluation_pairs(submaps: &[SdfSubmap], match_volume: f64) -> Vec<EvaluationPair> {
    let mut out = Vec::new();
    for a in 0..submaps.len() {
        for b in (a + 1)..submaps.len() {
            let t_ab = submaps[a].pose.inverse().compose(&submaps[b].pose);
            let volume = overlap_volume(&submaps[a], &submaps[b], &t_ab);
            out.push(EvaluationPair {
                a,
                b,
                t_ab,
                overlap_volume: volume,
                is_match: volume > match_volume,
            });
        }
    }
    out
}
