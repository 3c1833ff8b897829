//! Determinant-of-Hessian keypoint detection.

use nalgebra::Vector3;

use crate::eigen::sym_eigenvalues3;
use crate::filter::{HessianFields, ScalarField};
use crate::grid::{SparseGrid, VoxelIndex};
use crate::submap::SdfSubmap;

/// A detected local extremum of the DoH volume.
#[derive(Clone, Debug)]
pub struct Keypoint {
    pub index: VoxelIndex,
    /// Voxel center, submap frame, meters.
    pub position: Vector3<f64>,
    /// DoH value at the extremum.
    pub response: f64,
    /// SDF value at the voxel, meters.
    pub sdf_value: f64,
    /// Eigenvalues of the Hessian at the voxel, descending.
    pub hessian_eigs: [f64; 3],
}

/// δ(k) = det H(k) on the intersection of the six component domains.
/// Block-parallel; the components share one erosion so the intersection
/// is normally every stored voxel.
pub fn doh_response(hessian: &HessianFields) -> ScalarField {
    use rayon::prelude::*;
    let keys = hessian.xx.grid.sorted_block_keys();
    let blocks: Vec<(crate::grid::BlockIndex, crate::grid::Block<f64>)> = keys
        .par_iter()
        .filter_map(|&key| {
            let bxx = hessian.xx.grid.block(key)?;
            let bxy = hessian.xy.grid.block(key)?;
            let bxz = hessian.xz.grid.block(key)?;
            let byy = hessian.yy.grid.block(key)?;
            let byz = hessian.yz.grid.block(key)?;
            let bzz = hessian.zz.grid.block(key)?;
            let mut out = crate::grid::Block::new();
            let mut any = false;
            for lin in bxx.occupied() {
                if !(bxy.is_set(lin)
                    && bxz.is_set(lin)
                    && byy.is_set(lin)
                    && byz.is_set(lin)
                    && bzz.is_set(lin))
                {
                    continue;
                }
                let (xx, xy, xz) = (
                    bxx.value_unchecked(lin),
                    bxy.value_unchecked(lin),
                    bxz.value_unchecked(lin),
                );
                let (yy, yz, zz) = (
                    byy.value_unchecked(lin),
                    byz.value_unchecked(lin),
                    bzz.value_unchecked(lin),
                );
                let det =
                    xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz);
                out.set(lin, det);
                any = true;
            }
            any.then_some((key, out))
        })
        .collect();
    let mut grid = SparseGrid::new();
    for (key, block) in blocks {
        grid.insert_block(key, block);
    }
    ScalarField { grid }
}

const NEIGHBORS_26: [(i32, i32, i32); 26] = {
    let mut n = [(0, 0, 0); 26];
    let mut count = 0;
    let mut di = -1;
    while di <= 1 {
        let mut dj = -1;
        while dj <= 1 {
            let mut dk = -1;
            while dk <= 1 {
                if !(di == 0 && dj == 0 && dk == 0) {
                    n[count] = (di, dj, dk);
                    count += 1;
                }
                dk += 1;
            }
            dj += 1;
        }
        di += 1;
    }
    n
};

/// Selects voxels whose DoH value is a strict extremum over their stored
/// 26-neighborhood. All 26 neighbors must be present, so boundary voxels
/// never become keypoints; plateaus yield nothing.
///
/// Keypoint metadata (SDF value, Hessian eigenvalues) is populated from
/// the submap and Hessian fields. Block-parallel scan with a merge in
/// block order: the output is ordered by (block, in-block) index and
/// independent of thread count.
pub fn detect_extrema(
    doh: &ScalarField,
    hessian: &HessianFields,
    sdf: &SdfSubmap,
) -> Vec<Keypoint> {
    use rayon::prelude::*;
    let vs = sdf.voxel_size();
    let keys = doh.grid.sorted_block_keys();
    let per_block: Vec<Vec<Keypoint>> = keys
        .par_iter()
        .map(|&key| {
            let block = doh.grid.block(key).expect("listed block");
            let mut out = Vec::new();
            'voxels: for lin in block.occupied() {
                let idx = crate::grid::join_index(key, lin);
                let value = block.value_unchecked(lin);
                let mut above = 0;
                let mut below = 0;
                for (di, dj, dk) in NEIGHBORS_26 {
                    match doh.get(idx.offset(di, dj, dk)) {
                        None => continue 'voxels,
                        Some(n) => {
                            if value > n {
                                above += 1;
                            } else if value < n {
                                below += 1;
                            } else {
                                continue 'voxels; // tie: not strict
                            }
                        }
                    }
                }
                if above != 26 && below != 26 {
                    continue;
                }
                let Some(voxel) = sdf.get(idx) else { continue };
                let Some(h) = hessian.matrix_at(idx) else {
                    continue;
                };
                out.push(Keypoint {
                    index: idx,
                    position: idx.center(vs),
                    response: value,
                    sdf_value: voxel.distance as f64,
                    hessian_eigs: sym_eigenvalues3(&h),
                });
            }
            out
        })
        .collect();
    per_block.into_iter().flatten().collect()
}

/// The `n` keypoints with the largest |response|, descending; ties broken
/// by ascending voxel index. Returns everything when fewer than `n`.
pub fn select_top_n(mut kps: Vec<Keypoint>, n: usize) -> Vec<Keypoint> {
    kps.sort_unstable_by(|a, b| {
        b.response
            .abs()
            .total_cmp(&a.response.abs())
            .then_with(|| a.index.cmp(&b.index))
    });
    kps.truncate(n);
    kps
}

/// Retains keypoints closer to a surface than `d_lim` (|Φ| < d_lim).
pub fn filter_by_surface_distance(kps: Vec<Keypoint>, d_lim: f64) -> Vec<Keypoint> {
    kps.into_iter()
        .filter(|kp| kp.sdf_value.abs() < d_lim)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submap::SdfVoxel;
    use crate::transform::RigidTransform;

    fn scalar_field(
        range: std::ops::Range<i32>,
        mut f: impl FnMut(i32, i32, i32) -> f64,
    ) -> ScalarField {
        let mut grid = SparseGrid::new();
        for i in range.clone() {
            for j in range.clone() {
                for k in range.clone() {
                    grid.insert(VoxelIndex::new(i, j, k), f(i, j, k));
                }
            }
        }
        ScalarField { grid }
    }

    fn hessian_with_domain(range: std::ops::Range<i32>) -> HessianFields {
        let zeros = || scalar_field(range.clone(), |_, _, _| 0.0);
        let diag = || scalar_field(range.clone(), |_, _, _| 1.0);
        HessianFields {
            xx: diag(),
            xy: zeros(),
            xz: zeros(),
            yy: diag(),
            yz: zeros(),
            zz: diag(),
        }
    }

    fn dummy_submap(range: std::ops::Range<i32>) -> SdfSubmap {
        let mut s = SdfSubmap::new(0, 0.05, 0.3, RigidTransform::identity()).unwrap();
        for i in range.clone() {
            for j in range.clone() {
                for k in range.clone() {
                    s.set(
                        VoxelIndex::new(i, j, k),
                        SdfVoxel {
                            distance: 0.1,
                            weight: 1.0,
                        },
                    );
                }
            }
        }
        s
    }

    #[test]
    fn determinant_of_diagonal_hessian() {
        let h = hessian_with_domain(0..3);
        let mut h2 = h.clone();
        h2.xx = scalar_field(0..3, |_, _, _| 2.0);
        h2.yy = scalar_field(0..3, |_, _, _| 2.0);
        h2.zz = scalar_field(0..3, |_, _, _| 2.0);
        let doh = doh_response(&h2);
        for (_, v) in doh.grid.iter_sorted() {
            assert_eq!(v, 8.0);
        }
    }

    #[test]
    fn doh_matches_direct_determinant_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut comps: Vec<ScalarField> = Vec::new();
        for _ in 0..6 {
            let mut grid = SparseGrid::new();
            for i in 0..8 {
                for j in 0..8 {
                    for k in 0..8 {
                        grid.insert(VoxelIndex::new(i, j, k), rng.random_range(-2.0..2.0));
                    }
                }
            }
            comps.push(ScalarField { grid });
        }
        let h = HessianFields {
            xx: comps[0].clone(),
            xy: comps[1].clone(),
            xz: comps[2].clone(),
            yy: comps[3].clone(),
            yz: comps[4].clone(),
            zz: comps[5].clone(),
        };
        let doh = doh_response(&h);
        for (idx, v) in doh.grid.iter_sorted() {
            let m = h.matrix_at(idx).unwrap();
            assert!((v - m.determinant()).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_spike_yields_one_keypoint() {
        let doh = scalar_field(
            0..7,
            |i, j, k| {
                if (i, j, k) == (3, 3, 3) {
                    5.0
                } else {
                    1.0
                }
            },
        );
        let h = hessian_with_domain(0..7);
        let sdf = dummy_submap(0..7);
        let kps = detect_extrema(&doh, &h, &sdf);
        assert_eq!(kps.len(), 1);
        assert_eq!(kps[0].index, VoxelIndex::new(3, 3, 3));
        assert_eq!(kps[0].response, 5.0);
        assert_eq!(kps[0].position, VoxelIndex::new(3, 3, 3).center(0.05));
    }

    #[test]
    fn plateau_yields_no_keypoints() {
        let doh = scalar_field(0..6, |_, _, _| 2.0);
        let h = hessian_with_domain(0..6);
        let sdf = dummy_submap(0..6);
        assert!(detect_extrema(&doh, &h, &sdf).is_empty());
    }

    #[test]
    fn minima_are_detected_too() {
        let doh = scalar_field(0..7, |i, j, k| {
            if (i, j, k) == (3, 3, 3) {
                -9.0
            } else {
                -1.0 + 0.001 * (i + 10 * j + 100 * k) as f64
            }
        });
        let h = hessian_with_domain(0..7);
        let sdf = dummy_submap(0..7);
        let kps = detect_extrema(&doh, &h, &sdf);
        assert!(kps.iter().any(|kp| kp.index == VoxelIndex::new(3, 3, 3)));
    }

    #[test]
    fn extrema_match_brute_force_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let doh = scalar_field(0..10, |_, _, _| rng.random_range(-1.0..1.0));
        let h = hessian_with_domain(0..10);
        let sdf = dummy_submap(0..10);
        let kps = detect_extrema(&doh, &h, &sdf);

        // Brute force: direct 26-neighbor comparison over all stored voxels.
        let mut expected = Vec::new();
        for idx in doh.grid.sorted_indices() {
            let v = doh.get(idx).unwrap();
            let mut lo = true;
            let mut hi = true;
            let mut complete = true;
            for di in -1..=1 {
                for dj in -1..=1 {
                    for dk in -1..=1 {
                        if (di, dj, dk) == (0, 0, 0) {
                            continue;
                        }
                        match doh.get(idx.offset(di, dj, dk)) {
                            None => complete = false,
                            Some(n) => {
                                if v <= n {
                                    hi = false;
                                }
                                if v >= n {
                                    lo = false;
                                }
                            }
                        }
                    }
                }
            }
            if complete && (hi || lo) {
                expected.push(idx);
            }
        }
        let got: Vec<_> = kps.iter().map(|kp| kp.index).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn no_boundary_extrema() {
        let doh = scalar_field(0..6, |i, j, k| (i * i + j * j + k * k) as f64);
        let h = hessian_with_domain(0..6);
        let sdf = dummy_submap(0..6);
        for kp in detect_extrema(&doh, &h, &sdf) {
            for c in [kp.index.i, kp.index.j, kp.index.k] {
                assert!((1..=4).contains(&c));
            }
        }
    }

    fn kp_with_response(i: i32, response: f64) -> Keypoint {
        Keypoint {
            index: VoxelIndex::new(i, 0, 0),
            position: Vector3::zeros(),
            response,
            sdf_value: 0.0,
            hessian_eigs: [0.0; 3],
        }
    }

    #[test]
    fn top_n_returns_all_when_short() {
        let kps = vec![kp_with_response(0, 1.0), kp_with_response(1, 2.0)];
        assert_eq!(select_top_n(kps, 5).len(), 2);
    }

    #[test]
    fn top_n_orders_by_magnitude() {
        let kps = vec![
            kp_with_response(0, 5.0),
            kp_with_response(1, -7.0),
            kp_with_response(2, 2.0),
        ];
        let top = select_top_n(kps, 2);
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].response, -7.0);
        assert_eq!(top[1].response, 5.0);
    }

    #[test]
    fn top_n_matches_full_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let kps: Vec<Keypoint> = (0..10_000)
            .map(|i| kp_with_response(i, rng.random_range(-100.0..100.0)))
            .collect();
        let top = select_top_n(kps.clone(), 5000);
        let mut oracle = kps;
        oracle.sort_by(|a, b| {
            b.response
                .abs()
                .total_cmp(&a.response.abs())
                .then_with(|| a.index.cmp(&b.index))
        });
        oracle.truncate(5000);
        assert_eq!(top.len(), 5000);
        for (a, b) in top.iter().zip(oracle.iter()) {
            assert_eq!(a.index, b.index);
        }
    }

    #[test]
    fn distance_filter_keeps_near_surface() {
        let mut kps = vec![
            kp_with_response(0, 1.0),
            kp_with_response(1, 1.0),
            kp_with_response(2, 1.0),
        ];
        kps[0].sdf_value = 0.02;
        kps[1].sdf_value = -0.08;
        kps[2].sdf_value = 0.30;
        let filtered = filter_by_surface_distance(kps.clone(), 0.05);
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered[0].index, VoxelIndex::new(0, 0, 0));

        let unfiltered = filter_by_surface_distance(kps, f64::INFINITY);
        assert_eq!(unfiltered.len(), 3);
    }

    #[test]
    fn nested_thresholds_nest() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let kps: Vec<Keypoint> = (0..500)
            .map(|i| {
                let mut kp = kp_with_response(i, 1.0);
                kp.sdf_value = rng.random_range(-0.4..0.4);
                kp
            })
            .collect();
        let sweep = [0.30, 0.25, 0.20, 0.15, 0.10, 0.05];
        let mut prev: Option<Vec<VoxelIndex>> = None;
        for d in sweep {
            let set: Vec<_> = filter_by_surface_distance(kps.clone(), d)
                .into_iter()
                .map(|kp| kp.index)
                .collect();
            if let Some(p) = &prev {
                assert!(set.iter().all(|idx| p.contains(idx)), "sets must nest");
            }
            prev = Some(set);
        }
    }
}
