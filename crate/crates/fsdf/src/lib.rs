//! SDF-native place recognition.
//!
//! This crate builds sparse signed-distance-field submaps from pointclouds
//! or synthetic scenes, detects keypoints directly on the distance field
//! (including in free space), describes them with spherical gradient
//! histograms in per-keypoint local reference frames, and registers submap
//! pairs with geometric-consistency-filtered RANSAC followed by an
//! SDF-based fitness gate.
//!
//! The main layers, bottom to top:
//!
//! - [`grid`]: spatially-hashed sparse voxel storage (8³ blocks).
//! - [`transform`]: rigid transforms as rotation matrix + translation.
//! - [`submap`]: the SDF submap (distance + weight per voxel) with
//!   trilinear sampling, plus TSDF integration, ESDF propagation and
//!   iso-surface extraction.
//! - [`synth`] / [`scene`]: analytic scene rasterization and ground-truthed
//!   submap carving for evaluation fixtures.
//! - [`filter`]: separable Sobel/Gaussian convolution with valid-support
//!   semantics; gradient and Hessian fields.
//! - [`keypoint`]: determinant-of-Hessian response and local extrema.
//! - [`lrf`]: structure-tensor local reference frames with sign
//!   disambiguation and multi-LRF emission.
//! - [`descriptor`]: spherical gradient-orientation histogram with soft
//!   binning, solid-angle normalization and SDF augmentation slots.
//! - [`register`]: KNN correspondences, 3-point RANSAC with geometric
//!   consistency, rigid estimation and inlier scoring.
//! - [`fitness`]: bidirectional iso-surface fitness and the match decision.
//! - [`pipeline`]: end-to-end feature extraction, pairwise matching,
//!   PR-curve evaluation and the free-space ablation.
//! - [`io`]: submap archives, descriptor dumps, pointcloud and scene-spec
//!   parsers, CSV emitters, and the key=value pipeline config format.

pub mod descriptor;
pub mod eigen;
pub mod esdf;
pub mod filter;
pub mod fitness;
pub mod grid;
pub mod integrate;
pub mod io;
pub mod isosurface;
pub mod keypoint;
pub mod lrf;
pub mod pipeline;
pub mod register;
pub mod scene;
pub mod submap;
pub mod synth;
pub mod transform;

pub use descriptor::{describe, descriptor_distance, Descriptor, DescriptorParams};
pub use fitness::{
    decide, directional_sum, evaluate_fitness, DirectionalSum, FitnessOutcome, FitnessParams,
    MatchDecision, MatchResult, SdfAccumulation,
};
pub use grid::{SparseGrid, VoxelIndex};
pub use isosurface::{extract_isosurface, IsoSurfaceCloud};
pub use keypoint::{
    detect_extrema, doh_response, filter_by_surface_distance, select_top_n, Keypoint,
};
pub use lrf::{
    assign_lrfs, collect_support, structure_tensor, CurvatureSource, Lrf, SupportSample,
};
pub use pipeline::{
    ablate_freespace, evaluate_collection, extract_features, match_pair, prepare_submap,
    EvaluationReport, FeatureSet, FitnessSweep, PipelineConfig, PrPoint, PreparedSubmap,
};
pub use register::{
    consistency_check, estimate_rigid, find_correspondences, inlier_score, ransac_register,
    Correspondence, RansacConfig, TransformCandidate,
};
pub use scene::{carve_submaps, evaluation_pairs, overlap_volume, EvaluationPair};
pub use submap::{SdfError, SdfSample, SdfSubmap, SdfVoxel};
pub use synth::{build_synthetic_scene, Primitive, SceneSpec, SynthError, Viewpoint};
pub use transform::RigidTransform;
