//! Key=value pipeline configuration files.
//!
//! One `key = value` pair per line, `#` comments. Every key has the
//! pipeline default; `k_dist` comes from the base config (it is
//! scene-scale and required at the call site). Serialization and parsing
//! round-trip losslessly.

use thiserror::Error;

use crate::fitness::SdfAccumulation;
use crate::lrf::CurvatureSource;
use crate::pipeline::PipelineConfig;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    MissingEquals { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {value:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "none".to_string(),
    }
}

/// Writes every field in a fixed order.
pub fn serialize_config(cfg: &PipelineConfig) -> String {
    let curvature = match cfg.curvature_source {
        CurvatureSource::HessianEigenvalues => "hessian",
        CurvatureSource::StructureTensorEigenvalues => "structure_tensor",
    };
    let accumulation = match cfg.sdf_accumulation {
        SdfAccumulation::Magnitude => "magnitude",
        SdfAccumulation::Signed => "signed",
    };
    format!(
        "r_f = {}\n\
         n_div = {}\n\
         knn = {}\n\
         alpha_dist = {}\n\
         alpha_class = {}\n\
         sigma_grad = {}\n\
         sigma_desc = {}\n\
         k_dist = {}\n\
         k_consist = {}\n\
         k_axis = {}\n\
         k_overlap = {}\n\
         max_keypoints = {}\n\
         ransac_iterations = {}\n\
         seed = {}\n\
         d_lim = {}\n\
         curvature_source = {}\n\
         sdf_accumulation = {}\n\
         early_exit_inlier_ratio = {}\n",
        cfg.r_f,
        cfg.n_div,
        cfg.knn,
        cfg.alpha_dist,
        cfg.alpha_class,
        cfg.sigma_grad,
        cfg.sigma_desc,
        cfg.k_dist,
        cfg.k_consist,
        cfg.k_axis,
        cfg.k_overlap,
        cfg.max_keypoints,
        cfg.ransac_iterations,
        cfg.seed,
        fmt_opt(cfg.d_lim),
        curvature,
        accumulation,
        fmt_opt(cfg.early_exit_inlier_ratio),
    )
}

/// Applies `key = value` overrides from `text` on top of `base`.
pub fn parse_config(text: &str, base: &PipelineConfig) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = base.clone();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::MissingEquals { line })?;
        let key = key.trim();
        let value = value.trim();
        let bad = || ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };

        let parse_f64 = |field: &mut f64| -> Result<(), ConfigError> {
            *field = value.parse().map_err(|_| bad())?;
            if !field.is_finite() {
                return Err(bad());
            }
            Ok(())
        };
        let parse_usize = |field: &mut usize| -> Result<(), ConfigError> {
            *field = value.parse().map_err(|_| bad())?;
            Ok(())
        };
        let parse_opt_f64 = |field: &mut Option<f64>| -> Result<(), ConfigError> {
            if value.eq_ignore_ascii_case("none") {
                *field = None;
                return Ok(());
            }
            let v: f64 = value.parse().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            *field = Some(v);
            Ok(())
        };

        match key {
            "r_f" => parse_f64(&mut cfg.r_f)?,
            "n_div" => parse_usize(&mut cfg.n_div)?,
            "knn" => parse_usize(&mut cfg.knn)?,
            "alpha_dist" => parse_f64(&mut cfg.alpha_dist)?,
            "alpha_class" => parse_f64(&mut cfg.alpha_class)?,
            "sigma_grad" => parse_f64(&mut cfg.sigma_grad)?,
            "sigma_desc" => parse_f64(&mut cfg.sigma_desc)?,
            "k_dist" => parse_f64(&mut cfg.k_dist)?,
            "k_consist" => parse_f64(&mut cfg.k_consist)?,
            "k_axis" => parse_f64(&mut cfg.k_axis)?,
            "k_overlap" => parse_f64(&mut cfg.k_overlap)?,
            "max_keypoints" => parse_usize(&mut cfg.max_keypoints)?,
            "ransac_iterations" => parse_usize(&mut cfg.ransac_iterations)?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
            "d_lim" => parse_opt_f64(&mut cfg.d_lim)?,
            "curvature_source" => {
                cfg.curvature_source = match value {
                    "hessian" => CurvatureSource::HessianEigenvalues,
                    "structure_tensor" => CurvatureSource::StructureTensorEigenvalues,
                    _ => return Err(bad()),
                }
            }
            "sdf_accumulation" => {
                cfg.sdf_accumulation = match value {
                    "magnitude" => SdfAccumulation::Magnitude,
                    "signed" => SdfAccumulation::Signed,
                    _ => return Err(bad()),
                }
            }
            "early_exit_inlier_ratio" => parse_opt_f64(&mut cfg.early_exit_inlier_ratio)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    Ok(cfg)
}
