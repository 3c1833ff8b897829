//! File formats: the versioned submap archive, descriptor dumps,
//! pointcloud ingestion (ASCII PLY / XYZ), scene specs and the key=value
//! pipeline config. All readers treat their input as untrusted.

pub mod archive;
pub mod config;
pub mod descriptor_dump;
pub mod pointcloud;
pub mod scene_spec;

pub use archive::{read_submap, write_submap, ArchiveError, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use config::{parse_config, serialize_config, ConfigError};
pub use descriptor_dump::{read_descriptor_dump, write_descriptor_dump, DumpError};
pub use pointcloud::{load_pointcloud, parse_ply_ascii, parse_xyz, PointcloudError};
pub use scene_spec::{parse_scene_spec, SceneSpecError};
