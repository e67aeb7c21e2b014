//! File formats: the CKTS binary container, run configuration text, raster
//! images and CSV tables.

pub mod ckts;
pub mod config;
pub mod export;

pub use ckts::{
    decode_ckts, encode_ckts, read_ckts, read_image, read_kt_data, read_mask, read_sensitivities, write_ckts,
    write_ckts_as, CktsHeader, CktsObject, Dtype, Kind, KtSamples,
};
pub use config::{parse_config, render_config, RunConfig, RunOptions};
pub use export::{error_map, export_frame, export_region, export_yt, write_history_csv, write_metrics_csv, Window};
