pub mod edgelist;
pub mod manifest;
pub mod matrix_market;
pub mod stats;

pub use edgelist::{read_edge_list, write_edge_list};
pub use manifest::{ManifestRow, read_manifest, write_manifest};
pub use matrix_market::read_matrix_market_pattern;
pub use stats::{compute_stats, emit_scatter_csv, StatsReport};
