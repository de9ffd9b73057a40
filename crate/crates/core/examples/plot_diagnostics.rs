//! Runs a configuration into a directory and renders SVG plots of the tables.
//!
//! `cargo run --example plot_diagnostics -- [OUT_DIR]`

use std::path::PathBuf;

use crossdiff::io::csv::{OMEGA_SPACE, SCALARS};
use crossdiff::io::{plot_csv, run_to_dir};

fn main() -> crossdiff::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("crossdiff-plot-example"));
    run_to_dir(include_str!("configs/fast_diffusion.toml"), &out)?;
    for (table, log_log) in [(SCALARS, false), (OMEGA_SPACE, true)] {
        let svg = plot_csv(&out.join(table), None, log_log)?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}
