//! The `compare` command: align one shape onto another and report SSIM
//! and aspect ratios.

use std::path::{Path, PathBuf};

use crate::commands::run::compare_surfaces;
use crate::error::CliError;
use crate::meshio;

pub struct CompareOptions {
    pub sim: PathBuf,
    pub reference: PathBuf,
    pub grid: usize,
    pub output: Option<PathBuf>,
}

pub fn run(options: &CompareOptions) -> Result<f64, CliError> {
    let sim = meshio::load_surface(&options.sim)?;
    let reference = meshio::load_surface(&options.reference)?;
    let report_path = options
        .output
        .clone()
        .unwrap_or_else(|| Path::new("compare.txt").to_path_buf());
    let mean = compare_surfaces(&sim, &reference, options.grid, &report_path)?;
    println!("mean ssim {mean:.6} (report: {})", report_path.display());
    Ok(mean)
}
