//! Regenerates the bundled pattern meshes, configs, and shrink curve.
//!
//! Usage: `cargo run -p morphshell-cli --bin gen_patterns -- [dir]`
//! (default `data`). The checked-in files under `data/` come from this
//! generator; rerun it after touching the pattern definitions.

use std::path::PathBuf;

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data".to_string())
        .into();
    match morphshell_cli::patterns::write_bundle(&dir) {
        Ok(()) => {
            for pattern in morphshell_cli::patterns::Pattern::ALL {
                let (n, e, t) = pattern.expected_counts();
                println!("{}: {n} nodes, {e} edges, {t} triangles", pattern.name());
            }
            println!("bundle written to {}", dir.display());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
