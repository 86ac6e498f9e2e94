//! The `sweep` command: independent runs of one configuration at several
//! target strains, each in its own output directory, executed concurrently.

use std::path::PathBuf;

use crate::commands::run;
use crate::config::RunConfig;
use crate::error::CliError;

pub struct SweepOptions {
    pub config: PathBuf,
    pub targets: Vec<f64>,
    /// Max concurrent solves (0 = one thread per target).
    pub jobs: usize,
}

pub fn run_sweep(options: &SweepOptions) -> Result<(), CliError> {
    let base = RunConfig::load(&options.config)?;
    run_sweep_with_base(options, base)
}

/// Sweep with an already-loaded base config (used when flags replace the
/// base output directory).
pub fn run_sweep_with_base(options: &SweepOptions, base: RunConfig) -> Result<(), CliError> {
    if options.targets.is_empty() {
        return Err(CliError::input("sweep needs at least one target".into()));
    }
    let mut configs = Vec::new();
    for &target in &options.targets {
        if !(target <= 0.0) {
            return Err(CliError::input(format!(
                "sweep target {target} must be <= 0"
            )));
        }
        let mut config = base.clone();
        config.schedule.target_strain = Some(target);
        config.schedule.temperature_ratio = None;
        config.output.directory = base
            .output
            .directory
            .join(format!("target_{}", fmt_target(target)));
        configs.push((target, config));
    }

    let jobs = if options.jobs == 0 {
        configs.len()
    } else {
        options.jobs.max(1)
    };
    let mut results: Vec<(f64, Result<run::RunSummary, CliError>)> = Vec::new();
    for chunk in configs.chunks(jobs) {
        let mut batch: Vec<(f64, Result<run::RunSummary, CliError>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(target, config)| {
                        let target = *target;
                        scope.spawn(move || (target, run::execute(config, true)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("no panic")).collect()
            });
        results.append(&mut batch);
    }

    let mut worst: Option<CliError> = None;
    for (target, result) in &results {
        match result {
            Ok(summary) => println!(
                "target {target}: converged in {} steps, aspect ratio {:.4} -> {}",
                summary.steps,
                summary.aspect_ratio,
                summary.output_directory.display()
            ),
            Err(e) => {
                println!("target {target}: {e}");
                let replace = match (&worst, e) {
                    (None, _) => true,
                    (Some(CliError::NonConvergence(_)), CliError::Input(_)) => true,
                    _ => false,
                };
                if replace {
                    worst = Some(e.clone());
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

/// Directory-name-safe rendering of a target strain.
fn fmt_target(target: f64) -> String {
    format!("{target:+.4}").replace('+', "p").replace('-', "m").replace('.', "_")
}
