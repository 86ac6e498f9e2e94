//! Command line, file formats, and bundled example patterns for the
//! morphshell simulator. The numerical model lives in `morphshell-core`;
//! this crate wires it to configs, meshes on disk, exports, and the four
//! subcommands (`run`, `verify`, `compare`, `sweep`).

pub mod commands;
pub mod config;
pub mod error;
pub mod fields;
pub mod meshio;
pub mod patterns;

use std::path::PathBuf;

use crate::commands::compare::CompareOptions;
use crate::commands::sweep::SweepOptions;
use crate::commands::verify::VerifyOptions;
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

const USAGE: &str = "\
morphshell — reduced-order simulation of heat-driven morphing in patterned
bilayer sheets

USAGE:
    morphshell run <config.toml> [--target <strain>] [--output <dir>]
                   [--tolerance <tol>] [--snapshot-every <n>]
                   [--stretch-scale <s>] [--coupling <c>]
                   [--reference <mesh>] [--grid <n>] [--quiet]
    morphshell verify [--mesh <path>] [--regions <path>] [--samples <n>]
    morphshell compare --sim <mesh> --reference <mesh> [--grid <n>]
                   [--output <report>]
    morphshell sweep <config.toml> --targets <s1,s2,...> [--jobs <n>]
                   [--output <dir>]

Flags override config entries, which override built-in defaults.
Exit codes: 0 success, 2 input error, 3 non-convergence,
4 verification breach.
";

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        print!("{USAGE}");
        return Err(CliError::input("missing subcommand".into()));
    };
    match command.as_str() {
        "run" => command_run(&args[1..]),
        "verify" => command_verify(&args[1..]),
        "compare" => command_compare(&args[1..]),
        "sweep" => command_sweep(&args[1..]),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::input(format!(
            "unknown subcommand '{other}' (try --help)"
        ))),
    }
}

struct ArgStream<'a> {
    args: &'a [String],
    index: usize,
}

impl<'a> ArgStream<'a> {
    fn new(args: &'a [String]) -> Self {
        Self { args, index: 0 }
    }

    fn next(&mut self) -> Option<&'a str> {
        let v = self.args.get(self.index).map(|s| s.as_str());
        if v.is_some() {
            self.index += 1;
        }
        v
    }

    fn value(&mut self, flag: &str) -> Result<&'a str, CliError> {
        self.next()
            .ok_or_else(|| CliError::input(format!("{flag} needs a value")))
    }

    fn parse<T: std::str::FromStr>(&mut self, flag: &str) -> Result<T, CliError> {
        let raw = self.value(flag)?;
        raw.parse()
            .map_err(|_| CliError::input(format!("cannot parse {flag} value '{raw}'")))
    }
}

fn command_run(args: &[String]) -> Result<(), CliError> {
    let mut stream = ArgStream::new(args);
    let mut config_path: Option<PathBuf> = None;
    let mut overrides = Overrides::default();
    let mut quiet = false;
    while let Some(arg) = stream.next() {
        match arg {
            "--target" => overrides.target_strain = Some(stream.parse("--target")?),
            "--output" => overrides.output_directory = Some(stream.value("--output")?.into()),
            "--tolerance" => overrides.tolerance = Some(stream.parse("--tolerance")?),
            "--snapshot-every" => {
                overrides.snapshot_every = Some(stream.parse("--snapshot-every")?)
            }
            "--stretch-scale" => overrides.stretch_scale = Some(stream.parse("--stretch-scale")?),
            "--coupling" => overrides.coupling = Some(stream.parse("--coupling")?),
            "--reference" => overrides.reference = Some(stream.value("--reference")?.into()),
            "--grid" => overrides.grid = Some(stream.parse("--grid")?),
            "--quiet" => quiet = true,
            other if !other.starts_with('-') && config_path.is_none() => {
                config_path = Some(other.into());
            }
            other => return Err(CliError::input(format!("unexpected argument '{other}'"))),
        }
    }
    let config_path =
        config_path.ok_or_else(|| CliError::input("run needs a config file".into()))?;
    let mut config = RunConfig::load(&config_path)?;
    config.apply_overrides(&overrides)?;
    commands::run::execute(&config, quiet).map(|_| ())
}

fn command_verify(args: &[String]) -> Result<(), CliError> {
    let mut stream = ArgStream::new(args);
    let mut options = VerifyOptions::default();
    while let Some(arg) = stream.next() {
        match arg {
            "--mesh" => options.mesh = Some(stream.value("--mesh")?.into()),
            "--regions" => options.regions = Some(stream.value("--regions")?.into()),
            "--samples" => options.samples = stream.parse("--samples")?,
            other => return Err(CliError::input(format!("unexpected argument '{other}'"))),
        }
    }
    commands::verify::run(&options)
}

fn command_compare(args: &[String]) -> Result<(), CliError> {
    let mut stream = ArgStream::new(args);
    let mut sim: Option<PathBuf> = None;
    let mut reference: Option<PathBuf> = None;
    let mut grid = 10usize;
    let mut output: Option<PathBuf> = None;
    while let Some(arg) = stream.next() {
        match arg {
            "--sim" => sim = Some(stream.value("--sim")?.into()),
            "--reference" => reference = Some(stream.value("--reference")?.into()),
            "--grid" => grid = stream.parse("--grid")?,
            "--output" => output = Some(stream.value("--output")?.into()),
            other => return Err(CliError::input(format!("unexpected argument '{other}'"))),
        }
    }
    let options = CompareOptions {
        sim: sim.ok_or_else(|| CliError::input("compare needs --sim".into()))?,
        reference: reference.ok_or_else(|| CliError::input("compare needs --reference".into()))?,
        grid,
        output,
    };
    commands::compare::run(&options).map(|_| ())
}

fn command_sweep(args: &[String]) -> Result<(), CliError> {
    let mut stream = ArgStream::new(args);
    let mut config: Option<PathBuf> = None;
    let mut targets: Vec<f64> = Vec::new();
    let mut jobs = 0usize;
    let mut output: Option<PathBuf> = None;
    while let Some(arg) = stream.next() {
        match arg {
            "--targets" => {
                let raw = stream.value("--targets")?;
                for part in raw.split(',') {
                    let value: f64 = part.trim().parse().map_err(|_| {
                        CliError::input(format!("cannot parse sweep target '{part}'"))
                    })?;
                    targets.push(value);
                }
            }
            "--jobs" => jobs = stream.parse("--jobs")?,
            "--output" => output = Some(stream.value("--output")?.into()),
            other if !other.starts_with('-') && config.is_none() => config = Some(other.into()),
            other => return Err(CliError::input(format!("unexpected argument '{other}'"))),
        }
    }
    let options = SweepOptions {
        config: config.ok_or_else(|| CliError::input("sweep needs a config file".into()))?,
        targets,
        jobs,
    };
    if let Some(dir) = output {
        let mut base = RunConfig::load(&options.config)?;
        base.output.directory = dir;
        return commands::sweep::run_sweep_with_base(&options, base);
    }
    commands::sweep::run_sweep(&options)
}
