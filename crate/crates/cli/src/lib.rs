//! Command-line front end: `fhd <command> [flags]`.
//!
//! A run is described by a [`config::RunConfig`] assembled from built-in
//! defaults, an optional JSON file (`--config`) and flags, in that order of
//! precedence. Every flag sets exactly one JSON path of the config.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plots;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Command, RunConfig};
use error::{CliError, EXIT_OK};
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(
    name = "fhd",
    version,
    about = "Travelling waves of v_t = v^3 (v_xxx - v_x): existence, profiles, evolution, Lax-pair checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Scan the soliton existence test over a range of speeds.
    ScanExistence(Flags),
    /// Tabulate the pseudopotential and the separatrix phase portrait.
    Potential(Flags),
    /// Build the soliton profile by quadrature and by shooting.
    Profile(Flags),
    /// Evolve the soliton with the PDE solver and measure its speed.
    Evolve(Flags),
    /// Check the zero-curvature equation on the exact travelling wave.
    VerifyLax(Flags),
    /// Check that the general Lax evolution law reduces to the PDE.
    ReduceCheck(Flags),
}

/// Flags shared by all commands; the JSON path each one sets is noted.
#[derive(Debug, Default, Args)]
struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Wave speed Λ (params.lambda_speed).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Background level v0 (params.v0).
    #[arg(long, allow_negative_numbers = true)]
    v0: Option<f64>,
    /// Spectral parameter λ of the Lax pair (lambda_spec).
    #[arg(long, allow_negative_numbers = true)]
    lambda_spec: Option<f64>,
    /// Left end of the grid (grid.x_min).
    #[arg(long, allow_negative_numbers = true)]
    xmin: Option<f64>,
    /// Right end of the grid (grid.x_max).
    #[arg(long, allow_negative_numbers = true)]
    xmax: Option<f64>,
    /// Number of grid nodes (grid.n).
    #[arg(long)]
    n: Option<usize>,
    /// Final time of the evolution (evolve.t_final).
    #[arg(long)]
    t_final: Option<f64>,
    /// CFL constant of the time step (evolve.cfl_constant).
    #[arg(long)]
    cfl: Option<f64>,
    /// Store every k-th time step (evolve.output_stride).
    #[arg(long)]
    output_stride: Option<usize>,
    /// Write one trajectory CSV per stored frame (evolve.per_frame).
    #[arg(long)]
    per_frame: bool,
    /// First speed of the existence scan (scan.lambda_min).
    #[arg(long, allow_negative_numbers = true)]
    lambda_min: Option<f64>,
    /// Last speed of the existence scan (scan.lambda_max).
    #[arg(long, allow_negative_numbers = true)]
    lambda_max: Option<f64>,
    /// Number of scan samples, end points included (scan.steps).
    #[arg(long)]
    steps: Option<usize>,
    /// Rows of the potential and phase tables (potential.samples).
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory (output_dir).
    #[arg(long, value_name = "PATH", env = "FHD_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Also write a matplotlib script next to the data (emit_plots).
    #[arg(long)]
    emit_plots: bool,
}

impl Flags {
    fn overlay(&self) -> Value {
        let mut doc = json!({});
        let mut set = |path: &str, v: Option<Value>| {
            if let Some(v) = v {
                config::set_path(&mut doc, path, v);
            }
        };
        set("params.lambda_speed", self.lambda.map(Value::from));
        set("params.v0", self.v0.map(Value::from));
        set("lambda_spec", self.lambda_spec.map(Value::from));
        set("grid.x_min", self.xmin.map(Value::from));
        set("grid.x_max", self.xmax.map(Value::from));
        set("grid.n", self.n.map(Value::from));
        set("evolve.t_final", self.t_final.map(Value::from));
        set("evolve.cfl_constant", self.cfl.map(Value::from));
        set("evolve.output_stride", self.output_stride.map(Value::from));
        set(
            "evolve.per_frame",
            self.per_frame.then_some(Value::Bool(true)),
        );
        set("scan.lambda_min", self.lambda_min.map(Value::from));
        set("scan.lambda_max", self.lambda_max.map(Value::from));
        set("scan.steps", self.steps.map(Value::from));
        set("potential.samples", self.samples.map(Value::from));
        set(
            "output_dir",
            self.output_dir
                .as_ref()
                .map(|p| Value::from(p.to_string_lossy().into_owned())),
        );
        set("emit_plots", self.emit_plots.then_some(Value::Bool(true)));
        doc
    }
}

/// Outcome of argument parsing.
pub enum Parsed {
    Run(Box<RunConfig>),
    /// Help or version text was requested; print it and exit successfully.
    Info(String),
}

/// Parses arguments (program name first) into a resolved configuration.
pub fn parse_args<I, T>(args: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(Parsed::Info(e.render().to_string()))
                }
                _ => Err(CliError::Usage(e.render().to_string())),
            }
        }
    };
    let (command, flags) = match cli.command {
        Cmd::ScanExistence(f) => (Command::ScanExistence, f),
        Cmd::Potential(f) => (Command::Potential, f),
        Cmd::Profile(f) => (Command::Profile, f),
        Cmd::Evolve(f) => (Command::Evolve, f),
        Cmd::VerifyLax(f) => (Command::VerifyLax, f),
        Cmd::ReduceCheck(f) => (Command::ReduceCheck, f),
    };
    let mut doc = config::defaults();
    if let Some(path) = &flags.config {
        config::merge(&mut doc, config::read_config_file(path)?);
    }
    config::merge(&mut doc, flags.overlay());
    config::set_path(&mut doc, "command", json!(command.name()));
    Ok(Parsed::Run(Box::new(RunConfig::from_value(doc)?)))
}

/// Runs one workflow and returns its summary, including the files written.
pub fn run(cfg: &RunConfig) -> Result<Value, CliError> {
    let mut out = OutputDir::create(&cfg.output_dir, cfg.to_value())?;
    let mut summary = commands::dispatch(cfg, &mut out)?;
    if cfg.emit_plots {
        if let Some((name, text)) = plots::script(cfg.command) {
            out.write_text(&name, &text)?;
        }
    }
    let mut line = serde_json::Map::new();
    line.insert("command".into(), json!(cfg.command.name()));
    line.insert("status".into(), json!("ok"));
    line.insert(
        "output_dir".into(),
        json!(out.root().to_string_lossy().into_owned()),
    );
    line.insert("files".into(), json!(out.written()));
    line.append(&mut summary);
    Ok(Value::Object(line))
}

/// Full program: parse, run, print the one-line summary; returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(Parsed::Run(cfg)) => cfg,
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(e) => return report_failure(None, &e),
    };
    match run(&cfg) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => report_failure(Some(cfg.command), &e),
    }
}

fn report_failure(command: Option<Command>, e: &CliError) -> i32 {
    eprintln!("{}", e.to_string().trim_end());
    if !matches!(e, CliError::Usage(_)) {
        let line = json!({
            "command": command.map(Command::name),
            "status": "error",
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        });
        println!("{line}");
    }
    e.exit_code()
}
