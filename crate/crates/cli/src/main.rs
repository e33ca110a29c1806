use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sphereflow_cli::{
    cmd_check, list_scenarios, load_config, private_output_dirs, run_all, Overrides, EXIT_INTERNAL, EXIT_MISMATCH, EXIT_OK,
};

#[derive(Parser)]
#[command(name = "sphereflow", version, about = "Rotationally symmetric expanding curvature flows on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OverrideArgs {
    /// Override grid.num_points.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Override engine.t_max.
    #[arg(long)]
    t_max: Option<f64>,
    /// Override output.dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid_points: self.grid_points,
            t_max: self.t_max,
            output_dir: self.output_dir.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more configurations and write monitors, final state and echoed config.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Number of runs executed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Static checks on phi: convexity, closure and the Firey condition.
    Check {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
        Command::Check { config, overrides, json } => {
            let report = load_config(&config, &overrides.overrides()).and_then(|cfg| cmd_check(&cfg));
            match report {
                Ok(r) => {
                    if json {
                        println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                    } else {
                        print!("{}", r.render_text());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    code(EXIT_INTERNAL)
                }
            }
        }
        Command::Run { configs, overrides, jobs } => {
            let ov = overrides.overrides();
            let mut loaded = Vec::new();
            for path in &configs {
                match load_config(path, &ov) {
                    Ok(c) => loaded.push(c),
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        return code(EXIT_INTERNAL);
                    }
                }
            }
            let stems: Vec<String> = configs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    format!("{i:02}_{stem}")
                })
                .collect();
            private_output_dirs(&mut loaded, &stems);
            let mut failed = false;
            let mut mismatch = false;
            for (path, result) in configs.iter().zip(run_all(&loaded, jobs)) {
                match result {
                    Ok(out) => {
                        println!(
                            "{}: {} after {} steps (t = {:.6}), expected {}, output in {}",
                            path.display(),
                            out.status.label(),
                            out.steps,
                            out.final_time,
                            out.expected.as_str(),
                            out.output_dir.display()
                        );
                        mismatch |= out.exit_code() != EXIT_OK;
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e:#}", path.display());
                        failed = true;
                    }
                }
            }
            if failed {
                code(EXIT_INTERNAL)
            } else if mismatch {
                code(EXIT_MISMATCH)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
