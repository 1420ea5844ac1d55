use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use storygraph_core::graph::Scope;
use storygraph_core::metrics::{mann_whitney_u, project_metrics, render_table, Alternative};
use storygraph_core::story::{parse_user_story, FormatMode};
use storygraph_server::journal::Journal;

/// Offline tools over a storygraph data directory.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prints per-project graph metrics from a data directory.
    Metrics {
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Mann-Whitney U test of two comma-separated samples.
    MannWhitney {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "two-sided")]
        alternative: Alternative,
    },
    /// Parses one story and prints its segments.
    Parse {
        text: String,
        #[arg(long)]
        lenient: bool,
    },
}

fn sample(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn run(cli: Cli) -> Result<String, String> {
    match cli.command {
        Command::Metrics { data_dir, json } => {
            let (_, state) = Journal::open(&data_dir, usize::MAX).map_err(|e| e.to_string())?;
            let rows: Vec<_> = state
                .stories
                .projects()
                .map(|p| {
                    let count = state.stories.stories(&p.id, None, false).len();
                    project_metrics(p.id.clone(), count, &state.graphs.view(&Scope::project(p.id.clone())))
                })
                .collect();
            if json {
                Ok(serde_json::to_string_pretty(&rows).expect("metrics serialize"))
            } else {
                Ok(render_table(&rows))
            }
        }
        Command::MannWhitney { a, b, alternative } => {
            let r = mann_whitney_u(&sample(&a)?, &sample(&b)?, alternative).map_err(|e| e.to_string())?;
            Ok(serde_json::to_string_pretty(&r).expect("result serializes"))
        }
        Command::Parse { text, lenient } => {
            let mode = if lenient { FormatMode::Lenient } else { FormatMode::Strict };
            let parsed = parse_user_story(&text, mode).map_err(|e| e.to_string())?;
            Ok(serde_json::to_string_pretty(&parsed).map_err(|e| e.to_string())?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            println!("{}", out.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
