use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use valley_runner::{emit_plotdata, resolve, run, ConfigFile, Overrides, PlotKind, ScenarioName};
use valley_core::Execution;

#[derive(Parser)]
#[command(name = "valley", version, about = "Large-order, spectrum and valley numerics for the asymmetric double well")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: case_a, case_b, case_c, case_d, fig3, fig4, valley_profile or custom.
    Run {
        scenario: Option<String>,
        /// JSON file with a `scenario` key plus overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Paper-scale grids instead of every fifth point.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Decimal digits for multiprecision work.
        #[arg(long, env = "VALLEY_PRECISION")]
        precision: Option<u32>,
        #[arg(long)]
        max_order: Option<usize>,
        /// Evaluate points one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Turn run artifacts into plot-ready CSV: fig3, fig4 or sr_profile.
    Plot {
        kind: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    ExitCode::from(status(dispatch(Cli::parse())))
}

/// 0 when every check passes, 1 on a tolerance failure, 2 on any error.
fn status(result: valley_runner::CliResult<bool>) -> u8 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> valley_runner::CliResult<bool> {
    match cli.command {
        Command::Run { scenario, config, full, out, precision, max_order, sequential } => {
            let name = scenario.as_deref().map(str::parse::<ScenarioName>).transpose()?;
            let cfg = config.as_deref().map(ConfigFile::load).transpose()?;
            let flags = Overrides { full, out, precision, max_order };
            let sc = resolve(name, cfg.as_ref(), &flags)?;
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let summary = run(&sc, exec)?;
            for (k, v) in &summary.metrics {
                println!("{k} = {v:.6e}");
            }
            for a in &summary.artifacts {
                println!("wrote {}", a.display());
            }
            if summary.pass {
                println!("{}: all {} points within tolerance", sc.name, summary.points);
            } else {
                eprintln!("{}: {} failing checks", sc.name, summary.failures.len());
                eprint!("{}", summary.failure_table());
            }
            Ok(summary.pass)
        }
        Command::Plot { kind, out } => {
            let kind: PlotKind = kind.parse()?;
            for p in emit_plotdata(&out, kind)? {
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::fs;
    use std::path::Path;

    use super::*;

    fn valley(args: &[&str]) -> u8 {
        let cli = Cli::try_parse_from(std::iter::once("valley").chain(args.iter().copied())).expect("arguments parse");
        status(dispatch(cli))
    }

    fn dir_arg(dir: &Path) -> &str {
        dir.to_str().unwrap()
    }

    #[test]
    fn fig4_run_writes_passing_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(valley(&["run", "fig4", "--out", dir_arg(dir.path())]), 0);
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig4_summary.json")).unwrap()).unwrap();
        assert_eq!(summary["pass"], true);
        let mut r = csv::Reader::from_path(dir.path().join("fig4.csv")).unwrap();
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["g2", "level", "dE_num", "dE_valley", "ratio", "precision"]);
        assert_eq!(r.records().count(), 6);

        assert_eq!(valley(&["plot", "fig4", "--out", dir_arg(dir.path())]), 0);
        let text = fs::read_to_string(dir.path().join("plot_fig4.csv")).unwrap();
        assert!(text.starts_with("# g2:"));
        assert!(text.lines().any(|l| l.starts_with("g2,level,dE_num,dE_valley,precision")));
    }

    #[test]
    fn reruns_are_bit_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(valley(&["run", "fig4", "--out", dir_arg(a.path())]), 0);
        assert_eq!(valley(&["run", "fig4", "--sequential", "--out", dir_arg(b.path())]), 0);
        assert_eq!(fs::read(a.path().join("fig4.csv")).unwrap(), fs::read(b.path().join("fig4.csv")).unwrap());
    }

    #[test]
    fn custom_config_runs_a_small_series_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        let out = dir.path().join("out");
        fs::write(
            &cfg,
            format!(
                r#"{{"scenario":"custom","epsilons":["0.5","1","2.5"],"n":[0],"side":"minus","max_order":80,"precision":30,"out":{:?},"tolerances":{{"a_rel":0.02,"c_rel":0.02}}}}"#,
                out.to_str().unwrap()
            ),
        )
        .unwrap();
        assert_eq!(valley(&["run", "--config", cfg.to_str().unwrap()]), 0);
        let mut r = csv::Reader::from_path(out.join("custom.csv")).unwrap();
        let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|row| &row[11] == "true"));
        // coefficients are cached for reuse
        assert!(fs::read_dir(out.join("series")).unwrap().count() >= 3);
    }

    #[test]
    fn tolerance_failures_exit_with_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        fs::write(&cfg, r#"{"scenario":"fig4","tolerances":{"fig4_final":1e-9}}"#).unwrap();
        assert_eq!(valley(&["run", "--config", cfg.to_str().unwrap(), "--out", dir_arg(dir.path())]), 1);
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig4_summary.json")).unwrap()).unwrap();
        assert_eq!(summary["failures"][0]["check"], "final ratio");
    }

    #[test]
    fn bad_input_exits_with_two() {
        assert_eq!(valley(&["run", "no_such_case"]), 2);
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(valley(&["plot", "fig3", "--out", dir_arg(dir.path())]), 2);
        assert_eq!(valley(&["plot", "histogram", "--out", dir_arg(dir.path())]), 2);
    }

    #[test]
    fn valley_profile_run_feeds_both_plots() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(valley(&["run", "valley_profile", "--out", dir_arg(dir.path())]), 0);
        assert_eq!(valley(&["plot", "sr_profile", "--out", dir_arg(dir.path())]), 0);
        assert!(dir.path().join("plot_sr_profile.csv").exists());
        assert!(dir.path().join("plot_sr_jacobian.csv").exists());
    }
}
