//! `rcac-fw`: runs RCAC fixed-wing scenarios and experiment matrices.

mod plot;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rcac_autopilot::autopilot::LoopId;
use rcac_autopilot::scenario::{run_matrix, run_scenario, RunOutcome, RunStatus, ScenarioConfig};
use rcac_autopilot::vehicle::FailureConfig;
use rcac_autopilot::{compute_metrics_after, FlightLog, MissionPlan};

use plot::{Panel, Series};

const EXIT_ERROR: u8 = 1;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_MISSION_INCOMPLETE: u8 = 4;
const EXIT_SIMULATOR_FAULT: u8 = 5;

#[derive(Parser)]
#[command(name = "rcac-fw", version, about = "RCAC-augmented fixed-wing autopilot experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one scenario and write its log, gain trace, report and plots.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Output root; the run goes into `<out>/<scenario name>`.
        #[arg(long, env = "RCAC_FW_OUT")]
        out: Option<PathBuf>,
    },
    /// Fly several scenarios and tabulate metrics normalized by a benchmark.
    Matrix {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Name of the scenario whose metrics normalize the others.
        #[arg(long)]
        benchmark: String,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, env = "RCAC_FW_OUT")]
        out: Option<PathBuf>,
    },
    /// Recompute the error metrics of a flight-log CSV.
    Metrics {
        log: PathBuf,
        /// Seconds excluded from the start of the log.
        #[arg(long, default_value_t = 0.0)]
        warmup: f64,
    },
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Flight duration, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Gain detuning factor applied to all fixed gains.
    #[arg(long = "alpha-d")]
    alpha_d: Option<f64>,
    #[arg(long, value_enum)]
    adaptive: Option<Switch>,
    /// Freeze the left aileron: `<angle rad>@<time s>`, e.g. `0.05@10`.
    #[arg(long = "stuck-left-aileron", value_parser = parse_stuck)]
    stuck_left_aileron: Option<(f64, f64)>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

fn parse_stuck(text: &str) -> Result<(f64, f64), String> {
    let (angle, time) = text
        .split_once('@')
        .ok_or_else(|| format!("expected <rad>@<s>, got `{text}`"))?;
    let angle: f64 = angle.trim().parse().map_err(|e| format!("angle: {e}"))?;
    let time: f64 = time.trim().parse().map_err(|e| format!("time: {e}"))?;
    Ok((angle, time))
}

impl Overrides {
    fn apply(&self, config: &mut ScenarioConfig) -> Result<()> {
        if let Some(d) = self.duration {
            config.duration = d;
        }
        if let Some(a) = self.alpha_d {
            config.set_alpha_d(a);
        }
        if let Some(s) = self.adaptive {
            config.adaptive.enabled = matches!(s, Switch::On);
        }
        if let Some((angle, time)) = self.stuck_left_aileron {
            config.failure = FailureConfig {
                alpha_d: config.alpha_d,
                ..FailureConfig::stuck_left_aileron(angle, time)
            };
        }
        config
            .validate()
            .with_context(|| format!("scenario `{}` after command-line overrides", config.name))
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::load(path)?;
    overrides.apply(&mut config)?;
    Ok(config)
}

fn status_code(status: &RunStatus) -> u8 {
    match status {
        RunStatus::Success => 0,
        RunStatus::MissionIncomplete { .. } => EXIT_MISSION_INCOMPLETE,
        RunStatus::Divergence { .. } => EXIT_DIVERGENCE,
        RunStatus::SimulatorFault { .. } => EXIT_SIMULATOR_FAULT,
    }
}

fn mission_series(plan: &MissionPlan) -> Series {
    let mut points: Vec<(f64, f64)> = plan.waypoints.iter().map(|w| (w.position[1], w.position[0])).collect();
    if plan.looping {
        points.push(points[0]);
    }
    Series {
        label: "mission".into(),
        points,
        dashed: true,
    }
}

fn trajectory_plot(plan: &MissionPlan, outcomes: &[&RunOutcome]) -> String {
    let mut series = vec![mission_series(plan)];
    for o in outcomes {
        series.push(Series::new(
            o.name.clone(),
            o.log.records.iter().map(|r| (r.position[1], r.position[0])).collect(),
        ));
    }
    plot::render(
        &[Panel {
            title: "Ground track".into(),
            x_label: "east (m)".into(),
            y_label: "north (m)".into(),
            series,
            equal_aspect: true,
        }],
        1,
    )
}

fn gain_plot(outcomes: &[&RunOutcome]) -> String {
    let mut panels = Vec::new();
    for (l, id) in LoopId::ALL.iter().enumerate() {
        for (g, gain) in ["K_p", "K_i"].iter().enumerate() {
            panels.push(Panel {
                title: format!("{} {gain}", id.name()),
                x_label: "time (s)".into(),
                y_label: (*gain).into(),
                series: outcomes
                    .iter()
                    .map(|o| {
                        Series::new(
                            o.name.clone(),
                            o.log.records.iter().map(|r| (r.time, r.gains[l][g])).collect(),
                        )
                    })
                    .collect(),
                equal_aspect: false,
            });
        }
    }
    plot::render(&panels, 2)
}

fn write_run(dir: &Path, config: &ScenarioConfig, outcome: &RunOutcome) -> Result<()> {
    outcome
        .write_outputs(dir, None)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    fs::write(dir.join("trajectory.svg"), trajectory_plot(&config.mission, &[outcome]))?;
    fs::write(dir.join("gains.svg"), gain_plot(&[outcome]))?;
    Ok(())
}

fn cmd_run(path: &Path, overrides: &Overrides, out: Option<PathBuf>) -> Result<u8> {
    let config = load(path, overrides)?;
    let dir = match (out, &config.output_dir) {
        (Some(root), _) => root.join(&config.name),
        (None, Some(dir)) => dir.clone(),
        (None, None) => PathBuf::from("out").join(&config.name),
    };
    let outcome = run_scenario(&config)?;
    write_run(&dir, &config, &outcome)?;
    print!("{}", outcome.report(None));
    eprintln!("wrote {}", dir.display());
    Ok(status_code(&outcome.status))
}

fn cmd_matrix(paths: &[PathBuf], benchmark: &str, overrides: &Overrides, out: Option<PathBuf>) -> Result<u8> {
    let mut configs = paths.iter().map(|p| load(p, overrides)).collect::<Result<Vec<_>>>()?;
    if !configs.iter().any(|c| c.name == benchmark) {
        bail!("no scenario named `{benchmark}` among the inputs");
    }
    for c in &mut configs {
        c.benchmark = c.name == benchmark;
    }
    let report = run_matrix(&configs)?;
    let root = out.unwrap_or_else(|| PathBuf::from("out").join("matrix"));
    fs::create_dir_all(&root)?;
    for ((config, outcome), normalized) in configs.iter().zip(&report.outcomes).zip(&report.normalized) {
        let dir = root.join(&outcome.name);
        outcome.write_outputs(&dir, normalized.as_ref())?;
        fs::write(dir.join("trajectory.svg"), trajectory_plot(&config.mission, &[outcome]))?;
    }
    let all: Vec<&RunOutcome> = report.outcomes.iter().collect();
    let plan = &configs[report.benchmark].mission;
    fs::write(root.join("trajectories.svg"), trajectory_plot(plan, &all))?;
    fs::write(root.join("gains.svg"), gain_plot(&all))?;
    let table = report.table();
    fs::write(root.join("comparison.txt"), &table)?;
    print!("{table}");
    eprintln!("wrote {}", root.display());
    let codes: Vec<u8> = report.outcomes.iter().map(|o| status_code(&o.status)).collect();
    let worst = [EXIT_SIMULATOR_FAULT, EXIT_DIVERGENCE, EXIT_MISSION_INCOMPLETE]
        .into_iter()
        .find(|c| codes.contains(c))
        .unwrap_or(0);
    Ok(worst)
}

fn cmd_metrics(path: &Path, warmup: f64) -> Result<u8> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let log = FlightLog::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    log.validate()?;
    let m = compute_metrics_after(&log, warmup)?;
    println!("j_phi_rad = {}", m.j_phi);
    println!("j_theta_rad = {}", m.j_theta);
    println!("j_traj_m = {}", m.j_traj);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides, out } => cmd_run(&config, &overrides, out),
        Command::Matrix {
            configs,
            benchmark,
            overrides,
            out,
        } => cmd_matrix(&configs, &benchmark, &overrides, out),
        Command::Metrics { log, warmup } => cmd_metrics(&log, warmup),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stuck_flag_parses() {
        assert_eq!(parse_stuck("0.05@10"), Ok((0.05, 10.0)));
        assert_eq!(parse_stuck(" -0.02 @ 3.5"), Ok((-0.02, 3.5)));
        assert!(parse_stuck("0.05").is_err());
        assert!(parse_stuck("x@1").is_err());
    }

    #[test]
    fn overrides_reach_the_config() {
        let mut c = ScenarioConfig::default();
        let o = Overrides {
            duration: Some(12.0),
            alpha_d: Some(0.5),
            adaptive: Some(Switch::On),
            stuck_left_aileron: Some((0.05, 3.0)),
        };
        o.apply(&mut c).unwrap();
        assert_eq!(c.duration, 12.0);
        assert_eq!(c.alpha_d, 0.5);
        assert_eq!(c.failure.alpha_d, 0.5);
        assert!(c.adaptive.enabled);
        assert_eq!(c.failure.stuck_angle, 0.05);
    }

    #[test]
    fn unpowered_override_is_refused() {
        let mut c = ScenarioConfig::default();
        let o = Overrides {
            alpha_d: Some(0.0),
            ..Default::default()
        };
        assert!(o.apply(&mut c).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
