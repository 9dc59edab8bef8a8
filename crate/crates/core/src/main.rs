use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use relplan::io::{run, run_toy_orbit, Overrides, RunConfig, EXIT_CLEAN, EXIT_FAULT};
use relplan::stability::ToyOrbitConfig;

/// Relative-frame local planning simulator.
#[derive(Debug, Parser)]
#[command(name = "relplan", version)]
struct Cli {
    /// Scenario file (TOML). Required unless --toy-orbit is given.
    #[arg(long, value_name = "PATH", required_unless_present = "toy_orbit")]
    scenario: Option<PathBuf>,

    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Speed sensor offset [m/s].
    #[arg(long, value_name = "MPS", allow_hyphen_values = true)]
    v_offset: Option<f64>,

    /// Speed sensor standard deviation [m/s].
    #[arg(long, value_name = "MPS")]
    sigma_v: Option<f64>,

    /// Yaw-rate sensor offset [deg/s].
    #[arg(long, value_name = "DPS", allow_hyphen_values = true)]
    yawrate_offset_dps: Option<f64>,

    /// Yaw-rate sensor standard deviation [deg/s].
    #[arg(long, value_name = "DPS")]
    sigma_yawrate_dps: Option<f64>,

    /// Simulated duration [s].
    #[arg(long, value_name = "S")]
    duration: Option<f64>,

    #[arg(long, value_name = "HZ")]
    replan_hz: Option<f64>,

    /// Planning horizon [s].
    #[arg(long, value_name = "S")]
    horizon: Option<f64>,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Skip the decimated candidate pool in frame records.
    #[arg(long)]
    no_pool: bool,

    /// Run the synthetic stability orbit instead of a driving scene.
    #[arg(long)]
    toy_orbit: bool,

    /// Toy orbit step gain.
    #[arg(long, default_value_t = 0.5)]
    toy_gain: f64,

    /// Toy orbit planned step cap.
    #[arg(long, default_value_t = 0.5)]
    toy_cap: f64,

    /// Toy orbit disturbance bound.
    #[arg(long, default_value_t = 0.01)]
    toy_eps: f64,

    /// Toy orbit step count.
    #[arg(long, default_value_t = 1000)]
    toy_steps: usize,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.toy_orbit {
        let cfg = ToyOrbitConfig {
            step_gain: cli.toy_gain,
            step_cap: cli.toy_cap,
            eps_bound: cli.toy_eps,
            n_steps: cli.toy_steps,
            seed: cli.seed.unwrap_or(0),
            ..ToyOrbitConfig::default()
        };
        return match run_toy_orbit(&cfg, &cli.out) {
            Ok(b) => {
                println!(
                    "contained={} rho_bar={:.6} eta_hat={:.6} radius={:.6} entry_step={:?}",
                    b.contained, b.rho_bar, b.eta_hat, b.containment_radius, b.entry_step
                );
                code(EXIT_CLEAN)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(EXIT_FAULT)
            }
        };
    }

    let config = RunConfig {
        scenario_path: cli.scenario.expect("required by clap"),
        overrides: Overrides {
            seed: cli.seed,
            v_offset: cli.v_offset,
            sigma_v: cli.sigma_v,
            yawrate_offset_dps: cli.yawrate_offset_dps,
            sigma_yawrate_dps: cli.sigma_yawrate_dps,
            duration: cli.duration,
            replan_hz: cli.replan_hz,
            horizon: cli.horizon,
        },
        output_dir: cli.out,
        log_pool: !cli.no_pool,
    };
    match run(&config) {
        Ok(s) => {
            println!(
                "scenario={} seed={} frames={} collision={} min_lane_margin_m={:.3} fallback_frames={} exit={}",
                s.scenario, s.seed, s.frames, s.collision, s.min_lane_margin_m, s.fallback_frames, s.exit_code
            );
            if let Some(f) = &s.fault {
                eprintln!("fault: {f}");
            }
            code(s.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            code(EXIT_FAULT)
        }
    }
}
