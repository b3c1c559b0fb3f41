use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toda_core::actionangle::{
    action_angle_decoupled, action_angle_forced, angle_rates, hamiltonian_in_actions,
};
use toda_core::elliptic::{cnoidal_residual, CnoidalParams, WaveDirection};
use toda_core::experiment::check::{check_suite, default_check_config};
use toda_core::experiment::io::{write_atomic, write_trajectory_csv};
use toda_core::experiment::{
    figure_config, run_figure, sample_initial, simulate, ExperimentConfig,
};
use toda_core::integrator::{advance, decoupled_flow, IntegrationPlan};
use toda_core::lattice::energy;
use toda_core::scattering::{intertwiner, scattering_data, wave_op_free_limit, WaveOptions};
use toda_core::spectral::{eig_tridiag, JacobiMatrix};
use toda_core::{Result, System, TodaError};

#[derive(Parser)]
#[command(name = "toda", version, about = "Open and forced Toda chain laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value file with n, c, dt, t_end, seed, ic_mode, outputs
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the seeded initial state and write a trajectory CSV
    Simulate,
    /// Eigenvalues and first eigenvector components of the open Lax matrix
    Spectrum,
    /// Asymptotic velocities and phases of the open chain
    Scatter,
    /// Free-comparison wave operator of the forced chain (c > 0)
    Waveop,
    /// Intertwining defect of the forced and decoupled flows (c > 0)
    Intertwine,
    /// Action-angle coordinates (forced chain for c > 0, decoupled otherwise)
    Aa,
    /// Residual of the cnoidal travelling wave
    Cnoidal {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 0.3)]
        k: f64,
        #[arg(long, default_value_t = 6.0)]
        wavelength: f64,
        /// Finite-difference step in time
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Reproduce one of the five figures
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
        which: u8,
    },
    /// Run the self-check suite and write a JSON report
    Check,
}

impl Common {
    fn resolve(&self, base: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => base.apply_text(&fs::read_to_string(path)?)?,
            None => base,
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.outputs = v.clone();
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn require_forcing(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.c > 0.0 && cfg.n >= 3 {
        Ok(())
    } else {
        Err(TodaError::Domain(format!("needs c > 0 and N >= 3 (got c = {}, N = {})", cfg.c, cfg.n)))
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let common = &cli.common;
    match &cli.command {
        Command::Simulate => {
            let cfg = common.resolve(ExperimentConfig::default())?;
            let traj = simulate(&cfg)?;
            let path = cfg.outputs.join(format!("simulate_seed{}.csv", cfg.seed));
            write_trajectory_csv(&path, &traj.times, &traj.states)?;
            let drift = (energy(traj.last(), &traj.system)? - traj.h0).abs();
            println!("samples {}", traj.len());
            println!("energy_drift {drift:?}");
            println!("truncated {}", traj.truncated);
            println!("wrote {}", path.display());
        }
        Command::Spectrum => {
            let cfg = common.resolve(ExperimentConfig::default())?;
            let s = eig_tridiag(&JacobiMatrix::from_state(&sample_initial(&cfg))?)?;
            println!("lambda {}", list(&s.lambdas));
            println!("first_components {}", list(&s.first_components));
        }
        Command::Scatter => {
            let cfg = common.resolve(ExperimentConfig::default())?;
            let d = scattering_data(&sample_initial(&cfg))?;
            println!("alpha_plus {}", list(&d.alpha_plus));
            println!("beta_plus {}", list(&d.beta_plus));
            println!("alpha_minus {}", list(&d.alpha_minus));
            println!("beta_minus {}", list(&d.beta_minus));
        }
        Command::Waveop => {
            let cfg =
                common.resolve(ExperimentConfig { n: 5, c: 1.0, ..ExperimentConfig::default() })?;
            require_forcing(&cfg)?;
            let lim = wave_op_free_limit(&sample_initial(&cfg), cfg.c, &WaveOptions::default())?;
            println!("q {}", list(&lim.point.q));
            println!("p {}", list(&lim.point.p));
            println!("horizon {:?}", lim.horizon);
            println!("last_change {:?}", lim.last_change);
        }
        Command::Intertwine => {
            let cfg = common.resolve(ExperimentConfig {
                n: 4,
                c: 1.0,
                dt: 1e-4,
                ..ExperimentConfig::default()
            })?;
            require_forcing(&cfg)?;
            let opts = WaveOptions::default();
            let x = sample_initial(&cfg);
            let w = intertwiner(&x, cfg.c, &opts)?;
            for t in [1.0, 5.0, 10.0] {
                let plan = IntegrationPlan::new(System::Forced { c: cfg.c }, cfg.dt, t, 1)?;
                let ut = advance(&x, &plan.system, plan.dt, plan.steps())?;
                let defect =
                    decoupled_flow(&w, cfg.c, t)?.max_abs_diff(&intertwiner(&ut, cfg.c, &opts)?);
                println!("t {t:?} defect {defect:?}");
            }
        }
        Command::Aa => {
            let cfg =
                common.resolve(ExperimentConfig { n: 4, c: 1.0, ..ExperimentConfig::default() })?;
            let x = sample_initial(&cfg);
            let coords = if cfg.c > 0.0 {
                action_angle_forced(&x, cfg.c, &WaveOptions::default())?
            } else {
                action_angle_decoupled(&x, cfg.c)?
            };
            println!("theta {}", list(&coords.theta));
            println!("lambda {}", list(&coords.lam));
            println!("rates {}", list(&angle_rates(&coords)));
            println!("hamiltonian {:?}", hamiltonian_in_actions(&coords));
        }
        Command::Cnoidal { a, b, k, wavelength, step } => {
            let params = CnoidalParams::new(*a, *b, *k, *wavelength, WaveDirection::Plus)?;
            let grid: Vec<f64> = (0..40).map(|i| 0.25 * i as f64).collect();
            let res = cnoidal_residual(&params, -8..8, &grid, *step)?;
            println!("nu {:?}", params.nu);
            println!("residual {res:?}");
        }
        Command::Figure { which } => {
            let cfg = common.resolve(figure_config(*which)?)?;
            let out = run_figure(*which, &cfg)?;
            if let Some(rep) = &out.recurrence {
                match rep.unravel_time {
                    Some(t) => println!("unravel_time {t:?}"),
                    None => println!("unravel_time none"),
                }
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Check => {
            let cfg = common.resolve(default_check_config())?;
            let report = check_suite(&cfg);
            let json = report.to_json();
            write_atomic(&cfg.outputs.join("check_report.json"), json.as_bytes())?;
            println!("{json}");
            return Ok(report.all_passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
