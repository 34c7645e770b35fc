use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use outstab::integrate::IntegratorConfig;
use outstab::systems::{GFunction, Params};

#[derive(Debug, Parser)]
#[command(name = "outstab", version, about = "Output-stability laboratory: certificates, convergence bounds, Barbalat tests")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog systems and certificate presets.
    ListSystems(ListArgs),
    /// Integrate one initial condition and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Check a certificate's hypotheses on sampled states and trajectories.
    Certify(CertifyArgs),
    /// Evaluate the analytic uniform convergence-time bound T(eps, R).
    Tconv(TconvArgs),
    /// Measure convergence times over sampled initial conditions.
    Sweep(SweepArgs),
    /// Tabulate empirical output envelopes per radius and time.
    Envelope(EnvelopeArgs),
    /// Classify a sampled signal (quasi-uniform continuity, relaxed Barbalat lemma).
    Barbalat(BarbalatArgs),
    /// Run the adaptive-control pipeline on the scalar demo plant.
    Adaptive(AdaptiveArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ListArgs {
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

/// System name plus parameter overrides.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SystemArgs {
    #[arg(long)]
    pub system: String,
    /// Parameter override `key=value` (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// The bounded nonlinearity: sin, tanh or const:<c>.
    #[arg(long, default_value = "sin")]
    pub g: String,
}

impl SystemArgs {
    pub fn params(&self) -> anyhow::Result<Params> {
        let g: GFunction = self.g.parse()?;
        let mut p = Params::new().with_g(g);
        for pair in &self.params {
            p.insert_pair(pair)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IntegArgs {
    /// Final time (default depends on the subcommand).
    #[arg(long)]
    pub tf: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Fixed step of the delay integrator; must divide the delay.
    #[arg(long, default_value_t = 0.01)]
    pub dde_step: f64,
}

impl IntegArgs {
    pub fn config(&self, default_tf: f64) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rtol,
            abs_tol: self.atol,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            t_final: self.tf.unwrap_or(default_tf),
            dde_step: self.dde_step,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub integ: IntegArgs,
    /// Initial state, comma separated. For delay systems: the value at s = 0.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub x0: Vec<f64>,
    /// Delay systems: value at s = -r of a linear initial history (default: constant).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0_past: Option<Vec<f64>>,
    /// CSV output path (default: standard output).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub integ: IntegArgs,
    /// Certificate preset (see list-systems).
    #[arg(long)]
    pub cert: String,
    /// Hypothesis set to check; defaults to the preset's own.
    #[arg(long)]
    pub target: Option<String>,
    /// Radius of the sampled ball.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Sampled states.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Trajectories, started from the ball of radius --traj-radius.
    #[arg(long, default_value_t = 20)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 1.0)]
    pub traj_radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_rel: f64,
    /// JSON report path (default: standard output).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TconvArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub cert: String,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = outstab::convergence::DEFAULT_SUP_SAMPLES)]
    pub sup_samples: usize,
    #[arg(long, default_value_t = outstab::convergence::DEFAULT_MIN_GRID)]
    pub min_grid: usize,
    #[arg(long, default_value_t = outstab::convergence::SUP_INFLATION)]
    pub inflation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub integ: IntegArgs,
    /// Certificate preset supplying the analytic bound (optional).
    #[arg(long)]
    pub cert: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Horizon override (default max(10, 2 T_analytic), or --tf without a bound).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Share of ODE samples placed on the sphere |x| = R.
    #[arg(long, default_value_t = outstab::convergence::DEFAULT_BOUNDARY_FRACTION)]
    pub boundary_fraction: f64,
    /// Per-sample CSV: sample_id,x0_1..x0_n,x0_norm,T_emp.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// |y(t)| fan chart and T_emp vs |x0| scatter.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub integ: IntegArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
    pub radii: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10")]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub per_radius: usize,
    #[arg(long)]
    pub seed: u64,
    /// Table as CSV: t, then one column per radius, then a final zeta row.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BarbalatArgs {
    /// Catalog signal name or path to a trajectory CSV.
    #[arg(long)]
    pub signal: String,
    /// CSV column holding the signal.
    #[arg(long, default_value = "y1")]
    pub column: String,
    /// Grid step; for a CSV with a non-uniform time column the data are
    /// linearly resampled onto this grid.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Catalog signals only.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.01")]
    pub eps: Vec<f64>,
    /// rho for the lemma check: linear:c, quadratic:c, power:c:p, capped:c:cap, bump:c.
    #[arg(long, default_value = "linear:1")]
    pub rho: String,
    /// Slope M for the sufficient condition f(t) - M t non-increasing.
    #[arg(long)]
    pub m: Option<f64>,
    /// Tail window for the lemma's conclusion, as a share of the horizon.
    #[arg(long, default_value_t = outstab::barbalat::DEFAULT_TAIL_FRACTION)]
    pub tail_fraction: f64,
    /// Analyse |f| instead of f (signed columns such as outputs).
    #[arg(long)]
    pub abs: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Basic,
    Redesigned,
}

#[derive(Debug, Args, Serialize)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub integ: IntegArgs,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long = "L", default_value_t = 2.0)]
    pub l: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_hat0: f64,
    #[arg(long, value_enum, default_value_t = Scheme::Redesigned)]
    pub scheme: Scheme,
    /// Samples of the uniformity sweep (0 skips it).
    #[arg(long, default_value_t = 200)]
    pub sweep: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampled states and trajectories for the certificate check.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub trajectories: usize,
    /// y(0) of the non-uniformity demo and of the SVG overlay.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub y0: f64,
    /// Initial parameter errors of the non-uniformity demo.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-2,-4,-6,-8")]
    pub z0: Vec<f64>,
    /// True parameters overlaid in the SVG, all from the same (y0, theta_hat0).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-2,0,1,3")]
    pub overlay_theta: Vec<f64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}
