mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Failure classes, mapped to exit codes 1 and 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl From<catbath::Error> for CliError {
    fn from(e: catbath::Error) -> Self {
        use catbath::Error as E;
        match e {
            E::InvalidDimension(_) | E::LayoutMismatch(_) | E::InvalidArgument(_) | E::DimensionOverflow { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "catbath", version, about = "Cat-state decoherence simulator")]
pub struct Cli {
    /// Directory receiving data files and the warning log.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Run data-parallel regions on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Analytic,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldState {
    /// Ideal `𝒩(|0⟩ + |α⟩)`.
    AmplitudeCat,
    /// Output of the photon-by-photon protocol, displaced by `α/2`.
    Synthesized,
    /// Field after reservoir coupling for `--t-ns` (analytic model).
    Decohered,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Swap angles, durations and Fock amplitudes of the cat protocol.
    PrepCat {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sideband couplings and Stark shifts per qubit.
    FloquetCalib {
        /// Device config; its modulated qubits are calibrated.
        #[arg(long, required_unless_present = "table")]
        config: Option<PathBuf>,
        /// CSV with columns name,xi_MHz,eps_MHz,nu_MHz,delta_MHz,K_MHz.
        #[arg(long, conflicts_with = "config")]
        table: Option<PathBuf>,
        /// Resonator frequency used with `--table`.
        #[arg(long, default_value_t = 5796.0)]
        omega_s_mhz: f64,
    },
    /// Coherence factor, field entropy and distinguishability versus time.
    Decohere {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n_qubits: Option<usize>,
        /// ns
        #[arg(long)]
        t_max: Option<f64>,
        /// ns
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value_t = Model::Analytic)]
        model: Model,
        /// Times (ns) at which to write field Wigner maps.
        #[arg(long, value_delimiter = ',')]
        wigner_at: Vec<f64>,
    },
    /// Wigner function of a field state on the configured grid.
    Wigner {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = FieldState::AmplitudeCat)]
        state: FieldState,
        /// Evolution time for `--state decohered`, ns.
        #[arg(long, default_value_t = 0.0)]
        t_ns: f64,
        /// Undo a mode rotation `R(ϑ)` before mapping, rad.
        #[arg(long)]
        derotate: Option<f64>,
    },
    /// Photon-number distribution from an ancilla Rabi trace.
    FitRabi {
        /// CSV with columns tau_ns,pe.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        xi_mhz: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 1.0)]
        pg0: f64,
        #[arg(long, default_value_t = 0.0)]
        pe0: f64,
        /// Fit an additive offset on `P_e`.
        #[arg(long)]
        free_offset: bool,
    },
    /// Synthetic ancilla Rabi trace for a photon-number distribution.
    SynthRabi {
        /// Comma-separated `P_0, P_1, …`.
        #[arg(long, value_delimiter = ',', required = true)]
        pn: Vec<f64>,
        #[arg(long)]
        xi_mhz: f64,
        #[arg(long, default_value_t = 500.0)]
        tau_max_ns: f64,
        #[arg(long, default_value_t = 251)]
        n_tau: usize,
        /// Standard deviation of additive Gaussian noise.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        pg0: f64,
        #[arg(long, default_value_t = 0.0)]
        pe0: f64,
    },
    /// Distinguishability from per-qubit tomography (printed to stdout).
    Disting {
        /// CSV with columns qubit,re00,im00,re01,im01,re10,im10,re11,im11.
        #[arg(long)]
        input: PathBuf,
    },
    /// Commanded Z amplitudes that realize target effective amplitudes.
    CrosstalkSolve {
        /// CSV with columns i,j,alpha (1-based qubit indices).
        #[arg(long)]
        coeffs: PathBuf,
        /// CSV with columns i,z_eff.
        #[arg(long)]
        targets: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
