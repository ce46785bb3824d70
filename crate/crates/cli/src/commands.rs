use std::path::Path;

use catbath::analysis::{self, branch_from_tomo, reservoir_distinguishability, DecoherenceRow};
use catbath::calib::{assemble_mcor, coefficients_from_entries, commanded_amplitudes};
use catbath::catprep::{backward_angles, make_amplitude_cat, synthesize_phase_cat, ideal_amplitude_cat, CatSpec};
use catbath::dynamics::{self, analytic_joint_state, ExactReservoir, PropagationMode, ReservoirSpec};
use catbath::floquet::{calibrate_all, effective_coupling, FloquetParams};
use catbath::hilbert::{DensityMatrix, Propagate, SpaceLayout, StateVector};
use catbath::par::Exec;
use catbath::tomography::{self, fit_photon_numbers, linspace, synthesize_rabi, FitOptions, RabiTrace};
use catbath::units::{mhz_to_rad, ns_to_s, rad_to_mhz};
use catbath::C64;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{DeviceConfig, QubitConfig};
use crate::io::{f, write_csv, write_warnings, Table};
use crate::{Cli, CliError, Command, FieldState, Model};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let out = cli.out_dir.as_path();
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", out.display())))?;
    match &cli.command {
        Command::PrepCat { config } => prep_cat(&DeviceConfig::load(config)?, out),
        Command::FloquetCalib { config, table, omega_s_mhz } => {
            let rows = match (config, table) {
                (Some(c), _) => config_floquet_rows(&DeviceConfig::load(c)?)?,
                (None, Some(t)) => table_floquet_rows(t, *omega_s_mhz)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            floquet_calib(rows, out, exec)
        }
        Command::Decohere { config, n_qubits, t_max, dt, model, wigner_at } => {
            let cfg = DeviceConfig::load(config)?;
            let n = n_qubits.unwrap_or(cfg.scenario.n_qubits);
            let times = cfg.times_ns(t_max.unwrap_or(cfg.scenario.t_max_ns), dt.unwrap_or(cfg.scenario.dt_ns));
            decohere(&cfg, n, &times, *model, wigner_at, out, exec)
        }
        Command::Wigner { config, state, t_ns, derotate } => {
            wigner(&DeviceConfig::load(config)?, *state, *t_ns, *derotate, out, exec)
        }
        Command::FitRabi { input, xi_mhz, n_max, pg0, pe0, free_offset } => {
            fit_rabi(input, *xi_mhz, *n_max, *pg0, *pe0, *free_offset, out)
        }
        Command::SynthRabi { pn, xi_mhz, tau_max_ns, n_tau, sigma, seed, pg0, pe0 } => {
            synth_rabi(pn, *xi_mhz, *tau_max_ns, *n_tau, *sigma, *seed, *pg0, *pe0, out)
        }
        Command::Disting { input } => {
            println!("{}", disting(input)?);
            Ok(())
        }
        Command::CrosstalkSolve { coeffs, targets } => crosstalk_solve(coeffs, targets, out),
    }
}

/// Times are printed on a 1e-6 ns lattice so that `i·dt` rounding noise does
/// not leak into files.
fn ns(t_ns: f64) -> String {
    f((t_ns * 1e6).round() / 1e6)
}

fn prep_cat(cfg: &DeviceConfig, out: &Path) -> Result<(), CliError> {
    let spec = CatSpec::even(cfg.scenario.alpha);
    // The first listed qubit performs the swaps; ξ only sets durations.
    let xi = mhz_to_rad(cfg.qubits[0].xi_MHz);
    let mut steps = backward_angles(&spec, xi)?;
    steps.reverse();
    write_csv(
        &out.join("prep_cat_steps.csv"),
        &["n", "theta_rad", "t_ns"],
        steps.iter().map(|s| vec![s.n.to_string(), f(s.theta), f(s.duration * 1e9)]),
    )?;
    let psi = synthesize_phase_cat(&spec, spec.cutoff_star + 1)?;
    write_csv(
        &out.join("prep_cat_fock.csv"),
        &["fock_n", "re", "im"],
        psi.amps().iter().enumerate().map(|(n, z)| vec![n.to_string(), f(z.re), f(z.im)]),
    )
}

type FloquetRows = (Vec<(String, FloquetParams)>, Vec<String>);

fn params_of(q: &QubitConfig, omega_s_mhz: f64) -> Result<Option<FloquetParams>, CliError> {
    match (q.eps_MHz, q.nu_MHz) {
        (Some(eps), Some(nu)) => Ok(Some(FloquetParams::from_mhz(q.xi_MHz, eps, nu, q.delta_MHz, q.K_MHz, omega_s_mhz)?)),
        _ => Ok(None),
    }
}

fn config_floquet_rows(cfg: &DeviceConfig) -> Result<FloquetRows, CliError> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for q in &cfg.qubits {
        match params_of(q, cfg.resonator.omega_s_MHz)? {
            Some(p) => rows.push((q.name.clone(), p)),
            None => warnings.push(format!("qubit {} has no modulation parameters; skipped", q.name)),
        }
    }
    Ok((rows, warnings))
}

fn table_floquet_rows(path: &Path, omega_s_mhz: f64) -> Result<FloquetRows, CliError> {
    let t = Table::read(path, &["name", "xi_MHz", "eps_MHz", "nu_MHz", "delta_MHz", "K_MHz"])?;
    let mut rows = Vec::new();
    for r in 0..t.rows.len() {
        let p = FloquetParams::from_mhz(t.num(r, 1)?, t.num(r, 2)?, t.num(r, 3)?, t.num(r, 4)?, t.num(r, 5)?, omega_s_mhz)?;
        rows.push((t.rows[r][0].clone(), p));
    }
    Ok((rows, Vec::new()))
}

fn floquet_calib((rows, mut warnings): FloquetRows, out: &Path, exec: Exec) -> Result<(), CliError> {
    let params: Vec<FloquetParams> = rows.iter().map(|r| r.1).collect();
    let cals = calibrate_all(&params, exec)?;
    for (name, p) in &rows {
        warnings.extend(p.warning().map(|w| format!("qubit {name}: {w}")));
    }
    write_csv(
        &out.join("floquet_calib.csv"),
        &["name", "lambda_half_MHz", "S1_MHz", "S2_MHz"],
        rows.iter()
            .zip(&cals)
            .map(|((name, _), c)| vec![name.clone(), f(rad_to_mhz(c.lambda_half)), f(rad_to_mhz(c.s1)), f(rad_to_mhz(c.s2))]),
    )?;
    write_warnings(out, "floquet-calib", &warnings)
}

/// `λ_j = 2 · λ_j/2`, from the measured value when given.
fn coupling(q: &QubitConfig, omega_s_mhz: f64) -> Result<f64, CliError> {
    if let Some(l) = q.lambda_half_MHz {
        return Ok(2.0 * mhz_to_rad(l));
    }
    match params_of(q, omega_s_mhz)? {
        Some(p) => Ok(2.0 * effective_coupling(&p)?),
        None => Err(CliError::Validation(format!(
            "qubit {} has neither lambda_half_MHz nor eps_MHz/nu_MHz",
            q.name
        ))),
    }
}

fn reservoir(cfg: &DeviceConfig, n: usize) -> Result<ReservoirSpec, CliError> {
    if n == 0 || n > cfg.qubits.len() {
        return Err(CliError::Validation(format!("n_qubits must lie in 1..={}, got {n}", cfg.qubits.len())));
    }
    let qs = &cfg.qubits[..n];
    let couplings = qs.iter().map(|q| coupling(q, cfg.resonator.omega_s_MHz)).collect::<Result<_, _>>()?;
    let detunings = qs.iter().map(|q| mhz_to_rad(q.delta_MHz)).collect();
    Ok(ReservoirSpec::new(couplings, detunings, cfg.scenario.alpha * cfg.scenario.alpha)?)
}

fn field_of(psi: &StateVector) -> Result<DensityMatrix, CliError> {
    let site = psi.layout().boson_site().ok_or_else(|| CliError::Numerical("state has no bosonic mode".into()))?;
    Ok(psi.reduced(&[site])?)
}

fn grid(cfg: &DeviceConfig) -> (Vec<f64>, Vec<f64>) {
    let g = &cfg.scenario.wigner_grid;
    (linspace(g.re_min, g.re_max, g.n_re), linspace(g.im_min, g.im_max, g.n_im))
}

fn write_wigner(path: &Path, rho: &DensityMatrix, cfg: &DeviceConfig, exec: Exec) -> Result<(), CliError> {
    let (re, im) = grid(cfg);
    let map = tomography::wigner_map(rho, &re, &im, exec)?;
    let rows = (0..re.len()).flat_map(|i| {
        let map = &map;
        (0..im.len()).map(move |j| vec![f(map.re_grid[i]), f(map.im_grid[j]), f(map.values[(i, j)])])
    });
    write_csv(path, &["re", "im", "w"], rows)
}

fn decohere(
    cfg: &DeviceConfig,
    n: usize,
    times_ns: &[f64],
    model: Model,
    wigner_at: &[f64],
    out: &Path,
    exec: Exec,
) -> Result<(), CliError> {
    let spec = reservoir(cfg, n)?;
    let alpha = C64::new(cfg.scenario.alpha, 0.0);
    let cutoff = cfg.resonator.cutoff;
    let times: Vec<f64> = times_ns.iter().map(|&t| ns_to_s(t)).collect();
    let (rows, warnings): (Vec<DecoherenceRow>, Vec<String>) = match model {
        Model::Analytic => analysis::analytic_decoherence(&spec, alpha, cutoff, &times, exec)?,
        Model::Exact => analysis::exact_decoherence(&spec, alpha, cutoff, &times, PropagationMode::Auto, exec)?,
    };
    write_csv(
        &out.join("decohere.csv"),
        &["t_ns", "coh_factor_abs", "entropy_bits", "distinguishability"],
        times_ns.iter().zip(&rows).map(|(t, r)| {
            vec![ns(*t), f(r.coh_factor_abs), f(r.entropy_bits), f(r.distinguishability)]
        }),
    )?;
    let exact = match (model, wigner_at.is_empty()) {
        (Model::Exact, false) => Some(ExactReservoir::new(&spec, cutoff, PropagationMode::Auto, exec)?),
        _ => None,
    };
    for &t_ns in wigner_at {
        let t = ns_to_s(t_ns);
        let psi = match &exact {
            Some(prop) => prop.evolve(&dynamics::initial_state(alpha, n, cutoff)?, t)?,
            None => analytic_joint_state(t, alpha, &spec, cutoff)?.state,
        };
        write_wigner(&out.join(format!("wigner_t{}ns.csv", ns(t_ns))), &field_of(&psi)?, cfg, exec)?;
    }
    write_warnings(out, "decohere", &warnings)
}

fn wigner(
    cfg: &DeviceConfig,
    state: FieldState,
    t_ns: f64,
    derotate: Option<f64>,
    out: &Path,
    exec: Exec,
) -> Result<(), CliError> {
    let alpha = C64::new(cfg.scenario.alpha, 0.0);
    let cutoff = cfg.resonator.cutoff;
    let mut warnings = Vec::new();
    let mut rho = match state {
        FieldState::AmplitudeCat => ideal_amplitude_cat(alpha, cutoff)?.density(),
        FieldState::Synthesized => make_amplitude_cat(&CatSpec::even(cfg.scenario.alpha), cutoff)?.density(),
        FieldState::Decohered => {
            let spec = reservoir(cfg, cfg.scenario.n_qubits)?;
            let joint = analytic_joint_state(ns_to_s(t_ns), alpha, &spec, cutoff)?;
            warnings.extend(joint.warning);
            field_of(&joint.state)?
        }
    };
    if let Some(theta) = derotate {
        rho = tomography::derotate(&rho, theta)?;
    }
    write_wigner(&out.join("wigner.csv"), &rho, cfg, exec)?;
    write_warnings(out, "wigner", &warnings)
}

fn fit_rabi(
    input: &Path,
    xi_mhz: f64,
    n_max: usize,
    pg0: f64,
    pe0: f64,
    free_offset: bool,
    out: &Path,
) -> Result<(), CliError> {
    let t = Table::read(input, &["tau_ns", "pe"])?;
    let mut taus = Vec::with_capacity(t.rows.len());
    let mut pe = Vec::with_capacity(t.rows.len());
    for r in 0..t.rows.len() {
        taus.push(ns_to_s(t.num(r, 0)?));
        pe.push(t.num(r, 1)?);
    }
    let trace = RabiTrace::new(taus, pe, mhz_to_rad(xi_mhz), pg0, pe0)?;
    let fit = fit_photon_numbers(&trace, n_max, FitOptions { free_offset })?;
    let mut warnings = fit.warnings.clone();
    if free_offset {
        warnings.push(format!("fitted offset {}", fit.offset));
    }
    write_csv(
        &out.join("photon_numbers.csv"),
        &["n", "p"],
        fit.pn.iter().enumerate().map(|(n, p)| vec![n.to_string(), f(*p)]),
    )?;
    write_warnings(out, "fit-rabi", &warnings)
}

#[allow(clippy::too_many_arguments)]
fn synth_rabi(
    pn: &[f64],
    xi_mhz: f64,
    tau_max_ns: f64,
    n_tau: usize,
    sigma: f64,
    seed: u64,
    pg0: f64,
    pe0: f64,
    out: &Path,
) -> Result<(), CliError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(CliError::Validation(format!("sigma must be non-negative, got {sigma}")));
    }
    let taus_ns = linspace(0.0, tau_max_ns, n_tau);
    let taus: Vec<f64> = taus_ns.iter().map(|&t| ns_to_s(t)).collect();
    let trace = synthesize_rabi(pn, mhz_to_rad(xi_mhz), &taus, pg0, pe0)?;
    let noise = Normal::new(0.0, sigma).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    write_csv(
        &out.join("rabi.csv"),
        &["tau_ns", "pe"],
        taus_ns.iter().zip(&trace.pe).map(|(t, p)| vec![ns(*t), f(p + noise.sample(&mut rng))]),
    )
}

fn disting(input: &Path) -> Result<f64, CliError> {
    let cols = ["qubit", "re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11"];
    let t = Table::read(input, &cols)?;
    let n = t.rows.len();
    let mut slots: Vec<Option<DensityMatrix>> = vec![None; n];
    for r in 0..n {
        let k = t.index(r, 0)?;
        if k >= n || slots[k].is_some() {
            return Err(CliError::Validation(format!(
                "{}: qubit indices must be 1..={n}, each once",
                input.display()
            )));
        }
        let v = (1..9).map(|c| t.num(r, c)).collect::<Result<Vec<_>, _>>()?;
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5]), C64::new(v[6], v[7])]);
        let rho = DensityMatrix::new(SpaceLayout::qubits(1)?, m)?;
        slots[k] = Some(branch_from_tomo(&rho)?);
    }
    let branches: Vec<DensityMatrix> = slots.into_iter().flatten().collect();
    Ok(reservoir_distinguishability(&branches)?)
}

fn crosstalk_solve(coeffs: &Path, targets: &Path, out: &Path) -> Result<(), CliError> {
    let tt = Table::read(targets, &["i", "z_eff"])?;
    let n = tt.rows.len();
    let mut z_eff = DVector::from_element(n, f64::NAN);
    for r in 0..n {
        let i = tt.index(r, 0)?;
        if i >= n || !z_eff[i].is_nan() {
            return Err(CliError::Validation(format!("{}: indices must be 1..={n}, each once", targets.display())));
        }
        z_eff[i] = tt.num(r, 1)?;
    }
    let ct = Table::read(coeffs, &["i", "j", "alpha"])?;
    let entries = (0..ct.rows.len())
        .map(|r| Ok((ct.index(r, 0)?, ct.index(r, 1)?, ct.num(r, 2)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let m = assemble_mcor(&coefficients_from_entries(n, &entries)?)?;
    let z = commanded_amplitudes(&m, &z_eff)?;
    write_csv(&out.join("z_cmd.csv"), &["i", "z_cmd"], z.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), f(*v)]))
}
