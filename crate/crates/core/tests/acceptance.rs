//! End-to-end acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion fails.

use std::f64::consts::{FRAC_2_PI, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use catbath::analysis::{self, psd_project, trace_distance, von_neumann_entropy};
use catbath::calib::{assemble_mcor, coefficients_from_entries, commanded_amplitudes};
use catbath::catprep::{apply_sequence, backward_angles, backward_sweep, ideal_amplitude_cat, truncated_cat_amplitudes, truncation_fidelity, CatSpec, Direction};
use catbath::dynamics::{self, coherence_factor, excitation_operator, ExactReservoir, PropagationMode, ReservoirSpec};
use catbath::floquet::{effective_coupling, fit_oscillation_frequency, simulate_full_swap, stark_compensated_detuning, FloquetParams};
use catbath::hilbert::{DensityMatrix, Propagate, SpaceLayout, StateVector};
use catbath::par::Exec;
use catbath::tomography::{default_grid, fit_photon_numbers, linspace, synthesize_rabi, wigner_map, wigner_point, FitOptions};
use catbath::units::{mhz_to_rad, rad_to_mhz};
use catbath::C64;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const ALPHA: f64 = 3.3;
/// `(ξ, ε, ν, λ/2)` of the eight reservoir qubits, MHz.
const RESERVOIR: [(f64, f64, f64, f64); 8] = [
    (19.6, 81.5, 190.0, 4.1),
    (19.9, 67.3, 200.0, 3.3),
    (16.0, 47.3, 170.0, 2.2),
    (20.2, 46.7, 180.0, 2.6),
    (19.2, 62.4, 220.0, 2.7),
    (20.5, 51.6, 210.0, 2.5),
    (12.9, 40.9, 130.0, 2.0),
    (16.3, 64.1, 160.0, 3.2),
];
const ANCILLA_XI_MHZ: f64 = 19.8;
const OMEGA_S_MHZ: f64 = 5796.0;
const K_MHZ: f64 = 250.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ns(t: f64) -> f64 {
    t * 1e-9
}

fn reservoir(n: usize) -> ReservoirSpec {
    let l = RESERVOIR[..n].iter().map(|r| mhz_to_rad(2.0 * r.3)).collect();
    ReservoirSpec::resonant(l, ALPHA * ALPHA).unwrap()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn truncation() -> Outcome {
    let start = Instant::now();
    let f = truncation_fidelity(&CatSpec::even(ALPHA)).unwrap();
    let el = start.elapsed();
    check((f - 0.989).abs() <= 0.001 && within(el, 1.0), format!("F = {f:.5} (0.989 ± 0.001), {el:.2?}"))
}

fn protocol_angles() -> Outcome {
    let start = Instant::now();
    let spec = CatSpec::even(ALPHA);
    let want = [1.57, 2.09, 2.48, 2.35, 2.03, 2.20];
    let sweep = backward_sweep(&spec, 1.0).unwrap();
    let angle_err = sweep.steps.iter().zip(want).map(|(s, w)| (s.theta - w).abs()).fold(0.0, f64::max);

    let i = C64::new(0.0, 1.0);
    let r = |x: f64| C64::new(x, 0.0);
    // ψ_{6−k} amplitudes as (qubit, n, value)
    let table: [(usize, &[Entry]); 7] = [
        (0, &[(0, 0, r(0.36)), (0, 2, r(0.70)), (0, 4, r(0.55)), (0, 6, r(0.27))]),
        (1, &[(0, 1, r(-0.55)), (0, 3, r(-0.52)), (0, 5, r(-0.27)), (1, 0, -i * 0.36), (1, 2, -i * 0.43), (1, 4, -i * 0.16)]),
        (2, &[(0, 0, r(0.23)), (0, 2, r(0.54)), (0, 4, r(0.31)), (1, 1, i * 0.62), (1, 3, i * 0.40)]),
        (3, &[(0, 1, r(-0.65)), (0, 3, r(-0.51)), (1, 0, -i * 0.23), (1, 2, -i * 0.51)]),
        (4, &[(0, 0, r(0.59)), (0, 2, r(0.72)), (1, 1, i * 0.36)]),
        (5, &[(0, 1, r(-0.80)), (1, 0, -i * 0.59)]),
        (6, &[(0, 0, r(1.0))]),
    ];
    let layout = sweep.states[0].layout().clone();
    let amp_err = table
        .iter()
        .flat_map(|(k, entries)| {
            let psi = &sweep.states[*k];
            let layout = &layout;
            entries.iter().map(move |(q, n, w)| (psi.amps()[layout.index(&[*q, *n])] - w).norm())
        })
        .fold(0.0, f64::max);

    let steps = backward_angles(&spec, mhz_to_rad(ANCILLA_XI_MHZ)).unwrap();
    let vac = StateVector::basis(layout.clone(), &[0, 0]).unwrap();
    let fwd = apply_sequence(&steps, &vac, Direction::Forward).unwrap();
    let target = truncated_cat_amplitudes(&spec).unwrap();
    let mut t = DVector::zeros(layout.dim());
    for n in 0..target.len() {
        t[layout.index(&[0, n])] = target[n];
    }
    let infid = 1.0 - fwd.fidelity(&StateVector::new(layout, t).unwrap()).unwrap();
    let el = start.elapsed();
    check(
        angle_err <= 0.01 && amp_err <= 0.01 && infid < 1e-6 && within(el, 1.0),
        format!("max |Δθ| = {angle_err:.4}, max |Δamp| = {amp_err:.4}, 1 − F = {infid:.1e}, {el:.2?}"),
    )
}

fn sideband_calibration() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (xi, eps, nu, lh) in RESERVOIR {
        let p = FloquetParams::from_mhz(xi, eps, nu, 0.0, K_MHZ, OMEGA_S_MHZ).unwrap();
        worst = worst.max((rad_to_mhz(effective_coupling(&p).unwrap()) - lh).abs());
    }
    let (xi, eps, nu, _) = RESERVOIR[0];
    let p = FloquetParams::from_mhz(xi, eps, nu, 0.0, K_MHZ, OMEGA_S_MHZ).unwrap();
    let p = p.with_delta(stark_compensated_detuning(&p).unwrap());
    let dt = 2.0 * PI / p.nu / 64.0;
    let trace = simulate_full_swap(&p, 250e-9, dt, 8).unwrap();
    let w = fit_oscillation_frequency(&trace.times, &trace.p_g, mhz_to_rad(1.0), mhz_to_rad(30.0)).unwrap();
    let f_swap = rad_to_mhz(w);
    let el = start.elapsed();
    check(
        worst <= 0.15 && (f_swap - 8.1).abs() <= 0.05 * 8.1 && within(el, 30.0),
        format!("max |Δλ/2| = {worst:.3} MHz (≤ 0.15), f_swap = {f_swap:.3} MHz (8.1 ± 5%), {el:.2?}"),
    )
}

fn argext(ts: &[f64], ys: &[f64], lo: f64, hi: f64, max: bool) -> (f64, f64) {
    ts.iter()
        .zip(ys)
        .filter(|(t, _)| (lo..=hi).contains(*t))
        .map(|(t, y)| (*t, *y))
        .fold((f64::NAN, if max { f64::NEG_INFINITY } else { f64::INFINITY }), |acc, (t, y)| {
            if (max && y > acc.1) || (!max && y < acc.1) { (t, y) } else { acc }
        })
}

fn single_qubit_decoherence() -> Outcome {
    let start = Instant::now();
    let spec = ReservoirSpec::resonant(vec![mhz_to_rad(8.1)], ALPHA * ALPHA).unwrap();
    let ts_ns = linspace(0.0, 50.0, 501);
    let ts: Vec<f64> = ts_ns.iter().map(|&t| ns(t)).collect();
    let coh: Vec<f64> = ts.iter().map(|&t| coherence_factor(t, &spec).unwrap().norm()).collect();
    let (exact, _) =
        analysis::exact_decoherence(&spec, C64::new(ALPHA, 0.0), 30, &ts, PropagationMode::Dense, Exec::default()).unwrap();
    let entropy: Vec<f64> = exact.iter().map(|r| r.entropy_bits).collect();

    let (t_collapse, _) = argext(&ts_ns, &coh, 10.0, 28.0, false);
    let (t_revival, _) = argext(&ts_ns, &coh, 28.0, 48.0, true);
    let (_, s_collapse) = argext(&ts_ns, &entropy, 18.0, 20.0, true);
    let (_, s_revival) = argext(&ts_ns, &entropy, 37.0, 39.0, false);
    let (_, coh_revival) = argext(&ts_ns, &coh, 37.0, 39.0, true);
    let el = start.elapsed();
    check(
        (t_collapse - 19.0).abs() <= 1.0
            && (t_revival - 38.0).abs() <= 1.0
            && s_collapse >= 0.95
            && s_revival <= 0.15
            && coh_revival >= 0.95
            && within(el, 120.0),
        format!(
            "collapse {t_collapse:.1} ns (S = {s_collapse:.3} bit, ≥ 0.95), revival {t_revival:.1} ns \
             (S = {s_revival:.3} bit, ≤ 0.15; |coh| = {coh_revival:.3}, ≥ 0.95), {el:.2?}"
        ),
    )
}

fn irreversibility() -> Outcome {
    let start = Instant::now();
    let alpha = C64::new(ALPHA, 0.0);
    let ts_ns = linspace(0.0, 200.0, 2001);
    let ts: Vec<f64> = ts_ns.iter().map(|&t| ns(t)).collect();
    let d = |n: usize| -> Vec<f64> {
        let (rows, _) = analysis::analytic_decoherence(&reservoir(n), alpha, 40, &ts, Exec::default()).unwrap();
        rows.iter().map(|r| r.distinguishability).collect()
    };
    let d1 = d(1);
    let d8 = d(8);
    let early: Vec<f64> = d1.iter().zip(&ts_ns).filter(|(_, t)| **t <= 80.0).map(|(d, _)| *d).collect();
    let swing = early.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - early.iter().cloned().fold(f64::INFINITY, f64::min);
    let reached = ts_ns.iter().zip(&d8).find(|(_, d)| **d > 0.9).map(|(t, _)| *t);
    let floor = match reached {
        Some(t0) => ts_ns.iter().zip(&d8).filter(|(t, _)| **t >= t0).map(|(_, d)| *d).fold(f64::INFINITY, f64::min),
        None => f64::NAN,
    };
    let el = start.elapsed();
    check(
        swing > 0.8 && reached.is_some_and(|t| t <= 20.0) && floor >= 0.85 && within(el, 300.0),
        format!(
            "N=1 swing {swing:.3} (> 0.8); N=8 above 0.9 from {} ns (≤ 20), min {floor:.3} after (≥ 0.85), {el:.2?}",
            reached.map_or("never".to_string(), |t| format!("{t:.1}"))
        ),
    )
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn tomography_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let xi = mhz_to_rad(ANCILLA_XI_MHZ);
    let taus: Vec<f64> = linspace(0.0, 500.0, 251).iter().map(|&t| ns(t)).collect();
    let (mut worst_clean, mut worst_noisy) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let pn = random_distribution(&mut rng, 9);
        let mut trace = synthesize_rabi(&pn, xi, &taus, 1.0, 0.0).unwrap();
        let l1 = |fit: &[f64]| fit.iter().zip(&pn).map(|(a, b)| (a - b).abs()).sum::<f64>();
        worst_clean = worst_clean.max(l1(&fit_photon_numbers(&trace, 8, FitOptions::default()).unwrap().pn));
        for p in trace.pe.iter_mut() {
            *p += noise.sample(&mut rng);
        }
        worst_noisy = worst_noisy.max(l1(&fit_photon_numbers(&trace, 8, FitOptions::default()).unwrap().pn));
    }
    let vac = StateVector::basis(SpaceLayout::mode(10).unwrap(), &[0]).unwrap().density();
    let w0 = wigner_point(&vac, C64::new(0.0, 0.0)).unwrap();
    let grid_start = Instant::now();
    let cat = ideal_amplitude_cat(C64::new(ALPHA, 0.0), 40).unwrap().density();
    let (re, im) = default_grid();
    let map = wigner_map(&cat, &re, &im, Exec::default()).unwrap();
    let grid_el = grid_start.elapsed();
    let wmax = map.values.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let el = start.elapsed();
    check(
        worst_clean < 1e-3
            && worst_noisy < 0.05
            && (w0 - FRAC_2_PI).abs() <= 1e-6
            && wmax <= FRAC_2_PI + 1e-12
            && within(el, 120.0),
        format!(
            "L1 clean {worst_clean:.1e} (< 1e-3), noisy {worst_noisy:.4} (< 0.05), W_vac(0) − 2/π = {:.1e}, \
             max|W| = {wmax:.6} (≤ {FRAC_2_PI:.6}), grid {grid_el:.2?}, total {el:.2?}",
            w0 - FRAC_2_PI
        ),
    )
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> DensityMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(SpaceLayout::qubits(2).unwrap(), m / tr).unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn analysis_axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut metric_err = 0.0f64;
    for _ in 0..50 {
        let (a, b, c) = (random_density(&mut rng, 4), random_density(&mut rng, 4), random_density(&mut rng, 4));
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        let aa = trace_distance(&a, &a).unwrap();
        metric_err = metric_err.max(aa.abs()).max((ab - ba).abs()).max((ac - ab - bc).max(0.0)).max((ab - 1.0).max(0.0)).max((-ab).max(0.0));
    }
    let mut psd_err = 0.0f64;
    for _ in 0..100 {
        let rho = random_density(&mut rng, 4);
        let raw = DensityMatrix::new(rho.layout().clone(), rho.matrix() + random_hermitian(&mut rng, 4) * C64::new(0.3, 0.0)).unwrap();
        let p = psd_project(&raw).unwrap();
        let pp = psd_project(&p).unwrap();
        let min_eig = SymmetricEigen::new(p.matrix().clone()).eigenvalues.min();
        psd_err = psd_err
            .max((pp.matrix() - p.matrix()).camax())
            .max((p.trace().re - 1.0).abs())
            .max(p.trace().im.abs())
            .max((-min_eig).max(0.0));
    }
    let mut entropy_err = 0.0f64;
    for _ in 0..50 {
        let rho = random_density(&mut rng, 4);
        let u = SymmetricEigen::new(random_hermitian(&mut rng, 4)).eigenvectors;
        let rotated = DensityMatrix::new(rho.layout().clone(), &u * rho.matrix() * u.adjoint()).unwrap();
        entropy_err = entropy_err.max((von_neumann_entropy(&rho).unwrap() - von_neumann_entropy(&rotated).unwrap()).abs());
    }
    let el = start.elapsed();
    check(
        metric_err <= 1e-9 && psd_err <= 1e-9 && entropy_err <= 1e-10 && within(el, 10.0),
        format!("metric {metric_err:.1e} (≤ 1e-9), projection {psd_err:.1e}, entropy {entropy_err:.1e} (≤ 1e-10), {el:.2?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let alpha = C64::new(ALPHA, 0.0);
    let ts_ns = linspace(0.0, 40.0, 81);
    let ts: Vec<f64> = ts_ns.iter().map(|&t| ns(t)).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for n in 1..=2 {
        let f = dynamics::oracle_fidelity(&reservoir(n), alpha, 30, &ts, Exec::default()).unwrap();
        let (i_min, f_min) = f.iter().enumerate().fold((0, f64::INFINITY), |a, (i, v)| if *v < a.1 { (i, *v) } else { a });
        let holds_to = ts_ns.iter().zip(&f).take_while(|(_, v)| **v >= 0.98).last().map_or(0.0, |(t, _)| *t);
        pass &= f_min >= 0.98;
        parts.push(format!("N={n}: min F = {f_min:.3} at {:.1} ns, F ≥ 0.98 up to {holds_to:.1} ns", ts_ns[i_min]));
    }
    let mut drift = 0.0f64;
    for n in [1, 2, 4] {
        let spec = reservoir(n);
        let prop = ExactReservoir::new(&spec, 30, PropagationMode::Auto, Exec::default()).unwrap();
        let psi0 = dynamics::initial_state(alpha, n, 30).unwrap();
        let nop = excitation_operator(psi0.layout()).unwrap();
        let n0 = psi0.expectation(&nop).unwrap().re;
        for &t in &ts {
            drift = drift.max((prop.evolve(&psi0, t).unwrap().expectation(&nop).unwrap().re - n0).abs());
        }
    }
    pass &= drift <= 1e-8;
    check(pass, format!("{}; excitation drift {drift:.1e} (≤ 1e-8), {:.2?}", parts.join("; "), start.elapsed()))
}

fn crosstalk() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = 0.0f64;
    for n in 1..=10 {
        for _ in 0..20 {
            let mut c = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.1..0.1));
            c.fill_diagonal(0.0);
            let m = assemble_mcor(&c).unwrap();
            let z_eff = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let z = commanded_amplitudes(&m, &z_eff).unwrap();
            worst = worst.max((&m * &z - &z_eff).norm());
        }
    }
    let m = assemble_mcor(&coefficients_from_entries(2, &[(1, 0, 0.05)]).unwrap()).unwrap();
    let z = commanded_amplitudes(&m, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
    let exact = z.as_slice() == [1.0, 0.05];
    check(
        worst < 1e-12 && exact,
        format!("max residual {worst:.1e} (< 1e-12), worked example z = ({}, {})", z[0], z[1]),
    )
}

/// (qubit, n, amplitude)
type Entry = (usize, usize, C64);
type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("truncation fidelity", truncation),
        ("protocol angles", protocol_angles),
        ("sideband calibration", sideband_calibration),
        ("single-qubit decoherence", single_qubit_decoherence),
        ("irreversibility transition", irreversibility),
        ("tomography round trip", tomography_round_trip),
        ("analysis axioms", analysis_axioms),
        ("oracle equivalence", oracle_equivalence),
        ("crosstalk", crosstalk),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        failed += usize::from(!o.pass);
        println!("criterion {} {name}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
