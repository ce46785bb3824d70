//! Parametric sideband coupling from sinusoidal qubit-frequency modulation.
//!
//! A qubit detuned from the bus by `ν` and modulated as `ε cos(νt)` acquires a
//! resonant first-sideband exchange `λ/2 = J₁(ε/ν) ξ` plus Stark shifts from
//! every other harmonic. The full time-dependent model is kept two-level; the
//! third level enters only through the anharmonicity in `S₂`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::hilbert::{
    annihilation, embed, evolve_td_observed, number_operator, qubit, Operator, SpaceLayout, StateVector,
};
use crate::par::{self, Exec};
use crate::units::mhz_to_rad;
use crate::{Error, Result, C64};

/// `|J₀(μ)ξ| / ν` at or above this value triggers a warning.
pub const ADIABATIC_RATIO_WARN: f64 = 0.2;

/// Default number of harmonics on each side in the Stark series.
pub const STARK_N_MAX: usize = 25;

/// Relative size of the last retained Stark term that counts as converged.
pub const STARK_CONVERGENCE_TOL: f64 = 1e-6;

/// Bessel function of the first kind `J_n(x)` for integer order.
///
/// Miller's downward recurrence normalized by `J₀ + 2 Σ J_{2k} = 1`.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n = n as usize;
    let top = n.max(x.ceil() as usize);
    let mut m = top + 20 + (40.0 * top as f64).sqrt() as usize;
    m += m % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut sum = 0.0;
    let mut out = 0.0;
    for k in (1..=m).rev() {
        // cur = J_k, next = J_{k+1} up to a common scale
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            sum *= 1e-250;
            out *= 1e-250;
        }
        if k - 1 == n {
            out = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            sum += 2.0 * cur;
        }
    }
    sum += cur;
    out / sum
}

/// Drive record for one qubit. All fields in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetParams {
    /// On-resonance qubit–bus coupling.
    pub xi: f64,
    /// Modulation amplitude.
    pub eps: f64,
    /// Modulation frequency; equals the bus–qubit detuning.
    pub nu: f64,
    /// Sideband detuning.
    pub delta: f64,
    /// Anharmonicity (positive for the sign convention of `S₂`).
    pub anharmonicity: f64,
    pub omega_s: f64,
    /// Mean qubit frequency `ω_s − ν`.
    pub omega_m: f64,
}

impl FloquetParams {
    pub fn new(xi: f64, eps: f64, nu: f64, delta: f64, anharmonicity: f64, omega_s: f64) -> Result<Self> {
        let p = Self { xi, eps, nu, delta, anharmonicity, omega_s, omega_m: omega_s - nu };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`FloquetParams::new`] with every argument in MHz.
    pub fn from_mhz(xi: f64, eps: f64, nu: f64, delta: f64, anharmonicity: f64, omega_s: f64) -> Result<Self> {
        Self::new(
            mhz_to_rad(xi),
            mhz_to_rad(eps),
            mhz_to_rad(nu),
            mhz_to_rad(delta),
            mhz_to_rad(anharmonicity),
            mhz_to_rad(omega_s),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.xi, self.eps, self.nu, self.delta, self.anharmonicity, self.omega_s, self.omega_m];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("Floquet parameters must be finite".into()));
        }
        if self.nu.is_nan() || self.nu <= 0.0 {
            return Err(Error::InvalidArgument(format!("modulation frequency must be positive, got {}", self.nu)));
        }
        Ok(())
    }

    /// Modulation index `μ = ε/ν`.
    pub fn mu(&self) -> f64 {
        self.eps / self.nu
    }

    /// `|J₀(μ)ξ| / ν`; the effective model assumes this is small.
    pub fn adiabatic_ratio(&self) -> f64 {
        (bessel_j(0, self.mu()) * self.xi).abs() / self.nu
    }

    pub fn warning(&self) -> Option<String> {
        let r = self.adiabatic_ratio();
        (r >= ADIABATIC_RATIO_WARN).then(|| {
            format!("|J0(mu) xi| / nu = {r:.3} is not small; effective model may be inaccurate")
        })
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

/// First-sideband exchange rate `λ/2 = J₁(μ)ξ`.
pub fn effective_coupling(p: &FloquetParams) -> Result<f64> {
    p.validate()?;
    Ok(bessel_j(1, p.mu()) * p.xi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarkShifts {
    pub s1: f64,
    pub s2: f64,
    /// Largest `|term(±n_max)| / |S|` over both series.
    pub last_term_ratio: f64,
}

/// `S₁ = Σ_{n≠1} [J_n ξ]² / ((1−n)ν)`, `S₂ = Σ_{n≠1} 2[J_n ξ]² / ((1−n)ν + K)`
/// over `|n| ≤ n_max`.
pub fn stark_shifts(p: &FloquetParams, n_max: usize) -> Result<StarkShifts> {
    p.validate()?;
    if n_max < 10 {
        return Err(Error::InvalidArgument(format!("Stark series needs n_max >= 10, got {n_max}")));
    }
    let mu = p.mu();
    let n_max = n_max as i32;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut edge1 = 0.0f64;
    let mut edge2 = 0.0f64;
    for n in -n_max..=n_max {
        if n == 1 {
            continue;
        }
        let d2 = (1 - n) as f64 * p.nu + p.anharmonicity;
        if d2.abs() <= 1e-12 * p.nu {
            return Err(Error::ResonantHarmonic { harmonic: n });
        }
        let w = (bessel_j(n, mu) * p.xi).powi(2);
        let t1 = w / ((1 - n) as f64 * p.nu);
        let t2 = 2.0 * w / d2;
        s1 += t1;
        s2 += t2;
        if n.abs() == n_max {
            edge1 = edge1.max(t1.abs());
            edge2 = edge2.max(t2.abs());
        }
    }
    let ratio = |edge: f64, s: f64| if edge == 0.0 { 0.0 } else { edge / s.abs() };
    let last_term_ratio = ratio(edge1, s1).max(ratio(edge2, s2));
    if last_term_ratio >= STARK_CONVERGENCE_TOL {
        return Err(Error::Truncation {
            error: last_term_ratio,
            tol: STARK_CONVERGENCE_TOL,
            context: format!("Stark series at n_max = {n_max}"),
        });
    }
    Ok(StarkShifts { s1, s2, last_term_ratio })
}

/// Detuning that cancels the differential Stark shift of `|e,0⟩` and `|g,1⟩`
/// in the effective model, making the swap resonant: `δ = 2 S₁`.
pub fn stark_compensated_detuning(p: &FloquetParams) -> Result<f64> {
    Ok(2.0 * stark_shifts(p, STARK_N_MAX)?.s1)
}

fn sideband_ops(cutoff: usize) -> Result<(SpaceLayout, Operator, Operator, Operator)> {
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("sideband model needs cutoff >= 2, got {cutoff}")));
    }
    let l = SpaceLayout::qubit_mode(cutoff)?;
    let a = embed(annihilation(cutoff)?.matrix(), 1, &l)?;
    let lower = embed(&qubit::lowering(), 0, &l)?;
    // a† |g⟩⟨e|
    let exchange = a.adjoint().mul(&lower)?;
    let pe = embed(&qubit::proj_e(), 0, &l)?;
    let n = embed(number_operator(cutoff)?.matrix(), 1, &l)?;
    Ok((l, exchange, pe, n))
}

/// `(λ/2)(a†|g⟩⟨e| + h.c.) + S₁(|g⟩⟨g|−|e⟩⟨e|)a†a − S₁|e⟩⟨e| + S₂|e⟩⟨e|a†a + δ|e⟩⟨e|`
/// on qubit ⊗ mode.
pub fn effective_hamiltonian(p: &FloquetParams, cutoff: usize) -> Result<Operator> {
    let (l, exchange, pe, n) = sideband_ops(cutoff)?;
    let lam = effective_coupling(p)?;
    let s = stark_shifts(p, STARK_N_MAX)?;
    let z = embed(&qubit::sigma_z(), 0, &l)?;
    let h = exchange
        .add(&exchange.adjoint())?
        .scale(C64::new(lam, 0.0))
        .add(&z.mul(&n)?.scale(C64::new(s.s1, 0.0)))?
        .add(&pe.scale(C64::new(p.delta - s.s1, 0.0)))?
        .add(&pe.mul(&n)?.scale(C64::new(s.s2, 0.0)))?;
    Operator::hermitian(l, h.into_matrix())
}

/// Rotating-frame Hamiltonian `δ|e⟩⟨e| + ξ e^{−iμ sin νt} e^{iνt} a†|g⟩⟨e| + h.c.`
/// at time `t` (s).
pub fn full_floquet_hamiltonian(p: &FloquetParams, t: f64, cutoff: usize) -> Result<Operator> {
    p.validate()?;
    let (l, exchange, pe, _) = sideband_ops(cutoff)?;
    let c = floquet_coefficient(p, t);
    let h = exchange
        .scale(c)
        .add(&exchange.adjoint().scale(c.conj()))?
        .add(&pe.scale(C64::new(p.delta, 0.0)))?;
    Operator::hermitian(l, h.into_matrix())
}

/// Coefficient of `a†|g⟩⟨e|` in [`full_floquet_hamiltonian`].
pub fn floquet_coefficient(p: &FloquetParams, t: f64) -> C64 {
    C64::from_polar(p.xi, p.nu * t - p.mu() * (p.nu * t).sin())
}

/// Ground-state population of a sideband swap started in `|e,0⟩`.
#[derive(Clone, Debug)]
pub struct SwapTrace {
    pub times: Vec<f64>,
    pub p_g: Vec<f64>,
}

fn excited_vacuum(cutoff: usize) -> Result<StateVector> {
    StateVector::basis(SpaceLayout::qubit_mode(cutoff)?, &[1, 0])
}

fn ground_population(psi: &StateVector) -> f64 {
    let cutoff = psi.layout().cutoff().expect("sideband layout has a mode");
    (0..cutoff).map(|n| psi.amps()[n].norm_sqr()).sum()
}

/// Propagates [`full_floquet_hamiltonian`] from `|e,0⟩` to `t_end` with step
/// `dt`, recording `P_g` every `record_every` steps.
pub fn simulate_full_swap(p: &FloquetParams, t_end: f64, dt: f64, record_every: usize) -> Result<SwapTrace> {
    p.validate()?;
    let period = 2.0 * PI / p.nu;
    if dt > period / 20.0 {
        return Err(Error::InvalidArgument(format!(
            "time step {dt:.3e} s does not resolve the modulation period {period:.3e} s (need 20 steps)"
        )));
    }
    let record_every = record_every.max(1);
    let cutoff = 2;
    let mut trace = SwapTrace { times: Vec::new(), p_g: Vec::new() };
    let mut k = 0usize;
    evolve_td_observed(
        |t| full_floquet_hamiltonian(p, t, cutoff),
        &excited_vacuum(cutoff)?,
        t_end,
        dt,
        |t, psi| {
            if k.is_multiple_of(record_every) {
                trace.times.push(t);
                trace.p_g.push(ground_population(psi));
            }
            k += 1;
        },
    )?;
    Ok(trace)
}

/// Same observable under [`effective_hamiltonian`] at the given sample times.
pub fn simulate_effective_swap(p: &FloquetParams, times: &[f64], exec: Exec) -> Result<SwapTrace> {
    use crate::hilbert::{Propagate, Propagator};
    let cutoff = 2;
    let prop = Propagator::new(&effective_hamiltonian(p, cutoff)?)?;
    let psi0 = excited_vacuum(cutoff)?;
    let states = prop.evolve_many(&psi0, times, exec)?;
    Ok(SwapTrace { times: times.to_vec(), p_g: states.iter().map(ground_population).collect() })
}

fn sinusoid_residual(times: &[f64], values: &[f64], omega: f64) -> f64 {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&t, &y) in times.iter().zip(values) {
        let row = Vector3::new(1.0, (omega * t).cos(), (omega * t).sin());
        ata += row * row.transpose();
        atb += row * y;
    }
    let beta = match ata.cholesky() {
        Some(c) => c.solve(&atb),
        None => return f64::INFINITY,
    };
    times
        .iter()
        .zip(values)
        .map(|(&t, &y)| {
            let fit = beta[0] + beta[1] * (omega * t).cos() + beta[2] * (omega * t).sin();
            (y - fit).powi(2)
        })
        .sum()
}

/// Angular frequency of the dominant sinusoid in `values(times)` within
/// `[omega_min, omega_max]`, by least-squares scan and golden-section refinement.
pub fn fit_oscillation_frequency(times: &[f64], values: &[f64], omega_min: f64, omega_max: f64) -> Result<f64> {
    if times.len() != values.len() || times.len() < 4 {
        return Err(Error::InvalidArgument("need at least 4 matching samples".into()));
    }
    if !(omega_min > 0.0 && omega_max > omega_min) {
        return Err(Error::InvalidArgument("frequency window must be positive and nonempty".into()));
    }
    let span = times.last().unwrap() - times[0];
    if span.is_nan() || span <= 0.0 {
        return Err(Error::InvalidArgument("sample times must span a positive interval".into()));
    }
    let step = 2.0 * PI / span / 16.0;
    let count = (((omega_max - omega_min) / step).ceil() as usize).max(2);
    let grid: Vec<f64> = (0..=count).map(|i| omega_min + (omega_max - omega_min) * i as f64 / count as f64).collect();
    let res: Vec<f64> = grid.iter().map(|&w| sinusoid_residual(times, values, w)).collect();
    let best = (0..res.len()).min_by(|&a, &b| res[a].total_cmp(&res[b])).unwrap();
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = sinusoid_residual(times, values, x1);
    let mut f2 = sinusoid_residual(times, values, x2);
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = sinusoid_residual(times, values, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = sinusoid_residual(times, values, x2);
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Output row for one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub lambda_half: f64,
    pub s1: f64,
    pub s2: f64,
}

pub fn calibrate(p: &FloquetParams) -> Result<Calibration> {
    let s = stark_shifts(p, STARK_N_MAX)?;
    Ok(Calibration { lambda_half: effective_coupling(p)?, s1: s.s1, s2: s.s2 })
}

pub fn calibrate_all(params: &[FloquetParams], exec: Exec) -> Result<Vec<Calibration>> {
    par::try_map(exec, params, calibrate)
}
