//! Cat state coupled to `N` reservoir qubits.
//!
//! `H = Σ_k [δ_k|e⟩ₖ⟨e| + (λ_k/2)(a|e⟩ₖ⟨g| + a†|g⟩ₖ⟨e|)]` on boson ⊗ qubits.
//! Exact evolution uses a dense propagator or, since `H` conserves
//! `N̂ = a†a + Σ_k |e⟩ₖ⟨e|`, one eigendecomposition per excitation block. The
//! analytic model replaces `a` by `√⟨n⟩` on the `|α⟩` branch, so each qubit
//! evolves independently.

use nalgebra::{DMatrix, DVector};

use crate::catprep::ideal_amplitude_cat;
use crate::hilbert::{
    coherent_state, BlockHermitian, BlockPropagator, Operator, Propagate, Propagator, SpaceLayout, StateVector,
};
use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Default Fock cutoff for `|α|² ≈ 11`.
pub const DEFAULT_CUTOFF: usize = 40;

/// Largest dimension built as a dense matrix.
pub const DENSE_DIM_LIMIT: usize = 4096;

/// Qubit count from which [`PropagationMode::Auto`] switches to blocks.
pub const BLOCK_MODE_MIN_QUBITS: usize = 4;

/// `Σ_k |c_k^e|² / |α|²` above which the analytic model warns.
pub const LEAKAGE_WARN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirSpec {
    /// `λ_k` in rad/s.
    pub couplings: Vec<f64>,
    /// `δ_k` in rad/s.
    pub detunings: Vec<f64>,
    /// `⟨n⟩ = |α|²`.
    pub n_mean: f64,
}

impl ReservoirSpec {
    pub fn new(couplings: Vec<f64>, detunings: Vec<f64>, n_mean: f64) -> Result<Self> {
        let s = Self { couplings, detunings, n_mean };
        s.validate()?;
        Ok(s)
    }

    /// All `δ_k = 0`.
    pub fn resonant(couplings: Vec<f64>, n_mean: f64) -> Result<Self> {
        let n = couplings.len();
        Self::new(couplings, vec![0.0; n], n_mean)
    }

    pub fn validate(&self) -> Result<()> {
        if self.couplings.is_empty() {
            return Err(Error::InvalidArgument("reservoir needs at least one qubit".into()));
        }
        if self.couplings.len() != self.detunings.len() {
            return Err(Error::InvalidArgument(format!(
                "{} couplings but {} detunings",
                self.couplings.len(),
                self.detunings.len()
            )));
        }
        if let Some(l) = self.couplings.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidArgument(format!("couplings must be positive, got {l}")));
        }
        if self.detunings.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("detunings must be finite".into()));
        }
        if !(self.n_mean.is_finite() && self.n_mean >= 0.0) {
            return Err(Error::InvalidArgument(format!("mean photon number must be >= 0, got {}", self.n_mean)));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.couplings.len()
    }

    /// First `n` qubits.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_qubits() {
            return Err(Error::InvalidArgument(format!("cannot keep {n} of {} qubits", self.n_qubits())));
        }
        Self::new(self.couplings[..n].to_vec(), self.detunings[..n].to_vec(), self.n_mean)
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.n_qubits() {
            return Err(Error::InvalidArgument(format!("qubit {k} out of range for N = {}", self.n_qubits())));
        }
        Ok(())
    }
}

/// Boson ⊗ `n` qubits.
pub fn reservoir_layout(cutoff: usize, n: usize) -> Result<SpaceLayout> {
    SpaceLayout::mode_with_qubits(cutoff, n)
}

/// Eigenvalue of `N̂` for every basis index.
pub fn excitation_labels(layout: &SpaceLayout) -> Vec<usize> {
    (0..layout.dim()).map(|i| layout.digits(i).iter().sum()).collect()
}

pub fn excitation_operator(layout: &SpaceLayout) -> Result<Operator> {
    let d = DVector::from_iterator(
        layout.dim(),
        excitation_labels(layout).into_iter().map(|n| C64::new(n as f64, 0.0)),
    );
    Operator::hermitian(layout.clone(), DMatrix::from_diagonal(&d))
}

fn check_layout(spec: &ReservoirSpec, cutoff: usize) -> Result<SpaceLayout> {
    spec.validate()?;
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("reservoir cutoff must be >= 2, got {cutoff}")));
    }
    reservoir_layout(cutoff, spec.n_qubits())
}

/// Nonzero upper and lower entries of `H`.
fn hamiltonian_elements(spec: &ReservoirSpec, layout: &SpaceLayout) -> Vec<(usize, usize, C64)> {
    let strides = layout.strides();
    let mut out = Vec::new();
    for i in 0..layout.dim() {
        let d = layout.digits(i);
        let n = d[0];
        let diag: f64 = (0..spec.n_qubits()).filter(|&k| d[k + 1] == 1).map(|k| spec.detunings[k]).sum();
        if diag != 0.0 {
            out.push((i, i, C64::new(diag, 0.0)));
        }
        if n == 0 {
            continue;
        }
        for k in 0..spec.n_qubits() {
            if d[k + 1] == 0 {
                // a|e⟩ₖ⟨g| : |n, g_k⟩ → √n |n−1, e_k⟩
                let j = i - strides[0] + strides[k + 1];
                let v = C64::new(0.5 * spec.couplings[k] * (n as f64).sqrt(), 0.0);
                out.push((j, i, v));
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Dense reservoir Hamiltonian; refuses dimensions above [`DENSE_DIM_LIMIT`].
pub fn reservoir_hamiltonian(spec: &ReservoirSpec, cutoff: usize) -> Result<Operator> {
    reservoir_hamiltonian_with_limit(spec, cutoff, DENSE_DIM_LIMIT)
}

pub fn reservoir_hamiltonian_with_limit(spec: &ReservoirSpec, cutoff: usize, max_dim: usize) -> Result<Operator> {
    let layout = check_layout(spec, cutoff)?;
    let dim = layout.dim();
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, limit: max_dim });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (r, c, v) in hamiltonian_elements(spec, &layout) {
        m[(r, c)] += v;
    }
    Operator::hermitian(layout, m)
}

/// Reservoir Hamiltonian split into excitation-number blocks.
pub fn reservoir_blocks(spec: &ReservoirSpec, cutoff: usize) -> Result<BlockHermitian> {
    let layout = check_layout(spec, cutoff)?;
    let labels = excitation_labels(&layout);
    let elems = hamiltonian_elements(spec, &layout);
    BlockHermitian::from_elements(layout, &labels, elems)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PropagationMode {
    Dense,
    Block,
    /// Blocks from [`BLOCK_MODE_MIN_QUBITS`] qubits on, dense below.
    #[default]
    Auto,
}

/// Exact propagator for the reservoir Hamiltonian.
#[derive(Clone, Debug)]
pub enum ExactReservoir {
    Dense(Propagator),
    Block(BlockPropagator),
}

impl ExactReservoir {
    pub fn new(spec: &ReservoirSpec, cutoff: usize, mode: PropagationMode, exec: Exec) -> Result<Self> {
        let block = match mode {
            PropagationMode::Dense => false,
            PropagationMode::Block => true,
            PropagationMode::Auto => spec.n_qubits() >= BLOCK_MODE_MIN_QUBITS,
        };
        if block {
            Ok(Self::Block(BlockPropagator::new(&reservoir_blocks(spec, cutoff)?, exec)?))
        } else {
            Ok(Self::Dense(Propagator::new(&reservoir_hamiltonian(spec, cutoff)?)?))
        }
    }
}

impl Propagate for ExactReservoir {
    fn layout(&self) -> &SpaceLayout {
        match self {
            Self::Dense(p) => p.layout(),
            Self::Block(p) => p.layout(),
        }
    }

    fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        match self {
            Self::Dense(p) => p.evolve(psi, t),
            Self::Block(p) => p.evolve(psi, t),
        }
    }
}

/// `𝒩(|0⟩ + |α⟩) ⊗ |g⟩^{⊗N}` on `cutoff` levels.
pub fn initial_state(alpha: C64, n_qubits: usize, cutoff: usize) -> Result<StateVector> {
    let cat = ideal_amplitude_cat(alpha, cutoff)?;
    let layout = reservoir_layout(cutoff, n_qubits)?;
    let stride = layout.strides()[0];
    let mut amps = DVector::zeros(layout.dim());
    for n in 0..cutoff {
        amps[n * stride] = cat.amps()[n];
    }
    StateVector::new(layout, amps)
}

/// Exact joint states at `times` from [`initial_state`].
pub fn exact_trajectory(
    spec: &ReservoirSpec,
    alpha: C64,
    cutoff: usize,
    times: &[f64],
    mode: PropagationMode,
    exec: Exec,
) -> Result<Vec<StateVector>> {
    let prop = ExactReservoir::new(spec, cutoff, mode, exec)?;
    let psi0 = initial_state(alpha, spec.n_qubits(), cutoff)?;
    prop.evolve_many(&psi0, times, exec)
}

/// Single-qubit amplitudes on the `|α⟩` branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchAmplitudes {
    pub c_g: C64,
    pub c_e: C64,
    /// `Ω_k = √(⟨n⟩λ_k² + δ_k²)`.
    pub omega: f64,
}

/// `c_g = cos(Ωt/2) + i(δ/Ω)sin(Ωt/2)`, `c_e = −i(√⟨n⟩λ/Ω)sin(Ωt/2)`.
pub fn branch_amplitudes(k: usize, t: f64, spec: &ReservoirSpec) -> Result<BranchAmplitudes> {
    spec.validate()?;
    spec.check_index(k)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    let lam = spec.couplings[k];
    let delta = spec.detunings[k];
    let omega = (spec.n_mean * lam * lam + delta * delta).sqrt();
    if omega == 0.0 {
        return Ok(BranchAmplitudes { c_g: C64::new(1.0, 0.0), c_e: C64::new(0.0, 0.0), omega });
    }
    let (s, c) = (0.5 * omega * t).sin_cos();
    Ok(BranchAmplitudes {
        c_g: C64::new(c, delta / omega * s),
        c_e: C64::new(0.0, -spec.n_mean.sqrt() * lam / omega * s),
        omega,
    })
}

/// `∏_k c_k^g(t)`.
pub fn coherence_factor(t: f64, spec: &ReservoirSpec) -> Result<C64> {
    (0..spec.n_qubits()).try_fold(C64::new(1.0, 0.0), |acc, k| Ok(acc * branch_amplitudes(k, t, spec)?.c_g))
}

/// `ω_k = λ_k² / (4Ω_k)`.
pub fn backaction_rotation_rate(spec: &ReservoirSpec, k: usize) -> Result<f64> {
    let b = branch_amplitudes(k, 0.0, spec)?;
    if b.omega.is_nan() || b.omega <= 0.0 {
        return Err(Error::Degenerate(format!("Omega_{k} = 0")));
    }
    Ok(spec.couplings[k].powi(2) / (4.0 * b.omega))
}

/// `Σ_k |c_k^e|² / ⟨n⟩`.
pub fn leakage_ratio(t: f64, spec: &ReservoirSpec) -> Result<f64> {
    if spec.n_mean == 0.0 {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for k in 0..spec.n_qubits() {
        s += branch_amplitudes(k, t, spec)?.c_e.norm_sqr();
    }
    Ok(s / spec.n_mean)
}

#[derive(Clone, Debug)]
pub struct AnalyticJointState {
    pub state: StateVector,
    pub leakage_ratio: f64,
    pub warning: Option<String>,
}

/// `𝒩(|0⟩⊗|g⟩^{⊗N} + |α⟩ ⊗_k (c_k^g|g⟩ + c_k^e|e⟩))`, normalized numerically
/// on the truncated space (so `⟨0|α⟩` is kept in the norm).
pub fn analytic_joint_state(t: f64, alpha: C64, spec: &ReservoirSpec, cutoff: usize) -> Result<AnalyticJointState> {
    let layout = check_layout(spec, cutoff)?;
    let branches: Vec<BranchAmplitudes> =
        (0..spec.n_qubits()).map(|k| branch_amplitudes(k, t, spec)).collect::<Result<_>>()?;
    // same truncation as `initial_state`, so t = 0 agrees exactly
    let coh = coherent_state(alpha, cutoff, 1e-6)?.into_value();
    let nq = spec.n_qubits();
    let mut qubits = DVector::zeros(1 << nq);
    for (i, q) in qubits.iter_mut().enumerate() {
        // qubit 0 is the most significant bit
        *q = (0..nq).fold(C64::new(1.0, 0.0), |acc, k| {
            let b = branches[k];
            acc * if (i >> (nq - 1 - k)) & 1 == 1 { b.c_e } else { b.c_g }
        });
    }
    let stride = layout.strides()[0];
    let mut amps = DVector::zeros(layout.dim());
    amps[0] += C64::new(1.0, 0.0);
    for n in 0..cutoff {
        for i in 0..(1 << nq) {
            amps[n * stride + i] += coh.amps()[n] * qubits[i];
        }
    }
    let state = StateVector::normalized(layout, amps)?;
    let leakage_ratio = leakage_ratio(t, spec)?;
    let warning = (leakage_ratio > LEAKAGE_WARN).then(|| {
        format!("qubit excitation is {:.1}% of the mean photon number; analytic model is approximate", 100.0 * leakage_ratio)
    });
    Ok(AnalyticJointState { state, leakage_ratio, warning })
}

/// Analytic branch states at `times`.
pub fn analytic_trajectory(
    spec: &ReservoirSpec,
    alpha: C64,
    cutoff: usize,
    times: &[f64],
    exec: Exec,
) -> Result<Vec<AnalyticJointState>> {
    par::try_map(exec, times, |&t| analytic_joint_state(t, alpha, spec, cutoff))
}

/// Maximum qubit count for [`oracle_fidelity`] (dense propagation).
pub const ORACLE_MAX_QUBITS: usize = 3;

/// `|⟨ψ_analytic(t)|ψ_exact(t)⟩|²` at each time.
pub fn oracle_fidelity(
    spec: &ReservoirSpec,
    alpha: C64,
    cutoff: usize,
    times: &[f64],
    exec: Exec,
) -> Result<Vec<f64>> {
    if spec.n_qubits() > ORACLE_MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "oracle comparison supports N <= {ORACLE_MAX_QUBITS}, got {}",
            spec.n_qubits()
        )));
    }
    let exact = exact_trajectory(spec, alpha, cutoff, times, PropagationMode::Dense, exec)?;
    let analytic = analytic_trajectory(spec, alpha, cutoff, times, exec)?;
    exact.iter().zip(&analytic).map(|(e, a)| e.fidelity(&a.state)).collect()
}
