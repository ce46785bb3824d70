//! Distinguishability of reservoir branch states, entropy and physicality
//! restoration of reconstructed qubit states.

use crate::dynamics::{
    analytic_joint_state, branch_amplitudes, coherence_factor, ExactReservoir, PropagationMode, ReservoirSpec,
};
use crate::hilbert::{
    coherent_state, qubit, DensityMatrix, HermitianEigen, Propagate, SpaceLayout, StateVector, HERMITIAN_TOL,
};
use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Largest qubit count handled by dense `2^N` distinguishability.
pub const MAX_DISTINGUISHABILITY_QUBITS: usize = 12;

/// Most negative eigenvalue tolerated as a valid state.
pub const PSD_TOL: f64 = 1e-8;

fn hermitian_eigenvalues(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let m = rho.matrix();
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = rho.hermitian_deviation() / scale;
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(HermitianEigen::new(m)?.values.iter().cloned().collect())
}

/// `½ Σ |λ_i(a − b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let delta = a.difference(b)?;
    Ok(0.5 * hermitian_eigenvalues(&delta)?.iter().map(|l| l.abs()).sum::<f64>())
}

/// `−Σ λ log₂ λ`, eigenvalues clamped at 0.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(rho)?;
    if let Some(&neg) = ev.iter().find(|&&l| l < -PSD_TOL) {
        return Err(Error::InvalidArgument(format!("density matrix has eigenvalue {neg:.3e}")));
    }
    Ok(ev.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum())
}

/// Clips negative eigenvalues to zero and renormalizes the trace.
pub fn psd_project(raw: &DensityMatrix) -> Result<DensityMatrix> {
    let m = raw.matrix();
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = raw.hermitian_deviation() / scale;
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = HermitianEigen::new(m)?;
    let total: f64 = eig.values.iter().map(|l| l.max(0.0)).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate("no positive eigenvalue to keep".into()));
    }
    let out = eig.map(|l| C64::new(l.max(0.0) / total, 0.0));
    DensityMatrix::new(raw.layout().clone(), out)
}

fn single_qubit_layout() -> SpaceLayout {
    SpaceLayout::qubits(1).expect("one qubit is a valid layout")
}

fn check_single_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.layout() != &single_qubit_layout() {
        return Err(Error::LayoutMismatch("expected a single-qubit density matrix".into()));
    }
    Ok(())
}

/// `|g⟩⟨g|` on one qubit.
pub fn ground_projector() -> DensityMatrix {
    DensityMatrix::new(single_qubit_layout(), qubit::proj_g()).expect("2x2 projector")
}

/// `ρ̃ = P(2ρ_k − |g⟩⟨g|)`: the `|α⟩`-branch qubit state under an equal-weight
/// cat, made physical by [`psd_project`].
pub fn branch_from_tomo(rho_k: &DensityMatrix) -> Result<DensityMatrix> {
    check_single_qubit(rho_k)?;
    let raw = rho_k.scaled(2.0).difference(&ground_projector())?;
    psd_project(&raw)
}

fn tensor_all(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let (first, rest) = states.split_first().ok_or_else(|| Error::InvalidArgument("no branch states".into()))?;
    rest.iter().try_fold(first.clone(), |acc, s| acc.tensor(s))
}

/// Reservoir states conditioned on the two cat components.
#[derive(Clone, Debug)]
pub struct BranchPair {
    /// `⊗_k |g⟩ₖ⟨g|`.
    pub rho_vac: DensityMatrix,
    /// `⊗_k ρ̃_k`.
    pub rho_alpha: DensityMatrix,
}

impl BranchPair {
    pub fn from_branches(branches: &[DensityMatrix]) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidArgument("no branch states".into()));
        }
        if branches.len() > MAX_DISTINGUISHABILITY_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{} qubits exceed the dense limit {MAX_DISTINGUISHABILITY_QUBITS}; a sampling estimator would be needed",
                branches.len()
            )));
        }
        for b in branches {
            check_single_qubit(b)?;
        }
        let ground = vec![ground_projector(); branches.len()];
        Ok(Self { rho_vac: tensor_all(&ground)?, rho_alpha: tensor_all(branches)? })
    }

    pub fn distinguishability(&self) -> Result<f64> {
        trace_distance(&self.rho_vac, &self.rho_alpha)
    }
}

/// `𝒟 = T(⊗_k|g⟩⟨g|, ⊗_k ρ̃_k)` in the full `2^N` space.
pub fn reservoir_distinguishability(branches: &[DensityMatrix]) -> Result<f64> {
    BranchPair::from_branches(branches)?.distinguishability()
}

/// `√(1 − ∏_k |c_k^g|²)`, the pure-product special case.
pub fn pure_product_distinguishability(c_g: &[C64]) -> f64 {
    (1.0 - c_g.iter().map(|c| c.norm_sqr()).product::<f64>()).max(0.0).sqrt()
}

/// `|ϕ_k⟩⟨ϕ_k|` with `|ϕ_k⟩ = c_g|g⟩ + c_e|e⟩` at time `t`.
pub fn analytic_branch_states(t: f64, spec: &ReservoirSpec) -> Result<Vec<DensityMatrix>> {
    (0..spec.n_qubits())
        .map(|k| {
            let b = branch_amplitudes(k, t, spec)?;
            let psi = StateVector::new(single_qubit_layout(), nalgebra::DVector::from_vec(vec![b.c_g, b.c_e]))?;
            Ok(psi.density())
        })
        .collect()
}

/// Per-qubit reduced states `ρ_k` of a boson ⊗ qubits state.
pub fn reduced_qubit_states(psi: &StateVector) -> Result<Vec<DensityMatrix>> {
    let sites = psi.layout().qubit_sites();
    sites
        .iter()
        .map(|&s| {
            let r = psi.reduced(&[s])?;
            DensityMatrix::new(single_qubit_layout(), r.into_matrix())
        })
        .collect()
}

/// Trace distance between the exact joint reservoir state and the factorized
/// model `½(⊗|g⟩⟨g| + ⊗ρ̃_k)`, with `ρ̃_k` from [`branch_from_tomo`].
pub fn factorization_error(psi: &StateVector) -> Result<f64> {
    let sites = psi.layout().qubit_sites();
    if sites.is_empty() || sites.len() > 3 {
        return Err(Error::InvalidArgument("factorization error is reported for 1 to 3 qubits".into()));
    }
    let exact = psi.reduced(&sites)?;
    let branches: Vec<DensityMatrix> =
        reduced_qubit_states(psi)?.iter().map(branch_from_tomo).collect::<Result<_>>()?;
    let pair = BranchPair::from_branches(&branches)?;
    let model = pair.rho_vac.scaled(0.5).matrix() + pair.rho_alpha.scaled(0.5).matrix();
    let exact = DensityMatrix::new(pair.rho_vac.layout().clone(), exact.into_matrix())?;
    trace_distance(&exact, &DensityMatrix::new(pair.rho_vac.layout().clone(), model)?)
}

/// One row of a decoherence sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceRow {
    /// Seconds.
    pub t: f64,
    /// Analytic: `|∏ c_k^g|`. Exact: `|⟨0|ρ_F(t)|α⟩| / |⟨0|ρ_F(0)|α⟩|`.
    pub coh_factor_abs: f64,
    /// Entropy of the field, equal to that of all qubits together.
    pub entropy_bits: f64,
    pub distinguishability: f64,
}

/// Entropy of the boson factor of a pure boson ⊗ qubits state.
pub fn field_entropy(psi: &StateVector) -> Result<f64> {
    let site = psi.layout().boson_site().ok_or_else(|| Error::LayoutMismatch("state has no bosonic mode".into()))?;
    von_neumann_entropy(&psi.reduced(&[site])?)
}

fn branch_ground_amplitudes(t: f64, spec: &ReservoirSpec) -> Result<Vec<C64>> {
    (0..spec.n_qubits()).map(|k| Ok(branch_amplitudes(k, t, spec)?.c_g)).collect()
}

/// Analytic-model sweep. Both branch states are pure products, so `D` uses
/// [`pure_product_distinguishability`] rather than a `2^N` trace distance.
pub fn analytic_decoherence(
    spec: &ReservoirSpec,
    alpha: C64,
    cutoff: usize,
    times: &[f64],
    exec: Exec,
) -> Result<(Vec<DecoherenceRow>, Vec<String>)> {
    let rows = par::try_map(exec, times, |&t| {
        let joint = analytic_joint_state(t, alpha, spec, cutoff)?;
        let row = DecoherenceRow {
            t,
            coh_factor_abs: coherence_factor(t, spec)?.norm(),
            entropy_bits: field_entropy(&joint.state)?,
            distinguishability: pure_product_distinguishability(&branch_ground_amplitudes(t, spec)?),
        };
        Ok::<_, Error>((row, joint.warning.map(|w| format!("t = {:.3} ns: {w}", t * 1e9))))
    })?;
    Ok(split_rows(rows))
}

fn split_rows(rows: Vec<(DecoherenceRow, Option<String>)>) -> (Vec<DecoherenceRow>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(rows.len());
    for (r, w) in rows {
        out.push(r);
        warnings.extend(w);
    }
    (out, warnings)
}

fn fringe(psi: &StateVector, alpha: C64) -> Result<f64> {
    let site = psi.layout().boson_site().ok_or_else(|| Error::LayoutMismatch("state has no bosonic mode".into()))?;
    let rho = psi.reduced(&[site])?;
    let cutoff = rho.matrix().nrows();
    let coh = coherent_state(alpha, cutoff, 1e-6)?.into_value();
    // ⟨0|ρ|α⟩
    let row = rho.matrix().row(0);
    Ok((row * coh.amps())[(0, 0)].norm())
}

/// Exact-evolution sweep; `D` from [`branch_from_tomo`] applied to every
/// exact `ρ_k`.
pub fn exact_decoherence(
    spec: &ReservoirSpec,
    alpha: C64,
    cutoff: usize,
    times: &[f64],
    mode: PropagationMode,
    exec: Exec,
) -> Result<(Vec<DecoherenceRow>, Vec<String>)> {
    let prop = ExactReservoir::new(spec, cutoff, mode, exec)?;
    let psi0 = crate::dynamics::initial_state(alpha, spec.n_qubits(), cutoff)?;
    let f0 = fringe(&psi0, alpha)?;
    let rows = par::try_map(exec, times, |&t| {
        let psi = prop.evolve(&psi0, t)?;
        let branches: Vec<DensityMatrix> =
            reduced_qubit_states(&psi)?.iter().map(branch_from_tomo).collect::<Result<_>>()?;
        let row = DecoherenceRow {
            t,
            coh_factor_abs: fringe(&psi, alpha)? / f0,
            entropy_bits: field_entropy(&psi)?,
            distinguishability: reservoir_distinguishability(&branches)?,
        };
        Ok::<_, Error>((row, None))
    })?;
    Ok(split_rows(rows))
}
