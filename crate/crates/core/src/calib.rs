//! Closed-form calibration models: Z crosstalk correction, Ramsey shifts,
//! detuned Rabi spectra and the ZPA-to-frequency polynomial map.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Ramsey fringe frequency of an unshifted qubit, Hz.
pub const RAMSEY_BASE_HZ: f64 = 5e6;

/// Condition number above which a crosstalk matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// `σ_max / σ_min` (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let smin = sv.min();
    if smin > 0.0 { sv.max() / smin } else { f64::INFINITY }
}

/// Effective-from-commanded matrix: `M[i][i] = 1`, `M[i][j] = −α_ij`, where
/// `α_ij` is the crosstalk of line `j` onto qubit `i`.
pub fn assemble_mcor(coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !coeffs.is_square() || coeffs.nrows() == 0 {
        return Err(Error::InvalidDimension(format!(
            "crosstalk coefficients must be square, got {}x{}",
            coeffs.nrows(),
            coeffs.ncols()
        )));
    }
    if let Some(i) = (0..coeffs.nrows()).find(|&i| coeffs[(i, i)] != 0.0) {
        return Err(Error::InvalidArgument(format!("crosstalk coefficient ({i}, {i}) must be zero")));
    }
    if coeffs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("crosstalk coefficients must be finite".into()));
    }
    let n = coeffs.nrows();
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { -coeffs[(i, j)] }))
}

/// Dense coefficient matrix from `(i, j, α_ij)` triples (0-based).
pub fn coefficients_from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, a) in entries {
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}) out of range for {n} qubits")));
        }
        if i == j {
            return Err(Error::InvalidArgument(format!("diagonal entry ({i}, {i}) is not a crosstalk term")));
        }
        m[(i, j)] = a;
    }
    Ok(m)
}

/// Solves `M z_cmd = z_eff` by LU with one step of iterative refinement.
pub fn commanded_amplitudes(m: &DMatrix<f64>, z_eff: &DVector<f64>) -> Result<DVector<f64>> {
    if !m.is_square() || m.nrows() != z_eff.len() {
        return Err(Error::InvalidDimension(format!(
            "{}x{} matrix with {} targets",
            m.nrows(),
            m.ncols(),
            z_eff.len()
        )));
    }
    let condition = condition_number(m);
    if condition.is_nan() || condition >= SINGULAR_CONDITION {
        return Err(Error::Singular { condition });
    }
    let lu = m.clone().lu();
    let mut z = lu.solve(z_eff).ok_or(Error::Singular { condition })?;
    let r = z_eff - m * &z;
    if let Some(dz) = lu.solve(&r) {
        z += dz;
    }
    Ok(z)
}

/// `f_R = f_base + shift`.
pub fn ramsey_frequency(f_base: f64, shift: f64) -> f64 {
    f_base + shift
}

/// Ramsey frequency of every qubit when line amplitudes `z_cmd` are applied
/// and a qubit's frequency moves by `slope` Hz per unit effective amplitude.
pub fn crosstalk_ramsey_frequencies(
    m: &DMatrix<f64>,
    z_cmd: &DVector<f64>,
    slope: f64,
    f_base: f64,
) -> Result<DVector<f64>> {
    if m.ncols() != z_cmd.len() {
        return Err(Error::InvalidDimension("matrix and amplitude vector disagree".into()));
    }
    Ok((m * z_cmd).map(|z| ramsey_frequency(f_base, slope * z)))
}

/// `Ω_R = √(Ω² + δ²)`.
pub fn generalized_rabi(omega: f64, delta: f64) -> f64 {
    omega.hypot(delta)
}

/// `P_e = (Ω²/Ω_R²) sin²(Ω_R t / 2)`.
pub fn detuned_rabi(omega: f64, delta: f64, t: f64) -> f64 {
    let w = generalized_rabi(omega, delta);
    if w == 0.0 {
        return 0.0;
    }
    (omega / w).powi(2) * (0.5 * w * t).sin().powi(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyFit {
    /// Ascending powers: `f(z) = Σ c_k z^k`.
    pub coeffs: Vec<f64>,
    /// `f_i − f(z_i)` per sample.
    pub residuals: Vec<f64>,
}

impl PolyFit {
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }
}

/// Least-squares polynomial of `degree` through `(zpa, freq)` samples with
/// the abscissa scaled to `[−1, 1]`.
pub fn fit_zpa_map(samples: &[(f64, f64)], degree: usize) -> Result<PolyFit> {
    if samples.iter().any(|(z, f)| !(z.is_finite() && f.is_finite())) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} distinct abscissae cannot determine a degree-{degree} polynomial",
            distinct.len()
        )));
    }
    let scale = samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let m = samples.len();
    let v = DMatrix::from_fn(m, degree + 1, |i, k| (samples[i].0 / scale).powi(k as i32));
    let y = DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let svd = v.clone().svd(true, true);
    let tol = 1e-14 * svd.singular_values.max();
    let c = svd.solve(&y, tol).map_err(|e| Error::Degenerate(format!("polynomial solve failed: {e}")))?;
    let residuals = (&y - &v * &c).iter().cloned().collect();
    let coeffs = c.iter().enumerate().map(|(k, x)| x / scale.powi(k as i32)).collect();
    Ok(PolyFit { coeffs, residuals })
}
