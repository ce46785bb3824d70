//! TOML device configuration. Frequencies are linear MHz, times ns.

use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub resonator: Resonator,
    pub qubits: Vec<QubitConfig>,
    pub scenario: Scenario,
    /// Source text, kept to anchor validation messages to lines.
    #[serde(skip)]
    source: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Resonator {
    pub omega_s_MHz: f64,
    pub cutoff: usize,
}

/// One qubit. Ancillas carry no modulation, so `eps_MHz`/`nu_MHz` are
/// optional; the remaining optional fields are device metadata only.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case, dead_code)]
pub struct QubitConfig {
    pub name: String,
    pub xi_MHz: f64,
    pub eps_MHz: Option<f64>,
    pub nu_MHz: Option<f64>,
    #[serde(default)]
    pub delta_MHz: f64,
    pub K_MHz: f64,
    /// Measured sideband coupling; replaces `J₁(ε/ν)ξ` when present.
    pub lambda_half_MHz: Option<f64>,
    pub idle_GHz: Option<f64>,
    pub highest_GHz: Option<f64>,
    pub readout_GHz: Option<f64>,
    pub F_g: Option<f64>,
    pub F_e: Option<f64>,
    pub T1_us: Option<f64>,
    pub T2_us: Option<f64>,
    pub T2_echo_us: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub alpha: f64,
    pub n_qubits: usize,
    pub t_max_ns: f64,
    pub dt_ns: f64,
    pub wigner_grid: WignerGrid,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

impl DeviceConfig {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let mut cfg: DeviceConfig = toml::from_str(source).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.source = source.to_owned();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&src).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn fail(&self, key: &str, msg: String) -> CliError {
        match line_of(&self.source, key) {
            Some(line) => CliError::Validation(format!("config line {line}: `{key}`: {msg}")),
            None => CliError::Validation(format!("config: `{key}`: {msg}")),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        if self.resonator.cutoff < 2 {
            return Err(self.fail("cutoff", format!("must be at least 2, got {}", self.resonator.cutoff)));
        }
        if !(self.resonator.omega_s_MHz.is_finite() && self.resonator.omega_s_MHz > 0.0) {
            return Err(self.fail("omega_s_MHz", "must be positive".into()));
        }
        if s.n_qubits == 0 || s.n_qubits > self.qubits.len() {
            return Err(self.fail(
                "n_qubits",
                format!("must lie in 1..={} (the number of listed qubits), got {}", self.qubits.len(), s.n_qubits),
            ));
        }
        if !(s.dt_ns.is_finite() && s.dt_ns > 0.0) {
            return Err(self.fail("dt_ns", format!("must be positive, got {}", s.dt_ns)));
        }
        if !(s.t_max_ns.is_finite() && s.t_max_ns >= 0.0) {
            return Err(self.fail("t_max_ns", format!("must be non-negative, got {}", s.t_max_ns)));
        }
        if !s.alpha.is_finite() {
            return Err(self.fail("alpha", "must be finite".into()));
        }
        let g = &s.wigner_grid;
        if g.n_re == 0 || g.n_im == 0 || !(g.re_min <= g.re_max && g.im_min <= g.im_max) {
            return Err(self.fail("wigner_grid", "needs n_re, n_im ≥ 1 and min ≤ max".into()));
        }
        for q in &self.qubits {
            if !(q.xi_MHz.is_finite() && q.xi_MHz > 0.0) {
                return Err(self.fail("xi_MHz", format!("qubit {}: must be positive", q.name)));
            }
            if q.eps_MHz.is_some() != q.nu_MHz.is_some() {
                return Err(self.fail("eps_MHz", format!("qubit {}: eps_MHz and nu_MHz go together", q.name)));
            }
        }
        Ok(())
    }

    /// Sample times `0, dt, …` up to `t_max` (inclusive within rounding), ns.
    pub fn times_ns(&self, t_max_ns: f64, dt_ns: f64) -> Vec<f64> {
        let steps = (t_max_ns / dt_ns + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * dt_ns).collect()
    }
}

/// 1-based line of the first `key = …` assignment.
fn line_of(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
            || t.strip_prefix('[').and_then(|r| r.strip_prefix("scenario.")).is_some_and(|r| r.starts_with(key))
    })
    .map(|i| i + 1)
}
