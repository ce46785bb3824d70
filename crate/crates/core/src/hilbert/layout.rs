use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    /// Bosonic mode keeping Fock levels `0..cutoff`.
    Boson(usize),
    Qubit,
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::Boson(cutoff) => cutoff,
            Factor::Qubit => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    factors: Vec<Factor>,
}

impl SpaceLayout {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidDimension("layout needs at least one factor".into()));
        }
        if factors.iter().any(|f| f.dim() == 0) {
            return Err(Error::InvalidDimension("bosonic cutoff must be at least 1".into()));
        }
        if factors.iter().filter(|f| matches!(f, Factor::Boson(_))).count() > 1 {
            return Err(Error::InvalidDimension("at most one bosonic factor is supported".into()));
        }
        Ok(Self { factors })
    }

    /// A single bosonic mode.
    pub fn mode(cutoff: usize) -> Result<Self> {
        Self::new(vec![Factor::Boson(cutoff)])
    }

    /// Boson first, followed by `n` qubits (reservoir ordering).
    pub fn mode_with_qubits(cutoff: usize, n: usize) -> Result<Self> {
        let mut f = vec![Factor::Boson(cutoff)];
        f.extend(std::iter::repeat_n(Factor::Qubit, n));
        Self::new(f)
    }

    /// Qubit first, then the bosonic mode (ancilla ordering used for cat
    /// synthesis and sideband models).
    pub fn qubit_mode(cutoff: usize) -> Result<Self> {
        Self::new(vec![Factor::Qubit, Factor::Boson(cutoff)])
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![Factor::Qubit; n])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).product()
    }

    pub fn boson_site(&self) -> Option<usize> {
        self.factors.iter().position(|f| matches!(f, Factor::Boson(_)))
    }

    pub fn cutoff(&self) -> Option<usize> {
        self.factors.iter().find_map(|f| match f {
            Factor::Boson(c) => Some(*c),
            Factor::Qubit => None,
        })
    }

    pub fn qubit_sites(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.factors[i] == Factor::Qubit).collect()
    }

    /// Row-major strides: the last factor varies fastest.
    pub fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut s = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * dims[k + 1];
        }
        s
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.len());
        digits
            .iter()
            .zip(self.strides())
            .map(|(d, s)| d * s)
            .sum()
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = index % dims[k];
            index /= dims[k];
        }
        out
    }

    /// Layout of the factors listed in `keep` (ascending, deduplicated).
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.normalize_sites(keep)?;
        Self::new(keep.iter().map(|&i| self.factors[i]).collect())
    }

    /// Layout of `self ⊗ other`.
    pub fn concat(&self, other: &SpaceLayout) -> Result<Self> {
        let mut f = self.factors.clone();
        f.extend_from_slice(&other.factors);
        Self::new(f)
    }

    /// Same layout with the bosonic cutoff replaced.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let f = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::Boson(_) => Factor::Boson(cutoff),
                q => *q,
            })
            .collect();
        Self::new(f)
    }

    pub(crate) fn normalize_sites(&self, sites: &[usize]) -> Result<Vec<usize>> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("site set must be nonempty".into()));
        }
        let mut v = sites.to_vec();
        v.sort_unstable();
        v.dedup();
        if let Some(&bad) = v.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidArgument(format!(
                "site {bad} out of range for a {}-factor layout",
                self.len()
            )));
        }
        Ok(v)
    }
}
