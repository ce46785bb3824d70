use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::layout::SpaceLayout;
use super::state::{relative_hermitian_deviation, Operator, StateVector};
use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Spectral decomposition `H = V diag(values) V†`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::InvalidDimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if n == 0 {
            return Ok(Self { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) });
        }
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 100_000).ok_or(Error::EigenFailure { dim: n })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        Ok(Self { values, vectors })
    }

    /// `V f(diag) V†` for a scalar map `f` on the spectrum.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (k, &l) in self.values.iter().enumerate() {
            let fk = f(l);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }

    fn apply_phase(&self, v: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut coeffs = self.vectors.adjoint() * v;
        for (c, &l) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= C64::from_polar(1.0, -l * t);
        }
        &self.vectors * coeffs
    }
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    let eig = HermitianEigen::new(h)?;
    Ok(eig.map(|l| C64::from_polar(1.0, -l * t)))
}

pub trait Propagate {
    fn layout(&self) -> &SpaceLayout;

    /// `exp(−iHt)|ψ⟩`.
    fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector>;

    fn evolve_many(&self, psi: &StateVector, times: &[f64], exec: Exec) -> Result<Vec<StateVector>>
    where
        Self: Sync,
    {
        par::try_map(exec, times, |&t| self.evolve(psi, t))
    }
}

/// Dense propagator from one Hermitian eigendecomposition.
#[derive(Clone, Debug)]
pub struct Propagator {
    layout: SpaceLayout,
    eig: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        let dev = relative_hermitian_deviation(h.matrix());
        if dev > super::HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self { layout: h.layout().clone(), eig: HermitianEigen::new(h.matrix())? })
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eig
    }

    pub fn unitary(&self, t: f64) -> Operator {
        let u = self.eig.map(|l| C64::from_polar(1.0, -l * t));
        Operator::new(self.layout.clone(), u).expect("propagator layout is consistent")
    }
}

impl Propagate for Propagator {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.layout() != &self.layout {
            return Err(Error::LayoutMismatch("state and Hamiltonian layouts differ".into()));
        }
        StateVector::new(self.layout.clone(), self.eig.apply_phase(psi.amps(), t))
    }
}

/// `exp(−iHt)|ψ⟩` via a dense Hermitian eigendecomposition. `H` is in rad/s
/// and `t` in s.
pub fn evolve(h: &Operator, psi: &StateVector, t: f64) -> Result<StateVector> {
    Propagator::new(h)?.evolve(psi, t)
}

/// Time-ordered midpoint-rule propagation `∏ exp(−i H(t_k + dt/2) dt)`.
///
/// The step is shrunk so that an integer number of steps lands on `t_end`.
pub fn evolve_td<F>(h_of_t: F, psi: &StateVector, t_end: f64, dt: f64) -> Result<StateVector>
where
    F: Fn(f64) -> Result<Operator>,
{
    evolve_td_observed(h_of_t, psi, t_end, dt, |_, _| {})
}

/// [`evolve_td`] calling `observe(t, ψ(t))` at `t = 0` and after every step.
pub fn evolve_td_observed<F, O>(
    h_of_t: F,
    psi: &StateVector,
    t_end: f64,
    dt: f64,
    mut observe: O,
) -> Result<StateVector>
where
    F: Fn(f64) -> Result<Operator>,
    O: FnMut(f64, &StateVector),
{
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if t_end < 0.0 || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("end time must be nonnegative, got {t_end}")));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut state = psi.clone();
    observe(0.0, &state);
    if steps == 0 {
        return Ok(state);
    }
    let h = t_end / steps as f64;
    for k in 0..steps {
        let t_mid = (k as f64 + 0.5) * h;
        let hk = h_of_t(t_mid)?;
        if hk.layout() != psi.layout() {
            return Err(Error::LayoutMismatch("Hamiltonian layout changed during propagation".into()));
        }
        let dev = relative_hermitian_deviation(hk.matrix());
        if dev > super::HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let eig = HermitianEigen::new(hk.matrix())?;
        state = StateVector::new(psi.layout().clone(), eig.apply_phase(state.amps(), h))?;
        observe((k + 1) as f64 * h, &state);
    }
    Ok(state)
}

/// Hermitian operator stored as independent diagonal blocks, one per value of
/// a conserved integer label (e.g. total excitation number).
#[derive(Clone, Debug)]
pub struct BlockHermitian {
    layout: SpaceLayout,
    blocks: Vec<Block>,
}

#[derive(Clone, Debug)]
struct Block {
    label: usize,
    indices: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl BlockHermitian {
    /// Assembles blocks from `(row, col, value)` entries. Entries linking basis
    /// states with different labels must be zero.
    pub fn from_elements<I>(layout: SpaceLayout, labels: &[usize], elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        if labels.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} labels for dimension {}",
                labels.len(),
                layout.dim()
            )));
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        let mut position = vec![(0usize, 0usize); labels.len()];
        let mut blocks = Vec::with_capacity(groups.len());
        for (b, (label, indices)) in groups.into_iter().enumerate() {
            for (p, &i) in indices.iter().enumerate() {
                position[i] = (b, p);
            }
            let n = indices.len();
            blocks.push(Block { label, indices, matrix: DMatrix::zeros(n, n) });
        }
        for (r, c, v) in elements {
            if r >= labels.len() || c >= labels.len() {
                return Err(Error::InvalidArgument(format!("element ({r}, {c}) out of range")));
            }
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let (br, pr) = position[r];
            let (bc, pc) = position[c];
            if br != bc {
                return Err(Error::BlockStructure { row: r, col: c });
            }
            blocks[br].matrix[(pr, pc)] += v;
        }
        for b in &blocks {
            let dev = relative_hermitian_deviation(&b.matrix);
            if dev > super::HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation: dev });
            }
        }
        Ok(Self { layout, blocks })
    }

    /// Extracts the blocks of a dense operator, rejecting any cross-block
    /// entry larger than `tol` (relative to the largest entry).
    pub fn from_operator(op: &Operator, labels: &[usize], tol: f64) -> Result<Self> {
        let m = op.matrix();
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut elems = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if labels.get(r) != labels.get(c) {
                    if v.norm() > tol * scale {
                        return Err(Error::BlockStructure { row: r, col: c });
                    }
                    continue;
                }
                elems.push((r, c, v));
            }
        }
        Self::from_elements(op.layout().clone(), labels, elems)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    /// `(label, block dimension)` pairs in ascending label order.
    pub fn block_sizes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.label, b.indices.len())).collect()
    }

    pub fn to_dense(&self) -> Operator {
        let d = self.layout.dim();
        let mut m = DMatrix::zeros(d, d);
        for b in &self.blocks {
            for (p, &i) in b.indices.iter().enumerate() {
                for (q, &j) in b.indices.iter().enumerate() {
                    m[(i, j)] = b.matrix[(p, q)];
                }
            }
        }
        Operator::new(self.layout.clone(), m).expect("block layout is consistent")
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self, exec: Exec) -> Result<Vec<f64>> {
        let per = par::try_map(exec, &self.blocks, |b| HermitianEigen::new(&b.matrix))?;
        let mut all: Vec<f64> = per.iter().flat_map(|e| e.values.iter().cloned()).collect();
        all.sort_by(f64::total_cmp);
        Ok(all)
    }
}

/// Propagator that diagonalizes each block of a [`BlockHermitian`]
/// independently.
#[derive(Clone, Debug)]
pub struct BlockPropagator {
    layout: SpaceLayout,
    blocks: Vec<(Vec<usize>, HermitianEigen)>,
}

impl BlockPropagator {
    pub fn new(h: &BlockHermitian, exec: Exec) -> Result<Self> {
        let eigs = par::try_map(exec, &h.blocks, |b| HermitianEigen::new(&b.matrix))?;
        let blocks = h.blocks.iter().map(|b| b.indices.clone()).zip(eigs).collect();
        Ok(Self { layout: h.layout.clone(), blocks })
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

impl Propagate for BlockPropagator {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.layout() != &self.layout {
            return Err(Error::LayoutMismatch("state and Hamiltonian layouts differ".into()));
        }
        let src = psi.amps();
        let mut out = DVector::zeros(src.len());
        for (indices, eig) in &self.blocks {
            let sub = DVector::from_iterator(indices.len(), indices.iter().map(|&i| src[i]));
            if sub.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let evolved = eig.apply_phase(&sub, t);
            for (&i, z) in indices.iter().zip(evolved.iter()) {
                out[i] = *z;
            }
        }
        StateVector::new(self.layout.clone(), out)
    }
}
