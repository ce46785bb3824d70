use nalgebra::{DMatrix, DVector};

use super::layout::SpaceLayout;
use crate::{Error, Result, C64};

/// Pure state over a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: SpaceLayout,
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(layout: SpaceLayout, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for a layout of dimension {}",
                amps.len(),
                layout.dim()
            )));
        }
        Ok(Self { layout, amps })
    }

    /// Builds the state and rescales it to unit norm.
    pub fn normalized(layout: SpaceLayout, amps: DVector<C64>) -> Result<Self> {
        let mut s = Self::new(layout, amps)?;
        s.normalize()?;
        Ok(s)
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(layout: SpaceLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() || digits.iter().zip(layout.dims()).any(|(d, n)| *d >= n) {
            return Err(Error::InvalidArgument(format!("basis label {digits:?} is not in {:?}", layout.dims())));
        }
        let mut amps = DVector::zeros(layout.dim());
        amps[layout.index(digits)] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// Tensor product of per-factor amplitude vectors, in layout order.
    pub fn product(layout: SpaceLayout, parts: &[DVector<C64>]) -> Result<Self> {
        if parts.len() != layout.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} factors given for a {}-factor layout",
                parts.len(),
                layout.len()
            )));
        }
        let mut amps = DVector::from_element(1, C64::new(1.0, 0.0));
        for (p, d) in parts.iter().zip(layout.dims()) {
            if p.len() != d {
                return Err(Error::LayoutMismatch(format!("factor of length {} where {d} expected", p.len())));
            }
            amps = amps.kronecker(p);
        }
        Self::new(layout, amps)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amps(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        self.amps.unscale_mut(n);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_same(other.layout())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        self.check_same(op.layout())?;
        Ok(self.amps.dotc(&(op.matrix() * &self.amps)))
    }

    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        self.check_same(op.layout())?;
        Ok(Self { layout: self.layout.clone(), amps: op.matrix() * &self.amps })
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { layout: self.layout.clone(), mat: &self.amps * self.amps.adjoint() }
    }

    /// Reduced density matrix on `keep`, computed without forming `|ψ⟩⟨ψ|`.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.layout.normalize_sites(keep)?;
        let sub = self.layout.subset(&keep)?;
        let (kept_idx, traced_idx, traced_dim) = split_indices(&self.layout, &keep);
        let mut m = DMatrix::<C64>::zeros(sub.dim(), traced_dim);
        for (i, a) in self.amps.iter().enumerate() {
            m[(kept_idx[i], traced_idx[i])] = *a;
        }
        Ok(DensityMatrix { layout: sub, mat: &m * m.adjoint() })
    }

    /// Zero-pads (or truncates) the bosonic factor to a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<StateVector> {
        let site = self
            .layout
            .boson_site()
            .ok_or_else(|| Error::LayoutMismatch("state has no bosonic factor".into()))?;
        let new_layout = self.layout.with_cutoff(cutoff)?;
        let mut amps = DVector::zeros(new_layout.dim());
        for (i, a) in self.amps.iter().enumerate() {
            let d = self.layout.digits(i);
            if d[site] < cutoff {
                amps[new_layout.index(&d)] = *a;
            }
        }
        Ok(Self { layout: new_layout, amps })
    }

    fn check_same(&self, other: &SpaceLayout) -> Result<()> {
        if &self.layout != other {
            return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", self.layout.dims(), other.dims())));
        }
        Ok(())
    }
}

/// For every full index: its position in the kept subsystem, its position in
/// the traced subsystem, plus the traced dimension.
fn split_indices(layout: &SpaceLayout, keep: &[usize]) -> (Vec<usize>, Vec<usize>, usize) {
    let dims = layout.dims();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dim: usize = traced.iter().map(|&i| dims[i]).product();
    let mut kept_idx = Vec::with_capacity(layout.dim());
    let mut traced_idx = Vec::with_capacity(layout.dim());
    for i in 0..layout.dim() {
        let d = layout.digits(i);
        let mut k = 0;
        for &s in keep {
            k = k * dims[s] + d[s];
        }
        let mut t = 0;
        for &s in &traced {
            t = t * dims[s] + d[s];
        }
        kept_idx.push(k);
        traced_idx.push(t);
    }
    (kept_idx, traced_idx, traced_dim)
}

/// Density matrix over a [`SpaceLayout`].
///
/// Construction only checks shapes: raw reconstructions (non-PSD, non-unit
/// trace) are representable on purpose. Use [`DensityMatrix::validate`] for
/// the physical invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(layout: SpaceLayout, mat: DMatrix<C64>) -> Result<Self> {
        check_square(&layout, &mat)?;
        Ok(Self { layout, mat })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        psi.density()
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.mat)
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-10) and eigenvalues ≥ −1e-8.
    pub fn validate(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidArgument(format!("trace {tr} is not 1")));
        }
        let eig = super::HermitianEigen::new(&self.mat)?;
        let min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::InvalidArgument(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.layout() != &self.layout {
            return Err(Error::LayoutMismatch("operator and state layouts differ".into()));
        }
        Ok((&self.mat * op.matrix()).trace())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_pure(&self, psi: &StateVector) -> Result<f64> {
        if psi.layout() != &self.layout {
            return Err(Error::LayoutMismatch("state layouts differ".into()));
        }
        Ok(psi.amps().dotc(&(&self.mat * psi.amps())).re)
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &Operator) -> Result<DensityMatrix> {
        if u.layout() != &self.layout {
            return Err(Error::LayoutMismatch("operator and state layouts differ".into()));
        }
        Ok(Self { layout: self.layout.clone(), mat: u.matrix() * &self.mat * u.matrix().adjoint() })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(Self { layout: self.layout.concat(&other.layout)?, mat: self.mat.kronecker(&other.mat) })
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }

    pub fn scaled(&self, s: f64) -> DensityMatrix {
        Self { layout: self.layout.clone(), mat: self.mat.scale(s) }
    }

    /// Elementwise `self − other`, kept as a (possibly non-physical) matrix.
    pub fn difference(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!(
                "{:?} vs {:?}",
                self.layout.dims(),
                other.layout.dims()
            )));
        }
        Ok(Self { layout: self.layout.clone(), mat: &self.mat - &other.mat })
    }
}

/// Reduced state on the factors in `keep` (taken in ascending layout order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    let keep = layout.normalize_sites(keep)?;
    let sub = layout.subset(&keep)?;
    let (kept_idx, traced_idx, traced_dim) = split_indices(layout, &keep);
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for i in 0..layout.dim() {
        groups[traced_idx[i]].push((i, kept_idx[i]));
    }
    let mut out = DMatrix::<C64>::zeros(sub.dim(), sub.dim());
    for g in &groups {
        for &(i, ki) in g {
            for &(j, kj) in g {
                out[(ki, kj)] += rho.matrix()[(i, j)];
            }
        }
    }
    Ok(DensityMatrix { layout: sub, mat: out })
}

/// Dense operator tagged with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    mat: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    pub fn new(layout: SpaceLayout, mat: DMatrix<C64>) -> Result<Self> {
        check_square(&layout, &mat)?;
        Ok(Self { layout, mat, hermitian: false })
    }

    /// Marks the operator as Hermitian by construction after verifying it.
    pub fn hermitian(layout: SpaceLayout, mat: DMatrix<C64>) -> Result<Self> {
        check_square(&layout, &mat)?;
        let dev = relative_hermitian_deviation(&mat);
        if dev > super::HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self { layout, mat, hermitian: true })
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        let d = layout.dim();
        Self { layout, mat: DMatrix::identity(d, d), hermitian: true }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        relative_hermitian_deviation(&self.mat) <= tol
    }

    pub fn adjoint(&self) -> Operator {
        Self { layout: self.layout.clone(), mat: self.mat.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, s: C64) -> Operator {
        Self {
            layout: self.layout.clone(),
            mat: self.mat.map(|x| x * s),
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            mat: &self.mat + &other.mat,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            mat: &self.mat - &other.mat,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self { layout: self.layout.clone(), mat: &self.mat * &other.mat, hermitian: false })
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
            hermitian: false,
        })
    }

    /// Max-norm distance between two operators on the same layout.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same(other)?;
        Ok((&self.mat - &other.mat).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!(
                "{:?} vs {:?}",
                self.layout.dims(),
                other.layout.dims()
            )));
        }
        Ok(())
    }
}

fn check_square(layout: &SpaceLayout, mat: &DMatrix<C64>) -> Result<()> {
    if mat.nrows() != mat.ncols() || mat.nrows() != layout.dim() {
        return Err(Error::LayoutMismatch(format!(
            "{}x{} matrix for a layout of dimension {}",
            mat.nrows(),
            mat.ncols(),
            layout.dim()
        )));
    }
    Ok(())
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn relative_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    hermitian_deviation(m) / scale
}
