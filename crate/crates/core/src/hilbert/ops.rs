use nalgebra::{DMatrix, DVector};

use super::layout::SpaceLayout;
use super::propagate::expm_hermitian;
use super::state::{Operator, StateVector};
use crate::{Error, Result, C64};

/// A value computed on a truncated space together with the size of what the
/// truncation discarded.
#[derive(Clone, Debug)]
pub struct Truncated<T> {
    pub value: T,
    /// Discarded weight (probability mass or state-error norm, see producer).
    pub tail: f64,
    pub tol: f64,
}

impl<T> Truncated<T> {
    pub fn within_tolerance(&self) -> bool {
        self.tail <= self.tol
    }

    pub fn into_value(self) -> T {
        self.value
    }

    /// Turns a tolerance violation into [`Error::Truncation`].
    pub fn require(self, context: &str) -> Result<T> {
        if self.within_tolerance() {
            Ok(self.value)
        } else {
            Err(Error::Truncation { error: self.tail, tol: self.tol, context: context.into() })
        }
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(Error::InvalidDimension("cutoff must be at least 1".into()));
    }
    Ok(())
}

/// `a` on `cutoff` Fock levels: `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    check_cutoff(cutoff)?;
    let mut m = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(SpaceLayout::mode(cutoff)?, m)
}

pub fn creation(cutoff: usize) -> Result<Operator> {
    Ok(annihilation(cutoff)?.adjoint())
}

pub fn number_operator(cutoff: usize) -> Result<Operator> {
    check_cutoff(cutoff)?;
    let d = DVector::from_fn(cutoff, |n, _| C64::new(n as f64, 0.0));
    Operator::hermitian(SpaceLayout::mode(cutoff)?, DMatrix::from_diagonal(&d))
}

/// Poisson mass `Σ_{n ≥ cutoff} e^{−|α|²} |α|^{2n} / n!` of a coherent state.
pub fn coherent_tail(alpha: C64, cutoff: usize) -> f64 {
    let r2 = alpha.norm_sqr();
    let mut term = (-r2).exp();
    for n in 1..=cutoff {
        term *= r2 / n as f64;
    }
    // term is now the weight of level `cutoff`
    let mut tail = 0.0;
    let mut n = cutoff;
    loop {
        tail += term;
        n += 1;
        term *= r2 / n as f64;
        if term < 1e-300 || (term < 1e-18 * tail && (n as f64) > r2) {
            break;
        }
    }
    tail
}

/// `|α⟩` truncated to `cutoff` levels and renormalized. `tail` is the Poisson
/// mass beyond the cutoff; `tol` is what the caller accepts (default 1e-8).
pub fn coherent_state(alpha: C64, cutoff: usize, tol: f64) -> Result<Truncated<StateVector>> {
    check_cutoff(cutoff)?;
    let mut amps = DVector::zeros(cutoff);
    let mut a = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = a;
    for n in 1..cutoff {
        a = a * alpha / (n as f64).sqrt();
        amps[n] = a;
    }
    let tail = coherent_tail(alpha, cutoff);
    let state = StateVector::normalized(SpaceLayout::mode(cutoff)?, amps)?;
    Ok(Truncated { value: state, tail, tol })
}

/// `D(β) = exp(βa† − β*a)` on the truncated mode, built from the Hermitian
/// generator `G = i(βa† − β*a)` as `exp(−iG)`. `tail` reports
/// `‖D(β)|0⟩ − |β⟩‖` against the truncated coherent state (tolerance 1e-6).
pub fn displacement(beta: C64, cutoff: usize) -> Result<Truncated<Operator>> {
    let a = annihilation(cutoff)?;
    let gen = (a.adjoint().matrix().map(|x| x * beta) - a.matrix().map(|x| x * beta.conj()))
        .map(|x| x * C64::new(0.0, 1.0));
    let u = expm_hermitian(&gen, 1.0)?;
    let layout = SpaceLayout::mode(cutoff)?;
    let op = Operator::new(layout, u)?;
    let coh = coherent_state(beta, cutoff, 1e-8)?.value;
    let displaced_vac = op.matrix().column(0).into_owned();
    let err = (displaced_vac - coh.amps()).norm();
    Ok(Truncated { value: op, tail: err, tol: 1e-6 })
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` acting on factor `site`.
pub fn embed(op: &DMatrix<C64>, site: usize, layout: &SpaceLayout) -> Result<Operator> {
    let dims = layout.dims();
    if site >= dims.len() {
        return Err(Error::InvalidArgument(format!("site {site} out of range")));
    }
    if op.nrows() != dims[site] || op.ncols() != dims[site] {
        return Err(Error::LayoutMismatch(format!(
            "{}x{} operator on a factor of dimension {}",
            op.nrows(),
            op.ncols(),
            dims[site]
        )));
    }
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    let m = DMatrix::<C64>::identity(left, left)
        .kronecker(op)
        .kronecker(&DMatrix::<C64>::identity(right, right));
    Operator::new(layout.clone(), m)
}

/// Single-qubit matrices in the basis `|g⟩ = 0`, `|e⟩ = 1`.
pub mod qubit {
    use nalgebra::DMatrix;

    use crate::C64;

    fn m(a: [[C64; 2]; 2]) -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
    }

    const O: C64 = C64::new(0.0, 0.0);
    const I1: C64 = C64::new(1.0, 0.0);
    const IM: C64 = C64::new(0.0, 1.0);

    pub fn identity() -> DMatrix<C64> {
        DMatrix::identity(2, 2)
    }

    pub fn sigma_x() -> DMatrix<C64> {
        m([[O, I1], [I1, O]])
    }

    pub fn sigma_y() -> DMatrix<C64> {
        m([[O, -IM], [IM, O]])
    }

    /// `|g⟩⟨g| − |e⟩⟨e|`.
    pub fn sigma_z() -> DMatrix<C64> {
        m([[I1, O], [O, -I1]])
    }

    /// `|e⟩⟨g|`.
    pub fn raising() -> DMatrix<C64> {
        m([[O, O], [I1, O]])
    }

    /// `|g⟩⟨e|`.
    pub fn lowering() -> DMatrix<C64> {
        m([[O, I1], [O, O]])
    }

    pub fn proj_g() -> DMatrix<C64> {
        m([[I1, O], [O, O]])
    }

    pub fn proj_e() -> DMatrix<C64> {
        m([[O, O], [O, I1]])
    }

    /// `X_π = exp(−i π/2 σx) = −iσx`.
    pub fn x_pi() -> DMatrix<C64> {
        m([[O, -IM], [-IM, O]])
    }
}
