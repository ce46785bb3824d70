//! Photon-number readout through a resonant ancilla and displaced-parity
//! Wigner functions.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};

use crate::hilbert::{annihilation, DensityMatrix, HermitianEigen, SpaceLayout};
use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Largest photon number accepted by [`fit_photon_numbers`].
pub const MAX_FIT_PHOTONS: usize = 20;

/// Design condition number above which a fit reports a warning.
pub const ILL_CONDITIONED: f64 = 1e6;

/// Required KKT residual of the fit.
pub const KKT_TOL: f64 = 1e-8;

/// Weight tolerated in the top levels of the working Wigner space.
pub const WIGNER_TAIL_TOL: f64 = 1e-6;

fn single_mode_cutoff(rho: &DensityMatrix) -> Result<usize> {
    match rho.layout().factors() {
        [crate::hilbert::Factor::Boson(d)] => Ok(*d),
        _ => Err(Error::LayoutMismatch("expected a single bosonic mode".into())),
    }
}

/// `P_n = ⟨n|ρ|n⟩`.
pub fn photon_distribution(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let d = single_mode_cutoff(rho)?;
    let p: Vec<f64> = (0..d).map(|n| rho.matrix()[(n, n)].re).collect();
    if let Some(x) = p.iter().find(|&&x| x < -1e-10) {
        return Err(Error::InvalidArgument(format!("negative population {x:.3e}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("populations sum to {total}")));
    }
    Ok(p.into_iter().map(|x| x.max(0.0)).collect())
}

fn check_distribution(pn: &[f64]) -> Result<()> {
    if pn.is_empty() || pn.iter().any(|p| !(p.is_finite() && *p >= -1e-12)) {
        return Err(Error::InvalidArgument("photon distribution must be nonnegative".into()));
    }
    let s: f64 = pn.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("photon distribution sums to {s}")));
    }
    Ok(())
}

/// Ancilla excited-state probability versus interaction time.
#[derive(Clone, Debug, PartialEq)]
pub struct RabiTrace {
    /// Seconds.
    pub taus: Vec<f64>,
    pub pe: Vec<f64>,
    /// Ancilla–mode coupling, rad/s.
    pub xi: f64,
    pub pg0: f64,
    pub pe0: f64,
}

impl RabiTrace {
    pub fn new(taus: Vec<f64>, pe: Vec<f64>, xi: f64, pg0: f64, pe0: f64) -> Result<Self> {
        let t = Self { taus, pe, xi, pg0, pe0 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.len() != self.pe.len() {
            return Err(Error::InvalidArgument(format!("{} taus but {} samples", self.taus.len(), self.pe.len())));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(Error::InvalidArgument(format!("coupling must be positive, got {}", self.xi)));
        }
        if self.pg0 < 0.0 || self.pe0 < 0.0 || self.pg0 + self.pe0 > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument("initial ancilla populations must be a sub-distribution".into()));
        }
        if self.taus.iter().chain(&self.pe).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("trace contains non-finite values".into()));
        }
        Ok(())
    }
}

/// `P_e(τ) = ½{1 − [P_g(0) − P_e(0)] Σ_n P_n cos(2ξ√n τ)}`.
pub fn synthesize_rabi(pn: &[f64], xi: f64, taus: &[f64], pg0: f64, pe0: f64) -> Result<RabiTrace> {
    check_distribution(pn)?;
    let c = pg0 - pe0;
    let pe = taus
        .iter()
        .map(|&tau| {
            let s: f64 = pn.iter().enumerate().map(|(n, p)| p * (2.0 * xi * (n as f64).sqrt() * tau).cos()).sum();
            0.5 * (1.0 - c * s)
        })
        .collect();
    RabiTrace::new(taus.to_vec(), pe, xi, pg0, pe0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FitOptions {
    /// Fit a free additive offset on `P_e` (residual ancilla excitation).
    pub free_offset: bool,
}

#[derive(Clone, Debug)]
pub struct PhotonFit {
    pub pn: Vec<f64>,
    pub offset: f64,
    pub kkt_residual: f64,
    /// `σ_max / σ_min` of the design matrix.
    pub condition: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Least-squares `P_n` on `n ≤ n_max` with `P_n ≥ 0`, `Σ P_n = 1`.
///
/// Primal active-set method on the normal equations; the working set holds
/// the populations pinned at zero.
pub fn fit_photon_numbers(trace: &RabiTrace, n_max: usize, opts: FitOptions) -> Result<PhotonFit> {
    trace.validate()?;
    if n_max > MAX_FIT_PHOTONS {
        return Err(Error::InvalidArgument(format!("n_max {n_max} exceeds {MAX_FIT_PHOTONS}")));
    }
    let c = trace.pg0 - trace.pe0;
    if c.abs() < 1e-12 {
        return Err(Error::Degenerate("equal initial ancilla populations carry no photon information".into()));
    }
    let np = n_max + 1;
    let nv = np + usize::from(opts.free_offset);
    let m = trace.taus.len();
    if m < nv {
        return Err(Error::InvalidArgument(format!("{m} samples cannot determine {nv} parameters")));
    }
    let mut warnings = Vec::new();
    let scale = 1.0 / (m as f64).sqrt();
    let a = DMatrix::from_fn(m, nv, |i, j| {
        if j < np {
            -0.5 * c * (2.0 * trace.xi * (j as f64).sqrt() * trace.taus[i]).cos() * scale
        } else {
            scale
        }
    });
    let y = DVector::from_fn(m, |i, _| (trace.pe[i] - 0.5) * scale);

    let sv = a.columns(0, np).into_owned().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > ILL_CONDITIONED {
        warnings.push(format!("design matrix is ill-conditioned (condition estimate {condition:.3e})"));
    }
    let span = trace.taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - trace.taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let slowest = 2.0 * PI / (2.0 * trace.xi);
    if n_max >= 1 && span < 2.0 * slowest {
        warnings.push(format!(
            "tau span {:.3} ns is shorter than two periods of the one-photon tone ({:.3} ns)",
            span * 1e9,
            2e9 * slowest
        ));
    }

    let q = a.transpose() * &a;
    let g = a.transpose() * &y;
    let (x, nu, iterations) = active_set_simplex_qp(&q, &g, np)?;
    let kkt_residual = kkt(&q, &g, &x, nu, np);
    if kkt_residual >= KKT_TOL {
        return Err(Error::Truncation {
            error: kkt_residual,
            tol: KKT_TOL,
            context: "photon-number fit did not reach the KKT tolerance".into(),
        });
    }
    let pn: Vec<f64> = x.iter().take(np).map(|v| v.max(0.0)).collect();
    let offset = if opts.free_offset { x[np] } else { 0.0 };
    Ok(PhotonFit { pn, offset, kkt_residual, condition, iterations, warnings })
}

/// Stationarity, primal and dual feasibility violations of
/// `min ½xᵀQx − gᵀx` s.t. `x_{0..np} ≥ 0`, `Σ x_{0..np} = 1`.
fn kkt(q: &DMatrix<f64>, g: &DVector<f64>, x: &DVector<f64>, nu: f64, np: usize) -> f64 {
    let grad = q * x - g;
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        if i < np {
            let mu = grad[i] - nu;
            worst = worst.max((-x[i]).max(0.0));
            if x[i] > 0.0 {
                // complementary slackness, scaled by the variable
                worst = worst.max((mu * x[i]).abs()).max((-mu).max(0.0));
            } else {
                worst = worst.max((-mu).max(0.0));
            }
        } else {
            worst = worst.max(grad[i].abs());
        }
    }
    let sum: f64 = x.iter().take(np).sum();
    worst.max((sum - 1.0).abs())
}

/// Solves the equality-constrained subproblem on the free set.
fn solve_free(q: &DMatrix<f64>, g: &DVector<f64>, free: &[usize], np: usize) -> Result<(DVector<f64>, f64)> {
    let k = free.len();
    let mut kk = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kk[(a, b)] = q[(i, j)];
        }
        if i < np {
            kk[(a, k)] = -1.0;
            kk[(k, a)] = 1.0;
        }
        rhs[a] = g[i];
    }
    rhs[k] = 1.0;
    let svd = kk.svd(true, true);
    let tol = 1e-13 * svd.singular_values.max();
    let sol = svd.solve(&rhs, tol).map_err(|e| Error::Degenerate(format!("KKT solve failed: {e}")))?;
    let mut x = DVector::zeros(q.nrows());
    for (a, &i) in free.iter().enumerate() {
        x[i] = sol[a];
    }
    Ok((x, sol[k]))
}

fn active_set_simplex_qp(q: &DMatrix<f64>, g: &DVector<f64>, np: usize) -> Result<(DVector<f64>, f64, usize)> {
    let nv = q.nrows();
    let mut x = DVector::from_fn(nv, |i, _| if i < np { 1.0 / np as f64 } else { 0.0 });
    let mut pinned = vec![false; nv];
    let max_iter = 50 * nv + 100;
    let mut warm = solve_free(q, g, &(0..nv).collect::<Vec<_>>(), np)?;
    for iter in 0..max_iter {
        let free: Vec<usize> = (0..nv).filter(|&i| !pinned[i]).collect();
        let (target, nu) = if iter == 0 { warm.clone() } else { solve_free(q, g, &free, np)? };
        warm = (target.clone(), nu);
        let blocking = free
            .iter()
            .filter(|&&i| i < np && target[i] < 0.0)
            .map(|&i| (i, x[i] / (x[i] - target[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match blocking {
            None => {
                x = target;
                let grad = q * &x - g;
                let worst = (0..np)
                    .filter(|&i| pinned[i])
                    .map(|i| (i, grad[i] - nu))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    Some((i, mu)) if mu < -1e-14 => pinned[i] = false,
                    _ => {
                        for i in 0..np {
                            if pinned[i] {
                                x[i] = 0.0;
                            }
                        }
                        return Ok((x, nu, iter + 1));
                    }
                }
            }
            Some((i, step)) => {
                x = &x + (&target - &x) * step;
                x[i] = 0.0;
                pinned[i] = true;
            }
        }
    }
    Err(Error::Degenerate("active-set iteration limit reached".into()))
}

/// Configuration of the displaced-parity evaluation.
#[derive(Clone, Debug)]
struct ParityKernel {
    work: usize,
    /// Eigenpairs of `i(a† − a)`; `D(r) = V e^{−irΛ} V†` for real `r`.
    gen: HermitianEigen,
    /// Nonzero eigenpairs of ρ, padded to `work`.
    weights: Vec<f64>,
    vectors: Vec<DVector<C64>>,
}

impl ParityKernel {
    fn new(rho: &DensityMatrix, extra: usize) -> Result<Self> {
        let d = single_mode_cutoff(rho)?;
        let work = d + extra;
        let a = annihilation(work)?;
        let k = (a.adjoint().matrix() - a.matrix()) * C64::new(0.0, 1.0);
        let gen = HermitianEigen::new(&k)?;
        let m = rho.matrix();
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let eig = HermitianEigen::new(m)?;
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (j, &w) in eig.values.iter().enumerate() {
            if w.abs() <= 1e-15 * scale.max(1e-300) {
                continue;
            }
            let mut v = DVector::zeros(work);
            v.rows_mut(0, d).copy_from(&eig.vectors.column(j));
            weights.push(w);
            vectors.push(v);
        }
        Ok(Self { work, gen, weights, vectors })
    }

    /// `D(−α)|v⟩` as `R(−φ) D(−r) R(φ)|v⟩` with `α = r e^{iφ}`.
    fn displace_back(&self, v: &DVector<C64>, alpha: C64) -> DVector<C64> {
        let (r, phi) = (alpha.norm(), alpha.arg());
        let rot = |v: &DVector<C64>, theta: f64| {
            DVector::from_iterator(v.len(), v.iter().enumerate().map(|(n, z)| z * C64::from_polar(1.0, -theta * n as f64)))
        };
        // R(φ) = e^{−iφ a†a}
        let w = rot(v, phi);
        let vh = self.gen.vectors.adjoint() * w;
        let phased = DVector::from_iterator(
            vh.len(),
            vh.iter().zip(self.gen.values.iter()).map(|(z, l)| z * C64::from_polar(1.0, r * l)),
        );
        rot(&(&self.gen.vectors * phased), -phi)
    }

    fn eval(&self, alpha: C64) -> Result<f64> {
        let edge = 5.min(self.work);
        let mut w = 0.0;
        let mut tail = 0.0;
        for (p, v) in self.weights.iter().zip(&self.vectors) {
            let u = self.displace_back(v, alpha);
            let parity: f64 =
                u.iter().enumerate().map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() }).sum();
            w += p * parity;
            tail += p.abs() * u.rows(self.work - edge, edge).norm_squared();
        }
        if tail > WIGNER_TAIL_TOL {
            return Err(Error::Truncation {
                error: tail,
                tol: WIGNER_TAIL_TOL,
                context: format!("displaced state at alpha = {alpha} reaches the working cutoff {}", self.work),
            });
        }
        Ok(FRAC_2_PI * w)
    }
}

/// Margin enlargements tried before giving up, as multiples of
/// `⌈|α|²⌉ + 10`.
const MARGIN_STEPS: [usize; 4] = [1, 2, 4, 8];

/// Runs `f` with kernels of growing margin until no truncation error occurs.
fn with_margin<T>(rho: &DensityMatrix, reach: f64, f: impl Fn(&ParityKernel) -> Result<T>) -> Result<T> {
    let base = (reach * reach).ceil() as usize + 10;
    let mut last = None;
    for m in MARGIN_STEPS {
        match f(&ParityKernel::new(rho, base * m)?) {
            Err(e @ Error::Truncation { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one margin is tried"))
}

/// `W(α) = (2/π) Σ_n (−1)ⁿ ⟨n|D†(α)ρD(α)|n⟩`.
///
/// The working cutoff starts at `D + ⌈|α|²⌉ + 10` and is enlarged while the
/// displaced state still has weight at its edge.
pub fn wigner_point(rho: &DensityMatrix, alpha: C64) -> Result<f64> {
    with_margin(rho, alpha.norm(), |k| k.eval(alpha))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerMap {
    pub re_grid: Vec<f64>,
    pub im_grid: Vec<f64>,
    /// `values[(i, j)] = W(re_grid[i] + i·im_grid[j])`.
    pub values: DMatrix<f64>,
}

impl WignerMap {
    /// Riemann sum of `W` over the grid.
    pub fn integral(&self) -> f64 {
        let step = |g: &[f64]| if g.len() > 1 { (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64 } else { 0.0 };
        self.values.sum() * step(&self.re_grid) * step(&self.im_grid)
    }
}

fn check_grid(g: &[f64], name: &str) -> Result<()> {
    if g.is_empty() || g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `Re α ∈ [−1.5, 4.5]` × `Im α ∈ [−2.5, 2.5]`, 121 × 101 points.
pub fn default_grid() -> (Vec<f64>, Vec<f64>) {
    (linspace(-1.5, 4.5, 121), linspace(-2.5, 2.5, 101))
}

/// [`wigner_point`] over a rectangular grid.
pub fn wigner_map(rho: &DensityMatrix, re_grid: &[f64], im_grid: &[f64], exec: Exec) -> Result<WignerMap> {
    check_grid(re_grid, "real")?;
    check_grid(im_grid, "imaginary")?;
    let corner = |x: &[f64]| x[0].abs().max(x[x.len() - 1].abs());
    let reach = corner(re_grid).hypot(corner(im_grid));
    let (nr, ni) = (re_grid.len(), im_grid.len());
    let values = with_margin(rho, reach, |kernel| {
        let flat = par::map_range(exec, nr * ni, |k| kernel.eval(C64::new(re_grid[k / ni], im_grid[k % ni])));
        let mut values = DMatrix::zeros(nr, ni);
        for (k, v) in flat.into_iter().enumerate() {
            values[(k / ni, k % ni)] = v?;
        }
        Ok(values)
    })?;
    Ok(WignerMap { re_grid: re_grid.to_vec(), im_grid: im_grid.to_vec(), values })
}

/// `R(ϑ)ρR†(ϑ)` with `R = e^{−iϑ a†a}`.
pub fn derotate(rho: &DensityMatrix, theta: f64) -> Result<DensityMatrix> {
    let d = single_mode_cutoff(rho)?;
    let m = DMatrix::from_fn(d, d, |r, c| rho.matrix()[(r, c)] * C64::from_polar(1.0, -theta * (r as f64 - c as f64)));
    DensityMatrix::new(SpaceLayout::mode(d)?, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catprep::ideal_amplitude_cat;
    use crate::hilbert::{coherent_state, StateVector};
    use crate::units::mhz_to_rad;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn vacuum(d: usize) -> DensityMatrix {
        StateVector::basis(SpaceLayout::mode(d).unwrap(), &[0]).unwrap().density()
    }

    fn coherent(beta: C64, d: usize) -> DensityMatrix {
        coherent_state(beta, d, 1e-8).unwrap().value.density()
    }

    /// Closed form for `𝒩(|0⟩ + |β⟩)` from the cross Wigner functions
    /// `W_{|a⟩⟨b|}(α) = (2/π)⟨b|a⟩ e^{−2(α−a)(α*−b*)}`.
    fn cat_wigner(beta: C64, alpha: C64) -> f64 {
        let norm = 1.0 / (2.0 + 2.0 * (-beta.norm_sqr() / 2.0).exp());
        let pts = [C64::new(0.0, 0.0), beta];
        let mut total = C64::new(0.0, 0.0);
        for &x in &pts {
            for &y in &pts {
                let overlap = (-x.norm_sqr() / 2.0 - y.norm_sqr() / 2.0 + y.conj() * x).exp();
                total += overlap * (-2.0 * (alpha - x) * (alpha.conj() - y.conj())).exp();
            }
        }
        FRAC_2_PI * norm * total.re
    }

    fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    fn l1(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    fn taus() -> Vec<f64> {
        linspace(0.0, 500e-9, 251)
    }

    #[test]
    fn photon_distribution_examples() {
        let p = photon_distribution(&vacuum(10)).unwrap();
        assert_eq!(p[0], 1.0);
        let beta = C64::new(3.3, 0.0);
        let p = photon_distribution(&coherent(beta, 60)).unwrap();
        let mut poisson = (-10.89f64).exp();
        for (n, x) in p.iter().enumerate().take(40) {
            if n > 0 {
                poisson *= 10.89 / n as f64;
            }
            assert!((x - poisson).abs() < 1e-12);
        }
        let cat = ideal_amplitude_cat(beta, 60).unwrap();
        let p = photon_distribution(&cat.density()).unwrap();
        for (n, x) in p.iter().enumerate() {
            assert!((x - cat.amps()[n].norm_sqr()).abs() < 1e-15);
        }
        assert!(p[0] > 0.5);
    }

    #[test]
    fn synthesized_traces() {
        let xi = mhz_to_rad(19.8);
        let t = synthesize_rabi(&[1.0], xi, &taus(), 1.0, 0.0).unwrap();
        assert!(t.pe.iter().all(|x| x.abs() < 1e-15));
        let t = synthesize_rabi(&[0.0, 1.0], xi, &taus(), 1.0, 0.0).unwrap();
        for (tau, pe) in t.taus.iter().zip(&t.pe) {
            assert!((pe - (xi * tau).sin().powi(2)).abs() < 1e-12);
        }
        assert!(synthesize_rabi(&[0.5, 0.4], xi, &taus(), 1.0, 0.0).is_err());
        assert!(RabiTrace::new(vec![0.0], vec![0.0], xi, 0.7, 0.5).is_err());
    }

    #[test]
    fn fit_recovers_vacuum() {
        let xi = mhz_to_rad(19.8);
        let mut pn = vec![0.0; 9];
        pn[0] = 1.0;
        let t = synthesize_rabi(&pn, xi, &taus(), 1.0, 0.0).unwrap();
        let f = fit_photon_numbers(&t, 8, FitOptions::default()).unwrap();
        assert!(l1(&f.pn, &pn) < 1e-6, "{:?}", f.pn);
        assert!(f.kkt_residual < KKT_TOL);
    }

    #[test]
    fn noiseless_round_trip() {
        let xi = mhz_to_rad(19.8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let pn = random_distribution(&mut rng, 9);
            let t = synthesize_rabi(&pn, xi, &taus(), 0.98, 0.02).unwrap();
            let f = fit_photon_numbers(&t, 8, FitOptions::default()).unwrap();
            assert!(l1(&f.pn, &pn) < 1e-3, "{}", l1(&f.pn, &pn));
            assert!(f.warnings.is_empty(), "{:?}", f.warnings);
        }
    }

    #[test]
    fn sparse_distribution_round_trip() {
        let xi = mhz_to_rad(19.8);
        let pn = vec![0.0, 0.3, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 0.0];
        let t = synthesize_rabi(&pn, xi, &taus(), 1.0, 0.0).unwrap();
        let f = fit_photon_numbers(&t, 8, FitOptions::default()).unwrap();
        assert!(l1(&f.pn, &pn) < 1e-6);
    }

    #[test]
    fn noisy_round_trip() {
        let xi = mhz_to_rad(19.8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for _ in 0..5 {
            let pn = random_distribution(&mut rng, 9);
            let mut t = synthesize_rabi(&pn, xi, &taus(), 1.0, 0.0).unwrap();
            for x in t.pe.iter_mut() {
                *x += noise.sample(&mut rng);
            }
            let f = fit_photon_numbers(&t, 8, FitOptions::default()).unwrap();
            assert!(l1(&f.pn, &pn) < 0.05, "{}", l1(&f.pn, &pn));
        }
    }

    #[test]
    fn free_offset_absorbs_residual_excitation() {
        let xi = mhz_to_rad(19.8);
        let pn = vec![0.2, 0.5, 0.3];
        let mut t = synthesize_rabi(&pn, xi, &taus(), 1.0, 0.0).unwrap();
        for x in t.pe.iter_mut() {
            *x += 0.03;
        }
        let f = fit_photon_numbers(&t, 2, FitOptions { free_offset: true }).unwrap();
        assert!((f.offset - 0.03).abs() < 1e-9);
        assert!(l1(&f.pn, &pn) < 1e-8);
    }

    #[test]
    fn short_span_warns() {
        let xi = mhz_to_rad(19.8);
        let short = linspace(0.0, 20e-9, 40);
        let t = synthesize_rabi(&[0.5, 0.5], xi, &short, 1.0, 0.0).unwrap();
        let f = fit_photon_numbers(&t, 8, FitOptions::default()).unwrap();
        assert!(f.warnings.iter().any(|w| w.contains("tau span")));
        let tiny = synthesize_rabi(&[0.5, 0.5], xi, &linspace(0.0, 1e-9, 40), 1.0, 0.0).unwrap();
        let f = fit_photon_numbers(&tiny, 8, FitOptions::default()).unwrap();
        assert!(f.warnings.iter().any(|w| w.contains("ill-conditioned")), "{}", f.condition);
        assert!(fit_photon_numbers(&t, 21, FitOptions::default()).is_err());
        let flat = RabiTrace::new(short.clone(), vec![0.5; 40], xi, 0.5, 0.5).unwrap();
        assert!(fit_photon_numbers(&flat, 3, FitOptions::default()).is_err());
    }

    #[test]
    fn wigner_of_vacuum_and_coherent() {
        assert!((wigner_point(&vacuum(10), C64::new(0.0, 0.0)).unwrap() - FRAC_2_PI).abs() < 1e-12);
        let beta = C64::new(1.2, -0.7);
        let rho = coherent(beta, 40);
        assert!((wigner_point(&rho, beta).unwrap() - FRAC_2_PI).abs() < 1e-7);
        let off = C64::new(0.3, 0.4);
        let want = FRAC_2_PI * (-2.0 * (off - beta).norm_sqr()).exp();
        assert!((wigner_point(&rho, off).unwrap() - want).abs() < 1e-7);
    }

    #[test]
    fn cat_wigner_matches_closed_form() {
        let beta = C64::new(3.3, 0.0);
        let rho = ideal_amplitude_cat(beta, 40).unwrap().density();
        for &alpha in &[
            C64::new(0.0, 0.0),
            C64::new(1.65, 0.0),
            C64::new(1.65, 0.3),
            C64::new(3.3, 0.0),
            C64::new(0.7, -0.4),
            C64::new(4.4, 2.1),
        ] {
            let got = wigner_point(&rho, alpha).unwrap();
            assert!((got - cat_wigner(beta, alpha)).abs() < 1e-6, "{alpha}: {got}");
        }
        // parity at the origin
        let parity: f64 = photon_distribution(&rho)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -p })
            .sum();
        assert!((wigner_point(&rho, C64::new(0.0, 0.0)).unwrap() - FRAC_2_PI * parity).abs() < 1e-9);
    }

    #[test]
    fn cat_map_is_bounded_and_normalized() {
        let rho = ideal_amplitude_cat(C64::new(3.3, 0.0), 40).unwrap().density();
        let re = linspace(-3.0, 6.5, 96);
        let im = linspace(-3.5, 3.5, 71);
        let map = wigner_map(&rho, &re, &im, Exec::Parallel).unwrap();
        assert!(map.values.iter().all(|w| w.abs() <= FRAC_2_PI + 1e-6));
        assert!((map.integral() - 1.0).abs() < 0.02, "{}", map.integral());
        assert!(map.values.min() < -0.3);
        assert!(wigner_map(&rho, &[0.0, 0.0], &im, Exec::Sequential).is_err());
    }

    #[test]
    fn map_is_scheduling_independent() {
        let rho = ideal_amplitude_cat(C64::new(2.0, 0.0), 20).unwrap().density();
        let g = linspace(-1.0, 3.0, 9);
        let a = wigner_map(&rho, &g, &g, Exec::Sequential).unwrap();
        let b = wigner_map(&rho, &g, &g, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_is_reported() {
        let beta = C64::new(3.3, 0.0);
        let rho = coherent(beta, 40);
        let far = C64::new(-6.0, 0.0);
        let tight = ParityKernel::new(&rho, 46).unwrap();
        assert!(matches!(tight.eval(far), Err(Error::Truncation { .. })));
        let want = FRAC_2_PI * (-2.0 * (far - beta).norm_sqr()).exp();
        assert!((wigner_point(&rho, far).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn derotation() {
        let beta = C64::new(1.5, 0.5);
        let rho = coherent(beta, 40);
        let same = derotate(&rho, 0.0).unwrap();
        assert!((same.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
        let flipped = derotate(&rho, PI).unwrap();
        let want = coherent(-beta, 40);
        assert!((flipped.matrix() - want.matrix()).iter().all(|z| z.norm() < 1e-12));
        let cat = ideal_amplitude_cat(C64::new(3.3, 0.0), 40).unwrap().density();
        let theta = 0.37;
        let rot = derotate(&cat, theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = C64::new(rng.random_range(-1.0..4.0), rng.random_range(-2.0..2.0));
            let w_rot = wigner_point(&rot, a).unwrap();
            let w = wigner_point(&cat, a * C64::from_polar(1.0, theta)).unwrap();
            assert!((w_rot - w).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn wigner_is_linear(x in -1.0f64..1.0, y in -1.0f64..1.0, s in 0.0f64..1.0) {
            let a = coherent(C64::new(0.8, 0.1), 20);
            let b = vacuum(20);
            let mix = DensityMatrix::new(a.layout().clone(), a.matrix() * C64::new(s, 0.0) + b.matrix() * C64::new(1.0 - s, 0.0)).unwrap();
            let p = C64::new(x, y);
            let lhs = wigner_point(&mix, p).unwrap();
            let rhs = s * wigner_point(&a, p).unwrap() + (1.0 - s) * wigner_point(&b, p).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
