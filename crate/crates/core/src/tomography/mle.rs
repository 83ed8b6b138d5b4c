//! Maximum-likelihood density-matrix reconstruction.
//!
//! ρ(t) = T†T / tr(T†T) with T lower triangular (4 real diagonal entries and
//! 6 complex sub-diagonal entries: 16 real parameters), so every parameter
//! vector maps to a physical state. Counts are modelled as Poisson with mean
//! μ_k = I·d_k·tr(P_k ρ), where d_k is the setting's exposure and the
//! intensity I is eliminated at its closed-form optimum I = N/Σ d_k p_k.

use nalgebra::{Cholesky, DMatrix, DVector, SMatrix, SVector, Vector4};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::counts::{hermitian_coords, TomographyCounts};
use super::states::{bell_phi_plus, fidelity, projector, DensityMatrix4, Matrix4c};
use super::TomographyError;
use crate::parallel;

const NPARAM: usize = 16;
type Params = SVector<f64, NPARAM>;
type InvHessian = SMatrix<f64, NPARAM, NPARAM>;

/// Sub-diagonal positions of T, in parameter order.
const LOWER: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlOptions {
    /// Number of local optimizations; the first starts from linear
    /// inversion, the rest from random T.
    pub restarts: usize,
    pub seed: u64,
    /// Restarts within this many log-likelihood units of the best form the
    /// pool whose minimum fidelity is reported as the lower bound.
    pub pool_tolerance: f64,
    /// Convergence threshold on |∇f|·|t| for the per-count objective f.
    pub gradient_tol: f64,
    pub max_iterations: usize,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            pool_tolerance: 0.5,
            gradient_tol: 1e-7,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub log_likelihood: f64,
    pub fidelity: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub rho: DensityMatrix4,
    pub fidelity_phi_plus: f64,
    pub fidelity_lower_bound: f64,
    pub purity: f64,
    pub log_likelihood: f64,
    pub restarts: usize,
    pub outcomes: Vec<RestartOutcome>,
}

impl TomographyResult {
    pub fn converged(&self) -> usize {
        self.outcomes.iter().filter(|o| o.converged).count()
    }

    pub fn pool_size(&self, tolerance: f64) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.converged && o.log_likelihood >= self.log_likelihood - tolerance)
            .count()
    }
}

/// Negative profile log-likelihood per count, with analytic gradient.
struct Objective {
    kets: Vec<Vector4<C64>>,
    counts: Vec<f64>,
    exposures: Vec<f64>,
    total: f64,
}

impl Objective {
    fn new(data: &TomographyCounts) -> Self {
        Self {
            kets: data.records.iter().map(|r| r.setting.ket()).collect(),
            counts: data.records.iter().map(|r| r.count as f64).collect(),
            exposures: data.exposures(),
            total: data.total() as f64,
        }
    }

    /// ⟨k|T†T|k⟩/tr(T†T) for every setting, plus the Tk vectors.
    fn probabilities(&self, t: &Matrix4c) -> (Vec<f64>, Vec<Vector4<C64>>, f64) {
        let norm = t.norm_squared();
        let tk: Vec<Vector4<C64>> = self.kets.iter().map(|k| t * k).collect();
        let p = tk.iter().map(|v| v.norm_squared() / norm).collect();
        (p, tk, norm)
    }

    fn value(&self, x: &Params) -> f64 {
        let (p, _, _) = self.probabilities(&to_t(x));
        self.value_from(&p)
    }

    fn value_from(&self, p: &[f64]) -> f64 {
        let denom: f64 = p.iter().zip(&self.exposures).map(|(p, d)| p * d).sum();
        let mut f = self.total * denom.max(f64::MIN_POSITIVE).ln();
        for (n, p) in self.counts.iter().zip(p) {
            if *n > 0.0 {
                f -= n * p.max(f64::MIN_POSITIVE).ln();
            }
        }
        f / self.total
    }

    fn value_and_gradient(&self, x: &Params) -> (f64, Params) {
        let t = to_t(x);
        let (p, tk, norm) = self.probabilities(&t);
        let f = self.value_from(&p);
        let denom: f64 = p.iter().zip(&self.exposures).map(|(p, d)| p * d).sum();
        // ∂F/∂ρ = Σ c_k P_k and tr(ρ ∂F/∂ρ) = 0, so dF = (2/tr T†T)·Re tr(B dT)
        // with B = Σ c_k |k⟩⟨Tk|.
        let mut b = Matrix4c::zeros();
        for k in 0..p.len() {
            let mut c = -self.total * self.exposures[k] / denom.max(f64::MIN_POSITIVE);
            if self.counts[k] > 0.0 {
                c += self.counts[k] / p[k].max(f64::MIN_POSITIVE);
            }
            b += self.kets[k] * tk[k].adjoint() * C64::new(c, 0.0);
        }
        let scale = -2.0 / (norm * self.total);
        let mut g = Params::zeros();
        for i in 0..4 {
            g[i] = scale * b[(i, i)].re;
        }
        for (n, &(i, j)) in LOWER.iter().enumerate() {
            g[4 + 2 * n] = scale * b[(j, i)].re;
            g[5 + 2 * n] = -scale * b[(j, i)].im;
        }
        (f, g)
    }

    /// Absolute Poisson log-likelihood Σ N ln μ − μ (without ln N!).
    fn log_likelihood(&self, rho: &DensityMatrix4) -> f64 {
        let p: Vec<f64> = self
            .kets
            .iter()
            .map(|k| (k.adjoint() * rho.matrix() * k)[(0, 0)].re.max(0.0))
            .collect();
        let denom: f64 = p.iter().zip(&self.exposures).map(|(p, d)| p * d).sum();
        let intensity = self.total / denom;
        p.iter()
            .zip(&self.exposures)
            .zip(&self.counts)
            .map(|((&p, &d), &n)| {
                let mu = intensity * d * p;
                let hit = if n > 0.0 { n * mu.max(f64::MIN_POSITIVE).ln() } else { 0.0 };
                hit - mu
            })
            .sum()
    }
}

fn to_t(x: &Params) -> Matrix4c {
    let mut t = Matrix4c::zeros();
    for i in 0..4 {
        t[(i, i)] = C64::new(x[i], 0.0);
    }
    for (n, &(i, j)) in LOWER.iter().enumerate() {
        t[(i, j)] = C64::new(x[4 + 2 * n], x[5 + 2 * n]);
    }
    t
}

fn from_t(t: &Matrix4c) -> Params {
    let mut x = Params::zeros();
    for i in 0..4 {
        x[i] = t[(i, i)].re;
    }
    for (n, &(i, j)) in LOWER.iter().enumerate() {
        x[4 + 2 * n] = t[(i, j)].re;
        x[5 + 2 * n] = t[(i, j)].im;
    }
    x
}

/// Density matrix for a parameter vector.
fn to_rho(x: &Params) -> DensityMatrix4 {
    let t = to_t(x);
    DensityMatrix4::from_psd(&(t.adjoint() * t))
}

/// Lower-triangular T with T†T = ρ, for positive definite ρ.
fn t_from_rho(rho: &Matrix4c) -> Option<Matrix4c> {
    // Cholesky of the index-reversed matrix gives ρ = U·U† with U upper
    // triangular; T = U† is then lower triangular.
    let rev = Matrix4c::from_fn(|i, j| rho[(3 - i, 3 - j)]);
    let l = Cholesky::new(rev)?.unpack();
    let u = Matrix4c::from_fn(|i, j| l[(3 - i, 3 - j)]);
    Some(u.adjoint())
}

/// Unconstrained least-squares inversion of N_k/d_k ≈ tr(P_k M), projected
/// onto the physical cone by clipping negative eigenvalues.
pub fn linear_inversion(data: &TomographyCounts) -> Result<DensityMatrix4, TomographyError> {
    let exposures = data.exposures();
    let rows = data.records.len();
    let mut a = DMatrix::<f64>::zeros(rows, 16);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (k, r) in data.records.iter().enumerate() {
        let c = hermitian_coords(&projector(r.setting));
        for j in 0..16 {
            a[(k, j)] = if j < 4 { c[j] } else { 2.0 * c[j] };
        }
        rhs[k] = r.count as f64 / exposures[k];
    }
    let sol = a
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .expect("singular vectors were computed");
    let mut m = Matrix4c::zeros();
    for i in 0..4 {
        m[(i, i)] = C64::new(sol[i], 0.0);
    }
    let mut k = 4;
    for i in 0..4 {
        for j in i + 1..4 {
            m[(i, j)] = C64::new(sol[k], sol[k + 1]);
            m[(j, i)] = C64::new(sol[k], -sol[k + 1]);
            k += 2;
        }
    }
    let eig = m.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    if clipped.sum() <= 0.0 {
        return Ok(DensityMatrix4::maximally_mixed());
    }
    let v = &eig.eigenvectors;
    let d = Matrix4c::from_diagonal(&clipped.map(|l| C64::new(l, 0.0)));
    Ok(DensityMatrix4::from_psd(&(v * d * v.adjoint())))
}

struct LocalResult {
    x: Params,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
}

/// BFGS with Armijo backtracking.
fn minimize(obj: &Objective, x0: Params, opts: &MlOptions) -> LocalResult {
    let mut x = x0 / x0.norm();
    let (mut f, mut g) = obj.value_and_gradient(&x);
    let mut h = InvHessian::identity();
    let mut stalls = 0;
    let crit = |g: &Params, x: &Params| g.norm() * x.norm();
    for it in 0..opts.max_iterations {
        let gn = crit(&g, &x);
        if gn < opts.gradient_tol {
            return LocalResult {
                x,
                converged: true,
                iterations: it,
                gradient_norm: gn,
            };
        }
        let mut dir = -(h * g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            h = InvHessian::identity();
            dir = -g;
            slope = g.dot(&dir);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-20 {
            let xn = x + dir * alpha;
            let fnew = obj.value(&xn);
            if fnew.is_finite() && fnew <= f + 1e-4 * alpha * slope {
                accepted = Some((xn, fnew));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            // No descent left at machine precision.
            return LocalResult {
                x,
                converged: gn < opts.gradient_tol.sqrt(),
                iterations: it,
                gradient_norm: gn,
            };
        };
        let (_, gnew) = obj.value_and_gradient(&xn);
        let s = xn - x;
        let y = gnew - g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = h * y;
            h += (s * s.transpose()) * (rho * rho * y.dot(&hy) + rho)
                - (hy * s.transpose() + s * hy.transpose()) * rho;
        }
        stalls = if (f - fnew).abs() <= 1e-15 * f.abs().max(1.0) { stalls + 1 } else { 0 };
        x = xn;
        f = fnew;
        g = gnew;
        // Keep |t| near 1; the objective is invariant under t → c·t.
        let n = x.norm();
        if !(0.5..=2.0).contains(&n) {
            x /= n;
            g *= n;
            h = InvHessian::identity();
        }
        if stalls >= 10 {
            let gn = crit(&g, &x);
            return LocalResult {
                x,
                converged: gn < opts.gradient_tol.sqrt(),
                iterations: it + 1,
                gradient_norm: gn,
            };
        }
    }
    let gn = crit(&g, &x);
    LocalResult {
        x,
        converged: gn < opts.gradient_tol,
        iterations: opts.max_iterations,
        gradient_norm: gn,
    }
}

fn start_point(data: &TomographyCounts, index: usize, seed: u64) -> Params {
    if index == 0 {
        if let Ok(lin) = linear_inversion(data) {
            let mixed = lin.matrix() * C64::new(0.99, 0.0)
                + Matrix4c::identity() * C64::new(0.0025, 0.0);
            if let Some(t) = t_from_rho(&mixed) {
                return from_t(&t);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    Params::from_fn(|_, _| StandardNormal.sample(&mut rng))
}

/// Maximum-likelihood reconstruction with multiple starting points.
///
/// The highest-likelihood converged restart gives ρ; the lower bound is the
/// smallest Φ+ fidelity among converged restarts within
/// `opts.pool_tolerance` of the best log-likelihood. Restarts are run in
/// parallel but the selection only depends on the restart index.
pub fn ml_reconstruct(
    data: &TomographyCounts,
    opts: &MlOptions,
) -> Result<TomographyResult, TomographyError> {
    data.validate()?;
    if opts.restarts == 0 {
        return Err(TomographyError::OptimizerFailed { restarts: 0 });
    }
    let obj = Objective::new(data);
    let target = bell_phi_plus();
    let indices: Vec<usize> = (0..opts.restarts).collect();
    let runs: Vec<(RestartOutcome, DensityMatrix4)> = parallel::map(&indices, |&index| {
        let local = minimize(&obj, start_point(data, index, opts.seed), opts);
        let rho = to_rho(&local.x);
        let outcome = RestartOutcome {
            index,
            log_likelihood: obj.log_likelihood(&rho),
            fidelity: fidelity(&rho, &target).expect("Φ+ is pure"),
            converged: local.converged,
            iterations: local.iterations,
            gradient_norm: local.gradient_norm,
        };
        (outcome, rho)
    });

    let best = runs
        .iter()
        .filter(|(o, _)| o.converged)
        .max_by(|a, b| {
            a.0.log_likelihood
                .total_cmp(&b.0.log_likelihood)
                .then(b.0.index.cmp(&a.0.index))
        })
        .ok_or(TomographyError::OptimizerFailed {
            restarts: opts.restarts,
        })?;
    let (best_outcome, rho) = (best.0.clone(), best.1.clone());
    let lower = runs
        .iter()
        .filter(|(o, _)| {
            o.converged && o.log_likelihood >= best_outcome.log_likelihood - opts.pool_tolerance
        })
        .map(|(o, _)| o.fidelity)
        .fold(best_outcome.fidelity, f64::min);

    Ok(TomographyResult {
        purity: rho.purity(),
        fidelity_phi_plus: best_outcome.fidelity,
        fidelity_lower_bound: lower,
        log_likelihood: best_outcome.log_likelihood,
        restarts: opts.restarts,
        outcomes: runs.into_iter().map(|(o, _)| o).collect(),
        rho,
    })
}
