//! Monte Carlo of the c-number Langevin equations in a doubled phase space.
//!
//! The normally ordered noise has `⟨f_b f_b*⟩ = 0` while `⟨f_b f_a⟩ ≠ 0`,
//! which no pair of complex conjugate classical processes can realize. The
//! conjugate amplitudes are therefore evolved as independent variables
//! `(α, β, α⁺, β⁺)` driven by a complex square root of the diffusion
//! matrix. Single trajectories have no physical meaning; only ensemble
//! averages such as `⟨α⁺α⟩ = n_a` do.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::coeffs::{noise_diffusion, threshold_margin, DerivedCoeffs};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::{is_finite_cx, re, Cx, Real};
use num_traits::Zero;

/// Smallest accepted ensemble.
pub const MIN_TRAJECTORIES: usize = 100;
/// Number of contiguous trajectory blocks used for the jackknife.
const BLOCKS: usize = 100;

/// Symmetric diffusion matrix over `(f_a, f_b, f_a⁺, f_b⁺)` and a factor `R`
/// with `R Rᵀ = D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFactor<T> {
    pub diffusion: [[T; 4]; 4],
    pub factor: CMat<T, 4>,
}

pub fn diffusion_factor<T: Real>(c: &DerivedCoeffs<T>) -> Result<DiffusionFactor<T>> {
    if !c.averaged {
        return Err(Error::PhaseModeUnsupported("Langevin noise factorization"));
    }
    let nd = noise_diffusion(c);
    let (daa, dba) = (nd.d_aa, nd.d_ba.re);
    let mut d = [[T::zero(); 4]; 4];
    d[0][2] = daa;
    d[2][0] = daa;
    d[0][1] = dba;
    d[1][0] = dba;
    d[2][3] = dba;
    d[3][2] = dba;
    let (vals, vecs) = linalg::jacobi_symmetric(&d);
    let mut factor = [[Cx::zero(); 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            factor[i][k] = re(vals[k]).sqrt() * vecs[i][k];
        }
    }
    let scale = d.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()));
    let tol = T::lit(1e-10) * scale.max(T::min_positive_value());
    for i in 0..4 {
        for j in 0..4 {
            let rec: Cx<T> = (0..4).map(|k| factor[i][k] * factor[j][k]).fold(Cx::zero(), |a, b| a + b);
            if !((rec - re(d[i][j])).norm() <= tol) {
                return Err(Error::FactorizationFailure(format!("diffusion matrix {d:?}")));
            }
        }
    }
    Ok(DiffusionFactor { diffusion: d, factor })
}

/// Drift of `(α, β, α⁺, β⁺)`.
pub fn doubled_drift<T: Real>(c: &DerivedCoeffs<T>) -> CMat<T, 4> {
    let z = Cx::zero();
    [
        [-c.a_plus, z, z, -c.b_plus],
        [z, -c.a_minus, -c.b_minus, z],
        [z, -c.b_plus.conj(), -c.a_plus.conj(), z],
        [-c.b_minus.conj(), z, z, -c.a_minus.conj()],
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig<T> {
    pub n_traj: usize,
    pub dt: T,
    pub seed: u64,
    /// Output times; each is rounded to the nearest multiple of `dt`.
    pub sample_times: Vec<T>,
}

/// Ensemble estimates with block-jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub t: T,
    pub n_a: T,
    pub n_b: T,
    pub m: Cx<T>,
    pub se_n_a: T,
    pub se_n_b: T,
    pub se_m_re: T,
    pub se_m_im: T,
}

/// Per-sample sums of `(α⁺α, β⁺β, αβ)` over one block of trajectories.
type BlockSums<T> = Vec<[Cx<T>; 3]>;

fn run_block<T: Real>(
    drift: &CMat<T, 4>,
    factor: &CMat<T, 4>,
    cfg: &McConfig<T>,
    sample_steps: &[usize],
    range: std::ops::Range<usize>,
) -> Result<BlockSums<T>> {
    let mut sums = vec![[Cx::zero(); 3]; sample_steps.len()];
    let sqrt_dt = cfg.dt.sqrt();
    let last = sample_steps.iter().copied().max().unwrap_or(0);
    // I + M dt, applied once per step.
    let mut step_mat = linalg::scale(drift, re(cfg.dt));
    for (i, row) in step_mat.iter_mut().enumerate() {
        row[i] += T::one();
    }
    let noise = linalg::scale(factor, re(sqrt_dt));
    for traj in range {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(traj as u64);
        let mut x = [Cx::zero(); 4];
        let mut next_sample = 0;
        for step in 0..=last {
            while next_sample < sample_steps.len() && sample_steps[next_sample] == step {
                let s = &mut sums[next_sample];
                s[0] += x[2] * x[0];
                s[1] += x[3] * x[1];
                s[2] += x[0] * x[1];
                next_sample += 1;
            }
            if step == last {
                break;
            }
            let xi: [T; 4] = std::array::from_fn(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                T::lit(v)
            });
            let mut nx = linalg::matvec(&step_mat, &x);
            for (i, v) in nx.iter_mut().enumerate() {
                for (k, xk) in xi.iter().enumerate() {
                    *v += noise[i][k] * *xk;
                }
            }
            x = nx;
        }
        if !x.iter().all(|z| is_finite_cx(*z)) {
            return Err(Error::NonFinite { t: (cfg.dt * T::from_usize(last).unwrap()).as_f64() });
        }
    }
    Ok(sums)
}

fn jackknife<T: Real>(block_sums: &[T], block_sizes: &[usize]) -> (T, T) {
    let total: T = block_sums.iter().copied().sum();
    let n_total = block_sizes.iter().sum::<usize>();
    let mean = total / T::from_usize(n_total).unwrap();
    let nb = T::from_usize(block_sums.len()).unwrap();
    let loo: Vec<T> =
        block_sums.iter().zip(block_sizes).map(|(s, n)| (total - *s) / T::from_usize(n_total - n).unwrap()).collect();
    let loo_mean = loo.iter().copied().sum::<T>() / nb;
    let var = loo.iter().map(|x| (*x - loo_mean) * (*x - loo_mean)).sum::<T>() * (nb - T::one()) / nb;
    (mean, var.sqrt())
}

/// Runs the ensemble from the two-mode vacuum and returns one estimate per
/// sample time. Results depend only on `(seed, n_traj, dt, sample_times)`.
pub fn simulate<T: Real>(c: &DerivedCoeffs<T>, cfg: &McConfig<T>) -> Result<Vec<McEstimate<T>>> {
    if cfg.n_traj < MIN_TRAJECTORIES {
        return Err(Error::InvalidArgument(format!("n_traj must be at least {MIN_TRAJECTORIES}, got {}", cfg.n_traj)));
    }
    if !(cfg.dt > T::zero() && cfg.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be finite and > 0, got {}", cfg.dt)));
    }
    if cfg.sample_times.iter().any(|t| !(*t >= T::zero() && t.is_finite())) {
        return Err(Error::InvalidArgument("sample times must be finite and >= 0".into()));
    }
    let margin = threshold_margin(c);
    if !(margin > T::zero()) {
        return Err(Error::Unstable(format!("threshold margin {margin} is not positive")));
    }
    let df = diffusion_factor(c)?;
    let drift = doubled_drift(c);
    let sample_steps: Vec<usize> =
        cfg.sample_times.iter().map(|t| (*t / cfg.dt).round().to_usize().unwrap_or(usize::MAX)).collect();
    let mut order: Vec<usize> = (0..sample_steps.len()).collect();
    order.sort_by_key(|&i| sample_steps[i]);
    let sorted_steps: Vec<usize> = order.iter().map(|&i| sample_steps[i]).collect();

    let blocks = BLOCKS.min(cfg.n_traj);
    let ranges: Vec<std::ops::Range<usize>> =
        (0..blocks).map(|b| (b * cfg.n_traj / blocks)..((b + 1) * cfg.n_traj / blocks)).collect();
    let block_sums: Vec<BlockSums<T>> = ranges
        .par_iter()
        .map(|r| run_block(&drift, &df.factor, cfg, &sorted_steps, r.clone()))
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = ranges.iter().map(|r| r.len()).collect();

    let mut out = vec![None; sample_steps.len()];
    for (slot, &orig) in order.iter().enumerate() {
        let column = |k: usize, f: fn(Cx<T>) -> T| -> (T, T) {
            let sums: Vec<T> = block_sums.iter().map(|b| f(b[slot][k])).collect();
            jackknife(&sums, &sizes)
        };
        let (n_a, se_n_a) = column(0, |z| z.re);
        let (n_b, se_n_b) = column(1, |z| z.re);
        let (m_re, se_m_re) = column(2, |z| z.re);
        let (m_im, se_m_im) = column(2, |z| z.im);
        out[orig] = Some(McEstimate {
            t: cfg.dt * T::from_usize(sorted_steps[slot]).unwrap(),
            n_a,
            n_b,
            m: Cx::new(m_re, m_im),
            se_n_a,
            se_n_b,
            se_m_re,
            se_m_im,
        });
    }
    Ok(out.into_iter().map(|e| e.expect("every sample filled")).collect())
}

/// Single-time convenience wrapper around [`simulate`].
pub fn simulate_ensemble<T: Real>(
    c: &DerivedCoeffs<T>,
    n_traj: usize,
    t_final: T,
    dt: T,
    seed: u64,
) -> Result<McEstimate<T>> {
    let cfg = McConfig { n_traj, dt, seed, sample_times: vec![t_final] };
    Ok(simulate(c, &cfg)?[0])
}
