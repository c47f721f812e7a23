//! Truncated two-mode Fock-space integration of the full master equation.
//!
//! The basis is `|n_a, n_b⟩` with `0 ≤ n_a ≤ n_max_a`, `0 ≤ n_b ≤ n_max_b`,
//! flattened row-major (`index = n_a·(n_max_b+1) + n_b`). Ladder operators
//! are the truncated matrices, so `a a†` vanishes on the top layer and every
//! term of the Liouvillian stays exactly traceless.
//!
//! The Liouvillian is applied matrix-free. Output rows are computed in
//! parallel, each one by a fixed sequential loop, so results do not depend
//! on the thread schedule.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::coeffs::DerivedCoeffs;
use crate::error::{Error, Result};
use crate::moments::{FirstMoments, MomentState, SecondMoments};
use crate::scalar::{is_finite_cx, re, Cx, Real};
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    /// Highest photon number kept in mode a.
    pub n_max_a: usize,
    /// Highest photon number kept in mode b.
    pub n_max_b: usize,
    /// Largest population tolerated in the top Fock layer.
    pub boundary_tol: f64,
}

impl FockConfig {
    pub fn square(n_max: usize) -> Self {
        Self { n_max_a: n_max, n_max_b: n_max, boundary_tol: 1e-2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max_a < 1 || self.n_max_b < 1 {
            return Err(Error::InvalidParams("Fock truncation must be at least 1".into()));
        }
        if !(self.boundary_tol > 0.0 && self.boundary_tol.is_finite()) {
            return Err(Error::InvalidParams("boundary_tol must be finite and > 0".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_max_a + 1, self.n_max_b + 1)
    }
}

/// Density operator on the truncated basis, together with its time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    dims_a: usize,
    dims_b: usize,
    pub time: T,
    data: Vec<Cx<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn from_data(dims_a: usize, dims_b: usize, time: T, data: Vec<Cx<T>>) -> Result<Self> {
        let dim = dims_a * dims_b;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Self { dims_a, dims_b, time, data })
    }

    /// `|n_a, n_b⟩⟨n_a, n_b|` at t = 0.
    pub fn number_state(cfg: &FockConfig, n_a: usize, n_b: usize) -> Result<Self> {
        let (da, db) = cfg.dims();
        if n_a >= da || n_b >= db {
            return Err(Error::InvalidArgument(format!("|{n_a},{n_b}⟩ lies outside the truncation")));
        }
        let dim = da * db;
        let mut data = vec![Cx::zero(); dim * dim];
        let k = n_a * db + n_b;
        data[k * dim + k] = re(T::one());
        Ok(Self { dims_a: da, dims_b: db, time: T::zero(), data })
    }

    pub fn vacuum(cfg: &FockConfig) -> Self {
        Self::number_state(cfg, 0, 0).expect("vacuum lies inside any truncation")
    }

    /// `|ψ⟩⟨ψ|` for a state given by its amplitudes in the flattened basis.
    pub fn pure(dims_a: usize, dims_b: usize, psi: &[Cx<T>]) -> Result<Self> {
        let dim = dims_a * dims_b;
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
        }
        let data = (0..dim * dim).map(|k| psi[k / dim] * psi[k % dim].conj()).collect();
        Ok(Self { dims_a, dims_b, time: T::zero(), data })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dims_a, self.dims_b)
    }

    pub fn dim(&self) -> usize {
        self.dims_a * self.dims_b
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Cx<T> {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Cx<T> {
        let dim = self.dim();
        (0..dim).map(|k| self.data[k * dim + k]).fold(Cx::zero(), |a, b| a + b)
    }

    /// Largest `|ρ_ij - ρ_ji*|`.
    pub fn hermiticity_deviation(&self) -> T {
        let dim = self.dim();
        let mut worst = T::zero();
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.data[i * dim + j] - self.data[j * dim + i].conj()).norm());
            }
        }
        worst
    }

    fn symmetrize(&mut self) {
        let dim = self.dim();
        let half = T::lit(0.5);
        for i in 0..dim {
            for j in i..dim {
                let v = (self.data[i * dim + j] + self.data[j * dim + i].conj()) * half;
                self.data[i * dim + j] = v;
                self.data[j * dim + i] = v.conj();
            }
        }
    }

    /// Population in states with either mode at its truncation level.
    pub fn boundary_population(&self) -> T {
        let (da, db) = self.dims();
        let dim = self.dim();
        let mut p = T::zero();
        for ia in 0..da {
            for ib in 0..db {
                if ia + 1 == da || ib + 1 == db {
                    let k = ia * db + ib;
                    p += self.data[k * dim + k].re;
                }
            }
        }
        p
    }

    /// `Σ_r w(n_a, n_b) ρ[r + shift, r]`, the trace of a ladder monomial
    /// that maps `|r⟩` to `|r + shift⟩` up to the weight `w`.
    fn ladder_trace(&self, da_shift: isize, db_shift: isize, w: impl Fn(usize, usize) -> T) -> Cx<T> {
        let (da, db) = self.dims();
        let dim = self.dim();
        let mut acc = Cx::zero();
        for ia in 0..da {
            for ib in 0..db {
                let (ra, rb) = (ia as isize + da_shift, ib as isize + db_shift);
                if ra < 0 || rb < 0 || ra >= da as isize || rb >= db as isize {
                    continue;
                }
                let row = ra as usize * db + rb as usize;
                acc += self.data[row * dim + ia * db + ib] * w(ia, ib);
            }
        }
        acc
    }
}

fn sqrt_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).unwrap().sqrt()
}

/// Matrix-free master-equation generator with its coefficients grouped by
/// operator pattern.
#[derive(Debug, Clone)]
pub struct Liouvillian<T> {
    dims_a: usize,
    dims_b: usize,
    sqrt: Vec<T>,
    /// a ρ a†
    c_a_down: Cx<T>,
    /// a† ρ a
    c_a_up: Cx<T>,
    /// b ρ b†
    c_b_down: Cx<T>,
    /// a† ρ b† and b ρ a
    c_mixed_sandwich: Cx<T>,
    /// b† a† ρ
    c_create_left: Cx<T>,
    /// ρ b† a†
    c_create_right: Cx<T>,
    /// a b ρ
    c_annihilate_left: Cx<T>,
    /// ρ a b
    c_annihilate_right: Cx<T>,
    half_kappa: T,
    c_plus: Cx<T>,
    b_loss: Cx<T>,
    d_plus: Cx<T>,
    d_minus: Cx<T>,
}

impl<T: Real> Liouvillian<T> {
    pub fn new(c: &DerivedCoeffs<T>, dims_a: usize, dims_b: usize) -> Self {
        let h = c.half_gain();
        let kappa = c.kappa;
        let half_kappa = kappa * T::lit(0.5);
        let c_plus = re(h * c.c_plus);
        let b_loss = re(h * c.c_minus + half_kappa);
        let d_plus = c.d_plus * h;
        let d_minus = c.d_minus * h;
        let e_plus = c.e_plus * h;
        let e_minus = c.e_minus * h;
        let k = re(h * c.drive);
        let two = T::lit(2.0);
        let n = dims_a.max(dims_b) + 2;
        Self {
            dims_a,
            dims_b,
            sqrt: (0..n).map(sqrt_usize).collect(),
            c_a_down: re(kappa),
            c_a_up: c_plus * two - d_plus - d_minus,
            c_b_down: b_loss * two + d_plus + d_minus,
            c_mixed_sandwich: e_plus + e_minus,
            c_create_left: k - e_plus,
            c_create_right: -e_minus - k,
            c_annihilate_left: -e_plus - k,
            c_annihilate_right: k - e_minus,
            half_kappa,
            c_plus,
            b_loss,
            d_plus,
            d_minus,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dims_a, self.dims_b)
    }

    /// Writes `L[ρ]` into `out`; both slices hold `dim²` entries.
    pub fn apply_into(&self, rho: &[Cx<T>], out: &mut [Cx<T>]) -> Result<()> {
        let (da, db) = (self.dims_a, self.dims_b);
        let dim = da * db;
        for len in [rho.len(), out.len()] {
            if len != dim * dim {
                return Err(Error::DimensionMismatch { expected: dim * dim, got: len });
            }
        }
        let sq = &self.sqrt;
        let top_a = da - 1;
        let top_b = db - 1;
        // Diagonal of the truncated a a†.
        let aad = |n: usize| if n < top_a { T::from_usize(n + 1).unwrap() } else { T::zero() };

        out.par_chunks_mut(dim).enumerate().for_each(|(r, row_out)| {
            let (ia, ib) = (r / db, r % db);
            let at = |row_a: usize, row_b: usize, col: usize| rho[(row_a * db + row_b) * dim + col];
            let left_diag_a = T::from_usize(ia).unwrap();
            let left_diag_b = T::from_usize(ib).unwrap();
            let left_aad = aad(ia);
            for (cidx, slot) in row_out.iter_mut().enumerate() {
                let (ja, jb) = (cidx / db, cidx % db);
                let rho_rc = rho[r * dim + cidx];
                let na_sum = left_diag_a + T::from_usize(ja).unwrap();
                let nb_sum = left_diag_b + T::from_usize(jb).unwrap();
                let right_aad = aad(ja);
                let mut acc = rho_rc
                    * (re(-self.half_kappa * na_sum) - self.c_plus * (left_aad + right_aad) - self.b_loss * nb_sum
                        + self.d_plus * (left_aad - left_diag_b)
                        + self.d_minus * (right_aad - T::from_usize(jb).unwrap()));

                if ia < top_a && ja < top_a {
                    acc += self.c_a_down * at(ia + 1, ib, cidx + db) * (sq[ia + 1] * sq[ja + 1]);
                }
                if ia > 0 && ja > 0 {
                    acc += self.c_a_up * at(ia - 1, ib, cidx - db) * (sq[ia] * sq[ja]);
                }
                if ib < top_b && jb < top_b {
                    acc += self.c_b_down * at(ia, ib + 1, cidx + 1) * (sq[ib + 1] * sq[jb + 1]);
                }
                // a† ρ b†
                if ia > 0 && jb < top_b {
                    acc += self.c_mixed_sandwich * at(ia - 1, ib, cidx + 1) * (sq[ia] * sq[jb + 1]);
                }
                // b ρ a
                if ib < top_b && ja > 0 {
                    acc += self.c_mixed_sandwich * at(ia, ib + 1, cidx - db) * (sq[ib + 1] * sq[ja]);
                }
                // b† a† ρ
                if ia > 0 && ib > 0 {
                    acc += self.c_create_left * at(ia - 1, ib - 1, cidx) * (sq[ia] * sq[ib]);
                }
                // a b ρ
                if ia < top_a && ib < top_b {
                    acc += self.c_annihilate_left * at(ia + 1, ib + 1, cidx) * (sq[ia + 1] * sq[ib + 1]);
                }
                // ρ b† a†
                if ja < top_a && jb < top_b {
                    acc += self.c_create_right * rho[r * dim + cidx + db + 1] * (sq[ja + 1] * sq[jb + 1]);
                }
                // ρ a b
                if ja > 0 && jb > 0 {
                    acc += self.c_annihilate_right * rho[r * dim + cidx - db - 1] * (sq[ja] * sq[jb]);
                }
                *slot = acc;
            }
        });
        Ok(())
    }
}

/// `dρ/dt` for a single density matrix.
pub fn liouvillian_apply<T: Real>(c: &DerivedCoeffs<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    let (da, db) = rho.dims();
    let l = Liouvillian::new(c, da, db);
    let mut out = vec![Cx::zero(); rho.data.len()];
    l.apply_into(&rho.data, &mut out)?;
    DensityMatrix::from_data(da, db, rho.time, out)
}

/// Step size heuristic: one hundredth of the fastest bare rate.
pub fn default_dt<T: Real>(c: &DerivedCoeffs<T>) -> T {
    let gain = c.big_a / c.big_b * c.c_plus.max(c.c_minus).max(c.e_plus.norm());
    T::lit(0.01) / c.kappa.max(gain)
}

/// Running conservation-law record of an evolution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolutionStats {
    pub steps: usize,
    /// Largest `|Tr ρ - 1|` seen.
    pub max_trace_drift: f64,
    /// Largest Hermiticity deviation of a raw step, before symmetrizing.
    pub max_herm_dev: f64,
    /// Largest boundary population seen.
    pub max_boundary_pop: f64,
}

/// RK4 integrator that can be advanced through a sequence of output times.
pub struct Evolver<T> {
    liouvillian: Liouvillian<T>,
    rho: DensityMatrix<T>,
    dt: T,
    boundary_tol: f64,
    stats: EvolutionStats,
    k: [Vec<Cx<T>>; 4],
    scratch: Vec<Cx<T>>,
}

impl<T: Real> Evolver<T> {
    pub fn new(c: &DerivedCoeffs<T>, cfg: &FockConfig, rho0: DensityMatrix<T>, dt: Option<T>) -> Result<Self> {
        cfg.validate()?;
        if rho0.dims() != cfg.dims() {
            let want = cfg.dims().0 * cfg.dims().1;
            return Err(Error::DimensionMismatch { expected: want, got: rho0.dim() });
        }
        let dt = dt.unwrap_or_else(|| default_dt(c));
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be finite and > 0, got {dt}")));
        }
        let n = rho0.data.len();
        let stats = EvolutionStats {
            max_trace_drift: (rho0.trace() - re(T::one())).norm().as_f64(),
            max_boundary_pop: rho0.boundary_population().as_f64(),
            ..Default::default()
        };
        Ok(Self {
            liouvillian: Liouvillian::new(c, cfg.dims().0, cfg.dims().1),
            rho: rho0,
            dt,
            boundary_tol: cfg.boundary_tol,
            stats,
            k: std::array::from_fn(|_| vec![Cx::zero(); n]),
            scratch: vec![Cx::zero(); n],
        })
    }

    pub fn rho(&self) -> &DensityMatrix<T> {
        &self.rho
    }

    pub fn into_rho(self) -> DensityMatrix<T> {
        self.rho
    }

    pub fn time(&self) -> T {
        self.rho.time
    }

    pub fn stats(&self) -> EvolutionStats {
        self.stats
    }

    fn step(&mut self, h: T) -> Result<()> {
        let half = h * T::lit(0.5);
        let l = &self.liouvillian;
        let [k1, k2, k3, k4] = &mut self.k;
        let y = &self.rho.data;
        let tmp = &mut self.scratch;
        l.apply_into(y, k1)?;
        tmp.iter_mut().zip(y.iter().zip(k1.iter())).for_each(|(t, (y, k))| *t = *y + *k * half);
        l.apply_into(tmp, k2)?;
        tmp.iter_mut().zip(y.iter().zip(k2.iter())).for_each(|(t, (y, k))| *t = *y + *k * half);
        l.apply_into(tmp, k3)?;
        tmp.iter_mut().zip(y.iter().zip(k3.iter())).for_each(|(t, (y, k))| *t = *y + *k * h);
        l.apply_into(tmp, k4)?;
        let w = h / T::lit(6.0);
        let two = T::lit(2.0);
        for (i, v) in self.rho.data.iter_mut().enumerate() {
            *v += (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * w;
        }
        self.rho.time += h;
        let t = self.rho.time.as_f64();

        if !self.rho.data.iter().all(|z| is_finite_cx(*z)) {
            return Err(Error::NonFinite { t });
        }
        self.stats.steps += 1;
        self.stats.max_herm_dev = self.stats.max_herm_dev.max(self.rho.hermiticity_deviation().as_f64());
        self.rho.symmetrize();
        let drift = (self.rho.trace() - re(T::one())).norm().as_f64();
        self.stats.max_trace_drift = self.stats.max_trace_drift.max(drift);
        let boundary = self.rho.boundary_population().as_f64();
        self.stats.max_boundary_pop = self.stats.max_boundary_pop.max(boundary);
        if boundary > self.boundary_tol {
            return Err(Error::TruncationOverflow { t, boundary_pop: boundary, tol: self.boundary_tol });
        }
        Ok(())
    }

    /// Advances to `t_target` with steps of `dt`, shortening the last one.
    pub fn advance_to(&mut self, t_target: T) -> Result<()> {
        let tiny = self.dt * T::lit(1e-9);
        if t_target < self.rho.time - tiny {
            return Err(Error::InvalidArgument(format!(
                "cannot evolve backwards from t = {} to t = {t_target}",
                self.rho.time
            )));
        }
        while self.rho.time < t_target - tiny {
            let h = self.dt.min(t_target - self.rho.time);
            self.step(h)?;
        }
        self.rho.time = t_target.max(self.rho.time);
        Ok(())
    }
}

/// Evolves `rho0` to `rho0.time + t_final`.
pub fn evolve<T: Real>(
    c: &DerivedCoeffs<T>,
    cfg: &FockConfig,
    rho0: DensityMatrix<T>,
    t_final: T,
    dt: Option<T>,
) -> Result<(DensityMatrix<T>, EvolutionStats)> {
    if !(t_final >= T::zero() && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_final must be finite and >= 0, got {t_final}")));
    }
    let target = rho0.time + t_final;
    let mut ev = Evolver::new(c, cfg, rho0, dt)?;
    ev.advance_to(target)?;
    let stats = ev.stats();
    Ok((ev.into_rho(), stats))
}

pub fn moments_of<T: Real>(rho: &DensityMatrix<T>) -> MomentState<T> {
    let mean_a = rho.ladder_trace(1, 0, |ia, _| sqrt_usize::<T>(ia + 1));
    let mean_b = rho.ladder_trace(0, 1, |_, ib| sqrt_usize::<T>(ib + 1));
    let n_a = rho.ladder_trace(0, 0, |ia, _| T::from_usize(ia).unwrap()).re;
    let n_b = rho.ladder_trace(0, 0, |_, ib| T::from_usize(ib).unwrap()).re;
    let m = rho.ladder_trace(1, 1, |ia, ib| sqrt_usize::<T>((ia + 1) * (ib + 1)));
    MomentState { t: rho.time, first: FirstMoments { mean_a, mean_b }, second: SecondMoments { n_a, n_b, m } }
}

/// Moments outside the closed second-moment set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraMoments<T> {
    /// ⟨aa⟩
    pub aa: Cx<T>,
    /// ⟨ab†⟩
    pub a_bdag: Cx<T>,
    /// ⟨a†b†ba⟩
    pub cross_intensity: T,
}

pub fn extra_moments<T: Real>(rho: &DensityMatrix<T>) -> ExtraMoments<T> {
    ExtraMoments {
        aa: rho.ladder_trace(2, 0, |ia, _| sqrt_usize::<T>((ia + 1) * (ia + 2))),
        a_bdag: rho.ladder_trace(1, -1, |ia, ib| sqrt_usize::<T>((ia + 1) * ib)),
        cross_intensity: rho.ladder_trace(0, 0, |ia, ib| T::from_usize(ia * ib).unwrap()).re,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub trace_dev: f64,
    pub herm_dev: f64,
    pub min_eigenvalue: f64,
    pub boundary_pop: f64,
}

/// Below this the smallest eigenvalue of ρ is reported as a warning.
pub const NEGATIVITY_WARN: f64 = -1e-6;

pub fn diagnostics<T: Real>(rho: &DensityMatrix<T>) -> Diagnostics {
    let dim = rho.dim();
    let herm = nalgebra::DMatrix::from_fn(dim, dim, |i, j| {
        let z = (rho.get(i, j) + rho.get(j, i).conj()) * T::lit(0.5);
        nalgebra::Complex::new(z.re.as_f64(), z.im.as_f64())
    });
    let min_eigenvalue = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < NEGATIVITY_WARN {
        log::warn!("density matrix at t = {} has eigenvalue {min_eigenvalue:.3e}", rho.time);
    }
    Diagnostics {
        trace_dev: (rho.trace() - re(T::one())).norm().as_f64(),
        herm_dev: rho.hermiticity_deviation().as_f64(),
        min_eigenvalue,
        boundary_pop: rho.boundary_population().as_f64(),
    }
}

/// Writes the binary snapshot: `u64` dims_a, `u64` dims_b, `f64` time, then
/// the row-major `(re, im)` pairs as `f64`, all little-endian.
pub fn write_snapshot<T: Real, W: Write>(rho: &DensityMatrix<T>, mut w: W) -> Result<()> {
    w.write_all(&(rho.dims_a as u64).to_le_bytes())?;
    w.write_all(&(rho.dims_b as u64).to_le_bytes())?;
    w.write_all(&rho.time.as_f64().to_le_bytes())?;
    for z in &rho.data {
        w.write_all(&z.re.as_f64().to_le_bytes())?;
        w.write_all(&z.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<DensityMatrix<T>> {
    let mut buf = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut buf)?;
        Ok(buf)
    };
    let dims_a = u64::from_le_bytes(next(&mut r)?) as usize;
    let dims_b = u64::from_le_bytes(next(&mut r)?) as usize;
    let time = T::lit(f64::from_le_bytes(next(&mut r)?));
    let dim = dims_a
        .checked_mul(dims_b)
        .filter(|d| d.checked_mul(*d).is_some())
        .ok_or_else(|| Error::InvalidArgument("snapshot dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let x = f64::from_le_bytes(next(&mut r)?);
        let y = f64::from_le_bytes(next(&mut r)?);
        data.push(Cx::new(T::lit(x), T::lit(y)));
    }
    DensityMatrix::from_data(dims_a, dims_b, time, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{derive_coeffs, tests::p1, PhaseMode};

    fn random_state(cfg: &FockConfig, seed: u64) -> DensityMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (da, db) = cfg.dims();
        let dim = da * db;
        let mut acc = vec![Cx::zero(); dim * dim];
        for _ in 0..3 {
            let psi: Vec<Cx<f64>> = (0..dim)
                .map(|k| {
                    if k / db < 4 && k % db < 4 {
                        Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                    } else {
                        Cx::zero()
                    }
                })
                .collect();
            let p = DensityMatrix::pure(da, db, &psi).unwrap();
            acc.iter_mut().zip(p.data()).for_each(|(a, b)| *a += *b);
        }
        let tr = acc.iter().step_by(dim + 1).map(|z| z.re).sum::<f64>();
        acc.iter_mut().for_each(|z| *z /= tr);
        DensityMatrix::from_data(da, db, 0.0, acc).unwrap()
    }

    #[test]
    fn vacuum_is_stationary_without_gain() {
        let mut p = p1();
        p.g = 1e-200;
        let c = derive_coeffs(&p).unwrap();
        let rho = DensityMatrix::vacuum(&FockConfig::square(4));
        let d = liouvillian_apply(&c, &rho).unwrap();
        assert!(d.data().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_photon_decays_at_kappa() {
        let mut p = p1();
        p.g = 1e-200;
        let c = derive_coeffs(&p).unwrap();
        let rho = DensityMatrix::number_state(&FockConfig::square(3), 1, 0).unwrap();
        let d = liouvillian_apply(&c, &rho).unwrap();
        let dn = moments_of(&d).second.n_a;
        assert!((dn + p.kappa).abs() < 1e-15);
    }

    #[test]
    fn generator_is_traceless_and_hermitian() {
        let cfg = FockConfig::square(7);
        let rho = random_state(&cfg, 7);
        for phase in [PhaseMode::GaussianAveraged { theta: 0.3 }, PhaseMode::Fixed { phi: 2.1 }] {
            let mut p = p1();
            p.eta = 0.25;
            p.omega = 0.7;
            p.phase = phase;
            let c = derive_coeffs(&p).unwrap();
            let d = liouvillian_apply(&c, &rho).unwrap();
            assert!(d.trace().norm() < 1e-13);
            assert!(d.hermiticity_deviation() < 1e-13);
        }
    }

    #[test]
    fn generator_reproduces_moment_equations() {
        let cfg = FockConfig::square(12);
        let rho = random_state(&cfg, 3);
        for phase in [PhaseMode::GaussianAveraged { theta: 0.3 }, PhaseMode::Fixed { phi: 0.9 }] {
            let mut p = p1();
            p.eta = -0.4;
            p.omega = 1.3;
            p.phase = phase;
            let c = derive_coeffs(&p).unwrap();
            let s = moments_of(&rho);
            let d = moments_of(&liouvillian_apply(&c, &rho).unwrap());
            let want = crate::moments::drift_second(&c).apply(&s.second.to_vec());
            let got = d.second.to_vec();
            for i in 0..4 {
                assert!((got[i] - want[i]).abs() < 1e-12, "{i}: {} vs {}", got[i], want[i]);
            }
            let m1 = crate::moments::drift_first(&c);
            let v = [s.first.mean_a, s.first.mean_b.conj()];
            let da = m1[0][0] * v[0] + m1[0][1] * v[1];
            let dbc = m1[1][0] * v[0] + m1[1][1] * v[1];
            assert!((d.first.mean_a - da).norm() < 1e-12);
            assert!((d.first.mean_b.conj() - dbc).norm() < 1e-12);
        }
    }

    #[test]
    fn moments_of_simple_states() {
        let cfg = FockConfig::square(3);
        let v = moments_of(&DensityMatrix::<f64>::vacuum(&cfg));
        assert_eq!(v.second, SecondMoments::zero());
        assert_eq!(v.first, FirstMoments::zero());
        let s = moments_of(&DensityMatrix::<f64>::number_state(&cfg, 1, 1).unwrap());
        assert_eq!((s.second.n_a, s.second.n_b, s.second.m), (1.0, 1.0, Cx::zero()));
    }

    #[test]
    fn moments_of_two_mode_squeezed_state() {
        // |ψ⟩ ∝ Σ xⁿ |n, n⟩ truncated at n = 6.
        let x: f64 = 0.4;
        let cfg = FockConfig::square(6);
        let (da, db) = cfg.dims();
        let mut psi = vec![Cx::zero(); da * db];
        let norm: f64 = (0..da).map(|n| x.powi(2 * n as i32)).sum();
        for n in 0..da {
            psi[n * db + n] = re(x.powi(n as i32) / norm.sqrt());
        }
        let rho = DensityMatrix::pure(da, db, &psi).unwrap();
        let s = moments_of(&rho);
        let n_want: f64 = (0..da).map(|n| n as f64 * x.powi(2 * n as i32)).sum::<f64>() / norm;
        let m_want: f64 = (0..da - 1).map(|n| (n + 1) as f64 * x.powi(2 * n as i32 + 1)).sum::<f64>() / norm;
        assert!((s.second.n_a - n_want).abs() < 1e-12);
        assert!((s.second.n_b - n_want).abs() < 1e-12);
        assert!((s.second.m.re - m_want).abs() < 1e-12);
        let e = extra_moments(&rho);
        assert_eq!(e.aa, Cx::zero());
        let ci: f64 = (0..da).map(|n| (n * n) as f64 * x.powi(2 * n as i32)).sum::<f64>() / norm;
        assert!((e.cross_intensity - ci).abs() < 1e-12);
    }

    #[test]
    fn short_p1_run_tracks_moment_ode() {
        let c = derive_coeffs(&p1()).unwrap();
        let cfg = FockConfig::square(8);
        let (rho, stats) = evolve(&c, &cfg, DensityMatrix::vacuum(&cfg), 1.0, Some(0.01)).unwrap();
        let s = moments_of(&rho).second;
        assert!((s.n_a - 0.07950019).abs() < 1e-6);
        assert!((s.m.re - 0.10136514).abs() < 1e-6);
        assert!(stats.max_trace_drift < 1e-12);
        assert!(stats.max_herm_dev < 1e-12);
        let e = extra_moments(&rho);
        assert!(e.aa.norm() < 1e-10 && e.a_bdag.norm() < 1e-10);
        assert_eq!(rho.time, 1.0);
    }

    #[test]
    fn tiny_truncation_overflows() {
        let c = derive_coeffs(&p1()).unwrap();
        let mut cfg = FockConfig::square(2);
        cfg.boundary_tol = 1e-2;
        let r = evolve(&c, &cfg, DensityMatrix::vacuum(&cfg), 20.0, None);
        assert!(matches!(r, Err(Error::TruncationOverflow { .. })), "{r:?}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = derive_coeffs(&p1()).unwrap();
        let l = Liouvillian::new(&c, 3, 3);
        let mut out = vec![Cx::zero(); 81];
        assert_eq!(
            l.apply_into(&vec![Cx::zero(); 80], &mut out),
            Err(Error::DimensionMismatch { expected: 81, got: 80 })
        );
        assert!(DensityMatrix::<f64>::from_data(2, 2, 0.0, vec![Cx::zero(); 15]).is_err());
        let cfg = FockConfig::square(3);
        let rho = DensityMatrix::vacuum(&FockConfig::square(4));
        assert!(matches!(Evolver::new(&c, &cfg, rho, None), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_duration_is_identity() {
        let c = derive_coeffs(&p1()).unwrap();
        let cfg = FockConfig::square(3);
        let rho = random_state(&cfg, 1);
        let (out, stats) = evolve(&c, &cfg, rho.clone(), 0.0, None).unwrap();
        assert_eq!(out, rho);
        assert_eq!(stats.steps, 0);
    }

    #[test]
    fn diagnostics_of_vacuum() {
        let d = diagnostics(&DensityMatrix::<f64>::vacuum(&FockConfig::square(3)));
        assert_eq!((d.trace_dev, d.herm_dev, d.boundary_pop), (0.0, 0.0, 0.0));
        assert!(d.min_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn snapshot_round_trip() {
        let cfg = FockConfig { n_max_a: 2, n_max_b: 3, boundary_tol: 1.0 };
        let mut rho = random_state(&cfg, 11);
        rho.time = 2.5;
        let mut bytes = Vec::new();
        write_snapshot(&rho, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 24 + 16 * 144);
        assert_eq!(&bytes[..8], &3u64.to_le_bytes());
        let back: DensityMatrix<f64> = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(back, rho);
        assert!(read_snapshot::<f64, _>(&bytes[..100]).is_err());
    }

    #[test]
    fn default_step_at_p1() {
        let c = derive_coeffs(&p1()).unwrap();
        assert!((default_dt(&c) - 0.01 / 0.32).abs() < 1e-15);
    }
}
