//! Gaussian nonclassicality measures built from first and second moments.
//!
//! Conventions: quadratures `x = a + a†`, `p = -i(a - a†)` so the vacuum
//! variance is 1; the separability bound of the DGCZ sum is 2; natural
//! logarithm for the log-negativity. The state class is the one generated
//! by the model dynamics: `⟨aa⟩ = ⟨bb⟩ = ⟨ab†⟩ = 0` for the fluctuations.

use crate::error::{Error, Result};
use crate::moments::{FirstMoments, SecondMoments};
use crate::scalar::{Cx, Real};

/// Fluctuation moments `δn_a, δn_b, δm` after subtracting the means.
pub fn central<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> (T, T, Cx<T>) {
    (second.n_a - first.mean_a.norm_sqr(), second.n_b - first.mean_b.norm_sqr(), second.m - first.mean_a * first.mean_b)
}

/// Variances of `(x_a ∓ x_b)/√2`-type combinations with the fixed phase
/// reference; squeezing when below 1.
pub fn quadrature_variances<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> (T, T) {
    let (na, nb, m) = central(second, first);
    let base = T::one() + na + nb;
    let two = T::lit(2.0);
    (base - two * m.re, base + two * m.re)
}

/// DGCZ sum at the optimal local phase; below 2 certifies entanglement.
pub fn dgcz_witness<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> T {
    let (na, nb, m) = central(second, first);
    T::lit(2.0) * (T::one() + na + nb - T::lit(2.0) * m.norm())
}

/// Smallest symplectic eigenvalues `(ν, ν̃)` of the covariance matrix and of
/// its partial transpose.
pub fn symplectic_eigenvalues<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> (T, T) {
    let (na, nb, m) = central(second, first);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let alpha = T::one() + two * na;
    let beta = T::one() + two * nb;
    let det_a = alpha * alpha;
    let det_b = beta * beta;
    let det_c = -four * m.norm_sqr();
    let det_all = (alpha * beta + det_c) * (alpha * beta + det_c);
    let smallest = |delta: T| {
        let disc = (delta * delta - four * det_all).max(T::zero());
        ((delta - disc.sqrt()) / two).max(T::zero()).sqrt()
    };
    (smallest(det_a + det_b + two * det_c), smallest(det_a + det_b - two * det_c))
}

/// Tolerance on the physical symplectic eigenvalue.
pub const PHYSICAL_TOL: f64 = 1e-6;

pub fn log_negativity<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> Result<T> {
    let (nu, nu_pt) = symplectic_eigenvalues(second, first);
    if nu < T::one() - T::lit(PHYSICAL_TOL) {
        return Err(Error::UnphysicalCovariance(nu.as_f64()));
    }
    Ok((-nu_pt.ln()).max(T::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlations<T> {
    pub g2_cross: T,
    pub cs_ratio: T,
}

/// Cross correlation under Gaussian factorization,
/// `⟨a†b†ba⟩ = n_a n_b + |m|²`, and the Cauchy–Schwarz ratio
/// `g2_cross² / (g2_a g2_b)` with `g2_a = g2_b = 2`.
pub fn gaussian_g2<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> Result<Correlations<T>> {
    let (na, nb, m) = central(second, first);
    let floor = T::lit(1e-12);
    if !(na >= floor && nb >= floor) {
        return Err(Error::DegenerateIntensity { n_a: na.as_f64(), n_b: nb.as_f64() });
    }
    let g2_cross = T::one() + m.norm_sqr() / (na * nb);
    Ok(Correlations { g2_cross, cs_ratio: g2_cross * g2_cross / T::lit(4.0) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonclassicalityReport<T> {
    pub n_total: T,
    pub var_minus: T,
    pub var_plus: T,
    /// Monitored only; not asserted to exceed 1.
    pub uncertainty_product: T,
    pub dgcz: T,
    pub log_neg: T,
    /// `None` when either mode is empty.
    pub correlations: Option<Correlations<T>>,
}

pub fn report<T: Real>(second: &SecondMoments<T>, first: &FirstMoments<T>) -> Result<NonclassicalityReport<T>> {
    let (var_minus, var_plus) = quadrature_variances(second, first);
    let correlations = match gaussian_g2(second, first) {
        Ok(c) => Some(c),
        Err(Error::DegenerateIntensity { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(NonclassicalityReport {
        n_total: second.n_a + second.n_b,
        var_minus,
        var_plus,
        uncertainty_product: var_minus * var_plus,
        dgcz: dgcz_witness(second, first),
        log_neg: log_negativity(second, first)?,
        correlations,
    })
}
