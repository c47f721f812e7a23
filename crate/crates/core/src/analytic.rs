//! Closed-form propagators for the mean fields and the second moments.
//!
//! The homogeneous propagator of `(⟨a⟩, ⟨b⟩*)` is
//! `Φ(t) = e^{-λt} [cosh(εt) I + sinh(εt)/ε · K]` with
//! `K = [[pε, -q₊ε], [-q₋ε, -pε]]`, so
//! `⟨a⟩(t) = F₊⟨a⟩(0) + G₊⟨b⟩*(0)` and `⟨b⟩*(t) = G₋⟨a⟩(0) + F₋⟨b⟩*(0)`.
//! Both `cosh(εt)` and `sinh(εt)/ε` are entire in `w = ε²`, so nothing
//! special happens at `Z = 0` or when `Z² < 0`.
//!
//! The second moments `Q = [[n_a, m], [m*, n_b]]` satisfy
//! `Q(t) = Φ Q₀ Φᵀ + ∫₀ᵗ Φ(τ) N Φ(τ)ᵀ dτ` with the noise matrix
//! `N = [[D_aa, D_ba], [D_ba, 0]]`; the integral reduces to four scalar
//! exponential integrals evaluated in closed form.

use crate::coeffs::{noise_diffusion, DerivedCoeffs};
use crate::error::{Error, Result};
use crate::moments::{FirstMoments, SecondMoments};
use crate::scalar::{re, Cx, Real};
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorKernels<T> {
    pub f_plus: Cx<T>,
    pub f_minus: Cx<T>,
    pub g_plus: Cx<T>,
    pub g_minus: Cx<T>,
}

/// Switch from series to closed forms once `|w| t²` reaches this.
const SERIES_LIMIT: f64 = 0.5;

/// `(cosh(√w t), sinh(√w t)/√w)` for complex `w`.
pub fn cosh_sinhc<T: Real>(w: Cx<T>, t: T) -> (Cx<T>, Cx<T>) {
    let x = w * (t * t);
    if x.norm() < T::lit(SERIES_LIMIT) {
        let mut c = re(T::one());
        let mut s = re(T::one());
        let mut term_c = re(T::one());
        let mut term_s = re(T::one());
        for k in 1..30u32 {
            let k2 = T::from_u32(2 * k).unwrap();
            term_c = term_c * x / (k2 * (k2 - T::one()));
            term_s = term_s * x / (k2 * (k2 + T::one()));
            c += term_c;
            s += term_s;
            if term_c.norm() <= T::epsilon() * c.norm() && term_s.norm() <= T::epsilon() * s.norm() {
                break;
            }
        }
        (c, s * t)
    } else {
        let e = w.sqrt();
        ((e * t).cosh(), (e * t).sinh() / e)
    }
}

fn epsilon_sq<T: Real>(c: &DerivedCoeffs<T>) -> Cx<T> {
    let h = c.half_gain();
    c.z_sq * (h * h)
}

pub fn kernels<T: Real>(c: &DerivedCoeffs<T>, t: T) -> PropagatorKernels<T> {
    let (ch, sc) = cosh_sinhc(epsilon_sq(c), t);
    let decay = (-c.lambda * t).exp();
    PropagatorKernels {
        f_plus: decay * (ch + c.p_epsilon * sc),
        f_minus: decay * (ch - c.p_epsilon * sc),
        g_plus: -decay * c.q_plus_epsilon * sc,
        g_minus: -decay * c.q_minus_epsilon * sc,
    }
}

/// Noise-free evolution of the mean fields.
pub fn mean_field<T: Real>(c: &DerivedCoeffs<T>, first0: &FirstMoments<T>, t: T) -> FirstMoments<T> {
    let k = kernels(c, t);
    let b0c = first0.mean_b.conj();
    FirstMoments {
        mean_a: k.f_plus * first0.mean_a + k.g_plus * b0c,
        mean_b: (k.g_minus * first0.mean_a + k.f_minus * b0c).conj(),
    }
}

/// `ψ_n(z) = ∫₀¹ sⁿ e^{-zs} ds` for `n = 0..len`.
fn psi_table<T: Real>(z: T, len: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(len);
    let ez = (-z).exp();
    for n in 0..len {
        let nf = T::from_usize(n).unwrap();
        let v = if z > nf && n > 0 {
            // Upward recurrence is stable while n < z.
            (nf * out[n - 1] - ez) / z
        } else if z > nf {
            -(-z).exp_m1() / z
        } else if z >= T::zero() {
            let mut term = T::one() / (nf + T::one());
            let mut sum = term;
            for j in 1..400 {
                term = term * z / (nf + T::from_usize(j + 1).unwrap());
                sum += term;
                if term <= T::epsilon() * sum {
                    break;
                }
            }
            ez * sum
        } else {
            let mz = -z;
            let mut fact = T::one();
            let mut pow = T::one();
            let mut sum = T::one() / (nf + T::one());
            for j in 1..400 {
                let jf = T::from_usize(j).unwrap();
                pow *= mz;
                fact *= jf;
                let term = pow / (fact * (nf + jf + T::one()));
                sum += term;
                if term <= T::epsilon() * sum {
                    break;
                }
            }
            sum
        };
        out.push(v);
    }
    out
}

/// `(1 - e^{-xt}) / x`, continuous through `x = 0`.
fn phi<T: Real>(x: Cx<T>, t: T) -> Cx<T> {
    let z = x * t;
    if z.norm() < T::lit(0.1) {
        // t · Σ (-z)^k / (k+1)!
        let mut term = re(T::one());
        let mut sum = re(T::one());
        for k in 1..20u32 {
            term = -term * z / T::from_u32(k + 1).unwrap();
            sum += term;
            if term.norm() <= T::epsilon() * sum.norm() {
                break;
            }
        }
        sum * t
    } else {
        (re(T::one()) - (-z).exp()) / x
    }
}

/// The four exponential integrals over `[0, t]` with `a = 2λ`, `b = 2ε`:
/// `∫e^{-aτ}`, `∫e^{-aτ}cosh bτ`, `∫e^{-aτ}sinh(bτ)/b` and
/// `∫e^{-aτ}(cosh bτ - 1)/b²`. Only `b²` enters, so `ε` may be imaginary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIntegrals<T> {
    pub e0: Cx<T>,
    pub ec: Cx<T>,
    pub es: Cx<T>,
    pub eq: Cx<T>,
}

pub fn noise_integrals<T: Real>(a: T, b_sq: Cx<T>, t: T) -> NoiseIntegrals<T> {
    let e0 = phi(re(a), t);
    let x = b_sq * (t * t);
    if x.norm() < T::lit(SERIES_LIMIT * SERIES_LIMIT) {
        let psi = psi_table(a * t, 40);
        let mut ec = Cx::zero();
        let mut es = Cx::zero();
        let mut eq = Cx::zero();
        let mut pow = re(T::one());
        // fact_k holds n! for the running n.
        let mut fact = [T::one(); 40];
        for n in 1..40 {
            fact[n] = fact[n - 1] * T::from_usize(n).unwrap();
        }
        for k in 0..18 {
            let tc = pow * (psi[2 * k] / fact[2 * k]);
            let ts = pow * (psi[2 * k + 1] / fact[2 * k + 1]);
            let tq = pow * (psi[2 * k + 2] / fact[2 * k + 2]);
            ec += tc;
            es += ts;
            eq += tq;
            if tq.norm() <= T::epsilon() * eq.norm() && tc.norm() <= T::epsilon() * ec.norm() {
                break;
            }
            pow *= x;
        }
        NoiseIntegrals { e0, ec: ec * t, es: es * (t * t), eq: eq * (t * t * t) }
    } else {
        let b = b_sq.sqrt();
        let lo = phi(re(a) - b, t);
        let hi = phi(re(a) + b, t);
        let half = T::lit(0.5);
        let ec = (lo + hi) * half;
        let es = (lo - hi) / (b * T::lit(2.0));
        let eq = (ec - e0) / b_sq;
        NoiseIntegrals { e0, ec, es, eq }
    }
}

type M2<T> = [[Cx<T>; 2]; 2];

fn mul<T: Real>(x: &M2<T>, y: &M2<T>) -> M2<T> {
    let mut o = [[Cx::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    o
}

fn transpose<T: Real>(x: &M2<T>) -> M2<T> {
    [[x[0][0], x[1][0]], [x[0][1], x[1][1]]]
}

/// Second moments at time `t` from `second0`, in closed form.
///
/// Only defined for the phase-averaged mode, where every propagator entry is
/// real and `Φᵀ = Φ†`.
pub fn second_moments_closed<T: Real>(
    c: &DerivedCoeffs<T>,
    second0: &SecondMoments<T>,
    t: T,
) -> Result<SecondMoments<T>> {
    if !c.averaged {
        return Err(Error::PhaseModeUnsupported("closed-form second moments"));
    }
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    let k = kernels(c, t);
    let phi_t: M2<T> = [[k.f_plus, k.g_plus], [k.g_minus, k.f_minus]];
    let q0: M2<T> = [[re(second0.n_a), second0.m], [second0.m.conj(), re(second0.n_b)]];
    let hom = mul(&mul(&phi_t, &q0), &transpose(&phi_t));

    let noise = noise_diffusion(c);
    let n: M2<T> = [[re(noise.d_aa), noise.d_ba], [noise.d_ba, Cx::zero()]];
    let kmat: M2<T> = [[c.p_epsilon, -c.q_plus_epsilon], [-c.q_minus_epsilon, -c.p_epsilon]];
    let two = T::lit(2.0);
    let ints = noise_integrals(two * c.lambda.re, epsilon_sq(c) * T::lit(4.0), t);
    let i_cc = (ints.e0 + ints.ec) * T::lit(0.5);
    let i_cs = ints.es;
    let i_ss = ints.eq * two;
    let kn = mul(&kmat, &n);
    let nk = mul(&n, &transpose(&kmat));
    let knk = mul(&kn, &transpose(&kmat));

    let mut q = hom;
    for i in 0..2 {
        for j in 0..2 {
            q[i][j] += i_cc * n[i][j] + i_cs * (kn[i][j] + nk[i][j]) + i_ss * knk[i][j];
        }
    }
    Ok(SecondMoments { n_a: q[0][0].re, n_b: q[1][1].re, m: q[0][1] })
}
