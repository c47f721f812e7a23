//! Model parameters and every derived coefficient of the reduced field dynamics.
//!
//! Rates are plain numbers; the conventional choice is to measure all of
//! them in units of the dephasing rate γ (set `gamma = 1`), but nothing here
//! enforces that.

use crate::error::{Error, Result};
use crate::scalar::{cx, re, Cx, Real};

/// How the preparation phase φ between the upper and lower level enters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseMode<T> {
    /// Gaussian phase noise of variance parameter θ: every `e^{±iφ}` is
    /// replaced by `e^{-θ}`.
    GaussianAveraged { theta: T },
    /// A definite, locked phase φ ∈ [0, 2π).
    Fixed { phi: T },
}

impl<T: Real> PhaseMode<T> {
    pub fn is_averaged(&self) -> bool {
        matches!(self, PhaseMode::GaussianAveraged { .. })
    }
}

/// The raw model knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Atom-field coupling g.
    pub g: T,
    /// Atomic injection rate r_a.
    pub r_a: T,
    /// Dephasing rate γ (all γ_ij equal).
    pub gamma: T,
    /// Population decay rate Γ (all Γ_i equal).
    pub big_gamma: T,
    /// Driving amplitude Ω.
    pub omega: T,
    /// Cavity damping κ.
    pub kappa: T,
    /// Initial inversion parameter η, ρ_aa(0) = (1-η)/2.
    pub eta: T,
    pub phase: PhaseMode<T>,
}

impl<T: Real> PhysicalParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive =
            [("g", self.g), ("r_a", self.r_a), ("gamma", self.gamma), ("Gamma", self.big_gamma), ("kappa", self.kappa)];
        for (name, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.omega.is_finite() && self.omega >= T::zero()) {
            return Err(Error::InvalidParams(format!("Omega must be finite and >= 0, got {}", self.omega)));
        }
        if !(self.eta >= -T::one() && self.eta <= T::one()) {
            return Err(Error::InvalidParams(format!("eta must satisfy -1 <= eta <= 1, got {}", self.eta)));
        }
        match self.phase {
            PhaseMode::GaussianAveraged { theta } => {
                if !(theta.is_finite() && theta >= T::zero()) {
                    return Err(Error::InvalidParams(format!("theta must be finite and >= 0, got {theta}")));
                }
            }
            PhaseMode::Fixed { phi } => {
                if !(phi >= T::zero() && phi < T::TAU()) {
                    return Err(Error::InvalidParams(format!("phi must lie in [0, 2pi), got {phi}")));
                }
            }
        }
        Ok(())
    }

    /// `√(1-η²)`, clamped so that |η| = 1 gives exactly zero.
    pub fn coherence_amplitude(&self) -> T {
        (T::one() - self.eta * self.eta).max(T::zero()).sqrt()
    }

    /// The coherence factors `(Θ_p, Θ_m)`.
    ///
    /// Averaged mode: both equal `e^{-θ}√(1-η²)`. Fixed mode:
    /// `Θ_p = e^{-iφ}√(1-η²)` and `Θ_m = e^{+iφ}√(1-η²)`.
    pub fn coherence_factors(&self) -> (Cx<T>, Cx<T>) {
        let amp = self.coherence_amplitude();
        match self.phase {
            PhaseMode::GaussianAveraged { theta } => {
                let v = re((-theta).exp() * amp);
                (v, v)
            }
            PhaseMode::Fixed { phi } => {
                let (s, c) = phi.sin_cos();
                (cx(c * amp, -s * amp), cx(c * amp, s * amp))
            }
        }
    }

    /// The scalar that multiplies `√(1-η²)` in the adiabatic atomic solutions:
    /// `e^{-θ}` (averaged) or `e^{-iφ}` (fixed).
    pub fn phase_value(&self) -> Cx<T> {
        match self.phase {
            PhaseMode::GaussianAveraged { theta } => re((-theta).exp()),
            PhaseMode::Fixed { phi } => Cx::from_polar(T::one(), -phi),
        }
    }
}

/// All derived scalars of the master equation, the moment equations and the
/// c-number Langevin system.
///
/// In averaged mode every complex field has zero imaginary part except
/// possibly `z`, `epsilon`, `p` and `q_*` (pure imaginary when `z_sq < 0`).
/// In fixed mode `a_plus`/`b_plus` carry `Θ_m`, `a_minus`/`b_minus` carry
/// `Θ_p`, and the propagator scalars (`lambda`, `z`, `epsilon`, `p`, `q_*`)
/// are evaluated with `Θ_m`; they then describe the drift of `(⟨a⟩, ⟨b⟩*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs<T> {
    pub averaged: bool,
    pub kappa: T,
    pub eta: T,
    /// ζ = Ω/γ
    pub zeta: T,
    /// ζ' = Ω/Γ
    pub zeta_p: T,
    /// χ = γ/Γ
    pub chi: T,
    /// A = 2 r_a g²/γ²
    pub big_a: T,
    /// B = (4+ζ²)(1+ζ'ζ)
    pub big_b: T,
    pub theta_p: Cx<T>,
    pub theta_m: Cx<T>,
    pub c_plus: T,
    pub c_minus: T,
    pub d_plus: Cx<T>,
    pub d_minus: Cx<T>,
    pub e_plus: Cx<T>,
    pub e_minus: Cx<T>,
    /// ζ'(1+ζ'ζ), the coefficient of the drive-only mixed term.
    pub drive: T,
    pub a_plus: Cx<T>,
    pub a_minus: Cx<T>,
    pub b_plus: Cx<T>,
    pub b_minus: Cx<T>,
    pub lambda: Cx<T>,
    pub z_sq: Cx<T>,
    pub z: Cx<T>,
    pub epsilon: Cx<T>,
    pub p: Cx<T>,
    pub q_plus: Cx<T>,
    pub q_minus: Cx<T>,
    /// p·ε, finite even when Z = 0.
    pub p_epsilon: Cx<T>,
    /// q₊·ε, finite even when Z = 0.
    pub q_plus_epsilon: Cx<T>,
    /// q₋·ε, finite even when Z = 0.
    pub q_minus_epsilon: Cx<T>,
}

impl<T: Real> DerivedCoeffs<T> {
    /// A/2B, the prefactor shared by every gain-medium term.
    pub fn half_gain(&self) -> T {
        self.big_a / (T::lit(2.0) * self.big_b)
    }

    /// True when the propagator scalars were computed outside the averaged
    /// setting the closed forms were written for.
    pub fn is_extrapolated(&self) -> bool {
        !self.averaged
    }
}

pub fn derive_coeffs<T: Real>(params: &PhysicalParams<T>) -> Result<DerivedCoeffs<T>> {
    params.validate()?;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);

    let zeta = params.omega / params.gamma;
    let zeta_p = params.omega / params.big_gamma;
    let chi = params.gamma / params.big_gamma;
    let eta = params.eta;
    let big_a = two * params.r_a * params.g * params.g / (params.gamma * params.gamma);
    let big_b = (four + zeta * zeta) * (T::one() + zeta_p * zeta);
    let h = big_a / (two * big_b);
    let (theta_p, theta_m) = params.coherence_factors();

    let zz = zeta_p * zeta;
    let pop = two * zeta_p * zeta_p + two * chi;
    let asym = eta * (zz - two * chi);
    let c_plus = pop + asym;
    let c_minus = pop - asym;
    let dcoef = two * zeta_p + zeta;
    let ecoef = two - zz;
    let d_plus = theta_p * dcoef;
    let d_minus = theta_m * dcoef;
    let e_plus = re(three * eta * zeta_p) - theta_p * ecoef;
    let e_minus = re(three * eta * zeta_p) - theta_m * ecoef;
    let drive = zeta_p * (T::one() + zz);

    let half_k = re(params.kappa / two);
    let sq = zeta_p * zeta_p + chi;
    // Langevin drift scalars.
    let a_plus = half_k + (theta_m * dcoef - re(two * sq) - re(asym)) * h;
    let a_minus = half_k + (theta_p * dcoef + re(two * sq) - re(asym)) * h;
    let b_plus = -(re(drive) + (re(three * eta * zeta_p) - theta_m * ecoef)) * h;
    let b_minus = -(re(drive) - (re(three * eta * zeta_p) - theta_p * ecoef)) * h;

    // Propagator scalars, evaluated with Θ_m.
    let mixed = re(three * eta * zeta_p) - theta_m * ecoef;
    let lambda = half_k + (theta_m * dcoef - re(asym)) * h;
    let z_sq = re(drive * drive + four * sq * sq) - mixed * mixed;
    let z = z_sq.sqrt();
    let epsilon = z * h;
    let p = re(two * sq) / z;
    let q_plus = (re(-drive) - mixed) / z;
    let q_minus = (re(-drive) + mixed) / z;
    let p_epsilon = re(big_a * sq / big_b);
    let q_plus_epsilon = (re(-drive) - mixed) * h;
    let q_minus_epsilon = (re(-drive) + mixed) * h;

    Ok(DerivedCoeffs {
        averaged: params.phase.is_averaged(),
        kappa: params.kappa,
        eta,
        zeta,
        zeta_p,
        chi,
        big_a,
        big_b,
        theta_p,
        theta_m,
        c_plus,
        c_minus,
        d_plus,
        d_minus,
        e_plus,
        e_minus,
        drive,
        a_plus,
        a_minus,
        b_plus,
        b_minus,
        lambda,
        z_sq,
        z,
        epsilon,
        p,
        q_plus,
        q_minus,
        p_epsilon,
        q_plus_epsilon,
        q_minus_epsilon,
    })
}

/// Distance from threshold, `Re λ − |Re ε|`. Positive means the propagators
/// decay and a steady state exists; a pure imaginary ε contributes nothing.
pub fn threshold_margin<T: Real>(coeffs: &DerivedCoeffs<T>) -> T {
    coeffs.lambda.re - coeffs.epsilon.re.abs()
}

/// Delta-correlation strengths of the normally ordered noise forces.
///
/// Only `⟨f_a(t') f_a*(t)⟩ = d_aa δ` and `⟨f_b(t') f_a(t)⟩ = d_ba δ` (and
/// their conjugates) are nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDiffusion<T> {
    pub d_aa: T,
    pub d_ba: Cx<T>,
}

pub fn noise_diffusion<T: Real>(coeffs: &DerivedCoeffs<T>) -> NoiseDiffusion<T> {
    let two = T::lit(2.0);
    let c = coeffs;
    let zz = c.zeta_p * c.zeta;
    let theta_mean = ((c.theta_p + c.theta_m) * T::lit(0.5)).re;
    let d_aa = (c.big_a / c.big_b)
        * (two * c.zeta_p * c.zeta_p + two * c.chi + c.eta * (zz - two * c.chi)
            - (two * c.zeta_p + c.zeta) * theta_mean);
    let d_ba =
        (re(c.zeta_p * (T::one() + zz) - T::lit(3.0) * c.eta * c.zeta_p) + c.theta_p * (two - zz)) * c.half_gain();
    NoiseDiffusion { d_aa, d_ba }
}

/// Initial atomic density matrix elements (without the phase factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialAtom<T> {
    pub rho_aa0: T,
    pub rho_cc0: T,
    pub rho_ac0: T,
}

pub fn initial_atom<T: Real>(params: &PhysicalParams<T>) -> InitialAtom<T> {
    let half = T::lit(0.5);
    InitialAtom {
        rho_aa0: (T::one() - params.eta) * half,
        rho_cc0: (T::one() + params.eta) * half,
        rho_ac0: params.coherence_amplitude() * half,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn p1() -> PhysicalParams<f64> {
        PhysicalParams {
            g: 0.2,
            r_a: 10.0,
            gamma: 1.0,
            big_gamma: 1.0,
            omega: 1.0,
            kappa: 0.2,
            eta: 0.0,
            phase: PhaseMode::GaussianAveraged { theta: 0.0 },
        }
    }

    #[test]
    fn p1_coefficients() {
        let c = derive_coeffs(&p1()).unwrap();
        assert_relative_eq!(c.big_a, 0.8, max_relative = 1e-14);
        assert_relative_eq!(c.big_b, 10.0);
        assert_relative_eq!(c.c_plus, 4.0);
        assert_relative_eq!(c.c_minus, 4.0);
        assert_relative_eq!(c.d_plus.re, 3.0);
        assert_relative_eq!(c.d_minus.re, 3.0);
        assert_relative_eq!(c.e_plus.re, -1.0);
        assert_relative_eq!(c.e_minus.re, -1.0);
        assert_relative_eq!(c.a_plus.re, 0.06, max_relative = 1e-12);
        assert_relative_eq!(c.a_minus.re, 0.38, max_relative = 1e-12);
        assert_relative_eq!(c.b_plus.re, -0.04, max_relative = 1e-12);
        assert_relative_eq!(c.b_minus.re, -0.12, max_relative = 1e-12);
        assert_relative_eq!(c.lambda.re, 0.22, max_relative = 1e-12);
        assert_relative_eq!(c.z.re, 19f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c.epsilon.re, 0.04 * 19f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(c.epsilon.re, 0.17436, epsilon = 1e-5);
    }

    #[test]
    fn no_drive_or_full_inversion_kills_d() {
        let mut p = p1();
        p.omega = 0.0;
        p.eta = 0.3;
        p.phase = PhaseMode::GaussianAveraged { theta: 0.7 };
        let c = derive_coeffs(&p).unwrap();
        assert_eq!(c.d_plus, Cx::new(0.0, 0.0));
        assert_eq!(c.d_minus, Cx::new(0.0, 0.0));

        let mut p = p1();
        p.eta = 1.0;
        p.phase = PhaseMode::GaussianAveraged { theta: 1.3 };
        let c = derive_coeffs(&p).unwrap();
        assert_eq!(c.theta_p, Cx::new(0.0, 0.0));
        assert_eq!(c.theta_m, Cx::new(0.0, 0.0));
        assert_eq!(c.d_plus.norm(), 0.0);
        assert_relative_eq!(c.e_plus.re, 3.0 * c.zeta_p);
        assert_relative_eq!(c.e_minus.re, 3.0 * c.zeta_p);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = p1();
        p.eta = 2.0;
        let err = derive_coeffs(&p).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(ref m) if m.contains("eta")));
        let mut p = p1();
        p.kappa = 0.0;
        assert!(derive_coeffs(&p).is_err());
        let mut p = p1();
        p.omega = -1.0;
        assert!(derive_coeffs(&p).is_err());
        let mut p = p1();
        p.phase = PhaseMode::GaussianAveraged { theta: -0.1 };
        assert!(derive_coeffs(&p).is_err());
    }

    #[test]
    fn threshold_margin_examples() {
        let c = derive_coeffs(&p1()).unwrap();
        assert_relative_eq!(threshold_margin(&c), 0.045644042258373, epsilon = 1e-12);
        let mut p = p1();
        p.kappa = 0.1;
        let c = derive_coeffs(&p).unwrap();
        assert_relative_eq!(threshold_margin(&c), -0.004355957741627, epsilon = 1e-12);
        let mut p = p1();
        p.omega = 0.0;
        p.eta = 1.0;
        p.g = 1e-9;
        let c = derive_coeffs(&p).unwrap();
        assert_relative_eq!(threshold_margin(&c), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn noise_diffusion_examples() {
        let c = derive_coeffs(&p1()).unwrap();
        let n = noise_diffusion(&c);
        assert_relative_eq!(n.d_aa, 0.08, max_relative = 1e-12);
        assert_relative_eq!(n.d_ba.re, 0.12, max_relative = 1e-12);

        let mut p = p1();
        p.eta = 1.0;
        p.omega = 0.0;
        let n = noise_diffusion(&derive_coeffs(&p).unwrap());
        assert_eq!(n.d_aa, 0.0);
        assert_eq!(n.d_ba.norm(), 0.0);
    }

    #[test]
    fn d_ba_flat_in_theta_at_compensation_point() {
        let mut p = p1();
        p.omega = 2f64.sqrt();
        p.eta = 0.2;
        let at = |theta: f64| {
            let mut q = p;
            q.phase = PhaseMode::GaussianAveraged { theta };
            noise_diffusion(&derive_coeffs(&q).unwrap()).d_ba.re
        };
        let slope = (at(0.5 + 1e-4) - at(0.5 - 1e-4)) / 2e-4;
        assert!(slope.abs() < 1e-10, "slope {slope}");
    }

    #[test]
    fn initial_atom_examples() {
        let mut p = p1();
        let a = initial_atom(&p);
        assert_eq!((a.rho_aa0, a.rho_cc0, a.rho_ac0), (0.5, 0.5, 0.5));
        p.eta = 1.0;
        let a = initial_atom(&p);
        assert_eq!((a.rho_aa0, a.rho_cc0, a.rho_ac0), (0.0, 1.0, 0.0));
        p.eta = 0.5;
        let a = initial_atom(&p);
        assert_eq!(a.rho_aa0, 0.25);
        assert_eq!(a.rho_cc0, 0.75);
        assert_relative_eq!(a.rho_ac0, 0.75f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(a.rho_ac0, 0.4330, epsilon = 1e-4);
    }

    #[test]
    fn fixed_mode_factors_are_conjugate() {
        let mut p = p1();
        p.phase = PhaseMode::Fixed { phi: 0.9 };
        let c = derive_coeffs(&p).unwrap();
        assert_eq!(c.theta_p, c.theta_m.conj());
        assert_eq!(c.d_plus, c.d_minus.conj());
        assert_eq!(c.e_plus, c.e_minus.conj());
        assert!(c.is_extrapolated());
        p.phase = PhaseMode::Fixed { phi: 7.0 };
        assert!(derive_coeffs(&p).is_err());
    }

    #[test]
    fn single_precision_matches_double() {
        let p = p1();
        let p32 = PhysicalParams {
            g: 0.2f32,
            r_a: 10.0,
            gamma: 1.0,
            big_gamma: 1.0,
            omega: 1.0,
            kappa: 0.2,
            eta: 0.0,
            phase: PhaseMode::GaussianAveraged { theta: 0.0 },
        };
        let c = derive_coeffs(&p).unwrap();
        let c32 = derive_coeffs(&p32).unwrap();
        assert!((c32.epsilon.re as f64 - c.epsilon.re).abs() < 1e-6);
        assert!((threshold_margin(&c32) as f64 - threshold_margin(&c)).abs() < 1e-6);
    }
}
