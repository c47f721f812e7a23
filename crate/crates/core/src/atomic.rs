//! Adiabatic atomic coefficients.
//!
//! Each reduced atomic operator is proportional to the field density
//! operator: `ρ̂_aa = c_aa ρ̂`, `ρ̂_cc = c_cc ρ̂`, `ρ̂_ac = c_ac ρ̂`. The cross
//! terms `ρ̂_ab`, `ρ̂_cb` are `scale · (x ρ̂ â + y ρ̂ b̂†)`-type combinations,
//! stored here as their bracketed coefficients. This module is used for
//! verification only; the Fock oracle works from the master equation.

use crate::coeffs::{initial_atom, PhysicalParams};
use crate::scalar::{re, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicCoeffs<T> {
    pub c_aa: Cx<T>,
    pub c_cc: Cx<T>,
    pub c_ac: Cx<T>,
}

/// Bracketed coefficients of `â` and `b̂†` inside `ρ̂_ab` and `ρ̂_cb`; the
/// operators themselves are `scale` times these brackets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCoeffs<T> {
    pub scale: T,
    pub ab_a: Cx<T>,
    pub ab_bdag: Cx<T>,
    pub cb_a: Cx<T>,
    pub cb_bdag: Cx<T>,
}

/// `phase_value` is `e^{-iφ}` (locked phase) or `e^{-θ}` (averaged).
pub fn adiabatic_populations<T: Real>(params: &PhysicalParams<T>, phase_value: Cx<T>) -> AtomicCoeffs<T> {
    let two = T::lit(2.0);
    let (gam, big, om, eta) = (params.gamma, params.big_gamma, params.omega, params.eta);
    let coh = phase_value * params.coherence_amplitude();
    let denom = gam * big + om * om;
    let pop_norm = params.r_a / (two * big * denom);
    let c_aa = (re(gam * big * (T::one() - eta) + om * om) - coh * (big * om)) * pop_norm;
    let c_cc = (re(gam * big * (T::one() + eta) + om * om) + coh * (big * om)) * pop_norm;
    let c_ac = (coh * big - re(om * eta)) * (params.r_a / (two * denom));
    AtomicCoeffs { c_aa, c_cc, c_ac }
}

pub fn adiabatic_cross<T: Real>(params: &PhysicalParams<T>, phase_value: Cx<T>) -> CrossCoeffs<T> {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let zeta = params.omega / params.gamma;
    let zeta_p = params.omega / params.big_gamma;
    let chi = params.gamma / params.big_gamma;
    let eta = params.eta;
    let zz = zeta_p * zeta;
    let coh = phase_value * params.coherence_amplitude();
    let pop = two * (zeta_p * zeta_p + chi);
    let asym = eta * (zz - two * chi);
    let drive = zeta_p * (T::one() + zz);
    let scale = -params.g * params.r_a / (params.gamma * params.gamma * (T::lit(4.0) + zeta * zeta) * (T::one() + zz));
    CrossCoeffs {
        scale,
        ab_a: re(pop + asym) - coh * (two * zeta_p + zeta),
        ab_bdag: re(drive + three * eta * zeta_p) - coh * (two - zz),
        cb_a: re(drive - three * eta * zeta_p) + coh * (two - zz),
        cb_bdag: -(re(pop - asym) + coh * (two * zeta_p + zeta)),
    }
}

/// Residuals of the three adiabatic balance equations for the populations
/// and the upper-lower coherence. All vanish for the closed-form solutions.
pub fn adiabatic_residuals<T: Real>(
    params: &PhysicalParams<T>,
    phase_value: Cx<T>,
    coeffs: &AtomicCoeffs<T>,
) -> [Cx<T>; 3] {
    let init = initial_atom(params);
    let (om, big, gam) = (params.omega, params.big_gamma, params.gamma);
    let half = T::lit(0.5);
    [
        re(params.r_a * init.rho_aa0) - coeffs.c_ac * om - coeffs.c_aa * big,
        re(params.r_a * init.rho_cc0) + coeffs.c_ac * om - coeffs.c_cc * big,
        phase_value * (params.r_a * init.rho_ac0) - (coeffs.c_cc - coeffs.c_aa) * (om * half) - coeffs.c_ac * gam,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{derive_coeffs, PhaseMode};
    use approx::assert_relative_eq;

    fn unit_params() -> PhysicalParams<f64> {
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
    fn hand_evaluated_populations() {
        let c = adiabatic_populations(&unit_params(), re(1.0));
        assert_relative_eq!(c.c_aa.re, 2.5, max_relative = 1e-15);
        assert_relative_eq!(c.c_cc.re, 7.5, max_relative = 1e-15);
        assert_relative_eq!(c.c_ac.re, 2.5, max_relative = 1e-15);
    }

    #[test]
    fn full_inversion_drops_coherence_term() {
        let mut p = unit_params();
        p.eta = 1.0;
        p.omega = 0.7;
        let c = adiabatic_populations(&p, Cx::from_polar(1.0, -0.4));
        let d = p.gamma * p.big_gamma + p.omega * p.omega;
        assert_relative_eq!(c.c_aa.re, p.r_a * p.omega * p.omega / (2.0 * p.big_gamma * d));
        assert_eq!(c.c_aa.im, 0.0);
        assert_relative_eq!(c.c_ac.re, -p.r_a * p.omega / (2.0 * d));
        let r = adiabatic_residuals(&p, Cx::from_polar(1.0, -0.4), &c);
        assert!(r.iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn p1_residuals_vanish() {
        let p = unit_params();
        let c = adiabatic_populations(&p, re(1.0));
        for r in adiabatic_residuals(&p, re(1.0), &c) {
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn cross_brackets_special_cases() {
        let mut p = unit_params();
        p.omega = 0.0;
        let pv = re(0.6);
        let x = adiabatic_cross(&p, pv);
        assert_relative_eq!(x.ab_a.re, 2.0 * p.gamma / p.big_gamma - 2.0 * 0.0);
        assert_relative_eq!(x.ab_bdag.re, -2.0 * 0.6);

        let mut p = unit_params();
        p.eta = 1.0;
        p.omega = 1.3;
        p.big_gamma = 0.8;
        let x = adiabatic_cross(&p, re(0.3));
        let zp = p.omega / p.big_gamma;
        let z = p.omega / p.gamma;
        assert_relative_eq!(x.ab_bdag.re, zp * (1.0 + zp * z) + 3.0 * zp, max_relative = 1e-14);
    }

    #[test]
    fn cross_brackets_reassemble_master_equation_coefficients() {
        let mut p = unit_params();
        p.eta = -0.35;
        p.omega = 0.8;
        p.big_gamma = 1.7;
        p.phase = PhaseMode::GaussianAveraged { theta: 0.4 };
        let c = derive_coeffs(&p).unwrap();
        let x = adiabatic_cross(&p, p.phase_value());
        assert!((x.ab_a - (re(c.c_plus) - c.d_plus)).norm() < 1e-14);
        assert!((x.ab_bdag - (re(c.drive) + c.e_plus)).norm() < 1e-14);
        assert!((x.cb_a - (re(c.drive) - c.e_plus)).norm() < 1e-14);
        assert!((x.cb_bdag + (re(c.c_minus) + c.d_plus)).norm() < 1e-14);
        let want = -p.g * p.r_a / (p.gamma * p.gamma * c.big_b);
        assert_relative_eq!(x.scale, want, max_relative = 1e-14);
    }
}
