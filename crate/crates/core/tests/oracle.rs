//! The truncated Fock integration against the moment equations.

use beatlaser::fock::{diagnostics, evolve, extra_moments, moments_of, DensityMatrix, Evolver};
use beatlaser::moments::integrate;
use beatlaser::{derive_coeffs, FockConfig, Params, Phase, State};

fn p1() -> Params {
    Params {
        g: 0.2,
        r_a: 10.0,
        gamma: 1.0,
        big_gamma: 1.0,
        omega: 1.0,
        kappa: 0.2,
        eta: 0.0,
        phase: Phase::GaussianAveraged { theta: 0.0 },
    }
}

#[test]
fn fock_tracks_moment_ode_when_truncation_is_adequate() {
    let c = derive_coeffs(&p1()).unwrap();
    let cfg = FockConfig::square(12);
    let ode = integrate(&c, &State::vacuum(), 20.0, 0.01).unwrap();
    let mut ev = Evolver::new(&c, &cfg, DensityMatrix::vacuum(&cfg), Some(0.02)).unwrap();
    for t in [1.0, 5.0, 20.0] {
        ev.advance_to(t).unwrap();
        let fock = moments_of(ev.rho()).second;
        let want = ode[(t / 0.01f64).round() as usize].second;
        let boundary = ev.rho().boundary_population();
        let tol = 1e-3f64.max(10.0 * boundary);
        assert!((fock.n_a - want.n_a).abs() < tol, "t={t}: {} vs {}", fock.n_a, want.n_a);
        assert!((fock.n_b - want.n_b).abs() < tol, "t={t}: {} vs {}", fock.n_b, want.n_b);
        assert!((fock.m - want.m).norm() < tol, "t={t}: {} vs {}", fock.m, want.m);
        let extra = extra_moments(ev.rho());
        assert!(extra.aa.norm() < 1e-10 && extra.a_bdag.norm() < 1e-10);
        // Gaussian factorization of the cross intensity.
        let factorized = fock.n_a * fock.n_b + fock.m.norm_sqr();
        assert!((extra.cross_intensity - factorized).abs() < 5.0 * tol, "t={t}");
    }
    let stats = ev.stats();
    assert!(stats.max_trace_drift < 1e-9);
    assert!(stats.max_herm_dev < 1e-12);
    let d = diagnostics(ev.rho());
    assert!(d.trace_dev < 1e-9 && d.herm_dev == 0.0);
}

#[test]
fn fixed_phase_fock_tracks_complex_moments() {
    let mut p = p1();
    p.eta = 0.3;
    p.phase = Phase::Fixed { phi: 1.2 };
    let c = derive_coeffs(&p).unwrap();
    let cfg = FockConfig::square(10);
    let (rho, stats) = evolve(&c, &cfg, DensityMatrix::vacuum(&cfg), 3.0, Some(0.01)).unwrap();
    let fock = moments_of(&rho).second;
    let ode = integrate(&c, &State::vacuum(), 3.0, 0.01).unwrap().last().unwrap().second;
    assert!(ode.m.im.abs() > 1e-3);
    let tol = 1e-3f64.max(10.0 * rho.boundary_population());
    assert!((fock.n_a - ode.n_a).abs() < tol);
    assert!((fock.m - ode.m).norm() < tol);
    assert!((fock.m.im - ode.m.im).abs() < 0.01 * ode.m.im.abs());
    assert!(stats.max_herm_dev < 1e-12);
}

#[test]
fn theta_is_irrelevant_at_full_inversion() {
    let cfg = FockConfig::square(5);
    let run = |theta: f64| {
        let mut p = p1();
        p.eta = 1.0;
        p.phase = Phase::GaussianAveraged { theta };
        let c = derive_coeffs(&p).unwrap();
        evolve(&c, &cfg, DensityMatrix::vacuum(&cfg), 2.0, Some(0.02)).unwrap().0
    };
    assert_eq!(run(0.0), run(2.5));
}
