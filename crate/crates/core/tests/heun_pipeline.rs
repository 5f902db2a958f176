use ellipspin::heun::{
    algebraic_coefficients, flip_probability_heun, heun_parameters, indicial_exponents,
    shifted_half_sn, z_of_tau, ExponentSelection,
};
use ellipspin::spin::{evolve, SimParams, SpinState};
use ellipspin::{jacobi, DEFAULT_TOL};
use num_complex::Complex64;

fn ode_flip(params: &SimParams, tau: f64) -> f64 {
    let traj = evolve(SpinState::UP, params, &[0.0, tau], DEFAULT_TOL).unwrap();
    traj.samples[1].p_flip
}

#[test]
fn heun_matches_ode_on_grid() {
    let mut worst = 0.0f64;
    for k in [0.3, 0.5, 0.7] {
        for delta in [0.0, 0.05, 0.1] {
            let params = SimParams::from_detuning(0.2, delta, k).unwrap();
            for tau in [0.5, 1.0, 2.0] {
                let heun =
                    flip_probability_heun(tau, &params, ExponentSelection::default()).unwrap();
                let ode = ode_flip(&params, tau);
                worst = worst.max((heun - ode).abs());
            }
        }
    }
    assert!(worst < 1e-6, "worst deviation {worst:e}");
}

#[test]
fn probability_is_selection_independent() {
    let params = SimParams::from_detuning(0.2, 0.1, 0.5).unwrap();
    let reference = ode_flip(&params, 1.0);
    for sel in ExponentSelection::ALL {
        let p = flip_probability_heun(1.0, &params, sel).unwrap();
        assert!(
            (p - reference).abs() < 1e-6,
            "selection {sel}: {p} vs {reference}"
        );
    }
}

#[test]
fn fuchsian_identities_for_all_selections() {
    for k in [0.1, 0.45, 0.8, 0.95] {
        for delta in [-0.7, -0.2, 0.0, 0.13, 0.9] {
            let params = SimParams::from_detuning(0.3, delta, k).unwrap();
            let c = algebraic_coefficients(&params).unwrap();
            assert!((c.c[0] + c.c[1] + c.c[2]).abs() < 1e-12);
            let ex = indicial_exponents(&params);
            for sel in ExponentSelection::ALL {
                let d = heun_parameters(&params, sel).unwrap();
                assert!(d.fuchs_defect() < 1e-12);
                for (i, rho) in [ex.p(sel.p), ex.q(sel.q), ex.r(sel.r)]
                    .into_iter()
                    .enumerate()
                {
                    assert!(c.indicial_at(i, rho).abs() < 1e-12);
                }
            }
        }
    }
}

/// `sn(u + iv, k)` from the addition theorem with real-argument factors.
fn complex_sn(u: f64, v: f64, k: f64) -> Complex64 {
    let kp = (1.0 - k * k).sqrt();
    let a = jacobi(u, k).unwrap();
    let b = jacobi(v, kp).unwrap();
    let den = b.cn * b.cn + k * k * a.sn * a.sn * b.sn * b.sn;
    Complex64::new(a.sn * b.dn, a.cn * a.dn * b.sn * b.cn) / den
}

#[test]
fn z_is_squared_half_shifted_sn() {
    for k in [0.3f64, 0.6, 0.9] {
        let kp = (1.0 - k * k).sqrt();
        let big_kp = ellipspin::complete_k(kp).unwrap();
        for tau in [0.0, 0.4, 1.7, 3.3, -2.0] {
            let s = complex_sn(tau / 2.0, -big_kp / 2.0, k);
            let z = z_of_tau(tau, k).unwrap();
            assert!((z - s * s).norm() < 1e-12, "k={k} tau={tau}");
            assert!((shifted_half_sn(tau, k).unwrap() - s).norm() < 1e-12);
        }
    }
}

#[test]
fn heun_matches_ode_on_longer_paths() {
    for (k, delta, h) in [(0.9, 0.2, 0.3), (0.15, -0.3, 0.1), (0.6, 0.35, 0.45)] {
        let params = SimParams::from_detuning(h, delta, k).unwrap();
        for tau in [5.0, 10.0] {
            let heun = flip_probability_heun(tau, &params, ExponentSelection::default()).unwrap();
            let ode = ode_flip(&params, tau);
            assert!(
                (heun - ode).abs() < 1e-6,
                "k={k} delta={delta} tau={tau}: {heun} vs {ode}"
            );
        }
    }
}
