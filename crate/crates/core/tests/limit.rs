use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use quadwalk_core::coin::{CoinParams, ReducedCoinParams};
use quadwalk_core::genfunc::GenfuncScalars;
use quadwalk_core::limit::{
    density_rows, empirical_rescaled_stats, f_h_cdf, f_h_density, fourier_hat_alpha, integrate_against_f_h,
    theorem1_asymptotic, theorem2_density, time_averaged_probability, v_pm, write_density_csv, AssumptionFlags,
    ThetaChoice, Theorem1Params, Theorem2Params,
};
use quadwalk_core::reduction::InitialPsi;
use quadwalk_core::walk::{build_walk, evolve, Mode, Model};
use quadwalk_core::C64;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn params(coin: &CoinParams, psi: Vec<C64>, flags: AssumptionFlags) -> Theorem1Params {
    let k = psi.len();
    let r = ReducedCoinParams::grover_default(k).unwrap();
    let psi = InitialPsi::new(psi, coin.ctilde).unwrap();
    Theorem1Params::new(coin, &r, &psi, flags).unwrap()
}

fn hadamard_params() -> Theorem1Params {
    params(&CoinParams::hadamard(c(1.0)).unwrap(), vec![c(1.0), c(0.0)], AssumptionFlags::default())
}

#[test]
fn f_h_examples() {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    assert_abs_diff_eq!(f_h_density(0.0, a).unwrap(), std::f64::consts::FRAC_1_PI, epsilon = 1e-15);
    assert_eq!(f_h_density(a, a).unwrap(), 0.0);
    assert_eq!(f_h_density(-0.1, a).unwrap(), 0.0);
    assert!(f_h_density(a - 1e-12, a).unwrap() > 1e4);
    assert!(f_h_density(0.1, 0.0).is_err());
    assert!(f_h_density(0.1, 1.0).is_err());
    for m in [0.3, a, 0.9] {
        let total = integrate_against_f_h(|_| 1.0, m, 1e-10).unwrap();
        assert_abs_diff_eq!(total, 0.5, epsilon = 1e-9);
        let want = (1.0 - m * m).sqrt() / (std::f64::consts::PI * m);
        assert_abs_diff_eq!(f_h_density(0.0, m).unwrap(), want, epsilon = 1e-12);
    }
}

#[test]
fn f_h_cdf_matches_quadrature() {
    let m = 0.6;
    for x in [0.1, 0.3, 0.55, 0.599] {
        let q = integrate_against_f_h(|u| if u <= x { 1.0 } else { 0.0 }, m, 1e-12).unwrap();
        // the step integrand converges slowly; compare on a coarse tolerance
        assert_abs_diff_eq!(q, f_h_cdf(x, m), epsilon = 1e-6);
    }
    assert_eq!(f_h_cdf(0.7, m), 0.5);
}

#[test]
fn theorem1_hadamard_record() {
    let p = hadamard_params();
    // c² / c̃² = 1/2, so φ = 0 and cos φ = 1 > |c²|
    assert_abs_diff_eq!(p.phi, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(p.k_plus, 2.25, epsilon = 1e-14);
    assert_abs_diff_eq!(p.k_minus, 0.25, epsilon = 1e-14);
    let rec = theorem1_asymptotic(10, 0, 0, 0, &p).unwrap();
    assert_eq!(rec.indicators, [false, true, false]);
    assert!(!rec.boundary);
    assert_abs_diff_eq!(rec.value, rec.l_p, epsilon = 1e-15);
    assert_eq!(theorem1_asymptotic(10, 0, 1, 0, &p).unwrap().value, 0.0);
    assert!(theorem1_asymptotic(10, 2, 0, 0, &p).is_err());
    assert!(theorem1_asymptotic(10, 0, -1, 0, &p).is_err());
}

#[test]
fn theorem1_spatial_decay_and_symmetry() {
    let coin = CoinParams::from_angles(0.3, -0.2, 0.9, 0.7, C64::from_polar(1.0, 0.4)).unwrap();
    let p = params(&coin, vec![c(0.6), C64::new(0.0, 0.8)], AssumptionFlags::default());
    for plus in [true, false] {
        let kk = if plus { p.k_plus } else { p.k_minus };
        let ratio = (p.a_abs.powi(4) / kk).powi(2);
        for (x, y) in [(1, 1), (2, 1), (3, 4)] {
            let lo = p.gamma_pm(x, y, plus);
            let hi = p.gamma_pm(x + 1, y + 1, plus);
            assert_abs_diff_eq!(hi / lo, ratio, epsilon = 1e-12);
        }
    }
    for t in [5, 50] {
        for (x, y) in [(0, 2), (1, 3), (4, 0)] {
            let a = theorem1_asymptotic(t, 1, x, y, &p).unwrap();
            let b = theorem1_asymptotic(t, 1, y, x, &p).unwrap();
            assert_eq!(a.value, b.value);
        }
    }
}

#[test]
fn uniform_psi_kills_the_plus_term() {
    let s = 1.0 / 3f64.sqrt();
    let p = params(&CoinParams::hadamard(c(1.0)).unwrap(), vec![c(s); 3], AssumptionFlags::default());
    for r in 0..3 {
        let rec = theorem1_asymptotic(7, r, 2, 2, &p).unwrap();
        assert_abs_diff_eq!(rec.l_p, 0.0, epsilon = 1e-15);
    }
}

#[test]
fn indicator_boundary_is_flagged() {
    // |c|² = 1/2 and φ = 0 put cos φ = 1; choose c̃ so that cos φ = |c²|
    let ct = C64::from_polar(1.0, -0.5 * (0.5f64).acos());
    let coin = CoinParams::hadamard(ct).unwrap();
    let p = params(&coin, vec![c(1.0), c(0.0)], AssumptionFlags::default());
    let rec = theorem1_asymptotic(3, 0, 0, 0, &p).unwrap();
    assert!(rec.boundary);
    assert!(rec.assumption_flags.iter().any(|f| f == "indicator_boundary"));
}

#[test]
fn theorem2_point_mass_and_support() {
    let coin = CoinParams::hadamard(c(1.0)).unwrap();
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let t2 = Theorem2Params::new(hadamard_params(), &r, &coin);
    assert_eq!(t2.c_m, 0.0);
    assert_eq!(t2.point_mass(0), t2.c_p[0]);
    assert!(t2.c_p.iter().all(|v| *v >= 0.0));
    let rec = theorem2_density(0.8, 0.1, 0, &t2).unwrap();
    assert_eq!(rec.continuous, 0.0);
    let rec = theorem2_density(0.2, 0.3, 1, &t2).unwrap();
    assert!(rec.continuous.is_finite());
    assert!(t2.total_mass(0).unwrap().is_finite());
    let rows = density_rows(&t2, 0, 10).unwrap();
    let mut buf = Vec::new();
    write_density_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x,f_H,C_d,rho_w\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn theta_flag_changes_only_gamma2() {
    let coin = CoinParams::from_angles(0.3, -0.2, 0.9, 0.7, C64::from_polar(1.0, 0.4)).unwrap();
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let psi = vec![c(0.6), c(0.8)];
    let a = Theorem2Params::new(params(&coin, psi.clone(), AssumptionFlags::default()), &r, &coin);
    let flags = AssumptionFlags { theta: ThetaChoice::Zero, ..Default::default() };
    let b = Theorem2Params::new(params(&coin, psi, flags), &r, &coin);
    assert_eq!(a.gamma1(0.2), b.gamma1(0.2));
    assert_eq!(a.gamma3(0.2), b.gamma3(0.2));
    assert!((a.gamma2(0.2) - b.gamma2(0.2)).norm() > 1e-6);
    assert!(b.base.flags.labels().contains(&"theta:=0".to_string()));
}

#[test]
fn v_pm_roots() {
    let p = CoinParams::hadamard(c(1.0)).unwrap();
    let delta = p.delta();
    for (sx, sy) in [(0.0, 0.0), (0.4, -1.1), (2.0, 0.3)] {
        let [vp, vm] = v_pm(sx, sy, &p);
        let a2 = p.a * p.a;
        let em = C64::from_polar(1.0, -(sx + sy));
        let lead = a2 * em + a2.conj() * delta * em.conj();
        let disc = (a2 * em + a2.conj() * em.conj()).powi(2) - delta * 4.0;
        let prod = (lead * lead - disc) / (delta * delta * 4.0);
        assert_abs_diff_eq!((vp * vm - prod).norm(), 0.0, epsilon = 1e-14);
        // both solve Δ v² − lead v + Δ·prod = 0
        for v in [vp, vm] {
            assert!((delta * v * v - lead * v + delta * prod).norm() < 1e-13);
        }
    }
    // Hadamard at s = 0: a² = 1/2, Δ = −1, so the leading term cancels and v_± = ±√5/2
    let [vp, vm] = v_pm(0.0, 0.0, &p);
    assert_abs_diff_eq!((vp - c(-(5f64.sqrt()) / 2.0)).norm(), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!((vp * vm - c(-1.25)).norm(), 0.0, epsilon = 1e-14);
}

#[test]
fn fourier_amplitudes() {
    let coin = CoinParams::from_angles(0.3, -0.2, 0.9, 0.7, C64::from_polar(1.0, 0.4)).unwrap();
    let s = GenfuncScalars::new(coin);
    let z = c(0.2 * s.r1);
    let a0 = fourier_hat_alpha(0.3, 0.5, z, 0.0, &s).unwrap();
    let a1 = fourier_hat_alpha(0.3, 0.5, z, 1.0, &s).unwrap();
    assert_eq!(a0[1], a0[3]);
    // Left and Down scale by (c̃² s μ + 1); Right and Up do not depend on s
    let factor = coin.ctilde * coin.ctilde * s.mu(z).unwrap() + 1.0;
    assert_abs_diff_eq!((a1[0] - a0[0] * factor).norm(), 0.0, epsilon = 1e-12 * a0[0].norm().max(1.0));
    assert_abs_diff_eq!((a1[2] - a0[2] * factor).norm(), 0.0, epsilon = 1e-12 * a0[2].norm().max(1.0));
    assert_eq!(a0[1], a1[1]);
}

#[test]
fn time_average_and_rescaled_stats() {
    let coin = CoinParams::hadamard(c(1.0)).unwrap();
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(Model::Joined(2), coin, r, Mode::Unitarized, &[c(1.0), c(0.0)]).unwrap();
    let sites = [(0, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1)];
    let avg = time_averaged_probability(&spec, &sites, &[(10, 20), (20, 30)]).unwrap();
    for w in &avg {
        for v in [w.mean, w.even_mean, w.odd_mean] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert_abs_diff_eq!(w.mean, (6.0 * w.even_mean + 5.0 * w.odd_mean) / 11.0, epsilon = 1e-14);
    }
    assert!(time_averaged_probability(&spec, &sites, &[(5, 4)]).is_err());
    assert!(time_averaged_probability(&spec, &sites, &[(0, 4)]).is_err());

    let s = evolve(&spec, 40).unwrap();
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let st = empirical_rescaled_stats(&s, None, a, a + 0.05).unwrap();
    assert_abs_diff_eq!(st.origin_mass + st.off_origin_mass, 1.0, epsilon = 1e-10);
    assert!(st.marginal_x.iter().all(|(u, p)| (0.0..=1.0).contains(u) && *p >= 0.0));
    assert!(st.kolmogorov_x >= 0.0 && st.kolmogorov_x <= 1.0);
    assert!(st.quantile_99 <= 1.0);
    let one = empirical_rescaled_stats(&s, Some(0), a, a + 0.05).unwrap();
    assert!(one.off_origin_mass <= st.off_origin_mass);
    assert!(empirical_rescaled_stats(&spec.initial, None, a, 0.75).is_err());
}

proptest! {
    #[test]
    fn f_h_nonnegative_and_cdf_monotone(m in 0.05f64..0.95, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        prop_assert!(f_h_density(u, m).unwrap() >= 0.0);
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        prop_assert!(f_h_cdf(lo, m) <= f_h_cdf(hi, m) + 1e-15);
    }
}
