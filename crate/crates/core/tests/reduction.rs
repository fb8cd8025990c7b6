use approx::assert_abs_diff_eq;
use quadwalk_core::coin::{CoinParams, ReducedCoinParams};
use quadwalk_core::reduction::{
    direct_event_probability, lambda_apply, lemma2_check, lift_initial, origin_table_residual, quarter_vs_star,
    reduced_star_initial, reduction_check, InitialPsi, LiftBranch, OriginExit, Reduction,
};
use quadwalk_core::walk::{build_walk, step, BasisLabel, Chirality, Mode, Model, Sector, Site, StateVector};
use quadwalk_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_psi(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn random_coin(rng: &mut ChaCha8Rng) -> CoinParams {
    CoinParams::from_angles(
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(0.1..1.45),
        C64::from_polar(1.0, rng.random_range(-3.0..3.0)),
    )
    .unwrap()
}

#[test]
fn psi_prime_examples() {
    let p = InitialPsi::new(vec![c(1.0), c(0.0)], c(1.0)).unwrap();
    assert_eq!(p.psi_prime(), &[c(0.0), c(1.0)]);
    let ct = C64::from_polar(1.0, 0.7);
    let p = InitialPsi::new(vec![c(1.0)], ct).unwrap();
    assert_abs_diff_eq!((p.psi_prime()[0] - ct).norm(), 0.0, epsilon = 1e-15);
    assert!(InitialPsi::new(vec![c(1.0), c(1.0)], c(1.0)).is_err());
    assert!(InitialPsi::new(vec![], c(1.0)).is_err());
}

#[test]
fn lifted_state_norm_is_k() {
    let psi = InitialPsi::new(vec![c(0.6), c(0.0), c(0.8)], c(1.0)).unwrap();
    for branch in [LiftBranch::Horizontal, LiftBranch::Vertical] {
        let l = lift_initial(&psi, Mode::Literal, branch).unwrap();
        assert_abs_diff_eq!(l.norm_sqr(), 3.0, epsilon = 1e-15);
    }
}

#[test]
fn lambda_reproduces_first_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let coin = random_coin(&mut rng);
    for mode in [Mode::Literal, Mode::Unitarized] {
        let v = random_psi(&mut rng, 3);
        let psi = InitialPsi::new(v.clone(), coin.ctilde).unwrap();
        let r = ReducedCoinParams::grover_default(3).unwrap();
        let spec = build_walk(Model::Joined(3), coin, r, mode, &v).unwrap();
        let direct = step(&spec, &spec.initial).unwrap();
        let lifted = lift_initial(&psi, mode, LiftBranch::Both).unwrap();
        let got = lambda_apply(&lifted.lambda, &lifted.states).unwrap();
        assert!(direct.max_abs_diff(&got).unwrap() < 1e-15);
    }
}

#[test]
fn lambda_rejects_dimension_mismatch() {
    let psi = InitialPsi::new(vec![c(1.0), c(0.0)], c(1.0)).unwrap();
    let l = lift_initial(&psi, Mode::Literal, LiftBranch::Both).unwrap();
    assert!(lambda_apply(&[c(1.0)], &l.states).is_err());
}

#[test]
fn lemma2_holds_for_random_psi() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coin = random_coin(&mut rng);
    for k in 1..=3 {
        let psi = InitialPsi::new(random_psi(&mut rng, k), coin.ctilde).unwrap();
        let rep = lemma2_check(coin, &psi, Mode::Literal, 20).unwrap();
        assert!(rep.max_deviation < 1e-10, "k = {k}: {}", rep.max_deviation);
    }
}

#[test]
fn first_step_event_concentrates_on_copy_one() {
    let coin = CoinParams::hadamard(c(1.0)).unwrap();
    let psi = InitialPsi::new(vec![c(1.0), c(0.0)], c(1.0)).unwrap();
    let red = Reduction::new(coin, ReducedCoinParams::grover_default(2).unwrap(), Mode::Unitarized);
    let s = red.initial().unwrap();
    let table = red.event_table(&s, psi.psi_prime());
    assert!(table.rows.iter().all(|e| e.r == 1));
    assert_abs_diff_eq!(table.total(), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(table.get(1, 1, 0), 0.5, epsilon = 1e-14);
}

#[test]
fn reduction_matches_joined_walk() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for mode in [Mode::Literal, Mode::Unitarized] {
        for k in 1..=4 {
            let coin = random_coin(&mut rng);
            let psi = InitialPsi::new(random_psi(&mut rng, k), coin.ctilde).unwrap();
            let rep = reduction_check(coin, &psi, mode, 15).unwrap();
            assert!(rep.max_amplitude_deviation < 1e-12, "{mode:?} k={k}: {rep:?}");
            assert!(rep.max_event_deviation < 1e-12);
            assert!(rep.max_origin_identity_deviation < 1e-12);
            if mode == Mode::Unitarized {
                assert!(rep.max_total_mass_deviation < 1e-12);
            }
        }
    }
}

#[test]
fn step_invariance_of_own_other_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for mode in [Mode::Literal, Mode::Unitarized] {
        for k in [1usize, 2, 3, 5] {
            let coin = random_coin(&mut rng);
            let red = Reduction::new(coin, ReducedCoinParams::grover_default(k).unwrap(), mode);
            // random state: origin labels plus the generic rows around (2,3)
            // and the axis sites
            let mut s = StateVector::zeros(red.layout());
            let layout = red.layout();
            for i in 0..layout.origin_dim() {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                s.set(Site::Origin, layout.origin_label(i), z).unwrap();
            }
            for (x, y) in [(2, 3), (1, 0), (0, 1), (0, 2), (3, 0), (1, 1)] {
                for m in Sector::ALL {
                    for l in Chirality::ALL {
                        let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                        s.set(Site::lattice(0, x, y), BasisLabel::Sectored(m, l), z).unwrap();
                    }
                }
            }
            let res = red.step_invariance_residual(&s).unwrap();
            assert!(res < 1e-12, "{mode:?} k={k}: {res}");
        }
    }
}

#[test]
fn origin_table_matches_coin_at_one_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 1..=5 {
        let coin = random_coin(&mut rng);
        let r = ReducedCoinParams::grover_default(k).unwrap();
        assert!(origin_table_residual(coin, r, OriginExit::OneZero).unwrap() < 1e-12);
    }
    // read at (0,1) the Right component is empty
    let coin = CoinParams::hadamard(c(1.0)).unwrap();
    let r = ReducedCoinParams::grover_default(3).unwrap();
    assert!(origin_table_residual(coin, r, OriginExit::ZeroOne).unwrap() > 0.1);
}

#[test]
fn star_initial_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for k in 1..=6 {
        let coin = random_coin(&mut rng);
        let r = ReducedCoinParams::grover_default(k).unwrap();
        let s = reduced_star_initial(&coin, &r);
        assert!(s.residual < 1e-14, "k = {k}");
        assert!(s.psi0.norm().is_finite());
    }
    let ct = C64::from_polar(1.0, 0.3);
    let coin = CoinParams::hadamard(ct).unwrap();
    let r = ReducedCoinParams::new(1, 1.0, 0.0).unwrap();
    let s = reduced_star_initial(&coin, &r);
    for i in 0..16 {
        let want = if i == 0 { c(1.0) / (ct * ct) } else { c(0.0) };
        assert_abs_diff_eq!((s.psi0[i] - want).norm(), 0.0, epsilon = 1e-15);
    }
}

#[test]
fn quarter_plane_agrees_with_k1_star() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let coin = random_coin(&mut rng);
    assert!(quarter_vs_star(coin, 30).unwrap() < 1e-10);
}

#[test]
fn direct_and_reduced_event_routes_on_off_origin_sites() {
    let coin = CoinParams::hadamard(c(1.0)).unwrap();
    let v = vec![c(0.6), C64::new(0.0, 0.8)];
    let psi = InitialPsi::new(v.clone(), c(1.0)).unwrap();
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let red = Reduction::new(coin, r, Mode::Unitarized);
    let spec = build_walk(Model::Joined(2), coin, r, Mode::Unitarized, &v).unwrap();
    let mut direct = step(&spec, &spec.initial).unwrap();
    let star_spec = red.spec(red.initial().unwrap()).unwrap();
    let mut star = star_spec.initial.clone();
    for _ in 0..9 {
        direct = step(&spec, &direct).unwrap();
        star = step(&star_spec, &star).unwrap();
    }
    for rr in 0..2 {
        for x in 0..10 {
            for y in 0..10 {
                let d = direct_event_probability(&direct, rr, x, y);
                let e = red.event_probability(&star, psi.psi_prime(), rr, x, y);
                assert_abs_diff_eq!(d, e, epsilon = 1e-13);
                assert!(e >= 0.0);
            }
        }
    }
}
