use approx::assert_abs_diff_eq;
use quadwalk_core::coin::{CoinParams, ReducedCoinParams};
use quadwalk_core::walk::{
    apply_coin, build_walk, distribution, evolve, evolve_with_audit, shift, step,
    write_snapshot_jsonl, Axis, BasisLabel, BouncePolicy, Chirality, Layout, Mode, Model, Sector,
    Site, StateVector, Trajectory, WalkSpec,
};
use quadwalk_core::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn hadamard() -> CoinParams {
    CoinParams::hadamard(c(1.0)).unwrap()
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

fn random_psi(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn lattice(copy: usize, x: i64, y: i64) -> Site {
    Site::lattice(copy, x, y)
}

fn chir(c: Chirality) -> BasisLabel {
    BasisLabel::Chirality(c)
}

#[test]
fn rejects_bad_initial_vectors() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let err = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Literal,
        &[c(1.0), c(1.0)],
    );
    assert!(matches!(err, Err(Error::NotNormalized(_))));
    assert!(build_walk(Model::Joined(0), hadamard(), r, Mode::Literal, &[]).is_err());
    assert!(build_walk(Model::Joined(2), hadamard(), r, Mode::Literal, &[c(1.0)]).is_err());
}

#[test]
fn unitarized_joined_one_origin_coin_is_swap() {
    let r = ReducedCoinParams::grover_default(1).unwrap();
    let spec = build_walk(Model::Joined(1), hadamard(), r, Mode::Unitarized, &[c(1.0)]).unwrap();
    let m = spec.origin_matrix();
    assert_eq!(m.nrows(), 2);
    assert_abs_diff_eq!(m[(0, 1)].re, 1.0);
    assert_abs_diff_eq!(m[(0, 0)].norm(), 0.0);
}

#[test]
fn literal_shift_fans_out_origin() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Literal,
        &[c(1.0), c(0.0)],
    )
    .unwrap();
    let s = shift(&spec, &spec.initial).unwrap();
    assert_abs_diff_eq!(s.norm_sqr(), 2.0, epsilon = 1e-15);
    assert_eq!(
        s.get(lattice(0, 1, 0), chir(Chirality::Right)).unwrap(),
        c(1.0)
    );
    assert_eq!(
        s.get(lattice(0, 0, 1), chir(Chirality::Up)).unwrap(),
        c(1.0)
    );
}

#[test]
fn unitarized_quarter_first_step_splits_evenly() {
    let r = ReducedCoinParams::grover_default(1).unwrap();
    let spec = build_walk(Model::Joined(1), hadamard(), r, Mode::Unitarized, &[c(1.0)]).unwrap();
    let d = distribution(&step(&spec, &spec.initial).unwrap());
    assert_abs_diff_eq!(d.get(lattice(0, 1, 0)), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(d.get(lattice(0, 0, 1)), 0.5, epsilon = 1e-15);
    assert_eq!(d.entries.len(), 2);
}

#[test]
fn joined_three_first_step_follows_grover_column() {
    let ct = C64::from_polar(1.0, 0.4);
    let p = CoinParams::hadamard(ct).unwrap();
    let r = ReducedCoinParams::grover_default(3).unwrap();
    let spec = build_walk(
        Model::Joined(3),
        p,
        r,
        Mode::Literal,
        &[c(1.0), c(0.0), c(0.0)],
    )
    .unwrap();
    let s = step(&spec, &spec.initial).unwrap();
    for rr in 0..3 {
        let want = ct * (2.0 / 3.0 - if rr == 0 { 1.0 } else { 0.0 });
        let got = s.get(lattice(rr, 1, 0), chir(Chirality::Right)).unwrap();
        assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-15);
        let got = s.get(lattice(rr, 0, 1), chir(Chirality::Up)).unwrap();
        assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-15);
    }
}

#[test]
fn joined_two_unitarized_first_step_support() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Unitarized,
        &[c(1.0), c(0.0)],
    )
    .unwrap();
    let d = distribution(&step(&spec, &spec.initial).unwrap());
    let sites: Vec<Site> = d.entries.iter().map(|(s, _)| *s).collect();
    for s in &sites {
        assert!(matches!(s.coords(), (Some(_), 1, 0) | (Some(_), 0, 1)));
    }
    assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-14);
}

fn star_spec(k: usize, p: CoinParams, mode: Mode) -> WalkSpec {
    let r = ReducedCoinParams::grover_default(k).unwrap();
    let s = StateVector::zeros(Layout::new(Model::ReducedStar, mode).unwrap());
    WalkSpec::from_state(p, r, s).unwrap()
}

#[test]
fn reduced_star_interior_right_row() {
    let p = CoinParams::from_angles(0.2, 0.5, -0.3, 0.8, c(1.0)).unwrap();
    let spec = star_spec(3, p, Mode::Literal);
    for m in Sector::ALL {
        let mut s = StateVector::zeros(spec.layout());
        s.set(
            lattice(0, 3, 2),
            BasisLabel::Sectored(m, Chirality::Right),
            c(1.0),
        )
        .unwrap();
        let n = step(&spec, &s).unwrap();
        let at = |x, y, l| n.get(lattice(0, x, y), BasisLabel::Sectored(m, l)).unwrap();
        assert_eq!(at(2, 2, Chirality::Left), p.a * p.b);
        assert_eq!(at(4, 2, Chirality::Right), p.a * p.d);
        assert_eq!(at(3, 1, Chirality::Down), p.b * p.c);
        assert_eq!(at(3, 3, Chirality::Up), p.c * p.d);
        assert_eq!(n.iter_nonzero().count(), 4);
    }
}

#[test]
fn reduced_star_from_listed_initial_state() {
    let p = hadamard();
    let spec = star_spec(2, p, Mode::Literal);
    let mut s = StateVector::zeros(spec.layout());
    s.set(
        lattice(0, 0, 1),
        BasisLabel::Sectored(Sector::OwnL, Chirality::Right),
        c(1.0),
    )
    .unwrap();
    let n = step(&spec, &s).unwrap();
    let lab = |l| BasisLabel::Sectored(Sector::OwnL, l);
    // the Left component reflects off x = 0 into the paired site
    assert_eq!(
        n.get(lattice(0, 0, 2), lab(Chirality::Right)).unwrap(),
        p.a * p.b
    );
    assert_eq!(
        n.get(lattice(0, 1, 1), lab(Chirality::Right)).unwrap(),
        p.a * p.d
    );
    assert_eq!(
        n.get(Site::Origin, BasisLabel::SectorEpsilon(Sector::OwnL))
            .unwrap(),
        p.b * p.c
    );
    assert_eq!(
        n.get(lattice(0, 0, 2), lab(Chirality::Up)).unwrap(),
        p.c * p.d
    );
}

#[test]
fn evolve_zero_is_identity() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Literal,
        &[c(0.6), c(0.8)],
    )
    .unwrap();
    assert_eq!(evolve(&spec, 0).unwrap(), spec.initial);
}

fn all_models(k: usize) -> Vec<(Model, usize)> {
    vec![
        (Model::Plane, 4),
        (Model::Quarter, 1),
        (Model::Joined(k), k),
        (Model::ReducedStar, 4),
    ]
}

#[test]
fn unitarized_norm_and_parity_random_coins() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in [1usize, 3] {
        let p = random_coin(&mut rng);
        for (model, n) in all_models(k) {
            let rk = if model == Model::Quarter { 1 } else { k };
            let r = ReducedCoinParams::grover_default(rk).unwrap();
            let psi = random_psi(&mut rng, n);
            let spec = build_walk(model, p, r, Mode::Unitarized, &psi).unwrap();
            for st in Trajectory::new(&spec).take(121) {
                let st = st.unwrap();
                assert_abs_diff_eq!(st.norm_sqr(), 1.0, epsilon = 1e-10);
                for (site, _) in st.site_probabilities() {
                    let (_, x, y) = site.coords();
                    assert_eq!((x + y).rem_euclid(2) as u64, st.time() % 2, "{model:?}");
                }
            }
        }
    }
}

#[test]
fn literal_audit_is_reproducible() {
    let r = ReducedCoinParams::grover_default(3).unwrap();
    let psi = [c(0.6), c(0.0), c(0.8)];
    let spec = build_walk(Model::Joined(3), hadamard(), r, Mode::Literal, &psi).unwrap();
    let (s1, a1) = evolve_with_audit(&spec, 40).unwrap();
    let (s2, a2) = evolve_with_audit(&spec, 40).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(a1, a2);
    assert_eq!(a1.len(), 40);
    assert!(a1.iter().any(|a| a.drift().abs() > 1e-6));
}

#[test]
fn shift_is_a_permutation_on_a_window() {
    // every basis element in a 20×20 window maps to a single basis element,
    // and no two map to the same one
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Unitarized,
        &[c(1.0), c(0.0)],
    )
    .unwrap();
    let layout = spec.layout();
    let mut inputs: Vec<(Site, BasisLabel)> = Vec::new();
    for i in 0..layout.origin_dim() {
        inputs.push((Site::Origin, layout.origin_label(i)));
    }
    for copy in 0..2 {
        for x in 0..20 {
            for y in 0..20 {
                if x == 0 && y == 0 {
                    continue;
                }
                for l in Chirality::ALL {
                    inputs.push((lattice(copy, x, y), chir(l)));
                }
            }
        }
    }
    for policy in [BouncePolicy::Paired, BouncePolicy::Bounce] {
        let spec = spec.clone().with_boundary(policy);
        let mut images = std::collections::BTreeSet::new();
        for (site, label) in &inputs {
            let mut s = StateVector::zeros(layout);
            s.set(*site, *label, c(1.0)).unwrap();
            let out = shift(&spec, &s).unwrap();
            let nz: Vec<_> = out.iter_nonzero().collect();
            assert_eq!(nz.len(), 1, "{site:?} {label}");
            assert_eq!(nz[0].2, c(1.0));
            assert!(images.insert((nz[0].0, nz[0].1)));
        }
        assert_eq!(images.len(), inputs.len());
    }
}

#[test]
fn boundary_policies_on_the_axes() {
    let r = ReducedCoinParams::grover_default(1).unwrap();
    let spec = build_walk(Model::Quarter, hadamard(), r, Mode::Literal, &[c(1.0)]).unwrap();
    let mut s = StateVector::zeros(spec.layout());
    s.set(lattice(0, 0, 3), chir(Chirality::Left), c(1.0))
        .unwrap();
    s.set(lattice(0, 4, 0), chir(Chirality::Down), c(2.0))
        .unwrap();
    s.set(lattice(0, 0, 1), chir(Chirality::Left), c(3.0))
        .unwrap();

    let out = shift(&spec, &s).unwrap();
    assert_eq!(spec.boundary, BouncePolicy::Paired);
    assert_eq!(
        out.get(lattice(0, 0, 4), chir(Chirality::Right)).unwrap(),
        c(1.0)
    );
    assert_eq!(
        out.get(lattice(0, 3, 0), chir(Chirality::Up)).unwrap(),
        c(2.0)
    );
    assert_eq!(
        out.get(lattice(0, 0, 2), chir(Chirality::Right)).unwrap(),
        c(3.0)
    );
    assert_eq!(out.iter_nonzero().count(), 3);

    let inplace = spec.clone().with_boundary(BouncePolicy::Bounce);
    let out = shift(&inplace, &s).unwrap();
    assert_eq!(
        out.get(lattice(0, 0, 3), chir(Chirality::Right)).unwrap(),
        c(1.0)
    );
    assert_eq!(
        out.get(lattice(0, 4, 0), chir(Chirality::Up)).unwrap(),
        c(2.0)
    );
    assert_eq!(
        out.get(lattice(0, 0, 1), chir(Chirality::Right)).unwrap(),
        c(3.0)
    );

    let strict = spec.clone().with_boundary(BouncePolicy::Strict);
    assert!(matches!(shift(&strict, &s), Err(Error::UndefinedBasis(_))));
}

#[test]
fn in_place_bounce_breaks_the_parity_law() {
    let r = ReducedCoinParams::grover_default(1).unwrap();
    let spec = build_walk(Model::Quarter, hadamard(), r, Mode::Unitarized, &[c(1.0)])
        .unwrap()
        .with_boundary(BouncePolicy::Bounce);
    let s = evolve(&spec, 3).unwrap();
    assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-14);
    let off_parity = s
        .site_probabilities()
        .filter(|(site, _)| {
            let (_, x, y) = site.coords();
            (x + y) % 2 == 0
        })
        .count();
    assert!(off_parity > 0);
}

#[test]
fn unitarized_origin_routes_by_axis() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Unitarized,
        &[c(1.0), c(0.0)],
    )
    .unwrap();
    let mut s = StateVector::zeros(spec.layout());
    s.set(lattice(1, 1, 0), chir(Chirality::Left), c(1.0))
        .unwrap();
    s.set(lattice(1, 0, 1), chir(Chirality::Down), c(2.0))
        .unwrap();
    let out = shift(&spec, &s).unwrap();
    assert_eq!(
        out.get(Site::Origin, BasisLabel::EpsilonSplit(1, Axis::H))
            .unwrap(),
        c(1.0)
    );
    assert_eq!(
        out.get(Site::Origin, BasisLabel::EpsilonSplit(1, Axis::V))
            .unwrap(),
        c(2.0)
    );
}

#[test]
fn coin_leaves_zero_state_zero() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Literal,
        &[c(1.0), c(0.0)],
    )
    .unwrap();
    let z = StateVector::zeros(spec.layout());
    assert_eq!(apply_coin(&spec, &z).unwrap().norm_sqr(), 0.0);
}

#[test]
fn undefined_basis_elements_are_rejected() {
    let mut s = StateVector::zeros(Layout::new(Model::Joined(2), Mode::Literal).unwrap());
    assert!(s
        .set(lattice(2, 1, 0), chir(Chirality::Up), c(1.0))
        .is_err());
    assert!(s
        .set(lattice(0, 0, 0), chir(Chirality::Up), c(1.0))
        .is_err());
    assert!(s
        .set(lattice(0, -1, 0), chir(Chirality::Up), c(1.0))
        .is_err());
    assert!(s.set(Site::Origin, chir(Chirality::Up), c(1.0)).is_err());
    assert!(s
        .set(Site::Origin, BasisLabel::EpsilonSplit(0, Axis::H), c(1.0))
        .is_err());
    let mut p = StateVector::zeros(Layout::new(Model::Plane, Mode::Literal).unwrap());
    assert!(p.set(Site::Origin, BasisLabel::Epsilon(0), c(1.0)).is_err());
    assert!(p
        .set(lattice(0, -5, 3), chir(Chirality::Up), c(1.0))
        .is_ok());
}

#[test]
fn distribution_serializes() {
    let r = ReducedCoinParams::grover_default(2).unwrap();
    let spec = build_walk(
        Model::Joined(2),
        hadamard(),
        r,
        Mode::Unitarized,
        &[c(1.0), c(0.0)],
    )
    .unwrap();
    let s = evolve(&spec, 4).unwrap();
    let d = distribution(&s);
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("copy,x,y,probability"));
    assert_eq!(lines.count(), d.entries.len());
    assert!(text.lines().all(|l| !l.contains("NaN")));

    let j = d.to_json();
    assert_eq!(j["time"], 4);
    assert_eq!(j["sites"].as_array().unwrap().len(), d.entries.len());

    let mut buf = Vec::new();
    write_snapshot_jsonl(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["copy", "x", "y", "label", "re", "im"] {
            assert!(v.get(key).is_some());
        }
    }
    assert_eq!(text.lines().count(), s.iter_nonzero().count());
}

#[test]
fn probabilities_nonnegative_and_sum_to_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = random_coin(&mut rng);
    let r = ReducedCoinParams::grover_default(3).unwrap();
    let psi = random_psi(&mut rng, 3);
    let spec = build_walk(Model::Joined(3), p, r, Mode::Literal, &psi).unwrap();
    let s = evolve(&spec, 25).unwrap();
    let d = distribution(&s);
    assert!(d.entries.iter().all(|(_, p)| *p >= 0.0));
    assert_abs_diff_eq!(d.total(), s.norm_sqr(), epsilon = 1e-12 * s.norm_sqr());
}
