use std::sync::OnceLock;

use super::*;

fn family() -> &'static FamilySpec {
    static F: OnceLock<FamilySpec> = OnceLock::new();
    F.get_or_init(|| build_family(&Params::defaults(), &ProfileKnobs::default(), &FamilyKnobs::default()).unwrap())
}

fn model() -> &'static SphereModel {
    &family().model
}

#[test]
fn default_model_passes_with_positive_margins() {
    let m = model();
    assert!(m.pass());
    for c in &m.conditions {
        assert!(c.pass && c.margin > c.tolerance, "{}", c.summary());
        assert!(c.samples > 0, "{}", c.name);
    }
}

#[test]
fn perturbed_model_passes() {
    let m = build_m1(&Params::perturbed(), &ProfileKnobs::default()).unwrap();
    assert!(m.pass());
}

#[test]
fn chain_of_germ_constants() {
    let p = Params::defaults();
    assert!(1.0 < p.c2 && p.c2 < p.s * p.rho1 && p.s * p.rho1 < p.c1 && p.c1 < p.rho2);
}

#[test]
fn steep_f2_is_an_endpoint_slope_error() {
    let k = ProfileKnobs {
        eps2: 0.02,
        ..ProfileKnobs::default()
    };
    match build_m1(&Params::defaults(), &k) {
        Err(Error::Feasibility(msg)) => assert!(msg.contains("endpoint slope"), "{msg}"),
        other => panic!("expected feasibility error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn flat_f2_germ_is_rejected() {
    let k = ProfileKnobs {
        eps2: 1e-4,
        ..ProfileKnobs::default()
    };
    assert!(matches!(build_m1(&Params::defaults(), &k), Err(Error::Feasibility(_))));
}

#[test]
fn contact_tags_are_negative_for_every_piece() {
    let tags = model().contact_tags().unwrap();
    assert_eq!(tags.len(), 3);
    for (piece, tag, margin) in tags {
        assert_eq!(tag, ContactTag::NegativeContact, "{}", piece.tag());
        assert!(margin > 0.0);
    }
    assert_eq!(Piece::H2.oriented(ContactTag::PositiveContact), ContactTag::NegativeContact);
    assert_eq!(Piece::H1.oriented(ContactTag::PositiveContact), ContactTag::PositiveContact);
}

#[test]
fn samples_stay_in_the_complement() {
    let p = Params::defaults();
    let s = sample_m1(model(), 3000, 11).unwrap();
    assert!(s.iter().all(|q| in_complement_c(&p, &q.point)));
}

#[test]
fn sampler_rejects_tiny_n() {
    assert!(sample_m1(model(), 10, 0).is_err());
}

#[test]
fn area_proportions_match() {
    let m = model();
    let frac = area_fractions(m);
    assert!((frac.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let s = sample_m1(m, 20000, 3).unwrap();
    let plain: Vec<_> = s.iter().filter(|q| !q.seam).collect();
    for (i, piece) in [Piece::H1, Piece::S, Piece::H2].iter().enumerate() {
        let got = plain.iter().filter(|q| q.piece == *piece).count() as f64 / plain.len() as f64;
        assert!((got / frac[i] - 1.0).abs() < 0.2, "{} {got} vs {}", piece.tag(), frac[i]);
    }
    assert!(s.iter().any(|q| q.seam));
}

#[test]
fn samples_lie_on_their_profiles() {
    let m = model();
    for q in sample_m1(m, 4000, 5).unwrap() {
        let (a, b) = (q.point.z1.norm(), q.point.z2.norm());
        match q.piece {
            Piece::H1 | Piece::H2 => {
                let prof = if q.piece == Piece::H1 { &m.f1.profile } else { &m.f2.profile };
                let want = if b > 0.0 {
                    prof.log_eval_ext(b.ln()).0.exp()
                } else {
                    prof.log_eval_ext(f64::NEG_INFINITY).0.exp()
                };
                assert!((a - want).abs() < 1e-10);
            }
            Piece::S => {
                let want = (-m.htilde.eval(a.ln()).0).exp();
                assert!((b - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn h1_near_binding_follows_the_germ() {
    let m = model();
    let p = &m.params;
    for r in [1e-3, 1e-2, 0.05] {
        let v = m.f1.profile.log_eval_ext(f64::ln(r)).0.exp();
        assert!((v - (p.c1 + m.knobs.eps1 * r * r)).abs() < 1e-12);
        let w = m.f2.profile.log_eval_ext(f64::ln(r)).0.exp();
        assert!((w - (p.c2 - m.knobs.eps2 * r * r)).abs() < 1e-12);
    }
}

#[test]
fn corners_are_avoided() {
    let c = corner_distance(model()).unwrap();
    assert!(c.pass && c.margin > 1e-3);
}

#[test]
fn sixteen_nested_slices() {
    let f = family();
    assert_eq!(f.taus.len(), 16);
    assert_eq!(*f.taus.last().unwrap(), 1.0);
    assert!(f.taus.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(f.slices.len(), 17);
    assert!(f.slices.iter().all(|s| s.pass()));
    assert!(f.nesting.pass && f.nesting.samples > 0);
}

#[test]
fn unit_slice_is_m1() {
    let f = family();
    let m = &f.model;
    let e = f.slice_ends(1.0).unwrap();
    let (a, b) = (e.problem, m.htilde.problem);
    for (u, v) in [(a.left, b.left), (a.right, b.right)] {
        assert!((u.x - v.x).abs() < 1e-9 && (u.value - v.value).abs() < 1e-9 && (u.deriv - v.deriv).abs() < 1e-7);
    }
    assert!((e.weights.0 - m.htilde.weights.0).abs() < 1e-6 * m.htilde.weights.0.abs().max(1.0));
    assert!((e.weights.1 - m.htilde.weights.1).abs() < 1e-6 * m.htilde.weights.1.abs().max(1.0));
    for x in interior_grid(a.left.x, a.right.x, 50) {
        assert!((f.htilde(&e, x).0 - m.htilde.eval(x).0).abs() < 1e-7);
    }
    for r in [0.0, 0.1, 0.5] {
        assert_eq!(f.f1_tau(1.0, r), m.params.c1 + m.knobs.eps1 * r * r);
    }
}

#[test]
fn frozen_slices_are_a_foliation_error() {
    let fk = FamilyKnobs {
        share1: 0.0,
        share2: 0.0,
        ..FamilyKnobs::default()
    };
    let e = build_family(&Params::defaults(), &ProfileKnobs::default(), &fk).unwrap_err();
    assert!(matches!(e, Error::Foliation { .. }), "{e:?}");
}

#[test]
fn bad_family_knobs_are_config_errors() {
    for fk in [
        FamilyKnobs { n_tau: 4, ..FamilyKnobs::default() },
        FamilyKnobs { tau_max: 1.0, ..FamilyKnobs::default() },
    ] {
        let e = build_family(&Params::defaults(), &ProfileKnobs::default(), &fk).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}

#[test]
fn gamma_recovers_tau() {
    let f = family();
    for &tau in &[0.25, 0.5, 0.8125, 1.0, 1.03] {
        for piece in [Piece::H1, Piece::S, Piece::H2] {
            let pts = piece_grid(f, tau, piece, 20).unwrap();
            assert!(!pts.is_empty());
            for q in pts {
                let g = f.gamma_at(&q).unwrap();
                assert!((g - tau).abs() < 1e-8, "{} tau {tau} got {g}", piece.tag());
            }
        }
    }
}

#[test]
fn gamma_monotone_along_rays() {
    let f = family();
    let (r, z2) = (0.3, polar(0.3, 0.7));
    // deeper into the non-compact side lowers γ
    let ray = |from: f64, to: f64| -> Vec<f64> {
        interior_grid(from, to, 20)
            .into_iter()
            .map(|m| f.gamma_h(polar(m, 0.2), z2).unwrap().0)
            .collect()
    };
    assert!(ray(f.f1_tau(1.02, r), f.f1_tau(0.3, r)).windows(2).all(|w| w[1] < w[0]));
    assert!(ray(f.f2_tau(1.02, r), f.f2_tau(0.3, r)).windows(2).all(|w| w[1] < w[0]));
    let (x1, x2) = f.model.s_range();
    let x = 0.5 * (x1 + x2);
    let y = |t: f64| f.htilde(&f.slice_ends(t).unwrap(), x).0;
    let g: Vec<f64> = interior_grid(y(1.02), y(0.3), 20).into_iter().map(|v| f.gamma_s(x, v).unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn gamma_outside_the_collar() {
    let f = family();
    let p = f.params();
    let far = f.gamma_h(polar(p.c1 + 0.5 * (p.rho2 - p.c1), 0.0), polar(0.1, 0.0));
    assert!(matches!(far, Err(Error::OutOfFoliation(_))));
    let (x1, _) = f.model.s_range();
    assert!(matches!(f.gamma_s(x1 - 1.0, p.rho1.ln() - 1e-3), Err(Error::OutOfFoliation(_))));
    let w = ChartPoint::new(Chart::ChartWAnnulus, polar(1.0, 0.0), polar(1.0, 0.0));
    assert!(f.gamma_at(&w).is_err());
}

fn suite(p: &Params) -> FamilyReport {
    run_family_suite(p, &ProfileKnobs::default(), &FamilyKnobs::default(), &VerifyKnobs::default(), 7)
}

#[test]
fn default_suite_passes() {
    let rep = suite(&Params::defaults());
    assert!(rep.error.is_none(), "{:?}", rep.error);
    for c in rep.certificates() {
        assert!(c.pass, "{}", c.summary());
    }
    assert!(rep.pass);
    let lam = rep.lambda.as_ref().unwrap();
    assert!(lam.certified_lambda >= lam.lambda && lam.lambda > 0.0);
    let pc = rep.pseudoconcavity.as_ref().unwrap();
    assert!(pc.notes.iter().any(|n| n.starts_with("0 profile/Levi")));
}

#[test]
fn perturbed_suite_passes() {
    let rep = suite(&Params::perturbed());
    assert!(rep.pass, "{:?}", rep.error);
    assert!(rep.binding.unwrap().pass && rep.pages.unwrap().pass && rep.span.unwrap().pass);
}

#[test]
fn reversed_orientation_flips_every_sign() {
    let f = family();
    let lam = lambda_search(f, &VerifyKnobs::default()).unwrap().certified_lambda;
    let s = verification_samples(f, 400, 9).unwrap();
    let fwd = pseudoconcavity_check(f, lam, &s, false).unwrap();
    let rev = pseudoconcavity_check(f, lam, &s, true).unwrap();
    assert!(fwd.pass && rev.pass);
    assert_eq!(fwd.samples, rev.samples);
    for c in [&fwd, &rev] {
        assert!(c.notes.iter().any(|n| n.starts_with("0 profile/Levi")));
    }
}

#[test]
fn page_positivity_needs_the_quadratic_growth() {
    let fk = FamilyKnobs {
        eta1_ratio: 0.0,
        ..FamilyKnobs::default()
    };
    let rep = run_family_suite(&Params::defaults(), &ProfileKnobs::default(), &fk, &VerifyKnobs::default(), 7);
    assert!(!rep.pages.unwrap().pass);
    assert!(!rep.pass);
}
