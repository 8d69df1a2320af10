use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use concavia::atlas::{canonical_rep, map_phi, phi, same_point, z_action, BranchIndex, Params, C64};
use concavia::convexjoin::{solve, EndpointData, JoinProblem};
use concavia::family::{build_family, FamilyKnobs, FamilySpec, Piece};
use concavia::openbook::{conjugation_check, embed_g, q_chart, q_inv, MPoint, Part, TwistSpec};
use concavia::profiles::{classify_contact, ContactTag, Profile, ProfileKnobs, Shape};

fn family() -> &'static FamilySpec {
    static F: OnceLock<FamilySpec> = OnceLock::new();
    F.get_or_init(|| build_family(&Params::defaults(), &ProfileKnobs::default(), &FamilyKnobs::default()).unwrap())
}

fn polar(r: f64, t: f64) -> C64 {
    C64::from_polar(r, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn z_action_is_a_group_action(r1 in 0.2f64..5.0, t1 in -PI..PI, r2 in 0.3f64..0.95, t2 in -PI..PI,
                                 n in -8i64..=8, m in -8i64..=8) {
        let (w1, w2) = (polar(r1, t1), polar(r2, t2));
        let (a1, a2) = z_action(m, w1, w2).unwrap();
        let (b1, b2) = z_action(n, a1, a2).unwrap();
        let (c1, c2) = z_action(n + m, w1, w2).unwrap();
        prop_assert!((b1 - c1).norm() <= 1e-12 * c1.norm());
        prop_assert_eq!(b2, c2);
    }

    #[test]
    fn canonical_rep_is_idempotent_and_in_band(r1 in 0.05f64..20.0, t1 in -PI..PI, r2 in 0.3f64..0.95, t2 in -PI..PI) {
        let (w1, w2) = (polar(r1, t1), polar(r2, t2));
        let (c1, c2, n) = canonical_rep(w1, w2).unwrap();
        let m = c2.norm();
        prop_assert!(c1.norm() >= m.sqrt() * (1.0 - 1e-12) && c1.norm() < (1.0 + 1e-12) / m.sqrt());
        let (d1, _, k) = canonical_rep(c1, c2).unwrap();
        prop_assert_eq!(k, 0);
        prop_assert!((d1 - c1).norm() <= 1e-12 * c1.norm());
        let (e1, _) = z_action(n, w1, w2).unwrap();
        prop_assert!((e1 - c1).norm() <= 1e-12 * c1.norm());
    }

    #[test]
    fn phi_branch_law(r in 0.86f64..0.905, t in -PI..PI, k in -3i64..=3) {
        let w = polar(r, t);
        let base = phi(w, BranchIndex(0)).unwrap();
        let v = phi(w, BranchIndex(k)).unwrap();
        prop_assert!((v - w.powi(k as i32) * base).norm() / base.norm() < 1e-9);
    }

    #[test]
    fn map_phi_is_branch_independent(r1 in 0.5f64..2.0, t1 in -PI..PI, s in 0.02f64..0.98, t2 in -PI..PI, k in -3i64..=3) {
        let p = Params::defaults();
        let m = 1.0 / p.rho1 + s * (1.0 / p.rho0 - 1.0 / p.rho1);
        let (z1, z2) = (polar(r1, t1), polar(m, t2));
        let a = map_phi(&p, z1, z2, BranchIndex(0)).unwrap();
        let b = map_phi(&p, z1, z2, BranchIndex(k)).unwrap();
        prop_assert!(same_point(&p, &a, &b, 1e-9));
    }

    #[test]
    fn q_round_trips(s in 0.0f64..1.0, t in -PI..PI, kappa in -0.9f64..0.9) {
        let p = Params::defaults();
        for spec in [TwistSpec::affine(&p), TwistSpec::sine(&p, kappa).unwrap()] {
            let z = polar(p.a + s * (p.b - p.a), t);
            let (w, tt) = q_chart(&spec, z).unwrap();
            prop_assert!((q_inv(&spec, w, tt).unwrap() - z).norm() < 1e-10);
            prop_assert!(conjugation_check(&spec, &[(w, tt)]).pass);
        }
    }

    #[test]
    fn embedding_lands_in_the_complement(s in 0.0f64..1.0, t1 in -PI..PI, u in 0.0f64..0.999, t2 in -PI..PI, torus in any::<bool>()) {
        let p = Params::defaults();
        let m = if torus {
            MPoint::new(Part::Torus, polar(p.a + s * (p.b - p.a), t1), polar(1.0, t2))
        } else {
            MPoint::new(Part::Collar, polar(if s < 0.5 { p.a } else { p.b }, t1), polar(u, t2))
        };
        let q = embed_g(&p, &m).unwrap();
        prop_assert!(concavia::atlas::in_complement_c(&p, &q));
    }

    #[test]
    fn convex_join_matches_endpoints(w in 0.05f64..2.0, y0 in -1.0f64..1.0, sec in -3.0f64..3.0,
                                     a in 0.05f64..5.0, b in 0.05f64..5.0) {
        let left = EndpointData::new(0.0, y0, sec - a);
        let right = EndpointData::new(w, y0 + sec * w, sec + b);
        let sol = solve(&JoinProblem::convex(left, right), 64).unwrap();
        for (e, x) in [(left, 0.0), (right, w)] {
            let (v, d, _) = sol.eval(x);
            prop_assert!((v - e.value).abs() < 1e-9 * (1.0 + e.value.abs()));
            prop_assert!((d - e.deriv).abs() < 1e-9 * (1.0 + e.deriv.abs()));
        }
        for i in 0..=200 {
            prop_assert!(sol.eval(w * i as f64 / 200.0).2 > 0.0);
        }
    }

    #[test]
    fn profile_slope_is_log_derivative(c in 1.0f64..2.0, eps in 0.01f64..0.5, sign in prop::bool::ANY, x in -2.0f64..0.0) {
        let sh = Shape::Germ { c, eps, sign: if sign { 1.0 } else { -1.0 } };
        let p = Profile::new(-3.0, 0.5, sh);
        let r = x.exp();
        prop_assert!((p.slope(r).unwrap() - p.log_eval(x).unwrap().1).abs() < 1e-9);
        let tag = classify_contact(&p, &p.grid(64)).unwrap().tag;
        prop_assert_eq!(tag, if sign { ContactTag::NegativeContact } else { ContactTag::PositiveContact });
    }

    #[test]
    fn gamma_inverts_the_slices(tau in 0.05f64..1.05, s in 0.0f64..1.0, t1 in -PI..PI, t2 in -PI..PI, which in 0usize..3) {
        let f = family();
        let piece = [Piece::H1, Piece::S, Piece::H2][which];
        let q = if piece == Piece::S {
            let e = f.slice_ends(tau).unwrap();
            let (x1, x2) = (e.problem.left.x, e.problem.right.x);
            f.point_on(tau, piece, x1 + (0.02 + 0.96 * s) * (x2 - x1), t1, t2).unwrap()
        } else {
            f.point_on(tau, piece, -6.0 + s * (f.model.seam_y() - 1e-3 + 6.0), t1, t2).unwrap()
        };
        prop_assert!((f.gamma_at(&q).unwrap() - tau).abs() < 1e-8);
    }
}
