use super::*;
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn power(k: f64) -> Profile {
    Profile::new(-3.0, 3.0, Shape::Affine { slope: k, intercept: 0.0 })
}

fn half_exp() -> Profile {
    Profile::new(-2.0, 2.0, Shape::Exp { coef: 0.5, rate: 2.0 })
}

fn neg_square() -> Profile {
    Profile::new(-2.0, 2.0, Shape::Quadratic { a0: 0.0, a1: 0.0, a2: -1.0 })
}

fn fd_p(p: &Profile, r: f64, h: f64) -> (f64, f64) {
    let f = |r: f64| p.log_eval_ext(r.ln()).0.exp();
    ((f(r + h) - f(r - h)) / (2.0 * h), (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h))
}

#[test]
fn eval_examples() {
    let (v, d, dd) = power(2.0).eval(3.0).unwrap();
    assert_relative_eq!(v, 9.0, max_relative = 1e-12);
    assert_relative_eq!(d, 6.0, max_relative = 1e-12);
    assert_relative_eq!(dd, 2.0, max_relative = 1e-12);
    let (_, d, dd) = power(1.0).eval(1.7).unwrap();
    assert_relative_eq!(d, 1.0, max_relative = 1e-12);
    assert!(dd.abs() < 1e-12);
    let p = half_exp();
    let (v, d, dd) = p.eval(1.0).unwrap();
    assert_relative_eq!(v, 0.5f64.exp(), max_relative = 1e-12);
    let (fd1, fd2) = fd_p(&p, 1.0, 1e-5);
    assert_relative_eq!(d, fd1, max_relative = 1e-6);
    assert_relative_eq!(dd, fd2, max_relative = 1e-4);
    assert!(matches!(p.eval(100.0), Err(Error::Domain(_))));
}

#[test]
fn slope_examples() {
    for k in [0.5, 2.0, -1.5] {
        for r in [0.2, 1.0, 4.0] {
            assert_relative_eq!(power(k).slope(r).unwrap(), k, max_relative = 1e-12);
        }
    }
    assert_relative_eq!(half_exp().slope(1.0).unwrap(), 1.0, max_relative = 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let a2: f64 = rng.gen_range(-2.0..2.0);
        let a1: f64 = rng.gen_range(-2.0..2.0);
        let p = Profile::new(-1.0, 1.0, Shape::Quadratic { a0: 0.1, a1, a2 });
        let x: f64 = rng.gen_range(-1.0..1.0);
        let (v, d, _) = p.eval(x.exp()).unwrap();
        let via_p = x.exp() * d / v;
        assert_relative_eq!(p.slope(x.exp()).unwrap(), via_p, max_relative = 1e-9);
        assert_relative_eq!(p.slope(x.exp()).unwrap(), a1 + 2.0 * a2 * x, max_relative = 1e-9);
    }
}

#[test]
fn identity_check_examples() {
    let c = second_derivative_identity_check(&power(2.0), &power(2.0).grid(40));
    assert!(c.pass);
    assert!(c.notes.iter().any(|n| n.contains("LeviFlat")));
    let g = interior_grid(-1.0, 1.0, 40);
    assert!(second_derivative_identity_check(&half_exp(), &g).pass);
    assert!(second_derivative_identity_check(&neg_square(), &g).pass);
}

#[test]
fn classify_examples() {
    let g = interior_grid(-1.0, 1.0, 64);
    assert_eq!(classify_contact(&power(3.0), &g).unwrap().tag, ContactTag::LeviFlat);
    let n = classify_contact(&half_exp(), &g).unwrap();
    assert_eq!(n.tag, ContactTag::NegativeContact);
    assert_relative_eq!(n.margin, 2.0 * (2.0 * g[0]).exp(), max_relative = 1e-12);
    let p = classify_contact(&neg_square(), &g).unwrap();
    assert_eq!(p.tag, ContactTag::PositiveContact);
    assert_relative_eq!(p.margin, 2.0, max_relative = 1e-12);
    let cubic_like = Profile::new(-1.0, 1.0, Shape::Exp { coef: 1.0, rate: 1.0 }).scaled(1.0, 0.0);
    assert_eq!(classify_contact(&cubic_like, &g).unwrap().tag, ContactTag::NegativeContact);
    let mixed = Profile::new(
        -1.0,
        1.0,
        Shape::Spline {
            curve: PiecewiseC2::integrate(vec![-1.0, 0.0, 1.0], vec![-1.0, 0.0, 1.0], 0.0, 0.0),
        },
    );
    assert_eq!(classify_contact(&mixed, &g).unwrap().tag, ContactTag::Indefinite);
    assert!(classify_contact(&half_exp(), &g[..10]).is_err());
}

#[test]
fn contact_coeff_examples() {
    let (a1, a2) = power(1.0).contact_form_coeffs(2.0).unwrap();
    assert_relative_eq!(a1, 2.0, max_relative = 1e-12);
    assert_relative_eq!(a2, -2.0, max_relative = 1e-12);
    let (a1, a2) = half_exp().contact_form_coeffs(1.0).unwrap();
    assert_relative_eq!(a1, 0.5f64.exp(), max_relative = 1e-12);
    assert_relative_eq!(a2, -(0.5f64.exp()), max_relative = 1e-12);
    let p = neg_square();
    let (a1, a2) = p.contact_form_coeffs(1.0).unwrap();
    assert!(a1.abs() < 1e-15);
    assert_relative_eq!(a1, p.slope(1.0).unwrap() * -a2, epsilon = 1e-15);
}

fn branch_lo(f2: &Profile) -> f64 {
    let start = h2_branch_start(f2).unwrap();
    start + 0.1 * (f2.hi - start)
}

fn defaults() -> (Params, ProfileKnobs) {
    (Params::defaults(), ProfileKnobs::default())
}

#[test]
fn f1_defaults() {
    let (p, k) = defaults();
    let f1 = make_f1(&p, &k).unwrap();
    assert!(f1.pass(), "{:?}", f1.conditions);
    let top = f1.profile.eval(1.0 / p.rho1).unwrap().0;
    assert_relative_eq!(top, 1.04 + 0.004 / 0.81, max_relative = 1e-12);
    assert!(top < p.rho2);
    for x in f1.profile.grid(50) {
        let e = (2.0 * x).exp();
        let want = 4.0 * 0.004 * e * 1.04 / (1.04 + 0.004 * e).powi(2);
        assert_relative_eq!(f1.profile.log_eval(x).unwrap().2, want, max_relative = 1e-10);
    }
    assert!(f1.profile.log_eval(f1.profile.hi).unwrap().1 > 0.0);
    let bad = ProfileKnobs { eps1: 0.01, ..k };
    assert!(matches!(make_f1(&p, &bad), Err(Error::Feasibility(_))));
}

#[test]
fn f2_defaults() {
    let (p, k) = defaults();
    let f2 = make_f2(&p, &k).unwrap();
    assert!(f2.pass(), "{:?}", f2.conditions);
    let prof = &f2.profile;
    let end = prof.log_eval(prof.hi).unwrap().1;
    assert!(end < -1.0 - 0.05 + 1e-9, "{end}");
    let r = (k.x_lo + 0.5).exp();
    assert_relative_eq!(prof.eval(r).unwrap().0, 1.02 - 0.005 * r * r, max_relative = 1e-12);
    let n = 4000;
    for i in 0..=n {
        let x = prof.lo + (prof.hi - prof.lo) * i as f64 / n as f64;
        let (l, d, dd) = prof.log_eval(x).unwrap();
        assert!(dd < 0.0, "L2'' = {dd} at {x}");
        assert!(l > 0.0 && l.exp() < p.rho2);
        assert!(d.is_finite());
    }
    // C2 at the switch
    let a = prof.log_eval_ext(k.x_switch - 1e-12);
    let b = prof.log_eval_ext(k.x_switch + 1e-12);
    assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10 && (a.2 - b.2).abs() < 1e-8);
}

#[test]
fn derivative_oracles_match_finite_differences() {
    let (p, k) = defaults();
    let f1 = make_f1(&p, &k).unwrap().profile;
    let f2 = make_f2(&p, &k).unwrap().profile;
    let h1 = pushforward_h1(&f1, f1.hi - 1.0).unwrap();
    let h2 = pushforward_h2(&f2, branch_lo(&f2)).unwrap();
    for prof in [&f1, &f2, &h1, &h2, &half_exp(), &neg_square()] {
        // step relative to the domain width: the pushforwards live on very short intervals
        let h = 1e-5 * (prof.hi - prof.lo).min(1.0);
        let lo = prof.lo + 2.0 * h;
        let hi = prof.hi - 2.0 * h;
        for x in interior_grid(lo, hi, 97) {
            let (_, d, dd) = prof.log_eval(x).unwrap();
            let l = |x: f64| prof.log_eval_ext(x);
            let fd1 = (l(x + h).0 - l(x - h).0) / (2.0 * h);
            let fd2 = (l(x + h).1 - l(x - h).1) / (2.0 * h);
            assert!((d - fd1).abs() <= 1e-6 * d.abs().max(1e-3), "L' {d} vs {fd1} at {x}");
            assert!((dd - fd2).abs() <= 1e-4 * dd.abs().max(1e-3), "L'' {dd} vs {fd2} at {x}");
        }
    }
}

#[test]
fn identity_check_on_model_profiles() {
    let (p, k) = defaults();
    let f1 = make_f1(&p, &k).unwrap().profile;
    let f2 = make_f2(&p, &k).unwrap().profile;
    let h1 = pushforward_h1(&f1, f1.hi - 1.0).unwrap();
    let h2 = pushforward_h2(&f2, branch_lo(&f2)).unwrap();
    for prof in [&f1, &f2, &h1, &h2] {
        let c = second_derivative_identity_check(prof, &prof.grid(200));
        assert!(c.pass, "{}", c.summary());
    }
}

#[test]
fn h1_round_trip_and_shape() {
    let (p, k) = defaults();
    let f1 = make_f1(&p, &k).unwrap().profile;
    let h1 = pushforward_h1(&f1, f1.hi - 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let y: f64 = rng.gen_range(f1.hi - 1.0..f1.hi);
        let w1 = f1.eval(y.exp()).unwrap().0;
        let w2 = h1.eval(w1).unwrap().0;
        assert_relative_eq!(w2, (-y).exp(), max_relative = 1e-8);
    }
    let seam = h1.log_eval(h1.hi).unwrap();
    assert_relative_eq!(seam.0, p.rho1.ln(), max_relative = 1e-10);
    assert!(seam.1 < 0.0);
    for x in h1.grid(100) {
        assert!(h1.log_eval(x).unwrap().2 > 0.0);
    }
}

#[test]
fn h2_branch_and_slopes() {
    let (p, k) = defaults();
    let f2 = make_f2(&p, &k).unwrap().profile;
    let start = h2_branch_start(&f2).unwrap();
    assert!(f2.log_eval(start + 1e-6).unwrap().1 < -1.0);
    assert!(matches!(pushforward_h2(&f2, start - 0.01), Err(Error::Branch(_))));
    let lo = branch_lo(&f2);
    let h2 = pushforward_h2(&f2, lo).unwrap();
    for i in 0..50 {
        let y = lo + (f2.hi - lo) * (i as f64 + 0.5) / 50.0;
        let (l, d, dd) = f2.log_eval(y).unwrap();
        let x = l + y;
        let (hv, hd, hdd) = h2.log_eval(x).unwrap();
        assert_relative_eq!(hv, -y, max_relative = 1e-9);
        assert_relative_eq!(hd, -1.0 / (d + 1.0), max_relative = 1e-9);
        assert!(hd > 0.0);
        assert_relative_eq!(hdd, dd / (d + 1.0).powi(3), max_relative = 1e-9);
        assert!(hdd > 0.0);
        // round trip |w2| = h2(|w1|) with (w1, w2) = (z1 z2, 1/z2)
        let w1 = l.exp() * y.exp();
        assert_relative_eq!(h2.eval(w1).unwrap().0, (-y).exp(), max_relative = 1e-8);
    }
    assert!(h2.log_eval(h2.lo).unwrap().1 > 0.0);
    assert_relative_eq!(h2.log_eval(h2.lo).unwrap().0, p.rho1.ln(), max_relative = 1e-10);
}

#[test]
fn angle_matrices_and_slope_transport() {
    let m1 = angle_matrix(Seam::NearH1);
    let m2 = angle_matrix(Seam::NearH2);
    assert_eq!(m1, [[1, 0], [0, -1]]);
    assert_eq!(m2, [[1, 1], [0, -1]]);
    for m in [m1, m2] {
        assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], -1);
    }
    let (p, k) = defaults();
    let f1 = make_f1(&p, &k).unwrap().profile;
    let f2 = make_f2(&p, &k).unwrap().profile;
    let h1 = pushforward_h1(&f1, f1.hi - 1.0).unwrap();
    let h2 = pushforward_h2(&f2, branch_lo(&f2)).unwrap();
    for i in 0..20 {
        let y = f1.hi - 0.5 * i as f64 / 20.0;
        let v = push_direction(m1, kernel_direction_f(&f1, y).unwrap());
        let x = f1.log_eval(y).unwrap().0;
        assert_relative_eq!(v[1] / v[0], h1.log_eval(x).unwrap().1, max_relative = 1e-6);
    }
    for i in 0..20 {
        let y = f2.hi - (f2.hi - branch_lo(&f2)) * i as f64 / 20.0;
        let v = push_direction(m2, kernel_direction_f(&f2, y).unwrap());
        let x = f2.log_eval(y).unwrap().0 + y;
        assert_relative_eq!(v[1] / v[0], h2.log_eval(x).unwrap().1, max_relative = 1e-6);
    }
}

#[test]
fn profiles_serialize() {
    let (p, k) = defaults();
    let f2 = make_f2(&p, &k).unwrap().profile;
    let text = serde_json::to_string(&f2).unwrap();
    let back: Profile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, f2);
    let csv = f2.to_csv(10);
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.starts_with("r,p,dp,ddp,slope,L2"));
}
