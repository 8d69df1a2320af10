//! The certificate suites behind `verify`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{suite_tag, RunConfig, Suite};
use crate::atlas::{map_phi, phi, BranchIndex, Params, C64};
use crate::cert::Certificate;
use crate::error::Result;
use crate::family::run_family_suite;
use crate::levi::{
    composition_identity_check, contact_sign, hartogs_boundary_test, point, quadratic_term_check, FnField, HartogsTag,
    LambdaOutcome, P4, DEFAULT_STEP, HARTOGS_FLAT,
};
use crate::openbook::{
    check_disjointness, conjugation_check, injectivity_check, random_mpoints, seam_samples, sufficient_margins,
    twist_samples, twist_winding, welldef_check, TwistSpec,
};
use crate::profiles::{
    classify_contact, interior_grid, make_f1, make_f2, second_derivative_identity_check, ContactTag, Profile, Shape,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaOutcome>,
    /// `(kappa1, eta1, kappa2, eta2)` of the family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteReport {
    fn new(suite: Suite, certificates: Vec<Certificate>) -> Self {
        let pass = certificates.iter().all(|c| c.pass);
        SuiteReport {
            suite: suite_tag(suite).to_string(),
            pass,
            certificates,
            lambda: None,
            kappa: None,
            error: None,
        }
    }

    fn from_result(suite: Suite, r: Result<Vec<Certificate>>) -> Self {
        match r {
            Ok(c) => SuiteReport::new(suite, c),
            Err(e) => {
                let mut s = SuiteReport::new(suite, Vec::new());
                s.pass = false;
                s.error = Some(format!("{}: {e}", suite_tag(suite)));
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub params: serde_json::Value,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

pub fn run_suites(params: &Params, cfg: &RunConfig, suite: Suite) -> VerifyReport {
    let which = match suite {
        Suite::All => vec![Suite::Atlas, Suite::Openbook, Suite::Profiles, Suite::Levi, Suite::Family],
        s => vec![s],
    };
    let suites: Vec<SuiteReport> = which.into_iter().map(|s| run_suite(params, cfg, s)).collect();
    VerifyReport {
        seed: cfg.seed,
        params: params.to_json(),
        pass: suites.iter().all(|s| s.pass),
        suites,
    }
}

pub fn run_suite(params: &Params, cfg: &RunConfig, suite: Suite) -> SuiteReport {
    let k = &cfg.knobs;
    match suite {
        Suite::Atlas => SuiteReport::new(suite, atlas_suite(params)),
        Suite::Openbook => SuiteReport::from_result(suite, openbook_suite(params, k.twist_samples, k.seam_samples, cfg.seed)),
        Suite::Profiles => SuiteReport::from_result(suite, profiles_suite(params, cfg)),
        Suite::Levi => SuiteReport::new(suite, levi_suite(cfg.seed)),
        Suite::Family => {
            let rep = run_family_suite(params, &k.profile(), &k.family(), &k.verify(), cfg.seed);
            let mut s = SuiteReport::new(suite, rep.certificates().into_iter().cloned().collect());
            s.pass = rep.pass;
            s.lambda = rep.lambda.clone();
            s.kappa = rep.error.is_none().then_some(rep.kappa);
            s.error = rep.error.map(|e| format!("family: {e}"));
            s
        }
        Suite::All => unreachable!("expanded by run_suites"),
    }
}

/// Slack of each inequality of the parameter chain, plus the two
/// disjointness margins `a - rho1 b` and `a / rho1 - b`.
pub fn chain_margins(p: &Params) -> Certificate {
    let mut c = Certificate::new("parameter chain", "closed form", 0.0);
    let sr = p.s * p.rho1;
    let rows = [
        p.rho2 - 1.0,
        1.0 / p.rho1 - p.rho2,
        p.rho0 - p.rho1 / p.rho2,
        p.rho1 - p.rho0,
        p.s - 1.0 / p.rho0,
        p.rho2 / p.rho1 - p.s,
        p.c - p.rho0,
        p.rho1 - p.c,
        (p.rho0 - p.rho1 / p.rho2) / 2.0 - p.eps,
        p.c2 - 1.0,
        sr - p.c2,
        p.c1 - sr,
        p.rho2 - p.c1,
        p.zeta1 - sr,
        p.zeta2 - p.zeta1,
        p.rho2 - p.zeta2,
    ];
    for (i, r) in rows.iter().enumerate() {
        c.record(*r, &[i as f64]);
    }
    let (m1, m2) = sufficient_margins(p);
    c.record(m1, &[p.rho1 * p.b, p.a]);
    c.record(m2, &[p.a / p.rho1, p.b]);
    c
}

/// `n x n` cell centres of the annulus `lo < |w| < hi`.
fn annulus_grid(n: usize, lo: f64, hi: f64) -> Vec<C64> {
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let r = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            let t = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
            g.push(C64::from_polar(r, t));
        }
    }
    g
}

/// `phi(w, k) = w^k phi(w, 0)` for `|k| <= 3` at relative tolerance `1e-9`.
pub fn phi_branch_law(n: usize) -> Certificate {
    let tol = 1e-9;
    let mut c = Certificate::new("phi branch law", format!("{} points, |k| <= 3", n * n), 0.0);
    for w in annulus_grid(n, 0.86, 0.905) {
        let base = phi(w, BranchIndex(0));
        for k in -3..=3 {
            match (&base, phi(w, BranchIndex(k))) {
                (Ok(b), Ok(v)) => c.record(tol - (v - w.powi(k as i32) * b).norm() / b.norm(), &[w.re, w.im, k as f64]),
                _ => c.fail(format!("phi undefined at {w}")),
            }
        }
    }
    c
}

/// `map_phi` on branches `|k| <= 3` lands on one canonical point.
pub fn phi_branch_independence(p: &Params, n: usize) -> Certificate {
    let tol = 1e-9;
    let mut c = Certificate::new("Phi branch independence", format!("{} points, |k| <= 3", n * n), 0.0);
    let lo = 1.0 / p.rho1;
    let hi = 1.0 / p.rho0;
    let pad = 0.02 * (hi - lo);
    for z2 in annulus_grid(n, lo + pad, hi - pad) {
        let z1 = C64::from_polar(1.02, 0.3 + z2.arg());
        let base = match map_phi(p, z1, z2, BranchIndex(0)) {
            Ok(b) => b,
            Err(e) => {
                c.fail(e.to_string());
                continue;
            }
        };
        for k in -3..=3 {
            match map_phi(p, z1, z2, BranchIndex(k)) {
                Ok(q) => {
                    let err = (q.z1 - base.z1).norm() / base.z1.norm() + (q.z2 - base.z2).norm() / base.z2.norm();
                    c.record(tol - err, &[z2.re, z2.im, k as f64]);
                }
                Err(e) => c.fail(e.to_string()),
            }
        }
    }
    c
}

pub fn atlas_suite(p: &Params) -> Vec<Certificate> {
    vec![chain_margins(p), phi_branch_law(10), phi_branch_independence(p, 10)]
}

pub fn openbook_suite(p: &Params, twists: usize, seams: usize, seed: u64) -> Result<Vec<Certificate>> {
    let samples = twist_samples(twists, seed.wrapping_add(11));
    let mut affine = conjugation_check(&TwistSpec::affine(p), &samples);
    affine.name = format!("{} (affine tau)", affine.name);
    let mut sine = conjugation_check(&TwistSpec::sine(p, 0.5)?, &samples);
    sine.name = format!("{} (sine tau)", sine.name);
    let mut winding = Certificate::new("twist winds once", "4096 boundary steps", 0.0);
    winding.record(1e-9 - (twist_winding(&TwistSpec::affine(p), 4096)? - 1.0).abs(), &[]);
    Ok(vec![
        check_disjointness(p, 6),
        affine,
        sine,
        winding,
        welldef_check(p, &seam_samples(p, seams, seed.wrapping_add(21))),
        injectivity_check(p, &random_mpoints(p, twists, seed.wrapping_add(2)), 1e-9),
    ])
}

/// Expected tag from the sign of `L''` at a few points, for building the
/// comparison set.
fn expected_tag(shape: &Shape) -> ContactTag {
    match shape {
        Shape::Affine { .. } => ContactTag::LeviFlat,
        Shape::Quadratic { a2, .. } if *a2 < 0.0 => ContactTag::PositiveContact,
        Shape::Exp { coef, .. } if *coef < 0.0 => ContactTag::PositiveContact,
        Shape::Germ { sign, .. } if *sign < 0.0 => ContactTag::PositiveContact,
        _ => ContactTag::NegativeContact,
    }
}

/// Profiles spanning log-convex, log-concave and log-affine shapes.
pub fn agreement_profiles(n: usize, seed: u64) -> Vec<(Profile, ContactTag)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (lo, hi, shape) = match i % 7 {
                0 => (-1.0, 1.0, Shape::Affine {
                    slope: rng.gen_range(-3.0..3.0),
                    intercept: rng.gen_range(-0.5..0.5),
                }),
                1 => (-1.0, 1.0, Shape::Quadratic {
                    a0: rng.gen_range(-0.5..0.5),
                    a1: rng.gen_range(-1.0..1.0),
                    a2: rng.gen_range(0.2..1.5),
                }),
                2 => (-1.0, 1.0, Shape::Quadratic {
                    a0: rng.gen_range(-0.5..0.5),
                    a1: rng.gen_range(-1.0..1.0),
                    a2: -rng.gen_range(0.2..1.5),
                }),
                3 => (-1.0, 1.0, Shape::Exp {
                    coef: rng.gen_range(0.2..1.0),
                    rate: rng.gen_range(0.5..2.0),
                }),
                4 => (-1.0, 1.0, Shape::Exp {
                    coef: -rng.gen_range(0.2..1.0),
                    rate: rng.gen_range(0.5..2.0),
                }),
                5 => (-1.5, 0.5, Shape::Germ {
                    c: rng.gen_range(1.0..1.5),
                    eps: rng.gen_range(0.05..0.3),
                    sign: 1.0,
                }),
                _ => (-1.5, 0.5, Shape::Germ {
                    c: rng.gen_range(1.0..1.5),
                    eps: rng.gen_range(0.05..0.3),
                    sign: -1.0,
                }),
            };
            let tag = expected_tag(&shape);
            (Profile::new(lo, hi, shape), tag)
        })
        .collect()
}

/// `classify_contact` against the sign of `α ∧ dα` on
/// `{|z2| = p(|z1|)}`, oriented as the boundary of `{|z2| < p(|z1|)}`.
pub fn levi_tag_agreement(prof: &Profile, n: usize, seed: u64) -> Result<Certificate> {
    let class = classify_contact(prof, &prof.grid(256))?;
    let mut c = Certificate::new(
        format!("profile tag {:?} matches alpha ^ d alpha", class.tag),
        format!("{n} samples"),
        0.0,
    );
    let field = FnField::new(|q: &P4| {
        let (r1, r2) = ((q[0] * q[0] + q[1] * q[1]).sqrt(), (q[2] * q[2] + q[3] * q[3]).sqrt());
        r2.ln() - prof.log_eval_ext(r1.ln()).0
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = 0.05 * (prof.hi - prof.lo);
    for _ in 0..n {
        let x = rng.gen_range(prof.lo + pad..prof.hi - pad);
        let z1 = C64::from_polar(x.exp(), rng.gen_range(0.0..2.0 * PI));
        let z2 = C64::from_polar(prof.log_eval_ext(x).0.exp(), rng.gen_range(0.0..2.0 * PI));
        let q = point(z1, z2);
        let s = contact_sign(&field, &q, true, DEFAULT_STEP)?;
        let slack = match class.tag {
            ContactTag::PositiveContact => s,
            ContactTag::NegativeContact => -s,
            ContactTag::LeviFlat => HARTOGS_FLAT - s.abs(),
            ContactTag::Indefinite => -1.0,
        };
        c.record(slack, &q);
    }
    Ok(c)
}

pub fn profiles_suite(p: &Params, cfg: &RunConfig) -> Result<Vec<Certificate>> {
    let k = cfg.knobs.profile();
    let f1 = make_f1(p, &k)?;
    let f2 = make_f2(p, &k)?;
    let mut out: Vec<Certificate> = f1.conditions.iter().chain(f2.conditions.iter()).cloned().collect();
    for (name, prof) in [("f1", &f1.profile), ("f2", &f2.profile)] {
        let mut c = second_derivative_identity_check(prof, &interior_grid(k.x_lo, prof.hi, 256));
        c.name = format!("{} ({name})", c.name);
        out.push(c);
    }
    let mut agree = Certificate::new(
        "profile tags agree with alpha ^ d alpha",
        format!("{} profiles x {} samples", cfg.knobs.agreement_profiles, cfg.knobs.agreement_samples),
        0.0,
    );
    for (i, (prof, want)) in agreement_profiles(cfg.knobs.agreement_profiles, cfg.seed).iter().enumerate() {
        let c = levi_tag_agreement(prof, cfg.knobs.agreement_samples, cfg.seed.wrapping_add(i as u64))?;
        let tag = classify_contact(prof, &prof.grid(256))?.tag;
        if tag != *want {
            agree.fail(format!("profile {i}: classified {tag:?}, built as {want:?}"));
        }
        if !c.pass {
            agree.fail(format!("profile {i}: {}", c.summary()));
        }
        agree.record(c.margin, &[i as f64]);
    }
    out.push(agree);
    Ok(out)
}

fn unit_points(n: usize, seed: u64) -> Vec<P4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: P4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
            let s = rng.gen_range(0.3..1.2) / r;
            v.map(|x| x * s)
        })
        .collect()
}

pub fn levi_suite(seed: u64) -> Vec<Certificate> {
    let grid: Vec<C64> = annulus_grid(8, 0.2, 1.0);
    let mut hartogs = Certificate::new("Hartogs sign agreement", "3 model + 20 random psi", 0.0);
    let models: [(&str, Box<dyn Fn(C64) -> f64 + Sync>, HartogsTag); 3] = [
        ("|z|^2", Box::new(|z: C64| z.norm_sqr()), HartogsTag::Convex),
        ("-|z|^2", Box::new(|z: C64| -z.norm_sqr()), HartogsTag::Concave),
        ("Re z^2", Box::new(|z: C64| (z * z).re), HartogsTag::Flat),
    ];
    for (name, psi, want) in models.iter() {
        let o = hartogs_boundary_test(psi.as_ref(), &grid);
        if o.tag != *want || !o.certificate.pass {
            hartogs.fail(format!("{name}: {:?}, {}", o.tag, o.certificate.summary()));
        }
        hartogs.record(o.certificate.margin, &[]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(21));
    for k in 0..20 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let a: f64 = rng.gen_range(0.3..2.0);
        let e: f64 = rng.gen_range(0.0..0.5);
        let h1: f64 = rng.gen_range(-1.0..1.0);
        let h2: f64 = rng.gen_range(-1.0..1.0);
        let psi = move |z: C64| sign * (a * z.norm_sqr() + e * z.norm_sqr().powi(2)) + h1 * (z * z).re + h2 * (z * z * z).im;
        let want = if sign > 0.0 { HartogsTag::Convex } else { HartogsTag::Concave };
        let o = hartogs_boundary_test(&psi, &grid);
        if o.tag != want || !o.certificate.pass {
            hartogs.fail(format!("polynomial {k}: {:?}, {}", o.tag, o.certificate.summary()));
        }
        hartogs.record(o.certificate.margin, &[k as f64]);
    }

    let gamma = FnField::new(|p: &P4| p[0] * p[0] + p[1] * p[1] + 0.3 * p[2] * p[3] + p[2] + (1.0 + p[3] * p[3]).ln());
    let g = |t: f64| ((2.0 * t).exp(), 2.0 * (2.0 * t).exp(), 4.0 * (2.0 * t).exp());
    let samples = unit_points(100, seed.wrapping_add(3));
    vec![
        hartogs,
        composition_identity_check(&gamma, &g, &samples, 1e-3, seed.wrapping_add(5)),
        quadratic_term_check(&gamma, &samples, seed.wrapping_add(7)),
    ]
}
