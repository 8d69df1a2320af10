//! The slices `M_τ`, `d = 1 - τ`:
//! `f1τ = f1 + d (kappa1 + eta1 r^2)`, `f2τ = f2 - d (kappa2 + eta2 r^2)`,
//! and `S_τ` refit with the basis of the `M1` join.

use super::*;

/// One slice's log-profile data at the seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceEnds {
    pub problem: JoinProblem,
    pub weights: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub tau: f64,
    pub conditions: Vec<Certificate>,
}

impl SliceReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub model: SphereModel,
    pub knobs: FamilyKnobs,
    pub kappa1: f64,
    pub eta1: f64,
    pub kappa2: f64,
    pub eta2: f64,
    /// Verified slices, increasing in `τ`, ending at `τ = 1`.
    pub taus: Vec<f64>,
    pub slices: Vec<SliceReport>,
    pub nesting: Certificate,
}

impl FamilySpec {
    pub fn params(&self) -> &Params {
        &self.model.params
    }

    /// `(L1τ, L1τ', L1τ'')` at `y = log r2`.
    pub fn l1(&self, tau: f64, y: f64) -> (f64, f64, f64) {
        let d = 1.0 - tau;
        let p = self.params();
        let sh = Shape::Germ {
            c: p.c1 + self.kappa1 * d,
            eps: self.model.knobs.eps1 + self.eta1 * d,
            sign: 1.0,
        };
        Profile::new(f64::NEG_INFINITY, f64::INFINITY, sh).log_eval_ext(y)
    }

    /// `(L2τ, L2τ', L2τ'')` at `y = log r2`.
    pub fn l2(&self, tau: f64, y: f64) -> (f64, f64, f64) {
        let d = 1.0 - tau;
        let (l, l1, l2) = self.model.f2.profile.log_eval_ext(y);
        let e = l.exp();
        let q = (2.0 * y).exp();
        let f = e - d * (self.kappa2 + self.eta2 * q);
        let d1 = (e * l1 - 2.0 * d * self.eta2 * q) / f;
        let d2 = (e * (l2 + l1 * l1) - 4.0 * d * self.eta2 * q) / f - d1 * d1;
        (f.ln(), d1, d2)
    }

    /// `f1τ(r)` and `f2τ(r)` in the radial variable.
    pub fn f1_tau(&self, tau: f64, r: f64) -> f64 {
        let d = 1.0 - tau;
        let p = self.params();
        p.c1 + self.kappa1 * d + (self.model.knobs.eps1 + self.eta1 * d) * r * r
    }

    pub fn f2_tau(&self, tau: f64, r: f64) -> f64 {
        let d = 1.0 - tau;
        let base = if r > 0.0 {
            self.model.f2.profile.log_eval_ext(r.ln()).0.exp()
        } else {
            self.params().c2
        };
        base - d * (self.kappa2 + self.eta2 * r * r)
    }

    /// Join problem and weights of `S_τ`; `None` if the fixed basis cannot
    /// match the slice's seam data with positive weights.
    pub fn slice_ends(&self, tau: f64) -> Option<SliceEnds> {
        let ys = self.model.seam_y();
        let (a, da, _) = self.l1(tau, ys);
        let (b, db, _) = self.l2(tau, ys);
        if !(da > 0.0 && db < -1.0) {
            return None;
        }
        let left = EndpointData::new(a, -ys, -1.0 / da);
        let right = EndpointData::new(b + ys, -ys, -1.0 / (db + 1.0));
        if !(left.x < right.x) {
            return None;
        }
        let p = self.params();
        let problem = JoinProblem::convex(left, right).with_bounds(p.rho0.ln(), p.rho1.ln());
        let weights = self.model.htilde.basis.fit(&problem)?;
        Some(SliceEnds { problem, weights })
    }

    /// `htildeτ(X)` for `X` inside the slice's range.
    pub fn htilde(&self, ends: &SliceEnds, x: f64) -> (f64, f64, f64) {
        self.model.htilde.basis.eval(&ends.problem, ends.weights, x)
    }

    /// Domain of `γ`: `(0, tau_max]`.
    pub fn tau_domain(&self) -> (f64, f64) {
        (0.0, self.knobs.tau_max)
    }
}

/// `(kappa1, eta1, kappa2, eta2)` from the available room at the seam.
fn slice_rates(model: &SphereModel, knobs: &FamilyKnobs) -> (f64, f64, f64, f64) {
    let p = &model.params;
    let rs2 = 1.0 / (p.rho1 * p.rho1);
    let f1_top = p.c1 + model.knobs.eps1 * rs2;
    let room1 = p.rho2 - f1_top;
    let kappa1 = knobs.share1 * room1 / (1.0 + knobs.eta1_ratio * rs2);
    let f2_seam = model.f2.profile.log_eval_ext(model.seam_y()).0.exp();
    let kappa2 = knobs.share2 * (f2_seam - 1.0);
    (kappa1, knobs.eta1_ratio * kappa1, kappa2, 0.0)
}

fn slice_report(fam: &FamilySpec, tau: f64) -> SliceReport {
    let p = fam.params();
    let ys = fam.model.seam_y();
    let lo = fam.model.knobs.x_lo;
    let grid = interior_grid(lo, ys, 400);
    let mut conditions = Vec::new();

    let mut germ = Certificate::new("f1 germ c1 + eps1 r^2", "closed form", 0.0);
    germ.record(fam.model.knobs.eps1 + fam.eta1 * (1.0 - tau), &[tau]);
    conditions.push(germ);

    let mut conv = Certificate::new("f1 log-convex, f2 log-concave", "400 log points", 0.0);
    for &y in grid.iter().chain([lo, ys].iter()) {
        conv.record(fam.l1(tau, y).2.min(-fam.l2(tau, y).2), &[y]);
    }
    conditions.push(conv);

    let mut slopes = Certificate::new("seam slopes L1' > 0, L2' < -1", "seam", 0.0);
    slopes.record(fam.l1(tau, ys).1.min(-1.0 - fam.l2(tau, ys).1), &[ys]);
    conditions.push(slopes);

    let mut range = Certificate::new("ranges: zeta2 < f1 < rho2, 1 < f2 < zeta1", "400 log points", 0.0);
    for &y in grid.iter().chain([lo, ys].iter()) {
        let a = fam.l1(tau, y).0.exp();
        let b = fam.l2(tau, y).0.exp();
        let slack = (a - p.zeta2).min(p.rho2 - a).min(b - 1.0).min(p.zeta1 - b);
        range.record(slack, &[y]);
    }
    conditions.push(range);

    let mut join = Certificate::new("htilde refit convex inside the corridor", "basis knots", 0.0);
    match fam.slice_ends(tau) {
        None => join.fail("fixed basis gives a non-positive weight"),
        Some(ends) => {
            let (x1, x2) = (ends.problem.left.x, ends.problem.right.x);
            for x in interior_grid(x1, x2, 4096) {
                let (v, _, dd) = fam.htilde(&ends, x);
                let slack = dd.min(v - p.rho0.ln()).min(p.rho1.ln() - v);
                join.record(slack, &[x]);
            }
        }
    }
    conditions.push(join);
    SliceReport { tau, conditions }
}

/// Strict monotonicity of the slices along sampled rays: horizontal rays
/// `|z2| = const` through `H1`, `H2` and vertical rays `|w1| = const`
/// through the common part of the `S_τ`.
fn nesting(fam: &FamilySpec, rays: usize) -> Result<Certificate> {
    let mut cert = Certificate::new("slices nested along rays", format!("{rays} rays"), 1e-6);
    let ys = fam.model.seam_y();
    let per = rays / 4;
    let ends: Vec<SliceEnds> = fam
        .taus
        .iter()
        .map(|&t| fam.slice_ends(t).ok_or(Error::Foliation {
            tau_a: t,
            tau_b: t,
            ray: 0,
        }))
        .collect::<Result<_>>()?;
    let x_lo = ends.iter().map(|e| e.problem.left.x).fold(f64::NEG_INFINITY, f64::max);
    let x_hi = ends.iter().map(|e| e.problem.right.x).fold(f64::INFINITY, f64::min);
    let ys_grid = interior_grid(fam.model.knobs.x_lo, ys, per);
    let xs_grid = interior_grid(x_lo, x_hi, rays - 2 * per);
    let mut ray = 0;
    let mut check = |values: Vec<f64>, at: f64, ray: usize| -> Result<()> {
        // values in order of increasing τ; must strictly decrease
        for k in 0..values.len() - 1 {
            let gap = values[k] - values[k + 1];
            cert.record(gap, &[at, fam.taus[k], fam.taus[k + 1]]);
            if !(gap > 1e-6) {
                return Err(Error::Foliation {
                    tau_a: fam.taus[k],
                    tau_b: fam.taus[k + 1],
                    ray,
                });
            }
        }
        Ok(())
    };
    for &y in &ys_grid {
        let r = y.exp();
        check(fam.taus.iter().map(|&t| fam.f1_tau(t, r)).collect(), y, ray)?;
        ray += 1;
        check(fam.taus.iter().map(|&t| -fam.f2_tau(t, r)).collect(), y, ray)?;
        ray += 1;
    }
    for &x in &xs_grid {
        check(ends.iter().map(|e| fam.htilde(e, x).0).collect(), x, ray)?;
        ray += 1;
    }
    Ok(cert)
}

pub const NESTING_RAYS: usize = 64;

/// Builds `n_tau` slices `τ = k / n_tau`, verifies each and the nesting.
pub fn build_family(params: &Params, knobs: &ProfileKnobs, fk: &FamilyKnobs) -> Result<FamilySpec> {
    if fk.n_tau < 8 {
        return Err(Error::Config(format!("n_tau = {} is below 8", fk.n_tau)));
    }
    if !(fk.tau_max > 1.0) {
        return Err(Error::Config(format!("tau_max = {} must exceed 1", fk.tau_max)));
    }
    let model = build_m1(params, knobs)?;
    family_from_model(model, fk)
}

pub fn family_from_model(model: SphereModel, fk: &FamilyKnobs) -> Result<FamilySpec> {
    let (kappa1, eta1, kappa2, eta2) = slice_rates(&model, fk);
    let taus: Vec<f64> = (1..=fk.n_tau).map(|k| k as f64 / fk.n_tau as f64).collect();
    let mut fam = FamilySpec {
        model,
        knobs: *fk,
        kappa1,
        eta1,
        kappa2,
        eta2,
        taus,
        slices: Vec::new(),
        nesting: Certificate::new("slices nested along rays", "", 1e-6),
    };
    let mut check_taus = fam.taus.clone();
    check_taus.push(fk.tau_max);
    fam.slices = check_taus.iter().map(|&t| slice_report(&fam, t)).collect();
    if let Some(bad) = fam.slices.iter().find(|s| !s.pass()) {
        let c = bad.conditions.iter().find(|c| !c.pass).expect("failing condition");
        return Err(Error::feasibility(format!("slice tau = {}: {}: {}", bad.tau, c.name, c.summary())));
    }
    fam.nesting = nesting(&fam, NESTING_RAYS)?;
    Ok(fam)
}
