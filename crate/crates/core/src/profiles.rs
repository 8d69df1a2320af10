//! Radial profiles of Reinhardt hypersurfaces in log coordinates.
//!
//! A profile `p(r)` is stored through `L(x) = log p(e^x)`; the r-side
//! quantities are views derived by the chain rule.

use serde::{Deserialize, Serialize};

use crate::atlas::Params;
use crate::cert::Certificate;
use crate::convexjoin::{extend_concave, GermData, PiecewiseC2};
use crate::error::{Error, Result};

/// Closed-form or piecewise representation of `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Shape {
    /// `slope * x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `a0 + a1 x + a2 x^2`
    Quadratic { a0: f64, a1: f64, a2: f64 },
    /// `coef * e^{rate x}`
    Exp { coef: f64, rate: f64 },
    /// `log(c + sign * eps * e^{2x})`, the profile of `c + sign * eps * r^2`
    Germ { c: f64, eps: f64, sign: f64 },
    Spline { curve: PiecewiseC2 },
    /// `germ` up to `switch`, `tail` beyond it.
    Composite {
        germ: Box<Shape>,
        switch: f64,
        tail: PiecewiseC2,
    },
    /// `scale * inner + offset`
    Affinely {
        inner: Box<Shape>,
        scale: f64,
        offset: f64,
    },
    /// `-L^{-1}(x)` for an increasing profile `L`.
    Inverse { inner: Box<Profile> },
    /// `(L(y) + y, -y)` read as a graph over its first coordinate.
    Sheared { inner: Box<Profile> },
}

impl Shape {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Shape::Affine { slope, intercept } => (slope * x + intercept, *slope, 0.0),
            Shape::Quadratic { a0, a1, a2 } => (a0 + a1 * x + a2 * x * x, a1 + 2.0 * a2 * x, 2.0 * a2),
            Shape::Exp { coef, rate } => {
                let e = coef * (rate * x).exp();
                (e, rate * e, rate * rate * e)
            }
            Shape::Germ { c, eps, sign } => {
                let q = sign * eps * (2.0 * x).exp();
                let f = c + q;
                (f.ln(), 2.0 * q / f, 4.0 * q * c / (f * f))
            }
            Shape::Spline { curve } => curve.eval(x),
            Shape::Composite { germ, switch, tail } => {
                if x <= *switch {
                    germ.eval(x)
                } else {
                    tail.eval(x)
                }
            }
            Shape::Affinely {
                inner,
                scale,
                offset,
            } => {
                let (l, d, dd) = inner.eval(x);
                (scale * l + offset, scale * d, scale * dd)
            }
            Shape::Inverse { inner } => {
                let y = invert(|y| inner.shape.eval(y).0, x, inner.lo, inner.hi, true);
                let (_, d, dd) = inner.shape.eval(y);
                (-y, -1.0 / d, dd / (d * d * d))
            }
            Shape::Sheared { inner } => {
                let y = invert(|y| inner.shape.eval(y).0 + y, x, inner.lo, inner.hi, false);
                let (_, d, dd) = inner.shape.eval(y);
                let g = d + 1.0;
                (-y, -1.0 / g, dd / (g * g * g))
            }
        }
    }
}

/// Solve `f(y) = target` for monotone `f` on `[lo, hi]` by bisection.
fn invert(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64, increasing: bool) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let above = f(m) > target;
        if above == increasing {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub lo: f64,
    pub hi: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactTag {
    PositiveContact,
    NegativeContact,
    LeviFlat,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactClass {
    pub tag: ContactTag,
    pub margin: f64,
}

const DOMAIN_SLACK: f64 = 1e-12;
/// `|L''|` below this counts as flat.
pub const FLAT_TOL: f64 = 1e-9;

impl Profile {
    pub fn new(lo: f64, hi: f64, shape: Shape) -> Self {
        Profile { lo, hi, shape }
    }

    pub fn contains(&self, x: f64) -> bool {
        let s = DOMAIN_SLACK * (1.0 + x.abs());
        x >= self.lo - s && x <= self.hi + s
    }

    /// `(L, L', L'')` at `x`.
    pub fn log_eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        if !self.contains(x) {
            return Err(Error::domain(format!(
                "x = {x} outside profile domain [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(self.shape.eval(x))
    }

    /// Like [`Profile::log_eval`] but extends the representation past the domain.
    pub fn log_eval_ext(&self, x: f64) -> (f64, f64, f64) {
        self.shape.eval(x)
    }

    /// `(p(r), p'(r), p''(r))`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius {r} is not positive")));
        }
        let (l, d, dd) = self.log_eval(r.ln())?;
        let p = l.exp();
        Ok((p, p * d / r, p * (dd - d + d * d) / (r * r)))
    }

    pub fn slope(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius {r} is not positive")));
        }
        Ok(self.log_eval(r.ln())?.1)
    }

    /// Coefficients `(r p', -p)` of the contact form in the `(dθ1, dθ2)` coframe.
    pub fn contact_form_coeffs(&self, r: f64) -> Result<(f64, f64)> {
        let (p, dp, _) = self.eval(r)?;
        Ok((r * dp, -p))
    }

    /// Uniform interior grid of `n` points.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        interior_grid(self.lo, self.hi, n)
    }

    /// `sign * L`, the profile of `p^sign` (used for reciprocal orientation).
    pub fn scaled(&self, scale: f64, offset: f64) -> Profile {
        Profile::new(
            self.lo,
            self.hi,
            Shape::Affinely {
                inner: Box::new(self.shape.clone()),
                scale,
                offset,
            },
        )
    }

    /// CSV sweep `r,p,dp,ddp,slope,L2` over `n` grid points.
    pub fn to_csv(&self, n: usize) -> String {
        let mut s = String::from("r,p,dp,ddp,slope,L2\n");
        for x in self.grid(n) {
            let r = x.exp();
            let (p, dp, ddp) = self.eval(r).expect("grid inside domain");
            let (_, d, dd) = self.shape.eval(x);
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r, p, dp, ddp, d, dd
            ));
        }
        s
    }
}

pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .collect()
}

/// Signed agreement margin between two quantities that must share a sign.
fn agreement(a: f64, b: f64) -> f64 {
    if a.abs() < FLAT_TOL && b.abs() < FLAT_TOL {
        FLAT_TOL - a.abs().max(b.abs())
    } else if a.signum() == b.signum() && a.abs() >= FLAT_TOL && b.abs() >= FLAT_TOL {
        a.abs().min(b.abs())
    } else {
        -(a - b).abs().max(FLAT_TOL)
    }
}

/// Compares `(log p(e^x))''` with the r-derivative of the slope `r p'/p`,
/// both computed from `p, p', p''` by the quotient formulas.
pub fn second_derivative_identity_check(p: &Profile, grid: &[f64]) -> Certificate {
    let mut cert = Certificate::new("second-derivative identity", format!("{} log points", grid.len()), 0.0);
    let mut all_flat = true;
    for &x in grid {
        let r = x.exp();
        let (v, d1, d2) = match p.eval(r) {
            Ok(t) => t,
            Err(e) => {
                cert.fail(e.to_string());
                continue;
            }
        };
        let lhs = r * ((d1 + r * d2) * v - r * d1 * d1) / (v * v);
        let rhs = ((d1 + r * d2) * v - r * d1 * d1) / (v * v);
        if lhs.abs() >= FLAT_TOL || rhs.abs() >= FLAT_TOL {
            all_flat = false;
        }
        cert.record(agreement(lhs, rhs), &[x]);
    }
    if all_flat && cert.pass {
        cert.note("LeviFlat: both sides vanish on the grid");
    }
    cert
}

pub fn classify_contact(p: &Profile, grid: &[f64]) -> Result<ContactClass> {
    if grid.len() < 32 {
        return Err(Error::domain(format!(
            "classification grid needs at least 32 points, got {}",
            grid.len()
        )));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut min_abs = f64::INFINITY;
    for &x in grid {
        let dd = p.log_eval(x)?.2;
        min = min.min(dd);
        max = max.max(dd);
        min_abs = min_abs.min(dd.abs());
    }
    let tag = if max.abs() < FLAT_TOL && min.abs() < FLAT_TOL {
        ContactTag::LeviFlat
    } else if max < -FLAT_TOL {
        ContactTag::PositiveContact
    } else if min > FLAT_TOL {
        ContactTag::NegativeContact
    } else {
        ContactTag::Indefinite
    };
    let margin = match tag {
        ContactTag::PositiveContact | ContactTag::NegativeContact => min_abs,
        _ => 0.0,
    };
    Ok(ContactClass { tag, margin })
}

/// Knobs for the model profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileKnobs {
    pub x_lo: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub x_switch: f64,
    pub target_slope: f64,
    pub knots: usize,
}

impl Default for ProfileKnobs {
    fn default() -> Self {
        ProfileKnobs {
            x_lo: -8.0,
            eps1: 0.004,
            eps2: 0.005,
            x_switch: -0.3,
            target_slope: -1.05,
            knots: 16,
        }
    }
}

/// A constructed profile with the certificates of its defining conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub profile: Profile,
    pub conditions: Vec<Certificate>,
}

impl ModelProfile {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

const CONDITION_GRID: usize = 400;

/// Seam abscissa `log(1/rho1)`.
pub fn seam_x(params: &Params) -> f64 {
    (1.0 / params.rho1).ln()
}

fn range_certificate(name: &str, profile: &Profile, lower: f64, upper: f64) -> Certificate {
    let mut c = Certificate::new(name, format!("{CONDITION_GRID} log points + ends"), 0.0);
    let mut xs = profile.grid(CONDITION_GRID);
    xs.push(profile.lo);
    xs.push(profile.hi);
    for x in xs {
        let v = profile.log_eval_ext(x).0.exp();
        c.record((v - lower).min(upper - v), &[x]);
    }
    c
}

fn second_sign_certificate(name: &str, profile: &Profile, sign: f64) -> Certificate {
    let mut c = Certificate::new(name, format!("{CONDITION_GRID} log points + ends"), 0.0);
    let mut xs = profile.grid(CONDITION_GRID);
    xs.push(profile.lo);
    xs.push(profile.hi);
    for x in xs {
        c.record(sign * profile.log_eval_ext(x).2, &[x]);
    }
    c
}

/// `f1(r) = c1 + eps1 r^2` on `log r in [x_lo, log(1/rho1)]`.
pub fn make_f1(params: &Params, knobs: &ProfileKnobs) -> Result<ModelProfile> {
    let eps1 = knobs.eps1;
    if !(eps1 > 0.0) {
        return Err(Error::feasibility("eps1 must be positive"));
    }
    let top = params.c1 + eps1 / (params.rho1 * params.rho1);
    if !(top < params.rho2) {
        return Err(Error::feasibility(format!(
            "range: c1 + eps1/rho1^2 = {top} is not below rho2 = {}",
            params.rho2
        )));
    }
    let hi = seam_x(params);
    let profile = Profile::new(
        knobs.x_lo,
        hi,
        Shape::Germ {
            c: params.c1,
            eps: eps1,
            sign: 1.0,
        },
    );
    let mut germ = Certificate::new("f1 germ c1 + eps1 r^2", "64 radii", 0.0);
    for i in 0..64 {
        let r = (knobs.x_lo + (hi - knobs.x_lo) * i as f64 / 63.0).exp();
        let v = profile.log_eval_ext(r.ln()).0.exp();
        let err = (v - (params.c1 + eps1 * r * r)).abs();
        germ.record(1e-12 - err, &[r]);
    }
    let convex = second_sign_certificate("f1 log-convex", &profile, 1.0);
    let mut slope = Certificate::new("f1 seam slope positive", "seam", 0.0);
    slope.record(profile.log_eval(hi)?.1, &[hi]);
    let range = range_certificate("f1 range (c1, rho2)", &profile, params.c1 - 1e-15, params.rho2);
    Ok(ModelProfile {
        profile,
        conditions: vec![germ, convex, slope, range],
    })
}

/// `f2`: the germ `c2 - eps2 r^2` up to `x_switch`, then a concave extension
/// reaching slope below `target_slope` at the seam while `f2 > 1`.
pub fn make_f2(params: &Params, knobs: &ProfileKnobs) -> Result<ModelProfile> {
    let eps2 = knobs.eps2;
    if !(eps2 > 0.0) {
        return Err(Error::feasibility("eps2 must be positive"));
    }
    let hi = seam_x(params);
    let xs = knobs.x_switch;
    if !(xs > knobs.x_lo && xs < hi) {
        return Err(Error::feasibility(format!(
            "x_switch = {xs} must lie inside ({}, {hi})",
            knobs.x_lo
        )));
    }
    if !(params.c2 - eps2 * (2.0 * xs).exp() > 1.0) {
        return Err(Error::feasibility("germ drops to 1 before x_switch"));
    }
    let germ_shape = Shape::Germ {
        c: params.c2,
        eps: eps2,
        sign: -1.0,
    };
    let (v, d, dd) = germ_shape.eval(xs);
    let germ = GermData {
        x: xs,
        value: v,
        deriv: d,
        second: dd,
    };
    let (tail, _) = extend_concave(germ, knobs.target_slope, hi, 0.0, knobs.knots)?;
    let profile = Profile::new(
        knobs.x_lo,
        hi,
        Shape::Composite {
            germ: Box::new(germ_shape),
            switch: xs,
            tail,
        },
    );
    let mut germ_c = Certificate::new("f2 germ c2 - eps2 r^2", "64 radii below switch", 0.0);
    for i in 0..64 {
        let x = knobs.x_lo + (xs - knobs.x_lo) * i as f64 / 63.0;
        let r = x.exp();
        let err = (profile.log_eval_ext(x).0.exp() - (params.c2 - eps2 * r * r)).abs();
        germ_c.record(1e-12 - err, &[r]);
    }
    let concave = second_sign_certificate("f2 log-concave", &profile, -1.0);
    let mut slope = Certificate::new("f2 seam slope below -1", "seam", 0.0);
    slope.record(-1.0 - profile.log_eval(hi)?.1, &[hi]);
    let range = range_certificate("f2 range (1, rho2)", &profile, 1.0, params.rho2);
    Ok(ModelProfile {
        profile,
        conditions: vec![germ_c, concave, slope, range],
    })
}

/// `h1` with `Lh1(x) = -L1^{-1}(x)` on the image of `[y_lo, f1.hi]`.
pub fn pushforward_h1(f1: &Profile, y_lo: f64) -> Result<Profile> {
    let y_lo = y_lo.max(f1.lo);
    for y in interior_grid(y_lo, f1.hi, 64).into_iter().chain([y_lo, f1.hi]) {
        let d = f1.log_eval(y)?.1;
        if !(d > 0.0) {
            return Err(Error::domain(format!("L1 not increasing at y = {y} (L1' = {d})")));
        }
    }
    let inner = Profile::new(y_lo, f1.hi, f1.shape.clone());
    let lo = inner.log_eval(y_lo)?.0;
    let hi = inner.log_eval(f1.hi)?.0;
    Ok(Profile::new(lo, hi, Shape::Inverse { inner: Box::new(inner) }))
}

/// Largest `y` in the domain with `L2'(y) >= -1`, i.e. the start of the branch.
pub fn h2_branch_start(f2: &Profile) -> Result<f64> {
    let g = |y: f64| f2.log_eval_ext(y).1 + 1.0;
    if !(g(f2.hi) < 0.0) {
        return Err(Error::Branch(format!(
            "L2' = {} at the seam is not below -1",
            g(f2.hi) - 1.0
        )));
    }
    if g(f2.lo) < 0.0 {
        return Ok(f2.lo);
    }
    Ok(invert(g, 0.0, f2.lo, f2.hi, false))
}

/// `h2` parametrized by `(L2(y) + y, -y)` for `y in [y_lo, f2.hi]`.
pub fn pushforward_h2(f2: &Profile, y_lo: f64) -> Result<Profile> {
    if !(y_lo < f2.hi) || !f2.contains(y_lo) {
        return Err(Error::Branch(format!("branch start {y_lo} outside the profile domain")));
    }
    for y in interior_grid(y_lo, f2.hi, 64).into_iter().chain([y_lo, f2.hi]) {
        let d = f2.log_eval(y)?.1;
        if !(d < -1.0) {
            return Err(Error::Branch(format!("L2' = {d} >= -1 at y = {y}")));
        }
    }
    let inner = Profile::new(y_lo, f2.hi, f2.shape.clone());
    let x_at = |y: f64| inner.shape.eval(y).0 + y;
    Ok(Profile::new(
        x_at(f2.hi),
        x_at(y_lo),
        Shape::Sheared { inner: Box::new(inner) },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seam {
    NearH1,
    NearH2,
}

/// Angle change from `(θ1, θ2)` to `(φ1, φ2)`.
pub fn angle_matrix(which: Seam) -> [[i8; 2]; 2] {
    match which {
        Seam::NearH1 => [[1, 0], [0, -1]],
        Seam::NearH2 => [[1, 1], [0, -1]],
    }
}

/// Push a torus tangent direction through an angle matrix.
pub fn push_direction(m: [[i8; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] as f64 * v[0] + m[0][1] as f64 * v[1],
        m[1][0] as f64 * v[0] + m[1][1] as f64 * v[1],
    ]
}

/// Kernel direction of the contact form on the torus of `|z1| = f(|z2|)`,
/// in `(θ1, θ2)` components: `(g', 1)` with `g' = L'`.
pub fn kernel_direction_f(f: &Profile, y: f64) -> Result<[f64; 2]> {
    Ok([f.log_eval(y)?.1, 1.0])
}

#[cfg(test)]
mod tests;
