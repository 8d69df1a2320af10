//! The abstract open book `M = (∂A × B²) ∪ (A × S¹)` and its embedding.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::{
    map_phi, map_phi_raw, normal_form, same_point, z_action, BranchIndex, Chart, ChartPoint, Params, C64,
};
use crate::cert::Certificate;
use crate::error::{Error, Result};

const MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    /// `∂A × B²`
    Collar,
    /// `A × S¹`
    Torus,
}

impl Part {
    pub fn tag(&self) -> &'static str {
        match self {
            Part::Collar => "collar",
            Part::Torus => "torus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MPoint {
    pub part: Part,
    pub u1: C64,
    pub u2: C64,
}

impl MPoint {
    pub fn new(part: Part, u1: C64, u2: C64) -> Self {
        MPoint { part, u1, u2 }
    }

    pub fn validate(&self, p: &Params) -> Result<()> {
        let (m1, m2) = (self.u1.norm(), self.u2.norm());
        let ok = match self.part {
            Part::Collar => {
                ((m1 - p.a).abs() <= MODULUS_TOL || (m1 - p.b).abs() <= MODULUS_TOL) && m2 <= 1.0 + MODULUS_TOL
            }
            Part::Torus => {
                m1 >= p.a - MODULUS_TOL && m1 <= p.b + MODULUS_TOL && (m2 - 1.0).abs() <= MODULUS_TOL
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("({m1}, {m2}) invalid for the {} part", self.part.tag())))
        }
    }
}

/// Shape of the twist profile `τ: [a, b] -> [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TauKind {
    Affine,
    /// `s + kappa sin(2 pi s) / (2 pi)` in the affine variable `s`; needs `|kappa| < 1`.
    Sine { kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSpec {
    pub a: f64,
    pub b: f64,
    pub kind: TauKind,
}

impl TwistSpec {
    pub fn affine(p: &Params) -> Self {
        TwistSpec {
            a: p.a,
            b: p.b,
            kind: TauKind::Affine,
        }
    }

    pub fn sine(p: &Params, kappa: f64) -> Result<Self> {
        if !(kappa.abs() < 1.0) {
            return Err(Error::domain(format!("|kappa| = {} must be below 1", kappa.abs())));
        }
        Ok(TwistSpec {
            a: p.a,
            b: p.b,
            kind: TauKind::Sine { kappa },
        })
    }

    fn check(&self, r: f64) -> Result<f64> {
        if r < self.a - MODULUS_TOL || r > self.b + MODULUS_TOL {
            return Err(Error::domain(format!("radius {r} outside [{}, {}]", self.a, self.b)));
        }
        Ok(((r - self.a) / (self.b - self.a)).clamp(0.0, 1.0))
    }

    pub fn tau(&self, r: f64) -> Result<f64> {
        let s = self.check(r)?;
        Ok(match self.kind {
            TauKind::Affine => s,
            TauKind::Sine { kappa } => s + kappa * (2.0 * PI * s).sin() / (2.0 * PI),
        })
    }

    pub fn tau_prime(&self, r: f64) -> Result<f64> {
        let s = self.check(r)?;
        let w = self.b - self.a;
        Ok(match self.kind {
            TauKind::Affine => 1.0 / w,
            TauKind::Sine { kappa } => (1.0 + kappa * (2.0 * PI * s).cos()) / w,
        })
    }

    pub fn tau_inv(&self, t: f64) -> Result<f64> {
        if !(-MODULUS_TOL..=1.0 + MODULUS_TOL).contains(&t) {
            return Err(Error::domain(format!("t = {t} outside [0, 1]")));
        }
        let t = t.clamp(0.0, 1.0);
        let w = self.b - self.a;
        match self.kind {
            TauKind::Affine => Ok(self.a + w * t),
            TauKind::Sine { .. } => {
                let (mut lo, mut hi) = (self.a, self.b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.tau(mid)? < t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// Margins of the sufficient inequalities: `(a - rho1 b, a/rho1 - b)`.
pub fn sufficient_margins(p: &Params) -> (f64, f64) {
    (p.a - p.rho1 * p.b, p.a / p.rho1 - p.b)
}

/// `(λ^k A) ∩ A = ∅` for `k != 0`, `|λ| in [c, rho1]`.
pub fn check_disjointness(p: &Params, k_range: i32) -> Certificate {
    let mut cert = Certificate::new(
        "page annulus disjoint from its translates",
        format!("k in [-{k_range}, {k_range}] minus 0, 64 moduli in [c, rho1]"),
        0.0,
    );
    for k in -k_range..=k_range {
        if k == 0 {
            continue;
        }
        for i in 0..64 {
            let lam = p.c + (p.rho1 - p.c) * i as f64 / 63.0;
            let sc = lam.powi(k);
            let slack = (p.a - sc * p.b).max(sc * p.a - p.b);
            cert.record(slack, &[k as f64, lam]);
        }
    }
    let (lower, upper) = sufficient_margins(p);
    cert.record(lower, &[1.0, p.rho1]);
    cert.record(upper, &[-1.0, p.rho1]);
    cert.note(format!("rho1*b < a margin {lower:.6}; a/rho1 > b margin {upper:.6}"));
    cert
}

/// `δ(z) = z e^{2 pi i τ(|z|)}`.
pub fn monodromy_delta(spec: &TwistSpec, z: C64) -> Result<C64> {
    let t = spec.tau(z.norm())?;
    Ok(z * C64::from_polar(1.0, 2.0 * PI * t))
}

/// `q(z) = (zbar/|z|, τ(|z|))`.
pub fn q_chart(spec: &TwistSpec, z: C64) -> Result<(C64, f64)> {
    let r = z.norm();
    let t = spec.tau(r)?;
    Ok((z.conj() / r, t))
}

/// `q^{-1}(w, t) = τ^{-1}(t) wbar`.
pub fn q_inv(spec: &TwistSpec, w: C64, t: f64) -> Result<C64> {
    if (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("|w| = {} is not 1", w.norm())));
    }
    Ok(spec.tau_inv(t)? * w.conj())
}

/// Determinant of `d(arg w, t) / d(x, y)` for `q`, by central differences.
pub fn q_jacobian_det(spec: &TwistSpec, z: C64) -> Result<f64> {
    let h = 1e-6;
    let f = |z: C64| -> Result<(f64, f64)> {
        let (w, t) = q_chart(spec, z)?;
        Ok((w.arg(), t))
    };
    let unwrap = |d: f64| {
        if d > PI {
            d - 2.0 * PI
        } else if d < -PI {
            d + 2.0 * PI
        } else {
            d
        }
    };
    let (xp, xm) = (f(z + h)?, f(z - h)?);
    let (yp, ym) = (f(z + C64::new(0.0, h))?, f(z - C64::new(0.0, h))?);
    let th_x = unwrap(xp.0 - xm.0) / (2.0 * h);
    let th_y = unwrap(yp.0 - ym.0) / (2.0 * h);
    let t_x = (xp.1 - xm.1) / (2.0 * h);
    let t_y = (yp.1 - ym.1) / (2.0 * h);
    Ok(th_x * t_y - th_y * t_x)
}

/// `δ₋(w, t) = (w e^{-2 pi i t}, t)`.
pub fn left_twist(w: C64, t: f64) -> (C64, f64) {
    (w * C64::from_polar(1.0, -2.0 * PI * t), t)
}

pub const CONJUGATION_TOL: f64 = 1e-9;

/// `q ∘ δ ∘ q^{-1} = δ₋` on samples of `S¹ × [0, 1]`.
pub fn conjugation_check(spec: &TwistSpec, samples: &[(C64, f64)]) -> Certificate {
    let mut cert = Certificate::new("monodromy conjugate to the left-handed twist", format!("{} samples", samples.len()), 0.0);
    let mut worst = 0.0f64;
    for &(w, t) in samples {
        let res = (|| -> Result<f64> {
            let z = q_inv(spec, w, t)?;
            let (w2, t2) = q_chart(spec, monodromy_delta(spec, z)?)?;
            let (w3, t3) = left_twist(w, t);
            Ok((w2 - w3).norm() + (t2 - t3).abs())
        })();
        match res {
            Ok(err) => {
                worst = worst.max(err);
                cert.record(CONJUGATION_TOL - err, &[w.re, w.im, t]);
            }
            Err(e) => cert.fail(e.to_string()),
        }
    }
    cert.note(format!("max deviation {worst:.3e}"));
    cert
}

/// Uniform random samples of `S¹ × [0, 1]`.
pub fn twist_samples(n: usize, seed: u64) -> Vec<(C64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)), rng.gen_range(0.0..=1.0)))
        .collect()
}

/// `k([(z, t)]) = (z e^{2 pi i τ(|z|)(t - 1)}, e^{2 pi i t})`.
pub fn mapping_torus_k(spec: &TwistSpec, z: C64, t: f64) -> Result<(C64, C64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0, 1]")));
    }
    let tau = spec.tau(z.norm())?;
    Ok((
        z * C64::from_polar(1.0, 2.0 * PI * tau * (t - 1.0)),
        C64::from_polar(1.0, 2.0 * PI * t),
    ))
}

/// Winding number of `e^{2 pi i τ(r)}` as `r` runs from `a` to `b`.
pub fn twist_winding(spec: &TwistSpec, n: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut prev = 0.0f64;
    for i in 1..=n {
        let r = spec.a + (spec.b - spec.a) * i as f64 / n as f64;
        let ang = C64::from_polar(1.0, 2.0 * PI * spec.tau(r)?).arg();
        let mut d = ang - prev;
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = ang;
    }
    Ok(total / (2.0 * PI))
}

/// `Φ′(w1, w2) = Φ(w1, w2 / c)`.
pub fn map_phi_prime(p: &Params, w1: C64, w2: C64) -> Result<ChartPoint> {
    check_phi_prime(p, w1, w2)?;
    map_phi(p, w1, w2 / p.c, BranchIndex(0))
}

fn check_phi_prime(p: &Params, w1: C64, w2: C64) -> Result<()> {
    let m1 = w1.norm();
    if m1 < p.a - MODULUS_TOL || m1 > p.b + MODULUS_TOL {
        return Err(Error::domain(format!("|w1| = {m1} outside [a, b]")));
    }
    if (w2.norm() - 1.0).abs() > MODULUS_TOL {
        return Err(Error::domain(format!("|w2| = {} is not 1", w2.norm())));
    }
    Ok(())
}

/// Relative Cauchy-Riemann residual of `w1 -> Φ′(w1, w2)` (pre-canonical).
pub fn phi_prime_cr_residual(p: &Params, w1: C64, w2: C64) -> Result<f64> {
    check_phi_prime(p, w1, w2)?;
    let h = 1e-6;
    let f = |w: C64| -> Result<C64> { Ok(map_phi_raw(p, w, w2 / p.c, BranchIndex(0))?.0) };
    let fx = (f(w1 + h)? - f(w1 - h)?) / (2.0 * h);
    let fy = (f(w1 + C64::new(0.0, h))? - f(w1 - C64::new(0.0, h))?) / (2.0 * h);
    Ok((fy - C64::new(0.0, 1.0) * fx).norm() / fx.norm())
}

/// The embedding `g: M -> E`.
pub fn embed_g(p: &Params, m: &MPoint) -> Result<ChartPoint> {
    m.validate(p)?;
    match m.part {
        Part::Torus => map_phi_prime(p, m.u1, m.u2),
        Part::Collar => {
            let outer = (m.u1.norm() - p.b).abs() <= MODULUS_TOL;
            let z1 = if outer { p.c * m.u1 } else { m.u1 };
            let q = ChartPoint::new(Chart::ChartV, z1, m.u2 / p.c);
            q.validate(p)?;
            Ok(q)
        }
    }
}

/// `ψ₁ = id` at `|z1| = a`, `ψ₂(z1, z2) = (z1 z2, z2)` at `|z1| = b`.
pub fn seam_glue(p: &Params, z1: C64, z2: C64) -> Result<(C64, C64)> {
    if (z1.norm() - p.b).abs() <= MODULUS_TOL {
        Ok((z1 * z2, z2))
    } else if (z1.norm() - p.a).abs() <= MODULUS_TOL {
        Ok((z1, z2))
    } else {
        Err(Error::domain(format!("|z1| = {} is not a seam radius", z1.norm())))
    }
}

/// Z-action shift `n` with `raw(collar side) = n . raw(torus side)`.
pub fn seam_shift(p: &Params, z1: C64, z2: C64) -> Result<i64> {
    let collar = embed_g(p, &MPoint::new(Part::Collar, z1, z2))?;
    let (g1, g2) = seam_glue(p, z1, z2)?;
    let (c1, c2) = map_phi_raw(p, collar.z1, collar.z2, BranchIndex(0))?;
    let (t1, t2) = map_phi_raw(p, g1, g2 / p.c, BranchIndex(0))?;
    if (c2 - t2).norm() > 1e-12 {
        return Err(Error::domain("seam sides lie on different fibers"));
    }
    let n = ((c1.norm() / t1.norm()).ln() / t2.norm().ln()).round() as i64;
    let (s1, _) = z_action(n, t1, t2)?;
    if (s1 - c1).norm() > 1e-9 * c1.norm() {
        return Err(Error::domain(format!("no integral shift relates the seam sides (n = {n})")));
    }
    Ok(n)
}

pub const WELLDEF_TOL: f64 = 1e-8;

/// Both seam descriptions of a boundary-torus point agree in `E`;
/// the outer seam must need exactly one Z-shift.
pub fn welldef_check(p: &Params, seam_samples: &[(C64, C64)]) -> Certificate {
    let mut cert = Certificate::new("embedding well defined on the seams", format!("{} seam samples", seam_samples.len()), 0.0);
    for &(z1, z2) in seam_samples {
        let at = [z1.re, z1.im, z2.re, z2.im];
        let res = (|| -> Result<bool> {
            let collar = embed_g(p, &MPoint::new(Part::Collar, z1, z2))?;
            let (g1, g2) = seam_glue(p, z1, z2)?;
            let torus = embed_g(p, &MPoint::new(Part::Torus, g1, g2))?;
            let same = same_point(p, &collar, &torus, WELLDEF_TOL);
            let outer = (z1.norm() - p.b).abs() <= MODULUS_TOL;
            let want = if outer { 1 } else { 0 };
            Ok(same && seam_shift(p, z1, z2)? == want)
        })();
        match res {
            Ok(true) => cert.record(1.0, &at),
            Ok(false) => cert.record(-1.0, &at),
            Err(e) => {
                cert.record(f64::NEG_INFINITY, &at);
                cert.note(e.to_string());
            }
        }
    }
    cert
}

/// Random seam samples, alternating between the two boundary tori.
pub fn seam_samples(p: &Params, n: usize, seed: u64) -> Vec<(C64, C64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let r = if i % 2 == 0 { p.a } else { p.b };
            (
                C64::from_polar(r, rng.gen_range(0.0..2.0 * PI)),
                C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)),
            )
        })
        .collect()
}

/// Random points of `M`, split evenly between the two parts.
pub fn random_mpoints(p: &Params, n: usize, seed: u64) -> Vec<MPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let th1 = rng.gen_range(0.0..2.0 * PI);
            let th2 = rng.gen_range(0.0..2.0 * PI);
            if i % 2 == 0 {
                let r = rng.gen_range(p.a..p.b);
                MPoint::new(Part::Torus, C64::from_polar(r, th1), C64::from_polar(1.0, th2))
            } else {
                let r1 = if rng.gen_bool(0.5) { p.a } else { p.b };
                let r2: f64 = rng.gen_range(0.0f64..1.0).sqrt();
                MPoint::new(Part::Collar, C64::from_polar(r1, th1), C64::from_polar(r2, th2))
            }
        })
        .collect()
}

/// No two samples share an image point (up to `tol`).
pub fn injectivity_check(p: &Params, points: &[MPoint], tol: f64) -> Certificate {
    let mut cert = Certificate::new("embedding injective on samples", format!("{} points", points.len()), 0.0);
    let mut images = Vec::with_capacity(points.len());
    for (i, m) in points.iter().enumerate() {
        match embed_g(p, m) {
            Ok(q) => images.push((normal_form(p, &q), i)),
            Err(e) => cert.fail(e.to_string()),
        }
    }
    images.sort_by(|x, y| x.0.z1.re.partial_cmp(&y.0.z1.re).unwrap());
    let mut collisions = 0;
    for i in 0..images.len() {
        for k in i + 1..images.len() {
            if images[k].0.z1.re - images[i].0.z1.re > tol {
                break;
            }
            if images[k].0.chart == images[i].0.chart {
                let (a, b) = (&images[i].0, &images[k].0);
                if same_point(p, a, b, tol) {
                    collisions += 1;
                    cert.record(-1.0, &a.coords());
                }
            }
        }
    }
    if collisions == 0 {
        cert.record(1.0, &[]);
        cert.samples = images.len();
    }
    cert.note(format!("{collisions} colliding pairs"));
    cert
}

/// `n` points of the page over `theta`: images of `A × {e^{i theta}}`.
pub fn sample_page(p: &Params, theta: f64, n: usize) -> Result<Vec<(MPoint, ChartPoint)>> {
    if n < 2 {
        return Err(Error::domain("a page sample needs at least two points"));
    }
    let u2 = C64::from_polar(1.0, theta);
    (0..n)
        .map(|i| {
            let r = p.a + (p.b - p.a) * i as f64 / (n - 1) as f64;
            let ang = 2.399963229728653 * i as f64;
            let m = MPoint::new(Part::Torus, C64::from_polar(r, ang), u2);
            Ok((m, embed_g(p, &m)?))
        })
        .collect()
}

/// Binding circles `∂A × {0}`.
pub fn sample_binding(p: &Params, n: usize) -> Result<Vec<(MPoint, ChartPoint)>> {
    let mut out = Vec::with_capacity(2 * n);
    for r in [p.a, p.b] {
        for i in 0..n {
            let m = MPoint::new(Part::Collar, C64::from_polar(r, 2.0 * PI * i as f64 / n as f64), C64::new(0.0, 0.0));
            out.push((m, embed_g(p, &m)?));
        }
    }
    Ok(out)
}

/// The two corner tori `∂A × S¹`, where the pieces of `M` meet.
pub fn sample_corner_tori(p: &Params, n: usize) -> Result<Vec<(MPoint, ChartPoint)>> {
    let mut out = Vec::with_capacity(2 * n * n);
    for r in [p.a, p.b] {
        for i in 0..n {
            for k in 0..n {
                let u1 = C64::from_polar(r, 2.0 * PI * i as f64 / n as f64);
                let u2 = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
                let m = MPoint::new(Part::Torus, u1, u2);
                out.push((m, embed_g(p, &m)?));
            }
        }
    }
    Ok(out)
}

pub fn point_cloud_csv(rows: &[(MPoint, ChartPoint)]) -> String {
    let mut s = String::from("part,u1_re,u1_im,u2_re,u2_im,chart,z1_re,z1_im,z2_re,z2_im\n");
    for (m, q) in rows {
        s.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            m.part.tag(),
            m.u1.re,
            m.u1.im,
            m.u2.re,
            m.u2.im,
            q.chart.tag(),
            q.z1.re,
            q.z1.im,
            q.z2.re,
            q.z2.im
        ));
    }
    s
}
