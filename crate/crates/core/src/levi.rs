//! Levi-form numerics on C^2 by central finite differences.
//!
//! Real coordinates are `(x1, y1, x2, y2)` with `J dx = dy`, `J dy = -dx`.
//! The Levi matrix is the complex Hessian `[d^2 u / dz_i dzbar_j]`.
//! Two-forms come in two normalizations (see [`Convention`]): with the full
//! one `-dd^C u(v, Jv) = 4 v* L v`, with the half one it is `2 v* L v`.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cert::Certificate;
use crate::error::{Error, Result};

pub type P4 = [f64; 4];

pub fn point(z1: C64, z2: C64) -> P4 {
    [z1.re, z1.im, z2.re, z2.im]
}

pub fn complex_of(p: &P4) -> (C64, C64) {
    (C64::new(p[0], p[1]), C64::new(p[2], p[3]))
}

/// Real-valued function on a region of C^2.
pub trait ScalarField: Sync {
    fn value(&self, p: &P4) -> Result<f64>;
}

/// A closure field with an optional region predicate.
pub struct FnField<F> {
    f: F,
    region: Option<Box<dyn Fn(&P4) -> bool + Send + Sync>>,
}

impl<F: Fn(&P4) -> f64 + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField { f, region: None }
    }

    pub fn with_region(mut self, region: impl Fn(&P4) -> bool + Send + Sync + 'static) -> Self {
        self.region = Some(Box::new(region));
        self
    }
}

impl<F: Fn(&P4) -> f64 + Sync> ScalarField for FnField<F> {
    fn value(&self, p: &P4) -> Result<f64> {
        if let Some(r) = &self.region {
            if !r(p) {
                return Err(Error::Region(format!("{p:?}")));
            }
        }
        let v = (self.f)(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Region(format!("non-finite value at {p:?}")))
        }
    }
}

/// Normalization of wedge products and exterior derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// `(a ^ b)(X, Y) = a(X)b(Y) - a(Y)b(X)`, `da(X, Y) = X a(Y) - Y a(X)`.
    Full,
    /// Both of the above with a factor 1/2.
    Half,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::Full => 1.0,
            Convention::Half => 0.5,
        }
    }
}

pub const DEFAULT_STEP: f64 = 1e-5;

pub fn j(v: &P4) -> P4 {
    [-v[1], v[0], -v[3], v[2]]
}

fn add(p: &P4, v: &P4, s: f64) -> P4 {
    [p[0] + s * v[0], p[1] + s * v[1], p[2] + s * v[2], p[3] + s * v[3]]
}

pub fn dot(a: &P4, b: &P4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &P4) -> f64 {
    dot(a, a).sqrt()
}

fn steps(p: &P4, step: f64) -> P4 {
    let mut h = [0.0; 4];
    for i in 0..4 {
        h[i] = step * p[i].abs().max(1.0);
    }
    h
}

fn axis(i: usize) -> P4 {
    let mut e = [0.0; 4];
    e[i] = 1.0;
    e
}

/// Values of a field on the central-difference stencil of a point.
///
/// Cached so that several functions of the same field (e.g. `exp(lambda u)`
/// for many `lambda`) can be differentiated without re-evaluating it.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub center: f64,
    h: P4,
    /// `[i][0]` at `+h_i`, `[i][1]` at `-h_i`
    axial: [[f64; 2]; 4],
    /// `[i][j]` for `i < j`: values at `(+,+), (+,-), (-,+), (-,-)`
    cross: [[[f64; 4]; 4]; 4],
}

impl Stencil {
    pub fn sample(u: &dyn ScalarField, p: &P4, step: f64) -> Result<Stencil> {
        let h = steps(p, step);
        let center = u.value(p)?;
        let mut axial = [[0.0; 2]; 4];
        let mut cross = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            axial[i][0] = u.value(&add(p, &axis(i), h[i]))?;
            axial[i][1] = u.value(&add(p, &axis(i), -h[i]))?;
            for jj in i + 1..4 {
                for (k, (si, sj)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
                    .into_iter()
                    .enumerate()
                {
                    let q = add(&add(p, &axis(i), si * h[i]), &axis(jj), sj * h[jj]);
                    cross[i][jj][k] = u.value(&q)?;
                }
            }
        }
        Ok(Stencil {
            center,
            h,
            axial,
            cross,
        })
    }

    /// Apply `g` to every stored value.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Stencil {
        let mut s = self.clone();
        s.center = g(self.center);
        for i in 0..4 {
            for k in 0..2 {
                s.axial[i][k] = g(self.axial[i][k]);
            }
            for jj in i + 1..4 {
                for k in 0..4 {
                    s.cross[i][jj][k] = g(self.cross[i][jj][k]);
                }
            }
        }
        s
    }

    pub fn gradient(&self) -> P4 {
        let mut g = [0.0; 4];
        for i in 0..4 {
            g[i] = (self.axial[i][0] - self.axial[i][1]) / (2.0 * self.h[i]);
        }
        g
    }

    pub fn hessian(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = (self.axial[i][0] - 2.0 * self.center + self.axial[i][1]) / (self.h[i] * self.h[i]);
            for jj in i + 1..4 {
                let c = self.cross[i][jj];
                let v = (c[0] - c[1] - c[2] + c[3]) / (4.0 * self.h[i] * self.h[jj]);
                m[i][jj] = v;
                m[jj][i] = v;
            }
        }
        m
    }
}

/// First and second derivatives of a field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: P4,
    pub hess: [[f64; 4]; 4],
}

impl Jet {
    /// Central differences with relative `step`.
    pub fn at(u: &dyn ScalarField, p: &P4, step: f64) -> Result<Jet> {
        let s = Stencil::sample(u, p, step)?;
        Ok(Jet {
            value: s.center,
            grad: s.gradient(),
            hess: s.hessian(),
        })
    }

    /// One Richardson step `(4 D(h/2) - D(h)) / 3` on top of central differences.
    pub fn richardson(u: &dyn ScalarField, p: &P4, step: f64) -> Result<Jet> {
        let a = Jet::at(u, p, step)?;
        let b = Jet::at(u, p, step / 2.0)?;
        let mut out = b;
        for i in 0..4 {
            out.grad[i] = (4.0 * b.grad[i] - a.grad[i]) / 3.0;
            for jj in 0..4 {
                out.hess[i][jj] = (4.0 * b.hess[i][jj] - a.hess[i][jj]) / 3.0;
            }
        }
        Ok(out)
    }

    pub fn du(&self, v: &P4) -> f64 {
        dot(&self.grad, v)
    }

    pub fn hess_form(&self, a: &P4, b: &P4) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for jj in 0..4 {
                s += a[i] * self.hess[i][jj] * b[jj];
            }
        }
        s
    }

    /// `d^C u(X) = du(JX)`.
    pub fn dc(&self, x: &P4) -> f64 {
        self.du(&j(x))
    }

    /// `dd^C u(X, Y)`.
    pub fn ddc(&self, x: &P4, y: &P4, conv: Convention) -> f64 {
        conv.factor() * (self.hess_form(x, &j(y)) - self.hess_form(y, &j(x)))
    }

    /// `(du ^ d^C u)(X, Y)`.
    pub fn du_wedge_dc(&self, x: &P4, y: &P4, conv: Convention) -> f64 {
        conv.factor() * (self.du(x) * self.dc(y) - self.du(y) * self.dc(x))
    }

    pub fn levi(&self) -> HermitianForm {
        HermitianForm::from_hessian(&self.hess)
    }

    /// Unit complex tangency of the level set through the point.
    pub fn tangency(&self) -> Result<[C64; 2]> {
        complex_tangency(&self.grad)
    }
}

/// `du(J v)` by central differences.
pub fn d_c(u: &dyn ScalarField, p: &P4, v: &P4) -> Result<f64> {
    let jv = j(v);
    let n = norm(&jv);
    if n == 0.0 {
        return Ok(0.0);
    }
    let h = DEFAULT_STEP * norm(p).max(1.0) / n;
    Ok((u.value(&add(p, &jv, h))? - u.value(&add(p, &jv, -h))?) / (2.0 * h))
}

/// `dd^C u(X, Y)` as the exterior derivative of the one-form `d^C u`,
/// by nested differences of [`d_c`]-type quotients with outer step `step`.
pub fn ddc_direct(u: &dyn ScalarField, p: &P4, x: &P4, y: &P4, step: f64, conv: Convention) -> Result<f64> {
    let dc = |q: &P4, v: &P4| -> Result<f64> {
        let jv = j(v);
        Ok((u.value(&add(q, &jv, step))? - u.value(&add(q, &jv, -step))?) / (2.0 * step))
    };
    let xy = (dc(&add(p, x, step), y)? - dc(&add(p, x, -step), y)?) / (2.0 * step);
    let yx = (dc(&add(p, y, step), x)? - dc(&add(p, y, -step), x)?) / (2.0 * step);
    Ok(conv.factor() * (xy - yx))
}

/// 2x2 Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianForm {
    pub m: [[C64; 2]; 2],
}

impl HermitianForm {
    pub fn from_hessian(h: &[[f64; 4]; 4]) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
                m[a][b] = C64::new(
                    0.25 * (h[xa][xb] + h[ya][yb]),
                    0.25 * (h[xa][yb] - h[ya][xb]),
                );
            }
        }
        HermitianForm { m }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        HermitianForm {
            m: [[C64::new(a, 0.0), z], [z, C64::new(b, 0.0)]],
        }
    }

    /// `||A - A*||` (Frobenius).
    pub fn hermitian_defect(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                s += (self.m[a][b] - self.m[b][a].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.m[0][0].re;
        let c = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
        (mid - rad, mid + rad)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    /// `v* A v`.
    pub fn quad(&self, v: &[C64; 2]) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                s += v[a].conj() * self.m[a][b] * v[b];
            }
        }
        s.re
    }
}

pub fn levi_matrix(u: &dyn ScalarField, p: &P4) -> Result<HermitianForm> {
    Ok(Jet::at(u, p, DEFAULT_STEP)?.levi())
}

/// Real 4-vector of a complex 2-vector.
pub fn real_of(v: &[C64; 2]) -> P4 {
    [v[0].re, v[0].im, v[1].re, v[1].im]
}

/// Unit vector spanning `ker du ∩ ker d^C u` for real gradient `g`.
pub fn complex_tangency(g: &P4) -> Result<[C64; 2]> {
    let g1 = C64::new(g[0], g[1]);
    let g2 = C64::new(g[2], g[3]);
    let n = (g1.norm_sqr() + g2.norm_sqr()).sqrt();
    if !(n > 0.0) {
        return Err(Error::NotRegular(*g));
    }
    Ok([g2.conj() / n, -g1.conj() / n])
}

pub const PSH_TOL: f64 = 1e-8;

/// Strict plurisubharmonicity on a grid: minimum Levi eigenvalue above `tol`.
pub fn is_strictly_psh(u: &dyn ScalarField, grid: &[P4], tol: f64) -> Certificate {
    let rows: Vec<Result<f64>> = grid
        .par_iter()
        .map(|p| Ok(levi_matrix(u, p)?.min_eigenvalue()))
        .collect();
    let mut c = Certificate::new("strict plurisubharmonicity", format!("{} points", grid.len()), tol);
    for (p, r) in grid.iter().zip(rows) {
        match r {
            Ok(m) => c.record(m, p),
            Err(e) => {
                c.record(f64::NEG_INFINITY, p);
                c.note(e.to_string());
            }
        }
    }
    c
}

/// Sign pattern of a Hartogs-type boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HartogsTag {
    Convex,
    Concave,
    Flat,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HartogsOutcome {
    pub certificate: Certificate,
    pub tag: HartogsTag,
}

/// Below this magnitude both sides of the Hartogs comparison count as flat.
pub const HARTOGS_FLAT: f64 = 1e-4;

fn sign_class(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

/// Compare the Laplacian of `psi` with the Levi form of
/// `rho = log|z2| + psi(z1)` on the complex tangency of `{rho = 0}`.
pub fn hartogs_boundary_test(psi: &(dyn Fn(C64) -> f64 + Sync), grid: &[C64]) -> HartogsOutcome {
    let h = 1e-4;
    let rows: Vec<Result<(f64, f64)>> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &z)| {
            let lap = (psi(z + h) + psi(z - h) + psi(z + C64::new(0.0, h)) + psi(z - C64::new(0.0, h))
                - 4.0 * psi(z))
                / (h * h);
            let theta = 2.399963229728653 * k as f64;
            let z2 = C64::from_polar((-psi(z)).exp(), theta);
            let rho = FnField::new(|p: &P4| {
                let (a, b) = complex_of(p);
                b.norm().ln() + psi(a)
            });
            let jet = Jet::at(&rho, &point(z, z2), DEFAULT_STEP)?;
            let v = jet.tangency()?;
            Ok((lap, jet.levi().quad(&v)))
        })
        .collect();
    let mut c = Certificate::new("Hartogs boundary sign agreement", format!("{} planar points", grid.len()), 0.0);
    let mut classes = Vec::new();
    for (z, r) in grid.iter().zip(rows) {
        let at = [z.re, z.im];
        match r {
            Ok((lap, levi)) => {
                let (a, b) = (sign_class(lap, HARTOGS_FLAT), sign_class(levi, HARTOGS_FLAT));
                let slack = if a == b {
                    match a {
                        0 => HARTOGS_FLAT - lap.abs().max(levi.abs()),
                        _ => lap.abs().min(levi.abs()),
                    }
                } else {
                    -(lap - levi).abs().max(HARTOGS_FLAT)
                };
                c.record(slack, &at);
                classes.push(a);
            }
            Err(e) => {
                c.record(f64::NEG_INFINITY, &at);
                c.note(e.to_string());
            }
        }
    }
    let tag = if classes.iter().all(|&s| s == 1) {
        HartogsTag::Convex
    } else if classes.iter().all(|&s| s == -1) {
        HartogsTag::Concave
    } else if classes.iter().all(|&s| s == 0) {
        HartogsTag::Flat
    } else {
        HartogsTag::Mixed
    };
    c.note(format!("{tag:?}"));
    HartogsOutcome { certificate: c, tag }
}

fn random_unit(rng: &mut ChaCha8Rng) -> P4 {
    loop {
        let v: P4 = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n, v[3] / n];
        }
    }
}

/// Relative error between the two sides of
/// `-dd^C(g o γ) = -g''(γ) dγ ^ d^Cγ - g'(γ) dd^Cγ` on random pairs `(v, Jv)`.
///
/// `gfun` returns `(g, g', g'')`. Derivatives use Richardson-extrapolated
/// central differences with relative `step`.
pub fn composition_identity_check(
    gamma: &dyn ScalarField,
    gfun: &(dyn Fn(f64) -> (f64, f64, f64) + Sync),
    samples: &[P4],
    step: f64,
    seed: u64,
) -> Certificate {
    let composed = FnField::new(|p: &P4| gamma.value(p).map(|t| gfun(t).0).unwrap_or(f64::NAN));
    let tol = 1e-5;
    let mut c = Certificate::new("composition identity", format!("{} samples", samples.len()), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in samples {
        let v = random_unit(&mut rng);
        let jv = j(&v);
        let res = (|| -> Result<f64> {
            let jg = Jet::richardson(gamma, p, step)?;
            let jc = Jet::richardson(&composed, p, step)?;
            let conv = Convention::Full;
            let lhs = -jc.ddc(&v, &jv, conv);
            let (_, g1, g2) = gfun(jg.value);
            let rhs = -g2 * jg.du_wedge_dc(&v, &jv, conv) - g1 * jg.ddc(&v, &jv, conv);
            Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12))
        })();
        match res {
            Ok(err) => c.record(tol - err, p),
            Err(e) => c.fail(e.to_string()),
        }
    }
    c
}

/// `-dγ ^ d^Cγ (v, Jv)` against `1/2 ((dγ(v))^2 + (dγ(Jv))^2)` in the half convention.
pub fn quadratic_term_check(gamma: &dyn ScalarField, samples: &[P4], seed: u64) -> Certificate {
    let tol = 1e-6;
    let mut c = Certificate::new("quadratic term identity", format!("{} samples", samples.len()), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in samples {
        let v = random_unit(&mut rng);
        let jv = j(&v);
        let res = (|| -> Result<f64> {
            let lhs_a = d_c(gamma, p, &jv)?;
            let lhs_b = d_c(gamma, p, &v)?;
            let jet = Jet::at(gamma, p, DEFAULT_STEP)?;
            let (dv, djv) = (jet.du(&v), jet.du(&jv));
            let lhs = -0.5 * (dv * lhs_a - djv * lhs_b);
            let rhs = 0.5 * (dv * dv + djv * djv);
            Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12))
        })();
        match res {
            Ok(err) => c.record(tol - err, p),
            Err(e) => c.fail(e.to_string()),
        }
    }
    c
}

/// Determinant of the 4x4 matrix with the given columns.
pub fn det4(c: [P4; 4]) -> f64 {
    let m = |r: usize, k: usize| c[k][r];
    let mut det = 0.0;
    for (k, sign) in [(0, 1.0), (1, -1.0), (2, 1.0), (3, -1.0)] {
        let cols: Vec<usize> = (0..4).filter(|&x| x != k).collect();
        let minor = m(1, cols[0]) * (m(2, cols[1]) * m(3, cols[2]) - m(2, cols[2]) * m(3, cols[1]))
            - m(1, cols[1]) * (m(2, cols[0]) * m(3, cols[2]) - m(2, cols[2]) * m(3, cols[0]))
            + m(1, cols[2]) * (m(2, cols[0]) * m(3, cols[1]) - m(2, cols[1]) * m(3, cols[0]));
        det += sign * m(0, k) * minor;
    }
    det
}

/// Orthonormal basis `(Jn, v, Jv)` of `n^⊥`, reordered so that
/// `det[n, e1, e2, e3] > 0`.
pub fn oriented_basis(normal: &P4) -> Result<[P4; 3]> {
    let nn = norm(normal);
    if !(nn > 0.0) {
        return Err(Error::NotRegular(*normal));
    }
    let n = [normal[0] / nn, normal[1] / nn, normal[2] / nn, normal[3] / nn];
    let e1 = j(&n);
    let v = real_of(&complex_tangency(&n)?);
    let jv = j(&v);
    if det4([n, e1, v, jv]) > 0.0 {
        Ok([e1, v, jv])
    } else {
        Ok([e1, jv, v])
    }
}

/// `(α ^ dα)(e1, e2, e3)` up to a positive factor, for `α = -d^C u`.
pub fn alpha_dalpha(jet: &Jet, basis: &[P4; 3]) -> f64 {
    let alpha = |x: &P4| -jet.dc(x);
    let dalpha = |x: &P4, y: &P4| -jet.ddc(x, y, Convention::Full);
    let [e1, e2, e3] = basis;
    alpha(e1) * dalpha(e2, e3) + alpha(e2) * dalpha(e3, e1) + alpha(e3) * dalpha(e1, e2)
}

/// Sign-carrying `α ^ dα / |du|^2` on the level set through `p`, with the
/// orientation induced by the outward normal `grad u` (or `-grad u`).
pub fn contact_sign(u: &dyn ScalarField, p: &P4, outward_is_gradient: bool, step: f64) -> Result<f64> {
    let jet = Jet::at(u, p, step)?;
    let n = if outward_is_gradient {
        jet.grad
    } else {
        jet.grad.map(|x| -x)
    };
    let basis = oriented_basis(&n)?;
    let g = norm(&jet.grad);
    Ok(alpha_dalpha(&jet, &basis) / (g * g))
}

/// A chart-local piece of a λ search: the field and its two grids.
pub struct LambdaBlock<'a> {
    pub label: String,
    pub field: &'a dyn ScalarField,
    pub grid: &'a [P4],
    pub refined: &'a [P4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaOutcome {
    /// Smallest passing λ on the search grids.
    pub lambda: f64,
    /// Smallest of `λ, 2λ, 4λ` passing on the refined grids.
    pub certified_lambda: f64,
    pub probes: Vec<(f64, bool)>,
    pub contact: Certificate,
    pub certificate: Certificate,
}

pub const LAMBDA_START: f64 = 1e-3;

fn prepare(block: &LambdaBlock, refined: bool) -> Result<Vec<(P4, Stencil)>> {
    let pts = if refined { block.refined } else { block.grid };
    pts.par_iter()
        .map(|p| Ok((*p, Stencil::sample(block.field, p, DEFAULT_STEP)?)))
        .collect()
}

/// Minimum Levi eigenvalue of `exp(λ(u - u(p)))` at the stencil center.
pub fn exp_levi_min(s: &Stencil, lambda: f64) -> f64 {
    let c = s.center;
    let e = s.map(|t| (lambda * (t - c)).exp());
    HermitianForm::from_hessian(&e.hessian()).min_eigenvalue()
}

fn contact_precheck(label: &str, stencils: &[(P4, Stencil)], cert: &mut Certificate) -> Result<()> {
    for (p, s) in stencils {
        let jet = Jet {
            value: s.center,
            grad: s.gradient(),
            hess: s.hessian(),
        };
        let g = norm(&jet.grad);
        if !(g > 1e-6) {
            return Err(Error::NotRegular(*p));
        }
        let v = real_of(&jet.tangency()?);
        let term = -jet.ddc(&v, &j(&v), Convention::Full);
        cert.record(term / g, p);
        if !(term > 0.0) {
            cert.note(format!("{label}: tangency term {term} at {p:?}"));
            return Err(Error::NotContact {
                point: *p,
                value: term,
            });
        }
    }
    Ok(())
}

fn all_pass(stencils: &[Vec<(P4, Stencil)>], lambda: f64) -> bool {
    stencils
        .iter()
        .all(|b| b.par_iter().all(|(_, s)| exp_levi_min(s, lambda) > PSH_TOL))
}

fn certify(stencils: &[Vec<(P4, Stencil)>], lambda: f64, n: usize) -> Certificate {
    let mut c = Certificate::new(
        format!("exp(lambda gamma) strictly psh, lambda = {lambda:.6e}"),
        format!("{n} refined points"),
        PSH_TOL,
    );
    for b in stencils {
        let mins: Vec<f64> = b.par_iter().map(|(_, s)| exp_levi_min(s, lambda)).collect();
        for ((p, _), m) in b.iter().zip(mins) {
            c.record(m, p);
        }
    }
    c
}

/// Doubling-then-bisection search for the smallest λ making
/// `exp(λ γ)` strictly plurisubharmonic on every block's grid.
pub fn find_lambda_blocks(blocks: &[LambdaBlock], lambda_max: f64) -> Result<LambdaOutcome> {
    let coarse: Vec<Vec<(P4, Stencil)>> = blocks.iter().map(|b| prepare(b, false)).collect::<Result<_>>()?;
    let n_grid: usize = coarse.iter().map(|b| b.len()).sum();
    let mut contact = Certificate::new("level sets contact (tangency term / |grad|)", format!("{n_grid} points"), 0.0);
    for (b, s) in blocks.iter().zip(&coarse) {
        contact_precheck(&b.label, s, &mut contact)?;
    }
    let mut probes = Vec::new();
    let mut lo = 0.0;
    let mut lam = LAMBDA_START.min(lambda_max);
    let hi = loop {
        let ok = all_pass(&coarse, lam);
        probes.push((lam, ok));
        if ok {
            break lam;
        }
        if lam >= lambda_max {
            return Err(Error::Exhausted(lambda_max));
        }
        lo = lam;
        lam = (2.0 * lam).min(lambda_max);
    };
    let mut hi = hi;
    if lo > 0.0 {
        while hi - lo > 1e-3 * hi {
            let mid = 0.5 * (lo + hi);
            let ok = all_pass(&coarse, mid);
            probes.push((mid, ok));
            if ok {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let refined: Vec<Vec<(P4, Stencil)>> = blocks.iter().map(|b| prepare(b, true)).collect::<Result<_>>()?;
    let n_ref: usize = refined.iter().map(|b| b.len()).sum();
    let mut cert = certify(&refined, hi, n_ref);
    let mut certified = hi;
    for factor in [2.0, 4.0] {
        if cert.pass || hi * factor > lambda_max {
            break;
        }
        certified = hi * factor;
        cert = certify(&refined, certified, n_ref);
    }
    Ok(LambdaOutcome {
        lambda: hi,
        certified_lambda: certified,
        probes,
        contact,
        certificate: cert,
    })
}

pub fn find_lambda(gamma: &dyn ScalarField, grid: &[P4], refined: &[P4], lambda_max: f64) -> Result<LambdaOutcome> {
    find_lambda_blocks(
        &[LambdaBlock {
            label: "field".into(),
            field: gamma,
            grid,
            refined,
        }],
        lambda_max,
    )
}

/// CSV rows `x1,y1,x2,y2,levi_min` for a field on a point set.
pub fn levi_field_csv(u: &dyn ScalarField, points: &[P4]) -> Result<String> {
    let mins: Vec<f64> = points
        .par_iter()
        .map(|p| Ok(levi_matrix(u, p)?.min_eigenvalue()))
        .collect::<Result<_>>()?;
    let mut s = String::from("x1,y1,x2,y2,levi_min\n");
    for (p, m) in points.iter().zip(mins) {
        s.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n", p[0], p[1], p[2], p[3], m));
    }
    Ok(s)
}
