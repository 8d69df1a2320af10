//! Chart atlas for the surface model near the fibre over the unit-ish disk.
//!
//! Three charts are used:
//!
//! * `ChartV`: the product `{1 < |z1| < rho2} x {|z2| < 1/rho0}`;
//! * `ChartVPrime`: `{1 < |z1| < s} x {1/rho1 < |z2| < 1/rho0}`, glued to
//!   `ChartV` on `|z2| < |z1|` by `(z1, z2) -> (z1/z2, z2)`;
//! * `ChartWAnnulus`: the Kodaira quotient `(C* x {rho0 < |w2| < rho1}) / Z`
//!   with `n . (w1, w2) = (w1 w2^n, w2)`, stored in a canonical representative.
//!
//! Points of `ChartV` with `1/rho1 < |z2| < 1/rho0` and all points of
//! `ChartVPrime` are identified with annulus points through the map
//! `(z1, z2) -> [(z1 phi(1/z2), 1/z2)]`, where `phi` is multi-valued but the
//! class is not.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Field names accepted in a raw parameter document, in validation order.
pub const RAW_FIELDS: [&str; 10] = [
    "rho1", "rho2", "rho0", "s", "c", "eps", "c1", "c2", "zeta1", "zeta2",
];

/// Validated parameter chain. Construct through [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub rho1: f64,
    pub rho2: f64,
    pub rho0: f64,
    pub s: f64,
    pub c: f64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Inner page radius `rho2 - eps`.
    pub a: f64,
    /// Outer page radius `1/c + eps`.
    pub b: f64,
}

impl Params {
    /// The default raw parameter document.
    pub fn default_raw() -> BTreeMap<String, f64> {
        raw_from(&[
            ("rho1", 0.9),
            ("rho2", 1.05),
            ("rho0", 0.88),
            ("s", 1.15),
            ("c", 0.89),
            ("eps", 0.01),
            ("c1", 1.04),
            ("c2", 1.02),
            ("zeta1", 1.036),
            ("zeta2", 1.039),
        ])
    }

    /// A second admissible chain with `rho1 = 0.92`, `rho2 = 1.04`.
    pub fn perturbed_raw() -> BTreeMap<String, f64> {
        raw_from(&[
            ("rho1", 0.92),
            ("rho2", 1.04),
            ("rho0", 0.905),
            ("s", 1.12),
            ("c", 0.91),
            ("eps", 0.008),
            ("c1", 1.034),
            ("c2", 1.015),
            ("zeta1", 1.031),
            ("zeta2", 1.033),
        ])
    }

    pub fn defaults() -> Params {
        validate_params(&Self::default_raw()).expect("default parameters are admissible")
    }

    pub fn perturbed() -> Params {
        validate_params(&Self::perturbed_raw()).expect("perturbed parameters are admissible")
    }

    /// Raw document view (no derived fields).
    pub fn to_raw(&self) -> BTreeMap<String, f64> {
        raw_from(&[
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("rho0", self.rho0),
            ("s", self.s),
            ("c", self.c),
            ("eps", self.eps),
            ("c1", self.c1),
            ("c2", self.c2),
            ("zeta1", self.zeta1),
            ("zeta2", self.zeta2),
        ])
    }

    /// JSON emission with derived radii and a `validated` marker.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("params serialize");
        v["validated"] = serde_json::Value::Bool(true);
        v
    }

    /// Parse a raw JSON object with exactly the documented field names.
    pub fn from_json(text: &str) -> Result<Params> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let raw = raw_from_json(&value)?;
        validate_params(&raw)
    }

    /// Modulus bound `s rho1` shared by the profile and band conditions.
    pub fn s_rho1(&self) -> f64 {
        self.s * self.rho1
    }
}

fn raw_from(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Extract the raw fields from a JSON object; unknown keys are rejected.
pub fn raw_from_json(value: &serde_json::Value) -> Result<BTreeMap<String, f64>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("params must be a JSON object".into()))?;
    let mut raw = BTreeMap::new();
    for (k, v) in obj {
        if !RAW_FIELDS.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown params field `{k}`")));
        }
        let x = v
            .as_f64()
            .ok_or_else(|| Error::MissingField(k.clone()))?;
        raw.insert(k.clone(), x);
    }
    Ok(raw)
}

/// Check every inequality of the parameter chain and derive the page radii.
pub fn validate_params(raw: &BTreeMap<String, f64>) -> Result<Params> {
    let get = |name: &str| -> Result<f64> {
        match raw.get(name) {
            Some(&x) if x.is_finite() && x > 0.0 => Ok(x),
            _ => Err(Error::MissingField(name.to_string())),
        }
    };
    let rho1 = get("rho1")?;
    let rho2 = get("rho2")?;
    let rho0 = get("rho0")?;
    let s = get("s")?;
    let c = get("c")?;
    let eps = get("eps")?;
    let c1 = get("c1")?;
    let c2 = get("c2")?;
    let zeta1 = get("zeta1")?;
    let zeta2 = get("zeta2")?;

    let check = |ok: bool, name: &str, constraint: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::chain(name, constraint))
        }
    };
    check(1.0 < rho2, "rho2", "1 < rho2")?;
    check(rho2 < 1.0 / rho1, "rho2", "rho2 < 1/rho1")?;
    check(rho1 / rho2 < rho0, "rho0", "rho1/rho2 < rho0")?;
    check(rho0 < rho1, "rho0", "rho0 < rho1")?;
    check(1.0 / rho0 < s, "s", "1/rho0 < s")?;
    check(s < rho2 / rho1, "s", "s < rho2/rho1")?;
    check(rho0 < c, "c", "rho0 < c")?;
    check(c < rho1, "c", "c < rho1")?;
    check(eps < (rho0 - rho1 / rho2) / 2.0, "eps", "eps < (rho0 - rho1/rho2)/2")?;
    let a = rho2 - eps;
    let b = 1.0 / c + eps;
    check(rho1 * b < a, "b", "rho1*b < a")?;
    let sr = s * rho1;
    check(1.0 < c2, "c2", "1 < c2")?;
    check(c2 < sr, "c2", "c2 < s*rho1")?;
    check(sr < c1, "c1", "s*rho1 < c1")?;
    check(c1 < rho2, "c1", "c1 < rho2")?;
    check(sr < zeta1, "zeta1", "s*rho1 < zeta1")?;
    check(zeta1 < zeta2, "zeta2", "zeta1 < zeta2")?;
    check(zeta2 < rho2, "zeta2", "zeta2 < rho2")?;

    Ok(Params {
        rho1,
        rho2,
        rho0,
        s,
        c,
        eps,
        c1,
        c2,
        zeta1,
        zeta2,
        a,
        b,
    })
}

/// Offset of the logarithm branch: `log w = Log w + 2 pi i k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BranchIndex(pub i64);

/// Logarithm on the given branch; principal argument in `(-pi, pi]`.
pub fn log_branch(w: C64, branch: BranchIndex) -> C64 {
    C64::new(w.norm().ln(), w.arg() + 2.0 * PI * branch.0 as f64)
}

/// The gluing function `exp((log w)^2 / (4 pi i) - (log w) / 2)`.
pub fn phi(w: C64, branch: BranchIndex) -> Result<C64> {
    if w == C64::new(0.0, 0.0) || !w.is_finite() {
        return Err(Error::domain("phi is undefined at w = 0"));
    }
    let l = log_branch(w, branch);
    let four_pi_i = C64::new(0.0, 4.0 * PI);
    Ok((l * l / four_pi_i - l * 0.5).exp())
}

fn check_action_domain(w1: C64, w2: C64) -> Result<()> {
    let m = w2.norm();
    if w1.norm() == 0.0 || !w1.is_finite() {
        return Err(Error::domain("w1 must be nonzero"));
    }
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::domain(format!("|w2| = {m} outside (0, 1)")));
    }
    Ok(())
}

/// `n . (w1, w2) = (w1 w2^n, w2)`.
pub fn z_action(n: i64, w1: C64, w2: C64) -> Result<(C64, C64)> {
    check_action_domain(w1, w2)?;
    Ok((w1 * w2.powi(n as i32), w2))
}

/// Orbit representative with `|w1|` in `[|w2|^(1/2), |w2|^(-1/2))`.
///
/// Returns the representative and the shift `n` with `rep = n . (w1, w2)`.
pub fn canonical_rep(w1: C64, w2: C64) -> Result<(C64, C64, i64)> {
    check_action_domain(w1, w2)?;
    let l1 = w1.norm().ln();
    let m = -w2.norm().ln();
    let mut n = ((l1 + 0.5 * m) / m).floor() as i64;
    // settle rounding at the band edges
    for _ in 0..4 {
        let (r, _) = z_action(n, w1, w2)?;
        let lr = r.norm().ln();
        if lr < -0.5 * m {
            n -= 1;
        } else if lr >= 0.5 * m {
            n += 1;
        } else {
            return Ok((r, w2, n));
        }
    }
    let (r, _) = z_action(n, w1, w2)?;
    Ok((r, w2, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    ChartV,
    ChartVPrime,
    ChartWAnnulus,
}

impl Chart {
    pub fn tag(&self) -> &'static str {
        match self {
            Chart::ChartV => "V",
            Chart::ChartVPrime => "VPrime",
            Chart::ChartWAnnulus => "W",
        }
    }
}

/// A point of the model given by a chart and two coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub z1: C64,
    pub z2: C64,
}

impl ChartPoint {
    pub fn new(chart: Chart, z1: C64, z2: C64) -> Self {
        ChartPoint { chart, z1, z2 }
    }

    /// Check the chart's modulus constraints.
    pub fn validate(&self, p: &Params) -> Result<()> {
        let (m1, m2) = (self.z1.norm(), self.z2.norm());
        let ok = match self.chart {
            Chart::ChartV => 1.0 < m1 && m1 < p.rho2 && m2 < 1.0 / p.rho0,
            Chart::ChartVPrime => {
                1.0 < m1 && m1 < p.s && 1.0 / p.rho1 < m2 && m2 < 1.0 / p.rho0
            }
            Chart::ChartWAnnulus => m1 > 0.0 && p.rho0 < m2 && m2 < p.rho1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "({m1}, {m2}) outside chart {}",
                self.chart.tag()
            )))
        }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.z1.re, self.z1.im, self.z2.re, self.z2.im]
    }
}

/// Pre-canonical image `(z1 phi(1/z2), 1/z2)` on the given branch.
pub fn map_phi_raw(p: &Params, z1: C64, z2: C64, branch: BranchIndex) -> Result<(C64, C64)> {
    let m2 = z2.norm();
    if z1.norm() == 0.0 {
        return Err(Error::domain("z1 must be nonzero"));
    }
    if !(1.0 / p.rho1 < m2 && m2 < 1.0 / p.rho0) {
        return Err(Error::domain(format!(
            "|z2| = {m2} outside ({}, {})",
            1.0 / p.rho1,
            1.0 / p.rho0
        )));
    }
    let w2 = z2.inv();
    Ok((z1 * phi(w2, branch)?, w2))
}

/// The gluing map into the annulus chart, returned in canonical form.
pub fn map_phi(p: &Params, z1: C64, z2: C64, branch: BranchIndex) -> Result<ChartPoint> {
    let (w1, w2) = map_phi_raw(p, z1, z2, branch)?;
    let (r1, r2, _) = canonical_rep(w1, w2)?;
    Ok(ChartPoint::new(Chart::ChartWAnnulus, r1, r2))
}

/// The formula `(z1/z2, z2)` without domain checks.
pub fn psi_formula(z1: C64, z2: C64) -> (C64, C64) {
    (z1 / z2, z2)
}

/// Gluing of `ChartVPrime` into `ChartV` on `|z2| < |z1|`.
pub fn map_psi(p: &Params, z1: C64, z2: C64) -> Result<ChartPoint> {
    let src = ChartPoint::new(Chart::ChartVPrime, z1, z2);
    src.validate(p)?;
    if z2.norm() >= z1.norm() {
        return Err(Error::domain("psi requires |z2| < |z1|"));
    }
    let (a, b) = psi_formula(z1, z2);
    Ok(ChartPoint::new(Chart::ChartV, a, b))
}

/// Inverse of [`map_psi`]: `(z1, z2) -> (z1 z2, z2)` from `ChartV` to `ChartVPrime`.
pub fn map_psi_inv(p: &Params, z1: C64, z2: C64) -> Result<ChartPoint> {
    let q = ChartPoint::new(Chart::ChartVPrime, z1 * z2, z2);
    q.validate(p)?;
    if q.z2.norm() >= q.z1.norm() {
        return Err(Error::domain("image not in the psi overlap"));
    }
    Ok(q)
}

/// Normal form used for quotient equality.
pub fn normal_form(p: &Params, q: &ChartPoint) -> ChartPoint {
    match q.chart {
        Chart::ChartWAnnulus => match canonical_rep(q.z1, q.z2) {
            Ok((a, b, _)) => ChartPoint::new(Chart::ChartWAnnulus, a, b),
            Err(_) => *q,
        },
        Chart::ChartVPrime => map_phi(p, q.z1, q.z2, BranchIndex(0)).unwrap_or(*q),
        Chart::ChartV => {
            let m2 = q.z2.norm();
            if 1.0 / p.rho1 < m2 && m2 < 1.0 / p.rho0 {
                map_phi(p, q.z1, q.z2, BranchIndex(0)).unwrap_or(*q)
            } else {
                *q
            }
        }
    }
}

/// Equality in the quotient, up to absolute coordinate tolerance `tol`.
pub fn same_point(p: &Params, a: &ChartPoint, b: &ChartPoint, tol: f64) -> bool {
    let na = normal_form(p, a);
    let nb = normal_form(p, b);
    if na.chart != nb.chart {
        return false;
    }
    let close = |x: &ChartPoint, y: (C64, C64)| {
        (x.z1 - y.0).norm() <= tol && (x.z2 - y.1).norm() <= tol
    };
    if close(&na, (nb.z1, nb.z2)) {
        return true;
    }
    if na.chart == Chart::ChartWAnnulus {
        // representatives straddling the band edge
        for n in [-1, 1] {
            if let Ok(shifted) = z_action(n, nb.z1, nb.z2) {
                if close(&na, shifted) {
                    return true;
                }
            }
        }
    }
    false
}

/// Which disk of the projective line a fibre coordinate is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseChart {
    /// The disk `|z2| < 1/rho0`.
    DiskZ,
    /// The disk `|w2| < rho1`, related to `DiskZ` by inversion.
    DiskW,
}

/// Fibration value of a point, with the disk it is written in.
pub fn fibration_f(q: &ChartPoint) -> (C64, BaseChart) {
    match q.chart {
        Chart::ChartV | Chart::ChartVPrime => (q.z2, BaseChart::DiskZ),
        Chart::ChartWAnnulus => (q.z2, BaseChart::DiskW),
    }
}

/// Fibration value expressed in the `DiskZ` chart.
pub fn fibration_in_z(q: &ChartPoint) -> C64 {
    match fibration_f(q) {
        (v, BaseChart::DiskZ) => v,
        (v, BaseChart::DiskW) => v.inv(),
    }
}

/// Whether the point avoids the removed band `zeta1 < |z1| < zeta2` of `ChartV`.
pub fn in_complement_c(p: &Params, q: &ChartPoint) -> bool {
    let in_band = |z1: C64| {
        let m = z1.norm();
        p.zeta1 < m && m < p.zeta2
    };
    match q.chart {
        Chart::ChartV => !in_band(q.z1),
        Chart::ChartVPrime => match map_psi(p, q.z1, q.z2) {
            Ok(v) => !in_band(v.z1),
            Err(_) => true,
        },
        Chart::ChartWAnnulus => {
            let w2 = q.z2;
            let Ok(ph) = phi(w2, BranchIndex(0)) else {
                return true;
            };
            for n in -64..=64 {
                let Ok((w1n, _)) = z_action(n, q.z1, w2) else {
                    return true;
                };
                let z1 = w1n / ph;
                let m = z1.norm();
                if 1.0 < m && m < p.rho2 && in_band(z1) {
                    return false;
                }
            }
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn wide_band_raw() -> BTreeMap<String, f64> {
        let mut raw = Params::default_raw();
        raw.insert("zeta1".into(), 1.037);
        raw.insert("zeta2".into(), 1.045);
        raw
    }

    #[test]
    fn default_chain_by_direct_arithmetic() {
        let p = validate_params(&wide_band_raw()).unwrap();
        assert_relative_eq!(p.a, 1.04, epsilon = 1e-12);
        assert_relative_eq!(p.b, 1.0 / 0.89 + 0.01, epsilon = 1e-12);
        assert!((p.b - 1.13360).abs() < 1e-5);
        // direct arithmetic on every inequality
        assert!(1.0 < 1.05 && 1.05 < 1.0 / 0.9);
        assert!(0.9 / 1.05 < 0.88 && 0.88 < 0.9);
        assert!(1.0 / 0.88 < 1.15 && 1.15 < 1.05 / 0.9);
        assert!(0.01 < (0.88 - 0.9 / 1.05) / 2.0);
        assert!(0.9 * p.b < p.a);
        Params::defaults();
        Params::perturbed();
    }

    #[test]
    fn chain_violations_name_the_first_failure() {
        let mut raw = wide_band_raw();
        raw.insert("rho2".into(), 1.2);
        assert_eq!(
            validate_params(&raw),
            Err(Error::chain("rho2", "rho2 < 1/rho1"))
        );
        let mut raw = wide_band_raw();
        raw.insert("rho0".into(), 0.85);
        assert_eq!(
            validate_params(&raw),
            Err(Error::chain("rho0", "rho1/rho2 < rho0"))
        );
        let mut raw = wide_band_raw();
        raw.remove("c");
        assert_eq!(validate_params(&raw), Err(Error::MissingField("c".into())));
        let mut raw = wide_band_raw();
        raw.insert("eps".into(), 0.02);
        assert_eq!(
            validate_params(&raw),
            Err(Error::chain("eps", "eps < (rho0 - rho1/rho2)/2"))
        );
    }

    #[test]
    fn json_round_trip_marks_validated() {
        let p = Params::defaults();
        let text = serde_json::to_string(&p.to_raw()).unwrap();
        let q = Params::from_json(&text).unwrap();
        assert_eq!(p, q);
        let v = q.to_json();
        assert_eq!(v["validated"], serde_json::Value::Bool(true));
        assert!(v["a"].as_f64().is_some());
        assert!(Params::from_json(r#"{"rho1": 0.9, "bogus": 1}"#).is_err());
    }

    #[test]
    fn phi_examples() {
        let one = phi(c(1.0, 0.0), BranchIndex(0)).unwrap();
        assert_relative_eq!(one.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(one.im, 0.0, epsilon = 1e-15);
        // log w = -1: exp(1/(4 pi i) + 1/2) = e^{1/2} exp(-i/(4 pi))
        let v = phi(c((-1.0f64).exp(), 0.0), BranchIndex(0)).unwrap();
        let expected = C64::from_polar(0.5f64.exp(), -1.0 / (4.0 * PI));
        assert!((v - expected).norm() < 1e-14);
        let w = c(0.5, 0.0);
        let lhs = phi(w, BranchIndex(1)).unwrap();
        let rhs = w * phi(w, BranchIndex(0)).unwrap();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-12);
        assert!(phi(c(0.0, 0.0), BranchIndex(0)).is_err());
    }

    #[test]
    fn phi_branch_law_on_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let r = 0.86 + 0.045 * (i as f64 + 0.5) / 10.0;
                let t = -PI + 2.0 * PI * (j as f64 + 0.5) / 10.0;
                let w = C64::from_polar(r, t);
                let base = phi(w, BranchIndex(0)).unwrap();
                for k in -3..=3 {
                    let v = phi(w, BranchIndex(k)).unwrap();
                    let expect = w.powi(k as i32) * base;
                    assert!((v - expect).norm() / base.norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn z_action_examples() {
        let (a, b) = z_action(2, c(3.0, 0.0), c(0.0, 0.5)).unwrap();
        assert!((a - c(-0.75, 0.0)).norm() < 1e-15);
        assert_eq!(b, c(0.0, 0.5));
        let w1 = c(0.3, -0.7);
        let w2 = c(0.2, 0.4);
        assert_eq!(z_action(0, w1, w2).unwrap(), (w1, w2));
        let (a, _) = z_action(-1, c(1.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((a - c(2.0, 0.0)).norm() < 1e-15);
        assert!(z_action(1, c(0.0, 0.0), w2).is_err());
        assert!(z_action(1, w1, c(1.5, 0.0)).is_err());
    }

    /// Brute-force scan oracle for the canonical shift.
    fn scan_shift(w1: C64, w2: C64) -> i64 {
        let m = w2.norm();
        (-64..=64)
            .find(|&n| {
                let r = w1.norm() * m.powi(n as i32);
                r >= m.sqrt() && r < 1.0 / m.sqrt()
            })
            .unwrap()
    }

    #[test]
    fn canonical_rep_examples() {
        let (r, _, n) = canonical_rep(c(8.0, 0.0), c(0.5, 0.0)).unwrap();
        assert_eq!(n, 3);
        assert!((r - c(1.0, 0.0)).norm() < 1e-12);
        let (_, _, n) = canonical_rep(c(1.0, 0.0), c(0.5, 0.0)).unwrap();
        assert_eq!(n, 0);
        let (r, _, n) = canonical_rep(c(0.3, 0.0), c(0.9, 0.0)).unwrap();
        assert_eq!(n, scan_shift(c(0.3, 0.0), c(0.9, 0.0)));
        assert!(r.norm() >= 0.9f64.sqrt() && r.norm() < 1.0 / 0.9f64.sqrt());
    }

    #[test]
    fn psi_direct_formula_and_errors() {
        let z2 = C64::from_polar(1.05, PI / 3.0);
        let (a, b) = psi_formula(c(1.1, 0.0), z2);
        assert!((a - C64::from_polar(1.1 / 1.05, -PI / 3.0)).norm() < 1e-14);
        assert_eq!(b, z2);
        let p = Params::defaults();
        assert!(map_psi(&p, c(1.05, 0.0), c(1.1, 0.0)).is_err());
        let q = map_psi(&p, c(1.14, 0.0), C64::from_polar(1.12, 1.0)).unwrap();
        assert_eq!(q.chart, Chart::ChartV);
        q.validate(&p).unwrap();
        let m = q.z1.norm();
        assert!(1.0 < m && m < p.s_rho1());
    }

    #[test]
    fn map_phi_branch_independent() {
        let p = Params::defaults();
        let z1 = c(1.02, 0.0);
        let z2 = c(1.12, 0.0);
        let a = map_phi(&p, z1, z2, BranchIndex(0)).unwrap();
        for k in -3..=3 {
            let b = map_phi(&p, z1, z2, BranchIndex(k)).unwrap();
            assert!(same_point(&p, &a, &b, 1e-9));
        }
        assert!((a.z2.norm() - 1.0 / 1.12).abs() < 1e-14);
        assert!(map_phi(&p, z1, c(1.0, 0.0), BranchIndex(0)).is_err());
    }

    #[test]
    fn fibration_examples() {
        let q = ChartPoint::new(Chart::ChartV, c(1.02, 0.0), c(0.3, 0.0));
        assert_eq!(fibration_f(&q), (c(0.3, 0.0), BaseChart::DiskZ));
        let p = Params::defaults();
        let w = map_phi(&p, c(1.05, 0.0), c(1.12, 0.0), BranchIndex(0)).unwrap();
        let (v, chart) = fibration_f(&w);
        assert_eq!(chart, BaseChart::DiskW);
        assert!((v - c(1.0 / 1.12, 0.0)).norm() < 1e-14);
        assert!((fibration_in_z(&w) - c(1.12, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn complement_examples() {
        let p = validate_params(&wide_band_raw()).unwrap();
        let inside = ChartPoint::new(Chart::ChartV, C64::from_polar(1.041, 1.0), c(0.2, 0.0));
        assert!(!in_complement_c(&p, &inside));
        let outside = ChartPoint::new(Chart::ChartV, c(1.02, 0.0), c(0.2, 0.0));
        assert!(in_complement_c(&p, &outside));
        // psi images have modulus below s*rho1 < zeta1
        assert!(p.s_rho1() < p.zeta1);
        let vp = ChartPoint::new(Chart::ChartVPrime, c(1.14, 0.0), c(1.12, 0.0));
        assert!(in_complement_c(&p, &vp));
        // the same band point seen through the annulus chart
        let z2 = c(1.12, 0.0);
        let w = map_phi(&p, C64::from_polar(1.041, 1.0), z2, BranchIndex(0)).unwrap();
        assert!(!in_complement_c(&p, &w));
    }

    #[test]
    fn same_point_examples() {
        let p = Params::defaults();
        let z1 = C64::from_polar(1.14, 0.3);
        let z2 = C64::from_polar(1.12, -0.8);
        let a = ChartPoint::new(Chart::ChartVPrime, z1, z2);
        let b = map_psi(&p, z1, z2).unwrap();
        assert!(same_point(&p, &a, &b, 1e-9));
        assert!(same_point(&p, &b, &a, 1e-9));
        assert!(same_point(&p, &a, &a, 1e-9));
        let w = map_phi(&p, z1, z2, BranchIndex(0)).unwrap();
        let (s1, s2) = z_action(5, w.z1, w.z2).unwrap();
        let shifted = ChartPoint::new(Chart::ChartWAnnulus, s1, s2);
        assert!(same_point(&p, &w, &shifted, 1e-9));
        let far = ChartPoint::new(Chart::ChartV, c(1.02, 0.0), c(0.1, 0.0));
        assert!(!same_point(&p, &a, &far, 1e-9));
    }
}
