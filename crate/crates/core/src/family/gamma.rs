//! `γ(p) = τ` with `p ∈ M_τ`.

use super::*;
use crate::levi::{complex_of, ScalarField, P4};

impl FamilySpec {
    fn check_tau(&self, tau: f64) -> Result<f64> {
        let (lo, hi) = self.tau_domain();
        if tau > lo && tau <= hi && tau.is_finite() {
            Ok(tau)
        } else {
            Err(Error::OutOfFoliation(format!("tau = {tau} outside ({lo}, {hi}]")))
        }
    }

    /// `γ` in the `V` chart for `|z2| <= 1/rho1`.
    pub fn gamma_h(&self, z1: C64, z2: C64) -> Result<(f64, Piece)> {
        let p = self.params();
        let (m1, r) = (z1.norm(), z2.norm());
        if r > 1.0 / p.rho1 {
            return Err(Error::domain(format!("|z2| = {r} beyond the seam")));
        }
        let r2 = r * r;
        let mid = 0.5 * (p.zeta1 + p.zeta2);
        if m1 >= mid {
            let f1 = p.c1 + self.model.knobs.eps1 * r2;
            let d = (m1 - f1) / (self.kappa1 + self.eta1 * r2);
            Ok((self.check_tau(1.0 - d)?, Piece::H1))
        } else {
            let d = (self.f2_tau(1.0, r) - m1) / (self.kappa2 + self.eta2 * r2);
            Ok((self.check_tau(1.0 - d)?, Piece::H2))
        }
    }

    /// `γ` on the `S` part of the `V'` chart: `x = log |w1|`, `y = -log |w2|`.
    pub fn gamma_s(&self, x: f64, y: f64) -> Result<f64> {
        let p = self.params();
        if !(y <= p.rho1.ln() && y > p.rho0.ln()) {
            return Err(Error::domain(format!("-log|w2| = {y} outside (log rho0, log rho1]")));
        }
        // increasing in τ: the slices sink and widen as τ grows
        let f = |tau: f64| match self.slice_ends(tau) {
            Some(e) if x >= e.problem.left.x && x <= e.problem.right.x => y - self.htilde(&e, x).0,
            _ => -1.0,
        };
        let (lo, hi) = self.tau_domain();
        let lo = lo + 1e-12;
        if f(hi) < 0.0 || f(lo) > 0.0 {
            return Err(Error::OutOfFoliation(format!("(log|w1|, -log|w2|) = ({x}, {y}) is not swept")));
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        self.check_tau(0.5 * (a + b))
    }

    /// `γ` at a chart point.
    pub fn gamma_at(&self, q: &ChartPoint) -> Result<f64> {
        let p = self.params();
        match q.chart {
            Chart::ChartV => {
                if q.z2.norm() <= 1.0 / p.rho1 {
                    return Ok(self.gamma_h(q.z1, q.z2)?.0);
                }
                // same point of E as V' (z1, z2) and V' (z1 z2, z2)
                let (x1, x2) = self.model.s_range();
                let xv = q.z1.norm().ln();
                let y = -q.z2.norm().ln();
                let x = if xv >= 0.5 * (x1 + x2 + y) { xv } else { xv - y };
                self.gamma_s(x, y)
            }
            Chart::ChartVPrime => self.gamma_s(q.z1.norm().ln(), -q.z2.norm().ln()),
            Chart::ChartWAnnulus => Err(Error::domain("gamma is evaluated in the V and V' charts")),
        }
    }

    /// A point of `M_τ` on the given piece, at log coordinate `s`
    /// (`log |z2|` on `H1`, `H2`; `log |w1|` on `S`) and angles `t1`, `t2`.
    pub fn point_on(&self, tau: f64, piece: Piece, s: f64, t1: f64, t2: f64) -> Result<ChartPoint> {
        match piece {
            Piece::H1 | Piece::H2 => {
                let r = if s == f64::NEG_INFINITY { 0.0 } else { s.exp() };
                let m = if piece == Piece::H1 {
                    self.f1_tau(tau, r)
                } else {
                    self.f2_tau(tau, r)
                };
                Ok(ChartPoint::new(Chart::ChartV, polar(m, t1), polar(r, t2)))
            }
            Piece::S => {
                let ends = self.slice_ends(tau).ok_or_else(|| Error::feasibility(format!("no slice at tau = {tau}")))?;
                let y = self.htilde(&ends, s).0;
                Ok(ChartPoint::new(Chart::ChartVPrime, polar(s.exp(), t1), polar((-y).exp(), t2)))
            }
        }
    }
}

/// `γ` read in one chart, as a field on real coordinates.
pub struct GammaField<'a> {
    pub family: &'a FamilySpec,
    pub chart: Chart,
}

impl ScalarField for GammaField<'_> {
    fn value(&self, p: &P4) -> Result<f64> {
        let (z1, z2) = complex_of(p);
        self.family.gamma_at(&ChartPoint::new(self.chart, z1, z2))
    }
}

/// `u = exp(λ (γ - 1))`, with values in `(0, 1]` on the foliated collar.
pub struct UField<'a> {
    pub gamma: GammaField<'a>,
    pub lambda: f64,
}

impl ScalarField for UField<'_> {
    fn value(&self, p: &P4) -> Result<f64> {
        Ok((self.lambda * (self.gamma.value(p)? - 1.0)).exp())
    }
}

/// The level function in the chart used by each piece.
pub fn gamma_field(fam: &FamilySpec, piece: Piece) -> GammaField<'_> {
    GammaField {
        family: fam,
        chart: chart_of(piece),
    }
}
