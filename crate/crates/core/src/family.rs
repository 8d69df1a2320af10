//! The pseudoconcave sphere `M1 = H1 ∪ S ∪ H2`, its foliated collar and the
//! level function `γ`.

use serde::{Deserialize, Serialize};

use crate::atlas::{in_complement_c, Chart, ChartPoint, Params, C64};
use crate::cert::Certificate;
use crate::convexjoin::{solve, EndpointData, JoinProblem, JoinSolution};
use crate::error::{Error, Result};
use crate::profiles::{
    classify_contact, interior_grid, make_f1, make_f2, pushforward_h1, pushforward_h2, seam_x, ContactTag,
    ModelProfile, Profile, ProfileKnobs, Shape,
};

mod checks;
mod gamma;
mod sampling;
mod spec;

pub use checks::*;
pub use gamma::*;
pub use sampling::*;
pub use spec::*;

/// Which piece of `M1` a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Piece {
    H1,
    S,
    H2,
}

impl Piece {
    pub fn tag(&self) -> &'static str {
        match self {
            Piece::H1 => "H1",
            Piece::S => "S",
            Piece::H2 => "H2",
        }
    }

    /// Contact tag of the piece's profile once `M1` is oriented as the
    /// boundary of the compact side. `H2` is a graph over the same variable as
    /// `H1` but bounds the compact side from the other direction.
    pub fn oriented(&self, tag: ContactTag) -> ContactTag {
        match (self, tag) {
            (Piece::H2, ContactTag::PositiveContact) => ContactTag::NegativeContact,
            (Piece::H2, ContactTag::NegativeContact) => ContactTag::PositiveContact,
            (_, t) => t,
        }
    }
}

/// Distance in log radius kept from the seams when sampling for derivatives.
pub const SEAM_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereModel {
    pub params: Params,
    pub knobs: ProfileKnobs,
    pub f1: ModelProfile,
    pub f2: ModelProfile,
    /// Pushforwards of `f1`, `f2` to the `V'` sheet near the seams.
    pub h1: Profile,
    pub h2: Profile,
    pub htilde: JoinSolution,
    /// `|w2|^{-1} = h(|w1|)` in log form; `L = htilde`.
    pub h: Profile,
    pub conditions: Vec<Certificate>,
}

impl SphereModel {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn seam_y(&self) -> f64 {
        seam_x(&self.params)
    }

    /// `(X1, X2)`, the ends of `S` in `log |w1|`.
    pub fn s_range(&self) -> (f64, f64) {
        (self.h.lo, self.h.hi)
    }

    /// Log-domain of each piece with the seam margin removed.
    pub fn safe_domain(&self, piece: Piece) -> (f64, f64) {
        let ys = self.seam_y();
        match piece {
            Piece::H1 | Piece::H2 => (self.knobs.x_lo, ys - SEAM_MARGIN),
            Piece::S => {
                // stay SEAM_MARGIN below the seam level in log |w2|
                let (x1, x2) = self.s_range();
                let lvl = -ys - SEAM_MARGIN;
                let cross = |a: f64, b: f64| {
                    let (mut a, mut b) = (a, b);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if self.h.log_eval_ext(m).0 > lvl {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    0.5 * (a + b)
                };
                let (_, xmin) = self.htilde.curve.min_value();
                (cross(x1, xmin), cross(x2, xmin))
            }
        }
    }

    /// Oriented contact tag of every piece on its safe domain.
    pub fn contact_tags(&self) -> Result<Vec<(Piece, ContactTag, f64)>> {
        let mut out = Vec::new();
        for piece in [Piece::H1, Piece::S, Piece::H2] {
            let (lo, hi) = self.safe_domain(piece);
            let prof = match piece {
                Piece::H1 => &self.f1.profile,
                Piece::H2 => &self.f2.profile,
                Piece::S => &self.h,
            };
            let class = classify_contact(prof, &interior_grid(lo, hi, 256))?;
            out.push((piece, piece.oriented(class.tag), class.margin));
        }
        Ok(out)
    }
}

fn chain_certificate(p: &Params) -> Certificate {
    let mut c = Certificate::new("germ constants 1 < c2 < s rho1 < c1 < rho2", "parameters", 0.0);
    let chain = [1.0, p.c2, p.s * p.rho1, p.c1, p.rho2];
    for w in chain.windows(2) {
        c.record(w[1] - w[0], &[w[0], w[1]]);
    }
    c
}

/// Builds `M1` and certifies every defining condition.
pub fn build_m1(params: &Params, knobs: &ProfileKnobs) -> Result<SphereModel> {
    let f1 = make_f1(params, knobs)?;
    let f2 = make_f2(params, knobs).map_err(|e| match e {
        Error::Feasibility(msg) if !msg.starts_with("endpoint slope") => Error::Feasibility(format!(
            "endpoint slope: f2 cannot reach log-slope {} at the seam ({msg})",
            knobs.target_slope
        )),
        e => e,
    })?;
    let ys = seam_x(params);
    let h1 = pushforward_h1(&f1.profile, ys - 1.0)?;
    let h2_lo = crate::profiles::h2_branch_start(&f2.profile)?;
    let h2 = pushforward_h2(&f2.profile, h2_lo + 0.1 * (ys - h2_lo))?;
    let (lv, ld, _) = h1.log_eval(h1.hi)?;
    let (rv, rd, _) = h2.log_eval(h2.lo)?;
    let left = EndpointData::new(h1.hi, lv, ld);
    let right = EndpointData::new(h2.lo, rv, rd);
    let problem = JoinProblem::convex(left, right).with_bounds(params.rho0.ln(), params.rho1.ln());
    let htilde = solve(&problem, knobs.knots)?;
    let h = Profile::new(
        h1.hi,
        h2.lo,
        Shape::Spline {
            curve: htilde.curve.clone(),
        },
    );

    let mut conditions = vec![chain_certificate(params)];
    conditions.extend(f1.conditions.iter().cloned());
    conditions.extend(f2.conditions.iter().cloned());

    let mut slopes = Certificate::new("pushforward seam slopes: h1 < 0 < h2", "seam ends", 0.0);
    slopes.record(-ld, &[h1.hi]);
    slopes.record(rd, &[h2.lo]);
    conditions.push(slopes);

    let mut join = Certificate::new("htilde strictly convex", format!("{} knots", htilde.curve.knots.len()), 0.0);
    join.record(htilde.margin, &[]);
    conditions.push(join);

    let mut corridor = Certificate::new("htilde inside (log rho0, log rho1)", "interior knots", 0.0);
    let k = &htilde.curve.knots;
    for &x in &k[1..k.len() - 1] {
        let v = htilde.eval(x).0;
        corridor.record((v - params.rho0.ln()).min(params.rho1.ln() - v), &[x]);
    }
    conditions.push(corridor);

    let mut seams = Certificate::new("seams C1: htilde matches h1, h2", "both seams", 0.0);
    for (x, v, d) in [(h1.hi, lv, ld), (h2.lo, rv, rd)] {
        let (hv, hd, _) = htilde.eval(x);
        let err = ((hv - v).abs() + (hd - d).abs() / d.abs().max(1.0)).max(0.0);
        seams.record(1e-9 - err, &[x]);
    }
    conditions.push(seams);

    let mut model = SphereModel {
        params: params.clone(),
        knobs: *knobs,
        f1,
        f2,
        h1,
        h2,
        htilde,
        h,
        conditions,
    };

    let mut tags = Certificate::new("pieces negative contact as boundary of the compact side", "256 points per piece", 0.0);
    for (piece, tag, margin) in model.contact_tags()? {
        if tag == ContactTag::NegativeContact {
            tags.record(margin, &[]);
        } else {
            tags.fail(format!("{} is {:?}", piece.tag(), tag));
        }
    }
    model.conditions.push(tags);

    let mut member = Certificate::new("samples avoid the removed band", "2000 samples", 0.0);
    for s in sample_m1(&model, 2000, 1)? {
        member.record(if in_complement_c(params, &s.point) { 1.0 } else { -1.0 }, &s.point.coords());
    }
    model.conditions.push(member);
    model.conditions.push(corner_distance(&model)?);

    if let Some(c) = model.conditions.iter().find(|c| !c.pass) {
        return Err(Error::feasibility(format!("{}: {}", c.name, c.summary())));
    }
    Ok(model)
}

/// Distance in the log-modulus planes from `M1` to the corner tori of the
/// holomorphic open book.
pub fn corner_distance(model: &SphereModel) -> Result<Certificate> {
    let p = &model.params;
    let mut c = Certificate::new("M1 away from the corner tori", "log-modulus profiles", 0.0);
    let v_corners = [(p.a.ln(), -p.c.ln()), ((p.c * p.b).ln(), -p.c.ln())];
    let vp_corners = [(p.a.ln(), p.c.ln()), (p.b.ln(), p.c.ln())];
    let ys = model.seam_y();
    for y in interior_grid(model.knobs.x_lo, ys, 2000) {
        for prof in [&model.f1.profile, &model.f2.profile] {
            let x = prof.log_eval(y)?.0;
            for (cx, cy) in v_corners {
                c.record(((x - cx).powi(2) + (y - cy).powi(2)).sqrt(), &[x, y]);
            }
        }
    }
    let (x1, x2) = model.s_range();
    for x in interior_grid(x1, x2, 20000) {
        let y = model.h.log_eval_ext(x).0;
        for (cx, cy) in vp_corners {
            c.record(((x - cx).powi(2) + (y - cy).powi(2)).sqrt(), &[x, y]);
        }
    }
    Ok(c)
}

/// A point on `M1` (or a slice) with its piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSample {
    pub point: ChartPoint,
    pub piece: Piece,
    /// Drawn by the seam oversampling pass.
    pub seam: bool,
}

pub(crate) fn polar(r: f64, t: f64) -> C64 {
    C64::from_polar(r, t)
}

pub(crate) fn chart_of(piece: Piece) -> Chart {
    match piece {
        Piece::S => Chart::ChartVPrime,
        _ => Chart::ChartV,
    }
}

/// Family knobs: how far the slices move as `τ` decreases from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyKnobs {
    pub n_tau: usize,
    /// Upper end of the foliated range (slightly above 1 so that stencils
    /// centred on `M1` stay inside).
    pub tau_max: f64,
    /// Fraction of the room `rho2 - f1(1/rho1)` used by the `H1` slices.
    pub share1: f64,
    /// Fraction of the room `f2(1/rho1) - 1` used by the `H2` slices.
    pub share2: f64,
    /// `eta1 / kappa1`: growth of the quadratic coefficient of `f1`.
    pub eta1_ratio: f64,
}

impl Default for FamilyKnobs {
    fn default() -> Self {
        FamilyKnobs {
            n_tau: 16,
            tau_max: 1.05,
            share1: 0.6,
            share2: 0.6,
            eta1_ratio: 1.0,
        }
    }
}


#[cfg(test)]
mod tests;
