//! Area-weighted samples of `M1` and of the slices.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

const TABLE: usize = 16384;

/// Width of the seam neighbourhoods that get oversampled, in log radius.
pub const SEAM_BAND: f64 = 0.01;

/// Cumulative area of a piece along its parameter, per unit `dθ1 dθ2`.
struct AreaTable {
    s: Vec<f64>,
    cum: Vec<f64>,
}

impl AreaTable {
    fn new(lo: f64, hi: f64, density: impl Fn(f64) -> f64) -> Self {
        let s: Vec<f64> = (0..=TABLE).map(|i| lo + (hi - lo) * i as f64 / TABLE as f64).collect();
        let mut cum = vec![0.0; s.len()];
        for i in 1..s.len() {
            cum[i] = cum[i - 1] + 0.5 * (density(s[i - 1]) + density(s[i])) * (s[i] - s[i - 1]);
        }
        AreaTable { s, cum }
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Parameter at area fraction `u`, restricted to `[from, to]`.
    fn invert(&self, u: f64, from: f64, to: f64) -> f64 {
        let a = self.at(from);
        let b = self.at(to);
        let target = a + u * (b - a);
        let k = self.cum.partition_point(|&c| c < target).clamp(1, self.s.len() - 1);
        let (c0, c1) = (self.cum[k - 1], self.cum[k]);
        let w = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        self.s[k - 1] + w * (self.s[k] - self.s[k - 1])
    }

    fn at(&self, s: f64) -> f64 {
        let k = self.s.partition_point(|&x| x < s).clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let w = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
        self.cum[k - 1] + w * (self.cum[k] - self.cum[k - 1])
    }
}

/// Parameter ranges: `r2` in `[0, 1/rho1]` on `H1`, `H2`; `log |w1|` on `S`.
fn tables(fam: &SliceGeometry) -> [(Piece, AreaTable); 3] {
    let rs = 1.0 / fam.rho1;
    let h = |piece: Piece| {
        AreaTable::new(0.0, rs, |r| {
            let (m, dm) = fam.radial(piece, r);
            m * r * (1.0 + dm * dm).sqrt()
        })
    };
    let s = AreaTable::new(fam.x1, fam.x2, |x| {
        let (y, dy, _) = fam.s_eval(x);
        let (r1, r2) = (x.exp(), (-y).exp());
        r1 * r2 * (r1 * r1 + dy * dy * r2 * r2).sqrt()
    });
    [(Piece::H1, h(Piece::H1)), (Piece::S, s), (Piece::H2, h(Piece::H2))]
}

/// The data of one slice needed for sampling.
struct SliceGeometry<'a> {
    fam: Option<&'a FamilySpec>,
    model: &'a SphereModel,
    tau: f64,
    ends: Option<SliceEnds>,
    rho1: f64,
    x1: f64,
    x2: f64,
}

impl<'a> SliceGeometry<'a> {
    fn of_model(model: &'a SphereModel) -> Self {
        let (x1, x2) = model.s_range();
        SliceGeometry {
            fam: None,
            model,
            tau: 1.0,
            ends: None,
            rho1: model.params.rho1,
            x1,
            x2,
        }
    }

    fn of_slice(fam: &'a FamilySpec, tau: f64) -> Result<Self> {
        let ends = fam
            .slice_ends(tau)
            .ok_or_else(|| Error::feasibility(format!("no slice at tau = {tau}")))?;
        Ok(SliceGeometry {
            fam: Some(fam),
            model: &fam.model,
            tau,
            ends: Some(ends),
            rho1: fam.params().rho1,
            x1: ends.problem.left.x,
            x2: ends.problem.right.x,
        })
    }

    /// `(|z1|, d|z1|/d|z2|)` on `H1` or `H2`.
    fn radial(&self, piece: Piece, r: f64) -> (f64, f64) {
        match self.fam {
            Some(f) => {
                let h = 1e-7;
                let g = |r: f64| match piece {
                    Piece::H1 => f.f1_tau(self.tau, r),
                    _ => f.f2_tau(self.tau, r),
                };
                (g(r), (g(r + h) - g((r - h).max(0.0))) / (r + h - (r - h).max(0.0)))
            }
            None => {
                let prof = match piece {
                    Piece::H1 => &self.model.f1.profile,
                    _ => &self.model.f2.profile,
                };
                if r <= 0.0 {
                    let m = prof.log_eval_ext(f64::NEG_INFINITY).0.exp();
                    return (m, 0.0);
                }
                let (l, dl, _) = prof.log_eval_ext(r.ln());
                let m = l.exp();
                (m, m * dl / r)
            }
        }
    }

    fn s_eval(&self, x: f64) -> (f64, f64, f64) {
        match (self.fam, &self.ends) {
            (Some(f), Some(e)) => f.htilde(e, x),
            _ => self.model.htilde.eval(x),
        }
    }

    fn point(&self, piece: Piece, s: f64, t1: f64, t2: f64) -> ChartPoint {
        match piece {
            Piece::S => {
                let y = self.s_eval(s).0;
                ChartPoint::new(Chart::ChartVPrime, polar(s.exp(), t1), polar((-y).exp(), t2))
            }
            _ => ChartPoint::new(Chart::ChartV, polar(self.radial(piece, s).0, t1), polar(s, t2)),
        }
    }

    /// Parameter window of the seam neighbourhood of a piece.
    fn seam_window(&self, piece: Piece) -> (f64, f64) {
        let rs = 1.0 / self.rho1;
        match piece {
            Piece::S => {
                let w = SEAM_BAND * (self.x2 - self.x1);
                (self.x1 + w, self.x2 - w)
            }
            _ => (rs * (-SEAM_BAND).exp(), rs),
        }
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<ModelSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tabs = tables(self);
        let total: f64 = tabs.iter().map(|(_, t)| t.total()).sum();
        let mut out = Vec::with_capacity(4 * n);
        for (piece, tab) in &tabs {
            let k = ((n as f64) * tab.total() / total).round() as usize;
            let (lo, hi) = (tab.s[0], *tab.s.last().unwrap());
            for _ in 0..k {
                let s = tab.invert(rng.gen_range(0.0..1.0), lo, hi);
                let p = self.point(*piece, s, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                out.push(ModelSample {
                    point: p,
                    piece: *piece,
                    seam: false,
                });
            }
            // three more passes over the seam neighbourhoods
            let (a, b) = self.seam_window(*piece);
            let windows: Vec<(f64, f64)> = match piece {
                Piece::S => vec![(lo, a), (b, hi)],
                _ => vec![(a, b)],
            };
            for (wa, wb) in windows {
                let share = (tab.at(wb) - tab.at(wa)) / tab.total();
                let extra = 3 * ((k as f64) * share).round() as usize;
                for _ in 0..extra {
                    let s = tab.invert(rng.gen_range(0.0..1.0), wa, wb);
                    let p = self.point(*piece, s, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                    out.push(ModelSample {
                        point: p,
                        piece: *piece,
                        seam: true,
                    });
                }
            }
        }
        out
    }
}

/// Area-weighted samples of `M1`, seam neighbourhoods oversampled 4x
/// (the extra points carry `seam = true`).
pub fn sample_m1(model: &SphereModel, n: usize, seed: u64) -> Result<Vec<ModelSample>> {
    if n < 100 {
        return Err(Error::domain(format!("sample_m1 needs n >= 100, got {n}")));
    }
    Ok(SliceGeometry::of_model(model).sample(n, seed))
}

/// Same for the slice `M_τ`.
pub fn sample_slice(fam: &FamilySpec, tau: f64, n: usize, seed: u64) -> Result<Vec<ModelSample>> {
    if n < 100 {
        return Err(Error::domain(format!("sample_slice needs n >= 100, got {n}")));
    }
    Ok(SliceGeometry::of_slice(fam, tau)?.sample(n, seed))
}

/// Relative areas of `(H1, S, H2)` on `M1`.
pub fn area_fractions(model: &SphereModel) -> [f64; 3] {
    let tabs = tables(&SliceGeometry::of_model(model));
    let total: f64 = tabs.iter().map(|(_, t)| t.total()).sum();
    [tabs[0].1.total() / total, tabs[1].1.total() / total, tabs[2].1.total() / total]
}

/// Whether a sample keeps `SEAM_MARGIN` (log radius) from the seams and
/// stays off the binding.
pub fn off_seam(model: &SphereModel, s: &ModelSample) -> bool {
    let ys = model.seam_y();
    match s.piece {
        Piece::S => -s.point.z2.norm().ln() < -ys - SEAM_MARGIN,
        _ => s.point.z2.norm().ln() < ys - SEAM_MARGIN,
    }
}

/// Log-uniform grid on one piece of `M_τ`, away from the seams, with
/// golden-angle phases. On `H1`, `H2` the grid runs over `log |z2|`.
pub fn piece_grid(fam: &FamilySpec, tau: f64, piece: Piece, n: usize) -> Result<Vec<ChartPoint>> {
    let ys = fam.model.seam_y();
    let (lo, hi) = match piece {
        Piece::S => {
            let e = fam.slice_ends(tau).ok_or_else(|| Error::feasibility(format!("no slice at tau = {tau}")))?;
            let lvl = -ys - SEAM_MARGIN;
            let cross = |a: f64, b: f64| {
                let (mut a, mut b) = (a, b);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if fam.htilde(&e, m).0 > lvl {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            };
            let mid = 0.5 * (e.problem.left.x + e.problem.right.x);
            let lo = cross(e.problem.left.x, mid);
            let hi = cross(e.problem.right.x, mid);
            if !(lo < hi) {
                return Ok(Vec::new());
            }
            (lo, hi)
        }
        _ => (fam.model.knobs.x_lo.max(-4.0), ys - SEAM_MARGIN),
    };
    let golden = 2.399963229728653;
    interior_grid(lo, hi, n)
        .into_iter()
        .enumerate()
        .map(|(i, s)| fam.point_on(tau, piece, s, golden * i as f64, 0.5 + golden * (2 * i) as f64))
        .collect()
}
