//! Shape-constrained C² joins.
//!
//! Every curve built here is a piecewise cubic whose second derivative is a
//! continuous piecewise-linear density. Strict convexity (or concavity) is a
//! property of the density itself, so it holds by construction; the endpoint
//! conditions reduce to a 2x2 linear system in the density weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value and slope of a function at an abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointData {
    pub x: f64,
    pub value: f64,
    pub deriv: f64,
}

impl EndpointData {
    pub fn new(x: f64, value: f64, deriv: f64) -> Self {
        EndpointData { x, value, deriv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curvature {
    Convex,
    Concave,
}

/// Constant value corridor `lower < F < upper` on the join interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinProblem {
    pub left: EndpointData,
    pub right: EndpointData,
    pub sign: Curvature,
    pub bounds: Option<Corridor>,
}

impl JoinProblem {
    pub fn convex(left: EndpointData, right: EndpointData) -> Self {
        JoinProblem {
            left,
            right,
            sign: Curvature::Convex,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.bounds = Some(Corridor { lower, upper });
        self
    }

    /// Mirror a concave problem into a convex one (`F -> -F`).
    fn as_convex(&self) -> JoinProblem {
        match self.sign {
            Curvature::Convex => *self,
            Curvature::Concave => {
                let neg = |e: EndpointData| EndpointData::new(e.x, -e.value, -e.deriv);
                JoinProblem {
                    left: neg(self.left),
                    right: neg(self.right),
                    sign: Curvature::Convex,
                    bounds: self.bounds.map(|c| Corridor {
                        lower: -c.upper,
                        upper: -c.lower,
                    }),
                }
            }
        }
    }

    fn width(&self) -> f64 {
        self.right.x - self.left.x
    }
}

/// Outcome of the slope-chord feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub diagnostic: Option<String>,
}

/// Strict slope-chord test: `d_left < chord < d_right` for a convex join
/// (reversed for concave).
pub fn feasible(problem: &JoinProblem) -> Feasibility {
    let bad = |msg: String| Feasibility {
        feasible: false,
        diagnostic: Some(msg),
    };
    let (l, r) = (problem.left, problem.right);
    let finite = [l.x, l.value, l.deriv, r.x, r.value, r.deriv]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return bad("non-finite endpoint data".into());
    }
    if !(l.x < r.x) {
        return bad(format!("x_left = {} must be below x_right = {}", l.x, r.x));
    }
    let chord = (r.value - l.value) / (r.x - l.x);
    let (lo, hi, word) = match problem.sign {
        Curvature::Convex => (l.deriv, r.deriv, "left.deriv < chord < right.deriv"),
        Curvature::Concave => (r.deriv, l.deriv, "right.deriv < chord < left.deriv"),
    };
    if !(lo < chord) || !(chord < hi) {
        return bad(format!(
            "violated {word}: left.deriv = {}, chord = {chord}, right.deriv = {}",
            l.deriv, r.deriv
        ));
    }
    Feasibility {
        feasible: true,
        diagnostic: None,
    }
}

/// Piecewise cubic with continuous piecewise-linear second derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseC2 {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub second: Vec<f64>,
}

impl PiecewiseC2 {
    /// Integrate a knot density twice from the given initial value and slope.
    pub fn integrate(knots: Vec<f64>, second: Vec<f64>, value: f64, deriv: f64) -> Self {
        assert_eq!(knots.len(), second.len());
        assert!(knots.len() >= 2);
        let n = knots.len();
        let mut values = vec![value; n];
        let mut derivs = vec![deriv; n];
        for i in 0..n - 1 {
            let dx = knots[i + 1] - knots[i];
            derivs[i + 1] = derivs[i] + dx * (second[i] + second[i + 1]) / 2.0;
            values[i + 1] =
                values[i] + derivs[i] * dx + dx * dx * (2.0 * second[i] + second[i + 1]) / 6.0;
        }
        PiecewiseC2 {
            knots,
            values,
            derivs,
            second,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// `(F, F', F'')` at `x`; outside the knot range the end cubic is extended.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let i = self.segment(x);
        let dx = self.knots[i + 1] - self.knots[i];
        let t = x - self.knots[i];
        let (d0, d1) = (self.second[i], self.second[i + 1]);
        let slope = (d1 - d0) / dx;
        let f = self.values[i] + self.derivs[i] * t + d0 * t * t / 2.0 + slope * t * t * t / 6.0;
        let df = self.derivs[i] + d0 * t + slope * t * t / 2.0;
        let ddf = d0 + slope * t;
        (f, df, ddf)
    }

    /// Smallest `|F''|` over the knots (the density is linear in between).
    pub fn min_abs_second(&self) -> f64 {
        self.second.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()))
    }

    /// Minimum of `F` on the knot range (exact for a convex curve up to
    /// a single interior critical point per segment).
    pub fn min_value(&self) -> (f64, f64) {
        let mut best = (self.values[0], self.knots[0]);
        for i in 0..self.knots.len() - 1 {
            for x in [self.knots[i + 1]]
                .into_iter()
                .chain(self.segment_critical_points(i))
            {
                let v = self.eval(x).0;
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        best
    }

    pub fn max_value(&self) -> (f64, f64) {
        let neg = PiecewiseC2 {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            derivs: self.derivs.iter().map(|v| -v).collect(),
            second: self.second.iter().map(|v| -v).collect(),
        };
        let (v, x) = neg.min_value();
        (-v, x)
    }

    /// Roots of `F'` inside segment `i`.
    fn segment_critical_points(&self, i: usize) -> Vec<f64> {
        let dx = self.knots[i + 1] - self.knots[i];
        let (d0, d1) = (self.second[i], self.second[i + 1]);
        // F'(t) = a t^2 + b t + c on [0, dx]
        let a = (d1 - d0) / (2.0 * dx);
        let b = d0;
        let c = self.derivs[i];
        let mut out = Vec::new();
        let mut push = |t: f64| {
            if t > 0.0 && t < dx {
                out.push(self.knots[i] + t);
            }
        };
        if a.abs() < 1e-300 {
            if b != 0.0 {
                push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                push((-b + sq) / (2.0 * a));
                push((-b - sq) / (2.0 * a));
            }
        }
        out
    }

    pub fn negated(&self) -> PiecewiseC2 {
        PiecewiseC2 {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            derivs: self.derivs.iter().map(|v| -v).collect(),
            second: self.second.iter().map(|v| -v).collect(),
        }
    }

    /// CSV rows `x,value,deriv,second` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value,deriv,second\n");
        for i in 0..self.knots.len() {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.knots[i], self.values[i], self.derivs[i], self.second[i]
            ));
        }
        s
    }
}

/// Two positive densities on `[0, 1]`, concentrated towards the left and
/// right ends, together with their first and second running integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinBasis {
    pub power: f64,
    pub floor: f64,
    pub t: Vec<f64>,
    left: [Vec<f64>; 3],
    right: [Vec<f64>; 3],
}

impl JoinBasis {
    /// Densities `(1-t)^p + mu/(p+1)` and `t^p + mu/(p+1)` on `n` uniform segments.
    pub fn new(power: f64, floor: f64, segments: usize) -> Self {
        let n = segments.max(2);
        let t: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let base = floor / (power + 1.0);
        let dl: Vec<f64> = t.iter().map(|&s| (1.0 - s).powf(power) + base).collect();
        let dr: Vec<f64> = t.iter().map(|&s| s.powf(power) + base).collect();
        let il = PiecewiseC2::integrate(t.clone(), dl, 0.0, 0.0);
        let ir = PiecewiseC2::integrate(t.clone(), dr, 0.0, 0.0);
        JoinBasis {
            power,
            floor,
            t,
            left: [il.values, il.derivs, il.second],
            right: [ir.values, ir.derivs, ir.second],
        }
    }

    pub fn segments(&self) -> usize {
        self.t.len() - 1
    }

    /// Weights `(A, B)` of the two densities solving the endpoint conditions.
    /// `None` when either weight is not strictly positive.
    pub fn fit(&self, problem: &JoinProblem) -> Option<(f64, f64)> {
        let h = problem.width();
        let ddiff = problem.right.deriv - problem.left.deriv;
        let rise = problem.right.value - problem.left.value - problem.left.deriv * h;
        let n = self.segments();
        let (vl, sl) = (self.left[0][n], self.left[1][n]);
        let (vr, sr) = (self.right[0][n], self.right[1][n]);
        // h^2 (A vl + B vr) = rise ; h (A sl + B sr) = ddiff
        let det = vl * sr - vr * sl;
        if det.abs() < 1e-300 {
            return None;
        }
        let p = rise / (h * h);
        let q = ddiff / h;
        let a = (p * sr - vr * q) / det;
        let b = (vl * q - p * sl) / det;
        (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then_some((a, b))
    }

    /// Evaluate the fitted join at `x` without materializing the knots.
    pub fn eval(&self, problem: &JoinProblem, weights: (f64, f64), x: f64) -> (f64, f64, f64) {
        let (a, b) = weights;
        let h = problem.width();
        let s = (x - problem.left.x) / h;
        let n = self.segments();
        let i = ((s * n as f64).floor() as isize).clamp(0, n as isize - 1) as usize;
        let dt = self.t[i + 1] - self.t[i];
        let u = s - self.t[i];
        let comb = |k: usize, j: usize| a * self.left[k][j] + b * self.right[k][j];
        let (v0, s0, d0, d1) = (comb(0, i), comb(1, i), comb(2, i), comb(2, i + 1));
        let slope = (d1 - d0) / dt;
        let g = v0 + s0 * u + d0 * u * u / 2.0 + slope * u * u * u / 6.0;
        let dg = s0 + d0 * u + slope * u * u / 2.0;
        let ddg = d0 + slope * u;
        let l = problem.left;
        (
            l.value + l.deriv * h * s + h * h * g,
            l.deriv + h * dg,
            ddg,
        )
    }

    /// Materialize the fitted join as a knot curve.
    pub fn materialize(&self, problem: &JoinProblem, weights: (f64, f64)) -> PiecewiseC2 {
        let h = problem.width();
        let knots: Vec<f64> = self.t.iter().map(|s| problem.left.x + h * s).collect();
        let second: Vec<f64> = (0..self.t.len())
            .map(|j| weights.0 * self.left[2][j] + weights.1 * self.right[2][j])
            .collect();
        PiecewiseC2::integrate(knots, second, problem.left.value, problem.left.deriv)
    }
}

/// A solved join: the curve, its basis and the curvature margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinSolution {
    pub problem: JoinProblem,
    pub basis: JoinBasis,
    pub weights: (f64, f64),
    pub curve: PiecewiseC2,
    /// Smallest `|F''|` on the curve.
    pub margin: f64,
}

impl JoinSolution {
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        self.curve.eval(x)
    }
}

const POWERS: [f64; 12] = [
    1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0,
];
const DENSITY_FLOORS: [f64; 5] = [0.1, 1e-2, 1e-3, 1e-4, 1e-5];
const MARGIN_FLOOR: f64 = 1e-8;

/// Strictly convex (or concave) C² join matching both endpoints.
///
/// Densities are tried from spread-out to sharply concentrated (and from a
/// heavy to a light uniform floor); the first one whose weights are positive and whose curve respects the corridor wins.
pub fn solve(problem: &JoinProblem, knots: usize) -> Result<JoinSolution> {
    let f = feasible(problem);
    if !f.feasible {
        return Err(Error::Feasibility(f.diagnostic.unwrap_or_default()));
    }
    let convex = problem.as_convex();
    let mut tightest: Option<(f64, f64, Corridor)> = None;
    let attempts = DENSITY_FLOORS
        .iter()
        .flat_map(|&f| POWERS.iter().map(move |&p| (f, p)));
    for (floor, power) in attempts {
        let segments = knots.max((2.0 * power) as usize);
        let basis = JoinBasis::new(power, floor, segments);
        let Some(weights) = basis.fit(&convex) else {
            continue;
        };
        let curve = basis.materialize(&convex, weights);
        let margin = curve.min_abs_second();
        if margin <= MARGIN_FLOOR {
            continue;
        }
        if let Some(c) = convex.bounds {
            let (lo, xlo) = curve.min_value();
            let (hi, xhi) = curve.max_value();
            let low_slack = lo - c.lower;
            let high_slack = c.upper - hi;
            let high_ok = high_slack >= -1e-12;
            if !(low_slack > 0.0 && high_ok) {
                let (x, v) = if low_slack <= 0.0 { (xlo, lo) } else { (xhi, hi) };
                if tightest.map_or(true, |(_, tv, _)| (v - c.lower).abs() < (tv - c.lower).abs()) {
                    tightest = Some((x, v, c));
                }
                continue;
            }
        }
        let (curve, problem) = match problem.sign {
            Curvature::Convex => (curve, *problem),
            Curvature::Concave => (curve.negated(), *problem),
        };
        return Ok(JoinSolution {
            problem,
            basis,
            weights,
            curve,
            margin,
        });
    }
    match tightest {
        Some((x, v, c)) => {
            let (value, lower, upper) = match problem.sign {
                Curvature::Convex => (v, c.lower, c.upper),
                Curvature::Concave => (-v, -c.upper, -c.lower),
            };
            Err(Error::CorridorViolation {
                x,
                value,
                lower,
                upper,
            })
        }
        None => Err(Error::feasibility(
            "no positive density matches the endpoint data",
        )),
    }
}

/// Value, slope and curvature of a concave germ at the switch point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GermData {
    pub x: f64,
    pub value: f64,
    pub deriv: f64,
    pub second: f64,
}

/// Concave C² continuation of a germ reaching `F'(x_end) <= target_slope`
/// while staying above `floor`.
///
/// The density starts at the germ curvature (C² at the switch) and adds a
/// ramp `K t^p` concentrated towards `x_end`; `K` is solved from the slope
/// target and `p` is sharpened until the floor holds.
pub fn extend_concave(
    germ: GermData,
    target_slope: f64,
    x_end: f64,
    floor: f64,
    knots: usize,
) -> Result<(PiecewiseC2, f64)> {
    if !(germ.second < 0.0) {
        return Err(Error::feasibility("germ is not strictly concave at the switch"));
    }
    if !(x_end > germ.x) {
        return Err(Error::feasibility("x_end must lie beyond the switch"));
    }
    if !(target_slope < germ.deriv) {
        return Err(Error::feasibility(format!(
            "endpoint slope: target {target_slope} is not below the germ slope {} (concavity only decreases the slope)",
            germ.deriv
        )));
    }
    if !(germ.value > floor) {
        return Err(Error::feasibility(format!(
            "floor: germ value {} already at or below floor {floor}",
            germ.value
        )));
    }
    let aim = target_slope - 1e-6 * target_slope.abs().max(1.0);
    let h = x_end - germ.x;
    let base = -germ.second;
    let mut best_end: Option<f64> = None;
    for &power in POWERS.iter() {
        let segments = knots.max((2.0 * power) as usize);
        let t: Vec<f64> = (0..=segments).map(|i| i as f64 / segments as f64).collect();
        let xs: Vec<f64> = t.iter().map(|s| germ.x + h * s).collect();
        // base part decays linearly from the germ curvature
        let base_density: Vec<f64> = t.iter().map(|s| -base * (1.0 - s)).collect();
        let ramp: Vec<f64> = t.iter().map(|s| -s.powf(power)).collect();
        let b = PiecewiseC2::integrate(xs.clone(), base_density.clone(), germ.value, germ.deriv);
        let r = PiecewiseC2::integrate(xs.clone(), ramp.clone(), 0.0, 0.0);
        let end = segments;
        // germ.deriv + base drop + K * ramp drop = aim
        let k = (aim - b.derivs[end]) / r.derivs[end];
        if !(k > 0.0) {
            continue;
        }
        let second: Vec<f64> = base_density
            .iter()
            .zip(&ramp)
            .map(|(d, q)| d + k * q)
            .collect();
        let curve = PiecewiseC2::integrate(xs, second, germ.value, germ.deriv);
        let (min_v, _) = curve.min_value();
        best_end = Some(best_end.map_or(min_v, |m: f64| m.max(min_v)));
        if min_v > floor {
            let margin = curve.min_abs_second();
            if margin > MARGIN_FLOOR {
                return Ok((curve, margin));
            }
        }
    }
    Err(Error::feasibility(format!(
        "floor: value reaches {} before the slope target {target_slope} (floor {floor})",
        best_end.unwrap_or(f64::NEG_INFINITY)
    )))
}
