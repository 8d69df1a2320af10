//! Pseudoconcavity and open-book compatibility of `M1`, and the end-to-end run.

use rayon::prelude::*;

use super::*;
use crate::levi::{
    contact_sign, det4, find_lambda_blocks, j, norm, Convention, Jet, LambdaBlock, LambdaOutcome, ScalarField, Stencil,
    DEFAULT_STEP, P4,
};

/// Density and tolerance knobs of the verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyKnobs {
    /// Slices on which `exp(λγ)` is certified.
    pub lambda_taus: Vec<f64>,
    /// Grid points per piece and slice (doubled for the refined grid).
    pub grid_per_piece: usize,
    pub lambda_max: f64,
    /// `M1` samples for the pseudoconcavity and compatibility sweeps.
    pub samples: usize,
    /// Binding points per binding circle.
    pub binding_points: usize,
    pub regularity_tol: f64,
}

impl Default for VerifyKnobs {
    fn default() -> Self {
        VerifyKnobs {
            lambda_taus: vec![0.25, 0.5, 0.75, 1.0],
            grid_per_piece: 24,
            lambda_max: 1e4,
            samples: 1000,
            binding_points: 64,
            regularity_tol: 1e-6,
        }
    }
}

fn coords(q: &ChartPoint) -> P4 {
    q.coords()
}

fn d_theta1(p: &P4) -> P4 {
    [-p[1], p[0], 0.0, 0.0]
}

fn unit(v: &P4) -> P4 {
    let n = norm(v);
    v.map(|x| x / n)
}

/// Tangent to the page curve, running from the `H1` binding over `S` to the
/// `H2` binding.
pub fn page_tangent(model: &SphereModel, piece: Piece, p: &P4) -> P4 {
    let r1 = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let r2 = (p[2] * p[2] + p[3] * p[3]).sqrt();
    let dr1 = [p[0] / r1, p[1] / r1, 0.0, 0.0];
    let dr2 = [0.0, 0.0, p[2] / r2, p[3] / r2];
    let comb = |a: f64, b: f64| [a * dr1[0], a * dr1[1], b * dr2[2], b * dr2[3]];
    match piece {
        Piece::H1 | Piece::H2 => {
            let prof = if piece == Piece::H1 {
                &model.f1.profile
            } else {
                &model.f2.profile
            };
            let (l, dl, _) = prof.log_eval_ext(r2.ln());
            let slope = l.exp() * dl / r2;
            let sign = if piece == Piece::H1 { 1.0 } else { -1.0 };
            comb(sign * slope, sign)
        }
        Piece::S => {
            let dh = model.htilde.eval(r1.ln()).1;
            comb(r1, -r2 * dh)
        }
    }
}

/// `λ` search over per-piece grids of the slices in `lambda_taus`.
pub fn lambda_search(fam: &FamilySpec, vk: &VerifyKnobs) -> Result<LambdaOutcome> {
    let pieces = [Piece::H1, Piece::S, Piece::H2];
    let fields: Vec<GammaField> = pieces.iter().map(|&pc| gamma_field(fam, pc)).collect();
    let mut grids = Vec::new();
    for &pc in &pieces {
        let mut g = Vec::new();
        let mut r = Vec::new();
        for &t in &vk.lambda_taus {
            g.extend(piece_grid(fam, t, pc, vk.grid_per_piece)?.iter().map(coords));
            r.extend(piece_grid(fam, t, pc, 2 * vk.grid_per_piece)?.iter().map(coords));
        }
        grids.push((g, r));
    }
    let blocks: Vec<LambdaBlock> = pieces
        .iter()
        .zip(&fields)
        .zip(&grids)
        .map(|((pc, f), (g, r))| LambdaBlock {
            label: pc.tag().to_string(),
            field: f as &dyn ScalarField,
            grid: g,
            refined: r,
        })
        .collect();
    find_lambda_blocks(&blocks, vk.lambda_max)
}

/// Finite-difference gradient of `γ` bounded away from zero.
pub fn regularity_check(fam: &FamilySpec, vk: &VerifyKnobs) -> Result<Certificate> {
    let mut cert = Certificate::new("gamma regular (|grad| lower bound)", "lambda grids", vk.regularity_tol);
    for pc in [Piece::H1, Piece::S, Piece::H2] {
        let field = gamma_field(fam, pc);
        let mut pts = Vec::new();
        for &t in &vk.lambda_taus {
            pts.extend(piece_grid(fam, t, pc, vk.grid_per_piece)?.iter().map(coords));
        }
        let norms: Vec<f64> = pts
            .par_iter()
            .map(|p| Ok(norm(&Stencil::sample(&field, p, DEFAULT_STEP)?.gradient())))
            .collect::<Result<_>>()?;
        for (p, g) in pts.iter().zip(norms) {
            cert.record(g, p);
        }
    }
    Ok(cert)
}

fn u_field(fam: &FamilySpec, piece: Piece, lambda: f64) -> UField<'_> {
    UField {
        gamma: gamma_field(fam, piece),
        lambda,
    }
}

/// Off-seam samples of `M1` used by the sweeps.
pub fn verification_samples(fam: &FamilySpec, n: usize, seed: u64) -> Result<Vec<ModelSample>> {
    Ok(sample_m1(&fam.model, n, seed)?
        .into_iter()
        .filter(|s| off_seam(&fam.model, s) && s.point.z2.norm() > 1e-3)
        .collect())
}

/// Per sample: the oriented profile tag is negative contact and the Levi-level
/// `α ∧ dα` is negative for `M1` oriented as the boundary of the compact side
/// (`flip` reverses the orientation, which must flip every sign).
pub fn pseudoconcavity_check(fam: &FamilySpec, lambda: f64, samples: &[ModelSample], flip: bool) -> Result<Certificate> {
    let tags = fam.model.contact_tags()?;
    let want = if flip {
        ContactTag::PositiveContact
    } else {
        ContactTag::NegativeContact
    };
    let mut cert = Certificate::new(
        if flip {
            "positive contact for the reversed orientation"
        } else {
            "strictly pseudoconcave: negative contact"
        },
        format!("{} off-seam samples", samples.len()),
        0.0,
    );
    let signs: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            let u = u_field(fam, s.piece, lambda);
            contact_sign(&u, &coords(&s.point), flip, DEFAULT_STEP)
        })
        .collect::<Result<_>>()?;
    for (piece, tag, _) in &tags {
        let tag = if flip { flip_tag(*tag) } else { *tag };
        if tag != want {
            cert.fail(format!("{} profile is {:?}", piece.tag(), tag));
        }
    }
    let mut disagreements = 0;
    for (s, sign) in samples.iter().zip(signs) {
        let (_, tag, _) = tags.iter().find(|t| t.0 == s.piece).copied().expect("every piece is tagged");
        let tag = if flip { flip_tag(tag) } else { tag };
        let sign = if flip { sign } else { -sign };
        if (tag == want) != (sign > 0.0) {
            disagreements += 1;
        }
        cert.record(sign, &coords(&s.point));
    }
    cert.note(format!("{disagreements} profile/Levi disagreements"));
    Ok(cert)
}

fn flip_tag(t: ContactTag) -> ContactTag {
    match t {
        ContactTag::PositiveContact => ContactTag::NegativeContact,
        ContactTag::NegativeContact => ContactTag::PositiveContact,
        t => t,
    }
}

/// The three compatibility certificates `(binding, pages, span)`.
pub fn compatibility_check(
    fam: &FamilySpec,
    lambda: f64,
    samples: &[ModelSample],
    binding_points: usize,
) -> Result<(Certificate, Certificate, Certificate)> {
    let p = fam.params();
    let mut binding = Certificate::new(
        "alpha positive on the binding",
        format!("{binding_points} points per binding circle"),
        0.0,
    );
    for (piece, radius, orient) in [(Piece::H1, p.c1, -1.0), (Piece::H2, p.c2, 1.0)] {
        let u = u_field(fam, piece, lambda);
        let pts: Vec<P4> = (0..binding_points)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / binding_points as f64;
                [radius * t.cos(), radius * t.sin(), 0.0, 0.0]
            })
            .collect();
        let vals: Vec<f64> = pts
            .par_iter()
            .map(|q| {
                let jet = Jet::at(&u, q, DEFAULT_STEP)?;
                let x = d_theta1(q).map(|c| orient * c);
                Ok(-jet.dc(&x) / (norm(&jet.grad) * radius))
            })
            .collect::<Result<_>>()?;
        for (q, v) in pts.iter().zip(vals) {
            binding.record(v, q);
        }
    }

    let mut pages = Certificate::new(
        "d alpha positive on the pages",
        format!("{} off-binding samples", samples.len()),
        0.0,
    );
    let mut span = Certificate::new(
        "d/dtheta1, V, R span TM1 with R_theta2 > 0",
        format!("{} off-binding samples", samples.len()),
        0.0,
    );
    let rows: Vec<(f64, f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let q = coords(&s.point);
            let u = u_field(fam, s.piece, lambda);
            let jet = Jet::at(&u, &q, DEFAULT_STEP)?;
            let t1 = d_theta1(&q);
            let v = page_tangent(&fam.model, s.piece, &q);
            let g = norm(&jet.grad);
            let page = -jet.ddc(&v, &t1, Convention::Full) / (norm(&v) * norm(&t1) * g);
            let n = unit(&jet.grad);
            let reeb = j(&n);
            let det = det4([n, unit(&t1), unit(&v), reeb]);
            let r2sq = q[2] * q[2] + q[3] * q[3];
            let theta2 = (q[2] * reeb[3] - q[3] * reeb[2]) / r2sq.sqrt();
            Ok((page, det, theta2))
        })
        .collect::<Result<_>>()?;
    for (s, (page, det, theta2)) in samples.iter().zip(rows) {
        let at = coords(&s.point);
        pages.record(page, &at);
        span.record(det.abs().min(theta2), &at);
    }
    Ok((binding, pages, span))
}

/// The full family suite: `M1`, slices, nesting, `γ` regularity, `λ`,
/// pseudoconcavity and compatibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub model: Vec<Certificate>,
    pub slices: Vec<SliceReport>,
    pub kappa: [f64; 4],
    pub nesting: Option<Certificate>,
    pub regularity: Option<Certificate>,
    pub lambda: Option<LambdaOutcome>,
    pub pseudoconcavity: Option<Certificate>,
    pub binding: Option<Certificate>,
    pub pages: Option<Certificate>,
    pub span: Option<Certificate>,
    pub error: Option<String>,
    pub pass: bool,
}

impl FamilyReport {
    fn failed(e: Error) -> Self {
        FamilyReport {
            model: Vec::new(),
            slices: Vec::new(),
            kappa: [0.0; 4],
            nesting: None,
            regularity: None,
            lambda: None,
            pseudoconcavity: None,
            binding: None,
            pages: None,
            span: None,
            error: Some(e.to_string()),
            pass: false,
        }
    }

    pub fn certificates(&self) -> Vec<&Certificate> {
        let mut v: Vec<&Certificate> = self.model.iter().collect();
        v.extend(self.slices.iter().flat_map(|s| s.conditions.iter()));
        for c in [&self.nesting, &self.regularity, &self.pseudoconcavity, &self.binding, &self.pages, &self.span]
            .into_iter()
            .flatten()
        {
            v.push(c);
        }
        if let Some(l) = &self.lambda {
            v.push(&l.contact);
            v.push(&l.certificate);
        }
        v
    }
}

pub fn run_family_suite(params: &Params, knobs: &ProfileKnobs, fk: &FamilyKnobs, vk: &VerifyKnobs, seed: u64) -> FamilyReport {
    let fam = match build_family(params, knobs, fk) {
        Ok(f) => f,
        Err(e) => return FamilyReport::failed(e),
    };
    let mut rep = FamilyReport::failed(Error::Config(String::new()));
    rep.error = None;
    rep.model = fam.model.conditions.clone();
    rep.slices = fam.slices.clone();
    rep.kappa = [fam.kappa1, fam.eta1, fam.kappa2, fam.eta2];
    rep.nesting = Some(fam.nesting.clone());
    let mut run = || -> Result<()> {
        rep.regularity = Some(regularity_check(&fam, vk)?);
        let lam = lambda_search(&fam, vk)?;
        let lambda = lam.certified_lambda;
        rep.lambda = Some(lam);
        let samples = verification_samples(&fam, vk.samples, seed)?;
        rep.pseudoconcavity = Some(pseudoconcavity_check(&fam, lambda, &samples, false)?);
        let (b, p, s) = compatibility_check(&fam, lambda, &samples, vk.binding_points)?;
        rep.binding = Some(b);
        rep.pages = Some(p);
        rep.span = Some(s);
        Ok(())
    };
    if let Err(e) = run() {
        rep.error = Some(e.to_string());
    }
    rep.pass = rep.error.is_none() && rep.certificates().iter().all(|c| c.pass);
    rep
}
