//! CSV exports. Headers:
//!
//! - `pages.csv`, `binding.csv`, `corners.csv`:
//!   `part,u1_re,u1_im,u2_re,u2_im,chart,z1_re,z1_im,z2_re,z2_im`
//! - `m1.csv`: `piece,seam,chart,z1_re,z1_im,z2_re,z2_im`
//! - `family_tau_KK.csv` (one per slice `τ = KK / n_tau`):
//!   `tau,piece,seam,chart,z1_re,z1_im,z2_re,z2_im`
//! - `levi_field.csv`: `piece,x1,y1,x2,y2,levi_min` (smallest eigenvalue of
//!   the Levi matrix of `u = exp(λ (γ - 1))` at the certified `λ`)

use std::f64::consts::PI;

use super::{ExportKind, RunConfig};
use crate::atlas::Params;
use crate::error::Result;
use crate::family::{
    build_family, build_m1, gamma_field, lambda_search, sample_m1, sample_slice, verification_samples, ModelSample,
    Piece, UField,
};
use crate::levi::{levi_field_csv, point};
use crate::openbook::{point_cloud_csv, sample_binding, sample_corner_tori, sample_page};

pub const M1_HEADER: &str = "piece,seam,chart,z1_re,z1_im,z2_re,z2_im";
pub const FAMILY_HEADER: &str = "tau,piece,seam,chart,z1_re,z1_im,z2_re,z2_im";
pub const LEVI_HEADER: &str = "piece,x1,y1,x2,y2,levi_min";

fn sample_rows(rows: &[ModelSample], prefix: &str, out: &mut String) {
    for s in rows {
        let q = &s.point;
        out.push_str(&format!(
            "{prefix}{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            s.piece.tag(),
            s.seam as u8,
            q.chart.tag(),
            q.z1.re,
            q.z1.im,
            q.z2.re,
            q.z2.im
        ));
    }
}

/// `(file name, contents)` for each file of an export.
pub fn export(p: &Params, cfg: &RunConfig, what: ExportKind) -> Result<Vec<(String, String)>> {
    let k = &cfg.knobs;
    let n = k.export_points;
    Ok(match what {
        ExportKind::M1 => {
            let model = build_m1(p, &k.profile())?;
            let mut s = format!("{M1_HEADER}\n");
            sample_rows(&sample_m1(&model, n, cfg.seed)?, "", &mut s);
            vec![("m1.csv".into(), s)]
        }
        ExportKind::Pages => {
            let mut rows = Vec::new();
            for i in 0..8 {
                rows.extend(sample_page(p, 2.0 * PI * i as f64 / 8.0, n / 8)?);
            }
            vec![("pages.csv".into(), point_cloud_csv(&rows))]
        }
        ExportKind::Binding => vec![("binding.csv".into(), point_cloud_csv(&sample_binding(p, n)?))],
        ExportKind::Corners => {
            let side = ((n as f64 / 2.0).sqrt().ceil() as usize).max(2);
            vec![("corners.csv".into(), point_cloud_csv(&sample_corner_tori(p, side)?))]
        }
        ExportKind::Family => {
            let fam = build_family(p, &k.profile(), &k.family())?;
            let width = fam.taus.len().to_string().len();
            fam.taus
                .iter()
                .enumerate()
                .map(|(i, &tau)| {
                    let mut s = format!("{FAMILY_HEADER}\n");
                    sample_rows(&sample_slice(&fam, tau, n, cfg.seed)?, &format!("{tau:.17e},"), &mut s);
                    Ok((format!("family_tau_{:0width$}.csv", i + 1), s))
                })
                .collect::<Result<_>>()?
        }
        ExportKind::LeviField => {
            let fam = build_family(p, &k.profile(), &k.family())?;
            let lambda = lambda_search(&fam, &k.verify())?.certified_lambda;
            let samples = verification_samples(&fam, n, cfg.seed)?;
            let mut s = format!("{LEVI_HEADER}\n");
            for piece in [Piece::H1, Piece::S, Piece::H2] {
                let pts: Vec<_> = samples
                    .iter()
                    .filter(|q| q.piece == piece)
                    .map(|q| point(q.point.z1, q.point.z2))
                    .collect();
                let u = UField {
                    gamma: gamma_field(&fam, piece),
                    lambda,
                };
                for line in levi_field_csv(&u, &pts)?.lines().skip(1) {
                    s.push_str(piece.tag());
                    s.push(',');
                    s.push_str(line);
                    s.push('\n');
                }
            }
            vec![("levi_field.csv".into(), s)]
        }
    })
}
