//! Wire formats: JSON schemas for polynomials, measures, and trees, and
//! the CSV layouts used by the command-line tools.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebraic::{AlgebraicError, BivariatePolynomial, BranchTrack, Permutation};
use crate::grid::ConfigurationField;
use crate::harmonic::{LevelCurve, SectorDecomposition};
use crate::measure::{InterfaceDensity, Measure, MeasureArc, MeasureError, QuadTag};
use crate::poly::Poly;
use crate::tree::{AnalyticTree, TraceRecord, TreeEdge};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Algebraic(#[from] AlgebraicError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("coefficient list must match degree_y + 1 entries")]
    DegreeMismatch,
    #[error("unknown quadrature rule tag {0:?}")]
    UnknownRule(String),
    #[error("gauss_jacobi arcs need alpha and beta exponents")]
    MissingExponents,
    #[error("csv: {0}")]
    Csv(String),
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

// -------- polynomial JSON --------

#[derive(Debug, Serialize, Deserialize)]
pub struct PolyJson {
    pub degree_y: usize,
    /// coeffs[j] is p_j as [re, im] pairs ascending in z.
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

pub fn poly_to_json(p: &BivariatePolynomial) -> String {
    let doc = PolyJson {
        degree_y: p.degree_y(),
        coeffs: p
            .coeffs()
            .iter()
            .map(|c| c.coeffs().iter().map(|&z| pair(z)).collect())
            .collect(),
    };
    serde_json::to_string_pretty(&doc).unwrap()
}

pub fn poly_from_json(text: &str) -> Result<BivariatePolynomial, IoError> {
    let doc: PolyJson = serde_json::from_str(text)?;
    if doc.coeffs.len() != doc.degree_y + 1 {
        return Err(IoError::DegreeMismatch);
    }
    let coeffs = doc
        .coeffs
        .into_iter()
        .map(|c| Poly::new(c.into_iter().map(unpair).collect()))
        .collect();
    Ok(BivariatePolynomial::new(coeffs)?)
}

// -------- measure JSON --------

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureAtomJson {
    pub z: [f64; 2],
    pub w: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureArcJson {
    pub points: Vec<[f64; 2]>,
    pub density: Vec<f64>,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureJson {
    #[serde(default)]
    pub atoms: Vec<MeasureAtomJson>,
    #[serde(default)]
    pub arcs: Vec<MeasureArcJson>,
}

pub fn measure_to_json(m: &Measure) -> String {
    let doc = MeasureJson {
        atoms: m
            .atoms
            .iter()
            .map(|&(z, w)| MeasureAtomJson { z: pair(z), w })
            .collect(),
        arcs: m
            .arcs
            .iter()
            .map(|arc| {
                let (rule, alpha, beta) = match arc.rule {
                    QuadTag::Trapezoid => ("trapezoid".to_string(), None, None),
                    QuadTag::GaussJacobi { alpha, beta } => {
                        ("gauss_jacobi".to_string(), Some(alpha), Some(beta))
                    }
                };
                MeasureArcJson {
                    points: arc.points.iter().map(|&z| pair(z)).collect(),
                    density: arc.density.clone(),
                    rule,
                    alpha,
                    beta,
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).unwrap()
}

pub fn measure_from_json(text: &str) -> Result<Measure, IoError> {
    let doc: MeasureJson = serde_json::from_str(text)?;
    let atoms = doc.atoms.into_iter().map(|a| (unpair(a.z), a.w)).collect();
    let mut arcs = Vec::with_capacity(doc.arcs.len());
    for arc in doc.arcs {
        let rule = match arc.rule.as_str() {
            "trapezoid" => QuadTag::Trapezoid,
            "gauss_jacobi" => match (arc.alpha, arc.beta) {
                (Some(alpha), Some(beta)) => QuadTag::GaussJacobi { alpha, beta },
                _ => return Err(IoError::MissingExponents),
            },
            other => return Err(IoError::UnknownRule(other.to_string())),
        };
        arcs.push(MeasureArc {
            points: arc.points.into_iter().map(unpair).collect(),
            density: arc.density,
            rule,
        });
    }
    Ok(Measure::new(atoms, arcs)?)
}

// -------- tree JSON --------

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeEdgeJson {
    pub a: usize,
    pub b: usize,
    #[serde(default)]
    pub ctrl: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeJson {
    pub nodes: Vec<[f64; 2]>,
    pub edges: Vec<TreeEdgeJson>,
}

pub fn tree_to_json(t: &AnalyticTree) -> String {
    let doc = TreeJson {
        nodes: t.nodes.iter().map(|&z| pair(z)).collect(),
        edges: t
            .edges
            .iter()
            .map(|e| TreeEdgeJson {
                a: e.a,
                b: e.b,
                ctrl: e.ctrl.iter().map(|&z| pair(z)).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).unwrap()
}

pub fn tree_from_json(text: &str) -> Result<AnalyticTree, IoError> {
    let doc: TreeJson = serde_json::from_str(text)?;
    Ok(AnalyticTree {
        nodes: doc.nodes.into_iter().map(unpair).collect(),
        edges: doc
            .edges
            .into_iter()
            .map(|e| TreeEdge {
                a: e.a,
                b: e.b,
                ctrl: e.ctrl.into_iter().map(unpair).collect(),
            })
            .collect(),
    })
}

// -------- path JSON (a bare list of vertices) --------

pub fn path_to_json(path: &[Complex64]) -> String {
    let doc: Vec<[f64; 2]> = path.iter().map(|&z| pair(z)).collect();
    serde_json::to_string_pretty(&doc).unwrap()
}

pub fn path_from_json(text: &str) -> Result<Vec<Complex64>, IoError> {
    let doc: Vec<[f64; 2]> = serde_json::from_str(text)?;
    Ok(doc.into_iter().map(unpair).collect())
}

// -------- CSV layouts --------

/// BranchTrack CSV: t, re(z), im(z), then one re/im pair per branch, with
/// the end permutation appended as a comment-prefixed JSON footer.
pub fn track_to_csv(track: &BranchTrack) -> String {
    let k = track.samples.first().map_or(0, |s| s.roots.len());
    let mut out = String::from("t,re_z,im_z");
    for nu in 1..=k {
        out.push_str(&format!(",re_alpha_{nu},im_alpha_{nu}"));
    }
    out.push('\n');
    for s in &track.samples {
        out.push_str(&format!("{:.17e},{:.17e},{:.17e}", s.t, s.z.re, s.z.im));
        for r in &s.roots {
            out.push_str(&format!(",{:.17e},{:.17e}", r.re, r.im));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "# {}\n",
        serde_json::json!({
            "permutation": track.end_permutation.0,
            "closed": track.closed,
            "cycles": format!("{}", track.end_permutation),
        })
    ));
    out
}

/// Reads back the permutation footer of a track CSV.
pub fn track_csv_permutation(text: &str) -> Result<Permutation, IoError> {
    for line in text.lines().rev() {
        if let Some(json) = line.strip_prefix("# ") {
            let value: serde_json::Value = serde_json::from_str(json)?;
            let perm = value["permutation"]
                .as_array()
                .ok_or_else(|| IoError::Csv("missing permutation footer".into()))?
                .iter()
                .map(|v| v.as_u64().unwrap_or(0) as usize)
                .collect();
            return Ok(Permutation(perm));
        }
    }
    Err(IoError::Csv("no footer line".into()))
}

/// LevelCurve CSV: s, re(z), im(z), residual.
pub fn curve_to_csv(curve: &LevelCurve) -> String {
    let mut out = String::from("s,re_z,im_z,residual\n");
    for s in &curve.samples {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.3e}\n",
            s.s, s.z.re, s.z.im, s.residual
        ));
    }
    out
}

/// ConfigurationField CSV: x, y, V, active_index (1-based).
pub fn field_to_csv(field: &ConfigurationField) -> String {
    let mut out = String::from("x,y,v,active_index\n");
    for j in 0..field.grid.ny {
        for i in 0..field.grid.nx {
            let z = field.grid.point(i, j);
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{}\n",
                z.re,
                z.im,
                field.node_value(i, j),
                field.node_active(i, j) + 1
            ));
        }
    }
    out
}

/// Interface density CSV: s, re(z), im(z), lambda.
pub fn density_to_csv(iface: &InterfaceDensity) -> String {
    let mut out = String::from("s,re_z,im_z,lambda\n");
    for (sample, &lam) in iface.curve.samples.iter().zip(&iface.lambda) {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            sample.s, sample.z.re, sample.z.im, lam
        ));
    }
    out
}

/// Search trace CSV: iteration, objective, mass_re, mass_im, tv, defect,
/// accepted.
pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("iteration,objective,mass_re,mass_im,tv,defect,accepted\n");
    for r in trace {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.iteration, r.objective, r.mass.re, r.mass.im, r.tv, r.defect, r.accepted as u8
        ));
    }
    out
}

/// Sector report JSON: arcs sorted by exit angle plus one interior sample
/// point per sector.
pub fn sectors_to_json(dec: &SectorDecomposition) -> String {
    let doc = serde_json::json!({
        "arcs": dec.arcs.iter().map(|a| serde_json::json!({
            "pair": [a.pair.0 + 1, a.pair.1 + 1],
            "exit_angle": a.exit_angle,
            "polyline": a.polyline.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "sectors": dec.sectors.iter().map(|s| serde_json::json!({
            "order_index": s.order_index,
            "apex": pair(s.apex),
            "arc_before": s.arc_before,
            "arc_after": s.arc_after,
            "sample_point": pair(s.sample_point),
        })).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).unwrap()
}

/// Subharmonicity verification report JSON.
pub fn subharmonic_report_to_json(report: &crate::configurations::SubharmonicReport) -> String {
    let doc = serde_json::json!({
        "pass": report.passed(),
        "mv_tol": report.mv_tol,
        "violations": report.violations.iter().map(|v| serde_json::json!({
            "x": v.z.re,
            "y": v.z.im,
            "deficit": v.deficit,
        })).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraic::{circle_path, continue_branches};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn poly_json_round_trip() {
        let z = Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p = BivariatePolynomial::new(vec![Poly::constant(c(-1.0, 0.0)), z.clone(), z])
            .unwrap();
        let text = poly_to_json(&p);
        let back = poly_from_json(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn poly_json_rejects_degree_mismatch() {
        let text = r#"{"degree_y": 2, "coeffs": [[[0.0, 0.0]]]}"#;
        assert!(matches!(
            poly_from_json(text),
            Err(IoError::DegreeMismatch)
        ));
    }

    #[test]
    fn measure_json_round_trip() {
        let m = crate::measure::example51_measure(16).unwrap();
        let text = measure_to_json(&m);
        let back = measure_from_json(&text).unwrap();
        assert_abs_diff_eq!(
            back.total_mass().unwrap(),
            m.total_mass().unwrap(),
            epsilon = 1e-14
        );
        let z = c(7.0, 2.0);
        assert!(
            (back.cauchy_transform(z).unwrap() - m.cauchy_transform(z).unwrap()).norm() < 1e-14
        );
    }

    #[test]
    fn tree_json_round_trip() {
        let t = AnalyticTree::segment(c(-4.0, 0.0), c(0.0, 0.0));
        let back = tree_from_json(&tree_to_json(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn track_csv_footer() {
        let z = Poly::new(vec![c(0.0, 0.0), c(-1.0, 0.0)]);
        let p = BivariatePolynomial::new(vec![
            z,
            Poly::zero(),
            Poly::constant(c(1.0, 0.0)),
        ])
        .unwrap();
        let loop_path = circle_path(c(0.0, 0.0), 1.0, 32);
        let track = continue_branches(&p, &loop_path, None).unwrap();
        let csv = track_to_csv(&track);
        assert!(csv.starts_with("t,re_z,im_z,re_alpha_1,im_alpha_1,re_alpha_2,im_alpha_2\n"));
        let perm = track_csv_permutation(&csv).unwrap();
        assert_eq!(perm, track.end_permutation);
        assert!(perm.is_transposition());
    }
}
