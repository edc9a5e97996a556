//! Verdict engine: combines the leaf obstruction, per-vertex Stieltjes
//! prefix checks, the theta lower bound, and consistent-system
//! verification into a single classification with a re-checkable
//! certificate or witness.
//!
//! Every verdict is scoped: it speaks about the materialized region up
//! to the analysis order, never about the infinite tree beyond it.

use crate::consistency::{
    moments_match, propagate, verify_system, ConsistencyReport, MeasureSystem, MomentsMatchReport,
    SystemSpec,
};
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::moments::{
    divergence_certificate, hankel_matrix, is_stieltjes_prefix, principal_minor_cofactor,
    theta_lower_bound, HankelVerdict, MomentPrefix, StieltjesReport,
};
use crate::scalar::{ExtReal, Scalar};
use crate::shift::{ShiftRegion, WeightSpec};
use crate::tree::{LeafStatus, TreeRegion, TreeTemplate, VertexId};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    /// Analysis order N for the moment prefixes.
    pub order: usize,
    pub tol: f64,
    pub system: Option<MeasureSystem>,
    pub frontier_measures: Option<BTreeMap<VertexId, Measure>>,
    pub support_bound: Option<Scalar>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { order: 8, tol: 1e-9, system: None, frontier_measures: None, support_bound: None }
    }
}

/// A disproof witness, re-checkable by a single independent oracle call.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A principal minor of a Hankel matrix of the vertex's norm prefix
    /// is negative. `matrix` is that principal submatrix; re-check it by
    /// cofactor expansion.
    Hankel {
        vertex: VertexId,
        shift: usize,
        order: usize,
        rows: Vec<usize>,
        value: Scalar,
        matrix: Vec<Vec<Scalar>>,
    },
    /// A genuine leaf under all-nonzero weights: a hyponormal shift with
    /// nonzero weights lives on a leafless tree.
    LeafObstruction { leaf: VertexId },
    /// The certified lower bound for the backward-extension integral
    /// exceeds the available theta = 1.
    ThetaBound { vertex: VertexId, bound: ExtReal, available_theta: Scalar },
}

impl Witness {
    /// How to re-establish the witness with a single independent
    /// computation; included in every rendered report.
    pub fn recheck_instruction(&self) -> &'static str {
        match self {
            Witness::Hankel { .. } => {
                "expand the determinant of the listed principal minor by cofactors; it is negative"
            }
            Witness::LeafObstruction { .. } => {
                "confirm the vertex has no children in the template and every weight is nonzero"
            }
            Witness::ThetaBound { .. } => {
                "recompute sup t_n^2 / t_(2n+1) from the raw shifted norms; it exceeds 1"
            }
        }
    }
}

/// Certification note attached to a positive verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Annotation {
    pub certified: bool,
    pub bound: Option<Scalar>,
    /// True when the bound was read off the region only and makes no
    /// claim about the tree beyond the frontier.
    pub region_local: bool,
    pub detail: String,
}

/// Everything needed to re-validate a Subnormal verdict: the system, its
/// verification report, per-vertex moment matching, and the analytic
/// annotations.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub template: TreeTemplate,
    pub depth: usize,
    pub weights: WeightSpec,
    pub system: SystemSpec,
    pub consistency: ConsistencyReport,
    pub moments: Vec<MomentsMatchReport>,
    pub quasi_analytic: Annotation,
    pub determinate: Annotation,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Subnormal { certificate: Box<Certificate> },
    NotSubnormal { witness: Witness, recheck: &'static str },
    EvidenceUpToOrder { order: usize, notes: Vec<String> },
    Undecided { reasons: Vec<String> },
}

/// Scope banner: every claim is relative to this region and order.
#[derive(Clone, Debug, Serialize)]
pub struct ScopeBanner {
    pub region_depth: usize,
    pub order: usize,
    pub vertex_count: usize,
    pub has_frontier: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub scope: ScopeBanner,
    #[serde(flatten)]
    pub verdict: Verdict,
}

impl Classification {
    /// CLI exit code: 0 subnormal, 1 not subnormal, 2 evidence/undecided.
    pub fn exit_code(&self) -> i32 {
        match &self.verdict {
            Verdict::Subnormal { .. } => 0,
            Verdict::NotSubnormal { .. } => 1,
            Verdict::EvidenceUpToOrder { .. } | Verdict::Undecided { .. } => 2,
        }
    }
}

fn vertex_order(region: &TreeRegion, u: VertexId, n: usize) -> usize {
    n.min(region.depth() - region.depth_of(u))
}

/// Runs the Stieltjes prefix test at every vertex, each to the deepest
/// order the region supports (at most N).
pub fn necessary_checks(
    shift: &ShiftRegion,
    n: usize,
    tol: f64,
) -> Result<BTreeMap<VertexId, StieltjesReport>> {
    let region = shift.region();
    if region.depth() < n {
        return Err(Error::DepthExceeded { required: n, available: region.depth() });
    }
    let mut out = BTreeMap::new();
    for u in region.vertices() {
        let order = vertex_order(region, u, n);
        let prefix = MomentPrefix::new(shift.norm_sq_prefix(u, order)?)?;
        out.insert(u, is_stieltjes_prefix(&prefix, tol)?);
    }
    Ok(out)
}

/// The leaf obstruction: applicable only when every weight is nonzero
/// and the region contains more than the root.
pub fn leaf_obstruction(shift: &ShiftRegion) -> Option<Witness> {
    if shift.region().vertex_count() <= 1 || !shift.weights().all_nonzero() {
        return None;
    }
    match shift.region().leaf_status() {
        LeafStatus::HasLeaf(Some(leaf)) => Some(Witness::LeafObstruction { leaf }),
        _ => None,
    }
}

fn hankel_witness(shift: &ShiftRegion, u: VertexId, report: &StieltjesReport) -> Result<Option<Witness>> {
    let checks = [(0usize, Some(&report.shift0)), (1usize, report.shift1.as_ref())];
    for (sh, verdict) in checks {
        if let Some(HankelVerdict::NotPsd { rows, value }) = verdict {
            let prefix = MomentPrefix::new(shift.norm_sq_prefix(u, report.order)?)?;
            let h = hankel_matrix(&prefix, sh)?;
            let matrix = rows
                .iter()
                .map(|&i| rows.iter().map(|&j| h[i][j].clone()).collect())
                .collect();
            return Ok(Some(Witness::Hankel {
                vertex: u,
                shift: sh,
                order: report.order,
                rows: rows.clone(),
                value: value.clone(),
                matrix,
            }));
        }
    }
    Ok(None)
}

/// Looks for a vertex whose shifted norm prefix certifies a backward
/// extension bound above the available theta = 1. On exact data every
/// such ratio is also a failing 2x2 Hankel minor, so this step acts as a
/// cross-check and as a guard for floating prefixes, where the
/// eigenvalue tolerance may absorb a small violation.
fn theta_witness(shift: &ShiftRegion, n: usize, tol: f64) -> Result<Option<Witness>> {
    let region = shift.region();
    let one = Scalar::one();
    for u in region.vertices() {
        let order = vertex_order(region, u, n);
        if order < 1 {
            continue;
        }
        let shifted: Vec<Scalar> = (1..=order).map(|k| shift.norm_sq(u, k)).collect::<Result<_>>()?;
        if !shifted[0].is_positive() {
            continue;
        }
        let prefix = MomentPrefix::new(shifted)?;
        let bound = theta_lower_bound(&prefix)?;
        let fires = match &bound {
            ExtReal::Infinite => true,
            ExtReal::Finite(b) if b.is_exact() && prefix.is_exact() => *b > one,
            ExtReal::Finite(b) => b.to_f64() > 1.0 + tol,
        };
        if fires {
            return Ok(Some(Witness::ThetaBound { vertex: u, bound, available_theta: one }));
        }
    }
    Ok(None)
}

fn annotations(
    shift: &ShiftRegion,
    system: &MeasureSystem,
    opts: &ClassifyOptions,
) -> Result<(Annotation, Annotation)> {
    let region = shift.region();
    let (bound, region_local) = match &opts.support_bound {
        Some(b) => {
            let holds = region.vertices().all(|v| system.measure(v).supported_within(b));
            if holds {
                (Some(b.clone()), false)
            } else {
                (None, true)
            }
        }
        None => (system.max_support_point(), region.has_frontier()),
    };
    let mut all_certified = bound.is_some();
    if let Some(b) = &bound {
        for u in region.vertices() {
            let order = vertex_order(region, u, opts.order);
            let prefix = MomentPrefix::new(shift.norm_sq_prefix(u, order)?)?;
            if !divergence_certificate(&prefix, Some(b), None).certified() {
                all_certified = false;
                break;
            }
        }
    }
    let quasi = Annotation {
        certified: all_certified,
        bound: bound.clone(),
        region_local,
        detail: if all_certified {
            "supports are bounded, so the quasi-analyticity series diverges at every vertex".into()
        } else {
            "no support bound available for the series terms".into()
        },
    };
    let determinate = Annotation {
        certified: all_certified,
        bound,
        region_local,
        detail: if all_certified {
            "compactly supported measures make every shifted moment sequence determinate".into()
        } else {
            "determinacy is certified only through compact support".into()
        },
    };
    Ok((quasi, determinate))
}

/// The full pipeline: leaf obstruction, necessary Stieltjes checks, theta
/// coherence, then the consistent-system sufficiency route.
pub fn classify(shift: &ShiftRegion, opts: &ClassifyOptions) -> Result<Classification> {
    let region = shift.region();
    let scope = ScopeBanner {
        region_depth: region.depth(),
        order: opts.order,
        vertex_count: region.vertex_count(),
        has_frontier: region.has_frontier(),
    };
    let done = |verdict| Ok(Classification { scope: scope.clone(), verdict });

    if let Some(witness) = leaf_obstruction(shift) {
        let recheck = witness.recheck_instruction();
        return done(Verdict::NotSubnormal { witness, recheck });
    }

    let checks = necessary_checks(shift, opts.order, opts.tol)?;
    for (u, report) in &checks {
        if !report.pass {
            if let Some(witness) = hankel_witness(shift, *u, report)? {
                let recheck = witness.recheck_instruction();
        return done(Verdict::NotSubnormal { witness, recheck });
            }
        }
    }

    if let Some(witness) = theta_witness(shift, opts.order, opts.tol)? {
        let recheck = witness.recheck_instruction();
        return done(Verdict::NotSubnormal { witness, recheck });
    }

    let mut reasons: Vec<String> = Vec::new();
    let system = match (&opts.system, &opts.frontier_measures) {
        (Some(s), _) => Some(s.clone()),
        (None, Some(fm)) => match propagate(shift, fm) {
            Ok(s) => Some(s),
            Err(e) => {
                reasons.push(format!("propagation from the frontier failed: {e}"));
                None
            }
        },
        (None, None) => None,
    };

    if let Some(system) = system {
        let consistency = verify_system(shift, &system, opts.tol, 3);
        let mut moments = Vec::new();
        let mut moments_pass = true;
        for u in region.vertices() {
            let order = vertex_order(region, u, opts.order);
            let report = moments_match(shift, &system, u, order, opts.tol)?;
            moments_pass &= report.pass;
            moments.push(report);
        }
        if consistency.pass && moments_pass {
            let (quasi_analytic, determinate) = annotations(shift, &system, opts)?;
            let certificate = Certificate {
                template: region.template().clone(),
                depth: region.depth(),
                weights: weight_table_spec(shift),
                system: system.to_spec(),
                consistency,
                moments,
                quasi_analytic,
                determinate,
            };
            return done(Verdict::Subnormal { certificate: Box::new(certificate) });
        }
        if !consistency.pass {
            let worst = consistency
                .worst
                .as_ref()
                .map(|(v, r)| format!("worst residual {r} at vertex {v}"))
                .unwrap_or_default();
            reasons.push(format!("the supplied system fails verification: {worst}"));
        }
        if !moments_pass {
            reasons.push("the supplied system does not match the norm moments".into());
        }
    } else if reasons.is_empty() {
        let mut notes = vec!["no measure system supplied or propagated".into()];
        for (u, report) in &checks {
            if report.order < opts.order {
                notes.push(format!("vertex {u} checked to order {} only", report.order));
            }
        }
        return done(Verdict::EvidenceUpToOrder { order: opts.order, notes });
    }

    done(Verdict::Undecided { reasons })
}

/// Re-emits the shift's weights as an explicit per-vertex table so that
/// certificates round-trip through the problem-file schema.
pub fn weight_table_spec(shift: &ShiftRegion) -> WeightSpec {
    let mut modsq = BTreeMap::new();
    let mut phase = BTreeMap::new();
    for v in shift.region().non_root_vertices() {
        modsq.insert(v.0, shift.weights().modsq(v).clone());
        let p = shift.weights().phase(v);
        if p != 0.0 {
            phase.insert(v.0, p);
        }
    }
    WeightSpec::Table { modsq, phase }
}

/// Re-checks a disproof witness by an independent route: cofactor
/// expansion for Hankel minors, the template for leaves, a fresh bound
/// computation for theta witnesses.
pub fn recheck_witness(shift: &ShiftRegion, witness: &Witness) -> Result<bool> {
    match witness {
        Witness::Hankel { vertex, shift: sh, order, rows, value, .. } => {
            let prefix = MomentPrefix::new(shift.norm_sq_prefix(*vertex, *order)?)?;
            let h = hankel_matrix(&prefix, *sh)?;
            let det = principal_minor_cofactor(&h, rows);
            Ok(det.is_negative() && det.close_to(value, 1e-9 * (1.0 + value.to_f64().abs())))
        }
        Witness::LeafObstruction { leaf } => Ok(shift.region().vertex_count() > 1
            && shift.weights().all_nonzero()
            && shift.region().is_genuine_leaf(*leaf)),
        Witness::ThetaBound { vertex, bound, available_theta } => {
            let region = shift.region();
            let order = region.depth() - region.depth_of(*vertex);
            if order < 1 {
                return Ok(false);
            }
            let shifted: Vec<Scalar> =
                (1..=order).map(|k| shift.norm_sq(*vertex, k)).collect::<Result<_>>()?;
            let fresh = theta_lower_bound(&MomentPrefix::new(shifted)?)?;
            Ok(fresh == *bound && fresh > *available_theta)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

/// Deterministic serialization of a classification.
pub fn render_report(c: &Classification, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(c).expect("serializable report"),
        ReportFormat::Text => render_text(c),
    }
}

fn render_text(c: &Classification) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scope: region depth {}, order {}, {} vertices{}\n",
        c.scope.region_depth,
        c.scope.order,
        c.scope.vertex_count,
        if c.scope.has_frontier { " (frontier present; claims are region-local)" } else { "" }
    ));
    match &c.verdict {
        Verdict::Subnormal { certificate } => {
            out.push_str("verdict: SUBNORMAL on the region (consistent system verified)\n");
            out.push_str(&format!(
                "  consistency: {} vertices checked, pass = {}\n",
                certificate.consistency.entries.len(),
                certificate.consistency.pass
            ));
            out.push_str(&format!(
                "  quasi-analytic: certified = {} ({})\n",
                certificate.quasi_analytic.certified, certificate.quasi_analytic.detail
            ));
            out.push_str(&format!(
                "  determinate: certified = {} ({})\n",
                certificate.determinate.certified, certificate.determinate.detail
            ));
        }
        Verdict::NotSubnormal { witness, .. } => {
            out.push_str("verdict: NOT SUBNORMAL\n");
            match witness {
                Witness::Hankel { vertex, shift, rows, value, matrix, .. } => {
                    out.push_str(&format!(
                        "  hankel witness at vertex {vertex}, shift {shift}: principal minor on rows {rows:?} has determinant {value}\n"
                    ));
                    for row in matrix {
                        let cells: Vec<String> = row.iter().map(|s| s.to_string()).collect();
                        out.push_str(&format!("    [{}]\n", cells.join(", ")));
                    }
                    out.push_str("  re-check: expand the determinant of the listed minor by cofactors\n");
                }
                Witness::LeafObstruction { leaf } => {
                    out.push_str(&format!(
                        "  leaf obstruction: vertex {leaf} is a genuine leaf and all weights are nonzero\n"
                    ));
                    out.push_str("  re-check: confirm the vertex has no children in the template\n");
                }
                Witness::ThetaBound { vertex, bound, available_theta } => {
                    out.push_str(&format!(
                        "  theta witness at vertex {vertex}: sup t_n^2/t_(2n+1) = {bound} exceeds theta = {available_theta}\n"
                    ));
                    out.push_str("  re-check: recompute the ratio from the raw shifted norms\n");
                }
            }
        }
        Verdict::EvidenceUpToOrder { order, notes } => {
            out.push_str(&format!("verdict: EVIDENCE up to order {order} (necessary checks pass)\n"));
            for n in notes {
                out.push_str(&format!("  note: {n}\n"));
            }
        }
        Verdict::Undecided { reasons } => {
            out.push_str("verdict: UNDECIDED\n");
            for r in reasons {
                out.push_str(&format!("  reason: {r}\n"));
            }
        }
    }
    out
}
