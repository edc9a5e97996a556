//! Truncation of a consistent system to a bounded one.
//!
//! Level `i` rescales every weight by the restricted-mass ratio of its
//! endpoint measures, restricts every measure to `[0, i]`, and rescales
//! epsilon, with explicit degenerate branches when a restricted mass
//! vanishes. The truncated triplet again satisfies the consistency
//! identity, is bounded with norm at most `sqrt(i)`, and recovers the
//! original data as `i` grows past the support.

use crate::consistency::{verify_system, ConsistencyReport, MeasureSystem};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shift::{ShiftRegion, Weight, WeightFamily};
use crate::tree::VertexId;
use serde::Serialize;
use std::collections::BTreeMap;

/// One truncation level of a verified system.
#[derive(Clone, Debug)]
pub struct TruncatedTriplet {
    pub level: Scalar,
    pub weights: WeightFamily,
    pub system: MeasureSystem,
    /// Smallest integer `kappa_u` with `mu_u([0, kappa_u]) > 0`, per
    /// vertex of the original system.
    pub kappa: Vec<u32>,
    /// Original restricted masses `mu_v([0, i])`.
    pub restricted_mass: Vec<Scalar>,
}

fn kappa_of(mu: &crate::measure::Measure) -> u32 {
    let mut k = 0u32;
    while !mu.mass_up_to(&Scalar::from_int(i64::from(k))).is_positive() {
        k += 1;
    }
    k
}

/// Applies the three truncation definitions vertex by vertex.
pub fn truncate_triplet(shift: &ShiftRegion, system: &MeasureSystem, level: &Scalar) -> Result<TruncatedTriplet> {
    if !level.is_positive() {
        return Err(Error::InvalidInput(format!("truncation level {level} must be positive")));
    }
    let region = shift.region();
    let n = region.vertex_count();
    let mut restricted_mass = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    for v in region.vertices() {
        let original = system.measure(v);
        let (m, mass) = original.restrict_normalized(level);
        let e = if mass.is_positive() { system.eps(v) / &mass } else { Scalar::one() };
        restricted_mass.push(mass);
        mu.push(m);
        eps.push(e);
        kappa.push(kappa_of(original));
    }
    let mut table = BTreeMap::new();
    for v in region.non_root_vertices() {
        let parent = region.parent(v).expect("non-root vertex");
        let modsq = if restricted_mass[parent.0].is_positive() {
            shift.weights().modsq(v) * &(&restricted_mass[v.0] / &restricted_mass[parent.0])
        } else {
            Scalar::zero()
        };
        table.insert(v.0, Weight { modsq, phase: shift.weights().phase(v) });
    }
    let weights = WeightFamily::from_weights(region, table)?;
    let system = MeasureSystem::new(region, mu, eps)?;
    Ok(TruncatedTriplet { level: level.clone(), weights, system, kappa, restricted_mass })
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationReport {
    pub level: Scalar,
    pub consistency: ConsistencyReport,
    /// Every truncated measure is supported in `[0, level]`, so the
    /// truncated shift has norm at most `sqrt(level)`.
    pub support_bounded: bool,
    pub norm_bound_sq: Scalar,
    pub pass: bool,
}

/// Re-runs the consistency verification on the truncated triplet and
/// certifies the support bound.
pub fn verify_truncated(shift: &ShiftRegion, triplet: &TruncatedTriplet, tol: f64) -> Result<TruncationReport> {
    let truncated_shift = ShiftRegion::new(shift.region().clone(), triplet.weights.clone())?;
    let consistency = verify_system(&truncated_shift, &triplet.system, tol, 3);
    let support_bounded = shift
        .region()
        .vertices()
        .all(|v| triplet.system.measure(v).supported_within(&triplet.level));
    let pass = consistency.pass && support_bounded;
    Ok(TruncationReport {
        level: triplet.level.clone(),
        consistency,
        support_bounded,
        norm_bound_sq: triplet.level.clone(),
        pass,
    })
}

/// Closed form for the truncated path product:
/// `|lambda^(i)_{u|u'}|^2 = |lambda_{u|u'}|^2 * mu_{u'}([0,i]) / mu_u([0,i])`,
/// asserted against the direct product of truncated weights.
pub fn truncated_lambda_path(
    shift: &ShiftRegion,
    triplet: &TruncatedTriplet,
    u: VertexId,
    uprime: VertexId,
) -> Result<Scalar> {
    let kappa = triplet.kappa[u.0];
    let int_level = triplet.level.clone();
    if int_level < Scalar::from_int(i64::from(kappa)) {
        return Err(Error::KappaViolated { vertex: u, level: triplet.level.clone(), kappa });
    }
    let base = shift.lambda_path_modsq(u, uprime)?;
    let closed = &base * &(&triplet.restricted_mass[uprime.0] / &triplet.restricted_mass[u.0]);
    let truncated_shift = ShiftRegion::new(shift.region().clone(), triplet.weights.clone())?;
    let direct = truncated_shift.lambda_path_modsq(u, uprime)?;
    let agree = if closed.is_exact() && direct.is_exact() {
        closed == direct
    } else {
        closed.close_to(&direct, 1e-12)
    };
    if !agree {
        return Err(Error::InvalidInput(format!(
            "closed form {closed} disagrees with the weight product {direct} at ({u}, {uprime})"
        )));
    }
    Ok(closed)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub level: Scalar,
    pub n: usize,
    pub truncated_norm_sq: Scalar,
    pub target_norm_sq: Scalar,
    pub gap: Scalar,
    /// `||S^(i)^n e_u - S^n e_u||^2` from the coefficient families.
    pub vector_distance_sq: Scalar,
    /// Largest sampled inner-product discrepancy at this level and order.
    pub max_inner_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub vertex: VertexId,
    pub max_kappa: u32,
    pub rows: Vec<ConvergenceRow>,
}

/// Emits, for each level and order, the truncated and target squared
/// norms, their gap, the squared vector distance, and a sampled
/// inner-product gap. Rows are ordered by (level, n).
pub fn convergence_report(
    shift: &ShiftRegion,
    system: &MeasureSystem,
    u: VertexId,
    n_max: usize,
    levels: &[Scalar],
) -> Result<ConvergenceTable> {
    let region = shift.region();
    let sample: Vec<VertexId> = region.vertices().take(8).collect();
    let mut rows = Vec::new();
    let mut max_kappa = 0u32;
    for level in levels {
        let triplet = truncate_triplet(shift, system, level)?;
        max_kappa = triplet.kappa.iter().copied().fold(0, u32::max);
        let truncated_shift = ShiftRegion::new(region.clone(), triplet.weights.clone())?;
        for n in 0..=n_max {
            let target = shift.norm_sq(u, n)?;
            let truncated = truncated_shift.norm_sq(u, n)?;
            let gap = (&target - &truncated).abs();

            let original_coeffs = shift.apply_n(u, n)?;
            let truncated_coeffs = truncated_shift.apply_n(u, n)?;
            let mut dist = Scalar::zero();
            for (v, c) in &original_coeffs.entries {
                let t = &truncated_coeffs.entries[v];
                // same phase along the same path, so |a - b|^2 reduces to
                // (sqrt(a2) - sqrt(b2))^2 = a2 + b2 - 2 sqrt(a2 b2)
                let cross = (&c.modsq * &t.modsq).sqrt();
                dist = &dist + &(&(&c.modsq + &t.modsq) - &(&Scalar::from_int(2) * &cross));
            }

            let mut max_inner_gap = 0.0f64;
            for &v in &sample {
                for m in 0..=n_max {
                    if region.depth_of(v) + m > region.depth() {
                        continue;
                    }
                    let a = shift.inner_product(n, u, m, v)?;
                    let b = truncated_shift.inner_product(n, u, m, v)?;
                    max_inner_gap = max_inner_gap.max(a.dist_f64(&b));
                }
            }

            rows.push(ConvergenceRow {
                level: level.clone(),
                n,
                truncated_norm_sq: truncated,
                target_norm_sq: target,
                gap,
                vector_distance_sq: dist,
                max_inner_gap,
            });
        }
    }
    Ok(ConvergenceTable { vertex: u, max_kappa, rows })
}
