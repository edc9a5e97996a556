//! Consistent systems of measures on a weighted shift region.
//!
//! A system assigns a probability measure `mu_v` and a constant
//! `eps_v >= 0` to every region vertex. It is consistent at `u` when
//!
//! ```text
//! mu_u(sigma) = sum over children v of |lambda_v|^2 *
//!               integral over sigma of (1/s) d mu_v  +  eps_u delta_0(sigma)
//! ```
//!
//! holds as an equality of measures. Verification checks that identity
//! componentwise, cross-checks the stored `eps` against the consistency
//! condition, and evaluates the iterated form against `Chi<n>` sets.

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::scalar::{ExtReal, Scalar};
use crate::shift::ShiftRegion;
use crate::tree::{TreeRegion, VertexId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-vertex probability measures and epsilon constants, dense over one
/// region's vertices.
#[derive(Clone, Debug)]
pub struct MeasureSystem {
    mu: Vec<Measure>,
    eps: Vec<Scalar>,
}

impl MeasureSystem {
    pub fn new(region: &TreeRegion, mu: Vec<Measure>, eps: Vec<Scalar>) -> Result<MeasureSystem> {
        if mu.len() != region.vertex_count() || eps.len() != region.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "system covers {} measures / {} eps values, region has {} vertices",
                mu.len(),
                eps.len(),
                region.vertex_count()
            )));
        }
        for (v, m) in mu.iter().enumerate() {
            if !m.is_probability() {
                return Err(Error::InvalidInput(format!(
                    "measure at vertex {v} has total mass {}, expected 1",
                    m.total_mass()
                )));
            }
        }
        for (v, e) in eps.iter().enumerate() {
            if e.is_negative() || *e > Scalar::one() {
                return Err(Error::InvalidInput(format!("eps at vertex {v} is {e}, outside [0, 1]")));
            }
        }
        Ok(MeasureSystem { mu, eps })
    }

    pub fn vertex_count(&self) -> usize {
        self.mu.len()
    }

    pub fn measure(&self, v: VertexId) -> &Measure {
        &self.mu[v.0]
    }

    pub fn eps(&self, v: VertexId) -> &Scalar {
        &self.eps[v.0]
    }

    pub fn is_exact(&self) -> bool {
        self.mu.iter().all(Measure::is_exact) && self.eps.iter().all(Scalar::is_exact)
    }

    /// Largest support point over all vertex measures.
    pub fn max_support_point(&self) -> Option<Scalar> {
        let mut best: Option<Scalar> = None;
        for m in &self.mu {
            if let Some(x) = m.max_support_point() {
                if best.as_ref().is_none_or(|b| x > *b) {
                    best = Some(x);
                }
            }
        }
        best
    }

    pub fn to_spec(&self) -> SystemSpec {
        SystemSpec {
            measures: self.mu.iter().enumerate().map(|(v, m)| (v, m.clone())).collect(),
            eps: self.eps.iter().enumerate().map(|(v, e)| (v, e.clone())).collect(),
        }
    }

    pub fn from_spec(region: &TreeRegion, spec: &SystemSpec) -> Result<MeasureSystem> {
        let n = region.vertex_count();
        let mut mu = Vec::with_capacity(n);
        let mut eps = Vec::with_capacity(n);
        for v in 0..n {
            mu.push(
                spec.measures
                    .get(&v)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("system is missing a measure at vertex {v}")))?,
            );
            eps.push(
                spec.eps
                    .get(&v)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("system is missing eps at vertex {v}")))?,
            );
        }
        for &v in spec.measures.keys().chain(spec.eps.keys()) {
            if v >= n {
                return Err(Error::InvalidInput(format!("system names vertex {v} outside the region")));
            }
        }
        MeasureSystem::new(region, mu, eps)
    }
}

/// JSON surface for measure systems.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(with = "crate::jsonmap")]
    pub measures: BTreeMap<usize, Measure>,
    #[serde(with = "crate::jsonmap")]
    pub eps: BTreeMap<usize, Scalar>,
}

/// The consistency condition value at `u`: the weighted sum of
/// `1/s`-integrals over the children, with `0 * inf = 0`.
pub fn condition_value(shift: &ShiftRegion, system: &MeasureSystem, u: VertexId) -> ExtReal {
    let mut acc = ExtReal::zero();
    for &v in shift.region().children(u) {
        acc = acc.add(&system.measure(v).moment(-1).scale(shift.weights().modsq(v)));
    }
    acc
}

/// Builds `(mu_u, eps_u)` from the children's measures. Fails with
/// `ConsistencyViolation` when the condition value exceeds 1.
pub fn build_parent(
    shift: &ShiftRegion,
    u: VertexId,
    child_measures: &BTreeMap<VertexId, Measure>,
) -> Result<(Measure, Scalar)> {
    let mut cond = ExtReal::zero();
    for &v in shift.region().children(u) {
        let m = child_measures
            .get(&v)
            .ok_or_else(|| Error::InvalidInput(format!("no measure supplied for child {v}")))?;
        cond = cond.add(&m.moment(-1).scale(shift.weights().modsq(v)));
    }
    if cond > Scalar::one() {
        return Err(Error::ConsistencyViolation { vertex: u, value: cond });
    }
    let eps = &Scalar::one() - cond.finite().expect("finite by comparison");
    let mut mu = Measure::zero();
    for &v in shift.region().children(u) {
        let w = shift.weights().modsq(v);
        if w.is_zero() {
            continue;
        }
        mu = mu.plus(&child_measures[&v].scaled_by_power(-1)?.scaled(w));
    }
    if eps.is_positive() {
        mu = mu.plus(&Measure::delta(Scalar::zero()).scaled(&eps));
    }
    Ok((mu.canonicalized(0.0), eps))
}

#[derive(Clone, Debug, Serialize)]
pub struct IteratedCheck {
    pub n: usize,
    pub residual: ExtReal,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexCheck {
    pub vertex: VertexId,
    /// Distance between the two sides of the consistency identity.
    pub residual: ExtReal,
    pub condition: ExtReal,
    pub eps_stored: Scalar,
    pub eps_expected: Option<Scalar>,
    pub eps_matches: bool,
    /// `mu_u({0}) = 0` iff `eps_u = 0`.
    pub zero_mass_iff_eps: bool,
    /// Children with nonzero weight place no mass at 0.
    pub children_clear_of_zero: bool,
    pub iterated: Vec<IteratedCheck>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub entries: Vec<VertexCheck>,
    pub worst: Option<(VertexId, ExtReal)>,
    pub pass: bool,
}

fn scalar_is_zero(s: &Scalar, tol: f64) -> bool {
    if s.is_exact() {
        s.is_zero()
    } else {
        s.to_f64().abs() <= tol
    }
}

fn residual_leq(r: &ExtReal, tol: f64) -> bool {
    match r {
        ExtReal::Finite(s) => scalar_is_zero(s, tol),
        ExtReal::Infinite => false,
    }
}

/// Right-hand side of the order-`n` iterated identity at `u`, as a
/// measure; `Err` marks a divergent reweighting, which the report treats
/// as an infinite residual. The `n = 1` case reads the children list
/// directly: it is complete for every non-frontier vertex, including
/// genuine leaves sitting at the region boundary.
fn iterated_rhs(shift: &ShiftRegion, system: &MeasureSystem, u: VertexId, n: usize) -> Result<Measure> {
    let targets: Vec<(VertexId, Scalar)> = if n == 1 {
        shift
            .region()
            .children(u)
            .iter()
            .map(|&v| (v, shift.weights().modsq(v).clone()))
            .collect()
    } else {
        shift
            .region()
            .chi_n(u, n)?
            .into_iter()
            .map(|v| Ok((v, shift.lambda_path_modsq(u, v)?)))
            .collect::<Result<_>>()?
    };
    let mut rhs = Measure::zero();
    for (v, w) in targets {
        if w.is_zero() {
            continue;
        }
        rhs = rhs.plus(&system.measure(v).scaled_by_power(-(n as i32))?.scaled(&w));
    }
    if system.eps(u).is_positive() {
        rhs = rhs.plus(&Measure::delta(Scalar::zero()).scaled(system.eps(u)));
    }
    Ok(rhs.canonicalized(0.0))
}

/// Checks the consistency identity, the epsilon cross-checks, and the
/// iterated identity for orders `2..=iter_depth` at every non-frontier
/// vertex. Failures are report entries, never errors.
pub fn verify_system(
    shift: &ShiftRegion,
    system: &MeasureSystem,
    tol: f64,
    iter_depth: usize,
) -> ConsistencyReport {
    let region = shift.region();
    let mut entries = Vec::new();
    let mut worst: Option<(VertexId, ExtReal)> = None;
    for u in region.vertices() {
        if region.is_frontier(u) {
            continue;
        }
        let condition = condition_value(shift, system, u);
        let mu_u = system.measure(u);
        let eps_stored = system.eps(u).clone();

        let (residual, eps_expected) = match &condition {
            ExtReal::Infinite => (ExtReal::Infinite, None),
            ExtReal::Finite(c) if *c > Scalar::one() => (ExtReal::Infinite, None),
            ExtReal::Finite(c) => {
                let expected_eps = &Scalar::one() - c;
                let rhs = iterated_rhs(shift, system, u, 1);
                let res = match rhs {
                    Ok(m) => ExtReal::Finite(mu_u.residual(&m, tol)),
                    Err(_) => ExtReal::Infinite,
                };
                (res, Some(expected_eps))
            }
        };

        let eps_matches = match &eps_expected {
            Some(e) => e.close_to(&eps_stored, tol),
            None => false,
        };
        let zero_mass_iff_eps =
            scalar_is_zero(&mu_u.mass_at_zero(), tol) == scalar_is_zero(&eps_stored, tol);
        let children_clear_of_zero = region.children(u).iter().all(|&v| {
            !shift.weights().modsq(v).is_positive()
                || scalar_is_zero(&system.measure(v).mass_at_zero(), tol)
        });

        let mut iterated = Vec::new();
        let max_n = iter_depth.min(region.depth().saturating_sub(region.depth_of(u)));
        for n in 2..=max_n {
            let res = match iterated_rhs(shift, system, u, n) {
                Ok(m) => ExtReal::Finite(mu_u.residual(&m, tol)),
                Err(_) => ExtReal::Infinite,
            };
            let pass = residual_leq(&res, tol);
            iterated.push(IteratedCheck { n, residual: res, pass });
        }

        let pass = residual_leq(&residual, tol)
            && eps_matches
            && zero_mass_iff_eps
            && children_clear_of_zero
            && iterated.iter().all(|c| c.pass);

        if worst.as_ref().is_none_or(|(_, w)| residual.partial_cmp(w) == Some(std::cmp::Ordering::Greater)) {
            worst = Some((u, residual.clone()));
        }
        entries.push(VertexCheck {
            vertex: u,
            residual,
            condition,
            eps_stored,
            eps_expected,
            eps_matches,
            zero_mass_iff_eps,
            children_clear_of_zero,
            iterated,
            pass,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    ConsistencyReport { entries, worst, pass }
}

/// Builds a system bottom-up from measures on the frontier: genuine
/// leaves are forced to `(delta_0, 1)`, interior vertices come from
/// `build_parent`, and the first condition violation aborts.
pub fn propagate(
    shift: &ShiftRegion,
    frontier_measures: &BTreeMap<VertexId, Measure>,
) -> Result<MeasureSystem> {
    let region = shift.region();
    for (&v, m) in frontier_measures {
        if v.0 >= region.vertex_count() || !region.is_frontier(v) {
            return Err(Error::InvalidInput(format!(
                "frontier measure given for {v}, which is not a frontier vertex"
            )));
        }
        if !m.is_probability() {
            return Err(Error::InvalidInput(format!(
                "frontier measure at {v} has total mass {}",
                m.total_mass()
            )));
        }
    }
    let n = region.vertex_count();
    let mut mu: Vec<Option<Measure>> = vec![None; n];
    let mut eps: Vec<Option<Scalar>> = vec![None; n];
    for idx in (0..n).rev() {
        let v = VertexId(idx);
        if region.is_frontier(v) {
            let m = frontier_measures.get(&v).ok_or_else(|| {
                Error::InvalidInput(format!("no frontier measure supplied for vertex {v}"))
            })?;
            eps[idx] = Some(m.mass_at_zero());
            mu[idx] = Some(m.clone());
        } else if region.is_genuine_leaf(v) {
            mu[idx] = Some(Measure::delta(Scalar::zero()));
            eps[idx] = Some(Scalar::one());
        } else {
            let children: BTreeMap<VertexId, Measure> = region
                .children(v)
                .iter()
                .map(|&c| (c, mu[c.0].clone().expect("children precede parents")))
                .collect();
            let (m, e) = build_parent(shift, v, &children)?;
            mu[idx] = Some(m);
            eps[idx] = Some(e);
        }
    }
    MeasureSystem::new(
        region,
        mu.into_iter().map(|m| m.expect("all vertices filled")).collect(),
        eps.into_iter().map(|e| e.expect("all vertices filled")).collect(),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentsRow {
    pub n: usize,
    pub norm_sq: Scalar,
    pub moment: Scalar,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentsMatchReport {
    pub vertex: VertexId,
    pub rows: Vec<MomentsRow>,
    pub pass: bool,
}

/// Asserts `||S^n e_u||^2 = integral of s^n d mu_u` for `n = 0..=n_max`.
pub fn moments_match(
    shift: &ShiftRegion,
    system: &MeasureSystem,
    u: VertexId,
    n_max: usize,
    tol: f64,
) -> Result<MomentsMatchReport> {
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let norm_sq = shift.norm_sq(u, n)?;
        let mom = system.measure(u).moment(n as i32);
        let (moment, pass) = match mom {
            ExtReal::Finite(m) => {
                let pass = m.close_to(&norm_sq, tol);
                (m, pass)
            }
            ExtReal::Infinite => (Scalar::from_f64(f64::INFINITY), false),
        };
        rows.push(MomentsRow { n, norm_sq, moment, pass });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(MomentsMatchReport { vertex: u, rows, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecializationReport {
    /// False when some weight vanishes; the check only applies to shifts
    /// with nonzero weights.
    pub applicable: bool,
    pub failures: Vec<VertexId>,
    pub pass: bool,
}

/// With nonzero weights, every non-root vertex must carry `eps = 0`, so
/// the consistency identity reduces to its rootless form off the root.
pub fn nonzero_weight_specialization_check(
    shift: &ShiftRegion,
    system: &MeasureSystem,
    tol: f64,
) -> SpecializationReport {
    if !shift.weights().all_nonzero() {
        return SpecializationReport { applicable: false, failures: Vec::new(), pass: true };
    }
    let failures: Vec<VertexId> = shift
        .region()
        .non_root_vertices()
        .filter(|&v| !scalar_is_zero(system.eps(v), tol))
        .collect();
    let pass = failures.is_empty();
    SpecializationReport { applicable: true, failures, pass }
}
