//! The weighted shift operator attached to a tree region.
//!
//! Weights are stored as exact modulus squared plus an optional floating
//! phase: every norm and consistency formula downstream depends only on
//! `|lambda_v|^2`, so the Stieltjes pipeline stays rational, while inner
//! products reassemble phases at the end.

use crate::error::{Error, Result};
use crate::scalar::{PolarScalar, Scalar};
use crate::tree::{TreeRegion, VertexId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct Weight {
    pub modsq: Scalar,
    pub phase: f64,
}

/// Per-vertex weights on the non-root vertices of one region; slot 0 is a
/// placeholder so region indices line up.
#[derive(Clone, Debug)]
pub struct WeightFamily {
    weights: Vec<Weight>,
}

impl WeightFamily {
    pub fn from_weights(region: &TreeRegion, mut table: BTreeMap<usize, Weight>) -> Result<WeightFamily> {
        let mut weights = Vec::with_capacity(region.vertex_count());
        weights.push(Weight { modsq: Scalar::zero(), phase: 0.0 });
        for v in region.non_root_vertices() {
            let w = table.remove(&v.0).ok_or_else(|| {
                Error::InvalidInput(format!("weight table is missing vertex {v}"))
            })?;
            if w.modsq.is_negative() {
                return Err(Error::InvalidInput(format!("weight modsq at vertex {v} is negative")));
            }
            weights.push(w);
        }
        if let Some((&v, _)) = table.iter().next() {
            return Err(Error::InvalidInput(format!(
                "weight table names vertex {v} outside the region"
            )));
        }
        Ok(WeightFamily { weights })
    }

    fn from_depth_rule(region: &TreeRegion, rule: impl Fn(usize) -> Result<Scalar>) -> Result<WeightFamily> {
        let mut weights = Vec::with_capacity(region.vertex_count());
        weights.push(Weight { modsq: Scalar::zero(), phase: 0.0 });
        for v in region.non_root_vertices() {
            weights.push(Weight { modsq: rule(region.depth_of(v))?, phase: 0.0 });
        }
        Ok(WeightFamily { weights })
    }

    pub fn constant(region: &TreeRegion, value: Scalar) -> Result<WeightFamily> {
        Self::from_depth_rule(region, |_| Ok(value.clone()))
    }

    /// `modsq(v) = depth(v) / (depth(v) + 1)`.
    pub fn bergman(region: &TreeRegion) -> WeightFamily {
        Self::from_depth_rule(region, |d| {
            Ok(Scalar::ratio(d as i64, d as i64 + 1))
        })
        .expect("rule never fails")
    }

    /// `modsq(v) = ratio^depth(v)`.
    pub fn geometric(region: &TreeRegion, ratio: Scalar) -> Result<WeightFamily> {
        if ratio.is_negative() {
            return Err(Error::InvalidInput("geometric ratio must be nonnegative".into()));
        }
        Self::from_depth_rule(region, |d| Ok(ratio.powi(d as i32)))
    }

    pub fn by_depth(
        region: &TreeRegion,
        table: &BTreeMap<usize, Scalar>,
        default: Option<&Scalar>,
    ) -> Result<WeightFamily> {
        Self::from_depth_rule(region, |d| {
            table
                .get(&d)
                .or(default)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("no weight given for depth {d}")))
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn modsq(&self, v: VertexId) -> &Scalar {
        debug_assert!(v.0 > 0, "the root carries no weight");
        &self.weights[v.0].modsq
    }

    pub fn phase(&self, v: VertexId) -> f64 {
        self.weights[v.0].phase
    }

    pub fn all_nonzero(&self) -> bool {
        self.weights.iter().skip(1).all(|w| w.modsq.is_positive())
    }

    pub fn is_exact(&self) -> bool {
        self.weights.iter().skip(1).all(|w| w.modsq.is_exact())
    }
}

/// JSON surface for weight families.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum WeightSpec {
    #[serde(rename = "table")]
    Table {
        #[serde(with = "crate::jsonmap")]
        modsq: BTreeMap<usize, Scalar>,
        #[serde(default, with = "crate::jsonmap")]
        phase: BTreeMap<usize, f64>,
    },
    #[serde(rename = "constant")]
    Constant { value: Scalar },
    #[serde(rename = "bergman")]
    Bergman,
    #[serde(rename = "geometric")]
    Geometric { ratio: Scalar },
    #[serde(rename = "by_depth")]
    ByDepth {
        #[serde(with = "crate::jsonmap")]
        modsq: BTreeMap<usize, Scalar>,
        #[serde(default)]
        default: Option<Scalar>,
    },
}

impl WeightSpec {
    pub fn build(&self, region: &TreeRegion) -> Result<WeightFamily> {
        match self {
            WeightSpec::Table { modsq, phase } => {
                let table = modsq
                    .iter()
                    .map(|(&v, m)| {
                        (v, Weight { modsq: m.clone(), phase: phase.get(&v).copied().unwrap_or(0.0) })
                    })
                    .collect();
                WeightFamily::from_weights(region, table)
            }
            WeightSpec::Constant { value } => WeightFamily::constant(region, value.clone()),
            WeightSpec::Bergman => Ok(WeightFamily::bergman(region)),
            WeightSpec::Geometric { ratio } => WeightFamily::geometric(region, ratio.clone()),
            WeightSpec::ByDepth { modsq, default } => {
                WeightFamily::by_depth(region, modsq, default.as_ref())
            }
        }
    }
}

/// Coefficients of `S^n e_u` over `Chi<n>(u)`.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub entries: BTreeMap<VertexId, PolarScalar>,
}

impl Coefficients {
    pub fn norm_sq(&self) -> Scalar {
        self.entries.values().fold(Scalar::zero(), |acc, c| &acc + &c.modsq)
    }
}

/// Certified operator-norm data: `max_child_sum` is the largest sum of
/// squared child weights over non-frontier vertices, so the restriction
/// of the shift to the region has norm at most its square root. When the
/// region has a frontier the bound is region-local, not a global claim.
#[derive(Clone, Debug, Serialize)]
pub struct NormBound {
    pub max_child_sum: Scalar,
    pub region_local: bool,
}

/// A tree region together with a weight family: the weighted shift.
#[derive(Clone, Debug)]
pub struct ShiftRegion {
    region: TreeRegion,
    weights: WeightFamily,
}

impl ShiftRegion {
    pub fn new(region: TreeRegion, weights: WeightFamily) -> Result<ShiftRegion> {
        if weights.len() != region.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "weight family covers {} vertices, region has {}",
                weights.len(),
                region.vertex_count()
            )));
        }
        Ok(ShiftRegion { region, weights })
    }

    pub fn region(&self) -> &TreeRegion {
        &self.region
    }

    pub fn weights(&self) -> &WeightFamily {
        &self.weights
    }

    /// `|lambda_{u|v}|^2`: product of squared weights along the parent
    /// chain from `v` up to, excluding, `u`; 1 when `v = u`.
    pub fn lambda_path_modsq(&self, u: VertexId, v: VertexId) -> Result<Scalar> {
        Ok(self.lambda_path(u, v)?.modsq)
    }

    /// `lambda_{u|v}` in polar form.
    pub fn lambda_path(&self, u: VertexId, v: VertexId) -> Result<PolarScalar> {
        let (du, dv) = (self.region.depth_of(u), self.region.depth_of(v));
        if dv < du {
            return Err(Error::NotDescendant { ancestor: u, vertex: v });
        }
        let mut modsq = Scalar::one();
        let mut phase = 0.0;
        let mut cur = v;
        for _ in 0..dv - du {
            modsq = &modsq * self.weights.modsq(cur);
            phase += self.weights.phase(cur);
            cur = self.region.parent(cur).expect("depth accounting");
        }
        if cur != u {
            return Err(Error::NotDescendant { ancestor: u, vertex: v });
        }
        Ok(PolarScalar { modsq, phase })
    }

    /// Coefficient family of `S^n e_u`: `lambda_{u|v}` at each
    /// `v` in `Chi<n>(u)`.
    pub fn apply_n(&self, u: VertexId, n: usize) -> Result<Coefficients> {
        let mut entries = BTreeMap::new();
        for v in self.region.chi_n(u, n)? {
            entries.insert(v, self.lambda_path(u, v)?);
        }
        Ok(Coefficients { entries })
    }

    /// `||S^n e_u||^2 = sum over Chi<n>(u) of |lambda_{u|v}|^2`; an empty
    /// child set sums to 0.
    pub fn norm_sq(&self, u: VertexId, n: usize) -> Result<Scalar> {
        let mut acc = Scalar::zero();
        for v in self.region.chi_n(u, n)? {
            acc = &acc + &self.lambda_path_modsq(u, v)?;
        }
        Ok(acc)
    }

    /// The prefix `(||S^0 e_u||^2, ..., ||S^n_max e_u||^2)`.
    pub fn norm_sq_prefix(&self, u: VertexId, n_max: usize) -> Result<Vec<Scalar>> {
        (0..=n_max).map(|n| self.norm_sq(u, n)).collect()
    }

    /// `<S^m e_u, S^n e_v>` via the three-case closed form: zero when the
    /// descendant sets are disjoint, otherwise a single path coefficient
    /// times a squared norm.
    pub fn inner_product(&self, m: usize, u: VertexId, n: usize, v: VertexId) -> Result<PolarScalar> {
        let chi_u = self.region.chi_n(u, m)?;
        let chi_v: BTreeSet<VertexId> = self.region.chi_n(v, n)?.into_iter().collect();
        let meets = chi_u.iter().any(|w| chi_v.contains(w));
        if !meets {
            return Ok(PolarScalar::zero());
        }
        if m <= n {
            let coeff = self.lambda_path(v, u)?.conj();
            Ok(coeff.scale(&self.norm_sq(u, m)?))
        } else {
            let coeff = self.lambda_path(u, v)?;
            Ok(coeff.scale(&self.norm_sq(v, n)?))
        }
    }

    /// Largest sum of squared child weights over non-frontier vertices.
    pub fn norm_bound(&self) -> NormBound {
        let mut max = Scalar::zero();
        for u in self.region.vertices() {
            if self.region.is_frontier(u) {
                continue;
            }
            let mut sum = Scalar::zero();
            for &c in self.region.children(u) {
                sum = &sum + self.weights.modsq(c);
            }
            if sum > max {
                max = sum;
            }
        }
        NormBound { max_child_sum: max, region_local: self.region.has_frontier() }
    }
}
