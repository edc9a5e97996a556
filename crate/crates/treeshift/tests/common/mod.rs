//! Shared corpus generators and brute-force oracles for the integration
//! and acceptance suites. Everything here is deliberately independent of
//! the library's own computation paths: chi sets come from parent walks,
//! determinants from cofactor expansion, inner products from the direct
//! double sum with exact square-root extraction.

#![allow(dead_code)]

use num::rational::BigRational;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use treeshift::measure::Atom;
use treeshift::scalar::exact_sqrt;
use treeshift::shift::Weight;
use treeshift::tree::VertexId;
use treeshift::{Measure, Scalar, ShiftRegion, TreeRegion, TreeTemplate, WeightFamily};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_template(rng: &mut ChaCha8Rng) -> TreeTemplate {
    match rng.gen_range(0..5) {
        0 => TreeTemplate::RootedPath,
        1 => TreeTemplate::FreeKAry { k: rng.gen_range(1..=2) },
        2 => TreeTemplate::OneBranch { stem: rng.gen_range(0..=3), branches: rng.gen_range(1..=4) },
        3 => {
            let depths = rng.gen_range(1..=4);
            let by_depth: BTreeMap<usize, usize> =
                (0..depths).map(|d| (d, rng.gen_range(0..=3))).collect();
            TreeTemplate::TableGenerated { by_depth, default: rng.gen_range(0..=2) }
        }
        _ => {
            let n = rng.gen_range(1..=20);
            let mut parents = vec![None];
            for v in 1..n {
                parents.push(Some(rng.gen_range(0..v)));
            }
            TreeTemplate::ExplicitFinite { parents, labels: None }
        }
    }
}

pub fn random_region(rng: &mut ChaCha8Rng) -> TreeRegion {
    let template = random_template(rng);
    let depth = rng.gen_range(0..=6);
    TreeRegion::materialize(template, depth).expect("small template")
}

/// Positive rational with small numerator and denominator.
pub fn random_positive_rational(rng: &mut ChaCha8Rng) -> Scalar {
    Scalar::ratio(rng.gen_range(1..=9), rng.gen_range(1..=9))
}

/// Random rational weights; a slice of them zero when `allow_zero`.
pub fn random_weights(rng: &mut ChaCha8Rng, region: &TreeRegion, allow_zero: bool) -> WeightFamily {
    let table: BTreeMap<usize, Weight> = region
        .non_root_vertices()
        .map(|v| {
            let modsq = if allow_zero && rng.gen_bool(0.15) {
                Scalar::zero()
            } else {
                random_positive_rational(rng)
            };
            (v.0, Weight { modsq, phase: 0.0 })
        })
        .collect();
    WeightFamily::from_weights(region, table).expect("table covers the region")
}

/// Random atomic probability measure with exact rational data. Atom
/// points are positive unless `allow_zero_atom`; masses sum to 1 exactly.
pub fn random_atomic_probability(rng: &mut ChaCha8Rng, allow_zero_atom: bool) -> Measure {
    let count = rng.gen_range(1..=4);
    let mut points: Vec<Scalar> = Vec::new();
    while points.len() < count {
        let p = if allow_zero_atom && rng.gen_bool(0.2) {
            Scalar::zero()
        } else {
            random_positive_rational(rng)
        };
        if !points.iter().any(|q| q == &p) {
            points.push(p);
        }
    }
    let raw: Vec<i64> = (0..count).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    let atoms = points
        .into_iter()
        .zip(raw)
        .map(|(point, w)| Atom { point, mass: Scalar::ratio(w, total) })
        .collect();
    Measure::new(atoms, vec![]).expect("valid atoms")
}

/// Random atomic probability with atom points drawn from a fixed list.
pub fn random_atomic_on_points(rng: &mut ChaCha8Rng, allowed: &[i64]) -> Measure {
    let count = rng.gen_range(1..=allowed.len().min(3));
    let mut chosen: Vec<i64> = Vec::new();
    while chosen.len() < count {
        let p = allowed[rng.gen_range(0..allowed.len())];
        if !chosen.contains(&p) {
            chosen.push(p);
        }
    }
    let raw: Vec<i64> = (0..count).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    let atoms = chosen
        .into_iter()
        .zip(raw)
        .map(|(p, w)| Atom { point: Scalar::from_int(p), mass: Scalar::ratio(w, total) })
        .collect();
    Measure::new(atoms, vec![]).expect("valid atoms")
}

/// `Chi<n>(u)` by the parent-walk definition: all vertices whose n-fold
/// parent is `u`.
pub fn chi_oracle(region: &TreeRegion, u: VertexId, n: usize) -> BTreeSet<VertexId> {
    region.vertices().filter(|&w| region.ancestor(w, n) == Some(u)).collect()
}

/// `|lambda_{u|v}|^2` by an explicit product along the parent chain.
pub fn path_product_oracle(shift: &ShiftRegion, u: VertexId, v: VertexId) -> Scalar {
    let region = shift.region();
    let mut product = Scalar::one();
    let mut cur = v;
    while cur != u {
        product = &product * shift.weights().modsq(cur);
        cur = region.parent(cur).expect("v descends from u");
    }
    product
}

/// Brute-force `||S^n e_u||^2`: enumerate `Chi<n>(u)` by parent walks and
/// sum explicit path products.
pub fn norm_sq_oracle(shift: &ShiftRegion, u: VertexId, n: usize) -> Scalar {
    chi_oracle(shift.region(), u, n)
        .into_iter()
        .fold(Scalar::zero(), |acc, w| &acc + &path_product_oracle(shift, u, w))
}

fn rational(s: &Scalar) -> BigRational {
    s.as_exact().expect("oracle needs exact weights").clone()
}

/// Modulus squared of the direct double sum
/// `sum over w in C of lambda_{u|w} * conj(lambda_{v|w})` for zero-phase
/// weights. Each cross product of terms is a perfect rational square on a
/// tree, and the oracle panics if that ever fails.
pub fn inner_product_modsq_oracle(
    shift: &ShiftRegion,
    m: usize,
    u: VertexId,
    n: usize,
    v: VertexId,
) -> Scalar {
    let region = shift.region();
    let cu = chi_oracle(region, u, m);
    let cv = chi_oracle(region, v, n);
    let common: Vec<VertexId> = cu.intersection(&cv).copied().collect();
    let terms: Vec<BigRational> = common
        .iter()
        .map(|&w| {
            rational(&path_product_oracle(shift, u, w)) * rational(&path_product_oracle(shift, v, w))
        })
        .collect();
    let mut total = BigRational::from_integer(0.into());
    for a in &terms {
        for b in &terms {
            let prod = a * b;
            let root = exact_sqrt(&prod)
                .unwrap_or_else(|| panic!("cross term {prod} is not a perfect square"));
            total += root;
        }
    }
    Scalar::Exact(total)
}

/// Determinant by cofactor expansion over exact scalars.
pub fn det_cofactor_oracle(m: &[Vec<Scalar>]) -> Scalar {
    let n = m.len();
    if n == 0 {
        return Scalar::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = Scalar::zero();
    for j in 0..n {
        let minor: Vec<Vec<Scalar>> = (1..n)
            .map(|i| (0..n).filter(|&c| c != j).map(|c| m[i][c].clone()).collect())
            .collect();
        let term = &m[0][j] * &det_cofactor_oracle(&minor);
        det = if j % 2 == 0 { &det + &term } else { &det - &term };
    }
    det
}

/// Builds a shift whose weights are calibrated bottom-up so that the
/// consistency condition holds with equality wherever possible, together
/// with frontier measures drawn from the given atom points. Propagation
/// through the library is then guaranteed to succeed.
pub fn random_calibrated_case(
    rng: &mut ChaCha8Rng,
    region: &TreeRegion,
    atom_points: &[i64],
) -> (ShiftRegion, BTreeMap<VertexId, Measure>) {
    let n = region.vertex_count();
    let mut mu: Vec<Option<Measure>> = vec![None; n];
    let mut modsq: Vec<Scalar> = vec![Scalar::zero(); n];
    let mut frontier = BTreeMap::new();
    for idx in (0..n).rev() {
        let v = VertexId(idx);
        if region.is_frontier(v) {
            let m = random_atomic_on_points(rng, atom_points);
            frontier.insert(v, m.clone());
            mu[idx] = Some(m);
        } else if region.is_genuine_leaf(v) {
            mu[idx] = Some(Measure::delta(Scalar::zero()));
        } else {
            let kids = region.children(v);
            let finite: Vec<(VertexId, Scalar)> = kids
                .iter()
                .filter_map(|&c| {
                    mu[c.0]
                        .as_ref()
                        .unwrap()
                        .moment(-1)
                        .finite()
                        .map(|m| (c, m.clone()))
                })
                .collect();
            if finite.is_empty() {
                mu[idx] = Some(Measure::delta(Scalar::zero()));
                continue;
            }
            let shares: Vec<Scalar> = (0..finite.len()).map(|_| random_positive_rational(rng)).collect();
            let total = shares.iter().fold(Scalar::zero(), |acc, s| &acc + s);
            let mut parent = Measure::zero();
            for ((c, recip), share) in finite.iter().zip(&shares) {
                let w = &(share / &total) / recip;
                modsq[c.0] = w.clone();
                parent = parent.plus(
                    &mu[c.0].as_ref().unwrap().scaled_by_power(-1).unwrap().scaled(&w),
                );
            }
            mu[idx] = Some(parent.canonicalized(0.0));
        }
    }
    let table: BTreeMap<usize, Weight> = region
        .non_root_vertices()
        .map(|v| (v.0, Weight { modsq: modsq[v.0].clone(), phase: 0.0 }))
        .collect();
    let weights = WeightFamily::from_weights(region, table).expect("covering table");
    (ShiftRegion::new(region.clone(), weights).expect("aligned"), frontier)
}

/// Random frontier measures for an arbitrary region, not calibrated: the
/// resulting propagation may legitimately fail with a condition
/// violation.
pub fn random_frontier_measures(
    rng: &mut ChaCha8Rng,
    region: &TreeRegion,
    allow_zero_atom: bool,
) -> BTreeMap<VertexId, Measure> {
    region
        .frontier_vertices()
        .map(|v| (v, random_atomic_probability(rng, allow_zero_atom)))
        .collect()
}
