//! Built-in example problems.

use crate::problem::{ProblemFile, ProblemOptions};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use treeshift::measure::BoxComponent;
use treeshift::{Measure, Scalar, TreeRegion, TreeTemplate, WeightSpec};

fn frontier_map(template: &TreeTemplate, depth: usize, measure: &Measure) -> BTreeMap<usize, Measure> {
    let region = TreeRegion::materialize(template.clone(), depth).expect("builtin template");
    region.frontier_vertices().map(|v| (v.0, measure.clone())).collect()
}

fn problem(
    template: TreeTemplate,
    depth: usize,
    weights: WeightSpec,
    frontier: Option<BTreeMap<usize, Measure>>,
    order: usize,
    levels: Option<Vec<Scalar>>,
) -> ProblemFile {
    ProblemFile {
        template,
        depth: Some(depth),
        weights,
        system: None,
        frontier_measures: frontier,
        support_bound: None,
        options: ProblemOptions { order: Some(order), tol: None, levels },
    }
}

/// The named example corpus, in deterministic order.
pub fn corpus() -> Vec<(&'static str, ProblemFile)> {
    let one = Scalar::one();
    let mut out = Vec::new();

    let t = TreeTemplate::RootedPath;
    out.push((
        "path_isometry",
        problem(
            t.clone(),
            10,
            WeightSpec::Constant { value: one.clone() },
            Some(frontier_map(&t, 10, &Measure::delta_int(1))),
            8,
            None,
        ),
    ));

    let bergman_tail = Measure::new(
        vec![],
        vec![BoxComponent { lower: Scalar::zero(), upper: one.clone(), mass: one.clone(), profile: 10 }],
    )
    .expect("valid box");
    out.push((
        "bergman_path",
        problem(
            t.clone(),
            10,
            WeightSpec::Bergman,
            Some(frontier_map(&t, 10, &bergman_tail)),
            8,
            None,
        ),
    ));

    let binary = TreeTemplate::FreeKAry { k: 2 };
    out.push((
        "binary_half",
        problem(
            binary.clone(),
            6,
            WeightSpec::Constant { value: Scalar::ratio(1, 2) },
            Some(frontier_map(&binary, 6, &Measure::delta_int(1))),
            4,
            None,
        ),
    ));

    let branch = TreeTemplate::OneBranch { stem: 1, branches: 3 };
    out.push((
        "one_branch",
        problem(
            branch.clone(),
            6,
            WeightSpec::ByDepth {
                modsq: BTreeMap::from([(2, Scalar::ratio(1, 3))]),
                default: Some(one.clone()),
            },
            Some(frontier_map(&branch, 6, &Measure::delta_int(1))),
            4,
            None,
        ),
    ));

    out.push((
        "twochild",
        problem(
            binary.clone(),
            1,
            WeightSpec::Constant { value: Scalar::ratio(1, 2) },
            Some(BTreeMap::from([(1, Measure::delta_int(1)), (2, Measure::delta_int(2))])),
            1,
            Some(vec![Scalar::from_int(2), Scalar::from_int(4)]),
        ),
    ));

    out.push((
        "hankel_fail",
        problem(
            t.clone(),
            8,
            WeightSpec::ByDepth {
                modsq: BTreeMap::from([(2, Scalar::from_int(4))]),
                default: Some(one.clone()),
            },
            None,
            4,
            None,
        ),
    ));

    out.push((
        "star_leaves",
        problem(
            TreeTemplate::ExplicitFinite { parents: vec![None, Some(0), Some(0), Some(0)], labels: None },
            3,
            WeightSpec::Constant { value: one.clone() },
            None,
            2,
            None,
        ),
    ));

    out
}

/// Seeded random problems for corpus generation: small templates with a
/// random weight family and no measure data.
pub fn random_corpus(count: usize, seed: u64) -> Vec<(String, ProblemFile)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..count {
        let template = match rng.gen_range(0..3) {
            0 => TreeTemplate::RootedPath,
            1 => TreeTemplate::FreeKAry { k: rng.gen_range(1..=3) },
            _ => TreeTemplate::OneBranch {
                stem: rng.gen_range(0..=2),
                branches: rng.gen_range(2..=4),
            },
        };
        let weights = match rng.gen_range(0..3) {
            0 => WeightSpec::Constant {
                value: Scalar::ratio(rng.gen_range(1..=4), rng.gen_range(1..=4)),
            },
            1 => WeightSpec::Bergman,
            _ => WeightSpec::Geometric {
                ratio: Scalar::ratio(rng.gen_range(1..=3), rng.gen_range(1..=3)),
            },
        };
        let order = rng.gen_range(3..=6);
        out.push((format!("random_{i:03}"), problem(template, order + 2, weights, None, order, None)));
    }
    out
}
