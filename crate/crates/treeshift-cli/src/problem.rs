//! Problem-file schema and resolution into runnable objects.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use treeshift::consistency::SystemSpec;
use treeshift::tree::VertexId;
use treeshift::{Measure, MeasureSystem, Scalar, ShiftRegion, TreeRegion, TreeTemplate, WeightSpec};

pub const DEFAULT_ORDER: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-9;

/// One self-contained problem: a tree template, weights, and optional
/// measure data. Unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub template: TreeTemplate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub weights: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "optional_index_map"
    )]
    pub frontier_measures: Option<BTreeMap<usize, Measure>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_bound: Option<Scalar>,
    #[serde(default, skip_serializing_if = "ProblemOptions::is_empty")]
    pub options: ProblemOptions,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Scalar>>,
}

impl ProblemOptions {
    fn is_empty(&self) -> bool {
        self.order.is_none() && self.tol.is_none() && self.levels.is_none()
    }
}

/// `Option`-wrapping variant of the library's index-map helper.
mod optional_index_map {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S, V>(map: &Option<BTreeMap<usize, V>>, serializer: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        V: Serialize,
    {
        match map {
            Some(m) => {
                let by_string: BTreeMap<String, &V> =
                    m.iter().map(|(k, v)| (k.to_string(), v)).collect();
                serializer.serialize_some(&by_string)
            }
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D, V>(deserializer: D) -> Result<Option<BTreeMap<usize, V>>, D::Error>
    where
        D: Deserializer<'de>,
        V: Deserialize<'de>,
    {
        let by_string: Option<BTreeMap<String, V>> = Option::deserialize(deserializer)?;
        match by_string {
            None => Ok(None),
            Some(m) => m
                .into_iter()
                .map(|(k, v)| {
                    k.parse::<usize>()
                        .map(|k| (k, v))
                        .map_err(|_| D::Error::custom(format!("map key {k:?} is not a vertex index")))
                })
                .collect::<Result<BTreeMap<usize, V>, D::Error>>()
                .map(Some),
        }
    }
}

#[derive(Debug)]
pub enum ProblemError {
    /// Malformed JSON or schema mismatch; the message carries serde's
    /// line and column information.
    Parse(String),
    /// Structurally valid JSON that fails semantic validation.
    Validation(String),
}

impl std::fmt::Display for ProblemError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemError::Parse(m) => write!(f, "parse error: {m}"),
            ProblemError::Validation(m) => write!(f, "validation error: {m}"),
        }
    }
}

pub fn parse_problem(reader: impl Read) -> Result<ProblemFile, ProblemError> {
    serde_json::from_reader(reader).map_err(|e| ProblemError::Parse(e.to_string()))
}

/// Command-line overrides applied on top of the problem file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub order: Option<usize>,
    pub tol: Option<f64>,
    pub depth: Option<usize>,
    pub levels: Option<Vec<Scalar>>,
}

#[derive(Debug)]
pub struct ResolvedProblem {
    pub shift: ShiftRegion,
    pub system: Option<MeasureSystem>,
    pub frontier_measures: Option<BTreeMap<VertexId, Measure>>,
    pub support_bound: Option<Scalar>,
    pub order: usize,
    pub tol: f64,
    pub levels: Vec<Scalar>,
}

/// Materializes the region, builds the weight family, and re-keys the
/// measure data onto region vertices. The default depth is `order + 2`
/// so that order-N analysis never touches the frontier.
pub fn resolve(
    problem: &ProblemFile,
    overrides: &Overrides,
    vertex_cap: usize,
) -> Result<ResolvedProblem, ProblemError> {
    let order = overrides
        .order
        .or(problem.options.order)
        .unwrap_or(DEFAULT_ORDER);
    let tol = overrides.tol.or(problem.options.tol).unwrap_or(DEFAULT_TOL);
    let depth = overrides.depth.or(problem.depth).unwrap_or(order + 2);
    let levels = overrides
        .levels
        .clone()
        .or_else(|| problem.options.levels.clone())
        .unwrap_or_else(|| vec![Scalar::from_int(1), Scalar::from_int(2), Scalar::from_int(4), Scalar::from_int(8)]);

    let validation = |e: treeshift::Error| ProblemError::Validation(e.to_string());
    let region = TreeRegion::materialize_capped(problem.template.clone(), depth, vertex_cap)
        .map_err(validation)?;
    let weights = problem.weights.build(&region).map_err(validation)?;
    let shift = ShiftRegion::new(region, weights).map_err(validation)?;
    let system = problem
        .system
        .as_ref()
        .map(|spec| MeasureSystem::from_spec(shift.region(), spec))
        .transpose()
        .map_err(validation)?;
    let frontier_measures = problem.frontier_measures.as_ref().map(|m| {
        m.iter().map(|(&v, measure)| (VertexId(v), measure.clone())).collect()
    });
    Ok(ResolvedProblem {
        shift,
        system,
        frontier_measures,
        support_bound: problem.support_bound.clone(),
        order,
        tol,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_problem_gets_defaults() {
        let json = r#"{"template":{"kind":"path"},"weights":{"kind":"constant","value":1}}"#;
        let pf = parse_problem(json.as_bytes()).unwrap();
        let resolved = resolve(&pf, &Overrides::default(), 1_000_000).unwrap();
        assert_eq!(resolved.order, 8);
        assert_eq!(resolved.tol, 1e-9);
        assert_eq!(resolved.shift.region().depth(), 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"template":{"kind":"path"},"weights":{"kind":"bergman"},"bogus":1}"#;
        assert!(matches!(parse_problem(json.as_bytes()), Err(ProblemError::Parse(_))));
    }

    #[test]
    fn missing_weight_vertex_names_it() {
        let json = r#"{"template":{"kind":"path"},"depth":3,
            "weights":{"kind":"table","modsq":{"1":"1","2":"1"}}}"#;
        let pf = parse_problem(json.as_bytes()).unwrap();
        let err = resolve(&pf, &Overrides::default(), 1_000_000).unwrap_err();
        match err {
            ProblemError::Validation(m) => assert!(m.contains("vertex 3"), "{m}"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn rational_strings_parse_exactly() {
        let json = r#"{"template":{"kind":"path"},"depth":2,
            "weights":{"kind":"constant","value":"1/3"}}"#;
        let pf = parse_problem(json.as_bytes()).unwrap();
        let resolved = resolve(&pf, &Overrides::default(), 1_000_000).unwrap();
        assert_eq!(
            *resolved.shift.weights().modsq(VertexId(1)),
            Scalar::ratio(1, 3)
        );
    }
}
