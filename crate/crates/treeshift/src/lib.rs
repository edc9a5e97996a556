//! Verification toolkit for weighted shift operators on rooted directed
//! trees: Stieltjes moment tests with exact Hankel certificates,
//! consistent systems of measures, backward extensions, truncation
//! studies, and a verdict engine that combines them.
//!
//! All core arithmetic runs on exact rationals whenever the inputs are
//! exact; floats only enter through explicitly floating inputs, phases,
//! and the few log-shaped integrals that have no rational value.
//!
//! ```
//! use std::collections::BTreeMap;
//! use treeshift::{
//!     classify, ClassifyOptions, Measure, Scalar, ShiftRegion, TreeRegion,
//!     TreeTemplate, Verdict, WeightFamily,
//! };
//!
//! // an isometric shift on a path, with the point mass at 1 supplied on
//! // the frontier, is certified subnormal on the region
//! let region = TreeRegion::materialize(TreeTemplate::RootedPath, 10)?;
//! let weights = WeightFamily::constant(&region, Scalar::one())?;
//! let shift = ShiftRegion::new(region, weights)?;
//! let frontier = BTreeMap::from([(treeshift::VertexId(10), Measure::delta_int(1))]);
//! let opts = ClassifyOptions { frontier_measures: Some(frontier), ..Default::default() };
//! let report = classify(&shift, &opts)?;
//! assert!(matches!(report.verdict, Verdict::Subnormal { .. }));
//! # Ok::<(), treeshift::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod classify;
pub mod consistency;
pub mod error;
pub mod jsonmap;
pub mod measure;
pub mod moments;
pub mod scalar;
pub mod shift;
pub mod tree;
pub mod truncate;

pub use classify::{classify, render_report, Classification, ClassifyOptions, ReportFormat, Verdict};
pub use consistency::{
    build_parent, condition_value, moments_match, nonzero_weight_specialization_check, propagate,
    verify_system, ConsistencyReport, MeasureSystem, SystemSpec,
};
pub use error::{Error, Result};
pub use measure::{measures_equal, Atom, BoxComponent, Measure};
pub use moments::{
    carleman_terms, divergence_certificate, hankel_check, hankel_matrix, is_stieltjes_prefix,
    theta_lower_bound, HankelVerdict, MomentPrefix,
};
pub use scalar::{ExtReal, PolarScalar, Scalar};
pub use shift::{ShiftRegion, WeightFamily, WeightSpec};
pub use tree::{LeafStatus, TreeRegion, TreeTemplate, VertexId};
pub use truncate::{
    convergence_report, truncate_triplet, truncated_lambda_path, verify_truncated, ConvergenceTable,
    TruncatedTriplet,
};
