//! Simulation and estimation laboratory for analyses of change between two
//! waves: change scores, baseline adjustment (ANCOVA), and parametric
//! g-computation, evaluated against a linear structural causal model with
//! known ground truth.

pub mod dgp;
pub mod did;
pub mod error;
pub mod estimators;
pub mod figure;
pub mod harness;
pub mod ols;
pub mod rtm;
pub mod scm;
pub mod svg;
pub mod table;

pub use dgp::{build_paper_scm, build_randomized_scm, ground_truth, GroundTruth, PaperCoefficients};
pub use error::{LabError, Result};
pub use estimators::{Approach, ApproachRegistry, EstimateSet, EstimationContext};
pub use harness::{run_replications, summarize, McConfig, SummaryTable};
pub use scm::{simulate, simulate_intervention, to_natural_units, validate_scm, Dataset, Scm, ScmSpec, Units};
