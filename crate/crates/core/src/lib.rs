//! Design of hybrid renewable energy systems for electric-vehicle charging stations: demand
//! modelling, resource synthesis, annual dispatch, multicriteria ranking and lab-scale
//! verification.

// `!(x > 0.0)` rejects NaN as well as non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod demand;
pub mod dispatch;
pub mod error;
pub mod mcdm;
pub mod pipeline;
pub mod predesign;
pub mod resources;
pub mod scenario;
pub mod verify;

pub use criteria::{CriteriaScores, EmissivityTable, ReliabilityTable};
pub use demand::{DemandCurve, EvClass, EvClassId, TrafficProfile};
pub use dispatch::{BatteryParams, Configuration, DispatchRules, EconParams, EnergyLedger, StepRecord};
pub use error::{Error, Result};
pub use mcdm::{RankedDesign, WeightVector};
pub use pipeline::{Design, Pipeline, Provenance};
pub use predesign::{CandidateSet, ComponentMenu, DiscardReason};
pub use resources::{GenerationProfile, PowerCurve, SolarResource, WindResource};
pub use scenario::{LoadedScenario, Overrides, Scenario};
pub use verify::{ScaledScenario, Verdict, VerificationLimits, VerificationReport};
