//! Meta-learning of the hidden-layer size of Extreme Learning Machine
//! regressors.
//!
//! The pipeline: load and admit regression datasets ([`dataset`]), describe
//! each by 16 meta-features ([`meta_features`]), find its best hidden-neuron
//! count by an exhaustive ELM sweep ([`elm`], [`label_search`]), join both
//! into a meta-base ([`metabase`]), then fit and evaluate regressors that
//! predict the neuron count from the meta-features ([`meta_learners`],
//! [`evaluation`]).

pub mod dataset;
pub mod elm;
pub mod evaluation;
pub mod error;
pub mod label_search;
pub mod linalg;
pub mod meta_features;
pub mod meta_learners;
pub mod metabase;
pub mod seed;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
