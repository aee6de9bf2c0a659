//! Architecture search for stacked LSTM forecasters.
//!
//! Candidate architectures are encoded as fixed-length integer genotypes
//! ([`encoding`]), scored without training by the MAE random sampling
//! fitness ([`mrs`]), and searched with a random-forest Bayesian optimizer
//! ([`bo`], [`surrogate`]). The winning architecture is then trained with
//! Adam and backpropagation through time ([`trainer`]).

pub mod bo;
pub mod data;
pub mod encoding;
pub mod mrs;
pub mod network;
pub mod seed;
pub mod stats;
pub mod surrogate;
pub mod trainer;

pub use bo::{BoConfig, BoResult, Strategy, WarmStart};
pub use data::{SupervisedSet, TimeSeries};
pub use encoding::{Architecture, Genotype, Scheme, SearchSpace};
pub use mrs::{MrsResult, OutputActivation};
pub use network::WeightSet;
pub use surrogate::{ForestConfig, ForestModel};
pub use trainer::{TrainConfig, TrainReport};
