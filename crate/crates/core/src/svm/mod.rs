//! RBF-kernel support vector classification with Platt calibration.

mod grid;
mod kernel;
mod model;
mod platt;
mod smo;
mod train;

pub use grid::{abstract_folds, grid_search, train_with_grid, GridCell, GridOptions, GridOutcome, GridSpec};
pub use kernel::{rbf, KernelCache, KernelParams, SqDistMatrix};
pub use model::{FeatureSpace, SvmModel, TrainingSet, MODEL_FORMAT_VERSION};
pub use platt::{platt_fit, platt_gradient, platt_objective, platt_targets, Platt};
pub use smo::{train_smo, RawSvm, SmoOptions, SmoSolution};
pub use train::train_model;
