//! Linear direct forecaster, its trainer and a finite-difference gradient checker.

mod adam;
mod checkpoint;
mod gradcheck;
mod model;
mod train;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use gradcheck::{batch_kink_distance, grad_check, kink_free_batch, GradCheckOptions, GradCheckReport, KINK_MARGIN};
pub use model::{LinearForecaster, LinearHead};
pub use train::{batch_objective, evaluate, loss_and_grad, train, EpochRecord, Metrics, TrainConfig, TrainReport};

#[cfg(test)]
mod tests;
