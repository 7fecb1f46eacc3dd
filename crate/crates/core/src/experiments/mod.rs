//! Training loop, evaluation, gradient checking and ablation sweeps.

mod ablation;
mod config;
mod dd;
mod gradcheck;
mod record;
mod tasks;
mod train;

pub use ablation::{
    run_ablation, sweep_configs, write_ablation_csv, AblationAxis, AblationRow, ABLATION_CSV_HEADER, DEGREE_SWEEP,
};
pub use config::{OptimizerKind, Precision, Task, TrainConfig};
pub use gradcheck::{check_network, grad_check, relative_error, sample_trial, Fault, GradCheckConfig, GradCheckReport, TrialSpec};
pub use record::{EpochRow, RunRecord, RUN_CSV_HEADER};
pub use tasks::{run_approx, run_fractal, run_mnist, ApproxConfig, ApproxOutcome, FractalConfig, FractalOutcome, Outcome};
pub use train::{accuracy, argmax, evaluate, task_of, train, Evaluation};
