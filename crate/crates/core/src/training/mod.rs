//! Loss, optimizer, schedule and the training loop.

mod config;
mod gradcheck;
mod loss;
mod optim;
mod trainer;

pub use config::{RunConfig, TrainConfig};
pub use gradcheck::{gradcheck, gradcheck_sentence, GRADCHECK_EPSILON, GRADCHECK_TOLERANCE};
pub use loss::{
    adaptive_threshold_loss, essential_gold, sentence_loss, total_loss, whole_gold, CellGold,
    SentenceLoss,
};
pub use optim::{Adam, WarmRestarts};
pub use trainer::{
    alpha_sweep, history_jsonl, read_history, split_dev, sweep_table, train, train_model,
    write_history, EpochRecord, SweepRow, TrainOutcome,
};
