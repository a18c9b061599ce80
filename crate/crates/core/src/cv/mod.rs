//! Cross-validation: fold plans, native learners and the end-to-end
//! prediction pipeline.

mod learners;
mod pipeline;
mod plan;

pub use learners::{
    Classifier, KnnLearner, Learner, LearnerRegistry, LogisticLearner, NaiveBayesLearner, TreeLearner,
};
pub use pipeline::{run_pipeline, FoldData, PipelineOutput};
pub use plan::{balanced_bag, make_fold_plan, stratified_folds, BagSample, FoldPlan, NestedFold, OuterFold};
