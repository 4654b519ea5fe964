//! Human evaluation of topic quality: the offline rating form, rater
//! exports, pooled quality proportions and free-marginal kappa.

pub mod form;
pub mod kappa;
pub mod quality;
pub mod ratings;

pub use form::{
    build_payload, extract_payload, generate_form, load_ui_bundle, render_form, FormError,
    FormPayload, FormQuestion, FormTopic, GeneratedForm,
};
pub use kappa::{randolph_kappa, KappaError};
pub use quality::{
    aggregate_loaded, aggregate_ratings, GatingMode, KappaRow, QualityError, QualityReport,
    QualityRow,
};
pub use ratings::{
    load_bundles, validate_bundle, LoadedBundle, QuestionRatings, RatingBundle, RejectedBundle,
    TopicJudgment,
};
