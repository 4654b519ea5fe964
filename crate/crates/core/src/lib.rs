//! Tooling for studying how Python packages link to their source
//! repositories and donation pages, and why maintainers leave links out.
//!
//! The crate covers three stages:
//!
//! * [`harvest`] crawls the registry (or replays a recording), classifies
//!   declared links, expands `FUNDING.yml`, checks liveness, ranks packages
//!   by dependency PageRank and summarizes the ecosystem.
//! * [`responses`] and [`topics`] clean free-text survey answers and run
//!   batched LLM topic extraction with a merge step, archiving every run.
//!   [`robustness`] compares topic sets across runs.
//! * [`evaluation`] renders an offline rating form for one run and turns
//!   the raters' exports into quality proportions and free-marginal kappa.
//!
//! [`cli`] wires the stages to the `linkstudy` binary. Runnable examples:
//!
//! | example | shows |
//! |---|---|
//! | `classify_links` | link categories, platforms, `FUNDING.yml` expansion |
//! | `ecosystem_replay` | harvest, audit, rank and report from the bundled recording |
//! | `pagerank` | dependency graph from requirement strings |
//! | `clean_responses` | placeholder normalization and per-question statistics |
//! | `topic_pipeline` | extraction and merge, offline or against a server |
//! | `robustness` | Jaccard and best-match cosine across runs |
//! | `evaluation` | form generation and the quality report |
//! | `kappa` | Randolph's kappa on small tables |

pub mod cli;
pub mod config;
pub mod evaluation;
pub mod harvest;
pub mod jsonl;
pub(crate) mod parallel;
pub mod responses;
pub mod robustness;
pub mod topics;
pub mod transport;
