//! Evaluation harness for vision-language judge models.
//!
//! Measures how strongly a pairwise judge favors the more informative
//! candidate answer over the image-grounded correct one, and implements
//! anchored judging (`birch`) plus the reference baselines that mitigate it.
//!
//! Modules follow the data path:
//!
//! - [`corpus`] loads pairwise preference benchmarks, applies label
//!   corrections, and builds the subset partitions the bias metrics consume.
//! - [`chat`] holds the chat-completion request/response types shared by
//!   every backend.
//! - [`backend`] provides uniform access to model endpoints: a remote HTTP
//!   backend with retries and rate limiting, a deterministic simulated judge,
//!   a recorded-fixture backend for replay, and a content-addressed response
//!   cache.
//! - [`protocol`] renders the judging prompts and parses model outputs into
//!   verdicts, anchors, and scores.
//! - [`pipelines`] executes the judging strategies and annotation procedures
//!   over a collection, concurrently and reproducibly.
//! - [`metrics`] computes accuracy, image-reliance, informativeness and
//!   length bias, resampled statistics, ratio curves, and agreement.
//! - [`runner`] ties everything into configured, self-describing run
//!   directories with CSV/JSON reports and case dossiers.

pub mod backend;
pub mod chat;
pub mod corpus;
pub mod metrics;
pub mod pipelines;
pub mod protocol;
pub mod runner;
