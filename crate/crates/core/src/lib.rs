//! Evaluation battery for zero-resource speech representations.
//!
//! The crate scores model outputs against gold forced alignments:
//!
//! * [`abx`]: minimal-pair triphone ABX error rates over frame embeddings,
//!   with DTW-averaged frame dissimilarities from [`dissim`].
//! * [`tde`]: spoken term discovery scores of discovered fragment
//!   clusters (NED, coverage, grouping, type, token and boundary).
//! * [`bitrate`]: entropy bitrate of discrete unit streams.
//! * [`lmeval`]: contrastive accuracy (spot-the-word, acceptability) and
//!   semantic similarity correlation.
//! * [`synth`]: seeded toy corpora plus naive reference implementations
//!   used to cross-check the metrics.
//!
//! Results are collected in a [`report::MetricReport`]; [`cli`] wires
//! everything into the `zrc` binary.

pub mod abx;
pub mod bitrate;
pub mod cli;
pub mod corpus;
pub mod dissim;
pub mod error;
pub mod lmeval;
pub mod report;
pub mod synth;
pub mod tde;

pub use error::{Error, Result};

/// Runs `f` on a rayon pool with `jobs` worker threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
