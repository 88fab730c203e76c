//! Entropy-driven corpus subsampling.
//!
//! Given a large line- or JSONL-oriented text corpus, this crate selects a
//! small subset whose token-type distribution has high Shannon entropy, i.e.
//! a lexically diverse subset. Three non-random samplers are provided next
//! to a seeded random baseline:
//!
//! - [`samplers::sample_patient`]: a streaming add-only greedy method that
//!   commits the best of every `e` entropy-improving candidates,
//! - [`samplers::sample_impatient`]: a local search over add / remove /
//!   replace moves gated by an epsilon margin,
//! - [`gradient::sample_gradient`]: a global method that learns a relaxed
//!   per-sentence membership vector by gradient descent on negative entropy
//!   with an annealed binarization penalty, then rounds it.
//!
//! The [`harness`] module reproduces the full experimental protocol at desk
//! scale: a shared random BASE split, sampler campaigns, size-matched random
//! counterparts, and comparison tables. [`normalize`] masks noise spans
//! (numbers, URLs, tags, ...) behind placeholder tokens so they cannot
//! inflate measured diversity, and [`entropy`] maintains the selection
//! statistics that make every entropy-delta query O(distinct types of the
//! candidate).
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability; the `entropick` binary exposes the same operations as
//! subcommands.

pub mod corpus;
pub mod entropy;
pub mod gradient;
pub mod harness;
pub mod normalize;
pub mod samplers;
pub mod synth;

use std::path::PathBuf;

pub use entropy::LogBase;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed jsonl record at line {line}: {msg}")]
    Jsonl { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sentence index {0} out of bounds")]
    IndexOutOfBounds(usize),
    #[error("sentence {0} is already selected")]
    AlreadySelected(usize),
    #[error("sentence {0} is not selected")]
    NotSelected(usize),
    #[error("count underflow for type {0}: removal exceeds stored count")]
    CountUnderflow(u32),
    #[error("target of {target} tokens exceeds the corpus total of {available}")]
    TargetExceedsCorpus { target: u64, available: u64 },
    #[error("target of {target} tokens is below the base size of {base}")]
    TargetBelowBase { target: u64, base: u64 },
    #[error("target of {target} sentences is unreachable (base {base}, corpus {available})")]
    SentenceTargetUnreachable {
        target: usize,
        base: usize,
        available: usize,
    },
    #[error("split tolerance unreachable: achieved fraction {achieved:.4}, requested {requested:.4}")]
    SplitTolerance { achieved: f64, requested: f64 },
    #[error("degenerate relaxation: relaxed type masses vanished; adjust the initialisation or learning rate")]
    DegenerateRelaxation,
    #[error("degenerate similarity: all sentence rows are identical")]
    DegenerateSimilarity,
    #[error("rounding produced empty set")]
    EmptyRounding,
    #[error("invalid rule {name:?}: {source}")]
    Rule {
        name: String,
        #[source]
        source: regex::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
