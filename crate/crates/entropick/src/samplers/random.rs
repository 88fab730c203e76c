//! Random baseline: uniformly draw sentences from the extension, without
//! replacement, until a token (or sentence) budget is met.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::entropy::{extension_entropy, LogBase, SelectionState};
use crate::samplers::SamplerResult;
use crate::{Error, Result};

/// Stopping target for random sampling. `Ratio(q)` with `q` in (0, 1] is
/// translated to `q * tokens(FULL)` rounded to the nearest token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomTarget {
    Tokens(u64),
    Ratio(f64),
    Sentences(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomConfig {
    pub target: RandomTarget,
    pub seed: u64,
    #[serde(default)]
    pub log_base: LogBase,
}

/// Starts from `base` and adds seeded-uniform extension sentences until the
/// target is reached. Deterministic per seed.
pub fn sample_random(full: &Corpus, base: &[usize], cfg: &RandomConfig) -> Result<SamplerResult> {
    let start = Instant::now();
    let base_tokens = full.tokens_of(base);
    let mut state = SelectionState::with_base(full, base, cfg.log_base)?;

    enum Stop {
        Tokens(u64),
        Sentences(usize),
    }
    let stop = match cfg.target {
        RandomTarget::Tokens(t) => {
            if t > full.token_total() {
                return Err(Error::TargetExceedsCorpus {
                    target: t,
                    available: full.token_total(),
                });
            }
            if t < base_tokens {
                return Err(Error::TargetBelowBase {
                    target: t,
                    base: base_tokens,
                });
            }
            Stop::Tokens(t)
        }
        RandomTarget::Ratio(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Config(format!("ratio q must be in (0, 1], got {q}")));
            }
            let t = (q * full.token_total() as f64).round() as u64;
            if t < base_tokens {
                return Err(Error::TargetBelowBase {
                    target: t,
                    base: base_tokens,
                });
            }
            Stop::Tokens(t)
        }
        RandomTarget::Sentences(k) => {
            if k > full.n() || k < base.len() {
                return Err(Error::SentenceTargetUnreachable {
                    target: k,
                    base: base.len(),
                    available: full.n(),
                });
            }
            Stop::Sentences(k)
        }
    };

    let mut extension: Vec<usize> = (0..full.n()).filter(|id| !state.is_selected(*id)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    extension.shuffle(&mut rng);

    let mut draws = 0u64;
    let mut queue = extension.into_iter();
    loop {
        let done = match stop {
            Stop::Tokens(t) => state.token_total() >= t,
            Stop::Sentences(k) => state.n_selected() >= k,
        };
        if done {
            break;
        }
        match queue.next() {
            Some(id) => {
                state.apply_add(full.sentence(id))?;
                draws += 1;
            }
            None => break, // target == full corpus; everything added
        }
    }

    let selected = state.selected_sorted();
    let entropy_extension = extension_entropy(full, &selected, base, cfg.log_base);
    Ok(SamplerResult {
        n_selected: selected.len(),
        token_total: state.token_total(),
        entropy: state.entropy(),
        entropy_extension,
        selected,
        steps: draws,
        wall_s: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        log_base: cfg.log_base,
    })
}
