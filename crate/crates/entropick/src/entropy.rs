//! Incremental Shannon entropy over token-type frequencies.
//!
//! The identity `H = log C - (sum_i c_i log c_i) / C` with `C = sum_i c_i`
//! is the computation core. Keeping `S = sum_i c_i log c_i` cached makes
//! every entropy-delta query cost O(distinct types of the candidate),
//! which is what lets the samplers evaluate millions of candidates.
//!
//! Concurrency contract: `delta_*` queries are read-only and may run
//! concurrently against a frozen state; `apply_*` require exclusive access
//! (one writer, readers quiesced — enforced here by Rust borrows).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::{Error, Result};

/// Logarithm base used for reported entropies. Internal accumulation is
/// always in nats; conversion happens at the query boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}

impl LogBase {
    #[inline]
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Natural => nats,
            LogBase::Base2 => nats / std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Natural => "natural",
            LogBase::Base2 => "base2",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" | "e" | "nat" => Ok(LogBase::Natural),
            "base2" | "2" | "bits" => Ok(LogBase::Base2),
            other => Err(Error::Config(format!("unknown log base {other:?}"))),
        }
    }
}

/// `c log c` with the `0 log 0 = 0` limit convention.
#[inline]
fn clogc(c: u64) -> f64 {
    if c == 0 {
        0.0
    } else {
        let c = c as f64;
        c * c.ln()
    }
}

/// Entropy in nats from the cached aggregates. A table with at most one
/// distinct type (or no mass) has entropy exactly 0 by definition, which
/// also keeps strict improvement tests free of floating-point noise.
#[inline]
fn entropy_nats(distinct: usize, total: u64, weighted_log_sum: f64) -> f64 {
    if distinct <= 1 || total == 0 {
        0.0
    } else {
        (total as f64).ln() - weighted_log_sum / total as f64
    }
}

/// Cache-refresh cadence: recompute the weighted log sum from counts every
/// this many mutations to bound floating-point drift on long runs.
const RECOMPUTE_EVERY: u64 = 1 << 20;

/// Exported statistics of a frequency table, JSON-serializable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TableStats {
    pub n_selected: usize,
    pub token_total: u64,
    pub v_selected: usize,
    pub entropy: f64,
    pub log_base: LogBase,
}

/// Sparse type-count table with cached aggregates for O(delta) entropy.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    counts: BTreeMap<u32, u64>,
    total: u64,
    /// `sum_i c_i ln c_i`, kept in nats.
    weighted_log_sum: f64,
    log_base: LogBase,
    mutations: u64,
}

impl FrequencyTable {
    pub fn new(log_base: LogBase) -> Self {
        FrequencyTable {
            counts: BTreeMap::new(),
            total: 0,
            weighted_log_sum: 0.0,
            log_base,
            mutations: 0,
        }
    }

    pub fn from_sentences<'a>(
        sentences: impl IntoIterator<Item = &'a Sentence>,
        log_base: LogBase,
    ) -> Self {
        let mut t = FrequencyTable::new(log_base);
        for s in sentences {
            t.add_counts(s.counts());
        }
        t
    }

    pub fn log_base(&self) -> LogBase {
        self.log_base
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct types currently present.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, ty: u32) -> u64 {
        self.counts.get(&ty).copied().unwrap_or(0)
    }

    /// Entropy in the configured log base. Empty and single-type tables
    /// report exactly 0.
    pub fn entropy(&self) -> f64 {
        self.log_base
            .from_nats(entropy_nats(self.counts.len(), self.total, self.weighted_log_sum))
    }

    fn entropy_nats_now(&self) -> f64 {
        entropy_nats(self.counts.len(), self.total, self.weighted_log_sum)
    }

    /// Entropy change (configured base) from adding the given counts,
    /// without mutating the table.
    pub fn delta_add(&self, counts: &[(u32, u32)]) -> f64 {
        let mut d_s = 0.0;
        let mut d_total = 0u64;
        let mut d_distinct = 0usize;
        for &(ty, k) in counts {
            let c = self.count(ty);
            if c == 0 {
                d_distinct += 1;
            }
            d_s += clogc(c + u64::from(k)) - clogc(c);
            d_total += u64::from(k);
        }
        let new = entropy_nats(
            self.counts.len() + d_distinct,
            self.total + d_total,
            self.weighted_log_sum + d_s,
        );
        self.log_base.from_nats(new - self.entropy_nats_now())
    }

    /// Entropy change from removing the given counts. Errors if any count
    /// would go negative, which signals a caller logic bug.
    pub fn delta_remove(&self, counts: &[(u32, u32)]) -> Result<f64> {
        let mut d_s = 0.0;
        let mut d_total = 0u64;
        let mut d_distinct = 0usize;
        for &(ty, k) in counts {
            let c = self.count(ty);
            let k = u64::from(k);
            if c < k {
                return Err(Error::CountUnderflow(ty));
            }
            if c == k {
                d_distinct += 1;
            }
            d_s += clogc(c - k) - clogc(c);
            d_total += k;
        }
        let new = entropy_nats(
            self.counts.len() - d_distinct,
            self.total - d_total,
            self.weighted_log_sum + d_s,
        );
        Ok(self.log_base.from_nats(new - self.entropy_nats_now()))
    }

    /// Entropy change from removing `out` then adding `in`, composed over
    /// the net per-type count movement. Replacing a sentence with itself
    /// yields exactly 0.
    pub fn delta_replace(&self, out: &[(u32, u32)], inc: &[(u32, u32)]) -> Result<f64> {
        let mut net = BTreeMap::<u32, i64>::new();
        for &(ty, k) in out {
            *net.entry(ty).or_insert(0) -= i64::from(k);
        }
        for &(ty, k) in inc {
            *net.entry(ty).or_insert(0) += i64::from(k);
        }
        let mut d_s = 0.0;
        let mut total = self.total as i64;
        let mut distinct = self.counts.len() as i64;
        for (&ty, &dk) in &net {
            let c = self.count(ty) as i64;
            let c_new = c + dk;
            if c_new < 0 {
                return Err(Error::CountUnderflow(ty));
            }
            if c == 0 && c_new > 0 {
                distinct += 1;
            } else if c > 0 && c_new == 0 {
                distinct -= 1;
            }
            d_s += clogc(c_new as u64) - clogc(c as u64);
            total += dk;
        }
        let new = entropy_nats(distinct as usize, total as u64, self.weighted_log_sum + d_s);
        Ok(self.log_base.from_nats(new - self.entropy_nats_now()))
    }

    pub fn add_counts(&mut self, counts: &[(u32, u32)]) {
        for &(ty, k) in counts {
            let e = self.counts.entry(ty).or_insert(0);
            let old = *e;
            *e = old + u64::from(k);
            self.weighted_log_sum += clogc(old + u64::from(k)) - clogc(old);
            self.total += u64::from(k);
        }
        self.bump();
    }

    pub fn remove_counts(&mut self, counts: &[(u32, u32)]) -> Result<()> {
        // validate first so a failure leaves the table untouched
        for &(ty, k) in counts {
            if self.count(ty) < u64::from(k) {
                return Err(Error::CountUnderflow(ty));
            }
        }
        for &(ty, k) in counts {
            let k = u64::from(k);
            let old = self.counts.get_mut(&ty).expect("validated above");
            let new = *old - k;
            self.weighted_log_sum += clogc(new) - clogc(*old);
            self.total -= k;
            if new == 0 {
                self.counts.remove(&ty);
            } else {
                *old = new;
            }
        }
        self.bump();
        Ok(())
    }

    fn bump(&mut self) {
        self.mutations += 1;
        if self.mutations % RECOMPUTE_EVERY == 0 {
            self.recompute();
        }
    }

    /// Rebuilds the cached weighted log sum from the counts. BTreeMap
    /// iteration order is fixed, so the result is deterministic.
    pub fn recompute(&mut self) {
        self.weighted_log_sum = self.counts.values().map(|&c| clogc(c)).sum();
    }

    /// Consistency check used by tests: total vs summed counts and cached
    /// weighted log sum vs a from-scratch recomputation (1e-9 relative).
    pub fn check_consistency(&self) -> bool {
        let total: u64 = self.counts.values().sum();
        if total != self.total {
            return false;
        }
        let fresh: f64 = self.counts.values().map(|&c| clogc(c)).sum();
        let scale = fresh.abs().max(1.0);
        (fresh - self.weighted_log_sum).abs() <= 1e-9 * scale
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts.iter().map(|(&t, &c)| (t, c))
    }
}

/// Which sentences of a corpus are currently selected, plus the frequency
/// table over the selection.
#[derive(Debug, Clone)]
pub struct SelectionState {
    /// Position of each id in `selected_ids`; `u32::MAX` when unselected.
    id_pos: Vec<u32>,
    /// Selected ids in insertion order (swap-removed on deletion).
    selected_ids: Vec<u32>,
    table: FrequencyTable,
    token_total: u64,
}

const UNSELECTED: u32 = u32::MAX;

impl SelectionState {
    pub fn new(n: usize, log_base: LogBase) -> Self {
        SelectionState {
            id_pos: vec![UNSELECTED; n],
            selected_ids: Vec::new(),
            table: FrequencyTable::new(log_base),
            token_total: 0,
        }
    }

    /// Builds a selection over `corpus` pre-populated with `base`.
    pub fn with_base(corpus: &Corpus, base: &[usize], log_base: LogBase) -> Result<Self> {
        let mut st = SelectionState::new(corpus.n(), log_base);
        for &id in base {
            if id >= corpus.n() {
                return Err(Error::IndexOutOfBounds(id));
            }
            st.apply_add(corpus.sentence(id))?;
        }
        Ok(st)
    }

    pub fn n_selected(&self) -> usize {
        self.selected_ids.len()
    }

    pub fn token_total(&self) -> u64 {
        self.token_total
    }

    pub fn is_selected(&self, id: usize) -> bool {
        self.id_pos[id] != UNSELECTED
    }

    pub fn entropy(&self) -> f64 {
        self.table.entropy()
    }

    pub fn table(&self) -> &FrequencyTable {
        &self.table
    }

    /// The id stored at a position of the internal selected list; used for
    /// seeded uniform draws over the selection.
    pub fn selected_at(&self, pos: usize) -> usize {
        self.selected_ids[pos] as usize
    }

    /// Selected ids in ascending order.
    pub fn selected_sorted(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.selected_ids.iter().map(|&i| i as usize).collect();
        v.sort_unstable();
        v
    }

    pub fn delta_add(&self, s: &Sentence) -> f64 {
        self.table.delta_add(s.counts())
    }

    pub fn delta_remove(&self, s: &Sentence) -> Result<f64> {
        if !self.is_selected(s.id()) {
            return Err(Error::NotSelected(s.id()));
        }
        self.table.delta_remove(s.counts())
    }

    /// Delta of removing `out` and adding `inc`, as one exact composition.
    pub fn delta_replace(&self, out: &Sentence, inc: &Sentence) -> Result<f64> {
        if !self.is_selected(out.id()) {
            return Err(Error::NotSelected(out.id()));
        }
        self.table.delta_replace(out.counts(), inc.counts())
    }

    pub fn apply_add(&mut self, s: &Sentence) -> Result<()> {
        if self.is_selected(s.id()) {
            return Err(Error::AlreadySelected(s.id()));
        }
        self.id_pos[s.id()] = self.selected_ids.len() as u32;
        self.selected_ids.push(s.id() as u32);
        self.table.add_counts(s.counts());
        self.token_total += s.len() as u64;
        Ok(())
    }

    pub fn apply_remove(&mut self, s: &Sentence) -> Result<()> {
        if !self.is_selected(s.id()) {
            return Err(Error::NotSelected(s.id()));
        }
        self.table.remove_counts(s.counts())?;
        let pos = self.id_pos[s.id()] as usize;
        let last = *self.selected_ids.last().expect("nonempty when selected");
        self.selected_ids.swap_remove(pos);
        if pos < self.selected_ids.len() {
            self.id_pos[last as usize] = pos as u32;
        }
        self.id_pos[s.id()] = UNSELECTED;
        self.token_total -= s.len() as u64;
        Ok(())
    }

    pub fn stats(&self) -> TableStats {
        TableStats {
            n_selected: self.n_selected(),
            token_total: self.token_total,
            v_selected: self.table.distinct(),
            entropy: self.table.entropy(),
            log_base: self.table.log_base(),
        }
    }
}

/// Entropy of the part of `selected` outside `base` (the appended
/// EXTENSION part), or `None` when that part is empty.
pub fn extension_entropy(
    corpus: &Corpus,
    selected: &[usize],
    base: &[usize],
    log_base: LogBase,
) -> Option<f64> {
    let in_base: std::collections::HashSet<usize> = base.iter().copied().collect();
    let ext: Vec<usize> = selected
        .iter()
        .copied()
        .filter(|id| !in_base.contains(id))
        .collect();
    if ext.is_empty() {
        return None;
    }
    let table = FrequencyTable::from_sentences(ext.iter().map(|&i| corpus.sentence(i)), log_base);
    Some(table.entropy())
}
