//! Corpus ingestion: tokenize line- or JSONL-oriented text into sentences
//! carrying sparse per-type count vectors, under a corpus-wide vocabulary.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// On-disk corpus format: plain lines, or JSONL with a `"text"` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Lines,
    Jsonl,
}

/// How a record is split into tokens.
///
/// `Whitespace` splits on any Unicode whitespace run. `Pretokenized` treats
/// the record as already space-separated tokens and keeps them verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenizer {
    Whitespace,
    Pretokenized,
}

impl Tokenizer {
    pub fn tokenize(self, text: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
            Tokenizer::Pretokenized => text
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect(),
        }
    }
}

/// One record of the corpus: a token sequence plus its sparse count vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    id: usize,
    tokens: Vec<String>,
    /// Sparse `(type id, occurrences)` pairs, ascending by type id.
    counts: Vec<(u32, u32)>,
    length: u32,
}

impl Sentence {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Sparse count vector, sorted by type id.
    pub fn counts(&self) -> &[(u32, u32)] {
        &self.counts
    }

    /// Total token count (sum of the count vector).
    pub fn len(&self) -> usize {
        self.length as usize
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    /// Number of distinct types in the sentence.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Dense bijection between type strings and ids in `[0, v)`.
///
/// Ids are assigned in first-occurrence order, which makes loading
/// deterministic for identical input bytes.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    by_type: HashMap<String, u32>,
    types: Vec<String>,
}

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.types.len()
    }

    pub fn id(&self, ty: &str) -> Option<u32> {
        self.by_type.get(ty).copied()
    }

    pub fn type_str(&self, id: u32) -> Option<&str> {
        self.types.get(id as usize).map(String::as_str)
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    fn intern(&mut self, ty: &str) -> u32 {
        if let Some(&id) = self.by_type.get(ty) {
            return id;
        }
        let id = self.types.len() as u32;
        self.types.push(ty.to_owned());
        self.by_type.insert(ty.to_owned(), id);
        id
    }
}

/// Ingestion counts reported by [`Corpus::load`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub records_read: usize,
    pub records_skipped: usize,
}

/// An ordered collection of sentences with a shared vocabulary.
///
/// Immutable after construction; safe for concurrent reads.
#[derive(Debug, Clone)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    vocabulary: Vocabulary,
    token_total: u64,
}

impl Corpus {
    /// Builds a corpus from already-tokenized rows. Empty rows are skipped;
    /// the number skipped is returned alongside.
    pub fn from_token_rows(rows: impl IntoIterator<Item = Vec<String>>) -> (Self, usize) {
        let mut vocabulary = Vocabulary::default();
        let mut sentences = Vec::new();
        let mut token_total = 0u64;
        let mut skipped = 0usize;
        for tokens in rows {
            if tokens.is_empty() {
                skipped += 1;
                continue;
            }
            let mut counts = std::collections::BTreeMap::<u32, u32>::new();
            for tok in &tokens {
                *counts.entry(vocabulary.intern(tok)).or_insert(0) += 1;
            }
            let length = tokens.len() as u32;
            token_total += u64::from(length);
            sentences.push(Sentence {
                id: sentences.len(),
                counts: counts.into_iter().collect(),
                tokens,
                length,
            });
        }
        (
            Corpus {
                sentences,
                vocabulary,
                token_total,
            },
            skipped,
        )
    }

    /// Builds a corpus from raw record texts.
    pub fn from_texts<S: AsRef<str>>(
        texts: impl IntoIterator<Item = S>,
        tokenizer: Tokenizer,
    ) -> (Self, usize) {
        Self::from_token_rows(texts.into_iter().map(|t| tokenizer.tokenize(t.as_ref())))
    }

    /// Loads a corpus from disk. Records that tokenize to nothing are
    /// skipped and counted in the returned [`LoadStats`].
    pub fn load(path: &Path, format: CorpusFormat, tokenizer: Tokenizer) -> Result<(Self, LoadStats)> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut rows = Vec::new();
        let mut records_read = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            records_read += 1;
            let text = match format {
                CorpusFormat::Lines => line,
                CorpusFormat::Jsonl => {
                    let rec: JsonRecord =
                        serde_json::from_str(&line).map_err(|e| Error::Jsonl {
                            line: idx + 1,
                            msg: e.to_string(),
                        })?;
                    rec.text
                }
            };
            rows.push(tokenizer.tokenize(&text));
        }
        let (corpus, skipped) = Self::from_token_rows(rows);
        Ok((
            corpus,
            LoadStats {
                records_read,
                records_skipped: skipped,
            },
        ))
    }

    /// Number of sentences (`n`).
    pub fn n(&self) -> usize {
        self.sentences.len()
    }

    /// Vocabulary size (`v`).
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.size()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn sentence(&self, id: usize) -> &Sentence {
        &self.sentences[id]
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Total token count over all sentences.
    pub fn token_total(&self) -> u64 {
        self.token_total
    }

    /// Token count over a set of sentence ids.
    pub fn tokens_of(&self, ids: &[usize]) -> u64 {
        ids.iter().map(|&i| self.sentences[i].len() as u64).sum()
    }

    /// Returns a seeded random permutation of the corpus. Ids are reassigned
    /// to the new order; the vocabulary is unchanged.
    pub fn shuffled(&self, seed: u64) -> Corpus {
        let mut order: Vec<usize> = (0..self.n()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let sentences = order
            .into_iter()
            .enumerate()
            .map(|(new_id, old_id)| Sentence {
                id: new_id,
                ..self.sentences[old_id].clone()
            })
            .collect();
        Corpus {
            sentences,
            vocabulary: self.vocabulary.clone(),
            token_total: self.token_total,
        }
    }

    /// Writes the given sentences in corpus (id) order, one record each.
    /// Reloading the file yields token-identical sentences.
    pub fn write_selection(
        &self,
        selected: &[usize],
        path: &Path,
        format: CorpusFormat,
    ) -> Result<()> {
        let mut ids: Vec<usize> = selected.to_vec();
        ids.sort_unstable();
        for &id in &ids {
            if id >= self.n() {
                return Err(Error::IndexOutOfBounds(id));
            }
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for &id in &ids {
            let s = &self.sentences[id];
            match format {
                CorpusFormat::Lines => writeln!(w, "{}", s.text()),
                CorpusFormat::Jsonl => {
                    let rec = serde_json::json!({ "id": id, "text": s.text() });
                    writeln!(w, "{rec}")
                }
            }
            .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// SHA-256 over the canonical serialization (vocabulary order plus token
    /// sequences). Equal digests mean bit-identical corpora.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for ty in &self.vocabulary.types {
            h.update(ty.as_bytes());
            h.update([0x1f]);
        }
        h.update([0x1e]);
        for s in &self.sentences {
            for t in &s.tokens {
                h.update(t.as_bytes());
                h.update([0x1f]);
            }
            h.update([0x1e]);
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn lines_corpus(lines: &[&str]) -> (Corpus, usize) {
        Corpus::from_texts(lines.iter().copied(), Tokenizer::Whitespace)
    }

    #[test]
    fn load_two_lines() {
        let (c, skipped) = lines_corpus(&["a b", "b c"]);
        assert_eq!(c.n(), 2);
        assert_eq!(c.vocab_size(), 3);
        assert_eq!(skipped, 0);
        assert_eq!(c.token_total(), 4);
    }

    #[test]
    fn empty_records_skipped_with_count() {
        let (c, skipped) = lines_corpus(&["a b", "", "b c"]);
        assert_eq!(c.n(), 2);
        assert_eq!(skipped, 1);
        // ids stay dense in order
        assert_eq!(c.sentence(1).text(), "b c");
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let (c, _) = lines_corpus(&["b a", "a c"]);
        assert_eq!(c.vocabulary().id("b"), Some(0));
        assert_eq!(c.vocabulary().id("a"), Some(1));
        assert_eq!(c.vocabulary().id("c"), Some(2));
        assert_eq!(c.vocabulary().type_str(2), Some("c"));
    }

    #[test]
    fn load_is_deterministic() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for i in 0..10_000 {
            writeln!(f, "w{} w{} shared", i % 977, (i * 7) % 313).unwrap();
        }
        f.flush().unwrap();
        let (a, _) = Corpus::load(f.path(), CorpusFormat::Lines, Tokenizer::Whitespace).unwrap();
        let (b, _) = Corpus::load(f.path(), CorpusFormat::Lines, Tokenizer::Whitespace).unwrap();
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn jsonl_reports_line_number_on_malformed_record() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{{\"text\": \"a b\"}}").unwrap();
        writeln!(f, "not json").unwrap();
        f.flush().unwrap();
        let err = Corpus::load(f.path(), CorpusFormat::Jsonl, Tokenizer::Whitespace).unwrap_err();
        match err {
            Error::Jsonl { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn shuffle_singleton_is_identity() {
        let (c, _) = lines_corpus(&["a b"]);
        for seed in [0u64, 1, 99] {
            let s = c.shuffled(seed);
            assert_eq!(s.digest(), c.digest());
        }
    }

    #[test]
    fn shuffle_same_seed_same_order() {
        let (c, _) = lines_corpus(&["a", "b", "c", "d", "e"]);
        assert_eq!(c.shuffled(7).digest(), c.shuffled(7).digest());
    }

    #[test]
    fn shuffle_preserves_multiset_and_vocabulary() {
        let (c, _) = lines_corpus(&["a x", "b y", "c", "d z", "e"]);
        let s1 = c.shuffled(1);
        let s2 = c.shuffled(2);
        assert_ne!(s1.digest(), s2.digest());
        let mut t1: Vec<String> = s1.sentences().iter().map(|s| s.text()).collect();
        let mut t2: Vec<String> = s2.sentences().iter().map(|s| s.text()).collect();
        t1.sort();
        t2.sort();
        assert_eq!(t1, t2);
        assert_eq!(s1.vocabulary().types(), c.vocabulary().types());
        // ids reassigned to the new order
        for (i, s) in s1.sentences().iter().enumerate() {
            assert_eq!(s.id(), i);
        }
    }

    #[test]
    fn write_empty_selection_gives_empty_file() {
        let (c, _) = lines_corpus(&["a", "b"]);
        let f = tempfile::NamedTempFile::new().unwrap();
        c.write_selection(&[], f.path(), CorpusFormat::Lines).unwrap();
        assert_eq!(std::fs::read_to_string(f.path()).unwrap(), "");
    }

    #[test]
    fn write_selection_in_id_order() {
        let (c, _) = lines_corpus(&["a a", "b", "c c"]);
        let f = tempfile::NamedTempFile::new().unwrap();
        c.write_selection(&[2, 0], f.path(), CorpusFormat::Lines).unwrap();
        assert_eq!(std::fs::read_to_string(f.path()).unwrap(), "a a\nc c\n");
    }

    #[test]
    fn full_selection_round_trips() {
        let (c, _) = lines_corpus(&["a  b", "", "b c"]); // double space collapses, empty skipped
        let f = tempfile::NamedTempFile::new().unwrap();
        let all: Vec<usize> = (0..c.n()).collect();
        c.write_selection(&all, f.path(), CorpusFormat::Lines).unwrap();
        let (re, stats) =
            Corpus::load(f.path(), CorpusFormat::Lines, Tokenizer::Whitespace).unwrap();
        assert_eq!(stats.records_skipped, 0);
        assert_eq!(re.digest(), c.digest());
    }

    #[test]
    fn jsonl_round_trip_keeps_tokens() {
        let (c, _) = lines_corpus(&["le chat", "dort ici"]);
        let f = tempfile::NamedTempFile::new().unwrap();
        c.write_selection(&[0, 1], f.path(), CorpusFormat::Jsonl).unwrap();
        let (re, _) = Corpus::load(f.path(), CorpusFormat::Jsonl, Tokenizer::Whitespace).unwrap();
        for (a, b) in c.sentences().iter().zip(re.sentences()) {
            assert_eq!(a.tokens(), b.tokens());
        }
    }

    #[test]
    fn length_equals_count_sum() {
        let (c, _) = lines_corpus(&["a a b", "c"]);
        for s in c.sentences() {
            let sum: u32 = s.counts().iter().map(|&(_, k)| k).sum();
            assert_eq!(sum as usize, s.len());
        }
        let total: u64 = c.sentences().iter().map(|s| s.len() as u64).sum();
        assert_eq!(total, c.token_total());
    }

    #[test]
    fn pretokenized_keeps_tokens_verbatim() {
        let (c, _) = Corpus::from_texts(["a  b:c"], Tokenizer::Pretokenized);
        assert_eq!(c.sentence(0).tokens(), ["a", "b:c"]);
    }
}
