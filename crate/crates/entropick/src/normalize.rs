//! Placeholder normalization.
//!
//! Noise spans — numbers, phone numbers, HTML/XML tags, URLs, paths,
//! emoticons, punctuation series, phonetic characters, alphanumerical
//! tokens, and out-of-alphabet tokens — are replaced by fixed placeholder
//! tokens ([NUMBER], [URL], ...) so they cannot artificially inflate
//! measured diversity.
//!
//! Every replacement consumes whole whitespace-delimited tokens and emits
//! exactly one placeholder token. Placeholder tokens already present in the
//! input are protected before any rule runs. Together these two properties
//! make normalization idempotent and guarantee that the number of distinct
//! non-placeholder types never grows.
//!
//! Rules are immutable after compilation; distinct sentences may be
//! normalized concurrently.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The fixed placeholder inventory, one label per noise class.
pub const PLACEHOLDER_LABELS: [&str; 10] = [
    "NUMBER", "PHONE", "TAG", "URL", "PATH", "EMOTICON", "PUNCT", "PHONETIC", "ALNUM", "FOREIGN",
];

/// How a rule's pattern is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RuleMode {
    /// Pattern searched anywhere in the text; each match is widened to
    /// whole token boundaries before replacement.
    Span,
    /// Like `Span`, but a match directly adjacent to a letter or digit is
    /// discarded (keeps digit rules from eating into mixed tokens).
    SpanGuarded,
    /// Pattern tested against the punctuation-stripped core of each token;
    /// a hit replaces the whole token.
    #[default]
    Token,
    /// Pattern tested against the entire raw token.
    WholeToken,
}

/// A single normalization rule, loadable from config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSpec {
    /// Placeholder label (without brackets), e.g. `NUMBER`.
    pub name: String,
    /// Regex applied according to `mode`.
    pub pattern: String,
    /// Rules apply in strictly decreasing priority.
    pub priority: i32,
    #[serde(default)]
    pub mode: RuleMode,
}

/// Config-file schema for overriding the default rule set.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct NormalizerConfig {
    #[serde(default)]
    pub lowercase: bool,
    /// Extra characters appended to the allowed alphabet of the default
    /// FOREIGN rule. Ignored when `rules` is non-empty.
    #[serde(default)]
    pub allow_extra: String,
    /// Replaces the built-in rule set entirely when non-empty.
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
}

struct CompiledRule {
    label: String,
    placeholder: String,
    re: Regex,
    mode: RuleMode,
}

/// Counts reported by corpus-level normalization.
#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct NormStats {
    /// Replaced spans per rule label; exact.
    pub fires: BTreeMap<String, u64>,
    pub lines_in: u64,
    pub lines_out: u64,
    /// Lines whose normalized form is empty.
    pub emptied: u64,
}

impl NormStats {
    pub fn total_fires(&self) -> u64 {
        self.fires.values().sum()
    }
}

#[derive(Debug, Clone)]
enum Piece {
    Raw(String),
    Placeholder(String),
}

/// Compiled normalizer. Construction compiles all patterns once.
pub struct Normalizer {
    rules: Vec<CompiledRule>,
    lowercase: bool,
    known_placeholders: Vec<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::new(&NormalizerConfig::default()).expect("default rules compile")
    }
}

/// Characters a token may contain before the FOREIGN rule fires: ASCII
/// alphanumerics, Latin letters with French diacritics, punctuation and
/// common symbols. Kept as a regex class fragment.
fn allowed_class(extra: &str) -> String {
    let mut base = String::from(
        r"0-9A-Za-z\u{00C0}-\u{00D6}\u{00D8}-\u{00F6}\u{00F8}-\u{00FF}\u{0152}\u{0153}\u{0178}\p{P}=+<>|~\^$€£¥°§µ№…‰",
    );
    for ch in extra.chars() {
        if !ch.is_whitespace() {
            base.push_str(&regex::escape(&ch.to_string()));
        }
    }
    base
}

fn default_rules(allow_extra: &str) -> Vec<RuleSpec> {
    let spec = |name: &str, pattern: String, priority: i32, mode: RuleMode| RuleSpec {
        name: name.to_owned(),
        pattern,
        priority,
        mode,
    };
    vec![
        spec(
            "TAG",
            r"</?[A-Za-z][^<>]*>|<!--.*?-->".to_owned(),
            100,
            RuleMode::Span,
        ),
        spec(
            "URL",
            r"(?:https?|ftp)://\S+|www\.[A-Za-z0-9\-]+\.\S+".to_owned(),
            90,
            RuleMode::Span,
        ),
        spec(
            "PATH",
            r"(?:~|\.{1,2})?/[\w.\-]+(?:/[\w.\-]+)+/?|[A-Za-z]:\\[\w.\-]+(?:\\[\w.\-]+)*".to_owned(),
            80,
            RuleMode::SpanGuarded,
        ),
        spec(
            "PHONE",
            r"\+\d{1,3}(?:[ .\-]?\d{1,4}){2,}".to_owned(),
            70,
            RuleMode::SpanGuarded,
        ),
        // a number, or a space-separated series of numbers ("06 12 34 56 78",
        // "1 000 000"), with . , : as in-group separators
        spec(
            "NUMBER",
            r"\d+(?:[.,:]\d+)*(?:\s+\d+(?:[.,:]\d+)*)*".to_owned(),
            60,
            RuleMode::SpanGuarded,
        ),
        spec(
            "EMOTICON",
            r"^(?:[:;=8xX]['\-o^*]?[()\[\]/\\|DdPpbO3*]{1,3}|[()\[\]/\\|DdO]{1,3}['\-o^*]?[:;=8]|<3|\^\^|\^_\^|[TtoO]_[TtoO]|xD+|XD+)$"
                .to_owned(),
            56,
            RuleMode::WholeToken,
        ),
        // pictographs, emoji, arrows, dingbats
        spec(
            "EMOTICON",
            r"[\u{1F000}-\u{1FAFF}\u{2600}-\u{27BF}\u{2190}-\u{21FF}\u{2B00}-\u{2BFF}\u{FE00}-\u{FE0F}\u{2764}]"
                .to_owned(),
            55,
            RuleMode::Token,
        ),
        // token mixing letters and digits (product codes, "mp3", "A380")
        spec(
            "ALNUM",
            r"^[\w'.\-]*(?:\d\p{L}|\p{L}\d)[\w'.\-]*$".to_owned(),
            40,
            RuleMode::Token,
        ),
        // IPA extensions, spacing modifiers, phonetic extensions
        spec(
            "PHONETIC",
            r"[\u{0250}-\u{02AF}\u{02B0}-\u{02FF}\u{1D00}-\u{1D7F}\u{1D80}-\u{1DBF}]".to_owned(),
            30,
            RuleMode::Token,
        ),
        spec(
            "FOREIGN",
            format!(r"[^\s{}]", allowed_class(allow_extra)),
            20,
            RuleMode::Token,
        ),
        // punctuation series of length >= 2, only as a standalone token
        spec(
            "PUNCT",
            r"^[\p{P}=+<>|~\^$]{2,}$".to_owned(),
            10,
            RuleMode::WholeToken,
        ),
    ]
}

impl Normalizer {
    pub fn new(config: &NormalizerConfig) -> Result<Self> {
        let specs = if config.rules.is_empty() {
            default_rules(&config.allow_extra)
        } else {
            config.rules.clone()
        };
        let mut ordered = specs;
        // strictly increasing application order = decreasing priority;
        // stable sort keeps equal-priority rules in declaration order
        ordered.sort_by_key(|r| std::cmp::Reverse(r.priority));
        let mut rules = Vec::with_capacity(ordered.len());
        for spec in &ordered {
            let re = Regex::new(&spec.pattern).map_err(|e| Error::Rule {
                name: spec.name.clone(),
                source: e,
            })?;
            rules.push(CompiledRule {
                label: spec.name.clone(),
                placeholder: format!("[{}]", spec.name),
                re,
                mode: spec.mode,
            });
        }
        let mut known_placeholders: Vec<String> = rules.iter().map(|r| r.placeholder.clone()).collect();
        for label in PLACEHOLDER_LABELS {
            let ph = format!("[{label}]");
            if !known_placeholders.contains(&ph) {
                known_placeholders.push(ph);
            }
        }
        Ok(Normalizer {
            rules,
            lowercase: config.lowercase,
            known_placeholders,
        })
    }

    /// Loads a TOML config file and builds the normalizer from it.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: NormalizerConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        Normalizer::new(&config)
    }

    /// Normalizes one sentence. Total and idempotent; the result may be
    /// empty (callers skip empty results). Whitespace collapses to single
    /// spaces.
    pub fn normalize_sentence(&self, raw: &str) -> String {
        let mut stats = NormStats::default();
        self.normalize_counted(raw, &mut stats)
    }

    /// Same as [`Self::normalize_sentence`] but accumulates rule-fire counts.
    pub fn normalize_counted(&self, raw: &str, stats: &mut NormStats) -> String {
        let mut pieces = self.protect_placeholders(raw);
        for rule in &self.rules {
            pieces = self.apply_rule(rule, pieces, stats);
        }
        let mut out = String::new();
        for piece in &pieces {
            let part = match piece {
                Piece::Placeholder(ph) => ph.as_str(),
                Piece::Raw(text) => text.as_str(),
            };
            for token in part.split_whitespace() {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(token);
            }
        }
        out
    }

    /// Splits the input into raw segments and protected placeholder tokens.
    /// A token is protected only when it is exactly a known placeholder.
    fn protect_placeholders(&self, raw: &str) -> Vec<Piece> {
        let mut pieces = Vec::new();
        let mut current = String::new();
        for token in raw.split_whitespace() {
            if self.known_placeholders.iter().any(|ph| ph == token) {
                if !current.is_empty() {
                    pieces.push(Piece::Raw(std::mem::take(&mut current)));
                }
                pieces.push(Piece::Placeholder(token.to_owned()));
            } else {
                if !current.is_empty() {
                    current.push(' ');
                }
                if self.lowercase {
                    current.push_str(&token.to_lowercase());
                } else {
                    current.push_str(token);
                }
            }
        }
        if !current.is_empty() {
            pieces.push(Piece::Raw(current));
        }
        pieces
    }

    fn apply_rule(&self, rule: &CompiledRule, pieces: Vec<Piece>, stats: &mut NormStats) -> Vec<Piece> {
        let mut out = Vec::with_capacity(pieces.len());
        for piece in pieces {
            match piece {
                Piece::Placeholder(_) => out.push(piece),
                Piece::Raw(text) => match rule.mode {
                    RuleMode::Span | RuleMode::SpanGuarded => {
                        span_replace(rule, &text, rule.mode == RuleMode::SpanGuarded, &mut out, stats)
                    }
                    RuleMode::Token | RuleMode::WholeToken => {
                        token_replace(rule, &text, &mut out, stats)
                    }
                },
            }
        }
        out
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    /// Normalizes a line file (or JSONL `text` fields) into `out`. Every
    /// output record is the normalization of the corresponding input
    /// record; emptied lines are written as empty and counted.
    pub fn normalize_file(
        &self,
        input: &Path,
        output: &Path,
        format: crate::corpus::CorpusFormat,
    ) -> Result<NormStats> {
        use crate::corpus::CorpusFormat;
        let file = File::open(input).map_err(|e| Error::io(input, e))?;
        let reader = BufReader::new(file);
        let out_file = File::create(output).map_err(|e| Error::io(output, e))?;
        let mut w = BufWriter::new(out_file);
        let mut stats = NormStats::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(input, e))?;
            stats.lines_in += 1;
            let text = match format {
                CorpusFormat::Lines => line,
                CorpusFormat::Jsonl => {
                    let rec: serde_json::Value =
                        serde_json::from_str(&line).map_err(|e| Error::Jsonl {
                            line: idx + 1,
                            msg: e.to_string(),
                        })?;
                    rec.get("text")
                        .and_then(|v| v.as_str())
                        .ok_or_else(|| Error::Jsonl {
                            line: idx + 1,
                            msg: "missing \"text\" field".into(),
                        })?
                        .to_owned()
                }
            };
            let norm = self.normalize_counted(&text, &mut stats);
            if norm.is_empty() {
                stats.emptied += 1;
            }
            match format {
                CorpusFormat::Lines => writeln!(w, "{norm}"),
                CorpusFormat::Jsonl => {
                    writeln!(w, "{}", serde_json::json!({ "text": norm }))
                }
            }
            .map_err(|e| Error::io(output, e))?;
            stats.lines_out += 1;
        }
        w.flush().map_err(|e| Error::io(output, e))?;
        Ok(stats)
    }

    /// Normalizes every sentence of an in-memory corpus, returning the new
    /// corpus plus stats. Sentences that normalize to nothing are dropped,
    /// exactly as loading a normalized file would drop them.
    pub fn normalize_corpus(&self, corpus: &crate::corpus::Corpus) -> (crate::corpus::Corpus, NormStats) {
        let mut stats = NormStats::default();
        let mut rows: Vec<Vec<String>> = Vec::with_capacity(corpus.n());
        for s in corpus.sentences() {
            stats.lines_in += 1;
            let norm = self.normalize_counted(&s.text(), &mut stats);
            if norm.is_empty() {
                stats.emptied += 1;
            }
            stats.lines_out += 1;
            rows.push(norm.split_whitespace().map(str::to_owned).collect());
        }
        let (c, _) = crate::corpus::Corpus::from_token_rows(rows);
        (c, stats)
    }
}

/// Widens `[start, end)` to whole whitespace-delimited token boundaries.
fn widen_to_tokens(text: &str, start: usize, end: usize) -> (usize, usize) {
    let mut s = start;
    while s > 0 {
        let prev = text[..s].chars().next_back().expect("in bounds");
        if prev.is_whitespace() {
            break;
        }
        s -= prev.len_utf8();
    }
    let mut e = end;
    for ch in text[end..].chars() {
        if ch.is_whitespace() {
            break;
        }
        e += ch.len_utf8();
    }
    (s, e)
}

fn adjacent_alnum(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    before.is_some_and(|c| c.is_alphanumeric()) || after.is_some_and(|c| c.is_alphanumeric())
}

fn span_replace(
    rule: &CompiledRule,
    text: &str,
    guarded: bool,
    out: &mut Vec<Piece>,
    stats: &mut NormStats,
) {
    let mut cursor = 0usize;
    let mut produced = false;
    for m in rule.re.find_iter(text) {
        if m.start() < cursor {
            continue; // swallowed by a previous widened replacement
        }
        if m.start() == m.end() {
            continue;
        }
        if guarded && adjacent_alnum(text, m.start(), m.end()) {
            continue;
        }
        let (s, e) = widen_to_tokens(text, m.start(), m.end());
        if s < cursor {
            continue;
        }
        if !text[cursor..s].trim().is_empty() {
            out.push(Piece::Raw(text[cursor..s].trim().to_owned()));
        }
        out.push(Piece::Placeholder(rule.placeholder.clone()));
        *stats.fires.entry(rule.label.clone()).or_insert(0) += 1;
        cursor = e;
        produced = true;
    }
    if !produced {
        out.push(Piece::Raw(text.to_owned()));
    } else if !text[cursor..].trim().is_empty() {
        out.push(Piece::Raw(text[cursor..].trim().to_owned()));
    }
}

/// Strips leading and trailing punctuation, leaving the token core.
fn token_core(token: &str) -> &str {
    token.trim_matches(|c: char| {
        // ASCII and general punctuation, but not symbols (keeps emoji)
        c.is_ascii_punctuation() || (!c.is_ascii() && unicode_punct(c))
    })
}

fn unicode_punct(c: char) -> bool {
    matches!(c,
        '\u{00A1}'..='\u{00BF}' | '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}'
        | '«' | '»' | '‹' | '›' | '„' | '“' | '”' | '‘' | '’')
}

fn token_replace(rule: &CompiledRule, text: &str, out: &mut Vec<Piece>, stats: &mut NormStats) {
    let mut current = String::new();
    let mut any = false;
    for token in text.split_whitespace() {
        let subject = match rule.mode {
            RuleMode::WholeToken => token,
            _ => token_core(token),
        };
        let hit = !subject.is_empty() && rule.re.is_match(subject);
        if hit {
            if !current.is_empty() {
                out.push(Piece::Raw(std::mem::take(&mut current)));
            }
            out.push(Piece::Placeholder(rule.placeholder.clone()));
            *stats.fires.entry(rule.label.clone()).or_insert(0) += 1;
            any = true;
        } else {
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(token);
        }
    }
    if !current.is_empty() {
        out.push(Piece::Raw(current));
    }
    let _ = any;
}
