//! Mention detection.
//!
//! The default detector is a rule-based noun-run chunker: within each
//! sentence, maximal runs of content words (not in the bundled stopword
//! list, containing a letter, at least two characters) separated only by
//! whitespace become mentions, split into pieces of at most four tokens.
//! Documents may instead carry gold mentions, which bypass detection.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

const STOPWORDS: &str = include_str!("../data/stopwords.txt");
const ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

/// Words whose trailing `s` is not a plural marker.
const SINGULAR_EXCEPTIONS: &[&str] = &[
    "alias",
    "always",
    "analysis",
    "basis",
    "bias",
    "bus",
    "canvas",
    "chaos",
    "crisis",
    "diabetes",
    "diagnosis",
    "gas",
    "herpes",
    "lens",
    "mathematics",
    "measles",
    "news",
    "perhaps",
    "physics",
    "rabies",
    "series",
    "species",
    "status",
    "thesis",
    "virus",
    "whereas",
    "yes",
];

fn word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GoldMention {
    Surface(String),
    Full {
        surface: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sentence: Option<String>,
    },
}

impl GoldMention {
    fn surface(&self) -> &str {
        match self {
            GoldMention::Surface(s) => s,
            GoldMention::Full { surface, .. } => surface,
        }
    }

    fn sentence(&self) -> Option<&str> {
        match self {
            GoldMention::Full { sentence, .. } => sentence.as_deref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Gold mentions; when present they replace detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mentions: Option<Vec<GoldMention>>,
}

impl Document {
    /// Title and abstract joined by a newline; mention spans index into this string.
    pub fn text(&self) -> String {
        match (
            self.title.trim().is_empty(),
            self.abstract_text.trim().is_empty(),
        ) {
            (false, false) => format!("{}\n{}", self.title, self.abstract_text),
            (false, true) => self.title.clone(),
            (true, _) => self.abstract_text.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionSource {
    Text,
    Keyword,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    pub lemma: String,
    pub sentence: String,
    pub source: MentionSource,
    /// Byte span into [`Document::text`]; absent for keywords.
    pub char_span: Option<(usize, usize)>,
}

pub trait MentionDetector: Send + Sync {
    fn detect(&self, doc: &Document) -> Vec<Mention>;
}

/// Sentence spans (byte offsets, trimmed) of `text`.
///
/// Boundaries are newlines and `.`, `!`, `?` followed by whitespace and an
/// uppercase letter (or the end of the text); a period closing a listed
/// abbreviation is not a boundary.
pub fn split_sentences(text: &str, abbreviations: &HashSet<String>) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, c)) in chars.iter().enumerate() {
        let boundary_end = match c {
            '\n' => Some(pos),
            '.' | '!' | '?' => {
                let next_ws = chars.get(i + 1).is_none_or(|(_, n)| n.is_whitespace());
                let next_word = chars[i + 1..]
                    .iter()
                    .map(|(_, n)| *n)
                    .find(|n| !n.is_whitespace());
                let capital_follows = next_word.is_none_or(|n| n.is_uppercase());
                let abbreviation = c == '.' && {
                    let word_start = text[..pos].rfind(char::is_whitespace).map_or(0, |p| p + 1);
                    let word = text[word_start..pos]
                        .trim_start_matches(['(', '['])
                        .to_lowercase();
                    abbreviations.contains(&word)
                };
                (next_ws && capital_follows && !abbreviation).then_some(pos + c.len_utf8())
            }
            _ => None,
        };
        if let Some(end) = boundary_end {
            push_trimmed(text, start, end, &mut spans);
            start = end;
        }
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        out.push((start + lead, start + lead + trimmed.len()));
    }
}

/// Word tokens of `text` as byte spans; internal `-` and `'` join alphanumeric runs.
fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            let joins = matches!(c, '-' | '\'' | '’')
                && chars.get(j + 1).is_some_and(|(_, n)| n.is_alphanumeric());
            if c.is_alphanumeric() || joins {
                j += 1;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
        out.push((start, end));
        i = j;
    }
    out
}

/// Rule-based noun-run chunker.
#[derive(Clone, Debug)]
pub struct NounRunChunker {
    stopwords: HashSet<String>,
    abbreviations: HashSet<String>,
    max_tokens: usize,
}

impl Default for NounRunChunker {
    fn default() -> Self {
        NounRunChunker {
            stopwords: word_list(STOPWORDS),
            abbreviations: word_list(ABBREVIATIONS),
            max_tokens: 4,
        }
    }
}

impl NounRunChunker {
    fn is_content(&self, token: &str) -> bool {
        token.chars().count() >= 2
            && token.chars().any(char::is_alphabetic)
            && !self.stopwords.contains(&token.to_lowercase())
    }

    fn chunk_sentence(&self, text: &str, sentence: (usize, usize), out: &mut Vec<Mention>) {
        let sent_text = &text[sentence.0..sentence.1];
        let mut run: Vec<(usize, usize)> = Vec::new();
        let flush = |run: &mut Vec<(usize, usize)>, out: &mut Vec<Mention>| {
            for piece in run.chunks(self.max_tokens) {
                let (start, end) = (piece[0].0, piece[piece.len() - 1].1);
                let surface = &text[start..end];
                out.push(Mention {
                    surface: surface.to_string(),
                    lemma: lemmatize(surface),
                    sentence: sent_text.to_string(),
                    source: MentionSource::Text,
                    char_span: Some((start, end)),
                });
            }
            run.clear();
        };
        for (s, e) in word_spans(sent_text) {
            let (s, e) = (s + sentence.0, e + sentence.0);
            let token = &text[s..e];
            if !self.is_content(token) {
                flush(&mut run, out);
                continue;
            }
            if let Some(&(_, prev_end)) = run.last() {
                if !text[prev_end..s].chars().all(char::is_whitespace) {
                    flush(&mut run, out);
                }
            }
            run.push((s, e));
        }
        flush(&mut run, out);
    }
}

impl MentionDetector for NounRunChunker {
    fn detect(&self, doc: &Document) -> Vec<Mention> {
        let text = doc.text();
        let mut out = Vec::new();
        for sentence in split_sentences(&text, &self.abbreviations) {
            self.chunk_sentence(&text, sentence, &mut out);
        }
        out
    }
}

/// Uses the document's gold mentions. Each surface is located in the text
/// (ASCII case-insensitive, successive occurrences for repeated surfaces) to
/// obtain its span and sentence; surfaces not found in the text are emitted
/// without a span, like keywords.
#[derive(Clone, Debug, Default)]
pub struct ProvidedMentions {
    abbreviations: HashSet<String>,
}

impl ProvidedMentions {
    pub fn new() -> Self {
        ProvidedMentions {
            abbreviations: word_list(ABBREVIATIONS),
        }
    }
}

fn find_from(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    // ASCII lowercasing keeps byte offsets unchanged
    let lower_hay = haystack.to_ascii_lowercase();
    let lower_needle = needle.to_ascii_lowercase();
    lower_hay[from..].find(&lower_needle).map(|p| from + p)
}

impl MentionDetector for ProvidedMentions {
    fn detect(&self, doc: &Document) -> Vec<Mention> {
        let Some(gold) = &doc.mentions else {
            return Vec::new();
        };
        let text = doc.text();
        let sentences = split_sentences(&text, &self.abbreviations);
        let mut next_search: HashMap<String, usize> = HashMap::new();
        let mut out = Vec::new();
        for g in gold {
            let surface = g.surface().trim();
            if surface.is_empty() {
                continue;
            }
            let from = next_search.get(surface).copied().unwrap_or(0);
            let found = find_from(&text, surface, from)
                .filter(|&p| text.is_char_boundary(p) && text.is_char_boundary(p + surface.len()));
            let mention = match found {
                Some(start) => {
                    let end = start + surface.len();
                    next_search.insert(surface.to_string(), end);
                    let sentence = g.sentence().map(str::to_string).unwrap_or_else(|| {
                        sentences
                            .iter()
                            .find(|(s, e)| *s <= start && end <= *e)
                            .map_or_else(|| surface.to_string(), |(s, e)| text[*s..*e].to_string())
                    });
                    Mention {
                        surface: text[start..end].to_string(),
                        lemma: lemmatize(surface),
                        sentence,
                        source: MentionSource::Text,
                        char_span: Some((start, end)),
                    }
                }
                None => Mention {
                    surface: surface.to_string(),
                    lemma: lemmatize(surface),
                    sentence: g.sentence().unwrap_or(surface).to_string(),
                    source: MentionSource::Keyword,
                    char_span: None,
                },
            };
            out.push(mention);
        }
        out
    }
}

pub fn detect_mentions(doc: &Document, detector: &dyn MentionDetector) -> Vec<Mention> {
    detector.detect(doc)
}

/// Appends each keyword whose lemma is not already present.
pub fn merge_keywords(mut mentions: Vec<Mention>, doc: &Document) -> Vec<Mention> {
    let mut seen: HashSet<String> = mentions.iter().map(|m| m.lemma.clone()).collect();
    for kw in &doc.keywords {
        let surface = kw.trim();
        if surface.is_empty() {
            continue;
        }
        let lemma = lemmatize(surface);
        if lemma.is_empty() || !seen.insert(lemma.clone()) {
            continue;
        }
        mentions.push(Mention {
            surface: surface.to_string(),
            lemma,
            sentence: surface.to_string(),
            source: MentionSource::Keyword,
            char_span: None,
        });
    }
    mentions
}

/// Lowercase, strip surrounding punctuation, collapse whitespace, singularize
/// the final word. Applied until it reaches a fixed point, so it is idempotent.
pub fn lemmatize(surface: &str) -> String {
    let mut current = surface.to_lowercase();
    loop {
        let next = lemma_step(&current);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn lemma_step(s: &str) -> String {
    let stripped = s.trim_matches(|c: char| !c.is_alphanumeric());
    let mut words: Vec<String> = stripped.split_whitespace().map(str::to_string).collect();
    if let Some(last) = words.last_mut() {
        *last = singularize(last);
    }
    words.join(" ")
}

fn singularize(word: &str) -> String {
    let len = word.chars().count();
    if len <= 3 || SINGULAR_EXCEPTIONS.contains(&word) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("'s").or_else(|| word.strip_suffix("’s")) {
        return stem.to_string();
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if len > 4 {
            return format!("{stem}y");
        }
    }
    for suffix in ["sses", "uses", "xes", "ches", "shes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    match word.strip_suffix('s') {
        Some(stem) => stem.to_string(),
        None => word.to_string(),
    }
}
