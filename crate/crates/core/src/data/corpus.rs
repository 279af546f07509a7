//! Voting texts, aggregated user/group documents and TF-IDF statistics.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::data::graph::InteractionGraph;
use crate::error::{Error, Result};

/// Parses a voting-text file: `voting-id<TAB>token token ...` per line.
/// Votings without a line get an empty token sequence; a voting listed twice
/// is an error.
pub fn parse_voting_texts(text: &str, n_votings: usize, source_name: &str) -> Result<Vec<Vec<String>>> {
    let mut docs: Vec<Option<Vec<String>>> = vec![None; n_votings];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, tokens) = match line.split_once('\t') {
            Some((id, rest)) => (id, rest),
            None => (line, ""),
        };
        let id: u64 = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(source_name, line_no, format!("`{id}` is not a voting id")))?;
        if id >= n_votings as u64 {
            return Err(Error::Range {
                source_name: source_name.to_string(),
                line: line_no,
                what: "voting",
                id,
                limit: n_votings,
            });
        }
        let slot = &mut docs[id as usize];
        if slot.is_some() {
            return Err(Error::parse(source_name, line_no, format!("voting {id} listed twice")));
        }
        *slot = Some(tokens.split_whitespace().map(str::to_owned).collect());
    }
    Ok(docs.into_iter().map(Option::unwrap_or_default).collect())
}

pub fn voting_texts_to_string(texts: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (id, tokens) in texts.iter().enumerate() {
        out.push_str(&id.to_string());
        out.push('\t');
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

/// Token → dense word id, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.ids.insert(token.to_owned(), id);
        self.tokens.push(token.to_owned());
        id
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The three document levels. TF-IDF statistics are kept per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DocLevel {
    Voting,
    User,
    Group,
}

impl DocLevel {
    pub const ALL: [DocLevel; 3] = [DocLevel::Voting, DocLevel::User, DocLevel::Group];

    fn slot(self) -> usize {
        match self {
            DocLevel::Voting => 0,
            DocLevel::User => 1,
            DocLevel::Group => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            DocLevel::Voting => "v",
            DocLevel::User => "u",
            DocLevel::Group => "g",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "v" => Some(DocLevel::Voting),
            "u" => Some(DocLevel::User),
            "g" => Some(DocLevel::Group),
            _ => None,
        }
    }
}

impl fmt::Display for DocLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocLevel::Voting => "voting",
            DocLevel::User => "user",
            DocLevel::Group => "group",
        })
    }
}

impl FromStr for DocLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voting" | "v" => Ok(DocLevel::Voting),
            "user" | "u" => Ok(DocLevel::User),
            "group" | "g" => Ok(DocLevel::Group),
            other => Err(Error::config(format!("unknown document level `{other}`"))),
        }
    }
}

/// Identifies one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DocRef {
    pub level: DocLevel,
    pub index: usize,
}

impl DocRef {
    pub fn new(level: DocLevel, index: usize) -> Self {
        Self { level, index }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    vocabulary: Vocabulary,
    docs: [Vec<Vec<u32>>; 3],
    doc_frequency: [Vec<u32>; 3],
}

/// Builds voting, user and group documents. A user document concatenates the
/// voting documents the user participates in (ascending voting id); a group
/// document concatenates its members' user documents (ascending user id).
pub fn build_documents(graph: &InteractionGraph, voting_texts: &[Vec<String>]) -> Result<Corpus> {
    if voting_texts.len() != graph.n_votings() {
        return Err(Error::config(format!(
            "{} voting texts supplied for {} votings",
            voting_texts.len(),
            graph.n_votings()
        )));
    }
    let mut vocabulary = Vocabulary::default();
    let voting_docs: Vec<Vec<u32>> = voting_texts
        .iter()
        .map(|tokens| tokens.iter().map(|t| vocabulary.intern(t)).collect())
        .collect();
    let user_docs: Vec<Vec<u32>> = (0..graph.n_users())
        .map(|u| {
            graph
                .votings_of(u)
                .iter()
                .flat_map(|&v| voting_docs[v].iter().copied())
                .collect()
        })
        .collect();
    let group_docs: Vec<Vec<u32>> = (0..graph.n_groups())
        .map(|g| {
            graph
                .members(g)
                .iter()
                .flat_map(|&u| user_docs[u].iter().copied())
                .collect()
        })
        .collect();
    Ok(Corpus::from_docs(vocabulary, voting_docs, user_docs, group_docs))
}

impl Corpus {
    /// Assembles a corpus from already-encoded documents. Every token id must be
    /// below the vocabulary size.
    pub fn from_docs(
        vocabulary: Vocabulary,
        voting_docs: Vec<Vec<u32>>,
        user_docs: Vec<Vec<u32>>,
        group_docs: Vec<Vec<u32>>,
    ) -> Self {
        let v = vocabulary.len();
        let docs = [voting_docs, user_docs, group_docs];
        let doc_frequency = [0, 1, 2].map(|slot| document_frequency(&docs[slot], v));
        Self {
            vocabulary,
            docs,
            doc_frequency,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn docs(&self, level: DocLevel) -> &[Vec<u32>] {
        &self.docs[level.slot()]
    }

    pub fn doc(&self, doc: DocRef) -> &[u32] {
        &self.docs[doc.level.slot()][doc.index]
    }

    pub fn n_docs(&self, level: DocLevel) -> usize {
        self.docs[level.slot()].len()
    }

    /// Empty documents (e.g. inactive users) embed to the zero vector.
    pub fn is_empty_doc(&self, doc: DocRef) -> bool {
        self.doc(doc).is_empty()
    }

    pub fn doc_frequency(&self, level: DocLevel, word: u32) -> u32 {
        self.doc_frequency[level.slot()]
            .get(word as usize)
            .copied()
            .unwrap_or(0)
    }

    /// `log(|D| / |{d ∈ D : w ∈ d}|)` with `D` the documents of `level`.
    pub fn idf(&self, level: DocLevel, word: u32) -> Result<f64> {
        if word as usize >= self.vocab_size() {
            return Err(Error::Consistency(format!("word id {word} outside vocabulary")));
        }
        let df = self.doc_frequency(level, word);
        if df == 0 {
            return Err(Error::Consistency(format!(
                "word {word} has zero {level} document frequency"
            )));
        }
        Ok((self.n_docs(level) as f64 / df as f64).ln())
    }

    /// Raw count of `word` in `doc` times its inverse document frequency.
    pub fn tfidf(&self, word: u32, doc: DocRef) -> Result<f64> {
        let count = self.doc(doc).iter().filter(|&&w| w == word).count();
        if count == 0 {
            if word as usize >= self.vocab_size() {
                return Err(Error::Consistency(format!("word id {word} outside vocabulary")));
            }
            return Ok(0.0);
        }
        Ok(count as f64 * self.idf(doc.level, word)?)
    }
}

fn document_frequency(docs: &[Vec<u32>], vocab_size: usize) -> Vec<u32> {
    let mut df = vec![0u32; vocab_size];
    let mut last_seen = vec![usize::MAX; vocab_size];
    for (d, doc) in docs.iter().enumerate() {
        for &w in doc {
            let w = w as usize;
            if last_seen[w] != d {
                last_seen[w] = d;
                df[w] += 1;
            }
        }
    }
    df
}
