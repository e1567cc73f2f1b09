//! Corpus ingestion: tokenization, proper-noun filtering, and sparse
//! term-frequency matrices keyed by entity-year.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one document: an entity (e.g. a country code) in a given year.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DocKey {
    pub entity: String,
    pub year: i32,
}

impl DocKey {
    pub fn new(entity: impl Into<String>, year: i32) -> Result<Self> {
        let entity = entity.into();
        if entity.is_empty() {
            return Err(Error::InvalidKey("empty entity".into()));
        }
        if entity.chars().any(char::is_whitespace) {
            return Err(Error::InvalidKey(format!("entity {entity:?} contains whitespace")));
        }
        Ok(DocKey { entity, year })
    }

    /// Parses a file stem of the form `<entity>_<year>`. The entity may itself
    /// contain underscores; the year is taken after the last one.
    pub fn from_file_stem(stem: &str) -> Result<Self> {
        let (entity, year) = stem
            .rsplit_once('_')
            .ok_or_else(|| Error::InvalidKey(format!("{stem:?} is not <entity>_<year>")))?;
        let year = year
            .parse()
            .map_err(|_| Error::InvalidKey(format!("{stem:?} has a non-integer year")))?;
        DocKey::new(entity, year)
    }
}

impl fmt::Display for DocKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.entity, self.year)
    }
}

impl FromStr for DocKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DocKey::from_file_stem(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub key: DocKey,
    pub text: String,
}

/// Splits text into tokens: maximal runs of alphabetic characters, where a
/// single hyphen or apostrophe is kept when it sits between two letters.
/// Everything else (digits, punctuation, whitespace) separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let joins = is_joiner(c) && !current.is_empty() && chars.get(i + 1).is_some_and(|n| n.is_alphabetic());
        if c.is_alphabetic() || joins {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Removes every word whose occurrences across the whole corpus are all
/// capitalized, and lowercases everything that survives.
pub fn strip_proper_nouns(docs: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut seen_lowercase: HashSet<String> = HashSet::new();
    for token in docs.iter().flatten() {
        if !is_capitalized(token) {
            seen_lowercase.insert(token.to_lowercase());
        }
    }
    docs.par_iter()
        .map(|doc| {
            doc.iter()
                .map(|t| t.to_lowercase())
                .filter(|t| seen_lowercase.contains(t))
                .collect()
        })
        .collect()
}

/// Ordered word list with its index map and per-word document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
}

impl Vocabulary {
    fn from_words(words: Vec<String>, df: Vec<usize>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Vocabulary { words, index, df })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }
}

/// Terms x documents count matrix stored column-wise: one sorted list of
/// `(word index, count)` per document. Stored counts are always positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseTermMatrix {
    vocab: Vocabulary,
    doc_keys: Vec<DocKey>,
    columns: Vec<Vec<(usize, u64)>>,
}

impl SparseTermMatrix {
    /// Assembles a matrix from explicit columns, validating indices and
    /// recomputing document frequencies.
    pub fn from_columns(
        words: Vec<String>,
        doc_keys: Vec<DocKey>,
        mut columns: Vec<Vec<(usize, u64)>>,
    ) -> Result<Self> {
        if doc_keys.len() != columns.len() {
            return Err(Error::LengthMismatch(format!(
                "{} doc keys but {} columns",
                doc_keys.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for key in &doc_keys {
            if !seen.insert(key) {
                return Err(Error::DuplicateKey(key.clone()));
            }
        }
        let m = words.len();
        let mut df = vec![0usize; m];
        for col in columns.iter_mut() {
            col.sort_unstable_by_key(|&(w, _)| w);
            for pair in col.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate entry for word index {}",
                        pair[0].0
                    )));
                }
            }
            for &(w, c) in col.iter() {
                if w >= m {
                    return Err(Error::InvalidConfig(format!("word index {w} out of range")));
                }
                if c == 0 {
                    return Err(Error::InvalidConfig("stored counts must be positive".into()));
                }
                df[w] += 1;
            }
        }
        let vocab = Vocabulary::from_words(words, df)?;
        Ok(SparseTermMatrix {
            vocab,
            doc_keys,
            columns,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn doc_keys(&self) -> &[DocKey] {
        &self.doc_keys
    }

    pub fn n_words(&self) -> usize {
        self.vocab.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_keys.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column(&self, doc: usize) -> &[(usize, u64)] {
        &self.columns[doc]
    }

    pub fn columns(&self) -> &[Vec<(usize, u64)>] {
        &self.columns
    }

    pub fn doc_index(&self, key: &DocKey) -> Option<usize> {
        self.doc_keys.iter().position(|k| k == key)
    }

    pub fn get(&self, word: usize, doc: usize) -> u64 {
        let col = &self.columns[doc];
        col.binary_search_by_key(&word, |&(w, _)| w)
            .map(|i| col[i].1)
            .unwrap_or(0)
    }

    /// Total tokens per document.
    pub fn doc_lengths(&self) -> Vec<u64> {
        self.columns.iter().map(|c| c.iter().map(|&(_, n)| n).sum()).collect()
    }

    /// Map from document key to column index.
    pub fn key_index(&self) -> HashMap<&DocKey, usize> {
        self.doc_keys.iter().enumerate().map(|(i, k)| (k, i)).collect()
    }

    /// Writes the plain-text matrix format: a `m n nnz` header, `m` vocabulary
    /// lines, `n` doc-key lines (`entity year`), then `word doc count` triples.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.n_words(), self.n_docs(), self.nnz())?;
        for w in self.vocab.words() {
            writeln!(out, "{w}")?;
        }
        for k in &self.doc_keys {
            writeln!(out, "{} {}", k.entity, k.year)?;
        }
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, c) in col {
                writeln!(out, "{i} {j} {c}")?;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("matrix text is UTF-8")
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::parse(0, format!("unexpected end of input, expected {what}"))),
            }
        };
        let (ln, header) = next_line("header")?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(ln, "bad header integer")))
            .collect::<Result<_>>()?;
        let [m, n, nnz] = dims[..] else {
            return Err(Error::parse(ln, "header must be `m n nnz`"));
        };
        let mut words = Vec::with_capacity(m);
        for _ in 0..m {
            let (_, w) = next_line("vocabulary word")?;
            words.push(w);
        }
        let mut keys = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, line) = next_line("doc key")?;
            let (entity, year) = line
                .rsplit_once(' ')
                .ok_or_else(|| Error::parse(ln, "doc key must be `entity year`"))?;
            let year = year
                .parse()
                .map_err(|_| Error::parse(ln, "doc key year must be an integer"))?;
            keys.push(DocKey::new(entity, year)?);
        }
        let mut columns = vec![Vec::new(); n];
        for _ in 0..nnz {
            let (ln, line) = next_line("triple")?;
            let parts: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(ln, "bad triple integer")))
                .collect::<Result<_>>()?;
            let [i, j, c] = parts[..] else {
                return Err(Error::parse(ln, "triple must be `word doc count`"));
            };
            let j = j as usize;
            if j >= n {
                return Err(Error::parse(ln, format!("doc index {j} out of range")));
            }
            columns[j].push((i as usize, c));
        }
        SparseTermMatrix::from_columns(words, keys, columns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SparseTermMatrix::read_from(fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

/// Counts tokens per document. The vocabulary is the sorted union of all
/// tokens, so the result does not depend on the order tokens appear in.
pub fn build_term_matrix(tokens: &[Vec<String>], keys: &[DocKey]) -> Result<SparseTermMatrix> {
    if tokens.len() != keys.len() {
        return Err(Error::LengthMismatch(format!(
            "{} token lists for {} keys",
            tokens.len(),
            keys.len()
        )));
    }
    let mut seen = HashSet::new();
    for key in keys {
        if !seen.insert(key) {
            return Err(Error::DuplicateKey(key.clone()));
        }
    }
    let counts: Vec<BTreeMap<&str, u64>> = tokens
        .par_iter()
        .map(|doc| {
            let mut c = BTreeMap::new();
            for t in doc {
                *c.entry(t.as_str()).or_insert(0) += 1;
            }
            c
        })
        .collect();
    let words: Vec<String> = counts
        .iter()
        .flat_map(|c| c.keys().copied())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let columns = counts
        .iter()
        .map(|c| c.iter().map(|(w, &n)| (index[w], n)).collect())
        .collect();
    SparseTermMatrix::from_columns(words, keys.to_vec(), columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorpusVariant {
    A,
    B,
}

impl FromStr for CorpusVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(CorpusVariant::A),
            "B" | "b" => Ok(CorpusVariant::B),
            other => Err(Error::InvalidConfig(format!("unknown corpus variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusVariantConfig {
    pub variant: CorpusVariant,
    pub stoplist: Vec<String>,
    /// Words whose largest within-document count is below this are dropped.
    pub min_max_in_doc_count: u64,
}

impl CorpusVariantConfig {
    pub fn a() -> Self {
        CorpusVariantConfig {
            variant: CorpusVariant::A,
            stoplist: Vec::new(),
            min_max_in_doc_count: 2,
        }
    }

    pub fn b(stoplist: Vec<String>) -> Self {
        CorpusVariantConfig {
            variant: CorpusVariant::B,
            stoplist,
            min_max_in_doc_count: 2,
        }
    }
}

/// Reads a stoplist file: one word per line, blank lines and `#` comments
/// ignored, words lowercased.
pub fn read_stoplist(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

/// Variant A is the identity. Variant B drops stoplist words and words that
/// never occur at least `min_max_in_doc_count` times within one document.
pub fn apply_variant(matrix: &SparseTermMatrix, config: &CorpusVariantConfig) -> Result<SparseTermMatrix> {
    if config.variant == CorpusVariant::A {
        return Ok(matrix.clone());
    }
    if config.stoplist.is_empty() {
        return Err(Error::EmptyStoplist);
    }
    let stop: HashSet<String> = config.stoplist.iter().map(|w| w.to_lowercase()).collect();
    let m = matrix.n_words();
    let mut max_count = vec![0u64; m];
    for col in matrix.columns() {
        for &(w, c) in col {
            max_count[w] = max_count[w].max(c);
        }
    }
    let mut remap = vec![None; m];
    let mut words = Vec::new();
    for (i, w) in matrix.vocab().words().iter().enumerate() {
        if max_count[i] >= config.min_max_in_doc_count && !stop.contains(w) {
            remap[i] = Some(words.len());
            words.push(w.clone());
        }
    }
    if words.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let columns = matrix
        .columns()
        .iter()
        .map(|col| col.iter().filter_map(|&(w, c)| remap[w].map(|nw| (nw, c))).collect())
        .collect();
    SparseTermMatrix::from_columns(words, matrix.doc_keys().to_vec(), columns)
}

/// Tokenizes, strips proper nouns corpus-wide, and counts.
pub fn build_corpus(docs: &[RawDocument]) -> Result<SparseTermMatrix> {
    let tokens: Vec<Vec<String>> = docs.par_iter().map(|d| tokenize(&d.text)).collect();
    let filtered = strip_proper_nouns(&tokens);
    let keys: Vec<DocKey> = docs.iter().map(|d| d.key.clone()).collect();
    build_term_matrix(&filtered, &keys)
}

#[derive(Debug, Deserialize)]
struct JsonDoc {
    entity: String,
    year: i32,
    text: String,
}

/// Reads `<entity>_<year>.txt` files from a directory, sorted by key.
pub fn read_text_dir(dir: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let key = DocKey::from_file_stem(stem)?;
        docs.push(RawDocument {
            key,
            text: fs::read_to_string(&path)?,
        });
    }
    docs.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(docs)
}

/// Reads JSON lines with `entity`, `year`, `text`. Several lines with the same
/// key are articles of one document and are concatenated.
pub fn read_jsonl<R: Read>(input: R) -> Result<Vec<RawDocument>> {
    let mut merged: BTreeMap<DocKey, String> = BTreeMap::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: JsonDoc = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let key = DocKey::new(doc.entity, doc.year)?;
        let text = merged.entry(key).or_default();
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&doc.text);
    }
    Ok(merged
        .into_iter()
        .map(|(key, text)| RawDocument { key, text })
        .collect())
}

/// Loads raw documents from either a directory of text files or a `.jsonl`
/// file, optionally rejecting years outside `year_range`.
pub fn read_documents(path: impl AsRef<Path>, year_range: Option<(i32, i32)>) -> Result<Vec<RawDocument>> {
    let path = path.as_ref();
    let docs = if path.is_dir() {
        read_text_dir(path)?
    } else {
        read_jsonl(fs::File::open(path)?)?
    };
    if let Some((lo, hi)) = year_range {
        if let Some(d) = docs.iter().find(|d| d.key.year < lo || d.key.year > hi) {
            return Err(Error::InvalidKey(format!("{} outside year range {lo}..={hi}", d.key)));
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn key(e: &str, y: i32) -> DocKey {
        DocKey::new(e, y).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert!(toks("").is_empty());
        assert_eq!(toks("Vote, vote!"), ["Vote", "vote"]);
        assert_eq!(toks("the 2nd e-mail"), ["the", "nd", "e-mail"]);
    }

    #[test]
    fn tokenize_edge_joiners() {
        assert_eq!(
            toks("don't -dash- rock--roll end'"),
            ["don't", "dash", "rock", "roll", "end"]
        );
        assert_eq!(toks("Ação, é!"), ["Ação", "é"]);
    }

    #[test]
    fn proper_nouns() {
        let docs = vec![
            toks("Washington met Turkey in the capital"),
            toks("Washington ate turkey. The end"),
        ];
        let out = strip_proper_nouns(&docs);
        assert!(out.iter().flatten().all(|t| t != "washington"));
        assert_eq!(out[0], ["met", "turkey", "in", "the", "capital"]);
        assert_eq!(out[1], ["ate", "turkey", "the", "end"]);
        let docs = vec![toks("the cat"), toks("The Dog")];
        assert_eq!(strip_proper_nouns(&docs), vec![vec!["the", "cat"], vec!["the"]]);
    }

    #[test]
    fn strip_is_idempotent() {
        let docs = vec![toks("Alpha beta Gamma gamma Delta"), toks("beta Beta Epsilon")];
        let once = strip_proper_nouns(&docs);
        assert_eq!(strip_proper_nouns(&once), once);
    }

    #[test]
    fn counts_and_df() {
        let m = build_term_matrix(&[toks("a a b")], &[key("x", 1)]).unwrap();
        let a = m.vocab().index_of("a").unwrap();
        let b = m.vocab().index_of("b").unwrap();
        assert_eq!(m.get(a, 0), 2);
        assert_eq!(m.get(b, 0), 1);

        let m = build_term_matrix(&[toks("a"), toks("a")], &[key("x", 1), key("y", 1)]).unwrap();
        assert_eq!(m.vocab().df(), &[2]);
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = build_term_matrix(&[toks("a"), toks("b")], &[key("x", 1), key("x", 1)]).unwrap_err();
        match err {
            Error::DuplicateKey(k) => assert_eq!(k, key("x", 1)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn brute_force_tally() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pool = ["v", "w", "x", "y", "z"];
        let docs: Vec<Vec<String>> = (0..3)
            .map(|_| (0..20).map(|_| pool[rng.random_range(0..5)].to_string()).collect())
            .collect();
        let keys = vec![key("a", 1), key("b", 1), key("c", 1)];
        let m = build_term_matrix(&docs, &keys).unwrap();
        for (j, doc) in docs.iter().enumerate() {
            for w in pool {
                let tally = doc.iter().filter(|t| *t == w).count() as u64;
                let got = m.vocab().index_of(w).map_or(0, |i| m.get(i, j));
                assert_eq!(got, tally, "word {w} doc {j}");
            }
        }
        let lengths = m.doc_lengths();
        assert!(lengths.iter().all(|&l| l == 20));
    }

    fn matrix_from_counts(words: &[&str], cols: &[&[u64]]) -> SparseTermMatrix {
        let keys = (0..cols.len()).map(|j| key("d", j as i32)).collect();
        let columns = cols
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, &n)| n > 0)
                    .map(|(i, &n)| (i, n))
                    .collect()
            })
            .collect();
        SparseTermMatrix::from_columns(words.iter().map(|w| w.to_string()).collect(), keys, columns).unwrap()
    }

    #[test]
    fn variant_a_identity() {
        let m = matrix_from_counts(&["a", "b"], &[&[1, 2], &[3, 0]]);
        assert_eq!(apply_variant(&m, &CorpusVariantConfig::a()).unwrap(), m);
    }

    #[test]
    fn variant_b_rules() {
        // words: once (1,1,1) dropped; twice (1,2,0) kept; the (5,5,5) stoplisted
        let m = matrix_from_counts(&["once", "the", "twice"], &[&[1, 5, 1], &[1, 5, 2], &[1, 5, 0]]);
        let out = apply_variant(&m, &CorpusVariantConfig::b(vec!["the".into()])).unwrap();
        assert_eq!(out.vocab().words(), ["twice"]);
        assert_eq!(out.vocab().df(), &[2]);
        assert_eq!(out.get(0, 1), 2);
        assert_eq!(out.column(2), &[]);
    }

    #[test]
    fn variant_b_errors() {
        let m = matrix_from_counts(&["a"], &[&[1]]);
        assert!(matches!(
            apply_variant(&m, &CorpusVariantConfig::b(vec![])),
            Err(Error::EmptyStoplist)
        ));
        assert!(matches!(
            apply_variant(&m, &CorpusVariantConfig::b(vec!["zzz".into()])),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn doc_key_parsing() {
        assert_eq!(DocKey::from_file_stem("US_1992").unwrap(), key("US", 1992));
        assert_eq!(
            DocKey::from_file_stem("new_zealand_2001").unwrap(),
            key("new_zealand", 2001)
        );
        assert!(DocKey::from_file_stem("nope").is_err());
        assert!(DocKey::from_file_stem("_1992").is_err());
    }

    #[test]
    fn jsonl_merges_articles() {
        let input = concat!(
            r#"{"entity":"BR","year":2000,"text":"one"}"#,
            "\n",
            r#"{"entity":"AR","year":2000,"text":"two"}"#,
            "\n",
            r#"{"entity":"BR","year":2000,"text":"three"}"#,
            "\n"
        );
        let docs = read_jsonl(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].key, key("AR", 2000));
        assert_eq!(docs[1].text, "one\nthree");
    }

    #[test]
    fn text_format_rejects_zero_count() {
        let text = "1 1 1\na\nx 1\n0 0 0\n";
        assert!(SparseTermMatrix::read_from(text.as_bytes()).is_err());
    }
}
