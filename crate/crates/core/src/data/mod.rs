//! Two-domain interaction store: ingestion of raw interaction/document
//! files, vocabulary construction, leave-one-out splitting, document lookup
//! with fallback, and deterministic persistence of the prepared dataset.
//!
//! Raw input formats:
//! - interactions (one file per domain): `user_id<TAB>item_id[<TAB>extra]`
//!   where `extra` is a timestamp (ignored) or, with a rating threshold
//!   configured, a rating filtered at that threshold;
//! - documents: `user_id<TAB>item_id<TAB>text` (pair-level) or
//!   `item_id<TAB>text` (item-level, target domain);
//! - stopwords: one token per line.

pub mod sampling;
mod split;
mod vocab;

pub use sampling::{sample_eval_candidates, sample_negatives, EVAL_NEGATIVES};
pub use split::{loo_split, Split};
pub use vocab::{build_vocabulary, encode_document, tokenize, Vocabulary};

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, Dims};

/// Paths to the raw input files.
#[derive(Debug, Clone)]
pub struct RawPaths {
    pub target_interactions: PathBuf,
    pub source_interactions: PathBuf,
    pub documents: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

/// Knobs for dataset preparation.
#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub vocab_size: usize,
    pub max_doc_len: usize,
    pub seed: u64,
    /// Drop users with fewer target interactions than this before splitting.
    pub min_target_interactions: Option<usize>,
    /// Treat the third interaction column as a rating and keep rows at or
    /// above the threshold.
    pub rating_threshold: Option<f64>,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            vocab_size: 8000,
            max_doc_len: 300,
            seed: 42,
            min_target_interactions: None,
            rating_threshold: None,
        }
    }
}

/// The prepared two-domain dataset, immutable after load.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub num_users: usize,
    pub num_target_items: usize,
    pub num_source_items: usize,
    pub max_doc_len: usize,
    pub vocab: Vocabulary,
    /// Target-domain splits (dense ids).
    pub train: Vec<(u32, u32)>,
    pub val: Vec<(u32, u32)>,
    pub test: Vec<(u32, u32)>,
    /// Per-user union of train, validation and test target items.
    pub user_positive: Vec<HashSet<u32>>,
    /// Per-user target train interaction count.
    pub train_counts: Vec<usize>,
    /// Per-user source-domain item history, in interaction order.
    pub source_items: Vec<Vec<u32>>,
    /// Pair-level documents (encoded); only nonempty encodings are stored.
    pub pair_docs: HashMap<(u32, u32), Vec<u32>>,
    /// Item-level documents (encoded); empty when the item has none.
    pub item_docs: Vec<Vec<u32>>,
    /// Dense-to-raw id maps.
    pub user_ids: Vec<String>,
    pub target_item_ids: Vec<String>,
    pub source_item_ids: Vec<String>,
    /// Document-file lines referencing unknown users/items, skipped.
    pub skipped_doc_lines: usize,
}

impl Dataset {
    /// Model dimensions for this dataset at embedding size `d`.
    pub fn dims(&self, d: usize) -> Dims {
        Dims {
            num_users: self.num_users,
            num_target_items: self.num_target_items,
            num_source_items: self.num_source_items,
            d,
            vocab_size: self.vocab.len().max(1),
        }
    }

    /// Document for a (user, item) pair: the pair's own document when one
    /// exists, otherwise the item-level document truncated to the cap,
    /// otherwise empty.
    pub fn lookup_document(&self, user: u32, item: u32) -> Result<&[u32]> {
        if user as usize >= self.num_users {
            return Err(Error::IdOutOfRange {
                kind: "user",
                id: user as usize,
                limit: self.num_users,
            });
        }
        if item as usize >= self.num_target_items {
            return Err(Error::IdOutOfRange {
                kind: "target item",
                id: item as usize,
                limit: self.num_target_items,
            });
        }
        if let Some(doc) = self.pair_docs.get(&(user, item)) {
            return Ok(doc);
        }
        let doc = &self.item_docs[item as usize];
        Ok(&doc[..doc.len().min(self.max_doc_len)])
    }

    pub fn dense_user(&self, raw: &str) -> Option<u32> {
        self.user_ids.iter().position(|r| r == raw).map(|p| p as u32)
    }

    pub fn dense_target_item(&self, raw: &str) -> Option<u32> {
        self.target_item_ids
            .iter()
            .position(|r| r == raw)
            .map(|p| p as u32)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path)?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        lines.push(line?);
    }
    Ok(lines)
}

struct InteractionFile {
    /// (raw user, raw item) in file order, deduplicated.
    pairs: Vec<(String, String)>,
}

fn parse_interactions(
    path: &Path,
    rating_threshold: Option<f64>,
) -> Result<InteractionFile> {
    let mut pairs = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (lineno, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (user, item) = match (fields.next(), fields.next()) {
            (Some(u), Some(i)) if !u.is_empty() && !i.is_empty() => (u, i),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    detail: "expected user_id<TAB>item_id".into(),
                })
            }
        };
        if let Some(threshold) = rating_threshold {
            let rating: f64 = fields
                .next()
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    detail: "rating threshold set but no rating column".into(),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    detail: format!("bad rating: {e}"),
                })?;
            if rating < threshold {
                continue;
            }
        }
        let key = (user.to_owned(), item.to_owned());
        if seen.insert(key.clone()) {
            pairs.push(key);
        }
    }
    Ok(InteractionFile { pairs })
}

enum DocLine {
    Pair(String, String, String),
    Item(String, String),
}

fn parse_documents(path: &Path) -> Result<Vec<DocLine>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        match fields.as_slice() {
            [item, text] => out.push(DocLine::Item(item.to_string(), text.to_string())),
            [user, item, text] => {
                out.push(DocLine::Pair(user.to_string(), item.to_string(), text.to_string()))
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    detail: "expected item_id<TAB>text or user_id<TAB>item_id<TAB>text".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Dense id assignment in first-appearance order.
#[derive(Default)]
struct IdMap {
    to_dense: HashMap<String, u32>,
    to_raw: Vec<String>,
}

impl IdMap {
    fn intern(&mut self, raw: &str) -> u32 {
        if let Some(&id) = self.to_dense.get(raw) {
            return id;
        }
        let id = self.to_raw.len() as u32;
        self.to_dense.insert(raw.to_owned(), id);
        self.to_raw.push(raw.to_owned());
        id
    }

    fn get(&self, raw: &str) -> Option<u32> {
        self.to_dense.get(raw).copied()
    }
}

/// Ingest raw files into a prepared dataset: remap ids, filter, split,
/// build the vocabulary and encode all documents.
pub fn prepare(raw: &RawPaths, opts: &PrepareOptions) -> Result<Dataset> {
    let target = parse_interactions(&raw.target_interactions, opts.rating_threshold)?;
    let source = parse_interactions(&raw.source_interactions, opts.rating_threshold)?;

    // Optional minimum-feedback filter, applied before id assignment.
    let dropped_users: HashSet<String> = match opts.min_target_interactions {
        Some(min) => {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for (u, _) in &target.pairs {
                *counts.entry(u.as_str()).or_insert(0) += 1;
            }
            counts
                .into_iter()
                .filter(|&(_, c)| c < min)
                .map(|(u, _)| u.to_owned())
                .collect()
        }
        None => HashSet::new(),
    };

    let mut users = IdMap::default();
    let mut target_items = IdMap::default();
    let mut source_items_map = IdMap::default();

    let mut target_pairs: Vec<(u32, u32)> = Vec::new();
    for (u, i) in &target.pairs {
        if dropped_users.contains(u) {
            continue;
        }
        target_pairs.push((users.intern(u), target_items.intern(i)));
    }
    if target_pairs.is_empty() {
        return Err(Error::Config(
            "no target interactions left after filtering".into(),
        ));
    }
    let mut source_pairs: Vec<(u32, u32)> = Vec::new();
    for (u, j) in &source.pairs {
        if dropped_users.contains(u) {
            continue;
        }
        source_pairs.push((users.intern(u), source_items_map.intern(j)));
    }

    let num_users = users.to_raw.len();
    let num_target_items = target_items.to_raw.len();
    let num_source_items = source_items_map.to_raw.len().max(1);

    // Per-user item lists in file order, then the leave-one-out split.
    let mut per_user: Vec<Vec<u32>> = vec![Vec::new(); num_users];
    for &(u, i) in &target_pairs {
        per_user[u as usize].push(i);
    }
    let mut split_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 101, 0));
    let split = loo_split(&per_user, &mut split_rng);

    let mut source_lists: Vec<Vec<u32>> = vec![Vec::new(); num_users];
    for &(u, j) in &source_pairs {
        source_lists[u as usize].push(j);
    }

    // Vocabulary over every document text, then encoding.
    let stopwords: HashSet<String> = match &raw.stopwords {
        Some(p) => read_lines(p)?
            .into_iter()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect(),
        None => HashSet::new(),
    };
    let doc_lines = match &raw.documents {
        Some(p) => parse_documents(p)?,
        None => Vec::new(),
    };
    let mut vocab = Vocabulary::default();
    if !doc_lines.is_empty() {
        let texts: Vec<String> = doc_lines
            .iter()
            .map(|l| match l {
                DocLine::Pair(_, _, t) | DocLine::Item(_, t) => t.clone(),
            })
            .collect();
        vocab = build_vocabulary(&texts, opts.vocab_size, &stopwords)?;
    }

    let mut pair_docs: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut native_item_docs: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut skipped_doc_lines = 0usize;
    for line in &doc_lines {
        match line {
            DocLine::Pair(u, i, text) => match (users.get(u), target_items.get(i)) {
                (Some(du), Some(di)) => {
                    let enc = encode_document(text, &vocab, opts.max_doc_len);
                    if !enc.is_empty() {
                        pair_docs.insert((du, di), enc);
                    }
                }
                _ => skipped_doc_lines += 1,
            },
            DocLine::Item(i, text) => match target_items.get(i) {
                Some(di) => {
                    let enc = encode_document(text, &vocab, opts.max_doc_len);
                    if !enc.is_empty() {
                        native_item_docs.insert(di, enc);
                    }
                }
                None => skipped_doc_lines += 1,
            },
        }
    }

    // Item-level documents: native when provided; otherwise the item's
    // train-pair documents concatenated in interaction order. Validation and
    // test documents never leak into the aggregate.
    let train_set: HashSet<(u32, u32)> = split.train.iter().copied().collect();
    let mut item_docs: Vec<Vec<u32>> = vec![Vec::new(); num_target_items];
    for (i, doc) in &native_item_docs {
        item_docs[*i as usize] = doc.clone();
    }
    for &(u, i) in &target_pairs {
        if native_item_docs.contains_key(&i) || !train_set.contains(&(u, i)) {
            continue;
        }
        if let Some(doc) = pair_docs.get(&(u, i)) {
            let slot = &mut item_docs[i as usize];
            if slot.len() < opts.max_doc_len {
                let room = opts.max_doc_len - slot.len();
                slot.extend(doc.iter().take(room));
            }
        }
    }

    let mut user_positive: Vec<HashSet<u32>> = vec![HashSet::new(); num_users];
    for &(u, i) in split.train.iter().chain(&split.val).chain(&split.test) {
        user_positive[u as usize].insert(i);
    }
    let mut train_counts = vec![0usize; num_users];
    for &(u, _) in &split.train {
        train_counts[u as usize] += 1;
    }

    Ok(Dataset {
        num_users,
        num_target_items,
        num_source_items,
        max_doc_len: opts.max_doc_len,
        vocab,
        train: split.train,
        val: split.val,
        test: split.test,
        user_positive,
        train_counts,
        source_items: source_lists,
        pair_docs,
        item_docs,
        user_ids: users.to_raw,
        target_item_ids: target_items.to_raw,
        source_item_ids: source_items_map.to_raw,
        skipped_doc_lines,
    })
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(content.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn join_ids(ids: &[u32]) -> String {
    ids.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl Dataset {
    /// Persist the prepared dataset into `dir` as deterministic TSV/KV
    /// files; `load` reverses this exactly.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = format!(
            "num_users={}\nnum_target_items={}\nnum_source_items={}\nmax_doc_len={}\nskipped_doc_lines={}\n",
            self.num_users,
            self.num_target_items,
            self.num_source_items,
            self.max_doc_len,
            self.skipped_doc_lines,
        );
        write_file(&dir.join("dataset.kv"), &meta)?;

        for (name, ids) in [
            ("user_map.tsv", &self.user_ids),
            ("item_map_target.tsv", &self.target_item_ids),
            ("item_map_source.tsv", &self.source_item_ids),
        ] {
            let mut s = String::new();
            for (dense, raw) in ids.iter().enumerate() {
                s.push_str(&format!("{dense}\t{raw}\n"));
            }
            write_file(&dir.join(name), &s)?;
        }

        let mut vs = String::new();
        for (id, (token, score)) in self.vocab.rows().enumerate() {
            vs.push_str(&format!("{id}\t{token}\t{score:?}\n"));
        }
        write_file(&dir.join("vocab.tsv"), &vs)?;

        for (name, pairs) in [
            ("train.tsv", &self.train),
            ("val.tsv", &self.val),
            ("test.tsv", &self.test),
        ] {
            let mut s = String::new();
            for &(u, i) in pairs.iter() {
                s.push_str(&format!("{u}\t{i}\n"));
            }
            write_file(&dir.join(name), &s)?;
        }

        let mut src = String::new();
        for (u, items) in self.source_items.iter().enumerate() {
            for &j in items {
                src.push_str(&format!("{u}\t{j}\n"));
            }
        }
        write_file(&dir.join("source.tsv"), &src)?;

        let mut keys: Vec<&(u32, u32)> = self.pair_docs.keys().collect();
        keys.sort();
        let mut pd = String::new();
        for &(u, i) in keys {
            pd.push_str(&format!("{u}\t{i}\t{}\n", join_ids(&self.pair_docs[&(u, i)])));
        }
        write_file(&dir.join("pair_docs.tsv"), &pd)?;

        let mut id_docs = String::new();
        for (i, doc) in self.item_docs.iter().enumerate() {
            if !doc.is_empty() {
                id_docs.push_str(&format!("{i}\t{}\n", join_ids(doc)));
            }
        }
        write_file(&dir.join("item_docs.tsv"), &id_docs)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let parse_err = |path: &Path, line: usize, detail: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            detail,
        };

        let meta_path = dir.join("dataset.kv");
        let mut meta: HashMap<String, String> = HashMap::new();
        for line in read_lines(&meta_path)? {
            if let Some((k, v)) = line.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        }
        let get_meta = |key: &str| -> Result<usize> {
            meta.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(&meta_path, 0, format!("missing key {key}")))
        };
        let num_users = get_meta("num_users")?;
        let num_target_items = get_meta("num_target_items")?;
        let num_source_items = get_meta("num_source_items")?;
        let max_doc_len = get_meta("max_doc_len")?;
        let skipped_doc_lines = get_meta("skipped_doc_lines")?;

        let read_map = |name: &str| -> Result<Vec<String>> {
            let path = dir.join(name);
            let mut out = Vec::new();
            for (ln, line) in read_lines(&path)?.into_iter().enumerate() {
                let (_, raw) = line
                    .split_once('\t')
                    .ok_or_else(|| parse_err(&path, ln + 1, "expected dense\traw".into()))?;
                out.push(raw.to_string());
            }
            Ok(out)
        };
        let user_ids = read_map("user_map.tsv")?;
        let target_item_ids = read_map("item_map_target.tsv")?;
        let source_item_ids = read_map("item_map_source.tsv")?;

        let vocab_path = dir.join("vocab.tsv");
        let mut rows = Vec::new();
        for (ln, line) in read_lines(&vocab_path)?.into_iter().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(&vocab_path, ln + 1, "expected id\ttoken\tscore".into()));
            }
            let score: f64 = fields[2]
                .parse()
                .map_err(|e| parse_err(&vocab_path, ln + 1, format!("bad score: {e}")))?;
            rows.push((fields[1].to_string(), score));
        }
        let vocab = Vocabulary::from_rows(rows);

        let read_pairs = |name: &str| -> Result<Vec<(u32, u32)>> {
            let path = dir.join(name);
            let mut out = Vec::new();
            for (ln, line) in read_lines(&path)?.into_iter().enumerate() {
                let (u, i) = line
                    .split_once('\t')
                    .ok_or_else(|| parse_err(&path, ln + 1, "expected u\ti".into()))?;
                let u: u32 = u
                    .parse()
                    .map_err(|e| parse_err(&path, ln + 1, format!("bad user: {e}")))?;
                let i: u32 = i
                    .parse()
                    .map_err(|e| parse_err(&path, ln + 1, format!("bad item: {e}")))?;
                out.push((u, i));
            }
            Ok(out)
        };
        let train = read_pairs("train.tsv")?;
        let val = read_pairs("val.tsv")?;
        let test = read_pairs("test.tsv")?;

        let mut source_items: Vec<Vec<u32>> = vec![Vec::new(); num_users];
        for (u, j) in read_pairs("source.tsv")? {
            source_items[u as usize].push(j);
        }

        let parse_doc = |s: &str| -> Vec<u32> {
            s.split_whitespace()
                .filter_map(|t| t.parse().ok())
                .collect()
        };
        let pair_path = dir.join("pair_docs.tsv");
        let mut pair_docs = HashMap::new();
        for (ln, line) in read_lines(&pair_path)?.into_iter().enumerate() {
            let fields: Vec<&str> = line.splitn(3, '\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(&pair_path, ln + 1, "expected u\ti\tids".into()));
            }
            let u: u32 = fields[0]
                .parse()
                .map_err(|e| parse_err(&pair_path, ln + 1, format!("bad user: {e}")))?;
            let i: u32 = fields[1]
                .parse()
                .map_err(|e| parse_err(&pair_path, ln + 1, format!("bad item: {e}")))?;
            pair_docs.insert((u, i), parse_doc(fields[2]));
        }

        let item_path = dir.join("item_docs.tsv");
        let mut item_docs: Vec<Vec<u32>> = vec![Vec::new(); num_target_items];
        for (ln, line) in read_lines(&item_path)?.into_iter().enumerate() {
            let (i, ids) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(&item_path, ln + 1, "expected i\tids".into()))?;
            let i: usize = i
                .parse()
                .map_err(|e| parse_err(&item_path, ln + 1, format!("bad item: {e}")))?;
            item_docs[i] = parse_doc(ids);
        }

        let mut user_positive: Vec<HashSet<u32>> = vec![HashSet::new(); num_users];
        for &(u, i) in train.iter().chain(&val).chain(&test) {
            user_positive[u as usize].insert(i);
        }
        let mut train_counts = vec![0usize; num_users];
        for &(u, _) in &train {
            train_counts[u as usize] += 1;
        }

        Ok(Dataset {
            num_users,
            num_target_items,
            num_source_items,
            max_doc_len,
            vocab,
            train,
            val,
            test,
            user_positive,
            train_counts,
            source_items,
            pair_docs,
            item_docs,
            user_ids,
            target_item_ids,
            source_item_ids,
            skipped_doc_lines,
        })
    }
}
