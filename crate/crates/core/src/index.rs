//! MinHash signatures and banded LSH over 5-token shingles.
//!
//! Defaults: k = 256 slots, b = 128 bands of r = 2 rows. The band
//! S-curve threshold (1/b)^(1/r) is about 0.088, so LSH only proposes
//! candidates; exact shingle Jaccard makes the final call.
//!
//! Slot `i` hashes a shingle as `fmix64(h(shingle) ^ key_i)`, where `h` is
//! FNV-1a over the shingle's tokens and `key_i` is the i-th output of a
//! splitmix64 stream seeded with the index seed.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{tokenize, TokenSequence};
use crate::similarity::{jaccard_5gram, shingles};
use crate::snippet::FunctionSnippet;

pub const DEFAULT_SEED: u64 = 0x5EED_11C0;
pub const DEFAULT_UNSEEN_THRESHOLD: f64 = 0.2;
const CACHE_MAGIC: &[u8; 8] = b"LKLSH\0\0\x01";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("signature seed {found} does not match index seed {expected}")]
    SeedMismatch { expected: u64, found: u64 },
    #[error("signature has {found} slots, index expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid LSH parameters: k = {k}, b = {bands}, r = {rows}")]
    BadParams { k: usize, bands: usize, rows: usize },
    #[error("index cache {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("index cache {path} is corrupt: {reason}")]
    Corrupt { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LshParams {
    pub k: usize,
    pub bands: usize,
    pub rows: usize,
}

impl Default for LshParams {
    fn default() -> Self {
        Self {
            k: 256,
            bands: 128,
            rows: 2,
        }
    }
}

impl LshParams {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.k == 0 || self.bands * self.rows != self.k {
            return Err(IndexError::BadParams {
                k: self.k,
                bands: self.bands,
                rows: self.rows,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
    pub shingle_count: usize,
    pub seed: u64,
    /// No shingles; every slot holds `u64::MAX`.
    pub empty: bool,
}

impl MinHashSignature {
    /// Fraction of equal slots, the MinHash estimate of Jaccard.
    pub fn estimate_jaccard(&self, other: &MinHashSignature) -> f64 {
        let n = self.values.len().min(other.values.len());
        if n == 0 {
            return 0.0;
        }
        let same = self.values.iter().zip(&other.values).filter(|(a, b)| a == b).count();
        same as f64 / n as f64
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    x ^= x >> 33;
    x = x.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    x ^ (x >> 33)
}

fn fnv1a(tokens: &[String]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for t in tokens {
        for &b in t.as_bytes().iter().chain(std::iter::once(&0xFF)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h
}

fn slot_keys(seed: u64, k: usize) -> Vec<u64> {
    let mut state = seed;
    (0..k).map(|_| splitmix64(&mut state)).collect()
}

pub fn minhash_signature(tokens: &TokenSequence, seed: u64) -> MinHashSignature {
    minhash_signature_k(tokens, seed, LshParams::default().k)
}

pub fn minhash_signature_k(tokens: &TokenSequence, seed: u64, k: usize) -> MinHashSignature {
    let hashes: Vec<u64> = shingles(tokens).into_iter().map(fnv1a).collect();
    let keys = slot_keys(seed, k);
    let values = keys
        .iter()
        .map(|&key| hashes.iter().map(|&h| fmix64(h ^ key)).min().unwrap_or(u64::MAX))
        .collect();
    MinHashSignature {
        values,
        shingle_count: hashes.len(),
        seed,
        empty: hashes.is_empty(),
    }
}

/// Banded LSH table. Query results do not depend on insertion order.
#[derive(Debug, Clone)]
pub struct LshIndex {
    params: LshParams,
    seed: u64,
    ids: Vec<String>,
    signatures: Vec<MinHashSignature>,
    bands: Vec<HashMap<u64, Vec<u32>>>,
}

impl LshIndex {
    pub fn new(params: LshParams, seed: u64) -> Result<Self, IndexError> {
        params.validate()?;
        Ok(Self {
            params,
            seed,
            ids: Vec::new(),
            signatures: Vec::new(),
            bands: vec![HashMap::new(); params.bands],
        })
    }

    pub fn params(&self) -> LshParams {
        self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn check(&self, sig: &MinHashSignature) -> Result<(), IndexError> {
        if sig.seed != self.seed {
            return Err(IndexError::SeedMismatch {
                expected: self.seed,
                found: sig.seed,
            });
        }
        if sig.values.len() != self.params.k {
            return Err(IndexError::LengthMismatch {
                expected: self.params.k,
                found: sig.values.len(),
            });
        }
        Ok(())
    }

    fn band_keys<'a>(&'a self, sig: &'a MinHashSignature) -> impl Iterator<Item = u64> + 'a {
        sig.values.chunks(self.params.rows).map(|rows| {
            rows.iter()
                .fold(0x243F_6A88_85A3_08D3u64, |acc, &v| fmix64(acc ^ v))
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, sig: MinHashSignature) -> Result<(), IndexError> {
        self.check(&sig)?;
        let pos = self.ids.len() as u32;
        let keys: Vec<u64> = self.band_keys(&sig).collect();
        for (band, key) in self.bands.iter_mut().zip(keys) {
            band.entry(key).or_default().push(pos);
        }
        self.ids.push(id.into());
        self.signatures.push(sig);
        Ok(())
    }

    /// Ids sharing at least one band bucket with `sig`.
    pub fn query(&self, sig: &MinHashSignature) -> Result<BTreeSet<String>, IndexError> {
        self.query_excluding(sig, None)
    }

    pub fn query_excluding(
        &self,
        sig: &MinHashSignature,
        exclude: Option<&str>,
    ) -> Result<BTreeSet<String>, IndexError> {
        self.check(sig)?;
        let mut out = BTreeSet::new();
        for (band, key) in self.bands.iter().zip(self.band_keys(sig)) {
            if let Some(bucket) = band.get(&key) {
                for &pos in bucket {
                    let id = &self.ids[pos as usize];
                    if Some(id.as_str()) != exclude {
                        out.insert(id.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn save_cache(&self, path: &Path) -> Result<(), IndexError> {
        let io = |source| IndexError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let mut put = |bytes: &[u8]| w.write_all(bytes);
        (|| -> std::io::Result<()> {
            put(CACHE_MAGIC)?;
            for v in [self.params.k, self.params.bands, self.params.rows] {
                put(&(v as u64).to_le_bytes())?;
            }
            put(&self.seed.to_le_bytes())?;
            put(&(self.ids.len() as u64).to_le_bytes())?;
            for (id, sig) in self.ids.iter().zip(&self.signatures) {
                put(&(id.len() as u64).to_le_bytes())?;
                put(id.as_bytes())?;
                put(&(sig.shingle_count as u64).to_le_bytes())?;
                for v in &sig.values {
                    put(&v.to_le_bytes())?;
                }
            }
            Ok(())
        })()
        .map_err(io)?;
        w.flush().map_err(io)
    }

    /// Loads a cache written by [`LshIndex::save_cache`]. Returns `Ok(None)`
    /// when the file was built with different parameters or seed.
    pub fn load_cache(path: &Path, params: LshParams, seed: u64) -> Result<Option<Self>, IndexError> {
        let name = path.display().to_string();
        let file = File::open(path).map_err(|source| IndexError::Io {
            path: name.clone(),
            source,
        })?;
        let mut r = BufReader::new(file);
        let corrupt = |reason: &str| IndexError::Corrupt {
            path: name.clone(),
            reason: reason.to_string(),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
        if &magic != CACHE_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let read_u64 = |r: &mut BufReader<File>| -> Result<u64, IndexError> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| corrupt("truncated"))?;
            Ok(u64::from_le_bytes(b))
        };
        let stored = LshParams {
            k: read_u64(&mut r)? as usize,
            bands: read_u64(&mut r)? as usize,
            rows: read_u64(&mut r)? as usize,
        };
        let stored_seed = read_u64(&mut r)?;
        if stored != params || stored_seed != seed {
            return Ok(None);
        }
        let mut index = LshIndex::new(params, seed)?;
        let n = read_u64(&mut r)?;
        for _ in 0..n {
            let len = read_u64(&mut r)? as usize;
            let mut id = vec![0u8; len];
            r.read_exact(&mut id).map_err(|_| corrupt("truncated id"))?;
            let id = String::from_utf8(id).map_err(|_| corrupt("id is not UTF-8"))?;
            let shingle_count = read_u64(&mut r)? as usize;
            let values = (0..params.k)
                .map(|_| read_u64(&mut r))
                .collect::<Result<Vec<_>, _>>()?;
            index.insert(
                id,
                MinHashSignature {
                    values,
                    shingle_count,
                    seed,
                    empty: shingle_count == 0,
                },
            )?;
        }
        Ok(Some(index))
    }
}

/// Builds an index from `(id, signature)` pairs. All signatures must
/// share a seed and slot count.
pub fn build_lsh_index(
    signatures: impl IntoIterator<Item = (String, MinHashSignature)>,
) -> Result<LshIndex, IndexError> {
    let mut iter = signatures.into_iter().peekable();
    let (seed, k) = match iter.peek() {
        Some((_, s)) => (s.seed, s.values.len()),
        None => (DEFAULT_SEED, LshParams::default().k),
    };
    let params = if k == LshParams::default().k {
        LshParams::default()
    } else {
        LshParams {
            k,
            bands: k / 2,
            rows: 2,
        }
    };
    let mut index = LshIndex::new(params, seed)?;
    for (id, sig) in iter {
        index.insert(id, sig)?;
    }
    Ok(index)
}

/// Code tokens a snippet is indexed and compared on: signature, docstring
/// and body.
pub fn snippet_tokens(snippet: &FunctionSnippet) -> TokenSequence {
    tokenize(&snippet.definition_text())
}

/// LSH index plus the token sequences needed for exact Jaccard checks.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    lsh: LshIndex,
    tokens: HashMap<String, TokenSequence>,
}

impl CorpusIndex {
    pub fn build(items: Vec<(String, TokenSequence)>, seed: u64) -> Result<Self, IndexError> {
        let sigs: Vec<MinHashSignature> = items
            .par_iter()
            .map(|(_, t)| minhash_signature(t, seed))
            .collect();
        let mut lsh = LshIndex::new(LshParams::default(), seed)?;
        let mut tokens = HashMap::with_capacity(items.len());
        for ((id, toks), sig) in items.into_iter().zip(sigs) {
            lsh.insert(id.clone(), sig)?;
            tokens.insert(id, toks);
        }
        Ok(Self { lsh, tokens })
    }

    pub fn new(seed: u64) -> Result<Self, IndexError> {
        Ok(Self {
            lsh: LshIndex::new(LshParams::default(), seed)?,
            tokens: HashMap::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, tokens: TokenSequence) -> Result<(), IndexError> {
        let id = id.into();
        self.lsh.insert(id.clone(), minhash_signature(&tokens, self.lsh.seed))?;
        self.tokens.insert(id, tokens);
        Ok(())
    }

    pub fn from_snippets(snippets: &[FunctionSnippet], seed: u64) -> Result<Self, IndexError> {
        let items = snippets
            .par_iter()
            .map(|s| (s.id.clone(), snippet_tokens(s)))
            .collect();
        Self::build(items, seed)
    }

    pub fn lsh(&self) -> &LshIndex {
        &self.lsh
    }

    pub fn seed(&self) -> u64 {
        self.lsh.seed
    }

    pub fn len(&self) -> usize {
        self.lsh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lsh.is_empty()
    }

    /// Highest exact Jaccard between `tokens` and any LSH candidate, with
    /// the candidate id.
    pub fn best_match(
        &self,
        tokens: &TokenSequence,
        exclude: Option<&str>,
    ) -> Result<Option<(String, f64)>, IndexError> {
        let sig = minhash_signature(tokens, self.lsh.seed);
        let mut best: Option<(String, f64)> = None;
        for id in self.lsh.query_excluding(&sig, exclude)? {
            let j = jaccard_5gram(tokens, &self.tokens[&id]);
            if best.as_ref().map_or(true, |(_, b)| j > *b) {
                best = Some((id, j));
            }
        }
        Ok(best)
    }
}

/// Keeps candidates whose every LSH match in `index` has exact 5-gram
/// Jaccard at most `threshold`. Order is preserved.
pub fn filter_unseen(
    candidates: Vec<FunctionSnippet>,
    index: &CorpusIndex,
    threshold: f64,
) -> Result<Vec<FunctionSnippet>, IndexError> {
    let keep: Vec<bool> = candidates
        .par_iter()
        .map(|c| {
            index
                .best_match(&snippet_tokens(c), None)
                .map(|m| m.map_or(true, |(_, j)| j <= threshold))
        })
        .collect::<Result<_, _>>()?;
    Ok(candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect())
}
