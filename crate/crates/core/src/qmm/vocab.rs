use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::Session;
use crate::{Error, Result};

pub const DEFAULT_MIN_DF: u32 = 3;
pub const DEFAULT_MAX_SIZE: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub query: String,
    /// Number of training sessions containing the query.
    pub df: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyRepr {
    min_df: u32,
    max_size: usize,
    entries: Vec<VocabEntry>,
}

/// Query-to-feature mapping, ordered by descending df then query text.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    min_df: u32,
    max_size: usize,
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.min_df == other.min_df
            && self.max_size == other.max_size
            && self.entries == other.entries
    }
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_entries(
            r.entries.into_iter().map(|e| (e.query, e.df)).collect(),
            r.min_df,
            r.max_size,
        )
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            min_df: v.min_df,
            max_size: v.max_size,
            entries: v.entries,
        }
    }
}

impl Vocabulary {
    /// Applies the df threshold, canonical ordering and size cap to
    /// `(query, df)` pairs. Duplicate queries keep their largest df.
    pub fn from_entries(entries: Vec<(String, u32)>, min_df: u32, max_size: usize) -> Self {
        let mut best: BTreeMap<String, u32> = BTreeMap::new();
        for (q, df) in entries {
            let slot = best.entry(q).or_insert(0);
            *slot = (*slot).max(df);
        }
        let mut entries: Vec<VocabEntry> = best
            .into_iter()
            .filter(|(_, df)| *df >= min_df)
            .map(|(query, df)| VocabEntry { query, df })
            .collect();
        entries.sort_by(|a, b| b.df.cmp(&a.df).then_with(|| a.query.cmp(&b.query)));
        entries.truncate(max_size);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.query.clone(), i))
            .collect();
        Vocabulary {
            min_df,
            max_size,
            entries,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn min_df(&self) -> u32 {
        self.min_df
    }

    pub fn get(&self, query: &str) -> Option<usize> {
        self.index.get(query).copied()
    }

    /// Sorted, deduplicated feature indices of the in-vocabulary queries.
    pub fn encode<'a>(&self, queries: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        let mut idx: Vec<u32> = queries
            .into_iter()
            .filter_map(|q| self.get(q))
            .map(|i| i as u32)
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// Document frequencies over `sessions`, which must be training sessions only.
pub fn build_vocabulary(sessions: &[&Session], min_df: u32, max_size: usize) -> Result<Vocabulary> {
    if sessions.is_empty() {
        return Err(Error::InsufficientData(
            "cannot build a vocabulary from zero training sessions".into(),
        ));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for s in sessions {
        for q in &s.queries {
            *df.entry(q.as_str()).or_insert(0) += 1;
        }
    }
    Ok(Vocabulary::from_entries(
        df.into_iter().map(|(q, n)| (q.to_string(), n)).collect(),
        min_df,
        max_size,
    ))
}
