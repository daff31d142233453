//! Shared pieces of the object-model generators: data-file types and
//! sampling helpers over [`SplitMix64`].

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::policy::AttrValue;
use crate::rng::SplitMix64;

/// Relative weights keyed by outcome. Keys are visited in sorted order, so
/// draws do not depend on file layout.
#[derive(Debug, Clone, Deserialize)]
#[serde(transparent)]
pub(crate) struct Weights(BTreeMap<String, u64>);

impl Weights {
    pub(crate) fn draw(&self, rng: &mut SplitMix64) -> &str {
        let weights: Vec<u64> = self.0.values().copied().collect();
        let i = rng.weighted(&weights);
        self.0.keys().nth(i).expect("index in range")
    }

    /// Draws a key and splits it on spaces into a value set.
    pub(crate) fn draw_set(&self, rng: &mut SplitMix64) -> BTreeSet<String> {
        self.draw(rng).split_whitespace().map(str::to_string).collect()
    }
}

/// Inclusive `[lo, hi]` range.
#[derive(Debug, Clone, Copy, Deserialize)]
pub(crate) struct Span(pub usize, pub usize);

impl Span {
    pub(crate) fn draw(self, rng: &mut SplitMix64) -> usize {
        rng.range_inclusive(self.0 as u64, self.1 as u64) as usize
    }
}

pub(crate) fn atom(s: impl Into<String>) -> AttrValue {
    AttrValue::Atomic(s.into())
}

pub(crate) fn set_of<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> AttrValue {
    AttrValue::Set(items.into_iter().map(Into::into).collect())
}

/// Up to `k` distinct elements of `pool`, in draw order.
pub(crate) fn pick_distinct<'a, T>(rng: &mut SplitMix64, pool: &'a [T], k: usize) -> Vec<&'a T> {
    let k = k.min(pool.len());
    rng.sample_indices(pool.len(), k)
        .into_iter()
        .map(|i| &pool[i])
        .collect()
}

pub(crate) fn pick<'a, T>(rng: &mut SplitMix64, pool: &'a [T]) -> Option<&'a T> {
    if pool.is_empty() {
        None
    } else {
        Some(&pool[rng.index(pool.len())])
    }
}
