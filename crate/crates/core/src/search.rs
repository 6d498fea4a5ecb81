//! Family enumeration over pools of square-free integers, and the two-prime
//! audit sweep.
//!
//! Subsets are processed in lexicographic order in fixed-size chunks; each
//! chunk is evaluated in parallel and then emitted in order, so the stream
//! does not depend on the thread count.

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{
    check_theorem1_with, corollary1_check_with, Corollary1Report, CorollaryError, Family, Verdict,
};
use crate::ntheory::{
    is_prime, legendre_unchecked, make_squarefree, LegendreSource, SquareFreeInt,
};
use crate::EngineConfig;

pub const MAX_POOL_BOUND: u64 = 10_000;
pub const MIN_SEARCH_N: usize = 3;
pub const MAX_SEARCH_N: usize = 8;

const CHUNK: usize = 2048;

/// Legendre symbols memoised by `(a, p)`, shared across worker threads.
#[derive(Debug, Default)]
pub struct LegendreCache {
    map: DashMap<(i64, u64), i8>,
}

impl LegendreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl LegendreSource for LegendreCache {
    fn legendre(&self, a: i64, p: u64) -> i8 {
        if let Some(v) = self.map.get(&(a, p)) {
            return *v;
        }
        *self
            .map
            .entry((a, p))
            .or_insert_with(|| legendre_unchecked(a as i128, p))
    }
}

/// All square-free `v` outside {0, 1} with `|v| <= bound`, ordered by `|v|`
/// with the positive value first. `-1` leads when negatives are allowed.
pub fn enumerate_squarefree(bound: u64, allow_negative: bool) -> Vec<SquareFreeInt> {
    let bound = bound.min(MAX_POOL_BOUND) as i64;
    let mut out = Vec::new();
    for m in 1..=bound {
        for v in [m, -m] {
            if v < 0 && !allow_negative {
                continue;
            }
            if let Ok(s) = make_squarefree(v) {
                out.push(s);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictFilter {
    Certificate,
    Counterexample,
    All,
}

impl VerdictFilter {
    fn accepts(self, v: &Verdict) -> bool {
        match self {
            VerdictFilter::All => true,
            VerdictFilter::Certificate => v.is_certificate(),
            VerdictFilter::Counterexample => !v.is_certificate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub pool_bound: u64,
    pub allow_negative: bool,
    pub n: usize,
    pub max_results: usize,
    pub require_verdict: VerdictFilter,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("pool bound {0} exceeds 10000")]
    PoolTooLarge(u64),
    #[error("family size {0} outside 3..=8")]
    BadSize(usize),
}

impl SearchQuery {
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.pool_bound > MAX_POOL_BOUND {
            return Err(QueryError::PoolTooLarge(self.pool_bound));
        }
        if !(MIN_SEARCH_N..=MAX_SEARCH_N).contains(&self.n) {
            return Err(QueryError::BadSize(self.n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub family: Family,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Lexicographic k-combinations of `0..n`.
#[derive(Debug, Clone)]
struct Combinations {
    idx: Vec<usize>,
    n: usize,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            idx: (0..k).collect(),
            n,
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        match (0..k).rev().find(|&i| self.idx[i] < self.n - k + i) {
            Some(i) => {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// Stream of `(family, verdict)` pairs for a query. Families whose verdict
/// is inconclusive under the engine limits are skipped and counted.
pub struct FamilySearch<'a> {
    pool: Vec<SquareFreeInt>,
    combos: Combinations,
    filter: VerdictFilter,
    remaining: usize,
    buffer: std::vec::IntoIter<SearchHit>,
    config: EngineConfig,
    cache: &'a LegendreCache,
    inconclusive: usize,
}

impl FamilySearch<'_> {
    /// Families skipped so far because the witness prime search ran dry.
    pub fn inconclusive_skipped(&self) -> usize {
        self.inconclusive
    }

    fn refill(&mut self) -> bool {
        let batch: Vec<Vec<usize>> = self.combos.by_ref().take(CHUNK).collect();
        if batch.is_empty() {
            return false;
        }
        let (pool, config, cache, filter) = (&self.pool, &self.config, self.cache, self.filter);
        let results: Vec<Option<Option<SearchHit>>> = batch
            .par_iter()
            .map(|combo| {
                let family = Family::from_members(combo.iter().map(|&i| pool[i].clone()).collect());
                match check_theorem1_with(&family, config, cache) {
                    Ok(verdict) => Some(
                        filter
                            .accepts(&verdict)
                            .then_some(SearchHit { family, verdict }),
                    ),
                    Err(_) => None,
                }
            })
            .collect();
        let mut hits = Vec::new();
        for r in results {
            match r {
                Some(Some(hit)) => hits.push(hit),
                Some(None) => {}
                None => self.inconclusive += 1,
            }
        }
        self.buffer = hits.into_iter();
        true
    }
}

impl Iterator for FamilySearch<'_> {
    type Item = SearchHit;

    fn next(&mut self) -> Option<SearchHit> {
        if self.remaining == 0 {
            return None;
        }
        loop {
            if let Some(hit) = self.buffer.next() {
                self.remaining -= 1;
                return Some(hit);
            }
            if !self.refill() {
                return None;
            }
        }
    }
}

/// Runs the engine over every `n`-subset of the pool in lexicographic order.
pub fn search_families<'a>(
    query: &SearchQuery,
    config: &EngineConfig,
    cache: &'a LegendreCache,
) -> Result<FamilySearch<'a>, QueryError> {
    query.validate()?;
    let pool = enumerate_squarefree(query.pool_bound, query.allow_negative);
    Ok(search_pool(
        pool,
        query.n,
        query.max_results,
        query.require_verdict,
        config,
        cache,
    ))
}

/// Same as [`search_families`] over an explicit pool, kept in the given order.
pub fn search_pool<'a>(
    pool: Vec<SquareFreeInt>,
    n: usize,
    max_results: usize,
    filter: VerdictFilter,
    config: &EngineConfig,
    cache: &'a LegendreCache,
) -> FamilySearch<'a> {
    let combos = Combinations::new(pool.len(), n);
    FamilySearch {
        pool,
        combos,
        filter,
        remaining: max_results,
        buffer: Vec::new().into_iter(),
        config: *config,
        cache,
        inconclusive: 0,
    }
}

/// Reports for every pair of odd primes `p < q <= prime_bound`.
pub fn corollary1_pairs(
    prime_bound: u64,
    config: &EngineConfig,
    cache: &LegendreCache,
) -> Result<Vec<Corollary1Report>, CorollaryError> {
    let primes: Vec<u64> = (3..=prime_bound.min(MAX_POOL_BOUND))
        .step_by(2)
        .filter(|&p| is_prime(p))
        .collect();
    let pairs: Vec<(u64, u64)> = primes
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| primes[i + 1..].iter().map(move |&q| (p, q)))
        .collect();
    pairs
        .par_iter()
        .map(|&(p, q)| corollary1_check_with(p, q, config, cache))
        .collect()
}
