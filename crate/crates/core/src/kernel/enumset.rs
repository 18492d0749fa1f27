//! Staged enumerable subsets of ℕ.
//!
//! An [`EnumSet`] presents a (possibly infinite) set of naturals through a
//! *stage* interface: stage 0, stage 1, ... each contribute a finite batch
//! of elements, and the set denoted is the union of every batch.  All
//! positive information flows through this interface — a consumer may
//! learn that `n` is **in** the set by forcing enough stages, but can never
//! learn that `n` is *out*.  That asymmetry is the whole point: it is the
//! positive-information (Scott) view of a set, and the graph model's
//! application is computable precisely because it only ever needs it.
//!
//! Two derived notions are fixed here because everything downstream
//! depends on them being canonical:
//!
//! * the **snapshot** `upto(s)`: all elements contributed by stages `≤ s`.
//!   Monotone and deterministic by construction (stages are folded into a
//!   cache exactly once, in order).
//! * the **canonical enumeration order**: elements sorted by (stage of
//!   first appearance, numeric value).  Dovetailed searches and displayed
//!   prefixes follow this order, which makes every run reproducible.
//!
//! Stage closures may force *other* `EnumSet`s (that is how derived sets
//! like an application result consult their inputs) but must never force
//! the set they themselves define — the cache lock is not re-entrant.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::kernel::fuel::Meter;
use crate::kernel::nat::Nat;

type StageFn = dyn Fn(u64) -> BTreeSet<Nat> + Send + Sync;

/// An enumerable set of naturals with a deterministic staged enumeration.
#[derive(Clone)]
pub struct EnumSet {
    inner: Arc<Inner>,
}

struct Inner {
    /// Batch of elements contributed at one stage.  Batches may overlap
    /// and need not be sorted across stages; the denoted set is their
    /// union.
    stage: Box<StageFn>,
    cache: Mutex<Cache>,
}

#[derive(Default)]
struct Cache {
    /// Stages `0..folded` have been folded into the cache.
    folded: u64,
    /// Every element seen so far, tagged with its first-appearance stage.
    first_seen: BTreeMap<Nat, u64>,
    /// Canonical enumeration order: ascending (first-appearance stage, value).
    order: Vec<Nat>,
}

impl EnumSet {
    /// Build a set from a stage function: `stage(s)` is the batch of
    /// elements contributed at stage `s`.
    pub fn from_stages<F>(stage: F) -> EnumSet
    where
        F: Fn(u64) -> BTreeSet<Nat> + Send + Sync + 'static,
    {
        EnumSet { inner: Arc::new(Inner { stage: Box::new(stage), cache: Mutex::default() }) }
    }

    /// A finite set, fully contributed at stage 0.
    pub fn finite<I: IntoIterator<Item = Nat>>(elems: I) -> EnumSet {
        let set: BTreeSet<Nat> = elems.into_iter().collect();
        EnumSet::from_stages(move |s| if s == 0 { set.clone() } else { BTreeSet::new() })
    }

    pub fn empty() -> EnumSet {
        EnumSet::finite([])
    }

    /// All of ℕ, one value per stage.
    pub fn naturals() -> EnumSet {
        EnumSet::from_stages(|s| [Nat::from(s)].into())
    }

    /// The set `{n | pred(n)}` of a decidable predicate, enumerated in
    /// numeric order (value `n` is examined at stage `n`).
    pub fn by_predicate<P>(pred: P) -> EnumSet
    where
        P: Fn(&Nat) -> bool + Send + Sync + 'static,
    {
        EnumSet::from_stages(move |s| {
            let n = Nat::from(s);
            if pred(&n) {
                [n].into()
            } else {
                BTreeSet::new()
            }
        })
    }

    /// Fold stages so that `0..=s` are all in the cache.
    fn force(&self, s: u64) {
        let mut cache = self.inner.cache.lock().expect("enumset cache poisoned");
        while cache.folded <= s {
            let t = cache.folded;
            let mut batch: Vec<Nat> = (self.inner.stage)(t)
                .into_iter()
                .filter(|x| !cache.first_seen.contains_key(x))
                .collect();
            batch.sort();
            for x in batch {
                cache.first_seen.insert(x.clone(), t);
                cache.order.push(x);
            }
            cache.folded = t + 1;
        }
    }

    /// Snapshot: all elements contributed by stages `≤ s`.
    pub fn upto(&self, s: u64) -> BTreeSet<Nat> {
        self.force(s);
        let cache = self.inner.cache.lock().expect("enumset cache poisoned");
        cache
            .first_seen
            .iter()
            .filter(|&(_, &t)| t <= s)
            .map(|(x, _)| x.clone())
            .collect()
    }

    /// The canonical enumeration order restricted to stages `≤ s`.
    pub fn ordered_upto(&self, s: u64) -> Vec<Nat> {
        self.force(s);
        let cache = self.inner.cache.lock().expect("enumset cache poisoned");
        cache
            .order
            .iter()
            .filter(|x| cache.first_seen[*x] <= s)
            .cloned()
            .collect()
    }

    /// The elements whose first appearance is exactly stage `s`, in value
    /// order — the canonical "news" of that stage.
    pub fn fresh_at(&self, s: u64) -> Vec<Nat> {
        self.force(s);
        let cache = self.inner.cache.lock().expect("enumset cache poisoned");
        cache
            .order
            .iter()
            .filter(|x| cache.first_seen[*x] == s)
            .cloned()
            .collect()
    }

    /// First `count` elements in canonical order, forcing no further than
    /// `stage_cap`.  May return fewer than `count`.  The result depends
    /// only on the arguments, not on how far the set happens to have been
    /// forced by earlier callers.
    pub fn first_n(&self, count: usize, stage_cap: u64) -> Vec<Nat> {
        let mut s = 0;
        loop {
            self.force(s);
            let cache = self.inner.cache.lock().expect("enumset cache poisoned");
            let avail: Vec<Nat> = cache
                .order
                .iter()
                .filter(|x| cache.first_seen[*x] <= s)
                .take(count)
                .cloned()
                .collect();
            if avail.len() >= count || s >= stage_cap {
                return avail;
            }
            // Skip ahead geometrically so sparse sets do not cost one lock
            // round-trip per empty stage.
            drop(cache);
            s = (s + 1).max(s * 2).min(stage_cap);
        }
    }

    /// Positive membership test: `true` means `x` appeared by stage `s`;
    /// `false` only means "not seen yet".
    pub fn member_semi(&self, x: &Nat, s: u64) -> bool {
        self.force(s);
        let cache = self.inner.cache.lock().expect("enumset cache poisoned");
        matches!(cache.first_seen.get(x), Some(&t) if t <= s)
    }

    /// Search for the first stage at which `x` appears, probing one stage
    /// per metered step up to the meter's search ceiling.  `Ok(None)`
    /// means "not seen within budget" — never "absent".
    pub fn first_appearance(&self, x: &Nat, meter: &Meter) -> Result<Option<u64>> {
        let limit = meter.search_stage_limit();
        for s in 0..=limit {
            meter.tick("stage search")?;
            if self.member_semi(x, s) {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// Union, staged pointwise: stage `s` contributes both sides' stage-`s`
    /// snapshots' news.
    pub fn union(&self, other: &EnumSet) -> EnumSet {
        let (a, b) = (self.clone(), other.clone());
        EnumSet::from_stages(move |s| {
            let mut out: BTreeSet<Nat> = a.fresh_at(s).into_iter().collect();
            out.extend(b.fresh_at(s));
            out
        })
    }

    /// Image under a function, staged pointwise.
    pub fn map<F>(&self, f: F) -> EnumSet
    where
        F: Fn(&Nat) -> Nat + Send + Sync + 'static,
    {
        let a = self.clone();
        EnumSet::from_stages(move |s| a.fresh_at(s).iter().map(&f).collect())
    }

    /// Partial image: keep and transform only the values `f` accepts.
    pub fn filter_map<F>(&self, f: F) -> EnumSet
    where
        F: Fn(&Nat) -> Option<Nat> + Send + Sync + 'static,
    {
        let a = self.clone();
        EnumSet::from_stages(move |s| a.fresh_at(s).iter().filter_map(&f).collect())
    }

    /// Number of distinct elements seen among stages `≤ s`.
    pub fn count_upto(&self, s: u64) -> usize {
        self.ordered_upto(s).len()
    }
}

impl fmt::Debug for EnumSet {
    /// Non-forcing peek at whatever the cache already holds.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cache = self.inner.cache.lock().expect("enumset cache poisoned");
        write!(f, "{{")?;
        for (i, x) in cache.order.iter().take(8).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        if cache.order.len() > 8 || cache.folded == 0 {
            write!(f, ", …")?;
        }
        write!(f, "}}@{}", cache.folded)
    }
}
