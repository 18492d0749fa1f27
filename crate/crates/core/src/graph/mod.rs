//! The enumeration model over sets of naturals.
//!
//! Elements are (staged enumerations of) subsets of ℕ.  Application is
//!
//! ```text
//! A ∘ B = { n | ∃m ([m,n] ∈ A and e_m ⊆ B) }
//! ```
//!
//! where `e_m` is the finite set coded by `m`.  It is computed by a fixed
//! dovetail: **stage `s` examines the first `s` enumerated pairs of `A` and
//! tests `e_m ⊆ B` against `B`'s stage-`s` snapshot.**  That schedule makes
//! the output prefix monotone in the stage and in both arguments, and gives
//! every output a canonical first-appearance stage, so independent runs
//! enumerate identical prefixes.
//!
//! The total continuous maps on this carrier are exactly the maps
//! determined by their action on finite sets; [`graph_of`] turns such an
//! action into the element `{[m,n] | n ∈ F(e_m)}`, and the `k`/`s`
//! combinators are built by *nesting* that construction (`k` is the graph
//! of `a ↦ graph of (b ↦ a)`, and so on).  Those literal graphs are
//! limit-faithful but expensive to enumerate deeply, so every element
//! carries up to three facets:
//!
//! * `view` — the honest staged enumeration (always present; the element
//!   *is* this set);
//! * `desc` — an exact finite description, when one is known (kept so
//!   oracles that need descriptions, and exact printing, can use it);
//! * `fun`  — a host-level application shortcut whose results agree with
//!   the view extensionally (micro agreement tests pin this down).
//!
//! `apply` prefers the `fun` facet and falls back to the literal dovetail
//! on views.  Pairs and sequences of elements additionally remember their
//! components, so protocol machinery can take them apart without losing
//! descriptions; the view-level codings (`[X,Y] = 2X ∪ (2Y+1)`, sequences
//! tagged by position) remain the ground truth the components must match.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{PcaError, Result};
use crate::kernel::backend::{unsupported_literal, HostFun, Literal, PcaBackend};
use crate::kernel::coding::{pair, set_decode, unpair};
use crate::kernel::desc::SetDesc;
use crate::kernel::enumset::EnumSet;
use crate::kernel::fuel::{Fuel, Meter};
use crate::kernel::nat::Nat;

// ---------------------------------------------------------------------------
// Application and graphs
// ---------------------------------------------------------------------------

/// The dovetailed application `A ∘ B` as a staged enumeration.
pub fn gapply(a: &EnumSet, b: &EnumSet) -> EnumSet {
    struct Slot {
        need: BTreeSet<Nat>,
        out: Nat,
        emitted: bool,
    }
    let (a, b) = (a.clone(), b.clone());
    let slots: Mutex<Vec<Slot>> = Mutex::new(Vec::new());
    EnumSet::from_stages(move |s| {
        let order = a.ordered_upto(s);
        let examined = order.len().min(s as usize);
        let bset = b.upto(s);
        let mut slots = slots.lock().expect("gapply state poisoned");
        while slots.len() < examined {
            let z = &order[slots.len()];
            let (m, n) = unpair(z);
            slots.push(Slot {
                need: set_decode(&m),
                out: n,
                emitted: false,
            });
        }
        let mut batch = BTreeSet::new();
        for slot in slots.iter_mut().take(examined) {
            if !slot.emitted && slot.need.iter().all(|x| bset.contains(x)) {
                slot.emitted = true;
                batch.insert(slot.out.clone());
            }
        }
        batch
    })
}

/// A continuous map presented by its action on finite sets.  The action
/// must be monotone (`p ⊆ q` implies `at(p) ⊆ at(q)` extensionally) for
/// the graph to denote a function; the contract is spot-checked in tests,
/// not enforced.
#[derive(Clone)]
pub struct ContinuousMap {
    label: String,
    on_finite: FiniteMapFn,
}

/// Action of a continuous map on a finite-set argument.
type FiniteMapFn = Arc<dyn Fn(&BTreeSet<Nat>) -> EnumSet + Send + Sync>;

impl ContinuousMap {
    pub fn new<F>(label: impl Into<String>, on_finite: F) -> ContinuousMap
    where
        F: Fn(&BTreeSet<Nat>) -> EnumSet + Send + Sync + 'static,
    {
        ContinuousMap {
            label: label.into(),
            on_finite: Arc::new(on_finite),
        }
    }

    pub fn constant(label: impl Into<String>, value: EnumSet) -> ContinuousMap {
        ContinuousMap::new(label, move |_| value.clone())
    }

    pub fn identity() -> ContinuousMap {
        ContinuousMap::new("id", |p| EnumSet::finite(p.iter().cloned()))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn at(&self, p: &BTreeSet<Nat>) -> EnumSet {
        (self.on_finite)(p)
    }

    pub fn at_code(&self, m: u64) -> EnumSet {
        self.at(&set_decode(&Nat::from(m)))
    }
}

/// The element `{[m, n] | n ∈ F(e_m)}`.  Applying it recovers `F` in the
/// limit: `gapply(graph_of(F), B) = ⋃_{e_m ⊆ B} F(e_m)`.
pub fn graph_of(f: &ContinuousMap) -> EnumSet {
    let f = f.clone();
    let memo: Mutex<BTreeMap<u64, EnumSet>> = Mutex::new(BTreeMap::new());
    EnumSet::from_stages(move |s| {
        let mut memo = memo.lock().expect("graph_of memo poisoned");
        let mut batch = BTreeSet::new();
        for m in 0..=s {
            let mn = Nat::from(m);
            match memo.get(&m) {
                Some(fm) => {
                    for n in fm.fresh_at(s) {
                        batch.insert(pair(&mn, &n));
                    }
                }
                None => {
                    let fm = f.at_code(m);
                    for n in fm.upto(s) {
                        batch.insert(pair(&mn, &n));
                    }
                    memo.insert(m, fm);
                }
            }
        }
        batch
    })
}

/// Evidence that an output of `A ∘ B` depends only on finite parts of the
/// arguments: a single pair of `A` and the finite subset of `B` it needs.
#[derive(Clone, Debug)]
pub struct ContinuityWitness {
    pub pair_code: Nat,
    pub a0: BTreeSet<Nat>,
    pub b0: BTreeSet<Nat>,
    pub stage: u64,
}

/// Search the dovetail for a witness that `n ∈ A ∘ B`.
pub fn continuity_witness(
    a: &EnumSet,
    b: &EnumSet,
    n: &Nat,
    meter: &Meter,
) -> Result<Option<ContinuityWitness>> {
    for s in 0..=meter.search_stage_limit() {
        meter.tick("continuity witness scan")?;
        let order = a.ordered_upto(s);
        let bset = b.upto(s);
        for z in order.iter().take(s as usize) {
            let (m, out) = unpair(z);
            if &out == n {
                let need = set_decode(&m);
                if need.iter().all(|x| bset.contains(x)) {
                    return Ok(Some(ContinuityWitness {
                        pair_code: z.clone(),
                        a0: [z.clone()].into(),
                        b0: need,
                        stage: s,
                    }));
                }
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

struct GraphInner {
    label: String,
    view: EnumSet,
    desc: Option<SetDesc>,
    fun: Option<HostFun<GraphElem>>,
    pair_parts: Option<(GraphElem, GraphElem)>,
    seq_parts: Option<Vec<GraphElem>>,
}

/// One element of the enumeration model, with its facets.
#[derive(Clone)]
pub struct GraphElem {
    inner: Arc<GraphInner>,
}

impl GraphElem {
    fn build(
        label: impl Into<String>,
        view: EnumSet,
        desc: Option<SetDesc>,
        fun: Option<HostFun<GraphElem>>,
    ) -> GraphElem {
        GraphElem {
            inner: Arc::new(GraphInner {
                label: label.into(),
                view,
                desc,
                fun,
                pair_parts: None,
                seq_parts: None,
            }),
        }
    }

    pub fn from_enumset(label: impl Into<String>, view: EnumSet) -> GraphElem {
        GraphElem::build(label, view, None, None)
    }

    pub fn from_finite(set: &BTreeSet<Nat>) -> GraphElem {
        let desc = SetDesc::Fin(set.clone());
        GraphElem::build(desc.to_string(), EnumSet::finite(set.iter().cloned()), Some(desc), None)
    }

    pub fn from_desc(desc: &SetDesc) -> Result<GraphElem> {
        let view = desc.to_enumset()?;
        Ok(GraphElem::build(desc.to_string(), view, Some(desc.clone()), None))
    }

    pub fn with_fun(
        label: impl Into<String>,
        view: EnumSet,
        fun: HostFun<GraphElem>,
        desc: Option<SetDesc>,
    ) -> GraphElem {
        GraphElem::build(label, view, desc, Some(fun))
    }

    /// Attach an exact description to an existing element (the caller
    /// asserts extensional agreement; suites test it where it matters).
    pub fn describe(&self, desc: SetDesc) -> GraphElem {
        GraphElem {
            inner: Arc::new(GraphInner {
                label: desc.to_string(),
                view: self.inner.view.clone(),
                desc: Some(desc),
                fun: self.inner.fun.clone(),
                pair_parts: self.inner.pair_parts.clone(),
                seq_parts: self.inner.seq_parts.clone(),
            }),
        }
    }

    pub fn view(&self) -> &EnumSet {
        &self.inner.view
    }

    pub fn desc(&self) -> Option<&SetDesc> {
        self.inner.desc.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn has_fun(&self) -> bool {
        self.inner.fun.is_some()
    }
}

impl std::fmt::Debug for GraphElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GraphElem({})", self.inner.label)
    }
}

fn combo_label(a: &str, b: &str) -> String {
    let mut s = format!("({a} {b})");
    if s.len() > 64 {
        s.truncate(61);
        s.push_str("…)");
    }
    s
}

/// Application of elements: host shortcut when present, literal dovetail on
/// views otherwise.
pub fn apply_elems(a: &GraphElem, b: &GraphElem, meter: &Meter) -> Result<GraphElem> {
    meter.tick("graph apply")?;
    if let Some(f) = &a.inner.fun {
        return f(b, meter);
    }
    Ok(GraphElem::from_enumset(
        combo_label(a.label(), b.label()),
        gapply(a.view(), b.view()),
    ))
}

// ---------------------------------------------------------------------------
// The combinators, by nested graphs
// ---------------------------------------------------------------------------

fn finite_enum(p: &BTreeSet<Nat>) -> EnumSet {
    EnumSet::finite(p.iter().cloned())
}

fn k_literal_view() -> EnumSet {
    graph_of(&ContinuousMap::new("k", |p| {
        graph_of(&ContinuousMap::constant("k a", finite_enum(p)))
    }))
}

fn k_applied(a: &GraphElem) -> GraphElem {
    let captured = a.clone();
    let fun: HostFun<GraphElem> = Arc::new(move |_b, _meter| Ok(captured.clone()));
    GraphElem::with_fun(
        combo_label("k", a.label()),
        graph_of(&ContinuousMap::constant("k a", a.view().clone())),
        fun,
        None,
    )
}

fn make_k() -> GraphElem {
    let fun: HostFun<GraphElem> = Arc::new(move |a, _meter| Ok(k_applied(a)));
    GraphElem::with_fun("k", k_literal_view(), fun, None)
}

/// `{[m, n] | n ∈ (a ∘ e_m) ∘ (b ∘ e_m)}` — the graph of `c ↦ (a c)(b c)`.
fn s_ab_view(a: EnumSet, b: EnumSet) -> EnumSet {
    graph_of(&ContinuousMap::new("s a b", move |p| {
        let c = finite_enum(p);
        gapply(&gapply(&a, &c), &gapply(&b, &c))
    }))
}

fn s_a_view(a: EnumSet) -> EnumSet {
    graph_of(&ContinuousMap::new("s a", move |q| {
        s_ab_view(a.clone(), finite_enum(q))
    }))
}

fn s_literal_view() -> EnumSet {
    graph_of(&ContinuousMap::new("s", |p| s_a_view(finite_enum(p))))
}

fn s_applied_twice(a: &GraphElem, b: &GraphElem) -> GraphElem {
    let (ca, cb) = (a.clone(), b.clone());
    let fun: HostFun<GraphElem> = Arc::new(move |c, meter| {
        let ac = apply_elems(&ca, c, meter)?;
        let bc = apply_elems(&cb, c, meter)?;
        apply_elems(&ac, &bc, meter)
    });
    GraphElem::with_fun(
        combo_label(&combo_label("s", a.label()), b.label()),
        s_ab_view(a.view().clone(), b.view().clone()),
        fun,
        None,
    )
}

fn s_applied_once(a: &GraphElem) -> GraphElem {
    let ca = a.clone();
    let fun: HostFun<GraphElem> = Arc::new(move |b, _meter| Ok(s_applied_twice(&ca, b)));
    GraphElem::with_fun(
        combo_label("s", a.label()),
        s_a_view(a.view().clone()),
        fun,
        None,
    )
}

fn make_s() -> GraphElem {
    let fun: HostFun<GraphElem> = Arc::new(move |a, _meter| Ok(s_applied_once(a)));
    GraphElem::with_fun("s", s_literal_view(), fun, None)
}

// ---------------------------------------------------------------------------
// Backend
// ---------------------------------------------------------------------------

/// The enumeration model as a [`PcaBackend`].
pub struct GraphBackend {
    k: GraphElem,
    s: GraphElem,
    truth: OnceLock<GraphElem>,
    falsity: OnceLock<GraphElem>,
}

impl GraphBackend {
    pub fn new() -> GraphBackend {
        GraphBackend {
            k: make_k(),
            s: make_s(),
            truth: OnceLock::new(),
            falsity: OnceLock::new(),
        }
    }

    fn default_truth(&self) -> GraphElem {
        let meter = Fuel::DESK.meter();
        let kk = apply_elems(&self.k, &self.k, &meter).expect("k k");
        let skk = {
            let sk = apply_elems(&self.s, &self.k, &meter).expect("s k");
            apply_elems(&sk, &self.k, &meter).expect("s k k")
        };
        let skk_head = apply_elems(&self.s, &kk, &meter).expect("s (k k)");
        apply_elems(&skk_head, &skk, &meter).expect("s (k k) (s k k)")
    }

    fn default_falsity(&self) -> GraphElem {
        let meter = Fuel::DESK.meter();
        let sk = apply_elems(&self.s, &self.k, &meter).expect("s k");
        let skk = apply_elems(&sk, &self.k, &meter).expect("s k k");
        apply_elems(&self.k, &skk, &meter).expect("k (s k k)")
    }
}

impl Default for GraphBackend {
    fn default() -> Self {
        GraphBackend::new()
    }
}

impl PcaBackend for GraphBackend {
    type Elem = GraphElem;

    fn name(&self) -> &'static str {
        "graph"
    }

    fn apply(&self, a: &GraphElem, b: &GraphElem, meter: &Meter) -> Result<GraphElem> {
        apply_elems(a, b, meter)
    }

    fn k(&self) -> GraphElem {
        self.k.clone()
    }

    fn s(&self) -> GraphElem {
        self.s.clone()
    }

    fn truth(&self) -> GraphElem {
        self.truth.get_or_init(|| self.default_truth()).clone()
    }

    fn falsity(&self) -> GraphElem {
        self.falsity.get_or_init(|| self.default_falsity()).clone()
    }

    fn pair_elems(&self, a: &GraphElem, b: &GraphElem) -> Result<GraphElem> {
        let view = a
            .view()
            .map(|n| n.double())
            .union(&b.view().map(|n| n.double().succ()));
        let desc = match (a.desc(), b.desc()) {
            (Some(da), Some(db)) => Some(SetDesc::Union(
                Box::new(SetDesc::Double(Box::new(da.clone()))),
                Box::new(SetDesc::DoublePlusOne(Box::new(db.clone()))),
            )),
            _ => None,
        };
        Ok(GraphElem {
            inner: Arc::new(GraphInner {
                label: format!("[{},{}]", a.label(), b.label()),
                view,
                desc,
                fun: None,
                pair_parts: Some((a.clone(), b.clone())),
                seq_parts: None,
            }),
        })
    }

    fn unpair_elems(&self, e: &GraphElem) -> Result<(GraphElem, GraphElem)> {
        if let Some((a, b)) = &e.inner.pair_parts {
            return Ok((a.clone(), b.clone()));
        }
        let evens = e
            .view()
            .filter_map(|z| if z.is_even() { Some(z.half()) } else { None });
        let odds = e
            .view()
            .filter_map(|z| if z.is_even() { None } else { Some(z.half()) });
        Ok((
            GraphElem::from_enumset(format!("fst {}", e.label()), evens),
            GraphElem::from_enumset(format!("snd {}", e.label()), odds),
        ))
    }

    fn seq_elems(&self, xs: &[GraphElem]) -> Result<GraphElem> {
        let len = Nat::from(xs.len() as u64);
        let mut view = EnumSet::finite([pair(&Nat::zero(), &len)]);
        for (i, x) in xs.iter().enumerate() {
            let tag = Nat::from(i as u64 + 1);
            view = view.union(&x.view().map(move |v| pair(&tag, v)));
        }
        Ok(GraphElem {
            inner: Arc::new(GraphInner {
                label: format!("seq[{}]", xs.len()),
                view,
                desc: None,
                fun: None,
                pair_parts: None,
                seq_parts: Some(xs.to_vec()),
            }),
        })
    }

    fn seq_nth(&self, e: &GraphElem, len: usize, i: usize) -> Result<GraphElem> {
        if let Some(parts) = &e.inner.seq_parts {
            return parts.get(i).cloned().ok_or_else(|| {
                PcaError::MalformedCode(format!(
                    "sequence of {} components has no index {i}",
                    parts.len()
                ))
            });
        }
        if i >= len {
            return Err(PcaError::MalformedCode(format!(
                "sequence of {len} components has no index {i}"
            )));
        }
        let tag = Nat::from(i as u64 + 1);
        let view = e.view().filter_map(move |z| {
            let (t, x) = unpair(z);
            if t == tag {
                Some(x)
            } else {
                None
            }
        });
        Ok(GraphElem::from_enumset(format!("seq[{i}] {}", e.label()), view))
    }

    fn seq_len(&self, e: &GraphElem, meter: &Meter) -> Result<usize> {
        if let Some(parts) = &e.inner.seq_parts {
            return Ok(parts.len());
        }
        for s in 0..=meter.search_stage_limit() {
            meter.tick("sequence-length scan")?;
            for z in e.view().upto(s).iter() {
                let (t, x) = unpair(z);
                if t.is_zero() {
                    return x.to_usize().ok_or_else(|| {
                        PcaError::MalformedCode("sequence length tag overflows usize".into())
                    });
                }
            }
        }
        Err(PcaError::Exhausted("sequence-length scan"))
    }

    fn bool_probes(&self) -> (GraphElem, GraphElem) {
        (
            GraphElem::from_finite(&[Nat::zero()].into()),
            GraphElem::from_finite(&[Nat::one()].into()),
        )
    }

    fn decide_bool_probe(&self, r: &GraphElem, meter: &Meter) -> Result<bool> {
        for s in 0..=meter.search_stage_limit() {
            meter.tick("boolean probe")?;
            let snap = r.view().upto(s);
            if snap.contains(&Nat::zero()) {
                return Ok(true);
            }
            if snap.contains(&Nat::one()) {
                return Ok(false);
            }
        }
        Err(PcaError::Exhausted("boolean probe undecided"))
    }

    fn agree(&self, a: &GraphElem, b: &GraphElem, prefix: u64, meter: &Meter) -> Result<bool> {
        if let (Some(da), Some(db)) = (a.desc(), b.desc()) {
            if let (Ok(ea), Ok(eb)) = (da.ev_per(), db.ev_per()) {
                return Ok(ea == eb);
            }
        }
        let cap = meter.search_stage_limit().max(1);
        meter.charge(prefix, "agreement front")?;
        let fa = a.view().first_n(prefix as usize, cap);
        let fb = b.view().first_n(prefix as usize, cap);
        let sa = a.view().upto(cap);
        let sb = b.view().upto(cap);
        Ok(fa.iter().all(|x| sb.contains(x)) && fb.iter().all(|x| sa.contains(x)))
    }

    fn literal(&self, lit: &Literal) -> Result<GraphElem> {
        match lit {
            Literal::Set(d) => GraphElem::from_desc(d),
            Literal::Stream(_) => Err(unsupported_literal(self.name(), lit)),
        }
    }

    fn from_host_fun(&self, label: &str, f: HostFun<GraphElem>) -> GraphElem {
        GraphElem::with_fun(
            label.to_string(),
            materialize_host_fun(label, f.clone()),
            f,
            None,
        )
    }

    fn show(&self, e: &GraphElem, stage_cap: u64) -> String {
        show_elem(e, stage_cap)
    }
}

/// The honest view of a host-powered element: the graph `{[m,n] | n ∈
/// f(e_m)}`, where each `f(e_m)` is retried with stage-indexed budgets
/// until it converges, then enumerated like any other set.
fn materialize_host_fun(label: &str, f: HostFun<GraphElem>) -> EnumSet {
    let label = label.to_string();
    graph_of(&ContinuousMap::new(label.clone(), move |p| {
        let f = f.clone();
        let p = p.clone();
        let cell: Arc<Mutex<Option<GraphElem>>> = Arc::new(Mutex::new(None));
        EnumSet::from_stages(move |s| {
            let mut cell = cell.lock().expect("host materialization poisoned");
            if cell.is_none() {
                let budget = Fuel::new(s, s.saturating_mul(s).saturating_add(1024));
                if let Ok(r) = f(&GraphElem::from_finite(&p), &budget.meter()) {
                    *cell = Some(r);
                }
            }
            match cell.as_ref() {
                Some(r) => r.view().upto(s),
                None => BTreeSet::new(),
            }
        })
    }))
}

fn show_elem(e: &GraphElem, stage_cap: u64) -> String {
    if let Some(d) = e.desc() {
        return d.to_string();
    }
    let front = e.view().first_n(12, stage_cap);
    let mut out = String::from("{");
    for (i, v) in front.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&v.to_string());
    }
    if !front.is_empty() {
        out.push_str(", ");
    }
    out.push_str("...}");
    out
}

// ---------------------------------------------------------------------------
// Basic opens
// ---------------------------------------------------------------------------

/// `U_p = {A | p ⊆ A}` — a basic open of the positive-information topology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicOpenScott {
    p: BTreeSet<Nat>,
}

impl BasicOpenScott {
    pub fn new(p: BTreeSet<Nat>) -> BasicOpenScott {
        BasicOpenScott { p }
    }

    pub fn p(&self) -> &BTreeSet<Nat> {
        &self.p
    }
}

/// `U_p^q = {A | p ⊆ A and A ∩ q = ∅}` — a basic open of the two-sided
/// topology; requires `p ∩ q = ∅`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicOpenCantor {
    p: BTreeSet<Nat>,
    q: BTreeSet<Nat>,
}

impl BasicOpenCantor {
    pub fn new(p: BTreeSet<Nat>, q: BTreeSet<Nat>) -> Result<BasicOpenCantor> {
        if let Some(x) = p.intersection(&q).next() {
            return Err(PcaError::InvalidOpen(format!(
                "required and forbidden parts overlap at {x}"
            )));
        }
        Ok(BasicOpenCantor { p, q })
    }

    pub fn p(&self) -> &BTreeSet<Nat> {
        &self.p
    }

    pub fn q(&self) -> &BTreeSet<Nat> {
        &self.q
    }
}

/// Verdict of a semi-decision: definite yes (with the stage that confirmed
/// it) or no answer within the budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemiAnswer {
    Yes { stage: u64 },
    Unknown,
}

impl SemiAnswer {
    pub fn is_yes(&self) -> bool {
        matches!(self, SemiAnswer::Yes { .. })
    }
}

/// Membership in `U_p` is only ever confirmable: scan stages until every
/// required point has appeared, or give up silently.
pub fn in_scott_open(open: &BasicOpenScott, a: &EnumSet, fuel: &Fuel) -> SemiAnswer {
    let meter = fuel.meter();
    for s in 0..=meter.search_stage_limit() {
        if meter.tick("scott open scan").is_err() {
            return SemiAnswer::Unknown;
        }
        let snap = a.upto(s);
        if open.p().iter().all(|x| snap.contains(x)) {
            return SemiAnswer::Yes { stage: s };
        }
    }
    SemiAnswer::Unknown
}

/// Membership in `U_p^q` is decided exactly — which is possible only
/// because the set comes with a description.
pub fn in_cantor_open(open: &BasicOpenCantor, a: &SetDesc) -> Result<bool> {
    for x in open.p() {
        if !a.contains(x)? {
            return Ok(false);
        }
    }
    for x in open.q() {
        if a.contains(x)? {
            return Ok(false);
        }
    }
    Ok(true)
}
