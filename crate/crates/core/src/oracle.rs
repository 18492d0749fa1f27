//! Oracle extensions of a model: application as a dialogue with a partial
//! function on the carrier.
//!
//! Given any backend and a partial endofunction `f` on its elements, the
//! extended application `a ·_f b` runs a protocol.  At round `i` the
//! strategy `a` is applied (in the base model) to the coded history
//! `[b, f(e₀), …, f(e_{i−1})]` and must answer a flagged pair: `[F, e_i]`
//! to pose one more question `e_i` to the oracle, or `[T, c]` to stop with
//! result `c`.  The questions and answers of a completed run form its
//! [`Trace`]; runs with equal answer sequences (equal [`trace_key`]s) fall
//! into one cell of a countable partition, and on each cell the whole
//! dialogue collapses to a single base-model element with the answers
//! baked in ([`key_specialized_element`]).
//!
//! Strategies are written as host-level [`DialogueProgram`]s and compiled
//! to elements by [`to_element`].  The extension's own `k` and `s` are
//! synthesized the same way ([`synth_combinators`]); `s` is the delicate
//! one, because the protocol hands a strategy nothing but the history, so
//! every round must re-derive its position by replaying the constituent
//! applications against the shared answer list ([`s_f`]).
//!
//! The protocol distinguishes three failure modes and keeps them apart:
//! running out of fuel (`Exhausted`), a strategy answer that is not a
//! flagged pair (`MalformedStep`), and a question outside the oracle's
//! domain (`OracleDomain` / `OracleNeedsDescription` — semantic
//! divergence, no budget would help).
//!
//! Concrete oracles over the shipped models — set complementation and
//! extensional equality on the graph model, the discontinuous `S` map on
//! sequence spaces, tail equality on binary streams — are constructed at
//! the bottom of the module.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use crate::error::{PcaError, Result};
use crate::graph::{GraphBackend, GraphElem};
use crate::kernel::backend::PcaBackend;
use crate::kernel::desc::SetDesc;
use crate::kernel::fuel::{Fuel, Meter};
use crate::streams::{eq_inf, s_fn, BinBackend, BinElem, K2Elem};

/// The oracle's partial function on elements.
type OracleFn<E> = Arc<dyn Fn(&E, &Meter) -> Result<E> + Send + Sync>;
/// The oracle's domain, as a quick predicate.
type DomainFn<E> = Arc<dyn Fn(&E) -> bool + Send + Sync>;
/// Canonicalizer of answer elements to trace-key fragments.
type KeyFn<E> = Arc<dyn Fn(&E) -> String + Send + Sync>;

/// A partial function on a backend's elements, used as the oracle of an
/// extended application.
///
/// `apply` is the function itself; it reports its own precise refusals
/// (`OracleNeedsDescription` for opaque inputs, `OracleDomain` or
/// `UndecidableDescription` for questions it cannot answer exactly).
/// `in_domain` is the domain as a quick predicate; it is advisory — used
/// by corpus filters and by the consistency suite, never as a runtime
/// gate.  `answer_key` canonicalizes an *answer* element to the string
/// that represents it in a [`trace_key`]; two answers get equal keys
/// exactly when the oracle considers them the same answer.
pub struct Oracle<B: PcaBackend> {
    name: &'static str,
    in_domain: DomainFn<B::Elem>,
    apply: OracleFn<B::Elem>,
    answer_key: KeyFn<B::Elem>,
}

impl<B: PcaBackend> Clone for Oracle<B> {
    fn clone(&self) -> Self {
        Oracle {
            name: self.name,
            in_domain: self.in_domain.clone(),
            apply: self.apply.clone(),
            answer_key: self.answer_key.clone(),
        }
    }
}

impl<B: PcaBackend> Oracle<B> {
    pub fn new(
        name: &'static str,
        in_domain: impl Fn(&B::Elem) -> bool + Send + Sync + 'static,
        apply: impl Fn(&B::Elem, &Meter) -> Result<B::Elem> + Send + Sync + 'static,
        answer_key: impl Fn(&B::Elem) -> String + Send + Sync + 'static,
    ) -> Oracle<B> {
        Oracle {
            name,
            in_domain: Arc::new(in_domain),
            apply: Arc::new(apply),
            answer_key: Arc::new(answer_key),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// The domain predicate (advisory; see the type-level docs).
    pub fn in_domain(&self, q: &B::Elem) -> bool {
        (self.in_domain)(q)
    }

    /// Ask the oracle one question.
    pub fn call(&self, q: &B::Elem, meter: &Meter) -> Result<B::Elem> {
        (self.apply)(q, meter)
    }

    /// Canonical key of an answer element.
    pub fn key_of(&self, answer: &B::Elem) -> String {
        (self.answer_key)(answer)
    }
}

/// The record of one completed (or exhausted) dialogue: the questions
/// posed, the oracle's answers, their canonical keys, and the final
/// result if the run reached one.  `queries`, `answers` and
/// `answer_keys` always have equal lengths.
#[derive(Clone, Debug)]
pub struct Trace<E> {
    pub queries: Vec<E>,
    pub answers: Vec<E>,
    pub answer_keys: Vec<String>,
    pub result: Option<E>,
}

impl<E> Trace<E> {
    pub fn new() -> Trace<E> {
        Trace { queries: Vec::new(), answers: Vec::new(), answer_keys: Vec::new(), result: None }
    }

    /// Number of oracle rounds.
    pub fn rounds(&self) -> usize {
        self.answers.len()
    }
}

impl<E> Default for Trace<E> {
    fn default() -> Self {
        Trace::new()
    }
}

/// Canonical encoding of a trace's answer sequence: the round count, then
/// each answer key with `:` and `\` escaped.  Two traces get equal keys
/// exactly when their answer-key sequences are equal.
pub fn trace_key<E>(t: &Trace<E>) -> String {
    let mut out = t.answer_keys.len().to_string();
    for k in &t.answer_keys {
        out.push(':');
        out.push_str(&k.replace('\\', "\\\\").replace(':', "\\:"));
    }
    out
}

/// Serialize a trace, one line per event: `Q <question>` / `A <answer>`
/// per round, then `R <result>` (or `R exhausted` for an incomplete run).
pub fn render_trace<B: PcaBackend>(backend: &B, t: &Trace<B::Elem>, stage_cap: u64) -> String {
    let mut lines = Vec::new();
    for (q, a) in t.queries.iter().zip(&t.answers) {
        lines.push(format!("Q {}", backend.show(q, stage_cap)));
        lines.push(format!("A {}", backend.show(a, stage_cap)));
    }
    match &t.result {
        Some(r) => lines.push(format!("R {}", backend.show(r, stage_cap))),
        None => lines.push("R exhausted".to_string()),
    }
    lines.join("\n")
}

/// One protocol round: apply the strategy to the coded history and split
/// the flagged pair.  Returns `(done, payload)`.
fn strategy_round<B: PcaBackend>(
    backend: &B,
    a: &B::Elem,
    history: &[B::Elem],
    meter: &Meter,
) -> Result<(bool, B::Elem)> {
    let coded = backend.seq_elems(history)?;
    let step = backend.apply(a, &coded, meter)?;
    let (flag, payload) = backend.unpair_elems(&step).map_err(|e| {
        PcaError::MalformedStep(format!("strategy answer does not split as a pair: {e}"))
    })?;
    let done = backend.as_bool(&flag, meter).map_err(|e| match e {
        PcaError::Exhausted(w) => PcaError::Exhausted(w),
        other => PcaError::MalformedStep(format!("strategy flag is not boolean: {other}")),
    })?;
    Ok((done, payload))
}

/// The extended application `a ·_f b`, with a fresh budget.
///
/// Feeds the strategy `a` the growing coded history `[b, f(e₀), …]`; on a
/// `[F, e]` answer it asks the oracle `e` and extends the history, on a
/// `[T, c]` answer it stops with `c`.  Returns the result together with
/// the full trace of the run.
pub fn apply_f<B: PcaBackend>(
    backend: &B,
    a: &B::Elem,
    b: &B::Elem,
    f: &Oracle<B>,
    fuel: Fuel,
) -> Result<(B::Elem, Trace<B::Elem>)> {
    apply_f_metered(backend, a, b, f, &fuel.meter())
}

/// [`apply_f`] drawing from an existing budget (used when a dialogue runs
/// inside another element's evaluation).
pub fn apply_f_metered<B: PcaBackend>(
    backend: &B,
    a: &B::Elem,
    b: &B::Elem,
    f: &Oracle<B>,
    meter: &Meter,
) -> Result<(B::Elem, Trace<B::Elem>)> {
    let mut history = vec![b.clone()];
    let mut trace = Trace::new();
    loop {
        meter.tick("dialogue round")?;
        let (done, payload) = strategy_round(backend, a, &history, meter)?;
        if done {
            trace.result = Some(payload.clone());
            return Ok((payload, trace));
        }
        let answer = f.call(&payload, meter)?;
        trace.queries.push(payload);
        trace.answer_keys.push(f.key_of(&answer));
        trace.answers.push(answer.clone());
        history.push(answer);
    }
}

/// Run the dialogue loop for a strategy, drawing answers from a recorded
/// list instead of an oracle.  Errs (`MalformedStep`) if the strategy
/// asks more questions than the record holds.
fn replay_with_answers<B: PcaBackend>(
    backend: &B,
    a: &B::Elem,
    b: &B::Elem,
    answers: &[B::Elem],
    meter: &Meter,
) -> Result<B::Elem> {
    let mut history = vec![b.clone()];
    let mut used = 0;
    loop {
        meter.tick("inlined dialogue round")?;
        let (done, payload) = strategy_round(backend, a, &history, meter)?;
        if done {
            return Ok(payload);
        }
        if used >= answers.len() {
            return Err(PcaError::MalformedStep(format!(
                "strategy asks question {} but only {} answers are inlined",
                used + 1,
                answers.len()
            )));
        }
        history.push(answers[used].clone());
        used += 1;
    }
}

/// The single base-model element that computes `a ·_f ·` on one cell of
/// the trace-key partition: the dialogue with the recorded answers baked
/// in, no oracle in sight.  On inputs whose run produces a different
/// answer sequence the element is simply wrong or undefined — it promises
/// agreement only on its own cell.
pub fn key_specialized_element<B: PcaBackend + 'static>(
    backend: &Arc<B>,
    a: &B::Elem,
    answers: &[B::Elem],
    label: &str,
) -> B::Elem {
    let bk = backend.clone();
    let a = a.clone();
    let answers = answers.to_vec();
    backend.from_host_fun(
        label,
        Arc::new(move |b, meter| replay_with_answers(&*bk, &a, b, &answers, meter)),
    )
}

/// One step of a host-level dialogue strategy.
pub enum DialogueStep<E> {
    /// Ask the oracle this question.
    Query(E),
    /// Stop with this result.
    Done(E),
    /// Never answer (the strategy is undefined here).
    Diverge,
}

/// A dialogue strategy written at the host level: a function from the
/// input and the answers received so far to the next step.  The step
/// function must be *replay-deterministic* — it may depend only on its
/// two element arguments, never on hidden mutable state — because the
/// protocol re-derives a strategy's position from the history alone.
pub struct DialogueProgram<B: PcaBackend> {
    label: String,
    step: StepFn<B::Elem>,
}

/// A dialogue strategy's step function.
type StepFn<E> = Arc<dyn Fn(&E, &[E], &Meter) -> Result<DialogueStep<E>> + Send + Sync>;

impl<B: PcaBackend> Clone for DialogueProgram<B> {
    fn clone(&self) -> Self {
        DialogueProgram { label: self.label.clone(), step: self.step.clone() }
    }
}

impl<B: PcaBackend> DialogueProgram<B> {
    pub fn new(
        label: impl Into<String>,
        step: impl Fn(&B::Elem, &[B::Elem], &Meter) -> Result<DialogueStep<B::Elem>>
            + Send
            + Sync
            + 'static,
    ) -> DialogueProgram<B> {
        DialogueProgram { label: label.into(), step: Arc::new(step) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn step(
        &self,
        input: &B::Elem,
        answers: &[B::Elem],
        meter: &Meter,
    ) -> Result<DialogueStep<B::Elem>> {
        (self.step)(input, answers, meter)
    }
}

/// Run a dialogue program directly at the host level (the reference
/// semantics that [`to_element`] must reproduce through the protocol).
pub fn run_dialogue<B: PcaBackend>(
    backend: &B,
    dp: &DialogueProgram<B>,
    input: &B::Elem,
    f: &Oracle<B>,
    fuel: Fuel,
) -> Result<(B::Elem, Trace<B::Elem>)> {
    let _ = backend;
    let meter = fuel.meter();
    let mut answers: Vec<B::Elem> = Vec::new();
    let mut trace = Trace::new();
    loop {
        meter.tick("dialogue round")?;
        match dp.step(input, &answers, &meter)? {
            DialogueStep::Done(c) => {
                trace.result = Some(c.clone());
                return Ok((c, trace));
            }
            DialogueStep::Query(q) => {
                let answer = f.call(&q, &meter)?;
                trace.queries.push(q);
                trace.answer_keys.push(f.key_of(&answer));
                trace.answers.push(answer.clone());
                answers.push(answer);
            }
            DialogueStep::Diverge => {
                return Err(PcaError::Diverges(format!("dialogue program {}", dp.label())))
            }
        }
    }
}

/// Compile a dialogue program to a backend element whose behaviour under
/// the protocol matches running the program: applied to a coded history,
/// the element decodes input and answers, consults the step function, and
/// returns `[F, question]` or `[T, result]`.
pub fn to_element<B: PcaBackend + 'static>(backend: &Arc<B>, dp: &DialogueProgram<B>) -> B::Elem {
    let bk = backend.clone();
    let dp = dp.clone();
    let label = dp.label.clone();
    backend.from_host_fun(
        &label,
        Arc::new(move |hist, meter| {
            let len = bk.seq_len(hist, meter)?;
            if len == 0 {
                return Err(PcaError::MalformedStep(
                    "dialogue history is missing its input component".to_string(),
                ));
            }
            let input = bk.seq_nth(hist, len, 0)?;
            let mut answers = Vec::with_capacity(len - 1);
            for i in 1..len {
                answers.push(bk.seq_nth(hist, len, i)?);
            }
            match dp.step(&input, &answers, meter)? {
                DialogueStep::Query(q) => bk.pair_elems(&bk.falsity(), &q),
                DialogueStep::Done(c) => bk.pair_elems(&bk.truth(), &c),
                DialogueStep::Diverge => {
                    Err(PcaError::Diverges(format!("dialogue program {}", dp.label())))
                }
            }
        }),
    )
}

/// The `k` of the extension: takes `a`, then `b`, answers `a`; never asks
/// the oracle anything.
pub fn k_f<B: PcaBackend + 'static>(backend: &Arc<B>) -> B::Elem {
    let bk = backend.clone();
    let dp = DialogueProgram::new("k_f", move |a: &B::Elem, _answers: &[B::Elem], _m: &Meter| {
        let a = a.clone();
        let inner = DialogueProgram::new("(k_f ·)", move |_b: &B::Elem, _ans: &[B::Elem], _m: &Meter| {
            Ok(DialogueStep::Done(a.clone()))
        });
        Ok(DialogueStep::Done(to_element(&bk, &inner)))
    });
    to_element(backend, &dp)
}

/// Outcome of replaying one constituent application inside a compound
/// strategy: it finished, or it is blocked on an oracle question the
/// shared answer list does not cover yet.
enum SimOutcome<E> {
    Done(E),
    NeedOracle(E),
}

/// Replay the dialogue loop for `a ·_f b`, consuming oracle answers from
/// the shared list through `cursor` instead of calling the oracle.
fn simulate<B: PcaBackend>(
    backend: &B,
    a: &B::Elem,
    b: &B::Elem,
    answers: &[B::Elem],
    cursor: &mut usize,
    meter: &Meter,
) -> Result<SimOutcome<B::Elem>> {
    let mut history = vec![b.clone()];
    loop {
        meter.tick("replayed dialogue round")?;
        let (done, payload) = strategy_round(backend, a, &history, meter)?;
        if done {
            return Ok(SimOutcome::Done(payload));
        }
        if *cursor < answers.len() {
            history.push(answers[*cursor].clone());
            *cursor += 1;
        } else {
            return Ok(SimOutcome::NeedOracle(payload));
        }
    }
}

/// The `s` of the extension: `s_f ·_f a ·_f b ·_f c` behaves as
/// `(a ·_f c) ·_f (b ·_f c)`.
///
/// The first two stages just bank their arguments.  The third stage owns
/// the protocol's central difficulty: it is handed only `(c, answers)`,
/// so on every round it replays `a ·_f c`, then `b ·_f c`, then the outer
/// application, splitting the shared answer list between them in order;
/// whichever replay first runs past the recorded answers determines the
/// next question to forward.  The trace of the compound application is
/// therefore exactly the concatenation of the three constituent traces.
pub fn s_f<B: PcaBackend + 'static>(backend: &Arc<B>) -> B::Elem {
    let bk0 = backend.clone();
    let dp = DialogueProgram::new("s_f", move |a: &B::Elem, _ans: &[B::Elem], _m: &Meter| {
        let a = a.clone();
        let bk1 = bk0.clone();
        let inner1 = DialogueProgram::new("(s_f ·)", move |b: &B::Elem, _ans: &[B::Elem], _m: &Meter| {
            let a = a.clone();
            let b = b.clone();
            let bk2 = bk1.clone();
            let inner2 = DialogueProgram::new(
                "(s_f · ·)",
                move |c: &B::Elem, answers: &[B::Elem], meter: &Meter| {
                    let mut cursor = 0usize;
                    let ac = match simulate(&*bk2, &a, c, answers, &mut cursor, meter)? {
                        SimOutcome::Done(v) => v,
                        SimOutcome::NeedOracle(q) => return Ok(DialogueStep::Query(q)),
                    };
                    let bc = match simulate(&*bk2, &b, c, answers, &mut cursor, meter)? {
                        SimOutcome::Done(v) => v,
                        SimOutcome::NeedOracle(q) => return Ok(DialogueStep::Query(q)),
                    };
                    match simulate(&*bk2, &ac, &bc, answers, &mut cursor, meter)? {
                        SimOutcome::Done(v) => Ok(DialogueStep::Done(v)),
                        SimOutcome::NeedOracle(q) => Ok(DialogueStep::Query(q)),
                    }
                },
            );
            Ok(DialogueStep::Done(to_element(&bk1, &inner2)))
        });
        Ok(DialogueStep::Done(to_element(&bk0, &inner1)))
    });
    to_element(backend, &dp)
}

/// The combinators that make the extension a model in its own right.  The
/// oracle is only consulted through forwarded questions, so the same pair
/// works for every oracle over the backend; the parameter fixes the
/// labels.
pub fn synth_combinators<B: PcaBackend + 'static>(
    backend: &Arc<B>,
    f: &Oracle<B>,
) -> (B::Elem, B::Elem) {
    let _ = f;
    (k_f(backend), s_f(backend))
}

/// The realizer embedding base application into the extension:
/// `r ·_f a ·_f b` equals the base `a · b` and asks no questions.
/// Compound base expressions are written by threading every application
/// through `r`, e.g. `r ·_f (r ·_f k ·_f A) ·_f B` for `(k · A) · B`.
pub fn embed_realizer<B: PcaBackend + 'static>(backend: &Arc<B>) -> B::Elem {
    let bk0 = backend.clone();
    let dp = DialogueProgram::new("r", move |a: &B::Elem, _ans: &[B::Elem], _m: &Meter| {
        let a = a.clone();
        let bk1 = bk0.clone();
        let inner = DialogueProgram::new("(r ·)", move |b: &B::Elem, _ans: &[B::Elem], m: &Meter| {
            Ok(DialogueStep::Done(bk1.apply(&a, b, m)?))
        });
        Ok(DialogueStep::Done(to_element(&bk0, &inner)))
    });
    to_element(backend, &dp)
}

/// The element representing the oracle inside its own extension: one
/// question, then the answer.  `c_f ·_f b = f(b)` on the oracle's domain.
pub fn oracle_representer<B: PcaBackend + 'static>(backend: &Arc<B>, f: &Oracle<B>) -> B::Elem {
    let dp = DialogueProgram::new(
        format!("c_{}", f.name()),
        move |b: &B::Elem, answers: &[B::Elem], _m: &Meter| {
            Ok(match answers.first() {
                None => DialogueStep::Query(b.clone()),
                Some(a) => DialogueStep::Done(a.clone()),
            })
        },
    );
    to_element(backend, &dp)
}

/// Set complementation on the graph model.  Defined on elements carrying
/// a membership-decidable description: the answer carries the exact
/// closed-form complement when one exists, and otherwise the structural
/// complement, which stays membership-decidable.  Opaque elements are
/// refused with `OracleNeedsDescription`, machine-enumerable ones (whose
/// complements are not even semi-decidable) with the description
/// algebra's own error.
pub fn complement_oracle() -> Oracle<GraphBackend> {
    Oracle::new(
        "C",
        |e: &GraphElem| e.desc().is_some_and(|d| d.program_free()),
        |e: &GraphElem, _m: &Meter| {
            let d = e.desc().ok_or_else(|| {
                PcaError::OracleNeedsDescription(
                    "complementation needs a described set".to_string(),
                )
            })?;
            let flipped = match d.complement() {
                Ok(exact) => exact,
                Err(_) if d.program_free() => SetDesc::Comp(Box::new(d.clone())),
                Err(e) => return Err(e),
            };
            GraphElem::from_desc(&flipped)
        },
        |e: &GraphElem| e.label().to_string(),
    )
}

/// Extensional equality of described sets on the graph model: the
/// question is a pair `[A, B]`, the answer the model's truth or falsity.
pub fn eq_oracle(backend: &Arc<GraphBackend>) -> Oracle<GraphBackend> {
    let bk = backend.clone();
    let bk_dom = backend.clone();
    let truth_label = backend.truth().label().to_string();
    Oracle::new(
        "Eq",
        move |e: &GraphElem| {
            let Ok((a, b)) = bk_dom.unpair_elems(e) else { return false };
            matches!(
                (a.desc().map(|d| d.ev_per()), b.desc().map(|d| d.ev_per())),
                (Some(Ok(_)), Some(Ok(_)))
            )
        },
        move |e: &GraphElem, _m: &Meter| {
            let (a, b) = bk.unpair_elems(e)?;
            let da = a.desc().ok_or_else(|| {
                PcaError::OracleNeedsDescription("equality needs described sets".to_string())
            })?;
            let db = b.desc().ok_or_else(|| {
                PcaError::OracleNeedsDescription("equality needs described sets".to_string())
            })?;
            Ok(if da.ev_per()? == db.ev_per()? { bk.truth() } else { bk.falsity() })
        },
        move |e: &GraphElem| {
            if e.label() == truth_label {
                "T".to_string()
            } else {
                "F".to_string()
            }
        },
    )
}

/// The discontinuous successor-avoiding map on the sequence model:
/// `S(α)(n) = n+1` if `n+1` misses the image of `α`, else `0`.  Needs an
/// image description; refuses opaque sequences.
pub fn s_oracle() -> Oracle<crate::streams::K2Backend> {
    Oracle::new(
        "S",
        |e: &K2Elem| e.image().is_some(),
        |e: &K2Elem, _m: &Meter| s_fn(e),
        |e: &K2Elem| e.label().to_string(),
    )
}

/// Tail equality on the binary model: the question is a pair `[A, B]` of
/// described bit streams, the answer the indicator of `{n | A and B agree
/// from n on}` — again a described stream.
pub fn eqinf_oracle(backend: &Arc<BinBackend>) -> Oracle<BinBackend> {
    let bk = backend.clone();
    Oracle::new(
        "EqInf",
        |e: &BinElem| e.desc().is_some(),
        move |e: &BinElem, _m: &Meter| {
            let (a, b) = bk.unpair_elems(e)?;
            eq_inf(&a, &b)
        },
        |e: &BinElem| e.label().to_string(),
    )
}

/// An oracle that replays a recorded answer list in order, ignoring the
/// questions; used to check that a trace determines its run.
pub fn scripted_oracle<B: PcaBackend>(answers: Vec<B::Elem>, keys: Vec<String>) -> Oracle<B> {
    let answer_cursor = Arc::new(AtomicUsize::new(0));
    let key_cursor = Arc::new(AtomicUsize::new(0));
    let answers = Arc::new(answers);
    let keys = Arc::new(keys);
    Oracle::new(
        "scripted",
        |_e: &B::Elem| true,
        move |_q: &B::Elem, _m: &Meter| {
            let i = answer_cursor.fetch_add(1, Ordering::SeqCst);
            answers.get(i).cloned().ok_or_else(|| {
                PcaError::OracleDomain(format!("script has only {} answers", answers.len()))
            })
        },
        // Keys travel with the answers positionally: the key function is
        // consulted exactly once per answer, in order.
        move |_e: &B::Elem| {
            let i = key_cursor.fetch_add(1, Ordering::SeqCst);
            keys.get(i).cloned().unwrap_or_default()
        },
    )
}

// ---------------------------------------------------------------------------
// The extension as a backend of its own
// ---------------------------------------------------------------------------

/// The oracle extension packaged as a [`PcaBackend`].  The carrier is the
/// base model's carrier; application is the dialogue loop; `k` and `s` are
/// the synthesized combinators.  Everything structural — pairing, sequence
/// codings, boolean probes, literals, rendering — delegates to the base
/// model, so the generic term evaluator, bracket abstraction and the
/// derived booleans all run unchanged inside the extension.
pub struct ExtendedBackend<B: PcaBackend> {
    base: Arc<B>,
    oracle: Oracle<B>,
    name: &'static str,
    k: OnceLock<B::Elem>,
    s: OnceLock<B::Elem>,
    t: OnceLock<B::Elem>,
    f: OnceLock<B::Elem>,
}

impl<B: PcaBackend + 'static> ExtendedBackend<B> {
    pub fn new(base: Arc<B>, oracle: Oracle<B>, name: &'static str) -> Self {
        ExtendedBackend {
            base,
            oracle,
            name,
            k: OnceLock::new(),
            s: OnceLock::new(),
            t: OnceLock::new(),
            f: OnceLock::new(),
        }
    }

    pub fn base(&self) -> &Arc<B> {
        &self.base
    }

    pub fn oracle(&self) -> &Oracle<B> {
        &self.oracle
    }

    /// Application together with its oracle trace (the plain backend
    /// `apply` drops the trace).
    pub fn apply_traced(
        &self,
        a: &B::Elem,
        b: &B::Elem,
        fuel: Fuel,
    ) -> Result<(B::Elem, Trace<B::Elem>)> {
        apply_f(self.base.as_ref(), a, b, &self.oracle, fuel)
    }
}

impl<B: PcaBackend + 'static> PcaBackend for ExtendedBackend<B> {
    type Elem = B::Elem;

    fn name(&self) -> &'static str {
        self.name
    }

    fn apply(&self, a: &Self::Elem, b: &Self::Elem, meter: &Meter) -> Result<Self::Elem> {
        apply_f_metered(self.base.as_ref(), a, b, &self.oracle, meter).map(|(e, _)| e)
    }

    fn k(&self) -> Self::Elem {
        self.k.get_or_init(|| k_f(&self.base)).clone()
    }

    fn s(&self) -> Self::Elem {
        self.s.get_or_init(|| s_f(&self.base)).clone()
    }

    // The default derivations re-apply `k`/`s` on every call, which in the
    // extension means re-running dialogues; memoize them instead.
    fn truth(&self) -> Self::Elem {
        self.t.get_or_init(|| default_truth(self)).clone()
    }

    fn falsity(&self) -> Self::Elem {
        self.f.get_or_init(|| default_falsity(self)).clone()
    }

    fn pair_elems(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        self.base.pair_elems(a, b)
    }

    fn unpair_elems(&self, e: &Self::Elem) -> Result<(Self::Elem, Self::Elem)> {
        self.base.unpair_elems(e)
    }

    fn seq_elems(&self, xs: &[Self::Elem]) -> Result<Self::Elem> {
        self.base.seq_elems(xs)
    }

    fn seq_nth(&self, e: &Self::Elem, len: usize, i: usize) -> Result<Self::Elem> {
        self.base.seq_nth(e, len, i)
    }

    fn seq_len(&self, e: &Self::Elem, meter: &Meter) -> Result<usize> {
        self.base.seq_len(e, meter)
    }

    fn bool_probes(&self) -> (Self::Elem, Self::Elem) {
        self.base.bool_probes()
    }

    fn decide_bool_probe(&self, r: &Self::Elem, meter: &Meter) -> Result<bool> {
        self.base.decide_bool_probe(r, meter)
    }

    fn agree(&self, a: &Self::Elem, b: &Self::Elem, prefix: u64, meter: &Meter) -> Result<bool> {
        self.base.agree(a, b, prefix, meter)
    }

    fn literal(&self, lit: &crate::kernel::backend::Literal) -> Result<Self::Elem> {
        self.base.literal(lit)
    }

    fn from_host_fun(
        &self,
        label: &str,
        f: crate::kernel::backend::HostFun<Self::Elem>,
    ) -> Self::Elem {
        self.base.from_host_fun(label, f)
    }

    fn show(&self, e: &Self::Elem, stage_cap: u64) -> String {
        self.base.show(e, stage_cap)
    }
}

// `truth`/`falsity` defaults are spelled out here so the memoizing
// overrides above can reuse them verbatim.
fn default_truth<B: PcaBackend>(bk: &B) -> B::Elem {
    let meter = Fuel::DESK.meter();
    let kk = bk.apply(&bk.k(), &bk.k(), &meter).expect("k k is total");
    let sk = bk.apply(&bk.s(), &bk.k(), &meter).expect("s k is total");
    let skk = bk.apply(&sk, &bk.k(), &meter).expect("s k k is total");
    let skk_ = bk.apply(&bk.s(), &kk, &meter).expect("s (k k) is total");
    bk.apply(&skk_, &skk, &meter).expect("s (k k) (s k k) is total")
}

fn default_falsity<B: PcaBackend>(bk: &B) -> B::Elem {
    let meter = Fuel::DESK.meter();
    let sk = bk.apply(&bk.s(), &bk.k(), &meter).expect("s k is total");
    let skk = bk.apply(&sk, &bk.k(), &meter).expect("s k k is total");
    bk.apply(&bk.k(), &skk, &meter).expect("k (s k k) is total")
}

/// `𝒫(ℕ)` extended by set complementation.
pub fn graph_with_complement() -> Arc<ExtendedBackend<GraphBackend>> {
    let base = Arc::new(GraphBackend::new());
    let oracle = complement_oracle();
    Arc::new(ExtendedBackend::new(base, oracle, "graph+C"))
}

/// `𝒫(ℕ)` extended by extensional equality of described sets.
pub fn graph_with_eq() -> Arc<ExtendedBackend<GraphBackend>> {
    let base = Arc::new(GraphBackend::new());
    let oracle = eq_oracle(&base);
    Arc::new(ExtendedBackend::new(base, oracle, "graph+Eq"))
}

/// The sequence model extended by the successor-avoiding map.
pub fn k2_with_s() -> Arc<ExtendedBackend<crate::streams::K2Backend>> {
    let base = Arc::new(crate::streams::K2Backend::new());
    let oracle = s_oracle();
    Arc::new(ExtendedBackend::new(base, oracle, "k2+S"))
}

/// The binary model extended by tail equality.
pub fn bin_with_eqinf() -> Arc<ExtendedBackend<BinBackend>> {
    let base = Arc::new(BinBackend::new());
    let oracle = eqinf_oracle(&base);
    Arc::new(ExtendedBackend::new(base, oracle, "bin+EqInf"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::desc::SetDesc;
    use crate::kernel::nat::Nat;
    use crate::streams::K2Backend;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::collections::BTreeMap;

    fn g() -> Arc<GraphBackend> {
        Arc::new(GraphBackend::new())
    }

    fn fin(ns: &[u64]) -> GraphElem {
        GraphElem::from_desc(&SetDesc::fin(ns.iter().map(|&n| Nat::from(n)))).unwrap()
    }

    fn cofin(ns: &[u64]) -> GraphElem {
        GraphElem::from_desc(&SetDesc::cofin(ns.iter().map(|&n| Nat::from(n)))).unwrap()
    }

    fn shown(bk: &GraphBackend, e: &GraphElem) -> String {
        bk.show(e, 16)
    }

    /// `Done(input)` — the identity strategy.
    fn identity_dp() -> DialogueProgram<GraphBackend> {
        DialogueProgram::new("id", |input: &GraphElem, _a: &[GraphElem], _m: &Meter| {
            Ok(DialogueStep::Done(input.clone()))
        })
    }

    /// Query the input once, return the oracle's answer.
    fn ask_once_dp() -> DialogueProgram<GraphBackend> {
        DialogueProgram::new("ask once", |input: &GraphElem, ans: &[GraphElem], _m: &Meter| {
            Ok(match ans.first() {
                None => DialogueStep::Query(input.clone()),
                Some(a) => DialogueStep::Done(a.clone()),
            })
        })
    }

    /// Query the input, then query the first answer, return the second.
    fn ask_twice_dp() -> DialogueProgram<GraphBackend> {
        DialogueProgram::new("chain two", |input: &GraphElem, ans: &[GraphElem], _m: &Meter| {
            Ok(match ans.len() {
                0 => DialogueStep::Query(input.clone()),
                1 => DialogueStep::Query(ans[0].clone()),
                _ => DialogueStep::Done(ans[1].clone()),
            })
        })
    }

    #[test]
    fn immediate_answers_leave_an_empty_trace() {
        let bk = g();
        let f = complement_oracle();
        let a = to_element(&bk, &identity_dp());
        let b = fin(&[3, 5]);
        let (r, t) = apply_f(&*bk, &a, &b, &f, Fuel::DESK).unwrap();
        assert_eq!(shown(&bk, &r), "fin{3,5}");
        assert_eq!(t.rounds(), 0);
        assert!(t.queries.is_empty());
        assert_eq!(trace_key(&t), "0");
        assert_eq!(render_trace(&*bk, &t, 16), "R fin{3,5}");
    }

    #[test]
    fn one_question_programs_consult_the_oracle_once() {
        let bk = g();
        let f = complement_oracle();
        let a = to_element(&bk, &ask_once_dp());
        let (r, t) = apply_f(&*bk, &a, &fin(&[0]), &f, Fuel::DESK).unwrap();
        assert_eq!(shown(&bk, &r), "cofin{0}");
        assert_eq!(t.rounds(), 1);
        assert_eq!(shown(&bk, &t.queries[0]), "fin{0}");
        assert_eq!(render_trace(&*bk, &t, 16), "Q fin{0}\nA cofin{0}\nR cofin{0}");
        assert_eq!(trace_key(&t), "1:cofin{0}");
    }

    #[test]
    fn the_representer_applies_its_oracle() {
        let bk = g();
        let f = complement_oracle();
        let c = oracle_representer(&bk, &f);
        let (r1, t1) = apply_f(&*bk, &c, &fin(&[1, 2]), &f, Fuel::DESK).unwrap();
        assert_eq!(shown(&bk, &r1), "cofin{1,2}");
        assert_eq!(t1.rounds(), 1);
        // Applying it to its own output cancels: C (C A) = A.
        let (r2, t2) = apply_f(&*bk, &c, &r1, &f, Fuel::DESK).unwrap();
        assert_eq!(shown(&bk, &r2), "fin{1,2}");
        assert_eq!(t2.rounds(), 1);
    }

    #[test]
    fn chained_questions_thread_their_answers() {
        let bk = g();
        let f = complement_oracle();
        let a = to_element(&bk, &ask_twice_dp());
        let (r, t) = apply_f(&*bk, &a, &fin(&[2]), &f, Fuel::DESK).unwrap();
        // C (C {2}) = {2}.
        assert_eq!(shown(&bk, &r), "fin{2}");
        assert_eq!(t.rounds(), 2);
        assert_eq!(trace_key(&t), "2:cofin{2}:fin{2}");
    }

    #[test]
    fn compiled_programs_match_their_host_runs() {
        let bk = g();
        let f = complement_oracle();
        for (dp, input) in [
            (identity_dp(), fin(&[7])),
            (ask_once_dp(), fin(&[1, 4])),
            (ask_twice_dp(), cofin(&[3])),
        ] {
            let (hr, ht) = run_dialogue(&*bk, &dp, &input, &f, Fuel::DESK).unwrap();
            let (er, et) = apply_f(&*bk, &to_element(&bk, &dp), &input, &f, Fuel::DESK).unwrap();
            let meter = Fuel::DESK.meter();
            assert!(bk.agree(&hr, &er, 8, &meter).unwrap(), "{} diverged", dp.label());
            assert_eq!(trace_key(&ht), trace_key(&et));
            let qs: Vec<String> = ht.queries.iter().map(|q| shown(&bk, q)).collect();
            let qs2: Vec<String> = et.queries.iter().map(|q| shown(&bk, q)).collect();
            assert_eq!(qs, qs2);
        }
    }

    #[test]
    fn synthesized_k_banks_its_first_argument() {
        let bk = g();
        let f = complement_oracle();
        let kf = k_f(&bk);
        let mut rng = ChaCha12Rng::seed_from_u64(0xF00D);
        for round in 0..20 {
            let pick = |rng: &mut ChaCha12Rng| {
                let n = rng.gen_range(0..4usize);
                let vals: Vec<u64> = (0..n).map(|_| rng.gen_range(0..20u64)).collect();
                if rng.gen_bool(0.3) {
                    cofin(&vals)
                } else {
                    fin(&vals)
                }
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let (ka, t1) = apply_f(&*bk, &kf, &a, &f, Fuel::DESK).unwrap();
            let (r, t2) = apply_f(&*bk, &ka, &b, &f, Fuel::DESK).unwrap();
            assert_eq!(t1.rounds() + t2.rounds(), 0);
            let meter = Fuel::DESK.meter();
            assert!(bk.agree(&r, &a, 8, &meter).unwrap(), "round {round}");
        }
    }

    /// The strategy that banks `w` and answers it to any input.
    fn konst(bk: &Arc<GraphBackend>, w: &GraphElem) -> GraphElem {
        let w = w.clone();
        to_element(
            bk,
            &DialogueProgram::new("const", move |_i: &GraphElem, _a: &[GraphElem], _m: &Meter| {
                Ok(DialogueStep::Done(w.clone()))
            }),
        )
    }

    #[test]
    fn synthesized_s_replays_the_split_history() {
        let bk = g();
        let f = complement_oracle();
        let sf = s_f(&bk);

        // a: ask the oracle about the input, then answer the constant
        // strategy on the oracle's answer.  b: ask about the input, then
        // answer the identity strategy.
        let bk_a = bk.clone();
        let a = to_element(
            &bk,
            &DialogueProgram::new("a", move |input: &GraphElem, ans: &[GraphElem], _m: &Meter| {
                Ok(match ans.first() {
                    None => DialogueStep::Query(input.clone()),
                    Some(w) => DialogueStep::Done(konst(&bk_a, w)),
                })
            }),
        );
        let bk_b = bk.clone();
        let b = to_element(
            &bk,
            &DialogueProgram::new("b", move |input: &GraphElem, ans: &[GraphElem], _m: &Meter| {
                Ok(match ans.first() {
                    None => DialogueStep::Query(input.clone()),
                    Some(_) => DialogueStep::Done(to_element(
                        &bk_b,
                        &DialogueProgram::new("id", |i: &GraphElem, _a: &[GraphElem], _m: &Meter| {
                            Ok(DialogueStep::Done(i.clone()))
                        }),
                    )),
                })
            }),
        );
        let c = fin(&[4]);

        // Left: s_f a b c.
        let (sa, t1) = apply_f(&*bk, &sf, &a, &f, Fuel::DESK).unwrap();
        let (sab, t2) = apply_f(&*bk, &sa, &b, &f, Fuel::DESK).unwrap();
        let (left, t3) = apply_f(&*bk, &sab, &c, &f, Fuel::DESK).unwrap();
        assert_eq!(t1.rounds() + t2.rounds(), 0);

        // Right: (a ·_f c) ·_f (b ·_f c), traces concatenated.
        let (ac, ta) = apply_f(&*bk, &a, &c, &f, Fuel::DESK).unwrap();
        let (bc, tb) = apply_f(&*bk, &b, &c, &f, Fuel::DESK).unwrap();
        let (right, tc) = apply_f(&*bk, &ac, &bc, &f, Fuel::DESK).unwrap();

        assert_eq!(shown(&bk, &left), "cofin{4}");
        let meter = Fuel::DESK.meter();
        assert!(bk.agree(&left, &right, 8, &meter).unwrap());

        let mut expect = ta.answer_keys.clone();
        expect.extend(tb.answer_keys.clone());
        expect.extend(tc.answer_keys.clone());
        assert_eq!(t3.answer_keys, expect);
        assert_eq!(trace_key(&t3), "2:cofin{4}:cofin{4}");
    }

    #[test]
    fn substitution_on_two_banked_constants_is_the_identity() {
        let bk = g();
        let f = complement_oracle();
        let kf = k_f(&bk);
        let sf = s_f(&bk);
        let opaque = GraphElem::from_enumset(
            "squares",
            crate::kernel::enumset::EnumSet::from_stages(|s| {
                (0..=s).map(|i| Nat::from(i * i)).collect()
            }),
        );
        for x in [fin(&[1]), cofin(&[2]), opaque] {
            let (sk, _) = apply_f(&*bk, &sf, &kf, &f, Fuel::DESK).unwrap();
            let (skk, _) = apply_f(&*bk, &sk, &kf, &f, Fuel::DESK).unwrap();
            let (r, t) = apply_f(&*bk, &skk, &x, &f, Fuel::DESK).unwrap();
            assert_eq!(t.rounds(), 0);
            let meter = Fuel::DESK.meter();
            assert!(bk.agree(&r, &x, 8, &meter).unwrap());
        }
    }

    #[test]
    fn the_embedding_realizer_runs_base_applications() {
        let bk = g();
        let f = complement_oracle();
        let r = embed_realizer(&bk);
        let a = fin(&[2, 4]);
        let b = fin(&[9]);
        // (k · A) · B = A, written by threading each application through r.
        let (rk, _) = apply_f(&*bk, &r, &bk.k(), &f, Fuel::DESK).unwrap();
        let (ka, _) = apply_f(&*bk, &rk, &a, &f, Fuel::DESK).unwrap();
        let (rka, _) = apply_f(&*bk, &r, &ka, &f, Fuel::DESK).unwrap();
        let (out, t) = apply_f(&*bk, &rka, &b, &f, Fuel::DESK).unwrap();
        assert_eq!(t.rounds(), 0);
        let meter = Fuel::DESK.meter();
        assert!(bk.agree(&out, &a, 8, &meter).unwrap());
    }

    #[test]
    fn failure_modes_stay_distinguished() {
        let bk = g();
        let f = complement_oracle();

        // A question outside the oracle's domain: semantic divergence.
        let refuser = Oracle::<GraphBackend>::new(
            "partial",
            |_e| false,
            |_e, _m| Err(PcaError::OracleDomain("refused".to_string())),
            |e| e.label().to_string(),
        );
        let a = to_element(&bk, &ask_once_dp());
        let err = apply_f(&*bk, &a, &fin(&[1]), &refuser, Fuel::DESK).unwrap_err();
        assert!(matches!(err, PcaError::OracleDomain(_)), "{err}");

        // An opaque question to a description oracle.
        let opaque = GraphElem::from_enumset(
            "evens",
            crate::kernel::enumset::EnumSet::from_stages(|s| {
                (0..=s).map(|i| Nat::from(2 * i)).collect()
            }),
        );
        let ask_opaque = DialogueProgram::new(
            "ask opaque",
            move |_i: &GraphElem, ans: &[GraphElem], _m: &Meter| {
                Ok(match ans.first() {
                    None => DialogueStep::Query(opaque.clone()),
                    Some(a) => DialogueStep::Done(a.clone()),
                })
            },
        );
        let a2 = to_element(&bk, &ask_opaque);
        let err2 = apply_f(&*bk, &a2, &fin(&[1]), &f, Fuel::DESK).unwrap_err();
        assert!(matches!(err2, PcaError::OracleNeedsDescription(_)), "{err2}");

        // A plain set used as a strategy never produces a flagged pair:
        // the budget runs out while probing the flag.
        let junk = fin(&[7]);
        let err3 = apply_f(&*bk, &junk, &fin(&[1]), &f, Fuel::new(64, 20_000)).unwrap_err();
        assert!(matches!(err3, PcaError::Exhausted(_)), "{err3}");

        // A strategy that diverges by its own account.
        let div = to_element(
            &bk,
            &DialogueProgram::new("div", |_i: &GraphElem, _a: &[GraphElem], _m: &Meter| {
                Ok(DialogueStep::<GraphElem>::Diverge)
            }),
        );
        let err4 = apply_f(&*bk, &div, &fin(&[1]), &f, Fuel::DESK).unwrap_err();
        assert!(matches!(err4, PcaError::Diverges(_)), "{err4}");
    }

    #[test]
    fn oracle_domains_match_their_predicates() {
        let bk = g();
        let f = complement_oracle();
        let meter = Fuel::DESK.meter();
        let opaque = GraphElem::from_enumset(
            "evens",
            crate::kernel::enumset::EnumSet::from_stages(|s| {
                (0..=s).map(|i| Nat::from(2 * i)).collect()
            }),
        );
        let one_set: std::collections::BTreeSet<Nat> = [Nat::one()].into_iter().collect();
        let charfn = GraphElem::from_finite(&one_set).describe(SetDesc::CharFn(
            crate::kernel::desc::CharDesc::new("one", |n| n == &Nat::one()),
        ));
        for (e, expected) in [(fin(&[1]), true), (opaque, false), (charfn.clone(), true)] {
            assert_eq!(f.in_domain(&e), expected, "{}", e.label());
            assert_eq!(f.call(&e, &meter).is_ok(), expected, "{}", e.label());
        }

        // Inexact but decidable questions get the structural complement.
        let flipped = f.call(&charfn, &meter).unwrap();
        let d = flipped.desc().expect("complement answers carry a description");
        assert!(!d.contains(&Nat::one()).unwrap());
        assert!(d.contains(&Nat::zero()).unwrap());

        let eq = eq_oracle(&bk);
        let good = bk.pair_elems(&fin(&[1]), &fin(&[1, 2])).unwrap();
        let bad = bk.pair_elems(&fin(&[1]), &GraphElem::from_enumset(
            "evens",
            crate::kernel::enumset::EnumSet::from_stages(|s| {
                (0..=s).map(|i| Nat::from(2 * i)).collect()
            }),
        ))
        .unwrap();
        assert!(eq.in_domain(&good) && eq.call(&good, &meter).is_ok());
        assert!(!eq.in_domain(&bad) && eq.call(&bad, &meter).is_err());
    }

    #[test]
    fn equality_answers_key_the_partition() {
        let bk = g();
        let eq = eq_oracle(&bk);
        let probe = DialogueProgram::new(
            "probe",
            |input: &GraphElem, ans: &[GraphElem], _m: &Meter| {
                Ok(match ans.first() {
                    None => DialogueStep::Query(input.clone()),
                    Some(a) => DialogueStep::Done(a.clone()),
                })
            },
        );
        let a = to_element(&bk, &probe);
        let same = bk.pair_elems(&fin(&[1]), &fin(&[1])).unwrap();
        let diff = bk.pair_elems(&fin(&[1]), &fin(&[2])).unwrap();
        let (_, t1) = apply_f(&*bk, &a, &same, &eq, Fuel::DESK).unwrap();
        let (_, t2) = apply_f(&*bk, &a, &same, &eq, Fuel::DESK).unwrap();
        let (_, t3) = apply_f(&*bk, &a, &diff, &eq, Fuel::DESK).unwrap();
        assert_eq!(trace_key(&t1), "1:T");
        assert_eq!(trace_key(&t2), trace_key(&t1));
        assert_eq!(trace_key(&t3), "1:F");
        assert_ne!(trace_key(&t1), trace_key(&t3));
    }

    #[test]
    fn recorded_answers_determine_the_run() {
        let bk = g();
        let f = complement_oracle();
        let a = to_element(&bk, &ask_twice_dp());
        let b = fin(&[2]);
        let (r1, t1) = apply_f(&*bk, &a, &b, &f, Fuel::DESK).unwrap();

        // Replay against a scripted oracle that just plays back the
        // recorded answers: identical result, identical questions.
        let script =
            scripted_oracle::<GraphBackend>(t1.answers.clone(), t1.answer_keys.clone());
        let (r2, t2) = apply_f(&*bk, &a, &b, &script, Fuel::DESK).unwrap();
        let meter = Fuel::DESK.meter();
        assert!(bk.agree(&r1, &r2, 8, &meter).unwrap());
        let qs1: Vec<String> = t1.queries.iter().map(|q| shown(&bk, q)).collect();
        let qs2: Vec<String> = t2.queries.iter().map(|q| shown(&bk, q)).collect();
        assert_eq!(qs1, qs2);

        // The answers-inlined element computes the same thing with no
        // oracle at all.
        let inlined = key_specialized_element(&bk, &a, &t1.answers, "chain two, inlined");
        let r3 = bk.apply(&inlined, &b, &meter).unwrap();
        assert!(bk.agree(&r1, &r3, 8, &meter).unwrap());
    }

    #[test]
    fn representable_maps_survive_the_extension() {
        let bk = g();
        let f = complement_oracle();
        let meter = Fuel::DESK.meter();
        // g = k · {5}: the constant map.
        let g_elem = bk.apply(&bk.k(), &fin(&[5]), &meter).unwrap();
        let bk2 = bk.clone();
        let g2 = g_elem.clone();
        let hat = to_element(
            &bk,
            &DialogueProgram::new("lifted g", move |input: &GraphElem, _a: &[GraphElem], m: &Meter| {
                Ok(DialogueStep::Done(bk2.apply(&g2, input, m)?))
            }),
        );
        for b in [fin(&[0]), fin(&[3, 8]), cofin(&[1])] {
            let (lifted, t) = apply_f(&*bk, &hat, &b, &f, Fuel::DESK).unwrap();
            let base = bk.apply(&g_elem, &b, &meter).unwrap();
            assert_eq!(t.rounds(), 0);
            assert!(bk.agree(&lifted, &base, 8, &meter).unwrap());
        }
    }

    #[test]
    fn partition_cells_share_one_inlined_element() {
        let bk = g();
        let eq = eq_oracle(&bk);
        let meter = Fuel::DESK.meter();

        // Compare the input against {1}; answer {0} on equality, {1} on
        // inequality — one oracle round per run.
        let bk_m = bk.clone();
        let m = to_element(
            &bk,
            &DialogueProgram::new("against one", move |input: &GraphElem, ans: &[GraphElem], mt: &Meter| {
                Ok(match ans.first() {
                    None => DialogueStep::Query(bk_m.pair_elems(input, &fin(&[1]))?),
                    Some(w) => {
                        if bk_m.as_bool(w, mt)? {
                            DialogueStep::Done(fin(&[0]))
                        } else {
                            DialogueStep::Done(fin(&[1]))
                        }
                    }
                })
            }),
        );

        let corpus = [fin(&[1]), fin(&[2]), fin(&[1, 2]), cofin(&[1]), fin(&[])];
        let mut cells: BTreeMap<String, Vec<(GraphElem, Trace<GraphElem>)>> = BTreeMap::new();
        for b in corpus {
            let (_, t) = apply_f(&*bk, &m, &b, &eq, Fuel::DESK).unwrap();
            cells.entry(trace_key(&t)).or_default().push((b, t));
        }
        // One round of a two-valued oracle: at most 2^1 cells.
        assert_eq!(cells.len(), 2);
        assert!(cells.contains_key("1:T") && cells.contains_key("1:F"));

        for (key, members) in &cells {
            let inlined =
                key_specialized_element(&bk, &m, &members[0].1.answers, "cell representative");
            for (b, t) in members {
                let via_oracle = t.result.as_ref().unwrap();
                let via_inlined = bk.apply(&inlined, b, &meter).unwrap();
                assert!(
                    bk.agree(via_oracle, &via_inlined, 8, &meter).unwrap(),
                    "cell {key}, input {}",
                    b.label()
                );
            }
        }
    }

    #[test]
    fn two_round_equality_programs_fill_at_most_four_cells() {
        let bk = g();
        let eq = eq_oracle(&bk);
        let bk_m = bk.clone();
        let m = to_element(
            &bk,
            &DialogueProgram::new("two probes", move |input: &GraphElem, ans: &[GraphElem], _m: &Meter| {
                Ok(match ans.len() {
                    0 => DialogueStep::Query(bk_m.pair_elems(input, &fin(&[1]))?),
                    1 => DialogueStep::Query(bk_m.pair_elems(input, &fin(&[2]))?),
                    _ => DialogueStep::Done(input.clone()),
                })
            }),
        );
        let corpus =
            [fin(&[1]), fin(&[2]), fin(&[3]), fin(&[1, 2]), cofin(&[2]), fin(&[]), fin(&[2])];
        let mut keys = std::collections::BTreeSet::new();
        for b in corpus {
            let (_, t) = apply_f(&*bk, &m, &b, &eq, Fuel::DESK).unwrap();
            assert_eq!(t.rounds(), 2);
            keys.insert(trace_key(&t));
        }
        assert!(keys.len() <= 4, "{keys:?}");
        // Three cells are actually hit: (T,F) by {1}, (F,T) by {2}, (F,F)
        // by the rest; (T,T) is impossible since {1} ≠ {2}.
        assert_eq!(keys.len(), 3);
        assert!(!keys.contains("2:T:T"));
    }

    #[test]
    fn sequence_model_oracles_run_dialogues() {
        // K2 with the successor-avoidance oracle.
        let k2 = Arc::new(K2Backend::new());
        let s_or = s_oracle();
        let c_s = oracle_representer(&k2, &s_or);
        let alpha = k2.literal(&crate::kernel::backend::Literal::Stream(
            crate::kernel::backend::StreamExpr::Const(Nat::zero()),
        ))
        .unwrap();
        let (r, t) = apply_f(&*k2, &c_s, &alpha, &s_or, Fuel::DESK).unwrap();
        assert_eq!(t.rounds(), 1);
        // im(const 0) = {0}, so S(α)(n) = n + 1 everywhere.
        let vals = r.values(5).unwrap();
        let expect: Vec<Nat> = (1..=5u64).map(Nat::from).collect();
        assert_eq!(vals, expect);

        // The synthesized k of the K2 extension.
        let kf = k_f(&k2);
        let beta = k2
            .literal(&crate::kernel::backend::Literal::Stream(
                crate::kernel::backend::StreamExpr::Poly(vec![Nat::from(3u64), Nat::one()]),
            ))
            .unwrap();
        let (ka, _) = apply_f(&*k2, &kf, &beta, &s_or, Fuel::DESK).unwrap();
        let (r2, t2) = apply_f(&*k2, &ka, &alpha, &s_or, Fuel::DESK).unwrap();
        assert_eq!(t2.rounds(), 0);
        assert_eq!(r2.values(4).unwrap(), beta.values(4).unwrap());

        // The binary model with tail equality.
        let bb = Arc::new(BinBackend::new());
        let eqi = eqinf_oracle(&bb);
        let c_e = oracle_representer(&bb, &eqi);
        let empty = BinElem::from_desc(&SetDesc::empty()).unwrap();
        let zero = BinElem::from_desc(&SetDesc::fin([Nat::zero()])).unwrap();
        let q = bb.pair_elems(&empty, &zero).unwrap();
        let (r3, t3) = apply_f(&*bb, &c_e, &q, &eqi, Fuel::DESK).unwrap();
        assert_eq!(t3.rounds(), 1);
        assert_eq!(bb.show(&r3, 16), "cofin{0}");
    }

    #[test]
    fn the_extension_is_a_full_algebra() {
        use crate::kernel::term::{eval_term, parse_term, TermEnv};

        let ext = graph_with_complement();
        let meter = Fuel::DESK.meter();

        // The k law through the backend interface.
        let a = fin(&[2]);
        let b = fin(&[7]);
        let ka = ext.apply(&ext.k(), &a, &meter).unwrap();
        let kab = ext.apply(&ka, &b, &meter).unwrap();
        assert!(ext.agree(&kab, &a, 8, &meter).unwrap());

        // The derived booleans resolve through dialogue application.
        assert!(ext.as_bool(&ext.truth(), &meter).unwrap());
        assert!(!ext.as_bool(&ext.falsity(), &meter).unwrap());

        // Bracket abstraction elaborates against the synthesized
        // combinators: ⟨x⟩(c x) applied to A runs the representer on A.
        let c = oracle_representer(ext.base(), ext.oracle());
        let mut env = TermEnv::new();
        env.insert("c".to_string(), c);
        let t = parse_term("<x> c x").unwrap();
        let body = eval_term(&t, &env, &*ext, &meter).unwrap();
        let r = ext.apply(&body, &fin(&[1]), &meter).unwrap();
        assert_eq!(shown(ext.base(), &r), "cofin{1}");
    }
}

