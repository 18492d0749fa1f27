//! Concrete deciders and representers inside the extended models, built
//! exactly as the constructions they certify: the boolean normalizer and
//! the equality decider of the complemented graph model, a compiler from
//! basic-open certificates to representing elements, the pipeline that
//! represents the successor-avoiding map on coded initial segments, the
//! sequence-equality decider of the extended sequence model, tail
//! equality computed through complements, and graph-model application
//! rebuilt inside the binary model.
//!
//! Everything here is an executable object: build it, apply it through
//! the dialogue loop, and read the verdict back with the kernel's boolean
//! decision or a prefix comparison.  Positive facts (a member appears)
//! are confirmed by enumeration; negative facts (a set stays empty) are
//! semi-decided to fuel, and the callers document the budget they accept.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{PcaError, Result};
use crate::graph::{apply_elems, BasicOpenCantor, GraphBackend, GraphElem};
use crate::kernel::backend::PcaBackend;
use crate::kernel::coding::{encode_seq, pair, set_code, set_decode, unpair};
use crate::kernel::desc::SetDesc;
use crate::kernel::enumset::EnumSet;
use crate::kernel::fuel::{Fuel, Meter};
use crate::kernel::nat::Nat;
use crate::kernel::term::{eval_term, parse_term, TermEnv};
use crate::oracle::{
    complement_oracle, embed_realizer, oracle_representer, to_element, DialogueProgram,
    DialogueStep, ExtendedBackend,
};
use crate::streams::{eq_inf, f_fn, BinElem, K2Backend, K2Elem};

type GraphExt = ExtendedBackend<GraphBackend>;

/// The two ambient elements every construction threads through the
/// extension: `r` embeds base application, `c` represents the oracle.
fn r_and_c(ext: &Arc<GraphExt>) -> (GraphElem, GraphElem) {
    (
        embed_realizer(ext.base()),
        oracle_representer(ext.base(), ext.oracle()),
    )
}

fn env2(pairs: Vec<(&str, GraphElem)>) -> TermEnv<GraphElem> {
    pairs
        .into_iter()
        .map(|(n, e)| (n.to_string(), e))
        .collect()
}

// ---------------------------------------------------------------------------
// The boolean normalizer of the complemented graph model
// ---------------------------------------------------------------------------

/// The element `n` with `n ·_C ∅ = F` and `n ·_C {0} = T`, where `T`/`F`
/// are the derived booleans of the extension.  It is the composite
/// `⟨x⟩ r (r M x) (c x)`, i.e. `n · A = (M ∘ A) ∘ (ℕ − A)`, over the
/// lookup table
///
/// ```text
/// M = {[1, [2, x]] | x ∈ T} ∪ {[0, [1, x]] | x ∈ F}
/// ```
///
/// read with the pair-code convention `[m, n]`: `m` a finite-set code,
/// `n` the contributed value.  `1` codes `{0}` and `2` codes `{1}`, so
/// `M ∘ ∅` keeps only the `F`-rows, while `M ∘ {0} ∘ (ℕ − {0})` keeps
/// only the `T`-rows.  Consequence: `(∅, {0})` is a working boolean pair
/// for the extension.
pub fn boolean_normalizer(ext: &Arc<GraphExt>) -> Result<GraphElem> {
    let m = normalizer_table(ext);
    let (r, c) = r_and_c(ext);
    let meter = Fuel::DESK.meter();
    let term = parse_term("<x> r (r M x) (c x)")?;
    eval_term(&term, &env2(vec![("r", r), ("c", c), ("M", m)]), &**ext, &meter)
}

/// The table `M` of [`boolean_normalizer`], as an honest enumerated set.
pub fn normalizer_table(ext: &Arc<GraphExt>) -> GraphElem {
    let t = ext.truth();
    let f = ext.falsity();
    let t_rows = t.view().map(|x| pair(&Nat::one(), &pair(&Nat::from(2u64), x)));
    let f_rows = f.view().map(|x| pair(&Nat::zero(), &pair(&Nat::one(), x)));
    GraphElem::from_enumset("normalizer table", t_rows.union(&f_rows))
}

// ---------------------------------------------------------------------------
// The equality decider of the complemented graph model
// ---------------------------------------------------------------------------

/// The probe table `P = {[{x}, [{x}, 0]] | x ∈ ℕ}` (singleton codes
/// `2^x`), whose base double application is the intersection test:
/// `P ∘ A ∘ B = {0 | A ∩ B ≠ ∅}`.
pub fn intersection_table() -> GraphElem {
    let view = EnumSet::from_stages(|s| {
        (0..=s)
            .map(|x| {
                let c = Nat::pow2(x); // the code of the singleton {x}
                pair(&c, &pair(&c, &Nat::zero()))
            })
            .collect()
    });
    GraphElem::from_enumset("intersection probe table", view)
}

/// The two-argument element of the extension deciding intersection:
/// `S ·_C A ·_C B = {0}` iff `A ∩ B ≠ ∅`, `∅` otherwise.  The
/// enumeration is driven by [`intersection_table`] through base
/// application; when both arguments carry exact descriptions the result
/// records its own (finite) description so that the complement oracle
/// can keep answering on it downstream.
pub fn intersection_probe(ext: &Arc<GraphExt>) -> GraphElem {
    let bk = ext.base().clone();
    let table = intersection_table();
    let dp = DialogueProgram::new("S", move |a: &GraphElem, _ans: &[GraphElem], _m: &Meter| {
        let a = a.clone();
        let bk1 = bk.clone();
        let table = table.clone();
        let inner = DialogueProgram::new(
            "(S ·)",
            move |b: &GraphElem, _ans: &[GraphElem], m: &Meter| {
                let pa = apply_elems(&table, &a, m)?;
                let pab = apply_elems(&pa, b, m)?;
                let exact = match (a.desc(), b.desc()) {
                    (Some(da), Some(db)) => match (da.ev_per(), db.ev_per()) {
                        (Ok(ea), Ok(eb)) => {
                            let empty = ea.intersection(&eb)?.is_empty();
                            Some(if empty {
                                SetDesc::empty()
                            } else {
                                SetDesc::fin([Nat::zero()])
                            })
                        }
                        _ => None,
                    },
                    _ => None,
                };
                Ok(DialogueStep::Done(match exact {
                    Some(d) => pab.describe(d),
                    None => pab,
                }))
            },
        );
        Ok(DialogueStep::Done(to_element(&bk1, &inner)))
    });
    to_element(ext.base(), &dp)
}

/// The equality decider of the extension:
///
/// ```text
/// M_eq ·_C A ·_C B = {0}   iff A = B,   ∅ otherwise
/// ```
///
/// built as `⟨y x⟩ (not (S (c y) x)) and (not (S y (c x)))`: `A = B` iff
/// `B ∩ (ℕ−A)` and `A ∩ (ℕ−B)` are both empty.  `not` negates the
/// boolean pair `(∅, {0})` through one complement question
/// (`not = ⟨w⟩ r I0 (c w)` with `I0 = {[{0}, 0]}`, i.e.
/// `not(X) = {0 | 0 ∈ ℕ−X}`), and `and` is the continuous conjunction
/// `⟨u v⟩ r (r A2 u) v` with `A2 = {[{0}, [{0}, 0]]}`.
///
/// Arguments must carry exact descriptions (the complement oracle
/// refuses anything else); a positive verdict is the appearance of `0`,
/// a negative verdict is its absence to fuel.
pub fn eq_decider(ext: &Arc<GraphExt>) -> Result<GraphElem> {
    let (r, c) = r_and_c(ext);
    let meter = Fuel::DESK.meter();

    let i0 = {
        let code = pair(&set_code([&Nat::zero()])?, &Nat::zero());
        GraphElem::from_enumset("negation probe table", EnumSet::finite([code]))
    };
    let a2 = {
        let one = set_code([&Nat::zero()])?;
        let code = pair(&one, &pair(&one, &Nat::zero()));
        GraphElem::from_enumset("conjunction probe table", EnumSet::finite([code]))
    };

    let not_e = eval_term(
        &parse_term("<w> r I0 (c w)")?,
        &env2(vec![("r", r.clone()), ("c", c.clone()), ("I0", i0)]),
        &**ext,
        &meter,
    )?;
    let and_e = eval_term(
        &parse_term("<u v> r (r A2 u) v")?,
        &env2(vec![("r", r.clone()), ("A2", a2)]),
        &**ext,
        &meter,
    )?;
    let s_e = intersection_probe(ext);

    let term = parse_term("<y x> and (not (S (c y) x)) (not (S y (c x)))")?;
    eval_term(
        &term,
        &env2(vec![("and", and_e), ("not", not_e), ("S", s_e), ("c", c)]),
        &**ext,
        &meter,
    )
}

// ---------------------------------------------------------------------------
// Certificates for Cantor-continuous maps, and their compiler
// ---------------------------------------------------------------------------

/// A desk-scale certificate that a set map `F` is continuous for the
/// two-sided (Cantor) topology: for each output value `n`, a finite
/// family of basic opens `U_p^q` whose union is `{A | n ∈ F(A)}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConrepCertificate {
    families: BTreeMap<Nat, Vec<BasicOpenCantor>>,
}

impl ConrepCertificate {
    pub fn new() -> ConrepCertificate {
        ConrepCertificate::default()
    }

    /// Register one basic open under output value `out`.
    pub fn push(&mut self, out: Nat, open: BasicOpenCantor) {
        self.families.entry(out).or_default().push(open);
    }

    pub fn families(&self) -> &BTreeMap<Nat, Vec<BasicOpenCantor>> {
        &self.families
    }

    /// Parse the line format `out n: p={…} q={…}` (one line per basic
    /// open, families grouped by repeating the output value; `#` starts
    /// a comment line).  Overlapping `p`/`q` are rejected.
    pub fn parse(text: &str) -> Result<ConrepCertificate> {
        let mut cert = ConrepCertificate::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut cur = Cursor { s, pos: 0, line };
            cur.keyword("out")?;
            let out = cur.nat()?;
            cur.token(':')?;
            cur.keyword("p")?;
            cur.token('=')?;
            let p = cur.braced_set()?;
            cur.keyword("q")?;
            cur.token('=')?;
            let q = cur.braced_set()?;
            cur.end()?;
            cert.push(out, BasicOpenCantor::new(p, q)?);
        }
        Ok(cert)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (n, opens) in &self.families {
            for o in opens {
                let ps: Vec<String> = o.p().iter().map(Nat::to_string).collect();
                let qs: Vec<String> = o.q().iter().map(Nat::to_string).collect();
                out.push_str(&format!(
                    "out {}: p={{{}}} q={{{}}}\n",
                    n,
                    ps.join(","),
                    qs.join(",")
                ));
            }
        }
        out
    }

    /// The map the certificate denotes, evaluated directly on a
    /// described input: `n ∈ F(A)` iff some listed `U_p^q` contains `A`.
    pub fn evaluate(&self, a: &SetDesc) -> Result<BTreeSet<Nat>> {
        let ev = a.ev_per()?;
        let mut out = BTreeSet::new();
        for (n, opens) in &self.families {
            let hit = opens.iter().any(|o| {
                o.p().iter().all(|x| ev.contains(x)) && o.q().iter().all(|x| !ev.contains(x))
            });
            if hit {
                out.insert(n.clone());
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ConrepCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> PcaError {
        PcaError::Parse { line: self.line, col: self.pos + 1, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(kw) {
            self.pos += kw.len();
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`")))
        }
    }

    fn token(&mut self, t: char) -> Result<()> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(t) {
            self.pos += t.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected `{t}`")))
        }
    }

    fn nat(&mut self) -> Result<Nat> {
        self.skip_ws();
        let start = self.pos;
        while self.s[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        self.s[start..self.pos]
            .parse::<u64>()
            .map(Nat::from)
            .map_err(|_| self.err("number out of range"))
    }

    fn braced_set(&mut self) -> Result<BTreeSet<Nat>> {
        self.token('{')?;
        let mut out = BTreeSet::new();
        self.skip_ws();
        if self.s[self.pos..].starts_with('}') {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.insert(self.nat()?);
            self.skip_ws();
            if self.s[self.pos..].starts_with(',') {
                self.pos += 1;
            } else {
                self.token('}')?;
                return Ok(out);
            }
        }
    }

    fn end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.s.len() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }
}

/// Compile a certificate into an element `Z` of the extension with
/// `Z ·_C A = F(A)`.  Following the continuity argument word for word:
///
/// ```text
/// W = {[a, [b, n]] | the certificate lists U_p^q under n,
///                    a = code(p), b = code(q)}
/// Z = ⟨x⟩ s (r W x) x        where s = ⟨u v⟩ r u (c v)
/// ```
///
/// so that `Z · A = (W ∘ A) ∘ (ℕ − A)`: the first application keeps the
/// rows whose required part sits inside `A`, the second keeps those
/// whose forbidden part misses `A`.
pub fn conrep_compile(ext: &Arc<GraphExt>, cert: &ConrepCertificate) -> Result<GraphElem> {
    let mut rows = BTreeSet::new();
    for (n, opens) in cert.families() {
        for o in opens {
            let a = set_code(o.p())?;
            let b = set_code(o.q())?;
            rows.insert(pair(&a, &pair(&b, n)));
        }
    }
    let w = GraphElem::from_enumset("certificate row table", EnumSet::finite(rows));
    let (r, c) = r_and_c(ext);
    let meter = Fuel::DESK.meter();
    let term = parse_term("<x> (<u v> r u (c v)) (r W x) x")?;
    eval_term(&term, &env2(vec![("r", r), ("c", c), ("W", w)]), &**ext, &meter)
}

/// The complement map as a certificate, truncated to output values below
/// `bound` (the map itself has one basic open per output value:
/// `n ∈ ℕ−A` iff `A ∈ U_∅^{{n}}`).
pub fn complement_certificate(bound: u64) -> ConrepCertificate {
    let mut cert = ConrepCertificate::new();
    for n in 0..bound {
        let open = BasicOpenCantor::new(BTreeSet::new(), [Nat::from(n)].into_iter().collect())
            .expect("disjoint by construction");
        cert.push(Nat::from(n), open);
    }
    cert
}

/// The identity map as a certificate, truncated below `bound`
/// (`n ∈ A` iff `A ∈ U_{{n}}^∅`).
pub fn identity_certificate(bound: u64) -> ConrepCertificate {
    let mut cert = ConrepCertificate::new();
    for n in 0..bound {
        let open = BasicOpenCantor::new([Nat::from(n)].into_iter().collect(), BTreeSet::new())
            .expect("disjoint by construction");
        cert.push(Nat::from(n), open);
    }
    cert
}

/// The constant map `F ≡ {value}` as a certificate (one unconstrained
/// basic open under the single output value).
pub fn constant_certificate(value: u64) -> ConrepCertificate {
    let mut cert = ConrepCertificate::new();
    let open = BasicOpenCantor::new(BTreeSet::new(), BTreeSet::new())
        .expect("disjoint by construction");
    cert.push(Nat::from(value), open);
    cert
}

// ---------------------------------------------------------------------------
// Representing the successor-avoiding map on coded initial segments
// ---------------------------------------------------------------------------

/// Run the pipeline that represents the successor-avoiding map `S`
/// (`S(α)(n) = n+1` if `n+1` misses `im(α)`, else `0`) on the graph
/// model's coding of sequences by initial-segment sets:
///
/// ```text
/// A = {n+1 | n+1 ∈ im(α)}            (continuous from the segment set)
/// B = ℕ − (A ∪ {0})                  (the single oracle question)
/// D = {[0, n+1] | n+1 ∈ A} ∪ {[1, n+1] | n+1 ∈ B}
/// E ∘ D                              (the segment set of S(α))
/// ```
///
/// where `E` is the fixed set of pairs `[a, σ]` such that `σ` is a coded
/// sequence of some length `n`, every position `i < n` is tagged in
/// `e_a` (some `[j, i+1] ∈ e_a`), and `σ_i = 0` exactly when
/// `[0, i+1] ∈ e_a`.  Applying `E` to `D` resolves each position from
/// `D`'s two tag families; the output enumerates, for every length, the
/// code of the length-`n` initial segment of `S(α)`.
///
/// The input is the sequence whose segment set is meant: the pipeline
/// consumes only its image description (the one ingredient that is not
/// continuously available from the segment set, and exactly what the
/// oracle question needs).  Sequences without one are refused.
pub fn s_representation(alpha: &K2Elem) -> Result<GraphElem> {
    let (a_desc, answer) = s_pipeline_question(alpha)?;
    let b_desc = answer
        .desc()
        .expect("complement answers carry a description")
        .clone();

    // Resolving σ_i against E's condition means testing [0, i+1] ∈ D
    // versus [1, i+1] ∈ D, i.e. membership in the two tag families;
    // every positive number must carry exactly one tag.  Segments whose
    // codes outgrow the coding's feasibility bound simply never appear.
    let view = EnumSet::from_stages(move |s| {
        let mut out = BTreeSet::new();
        for n in 0..=s {
            let mut seg = Vec::with_capacity(n as usize);
            let mut ok = true;
            for i in 0..n {
                let v = Nat::from(i + 1);
                match (
                    a_desc.contains(&v).unwrap_or(false),
                    b_desc.contains(&v).unwrap_or(false),
                ) {
                    (true, false) => seg.push(Nat::zero()),
                    (false, true) => seg.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                if let Ok(code) = encode_seq(&seg) {
                    out.insert(code);
                }
            }
        }
        out
    });
    Ok(GraphElem::from_enumset(
        format!("segments of S({})", alpha.label()),
        view,
    ))
}

/// The shared head of the pipeline: builds `A` from the input's image
/// description, asks the oracle the one question `ℕ − (A ∪ {0})`, and
/// returns `A`'s description together with the oracle's answer.  Exact
/// images travel in closed form; decidable-but-inexact ones keep their
/// structural shape (membership still resolves every tag).
fn s_pipeline_question(alpha: &K2Elem) -> Result<(SetDesc, GraphElem)> {
    let image = alpha.image().ok_or_else(|| {
        PcaError::OracleNeedsDescription(format!(
            "the complement step needs the image of {}, which is opaque",
            alpha.label()
        ))
    })?;

    // A = positive members of the image.
    let a_raw = SetDesc::Inter(
        Box::new(image.clone()),
        Box::new(SetDesc::cofin([Nat::zero()])),
    );
    let a_desc = a_raw.normalize().unwrap_or(a_raw);

    // B = ℕ − (A ∪ {0}), asked of the oracle as one question.
    let q_raw = SetDesc::Union(Box::new(a_desc.clone()), Box::new(SetDesc::fin([Nat::zero()])));
    let question = GraphElem::from_desc(&q_raw.normalize().unwrap_or(q_raw))?;
    let meter = Fuel::DESK.meter();
    let answer = complement_oracle().call(&question, &meter)?;
    Ok((a_desc, answer))
}

/// The tagged membership table `D` of the pipeline, exposed for
/// inspection: rows `[0, v]` for `v ∈ A`, `[1, v]` for `v ∈ B`.
pub fn s_pipeline_tags(alpha: &K2Elem) -> Result<GraphElem> {
    let (a_desc, answer) = s_pipeline_question(alpha)?;
    let a_elem = GraphElem::from_desc(&a_desc)?;
    let view = a_elem
        .view()
        .map(|v| pair(&Nat::zero(), v))
        .union(&answer.view().map(|v| pair(&Nat::one(), v)));
    Ok(GraphElem::from_enumset("tagged membership table", view))
}

// ---------------------------------------------------------------------------
// The equality decider of the extended sequence model
// ---------------------------------------------------------------------------

/// The equality decider of the extended sequence model: the input is a
/// coded pair `[α, β]`; the strategy forms the pointwise inequality
/// indicator `F(α, β)`, asks the oracle for `S(F(α, β))`, and answers
/// the extension's truth exactly when that sequence starts with `1`
/// (`α = β` iff `1 ∉ im(F(α, β))` iff `S(F(α, β))(0) = 1`).  One
/// question per run; opaque inputs are refused by the oracle.  The
/// verdicts are the extension's own booleans, so that downstream
/// applications keep speaking the dialogue protocol.
pub fn k2s_eq(ext: &Arc<ExtendedBackend<K2Backend>>) -> K2Elem {
    let bk = ext.base().clone();
    let ext2 = ext.clone();
    let dp = DialogueProgram::new(
        "sequence equality decider",
        move |input: &K2Elem, ans: &[K2Elem], _m: &Meter| {
            Ok(match ans.first() {
                None => {
                    let (a, b) = bk.unpair_elems(input)?;
                    DialogueStep::Query(f_fn(&a, &b)?)
                }
                Some(sigma) => {
                    let first = sigma.at(&Nat::zero())?;
                    DialogueStep::Done(if first == Nat::one() {
                        ext2.truth()
                    } else {
                        ext2.falsity()
                    })
                }
            })
        },
    );
    to_element(ext.base(), &dp)
}

// ---------------------------------------------------------------------------
// Tail equality through complements
// ---------------------------------------------------------------------------

/// Tail equality computed the long way around, through three complement
/// questions and one projection:
///
/// ```text
/// Eq_∞(A, B) = ℕ − π((A ∩ (ℕ−B)) ∪ ((ℕ−A) ∩ B))
/// ```
///
/// with `π` the first-component pair projection.  Must agree
/// extensionally with [`crate::streams::eq_inf`], which computes the
/// same set directly from the symmetric difference.
pub fn tail_eq_via_complements(a: &BinElem, b: &BinElem) -> Result<BinElem> {
    let da = a.desc().ok_or_else(|| {
        PcaError::OracleNeedsDescription("tail equality needs described streams".to_string())
    })?;
    let db = b.desc().ok_or_else(|| {
        PcaError::OracleNeedsDescription("tail equality needs described streams".to_string())
    })?;
    let oracle = complement_oracle();
    let meter = Fuel::DESK.meter();
    let not_b = oracle.call(&GraphElem::from_desc(db)?, &meter)?;
    let not_a = oracle.call(&GraphElem::from_desc(da)?, &meter)?;
    let left = SetDesc::Inter(
        Box::new(da.clone()),
        Box::new(not_b.desc().expect("complement answers carry a description").clone()),
    );
    let right = SetDesc::Inter(
        Box::new(not_a.desc().expect("complement answers carry a description").clone()),
        Box::new(db.clone()),
    );
    let diff = SetDesc::Union(Box::new(left), Box::new(right)).normalize()?;
    let projected = diff.proj_pi()?;
    let outer = oracle.call(&GraphElem::from_desc(&projected)?, &meter)?;
    BinElem::from_desc(outer.desc().expect("complement answers carry a description"))
}

// ---------------------------------------------------------------------------
// Graph-model application rebuilt inside the binary model
// ---------------------------------------------------------------------------

/// Graph-model application computed through the binary model's toolbox:
///
/// ```text
/// I(B)     = {[m, n] | e_m ⊆ B}          (the rows B can serve)
/// II(A, B) = A ∩ I(B)
/// A ∘ B    = π(II(A, B))                  (second-component projection)
/// ```
///
/// and `π` itself is reachable through tail equality, since
/// `Eq_∞(∅, X) = ℕ − π(X)`.  When the function side is a finite
/// described set and the argument is described, `II` is computed
/// exactly and the projection is literally routed through
/// [`crate::streams::eq_inf`] and a complement; otherwise the same set
/// is enumerated stage by stage (membership of `e_m` in `B` decided by
/// `B`'s description when it has one, semi-decided from its view when
/// not).
pub fn graph_apply_in_binary(a: &GraphElem, b: &GraphElem) -> Result<GraphElem> {
    // Exact route when the row set is finite and the argument described.
    if let (Some(da), Some(db)) = (a.desc(), b.desc()) {
        if let (Ok(ea), Some(rows)) = (da.ev_per(), da.ev_per().ok().and_then(|e| e.as_finite())) {
            let _ = ea;
            let eb = db.ev_per()?;
            let mut kept = BTreeSet::new();
            for z in rows {
                let (m, _n) = unpair(&z);
                if set_decode(&m).iter().all(|x| eb.contains(x)) {
                    kept.insert(z);
                }
            }
            let ii = SetDesc::Fin(kept);
            let empty = BinElem::from_desc(&SetDesc::empty())?;
            let ii_bin = BinElem::from_desc(&ii)?;
            let tail = eq_inf(&empty, &ii_bin)?; // ℕ − π(II)
            let result = tail
                .desc()
                .expect("tail equality answers carry a description")
                .complement()?;
            return GraphElem::from_desc(&result);
        }
    }

    // Enumerated route: π(II(A, B)) stage by stage.
    let a_view = a.view().clone();
    let b_desc = b.desc().cloned();
    let b_view = b.view().clone();
    let view = EnumSet::from_stages(move |s| {
        let mut out = BTreeSet::new();
        for z in a_view.upto(s) {
            let (m, n) = unpair(&z);
            let served = set_decode(&m).iter().all(|x| match &b_desc {
                Some(d) => d.contains(x).unwrap_or(false),
                None => b_view.member_semi(x, s),
            });
            if served {
                out.insert(n);
            }
        }
        out
    });
    Ok(GraphElem::from_enumset(
        format!("project(rows({}) into {})", a.label(), b.label()),
        view,
    ))
}
