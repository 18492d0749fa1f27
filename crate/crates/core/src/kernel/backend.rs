//! The contract every concrete model implements.
//!
//! A [`PcaBackend`] packages one partial combinatory algebra: a carrier
//! (the associated `Elem` type), the partial application, the `k`/`s`
//! combinators, and the canonical element-level codings (booleans, pairs,
//! sequences) that the oracle-extension machinery and the test suites are
//! written against.  Everything above the kernel — terms, dialogues,
//! witnesses, morphisms, suites, the CLI — is generic over this trait, so
//! each construction is implemented once and exercised in every model.
//!
//! Booleans are fixed as the bracket terms `T = ⟨x y⟩x` and `F = ⟨x y⟩y`
//! (with the case combinator applying the boolean itself), so `truth` /
//! `falsity` have default implementations in terms of `k`, `s` and
//! `apply`.  Reading a boolean *back* out of an element — needed to
//! resolve dialogue flags — is the probe protocol: apply the element to
//! two distinguished probe arguments and let the backend decide which one
//! came out.  In enumeration-flavoured models that decision is itself a
//! fuel-bounded semi-decision, which is exactly the honest semantics the
//! dialogue loop documents.

use std::fmt;
use std::sync::Arc;

use crate::error::{PcaError, Result};
use crate::kernel::desc::SetDesc;
use crate::kernel::fuel::Meter;
use crate::kernel::nat::Nat;

/// A host-level application behaviour attached to an element.
pub type HostFun<E> = Arc<dyn Fn(&E, &Meter) -> Result<E> + Send + Sync>;

/// A closed-form stream definition, as written in source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamExpr {
    /// `stream(const c)` — the constant stream.
    Const(Nat),
    /// `stream(poly c0 c1 …)` — `α(n) = c0 + c1·n + c2·n² + …`.
    Poly(Vec<Nat>),
    /// `stream(periodic v0 … v_{p-1})` — `α(n) = v[n mod p]`.
    Periodic(Vec<Nat>),
    /// `stream(patch i:v … base e)` — `e` overridden at finitely many points.
    Patch(Vec<(Nat, Nat)>, Box<StreamExpr>),
}

impl StreamExpr {
    /// Pointwise value — the semantics every backend agrees on.
    pub fn value_at(&self, n: &Nat) -> Nat {
        match self {
            StreamExpr::Const(c) => c.clone(),
            StreamExpr::Poly(cs) => {
                // Horner evaluation, exact.
                let mut acc = Nat::zero();
                for c in cs.iter().rev() {
                    acc = &(&acc * n) + c;
                }
                acc
            }
            StreamExpr::Periodic(vs) => vs[n.rem_u64(vs.len() as u64) as usize].clone(),
            StreamExpr::Patch(patches, base) => patches
                .iter()
                .find(|(i, _)| i == n)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| base.value_at(n)),
        }
    }
}

impl fmt::Display for StreamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn vals(f: &mut fmt::Formatter<'_>, vs: &[Nat]) -> fmt::Result {
            for v in vs {
                write!(f, " {v}")?;
            }
            Ok(())
        }
        match self {
            StreamExpr::Const(c) => write!(f, "stream(const {c})"),
            StreamExpr::Poly(cs) => {
                write!(f, "stream(poly")?;
                vals(f, cs)?;
                write!(f, ")")
            }
            StreamExpr::Periodic(vs) => {
                write!(f, "stream(periodic")?;
                vals(f, vs)?;
                write!(f, ")")
            }
            StreamExpr::Patch(ps, base) => {
                write!(f, "stream(patch")?;
                for (i, v) in ps {
                    write!(f, " {i}:{v}")?;
                }
                // The base repeats the stream grammar without the wrapper.
                let inner = base.to_string();
                let inner = inner
                    .strip_prefix("stream(")
                    .and_then(|s| s.strip_suffix(')'))
                    .expect("stream display is wrapped");
                write!(f, " base {inner})")
            }
        }
    }
}

/// A constant as written in term source: a described set or a stream.
#[derive(Clone, Debug)]
pub enum Literal {
    Set(SetDesc),
    Stream(StreamExpr),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Set(d) => write!(f, "{d}"),
            Literal::Stream(s) => write!(f, "{s}"),
        }
    }
}

/// One partial combinatory algebra, desk-executable.
pub trait PcaBackend: Send + Sync {
    /// Carrier elements.  Cloning must be cheap (elements are shared
    /// handles, not deep copies).
    type Elem: Clone + Send + Sync + 'static;

    /// Short stable name, e.g. `"graph"` or `"k2+S"`.
    fn name(&self) -> &'static str;

    /// The partial application.  All partiality is surfaced as errors
    /// (`Exhausted` for fuel, `Diverges` for definite divergence).
    fn apply(&self, a: &Self::Elem, b: &Self::Elem, meter: &Meter) -> Result<Self::Elem>;

    fn k(&self) -> Self::Elem;
    fn s(&self) -> Self::Elem;

    /// `T = ⟨x y⟩x`, i.e. the compiled term `s (k k) (s k k)`.
    fn truth(&self) -> Self::Elem {
        let meter = crate::kernel::fuel::Fuel::DESK.meter();
        let kk = self.apply(&self.k(), &self.k(), &meter).expect("k k is total");
        let sk = self.apply(&self.s(), &self.k(), &meter).expect("s k is total");
        let skk = self.apply(&sk, &self.k(), &meter).expect("s k k is total");
        let skk_ = self.apply(&self.s(), &kk, &meter).expect("s (k k) is total");
        self.apply(&skk_, &skk, &meter).expect("s (k k) (s k k) is total")
    }

    /// `F = ⟨x y⟩y`, i.e. the compiled term `k (s k k)`.
    fn falsity(&self) -> Self::Elem {
        let meter = crate::kernel::fuel::Fuel::DESK.meter();
        let sk = self.apply(&self.s(), &self.k(), &meter).expect("s k is total");
        let skk = self.apply(&sk, &self.k(), &meter).expect("s k k is total");
        self.apply(&self.k(), &skk, &meter).expect("k (s k k) is total")
    }

    /// Canonical pairing of elements (model-specific coding).
    fn pair_elems(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;

    /// Inverse of [`pair_elems`] up to extensional equality.
    fn unpair_elems(&self, e: &Self::Elem) -> Result<(Self::Elem, Self::Elem)>;

    /// Canonical coding of a finite sequence of elements; components must
    /// be exactly recoverable by [`seq_nth`].
    fn seq_elems(&self, xs: &[Self::Elem]) -> Result<Self::Elem>;

    /// Component `i` of a sequence of (at least) `len` elements.
    fn seq_nth(&self, e: &Self::Elem, len: usize, i: usize) -> Result<Self::Elem>;

    /// Recover the component count of a sequence built by [`seq_elems`]
    /// from the element alone.  The codings are self-delimiting so that
    /// dialogue strategies can tell how many rounds a history holds.
    fn seq_len(&self, e: &Self::Elem, meter: &Meter) -> Result<usize> {
        let _ = (e, meter);
        Err(PcaError::MalformedCode(format!(
            "{} has no generic sequence-length decoding",
            self.name()
        )))
    }

    /// The two probe arguments used to read a boolean back out of an
    /// element, and the decision on the probe result.
    fn bool_probes(&self) -> (Self::Elem, Self::Elem);
    fn decide_bool_probe(&self, r: &Self::Elem, meter: &Meter) -> Result<bool>;

    /// Resolve an element that is (claimed to be) a boolean.  Dovetailed
    /// semi-decision in enumeration models: `Exhausted` when the fuel runs
    /// out before either verdict.
    fn as_bool(&self, e: &Self::Elem, meter: &Meter) -> Result<bool> {
        let (p0, p1) = self.bool_probes();
        let r = self.apply(&self.apply(e, &p0, meter)?, &p1, meter)?;
        self.decide_bool_probe(&r, meter)
    }

    /// Equality to fuel: compare the two elements on an observation front
    /// of size `prefix` (first `prefix` enumerated values, or the first
    /// `prefix` stream points — model-specific, documented per backend).
    fn agree(&self, a: &Self::Elem, b: &Self::Elem, prefix: u64, meter: &Meter) -> Result<bool>;

    /// Interpret a source-text literal, if this model can.
    fn literal(&self, lit: &Literal) -> Result<Self::Elem>;

    /// An element whose application behaviour is the given host function.
    /// The element still denotes an honest carrier member (each backend
    /// documents the materialization); the host function is the fast path.
    #[allow(clippy::wrong_self_convention)]
    fn from_host_fun(&self, label: &str, f: HostFun<Self::Elem>) -> Self::Elem;

    /// Human-readable rendering: exact description when one is attached,
    /// an enumeration/stream prefix otherwise.
    fn show(&self, e: &Self::Elem, stage_cap: u64) -> String;

    /// Convenience: evaluate `a b₁ … bₙ` left to right.
    fn apply_many(&self, a: &Self::Elem, bs: &[Self::Elem], meter: &Meter) -> Result<Self::Elem> {
        let mut acc = a.clone();
        for b in bs {
            acc = self.apply(&acc, b, meter)?;
        }
        Ok(acc)
    }
}

/// Shared helper: an unsupported-literal error with a uniform message.
pub fn unsupported_literal(model: &str, lit: &Literal) -> PcaError {
    PcaError::MalformedCode(format!("model {model} does not interpret literal {lit}"))
}
