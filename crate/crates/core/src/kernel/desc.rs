//! Finite descriptions of subsets of ℕ, with an exact decision algebra.
//!
//! Several maps this workbench must execute — complementation, the
//! successor-style separator on streams, extensional equality — are *not*
//! computable from positive enumeration alone; they are oracles.  A
//! [`SetDesc`] is the finite certificate such an oracle consumes: a syntax
//! tree of finite sets, cofinite sets, boolean combinations, the two
//! coding images `2X` and `2X+1`, opaque-but-total characteristic
//! functions, and machine-enumerable sets given by a program index.
//!
//! The teeth of the module is the **eventually periodic normal form**
//! [`EvPer`]: a finite `head` of explicit bits followed by an infinite
//! repetition of `pattern`, indexed by absolute residue (`z ∈ X` iff
//! `pattern[z mod P]` once `z` is past the head).  Every program-free,
//! non-opaque description normalizes to a canonical `EvPer`, and the class
//! is closed under complement, union, intersection, both coding images —
//! and, less obviously, under the pair-code projection
//! `π(X) = {m | ∃n: ⟨n,m⟩ ∈ X}`.
//!
//! Closure under π works because the codes of the column over `m` are
//! `{tri(w) + m | w ≥ m}` with `tri(w) = w(w+1)/2`, and `tri(w) mod P` is
//! periodic in `w` with period `2P`.  Past the head, membership of `m` in
//! `π(X)` therefore only depends on `m mod P` through the fixed residue
//! set `R = {tri(t) mod P | t < 2P}`; below that, a bounded scan settles
//! each bit exactly.  Tests verify this against brute enumeration.
//!
//! Exactness has a price: sizes are capped.  Operations refuse (with a
//! fuel error) rather than build heads or periods beyond desk scale.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;

use crate::error::{PcaError, Result};
use crate::kernel::enumset::EnumSet;
use crate::kernel::nat::Nat;

/// Longest explicit head an [`EvPer`] may carry.
pub const MAX_HEAD: usize = 1 << 20;
/// Longest pattern (period) an [`EvPer`] may carry.
pub const MAX_PERIOD: usize = 1 << 13;

/// An eventually periodic subset of ℕ in canonical form.
///
/// Membership: `z ∈ X` iff `head[z]` when `z < head.len()`, else
/// `pattern[z mod pattern.len()]`.  Canonical means: the pattern has
/// minimal period, and the head carries no trailing bit that merely
/// repeats the pattern — so two `EvPer`s are extensionally equal iff they
/// are structurally equal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EvPer {
    head: Vec<bool>,
    pattern: Vec<bool>,
}

impl EvPer {
    /// Canonicalizing constructor.
    pub fn from_parts(head: Vec<bool>, pattern: Vec<bool>) -> Result<EvPer> {
        if pattern.is_empty() {
            return Err(PcaError::MalformedCode("empty period in set description".into()));
        }
        if head.len() > MAX_HEAD || pattern.len() > MAX_PERIOD {
            return Err(PcaError::Exhausted("set description beyond feasible size"));
        }
        let mut e = EvPer { head, pattern };
        e.canonicalize();
        Ok(e)
    }

    /// The empty set.
    pub fn empty() -> EvPer {
        EvPer { head: vec![], pattern: vec![false] }
    }

    /// All of ℕ.
    pub fn full() -> EvPer {
        EvPer { head: vec![], pattern: vec![true] }
    }

    /// A finite set.
    pub fn finite(elems: &BTreeSet<Nat>) -> Result<EvPer> {
        let mut head = vec![];
        for x in elems {
            let i = x
                .to_usize()
                .filter(|&i| i < MAX_HEAD)
                .ok_or(PcaError::Exhausted("finite description beyond feasible size"))?;
            if head.len() <= i {
                head.resize(i + 1, false);
            }
            head[i] = true;
        }
        EvPer::from_parts(head, vec![false])
    }

    /// Complement of a finite set.
    pub fn cofinite(elems: &BTreeSet<Nat>) -> Result<EvPer> {
        Ok(EvPer::finite(elems)?.complement())
    }

    fn canonicalize(&mut self) {
        // Minimal period divides the current one.
        let p = self.pattern.len();
        for d in 1..=p {
            if p.is_multiple_of(d) && (0..p).all(|r| self.pattern[r] == self.pattern[r % d]) {
                self.pattern.truncate(d);
                break;
            }
        }
        let d = self.pattern.len();
        // Drop head bits that agree with the pattern at their residue.
        while let Some(&last) = self.head.last() {
            let z = self.head.len() - 1;
            if last == self.pattern[z % d] {
                self.head.pop();
            } else {
                break;
            }
        }
    }

    pub fn contains(&self, z: &Nat) -> bool {
        if let Some(i) = z.to_usize() {
            if i < self.head.len() {
                return self.head[i];
            }
        }
        self.pattern[z.rem_u64(self.pattern.len() as u64) as usize]
    }

    pub fn is_empty(&self) -> bool {
        *self == EvPer::empty()
    }

    pub fn is_full(&self) -> bool {
        *self == EvPer::full()
    }

    /// `Some(members)` iff the set is finite.
    pub fn as_finite(&self) -> Option<BTreeSet<Nat>> {
        if self.pattern != [false] {
            return None;
        }
        Some(
            (0..self.head.len())
                .filter(|&i| self.head[i])
                .map(Nat::from)
                .collect(),
        )
    }

    /// `Some(non-members)` iff the set is cofinite.
    pub fn as_cofinite(&self) -> Option<BTreeSet<Nat>> {
        self.complement().as_finite()
    }

    pub fn complement(&self) -> EvPer {
        // Flipping every bit preserves canonicity.
        EvPer {
            head: self.head.iter().map(|b| !b).collect(),
            pattern: self.pattern.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &EvPer, f: impl Fn(bool, bool) -> bool) -> Result<EvPer> {
        let p = self.pattern.len().lcm(&other.pattern.len());
        if p > MAX_PERIOD {
            return Err(PcaError::Exhausted("combined period beyond feasible size"));
        }
        let h = self.head.len().max(other.head.len());
        let bit = |e: &EvPer, z: usize| {
            if z < e.head.len() {
                e.head[z]
            } else {
                e.pattern[z % e.pattern.len()]
            }
        };
        let head = (0..h).map(|z| f(bit(self, z), bit(other, z))).collect();
        // Residues are evaluated at absolute positions ≥ h so both sides
        // are already in their periodic tails.
        let base = h.div_ceil(p) * p;
        let pattern = (0..p)
            .map(|r| {
                let z = base + r;
                f(bit(self, z), bit(other, z))
            })
            .collect::<Vec<_>>();
        // `pattern` above is indexed by (base + r) mod p = r, so it is
        // already aligned to absolute residues.
        EvPer::from_parts(head, pattern)
    }

    pub fn union(&self, other: &EvPer) -> Result<EvPer> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &EvPer) -> Result<EvPer> {
        self.zip_with(other, |a, b| a && b)
    }

    /// Image `{2z | z ∈ X}`.
    pub fn double(&self) -> Result<EvPer> {
        let h = 2 * self.head.len();
        let p = 2 * self.pattern.len();
        if h > MAX_HEAD || p > MAX_PERIOD {
            return Err(PcaError::Exhausted("doubled description beyond feasible size"));
        }
        let head = (0..h)
            .map(|z| z % 2 == 0 && self.contains(&Nat::from(z / 2)))
            .collect();
        let pattern = (0..p).map(|r| r % 2 == 0 && self.pattern[r / 2]).collect();
        EvPer::from_parts(head, pattern)
    }

    /// Image `{2z + 1 | z ∈ X}`.
    pub fn double_plus_one(&self) -> Result<EvPer> {
        let h = 2 * self.head.len() + 1;
        let p = 2 * self.pattern.len();
        if h > MAX_HEAD || p > MAX_PERIOD {
            return Err(PcaError::Exhausted("doubled description beyond feasible size"));
        }
        let head = (0..h)
            .map(|z| z % 2 == 1 && self.contains(&Nat::from((z - 1) / 2)))
            .collect();
        let pattern = (0..p).map(|r| r % 2 == 1 && self.pattern[(r - 1) / 2]).collect();
        EvPer::from_parts(head, pattern)
    }

    /// Pair-code projection `π(X) = {m | ∃n: ⟨n, m⟩ ∈ X}`.
    ///
    /// The column of codes over `m` is `{tri(w) + m | w ≥ m}`.  Let `W₀`
    /// be least with `tri(W₀) ≥ head.len()`: for `w ≥ max(m, W₀)` the
    /// codes are in the periodic tail and `tri(w) mod P` sweeps the full
    /// residue set `R = {tri(t) mod P | t < 2P}` (it is `2P`-periodic in
    /// `w`), so the tail contributes `∃ρ∈R: pattern[(ρ + m) mod P]` —
    /// periodic in `m`.  Codes with `w < W₀` are settled by direct scan,
    /// which only affects `m < W₀`.
    pub fn proj(&self) -> Result<EvPer> {
        let p = self.pattern.len();
        let h = self.head.len();
        let w0 = (0..).find(|&w: &usize| w * (w + 1) / 2 >= h).expect("tri is unbounded");

        let mut residues = vec![false; p];
        for t in 0..2 * p as u64 {
            residues[(t * (t + 1) / 2 % p as u64) as usize] = true;
        }
        let tail_hit = |m: usize| -> bool {
            (0..p).filter(|&rho| residues[rho]).any(|rho| self.pattern[(rho + m % p) % p])
        };

        let head = (0..w0)
            .map(|m| {
                tail_hit(m)
                    || (m..w0).any(|w| {
                        let code = Nat::from(w * (w + 1) / 2 + m);
                        self.contains(&code)
                    })
            })
            .collect();
        let pattern = (0..p).map(&tail_hit).collect();
        EvPer::from_parts(head, pattern)
    }

    /// Members below `bound`, in increasing order.
    pub fn members_below(&self, bound: u64) -> Vec<Nat> {
        (0..bound).map(Nat::from).filter(|z| self.contains(z)).collect()
    }

    /// Least member, if any.
    pub fn least(&self) -> Option<Nat> {
        if let Some(i) = self.head.iter().position(|&b| b) {
            return Some(Nat::from(i));
        }
        let h = self.head.len();
        (h..h + self.pattern.len()).map(Nat::from).find(|z| self.contains(z))
    }
}

/// A total, opaque membership predicate with a display label.
#[derive(Clone)]
pub struct CharDesc {
    label: String,
    at: Arc<dyn Fn(&Nat) -> bool + Send + Sync>,
}

impl CharDesc {
    pub fn new(label: impl Into<String>, at: impl Fn(&Nat) -> bool + Send + Sync + 'static) -> CharDesc {
        CharDesc { label: label.into(), at: Arc::new(at) }
    }

    pub fn contains(&self, z: &Nat) -> bool {
        (self.at)(z)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for CharDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "charfn:{}", self.label)
    }
}

/// A finite description of a subset of ℕ.
#[derive(Clone, Debug)]
pub enum SetDesc {
    /// Explicit finite set.
    Fin(BTreeSet<Nat>),
    /// Complement of an explicit finite set.
    Cofin(BTreeSet<Nat>),
    Union(Box<SetDesc>, Box<SetDesc>),
    Inter(Box<SetDesc>, Box<SetDesc>),
    Comp(Box<SetDesc>),
    /// Image `{2z | z ∈ X}`.
    Double(Box<SetDesc>),
    /// Image `{2z + 1 | z ∈ X}`.
    DoublePlusOne(Box<SetDesc>),
    /// Eventually periodic set in closed form (the result shape of exact
    /// operations whose output is neither finite nor cofinite).
    Per(EvPer),
    /// Opaque total predicate: membership is decidable, but no exact
    /// normal form (hence no exact equality or complement-description).
    CharFn(CharDesc),
    /// Machine-enumerable set: index of an enumerator program.  Membership
    /// is only semi-decidable, so every exact operation refuses it.
    Prog(Nat),
}

impl SetDesc {
    pub fn fin<I: IntoIterator<Item = Nat>>(elems: I) -> SetDesc {
        SetDesc::Fin(elems.into_iter().collect())
    }

    pub fn cofin<I: IntoIterator<Item = Nat>>(elems: I) -> SetDesc {
        SetDesc::Cofin(elems.into_iter().collect())
    }

    pub fn empty() -> SetDesc {
        SetDesc::Fin(BTreeSet::new())
    }

    pub fn naturals() -> SetDesc {
        SetDesc::Cofin(BTreeSet::new())
    }

    /// True iff the description tree contains no `Prog` node; membership
    /// is decidable exactly on program-free descriptions.
    pub fn program_free(&self) -> bool {
        match self {
            SetDesc::Fin(_) | SetDesc::Cofin(_) | SetDesc::Per(_) | SetDesc::CharFn(_) => true,
            SetDesc::Prog(_) => false,
            SetDesc::Union(a, b) | SetDesc::Inter(a, b) => a.program_free() && b.program_free(),
            SetDesc::Comp(a) | SetDesc::Double(a) | SetDesc::DoublePlusOne(a) => a.program_free(),
        }
    }

    /// Decide membership.  Errors on descriptions containing `Prog`.
    pub fn contains(&self, z: &Nat) -> Result<bool> {
        Ok(match self {
            SetDesc::Fin(p) => p.contains(z),
            SetDesc::Cofin(q) => !q.contains(z),
            SetDesc::Union(a, b) => a.contains(z)? || b.contains(z)?,
            SetDesc::Inter(a, b) => a.contains(z)? && b.contains(z)?,
            SetDesc::Comp(a) => !a.contains(z)?,
            SetDesc::Double(a) => z.is_even() && a.contains(&z.half())?,
            SetDesc::DoublePlusOne(a) => !z.is_even() && a.contains(&z.half())?,
            SetDesc::Per(e) => e.contains(z),
            SetDesc::CharFn(c) => c.contains(z),
            SetDesc::Prog(n) => {
                return Err(PcaError::UndecidableDescription(format!(
                    "membership in machine-enumerable set prog({n}) is only semi-decidable"
                )))
            }
        })
    }

    /// Normalize to the eventually periodic closed form.  Errors on
    /// `CharFn` (opaque) and `Prog` (semi-decidable) nodes.
    pub fn ev_per(&self) -> Result<EvPer> {
        match self {
            SetDesc::Fin(p) => EvPer::finite(p),
            SetDesc::Cofin(q) => EvPer::cofinite(q),
            SetDesc::Union(a, b) => a.ev_per()?.union(&b.ev_per()?),
            SetDesc::Inter(a, b) => a.ev_per()?.intersection(&b.ev_per()?),
            SetDesc::Comp(a) => Ok(a.ev_per()?.complement()),
            SetDesc::Double(a) => a.ev_per()?.double(),
            SetDesc::DoublePlusOne(a) => a.ev_per()?.double_plus_one(),
            SetDesc::Per(e) => Ok(e.clone()),
            SetDesc::CharFn(c) => Err(PcaError::UndecidableDescription(format!(
                "charfn:{} has no exact closed form",
                c.label
            ))),
            SetDesc::Prog(n) => Err(PcaError::UndecidableDescription(format!(
                "prog({n}) has no exact closed form"
            ))),
        }
    }

    /// Exact extensional equality, decided on the canonical normal forms.
    pub fn eq_exact(&self, other: &SetDesc) -> Result<bool> {
        Ok(self.ev_per()? == other.ev_per()?)
    }

    /// Exact complement in simplest available shape.
    pub fn complement(&self) -> Result<SetDesc> {
        SetDesc::Comp(Box::new(self.clone())).normalize()
    }

    /// Pair-code projection `π`, exact on normalizable descriptions.
    pub fn proj_pi(&self) -> Result<SetDesc> {
        SetDesc::Per(self.ev_per()?.proj()?).normalize()
    }

    /// Rewrite to the simplest equivalent shape: `fin{…}` when finite,
    /// `cofin{…}` when cofinite, the closed periodic form otherwise.
    /// Errors where no normal form exists.
    pub fn normalize(&self) -> Result<SetDesc> {
        let e = self.ev_per()?;
        if let Some(p) = e.as_finite() {
            return Ok(SetDesc::Fin(p));
        }
        if let Some(q) = e.as_cofinite() {
            return Ok(SetDesc::Cofin(q));
        }
        Ok(SetDesc::Per(e))
    }

    /// The described set as a staged enumeration (numeric order).  Errors
    /// on descriptions containing `Prog` — resolving those needs the
    /// machine submodel, which layers on top of this module.
    pub fn to_enumset(&self) -> Result<EnumSet> {
        // Probe once so impossible descriptions fail at construction.
        self.contains(&Nat::zero())?;
        let d = self.clone();
        Ok(EnumSet::by_predicate(move |z| d.contains(z).unwrap_or(false)))
    }
}

impl fmt::Display for SetDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(f: &mut fmt::Formatter<'_>, name: &str, elems: &BTreeSet<Nat>) -> fmt::Result {
            write!(f, "{name}{{")?;
            for (i, x) in elems.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")
        }
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        match self {
            SetDesc::Fin(p) => set(f, "fin", p),
            SetDesc::Cofin(q) => set(f, "cofin", q),
            SetDesc::Union(a, b) => write!(f, "union({a},{b})"),
            SetDesc::Inter(a, b) => write!(f, "inter({a},{b})"),
            SetDesc::Comp(a) => write!(f, "comp({a})"),
            SetDesc::Double(a) => write!(f, "double({a})"),
            SetDesc::DoublePlusOne(a) => write!(f, "doubleplus1({a})"),
            SetDesc::Per(e) => write!(f, "per(head={};pattern={})", bits(&e.head), bits(&e.pattern)),
            SetDesc::CharFn(c) => write!(f, "charfn:{}", c.label),
            SetDesc::Prog(n) => write!(f, "prog({n})"),
        }
    }
}
