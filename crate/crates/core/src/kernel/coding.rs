//! The numeric codings every model agrees on.
//!
//! Three codings knit the workbench together, and all three are fixed here
//! bit-for-bit so that elements can be moved between models without any
//! translation layer:
//!
//! * **pairs** — the classic triangle-number pairing
//!   `⟨n, m⟩ = (n+m)(n+m+1)/2 + m`, a bijection ℕ² → ℕ;
//! * **finite sets** — a set `X` of naturals is coded as `Σ_{i∈X} 2^i`, a
//!   bijection between finite sets and ℕ;
//! * **sequences** — a list `[x₀, …, x_{k−1}]` is coded as
//!   `⟨k, ⟨x₀, ⟨x₁, … ⟨x_{k−1}, 0⟩…⟩⟩⟩`; the explicit length field makes
//!   the coding injective even though `⟨0,0⟩ = 0` lets distinct lists share
//!   a spine.
//!
//! A pair code has roughly the combined bit length of its parts, so
//! sequence codes grow exponentially in the sequence length and finite-set
//! codes grow exponentially in the largest element.  Everything downstream
//! is designed around that: searches enumerate codes in structural rather
//! than numeric order, and tests keep literal codes small.
//!
//! Decoding is total but honest: a natural that does not decode as a
//! sequence (the spine does not terminate in `0` after `k` links) is
//! reported as a malformed code, never silently repaired.

use std::collections::BTreeSet;

use crate::error::{PcaError, Result};
use crate::kernel::nat::Nat;

/// `⟨a, b⟩ = (a+b)(a+b+1)/2 + b`.
pub fn pair(a: &Nat, b: &Nat) -> Nat {
    if let (Some(x), Some(y)) = (a.to_u64(), b.to_u64()) {
        let s = x as u128 + y as u128;
        if s < 1 << 63 {
            return Nat::from(s * (s + 1) / 2 + y as u128);
        }
    }
    let s = a + b;
    &(&s * &s.succ()).half() + b
}

/// Inverse of [`pair`]: `unpair(⟨a, b⟩) = (a, b)`.
pub fn unpair(z: &Nat) -> (Nat, Nat) {
    if let Some(z) = z.to_u64() {
        let z = z as u128;
        let w = (8 * z + 1).isqrt().wrapping_sub(1) / 2;
        let m = z - w * (w + 1) / 2;
        return (Nat::from(w - m), Nat::from(m));
    }
    // w = ⌊(√(8z+1) − 1)/2⌋ is the index of the diagonal containing z.
    let w = (&(z.double().double().double()) + 1u64)
        .isqrt()
        .monus(&Nat::one())
        .half();
    let t = (&w * &w.succ()).half();
    let m = z.monus(&t);
    (w.monus(&m), m)
}

/// `n(n+1)/2`, the offset of diagonal `n` in the pairing order.
pub fn triangle(n: &Nat) -> Nat {
    (n * &n.succ()).half()
}

/// Largest element a finite-set code is allowed to mention.  The code of a
/// set containing `n` has `n+1` bits, so this caps code sizes at a few
/// megabytes; beyond it we refuse rather than thrash.
pub const SET_CODE_MAX_ELEM: u64 = 1 << 24;

/// Code of a finite set: `Σ_{i∈X} 2^i`.
pub fn set_code<'a, I: IntoIterator<Item = &'a Nat>>(elems: I) -> Result<Nat> {
    let mut acc = Nat::zero();
    for e in elems {
        let i = e
            .to_u64()
            .filter(|&i| i <= SET_CODE_MAX_ELEM)
            .ok_or(PcaError::Exhausted("finite-set code beyond feasible size"))?;
        if !acc.bit(i) {
            acc = &acc + &Nat::pow2(i);
        }
    }
    Ok(acc)
}

/// Decode of a finite set: the bit positions of `code`.
pub fn set_decode(code: &Nat) -> BTreeSet<Nat> {
    (0..code.bits()).filter(|&i| code.bit(i)).map(Nat::from).collect()
}

/// Widest a sequence code is allowed to grow, in bits.  Each nonzero
/// entry roughly doubles the spine's width, so value-carrying sequences
/// stay under this bound only up to length ≈ 20; zero tails fold to
/// nothing and remain cheap at any length.  Beyond the bound we refuse
/// rather than thrash.
pub const SEQ_CODE_MAX_BITS: u64 = 1 << 20;

/// Code of a sequence: `⟨len, x₀ :: x₁ :: … :: 0⟩` with `::` built from
/// [`pair`].  Refuses codes wider than [`SEQ_CODE_MAX_BITS`].
pub fn encode_seq(xs: &[Nat]) -> Result<Nat> {
    let mut spine = Nat::zero();
    for x in xs.iter().rev() {
        spine = pair(x, &spine);
        if spine.bits() > SEQ_CODE_MAX_BITS {
            return Err(PcaError::Exhausted("sequence code beyond feasible size"));
        }
    }
    Ok(pair(&Nat::from(xs.len()), &spine))
}

/// Full decode with validity check: after `len` links the spine must be
/// exactly `0`.
pub fn decode_seq(code: &Nat) -> Result<Vec<Nat>> {
    let (len, mut spine) = unpair(code);
    let len = len
        .to_usize()
        .ok_or_else(|| PcaError::MalformedCode(format!("sequence length {len} too large")))?;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let (head, rest) = unpair(&spine);
        out.push(head);
        spine = rest;
    }
    if !spine.is_zero() {
        return Err(PcaError::MalformedCode(format!(
            "sequence code {code}: spine does not terminate after {len} entries"
        )));
    }
    Ok(out)
}

/// Length field of a sequence code (no validity check).
pub fn seq_len(code: &Nat) -> Nat {
    unpair(code).0
}

/// First entry of a nonempty sequence code.
pub fn seq_first(code: &Nat) -> Result<Nat> {
    seq_proj(code, &Nat::zero())
}

/// Last entry of a nonempty sequence code.
pub fn seq_last(code: &Nat) -> Result<Nat> {
    let len = seq_len(code);
    if len.is_zero() {
        return Err(PcaError::MalformedCode("last entry of empty sequence".into()));
    }
    seq_proj(code, &len.monus(&Nat::one()))
}

/// The `i`-th entry of a sequence code (0-based), checking `i < len` and
/// spine validity up to the requested entry.
pub fn seq_proj(code: &Nat, i: &Nat) -> Result<Nat> {
    let (len, mut spine) = unpair(code);
    if i >= &len {
        return Err(PcaError::MalformedCode(format!(
            "sequence index {i} out of range (length {len})"
        )));
    }
    let i = i
        .to_usize()
        .ok_or_else(|| PcaError::MalformedCode(format!("sequence index {i} too large")))?;
    for _ in 0..i {
        spine = unpair(&spine).1;
    }
    Ok(unpair(&spine).0)
}
