//! Arbitrary-precision natural numbers — the raw material of every model.
//!
//! All carriers in this workbench are built from ℕ: graph-model elements
//! are sets of naturals, function-realizability elements are maps ℕ → ℕ,
//! machine programs are coded as single naturals.  The codings in play grow
//! fast — a pair code roughly doubles the bit length of its parts, and a
//! finite-set code is exponential in the set's largest element — so a fixed
//! machine word overflows on the very first interesting examples.  `Nat`
//! wraps an arbitrary-precision integer and exposes exactly the small
//! arithmetic vocabulary the rest of the crate needs.
//!
//! Subtraction is deliberately *monus* (truncated at zero): naturals are
//! not closed under subtraction and a silent panic inside a deep search
//! would be much harder to debug than a zero.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// A natural number of unbounded size.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Nat(BigUint);

impl Nat {
    pub fn zero() -> Nat {
        Nat(BigUint::zero())
    }

    pub fn one() -> Nat {
        Nat(BigUint::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn succ(&self) -> Nat {
        Nat(&self.0 + 1u8)
    }

    /// Truncated subtraction: `a.monus(b)` is `a - b` when `a >= b` and `0`
    /// otherwise.
    pub fn monus(&self, other: &Nat) -> Nat {
        if self.0 >= other.0 {
            Nat(&self.0 - &other.0)
        } else {
            Nat::zero()
        }
    }

    /// `a - b`, or `None` when `b > a`.  Used where an underflow indicates
    /// a malformed code rather than a legitimate zero.
    pub fn checked_sub(&self, other: &Nat) -> Option<Nat> {
        if self.0 >= other.0 {
            Some(Nat(&self.0 - &other.0))
        } else {
            None
        }
    }

    pub fn is_even(&self) -> bool {
        !self.0.bit(0)
    }

    /// Floor of `self / 2`.
    pub fn half(&self) -> Nat {
        Nat(&self.0 >> 1)
    }

    pub fn double(&self) -> Nat {
        Nat(&self.0 << 1)
    }

    /// The `i`-th bit of the binary expansion (bit 0 is least significant).
    pub fn bit(&self, i: u64) -> bool {
        self.0.bit(i)
    }

    /// Number of significant bits; `0` for zero.
    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    /// `2^e`.
    pub fn pow2(e: u64) -> Nat {
        Nat(BigUint::one() << e)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn to_usize(&self) -> Option<usize> {
        self.0.to_usize()
    }

    /// Remainder modulo a machine-word divisor.
    pub fn rem_u64(&self, d: u64) -> u64 {
        (&self.0 % d).to_u64().expect("remainder below a u64 divisor fits u64")
    }

    /// Quotient and remainder by a machine-word divisor.
    pub fn div_rem_u64(&self, d: u64) -> (Nat, u64) {
        let (q, r) = num_integer::Integer::div_rem(&self.0, &num_bigint::BigUint::from(d));
        (Nat(q), r.to_u64().expect("remainder below a u64 divisor fits u64"))
    }

    /// Integer square root (floor).
    pub fn isqrt(&self) -> Nat {
        Nat(self.0.sqrt())
    }
}

impl From<BigUint> for Nat {
    fn from(v: BigUint) -> Nat {
        Nat(v)
    }
}

macro_rules! nat_from_prim {
    ($($t:ty),*) => {$(
        impl From<$t> for Nat {
            fn from(v: $t) -> Nat {
                Nat(BigUint::from(v))
            }
        }
    )*};
}
nat_from_prim!(u8, u16, u32, u64, u128, usize);

impl Add for &Nat {
    type Output = Nat;
    fn add(self, rhs: &Nat) -> Nat {
        Nat(&self.0 + &rhs.0)
    }
}

impl Add for Nat {
    type Output = Nat;
    fn add(self, rhs: Nat) -> Nat {
        Nat(self.0 + rhs.0)
    }
}

impl Add<u64> for &Nat {
    type Output = Nat;
    fn add(self, rhs: u64) -> Nat {
        Nat(&self.0 + rhs)
    }
}

impl AddAssign<u64> for Nat {
    fn add_assign(&mut self, rhs: u64) {
        self.0 += rhs;
    }
}

impl Mul for &Nat {
    type Output = Nat;
    fn mul(self, rhs: &Nat) -> Nat {
        Nat(&self.0 * &rhs.0)
    }
}

impl Mul<u64> for &Nat {
    type Output = Nat;
    fn mul(self, rhs: u64) -> Nat {
        Nat(&self.0 * rhs)
    }
}

impl PartialEq<u64> for Nat {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigUint::from(*other)
    }
}

impl fmt::Display for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Nat {
    type Err = num_bigint::ParseBigIntError;
    fn from_str(s: &str) -> std::result::Result<Nat, Self::Err> {
        Ok(Nat(BigUint::from_str(s)?))
    }
}
