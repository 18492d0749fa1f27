//! A workbench for partial combinatory algebras over ℕ.
//!
//! This crate makes a family of classical models of computation executable
//! at desk scale and keeps them honest with each other:
//!
//! * the **graph model** — elements are (enumerable) sets of naturals,
//!   application is enumeration-driven: `A · B` collects every `n` with a
//!   pair `⟨m, n⟩ ∈ A` whose finite set `e_m` is contained in `B`;
//! * **function realizability** — elements are functions ℕ → ℕ, application
//!   interrogates finite prefixes of the argument until the function
//!   commits to an answer;
//! * the **binary variant** — the same idea over functions ℕ → 2, with a
//!   stop-bit convention in place of successor coding;
//! * **oracle extensions** — any of the above enlarged by a fresh partial
//!   function (set complementation, extensional equality, ...), with
//!   application reinterpreted as a dialogue that may consult the oracle;
//! * the **machine-enumerable submodel** — the sub-algebra of the graph
//!   model carved out by counter-machine enumerations, where the classical
//!   inter-reducibility arguments between oracles can be run as programs.
//!
//! All models share one numeric substrate ([`kernel::coding`]): a pairing
//! bijection, finite-set codes, and length-prefixed sequence codes.  On top
//! of that substrate each model implements the [`PcaBackend`] interface —
//! application, the `k`/`s` combinators, booleans, pairing and sequencing
//! of *elements* — so that terms, dialogues, witnesses, and test suites are
//! written once and run everywhere.
//!
//! Nothing here pretends to decide the undecidable.  Applications run
//! against an explicit [`Fuel`] budget and return an error when it is spent;
//! oracles that need a finite *description* of a set refuse opaque inputs;
//! equality of infinite objects is checked on configurable finite fronts.
//! The point of the workbench is precisely to see how far the classical
//! constructions get under such finite means, and every suite in
//! [`suites`] reports that honestly.

pub mod error;
pub mod graph;
pub mod kernel;
pub mod oracle;
pub mod streams;
pub mod witness;

pub use error::{PcaError, Result};
pub use kernel::backend::{HostFun, Literal, PcaBackend, StreamExpr};
pub use kernel::fuel::{Fuel, Meter};
pub use kernel::nat::Nat;
pub use kernel::term::{elaborate, eval_term, parse_desc, parse_term, Term, TermEnv};
