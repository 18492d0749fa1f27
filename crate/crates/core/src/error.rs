//! Error type shared by every model and the CLI.
//!
//! Partiality is everywhere in this library: applications may fail to
//! converge within the configured fuel, codes may be malformed, and some
//! questions (exact equality of opaque set descriptions, say) are not
//! decidable at all.  All of those outcomes are ordinary values of this
//! enum, never panics.

use thiserror::Error;

/// Every fallible operation in the workbench returns this error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcaError {
    /// The fuel budget ran out before the computation settled.  This is the
    /// honest answer for genuinely divergent applications and for convergent
    /// ones that merely need a larger budget; callers that care can retry
    /// with more fuel.
    #[error("fuel exhausted: {0}")]
    Exhausted(&'static str),

    /// A natural number was used as a structured code (finite set, pair
    /// sequence, machine program, ...) but does not decode as one.
    #[error("malformed code: {0}")]
    MalformedCode(String),

    /// A dialogue step or oracle-protocol element violated the protocol
    /// shape (for example, a plain element where a flagged pair is
    /// required).
    #[error("malformed protocol step: {0}")]
    MalformedStep(String),

    /// An oracle that operates on set descriptions was handed an element
    /// carrying no description facet.
    #[error("oracle needs a described set: {0}")]
    OracleNeedsDescription(String),

    /// An oracle was queried outside its domain (e.g. the complementation
    /// oracle on a set it cannot complement).
    #[error("oracle domain error: {0}")]
    OracleDomain(String),

    /// The question posed about a description has no decision procedure in
    /// this workbench (opaque characteristic functions, program-defined
    /// sets).
    #[error("undecidable description: {0}")]
    UndecidableDescription(String),

    /// A basic-open piece of an independence certificate was given an open
    /// set outside the fragment it understands.
    #[error("invalid open set: {0}")]
    InvalidOpen(String),

    /// A morphism factorization was requested but no factoring realizer
    /// exists for the given data.
    #[error("cannot factor: {0}")]
    CannotFactor(String),

    /// A point piece handed to the diagonalization engine broke its own
    /// contract (its sample escaped the constraint, or its claimed preimage
    /// was unsound).
    #[error("piece contract violation: {0}")]
    PieceContractViolation(String),

    /// A textual term, description, or program failed to parse.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// An application produced a value outside the carrier of the model
    /// (e.g. a function-realizer output of 0 where a successor-coded answer
    /// is required).
    #[error("application diverges: {0}")]
    Diverges(String),

    /// A named suite, model, or corpus does not exist.
    #[error("unknown name: {0}")]
    UnknownName(String),
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, PcaError>;
