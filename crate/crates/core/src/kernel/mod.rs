//! Model-independent machinery: numbers, codings, fuel, staged sets, set
//! and stream descriptions, combinatory terms, and the backend trait that
//! every concrete model implements.

pub mod backend;
pub mod coding;
pub mod desc;
pub mod enumset;
pub mod fuel;
pub mod nat;
pub mod term;
