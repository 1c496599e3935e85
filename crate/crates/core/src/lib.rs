//! Core of the SDQL semi-ring dictionary language: values, types, parsing,
//! type checking, evaluation, rewriting and frontends.

#![no_std]
extern crate alloc;

pub mod front;
pub mod interp;
pub mod opt;
pub mod parse;
pub mod pretty;
pub mod semiring;
pub mod syntax;
pub mod typecheck;
pub mod types;
pub mod value;

pub use semiring::ValueError;
pub use types::{ScalarType, TaggedKind, Type, Layout};
pub use value::{Dict, Value};

pub type Name = alloc::sync::Arc<str>;
