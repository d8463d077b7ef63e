//! Multiparty session types: global and local types, projection, consistency
//! checking, endpoint automata, a protocol language with a process typechecker,
//! and a threaded runtime that enforces linear endpoint use.

pub mod ast;
pub mod consistency;
pub mod fsm;
pub mod projection;
pub mod runtime;
pub mod surface;
pub mod typecheck;
