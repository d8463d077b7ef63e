//! Static checking of process terms against local types.

mod check;
mod diagnostic;
mod file;
mod term;

pub use check::{check_expr, check_process, DataType, SortTable, TypingEnv};
pub use diagnostic::{Diagnostic, ErrorClass, Severity};
pub use file::{check_file, check_proc, proc_sessions, sort_table, SessionBinding};
pub use term::{Expr, Pos, ProcessTerm, RecvArm, Term};
