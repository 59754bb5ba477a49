//! Text interface: S-expression reader, atom loader, interactive session.

pub mod load;
pub mod repl;
pub mod sexpr;

pub use load::{atom_form, form, load, load_str, pattern_form, Form, GrammarError, LoadError};
pub use repl::{is_incomplete, Session, SessionConfig, SessionError};
pub use sexpr::{parse, parse_bytes, ParseError, Pos, SExpr, SExprKind};
