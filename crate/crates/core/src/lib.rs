pub mod grounded;
pub mod harness;
pub mod lambda;
pub mod pattern;
pub mod rewrite;
pub mod store;
pub mod surface;
pub mod truth;
pub mod typesys;
