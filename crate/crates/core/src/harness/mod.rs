//! Seeded generators, oracle comparisons and work-count benchmarks.
//!
//! Every case is a function of its seed: a failure report names the seed and
//! `run_case` with that seed reproduces it.

mod gen;
mod suites;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use gen::{
    corpus_signature, dag_node, gen_dag, gen_linear_identity, gen_linear_violation, gen_pattern, gen_store, gen_term,
    gen_typed_term, pattern_variables, typed_links,
};
pub use suites::{
    bench_fixture, cbv_discrimination, deduction_rule, gen_gradual_case, gradual_violations, run_case, run_suite,
    transitive_closure, typecheck_step_bound, GradualCase, BENCH_ATOMS, BENCH_CANDIDATES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub atom_budget: usize,
    pub clause_budget: usize,
    pub variable_budget: usize,
    pub term_depth: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            atom_budget: 200,
            clause_budget: 3,
            variable_budget: 3,
            term_depth: 4,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Oracle,
    Chaining,
    Lambda,
    Bench,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Oracle, Suite::Chaining, Suite::Lambda, Suite::Bench];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Chaining => "chaining",
            Suite::Lambda => "lambda",
            Suite::Bench => "bench",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected oracle, chaining, lambda or bench)"))
    }
}

/// What a suite run should do besides generating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub generator: GeneratorConfig,
    pub cases: usize,
    /// Worker counts used where the engine accepts one.
    pub workers: usize,
    /// Reduction / chaining budget.
    pub max_steps: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            cases: 100,
            workers: 4,
            max_steps: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseResult {
    pub seed: u64,
    pub status: Status,
    /// Measurements worth reporting (bench counts and the like).
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub suite: Suite,
    pub cases: Vec<CaseResult>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| c.status != Status::Pass)
    }

    /// One `seed suite status` line per case.
    pub fn machine(&self) -> String {
        let mut out = String::new();
        for c in &self.cases {
            let status = if c.status == Status::Pass { "pass" } else { "fail" };
            out.push_str(&format!("{} {} {status}\n", c.seed, self.suite));
        }
        out
    }

    pub fn human(&self) -> String {
        let failed = self.failures().count();
        let mut out = format!("suite {}: {} cases, {} failed\n", self.suite, self.cases.len(), failed);
        for c in &self.cases {
            for n in &c.notes {
                out.push_str(&format!("  seed {}: {n}\n", c.seed));
            }
            if let Status::Fail(why) = &c.status {
                out.push_str(&format!("  FAIL seed {}: {why}\n", c.seed));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("suite {suite} failed at seed {seed}: {message}")]
pub struct SuiteFailure {
    pub suite: Suite,
    /// First failing seed.
    pub seed: u64,
    pub message: String,
    pub report: Report,
}
