//! Seeded suites: every case is reproducible from the seed in the report.

use metagraph::harness::{run_case, run_suite, GeneratorConfig, Suite, SuiteConfig};

fn main() {
    let cfg = SuiteConfig {
        generator: GeneratorConfig::default().with_seed(42),
        cases: 20,
        workers: 2,
        max_steps: 64,
    };
    for suite in [Suite::Oracle, Suite::Chaining, Suite::Lambda] {
        match run_suite(suite, &cfg) {
            Ok(report) => print!("{}", report.human()),
            Err(f) => {
                println!("{f}");
                // rerun just the failing seed
                let one = SuiteConfig {
                    generator: cfg.generator.with_seed(f.seed),
                    ..cfg
                };
                println!("{:?}", run_case(suite, &one).status);
            }
        }
    }
}
