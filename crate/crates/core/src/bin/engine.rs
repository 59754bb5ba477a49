use std::io::{self, BufRead, IsTerminal, Write};
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anstyle::{AnsiColor, Style};
use clap::{Parser, Subcommand};
use metagraph::harness::{run_suite, GeneratorConfig, Suite, SuiteConfig};
use metagraph::surface::{is_incomplete, Session, SessionConfig, SessionError};
use metagraph::typesys::TypeVerdict;

#[derive(Parser)]
#[command(name = "engine", version, about = "Metagraph store, rewriting and typing engine")]
struct Cli {
    /// Budget for chaining rounds and reduction steps.
    #[arg(long, global = true, default_value_t = 1000)]
    max_steps: usize,
    /// Worker threads for matching and chaining.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Base seed for anything randomized.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Interactive session; `!help` lists commands.
    Repl,
    /// Run files of atom forms, queries and `!` commands in order.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Load FILE and print the bindings of a pattern.
    Query {
        file: PathBuf,
        #[arg(long)]
        pattern: String,
    },
    /// Check every annotated atom in FILE under a type system.
    Check {
        file: PathBuf,
        #[arg(long)]
        system: String,
    },
    /// Run a generated test suite.
    Test {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

enum Failure {
    User(String),
    Internal(String),
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

struct Painter {
    on: bool,
}

impl Painter {
    fn new(terminal: bool) -> Self {
        let disabled = std::env::var("ENGINE_COLOR").is_ok_and(|v| v == "0");
        Painter {
            on: terminal && !disabled,
        }
    }

    fn paint(&self, color: AnsiColor, text: &str) -> String {
        if !self.on {
            return text.to_string();
        }
        let s = Style::new().fg_color(Some(color.into())).bold();
        format!("{}{text}{}", s.render(), s.render_reset())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn print(out: &str) {
    if !out.is_empty() {
        println!("{out}");
    }
}

fn repl(session: &mut Session, paint: &Painter) -> Result<(), Failure> {
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let prompt = |more: bool| {
        if interactive {
            print!("{}", if more { ".. " } else { "> " });
            let _ = io::stdout().flush();
        }
    };
    let mut buf = String::new();
    prompt(false);
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Failure::Internal(format!("stdin: {e}")))?;
        buf.push_str(&line);
        buf.push('\n');
        if !buf.trim_start().starts_with('!') && is_incomplete(&buf) {
            prompt(true);
            continue;
        }
        respond(session, &buf, paint)?;
        buf.clear();
        prompt(false);
    }
    // whatever is left at end of input gets its error message too
    if !buf.trim().is_empty() {
        respond(session, &buf, paint)?;
    }
    Ok(())
}

fn respond(session: &mut Session, input: &str, paint: &Painter) -> Result<(), Failure> {
    match session.execute(input) {
        Ok(out) => print(&out),
        Err(e) if e.is_internal() => return Err(e.into()),
        Err(e) => println!("{} {e}", paint.paint(AnsiColor::Red, "error:")),
    }
    Ok(())
}

fn run(cli: Cli, paint: &Painter) -> Result<(), Failure> {
    let cfg = SessionConfig {
        max_steps: cli.max_steps,
        workers: cli.workers.max(1),
        seed: cli.seed,
    };
    let mut session = Session::new(cfg);
    match cli.cmd {
        Cmd::Repl => repl(&mut session, paint),
        Cmd::Run { files } => {
            for f in &files {
                let text = read(f)?;
                print(&session.run_script(&text).map_err(|e| with_file(f, e))?);
            }
            Ok(())
        }
        Cmd::Query { file, pattern } => {
            session.run_script(&read(&file)?).map_err(|e| with_file(&file, e))?;
            print(&session.execute(&format!("!query {pattern}"))?);
            Ok(())
        }
        Cmd::Check { file, system } => {
            session.run_script(&read(&file)?).map_err(|e| with_file(&file, e))?;
            let rows = session.check_all(&system)?;
            let mut rejected = 0;
            for (atom, v) in &rows {
                let color = match v {
                    TypeVerdict::Accept => AnsiColor::Green,
                    TypeVerdict::Reject => AnsiColor::Red,
                    TypeVerdict::Unknown => AnsiColor::Yellow,
                };
                rejected += usize::from(*v == TypeVerdict::Reject);
                println!("{} {atom}", paint.paint(color, &v.to_string()));
            }
            if rejected > 0 {
                return Err(Failure::User(format!("{rejected} of {} atoms rejected", rows.len())));
            }
            Ok(())
        }
        Cmd::Test { suite, cases } => {
            let cfg = SuiteConfig {
                generator: GeneratorConfig::default().with_seed(cli.seed),
                cases,
                workers: cli.workers.max(1),
                max_steps: cli.max_steps,
            };
            let (report, failed) = match run_suite(suite, &cfg) {
                Ok(r) => (r, None),
                Err(f) => (f.report.clone(), Some(f)),
            };
            eprint!("{}", report.human());
            print!("{}", report.machine());
            match failed {
                Some(f) => Err(Failure::User(f.to_string())),
                None => {
                    eprintln!("{}", paint.paint(AnsiColor::Green, "ok"));
                    Ok(())
                }
            }
        }
    }
}

fn with_file(path: &Path, e: SessionError) -> Failure {
    match Failure::from(e) {
        Failure::User(m) => Failure::User(format!("{}: {m}", path.display())),
        Failure::Internal(m) => Failure::Internal(format!("{}: {m}", path.display())),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on bad usage; that code is reserved for internal errors here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let paint = Painter::new(io::stdout().is_terminal());
    let err_paint = Painter::new(io::stderr().is_terminal());
    match panic::catch_unwind(panic::AssertUnwindSafe(|| run(cli, &paint))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::User(m))) => {
            eprintln!("{} {m}", err_paint.paint(AnsiColor::Red, "error:"));
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(m))) => {
            eprintln!("{} {m}", err_paint.paint(AnsiColor::Red, "internal error:"));
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
