//! Interactive session: `!` commands plus bare atom forms.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::load::{atom_form, form, load, pattern_form, Form, GrammarError, LoadError};
use super::sexpr::{parse, ParseError, SExpr, SExprKind};
use crate::grounded::{GroundedError, GroundedRegistry, GroundedValue};
use crate::lambda::{eval_distribution, term_from_sexpr, term_spec, LambdaError, LambdaPlugin, HEADS};
use crate::pattern::{query_parallel, Pattern, PatternError};
use crate::rewrite::{backward_chain, forward_chain, rules_in, ForwardConfig, Policy, RewriteError, RewriteRule, RULE};
use crate::store::{AtomId, AtomSpec, Snapshot, Store, StoreError};
use crate::typesys::{SimpleArity, TypeError, TypeRegistry, TypeSystemId, TypeSystemPlugin};

pub const HELP: &str = "\
commands:
  !load FILE             run FILE: atoms are loaded, queries and ! lines are run
  !query EXPR            match a clause or (Query clause...) and list bindings
  !exec EXPR             run an Execution/Evaluation link
  !forward RULESET [N]   forward-chain to a fixpoint, at most N rounds; RULESET is `all` or a file of rules
  !backward EXPR N       prove a clause or query from stored rules, depth N
  !check ATOM SYSTEM     verdict of ATOM under SYSTEM (simple-arity, lambda)
  !eval LAMBDA [N]       exact outcome distribution within N steps
  !dump [FILE]           canonical dump to FILE or the screen
  !stats                 atom counts and work counters
  !help                  this text
anything else is loaded as atoms";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("grammar error at {0}")]
    Grammar(#[from] GrammarError),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Grounded(#[from] GroundedError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
}

impl From<LoadError> for SessionError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Parse(p) => SessionError::Parse(p),
            LoadError::Grammar(g) => SessionError::Grammar(g),
            LoadError::Store(s) => SessionError::Store(s),
        }
    }
}

impl SessionError {
    /// True for failures that are not the input's fault. A session is the
    /// only writer to its store, so a conflict or dangling id is a bug here.
    pub fn is_internal(&self) -> bool {
        let internal = |e: &StoreError| matches!(e, StoreError::Conflict(_) | StoreError::UnknownAtom(_));
        match self {
            SessionError::Store(e) | SessionError::Rewrite(RewriteError::Store(e)) => internal(e),
            _ => false,
        }
    }
}

pub type Result<T, E = SessionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    /// Default budget for chaining and evaluation.
    pub max_steps: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            workers: 1,
            seed: 0,
        }
    }
}

pub struct Session {
    store: Store,
    types: TypeRegistry,
    /// Plugins registered on first use, so an untouched session stays empty.
    available: BTreeMap<String, Arc<dyn TypeSystemPlugin>>,
    grounded: GroundedRegistry,
    cfg: SessionConfig,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(SessionConfig::default())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(SessionError::Usage(msg.into()))
}

/// True when `text` fails to parse only because it stops early, so a
/// line-oriented front end should keep reading.
pub fn is_incomplete(text: &str) -> bool {
    match parse(text) {
        Ok(_) => false,
        Err(e) => e.message.contains("end of input") || e.message.contains("unterminated"),
    }
}

fn count(n: usize, what: &str) -> String {
    format!("{n} {what}{}", if n == 1 { "" } else { "s" })
}

impl Session {
    pub fn new(cfg: SessionConfig) -> Self {
        let mut available: BTreeMap<String, Arc<dyn TypeSystemPlugin>> = BTreeMap::new();
        available.insert(SimpleArity::NAME.into(), Arc::new(SimpleArity::standard()));
        available.insert(LambdaPlugin::NAME.into(), Arc::new(LambdaPlugin));
        Self {
            store: Store::new(),
            types: TypeRegistry::new(),
            available,
            grounded: GroundedRegistry::with_builtins(),
            cfg,
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn config(&self) -> SessionConfig {
        self.cfg
    }

    pub fn grounded_mut(&mut self) -> &mut GroundedRegistry {
        &mut self.grounded
    }

    /// Makes another type system available to `!check`.
    pub fn add_type_system(&mut self, plugin: Arc<dyn TypeSystemPlugin>) {
        self.available.insert(plugin.name().to_string(), plugin);
    }

    pub fn type_system(&mut self, name: &str) -> Result<TypeSystemId> {
        if let Some(id) = self.types.id_of(name) {
            return Ok(id);
        }
        let Some(plugin) = self.available.get(name) else {
            let known: Vec<&str> = self.available.keys().map(String::as_str).collect();
            return usage(format!("unknown type system `{name}` (known: {})", known.join(", ")));
        };
        Ok(self.types.register(&self.store, plugin.clone())?)
    }

    /// Runs one line or block of input. Errors come back as values; the
    /// session itself stays usable.
    pub fn execute(&mut self, input: &str) -> Result<String> {
        let input = input.trim();
        if input.is_empty() {
            return Ok(String::new());
        }
        let Some(cmd_line) = input.strip_prefix('!') else {
            return self.run_text(input);
        };
        let (cmd, rest) = cmd_line.split_once(char::is_whitespace).unwrap_or((cmd_line, ""));
        let rest = rest.trim();
        match cmd {
            "load" => self.load_file(rest),
            "query" => self.query(rest),
            "exec" => self.exec(rest),
            "forward" => self.forward(rest),
            "backward" => self.backward(rest),
            "check" => self.check(rest),
            "eval" => self.eval(rest),
            "dump" => self.dump(rest),
            "stats" if rest.is_empty() => Ok(self.stats()),
            "help" => Ok(HELP.to_string()),
            _ => usage(format!("unknown command `!{cmd}`; try !help")),
        }
    }

    /// Like [`Session::execute`], with errors rendered as `error: ...`.
    pub fn respond(&mut self, input: &str) -> String {
        self.execute(input).unwrap_or_else(|e| format!("error: {e}"))
    }

    /// Loads atom forms in order and runs `(Query ...)` forms as they come.
    pub fn run_text(&mut self, text: &str) -> Result<String> {
        let exprs = parse(text)?;
        let forms = exprs.iter().map(form).collect::<Result<Vec<_>, _>>()?;
        let mut out = Vec::new();
        let mut loaded = 0;
        for f in forms {
            match f {
                Form::Atom(a) => {
                    self.store.add(a)?;
                    loaded += 1;
                }
                Form::Query(p) => out.push(self.render_query(&p)?),
            }
        }
        if loaded > 0 {
            out.insert(0, format!("loaded {}", count(loaded, "atom")));
        }
        Ok(out.join("\n"))
    }

    /// A file of atom forms, queries and `!` command lines, run in order.
    /// Commands must start a line outside any open form. Stops at the first error.
    pub fn run_script(&mut self, text: &str) -> Result<String> {
        let mut out: Vec<String> = Vec::new();
        let mut chunk = String::new();
        let mut chunk_line = 1;
        let flush = |session: &mut Self, out: &mut Vec<String>, chunk: &mut String, line: usize| -> Result<()> {
            if !chunk.trim().is_empty() {
                // pad so reported line numbers match the file
                let padded = format!("{}{chunk}", "\n".repeat(line - 1));
                let r = session.run_text(&padded)?;
                if !r.is_empty() {
                    out.push(r);
                }
            }
            chunk.clear();
            Ok(())
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim_start().starts_with('!') && !is_incomplete(&chunk) {
                flush(self, &mut out, &mut chunk, chunk_line)?;
                let r = self.execute(line)?;
                if !r.is_empty() {
                    out.push(r);
                }
                chunk_line = i + 2;
                continue;
            }
            if chunk.is_empty() {
                chunk_line = i + 1;
            }
            chunk.push_str(line);
            chunk.push('\n');
        }
        flush(self, &mut out, &mut chunk, chunk_line)?;
        Ok(out.join("\n"))
    }

    /// Verdict for every atom annotated under `system`, sorted by rendering.
    pub fn check_all(&mut self, system: &str) -> Result<Vec<(String, crate::typesys::TypeVerdict)>> {
        let sys = self.type_system(system)?;
        let snap = self.store.snapshot();
        let mut subjects: Vec<AtomId> = snap
            .atoms_of_type(crate::store::TYPED)
            .filter_map(|l| {
                let link = snap.resolve(l).ok()?;
                let [subject, s, _] = link.targets() else { return None };
                (snap.resolve(*s).ok()?.name() == system).then_some(*subject)
            })
            .collect();
        subjects.sort();
        subjects.dedup();
        let mut rows = subjects
            .into_iter()
            .map(|a| Ok((snap.render(a)?, self.types.check_atom(a, sys, &snap)?)))
            .collect::<Result<Vec<_>>>()?;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(rows)
    }

    fn load_file(&mut self, path: &str) -> Result<String> {
        if path.is_empty() {
            return usage("usage: !load FILE");
        }
        let bytes = std::fs::read(path).map_err(|e| SessionError::Io(format!("{path}: {e}")))?;
        let text = String::from_utf8(bytes).map_err(|e| SessionError::Io(format!("{path}: invalid UTF-8 ({e})")))?;
        self.run_script(&text)
    }

    fn one_expr(text: &str, what: &str) -> Result<SExpr> {
        let mut exprs = parse(text)?;
        if exprs.len() != 1 {
            return usage(format!("expected exactly one {what}, found {}", exprs.len()));
        }
        Ok(exprs.remove(0))
    }

    /// Splits `EXPR N` into the expression and the trailing count.
    /// Splits `EXPR [N]`; `default` fills in a missing N when given.
    fn expr_and_count(text: &str, cmd: &str, default: Option<usize>) -> Result<(SExpr, usize)> {
        let mut exprs = parse(text)?;
        let n = match (exprs.len(), exprs.last().map(|e| &e.kind), default) {
            (2, Some(SExprKind::Num(n)), _) => n.clone(),
            (1, _, Some(d)) => return Ok((exprs.remove(0), d)),
            _ if default.is_some() => return usage(format!("usage: !{cmd} EXPR [N]")),
            _ => return usage(format!("usage: !{cmd} EXPR N")),
        };
        let n = n
            .is_integer()
            .then(|| n.to_integer())
            .and_then(|i| usize::try_from(i).ok())
            .ok_or_else(|| {
                SessionError::Usage(format!(
                    "N must be a non-negative integer, got {}",
                    crate::truth::format_ratio(&n)
                ))
            })?;
        exprs.pop();
        Ok((exprs.remove(0), n))
    }

    fn render_query(&self, p: &Pattern) -> Result<String> {
        let snap = self.store.snapshot();
        let results = query_parallel(p, &snap, self.cfg.workers.max(1))?;
        if results.is_empty() {
            return Ok("no matches".into());
        }
        let mut rows: Vec<String> = results.iter().map(|b| b.render(&snap)).collect();
        rows.sort();
        Ok(rows.join("\n"))
    }

    fn query(&mut self, text: &str) -> Result<String> {
        let e = Self::one_expr(text, "pattern")?;
        let p = pattern_form(&e)?;
        self.render_query(&p)
    }

    fn exec(&mut self, text: &str) -> Result<String> {
        let e = Self::one_expr(text, "call")?;
        let call = load(&[e], &self.store)?[0];
        let out = self.grounded.execute_and_commit(call, &self.store)?;
        let snap = self.store.snapshot();
        Ok(match out.value {
            GroundedValue::Atom(spec) => snap.render_spec(&spec)?,
            GroundedValue::Truth(tv) => tv.to_string(),
        })
    }

    fn forward(&mut self, text: &str) -> Result<String> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let (ruleset, n) = match words[..] {
            [r] => (r, self.cfg.max_steps),
            [r, n] => (
                r,
                n.parse()
                    .map_err(|_| SessionError::Usage(format!("N must be a non-negative integer, got `{n}`")))?,
            ),
            _ => return usage("usage: !forward RULESET [N]"),
        };
        let rules: Vec<RewriteRule> = if ruleset == "all" {
            rules_in(&self.store.snapshot())?
        } else {
            let text = std::fs::read_to_string(ruleset).map_err(|e| SessionError::Io(format!("{ruleset}: {e}")))?;
            let ids = load(&parse(&text)?, &self.store)?;
            let snap = self.store.snapshot();
            ids.into_iter()
                .filter(|id| snap.resolve(*id).is_ok_and(|a| a.type_name() == RULE))
                .map(|id| RewriteRule::from_atom(&snap, id))
                .collect::<Result<_, _>>()?
        };
        if rules.is_empty() {
            return usage(format!("no rules in `{ruleset}`"));
        }
        let before = self.store.snapshot();
        let trace = forward_chain(
            &self.store,
            &rules,
            ForwardConfig {
                max_steps: n,
                policy: Policy::ExhaustiveToFixpoint,
                workers: self.cfg.workers.max(1),
            },
        )?;
        let snap = self.store.snapshot();
        let mut out = trace.render(&snap);
        let changed = snap.len() - before.len();
        let _ = write!(
            out,
            "{} applied, {}, {} ({:?})",
            count(trace.steps.len(), "application"),
            count(changed, "new atom"),
            count(trace.steps_taken, "round"),
            trace.outcome
        );
        Ok(out)
    }

    fn backward(&mut self, text: &str) -> Result<String> {
        let (e, depth) = Self::expr_and_count(text, "backward", None)?;
        let goal = pattern_form(&e)?;
        let snap = self.store.snapshot();
        let rules = rules_in(&snap)?;
        let proofs = backward_chain(&snap, &goal, &rules, depth)?;
        if proofs.is_empty() {
            return Ok(format!("no proofs within depth {depth}"));
        }
        let mut out = String::new();
        for p in &proofs {
            let _ = writeln!(out, "{} [{}]", p.bindings.render(&snap), count(p.trace.len(), "step"));
            for step in &p.trace {
                for d in &step.derived {
                    let _ = writeln!(out, "  {} {}", snap.render_spec(&d.spec)?, d.tv);
                }
            }
        }
        out.pop();
        Ok(out)
    }

    fn atom_of(&self, e: &SExpr, snap: &Snapshot) -> Result<AtomId> {
        let spec = match &e.kind {
            SExprKind::Symbol(s) if !s.starts_with('$') => term_spec(&term_from_sexpr(e)?),
            _ if e.head().is_some_and(|h| HEADS.contains(&h)) => term_spec(&term_from_sexpr(e)?),
            _ => atom_form(e)?.spec,
        };
        snap.lookup_spec(&spec).ok_or_else(|| {
            SessionError::Usage(format!(
                "`{}` is not in the store",
                snap.render_spec(&spec).unwrap_or_default()
            ))
        })
    }

    fn check(&mut self, text: &str) -> Result<String> {
        let exprs = parse(text)?;
        let [atom, sys] = exprs.as_slice() else {
            return usage("usage: !check ATOM SYSTEM");
        };
        let name = match &sys.kind {
            SExprKind::Symbol(s) | SExprKind::Str(s) => s.clone(),
            _ => return usage("SYSTEM must be a name"),
        };
        let id = self.atom_of(atom, &self.store.snapshot())?;
        let sys = self.type_system(&name)?;
        let snap = self.store.snapshot();
        Ok(self.types.check_atom(id, sys, &snap)?.to_string())
    }

    fn eval(&mut self, text: &str) -> Result<String> {
        let (e, n) = Self::expr_and_count(text, "eval", Some(self.cfg.max_steps))?;
        let term = term_from_sexpr(&e)?;
        if !term.is_closed() {
            return usage(format!("`{term}` has free variables"));
        }
        Ok(eval_distribution(&term, n).to_string())
    }

    fn dump(&mut self, path: &str) -> Result<String> {
        let text = self.store.snapshot().dump();
        if path.is_empty() {
            return Ok(text.trim_end().to_string());
        }
        std::fs::write(Path::new(path), &text).map_err(|e| SessionError::Io(format!("{path}: {e}")))?;
        Ok(format!("wrote {} to {path}", count(self.store.len(), "atom")))
    }

    pub fn stats(&self) -> String {
        let snap = self.store.snapshot();
        let nodes = snap.atoms().filter(|(_, a)| a.is_node()).count();
        let mut out = format!(
            "atoms: {}\nnodes: {nodes}\nlinks: {}\nindex-inspections: {}\nmatch-attempts: {}",
            snap.len(),
            snap.len() - nodes,
            snap.stats().index_inspections(),
            snap.stats().match_attempts()
        );
        for (ty, n) in snap.type_counts() {
            let _ = write!(out, "\n  {ty}: {n}");
        }
        out
    }

    /// Every stored atom matching `spec`, for callers that want ids.
    pub fn lookup(&self, spec: &AtomSpec) -> Option<AtomId> {
        self.store.snapshot().lookup_spec(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "
        (Inheritance (Concept \"cat\") (Concept \"animal\"))
        (Inheritance (Concept \"dog\") (Concept \"animal\"))
        (Inheritance (Concept \"animal\") (Concept \"organism\"))";

    #[test]
    fn query_lists_sorted_bindings() {
        let mut s = Session::default();
        assert_eq!(s.execute(FIXTURE).unwrap(), "loaded 3 atoms");
        assert_eq!(
            s.execute("!query (Inheritance (Variable \"$x\") (Concept \"animal\"))")
                .unwrap(),
            "$x=(Concept \"cat\")\n$x=(Concept \"dog\")"
        );
        assert_eq!(
            s.execute("!query (Inheritance $x (Concept \"plant\"))").unwrap(),
            "no matches"
        );
    }

    #[test]
    fn eval_prints_the_distribution() {
        let mut s = Session::default();
        assert_eq!(
            s.execute("!eval (choice 1/2 (choice 1/2 a b) c) 100").unwrap(),
            "a:1/4 b:1/4 c:1/2"
        );
    }

    #[test]
    fn stats_on_empty_store() {
        let mut s = Session::default();
        assert_eq!(
            s.execute("!stats").unwrap(),
            "atoms: 0\nnodes: 0\nlinks: 0\nindex-inspections: 0\nmatch-attempts: 0"
        );
    }

    #[test]
    fn chaining_commands() {
        let mut s = Session::default();
        s.execute(FIXTURE).unwrap();
        s.execute("(Rule ((Inheritance $x $y) (Inheritance $y $z)) (Inheritance $x $z))")
            .unwrap();
        let back = s
            .execute("!backward (Inheritance $a (Concept \"organism\")) 1")
            .unwrap();
        assert!(back.contains("$a=(Concept \"cat\") [1 step]"), "{back}");
        let fwd = s.execute("!forward all 10").unwrap();
        assert!(
            fwd.ends_with("2 applications applied, 2 new atoms, 2 rounds (Fixpoint)"),
            "{fwd}"
        );
        assert_eq!(
            s.execute("!query (Inheritance $x (Concept \"organism\"))")
                .unwrap()
                .lines()
                .count(),
            3
        );
    }

    #[test]
    fn check_and_exec() {
        let mut s = Session::default();
        s.execute(
            "(Typed Bool lambda *) (Typed tt lambda Bool) (Typed (lam (x lin Bool) x) lambda (pi (x lin Bool) Bool))",
        )
        .unwrap();
        assert_eq!(s.execute("!check (lam (x lin Bool) x) lambda").unwrap(), "accept");
        assert_eq!(s.execute("!check tt lambda").unwrap(), "accept");
        s.execute("(Inheritance (Concept \"a\") (Concept \"b\") (Concept \"c\")) (Typed (Inheritance (Concept \"a\") (Concept \"b\") (Concept \"c\")) simple-arity (Concept \"T\"))").unwrap();
        assert_eq!(
            s.execute("!check (Inheritance (Concept \"a\") (Concept \"b\") (Concept \"c\")) simple-arity")
                .unwrap(),
            "reject"
        );
        assert_eq!(
            s.execute("!exec (Execution (GroundedSchema \"num:add\") (Number 2) (Number 3))")
                .unwrap(),
            "(Number \"5\")"
        );
    }

    #[test]
    fn scripts_mix_forms_and_commands() {
        let mut s = Session::default();
        let script = format!("{FIXTURE}\n(Rule ((Inheritance $x $y) (Inheritance $y $z))\n  (Inheritance $x $z))\n!forward all\n(Query (Inheritance (Concept \"cat\") $y))\n");
        let out = s.run_script(&script).unwrap();
        assert!(
            out.ends_with("$y=(Concept \"animal\")\n$y=(Concept \"organism\")"),
            "{out}"
        );
        let err = s.run_script("(Concept \"a\")\n\n(Concept)\n").unwrap_err();
        assert!(err.to_string().contains("3:1"), "{err}");
    }

    #[test]
    fn errors_do_not_end_the_session() {
        let mut s = Session::default();
        for bad in [
            "(Concept)",
            "(unclosed",
            "!nope",
            "!query",
            "!eval (choice 2 a b) 3",
            "!check (Concept \"x\") lambda",
            "!load /no/such/file",
            "!forward all x",
        ] {
            let out = s.respond(bad);
            assert!(out.starts_with("error: "), "{bad}: {out}");
        }
        assert!(s.respond("!stats").starts_with("atoms: 0"));
        assert!(is_incomplete("(a (b"));
        assert!(!is_incomplete("(a))"));
    }
}
