//! Driving the REPL programmatically: every line a user could type.

use metagraph::surface::Session;

fn main() {
    let mut s = Session::default();
    let lines = [
        "!stats",
        r#"(Inheritance (Concept "cat") (Concept "animal") (tv 9/10 1/2))"#,
        r#"(Query (Inheritance $x (Concept "animal")))"#,
        r#"!exec (Execution (GroundedSchema "num:add") (Number 2) (Number 1/4))"#,
        "(Typed tt lambda Bool)",
        "(Typed Bool lambda *)",
        "!check tt lambda",
        "!eval (choice 1/4 tt ff)",
        "!check (Concept \"cat\") nosuchsystem",
        "(Concept \"unclosed\"",
        "!dump",
        "!stats",
    ];
    for line in lines {
        println!("> {line}\n{}", s.respond(line));
    }
}
