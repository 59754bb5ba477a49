//! A small knowledge base about who jaywalks, loaded from text and run
//! through a session the way a user would at the prompt.

use metagraph::surface::{Session, SessionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut s = Session::new(SessionConfig::default());
    println!("{}", s.run_script(include_str!("../fixtures/jaywalking.scm"))?);
    for cmd in [
        r#"!query (Evaluation (Predicate "jaywalks") (List $who))"#,
        r#"!backward (Evaluation (Predicate "jaywalks") (List $who)) 1"#,
        "!forward all 10",
        r#"!query (Evaluation (Predicate "jaywalks") (List $who))"#,
    ] {
        println!("> {cmd}\n{}", s.execute(cmd)?);
    }
    Ok(())
}
