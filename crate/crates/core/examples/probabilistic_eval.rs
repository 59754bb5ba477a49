//! Exact outcome distributions under call-by-value, by two expansion orders.

use metagraph::lambda::{eval_distribution, eval_distribution_dfs, parse_term};

fn main() {
    let programs = [
        // the argument is chosen once, then duplicated
        "(app (lam x (app pair x x)) (choice 1/2 a b))",
        "(choice 1/3 tt (choice 1/2 ff tt))",
        "(app (choice 1/4 (lam x x) (lam x (app not x))) tt)",
        // no value within the budget
        "(app (lam x (app x x)) (lam x (app x x)))",
    ];
    for src in programs {
        let t = parse_term(src).expect("well formed");
        let d = eval_distribution(&t, 50);
        assert_eq!(d, eval_distribution_dfs(&t, 50));
        println!("{src}\n  => {d}  (mass {})", d.total());
    }
}
