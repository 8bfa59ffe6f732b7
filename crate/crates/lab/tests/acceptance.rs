//! Acceptance suite: one pass/fail line per criterion. Tolerances are pinned
//! in `leverage_lab::checks`.

use leverage_lab::checks::run_all;

const SEED: u64 = 42;

fn main() {
    let results = run_all(SEED);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "acceptance: {} passed, {} failed, seed {SEED}",
        results.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
