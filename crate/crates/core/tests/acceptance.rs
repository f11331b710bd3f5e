//! One line per acceptance criterion; all must pass. Runs without the libtest
//! harness so the lines show up in plain `cargo test` output.

use noflip::acceptance::{selftest, DEFAULT_SEED};

fn main() {
    let st = selftest(DEFAULT_SEED);
    for r in &st.results {
        println!("{}", r.line());
    }
    let ids: Vec<u8> = st.results.iter().map(|r| r.id).collect();
    assert_eq!(ids, vec![1, 2, 3, 4, 5, 6, 7], "missing criteria");
    let failed = st.results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", st.results.len());
}
