// Best worst-case flip fidelity of a physical channel, against a
// brute-force search. Pass `--trace` to print the ascent trace as TSV.

use noflip::oracle::{brute_force_not_optimum, BruteForceConfig};
use noflip::unot::{optimize_universal_not, OptimizerConfig};

pub fn run() -> noflip::Result<()> {
    let opt = optimize_universal_not(&OptimizerConfig::default())?;
    println!("optimum worst-case fidelity {} via {}", opt.score.worst, opt.strategy.name());
    println!("  average {}", opt.score.average);
    println!("  ascent alone {} after {} iterations", opt.ascent_score.worst, opt.trace.len());
    println!("  covariant line stops at s = {}", opt.line_parameter);
    let (_, oracle) = brute_force_not_optimum(&BruteForceConfig::default())?;
    println!("brute force {oracle}");
    if std::env::args().any(|a| a == "--trace") {
        print!("{}", opt.trace_tsv());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noflip::Result<()> {
    run()
}
