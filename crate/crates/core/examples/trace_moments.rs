//! Regenerates `src/cointegration/table.rs`, the mean and variance of the
//! asymptotic trace-test distribution used by the gamma approximation.
//!
//!     cargo run --release -p vecm-core --example trace_moments -- 500000 1000 20240601 > crates/core/src/cointegration/table.rs

use vecm_core::cointegration::moments::simulate_trace_moments;
use vecm_core::cointegration::JohansenDeterministic;

const MAX_DIMS: usize = 12;

fn main() {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(500_000, |s| s.parse().expect("replications"));
    let steps: usize = args.next().map_or(1_000, |s| s.parse().expect("steps"));
    let seed: u64 = args.next().map_or(20_240_601, |s| s.parse().expect("seed"));

    let sims = simulate_trace_moments(MAX_DIMS, reps, steps, seed);
    println!("// Generated by `cargo run --release -p vecm-core --example trace_moments -- {reps} {steps} {seed}`.");
    println!("// (mean, variance) of the asymptotic trace statistic, index = common trends − 1.");
    println!();
    println!("pub const MAX_DIMS: usize = {MAX_DIMS};");
    println!("pub const MOMENT_REPLICATIONS: usize = {reps};");
    println!("pub const MOMENT_STEPS: usize = {steps};");
    println!("pub const MOMENT_SEED: u64 = {seed};");
    for sim in sims {
        let name = match sim.deterministic {
            JohansenDeterministic::None => "NONE",
            JohansenDeterministic::RestrictedConstant => "RESTRICTED_CONSTANT",
            JohansenDeterministic::UnrestrictedConstant => "UNRESTRICTED_CONSTANT",
        };
        println!();
        println!("pub static {name}: [(f64, f64); MAX_DIMS] = [");
        for (mean, var) in sim.moments {
            println!("    ({mean:.6}, {var:.6}),");
        }
        println!("];");
    }
}
