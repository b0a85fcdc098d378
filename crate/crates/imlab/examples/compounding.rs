//! Fits the regret-growth exponent of supervised imitation against
//! forward training and DAgger on the cliff walk: one family compounds
//! roughly quadratically with the horizon, the others stay near linear.
//!
//! Run with `cargo run --release --example compounding`.

use imlab::algorithms::AlgoId;
use imlab::analysis::compounding_fit;
use imlab::envs::EnvSpec;

fn main() -> imlab::Result<()> {
    let env = EnvSpec::Cliffwalk { length: 25, fall_cost: 1.0, horizon: 10 };
    let t_values = [5, 10, 20, 40];
    let seeds: Vec<u64> = (0..10).collect();
    let flip_rate = 0.05;

    println!("regret growth on cliff-walk (flip rate {flip_rate}):");
    println!("{:<18} {:>8} {:>10} {:>8}", "algorithm", "slope", "std_err", "points");
    for algo in [AlgoId::SupervisedBc, AlgoId::ForwardTraining, AlgoId::Dagger] {
        let fit = compounding_fit(&env, algo, &t_values, flip_rate, &seeds, 10)?;
        if fit.defined {
            println!(
                "{:<18} {:>8.3} {:>10.4} {:>8}",
                algo.name(),
                fit.slope,
                fit.std_error,
                fit.points.len()
            );
        } else {
            println!("{:<18} exponent undefined (zero regret everywhere)", algo.name());
        }
    }
    Ok(())
}
