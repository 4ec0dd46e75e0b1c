//! Lockstep comparison of full BP density evolution with its symmetric
//! saturated counterpart: the degradation ordering holds every iteration
//! and the Wasserstein divergence stays below
//! `2 exp(-k + l ln(2 (dl-1)(dr-1)))`.
//!
//! Run with: cargo run --release --example perturbation_bounds

use satde::de::perturbation_check;
use satde::{Channel, ChannelKind, DegreeDistribution, Grid};

fn main() -> satde::Result<()> {
    let dd = DegreeDistribution::regular(3, 6)?;
    for k_var in [10.0, 12.0, 16.0] {
        let grid = Grid::for_saturation(k_var)?;
        let channel = Channel::new(ChannelKind::Bec, 0.40)?.density(grid)?;
        let report = perturbation_check(&dd, &channel, k_var, 5, 1e-9)?;
        println!("k_var = {k_var}");
        println!(
            "{:>5} {:>13} {:>13} {:>12} {:>12} {:>9}",
            "iter", "wasserstein", "bound", "B(bp)", "B(sym)", "degraded"
        );
        for row in &report.rows {
            println!(
                "{:>5} {:>13.4e} {:>13.4e} {:>12.4e} {:>12.4e} {:>9}",
                row.iter,
                row.wasserstein,
                row.wasserstein_bound,
                row.b_bp,
                row.b_sym,
                row.degraded_ok,
            );
        }
        println!();
    }
    Ok(())
}
