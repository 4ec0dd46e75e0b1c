//! Density evolution traces: full BP against the saturated variants on the
//! same channel, printing the per-iteration functionals and the mixture
//! split of each saturated density.
//!
//! Run with: cargo run --release --example de_trace

use satde::de::{run_de, saturation_config, CheckRule, DeMode, DeVariant, StopRule};
use satde::{Channel, ChannelKind, DegreeDistribution, Grid};

fn main() -> satde::Result<()> {
    let k_var = 15.0;
    let grid = Grid::for_saturation(k_var)?;
    let dd = DegreeDistribution::regular(3, 6)?;
    let channel = Channel::new(ChannelKind::Bec, 0.41)?.density(grid)?;
    let cfg = saturation_config(&grid, &dd, CheckRule::SumProduct, k_var, None, None)?;
    let stop = StopRule {
        target_b: Some(1.05 * (-k_var / 2.0).exp()),
        stall: Some((50, 1e-9)),
        max_iters: 200,
    };

    for variant in [DeVariant::FullBp, DeVariant::SatHard, DeVariant::SatSymmetric] {
        let mode = DeMode::new(variant, CheckRule::SumProduct);
        let sat = variant.is_saturated().then_some(&cfg);
        let trace = run_de(mode, &dd, &channel, sat, &stop, false)?;
        println!("== {} (outcome {:?})", variant.name(), trace.outcome);
        println!("{:>5} {:>13} {:>13} {:>13} {:>13}", "iter", "B", "Pe", "gamma*p", "gbar*B(m)");
        for row in trace.rows.iter().step_by(5).chain(trace.rows.last()) {
            println!(
                "{:>5} {:>13.4e} {:>13.4e} {:>13} {:>13}",
                row.iter,
                row.funcs.bhattacharyya,
                row.funcs.error_prob,
                row.gamma_p.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into()),
                row.gbar_bm.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into()),
            );
        }
        println!();
    }
    Ok(())
}
