//! Finite-length cross-check of density evolution: decode random graphs at
//! n = 2^14 on the BEC and compare the per-iteration message erasure rate
//! against the DE trace.
//!
//! Run with: cargo run --release --example monte_carlo_ber

use satde::de::{run_de, DeMode, StopRule};
use satde::graph::{monte_carlo, DecoderConfig};
use satde::{Channel, ChannelKind, DegreeDistribution, Grid};

fn main() -> satde::Result<()> {
    let dd = DegreeDistribution::regular(3, 6)?;
    let channel = Channel::new(ChannelKind::Bec, 0.40)?;
    let iters = 8;

    let grid = Grid::for_saturation(20.0)?;
    let de = run_de(
        DeMode::full_bp(),
        &dd,
        &channel.density(grid)?,
        None,
        &StopRule::exhaustive(iters),
        false,
    )?;

    let cfg = DecoderConfig::plain_bp(iters);
    let mc = monte_carlo(&dd, 1 << 14, channel, &cfg, 20, 7)?;
    println!("BER {:.4e}, BLER {:.3} over {} trials", mc.ber, mc.bler, mc.trials);
    println!(
        "{:>5} {:>14} {:>14} {:>12}",
        "iter", "DE erasure", "MC erasure", "3 SE"
    );
    for l in 1..=iters {
        // on the BEC all mass is erased or correct, so Pe is half the
        // erasure probability
        let predicted = 2.0 * de.rows[l].funcs.error_prob;
        println!(
            "{l:>5} {predicted:>14.6} {:>14.6} {:>12.2e}",
            mc.mean_erased[l - 1],
            3.0 * mc.se_erased[l - 1]
        );
    }
    Ok(())
}
