//! Decoding thresholds over the BEC: full BP against hard saturation at a
//! ladder of levels, showing the saturated threshold approaching the BP
//! threshold as the level grows.
//!
//! Run with: cargo run --release --example threshold_search

use satde::de::{find_threshold, saturation_config, CheckRule, DeMode, DeVariant};
use satde::{ChannelKind, DegreeDistribution, Grid};

fn main() -> satde::Result<()> {
    let dd = DegreeDistribution::regular(3, 6)?;
    let tol = 2e-4;

    let grid = Grid::for_saturation(20.0)?;
    let bp = find_threshold(DeMode::full_bp(), &dd, ChannelKind::Bec, grid, None, tol, 5000)?;
    println!("full BP threshold: {:.5} (bracket [{:.5}, {:.5}])", bp.mid, bp.lo, bp.hi);

    for k_var in [6.0, 10.0, 15.0, 20.0] {
        let grid = Grid::for_saturation(k_var)?;
        let cfg = saturation_config(&grid, &dd, CheckRule::SumProduct, k_var, None, None)?;
        let mode = DeMode::new(DeVariant::SatHard, CheckRule::SumProduct);
        let t = find_threshold(mode, &dd, ChannelKind::Bec, grid, Some(&cfg), tol, 5000)?;
        println!(
            "hard saturation at k_var = {k_var:>4}: threshold {:.5} (gap {:+.2e})",
            t.mid,
            t.mid - bp.mid
        );
    }
    Ok(())
}
