//! Near-stability analysis: the entry threshold x*, the minimum usable
//! saturation level, and the residual Bhattacharyya bound the saturated
//! recursion settles under — plus the degree-2 failure mode where no
//! window exists.
//!
//! Run with: cargo run --release --example stability_window

use satde::stability::{near_stability_window, stability_margin, support_recursion};
use satde::{Channel, ChannelKind, DegreeDistribution, Grid};

fn main() -> satde::Result<()> {
    let grid = Grid::for_saturation(20.0)?;

    for (spec, chan, kvar) in [
        ("reg:3,6", 0.40, 20.0),
        ("irr: l2=0.5,l3=0.5 ; r4=1.0", 0.40, 20.0),
        ("irr: l2=0.5,l3=0.5 ; r4=1.0", 0.66, 20.0),
        ("reg:2,4", 0.40, 20.0),
    ] {
        let dd: DegreeDistribution = spec.parse()?;
        let c = Channel::new(ChannelKind::Bec, chan)?.density(grid)?;
        let margin = stability_margin(&dd, &c, None);
        print!("{spec} over BEC({chan}): margin {margin:.4} -> ");
        match near_stability_window(&dd, &c, kvar) {
            Ok(w) => println!(
                "x* {:.4e}, k_min {:.2}, residual {:.3e} (C = {:.2})",
                w.x_star, w.k_min, w.residual_bound, w.c_dmin
            ),
            Err(e) => println!("{e}"),
        }
    }

    // why degree-2 chains cannot hold a zero-error set: the support edge
    // shrinks by the channel magnitude every iteration
    println!("\nsupport recursion, d_l = 2, channel magnitude 1, z0 = 5:");
    let r = support_recursion(2, 1.0, 5.0, 10);
    println!("  z = {:?}, first negative at {:?}", r.zs, r.first_negative);
    Ok(())
}
