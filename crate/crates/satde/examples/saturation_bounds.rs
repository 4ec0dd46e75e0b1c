//! The saturation operators on random symmetric densities: the degradation
//! chain, the Wasserstein distance bound `1 - tanh(k/2)`, and the additive
//! and multiplicative Bhattacharyya slacks.
//!
//! Run with: cargo run --release --example saturation_bounds

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satde::saturation::{saturate, symmetric_saturate};
use satde::{Density, Grid};

fn main() -> satde::Result<()> {
    let grid = Grid::for_saturation(12.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let a = Density::random_symmetric(grid, &mut rng, 12);
    println!("random symmetric density: B = {:.5}", a.bhattacharyya());
    println!(
        "{:>4} {:>9} {:>12} {:>12} {:>10} {:>10} {:>6}",
        "k", "gamma", "wasserstein", "1-tanh(k/2)", "B(hard)", "B(sym)", "chain"
    );
    for k in [1.0, 2.0, 4.0, 8.0] {
        let hard = saturate(&a, k)?;
        let sym = symmetric_saturate(&a, k)?;
        let chain = a.is_degraded_under(&hard, 1e-9) && hard.is_degraded_under(&sym, 1e-9);
        println!(
            "{k:>4} {:>9.5} {:>12.3e} {:>12.3e} {:>10.5} {:>10.5} {:>6}",
            a.tail_mass(k),
            a.wasserstein(&sym),
            1.0 - (k / 2.0f64).tanh(),
            hard.bhattacharyya(),
            sym.bhattacharyya(),
            if chain { "ok" } else { "BROKEN" },
        );
        assert!(a.wasserstein(&sym) <= 1.0 - (k / 2.0f64).tanh() + 1e-12);
        assert!(hard.bhattacharyya() <= a.bhattacharyya() + (-k / 2.0f64).exp() + 1e-12);
    }
    Ok(())
}
