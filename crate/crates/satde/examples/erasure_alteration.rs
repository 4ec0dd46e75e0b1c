//! The three-message decoder used late in decoding for minimum degree 3:
//! erase the channel, hard-map messages to {-1, 0, +1}, and watch
//! ln 1/(x+y) double every two steps.
//!
//! Run with: cargo run --release --example erasure_alteration

use satde::stability::{erasure_de_run, erasure_doubling_ratio};

fn main() {
    let states = erasure_de_run(1e-3, 1e-3, 6, 10);
    println!("{:>4} {:>12} {:>12} {:>12}", "step", "x", "y", "ln 1/(x+y)");
    for (i, s) in states.iter().enumerate() {
        println!(
            "{i:>4} {:>12.4e} {:>12.4e} {:>12.3}",
            s.x,
            s.y,
            (1.0 / (s.x + s.y)).ln()
        );
    }
    println!(
        "\nfitted doubling ratio per two steps: {:.4}",
        erasure_doubling_ratio(&states)
    );
}
