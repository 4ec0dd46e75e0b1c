use satde::de::*;
use satde::*;
fn main() {
    let dd = DegreeDistribution::regular(2, 4).unwrap();
    let k_var = 12.0;
    let grid = Grid::for_saturation(k_var).unwrap();
    let cfg = saturation_config(&grid, &dd, CheckRule::SumProduct, k_var, None, None).unwrap();
    println!("k_check {} k_channel {}", cfg.k_check, cfg.k_channel);
    let c = Channel::new(ChannelKind::Bec, 0.25).unwrap().density(grid).unwrap();
    let mode = DeMode::new(DeVariant::SatHard, CheckRule::SumProduct);
    let mut x = Density::delta_zero(grid);
    let csat = satde::saturation::saturate(&c, cfg.k_channel).unwrap();
    for iter in 1..=1400 {
        x = de_step(mode, &dd, &csat, &x, Some(&cfg)).unwrap();
        if iter == 1300 {
            println!("iter {iter} atoms with mass < 1e-20 or near zero bin:");
            for (v, m) in x.atoms() {
                if m < 1e-20 || v.abs() < 1.0 {
                    println!("  llr {v:>10.4} mass {m:.3e}");
                }
            }
            let tiny: Vec<(f64,f64)> = x.atoms().into_iter().filter(|&(_,m)| m > 1e-20).filter(|&(v,_)| v.abs() < 8.0 && v != 0.0).collect();
            println!("  mid-mag atoms > 1e-20: {tiny:?}");
        }
    }
}
