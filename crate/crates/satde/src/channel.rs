//! BMS channel families ordered by degradation.

use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Channel family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// Binary erasure channel with erasure probability `ε ∈ [0, 1]`.
    Bec,
    /// Binary symmetric channel with crossover `ε ∈ [0, 0.5]`.
    Bsc,
    /// Binary-input AWGN channel with noise deviation `σ > 0`.
    BiAwgn,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::Bec => "bec",
            ChannelKind::Bsc => "bsc",
            ChannelKind::BiAwgn => "biawgn",
        }
    }

    /// Natural bisection bracket for the family parameter.
    pub fn param_range(&self) -> (f64, f64) {
        match self {
            ChannelKind::Bec => (0.0, 1.0),
            ChannelKind::Bsc => (0.0, 0.5),
            ChannelKind::BiAwgn => (1e-3, 20.0),
        }
    }
}

/// A concrete member of a channel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kind: ChannelKind,
    pub param: f64,
}

impl Channel {
    pub fn new(kind: ChannelKind, param: f64) -> Result<Self> {
        let (lo, hi) = kind.param_range();
        if !param.is_finite() || param < lo || param > hi {
            return Err(Error::InvalidConfig {
                field: "channel".into(),
                msg: format!("{} parameter {param} outside [{lo}, {hi}]", kind.name()),
            });
        }
        Ok(Channel { kind, param })
    }

    /// Channel with the given entropy, found by bisection on the natural
    /// parameter (exact for the BEC).
    pub fn from_entropy(kind: ChannelKind, h: f64) -> Result<Self> {
        let param = param_for_entropy(kind, h)?;
        Channel::new(kind, param)
    }

    /// L-density conditioned on transmitting +1.
    pub fn density(&self, grid: Grid) -> Result<Density> {
        match self.kind {
            ChannelKind::Bec => {
                let eps = self.param;
                Density::from_atoms(grid, &[(0.0, eps), (f64::INFINITY, 1.0 - eps)])
            }
            ChannelKind::Bsc => {
                let eps = self.param;
                if eps == 0.0 {
                    return Ok(Density::delta_pos_inf(grid));
                }
                if eps == 0.5 {
                    return Ok(Density::delta_zero(grid));
                }
                let l = ((1.0 - eps) / eps).ln();
                if l > grid.half_range() {
                    return Err(Error::GridTooNarrow(format!(
                        "bsc llr {l:.2} exceeds grid range {:.2}",
                        grid.half_range()
                    )));
                }
                Density::from_atoms(grid, &[(l, 1.0 - eps), (-l, eps)])
            }
            ChannelKind::BiAwgn => biawgn_density(self.param, grid),
        }
    }

    /// Channel entropy in bits.
    pub fn entropy(&self) -> f64 {
        match self.kind {
            ChannelKind::Bec => self.param,
            ChannelKind::Bsc => binary_entropy(self.param),
            ChannelKind::BiAwgn => biawgn_entropy(self.param),
        }
    }
}

/// Binary entropy function in bits.
pub fn binary_entropy(eps: f64) -> f64 {
    if eps <= 0.0 || eps >= 1.0 {
        return 0.0;
    }
    -(eps * eps.log2() + (1.0 - eps) * (1.0 - eps).log2())
}

/// Inverts the entropy map of a family by bisection to 1e-10 on the
/// parameter; the BEC is exact.
pub fn param_for_entropy(kind: ChannelKind, h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidConfig {
            field: "entropy".into(),
            msg: format!("entropy {h} outside [0, 1]"),
        });
    }
    match kind {
        ChannelKind::Bec => Ok(h),
        ChannelKind::Bsc => {
            if h >= 1.0 {
                return Ok(0.5);
            }
            Ok(bisect_increasing(|e| binary_entropy(e), h, 0.0, 0.5))
        }
        ChannelKind::BiAwgn => {
            let (lo, hi) = kind.param_range();
            Ok(bisect_increasing(biawgn_entropy, h, lo, hi))
        }
    }
}

fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gaussian cdf via the error function.
fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes rational approximation,
/// double-precision refined; max relative error ~1e-13 after one Newton
/// step is not needed here since masses are differenced).
fn erfc(x: f64) -> f64 {
    // W. J. Cody style decomposition via the scaled exponent trick
    let z = x.abs();
    let t = 2.0 / (2.0 + z);
    let ty = 4.0 * t - 2.0;
    const COF: [f64; 28] = [
        -1.3026537197817094,
        6.4196979235649026e-1,
        1.9476473204185836e-2,
        -9.561514786808631e-3,
        -9.46595344482036e-4,
        3.66839497852761e-4,
        4.2523324806907e-5,
        -2.0278578112534e-5,
        -1.624290004647e-6,
        1.303655835580e-6,
        1.5626441722e-8,
        -8.5238095915e-8,
        6.529054439e-9,
        5.059343495e-9,
        -9.91364156e-10,
        -2.27365122e-10,
        9.6467911e-11,
        2.394038e-12,
        -6.886027e-12,
        8.94487e-13,
        3.13092e-13,
        -1.12708e-13,
        3.81e-16,
        7.106e-15,
        -1.523e-15,
        -9.4e-17,
        1.21e-16,
        -2.8e-17,
    ];
    let mut d = 0.0;
    let mut dd = 0.0;
    for &c in COF.iter().rev().take(COF.len() - 1) {
        let tmp = d;
        d = ty * d - dd + c;
        dd = tmp;
    }
    let ans = t * (-z * z + 0.5 * (COF[0] + ty * d) - dd).exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Per-bin integral of the biAWGN LLR density (Gaussian with mean `2/σ²` and
/// variance `4/σ²`), with the tiny tails folded onto the extreme bins.
fn biawgn_density(sigma: f64, grid: Grid) -> Result<Density> {
    let mean = 2.0 / (sigma * sigma);
    let sd = 2.0 / sigma;
    let half = grid.half_range();
    let dx = grid.spacing();
    let tail = normal_cdf((-half - dx / 2.0 - mean) / sd)
        + (1.0 - normal_cdf((half + dx / 2.0 - mean) / sd));
    if tail > 1e-9 {
        return Err(Error::GridTooNarrow(format!(
            "biawgn sigma {sigma}: tail mass {tail:.3e} beyond ±{half}"
        )));
    }
    let mut d = Density::zeroed(grid);
    let n = grid.bin_count();
    let mut prev = 0.0; // cdf at lower edge of bin 0, with tail folded in
    for i in 0..n {
        let upper = if i + 1 == n {
            1.0
        } else {
            normal_cdf((grid.value(i) + dx / 2.0 - mean) / sd)
        };
        d.interior_mut()[i] = (upper - prev).max(0.0);
        prev = upper;
    }
    Ok(d)
}

/// Entropy of the biAWGN channel, integrated numerically on a dedicated fine
/// grid so inversion accuracy does not depend on the working grid.
fn biawgn_entropy(sigma: f64) -> f64 {
    let mean = 2.0 / (sigma * sigma);
    let sd = 2.0 / sigma;
    let half = mean + 12.0 * sd + 1.0;
    let grid = Grid::new(crate::grid::DEFAULT_SPACING / 4.0, half).expect("entropy grid");
    biawgn_density(sigma, grid)
        .expect("tail fits by construction")
        .functionals()
        .entropy
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1.0 / 16.0, 24.0).unwrap()
    }

    #[test]
    fn bsc_density_atoms() {
        let g = grid();
        let c = Channel::new(ChannelKind::Bsc, 0.1).unwrap().density(g).unwrap();
        let l = (9.0f64).ln();
        let lo = g.bin_of(l) - 1;
        let m: f64 = c.interior_mass()[lo..=lo + 2].iter().sum();
        assert!((m - 0.9).abs() < 1e-12);
        // the split atoms carry an asymmetry defect of order the spacing
        assert!(c.is_symmetric(0.02), "defect {}", c.symmetry_defect());
        assert!((c.functionals().error_prob - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bec_density_atoms() {
        let g = grid();
        let c = Channel::new(ChannelKind::Bec, 0.3).unwrap().density(g).unwrap();
        assert!((c.zero_mass() - 0.3).abs() < 1e-15);
        assert!((c.atom_pos_inf() - 0.7).abs() < 1e-15);
        assert!(c.is_symmetric(1e-12));
    }

    #[test]
    fn noiseless_bsc_is_perfect() {
        let g = grid();
        let c = Channel::new(ChannelKind::Bsc, 0.0).unwrap().density(g).unwrap();
        assert_eq!(c.atom_pos_inf(), 1.0);
    }

    #[test]
    fn bhattacharyya_closed_forms() {
        let g = grid();
        for (kind, p, expect) in [
            (ChannelKind::Bec, 0.37, 0.37),
            (ChannelKind::Bsc, 0.1, 2.0 * (0.1f64 * 0.9).sqrt()),
            (ChannelKind::BiAwgn, 0.9, (-1.0 / (2.0 * 0.9f64 * 0.9)).exp()),
        ] {
            let b = Channel::new(kind, p)
                .unwrap()
                .density(g)
                .unwrap()
                .functionals()
                .bhattacharyya;
            assert!(
                (b - expect).abs() < 1e-4,
                "{}: {b} vs {expect}",
                kind.name()
            );
        }
    }

    #[test]
    fn biawgn_is_symmetric_on_grid() {
        let g = grid();
        let c = Channel::new(ChannelKind::BiAwgn, 1.2).unwrap().density(g).unwrap();
        assert!(c.validate().is_ok());
        assert!(c.is_symmetric(1e-3), "defect {}", c.symmetry_defect());
    }

    #[test]
    fn narrow_grid_rejected_for_biawgn() {
        let g = Grid::new(1.0 / 16.0, 6.0).unwrap();
        assert!(Channel::new(ChannelKind::BiAwgn, 0.4).unwrap().density(g).is_err());
    }

    #[test]
    fn families_ordered_by_degradation() {
        let g = grid();
        for kind in [ChannelKind::Bec, ChannelKind::Bsc, ChannelKind::BiAwgn] {
            let (p1, p2) = match kind {
                ChannelKind::BiAwgn => (0.9, 1.3),
                _ => (0.1, 0.3),
            };
            let a = Channel::new(kind, p1).unwrap().density(g).unwrap();
            let b = Channel::new(kind, p2).unwrap().density(g).unwrap();
            assert!(
                a.is_degraded_under(&b, 1e-9),
                "{} not ordered",
                kind.name()
            );
        }
    }

    #[test]
    fn entropy_inversion() {
        assert_eq!(param_for_entropy(ChannelKind::Bec, 0.5).unwrap(), 0.5);
        assert!((param_for_entropy(ChannelKind::Bsc, 1.0).unwrap() - 0.5).abs() < 1e-9);
        let e = param_for_entropy(ChannelKind::Bsc, 0.5).unwrap();
        assert!((e - 0.110027864).abs() < 1e-6, "got {e}");
        assert!(param_for_entropy(ChannelKind::Bsc, 1.5).is_err());

        let sigma = param_for_entropy(ChannelKind::BiAwgn, 0.469).unwrap();
        let back = Channel::new(ChannelKind::BiAwgn, sigma).unwrap().entropy();
        assert!((back - 0.469).abs() < 1e-6);
    }

    #[test]
    fn entropy_monotone_in_param() {
        let mut prev = -1.0;
        for i in 1..20 {
            let h = Channel::new(ChannelKind::BiAwgn, i as f64 * 0.2).unwrap().entropy();
            assert!(h > prev);
            prev = h;
        }
    }
}
