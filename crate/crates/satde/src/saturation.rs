//! Saturation operators on densities and the mixture bookkeeping they
//! induce.
//!
//! Three operators are provided. Hard saturation moves all mass with
//! magnitude at least `k` onto `±k`. Symmetric saturation additionally
//! flips the sign of the saturated mass so that the boundary atoms satisfy
//! the density symmetry condition, which restores the degradation order at
//! the cost of a slightly noisier density. Two-tier saturation maps
//! mid-range magnitudes onto an inner level `k_alt` as well, which is what
//! recovers doubly exponential convergence for minimum variable degree four.

use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative per-bin asymmetry above which symmetric saturation refuses its
/// input. Quantization noise stays well below this; genuinely asymmetric
/// densities (for example hard-saturated ones) land far above it.
pub const SYMMETRY_REJECT_TOL: f64 = 0.5;

/// Saturation levels for a run. All levels are snapped to the working grid
/// at construction so the boundary atoms are exactly representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationConfig {
    /// Variable-node output level.
    pub k_var: f64,
    /// Check-node output level implied by `k_var` (derived, never set
    /// directly): the check output magnitude when every incoming message has
    /// magnitude `k_var`.
    pub k_check: f64,
    /// Channel truncation level.
    pub k_channel: f64,
    /// Inner level for two-tier saturation, `tier_ratio * k_var`.
    pub k_alt: Option<f64>,
    /// Two-tier ratio `λ ∈ (1/2, 1]`.
    pub tier_ratio: Option<f64>,
}

impl SaturationConfig {
    /// Builds and validates a configuration. `k_check` comes from the check
    /// update rule; `k_channel` defaults to its maximum admissible value
    /// `2 k_check - k_var`.
    pub fn new(
        grid: &Grid,
        k_var: f64,
        k_check: f64,
        k_channel: Option<f64>,
        tier_ratio: Option<f64>,
    ) -> Result<Self> {
        let k_var = grid.snap(k_var);
        let k_check = grid.snap(k_check);
        if !(k_var > 0.0) {
            return Err(Error::InvalidConfig {
                field: "k_var".into(),
                msg: format!("must be positive, got {k_var}"),
            });
        }
        if k_var > grid.half_range() {
            return Err(Error::SaturationRange(format!(
                "k_var {k_var} exceeds grid range {}",
                grid.half_range()
            )));
        }
        if 2.0 * k_check <= k_var {
            return Err(Error::InvalidConfig {
                field: "k_check".into(),
                msg: format!("2 k_check = {} must exceed k_var = {k_var}; raise k_var", 2.0 * k_check),
            });
        }
        let (k_alt, tier_ratio) = match tier_ratio {
            None => (None, None),
            Some(lam) => {
                if !(lam > 0.5 && lam <= 1.0) {
                    return Err(Error::InvalidConfig {
                        field: "tier_ratio".into(),
                        msg: format!("must lie in (1/2, 1], got {lam}"),
                    });
                }
                (Some(grid.snap(lam * k_var)), Some(lam))
            }
        };
        // two-tier tightens the admissible channel range by k_alt
        let k_channel_max = 2.0 * k_check - k_var - k_alt.unwrap_or(0.0);
        if k_channel_max <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "k_alt".into(),
                msg: format!(
                    "no admissible k_channel: 2 k_check - k_var - k_alt = {k_channel_max:.4}"
                ),
            });
        }
        let k_channel = grid.snap(k_channel.unwrap_or(k_channel_max));
        if k_channel <= 0.0 || k_channel > k_channel_max + 1e-12 {
            return Err(Error::InvalidConfig {
                field: "k_channel".into(),
                msg: format!("must lie in (0, {k_channel_max:.4}], got {k_channel}"),
            });
        }
        Ok(SaturationConfig {
            k_var,
            k_check,
            k_channel,
            k_alt,
            tier_ratio,
        })
    }
}

/// Hard saturation: all mass with `|llr| >= k` (including the infinity
/// atoms) moves onto `±k`, preserving sign.
pub fn saturate(a: &Density, k: f64) -> Result<Density> {
    let grid = *a.grid();
    let k = grid.snap(k);
    if !(k > 0.0) || k > grid.half_range() {
        return Err(Error::SaturationRange(format!(
            "level {k} not in (0, {}]",
            grid.half_range()
        )));
    }
    let hi = grid.bin_of(k);
    let lo = grid.bin_of(-k);
    let mut out = Density::zeroed(grid);
    let m_in = a.interior_mass();
    {
        let m = out.interior_mut();
        for i in 0..m_in.len() {
            let j = i.clamp(lo, hi);
            m[j] += m_in[i];
        }
        m[hi] += a.atom_pos_inf();
        m[lo] += a.atom_neg_inf();
    }
    Ok(out)
}

/// Symmetric saturation: saturated mass lands on `±k` with sign-error
/// probability `p = 1/(1+e^k)`, which keeps the output symmetric and
/// degraded with respect to the hard-saturated density.
pub fn symmetric_saturate(a: &Density, k: f64) -> Result<Density> {
    if !a.is_symmetric(SYMMETRY_REJECT_TOL) {
        return Err(Error::NotSymmetric {
            defect: a.symmetry_defect().max(a.atom_neg_inf()),
            tol: SYMMETRY_REJECT_TOL,
        });
    }
    symmetric_saturate_unchecked(a, k)
}

/// The symmetric-saturation map without the symmetry precondition check;
/// density evolution applies it to quantized densities whose defect is pure
/// grid noise.
pub(crate) fn symmetric_saturate_unchecked(a: &Density, k: f64) -> Result<Density> {
    let grid = *a.grid();
    let k = grid.snap(k);
    if !(k > 0.0) || k > grid.half_range() {
        return Err(Error::SaturationRange(format!(
            "level {k} not in (0, {}]",
            grid.half_range()
        )));
    }
    let hi = grid.bin_of(k);
    let lo = grid.bin_of(-k);
    let gamma = a.tail_mass(k);
    let p = 1.0 / (1.0 + k.exp());
    let mut out = Density::zeroed(grid);
    let m_in = a.interior_mass();
    {
        let m = out.interior_mut();
        for i in lo + 1..hi {
            m[i] = m_in[i];
        }
        m[hi] = gamma * (1.0 - p);
        m[lo] = gamma * p;
    }
    Ok(out)
}

/// Two-tier saturation: `|llr| >= k_var` lands on `±k_var`, magnitudes in
/// `[k_alt, k_var)` land on `±k_alt`, the rest is untouched.
pub fn two_tier_saturate(a: &Density, cfg: &SaturationConfig) -> Result<Density> {
    let k_alt = cfg.k_alt.ok_or_else(|| Error::InvalidConfig {
        field: "k_alt".into(),
        msg: "two-tier saturation requires tier_ratio".into(),
    })?;
    let grid = *a.grid();
    let k_var = grid.snap(cfg.k_var);
    if k_var > grid.half_range() {
        return Err(Error::SaturationRange(format!(
            "k_var {k_var} exceeds grid range"
        )));
    }
    let hi_v = grid.bin_of(k_var);
    let lo_v = grid.bin_of(-k_var);
    let hi_a = grid.bin_of(k_alt);
    let lo_a = grid.bin_of(-k_alt);
    let mut out = Density::zeroed(grid);
    let m_in = a.interior_mass();
    {
        let m = out.interior_mut();
        for i in 0..m_in.len() {
            let j = if i >= hi_v {
                hi_v
            } else if i >= hi_a {
                hi_a
            } else if i <= lo_v {
                lo_v
            } else if i <= lo_a {
                lo_a
            } else {
                i
            };
            m[j] += m_in[i];
        }
        m[hi_v] += a.atom_pos_inf();
        m[lo_v] += a.atom_neg_inf();
    }
    Ok(out)
}

/// The `(γ, p, K, m)` split of a density supported on `[-level, level]`:
/// boundary atoms `γ D(p, level)` plus interior remainder `(1-γ) m`.
#[derive(Debug, Clone)]
pub struct Mixture {
    /// Saturated mass fraction.
    pub gamma: f64,
    /// Sign-error fraction of the saturated mass.
    pub p: f64,
    /// Atom location (grid-snapped).
    pub level: f64,
    /// Unit-mass interior density, zero at and beyond `±level`.
    pub interior: Density,
}

impl Mixture {
    pub fn q(&self) -> f64 {
        (self.level / 2.0).exp() * self.p
    }

    pub fn q_tilde(&self) -> f64 {
        (-self.level / 2.0).exp() * (1.0 - self.p)
    }

    /// `γ (1-p) e^{-K/2} + γ p e^{K/2}`, the Bhattacharyya mass of the atoms.
    pub fn atom_bhattacharyya(&self) -> f64 {
        self.gamma * (self.q() + self.q_tilde())
    }

    /// `γ D(p, K) + (1-γ) m`.
    pub fn reconstruct(&self) -> Result<Density> {
        let atoms = Density::two_point(*self.interior.grid(), self.p, self.level)?;
        Density::mix(&[(self.gamma, &atoms), (1.0 - self.gamma, &self.interior)])
    }
}

/// Exact mixture split of `a` at `level`. Mass strictly beyond the level
/// (or at `±inf`) is an error; `γ = 0` yields the conventional empty-atom
/// decomposition.
pub fn decompose(a: &Density, level: f64) -> Result<Mixture> {
    let grid = *a.grid();
    let level = grid.snap(level);
    if !(level > 0.0) || level > grid.half_range() {
        return Err(Error::SaturationRange(format!(
            "level {level} not in (0, {}]",
            grid.half_range()
        )));
    }
    let hi = grid.bin_of(level);
    let lo = grid.bin_of(-level);
    let m_in = a.interior_mass();
    let mut outside = a.atom_pos_inf() + a.atom_neg_inf();
    for i in 0..m_in.len() {
        if i < lo || i > hi {
            outside += m_in[i];
        }
    }
    if outside > 1e-12 {
        return Err(Error::DecompositionSupport(format!(
            "mass {outside:.3e} beyond ±{level}"
        )));
    }
    let gamma = m_in[lo] + m_in[hi];
    let p = if gamma > 0.0 { m_in[lo] / gamma } else { 0.0 };
    let mut interior = Density::zeroed(grid);
    {
        let m = interior.interior_mut();
        let scale = if gamma < 1.0 { 1.0 / (1.0 - gamma) } else { 0.0 };
        for i in lo + 1..hi {
            m[i] = m_in[i] * scale;
        }
        if gamma >= 1.0 {
            // empty interior; keep it a valid unit-mass density
            m[grid.center()] = 1.0;
        }
    }
    Ok(Mixture {
        gamma,
        p,
        level,
        interior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Channel, ChannelKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(1.0 / 16.0, 16.0).unwrap()
    }

    #[test]
    fn hard_saturation_reference_points() {
        let g = grid();
        let s = saturate(&Density::delta_pos_inf(g), 3.0).unwrap();
        assert!((s.interior_mass()[g.bin_of(3.0)] - 1.0).abs() < 1e-12);

        let s = saturate(&Density::delta_zero(g), 3.0).unwrap();
        assert!((s.zero_mass() - 1.0).abs() < 1e-12);

        // both BSC(0.1) atoms have |llr| = ln 9 > 1
        let c = Channel::new(ChannelKind::Bsc, 0.1).unwrap().density(g).unwrap();
        let s = saturate(&c, 1.0).unwrap();
        assert!((s.interior_mass()[g.bin_of(1.0)] - 0.9).abs() < 1e-9);
        assert!((s.interior_mass()[g.bin_of(-1.0)] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn symmetric_saturation_formulas() {
        let g = grid();
        let s = symmetric_saturate(&Density::delta_pos_inf(g), 1.0).unwrap();
        let p = (-1.0f64).exp() / (1.0 + (-1.0f64).exp());
        assert!((s.interior_mass()[g.bin_of(-1.0)] - p).abs() < 1e-12);
        assert!((s.interior_mass()[g.bin_of(-1.0)] - 0.26894).abs() < 1e-5);
        assert!(s.is_symmetric(1e-12));

        // nothing to saturate: gamma = 0
        let z = Density::delta_zero(g);
        let s = symmetric_saturate(&z, 4.0).unwrap();
        assert_eq!(s.zero_mass(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Density::random_symmetric_in(g, &mut rng, 8, 2.0);
        let s = symmetric_saturate(&a, 8.0).unwrap();
        for (x, y) in s.interior_mass().iter().zip(a.interior_mass()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_saturation_rejects_asymmetric_input() {
        let g = grid();
        let skewed = Density::two_point(g, 0.1, 1.0).unwrap();
        assert!(matches!(
            symmetric_saturate(&skewed, 4.0),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn degradation_chain_under_saturation() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = Density::random_symmetric(g, &mut rng, 10);
            for k in [1.0, 2.0, 5.0] {
                let hard = saturate(&a, k).unwrap();
                let sym = symmetric_saturate(&a, k).unwrap();
                assert!(a.is_degraded_under(&hard, 1e-9));
                assert!(hard.is_degraded_under(&sym, 1e-9));
            }
        }
    }

    #[test]
    fn wasserstein_saturation_bound() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = Density::random_symmetric(g, &mut rng, 10);
            for k in [1.0, 2.0, 4.0, 8.0] {
                let sym = symmetric_saturate(&a, k).unwrap();
                let d = a.wasserstein(&sym);
                assert!(d <= 1.0 - (k / 2.0f64).tanh() + 1e-12, "k={k}: {d}");
            }
        }
    }

    #[test]
    fn bhattacharyya_saturation_slack() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let a = Density::random_symmetric(g, &mut rng, 10);
            for k in [1.0, 3.0, 6.0] {
                let s = saturate(&a, k).unwrap();
                let bs = s.bhattacharyya();
                assert!(bs <= a.bhattacharyya() + (-k / 2.0f64).exp() + 1e-10);
                if a.tail_mass(k) > 0.0 {
                    assert!(bs >= (-k / 2.0f64).exp() - 1e-12);
                }
            }
        }
    }

    fn two_tier_cfg(g: &Grid, k_var: f64, lam: f64) -> SaturationConfig {
        // min-sum style k_check = k_var keeps the invariants satisfied for
        // the operator-level tests
        SaturationConfig::new(g, k_var, k_var, Some(0.5), Some(lam)).unwrap()
    }

    #[test]
    fn two_tier_band_collapse() {
        let g = grid();
        let cfg = two_tier_cfg(&g, 8.0, 0.75);
        let k_alt = cfg.k_alt.unwrap();

        let mid = Density::delta(g, (k_alt + cfg.k_var) / 2.0).unwrap();
        let s = two_tier_saturate(&mid, &cfg).unwrap();
        assert!((s.interior_mass()[g.bin_of(k_alt)] - 1.0).abs() < 1e-12);

        let big = Density::delta(g, g.half_range()).unwrap();
        let s = two_tier_saturate(&big, &cfg).unwrap();
        assert!((s.interior_mass()[g.bin_of(cfg.k_var)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_tier_bhattacharyya_bounds() {
        let g = grid();
        let cfg = two_tier_cfg(&g, 8.0, 0.75);
        let k_alt = cfg.k_alt.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let a = Density::random_symmetric(g, &mut rng, 10);
            let tt = two_tier_saturate(&a, &cfg).unwrap();
            let hard = saturate(&a, cfg.k_var).unwrap();
            let lhs = tt.bhattacharyya();
            assert!(lhs <= ((cfg.k_var - k_alt) / 2.0).exp() * hard.bhattacharyya() + 1e-10);
            assert!(lhs <= a.bhattacharyya() + (-k_alt / 2.0).exp() + 1e-10);
        }
    }

    #[test]
    fn decompose_reference_points() {
        let g = grid();
        let k = 8.0;
        let d = Density::two_point(g, 0.2, k).unwrap();
        let m = decompose(&d, k).unwrap();
        assert!((m.gamma - 1.0).abs() < 1e-12);
        assert!((m.p - 0.2).abs() < 1e-12);

        let z = Density::delta_zero(g);
        let m = decompose(&z, k).unwrap();
        assert_eq!(m.gamma, 0.0);
        assert!((m.interior.zero_mass() - 1.0).abs() < 1e-12);

        let d1 = Density::two_point(g, 0.1, k).unwrap();
        let half = Density::mix(&[(0.5, &d1), (0.5, &z)]).unwrap();
        let m = decompose(&half, k).unwrap();
        assert!((m.gamma - 0.5).abs() < 1e-12);
        assert!((m.p - 0.1).abs() < 1e-12);
        assert!((m.interior.zero_mass() - 1.0).abs() < 1e-12);

        // reconstruction is exact
        let back = m.reconstruct().unwrap();
        for (x, y) in back.interior_mass().iter().zip(half.interior_mass()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_rejects_outside_mass() {
        let g = grid();
        let d = Density::delta(g, 10.0).unwrap();
        assert!(matches!(
            decompose(&d, 8.0),
            Err(Error::DecompositionSupport(_))
        ));
        assert!(decompose(&Density::delta_pos_inf(g), 8.0).is_err());
    }

    #[test]
    fn config_invariants() {
        let g = grid();
        // 2 k_check <= k_var rejected
        assert!(SaturationConfig::new(&g, 8.0, 3.9, None, None).is_err());
        // k_channel above its cap rejected
        assert!(SaturationConfig::new(&g, 8.0, 7.0, Some(6.5), None).is_err());
        // tier ratio at or below 1/2 rejected
        assert!(SaturationConfig::new(&g, 8.0, 8.0, Some(0.5), Some(0.5)).is_err());
        // two-tier headroom: 2*7-8 = 6 < k_channel + k_alt = 2 + 6
        assert!(SaturationConfig::new(&g, 8.0, 7.0, Some(2.0), Some(0.75)).is_err());

        let ok = SaturationConfig::new(&g, 8.0, 7.0, None, None).unwrap();
        assert!((ok.k_channel - 6.0).abs() < 1e-12);
    }
}
