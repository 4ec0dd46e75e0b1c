//! Quantized L-densities and the algebra of density evolution.
//!
//! A [`Density`] is a probability distribution over log-likelihood ratios,
//! discretized on a uniform [`Grid`] with extra point masses at plus and
//! minus infinity. All decoder analysis in this crate flows through this
//! type: variable-node convolution, check-node convolution (sum-product and
//! min-sum), the Bhattacharyya/entropy/error-probability functionals, the
//! |D|-domain representation, the Wasserstein metric and the degradation
//! partial order.
//!
//! Check-node outputs rarely land on grid points, so their mass is split
//! between the two neighboring bins in a way that preserves both total mass
//! and the mean of `tanh(x/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Mass below which a bin is treated as empty when scanning for support.
const MASS_EPS: f64 = 0.0;

/// `1 - tanh(x/2)` evaluated stably for any finite `x`; monotone decreasing,
/// u(0) = 1, u(+inf) = 0, u(-inf) = 2.
#[inline]
fn one_minus_tanh_half(x: f64) -> f64 {
    2.0 / (1.0 + x.exp())
}

/// Magnitude of the sum-product check-node combination of two positive
/// magnitudes, `2 atanh(tanh(a/2) tanh(b/2))`, in log domain so that large
/// inputs do not saturate.
#[inline]
pub fn check_pair_magnitude(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY {
        return b;
    }
    if b == f64::INFINITY {
        return a;
    }
    let s = a + b;
    let d = (a - b).abs();
    (a.min(b) + (-s).exp().ln_1p() - (-d).exp().ln_1p()).max(0.0)
}

/// Exact check-node combination of two atom lists (no re-quantization).
/// Atoms are `(llr, mass)` pairs; LLR may be `±inf`. Atoms with equal output
/// LLR are merged.
pub fn check_combine_atoms(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: std::collections::BTreeMap<u64, (f64, f64)> = std::collections::BTreeMap::new();
    for &(va, ma) in a {
        for &(vb, mb) in b {
            let mass = ma * mb;
            if mass == 0.0 {
                continue;
            }
            let mut z = if va == 0.0 || vb == 0.0 {
                0.0
            } else {
                let mag = check_pair_magnitude(va.abs(), vb.abs());
                mag * (va.signum() * vb.signum())
            };
            if z == 0.0 {
                z = 0.0; // normalize -0.0
            }
            out.entry(z.to_bits()).or_insert((z, 0.0)).1 += mass;
        }
    }
    out.into_values().collect()
}

/// Bhattacharyya parameter of an atom list.
pub fn atoms_bhattacharyya(atoms: &[(f64, f64)]) -> f64 {
    atoms
        .iter()
        .map(|&(v, m)| {
            if m == 0.0 {
                0.0
            } else {
                m * (-v / 2.0).exp()
            }
        })
        .sum()
}

/// The three scalar functionals of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    /// `E[e^{-y/2}]`.
    pub bhattacharyya: f64,
    /// `E[log2(1 + e^{-y})]` in bits.
    pub entropy: f64,
    /// `P{y < 0} + P{y = 0}/2`.
    pub error_prob: f64,
}

/// Cumulative |D|-distribution: the law of `|tanh(y/2)|` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct AbsDCdf {
    /// Strictly increasing support points in `[0, 1]`.
    pub support: Vec<f64>,
    /// Cdf value at and after each support point.
    pub cdf: Vec<f64>,
}

impl AbsDCdf {
    /// Cdf evaluated at `x` (right-continuous step function).
    pub fn eval(&self, x: f64) -> f64 {
        match self.support.partition_point(|&s| s <= x) {
            0 => 0.0,
            k => self.cdf[k - 1],
        }
    }
}

/// A discretized L-density: interior mass on a uniform grid plus atoms at
/// `±inf`. Total mass is 1 up to floating-point drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Grid,
    mass: Vec<f64>,
    pos_inf: f64,
    neg_inf: f64,
}

/// Serialized form of a density; field names are the wire format.
#[derive(Serialize, Deserialize)]
struct DensityDump {
    grid: GridDump,
    interior_mass: Vec<f64>,
    atom_pos_inf: f64,
    atom_neg_inf: f64,
}

#[derive(Serialize, Deserialize)]
struct GridDump {
    spacing: f64,
    half_range: f64,
    bin_count: usize,
}

impl Density {
    pub fn zeroed(grid: Grid) -> Self {
        Density {
            grid,
            mass: vec![0.0; grid.bin_count()],
            pos_inf: 0.0,
            neg_inf: 0.0,
        }
    }

    /// Point mass at LLR 0 (the perfectly noisy message).
    pub fn delta_zero(grid: Grid) -> Self {
        let mut d = Density::zeroed(grid);
        d.mass[grid.center()] = 1.0;
        d
    }

    /// Point mass at `+inf` (the perfect decoding message).
    pub fn delta_pos_inf(grid: Grid) -> Self {
        let mut d = Density::zeroed(grid);
        d.pos_inf = 1.0;
        d
    }

    /// Point mass at an arbitrary LLR; off-grid values are split between the
    /// two neighboring bins.
    pub fn delta(grid: Grid, llr: f64) -> Result<Self> {
        Density::from_atoms(grid, &[(llr, 1.0)])
    }

    /// `D(p, k)`: mass `p` at `-k` and `1 - p` at `+k`.
    pub fn two_point(grid: Grid, p: f64, k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDensity(format!("sign-error mass {p} outside [0,1]")));
        }
        Density::from_atoms(grid, &[(-k, p), (k, 1.0 - p)])
    }

    /// Builds a density from `(llr, mass)` atoms. `±inf` atoms are kept
    /// exact; finite atoms beyond the grid range are an error.
    pub fn from_atoms(grid: Grid, atoms: &[(f64, f64)]) -> Result<Self> {
        let mut d = Density::zeroed(grid);
        for &(v, m) in atoms {
            if m < 0.0 {
                return Err(Error::InvalidDensity(format!("negative mass {m} at {v}")));
            }
            if m == 0.0 {
                continue;
            }
            if v == f64::INFINITY {
                d.pos_inf += m;
            } else if v == f64::NEG_INFINITY {
                d.neg_inf += m;
            } else if v.abs() > grid.half_range() + 1e-12 {
                return Err(Error::GridTooNarrow(format!(
                    "atom at {v} outside ±{}",
                    grid.half_range()
                )));
            } else {
                d.deposit(v, m);
            }
        }
        Ok(d)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn interior_mass(&self) -> &[f64] {
        &self.mass
    }

    pub(crate) fn interior_mut(&mut self) -> &mut [f64] {
        &mut self.mass
    }

    pub fn atom_pos_inf(&self) -> f64 {
        self.pos_inf
    }

    pub fn atom_neg_inf(&self) -> f64 {
        self.neg_inf
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.pos_inf + self.neg_inf
    }

    /// Mass in the bin centered at LLR 0.
    pub fn zero_mass(&self) -> f64 {
        self.mass[self.grid.center()]
    }

    /// Interior mass with `|llr| >= k` plus the infinity atoms.
    pub fn tail_mass(&self, k: f64) -> f64 {
        let (lo, hi) = self.tail_bins(k);
        let mut t = self.pos_inf + self.neg_inf;
        for i in 0..=lo {
            t += self.mass[i];
        }
        for i in hi..self.mass.len() {
            t += self.mass[i];
        }
        t
    }

    /// Largest bin index with value `<= -k` and smallest with value `>= k`,
    /// for a grid-snapped level `k > 0`.
    fn tail_bins(&self, k: f64) -> (usize, usize) {
        let ks = self.grid.snap(k.abs());
        let hi = self.grid.bin_of(ks);
        let lo = self.grid.bin_of(-ks);
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mass.len() != self.grid.bin_count() {
            return Err(Error::InvalidDensity("mass vector length mismatch".into()));
        }
        for (i, &m) in self.mass.iter().enumerate() {
            if !(m >= 0.0) {
                return Err(Error::InvalidDensity(format!(
                    "bin {i} ({}) has mass {m}",
                    self.grid.value(i)
                )));
            }
        }
        if !(self.pos_inf >= 0.0) || !(self.neg_inf >= 0.0) {
            return Err(Error::InvalidDensity("negative infinity atom".into()));
        }
        let t = self.total_mass();
        if (t - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!("total mass {t}")));
        }
        Ok(())
    }

    /// Deposits `mass` at LLR `v`, splitting between the two neighboring bins
    /// so that total mass and the mean of `tanh(x/2)` are preserved.
    pub(crate) fn deposit(&mut self, v: f64, mass: f64) {
        if mass == 0.0 {
            return;
        }
        let g = &self.grid;
        let pos = v / g.spacing() + g.center() as f64;
        let last = self.mass.len() - 1;
        if pos <= 0.0 {
            self.mass[0] += mass;
            return;
        }
        if pos >= last as f64 {
            self.mass[last] += mass;
            return;
        }
        let lo = pos.floor() as usize;
        if pos == lo as f64 {
            self.mass[lo] += mass;
            return;
        }
        let hi = lo + 1;
        let u_lo = one_minus_tanh_half(g.value(lo));
        let u_hi = one_minus_tanh_half(g.value(hi));
        let u_v = one_minus_tanh_half(v);
        let denom = u_lo - u_hi;
        let alpha = if denom > 1e-300 {
            ((u_v - u_hi) / denom).clamp(0.0, 1.0)
        } else {
            hi as f64 - pos
        };
        self.mass[lo] += alpha * mass;
        self.mass[hi] += (1.0 - alpha) * mass;
    }

    fn check_grids(&self, other: &Density) -> Result<()> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Variable-node convolution: the law of `X + Y`. Sums beyond the grid
    /// range accumulate on the extreme bins; `±inf` absorbs finite addends.
    pub fn var_convolve(&self, other: &Density) -> Result<Density> {
        self.check_grids(other)?;
        let n = self.mass.len();
        let c = self.grid.center();
        let mut out = Density::zeroed(self.grid);

        let a_nz: Vec<(usize, f64)> = nonzero(&self.mass);
        let b_nz: Vec<(usize, f64)> = nonzero(&other.mass);
        for &(i, ma) in &a_nz {
            let base = i as isize - c as isize;
            for &(j, mb) in &b_nz {
                let k = (base + j as isize).clamp(0, n as isize - 1) as usize;
                out.mass[k] += ma * mb;
            }
        }

        let a_fin: f64 = self.mass.iter().sum();
        let b_fin: f64 = other.mass.iter().sum();
        out.pos_inf = self.pos_inf * (b_fin + other.pos_inf) + other.pos_inf * a_fin;
        out.neg_inf = self.neg_inf * (b_fin + other.neg_inf) + other.neg_inf * a_fin;
        // opposite infinities cancel to LLR 0
        out.mass[c] += self.pos_inf * other.neg_inf + self.neg_inf * other.pos_inf;
        Ok(out)
    }

    /// Sum-product check-node convolution: the law of
    /// `2 atanh(tanh(X/2) tanh(Y/2))`, by exact pairwise atom combination
    /// followed by mass- and tanh-mean-preserving re-quantization.
    pub fn chk_convolve(&self, other: &Density) -> Result<Density> {
        self.chk_combine(other, false)
    }

    /// Min-sum check-node combination: sign product, minimum magnitude.
    pub fn chk_convolve_min_sum(&self, other: &Density) -> Result<Density> {
        self.chk_combine(other, true)
    }

    fn chk_combine(&self, other: &Density, min_sum: bool) -> Result<Density> {
        self.check_grids(other)?;
        let a = MagnitudeView::of(self);
        let b = MagnitudeView::of(other);
        let mut out = Density::zeroed(self.grid);
        let c = self.grid.center();

        // anything meeting a zero message is a zero message
        let zero_pairs = a.zero * b.total() + b.zero * (a.total() - a.zero);
        out.mass[c] += zero_pairs;

        // infinity is the identity on the other operand's magnitude
        out.pos_inf += a.inf_pos * b.inf_pos + a.inf_neg * b.inf_neg;
        out.neg_inf += a.inf_pos * b.inf_neg + a.inf_neg * b.inf_pos;
        for (view, inf_pos, inf_neg) in [(&b, a.inf_pos, a.inf_neg), (&a, b.inf_pos, b.inf_neg)] {
            if inf_pos == 0.0 && inf_neg == 0.0 {
                continue;
            }
            for &(off, p, n) in &view.mags {
                let i_pos = c + off;
                let i_neg = c - off;
                out.mass[i_pos] += inf_pos * p + inf_neg * n;
                out.mass[i_neg] += inf_pos * n + inf_neg * p;
            }
        }

        let spacing = self.grid.spacing();
        for &(ia, pa, na) in &a.mags {
            let va = ia as f64 * spacing;
            for &(ib, pb, nb) in &b.mags {
                let vb = ib as f64 * spacing;
                let same = pa * pb + na * nb;
                let cross = pa * nb + na * pb;
                if min_sum {
                    let off = ia.min(ib);
                    out.mass[c + off] += same;
                    out.mass[c - off] += cross;
                } else {
                    let z = check_pair_magnitude(va, vb);
                    out.deposit(z, same);
                    out.deposit(-z, cross);
                }
            }
        }
        Ok(out)
    }

    /// Bhattacharyya, entropy and error-probability functionals.
    pub fn functionals(&self) -> Functionals {
        let c = self.grid.center();
        let mut b = 0.0;
        let mut h = 0.0;
        let mut pe = 0.0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let v = self.grid.value(i);
            b += m * (-v / 2.0).exp();
            h += m * (-v).exp().ln_1p();
            if i < c {
                pe += m;
            } else if i == c {
                pe += 0.5 * m;
            }
        }
        h /= std::f64::consts::LN_2;
        pe += self.neg_inf;
        if self.neg_inf > 0.0 {
            b = f64::INFINITY;
            h = f64::INFINITY;
        }
        Functionals {
            bhattacharyya: b,
            entropy: h,
            error_prob: pe,
        }
    }

    /// Shorthand for the Bhattacharyya parameter.
    pub fn bhattacharyya(&self) -> f64 {
        self.functionals().bhattacharyya
    }

    /// Cumulative distribution of `|tanh(y/2)|`.
    pub fn to_abs_d(&self) -> AbsDCdf {
        let c = self.grid.center();
        // |tanh| identifies ±v, so walk outward from the center.
        let mut support = Vec::with_capacity(c + 2);
        let mut masses = Vec::with_capacity(c + 2);
        let mut zero = self.mass[c];
        for off in 1..=c {
            let m = self.mass[c + off] + self.mass[c - off];
            if m > MASS_EPS {
                let t = 1.0 - one_minus_tanh_half(self.grid.value(c + off));
                support.push(t);
                masses.push(m);
            }
        }
        let inf = self.pos_inf + self.neg_inf;
        let mut out_support = Vec::with_capacity(support.len() + 2);
        let mut out_cdf = Vec::with_capacity(support.len() + 2);
        let mut acc = 0.0;
        if zero > 0.0 || (inf == 0.0 && support.is_empty()) {
            if zero == 0.0 {
                zero = 0.0;
            }
            acc += zero;
            out_support.push(0.0);
            out_cdf.push(acc);
        }
        for (t, m) in support.into_iter().zip(masses) {
            acc += m;
            if *out_support.last().unwrap_or(&-1.0) == t {
                *out_cdf.last_mut().unwrap() = acc;
            } else {
                out_support.push(t);
                out_cdf.push(acc);
            }
        }
        if inf > 0.0 || *out_support.last().unwrap_or(&-1.0) < 1.0 {
            acc += inf;
            if *out_support.last().unwrap_or(&-1.0) == 1.0 {
                *out_cdf.last_mut().unwrap() = acc;
            } else {
                out_support.push(1.0);
                out_cdf.push(acc);
            }
        }
        AbsDCdf {
            support: out_support,
            cdf: out_cdf,
        }
    }

    /// Wasserstein distance: the L1 norm of the difference between the
    /// |D|-cdfs.
    pub fn wasserstein(&self, other: &Density) -> f64 {
        let fa = self.to_abs_d();
        let fb = other.to_abs_d();
        let mut points: Vec<f64> = fa.support.iter().chain(fb.support.iter()).copied().collect();
        points.push(1.0);
        points.sort_by(|x, y| x.partial_cmp(y).unwrap());
        points.dedup();
        let mut d = 0.0;
        let mut prev = 0.0;
        for &x in &points {
            if x > prev {
                // cdfs are constant on (prev, x); evaluate just after prev
                d += (fa.eval(prev) - fb.eval(prev)).abs() * (x - prev);
            }
            prev = x;
        }
        d
    }

    /// Degradation test: `self ≺ other` (other is degraded w.r.t. self), via
    /// the tail-integral criterion on the |D|-cdfs with slack `tol`.
    pub fn is_degraded_under(&self, other: &Density, tol: f64) -> bool {
        let fa = self.to_abs_d();
        let fb = other.to_abs_d();
        let mut points: Vec<f64> = fa.support.iter().chain(fb.support.iter()).copied().collect();
        points.push(0.0);
        points.push(1.0);
        points.sort_by(|x, y| x.partial_cmp(y).unwrap());
        points.dedup();
        // suffix integrals of both cdfs over [z, 1], walked right to left
        let mut ga = 0.0;
        let mut gb = 0.0;
        for w in (0..points.len() - 1).rev() {
            let (z0, z1) = (points[w], points[w + 1]);
            ga += fa.eval(z0) * (z1 - z0);
            gb += fb.eval(z0) * (z1 - z0);
            if ga > gb + tol {
                return false;
            }
        }
        true
    }

    /// Mass-weighted asymmetry: `Σ|mass(-v) - mass(v) e^{-v}|` over the
    /// negative-side mass scale. A symmetric density has
    /// `mass(-v) = mass(v) e^{-v}` and no mass at `-inf`.
    pub fn symmetry_defect(&self) -> f64 {
        let c = self.grid.center();
        let mut num = 0.0;
        let mut den = 0.0;
        for off in 1..=c {
            let v = self.grid.value(c + off);
            let expect = self.mass[c + off] * (-v).exp();
            let got = self.mass[c - off];
            num += (expect - got).abs();
            den += expect + got;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// True when the relative asymmetry and the `-inf` atom are both within
    /// `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol && self.neg_inf <= tol
    }

    /// Interior atoms as exact `(llr, mass)` pairs plus the infinities.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = nonzero(&self.mass)
            .into_iter()
            .map(|(i, m)| (self.grid.value(i), m))
            .collect();
        if self.pos_inf > 0.0 {
            v.push((f64::INFINITY, self.pos_inf));
        }
        if self.neg_inf > 0.0 {
            v.push((f64::NEG_INFINITY, self.neg_inf));
        }
        v
    }

    /// Rescales total mass to exactly 1. Density evolution composes enough
    /// convolutions per iteration that float rounding in the total would
    /// otherwise compound geometrically across iterations.
    pub fn normalize(&mut self) {
        let t = self.total_mass();
        if t > 0.0 && t.is_finite() && t != 1.0 {
            let inv = 1.0 / t;
            for m in self.mass.iter_mut() {
                *m *= inv;
            }
            self.pos_inf *= inv;
            self.neg_inf *= inv;
        }
    }

    /// Mixes weighted densities on a shared grid.
    pub fn mix(parts: &[(f64, &Density)]) -> Result<Density> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?;
        let mut out = Density::zeroed(first.grid);
        for &(w, d) in parts {
            first.check_grids(d)?;
            if w == 0.0 {
                continue;
            }
            for (o, m) in out.mass.iter_mut().zip(&d.mass) {
                *o += w * m;
            }
            out.pos_inf += w * d.pos_inf;
            out.neg_inf += w * d.neg_inf;
        }
        Ok(out)
    }

    /// Serializes to the structured text record used by the CLI; the format
    /// round-trips bit-exactly.
    pub fn dump_json(&self) -> String {
        let d = DensityDump {
            grid: GridDump {
                spacing: self.grid.spacing(),
                half_range: self.grid.half_range(),
                bin_count: self.grid.bin_count(),
            },
            interior_mass: self.mass.clone(),
            atom_pos_inf: self.pos_inf,
            atom_neg_inf: self.neg_inf,
        };
        serde_json::to_string(&d).expect("density serialization")
    }

    pub fn from_json(s: &str) -> Result<Density> {
        let d: DensityDump = serde_json::from_str(s)?;
        let grid = Grid::new(d.grid.spacing, d.grid.half_range)?;
        if grid.bin_count() != d.grid.bin_count || d.interior_mass.len() != d.grid.bin_count {
            return Err(Error::InvalidDensity(format!(
                "bin count mismatch: grid {} vs record {}",
                grid.bin_count(),
                d.grid.bin_count
            )));
        }
        Ok(Density {
            grid,
            mass: d.interior_mass,
            pos_inf: d.atom_pos_inf,
            neg_inf: d.atom_neg_inf,
        })
    }

    /// Draws a random symmetric density: random nonnegative masses on the
    /// positive half (plus optional atoms at 0 and `+inf`), reflected by
    /// `mass(-v) = mass(v) e^{-v}` and normalized.
    pub fn random_symmetric(grid: Grid, rng: &mut impl rand::Rng, atom_count: usize) -> Density {
        Self::random_symmetric_sampler(grid, rng, atom_count, grid.half_range(), true)
    }

    /// Like [`random_symmetric`](Self::random_symmetric) but with interior
    /// support confined to `[-max_llr, max_llr]` and no infinity atom.
    pub fn random_symmetric_in(
        grid: Grid,
        rng: &mut impl rand::Rng,
        atom_count: usize,
        max_llr: f64,
    ) -> Density {
        Self::random_symmetric_sampler(grid, rng, atom_count, max_llr, false)
    }

    fn random_symmetric_sampler(
        grid: Grid,
        rng: &mut impl rand::Rng,
        atom_count: usize,
        max_llr: f64,
        allow_inf: bool,
    ) -> Density {
        let mut d = Density::zeroed(grid);
        let c = grid.center();
        let max_off = grid.bin_of(max_llr.min(grid.half_range())) - c;
        for _ in 0..atom_count.max(1) {
            let off = rng.gen_range(1..=max_off.max(1));
            let w: f64 = rng.gen_range(0.01..1.0);
            let v = grid.value(c + off);
            d.mass[c + off] += w;
            d.mass[c - off] += w * (-v).exp();
        }
        if rng.gen_bool(0.5) {
            d.mass[c] += rng.gen_range(0.0..0.5);
        }
        if allow_inf && rng.gen_bool(0.3) {
            d.pos_inf += rng.gen_range(0.0..0.5);
        }
        let t = d.total_mass();
        for m in d.mass.iter_mut() {
            *m /= t;
        }
        d.pos_inf /= t;
        d
    }
}

/// Interior mass grouped by magnitude (bin offset from center), with the
/// positive- and negative-sign masses side by side; check-node combination
/// works on magnitude pairs so this halves the pair loop and shares the
/// output magnitude across all four sign combinations.
struct MagnitudeView {
    zero: f64,
    /// `(offset, mass at +offset, mass at -offset)` for offsets with mass.
    mags: Vec<(usize, f64, f64)>,
    inf_pos: f64,
    inf_neg: f64,
}

impl MagnitudeView {
    fn of(d: &Density) -> Self {
        let c = d.grid.center();
        let mut mags = Vec::new();
        for off in 1..=c {
            let p = d.mass[c + off];
            let n = d.mass[c - off];
            if p > MASS_EPS || n > MASS_EPS {
                mags.push((off, p, n));
            }
        }
        MagnitudeView {
            zero: d.mass[c],
            mags,
            inf_pos: d.pos_inf,
            inf_neg: d.neg_inf,
        }
    }

    fn total(&self) -> f64 {
        self.zero
            + self.inf_pos
            + self.inf_neg
            + self.mags.iter().map(|&(_, p, n)| p + n).sum::<f64>()
    }
}

fn nonzero(mass: &[f64]) -> Vec<(usize, f64)> {
    mass.iter()
        .enumerate()
        .filter(|(_, &m)| m > MASS_EPS)
        .map(|(i, &m)| (i, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(1.0 / 16.0, 12.0).unwrap()
    }

    fn bsc_density(g: Grid, eps: f64) -> Density {
        let l = ((1.0 - eps) / eps).ln();
        Density::from_atoms(g, &[(l, 1.0 - eps), (-l, eps)]).unwrap()
    }

    #[test]
    fn delta_algebra_var() {
        let g = grid();
        let d2 = Density::delta(g, 2.0).unwrap();
        let d3 = Density::delta(g, 3.0).unwrap();
        let d5 = d2.var_convolve(&d3).unwrap();
        assert!((d5.mass[g.bin_of(5.0)] - 1.0).abs() < 1e-12);

        let a = bsc_density(g, 0.1);
        let same = Density::delta_zero(g).var_convolve(&a).unwrap();
        for (x, y) in same.mass.iter().zip(a.mass.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn bsc_var_convolution_matches_enumeration() {
        // 2x2 outcome table on a lattice-exact two-atom density
        let g = grid();
        let a = Density::from_atoms(g, &[(2.0, 0.9), (-2.0, 0.1)]).unwrap();
        let out = a.var_convolve(&a).unwrap();
        assert!((out.mass[g.bin_of(4.0)] - 0.81).abs() < 1e-15);
        assert!((out.mass[g.bin_of(0.0)] - 0.18).abs() < 1e-15);
        assert!((out.mass[g.bin_of(-4.0)] - 0.01).abs() < 1e-15);

        // the off-grid BSC(0.1) atoms split over two bins; the outcome
        // masses land in the corresponding neighborhoods
        let l = (9.0f64).ln();
        let b = bsc_density(g, 0.1);
        let out = b.var_convolve(&b).unwrap();
        let near = |target: f64| -> f64 {
            let k = g.bin_of(target);
            out.mass[k - 2..=k + 2].iter().sum()
        };
        assert!((near(2.0 * l) - 0.81).abs() < 1e-12);
        assert!((near(0.0) - 0.18).abs() < 1e-12);
        assert!((near(-2.0 * l) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn var_convolve_infinity_absorbs() {
        let g = grid();
        let inf = Density::delta_pos_inf(g);
        let a = bsc_density(g, 0.2);
        let out = inf.var_convolve(&a).unwrap();
        assert!((out.pos_inf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chk_identity_and_absorbing() {
        let g = grid();
        let a = bsc_density(g, 0.1);
        let id = Density::delta_pos_inf(g).chk_convolve(&a).unwrap();
        for (x, y) in id.mass.iter().zip(a.mass.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
        let z = Density::delta_zero(g).chk_convolve(&a).unwrap();
        assert!((z.zero_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chk_two_point_matches_closed_form() {
        let g = grid();
        let (p1, p2, k) = (0.2, 0.05, 4.0);
        let a = Density::two_point(g, p1, k).unwrap();
        let b = Density::two_point(g, p2, k).unwrap();

        // closed form before re-quantization, via exact atom combination
        let atoms = check_combine_atoms(&a.atoms(), &b.atoms());
        let p_out = p1 + p2 - 2.0 * p1 * p2;
        let k_out = 2.0 * ((k / 2.0f64).tanh().powi(2)).atanh();
        let mut neg = 0.0;
        let mut pos = 0.0;
        for (v, m) in atoms {
            if v < 0.0 {
                assert!((v + k_out).abs() < 1e-12);
                neg += m;
            } else {
                assert!((v - k_out).abs() < 1e-12);
                pos += m;
            }
        }
        assert!((neg - p_out).abs() < 1e-12);
        assert!((pos - (1.0 - p_out)).abs() < 1e-12);

        // re-quantized version preserves mass and tanh-mean
        let q = a.chk_convolve(&b).unwrap();
        assert!((q.total_mass() - 1.0).abs() < 1e-12);
        let tanh_mean: f64 = q
            .atoms()
            .iter()
            .map(|&(v, m)| m * (1.0 - one_minus_tanh_half(v)))
            .sum();
        let expect = (1.0 - 2.0 * p_out) * (1.0 - one_minus_tanh_half(k_out));
        assert!((tanh_mean - expect).abs() < 1e-12);
    }

    #[test]
    fn functionals_at_reference_points() {
        let g = grid();
        let f0 = Density::delta_zero(g).functionals();
        assert!((f0.bhattacharyya - 1.0).abs() < 1e-12);
        assert!((f0.entropy - 1.0).abs() < 1e-12);
        assert!((f0.error_prob - 0.5).abs() < 1e-12);

        let finf = Density::delta_pos_inf(g).functionals();
        assert_eq!(finf.bhattacharyya, 0.0);
        assert_eq!(finf.entropy, 0.0);
        assert_eq!(finf.error_prob, 0.0);

        // quantized BSC(0.1): closed forms hold to grid accuracy
        let fb = bsc_density(g, 0.1).functionals();
        assert!((fb.bhattacharyya - 0.6).abs() < 1e-4);
        assert!((fb.error_prob - 0.1).abs() < 1e-12);
        let h2 = -(0.1f64.log2() * 0.1 + 0.9f64.log2() * 0.9);
        assert!((fb.entropy - h2).abs() < 1e-4);

        // lattice-exact two-atom density: exact closed forms
        let d = Density::from_atoms(g, &[(2.0, 0.9), (-2.0, 0.1)]).unwrap();
        let f = d.functionals();
        let expect = 0.9 * (-1.0f64).exp() + 0.1 * (1.0f64).exp();
        assert!((f.bhattacharyya - expect).abs() < 1e-15);
    }

    #[test]
    fn abs_d_reference_points() {
        let g = grid();
        let d0 = Density::delta_zero(g).to_abs_d();
        assert_eq!(d0.support[0], 0.0);
        assert!((d0.cdf[0] - 1.0).abs() < 1e-12);

        let dinf = Density::delta_pos_inf(g).to_abs_d();
        assert_eq!(*dinf.support.last().unwrap(), 1.0);
        assert!((dinf.eval(0.5) - 0.0).abs() < 1e-12);

        let dp = Density::two_point(g, 0.2, 3.0).unwrap().to_abs_d();
        let t = 1.0 - one_minus_tanh_half(3.0);
        assert!((dp.eval(t) - 1.0).abs() < 1e-12);
        assert!(dp.eval(t - 1e-6) < 1e-12);
    }

    #[test]
    fn wasserstein_reference_points() {
        let g = grid();
        let a = bsc_density(g, 0.1);
        assert_eq!(a.wasserstein(&a), 0.0);
        let d = Density::delta_zero(g).wasserstein(&Density::delta_pos_inf(g));
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degradation_on_bsc_pair() {
        let g = grid();
        let a = bsc_density(g, 0.1);
        let b = bsc_density(g, 0.2);
        assert!(a.is_degraded_under(&a, 0.0));
        assert!(a.is_degraded_under(&b, 1e-12));
        assert!(!b.is_degraded_under(&a, 1e-12));
        assert!(Density::delta_pos_inf(g).is_degraded_under(&Density::delta_zero(g), 0.0));
    }

    #[test]
    fn symmetry_checks() {
        let g = grid();
        assert!(Density::delta_zero(g).is_symmetric(1e-12));
        // the two-bin split of the off-grid atoms leaves a defect of order
        // the spacing
        let bsc = bsc_density(g, 0.1);
        assert!(bsc.is_symmetric(0.07), "defect {}", bsc.symmetry_defect());

        // hard saturation below the channel LLR destroys symmetry
        let sat = Density::two_point(g, 0.1, 1.0).unwrap();
        assert!(!sat.is_symmetric(0.3), "defect {}", sat.symmetry_defect());
    }

    #[test]
    fn random_symmetric_is_symmetric() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = Density::random_symmetric(g, &mut rng, 12);
            assert!(d.validate().is_ok());
            assert!(d.is_symmetric(1e-9), "defect {}", d.symmetry_defect());
        }
    }

    #[test]
    fn dump_roundtrip_is_bit_exact() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Density::random_symmetric(g, &mut rng, 30);
        let s = d.dump_json();
        let back = Density::from_json(&s).unwrap();
        assert_eq!(d.mass.len(), back.mass.len());
        for (x, y) in d.mass.iter().zip(back.mass.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(d.pos_inf.to_bits(), back.pos_inf.to_bits());
        assert_eq!(d.neg_inf.to_bits(), back.neg_inf.to_bits());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = Density::delta_zero(Grid::new(1.0 / 16.0, 12.0).unwrap());
        let b = Density::delta_zero(Grid::new(1.0 / 8.0, 12.0).unwrap());
        assert!(matches!(a.var_convolve(&b), Err(Error::GridMismatch(_))));
        assert!(matches!(a.chk_convolve(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn stable_pair_magnitude_matches_naive() {
        for (a, b) in [(0.1, 0.2), (1.0, 1.0), (5.0, 3.0), (10.0, 10.0), (20.0, 6.0)] {
            let naive = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((check_pair_magnitude(a, b) - naive).abs() < 1e-9);
        }
        assert_eq!(check_pair_magnitude(f64::INFINITY, 3.5), 3.5);
    }
}
