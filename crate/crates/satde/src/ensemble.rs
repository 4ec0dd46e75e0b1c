//! Degree distributions and their action on densities.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::density::Density;
use crate::error::{Error, Result};

/// Edge-perspective degree distribution pair `(λ, ρ)`.
///
/// `λ_i` is the fraction of edges attached to degree-`i` variable nodes and
/// `ρ_i` the fraction attached to degree-`i` check nodes; each family sums
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    lambda: BTreeMap<usize, f64>,
    rho: BTreeMap<usize, f64>,
}

impl DegreeDistribution {
    pub fn new(lambda: BTreeMap<usize, f64>, rho: BTreeMap<usize, f64>) -> Result<Self> {
        for (name, map, min_deg) in [("lambda", &lambda, 2usize), ("rho", &rho, 2usize)] {
            if map.is_empty() {
                return Err(Error::InvalidConfig {
                    field: name.into(),
                    msg: "no coefficients".into(),
                });
            }
            let mut sum = 0.0;
            for (&deg, &w) in map {
                if deg < min_deg {
                    return Err(Error::InvalidConfig {
                        field: name.into(),
                        msg: format!("degree {deg} below minimum {min_deg}"),
                    });
                }
                if !(w >= 0.0) {
                    return Err(Error::InvalidConfig {
                        field: name.into(),
                        msg: format!("coefficient {w} at degree {deg}"),
                    });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig {
                    field: name.into(),
                    msg: format!("coefficients sum to {sum}, expected 1"),
                });
            }
        }
        Ok(DegreeDistribution { lambda, rho })
    }

    /// `(d_l, d_r)`-regular ensemble.
    pub fn regular(d_l: usize, d_r: usize) -> Result<Self> {
        DegreeDistribution::new(
            BTreeMap::from([(d_l, 1.0)]),
            BTreeMap::from([(d_r, 1.0)]),
        )
    }

    pub fn lambda_coeffs(&self) -> &BTreeMap<usize, f64> {
        &self.lambda
    }

    pub fn rho_coeffs(&self) -> &BTreeMap<usize, f64> {
        &self.rho
    }

    /// λ evaluated as a polynomial, `Σ λ_i x^{i-1}`.
    pub fn lambda_eval(&self, x: f64) -> f64 {
        self.lambda.iter().map(|(&i, &w)| w * x.powi(i as i32 - 1)).sum()
    }

    /// ρ evaluated as a polynomial, `Σ ρ_i x^{i-1}`.
    pub fn rho_eval(&self, x: f64) -> f64 {
        self.rho.iter().map(|(&i, &w)| w * x.powi(i as i32 - 1)).sum()
    }

    /// `λ'(0) = λ_2`, the degree-two edge fraction.
    pub fn lambda2(&self) -> f64 {
        self.lambda.get(&2).copied().unwrap_or(0.0)
    }

    pub fn lambda3(&self) -> f64 {
        self.lambda.get(&3).copied().unwrap_or(0.0)
    }

    /// `ρ'(1) = Σ (i-1) ρ_i`.
    pub fn rho_prime_1(&self) -> f64 {
        self.rho.iter().map(|(&i, &w)| (i as f64 - 1.0) * w).sum()
    }

    /// Edge-average variable degree `Σ i λ_i`.
    pub fn d_l_avg(&self) -> f64 {
        self.lambda.iter().map(|(&i, &w)| i as f64 * w).sum()
    }

    /// Edge-average check degree `Σ i ρ_i`.
    pub fn d_r_avg(&self) -> f64 {
        self.rho.iter().map(|(&i, &w)| i as f64 * w).sum()
    }

    pub fn min_var_degree(&self) -> usize {
        *self.lambda.keys().next().unwrap()
    }

    pub fn max_var_degree(&self) -> usize {
        *self.lambda.keys().next_back().unwrap()
    }

    pub fn max_check_degree(&self) -> usize {
        *self.rho.keys().next_back().unwrap()
    }

    /// The check degree when ρ is a single term.
    pub fn check_regular_degree(&self) -> Option<usize> {
        if self.rho.len() == 1 {
            self.rho.keys().next().copied()
        } else {
            None
        }
    }

    /// Design rate `1 - ∫ρ/∫λ`.
    pub fn rate(&self) -> f64 {
        let il: f64 = self.lambda.iter().map(|(&i, &w)| w / i as f64).sum();
        let ir: f64 = self.rho.iter().map(|(&i, &w)| w / i as f64).sum();
        1.0 - ir / il
    }

    /// Weighted check-node convolution `Σ ρ_i x^{⊠(i-1)}`.
    pub fn rho_apply(&self, x: &Density) -> Result<Density> {
        self.weighted_powers(&self.rho, x, &|a, b| a.chk_convolve(b))
    }

    /// Same as [`rho_apply`](Self::rho_apply) under the min-sum check rule.
    pub fn rho_apply_min_sum(&self, x: &Density) -> Result<Density> {
        self.weighted_powers(&self.rho, x, &|a, b| a.chk_convolve_min_sum(b))
    }

    /// Variable-node update `c ⊛ Σ λ_i b^{⊛(i-1)}`.
    pub fn lambda_apply(&self, c: &Density, b: &Density) -> Result<Density> {
        let mixed = self.weighted_powers(&self.lambda, b, &|a, b| a.var_convolve(b))?;
        c.var_convolve(&mixed)
    }

    /// `Σ w_i x^{∘(i-1)}` for an associative combiner, reusing intermediate
    /// powers across terms.
    fn weighted_powers(
        &self,
        coeffs: &BTreeMap<usize, f64>,
        x: &Density,
        combine: &dyn Fn(&Density, &Density) -> Result<Density>,
    ) -> Result<Density> {
        let max_pow = coeffs.keys().next_back().unwrap() - 1;
        let mut parts: Vec<(f64, Density)> = Vec::with_capacity(coeffs.len());
        let mut power = x.clone(); // x^1
        for p in 1..=max_pow {
            if p > 1 {
                power = combine(&power, x)?;
            }
            if let Some(&w) = coeffs.get(&(p + 1)) {
                if w > 0.0 {
                    parts.push((w, power.clone()));
                }
            }
        }
        let refs: Vec<(f64, &Density)> = parts.iter().map(|(w, d)| (*w, d)).collect();
        Density::mix(&refs)
    }
}

impl FromStr for DegreeDistribution {
    type Err = Error;

    /// Parses `reg:3,6` or `irr: l2=0.3,l3=0.7 ; r6=1.0`.
    fn from_str(s: &str) -> Result<Self> {
        let err = |msg: &str| Error::Parse {
            input: s.to_string(),
            msg: msg.to_string(),
        };
        let body = s.trim();
        if let Some(rest) = body.strip_prefix("reg:") {
            let mut it = rest.split(',');
            let d_l = it
                .next()
                .ok_or_else(|| err("missing variable degree"))?
                .trim()
                .parse::<usize>()
                .map_err(|_| err("bad variable degree"))?;
            let d_r = it
                .next()
                .ok_or_else(|| err("missing check degree"))?
                .trim()
                .parse::<usize>()
                .map_err(|_| err("bad check degree"))?;
            if it.next().is_some() {
                return Err(err("trailing fields"));
            }
            return DegreeDistribution::regular(d_l, d_r);
        }
        if let Some(rest) = body.strip_prefix("irr:") {
            let (l_part, r_part) = rest
                .split_once(';')
                .ok_or_else(|| err("expected `;` between λ and ρ terms"))?;
            let mut lambda = BTreeMap::new();
            let mut rho = BTreeMap::new();
            for (part, map, tag) in [(l_part, &mut lambda, 'l'), (r_part, &mut rho, 'r')] {
                for term in part.split(',') {
                    let term = term.trim();
                    if term.is_empty() {
                        continue;
                    }
                    let (key, val) = term
                        .split_once('=')
                        .ok_or_else(|| err("term must look like l3=0.5"))?;
                    let key = key.trim();
                    if !key.starts_with(tag) {
                        return Err(err(&format!("expected `{tag}<degree>=<frac>` in `{term}`")));
                    }
                    let deg = key[1..]
                        .parse::<usize>()
                        .map_err(|_| err(&format!("bad degree in `{term}`")))?;
                    let w = val
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| err(&format!("bad fraction in `{term}`")))?;
                    if map.insert(deg, w).is_some() {
                        return Err(err(&format!("duplicate degree {deg}")));
                    }
                }
            }
            return DegreeDistribution::new(lambda, rho);
        }
        Err(err("expected `reg:<dl>,<dr>` or `irr: ... ; ...`"))
    }
}
