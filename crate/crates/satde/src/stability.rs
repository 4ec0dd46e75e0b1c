//! Stability machinery for the saturated decoder: necessary-support
//! recursion, near-stability windows, the mixture bound recursions that
//! classify convergence speed, the three-message erasure decoder, the
//! check-node Bhattacharyya inequalities and the channel-truncation
//! capacity bound.

use serde::{Deserialize, Serialize};

use crate::density::{atoms_bhattacharyya, check_combine_atoms, Density};
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::saturation::{symmetric_saturate, SaturationConfig};

/// `z_{ℓ+1} = (d_l - 1) z_ℓ - L`: the upper edge of the support an invariant
/// zero-error set could have under repeated variable updates against a
/// channel with mass at `-L`.
#[derive(Debug, Clone)]
pub struct SupportRecursion {
    pub zs: Vec<f64>,
    /// First index with `z < 0`, if the support collapses.
    pub first_negative: Option<usize>,
}

pub fn support_recursion(d_l: usize, l_channel: f64, z0: f64, iters: usize) -> SupportRecursion {
    let mut zs = Vec::with_capacity(iters + 1);
    zs.push(z0);
    let mut z = z0;
    let mut first_negative = if z0 < 0.0 { Some(0) } else { None };
    for i in 1..=iters {
        z = (d_l as f64 - 1.0) * z - l_channel;
        zs.push(z);
        if z < 0.0 && first_negative.is_none() {
            first_negative = Some(i);
            break;
        }
    }
    SupportRecursion { zs, first_negative }
}

/// `λ'(0) ρ'(1) (B(c) + 2 e^{-k_channel/2})`; strictly below one is the
/// stability condition, with the extra term accounting for channel
/// truncation when `k_channel` is given.
pub fn stability_margin(dd: &DegreeDistribution, c: &Density, k_channel: Option<f64>) -> f64 {
    let slack = k_channel.map(|k| 2.0 * (-k / 2.0).exp()).unwrap_or(0.0);
    dd.lambda2() * dd.rho_prime_1() * (c.bhattacharyya() + slack)
}

/// The contraction window near the perfect decoding fixed point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityWindow {
    /// Entry threshold on the Bhattacharyya parameter.
    pub x_star: f64,
    /// Contraction factor `g(x*)` of the degree-2 analysis.
    pub g_at_xstar: f64,
    /// `f(x*)` of the minimum-degree-3 analysis.
    pub f_at_xstar: f64,
    /// Smallest `k_var` satisfying the window entry condition.
    pub k_min: f64,
    /// Residual bound `C(d_min) e^{-k_var/2}` the recursion settles under.
    pub residual_bound: f64,
    /// The constant `C(d_min)`; 3 whenever the minimum degree exceeds 2.
    pub c_dmin: f64,
}

/// Solves for the largest admissible entry threshold `x*` and the residual
/// Bhattacharyya level the saturated recursion settles under once inside.
///
/// For minimum variable degree 2 this needs `λ₂ ρ'(1) B(c) < 1`; for degree
/// ≥ 3 a window always exists.
pub fn near_stability_window(
    dd: &DegreeDistribution,
    c: &Density,
    k_var: f64,
) -> Result<StabilityWindow> {
    let b_c = c.bhattacharyya();
    let rp = dd.rho_prime_1();
    let l2 = dd.lambda2();
    let l3 = dd.lambda3();
    let d_min = dd.min_var_degree();

    let g = |x: f64| l2 * b_c * rp + (1.0 - l2) * b_c * rp * rp * x;
    let f = |x: f64| l3 * b_c * rp * rp * x + (1.0 - l3) * b_c * rp.powi(3) * x * x;

    let x_cap = 1.0 / rp;
    let (predicate, c_dmin): (Box<dyn Fn(f64) -> bool>, f64) = if d_min == 2 {
        if l2 * b_c * rp >= 1.0 {
            return Err(Error::WindowInfeasible(format!(
                "λ₂ ρ'(1) B(c) = {:.6} ≥ 1",
                l2 * b_c * rp
            )));
        }
        (Box::new(move |x: f64| g(x) < 1.0), f64::NAN)
    } else {
        (Box::new(move |x: f64| f(x) <= 0.5), 3.0)
    };

    // largest x in (0, 1/ρ'(1)) satisfying the contraction predicate
    let mut lo = 0.0;
    let mut hi = x_cap;
    if predicate(x_cap * (1.0 - 1e-12)) {
        lo = x_cap * (1.0 - 1e-12);
    } else {
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if predicate(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    // taking the supremum itself would drive 1/(1 - g) to infinity in the
    // degree-2 case; half the supremum keeps the constants usable
    let x_star = if d_min == 2 { lo / 2.0 } else { lo };
    if !(x_star > 0.0) {
        return Err(Error::WindowInfeasible("no positive entry threshold".into()));
    }

    let (k_min, c_dmin) = if d_min == 2 {
        let c2 = 1.0 / (1.0 - g(x_star));
        (2.0 * (c2 / x_star).ln().max(0.0), c2)
    } else {
        (2.0 * (2.0 / x_star).ln().max(0.0), c_dmin)
    };
    Ok(StabilityWindow {
        x_star,
        g_at_xstar: g(x_star),
        f_at_xstar: f(x_star),
        k_min,
        residual_bound: c_dmin * (-k_var / 2.0).exp(),
        c_dmin,
    })
}

/// Which variable-node bound set drives the mixture recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    /// The general consolidated bounds (any minimum degree ≥ 3).
    General,
    /// The rescaled form for minimum variable degree ≥ 5, with the
    /// one-step quadratic contraction assertion.
    HighDegree,
    /// The two-tier saturation bounds (minimum degree 4 with `k_alt`).
    TwoTier,
}

/// Ensemble and channel constants feeding [`mixture_bound_step`].
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    /// Minimum variable-node degree `d + 1`.
    pub min_var_degree: usize,
    /// Check-node edge degree `d_r` (check nodes have degree `d_r + 1`).
    pub check_edges: usize,
    /// Bhattacharyya parameter of the (truncated) channel.
    pub b_channel: f64,
    pub k_var: f64,
    pub k_check: f64,
    pub k_alt: Option<f64>,
    pub mode: BoundMode,
}

impl BoundParams {
    pub fn new(
        dd: &DegreeDistribution,
        cfg: &SaturationConfig,
        b_channel: f64,
        mode: BoundMode,
    ) -> Result<Self> {
        let check_edges = dd
            .check_regular_degree()
            .ok_or_else(|| Error::InvalidConfig {
                field: "rho".into(),
                msg: "mixture bound recursion assumes a right-regular ensemble".into(),
            })?
            - 1;
        let p = BoundParams {
            min_var_degree: dd.min_var_degree(),
            check_edges,
            b_channel,
            k_var: cfg.k_var,
            k_check: cfg.k_check,
            k_alt: cfg.k_alt,
            mode,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let d = self.min_var_degree.saturating_sub(1);
        match self.mode {
            BoundMode::General if d < 2 => Err(Error::InvalidConfig {
                field: "min_var_degree".into(),
                msg: "mixture bounds need minimum variable degree ≥ 3".into(),
            }),
            BoundMode::HighDegree if d < 4 => Err(Error::InvalidConfig {
                field: "min_var_degree".into(),
                msg: "high-degree mode needs minimum variable degree ≥ 5".into(),
            }),
            BoundMode::TwoTier if self.k_alt.is_none() => Err(Error::InvalidConfig {
                field: "k_alt".into(),
                msg: "two-tier mode needs an inner saturation level".into(),
            }),
            BoundMode::TwoTier if d < 3 => Err(Error::InvalidConfig {
                field: "min_var_degree".into(),
                msg: "two-tier mode targets minimum variable degree 4".into(),
            }),
            _ => Ok(()),
        }
    }
}

/// The tracked pair `[(1-γ) B(m), γ p]` plus the check gain factor observed
/// when the state last passed through a check update.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MixtureBoundState {
    pub gbar_bm: f64,
    pub gp: f64,
    pub xi: f64,
}

impl MixtureBoundState {
    pub fn new(gbar_bm: f64, gp: f64) -> Self {
        MixtureBoundState {
            gbar_bm,
            gp,
            xi: 1.0,
        }
    }

    /// `E = (1-γ)B(m) + e^{k_var/2} γ p`, the block-threshold driver.
    pub fn e_metric(&self, k_var: f64) -> f64 {
        self.gbar_bm + (k_var / 2.0).exp() * self.gp
    }
}

/// Log-domain twin of [`MixtureBoundState`], used by long contraction runs
/// where the raw coordinates underflow within a handful of doublings.
#[derive(Debug, Clone, Copy)]
struct LogState {
    /// ln((1-γ) B(m))
    lu: f64,
    /// ln(γ p)
    lw: f64,
}

/// `c * x` with the convention `0 * (-inf) = 0`, for log-domain exponent
/// products where a zero power must kill the term's dependence.
fn pow_mul(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Check gain factor from the tracked `γp`:
/// `ξ = 1 + (d_r - 1)(e^{k_var} - 1) γp`, the sharp form of the check-node
/// mixture analysis (it tends to 1 as the sign-error mass dies).
fn xi_of(params: &BoundParams, lw: f64) -> f64 {
    // ln((d_r - 1)(e^K - 1)) = ln(d_r - 1) + K + ln(1 - e^{-K})
    let ln_gain = (params.check_edges as f64 - 1.0).ln()
        + params.k_var
        + (-(-params.k_var).exp()).ln_1p();
    1.0 + (ln_gain + lw).exp()
}

fn step_log(state: LogState, params: &BoundParams, iter: usize) -> Result<(LogState, f64)> {
    let d = params.min_var_degree - 1;
    let d_r = params.check_edges as f64;
    let b_c = params.b_channel;
    let k = params.k_var;
    let k_ch = params.k_check;

    let xi = xi_of(params, state.lw);
    if xi > 3.0 {
        return Err(Error::OutOfWindow {
            what: format!("check gain ξ = {xi:.3} > 3"),
            iter,
        });
    }

    // check half: [γ̄B(m), γp] <- d_r diag(ξ, 1) [γ̄B(m), γp]
    let lub = (d_r * xi).ln() + state.lu;
    let lwb = d_r.ln() + state.lw;

    // 4 d_r γp < 1 keeps the variable-side binomial bounds valid
    let l4wb = 4.0f64.ln() + lwb;
    if l4wb >= 0.0 {
        return Err(Error::OutOfWindow {
            what: format!("4 d_r γp = {:.3e} ≥ 1", l4wb.exp()),
            iter,
        });
    }

    // B(b) from the post-check state, with the atom floor e^{-k_check/2}
    let lbb = log_sum_exp(&[lub, k_ch / 2.0 + lwb, -k_ch / 2.0]);

    let df = d as f64;
    let (lu_next, lw_next) = match params.mode {
        BoundMode::General | BoundMode::HighDegree => {
            if params.mode == BoundMode::HighDegree {
                // the quadratic prefactor assumption of the high-degree form
                let pref = (df * (df - 1.0) / 2.0) * b_c * ((df - 2.0) * lbb).exp();
                if pref > 1.0 {
                    return Err(Error::OutOfWindow {
                        what: format!("d(d-1)/2 B(c) B(b)^(d-2) = {pref:.3} > 1"),
                        iter,
                    });
                }
            }
            let lw_next = log_sum_exp(&[
                -k / 2.0
                    + (df * (df - 1.0) / 2.0).ln()
                    + b_c.ln()
                    + 2.0 * lub
                    + pow_mul(df - 2.0, lbb),
                (df + 1.0).ln() + pow_mul((d / 2 + 1) as f64, l4wb),
                df.ln() + pow_mul((d / 2) as f64, l4wb) + b_c.ln() + lub,
            ]);
            let lu_next = log_sum_exp(&[
                2.0 * lub,
                (2.0 * df * b_c).ln() + lub + pow_mul(((d - 2) / 2) as f64, l4wb) + lbb,
                b_c.ln() + pow_mul((d / 2) as f64, l4wb),
            ]);
            (lu_next, lw_next)
        }
        BoundMode::TwoTier => {
            let k_alt = params.k_alt.expect("validated");
            let lam = k_alt / k;
            let e_gap = (k - k_alt) / 2.0;
            // inner saturation multiplies interior contributions by
            // e^{(k_var-k_alt)/2}; the lone-saturated-mass term keeps the
            // e^{-(2λ-1)k/2} 3ρ'(1) suppression that two-tier buys
            let lu_next = log_sum_exp(&[
                e_gap
                    + (df * (df - 1.0) / 2.0).ln()
                    + b_c.ln()
                    + 2.0 * lub
                    + pow_mul(df - 2.0, lbb),
                df.ln() + e_gap + 2.0 * b_c.ln() + lub + l4wb,
                b_c.ln() + (3.0 * d_r).ln() - (2.0 * lam - 1.0) * k / 2.0 + l4wb,
            ]);
            let lw_next = log_sum_exp(&[
                -k / 2.0
                    + (df * (df - 1.0) / 2.0).ln()
                    + b_c.ln()
                    + 2.0 * lub
                    + pow_mul(df - 2.0, lbb),
                (df + 1.0).ln() + pow_mul((d / 2 + 1) as f64, l4wb),
                df.ln() + pow_mul((d / 2) as f64, l4wb) + b_c.ln() + lub,
            ]);
            (lu_next, lw_next)
        }
    };
    Ok((
        LogState {
            lu: lu_next,
            lw: lw_next,
        },
        xi,
    ))
}

/// One step of the mixture bound recursion: the check-node linear map
/// followed by the variable-node polynomial bounds of the chosen mode.
/// Returns the new upper-bound state; leaving the contraction window is an
/// error, not a silent continuation.
pub fn mixture_bound_step(
    state: &MixtureBoundState,
    params: &BoundParams,
) -> Result<MixtureBoundState> {
    params.validate()?;
    check_window_entry(state, params, 0)?;
    let log = LogState {
        lu: state.gbar_bm.ln(),
        lw: state.gp.ln(),
    };
    let (next, xi) = step_log(log, params, 0)?;
    Ok(MixtureBoundState {
        gbar_bm: next.lu.exp(),
        gp: next.lw.exp(),
        xi,
    })
}

fn check_window_entry(state: &MixtureBoundState, params: &BoundParams, iter: usize) -> Result<()> {
    if state.gbar_bm < 0.0 || state.gp < 0.0 {
        return Err(Error::OutOfWindow {
            what: "negative mixture coordinate".into(),
            iter,
        });
    }
    // entry form of the near-stability residual: B(a) ≤ 3 e^{-k_var/2}
    let b_a = state.gbar_bm + (params.k_var / 2.0).exp() * state.gp + (-params.k_var / 2.0).exp();
    let residual = 3.0 * (-params.k_var / 2.0).exp();
    if b_a > residual {
        return Err(Error::OutOfWindow {
            what: format!("B(a) = {b_a:.3e} above the residual bound {residual:.3e}"),
            iter,
        });
    }
    Ok(())
}

/// Convergence-speed classification of a mixture bound run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockThresholdReport {
    /// Mean of `-ln(E(ℓ+1)/E(ℓ))` over the fitted tail window.
    pub rate_exponent: f64,
    /// Exponent `N` the block-threshold argument needs, from the
    /// computation-tree size bound `M_ℓ² ≤ e^{Mℓ}`.
    pub required_exponent: f64,
    pub doubly_exponential: bool,
    /// Least-squares slope of `ln(-ln E(ℓ))` over the fitted window.
    pub loglog_slope: f64,
    /// `-ln E(ℓ)` per iteration.
    pub neg_log_e: Vec<f64>,
    /// ξ observed each iteration.
    pub xis: Vec<f64>,
}

/// Slope threshold declaring doubly exponential decay. One-step quadratic
/// contraction doubles `-ln E` per iteration (slope ln 2); the two-tier
/// system alternates its two coordinates and doubles every other iteration
/// (slope ln 2 / 2 ≈ 0.347); linear-rate systems flatten toward zero. The
/// threshold sits between the two regimes.
pub const DOUBLY_EXP_SLOPE: f64 = 0.29389333245105950; // ln(1.8) / 2

const FIT_WINDOW: usize = 10;

/// Iterates the mixture bound recursion from an in-window start, tracking
/// `E(ℓ) = (1-γ)B(m) + e^{k_var/2} γp` in log domain, and classifies the
/// decay: the fitted per-iteration rate, and whether `-ln E` grows
/// geometrically (doubly exponential decay).
pub fn contraction_run(
    initial: &MixtureBoundState,
    params: &BoundParams,
    iters: usize,
) -> Result<BlockThresholdReport> {
    params.validate()?;
    check_window_entry(initial, params, 0)?;
    let mut state = LogState {
        lu: initial.gbar_bm.ln(),
        lw: initial.gp.ln(),
    };
    let e_of = |s: &LogState| log_sum_exp(&[s.lu, params.k_var / 2.0 + s.lw]);
    let mut ln_e = vec![e_of(&state)];
    let mut xis = Vec::with_capacity(iters);
    for iter in 1..=iters {
        let (next, xi) = step_log(state, params, iter)?;
        if params.mode == BoundMode::HighDegree {
            // one-step quadratic contraction: E' ≤ 2 (d_r ξ)² E²
            let bound = (2.0 * (params.check_edges as f64 * xi).powi(2)).ln() + 2.0 * e_of(&state);
            let measured = e_of(&next);
            if measured > bound + 1e-9 {
                return Err(Error::BoundViolation {
                    what: "quadratic contraction of the high-degree recursion".into(),
                    iter,
                    measured,
                    bound,
                });
            }
        }
        state = next;
        ln_e.push(e_of(&state));
        xis.push(xi);
    }

    let neg_log_e: Vec<f64> = ln_e.iter().map(|&v| -v).collect();
    let tail = FIT_WINDOW.min(neg_log_e.len() - 1);
    let rate_exponent = (neg_log_e[neg_log_e.len() - 1] - neg_log_e[neg_log_e.len() - 1 - tail])
        / tail as f64;
    let loglog_slope = lsq_slope(
        &neg_log_e[neg_log_e.len() - tail..]
            .iter()
            .map(|&v| v.max(f64::MIN_POSITIVE).ln())
            .collect::<Vec<_>>(),
    );
    let required_exponent = tree_exponent(params, iters.max(1));
    Ok(BlockThresholdReport {
        rate_exponent,
        required_exponent,
        doubly_exponential: loglog_slope >= DOUBLY_EXP_SLOPE,
        loglog_slope,
        neg_log_e,
        xis,
    })
}

fn lsq_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let xb = (n - 1.0) / 2.0;
    let yb = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - xb;
        num += dx * (y - yb);
        den += dx * dx;
    }
    num / den
}

/// `N` with `M_ℓ² ≤ e^{Nℓ}` where `M_ℓ` counts variable nodes in the depth-ℓ
/// computation tree of the (min-degree) ensemble.
fn tree_exponent(params: &BoundParams, ell: usize) -> f64 {
    let dl = params.min_var_degree as f64;
    let dr = (params.check_edges + 1) as f64;
    let branch = (dl - 1.0) * (dr - 1.0);
    // ln M_ℓ without building the count: M_ℓ ≈ 1 + dl (dr-1) Σ branch^t
    let ln_m = if branch > 1.0 {
        (dl * (dr - 1.0) / (branch - 1.0)).ln() + ell as f64 * branch.ln()
    } else {
        ((1 + params.min_var_degree * params.check_edges * ell) as f64).ln()
    };
    2.0 * ln_m / ell as f64
}

/// State of the three-message (erasure-altered) decoder recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureDeState {
    /// Variable-side erasure probability.
    pub x: f64,
    /// Variable-side wrong-sign probability.
    pub y: f64,
    /// Check-side erasure probability.
    pub w: f64,
    /// Check-side wrong-sign probability.
    pub z: f64,
}

impl ErasureDeState {
    pub fn new(x: f64, y: f64) -> Self {
        ErasureDeState { x, y, w: 0.0, z: 0.0 }
    }
}

/// One step of the erasure-alteration bound recursion:
/// `w = 1-(1-x)^{d_r-1}`, `z = 1-(1-y)^{d_r-1}`, then `x = w² + z`,
/// `y = z² + wz` (all capped at 1).
pub fn erasure_de_step(s: &ErasureDeState, d_r: usize) -> ErasureDeState {
    let pow = |v: f64| -> f64 {
        // 1 - (1-v)^(d_r - 1), stable for tiny v
        -((d_r as f64 - 1.0) * (-v).ln_1p()).exp_m1()
    };
    let w = pow(s.x);
    let z = pow(s.y);
    ErasureDeState {
        x: (w * w + z).min(1.0),
        y: (z * z + w * z).min(1.0),
        w,
        z,
    }
}

pub fn erasure_de_run(x0: f64, y0: f64, d_r: usize, steps: usize) -> Vec<ErasureDeState> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = ErasureDeState::new(x0, y0);
    out.push(s);
    for _ in 0..steps {
        s = erasure_de_step(&s, d_r);
        out.push(s);
    }
    out
}

/// Geometric-mean doubling ratio of `ln 1/(x+y)` per two steps over a run.
pub fn erasure_doubling_ratio(states: &[ErasureDeState]) -> f64 {
    let s0 = states.first().expect("nonempty run");
    let sn = states.last().expect("nonempty run");
    let l0 = (1.0 / (s0.x + s0.y)).ln();
    let ln = (1.0 / (sn.x + sn.y)).ln();
    let pairs = (states.len() - 1) as f64 / 2.0;
    (ln / l0).powf(1.0 / pairs)
}

/// `(1 - Π(1-2pᵢ))/2 ≤ Σ pᵢ` for sign-error probabilities in `[0,1]`.
pub fn verify_pprodineq(ps: &[f64]) -> bool {
    let prod: f64 = ps.iter().map(|&p| 1.0 - 2.0 * p).product();
    (1.0 - prod) / 2.0 <= ps.iter().sum::<f64>() + 1e-12
}

/// Sign-error probability after a check over `d` inputs each wrong with
/// probability `p`: `(1 - (1-2p)^d)/2`.
pub fn check_sign_error_prob(p: f64, d: usize) -> f64 {
    (1.0 - (1.0 - 2.0 * p).powi(d as i32)) / 2.0
}

/// Result of one check-node Bhattacharyya bound evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckBattaReport {
    pub b_out: f64,
    pub bound: f64,
    pub slack: f64,
}

/// Checks the check-node Bhattacharyya inequality on exact atom inputs:
/// with `k` two-point densities `D(pᵢ, K)` and further atom densities
/// `aⱼ`, the exact check output satisfies
/// `B(out) ≤ (1 + Σ(e^{K/2} B(Dᵢ) - 1)) · (k e^{-K/2} + Σ B(aⱼ))`.
/// With no `(p, K)` atoms this is the plain additive bound.
///
/// The `k e^{-K/2}` term in the second factor comes from the check output
/// magnitude inequality at exponent 1/2 and cannot be dropped: with it
/// removed, two `D(0, K)` atoms against a single two-point density at
/// level `K` give `B(out) = √3 e^{-K/2}` against a claimed bound of
/// `e^{-K/2}`.
pub fn verify_check_batta_bound(
    ps: &[f64],
    k: f64,
    others: &[Vec<(f64, f64)>],
) -> Result<CheckBattaReport> {
    if others.is_empty() {
        return Err(Error::InvalidConfig {
            field: "others".into(),
            msg: "the bound needs at least one general density".into(),
        });
    }
    let mut acc: Vec<(f64, f64)> = vec![(f64::INFINITY, 1.0)];
    let mut atom_factor = 1.0;
    for &p in ps {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig {
                field: "ps".into(),
                msg: format!("sign-error probability {p} outside [0,1]"),
            });
        }
        let d = vec![(-k, p), (k, 1.0 - p)];
        atom_factor += (k / 2.0).exp() * atoms_bhattacharyya(&d) - 1.0;
        acc = check_combine_atoms(&acc, &d);
    }
    let mut b_sum = ps.len() as f64 * (-k / 2.0).exp();
    for a in others {
        b_sum += atoms_bhattacharyya(a);
        acc = check_combine_atoms(&acc, a);
        if acc.len() > 1 << 20 {
            return Err(Error::InvalidConfig {
                field: "others".into(),
                msg: "atom blowup in exact check combination".into(),
            });
        }
    }
    let b_out = atoms_bhattacharyya(&acc);
    let bound = atom_factor * b_sum;
    let slack = bound - b_out;
    if slack < -1e-9 {
        return Err(Error::BoundViolation {
            what: "check-node Bhattacharyya bound".into(),
            iter: 0,
            measured: b_out,
            bound,
        });
    }
    Ok(CheckBattaReport { b_out, bound, slack })
}

/// Entropy cost of symmetric channel truncation:
/// `H(⌊c⌋_sym,k) - H(c) ≤ (2/ln 2) e^{-k/2}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityLossReport {
    pub h_channel: f64,
    pub h_truncated: f64,
    pub bound: f64,
}

pub fn capacity_loss(c: &Density, k_channel: f64) -> Result<CapacityLossReport> {
    let truncated = symmetric_saturate(c, k_channel)?;
    Ok(CapacityLossReport {
        h_channel: c.functionals().entropy,
        h_truncated: truncated.functionals().entropy,
        bound: 2.0 / std::f64::consts::LN_2 * (-k_channel / 2.0).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Channel, ChannelKind};
    use crate::de::{saturation_config, CheckRule};
    use crate::grid::Grid;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::for_saturation(20.0).unwrap()
    }

    #[test]
    fn support_recursion_reference_sequences() {
        let r = support_recursion(2, 1.0, 5.0, 20);
        assert_eq!(r.zs, vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0, -1.0]);
        assert_eq!(r.first_negative, Some(6));

        let r = support_recursion(3, 1.0, 1.0, 10);
        assert!(r.zs.iter().all(|&z| (z - 1.0).abs() < 1e-12));
        assert_eq!(r.first_negative, None);

        let r = support_recursion(3, 1.0, 0.9, 100);
        assert_eq!(r.first_negative.is_some(), true);
        let zs = &r.zs;
        assert!(zs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn stability_margin_closed_forms() {
        let g = grid();
        let dd36 = DegreeDistribution::regular(3, 6).unwrap();
        let c = Channel::new(ChannelKind::Bec, 0.3).unwrap().density(g).unwrap();
        assert_eq!(stability_margin(&dd36, &c, None), 0.0);

        let dd24 = DegreeDistribution::regular(2, 4).unwrap();
        assert!((stability_margin(&dd24, &c, None) - 0.9).abs() < 1e-12);
        let with_trunc = stability_margin(&dd24, &c, Some(10.0));
        assert!((with_trunc - 3.0 * (0.3 + 2.0 * (-5.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn window_for_regular_3_6() {
        let g = grid();
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let c = Channel::new(ChannelKind::Bec, 0.40).unwrap().density(g).unwrap();
        let w = near_stability_window(&dd, &c, 20.0).unwrap();
        assert_eq!(w.c_dmin, 3.0);
        assert!((w.residual_bound - 3.0 * (-10.0f64).exp()).abs() < 1e-12);
        // f(x) = 10 x here, so x* = 0.05
        assert!((w.x_star - 0.05).abs() < 1e-6, "x* = {}", w.x_star);
        assert!(w.k_min < 20.0);
    }

    #[test]
    fn window_degree_two_shrinks_and_fails() {
        let g = grid();
        let mk = |eps: f64| Channel::new(ChannelKind::Bec, eps).unwrap().density(g).unwrap();

        // mixed ensemble: λ₂ ρ'(1) B(c) = 0.5·3·B(c)
        let dd: DegreeDistribution = "irr: l2=0.5,l3=0.5 ; r4=1.0".parse().unwrap();
        let loose = near_stability_window(&dd, &mk(0.4), 20.0).unwrap();
        assert!(loose.x_star > 0.0 && loose.g_at_xstar < 1.0);

        // margin 0.99: x* exists but is tiny and k_min large
        let tight = near_stability_window(&dd, &mk(0.66), 20.0).unwrap();
        assert!(tight.x_star < loose.x_star / 10.0);
        assert!(tight.k_min > loose.k_min);

        // margin ≥ 1 is infeasible
        assert!(matches!(
            near_stability_window(&dd, &mk(0.67), 20.0),
            Err(Error::WindowInfeasible(_))
        ));
    }

    fn params_for(
        d_l: usize,
        d_r: usize,
        k_var: f64,
        b_c: f64,
        mode: BoundMode,
        tier: Option<f64>,
    ) -> BoundParams {
        let g = Grid::for_saturation(k_var).unwrap();
        let dd = DegreeDistribution::regular(d_l, d_r).unwrap();
        let cfg = saturation_config(&g, &dd, CheckRule::SumProduct, k_var, None, tier).unwrap();
        BoundParams::new(&dd, &cfg, b_c, mode).unwrap()
    }

    fn entry_state(k_var: f64) -> MixtureBoundState {
        MixtureBoundState::new((-k_var / 2.0).exp(), 0.4 * (-k_var).exp())
    }

    #[test]
    fn mixture_step_fixed_point_at_zero() {
        let p = params_for(3, 6, 20.0, 0.4, BoundMode::General, None);
        let s = MixtureBoundState::new(0.0, 0.0);
        let out = mixture_bound_step(&s, &p).unwrap();
        assert_eq!(out.gbar_bm, 0.0);
        assert_eq!(out.gp, 0.0);
    }

    #[test]
    fn mixture_step_check_half_with_no_atoms() {
        // γ = 0: the check half is gbar_bm <- d_r ξ gbar_bm with ξ = 1
        let p = params_for(3, 6, 20.0, 0.0, BoundMode::General, None);
        let s = MixtureBoundState::new(1e-9, 0.0);
        let out = mixture_bound_step(&s, &p).unwrap();
        assert!((out.xi - 1.0).abs() < 1e-12);
        // u' = (d_r ξ u)² + 2dBc(...)·0 + 0 with b_c = 0 collapses to (5u)²
        let expect = (5.0 * 1e-9f64).powi(2);
        assert!((out.gbar_bm - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn check_p_map_reference_value() {
        let p = check_sign_error_prob(0.01, 5);
        assert!((p - 0.048039).abs() < 1e-6);
        assert!(p <= 5.0 * 0.01);
    }

    #[test]
    fn out_of_window_is_reported() {
        let p = params_for(3, 6, 20.0, 0.4, BoundMode::General, None);
        let s = MixtureBoundState::new(1.0, 0.5);
        assert!(matches!(
            mixture_bound_step(&s, &p),
            Err(Error::OutOfWindow { .. })
        ));
    }

    #[test]
    fn contraction_rate_grows_with_k_var_for_degree_3() {
        let mut prev = 0.0;
        for k in [15.0, 20.0, 25.0] {
            let p = params_for(3, 6, k, 0.4, BoundMode::General, None);
            let r = contraction_run(&entry_state(k), &p, 25).unwrap();
            assert!(!r.doubly_exponential, "degree 3 must be linear-rate");
            assert!(
                r.rate_exponent > prev + 1.0,
                "rate {} did not grow past {prev}",
                r.rate_exponent
            );
            prev = r.rate_exponent;
        }
    }

    #[test]
    fn contraction_classifies_degree_5_as_doubly_exponential() {
        let p = params_for(5, 6, 20.0, 0.4, BoundMode::HighDegree, None);
        let r = contraction_run(&entry_state(20.0), &p, 20).unwrap();
        assert!(r.doubly_exponential, "slope {}", r.loglog_slope);
        assert!((r.loglog_slope - std::f64::consts::LN_2).abs() < 0.1);
        assert!(r.xis.iter().all(|&x| x <= 3.0));
    }

    #[test]
    fn contraction_degree_4_needs_two_tier() {
        let plain = params_for(4, 6, 20.0, 0.4, BoundMode::General, None);
        let r = contraction_run(&entry_state(20.0), &plain, 25).unwrap();
        assert!(!r.doubly_exponential, "plain degree-4 slope {}", r.loglog_slope);

        let tiered = params_for(4, 6, 20.0, 0.4, BoundMode::TwoTier, Some(0.75));
        let r = contraction_run(&entry_state(20.0), &tiered, 25).unwrap();
        assert!(r.doubly_exponential, "two-tier slope {}", r.loglog_slope);
    }

    #[test]
    fn erasure_recursion_reference_points() {
        let s = erasure_de_step(&ErasureDeState::new(0.0, 0.0), 6);
        assert_eq!(s, ErasureDeState { x: 0.0, y: 0.0, w: 0.0, z: 0.0 });

        // one step from (x, y) = (0.001, ...) has w = 1 - 0.999^5 ≈ 0.004990
        let s = erasure_de_step(&ErasureDeState::new(0.001, 0.0), 6);
        assert!((s.w - 0.00499).abs() < 1e-5);
        assert!(s.w <= 5.0 * 0.001);

        // arithmetic of the displayed bounds at w = 0.1, z = 0.01
        let w: f64 = 0.1;
        let z: f64 = 0.01;
        assert!(w * w + z <= 0.02 + 1e-12);
        assert!((z * z + w * z - 0.0011).abs() < 1e-12);
    }

    #[test]
    fn erasure_recursion_doubles_per_two_steps() {
        let states = erasure_de_run(1e-3, 1e-3, 6, 10);
        let ratio = erasure_doubling_ratio(&states);
        assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pprod_inequality() {
        assert!(verify_pprodineq(&[0.0, 0.0, 0.0]));
        assert!(verify_pprodineq(&[0.5, 0.5]));
        assert!(verify_pprodineq(&[0.1, 0.2]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5000 {
            let n = rng.gen_range(1..8);
            let ps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            assert!(verify_pprodineq(&ps), "{ps:?}");
        }
    }

    #[test]
    fn check_batta_bound_reference_cases() {
        // two perfect inputs: 0 ≤ 0
        let r = verify_check_batta_bound(
            &[],
            10.0,
            &[vec![(f64::INFINITY, 1.0)], vec![(f64::INFINITY, 1.0)]],
        )
        .unwrap();
        assert_eq!(r.b_out, 0.0);

        // an erased input is absorbing: B = 1 ≤ 1 + B(a)
        let a = vec![(-2.0, 0.3), (2.0, 0.7)];
        let r = verify_check_batta_bound(&[], 10.0, &[vec![(0.0, 1.0)], a.clone()]).unwrap();
        assert!((r.b_out - 1.0).abs() < 1e-12);
        assert!(r.slack >= 0.0);
    }

    #[test]
    fn check_batta_bound_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let k = rng.gen_range(1.0..20.0);
            let n_atoms = rng.gen_range(0..3);
            let ps: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.0..0.5)).collect();
            let n_dens = rng.gen_range(1..4);
            let others: Vec<Vec<(f64, f64)>> = (0..n_dens)
                .map(|_| {
                    let q: f64 = rng.gen_range(0.0..0.5);
                    let z: f64 = rng.gen_range(0.1..25.0);
                    vec![(-z, q), (z, 1.0 - q)]
                })
                .collect();
            let r = verify_check_batta_bound(&ps, k, &others).unwrap();
            assert!(r.slack >= -1e-9);
        }
    }

    #[test]
    fn capacity_loss_bound_on_bsc() {
        let g = grid();
        for eps in [0.02, 0.1, 0.3] {
            let c = Channel::new(ChannelKind::Bsc, eps).unwrap().density(g).unwrap();
            for k in [5.0, 10.0, 15.0] {
                let r = capacity_loss(&c, k).unwrap();
                assert!(r.h_truncated >= r.h_channel - 1e-9);
                assert!(r.h_truncated - r.h_channel <= r.bound + 1e-6);
            }
        }
    }
}
