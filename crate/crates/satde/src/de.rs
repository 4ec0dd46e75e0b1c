//! Density-evolution recursions for plain and saturated belief propagation,
//! threshold search, and the perturbation bounds relating the two.

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelKind};
use crate::density::{check_pair_magnitude, Density, Functionals};
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::saturation::{
    decompose, saturate, symmetric_saturate_unchecked, two_tier_saturate, SaturationConfig,
};

/// Which fixed-point map drives the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeVariant {
    /// Plain belief propagation.
    FullBp,
    /// Hard saturation of variable-node outputs at `k_var`.
    SatHard,
    /// Symmetric saturation at `k_var`.
    SatSymmetric,
    /// Two-tier saturation at `k_alt` and `k_var`.
    SatTwoTier,
}

impl DeVariant {
    pub fn is_saturated(&self) -> bool {
        !matches!(self, DeVariant::FullBp)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DeVariant::FullBp => "fullbp",
            DeVariant::SatHard => "sathard",
            DeVariant::SatSymmetric => "satsym",
            DeVariant::SatTwoTier => "sattwotier",
        }
    }
}

/// Check-node update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckRule {
    SumProduct,
    MinSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeMode {
    pub variant: DeVariant,
    pub check_rule: CheckRule,
}

impl DeMode {
    pub fn full_bp() -> Self {
        DeMode {
            variant: DeVariant::FullBp,
            check_rule: CheckRule::SumProduct,
        }
    }

    pub fn new(variant: DeVariant, check_rule: CheckRule) -> Self {
        DeMode {
            variant,
            check_rule,
        }
    }
}

/// Check output magnitude when `degree - 1` incoming messages all have
/// magnitude `k_var`: the tanh rule for sum-product, `k_var` for min-sum.
pub fn k_check_for(rule: CheckRule, k_var: f64, max_check_degree: usize) -> f64 {
    match rule {
        CheckRule::MinSum => k_var,
        CheckRule::SumProduct => {
            let mut out = k_var;
            for _ in 0..max_check_degree.saturating_sub(2) {
                out = check_pair_magnitude(out, k_var);
            }
            out
        }
    }
}

/// Builds a [`SaturationConfig`] for an ensemble: `k_check` is derived from
/// the worst case (largest) check degree under the given rule.
pub fn saturation_config(
    grid: &Grid,
    dd: &DegreeDistribution,
    rule: CheckRule,
    k_var: f64,
    k_channel: Option<f64>,
    tier_ratio: Option<f64>,
) -> Result<SaturationConfig> {
    let k_check = k_check_for(rule, grid.snap(k_var), dd.max_check_degree());
    SaturationConfig::new(grid, k_var, k_check, k_channel, tier_ratio)
}

/// Magnitude bounds a check-node update must respect:
/// `-ln Σ e^{-K_i} <= K_out <= min K_i`.
pub fn check_magnitude_bounds(mags: &[f64]) -> (f64, f64) {
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    // log-sum-exp of -K_i
    let sum: f64 = mags.iter().map(|&k| (-(k - min)).exp()).sum();
    (min - sum.ln(), min)
}

/// Check output magnitude for all incoming magnitudes under a rule.
pub fn check_output_magnitude(rule: CheckRule, mags: &[f64]) -> f64 {
    match rule {
        CheckRule::MinSum => mags.iter().copied().fold(f64::INFINITY, f64::min),
        CheckRule::SumProduct => {
            let mut it = mags.iter();
            let first = *it.next().expect("at least one magnitude");
            it.fold(first, |acc, &k| check_pair_magnitude(acc, k))
        }
    }
}

/// One density-evolution step. For saturated variants the channel is
/// expected to be pre-truncated to `k_channel`.
pub fn de_step(
    mode: DeMode,
    dd: &DegreeDistribution,
    c: &Density,
    x: &Density,
    cfg: Option<&SaturationConfig>,
) -> Result<Density> {
    let b = match mode.check_rule {
        CheckRule::SumProduct => dd.rho_apply(x)?,
        CheckRule::MinSum => dd.rho_apply_min_sum(x)?,
    };
    let y = dd.lambda_apply(c, &b)?;
    let need_cfg = || {
        cfg.ok_or_else(|| Error::InvalidConfig {
            field: "saturation".into(),
            msg: format!("{} requires a saturation config", mode.variant.name()),
        })
    };
    let mut out = match mode.variant {
        DeVariant::FullBp => y,
        DeVariant::SatHard => saturate(&y, need_cfg()?.k_var)?,
        DeVariant::SatSymmetric => symmetric_saturate_unchecked(&y, need_cfg()?.k_var)?,
        DeVariant::SatTwoTier => two_tier_saturate(&y, need_cfg()?)?,
    };
    // one step composes d_r + d_l convolutions; rounding in the total mass
    // compounds geometrically across iterations unless rescaled here
    out.normalize();
    Ok(out)
}

/// Stopping policy for [`run_de`].
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    /// Stop with success once the Bhattacharyya parameter drops below this.
    pub target_b: Option<f64>,
    /// Declare a stall when B changes by less than `stall_rel` (relative)
    /// over `stall_window` iterations.
    pub stall: Option<(usize, f64)>,
    pub max_iters: usize,
}

impl StopRule {
    /// The policy threshold search uses: mode-specific success target plus
    /// the standard stall detector.
    pub fn for_threshold(mode: DeMode, cfg: Option<&SaturationConfig>, max_iters: usize) -> Self {
        let target = match (mode.variant, cfg) {
            (DeVariant::FullBp, _) | (_, None) => 1e-7,
            (v, Some(cfg)) => 1.1 * b_floor(v, cfg),
        };
        StopRule {
            target_b: Some(target),
            stall: Some((50, 1e-9)),
            max_iters,
        }
    }

    /// Run a fixed number of iterations with no early exit.
    pub fn exhaustive(max_iters: usize) -> Self {
        StopRule {
            target_b: None,
            stall: None,
            max_iters,
        }
    }
}

/// Smallest Bhattacharyya parameter a saturated recursion can reach: the
/// perfect-decoding atom structure of each variant evaluated at `k_var`.
pub fn b_floor(variant: DeVariant, cfg: &SaturationConfig) -> f64 {
    let k = cfg.k_var;
    match variant {
        DeVariant::FullBp => 0.0,
        DeVariant::SatHard | DeVariant::SatTwoTier => (-k / 2.0).exp(),
        // symmetric saturation keeps sign-error mass e^{-k}/(1+e^{-k}) at -k
        DeVariant::SatSymmetric => 2.0 * (-k / 2.0).exp() / (1.0 + (-k).exp()),
    }
}

/// How a DE run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeOutcome {
    /// B dropped below the target.
    ReachedTarget,
    /// B stopped moving (fixed point or stall window triggered).
    Stalled,
    /// Iteration budget exhausted.
    ExhaustedIters,
}

/// Per-iteration record of a DE run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub funcs: Functionals,
    /// `γ p` of the mixture decomposition at `k_var` (saturated modes).
    pub gamma_p: Option<f64>,
    /// `(1-γ) B(m)` of the decomposition (saturated modes).
    pub gbar_bm: Option<f64>,
    /// Wasserstein distance to the lockstep full-BP trace, when tracked.
    pub wasserstein_to_bp: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DeTrace {
    pub rows: Vec<TraceRow>,
    pub outcome: DeOutcome,
    pub final_density: Density,
}

impl DeTrace {
    pub fn final_b(&self) -> f64 {
        self.rows.last().map(|r| r.funcs.bhattacharyya).unwrap_or(1.0)
    }

    pub fn final_pe(&self) -> f64 {
        self.rows.last().map(|r| r.funcs.error_prob).unwrap_or(0.5)
    }
}

/// Runs density evolution from `x_0 = Δ_0`. For saturated variants the
/// channel is truncated to `k_channel` (hard saturation) before use. With
/// `track_bp` a full-BP recursion runs in lockstep and each row records the
/// Wasserstein distance to it.
pub fn run_de(
    mode: DeMode,
    dd: &DegreeDistribution,
    channel: &Density,
    cfg: Option<&SaturationConfig>,
    stop: &StopRule,
    track_bp: bool,
) -> Result<DeTrace> {
    let c = if mode.variant.is_saturated() {
        let cfg = cfg.ok_or_else(|| Error::InvalidConfig {
            field: "saturation".into(),
            msg: "saturated DE requires a saturation config".into(),
        })?;
        saturate(channel, cfg.k_channel)?
    } else {
        channel.clone()
    };

    let grid = *c.grid();
    let mut x = Density::delta_zero(grid);
    let mut x_bp = track_bp.then(|| Density::delta_zero(grid));
    let mut rows = Vec::with_capacity(stop.max_iters + 1);
    rows.push(trace_row(0, &x, mode, cfg, x_bp.as_ref()));

    let mut outcome = DeOutcome::ExhaustedIters;
    for iter in 1..=stop.max_iters {
        let next = de_step(mode, dd, &c, &x, cfg)?;
        if let Some(bp) = x_bp.as_mut() {
            *bp = de_step(DeMode::full_bp(), dd, channel, bp, None)?;
        }
        let fixed_point = next == x;
        x = next;
        rows.push(trace_row(iter, &x, mode, cfg, x_bp.as_ref()));
        let b = rows[iter].funcs.bhattacharyya;

        if let Some(target) = stop.target_b {
            if b < target {
                outcome = DeOutcome::ReachedTarget;
                break;
            }
        }
        if fixed_point {
            outcome = DeOutcome::Stalled;
            break;
        }
        if let Some((window, rel)) = stop.stall {
            if iter >= window {
                let past = rows[iter - window].funcs.bhattacharyya;
                if (b - past).abs() <= rel * b.abs().max(f64::MIN_POSITIVE) {
                    outcome = DeOutcome::Stalled;
                    break;
                }
            }
        }
    }
    Ok(DeTrace {
        rows,
        outcome,
        final_density: x,
    })
}

fn trace_row(
    iter: usize,
    x: &Density,
    mode: DeMode,
    cfg: Option<&SaturationConfig>,
    bp: Option<&Density>,
) -> TraceRow {
    let funcs = x.functionals();
    let (gamma_p, gbar_bm) = match (mode.variant.is_saturated(), cfg) {
        (true, Some(cfg)) => match decompose(x, cfg.k_var) {
            Ok(m) => (
                Some(m.gamma * m.p),
                Some((1.0 - m.gamma) * m.interior.bhattacharyya()),
            ),
            Err(_) => (None, None),
        },
        _ => (None, None),
    };
    TraceRow {
        iter,
        funcs,
        gamma_p,
        gbar_bm,
        wasserstein_to_bp: bp.map(|b| x.wasserstein(b)),
    }
}

/// Result of a threshold bisection: the final bracket and its midpoint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
}

/// Bisection on the channel family parameter for the last decodable channel.
/// Success means the run reaches the mode's Bhattacharyya target. The
/// initial bracket must be monotone: decodable at `lo`, not at `hi`.
pub fn find_threshold(
    mode: DeMode,
    dd: &DegreeDistribution,
    kind: ChannelKind,
    grid: Grid,
    cfg: Option<&SaturationConfig>,
    tol: f64,
    max_iters: usize,
) -> Result<ThresholdResult> {
    let stop = StopRule::for_threshold(mode, cfg, max_iters);
    let success = |param: f64| -> Result<bool> {
        let c = Channel::new(kind, param)?.density(grid)?;
        let trace = run_de(mode, dd, &c, cfg, &stop, false)?;
        Ok(trace.outcome == DeOutcome::ReachedTarget)
    };

    let (pmin, pmax) = kind.param_range();
    let (mut lo, mut hi) = match kind {
        ChannelKind::Bec => (pmin.max(0.01), pmax.min(0.99)),
        ChannelKind::Bsc => (pmin.max(0.002), pmax.min(0.499)),
        // keep the Gaussian tail inside the working grid
        ChannelKind::BiAwgn => (sigma_min_for_grid(&grid), 6.0),
    };
    let lo_ok = success(lo)?;
    let hi_ok = success(hi)?;
    if !lo_ok || hi_ok {
        return Err(Error::ThresholdBracket { lo_ok, hi_ok });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if success(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        lo,
        hi,
        mid: 0.5 * (lo + hi),
    })
}

/// Smallest biAWGN σ whose LLR density fits the grid with negligible tails.
pub fn sigma_min_for_grid(grid: &Grid) -> f64 {
    let half = grid.half_range();
    // mean + 7 sd <= half with mean = 2/σ², sd = 2/σ
    let mut lo = 0.05;
    let mut hi = 6.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let reach = 2.0 / (mid * mid) + 14.0 / mid;
        if reach > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Per-iteration record of the lockstep comparison between full BP and the
/// symmetric saturated recursion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub iter: usize,
    pub degraded_ok: bool,
    pub wasserstein: f64,
    pub wasserstein_bound: f64,
    pub b_bp: f64,
    pub b_sym: f64,
    pub b_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub k_var: f64,
    pub rows: Vec<PerturbationRow>,
}

/// Runs full BP and symmetric saturated DE in lockstep for `ell` iterations
/// (no channel truncation) and checks, per iteration: the degradation
/// ordering, the Wasserstein divergence bound
/// `2 e^{-k + ℓ ln(2 (d_l-1)(d_r-1))}`, and the induced Bhattacharyya gap
/// bound. `tol` is added to both bounds to absorb quantization.
pub fn perturbation_check(
    dd: &DegreeDistribution,
    channel: &Density,
    k_var: f64,
    ell: usize,
    tol: f64,
) -> Result<PerturbationReport> {
    let grid = *channel.grid();
    let k_var = grid.snap(k_var);
    let growth = (2.0 * (dd.d_l_avg() - 1.0) * (dd.d_r_avg() - 1.0)).ln();
    let deg_tol = 5.0 * grid.spacing();

    let mut bp = Density::delta_zero(grid);
    let mut sym = Density::delta_zero(grid);
    let mut rows = Vec::with_capacity(ell);
    for iter in 1..=ell {
        bp = de_step(DeMode::full_bp(), dd, channel, &bp, None)?;
        let pre = dd.lambda_apply(channel, &dd.rho_apply(&sym)?)?;
        sym = symmetric_saturate_unchecked(&pre, k_var)?;
        sym.normalize();

        let degraded_ok = bp.is_degraded_under(&sym, deg_tol);
        let wasserstein = bp.wasserstein(&sym);
        let exponent = -k_var + iter as f64 * growth;
        let wasserstein_bound = 2.0 * exponent.exp() + tol;
        let b_bp = bp.bhattacharyya();
        let b_sym = sym.bhattacharyya();
        let b_bound = b_bp + 2.0 * 2.0f64.sqrt() * (exponent / 2.0).exp() + tol;

        let row = PerturbationRow {
            iter,
            degraded_ok,
            wasserstein,
            wasserstein_bound,
            b_bp,
            b_sym,
            b_bound,
        };
        if !degraded_ok {
            return Err(Error::BoundViolation {
                what: "degradation order full BP ≺ symmetric saturated".into(),
                iter,
                measured: 0.0,
                bound: deg_tol,
            });
        }
        if wasserstein > wasserstein_bound {
            return Err(Error::BoundViolation {
                what: "Wasserstein divergence of symmetric saturated DE".into(),
                iter,
                measured: wasserstein,
                bound: wasserstein_bound,
            });
        }
        if b_sym > b_bound {
            return Err(Error::BoundViolation {
                what: "Bhattacharyya gap of symmetric saturated DE".into(),
                iter,
                measured: b_sym,
                bound: b_bound,
            });
        }
        rows.push(row);
    }
    Ok(PerturbationReport { k_var, rows })
}
