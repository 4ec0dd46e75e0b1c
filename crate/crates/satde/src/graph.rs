//! Finite-length Tanner-graph decoding and Monte Carlo simulation.
//!
//! The decoder implements flooding belief propagation (sum-product or
//! min-sum) with optional magnitude saturation of variable-node outputs,
//! the randomized sign-flipping that symmetrizes saturated messages, and
//! the late-decoding erasure alteration that switches to a three-message
//! decoder. All-zero codeword transmission suffices because the decoder is
//! a symmetric message-passing decoder.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelKind};
use crate::de::CheckRule;
use crate::density::check_pair_magnitude;
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::saturation::SaturationConfig;

/// Stand-in for an infinite LLR (perfectly known bit) that keeps the
/// arithmetic finite.
pub const LLR_CAP: f64 = 1e4;

/// Sparse bipartite graph sampled from the configuration model.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    pub n_vars: usize,
    pub n_checks: usize,
    /// Variable endpoint of each edge (edges sorted by variable).
    var_of: Vec<u32>,
    /// CSR offsets: edges of variable `v` are `var_start[v]..var_start[v+1]`.
    var_start: Vec<usize>,
    /// Edge indices attached to each check node.
    check_edges: Vec<Vec<u32>>,
}

impl TannerGraph {
    pub fn n_edges(&self) -> usize {
        self.var_of.len()
    }

    pub fn var_degree(&self, v: usize) -> usize {
        self.var_start[v + 1] - self.var_start[v]
    }

    pub fn var_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.var_start[v]..self.var_start[v + 1]
    }

    pub fn check_edge_indices(&self, c: usize) -> &[u32] {
        &self.check_edges[c]
    }

    pub fn var_of_edge(&self, e: usize) -> usize {
        self.var_of[e] as usize
    }

    /// Realized edge-perspective degree fraction of variable degree `i`.
    pub fn realized_lambda(&self, i: usize) -> f64 {
        let mut edges = 0usize;
        for v in 0..self.n_vars {
            if self.var_degree(v) == i {
                edges += i;
            }
        }
        edges as f64 / self.n_edges() as f64
    }
}

/// Largest-remainder rounding of `total * fracs[i]` to integers summing to
/// `total`.
fn apportion(total: usize, fracs: &[(usize, f64)]) -> Vec<(usize, usize)> {
    let mut counts: Vec<(usize, usize, f64)> = fracs
        .iter()
        .map(|&(deg, f)| {
            let exact = total as f64 * f;
            (deg, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = counts.iter().map(|&(_, c, _)| c).sum();
    let mut left = total - assigned;
    counts.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    for c in counts.iter_mut() {
        if left == 0 {
            break;
        }
        c.1 += 1;
        left -= 1;
    }
    counts.sort_by_key(|&(deg, _, _)| deg);
    counts.into_iter().map(|(deg, c, _)| (deg, c)).collect()
}

/// Samples a Tanner graph of `n` variable nodes from the ensemble by the
/// configuration model, with duplicate edges removed by re-pairing. The
/// same seed reproduces the same graph.
pub fn build_graph(dd: &DegreeDistribution, n: usize, seed: u64) -> Result<TannerGraph> {
    if dd.rate() <= 0.0 {
        return Err(Error::InfeasibleGraph(format!(
            "design rate {:.3} is not positive",
            dd.rate()
        )));
    }
    // node-perspective fractions from the edge-perspective coefficients
    let norm_l: f64 = dd.lambda_coeffs().iter().map(|(&i, &w)| w / i as f64).sum();
    let var_fracs: Vec<(usize, f64)> = dd
        .lambda_coeffs()
        .iter()
        .map(|(&i, &w)| (i, w / i as f64 / norm_l))
        .collect();
    let var_counts = apportion(n, &var_fracs);
    let mut var_degrees = Vec::with_capacity(n);
    for &(deg, count) in &var_counts {
        var_degrees.extend(std::iter::repeat(deg).take(count));
    }
    let n_edges: usize = var_degrees.iter().sum();

    let norm_r: f64 = dd.rho_coeffs().iter().map(|(&i, &w)| w / i as f64).sum();
    let n_checks = (n_edges as f64 * norm_r).round() as usize;
    if n_checks == 0 {
        return Err(Error::InfeasibleGraph("no check nodes".into()));
    }
    let check_fracs: Vec<(usize, f64)> = dd
        .rho_coeffs()
        .iter()
        .map(|(&i, &w)| (i, w / i as f64 / norm_r))
        .collect();
    let check_counts = apportion(n_checks, &check_fracs);
    let mut check_degrees = Vec::with_capacity(n_checks);
    for &(deg, count) in &check_counts {
        check_degrees.extend(std::iter::repeat(deg).take(count));
    }
    // absorb the rounding mismatch on the last check node
    let check_sum: usize = check_degrees.iter().sum();
    if check_sum < n_edges {
        *check_degrees.last_mut().unwrap() += n_edges - check_sum;
    } else if check_sum > n_edges {
        let excess = check_sum - n_edges;
        let last = check_degrees.last_mut().unwrap();
        if *last <= excess {
            return Err(Error::InfeasibleGraph(
                "degree sequence rounding exceeded one node".into(),
            ));
        }
        *last -= excess;
    }

    // pair half-edges
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check_stubs: Vec<u32> = Vec::with_capacity(n_edges);
    for (c, &deg) in check_degrees.iter().enumerate() {
        check_stubs.extend(std::iter::repeat(c as u32).take(deg));
    }
    for i in (1..check_stubs.len()).rev() {
        let j = rng.gen_range(0..=i);
        check_stubs.swap(i, j);
    }
    let mut var_of: Vec<u32> = Vec::with_capacity(n_edges);
    let mut var_start = Vec::with_capacity(n + 1);
    var_start.push(0usize);
    for (v, &deg) in var_degrees.iter().enumerate() {
        var_of.extend(std::iter::repeat(v as u32).take(deg));
        var_start.push(var_start[v] + deg);
    }

    // duplicate-edge cleanup by re-pairing
    let mut chk_of = check_stubs;
    let mut ok = false;
    for _attempt in 0..100 {
        let mut seen = std::collections::HashSet::with_capacity(n_edges);
        let mut dup: Vec<usize> = Vec::new();
        for e in 0..n_edges {
            if !seen.insert((var_of[e], chk_of[e])) {
                dup.push(e);
            }
        }
        if dup.is_empty() {
            ok = true;
            break;
        }
        for e in dup {
            let j = rng.gen_range(0..n_edges);
            chk_of.swap(e, j);
        }
    }
    if !ok {
        return Err(Error::InfeasibleGraph(
            "could not remove duplicate edges in 100 passes".into(),
        ));
    }

    let mut check_edges: Vec<Vec<u32>> = vec![Vec::new(); n_checks];
    for e in 0..n_edges {
        check_edges[chk_of[e] as usize].push(e as u32);
    }
    Ok(TannerGraph {
        n_vars: n,
        n_checks,
        var_of,
        var_start,
        check_edges,
    })
}

/// Decoder settings for one run.
#[derive(Debug, Clone, Copy)]
pub struct DecoderConfig {
    pub rule: CheckRule,
    /// Saturation levels; `None` runs plain BP.
    pub saturation: Option<SaturationConfig>,
    /// Randomized sign flipping of saturated outputs (requires saturation).
    pub flipping: bool,
    /// Switch to the three-message erasure decoder once the fraction of
    /// weak variable nodes drops below this.
    pub erasure_phase: Option<f64>,
    pub max_iters: usize,
    /// Seed for the flipping variates.
    pub seed: u64,
}

impl DecoderConfig {
    pub fn plain_bp(max_iters: usize) -> Self {
        DecoderConfig {
            rule: CheckRule::SumProduct,
            saturation: None,
            flipping: false,
            erasure_phase: None,
            max_iters,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.flipping && self.saturation.is_none() {
            return Err(Error::InvalidConfig {
                field: "flipping".into(),
                msg: "flipping requires saturation".into(),
            });
        }
        Ok(())
    }
}

/// Per-iteration message statistics (fractions over variable-to-check
/// messages).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterStats {
    pub iter: usize,
    pub erased: f64,
    pub negative: f64,
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Hard decisions (0/1 per bit; erased positions decide 0).
    pub bits: Vec<u8>,
    /// Aggregated LLR per bit (0.0 marks an erasure-phase tie).
    pub posteriors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration stats when requested.
    pub stats: Vec<IterStats>,
}

impl DecodeResult {
    /// Bit errors against the all-zero codeword, counting ties as half.
    pub fn bit_errors(&self) -> f64 {
        self.posteriors
            .iter()
            .map(|&l| {
                if l < 0.0 {
                    1.0
                } else if l == 0.0 {
                    0.5
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Flip probability for a saturated message whose pre-saturation magnitude
/// is `x >= k`: chosen so the flipped message is wrong with probability
/// `e^{-k}/(1+e^{-k})`.
pub fn flip_probability(x: f64, k: f64) -> f64 {
    let p_star = (-k).exp() / (1.0 + (-k).exp());
    if x <= k {
        return 0.0;
    }
    if x.is_infinite() {
        return p_star;
    }
    p_star * (-(x - k)).exp_m1() / (-x).exp_m1()
}

/// Sum-product or min-sum extrinsic check outputs for the incoming
/// messages of one check node.
pub fn check_node_outputs(rule: CheckRule, incoming: &[f64], out: &mut Vec<f64>) {
    let d = incoming.len();
    out.clear();
    out.resize(d, 0.0);
    if d == 0 {
        return;
    }
    // prefix/suffix folds over (sign, magnitude)
    let combine = |a: (f64, f64), b: (f64, f64)| -> (f64, f64) {
        let mag = match rule {
            CheckRule::SumProduct => check_pair_magnitude(a.1, b.1),
            CheckRule::MinSum => a.1.min(b.1),
        };
        (a.0 * b.0, mag)
    };
    let id = (1.0, f64::INFINITY);
    let split = |m: f64| -> (f64, f64) { (if m < 0.0 { -1.0 } else { 1.0 }, m.abs()) };

    let mut suffix = vec![id; d + 1];
    for i in (0..d).rev() {
        suffix[i] = combine(split(incoming[i]), suffix[i + 1]);
    }
    let mut prefix = id;
    for i in 0..d {
        let (s, m) = combine(prefix, suffix[i + 1]);
        out[i] = if m == f64::INFINITY { s * LLR_CAP } else { s * m };
        prefix = combine(prefix, split(incoming[i]));
    }
}

/// Decodes one received word (channel LLRs, which must already be saturated
/// to `k_channel` when saturation is enabled).
pub fn decode(g: &TannerGraph, llr_in: &[f64], cfg: &DecoderConfig) -> Result<DecodeResult> {
    cfg.validate()?;
    if llr_in.len() != g.n_vars {
        return Err(Error::InvalidConfig {
            field: "llr_in".into(),
            msg: format!("length {} != {} variables", llr_in.len(), g.n_vars),
        });
    }
    let n_edges = g.n_edges();
    let mut v2c = vec![0.0f64; n_edges];
    let mut c2v = vec![0.0f64; n_edges];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bits = vec![0u8; g.n_vars];
    let mut posteriors = vec![0.0f64; g.n_vars];
    let mut stats = Vec::new();
    let mut erasure_mode = false;
    let mut incoming_buf: Vec<f64> = Vec::new();
    let mut out_buf: Vec<f64> = Vec::new();

    for iter in 1..=cfg.max_iters {
        // variable updates (round 1 sends the channel values: c2v is zero)
        let mut weak = 0usize;
        for v in 0..g.n_vars {
            let range = g.var_edges(v);
            if erasure_mode {
                let total: f64 = c2v[range.clone()].iter().sum();
                posteriors[v] = if total > 0.0 {
                    1.0
                } else if total < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                bits[v] = (posteriors[v] < 0.0) as u8;
                for e in range {
                    let ex = total - c2v[e];
                    v2c[e] = if ex > 0.0 {
                        1.0
                    } else if ex < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
                continue;
            }
            let total: f64 = llr_in[v] + c2v[range.clone()].iter().sum::<f64>();
            posteriors[v] = total;
            bits[v] = (total < 0.0) as u8;
            let z_v: f64 = if cfg.flipping { rng.gen() } else { 1.0 };
            if let Some(sat) = &cfg.saturation {
                if total.abs() < sat.k_var / 2.0 {
                    weak += 1;
                }
            }
            for e in range {
                let raw = total - c2v[e];
                v2c[e] = match &cfg.saturation {
                    None => raw,
                    Some(sat) => {
                        let mut m = raw.clamp(-sat.k_var, sat.k_var);
                        if cfg.flipping
                            && raw.abs() >= sat.k_var
                            && z_v < flip_probability(raw.abs(), sat.k_var)
                        {
                            m = -m;
                        }
                        m
                    }
                };
            }
        }

        let erased = v2c.iter().filter(|&&m| m == 0.0).count() as f64 / n_edges as f64;
        let negative = v2c.iter().filter(|&&m| m < 0.0).count() as f64 / n_edges as f64;
        stats.push(IterStats {
            iter,
            erased,
            negative,
        });

        // syndrome check on the current decisions
        let mut all_ok = true;
        for c in 0..g.n_checks {
            let mut parity = 0u8;
            for &e in g.check_edge_indices(c) {
                parity ^= bits[g.var_of_edge(e as usize)];
            }
            if parity != 0 {
                all_ok = false;
                break;
            }
        }
        // unresolved (zero-LLR) bits decide 0, which would zero the
        // syndrome vacuously on the BEC; they block convergence instead
        let erased_bits = posteriors.iter().any(|&p| p == 0.0);
        if all_ok && !erased_bits {
            return Ok(DecodeResult {
                bits,
                posteriors,
                iterations: iter,
                converged: true,
                stats,
            });
        }

        // check updates
        for c in 0..g.n_checks {
            let edges = g.check_edge_indices(c);
            incoming_buf.clear();
            incoming_buf.extend(edges.iter().map(|&e| v2c[e as usize]));
            if erasure_mode {
                // erasure in → erasure out; otherwise the sign product
                out_buf.clear();
                out_buf.resize(edges.len(), 0.0);
                let zeros = incoming_buf.iter().filter(|&&m| m == 0.0).count();
                let sign_all: f64 = incoming_buf
                    .iter()
                    .filter(|&&m| m != 0.0)
                    .map(|&m| m.signum())
                    .product();
                for (i, &m) in incoming_buf.iter().enumerate() {
                    out_buf[i] = match (zeros, m == 0.0) {
                        (0, _) => sign_all * m.signum(),
                        (1, true) => sign_all,
                        _ => 0.0,
                    };
                }
            } else {
                check_node_outputs(cfg.rule, &incoming_buf, &mut out_buf);
            }
            for (i, &e) in edges.iter().enumerate() {
                c2v[e as usize] = out_buf[i];
            }
        }

        // erasure-phase trigger
        if let (Some(threshold), Some(_), false) = (cfg.erasure_phase, &cfg.saturation, erasure_mode)
        {
            if (weak as f64) / (g.n_vars as f64) < threshold {
                erasure_mode = true;
                for m in c2v.iter_mut() {
                    *m = if *m > 0.0 {
                        1.0
                    } else if *m < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    Ok(DecodeResult {
        bits,
        posteriors,
        iterations: cfg.max_iters,
        converged: false,
        stats,
    })
}

/// One Monte Carlo trial record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub iters: usize,
    pub bit_errors: f64,
    pub converged: bool,
}

/// Aggregated Monte Carlo report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub trials: usize,
    pub n: usize,
    pub ber: f64,
    pub bler: f64,
    pub ber_interval: (f64, f64),
    pub bler_interval: (f64, f64),
    pub per_trial: Vec<TrialRecord>,
    /// Mean per-iteration erased fraction across trials (index = iter-1).
    pub mean_erased: Vec<f64>,
    /// Standard error of the per-trial erased fraction per iteration.
    pub se_erased: Vec<f64>,
}

/// Wilson 95% score interval.
pub fn wilson_interval(successes: f64, total: f64) -> (f64, f64) {
    if total <= 0.0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let p = successes / total;
    let z2 = z * z;
    let denom = 1.0 + z2 / total;
    let center = (p + z2 / (2.0 * total)) / denom;
    let half = z * (p * (1.0 - p) / total + z2 / (4.0 * total * total)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Samples channel LLRs for the all-zero codeword.
pub fn sample_channel_llrs(
    channel: Channel,
    n: usize,
    k_channel: Option<f64>,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let cap = |l: f64| match k_channel {
        Some(k) => l.clamp(-k, k),
        None => l,
    };
    match channel.kind {
        ChannelKind::Bec => (0..n)
            .map(|_| {
                if rng.gen::<f64>() < channel.param {
                    0.0
                } else {
                    cap(LLR_CAP)
                }
            })
            .collect(),
        ChannelKind::Bsc => {
            let l = ((1.0 - channel.param) / channel.param).ln();
            (0..n)
                .map(|_| {
                    if rng.gen::<f64>() < channel.param {
                        cap(-l)
                    } else {
                        cap(l)
                    }
                })
                .collect()
        }
        ChannelKind::BiAwgn => {
            let mean = 2.0 / (channel.param * channel.param);
            let sd = 2.0 / channel.param;
            (0..n)
                .map(|_| {
                    // Box-Muller
                    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.gen::<f64>();
                    let z = (-2.0 * u1.ln()).sqrt()
                        * (2.0 * std::f64::consts::PI * u2).cos();
                    cap(mean + sd * z)
                })
                .collect()
        }
    }
}

/// Runs independent decoding trials over fresh graphs and noise, in
/// parallel, and aggregates error rates. Records are ordered by trial
/// index so output is deterministic for a fixed seed.
pub fn monte_carlo(
    dd: &DegreeDistribution,
    n: usize,
    channel: Channel,
    cfg: &DecoderConfig,
    trials: usize,
    seed: u64,
) -> Result<McReport> {
    cfg.validate()?;
    let k_channel = cfg.saturation.as_ref().map(|s| s.k_channel);
    let results: Vec<Result<(TrialRecord, Vec<IterStats>)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut seed_bytes = [0u8; 32];
            seed_bytes[..8].copy_from_slice(&seed.to_le_bytes());
            seed_bytes[8..16].copy_from_slice(&(trial as u64).to_le_bytes());
            let mut rng = ChaCha8Rng::from_seed(seed_bytes);
            let graph_seed = rng.gen::<u64>();
            let g = build_graph(dd, n, graph_seed)?;
            let llrs = sample_channel_llrs(channel, n, k_channel, &mut rng);
            let mut trial_cfg = *cfg;
            trial_cfg.seed = rng.gen::<u64>();
            let r = decode(&g, &llrs, &trial_cfg)?;
            Ok((
                TrialRecord {
                    trial,
                    iters: r.iterations,
                    bit_errors: r.bit_errors(),
                    converged: r.converged,
                },
                r.stats,
            ))
        })
        .collect();

    let mut per_trial = Vec::with_capacity(trials);
    let mut stats_per_trial = Vec::with_capacity(trials);
    for r in results {
        let (rec, stats) = r?;
        per_trial.push(rec);
        stats_per_trial.push(stats);
    }

    let total_bits = (trials * n) as f64;
    let bit_errors: f64 = per_trial.iter().map(|t| t.bit_errors).sum();
    let block_errors = per_trial.iter().filter(|t| t.bit_errors > 0.0).count() as f64;
    let max_len = stats_per_trial.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut mean_erased = vec![0.0; max_len];
    let mut se_erased = vec![0.0; max_len];
    for i in 0..max_len {
        let vals: Vec<f64> = stats_per_trial
            .iter()
            .map(|s| s.get(i).map(|st| st.erased).unwrap_or(0.0))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (vals.len().saturating_sub(1)).max(1) as f64;
        mean_erased[i] = mean;
        se_erased[i] = (var / vals.len() as f64).sqrt();
    }

    Ok(McReport {
        trials,
        n,
        ber: bit_errors / total_bits,
        bler: block_errors / trials as f64,
        ber_interval: wilson_interval(bit_errors, total_bits),
        bler_interval: wilson_interval(block_errors, trials as f64),
        per_trial,
        mean_erased,
        se_erased,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::de::check_magnitude_bounds;

    fn dd36() -> DegreeDistribution {
        DegreeDistribution::regular(3, 6).unwrap()
    }

    fn sat_cfg(k_var: f64) -> SaturationConfig {
        SaturationConfig {
            k_var,
            k_check: k_var,
            k_channel: k_var,
            k_alt: None,
            tier_ratio: None,
        }
    }

    #[test]
    fn regular_graph_counts() {
        let g = build_graph(&dd36(), 1200, 7).unwrap();
        assert_eq!(g.n_edges(), 3600);
        assert_eq!(g.n_checks, 600);
        assert!((g.realized_lambda(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_graph() {
        let a = build_graph(&dd36(), 300, 42).unwrap();
        let b = build_graph(&dd36(), 300, 42).unwrap();
        assert_eq!(a.var_of, b.var_of);
        assert_eq!(a.check_edges, b.check_edges);
        let c = build_graph(&dd36(), 300, 43).unwrap();
        assert_ne!(a.check_edges, c.check_edges);
    }

    #[test]
    fn no_duplicate_edges() {
        let dd: DegreeDistribution = "irr: l2=0.4,l3=0.6 ; r4=0.5,r6=0.5".parse().unwrap();
        let g = build_graph(&dd, 1000, 3).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in 0..g.n_checks {
            for &e in g.check_edge_indices(c) {
                assert!(seen.insert((g.var_of_edge(e as usize), c)), "duplicate edge");
            }
        }
    }

    #[test]
    fn realized_irregular_profile_close() {
        let dd: DegreeDistribution = "irr: l2=0.4,l3=0.6 ; r6=1.0".parse().unwrap();
        let g = build_graph(&dd, 3000, 5).unwrap();
        let tol = 2.0 / g.n_edges() as f64;
        assert!((g.realized_lambda(2) - 0.4).abs() <= tol + 1e-12);
        assert!((g.realized_lambda(3) - 0.6).abs() <= tol + 1e-12);
    }

    #[test]
    fn consistent_saturated_inputs_converge_immediately() {
        let g = build_graph(&dd36(), 120, 1).unwrap();
        let cfg = DecoderConfig {
            rule: CheckRule::SumProduct,
            saturation: Some(sat_cfg(10.0)),
            flipping: false,
            erasure_phase: None,
            max_iters: 50,
            seed: 0,
        };
        let llrs = vec![10.0; 120];
        let r = decode(&g, &llrs, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn flip_probability_limits() {
        let k: f64 = 8.0;
        let p_star = (-k).exp() / (1.0 + (-k).exp());
        assert_eq!(flip_probability(k, k), 0.0);
        assert!((flip_probability(f64::INFINITY, k) - p_star).abs() < 1e-18);
        assert!((flip_probability(1e9, k) - p_star).abs() < 1e-12);
        let mid = flip_probability(k + 1.0, k);
        assert!(mid > 0.0 && mid < p_star);
    }

    #[test]
    fn check_outputs_respect_magnitude_bounds() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut out = Vec::new();
        for _ in 0..500 {
            let d = rng.gen_range(2..8);
            let incoming: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0.1..20.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 })
                .collect();
            for rule in [CheckRule::SumProduct, CheckRule::MinSum] {
                check_node_outputs(rule, &incoming, &mut out);
                for i in 0..d {
                    let others: Vec<f64> =
                        (0..d).filter(|&j| j != i).map(|j| incoming[j].abs()).collect();
                    let (lo, hi) = check_magnitude_bounds(&others);
                    let m = out[i].abs();
                    assert!(m >= lo - 1e-9 && m <= hi + 1e-9, "{rule:?}: {m} vs [{lo}, {hi}]");
                    // sign is the product of the other signs
                    let sign: f64 = (0..d).filter(|&j| j != i).map(|j| incoming[j].signum()).product();
                    if m > 1e-12 {
                        assert_eq!(out[i].signum(), sign);
                    }
                }
            }
        }
    }

    #[test]
    fn saturated_decode_matches_plain_bp_for_huge_levels() {
        let mut mismatches = 0;
        for seed in 0..20u64 {
            let g = build_graph(&dd36(), 256, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let channel = Channel::new(ChannelKind::Bsc, 0.06).unwrap();
            let llrs = sample_channel_llrs(channel, 256, None, &mut rng);

            let plain = decode(&g, &llrs, &DecoderConfig::plain_bp(8)).unwrap();
            let cfg = DecoderConfig {
                rule: CheckRule::SumProduct,
                saturation: Some(sat_cfg(500.0)),
                flipping: false,
                erasure_phase: None,
                max_iters: 8,
                seed: 0,
            };
            let sat = decode(&g, &llrs, &cfg).unwrap();
            if plain.bits != sat.bits {
                mismatches += 1;
            }
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn decoder_is_symmetric_under_codeword_flips() {
        // variable- and check-node symmetry: flipping the input by a
        // codeword sign pattern flips every message trajectory in lockstep
        let g = build_graph(&dd36(), 64, 9).unwrap();
        let pattern = sample_codeword(&g, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let channel = Channel::new(ChannelKind::Bsc, 0.08).unwrap();
        let cfg = DecoderConfig {
            rule: CheckRule::SumProduct,
            saturation: Some(sat_cfg(12.0)),
            flipping: false,
            erasure_phase: None,
            max_iters: 6,
            seed: 0,
        };
        for _ in 0..20 {
            let llrs = sample_channel_llrs(channel, 64, Some(12.0), &mut rng);
            let flipped: Vec<f64> = llrs
                .iter()
                .zip(&pattern)
                .map(|(&l, &s)| if s == 1 { -l } else { l })
                .collect();
            let a = decode(&g, &llrs, &cfg).unwrap();
            let b = decode(&g, &flipped, &cfg).unwrap();
            for v in 0..64 {
                let pa = a.posteriors[v];
                let pb = b.posteriors[v];
                let expect = if pattern[v] == 1 { -pa } else { pa };
                assert!((pb - expect).abs() < 1e-9, "var {v}: {pb} vs {expect}");
            }
        }
    }

    /// GF(2) codeword of the graph's parity-check matrix, sampled by
    /// Gaussian elimination with a random free assignment.
    fn sample_codeword(g: &TannerGraph, seed: u64) -> Vec<u8> {
        let n = g.n_vars;
        let mut rows: Vec<Vec<u8>> = (0..g.n_checks)
            .map(|c| {
                let mut row = vec![0u8; n];
                for &e in g.check_edge_indices(c) {
                    row[g.var_of_edge(e as usize)] ^= 1;
                }
                row
            })
            .collect();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut r = 0;
        for col in 0..n {
            if let Some(pr) = (r..rows.len()).find(|&i| rows[i][col] == 1) {
                rows.swap(r, pr);
                let pivot_row = rows[r].clone();
                for (i, row) in rows.iter_mut().enumerate() {
                    if i != r && row[col] == 1 {
                        for j in 0..n {
                            row[j] ^= pivot_row[j];
                        }
                    }
                }
                pivots.push((r, col));
                r += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pivot_cols: std::collections::HashSet<usize> =
            pivots.iter().map(|&(_, c)| c).collect();
        let mut word = vec![0u8; n];
        for col in 0..n {
            if !pivot_cols.contains(&col) {
                word[col] = rng.gen_range(0..2u8);
            }
        }
        for &(row, col) in pivots.iter().rev() {
            let mut acc = 0u8;
            for j in 0..n {
                if j != col && rows[row][j] == 1 {
                    acc ^= word[j];
                }
            }
            word[col] = acc;
        }
        // verify
        for c in 0..g.n_checks {
            let mut parity = 0u8;
            for &e in g.check_edge_indices(c) {
                parity ^= word[g.var_of_edge(e as usize)];
            }
            assert_eq!(parity, 0);
        }
        word
    }

    #[test]
    fn monte_carlo_noiseless_is_perfect() {
        let dd = dd36();
        let cfg = DecoderConfig::plain_bp(20);
        let channel = Channel::new(ChannelKind::Bsc, 0.0).unwrap();
        let r = monte_carlo(&dd, 128, channel, &cfg, 10, 5).unwrap();
        assert_eq!(r.ber, 0.0);
        assert_eq!(r.bler, 0.0);
    }

    #[test]
    fn monte_carlo_above_threshold_fails() {
        let dd = dd36();
        let cfg = DecoderConfig::plain_bp(60);
        let channel = Channel::new(ChannelKind::Bec, 0.50).unwrap();
        let r = monte_carlo(&dd, 2048, channel, &cfg, 20, 5).unwrap();
        assert!(r.bler > 0.95, "bler {}", r.bler);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let dd = dd36();
        let cfg = DecoderConfig::plain_bp(30);
        let channel = Channel::new(ChannelKind::Bec, 0.42).unwrap();
        let a = monte_carlo(&dd, 512, channel, &cfg, 8, 11).unwrap();
        let b = monte_carlo(&dd, 512, channel, &cfg, 8, 11).unwrap();
        for (x, y) in a.per_trial.iter().zip(&b.per_trial) {
            assert_eq!(x.bit_errors, y.bit_errors);
            assert_eq!(x.iters, y.iters);
        }
    }

    #[test]
    fn degree_two_instability_in_finite_length() {
        // residual errors decrease with k_var but persist for the cycle
        // ensemble on the BSC
        let dd = DegreeDistribution::regular(2, 4).unwrap();
        let channel = Channel::new(ChannelKind::Bsc, 0.02).unwrap();
        let mut bers = Vec::new();
        for k_var in [10.0, 20.0] {
            let cfg = DecoderConfig {
                rule: CheckRule::SumProduct,
                saturation: Some(sat_cfg(k_var)),
                flipping: false,
                erasure_phase: None,
                max_iters: 60,
                seed: 0,
            };
            let r = monte_carlo(&dd, 2000, channel, &cfg, 10, 3).unwrap();
            bers.push(r.ber);
        }
        assert!(bers[1] <= bers[0]);
        assert!(bers[1] > 0.0);
    }

    #[test]
    fn erasure_phase_decoding_smoke() {
        let g = build_graph(&dd36(), 512, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let channel = Channel::new(ChannelKind::Bsc, 0.03).unwrap();
        let llrs = sample_channel_llrs(channel, 512, Some(10.0), &mut rng);
        let cfg = DecoderConfig {
            rule: CheckRule::SumProduct,
            saturation: Some(sat_cfg(10.0)),
            flipping: false,
            erasure_phase: Some(1e-3),
            max_iters: 50,
            seed: 0,
        };
        let r = decode(&g, &llrs, &cfg).unwrap();
        assert!(r.converged, "erasure-phase decode failed");
        assert!(r.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn flipping_smoke() {
        let g = build_graph(&dd36(), 512, 22).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let channel = Channel::new(ChannelKind::Bsc, 0.03).unwrap();
        let llrs = sample_channel_llrs(channel, 512, Some(10.0), &mut rng);
        let cfg = DecoderConfig {
            rule: CheckRule::SumProduct,
            saturation: Some(sat_cfg(14.0)),
            flipping: true,
            erasure_phase: None,
            max_iters: 50,
            seed: 9,
        };
        let r = decode(&g, &llrs, &cfg).unwrap();
        assert!(r.converged);

        // flipping without saturation is rejected
        let bad = DecoderConfig {
            saturation: None,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }
}
