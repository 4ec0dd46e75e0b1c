//! The `satde` command-line surface: density evolution runs, threshold
//! search, finite-length simulation, stability reports, lemma verification
//! sweeps and channel inspection.
//!
//! A JSON config file (`--config`) may hold any of the long-flag values;
//! explicit flags win on conflict. All floating-point output is printed
//! with 12 significant digits so regression diffs are meaningful. Exit
//! codes: 0 success, 1 verification assertion failure (with a
//! machine-readable failure record on stdout), 2 validation errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelKind};
use crate::de::{
    self, find_threshold, perturbation_check, run_de, CheckRule, DeMode, DeVariant, StopRule,
};
use crate::density::Density;
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::graph::{self, DecoderConfig};
use crate::grid::{Grid, DEFAULT_SPACING};
use crate::saturation::SaturationConfig;
use crate::stability::{
    capacity_loss, contraction_run, near_stability_window, verify_check_batta_bound,
    verify_pprodineq, BoundMode, BoundParams, MixtureBoundState,
};

/// Formats with 12 significant digits.
fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// Channel specification string: `bec:0.45`, `bsc:0.08`, `biawgn:0.9` or
/// the entropy-parameterized `bsc@h:0.469`.
pub fn parse_channel(s: &str) -> Result<Channel> {
    let err = |msg: &str| Error::Parse {
        input: s.to_string(),
        msg: msg.to_string(),
    };
    let (head, val) = s
        .split_once(':')
        .ok_or_else(|| err("expected <family>:<param>"))?;
    let (kind_str, by_entropy) = match head.strip_suffix("@h") {
        Some(k) => (k, true),
        None => (head, false),
    };
    let kind = parse_kind(kind_str)?;
    let v: f64 = val
        .trim()
        .parse()
        .map_err(|_| err("parameter is not a number"))?;
    if by_entropy {
        Channel::from_entropy(kind, v)
    } else {
        Channel::new(kind, v)
    }
}

pub fn parse_kind(s: &str) -> Result<ChannelKind> {
    match s.trim() {
        "bec" => Ok(ChannelKind::Bec),
        "bsc" => Ok(ChannelKind::Bsc),
        "biawgn" => Ok(ChannelKind::BiAwgn),
        other => Err(Error::Parse {
            input: other.to_string(),
            msg: "expected bec, bsc or biawgn".into(),
        }),
    }
}

fn parse_variant(s: &str) -> Result<DeVariant> {
    match s.trim().to_ascii_lowercase().as_str() {
        "fullbp" => Ok(DeVariant::FullBp),
        "sathard" => Ok(DeVariant::SatHard),
        "satsym" => Ok(DeVariant::SatSymmetric),
        "sattwotier" => Ok(DeVariant::SatTwoTier),
        other => Err(Error::Parse {
            input: other.to_string(),
            msg: "expected fullbp, sathard, satsym or sattwotier".into(),
        }),
    }
}

fn parse_rule(s: &str) -> Result<CheckRule> {
    match s.trim().to_ascii_lowercase().as_str() {
        "sumproduct" | "sp" => Ok(CheckRule::SumProduct),
        "minsum" | "ms" => Ok(CheckRule::MinSum),
        other => Err(Error::Parse {
            input: other.to_string(),
            msg: "expected sumproduct or minsum".into(),
        }),
    }
}

/// File-loadable defaults mirroring the long flags.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: Option<String>,
    pub channel: Option<String>,
    pub mode: Option<String>,
    pub rule: Option<String>,
    pub kvar: Option<f64>,
    pub kchannel: Option<f64>,
    pub tier_ratio: Option<f64>,
    pub iters: Option<usize>,
    pub trials: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub grid_spacing: Option<f64>,
    pub grid_half_range: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "satde",
    about = "Density evolution and simulation for saturated belief-propagation decoding",
    version
)]
pub struct Cli {
    /// JSON config file providing defaults for the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for simulation and verification sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// Ensemble spec, e.g. `reg:3,6` or `irr: l2=0.3,l3=0.7 ; r6=1.0`.
    #[arg(long)]
    pub ensemble: Option<String>,

    /// Channel spec, e.g. `bec:0.42`, `bsc@h:0.469`; bare family for
    /// threshold search.
    #[arg(long)]
    pub channel: Option<String>,

    /// Variable-node saturation level.
    #[arg(long)]
    pub kvar: Option<f64>,

    /// Channel truncation level (defaults to its maximum admissible value).
    #[arg(long)]
    pub kchannel: Option<f64>,

    /// Two-tier ratio λ in (1/2, 1]; sets k_alt = λ k_var.
    #[arg(long)]
    pub tier_ratio: Option<f64>,

    /// Check update rule: sumproduct or minsum.
    #[arg(long)]
    pub rule: Option<String>,

    /// Grid spacing override.
    #[arg(long)]
    pub grid_spacing: Option<f64>,

    /// Grid half range override.
    #[arg(long)]
    pub grid_half_range: Option<f64>,

    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output path for CSV artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run density evolution and write the per-iteration trace.
    De {
        #[command(flatten)]
        common: CommonArgs,
        /// DE variant: fullbp, sathard, satsym, sattwotier.
        #[arg(long)]
        mode: Option<String>,
        /// Iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Track a lockstep full-BP run and record Wasserstein distances.
        #[arg(long, default_value_t = false)]
        track_bp: bool,
    },
    /// Bisect the channel family for the decodability threshold.
    Threshold {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        mode: Option<String>,
        /// Bisection width on the channel parameter.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Finite-length Monte Carlo simulation.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Block length (variable nodes).
        #[arg(long)]
        n: Option<usize>,
        /// Number of independent trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Decoder iteration budget per trial.
        #[arg(long)]
        iters: Option<usize>,
        /// Apply the symmetrizing sign flips to saturated messages.
        #[arg(long, default_value_t = false)]
        flipping: bool,
        /// Weak-node fraction below which decoding switches to the
        /// three-message erasure decoder.
        #[arg(long)]
        erasure_phase: Option<f64>,
    },
    /// Near-stability window and contraction classification.
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Randomized verification sweeps for the analytic inequalities.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// One of: pprod, checkbatta, additive, wasserstein-sat,
        /// de-distance, magbound, capacity-loss.
        #[arg(long)]
        lemma: String,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Print channel functionals and optionally dump the density.
    ChannelInfo {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let (code, record) = classify_error(&e);
            eprintln!("error: {e}");
            if code == 1 {
                println!("{record}");
            }
            code
        }
    }
}

fn classify_error(e: &Error) -> (i32, String) {
    match e {
        Error::BoundViolation {
            what,
            iter,
            measured,
            bound,
        } => (
            1,
            serde_json::json!({
                "failure": what,
                "iter": iter,
                "measured": measured,
                "bound": bound,
            })
            .to_string(),
        ),
        Error::OutOfWindow { what, iter } => (
            1,
            serde_json::json!({"failure": what, "iter": iter}).to_string(),
        ),
        _ => (2, String::new()),
    }
}

struct Resolved {
    dd: Option<DegreeDistribution>,
    channel_spec: Option<String>,
    grid: Grid,
    kvar: Option<f64>,
    kchannel: Option<f64>,
    tier_ratio: Option<f64>,
    rule: CheckRule,
    seed: u64,
    out: Option<PathBuf>,
}

fn resolve(common: &CommonArgs, cfg: &RunConfig) -> Result<Resolved> {
    let ensemble = common.ensemble.clone().or(cfg.ensemble.clone());
    let dd = ensemble
        .map(|s| DegreeDistribution::from_str(&s))
        .transpose()?;
    let kvar = common.kvar.or(cfg.kvar);
    let spacing = common
        .grid_spacing
        .or(cfg.grid_spacing)
        .unwrap_or(DEFAULT_SPACING);
    let half = common
        .grid_half_range
        .or(cfg.grid_half_range)
        .unwrap_or_else(|| kvar.unwrap_or(20.0) + crate::grid::DEFAULT_HEADROOM);
    let rule = match common.rule.clone().or(cfg.rule.clone()) {
        Some(s) => parse_rule(&s)?,
        None => CheckRule::SumProduct,
    };
    Ok(Resolved {
        dd,
        channel_spec: common.channel.clone().or(cfg.channel.clone()),
        grid: Grid::new(spacing, half)?,
        kvar,
        kchannel: common.kchannel.or(cfg.kchannel),
        tier_ratio: common.tier_ratio.or(cfg.tier_ratio),
        rule,
        seed: common.seed.or(cfg.seed).unwrap_or(1),
        out: common.out.clone().or(cfg.out.clone()),
    })
}

fn need<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidConfig {
        field: field.into(),
        msg: "required".into(),
    })
}

fn sat_config_of(r: &Resolved, variant: DeVariant) -> Result<Option<SaturationConfig>> {
    if !variant.is_saturated() {
        return Ok(None);
    }
    let dd = r.dd.as_ref().ok_or_else(|| Error::InvalidConfig {
        field: "ensemble".into(),
        msg: "required".into(),
    })?;
    let kvar = need(r.kvar, "kvar")?;
    let tier = if variant == DeVariant::SatTwoTier {
        Some(r.tier_ratio.unwrap_or(0.75))
    } else {
        r.tier_ratio
    };
    Ok(Some(de::saturation_config(
        &r.grid, dd, r.rule, kvar, r.kchannel, tier,
    )?))
}

fn dispatch(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(jobs) = cli.jobs.or(cfg.jobs) {
        // ignore failure if a pool already exists (tests, repeated calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    match cli.command {
        Command::De {
            common,
            mode,
            iters,
            track_bp,
        } => {
            let r = resolve(&common, &cfg)?;
            let variant = parse_variant(&mode.or(cfg.mode.clone()).unwrap_or_else(|| "fullbp".into()))?;
            let mode = DeMode::new(variant, r.rule);
            let dd = need(r.dd.clone(), "ensemble")?;
            let channel = parse_channel(&need(r.channel_spec.clone(), "channel")?)?;
            let density = channel.density(r.grid)?;
            let sat = sat_config_of(&r, variant)?;
            let iters = iters.or(cfg.iters).unwrap_or(500);
            let stop = StopRule::for_threshold(mode, sat.as_ref(), iters);
            let trace = run_de(mode, &dd, &density, sat.as_ref(), &stop, track_bp)?;
            if let Some(path) = &r.out {
                write_trace_csv(path, &trace)?;
            }
            println!(
                "de {} {}: outcome {:?} after {} iters, B {}, Pe {}",
                variant.name(),
                channel.kind.name(),
                trace.outcome,
                trace.rows.len() - 1,
                sig(trace.final_b()),
                sig(trace.final_pe()),
            );
            Ok(0)
        }
        Command::Threshold {
            common,
            mode,
            tol,
            iters,
        } => {
            let r = resolve(&common, &cfg)?;
            let variant = parse_variant(&mode.or(cfg.mode.clone()).unwrap_or_else(|| "fullbp".into()))?;
            let mode = DeMode::new(variant, r.rule);
            let dd = need(r.dd.clone(), "ensemble")?;
            let kind = parse_kind(&need(r.channel_spec.clone(), "channel")?)?;
            let sat = sat_config_of(&r, variant)?;
            let tol = tol.or(cfg.tol).unwrap_or(5e-4);
            let iters = iters.or(cfg.iters).unwrap_or(5000);
            let res = find_threshold(mode, &dd, kind, r.grid, sat.as_ref(), tol, iters)?;
            println!(
                "threshold {} {}: [{}, {}] midpoint {}",
                variant.name(),
                kind.name(),
                sig(res.lo),
                sig(res.hi),
                sig(res.mid),
            );
            Ok(0)
        }
        Command::Simulate {
            common,
            n,
            trials,
            iters,
            flipping,
            erasure_phase,
        } => {
            let r = resolve(&common, &cfg)?;
            let dd = need(r.dd.clone(), "ensemble")?;
            let channel = parse_channel(&need(r.channel_spec.clone(), "channel")?)?;
            let n = need(n.or(cfg.n), "n")?;
            let trials = trials.or(cfg.trials).unwrap_or(100);
            let sat = match r.kvar {
                Some(kvar) => Some(de::saturation_config(
                    &r.grid,
                    &dd,
                    r.rule,
                    kvar,
                    r.kchannel,
                    r.tier_ratio,
                )?),
                None => None,
            };
            let dec = DecoderConfig {
                rule: r.rule,
                saturation: sat,
                flipping,
                erasure_phase,
                max_iters: iters.or(cfg.iters).unwrap_or(100),
                seed: 0,
            };
            let report = graph::monte_carlo(&dd, n, channel, &dec, trials, r.seed)?;
            if let Some(path) = &r.out {
                write_mc_csv(path, &report)?;
            }
            println!(
                "simulate {} n={} trials={}: BER {} in [{}, {}], BLER {} in [{}, {}]",
                channel.kind.name(),
                n,
                trials,
                sig(report.ber),
                sig(report.ber_interval.0),
                sig(report.ber_interval.1),
                sig(report.bler),
                sig(report.bler_interval.0),
                sig(report.bler_interval.1),
            );
            Ok(0)
        }
        Command::Stability { common, iters } => {
            let r = resolve(&common, &cfg)?;
            let dd = need(r.dd.clone(), "ensemble")?;
            let channel = parse_channel(&need(r.channel_spec.clone(), "channel")?)?;
            let density = channel.density(r.grid)?;
            let kvar = need(r.kvar, "kvar")?;
            let margin =
                crate::stability::stability_margin(&dd, &density, r.kchannel);
            println!("stability margin λ'(0) ρ'(1) (B + slack): {}", sig(margin));
            let window = near_stability_window(&dd, &density, kvar)?;
            println!(
                "window: x* {}, g(x*) {}, f(x*) {}, k_min {}, residual {} (C = {})",
                sig(window.x_star),
                sig(window.g_at_xstar),
                sig(window.f_at_xstar),
                sig(window.k_min),
                sig(window.residual_bound),
                sig(window.c_dmin),
            );
            if dd.min_var_degree() >= 3 {
                let sat = de::saturation_config(&r.grid, &dd, r.rule, kvar, r.kchannel, r.tier_ratio)?;
                let mode = if r.tier_ratio.is_some() {
                    BoundMode::TwoTier
                } else if dd.min_var_degree() >= 5 {
                    BoundMode::HighDegree
                } else {
                    BoundMode::General
                };
                let params = BoundParams::new(&dd, &sat, density.bhattacharyya(), mode)?;
                let start = MixtureBoundState::new(
                    (-kvar / 2.0).exp(),
                    0.4 * (-kvar).exp(),
                );
                let report = contraction_run(&start, &params, iters.or(cfg.iters).unwrap_or(25))?;
                println!(
                    "contraction ({mode:?}): rate {}, loglog slope {}, doubly exponential {}, required exponent {}",
                    sig(report.rate_exponent),
                    sig(report.loglog_slope),
                    report.doubly_exponential,
                    sig(report.required_exponent),
                );
            }
            Ok(0)
        }
        Command::Verify {
            common,
            lemma,
            trials,
        } => {
            let r = resolve(&common, &cfg)?;
            let trials = trials.or(cfg.trials).unwrap_or(1000);
            run_verify(&lemma, trials, &r)
        }
        Command::ChannelInfo { common } => {
            let r = resolve(&common, &cfg)?;
            let channel = parse_channel(&need(r.channel_spec.clone(), "channel")?)?;
            let density = channel.density(r.grid)?;
            let f = density.functionals();
            println!(
                "{} param {}: entropy {}, B {}, H {}, Pe {}",
                channel.kind.name(),
                sig(channel.param),
                sig(channel.entropy()),
                sig(f.bhattacharyya),
                sig(f.entropy),
                sig(f.error_prob),
            );
            if let Some(path) = &r.out {
                std::fs::write(path, density.dump_json())?;
                println!("density dumped to {}", path.display());
            }
            Ok(0)
        }
    }
}

fn write_trace_csv(path: &PathBuf, trace: &crate::de::DeTrace) -> Result<()> {
    let mut s = String::from("iter,B,H,Pe,gamma_p,gbar_Bm,wasserstein_to_bp\n");
    let opt = |v: Option<f64>| v.map(sig).unwrap_or_else(|| "nan".into());
    for row in &trace.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            row.iter,
            sig(row.funcs.bhattacharyya),
            sig(row.funcs.entropy),
            sig(row.funcs.error_prob),
            opt(row.gamma_p),
            opt(row.gbar_bm),
            opt(row.wasserstein_to_bp),
        );
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_mc_csv(path: &PathBuf, report: &crate::graph::McReport) -> Result<()> {
    let mut s = String::from("trial,iters,bit_errors,converged\n");
    for t in &report.per_trial {
        let _ = writeln!(s, "{},{},{},{}", t.trial, t.iters, sig(t.bit_errors), t.converged);
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Runs one verification sweep; prints a pass line with the worst slack or
/// returns a bound-violation error (exit code 1).
fn run_verify(lemma: &str, trials: usize, r: &Resolved) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut worst = f64::INFINITY;
    match lemma {
        "pprod" => {
            for i in 0..trials {
                let n = rng.gen_range(1..8);
                let ps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                let prod: f64 = ps.iter().map(|&p| 1.0 - 2.0 * p).product();
                let slack = ps.iter().sum::<f64>() - (1.0 - prod) / 2.0;
                worst = worst.min(slack);
                if !verify_pprodineq(&ps) {
                    return Err(Error::BoundViolation {
                        what: "pprod".into(),
                        iter: i,
                        measured: (1.0 - prod) / 2.0,
                        bound: ps.iter().sum(),
                    });
                }
            }
        }
        "checkbatta" | "additive" => {
            for i in 0..trials {
                let (n_atoms, k) = if lemma == "additive" {
                    (0, 10.0)
                } else {
                    (rng.gen_range(0..3), rng.gen_range(1.0..20.0))
                };
                let ps: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.0..0.5)).collect();
                let n_dens = rng.gen_range(1..4);
                let others: Vec<Vec<(f64, f64)>> = (0..n_dens)
                    .map(|_| {
                        let q: f64 = rng.gen_range(0.0..0.5);
                        let z: f64 = rng.gen_range(0.1..25.0);
                        vec![(-z, q), (z, 1.0 - q)]
                    })
                    .collect();
                let rep = verify_check_batta_bound(&ps, k, &others).map_err(|e| match e {
                    Error::BoundViolation { what, measured, bound, .. } => Error::BoundViolation {
                        what,
                        iter: i,
                        measured,
                        bound,
                    },
                    other => other,
                })?;
                worst = worst.min(rep.slack);
            }
        }
        "wasserstein-sat" => {
            for i in 0..trials {
                let a = Density::random_symmetric(r.grid, &mut rng, 10);
                let k = [1.0, 2.0, 4.0, 8.0][i % 4];
                let sym = crate::saturation::symmetric_saturate(&a, k)?;
                let bound = 1.0 - (k / 2.0f64).tanh() + 5.0 * r.grid.spacing();
                let d = a.wasserstein(&sym);
                worst = worst.min(bound - d);
                if d > bound {
                    return Err(Error::BoundViolation {
                        what: "wasserstein-sat".into(),
                        iter: i,
                        measured: d,
                        bound,
                    });
                }
            }
        }
        "de-distance" => {
            let dd = r
                .dd
                .clone()
                .unwrap_or_else(|| DegreeDistribution::regular(3, 6).unwrap());
            let spec = r.channel_spec.clone().unwrap_or_else(|| "bec:0.40".into());
            let channel = parse_channel(&spec)?.density(r.grid)?;
            let kvar = r.kvar.unwrap_or(12.0);
            let ell = 5.min(trials.max(1));
            let report = perturbation_check(&dd, &channel, kvar, ell, r.grid.spacing() * 1e-3)?;
            for row in &report.rows {
                worst = worst
                    .min(row.wasserstein_bound - row.wasserstein)
                    .min(row.b_bound - row.b_sym);
            }
        }
        "magbound" => {
            for i in 0..trials {
                let n = rng.gen_range(2..7);
                let mags: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..30.0)).collect();
                let (lo, hi) = de::check_magnitude_bounds(&mags);
                for rule in [CheckRule::SumProduct, CheckRule::MinSum] {
                    let out = de::check_output_magnitude(rule, &mags);
                    worst = worst.min(out - lo).min(hi - out);
                    if out < lo - 1e-9 || out > hi + 1e-9 {
                        return Err(Error::BoundViolation {
                            what: format!("magbound ({rule:?})"),
                            iter: i,
                            measured: out,
                            bound: if out < lo { lo } else { hi },
                        });
                    }
                }
            }
        }
        "capacity-loss" => {
            let mut cases = Vec::new();
            for eps in [0.02, 0.05, 0.1, 0.2, 0.3, 0.4] {
                cases.push(Channel::new(ChannelKind::Bsc, eps)?);
            }
            for sigma in [0.8, 0.9, 1.1, 1.4, 2.0] {
                cases.push(Channel::new(ChannelKind::BiAwgn, sigma)?);
            }
            for (i, ch) in cases.iter().enumerate() {
                let density = ch.density(r.grid)?;
                for k in [5.0, 10.0, 15.0] {
                    let rep = capacity_loss(&density, k)?;
                    let loss = rep.h_truncated - rep.h_channel;
                    let bound = rep.bound + 1e-6;
                    worst = worst.min(bound - loss);
                    if loss > bound {
                        return Err(Error::BoundViolation {
                            what: format!("capacity-loss ({} {})", ch.kind.name(), ch.param),
                            iter: i,
                            measured: loss,
                            bound,
                        });
                    }
                }
            }
        }
        other => {
            return Err(Error::InvalidConfig {
                field: "lemma".into(),
                msg: format!(
                    "unknown lemma `{other}`; expected pprod, checkbatta, additive, \
                     wasserstein-sat, de-distance, magbound or capacity-loss"
                ),
            })
        }
    }
    println!("verify {lemma}: PASS over {trials} trials, worst slack {}", sig(worst));
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_spec_parsing() {
        let c = parse_channel("bec:0.45").unwrap();
        assert_eq!(c.kind, ChannelKind::Bec);
        assert!((c.param - 0.45).abs() < 1e-15);

        let c = parse_channel("bsc@h:0.469").unwrap();
        assert_eq!(c.kind, ChannelKind::Bsc);
        assert!((c.entropy() - 0.469).abs() < 1e-6);

        assert!(parse_channel("foo:0.3").is_err());
        assert!(parse_channel("bsc:0.7").is_err());
        assert!(parse_channel("bsc").is_err());
    }

    #[test]
    fn mode_and_rule_parsing() {
        assert_eq!(parse_variant("satsym").unwrap(), DeVariant::SatSymmetric);
        assert!(parse_variant("nope").is_err());
        assert_eq!(parse_rule("minsum").unwrap(), CheckRule::MinSum);
    }

    #[test]
    fn significant_digit_format() {
        assert_eq!(sig(0.42944), "4.29440000000e-1");
    }

    #[test]
    fn config_file_roundtrip() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"ensemble": "reg:3,6", "kvar": 20.0, "seed": 7}"#).unwrap();
        assert_eq!(cfg.ensemble.as_deref(), Some("reg:3,6"));
        assert_eq!(cfg.seed, Some(7));
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
