//! Trial pipeline and per-`n` aggregation.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Resolved};
use crate::bethe::bethe_free_energy;
use crate::bp::{bp_solve, check_high_noise, fixed_point_residual, BpOptions, BpState};
use crate::channel::sample_bsc;
use crate::exact::{log_partition, ExactCaps};
use crate::loops::{
    for_each_loop, verify_loop_identity, Enumeration, GeneralizedLoop, LoopActivities, LoopCaps,
};
use crate::polymer::{
    activity_bound, brydges_criterion, check_polymer_bound, enumerate_small_polymers,
    polymer_partition_by_sets, small_polymer_partition, type_census, PolymerCaps, PolymerType,
};
use crate::tanner::{generate_regular, is_expander, TannerGraph};
use crate::{Error, Result};

/// Above this many edges `Z_p` is computed from polymer sets alone, without
/// the cross-check against the full loop enumeration.
const DUAL_CHECK_MAX_EDGES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Loop-series identity residuals.
    Identity,
    /// Bethe gap versus `n`.
    Theorem1,
    /// Gap after the small-polymer correction.
    Theorem2,
    /// Activity bounds and the Brydges functional.
    Bounds,
    /// Type census of generalized loops.
    Census,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub graph_seed: u64,
    pub channel_seed: u64,
    pub flips: usize,
    pub rank: usize,
    /// `None` when the exhaustive check exceeded its cap.
    pub expander: Option<bool>,
    pub bp_converged: bool,
    pub bp_iterations: usize,
    pub bp_residual: f64,
    pub high_noise: bool,
    pub f_bethe: f64,
    /// `(1/n) ln Z`.
    pub free_energy: f64,
    /// `|(1/n) ln Z − f_Bethe|`.
    pub gap1: f64,
    pub z_p: Option<f64>,
    /// `|(1/n) ln Z − f_Bethe − (1/n) ln Z_p|`.
    pub gap2: Option<f64>,
    pub q: Option<f64>,
    pub polymers: Option<usize>,
    pub loop_residual: Option<f64>,
    /// Small polymers violating the activity bound or the degree inequality.
    pub bound_violations: Option<usize>,
    /// Generalized loops with `|K(g)| > K̄(type(g))`.
    pub dominance_violations: Option<usize>,
    pub census_loops: Option<u64>,
    pub markov_rhs: Option<f64>,
    pub census: Option<BTreeMap<String, u64>>,
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub trials: usize,
    pub mean_gap1: f64,
    pub max_gap1: f64,
    /// Fraction of trials whose expander check completed and held.
    pub expander_fraction: f64,
    /// Trials entering the conditional statistics (verified expanders).
    pub expander_trials: usize,
    pub mean_gap1_expanders: Option<f64>,
    pub mean_gap2_expanders: Option<f64>,
    pub gap2_le_gap1_fraction: Option<f64>,
    pub max_loop_residual: Option<f64>,
    pub max_q: Option<f64>,
    pub bound_violations: Option<usize>,
    pub dominance_violations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub command: Command,
    /// Unit of free energies and gaps.
    pub units: Units,
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    pub resolved: Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ReportConfig,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl Report {
    /// Rescales free energies and gaps from nats to bits. Idempotent.
    pub fn into_bits(mut self) -> Self {
        if self.config.units == Units::Bits {
            return self;
        }
        let k = std::f64::consts::LOG2_E;
        for r in &mut self.records {
            r.f_bethe *= k;
            r.free_energy *= k;
            r.gap1 *= k;
            r.gap2 = r.gap2.map(|x| x * k);
        }
        for a in &mut self.aggregates {
            a.mean_gap1 *= k;
            a.max_gap1 *= k;
            a.mean_gap1_expanders = a.mean_gap1_expanders.map(|x| x * k);
            a.mean_gap2_expanders = a.mean_gap2_expanders.map(|x| x * k);
        }
        self.config.units = Units::Bits;
        self
    }
}

/// Graph and channel seeds of one trial: word `4·trial` of the ChaCha8
/// stream `n` keyed by the master seed. No state is shared between trials.
pub fn trial_seeds(master: u64, n: usize, trial: usize) -> (u64, u64) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(n as u64);
    rng.set_word_pos(4 * trial as u128);
    (rng.next_u64(), rng.next_u64())
}

fn count_dominance_violations(
    g: &TannerGraph,
    act: &LoopActivities,
    h: f64,
    res: &Resolved,
) -> Result<usize> {
    let (l, r) = g.require_regular()?;
    let mut bad = 0usize;
    let mut failure = None;
    for_each_loop(g, Enumeration::Dfs, &LoopCaps::default(), |mask| {
        if mask == 0 || failure.is_some() {
            return;
        }
        let step = || -> Result<bool> {
            let lp = GeneralizedLoop::from_mask(g, mask)?;
            let k = act.weight(g, &lp)?.abs();
            Ok(k > activity_bound(&PolymerType::of_loop(&lp, l, r)?, h, &res.constants)?)
        };
        match step() {
            Ok(true) => bad += 1,
            Ok(false) => {}
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(bad),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    res: &Resolved,
    command: Command,
    n: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let start = cfg.timing.then(Instant::now);
    let (graph_seed, channel_seed) = trial_seeds(cfg.seed, n, trial);
    let g = generate_regular(n, cfg.l, cfg.r, graph_seed)?;
    let channel = sample_bsc(n, res.p, channel_seed)?;
    let fields = channel.fields();
    let h = res.h.abs();
    let rank = g.parity_check_matrix().rank();
    let expander = match is_expander(&g, res.lambda, res.kappa, cfg.expander_cap as u128) {
        Ok(c) => Some(c.holds),
        Err(Error::CapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let sol = bp_solve(&g, &fields, &BpOptions::default())?;
    let msgs = sol.messages;
    let bp_residual = fixed_point_residual(&g, &fields, &msgs)?;
    let high_noise = check_high_noise(&BpState::Finite(msgs.clone()), h, cfg.l, cfg.r, cfg.slack);
    let caps = ExactCaps {
        max_kernel_dim: cfg.max_kernel_dim,
        ..ExactCaps::default()
    };
    let f_bethe = bethe_free_energy(&g, &fields, &msgs)?;
    let free_energy = log_partition(&g, &fields, &caps)? / n as f64;
    let gap1 = (free_energy - f_bethe).abs();
    let mut rec = TrialRecord {
        n,
        trial,
        graph_seed,
        channel_seed,
        flips: channel.flips(),
        rank,
        expander,
        bp_converged: sol.converged,
        bp_iterations: sol.iterations,
        bp_residual,
        high_noise,
        f_bethe,
        free_energy,
        gap1,
        z_p: None,
        gap2: None,
        q: None,
        polymers: None,
        loop_residual: None,
        bound_violations: None,
        dominance_violations: None,
        census_loops: None,
        markov_rhs: None,
        census: None,
        elapsed_ms: None,
    };
    let pcaps = PolymerCaps::default();
    match command {
        Command::Theorem1 => {}
        Command::Identity => {
            rec.loop_residual = Some(verify_loop_identity(&g, &fields, &msgs, &caps)?.residual);
        }
        Command::Theorem2 => {
            let (z_p, polymers) = if g.num_edges() <= DUAL_CHECK_MAX_EDGES {
                let zp = small_polymer_partition(
                    &g,
                    &fields,
                    &msgs,
                    res.lambda,
                    &LoopCaps::default(),
                    &pcaps,
                )?;
                (zp.value(), zp.polymers)
            } else {
                let act = LoopActivities::new(&g, &fields, &msgs)?;
                polymer_partition_by_sets(&g, &act, res.lambda, &pcaps)?
            };
            rec.z_p = Some(z_p);
            rec.polymers = Some(polymers);
            rec.gap2 = Some((free_energy - f_bethe - z_p.ln() / n as f64).abs());
        }
        Command::Bounds => {
            let act = LoopActivities::new(&g, &fields, &msgs)?;
            let polymers = enumerate_small_polymers(&g, res.lambda, &pcaps)?;
            if let Some(c) = res.c {
                let mut bad = 0;
                for p in &polymers {
                    let chk = check_polymer_bound(&g, p, &act, h, c, res.kappa)?;
                    if !(chk.activity_holds && chk.degree_holds) {
                        bad += 1;
                    }
                }
                rec.bound_violations = Some(bad);
            }
            rec.polymers = Some(polymers.len());
            rec.q = Some(brydges_criterion(&g, &fields, &msgs, res.lambda, cfg.zeta0, &pcaps)?.q);
            rec.dominance_violations = match count_dominance_violations(&g, &act, h, res) {
                Ok(v) => Some(v),
                Err(Error::CapExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
        }
        Command::Census => {
            let census = type_census(
                &g,
                res.lambda,
                Some((h, &res.constants)),
                &LoopCaps::default(),
            )?;
            rec.census_loops = Some(census.total_loops);
            rec.markov_rhs = census.markov_rhs;
            rec.census = Some(census.keyed_counts());
        }
    }
    rec.elapsed_ms = start.map(|t| t.elapsed().as_secs_f64() * 1e3);
    Ok(rec)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    (k > 0).then(|| s / k as f64)
}

fn max_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    xs.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
}

fn sum_opt(xs: impl Iterator<Item = Option<usize>>) -> Option<usize> {
    xs.fold(None, |acc, x| match x {
        Some(v) => Some(acc.unwrap_or(0) + v),
        None => acc,
    })
}

/// Per-`n` summaries in config order; statistics conditional on the
/// expander event use only verified expanders.
pub fn aggregate(n_list: &[usize], records: &[TrialRecord]) -> Vec<Aggregate> {
    n_list
        .iter()
        .filter_map(|&n| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            if rs.is_empty() {
                return None;
            }
            let exp: Vec<&&TrialRecord> = rs.iter().filter(|r| r.expander == Some(true)).collect();
            let with_gap2: Vec<&&&TrialRecord> = exp.iter().filter(|r| r.gap2.is_some()).collect();
            Some(Aggregate {
                n,
                trials: rs.len(),
                mean_gap1: mean(rs.iter().map(|r| r.gap1)).unwrap_or(0.0),
                max_gap1: max_of(rs.iter().map(|r| r.gap1)).unwrap_or(0.0),
                expander_fraction: exp.len() as f64 / rs.len() as f64,
                expander_trials: exp.len(),
                mean_gap1_expanders: mean(exp.iter().map(|r| r.gap1)),
                mean_gap2_expanders: mean(with_gap2.iter().filter_map(|r| r.gap2)),
                gap2_le_gap1_fraction: (!with_gap2.is_empty()).then(|| {
                    with_gap2
                        .iter()
                        .filter(|r| r.gap2.is_some_and(|g2| g2 <= r.gap1))
                        .count() as f64
                        / with_gap2.len() as f64
                }),
                max_loop_residual: max_of(rs.iter().filter_map(|r| r.loop_residual)),
                max_q: max_of(rs.iter().filter_map(|r| r.q)),
                bound_violations: sum_opt(rs.iter().map(|r| r.bound_violations)),
                dominance_violations: sum_opt(rs.iter().map(|r| r.dominance_violations)),
            })
        })
        .collect()
}

/// Runs every `(n, trial)` pair, in parallel up to `cfg.workers` threads.
/// Records are ordered by `n` (config order) and trial index.
pub fn run(cfg: &ExperimentConfig, command: Command) -> Result<Report> {
    let resolved = cfg.resolve()?;
    let jobs: Vec<(usize, usize)> = cfg
        .n
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(n, t)| run_trial(cfg, &resolved, command, n, t))
            .collect::<Result<Vec<_>>>()
    };
    let records = match cfg.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let aggregates = aggregate(&cfg.n, &records);
    Ok(Report {
        config: ReportConfig {
            command,
            units: Units::Nats,
            experiment: cfg.clone(),
            resolved,
        },
        records,
        aggregates,
    })
}

pub fn run_identity(cfg: &ExperimentConfig) -> Result<Report> {
    run(cfg, Command::Identity)
}

pub fn run_theorem1_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    run(cfg, Command::Theorem1)
}

pub fn run_theorem2_check(cfg: &ExperimentConfig) -> Result<Report> {
    run(cfg, Command::Theorem2)
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Report> {
    run(cfg, Command::Bounds)
}

pub fn run_census(cfg: &ExperimentConfig) -> Result<Report> {
    run(cfg, Command::Census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn small(n: Vec<usize>, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            l: 3,
            r: 6,
            n,
            trials,
            workers: Some(2),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn seeds_are_counter_based() {
        assert_eq!(trial_seeds(1, 8, 3), trial_seeds(1, 8, 3));
        assert_ne!(trial_seeds(1, 8, 3), trial_seeds(1, 8, 4));
        assert_ne!(trial_seeds(1, 8, 3), trial_seeds(1, 12, 3));
        assert_ne!(trial_seeds(1, 8, 3), trial_seeds(2, 8, 3));
        let (a, b) = trial_seeds(7, 8, 0);
        assert_ne!(a, b);
    }

    #[test]
    fn bits_conversion() {
        let cfg = ExperimentConfig {
            p: None,
            h: Some(0.0),
            ..small(vec![8], 2)
        };
        let nats = run_theorem1_sweep(&cfg).unwrap();
        let bits = nats.clone().into_bits();
        assert_eq!(bits.clone().into_bits(), bits);
        for (a, b) in nats.records.iter().zip(&bits.records) {
            let m = a.n / 2;
            assert!((b.gap1 - (m - a.rank) as f64 / a.n as f64).abs() < 1e-15);
            assert!((b.f_bethe * LN_2 - a.f_bethe).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_trials_is_empty() {
        let rep = run_theorem1_sweep(&small(vec![8], 0)).unwrap();
        assert!(rep.records.is_empty());
        assert!(rep.aggregates.is_empty());
    }

    #[test]
    fn half_noise_gap_is_rank_deficit() {
        let cfg = ExperimentConfig {
            p: None,
            h: Some(0.0),
            ..small(vec![8, 12], 4)
        };
        let rep = run_theorem1_sweep(&cfg).unwrap();
        assert_eq!(rep.records.len(), 8);
        for r in &rep.records {
            let m = r.n / 2;
            let expected = (m - r.rank) as f64 / r.n as f64 * LN_2;
            assert!((r.gap1 - expected).abs() < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn workers_do_not_change_results() {
        let mut cfg = small(vec![8], 3);
        let a = run_theorem1_sweep(&cfg).unwrap();
        cfg.workers = Some(1);
        let b = run_theorem1_sweep(&cfg).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn trial_records_are_independent() {
        let a = run_theorem1_sweep(&small(vec![8], 4)).unwrap();
        let b = run_theorem1_sweep(&small(vec![8], 2)).unwrap();
        assert_eq!(&a.records[..2], &b.records[..]);
    }

    #[test]
    fn theorem2_and_identity_records() {
        let cfg = ExperimentConfig {
            p: None,
            h: Some(0.05),
            lambda: Some(0.9),
            ..small(vec![8], 2)
        };
        let rep = run_theorem2_check(&cfg).unwrap();
        for r in &rep.records {
            let g2 = r.gap2.unwrap();
            let zp = r.z_p.unwrap();
            assert!(g2 <= r.gap1 + (zp.ln() / r.n as f64).abs() + 1e-15);
        }
        let rep = run_identity(&cfg).unwrap();
        assert!(rep.aggregates[0].max_loop_residual.unwrap() < 1e-9);
    }

    #[test]
    fn large_lambda_makes_gap2_vanish() {
        let cfg = ExperimentConfig {
            p: None,
            h: Some(0.05),
            lambda: Some(2.0),
            expander_cap: 0,
            ..small(vec![6], 2)
        };
        let rep = run_theorem2_check(&cfg).unwrap();
        for r in &rep.records {
            assert!(r.gap2.unwrap() < 1e-9, "{r:?}");
            assert_eq!(r.expander, None);
        }
    }

    #[test]
    fn census_and_bounds_records() {
        let cfg = ExperimentConfig {
            p: None,
            h: Some(0.05),
            lambda: Some(0.9),
            kappa: Some(0.5),
            ..small(vec![6], 2)
        };
        let rep = run_census(&cfg).unwrap();
        for r in &rep.records {
            let total: u64 = r.census.as_ref().unwrap().values().sum();
            assert_eq!(Some(total), r.census_loops);
        }
        let rep = run_bounds(&cfg).unwrap();
        assert_eq!(rep.aggregates[0].dominance_violations, Some(0));
        assert!(rep
            .records
            .iter()
            .all(|r| r.q.is_some() && r.bound_violations.is_some()));
    }
}
