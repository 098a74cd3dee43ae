//! Seeded Monte Carlo execution, scheme comparison, and CSV emission.
//!
//! A *drop* is one end-to-end realization: topology, channel fading, cache
//! placement, subchannel matching, power game, metrics. Drop `i` of a run
//! uses seed `base_seed + i`, and the whole pipeline is a pure function of
//! (config, seed), so paired schemes see identical topologies and fading
//! and the emitted CSV is reproducible byte for byte (wall-clock columns
//! aside). Drops execute in parallel; output rows are ordered by
//! (sweep value, scheme, q, seed) regardless of execution interleaving.

use crate::caching::{content_popularity, place_cache_with_skew};
use crate::channel::draw_channel_gains;
use crate::config::{Scheme, SchemeVariant, SimConfig, SweepParam};
use crate::matching::{run_matching, run_matching_with_power, MatchingRun};
use crate::noma::{macro_interference, rate_report};
use crate::power_game::run_power_game;
use crate::topology::{generate_topology, TopologyError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Exact CSV header; summary rows append `mean,ci95` for the net utility.
pub const CSV_HEADER: &str = "sweep_param,sweep_value,scheme,q,seed,total_net_utility_bps,\
sum_rate_bps,max_mue_interference_w,game_converged,inner_iters,outer_iters,proposals,wall_ms";

/// Metrics of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub seed: u64,
    pub scheme: Scheme,
    pub q: usize,
    pub total_net_utility_bps: f64,
    pub sum_rate_bps: f64,
    pub max_mue_interference_w: f64,
    pub game_converged: bool,
    pub inner_iters: usize,
    pub outer_iters: usize,
    pub proposals: usize,
    /// Excluded from all determinism guarantees.
    pub wall_ms: f64,
}

/// Runs the full pipeline for one seed under the configured scheme.
///
/// OFDMA forces `q = q_ue = 1`; NOMA uses the configured quotas. The RNG
/// stream is consumed in a fixed order (topology, then channel, then the
/// optional cache skew), so schemes sharing a seed share the scenario.
pub fn run_drop(cfg: &SimConfig, seed: u64) -> Result<DropResult, TopologyError> {
    run_drop_with_variant(
        cfg,
        SchemeVariant {
            scheme: cfg.scheme,
            q: cfg.q,
        },
        seed,
    )
}

/// [`run_drop`] under an explicit scheme variant (used by sweeps).
pub fn run_drop_with_variant(
    cfg: &SimConfig,
    variant: SchemeVariant,
    seed: u64,
) -> Result<DropResult, TopologyError> {
    let start = Instant::now();
    let (q, q_ue) = match variant.scheme {
        Scheme::Noma => (variant.q, cfg.q_ue),
        Scheme::Ofdma => (1, 1),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topology = generate_topology(&cfg.geometry, &mut rng)?;
    let ch = draw_channel_gains(&topology, &cfg.spectrum, &cfg.channel, &mut rng);
    let pop = content_popularity(cfg.cache.n_contents, cfg.cache.zipf_exponent);
    let cache = place_cache_with_skew(&pop, &cfg.cache, &topology, &mut rng);

    let mut matching_run = run_matching(&ch, &cache, &cfg.game, q, q_ue);
    let mut game = run_power_game(&matching_run.matching, &ch, &cache, &cfg.game);

    if cfg.two_pass_matching && !game.powers.is_empty() {
        // Second pass: the equal-power proxy is replaced by the mean
        // converged pair power from the first game.
        let mean_power = game.powers.iter().map(|(_, &p)| p).sum::<f64>()
            / game.powers.len() as f64;
        if mean_power > 0.0 {
            let second: MatchingRun =
                run_matching_with_power(&ch, &cache, &cfg.game, q, q_ue, mean_power);
            let proposals = matching_run.proposals + second.proposals;
            matching_run = second;
            matching_run.proposals = proposals;
            game = run_power_game(&matching_run.matching, &ch, &cache, &cfg.game);
        }
    }

    let report = rate_report(&matching_run.matching, &game.powers, &ch);
    let interference = macro_interference(&matching_run.matching, &game.powers, &ch);

    Ok(DropResult {
        seed,
        scheme: variant.scheme,
        q,
        total_net_utility_bps: game.total_net_utility(),
        sum_rate_bps: report.sum_rate_bps(),
        max_mue_interference_w: interference.max_entry_w(),
        game_converged: game.converged,
        inner_iters: game.inner_iterations,
        outer_iters: game.outer_iterations,
        proposals: matching_run.proposals,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// One emitted data row: a drop tagged with its sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_param: String,
    pub sweep_value: u64,
    pub drop: DropResult,
}

/// Applies one sweep value to a copy of the config.
pub fn apply_sweep_value(cfg: &SimConfig, param: SweepParam, value: u64) -> SimConfig {
    let mut out = cfg.clone();
    match param {
        SweepParam::NFaps => out.geometry.n_faps = value as usize,
        SweepParam::NFuesPerFap => out.geometry.n_fues_per_fap = value as usize,
        SweepParam::NMues => out.geometry.n_mues = value as usize,
        SweepParam::Q => out.q = value as usize,
    }
    out
}

/// Runs every (sweep value, scheme variant, seed) combination.
///
/// Without a sweep in the config, a single pseudo-point labeled `none` is
/// run. Drops are independent and execute in parallel; the returned rows
/// are sorted by (sweep value, scheme, q, seed).
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<SweepRow>, TopologyError> {
    let points: Vec<(String, u64, SimConfig)> = match &cfg.sweep {
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| {
                (
                    sweep.param.name().to_string(),
                    v,
                    apply_sweep_value(cfg, sweep.param, v),
                )
            })
            .collect(),
        None => vec![("none".to_string(), 0, cfg.clone())],
    };
    let variants = cfg.effective_variants();

    let mut tasks = Vec::new();
    for (param, value, point_cfg) in &points {
        for &variant in &variants {
            for i in 0..cfg.n_drops {
                tasks.push((param.clone(), *value, point_cfg, variant, cfg.base_seed + i as u64));
            }
        }
    }

    let mut rows = tasks
        .into_par_iter()
        .map(|(param, value, point_cfg, variant, seed)| {
            run_drop_with_variant(point_cfg, variant, seed).map(|drop| SweepRow {
                sweep_param: param,
                sweep_value: value,
                drop,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    sort_rows(&mut rows);
    Ok(rows)
}

/// Canonical emission order.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        (a.sweep_value, a.drop.scheme, a.drop.q, a.drop.seed).cmp(&(
            b.sweep_value,
            b.drop.scheme,
            b.drop.q,
            b.drop.seed,
        ))
    });
}

/// Sample mean and 95% confidence half-width (normal approximation).
pub fn mean_and_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

fn render_data_row(row: &SweepRow) -> String {
    let d = &row.drop;
    format!(
        "{},{},{},{},{},{},{},{:e},{},{},{},{},{:.3}",
        row.sweep_param,
        row.sweep_value,
        d.scheme,
        d.q,
        d.seed,
        d.total_net_utility_bps,
        d.sum_rate_bps,
        d.max_mue_interference_w,
        d.game_converged,
        d.inner_iters,
        d.outer_iters,
        d.proposals,
        d.wall_ms,
    )
}

/// Renders the CSV report: header, sorted data rows, then one summary row
/// per (sweep value, scheme, q) group with `seed=summary`, column means in
/// the data columns and the net-utility mean and 95% half-width appended.
pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut sorted: Vec<SweepRow> = rows.to_vec();
    sort_rows(&mut sorted);

    let mut out = String::with_capacity(128 * (sorted.len() + 8));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &sorted {
        out.push_str(&render_data_row(row));
        out.push('\n');
    }

    // Group boundaries over the sorted rows.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        let boundary = i == sorted.len() || {
            let (a, b) = (&sorted[i - 1], &sorted[i]);
            (a.sweep_value, a.drop.scheme, a.drop.q, a.sweep_param.as_str())
                != (b.sweep_value, b.drop.scheme, b.drop.q, b.sweep_param.as_str())
        };
        if boundary {
            groups.push((start, i));
            start = i;
        }
    }

    for (lo, hi) in groups {
        let group = &sorted[lo..hi];
        let n = group.len() as f64;
        let utilities: Vec<f64> =
            group.iter().map(|r| r.drop.total_net_utility_bps).collect();
        let (mean_u, ci95) = mean_and_ci95(&utilities);
        let mean_rate = group.iter().map(|r| r.drop.sum_rate_bps).sum::<f64>() / n;
        let mean_interference =
            group.iter().map(|r| r.drop.max_mue_interference_w).sum::<f64>() / n;
        let converged_frac =
            group.iter().filter(|r| r.drop.game_converged).count() as f64 / n;
        let mean_inner = group.iter().map(|r| r.drop.inner_iters as f64).sum::<f64>() / n;
        let mean_outer = group.iter().map(|r| r.drop.outer_iters as f64).sum::<f64>() / n;
        let mean_proposals = group.iter().map(|r| r.drop.proposals as f64).sum::<f64>() / n;
        let mean_wall = group.iter().map(|r| r.drop.wall_ms).sum::<f64>() / n;
        let head = &group[0];
        out.push_str(&format!(
            "{},{},{},{},summary,{},{},{:e},{},{},{},{},{:.3},{},{}\n",
            head.sweep_param,
            head.sweep_value,
            head.drop.scheme,
            head.drop.q,
            mean_u,
            mean_rate,
            mean_interference,
            converged_frac,
            mean_inner,
            mean_outer,
            mean_proposals,
            mean_wall,
            mean_u,
            ci95,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, Sweep};

    fn tiny_config() -> SimConfig {
        let mut cfg = parse_config(
            "n_faps = 2\nn_fues_per_fap = 3\nn_subchannels = 6\nn_drops = 3\nbase_seed = 10\n",
        )
        .unwrap();
        cfg.game.max_outer_iters = 4;
        cfg
    }

    #[test]
    fn empty_network_yields_zero_metrics() {
        let cfg = parse_config("n_faps = 0\nn_drops = 1\n").unwrap();
        let drop = run_drop(&cfg, 1).unwrap();
        assert_eq!(drop.total_net_utility_bps, 0.0);
        assert_eq!(drop.sum_rate_bps, 0.0);
        assert_eq!(drop.max_mue_interference_w, 0.0);
        assert_eq!(drop.proposals, 0);
        assert!(drop.game_converged);
    }

    #[test]
    fn same_seed_reproduces_drop_exactly() {
        let cfg = tiny_config();
        let a = run_drop(&cfg, 42).unwrap();
        let b = run_drop(&cfg, 42).unwrap();
        assert_eq!(a.total_net_utility_bps.to_bits(), b.total_net_utility_bps.to_bits());
        assert_eq!(a.sum_rate_bps.to_bits(), b.sum_rate_bps.to_bits());
        assert_eq!(a.max_mue_interference_w.to_bits(), b.max_mue_interference_w.to_bits());
        assert_eq!(a.inner_iters, b.inner_iters);
        assert_eq!(a.proposals, b.proposals);
    }

    #[test]
    fn sweep_row_counts_match_the_grid() {
        let mut cfg = tiny_config();
        cfg.sweep = Some(Sweep {
            param: SweepParam::NFuesPerFap,
            values: vec![2, 3],
        });
        cfg.sweep_schemes = vec![
            SchemeVariant { scheme: Scheme::Noma, q: 2 },
            SchemeVariant { scheme: Scheme::Ofdma, q: 1 },
        ];
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        // header + data + one summary per (value, scheme)
        assert_eq!(lines.len(), 1 + 12 + 4);
        assert_eq!(lines[0], CSV_HEADER);
        let summaries = lines.iter().filter(|l| l.contains(",summary,")).count();
        assert_eq!(summaries, 4);
    }

    #[test]
    fn summary_means_match_recomputation_from_rows() {
        let cfg = tiny_config();
        let rows = run_sweep(&cfg).unwrap();
        let csv = render_csv(&rows);
        let data: Vec<Vec<&str>> = csv
            .lines()
            .skip(1)
            .filter(|l| !l.contains(",summary,"))
            .map(|l| l.split(',').collect())
            .collect();
        let summary: Vec<&str> = csv
            .lines()
            .find(|l| l.contains(",summary,"))
            .unwrap()
            .split(',')
            .collect();
        let utilities: Vec<f64> = data.iter().map(|f| f[5].parse().unwrap()).collect();
        let mean = utilities.iter().sum::<f64>() / utilities.len() as f64;
        let emitted: f64 = summary[5].parse().unwrap();
        assert!((emitted - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        // appended mean column equals the utility mean column
        let appended: f64 = summary[13].parse().unwrap();
        assert_eq!(emitted.to_bits(), appended.to_bits());
    }

    #[test]
    fn ofdma_variant_forces_unit_quotas() {
        let cfg = tiny_config();
        let drop = run_drop_with_variant(
            &cfg,
            SchemeVariant { scheme: Scheme::Ofdma, q: 5 },
            7,
        )
        .unwrap();
        assert_eq!(drop.q, 1);
        assert_eq!(drop.scheme, Scheme::Ofdma);
    }

    #[test]
    fn mean_and_ci_basics() {
        let (mean, ci) = mean_and_ci95(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(mean, 2.0);
        assert_eq!(ci, 0.0);
        let (mean, ci) = mean_and_ci95(&[1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!(ci > 0.0);
        assert_eq!(mean_and_ci95(&[]), (0.0, 0.0));
        assert_eq!(mean_and_ci95(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn two_pass_matching_stays_deterministic() {
        let mut cfg = tiny_config();
        cfg.two_pass_matching = true;
        let a = run_drop(&cfg, 3).unwrap();
        let b = run_drop(&cfg, 3).unwrap();
        assert_eq!(a.total_net_utility_bps.to_bits(), b.total_net_utility_bps.to_bits());
        // Proposals accumulate across both passes.
        let mut single = tiny_config();
        single.two_pass_matching = false;
        let c = run_drop(&single, 3).unwrap();
        assert!(a.proposals >= c.proposals);
    }
}
