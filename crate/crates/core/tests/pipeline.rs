//! End-to-end pipeline checks that cut across modules: paired scheme
//! comparisons on the default scenario, CSV row arithmetic, and the
//! OFDMA no-superposition guarantee.

use noma_fran::caching::{content_popularity, place_cache};
use noma_fran::channel::draw_channel_gains;
use noma_fran::config::{parse_config, Scheme, SchemeVariant, Sweep, SweepParam};
use noma_fran::harness::{render_csv, run_drop, run_drop_with_variant, run_sweep, CSV_HEADER};
use noma_fran::matching::run_matching;
use noma_fran::topology::generate_topology;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn noma_beats_ofdma_on_most_default_seeds() {
    // Default scenario (10 F-UEs per F-AP), 100 paired seeds.
    let cfg = parse_config("").unwrap();
    let noma = SchemeVariant { scheme: Scheme::Noma, q: 2 };
    let ofdma = SchemeVariant { scheme: Scheme::Ofdma, q: 1 };
    let mut wins = 0;
    for i in 0..100u64 {
        let seed = 1 + i;
        let n = run_drop_with_variant(&cfg, noma, seed).unwrap();
        let o = run_drop_with_variant(&cfg, ofdma, seed).unwrap();
        if n.total_net_utility_bps >= o.total_net_utility_bps {
            wins += 1;
        }
    }
    assert!(wins >= 90, "noma won only {wins}/100 paired seeds");
}

#[test]
fn sweep_emits_values_times_schemes_times_drops_rows() {
    let mut cfg = parse_config(
        "n_faps = 2\nn_fues_per_fap = 3\nn_subchannels = 5\nn_drops = 2\nbase_seed = 9\n",
    )
    .unwrap();
    cfg.sweep = Some(Sweep {
        param: SweepParam::NFuesPerFap,
        values: vec![2, 3, 4],
    });
    cfg.sweep_schemes = vec![
        SchemeVariant { scheme: Scheme::Noma, q: 2 },
        SchemeVariant { scheme: Scheme::Noma, q: 3 },
        SchemeVariant { scheme: Scheme::Ofdma, q: 1 },
    ];
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 3 * 3 * 2, "values x schemes x drops");

    let csv = render_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    let data = lines.iter().filter(|l| !l.contains(",summary,")).count() - 1;
    let summaries = lines.iter().filter(|l| l.contains(",summary,")).count();
    assert_eq!(data, 18);
    assert_eq!(summaries, 9, "one summary row per (value, scheme)");
    // Summary rows carry the two appended columns.
    let summary = lines.iter().find(|l| l.contains(",summary,")).unwrap();
    assert_eq!(summary.split(',').count(), CSV_HEADER.split(',').count() + 2);
}

#[test]
fn ofdma_never_superposes_and_reports_match() {
    let cfg = parse_config("n_faps = 3\nn_fues_per_fap = 6\nn_subchannels = 8\n").unwrap();
    for seed in [11u64, 12, 13] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topology = generate_topology(&cfg.geometry, &mut rng).unwrap();
        let ch = draw_channel_gains(&topology, &cfg.spectrum, &cfg.channel, &mut rng);
        let pop = content_popularity(cfg.cache.n_contents, cfg.cache.zipf_exponent);
        let cache = place_cache(&pop, &cfg.cache, &topology);
        let run = run_matching(&ch, &cache, &cfg.game, 1, 1);
        for sc in 0..ch.n_subchannels() {
            assert!(
                run.matching.fues_on(sc).len() <= 1,
                "seed {seed}: subchannel {sc} superposed under unit quota"
            );
        }
        for fue in 0..ch.n_fues() {
            assert!(run.matching.subchannels_of(fue).len() <= 1);
        }
    }
}

#[test]
fn feasibility_error_propagates_from_the_drop() {
    let cfg = parse_config("n_faps = 260\nd_min_fap_fap = 40\n").unwrap();
    assert!(run_drop(&cfg, 1).is_err());
}

#[test]
fn cli_exit_codes_and_csv_output() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_simulate");
    let dir = std::env::temp_dir().join(format!("noma-fran-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    // Success: tiny run to stdout, exit 0, header intact.
    let cfg_path = dir.join("ok.cfg");
    std::fs::write(
        &cfg_path,
        "n_faps = 1\nn_fues_per_fap = 2\nn_subchannels = 4\nn_drops = 2\nbase_seed = 5\n",
    )
    .unwrap();
    let out = Command::new(bin)
        .args(["--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(CSV_HEADER));
    assert_eq!(stdout.lines().count(), 1 + 2 + 1, "header + drops + summary");

    // Flag overrides change the run; --out writes the file instead.
    let csv_path = dir.join("report.csv");
    let out = Command::new(bin)
        .args([
            "--config",
            cfg_path.to_str().unwrap(),
            "--scheme",
            "ofdma",
            "--drops",
            "3",
            "--seed",
            "11",
            "--out",
            csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(written.lines().count(), 1 + 3 + 1);
    assert!(written.lines().nth(1).unwrap().contains(",ofdma,1,11,"));

    // Config errors exit 2: bad key, bad value, missing file.
    let bad_path = dir.join("bad.cfg");
    std::fs::write(&bad_path, "noma_quota = 2\n").unwrap();
    let out = Command::new(bin)
        .args(["--config", bad_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&bad_path, "q = 0\n").unwrap();
    let out = Command::new(bin)
        .args(["--config", bad_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin)
        .args(["--config", dir.join("missing.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Over-constrained geometry exits 3.
    let infeasible = dir.join("infeasible.cfg");
    std::fs::write(&infeasible, "n_faps = 260\nn_drops = 1\n").unwrap();
    let out = Command::new(bin)
        .args(["--config", infeasible.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scheme_label_and_quota_appear_in_rows() {
    let cfg = parse_config("n_faps = 1\nn_fues_per_fap = 2\nn_subchannels = 4\nn_drops = 1\n")
        .unwrap();
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let csv = render_csv(&rows);
    let data_line = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = data_line.split(',').collect();
    assert_eq!(fields[0], "none");
    assert_eq!(fields[2], "noma");
    assert_eq!(fields[3], "2");
    assert_eq!(fields[4], "1"); // base_seed
}
