//! Popularity-driven edge caching and the per-F-UE hit coefficient.
//!
//! Content requests follow a Zipf law; each F-AP caches the most popular
//! contents until its slots run out. The probability that a served request
//! hits the local cache (theta) scales the caching reward, which models the
//! backhaul traffic avoided: `beta * theta * rate`.

use crate::topology::NetworkTopology;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheConfig {
    pub n_contents: usize,
    /// Zipf exponent; 0 means uniform popularity.
    pub zipf_exponent: f64,
    pub cache_slots_per_fap: usize,
    /// Reward coefficient beta applied to the cache-hit rate product.
    pub reward_coefficient: f64,
    /// Half-width of a per-F-UE perturbation of the Zipf exponent;
    /// 0 keeps every F-UE on the cell-wide request distribution.
    pub fue_zipf_skew: f64,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            n_contents: 1000,
            zipf_exponent: 0.8,
            cache_slots_per_fap: 100,
            reward_coefficient: 0.5,
            fue_zipf_skew: 0.0,
        }
    }
}

/// Cache contents per F-AP and the resulting hit probability per F-UE.
#[derive(Debug, Clone, PartialEq)]
pub struct CachePlacement {
    /// Content indices stored at each F-AP, most popular first.
    pub cached: Vec<Vec<usize>>,
    /// Hit probability theta in [0, 1] per F-UE.
    pub theta: Vec<f64>,
}

impl CachePlacement {
    /// Placement with zero hit probability for `n_fues` users; used when
    /// there is nothing to cache.
    pub fn empty(n_faps: usize, n_fues: usize) -> Self {
        Self {
            cached: vec![Vec::new(); n_faps],
            theta: vec![0.0; n_fues],
        }
    }
}

/// Zipf request probabilities over contents `1..=n_contents`:
/// `p_i ∝ i^(-s)`, normalized to sum to 1.
pub fn content_popularity(n_contents: usize, s: f64) -> Vec<f64> {
    assert!(n_contents >= 1, "need at least one content");
    assert!(s >= 0.0, "Zipf exponent must be nonnegative");
    let weights: Vec<f64> = (1..=n_contents).map(|i| (i as f64).powf(-s)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Greedy most-popular-first placement shared by all F-APs; every F-UE of a
/// cell inherits the cell's hit probability.
pub fn place_cache(
    pop: &[f64],
    cfg: &CacheConfig,
    t: &NetworkTopology,
) -> CachePlacement {
    let slots = cfg.cache_slots_per_fap.min(pop.len());
    // Popularity is nonincreasing in the content index, so the top-`slots`
    // prefix is the greedy choice; ties resolve to the lower index.
    let chosen: Vec<usize> = (0..slots).collect();
    let theta_cell: f64 = chosen.iter().map(|&i| pop[i]).sum();

    CachePlacement {
        cached: vec![chosen; t.n_faps()],
        theta: vec![theta_cell.min(1.0); t.n_fues()],
    }
}

/// Like [`place_cache`], but each F-UE evaluates the cached contents under
/// its own Zipf exponent, perturbed uniformly within `±fue_zipf_skew`.
/// Consumes one RNG draw per F-UE; with `fue_zipf_skew == 0` it reduces to
/// [`place_cache`] without touching the RNG.
pub fn place_cache_with_skew<R: Rng + ?Sized>(
    pop: &[f64],
    cfg: &CacheConfig,
    t: &NetworkTopology,
    rng: &mut R,
) -> CachePlacement {
    if cfg.fue_zipf_skew == 0.0 {
        return place_cache(pop, cfg, t);
    }
    let slots = cfg.cache_slots_per_fap.min(pop.len());
    let chosen: Vec<usize> = (0..slots).collect();
    let theta = (0..t.n_fues())
        .map(|_| {
            let s = (cfg.zipf_exponent + cfg.fue_zipf_skew * (2.0 * rng.gen::<f64>() - 1.0))
                .max(0.0);
            let own_pop = content_popularity(pop.len(), s);
            chosen.iter().map(|&i| own_pop[i]).sum::<f64>().min(1.0)
        })
        .collect();
    CachePlacement {
        cached: vec![chosen; t.n_faps()],
        theta,
    }
}

/// Expected backhaul traffic avoided, scaled by beta: `beta * theta * rate`.
pub fn caching_reward(theta: f64, rate_bps: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&theta));
    debug_assert!(rate_bps >= 0.0 && beta >= 0.0);
    beta * theta * rate_bps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::NetworkTopology;

    fn toy_topology(n_faps: usize, n_fues_per_fap: usize) -> NetworkTopology {
        let fap_positions = (0..n_faps).map(|k| [350.0 + 50.0 * k as f64, 0.0]).collect();
        let fue_positions = (0..n_faps)
            .flat_map(|k| (0..n_fues_per_fap).map(move |_| (k, [350.0 + 50.0 * k as f64, 5.0])))
            .collect();
        NetworkTopology {
            mrrh_position: [0.0, 0.0],
            macro_radius: 500.0,
            fap_positions,
            fap_radius: 10.0,
            fue_positions,
            mue_positions: vec![],
        }
    }

    #[test]
    fn popularity_uniform_when_exponent_zero() {
        let pop = content_popularity(3, 0.0);
        for p in &pop {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn popularity_singleton() {
        assert_eq!(content_popularity(1, 2.7), vec![1.0]);
    }

    #[test]
    fn popularity_zipf_one_over_three() {
        // weights 1, 1/2, 1/3 -> normalizer 11/6.
        let pop = content_popularity(3, 1.0);
        assert!((pop[0] - 6.0 / 11.0).abs() < 1e-15);
        assert!((pop[1] - 3.0 / 11.0).abs() < 1e-15);
        assert!((pop[2] - 2.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn popularity_sums_to_one() {
        for &(n, s) in &[(1usize, 0.0), (10, 0.5), (1000, 0.8), (5000, 1.3)] {
            let sum: f64 = content_popularity(n, s).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "n={n} s={s} sum={sum}");
        }
    }

    #[test]
    fn place_top_content_only() {
        let t = toy_topology(2, 3);
        let cfg = CacheConfig {
            n_contents: 3,
            zipf_exponent: 1.0,
            cache_slots_per_fap: 1,
            ..CacheConfig::default()
        };
        let pop = content_popularity(3, 1.0);
        let placement = place_cache(&pop, &cfg, &t);
        assert_eq!(placement.cached, vec![vec![0], vec![0]]);
        for &theta in &placement.theta {
            assert!((theta - 6.0 / 11.0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_cache_hits_everything() {
        let t = toy_topology(1, 2);
        let cfg = CacheConfig {
            n_contents: 5,
            cache_slots_per_fap: 5,
            ..CacheConfig::default()
        };
        let pop = content_popularity(5, 0.7);
        let placement = place_cache(&pop, &cfg, &t);
        for &theta in &placement.theta {
            assert!((theta - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_cache_hits_nothing() {
        let t = toy_topology(1, 2);
        let cfg = CacheConfig {
            n_contents: 5,
            cache_slots_per_fap: 0,
            ..CacheConfig::default()
        };
        let pop = content_popularity(5, 0.7);
        let placement = place_cache(&pop, &cfg, &t);
        assert_eq!(placement.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn theta_monotone_in_slots_and_exponent() {
        let t = toy_topology(1, 1);
        let pop = content_popularity(100, 0.8);
        let mut prev = -1.0;
        for slots in [0, 1, 5, 20, 50, 100] {
            let cfg = CacheConfig {
                n_contents: 100,
                cache_slots_per_fap: slots,
                ..CacheConfig::default()
            };
            let theta = place_cache(&pop, &cfg, &t).theta[0];
            assert!(theta >= prev);
            prev = theta;
        }

        let mut prev = -1.0;
        for s in [0.0, 0.3, 0.6, 1.0, 1.5] {
            let cfg = CacheConfig {
                n_contents: 100,
                zipf_exponent: s,
                cache_slots_per_fap: 10,
                ..CacheConfig::default()
            };
            let theta = place_cache(&content_popularity(100, s), &cfg, &t).theta[0];
            assert!(theta >= prev, "theta not monotone at s={s}");
            prev = theta;
        }
    }

    #[test]
    fn reward_values() {
        assert_eq!(caching_reward(0.0, 1e9, 3.0), 0.0);
        assert_eq!(caching_reward(1.0, 1e6, 1.0), 1e6);
        let r = caching_reward(6.0 / 11.0, 4.392e5, 0.5);
        assert!((r - 1.198e5).abs() / 1.198e5 < 1e-3);
    }

    #[test]
    fn reward_linear_in_each_argument() {
        let base = caching_reward(0.3, 2e5, 0.7);
        assert!((caching_reward(0.6, 2e5, 0.7) - 2.0 * base).abs() < 1e-9);
        assert!((caching_reward(0.3, 4e5, 0.7) - 2.0 * base).abs() < 1e-9);
        assert!((caching_reward(0.3, 2e5, 1.4) - 2.0 * base).abs() < 1e-9);
    }

    #[test]
    fn skewed_thetas_stay_in_range_and_default_matches() {
        use rand::SeedableRng;
        let t = toy_topology(2, 4);
        let pop = content_popularity(50, 0.8);
        let cfg = CacheConfig {
            n_contents: 50,
            cache_slots_per_fap: 10,
            fue_zipf_skew: 0.4,
            ..CacheConfig::default()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let skewed = place_cache_with_skew(&pop, &cfg, &t, &mut rng);
        assert!(skewed.theta.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // Not all equal once the skew is on.
        assert!(skewed.theta.iter().any(|&x| (x - skewed.theta[0]).abs() > 1e-12));

        let cfg_off = CacheConfig { fue_zipf_skew: 0.0, ..cfg };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let plain = place_cache_with_skew(&pop, &cfg_off, &t, &mut rng);
        assert_eq!(plain, place_cache(&pop, &cfg_off, &t));
    }
}
