//! Many-to-many matching of F-UEs onto subchannels.
//!
//! Both sides are quota-limited: at most `q` F-UEs share one subchannel
//! (bounding SIC complexity at the receivers) and each F-UE holds at most
//! `q_ue` subchannels. F-UEs rank subchannels by serving-cell channel gain.
//! Subchannels hold no static ranking; they judge a proposal by the total
//! net utility of candidate occupant subsets, evaluated on demand under a
//! fast equal-power proxy — a static list cannot capture how one F-UE's
//! admission changes the value of the others already there.
//!
//! The proposal loop: every F-UE with spare quota asks its best not-yet-
//! struck subchannel once per round; a subchannel below quota accepts
//! outright, a full one keeps the best q-subset of incumbents plus the
//! proposer and rejects the displaced F-UE. Struck entries (consumed or
//! rejected) are never proposed again, so total proposals are bounded by
//! (#F-UEs x #subchannels). `q = q_ue = 1` degenerates to one-user-per-
//! subchannel assignment, which is the OFDMA baseline scheme.
//!
//! [`brute_force_optimum`] exhaustively enumerates quota-feasible matchings
//! under the same evaluator and serves as the oracle for small instances.

use crate::caching::CachePlacement;
use crate::channel::ChannelState;
use crate::noma::rate;
use crate::power_game::UtilityParams;
use std::collections::BTreeSet;
use thiserror::Error;

/// Enumeration cap for [`brute_force_optimum`].
pub const BRUTE_FORCE_STATE_LIMIT: f64 = 1e7;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error(
        "exhaustive enumeration would visit ~{states:.3e} matchings, above the {limit:.1e} cap"
    )]
    InstanceTooLarge { states: f64, limit: f64 },
}

/// Assignment of F-UEs to subchannels under both quotas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pairs: BTreeSet<(usize, usize)>,
    /// Max F-UEs per subchannel.
    pub q: usize,
    /// Max subchannels per F-UE.
    pub q_ue: usize,
}

impl Matching {
    pub fn new(q: usize, q_ue: usize) -> Self {
        Self {
            pairs: BTreeSet::new(),
            q,
            q_ue,
        }
    }

    /// Adds a pair. Panics if either quota would be exceeded; callers check
    /// quotas before inserting.
    pub fn insert(&mut self, fue: usize, sc: usize) {
        assert!(self.fues_on(sc).len() < self.q, "subchannel {sc} quota full");
        assert!(
            self.subchannels_of(fue).len() < self.q_ue,
            "F-UE {fue} quota full"
        );
        self.pairs.insert((fue, sc));
    }

    pub fn remove(&mut self, fue: usize, sc: usize) -> bool {
        self.pairs.remove(&(fue, sc))
    }

    pub fn contains(&self, fue: usize, sc: usize) -> bool {
        self.pairs.contains(&(fue, sc))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// F-UEs matched to `sc`, ascending.
    pub fn fues_on(&self, sc: usize) -> Vec<usize> {
        self.pairs
            .iter()
            .filter(|&&(_, s)| s == sc)
            .map(|&(f, _)| f)
            .collect()
    }

    /// Subchannels matched to `fue`, ascending.
    pub fn subchannels_of(&self, fue: usize) -> Vec<usize> {
        self.pairs
            .range((fue, 0)..(fue + 1, 0))
            .map(|&(_, s)| s)
            .collect()
    }

    /// True iff both quota invariants hold for every node.
    pub fn quotas_satisfied(&self, n_fues: usize, n_subchannels: usize) -> bool {
        (0..n_subchannels).all(|sc| self.fues_on(sc).len() <= self.q)
            && (0..n_fues).all(|fue| self.subchannels_of(fue).len() <= self.q_ue)
    }
}

/// F-UE-side preference lists with strike-out bookkeeping.
#[derive(Debug, Clone)]
pub struct PreferenceState {
    /// Per F-UE: subchannel indices by descending serving-cell gain,
    /// ties by ascending subchannel index.
    pub ue_pref: Vec<Vec<usize>>,
    /// Struck entries (consumed by a match or rejected); never re-proposed.
    struck: Vec<Vec<bool>>,
}

impl PreferenceState {
    /// First still-active entry of `fue`: (list position, subchannel).
    pub fn first_active(&self, fue: usize) -> Option<(usize, usize)> {
        self.ue_pref[fue]
            .iter()
            .enumerate()
            .find(|&(pos, _)| !self.struck[fue][pos])
            .map(|(pos, &sc)| (pos, sc))
    }

    pub fn strike(&mut self, fue: usize, pos: usize) {
        self.struck[fue][pos] = true;
    }

    pub fn is_struck(&self, fue: usize, pos: usize) -> bool {
        self.struck[fue][pos]
    }
}

/// Builds each F-UE's subchannel ranking from its serving-cell gains.
pub fn build_preferences(ch: &ChannelState) -> PreferenceState {
    let n_sc = ch.n_subchannels();
    let ue_pref = (0..ch.n_fues())
        .map(|fue| {
            let cell = ch.serving_fap(fue);
            let mut order: Vec<usize> = (0..n_sc).collect();
            order.sort_by(|&a, &b| {
                ch.gain_fap_fue(cell, fue, b)
                    .partial_cmp(&ch.gain_fap_fue(cell, fue, a))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order
        })
        .collect::<Vec<_>>();
    let struck = ue_pref.iter().map(|list| vec![false; list.len()]).collect();
    PreferenceState { ue_pref, struck }
}

/// Equal-power proxy used while matching: each prospective pair transmits
/// `P_max_fap / (q * n_subchannels)` Watts.
pub fn proxy_power_w(params: &UtilityParams, q: usize, n_subchannels: usize) -> f64 {
    params.p_max_fap_w / (q * n_subchannels) as f64
}

/// Total net utility a candidate occupant set would produce on `sc`,
/// with every candidate transmitting `power_w`.
///
/// The set is treated as the subchannel's complete occupancy: intra-cell
/// terms follow the SIC order among same-cell candidates, co-tier terms
/// come from the other cells represented in the set, and the MRRH term and
/// noise are always present. Deterministic in its inputs.
pub fn evaluate_subset_with_power(
    sc: usize,
    candidates: &[usize],
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
    power_w: f64,
) -> f64 {
    if candidates.is_empty() {
        return 0.0;
    }
    let bw = ch.subchannel_bandwidth_hz();

    // Cell occupancy counts for the co-tier terms.
    let mut cell_count = vec![0usize; ch.n_faps()];
    for &u in candidates {
        cell_count[ch.serving_fap(u)] += 1;
    }

    let mut total = 0.0;
    for &u in candidates {
        let cell = ch.serving_fap(u);
        let h = ch.gain_fap_fue(cell, u, sc);
        let key = (ch.crnn(u, sc), u);
        let later = candidates
            .iter()
            .filter(|&&j| j != u && ch.serving_fap(j) == cell && (ch.crnn(j, sc), j) > key)
            .count();
        let intra = h * power_w * later as f64;
        let co_tier: f64 = (0..ch.n_faps())
            .filter(|&k| k != cell && cell_count[k] > 0)
            .map(|k| ch.gain_fap_fue(k, u, sc) * power_w * cell_count[k] as f64)
            .sum();
        let cross = ch.gain_mrrh_fue(u, sc) * ch.mrrh_power_per_sc_w();
        let sinr = power_w * h / (intra + co_tier + cross + ch.noise_power_w());

        let reward_factor = 1.0 + params.beta * cache.theta[u];
        let price = params.lambda * power_w * ch.mean_gain_fap_mues(cell, sc);
        total += reward_factor * rate(sinr, bw) - price;
    }
    total
}

/// [`evaluate_subset_with_power`] under the default equal-power proxy for
/// quota `q`.
pub fn evaluate_subset(
    sc: usize,
    candidates: &[usize],
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
    q: usize,
) -> f64 {
    evaluate_subset_with_power(
        sc,
        candidates,
        ch,
        cache,
        params,
        proxy_power_w(params, q, ch.n_subchannels()),
    )
}

/// Total evaluator value of a matching: the sum of each subchannel's
/// occupant-set value under the proxy power.
pub fn matching_value(
    m: &Matching,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> f64 {
    let power = proxy_power_w(params, m.q, ch.n_subchannels());
    (0..ch.n_subchannels())
        .map(|sc| evaluate_subset_with_power(sc, &m.fues_on(sc), ch, cache, params, power))
        .sum()
}

/// A matching together with the number of proposals the run consumed.
#[derive(Debug, Clone)]
pub struct MatchingRun {
    pub matching: Matching,
    pub proposals: usize,
}

/// Runs the proposal loop under the default proxy power.
pub fn run_matching(
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
    q: usize,
    q_ue: usize,
) -> MatchingRun {
    run_matching_with_power(ch, cache, params, q, q_ue, proxy_power_w(params, q, ch.n_subchannels()))
}

/// Proposal loop with an explicit per-pair proxy power (used by the
/// optional second pass that recycles game-derived power levels).
pub fn run_matching_with_power(
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
    q: usize,
    q_ue: usize,
    power_w: f64,
) -> MatchingRun {
    assert!(q >= 1 && q_ue >= 1, "quotas must be at least 1");
    let mut prefs = build_preferences(ch);
    let mut matching = Matching::new(q, q_ue);
    let mut proposals = 0usize;

    // Deterministic proposer order: by (serving F-AP, F-UE index).
    let mut proposer_order: Vec<usize> = (0..ch.n_fues()).collect();
    proposer_order.sort_by_key(|&fue| (ch.serving_fap(fue), fue));

    loop {
        let mut any_proposal = false;
        for &fue in &proposer_order {
            if matching.subchannels_of(fue).len() >= q_ue {
                continue;
            }
            let Some((pos, sc)) = prefs.first_active(fue) else {
                continue;
            };
            proposals += 1;
            any_proposal = true;
            // Consumed on match, rejected otherwise: struck either way.
            prefs.strike(fue, pos);

            let occupants = matching.fues_on(sc);
            if occupants.len() < q {
                matching.insert(fue, sc);
                continue;
            }

            // Full subchannel: keep the best q-subset of incumbents plus the
            // proposer. Ties keep the incumbent set, then the earliest
            // candidate in ascending-excluded-member order.
            let mut union = occupants.clone();
            union.push(fue);
            union.sort_unstable();
            let mut best_value =
                evaluate_subset_with_power(sc, &occupants, ch, cache, params, power_w);
            let mut displaced = fue;
            for &out in &union {
                if out == fue {
                    continue; // excluding the proposer reproduces the incumbents
                }
                let subset: Vec<usize> = union.iter().copied().filter(|&u| u != out).collect();
                let value = evaluate_subset_with_power(sc, &subset, ch, cache, params, power_w);
                if value > best_value {
                    best_value = value;
                    displaced = out;
                }
            }
            if displaced != fue {
                // The displaced incumbent regains its quota next round; its
                // entry for `sc` was consumed when it matched and stays
                // struck, so it moves down its list.
                matching.remove(displaced, sc);
                matching.insert(fue, sc);
            }
        }
        if !any_proposal {
            break;
        }
    }

    debug_assert!(proposals <= ch.n_fues() * ch.n_subchannels());
    MatchingRun { matching, proposals }
}

/// Number of quota-feasible occupant sets per subchannel:
/// `sum_{i<=q} C(n_fues, i)`.
fn subsets_per_subchannel(n_fues: usize, q: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0; // C(n_fues, 0)
    for i in 0..=q.min(n_fues) {
        total += c;
        c = c * (n_fues - i) as f64 / (i + 1) as f64;
    }
    total
}

/// Exhaustively enumerates every quota-feasible matching, scores each with
/// the same subset evaluator under the default proxy power, and returns a
/// maximizer. Ties resolve to the lexicographically smallest pair set.
pub fn brute_force_optimum(
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
    q: usize,
    q_ue: usize,
) -> Result<(Matching, f64), MatchingError> {
    brute_force_optimum_with_power(ch, cache, params, q, q_ue, proxy_power_w(params, q, ch.n_subchannels()))
}

/// [`brute_force_optimum`] at an explicit per-pair power level, so optima
/// under different quotas can be compared against one fixed objective.
pub fn brute_force_optimum_with_power(
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
    q: usize,
    q_ue: usize,
    power: f64,
) -> Result<(Matching, f64), MatchingError> {
    let n_sc = ch.n_subchannels();
    let n_fues = ch.n_fues();
    let states = subsets_per_subchannel(n_fues, q).powi(n_sc as i32);
    if !(states <= BRUTE_FORCE_STATE_LIMIT) {
        return Err(MatchingError::InstanceTooLarge {
            states,
            limit: BRUTE_FORCE_STATE_LIMIT,
        });
    }

    // All occupant sets of size <= q in lexicographic order, with their
    // per-subchannel values precomputed.
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..q {
        let mut next = Vec::new();
        for base in &frontier {
            let start = base.last().map_or(0, |&x| x + 1);
            for u in start..n_fues {
                let mut s = base.clone();
                s.push(u);
                next.push(s);
            }
        }
        subsets.extend(next.iter().cloned());
        frontier = next;
    }
    subsets.sort();
    let values: Vec<Vec<f64>> = (0..n_sc)
        .map(|sc| {
            subsets
                .iter()
                .map(|s| evaluate_subset_with_power(sc, s, ch, cache, params, power))
                .collect()
        })
        .collect();

    struct Search<'a> {
        subsets: &'a [Vec<usize>],
        values: &'a [Vec<f64>],
        n_sc: usize,
        q_ue: usize,
        best_value: f64,
        best_pairs: Vec<(usize, usize)>,
        current: Vec<usize>, // subset index per subchannel
        fue_load: Vec<usize>,
    }

    impl Search<'_> {
        fn pairs_of(&self, choice: &[usize]) -> Vec<(usize, usize)> {
            let mut pairs = Vec::new();
            for (sc, &si) in choice.iter().enumerate() {
                for &u in &self.subsets[si] {
                    pairs.push((u, sc));
                }
            }
            pairs.sort_unstable();
            pairs
        }

        fn descend(&mut self, sc: usize, value_so_far: f64) {
            if sc == self.n_sc {
                let better = value_so_far > self.best_value;
                let tie = value_so_far == self.best_value;
                if better || (tie && {
                    let pairs = self.pairs_of(&self.current);
                    pairs < self.best_pairs
                }) {
                    self.best_value = value_so_far;
                    self.best_pairs = self.pairs_of(&self.current);
                }
                return;
            }
            for si in 0..self.subsets.len() {
                if self.subsets[si]
                    .iter()
                    .any(|&u| self.fue_load[u] + 1 > self.q_ue)
                {
                    continue;
                }
                for &u in &self.subsets[si] {
                    self.fue_load[u] += 1;
                }
                self.current.push(si);
                self.descend(sc + 1, value_so_far + self.values[sc][si]);
                self.current.pop();
                for &u in &self.subsets[si] {
                    self.fue_load[u] -= 1;
                }
            }
        }
    }

    let mut search = Search {
        subsets: &subsets,
        values: &values,
        n_sc,
        q_ue,
        best_value: f64::NEG_INFINITY,
        best_pairs: Vec::new(),
        current: Vec::with_capacity(n_sc),
        fue_load: vec![0; n_fues],
    };
    search.descend(0, 0.0);

    let mut best = Matching::new(q, q_ue);
    for (fue, sc) in search.best_pairs {
        best.insert(fue, sc);
    }
    let value = search.best_value;
    Ok((best, value))
}

/// Pairwise-stability audit: every (F-UE, subchannel) non-pair where the
/// F-UE would take the subchannel (spare quota, or a strictly higher gain
/// than its worst current match) *and* the subchannel's evaluator value
/// strictly improves by adding or swapping the F-UE in.
pub fn blocking_pairs(
    m: &Matching,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> Vec<(usize, usize)> {
    let power = proxy_power_w(params, m.q, ch.n_subchannels());
    let mut blocking = Vec::new();

    for fue in 0..ch.n_fues() {
        let cell = ch.serving_fap(fue);
        let matched = m.subchannels_of(fue);
        let spare = matched.len() < m.q_ue;
        let worst_gain = matched
            .iter()
            .map(|&sc| ch.gain_fap_fue(cell, fue, sc))
            .fold(f64::INFINITY, f64::min);

        for sc in 0..ch.n_subchannels() {
            if m.contains(fue, sc) {
                continue;
            }
            let willing = spare || ch.gain_fap_fue(cell, fue, sc) > worst_gain;
            if !willing {
                continue;
            }

            let occupants = m.fues_on(sc);
            let current = evaluate_subset_with_power(sc, &occupants, ch, cache, params, power);
            let accepts = if occupants.len() < m.q {
                let mut joined = occupants.clone();
                joined.push(fue);
                joined.sort_unstable();
                evaluate_subset_with_power(sc, &joined, ch, cache, params, power) > current
            } else {
                occupants.iter().any(|&out| {
                    let mut swapped: Vec<usize> =
                        occupants.iter().copied().filter(|&u| u != out).collect();
                    swapped.push(fue);
                    swapped.sort_unstable();
                    evaluate_subset_with_power(sc, &swapped, ch, cache, params, power) > current
                })
            };
            if accepts {
                blocking.push((fue, sc));
            }
        }
    }
    blocking
}
