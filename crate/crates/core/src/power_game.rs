//! Non-cooperative power allocation with interference pricing and a
//! caching reward.
//!
//! Each matched (F-UE, subchannel) pair plays selfishly: it maximizes
//!
//! ```text
//! (1 + beta * theta) * B_sc * log2(1 + p * h / I)  -  lambda * gbar * p
//! ```
//!
//! where `h` is its serving-link gain, `I` the interference-plus-noise at
//! its SIC stage with everyone else's power frozen, and `gbar` the mean
//! gain from its F-AP to the MUEs (the victims being priced). The objective
//! is concave in `p`, so the best response is the closed form
//! `clamp(A / (ln2 * lambda * gbar) - I / h, 0, p_max_pair)`.
//!
//! Powers start at the smallest value `p_min` and are updated pair by pair
//! in a fixed sweep order (Gauss-Seidel), with each F-AP projected back
//! onto its total power budget after every sweep, until the largest
//! per-pair change drops below `epsilon_converge`. An outer loop guards the
//! macro tier: if any MUE sees more than `interference_threshold_w` on any
//! subchannel, the price `lambda` is multiplied by `lambda_growth` and the
//! game reruns from `p_min`, up to `max_outer_iters` times. Non-convergence
//! and threshold misses are reported honestly.

use crate::caching::CachePlacement;
use crate::channel::{dbm_to_watts, ChannelState};
use crate::matching::Matching;
use crate::noma::{interference_plus_noise, macro_interference, rate, PowerAllocation};

/// Coefficients and iteration limits of the power game.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityParams {
    /// Interference price per (Watt x victim gain).
    pub lambda: f64,
    /// Caching reward coefficient.
    pub beta: f64,
    /// Max tolerable fog-tier interference per MUE per subchannel, Watts.
    pub interference_threshold_w: f64,
    /// Iteration start value, Watts.
    pub p_min_w: f64,
    /// Per-pair power cap, Watts.
    pub p_max_per_pair_w: f64,
    /// Total per-F-AP power budget, Watts.
    pub p_max_fap_w: f64,
    /// Inner-loop fixed-point tolerance, Watts.
    pub epsilon_converge_w: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    /// Price escalation factor per outer iteration.
    pub lambda_growth: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        let p_max_fap_w = dbm_to_watts(41.0);
        Self {
            lambda: 1e13,
            beta: 0.5,
            interference_threshold_w: dbm_to_watts(-90.0),
            p_min_w: 1e-6,
            p_max_per_pair_w: p_max_fap_w / 4.0,
            p_max_fap_w,
            epsilon_converge_w: 1e-9,
            max_inner_iters: 500,
            max_outer_iters: 20,
            lambda_growth: 2.0,
        }
    }
}

/// Outcome of one game run.
#[derive(Debug, Clone, PartialEq)]
pub struct GameResult {
    pub powers: PowerAllocation,
    /// Largest per-pair change of the last sweep fell below
    /// `epsilon_converge_w`.
    pub converged: bool,
    /// Total best-response sweeps across all outer iterations.
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// Recomputed MUE interference met the threshold on every
    /// (MUE, subchannel) entry.
    pub threshold_satisfied: bool,
    pub final_lambda: f64,
    /// Net utility per F-UE (zero for unmatched F-UEs), at `final_lambda`.
    pub net_utilities: Vec<f64>,
    /// Max (MUE, subchannel) interference after each outer iteration, Watts.
    pub interference_trace: Vec<f64>,
}

impl GameResult {
    pub fn total_net_utility(&self) -> f64 {
        self.net_utilities.iter().sum()
    }
}

/// Net utility of one F-UE over its matched subchannels:
/// `(1 + beta*theta) * rate - lambda * p * gbar(k -> MUEs)` summed per pair.
pub fn net_utility(
    fue: usize,
    m: &Matching,
    p: &PowerAllocation,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> f64 {
    let cell = ch.serving_fap(fue);
    let reward_factor = 1.0 + params.beta * cache.theta[fue];
    m.subchannels_of(fue)
        .into_iter()
        .map(|sc| {
            let h = ch.gain_fap_fue(cell, fue, sc);
            let interference = interference_plus_noise(fue, sc, m, p, ch);
            let own = p.get(fue, sc);
            let r = rate(own * h / interference, ch.subchannel_bandwidth_hz());
            let price = params.lambda * own * ch.mean_gain_fap_mues(cell, sc);
            reward_factor * r - price
        })
        .sum()
}

/// Utility of a single (F-UE, subchannel) pair at power `power_w`, holding
/// every other power frozen. This is the term a unilateral deviation moves;
/// the stage interference never contains the pair's own power.
pub fn pair_utility(
    fue: usize,
    sc: usize,
    power_w: f64,
    m: &Matching,
    p: &PowerAllocation,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> f64 {
    let cell = ch.serving_fap(fue);
    let h = ch.gain_fap_fue(cell, fue, sc);
    let interference = interference_plus_noise(fue, sc, m, p, ch);
    let reward_factor = 1.0 + params.beta * cache.theta[fue];
    let r = rate(power_w * h / interference, ch.subchannel_bandwidth_hz());
    reward_factor * r - params.lambda * power_w * ch.mean_gain_fap_mues(cell, sc)
}

/// Closed-form best response of pair (`fue`, `sc`) against frozen rivals.
///
/// With price slope `lambda * gbar = 0` the rate term alone is maximized at
/// the per-pair cap.
pub fn best_response(
    fue: usize,
    sc: usize,
    p: &PowerAllocation,
    m: &Matching,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> f64 {
    let cell = ch.serving_fap(fue);
    let price_slope = params.lambda * ch.mean_gain_fap_mues(cell, sc);
    if price_slope <= 0.0 {
        return params.p_max_per_pair_w;
    }
    let h = ch.gain_fap_fue(cell, fue, sc);
    let interference = interference_plus_noise(fue, sc, m, p, ch);
    let a = (1.0 + params.beta * cache.theta[fue]) * ch.subchannel_bandwidth_hz();
    let unconstrained = a / (std::f64::consts::LN_2 * price_slope) - interference / h;
    unconstrained.clamp(0.0, params.p_max_per_pair_w)
}

/// Deterministic sweep order: (serving F-AP, F-UE index, subchannel index).
pub fn sweep_order(m: &Matching, ch: &ChannelState) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = m.pairs().copied().collect();
    order.sort_by_key(|&(fue, sc)| (ch.serving_fap(fue), fue, sc));
    order
}

/// One Gauss-Seidel sweep over `order`, then per-F-AP budget projection
/// (uniform down-scaling). Returns the largest per-pair power change.
///
/// Reference implementation over [`PowerAllocation`]; the game loop itself
/// runs an equivalent densely-indexed fast path.
pub fn sweep_once(
    p: &mut PowerAllocation,
    order: &[(usize, usize)],
    m: &Matching,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> f64 {
    let before: Vec<f64> = order.iter().map(|&(fue, sc)| p.get(fue, sc)).collect();
    for &(fue, sc) in order {
        let next = best_response(fue, sc, p, m, ch, cache, params);
        p.set(fue, sc, next);
    }
    for k in 0..ch.n_faps() {
        let total = p.total_fap_power(k, ch);
        if total > params.p_max_fap_w {
            p.scale_fap(k, params.p_max_fap_w / total, ch);
        }
    }
    order
        .iter()
        .zip(&before)
        .map(|(&(fue, sc), &old)| (p.get(fue, sc) - old).abs())
        .fold(0.0, f64::max)
}

/// Densely-indexed game state: per-pair precomputes plus running per-cell
/// power tallies, so one best response costs O(co-channel neighbors).
struct Workspace {
    n_faps: usize,
    n_subchannels: usize,
    noise_w: f64,
    p_max_fap_w: f64,
    p_max_pair_w: f64,
    /// Pair order; parallel arrays below are indexed the same way.
    order: Vec<(usize, usize)>,
    cell: Vec<usize>,
    sc: Vec<usize>,
    own_gain: Vec<f64>,
    /// Victim-side mean gain per pair.
    gbar: Vec<f64>,
    /// `(1 + beta*theta) * B_sc` per pair.
    amp: Vec<f64>,
    /// MRRH cross-tier term per pair.
    cross: Vec<f64>,
    /// Interfering-cell gains per pair: (cell index, gain to this F-UE).
    other_cells: Vec<Vec<(usize, f64)>>,
    /// Workspace indices of same-cell co-channel pairs decoded later.
    later: Vec<Vec<usize>>,
    power: Vec<f64>,
    cell_power: Vec<f64>,
    fap_total: Vec<f64>,
}

impl Workspace {
    fn new(m: &Matching, ch: &ChannelState, cache: &CachePlacement, params: &UtilityParams) -> Self {
        let order = sweep_order(m, ch);
        let n_pairs = order.len();
        let n_sc = ch.n_subchannels();

        let mut index_of = std::collections::BTreeMap::new();
        for (i, &pair) in order.iter().enumerate() {
            index_of.insert(pair, i);
        }

        let mut ws = Self {
            n_faps: ch.n_faps(),
            n_subchannels: n_sc,
            noise_w: ch.noise_power_w(),
            p_max_fap_w: params.p_max_fap_w,
            p_max_pair_w: params.p_max_per_pair_w,
            order: order.clone(),
            cell: Vec::with_capacity(n_pairs),
            sc: Vec::with_capacity(n_pairs),
            own_gain: Vec::with_capacity(n_pairs),
            gbar: Vec::with_capacity(n_pairs),
            amp: Vec::with_capacity(n_pairs),
            cross: Vec::with_capacity(n_pairs),
            other_cells: Vec::with_capacity(n_pairs),
            later: Vec::with_capacity(n_pairs),
            power: vec![0.0; n_pairs],
            cell_power: vec![0.0; ch.n_faps() * n_sc],
            fap_total: vec![0.0; ch.n_faps()],
        };

        for &(fue, sc) in &order {
            let cell = ch.serving_fap(fue);
            ws.cell.push(cell);
            ws.sc.push(sc);
            ws.own_gain.push(ch.gain_fap_fue(cell, fue, sc));
            ws.gbar.push(ch.mean_gain_fap_mues(cell, sc));
            ws.amp
                .push((1.0 + params.beta * cache.theta[fue]) * ch.subchannel_bandwidth_hz());
            ws.cross
                .push(ch.gain_mrrh_fue(fue, sc) * ch.mrrh_power_per_sc_w());
            ws.other_cells.push(
                (0..ch.n_faps())
                    .filter(|&k| k != cell)
                    .map(|k| (k, ch.gain_fap_fue(k, fue, sc)))
                    .collect(),
            );
            let key = (ch.crnn(fue, sc), fue);
            ws.later.push(
                m.fues_on(sc)
                    .into_iter()
                    .filter(|&j| {
                        j != fue && ch.serving_fap(j) == cell && (ch.crnn(j, sc), j) > key
                    })
                    .map(|j| index_of[&(j, sc)])
                    .collect(),
            );
        }
        ws
    }

    fn reset(&mut self, level_w: f64) {
        self.power.fill(level_w);
        self.rebuild_tallies();
    }

    fn rebuild_tallies(&mut self) {
        self.cell_power.fill(0.0);
        self.fap_total.fill(0.0);
        for i in 0..self.power.len() {
            self.cell_power[self.cell[i] * self.n_subchannels + self.sc[i]] += self.power[i];
            self.fap_total[self.cell[i]] += self.power[i];
        }
    }

    fn best_response(&self, i: usize, lambda: f64) -> f64 {
        let price_slope = lambda * self.gbar[i];
        if price_slope <= 0.0 {
            return self.p_max_pair_w;
        }
        let intra: f64 = self.later[i].iter().map(|&j| self.power[j]).sum::<f64>()
            * self.own_gain[i];
        let co_tier: f64 = self.other_cells[i]
            .iter()
            .map(|&(k, g)| g * self.cell_power[k * self.n_subchannels + self.sc[i]])
            .sum();
        let interference = intra + co_tier + self.cross[i] + self.noise_w;
        let unconstrained = self.amp[i] / (std::f64::consts::LN_2 * price_slope)
            - interference / self.own_gain[i];
        unconstrained.clamp(0.0, self.p_max_pair_w)
    }

    /// Gauss-Seidel sweep plus budget projection; largest per-pair change.
    fn sweep(&mut self, lambda: f64) -> f64 {
        let before = self.power.clone();
        for i in 0..self.power.len() {
            let next = self.best_response(i, lambda);
            let delta = next - self.power[i];
            self.power[i] = next;
            self.cell_power[self.cell[i] * self.n_subchannels + self.sc[i]] += delta;
            self.fap_total[self.cell[i]] += delta;
        }
        let mut scaled = false;
        for k in 0..self.n_faps {
            if self.fap_total[k] > self.p_max_fap_w {
                let scale = self.p_max_fap_w / self.fap_total[k];
                for i in 0..self.power.len() {
                    if self.cell[i] == k {
                        self.power[i] *= scale;
                    }
                }
                scaled = true;
            }
        }
        if scaled {
            self.rebuild_tallies();
        }
        self.power
            .iter()
            .zip(&before)
            .map(|(new, old)| (new - old).abs())
            .fold(0.0, f64::max)
    }

    fn to_allocation(&self) -> PowerAllocation {
        let mut p = PowerAllocation::new();
        for (i, &(fue, sc)) in self.order.iter().enumerate() {
            p.set(fue, sc, self.power[i]);
        }
        p
    }
}

/// Runs the full game: inner best-response loop to a fixed point, outer
/// price escalation until the MUE interference threshold holds or the
/// iteration budgets run out.
pub fn run_power_game(
    m: &Matching,
    ch: &ChannelState,
    cache: &CachePlacement,
    params: &UtilityParams,
) -> GameResult {
    if m.is_empty() {
        return GameResult {
            powers: PowerAllocation::new(),
            converged: true,
            inner_iterations: 0,
            outer_iterations: 0,
            threshold_satisfied: true,
            final_lambda: params.lambda,
            net_utilities: vec![0.0; ch.n_fues()],
            interference_trace: Vec::new(),
        };
    }

    let mut ws = Workspace::new(m, ch, cache, params);
    let mut stage = params.clone();
    let mut converged = false;
    let mut inner_total = 0;
    let mut outer_count = 0;
    let mut threshold_satisfied = false;
    let mut trace = Vec::new();

    for outer in 1..=params.max_outer_iters {
        outer_count = outer;
        // Restart from the smallest power at each price level.
        ws.reset(params.p_min_w.min(params.p_max_per_pair_w));
        converged = false;
        for _ in 0..params.max_inner_iters {
            let delta = ws.sweep(stage.lambda);
            inner_total += 1;
            if delta < params.epsilon_converge_w {
                converged = true;
                break;
            }
        }

        let powers = ws.to_allocation();
        let max_interference = macro_interference(m, &powers, ch).max_entry_w();
        trace.push(max_interference);
        if max_interference <= params.interference_threshold_w {
            threshold_satisfied = true;
            break;
        }
        if outer < params.max_outer_iters {
            stage.lambda *= params.lambda_growth;
        }
    }

    let powers = ws.to_allocation();
    let net_utilities = (0..ch.n_fues())
        .map(|fue| {
            if m.subchannels_of(fue).is_empty() {
                0.0
            } else {
                net_utility(fue, m, &powers, ch, cache, &stage)
            }
        })
        .collect();

    GameResult {
        powers,
        converged,
        inner_iterations: inner_total,
        outer_iterations: outer_count,
        threshold_satisfied,
        final_lambda: stage.lambda,
        net_utilities,
        interference_trace: trace,
    }
}
