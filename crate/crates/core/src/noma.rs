//! Downlink NOMA physical layer: SIC ordering, SINR, rates, and the
//! aggregate interference seen by macro users.
//!
//! Within a cell, co-channel F-UEs are decoded in increasing CRNN order.
//! A receiver cancels every same-cell signal decoded before its own
//! (strictly lower CRNN, ties broken by index) and treats the rest as
//! interference; SIC is assumed perfect. Across cells, a receiver cannot
//! cancel other cells' superpositions, so co-tier interference enters at
//! each interfering cell's total per-subchannel power. Cross-tier
//! interference comes from the MRRH at its per-subchannel transmit power.

use crate::channel::ChannelState;
use crate::matching::Matching;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("F-UE {fue} is not matched to subchannel {subchannel}")]
    Unmatched { fue: usize, subchannel: usize },
}

/// Transmit power per matched (F-UE, subchannel) pair, Watts.
///
/// Entries exist exactly for matched pairs; an absent pair reads as zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerAllocation {
    entries: BTreeMap<(usize, usize), f64>,
}

impl PowerAllocation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uniform power level over every matched pair.
    pub fn uniform(matching: &Matching, level_w: f64) -> Self {
        let mut p = Self::new();
        for &(fue, sc) in matching.pairs() {
            p.set(fue, sc, level_w);
        }
        p
    }

    pub fn get(&self, fue: usize, sc: usize) -> f64 {
        self.entries.get(&(fue, sc)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, fue: usize, sc: usize, power_w: f64) {
        debug_assert!(power_w >= 0.0 && power_w.is_finite());
        self.entries.insert((fue, sc), power_w);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total power F-AP `k` spends on subchannel `sc`, Watts.
    pub fn cell_power_on(&self, k: usize, sc: usize, ch: &ChannelState) -> f64 {
        self.entries
            .iter()
            .filter(|(&(fue, s), _)| s == sc && ch.serving_fap(fue) == k)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Total power F-AP `k` spends across all subchannels, Watts.
    pub fn total_fap_power(&self, k: usize, ch: &ChannelState) -> f64 {
        self.entries
            .iter()
            .filter(|(&(fue, _), _)| ch.serving_fap(fue) == k)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Uniformly scales every pair of F-AP `k` by `factor`.
    pub fn scale_fap(&mut self, k: usize, factor: f64, ch: &ChannelState) {
        for (&(fue, _), p) in self.entries.iter_mut() {
            if ch.serving_fap(fue) == k {
                *p *= factor;
            }
        }
    }
}

/// SIC decoding order of `fues` (all served by `cell`, all matched to `n`):
/// ascending CRNN, ties broken by ascending F-UE index.
pub fn sic_order(cell: usize, n: usize, fues: &[usize], ch: &ChannelState) -> Vec<usize> {
    debug_assert!(fues.iter().all(|&m| ch.serving_fap(m) == cell));
    let mut order = fues.to_vec();
    order.sort_by(|&a, &b| {
        ch.crnn(a, n)
            .partial_cmp(&ch.crnn(b, n))
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

/// Same-cell co-channel F-UEs decoded after `ue` (whose signals `ue`
/// cannot cancel).
fn later_in_sic(ue: usize, n: usize, m: &Matching, ch: &ChannelState) -> Vec<usize> {
    let cell = ch.serving_fap(ue);
    let key = (ch.crnn(ue, n), ue);
    m.fues_on(n)
        .into_iter()
        .filter(|&j| j != ue && ch.serving_fap(j) == cell && (ch.crnn(j, n), j) > key)
        .collect()
}

/// SINR denominator of `ue` on subchannel `n`: uncancelled same-cell power
/// (scaled by the serving-link gain), co-tier power from every other cell
/// active on `n`, the MRRH cross-tier term, and per-subchannel noise.
/// Independent of `ue`'s own power.
pub fn interference_plus_noise(
    ue: usize,
    n: usize,
    m: &Matching,
    p: &PowerAllocation,
    ch: &ChannelState,
) -> f64 {
    let cell = ch.serving_fap(ue);
    let h = ch.gain_fap_fue(cell, ue, n);

    let intra: f64 = later_in_sic(ue, n, m, ch)
        .iter()
        .map(|&j| p.get(j, n))
        .sum::<f64>()
        * h;

    let mut co_tier = 0.0;
    for k in 0..ch.n_faps() {
        if k != cell {
            let cell_power = p.cell_power_on(k, n, ch);
            if cell_power > 0.0 {
                co_tier += ch.gain_fap_fue(k, ue, n) * cell_power;
            }
        }
    }

    let cross_tier = ch.gain_mrrh_fue(ue, n) * ch.mrrh_power_per_sc_w();
    intra + co_tier + cross_tier + ch.noise_power_w()
}

/// Post-SIC SINR of `ue` on subchannel `n`: own power times serving-link
/// gain over [`interference_plus_noise`].
pub fn sinr(
    ue: usize,
    n: usize,
    m: &Matching,
    p: &PowerAllocation,
    ch: &ChannelState,
) -> Result<f64, PhyError> {
    if !m.contains(ue, n) {
        return Err(PhyError::Unmatched { fue: ue, subchannel: n });
    }
    let cell = ch.serving_fap(ue);
    let h = ch.gain_fap_fue(cell, ue, n);
    Ok(p.get(ue, n) * h / interference_plus_noise(ue, n, m, p, ch))
}

/// Shannon rate over one subchannel, bit/s.
pub fn rate(sinr: f64, subchannel_bw_hz: f64) -> f64 {
    debug_assert!(sinr >= 0.0);
    subchannel_bw_hz * (1.0 + sinr).log2()
}

/// Rates and SINRs over every matched pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rate: BTreeMap<(usize, usize), f64>,
    pub sinr: BTreeMap<(usize, usize), f64>,
    /// Row sums: total rate per F-UE over its matched subchannels.
    pub per_fue_total: BTreeMap<usize, f64>,
}

impl RateReport {
    pub fn sum_rate_bps(&self) -> f64 {
        self.rate.values().sum()
    }
}

/// Evaluates SINR and rate for every matched pair under `p`.
pub fn rate_report(m: &Matching, p: &PowerAllocation, ch: &ChannelState) -> RateReport {
    let mut report = RateReport {
        rate: BTreeMap::new(),
        sinr: BTreeMap::new(),
        per_fue_total: BTreeMap::new(),
    };
    for &(fue, sc) in m.pairs() {
        let s = sinr(fue, sc, m, p, ch).expect("pair taken from the matching");
        let r = rate(s, ch.subchannel_bandwidth_hz());
        report.sinr.insert((fue, sc), s);
        report.rate.insert((fue, sc), r);
        *report.per_fue_total.entry(fue).or_insert(0.0) += r;
    }
    report
}

/// Fog-tier interference received by each MUE.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroInterference {
    /// Watts per (MUE, subchannel).
    pub per_mue_subchannel: Vec<Vec<f64>>,
    /// Watts per MUE, summed over subchannels.
    pub per_mue_total: Vec<f64>,
}

impl MacroInterference {
    /// Largest single (MUE, subchannel) entry; 0 for an empty table.
    pub fn max_entry_w(&self) -> f64 {
        self.per_mue_subchannel
            .iter()
            .flatten()
            .fold(0.0, |acc, &x| acc.max(x))
    }
}

/// Aggregate fog-tier power at each MUE: for MUE `j` and subchannel `n`,
/// the sum over cells of `gain(k, j, n) * P(k, n)`.
pub fn macro_interference(
    _matching: &Matching,
    p: &PowerAllocation,
    ch: &ChannelState,
) -> MacroInterference {
    let mut per_mue_subchannel = vec![vec![0.0; ch.n_subchannels()]; ch.n_mues()];

    let mut cell_power = vec![vec![0.0; ch.n_subchannels()]; ch.n_faps()];
    for (&(fue, sc), &power) in p.iter() {
        cell_power[ch.serving_fap(fue)][sc] += power;
    }

    for j in 0..ch.n_mues() {
        for n in 0..ch.n_subchannels() {
            per_mue_subchannel[j][n] = (0..ch.n_faps())
                .map(|k| ch.gain_fap_mue(k, j, n) * cell_power[k][n])
                .sum();
        }
    }
    let per_mue_total = per_mue_subchannel.iter().map(|row| row.iter().sum()).collect();
    MacroInterference {
        per_mue_subchannel,
        per_mue_total,
    }
}
