//! Per-link, per-subchannel channel gains and CRNN values.
//!
//! Large-scale attenuation uses two log-distance path-loss models: a macro
//! model for MRRH links (`128.1 + 37.6 log10(d_km)`) and a fog model for
//! F-AP links (`38.46 + 20 log10(d_m)`), both with overridable intercepts
//! and slopes. Small-scale fading is i.i.d. Rayleigh (unit-mean exponential
//! power) per link per subchannel, flat within a subchannel; an optional
//! log-normal shadowing term is off by default. Gains are stored linear.
//!
//! The CRNN (channel response normalized by noise) of a served F-UE is its
//! serving-link gain divided by the per-subchannel noise power; it drives
//! both the SIC decoding order and the matching preferences.

use crate::topology::{distance, NetworkTopology};
use rand::Rng;
use thiserror::Error;

/// dBm to Watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path loss undefined for non-positive distance {distance} m")]
    NonPositiveDistance { distance: f64 },
}

/// Which large-scale model a link follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// MRRH to any receiver.
    Macro,
    /// F-AP to any receiver.
    Fog,
}

/// Log-distance path-loss parameters, dB.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossModel {
    pub macro_intercept_db: f64,
    pub macro_slope_db: f64,
    pub fog_intercept_db: f64,
    pub fog_slope_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            macro_intercept_db: 128.1,
            macro_slope_db: 37.6,
            fog_intercept_db: 38.46,
            fog_slope_db: 20.0,
        }
    }
}

impl PathLossModel {
    /// Path loss in dB at distance `d` meters. The macro model takes the
    /// distance in kilometers, the fog model in meters.
    pub fn path_loss_db(&self, kind: LinkKind, d: f64) -> Result<f64, ChannelError> {
        if !(d > 0.0) {
            return Err(ChannelError::NonPositiveDistance { distance: d });
        }
        Ok(match kind {
            LinkKind::Macro => self.macro_intercept_db + self.macro_slope_db * (d / 1000.0).log10(),
            LinkKind::Fog => self.fog_intercept_db + self.fog_slope_db * d.log10(),
        })
    }
}

/// Path loss in dB under the default models.
pub fn path_loss_db(kind: LinkKind, d: f64) -> Result<f64, ChannelError> {
    PathLossModel::default().path_loss_db(kind, d)
}

/// Small-scale fading model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    /// Unit-mean exponential power per (link, subchannel).
    Rayleigh,
    /// Fading factor forced to 1; gains are pure path loss.
    None,
}

/// Shared spectrum description.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub total_bandwidth_hz: f64,
    pub n_subchannels: usize,
    pub noise_psd_dbm_hz: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            total_bandwidth_hz: 5e6,
            n_subchannels: 25,
            noise_psd_dbm_hz: -174.0,
        }
    }
}

impl SpectrumConfig {
    pub fn subchannel_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz / self.n_subchannels as f64
    }

    /// Noise power per subchannel, Watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.subchannel_bandwidth_hz()
    }
}

/// Channel-draw knobs beyond the spectrum itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub path_loss: PathLossModel,
    pub fading: FadingKind,
    /// Log-normal shadowing standard deviation in dB; 0 disables the draw.
    pub shadowing_sigma_db: f64,
    /// Total MRRH transmit power, split equally across subchannels.
    pub mrrh_power_dbm: f64,
    /// Links shorter than this evaluate path loss at this distance, keeping
    /// gains finite when an F-UE lands arbitrarily close to its F-AP.
    pub min_link_distance_m: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            path_loss: PathLossModel::default(),
            fading: FadingKind::Rayleigh,
            shadowing_sigma_db: 0.0,
            mrrh_power_dbm: 43.0,
            min_link_distance_m: 1.0,
        }
    }
}

/// Immutable per-drop channel realization.
///
/// Gains are dense over all four link families — every F-AP to every F-UE
/// (serving and interfering), F-AP to MUE, MRRH to F-UE, MRRH to MUE — for
/// every subchannel, so a missing entry cannot exist by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    n_faps: usize,
    n_fues: usize,
    n_mues: usize,
    n_subchannels: usize,
    subchannel_bandwidth_hz: f64,
    noise_power_w: f64,
    mrrh_power_per_sc_w: f64,
    serving_fap: Vec<usize>,
    g_fap_fue: Vec<f64>,
    g_fap_mue: Vec<f64>,
    g_mrrh_fue: Vec<f64>,
    g_mrrh_mue: Vec<f64>,
    crnn: Vec<f64>,
}

impl ChannelState {
    /// Builds a channel state from explicit gain tables.
    ///
    /// Layouts: `g_fap_fue[(k * n_fues + m) * n_sc + n]`,
    /// `g_fap_mue[(k * n_mues + j) * n_sc + n]`, `g_mrrh_fue[m * n_sc + n]`,
    /// `g_mrrh_mue[j * n_sc + n]`. Panics on shape mismatch or any
    /// non-finite / non-positive gain — those are construction bugs.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_faps: usize,
        n_mues: usize,
        n_subchannels: usize,
        serving_fap: Vec<usize>,
        g_fap_fue: Vec<f64>,
        g_fap_mue: Vec<f64>,
        g_mrrh_fue: Vec<f64>,
        g_mrrh_mue: Vec<f64>,
        subchannel_bandwidth_hz: f64,
        noise_power_w: f64,
        mrrh_power_per_sc_w: f64,
    ) -> Self {
        let n_fues = serving_fap.len();
        assert_eq!(g_fap_fue.len(), n_faps * n_fues * n_subchannels);
        assert_eq!(g_fap_mue.len(), n_faps * n_mues * n_subchannels);
        assert_eq!(g_mrrh_fue.len(), n_fues * n_subchannels);
        assert_eq!(g_mrrh_mue.len(), n_mues * n_subchannels);
        assert!(noise_power_w > 0.0 && noise_power_w.is_finite());
        assert!(subchannel_bandwidth_hz > 0.0);
        assert!(mrrh_power_per_sc_w >= 0.0);
        for table in [&g_fap_fue, &g_fap_mue, &g_mrrh_fue, &g_mrrh_mue] {
            assert!(
                table.iter().all(|g| g.is_finite() && *g > 0.0),
                "channel gains must be finite and strictly positive"
            );
        }
        assert!(serving_fap.iter().all(|&k| k < n_faps.max(1)));

        let mut crnn = vec![0.0; n_fues * n_subchannels];
        for m in 0..n_fues {
            let k = serving_fap[m];
            for n in 0..n_subchannels {
                crnn[m * n_subchannels + n] =
                    g_fap_fue[(k * n_fues + m) * n_subchannels + n] / noise_power_w;
            }
        }

        Self {
            n_faps,
            n_fues,
            n_mues,
            n_subchannels,
            subchannel_bandwidth_hz,
            noise_power_w,
            mrrh_power_per_sc_w,
            serving_fap,
            g_fap_fue,
            g_fap_mue,
            g_mrrh_fue,
            g_mrrh_mue,
            crnn,
        }
    }

    pub fn n_faps(&self) -> usize {
        self.n_faps
    }

    pub fn n_fues(&self) -> usize {
        self.n_fues
    }

    pub fn n_mues(&self) -> usize {
        self.n_mues
    }

    pub fn n_subchannels(&self) -> usize {
        self.n_subchannels
    }

    pub fn subchannel_bandwidth_hz(&self) -> f64 {
        self.subchannel_bandwidth_hz
    }

    /// Noise power per subchannel, Watts.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }

    /// MRRH transmit power per subchannel, Watts.
    pub fn mrrh_power_per_sc_w(&self) -> f64 {
        self.mrrh_power_per_sc_w
    }

    pub fn serving_fap(&self, fue: usize) -> usize {
        self.serving_fap[fue]
    }

    /// Linear gain from F-AP `k` to F-UE `m` on subchannel `n`.
    pub fn gain_fap_fue(&self, k: usize, m: usize, n: usize) -> f64 {
        self.g_fap_fue[(k * self.n_fues + m) * self.n_subchannels + n]
    }

    /// Linear gain from F-AP `k` to MUE `j` on subchannel `n`.
    pub fn gain_fap_mue(&self, k: usize, j: usize, n: usize) -> f64 {
        self.g_fap_mue[(k * self.n_mues + j) * self.n_subchannels + n]
    }

    /// Linear gain from the MRRH to F-UE `m` on subchannel `n`.
    pub fn gain_mrrh_fue(&self, m: usize, n: usize) -> f64 {
        self.g_mrrh_fue[m * self.n_subchannels + n]
    }

    /// Linear gain from the MRRH to MUE `j` on subchannel `n`.
    pub fn gain_mrrh_mue(&self, j: usize, n: usize) -> f64 {
        self.g_mrrh_mue[j * self.n_subchannels + n]
    }

    /// CRNN of F-UE `m` on subchannel `n` (serving-cell gain over noise),
    /// 1/Watt.
    pub fn crnn(&self, m: usize, n: usize) -> f64 {
        self.crnn[m * self.n_subchannels + n]
    }

    /// Arithmetic mean of F-AP `k`'s gains to all MUEs on subchannel `n`;
    /// 0 when there are no MUEs. This is the victim-side gain the
    /// interference price multiplies.
    pub fn mean_gain_fap_mues(&self, k: usize, n: usize) -> f64 {
        if self.n_mues == 0 {
            return 0.0;
        }
        (0..self.n_mues)
            .map(|j| self.gain_fap_mue(k, j, n))
            .sum::<f64>()
            / self.n_mues as f64
    }
}

/// Floor on the exponential fading factor; keeps gains strictly positive
/// when the uniform draw hits 0 exactly.
const MIN_FADING: f64 = 1e-15;

struct GainDrawer<'a, R: Rng + ?Sized> {
    model: &'a PathLossModel,
    fading: FadingKind,
    shadowing_sigma_db: f64,
    min_distance: f64,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> GainDrawer<'a, R> {
    /// One link: optional shadowing draw, then one fading draw per
    /// subchannel, appended to `out`.
    fn draw_link(&mut self, kind: LinkKind, d: f64, n_subchannels: usize, out: &mut Vec<f64>) {
        let d = d.max(self.min_distance);
        let mut pl_db = self.model.path_loss_db(kind, d).expect("distance clamped positive");
        if self.shadowing_sigma_db > 0.0 {
            pl_db += self.shadowing_sigma_db * standard_normal(self.rng);
        }
        let base = db_to_linear(-pl_db);
        for _ in 0..n_subchannels {
            let f = match self.fading {
                FadingKind::Rayleigh => unit_exponential(self.rng).max(MIN_FADING),
                FadingKind::None => 1.0,
            };
            out.push(base * f);
        }
    }
}

/// Unit-mean exponential draw (Rayleigh power fading).
fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Standard normal via Box-Muller.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = (1.0 - rng.gen::<f64>()).max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draws a full channel realization for the given topology.
///
/// Link traversal order is fixed (F-AP→F-UE, F-AP→MUE, MRRH→F-UE,
/// MRRH→MUE, each index-major), so the result is fully determined by the
/// RNG seed.
pub fn draw_channel_gains<R: Rng + ?Sized>(
    t: &NetworkTopology,
    spectrum: &SpectrumConfig,
    config: &ChannelConfig,
    rng: &mut R,
) -> ChannelState {
    let n_sc = spectrum.n_subchannels;
    let mut drawer = GainDrawer {
        model: &config.path_loss,
        fading: config.fading,
        shadowing_sigma_db: config.shadowing_sigma_db,
        min_distance: config.min_link_distance_m,
        rng,
    };

    let mut g_fap_fue = Vec::with_capacity(t.n_faps() * t.n_fues() * n_sc);
    for &fap in &t.fap_positions {
        for &(_, fue) in &t.fue_positions {
            drawer.draw_link(LinkKind::Fog, distance(fap, fue), n_sc, &mut g_fap_fue);
        }
    }

    let mut g_fap_mue = Vec::with_capacity(t.n_faps() * t.n_mues() * n_sc);
    for &fap in &t.fap_positions {
        for &mue in &t.mue_positions {
            drawer.draw_link(LinkKind::Fog, distance(fap, mue), n_sc, &mut g_fap_mue);
        }
    }

    let mut g_mrrh_fue = Vec::with_capacity(t.n_fues() * n_sc);
    for &(_, fue) in &t.fue_positions {
        drawer.draw_link(LinkKind::Macro, distance(t.mrrh_position, fue), n_sc, &mut g_mrrh_fue);
    }

    let mut g_mrrh_mue = Vec::with_capacity(t.n_mues() * n_sc);
    for &mue in &t.mue_positions {
        drawer.draw_link(LinkKind::Macro, distance(t.mrrh_position, mue), n_sc, &mut g_mrrh_mue);
    }

    let serving = t.fue_positions.iter().map(|&(k, _)| k).collect();
    ChannelState::new(
        t.n_faps(),
        t.n_mues(),
        n_sc,
        serving,
        g_fap_fue,
        g_fap_mue,
        g_mrrh_fue,
        g_mrrh_mue,
        spectrum.subchannel_bandwidth_hz(),
        spectrum.noise_power_w(),
        dbm_to_watts(config.mrrh_power_dbm) / n_sc as f64,
    )
}
