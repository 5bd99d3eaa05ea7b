//! Per-trial Monte-Carlo pipeline and sweep aggregation.
//!
//! A trial draws one network, its large-scale gains and its fading, then
//! runs every requested variant at every sweep point on that draw. Pilot,
//! data and noise streams are keyed by pilot scheme, so the UPG and UPNG
//! runs of a scheme differ only by the data symbols in the window.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::airframe::{assemble_frame, NoiseField, ReceivedFrame, Regime, Transmissions};
use crate::analytics::{self, conjugate_bf_rate, LinkQuality, NmseSummary, RateParams};
use crate::channel::{ChannelMatrixSet, LargeScale};
use crate::estimator::{covariance_terms, estimate_link, mf_components, pilot_coupling, LinkModel};
use crate::geometry::{delay_spread_min_extension, NetworkRealization, SimArea, SPEED_OF_LIGHT};
use crate::pilot::{make_mf_sequence, make_pilot_book, Assignment, PilotBook, PilotConfig, PilotScheme};
use crate::rng::{substream, substream_seed, Stream};
use crate::{Error, Result};

/// One scheme/regime combination, or the synchronous reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    RandomUpg,
    RandomUpng,
    DftUpg,
    DftUpng,
    DftExtUpg,
    DftExtUpng,
    /// DFT pilots with every delay forced to zero.
    Sync,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::RandomUpg,
        Variant::RandomUpng,
        Variant::DftUpg,
        Variant::DftUpng,
        Variant::DftExtUpg,
        Variant::DftExtUpng,
        Variant::Sync,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::RandomUpg => "random_upg",
            Variant::RandomUpng => "random_upng",
            Variant::DftUpg => "dft_upg",
            Variant::DftUpng => "dft_upng",
            Variant::DftExtUpg => "dft_ext_upg",
            Variant::DftExtUpng => "dft_ext_upng",
            Variant::Sync => "sync",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    pub fn from_parts(scheme: PilotScheme, regime: Regime) -> Self {
        match (scheme, regime) {
            (PilotScheme::Random, Regime::Upg) => Variant::RandomUpg,
            (PilotScheme::Random, Regime::Upng) => Variant::RandomUpng,
            (PilotScheme::Dft, Regime::Upg) => Variant::DftUpg,
            (PilotScheme::Dft, Regime::Upng) => Variant::DftUpng,
            (PilotScheme::ExtendedDft, Regime::Upg) => Variant::DftExtUpg,
            (PilotScheme::ExtendedDft, Regime::Upng) => Variant::DftExtUpng,
        }
    }

    pub fn scheme(self) -> PilotScheme {
        match self {
            Variant::RandomUpg | Variant::RandomUpng => PilotScheme::Random,
            Variant::DftUpg | Variant::DftUpng | Variant::Sync => PilotScheme::Dft,
            Variant::DftExtUpg | Variant::DftExtUpng => PilotScheme::ExtendedDft,
        }
    }

    /// `None` for the synchronous reference, where no data reaches the window.
    pub fn regime(self) -> Option<Regime> {
        match self {
            Variant::RandomUpg | Variant::DftUpg | Variant::DftExtUpg => Some(Regime::Upg),
            Variant::RandomUpng | Variant::DftUpng | Variant::DftExtUpng => Some(Regime::Upng),
            Variant::Sync => None,
        }
    }

    pub fn scheme_label(self) -> &'static str {
        match self {
            Variant::Sync => "sync_dft",
            v => v.scheme().name(),
        }
    }

    pub fn regime_label(self) -> &'static str {
        self.regime().map_or("none", Regime::name)
    }

    fn stream_id(self) -> u32 {
        match self.scheme() {
            _ if self == Variant::Sync => 3,
            PilotScheme::Random => 0,
            PilotScheme::Dft => 1,
            PilotScheme::ExtendedDft => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauEx {
    /// Largest within-cluster delay spread of each network draw.
    AutoMin,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    PDbm,
    TauP,
    TauEx,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PDbm => "p_dbm",
            SweepVar::TauP => "tau_p",
            SweepVar::TauEx => "tau_ex",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub area: SimArea,
    pub cluster_size: usize,
    pub antennas: usize,
    pub shadowing_db: f64,
    pub noise_power: f64,
    pub tau_p: usize,
    /// Extension used by the extended DFT variants.
    pub tau_ex: TauEx,
    pub phase_levels: usize,
    pub assignment: Assignment,
    /// Uplink power when it is not the swept variable.
    pub p_ul_dbm: f64,
    /// Downlink power for the rate bound; tracks the uplink power if unset.
    pub p_dl_dbm: Option<f64>,
    pub tau_c: usize,
    /// Apply an independent uniform phase to every link's channel.
    pub link_phase: bool,
    pub compute_rate: bool,
    pub variants: Vec<Variant>,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
}

pub fn power_sweep_dbm() -> Vec<f64> {
    (0..8).map(|i| -36.0 + 8.0 * i as f64).collect()
}

impl ExperimentConfig {
    /// 0.7 km^2, 70 APs, on average 98 UEs.
    pub fn full() -> Self {
        ExperimentConfig {
            area: SimArea {
                side_m: (0.7e6f64).sqrt(),
                ap_count: 70,
                ue_mean: 98.0,
                restricted_radius_m: 20.0,
                bandwidth_hz: 20e6,
                propagation_speed: SPEED_OF_LIGHT,
            },
            cluster_size: 4,
            antennas: 8,
            shadowing_db: 4.0,
            noise_power: 1e-14,
            tau_p: 32,
            tau_ex: TauEx::AutoMin,
            phase_levels: 8,
            assignment: Assignment::RoundRobin,
            p_ul_dbm: 20.0,
            p_dl_dbm: None,
            tau_c: 200,
            link_phase: false,
            compute_rate: true,
            variants: vec![Variant::DftUpg],
            sweep: Sweep {
                var: SweepVar::PDbm,
                values: power_sweep_dbm(),
            },
            trials: 500,
            seed: 1,
        }
    }

    /// 0.1 km^2, 10 APs, on average 14 UEs: the full-scale densities on a
    /// smaller square.
    pub fn desk() -> Self {
        let mut cfg = Self::full();
        cfg.apply_desk_scale();
        cfg.trials = 200;
        cfg
    }

    /// Shrinks the area to 0.1 km^2 keeping AP and UE densities.
    pub fn apply_desk_scale(&mut self) {
        let factor = 0.1e6 / (self.area.side_m * self.area.side_m);
        self.area.side_m = (0.1e6f64).sqrt();
        self.area.ap_count = ((self.area.ap_count as f64 * factor).round() as usize).max(1);
        self.area.ue_mean *= factor;
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        if self.cluster_size == 0 {
            return Err(Error::config("cluster.size", "must be at least 1"));
        }
        if self.antennas == 0 {
            return Err(Error::config("chan.antennas", "must be at least 1"));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::config("chan.noise_w", "must be positive"));
        }
        if !(self.shadowing_db >= 0.0) {
            return Err(Error::config("chan.sigma_sh_db", "must be nonnegative"));
        }
        if self.tau_p == 0 {
            return Err(Error::config("pilot.tau_p", "must be at least 1"));
        }
        if self.phase_levels == 0 {
            return Err(Error::config("pilot.P", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(Error::config("run.variants", "at least one variant is required"));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::config(
                alloc::format!("sweep.{}", self.sweep.var.name()),
                "needs at least one value",
            ));
        }
        for &v in &self.sweep.values {
            let ok = match self.sweep.var {
                SweepVar::PDbm => v.is_finite(),
                SweepVar::TauP => v >= 1.0 && v.fract() == 0.0,
                SweepVar::TauEx => v >= 0.0 && v.fract() == 0.0,
            };
            if !ok {
                return Err(Error::config(
                    alloc::format!("sweep.{}", self.sweep.var.name()),
                    alloc::format!("value {v} is out of domain"),
                ));
            }
        }
        Ok(())
    }

    pub fn point(&self, index: usize) -> SweepPoint {
        let value = self.sweep.values[index];
        let mut point = SweepPoint {
            value,
            p_ul_dbm: self.p_ul_dbm,
            tau_p: self.tau_p,
            tau_ex: self.tau_ex,
        };
        match self.sweep.var {
            SweepVar::PDbm => point.p_ul_dbm = value,
            SweepVar::TauP => point.tau_p = value as usize,
            SweepVar::TauEx => point.tau_ex = TauEx::Fixed(value as usize),
        }
        point
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub p_ul_dbm: f64,
    pub tau_p: usize,
    pub tau_ex: TauEx,
}

/// Diagnostics of one served link.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkDiagnostic {
    pub r: usize,
    pub u: usize,
    pub nmse: f64,
    pub desired_power: f64,
    pub interference_power: f64,
    pub noise_power: f64,
}

/// Result of one variant at one sweep point in one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRecord {
    pub point: usize,
    pub variant: Variant,
    pub tau_p: usize,
    pub tau_ex: usize,
    /// Per served link, AP-major.
    pub nmse: Vec<f64>,
    pub rate_mean: Option<f64>,
    pub links: Vec<LinkDiagnostic>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    /// Seed of the trial's network stream.
    pub network_seed: u64,
    pub ue_count: usize,
    pub cells: Vec<CellRecord>,
}

/// Draws trial `trial`'s network, gains and fading.
pub fn draw_realization(cfg: &ExperimentConfig, trial: u64) -> Result<(NetworkRealization, LargeScale, ChannelMatrixSet)> {
    let mut rng = substream(cfg.seed, trial, Stream::Network);
    let net = NetworkRealization::sample(&cfg.area, cfg.cluster_size, &mut rng)?;
    let gains = LargeScale::sample(&net, cfg.shadowing_db, &mut rng)?;
    let mut fading = substream(cfg.seed, trial, Stream::Fading);
    let mut chan = ChannelMatrixSet::draw(&gains, net.ap_count(), cfg.antennas, cfg.noise_power, &mut fading);
    if cfg.link_phase {
        chan.rotate_links(&mut substream(cfg.seed, trial, Stream::Aux(0)));
    }
    Ok((net, gains, chan))
}

/// Runs every variant at every sweep point on trial `trial`'s draw.
pub fn run_trial(cfg: &ExperimentConfig, trial: u64, diagnostics: bool) -> Result<TrialRecord> {
    let (net, gains, chan) = draw_realization(cfg, trial)?;
    let sync_net = net.synchronized();
    let mut cells = Vec::with_capacity(cfg.sweep.values.len() * cfg.variants.len());
    for point_index in 0..cfg.sweep.values.len() {
        let point = cfg.point(point_index);
        for &variant in &cfg.variants {
            let net_v = if variant == Variant::Sync { &sync_net } else { &net };
            let cell = run_cell(cfg, trial, &point, variant, net_v, &gains, &chan, diagnostics)?;
            cells.push(CellRecord {
                point: point_index,
                ..cell
            });
        }
    }
    Ok(TrialRecord {
        trial,
        network_seed: substream_seed(cfg.seed, trial, Stream::Network),
        ue_count: net.ue_count(),
        cells,
    })
}

/// Pilot book, transmissions and noise of one variant in one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSetup {
    pub book: PilotBook,
    pub tx: Transmissions,
    pub noise: NoiseField,
    pub regime: Regime,
    pub tau_ex: usize,
}

/// Builds `variant`'s pilots, data and noise on `net` (the synchronized
/// network for [`Variant::Sync`]) from the trial's variant streams.
pub fn setup_variant(
    cfg: &ExperimentConfig,
    trial: u64,
    point: &SweepPoint,
    variant: Variant,
    net: &NetworkRealization,
) -> Result<VariantSetup> {
    let scheme = variant.scheme();
    let regime = variant.regime().unwrap_or(Regime::Upg);
    let tau_ex = match (scheme, point.tau_ex) {
        (PilotScheme::ExtendedDft, TauEx::AutoMin) => delay_spread_min_extension(net),
        (PilotScheme::ExtendedDft, TauEx::Fixed(t)) => t,
        _ => 0,
    };
    let pilots = PilotConfig {
        scheme,
        tau_p: point.tau_p,
        tau_ex,
        phase_levels: cfg.phase_levels,
        assignment: cfg.assignment,
    };
    let id = variant.stream_id();
    let book = make_pilot_book(&pilots, net.ue_positions(), &mut substream(cfg.seed, trial, Stream::Pilots(id)))?;
    let tx = Transmissions::draw(&book, net, regime, &mut substream(cfg.seed, trial, Stream::Data(id)));
    let noise = NoiseField::draw(
        &book,
        net,
        cfg.antennas,
        cfg.noise_power,
        &mut substream(cfg.seed, trial, Stream::Noise(id)),
    );
    Ok(VariantSetup {
        book,
        tx,
        noise,
        regime,
        tau_ex,
    })
}

/// Received frame of every AP for `variant` at sweep point `point` of
/// trial `trial`, exactly as the sweep sees it.
pub fn variant_frame(cfg: &ExperimentConfig, trial: u64, point: usize, variant: Variant) -> Result<ReceivedFrame> {
    let (net, _, chan) = draw_realization(cfg, trial)?;
    let net = if variant == Variant::Sync { net.synchronized() } else { net };
    let point = cfg.point(point);
    let s = setup_variant(cfg, trial, &point, variant, &net)?;
    assemble_frame(&s.book, &net, &chan, &s.tx, &s.noise, analytics::dbm_to_watts(point.p_ul_dbm))
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    trial: u64,
    point: &SweepPoint,
    variant: Variant,
    net: &NetworkRealization,
    gains: &LargeScale,
    chan: &ChannelMatrixSet,
    diagnostics: bool,
) -> Result<CellRecord> {
    let VariantSetup {
        book,
        tx,
        noise,
        regime,
        tau_ex,
    } = setup_variant(cfg, trial, point, variant, net)?;
    let p_ul = analytics::dbm_to_watts(point.p_ul_dbm);
    let model = LinkModel {
        book: &book,
        net,
        gains,
        regime,
        antennas: cfg.antennas,
        noise_power: cfg.noise_power,
        p_ul,
    };

    let mut nmse = Vec::new();
    let mut links = Vec::new();
    let mut quality = Vec::new();
    for (r, u) in net.served_links() {
        let out = mf_components(&book, net, chan, &tx, &noise, r, u, p_ul)?;
        let terms = covariance_terms(&model, r, u)?;
        let est = estimate_link(&out.y, &terms.pair(cfg.antennas), chan.vector(r, u))?;
        nmse.push(est.nmse);
        if diagnostics {
            links.push(LinkDiagnostic {
                r,
                u,
                nmse: est.nmse,
                desired_power: out.desired_power(),
                interference_power: out.interference_power(),
                noise_power: out.noise_power(),
            });
        }
        if cfg.compute_rate {
            let mf = make_mf_sequence(&book, net, r, u);
            quality.push(LinkQuality {
                r,
                u,
                gain: terms.gain(),
                gamma: terms.estimate_variance(),
                couplings: (0..net.ue_count()).map(|k| pilot_coupling(&book, net, r, k, &mf).pilot).collect(),
            });
        }
    }

    let rate_mean = if cfg.compute_rate {
        let params = RateParams {
            antennas: cfg.antennas,
            noise_power: cfg.noise_power,
            p_dl: analytics::dbm_to_watts(cfg.p_dl_dbm.unwrap_or(point.p_ul_dbm)),
            tau_c: cfg.tau_c,
            tau_p: point.tau_p,
            tau_ex,
        };
        Some(conjugate_bf_rate(net, gains, &quality, &params)?.mean_served())
    } else {
        None
    };

    Ok(CellRecord {
        point: 0,
        variant,
        tau_p: point.tau_p,
        tau_ex,
        nmse,
        rate_mean,
        links,
    })
}

/// Order-independent collection of trial records; merging is associative
/// and the summary does not depend on the order trials arrived in.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepAccumulator {
    trials: BTreeMap<u64, TrialRecord>,
}

impl SweepAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TrialRecord) {
        self.trials.insert(record.trial, record);
    }

    pub fn merge(mut self, other: SweepAccumulator) -> Self {
        self.trials.extend(other.trials);
        self
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.values()
    }

    pub fn finish(&self, cfg: &ExperimentConfig) -> Result<SweepResult> {
        let mut rows = Vec::new();
        for point in 0..cfg.sweep.values.len() {
            for &variant in &cfg.variants {
                let mut values = Vec::new();
                let mut tau_ex_sum = 0usize;
                let mut tau_p = cfg.point(point).tau_p;
                let mut rate_sum = 0.0;
                let mut rate_n = 0usize;
                let mut trials = 0usize;
                for rec in self.trials.values() {
                    for cell in rec.cells.iter().filter(|c| c.point == point && c.variant == variant) {
                        values.extend_from_slice(&cell.nmse);
                        tau_ex_sum += cell.tau_ex;
                        tau_p = cell.tau_p;
                        if let Some(rate) = cell.rate_mean {
                            rate_sum += rate;
                            rate_n += 1;
                        }
                        trials += 1;
                    }
                }
                if trials == 0 {
                    continue;
                }
                rows.push(SweepRow {
                    sweep_var: cfg.sweep.var,
                    sweep_value: cfg.sweep.values[point],
                    variant,
                    tau_p,
                    tau_ex: tau_ex_sum as f64 / trials as f64,
                    nmse: analytics::nmse_aggregate(&values)?,
                    rate_mean: (rate_n > 0).then(|| rate_sum / rate_n as f64),
                    trials,
                    seed: cfg.seed,
                });
            }
        }
        Ok(SweepResult { rows })
    }
}

/// One aggregated output row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub variant: Variant,
    pub tau_p: usize,
    /// Mean extension over trials (varies per trial under `auto_min`).
    pub tau_ex: f64,
    pub nmse: NmseSummary,
    pub rate_mean: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, variant: Variant, sweep_value: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.sweep_value == sweep_value)
    }

    /// Rows of one variant in sweep order.
    pub fn series(&self, variant: Variant) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.variant == variant).collect()
    }
}

/// Runs all trials serially.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut acc = SweepAccumulator::new();
    for trial in 0..cfg.trials as u64 {
        acc.push(run_trial(cfg, trial, false)?);
    }
    acc.finish(cfg)
}

/// Figure presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Pilot cross-correlation against pilot length.
    Fig3,
    /// NMSE against power: random and DFT pilots, UPG and UPNG.
    Fig6,
    /// NMSE against power: DFT, extended DFT and the synchronous reference.
    Fig7,
    /// NMSE against the extension length at 20 dBm.
    Fig8,
    /// Downlink rate against power.
    Fig9,
}

impl Figure {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig3" => Some(Figure::Fig3),
            "fig6" => Some(Figure::Fig6),
            "fig7" => Some(Figure::Fig7),
            "fig8" => Some(Figure::Fig8),
            "fig9" => Some(Figure::Fig9),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
        }
    }

    /// Sweep preset on the full-scale layout. `Fig3` has no network
    /// sweep; see [`CrosscorrPreset`].
    pub fn preset(self) -> Option<ExperimentConfig> {
        let mut cfg = ExperimentConfig::full();
        match self {
            Figure::Fig3 => return None,
            Figure::Fig6 => {
                cfg.variants = vec![Variant::RandomUpg, Variant::RandomUpng, Variant::DftUpg, Variant::DftUpng];
                cfg.compute_rate = false;
            }
            Figure::Fig7 => {
                cfg.variants = vec![Variant::DftUpg, Variant::DftUpng, Variant::DftExtUpng, Variant::Sync];
                cfg.compute_rate = false;
            }
            Figure::Fig8 => {
                cfg.variants = vec![Variant::DftExtUpng];
                cfg.sweep = Sweep {
                    var: SweepVar::TauEx,
                    values: (0..=6).map(f64::from).collect(),
                };
                cfg.p_ul_dbm = 20.0;
                cfg.compute_rate = false;
            }
            Figure::Fig9 => {
                cfg.variants = vec![Variant::Sync, Variant::DftUpg, Variant::DftUpng, Variant::DftExtUpng];
            }
        }
        Some(cfg)
    }
}

/// Settings of the pilot cross-correlation comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CrosscorrPreset {
    pub tau_ps: Vec<usize>,
    pub delay: usize,
    pub convention: analytics::PairConvention,
    pub phase_levels: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for CrosscorrPreset {
    fn default() -> Self {
        CrosscorrPreset {
            tau_ps: (30..=64).collect(),
            delay: 36,
            convention: analytics::PairConvention::Adjacent,
            phase_levels: 8,
            trials: 10_000,
            seed: 1,
        }
    }
}

impl CrosscorrPreset {
    pub fn run(&self) -> Result<analytics::CrosscorrTable> {
        let mut rng = substream(self.seed, 0, Stream::Aux(1));
        analytics::crosscorr_comparison(&self.tau_ps, self.delay, self.convention, self.phase_levels, self.trials, &mut rng)
    }
}
