//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, lists are written as
//! `[a, b, c]`. Keys are dotted (`pilot.tau_p`, `sweep.p_dbm`, ...); see
//! [`KEYS`] for the full set.

use std::collections::BTreeMap;
use std::path::Path;

use cellfree_core::airframe::Regime;
use cellfree_core::analytics::PairConvention;
use cellfree_core::experiment::{CrosscorrPreset, ExperimentConfig, Sweep, SweepVar, TauEx, Variant};
use cellfree_core::pilot::{Assignment, PilotScheme};

use crate::SimError;

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "area.side_m",
    "area.ap_count",
    "area.ue_mean",
    "area.gamma_m",
    "sys.bw_hz",
    "cluster.size",
    "chan.sigma_sh_db",
    "chan.noise_w",
    "chan.antennas",
    "pilot.scheme",
    "pilot.tau_p",
    "pilot.tau_ex",
    "pilot.P",
    "pilot.assignment",
    "pilot.link_phase",
    "frame.regime",
    "run.variants",
    "power.p_ul_dbm",
    "rate.enabled",
    "rate.p_dl_dbm",
    "rate.tau_c",
    "sweep.p_dbm",
    "sweep.tau_p",
    "sweep.tau_ex",
    "crosscorr.delay",
    "crosscorr.pairs",
    "crosscorr.tau_p",
    "trials",
    "seed",
];

/// Parsed settings in file order; later duplicates win.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SimError::config(format!("line {}", n + 1), "expected `key = value`"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(SimError::config(key, "unknown key"));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Adds `key=value` overrides.
    pub fn set(&mut self, assignment: &str) -> Result<(), SimError> {
        let parsed = Self::parse(assignment)?;
        self.values.extend(parsed.values);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, SimError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| SimError::config(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, SimError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
        inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|_| SimError::config(key, format!("cannot parse `{s}`"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, SimError> {
        self.get(key)
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(SimError::config(key, format!("expected true or false, got `{v}`"))),
            })
            .transpose()
    }

    /// Writes every present key into `cfg`.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), SimError> {
        if let Some(v) = self.num("area.side_m")? {
            cfg.area.side_m = v;
        }
        if let Some(v) = self.num("area.ap_count")? {
            cfg.area.ap_count = v;
        }
        if let Some(v) = self.num("area.ue_mean")? {
            cfg.area.ue_mean = v;
        }
        if let Some(v) = self.num("area.gamma_m")? {
            cfg.area.restricted_radius_m = v;
        }
        if let Some(v) = self.num("sys.bw_hz")? {
            cfg.area.bandwidth_hz = v;
        }
        if let Some(v) = self.num("cluster.size")? {
            cfg.cluster_size = v;
        }
        if let Some(v) = self.num("chan.sigma_sh_db")? {
            cfg.shadowing_db = v;
        }
        if let Some(v) = self.num("chan.noise_w")? {
            cfg.noise_power = v;
        }
        if let Some(v) = self.num("chan.antennas")? {
            cfg.antennas = v;
        }
        if let Some(v) = self.num("pilot.tau_p")? {
            cfg.tau_p = v;
        }
        if let Some(v) = self.get("pilot.tau_ex") {
            cfg.tau_ex = parse_tau_ex(v)?;
        }
        if let Some(v) = self.num("pilot.P")? {
            cfg.phase_levels = v;
        }
        if let Some(v) = self.get("pilot.assignment") {
            cfg.assignment = match v {
                "round_robin" => Assignment::RoundRobin,
                "maxmin_distance" => Assignment::MaxMinDistance,
                _ => return Err(SimError::config("pilot.assignment", format!("unknown assignment `{v}`"))),
            };
        }
        if let Some(v) = self.flag("pilot.link_phase")? {
            cfg.link_phase = v;
        }
        if let Some(v) = self.num("power.p_ul_dbm")? {
            cfg.p_ul_dbm = v;
        }
        if let Some(v) = self.flag("rate.enabled")? {
            cfg.compute_rate = v;
        }
        if let Some(v) = self.num("rate.p_dl_dbm")? {
            cfg.p_dl_dbm = Some(v);
        }
        if let Some(v) = self.num("rate.tau_c")? {
            cfg.tau_c = v;
        }
        if let Some(v) = self.num("trials")? {
            cfg.trials = v;
        }
        if let Some(v) = self.num("seed")? {
            cfg.seed = v;
        }

        if let Some(names) = self.list::<String>("run.variants")? {
            cfg.variants = names
                .iter()
                .map(|n| Variant::parse(n).ok_or_else(|| SimError::config("run.variants", format!("unknown variant `{n}`"))))
                .collect::<Result<_, _>>()?;
        } else if self.get("pilot.scheme").is_some() || self.get("frame.regime").is_some() {
            let scheme = match self.get("pilot.scheme").unwrap_or("dft") {
                "random" => PilotScheme::Random,
                "dft" => PilotScheme::Dft,
                "dft_ext" => PilotScheme::ExtendedDft,
                v => return Err(SimError::config("pilot.scheme", format!("unknown scheme `{v}`"))),
            };
            let regime = match self.get("frame.regime").unwrap_or("upg") {
                "upg" => Regime::Upg,
                "upng" => Regime::Upng,
                v => return Err(SimError::config("frame.regime", format!("unknown regime `{v}`"))),
            };
            cfg.variants = vec![Variant::from_parts(scheme, regime)];
        }

        let sweeps = [
            ("sweep.p_dbm", SweepVar::PDbm),
            ("sweep.tau_p", SweepVar::TauP),
            ("sweep.tau_ex", SweepVar::TauEx),
        ];
        let present: Vec<_> = sweeps.iter().filter(|(k, _)| self.get(k).is_some()).collect();
        if present.len() > 1 {
            return Err(SimError::config(present[1].0, "only one sweep variable may be set per run"));
        }
        if let Some((key, var)) = present.first() {
            cfg.sweep = Sweep {
                var: *var,
                values: self.list::<f64>(key)?.unwrap_or_default(),
            };
        }
        cfg.validate().map_err(SimError::from)
    }

    pub fn apply_crosscorr(&self, preset: &mut CrosscorrPreset) -> Result<(), SimError> {
        if let Some(v) = self.num("crosscorr.delay")? {
            preset.delay = v;
        }
        if let Some(v) = self.get("crosscorr.pairs") {
            preset.convention = parse_pairs(v)?;
        }
        if let Some(v) = self.list("crosscorr.tau_p")? {
            preset.tau_ps = v;
        }
        if let Some(v) = self.num("pilot.P")? {
            preset.phase_levels = v;
        }
        if let Some(v) = self.num("trials")? {
            preset.trials = v;
        }
        if let Some(v) = self.num("seed")? {
            preset.seed = v;
        }
        Ok(())
    }
}

pub fn parse_tau_ex(v: &str) -> Result<TauEx, SimError> {
    if v == "auto_min" {
        return Ok(TauEx::AutoMin);
    }
    v.parse()
        .map(TauEx::Fixed)
        .map_err(|_| SimError::config("pilot.tau_ex", format!("expected auto_min or an integer, got `{v}`")))
}

pub fn parse_pairs(v: &str) -> Result<PairConvention, SimError> {
    match v {
        "all" | "all_pairs" => Ok(PairConvention::AllPairs),
        "adjacent" => Ok(PairConvention::Adjacent),
        _ => Err(SimError::config("crosscorr.pairs", format!("expected all or adjacent, got `{v}`"))),
    }
}
