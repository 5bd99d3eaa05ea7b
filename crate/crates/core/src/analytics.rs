//! Closed-form interference powers, pilot cross-correlation comparison,
//! NMSE aggregation and the downlink conjugate-beamforming rate bound.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::airframe::Regime;
use crate::channel::LargeScale;
use crate::estimator::{covariance_terms, LinkModel};
use crate::geometry::NetworkRealization;
use crate::pilot::dft_cross_power_factor;
use crate::{Error, Result, C64};

/// Linear values below this are clamped before conversion to dB.
pub const DB_FLOOR_LINEAR: f64 = 1e-15;

pub fn to_db(x: f64) -> f64 {
    10.0 * x.max(DB_FLOOR_LINEAR).log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    from_db(dbm - 30.0)
}

/// Expected per-link powers after matched filtering, summed over antennas.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerBreakdown {
    /// `M beta psi tau_p^2`
    pub desired: f64,
    /// `(k, power)` per interfering UE.
    pub interference: Vec<(usize, f64)>,
    /// `M sigma^2 tau_p / p`
    pub noise: f64,
}

impl PowerBreakdown {
    pub fn interference_total(&self) -> f64 {
        self.interference.iter().map(|(_, v)| v).sum()
    }
}

pub fn power_breakdown(model: &LinkModel<'_>, r: usize, u: usize) -> Result<PowerBreakdown> {
    let t = covariance_terms(model, r, u)?;
    let m = model.antennas as f64;
    Ok(PowerBreakdown {
        desired: m * t.desired,
        interference: t.interference.iter().map(|&(k, v)| (k, m * v)).collect(),
        noise: m * t.noise,
    })
}

/// `M beta' psi' overlap`: interference of a random-phase pilot.
pub fn random_seq_interference_power(beta: f64, psi: f64, antennas: usize, overlap: usize) -> f64 {
    antennas as f64 * beta * psi * overlap as f64
}

/// Samples of interferer `k`'s signal inside UE `u`'s matched-filter window.
///
/// UPG: pilot overlap `tau_p - |t_u - t_k|`. UPNG: an earlier interferer's
/// data fills the rest of the window, giving `tau_p`.
pub fn overlap_time(regime: Regime, t_u: usize, t_k: usize, tau_p: usize) -> usize {
    let pilot = tau_p.saturating_sub(t_u.abs_diff(t_k));
    match regime {
        Regime::Upng if t_u > t_k => tau_p,
        _ => pilot,
    }
}

/// Interference power of a DFT pilot with index `n` (arriving at `t_k`) on
/// the matched filter of index `m` (arriving at `t_u`).
///
/// `M beta' psi' R^2` with `R^2` the sin-ratio factor at the pilot overlap,
/// or `overlap^2` for co-pilots. UPNG adds `M beta' psi' min(t_u - t_k, tau_p)`
/// for an earlier interferer.
#[allow(clippy::too_many_arguments)]
pub fn dft_interference_power(
    regime: Regime,
    m: usize,
    n: usize,
    beta: f64,
    psi: f64,
    antennas: usize,
    tau_p: usize,
    t_u: usize,
    t_k: usize,
) -> f64 {
    let overlap = tau_p.saturating_sub(t_u.abs_diff(t_k)) as i64;
    let pilot = if m % tau_p == n % tau_p {
        (overlap * overlap) as f64
    } else {
        dft_cross_power_factor(m, n, tau_p, overlap).unwrap_or(0.0)
    };
    let data = match regime {
        Regime::Upng if t_u > t_k => (t_u - t_k).min(tau_p) as f64,
        _ => 0.0,
    };
    antennas as f64 * beta * psi * (pilot + data)
}

/// Which DFT index pairs the cross-correlation curve averages over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairConvention {
    /// Every ordered pair `m != n`.
    AllPairs,
    /// Neighbouring indices, `m - n = 1`.
    Adjacent,
}

impl PairConvention {
    pub fn name(self) -> &'static str {
        match self {
            PairConvention::AllPairs => "all_pairs",
            PairConvention::Adjacent => "adjacent",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrosscorrRow {
    pub tau_p: usize,
    pub overlap: usize,
    /// Monte-Carlo mean of `|x y^H|^2` over the overlap for random pilots.
    pub random: f64,
    /// DFT power factor under the pair convention.
    pub dft: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscorrTable {
    pub delay: usize,
    pub convention: PairConvention,
    pub rows: Vec<CrosscorrRow>,
    /// Smallest swept `tau_p` at which DFT exceeds random, following a
    /// point where it did not.
    pub crossover: Option<usize>,
}

/// DFT cross-correlation power at `overlap` under `convention`.
pub fn dft_pair_power(tau_p: usize, overlap: usize, convention: PairConvention) -> f64 {
    let o = overlap as i64;
    match convention {
        PairConvention::Adjacent if tau_p > 1 => dft_cross_power_factor(1, 0, tau_p, o).unwrap_or(0.0),
        PairConvention::Adjacent => 0.0,
        PairConvention::AllPairs => {
            if tau_p < 2 {
                return 0.0;
            }
            // The factor depends on m - n only; each difference occurs tau_p times.
            let sum: f64 = (1..tau_p).map(|d| dft_cross_power_factor(d, 0, tau_p, o).unwrap_or(0.0)).sum();
            sum / (tau_p - 1) as f64
        }
    }
}

/// Mean squared matched-filter cross-correlation of two pilots offset by
/// `delay` samples, for each `tau_p` in `tau_ps`.
pub fn crosscorr_comparison<R: Rng + ?Sized>(
    tau_ps: &[usize],
    delay: usize,
    convention: PairConvention,
    phase_levels: usize,
    trials: usize,
    rng: &mut R,
) -> Result<CrosscorrTable> {
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    if phase_levels == 0 {
        return Err(Error::config("pilot.P", "must be at least 1"));
    }
    let mut rows = Vec::with_capacity(tau_ps.len());
    for &tau_p in tau_ps {
        let overlap = tau_p.saturating_sub(delay);
        let mut acc = 0.0;
        for _ in 0..trials {
            // Phase differences of two independent uniform phasors are uniform.
            let mut s = C64::new(0.0, 0.0);
            for _ in 0..overlap {
                let k = rng.random_range(0..phase_levels);
                s += C64::from_polar(1.0, 2.0 * core::f64::consts::PI * k as f64 / phase_levels as f64);
            }
            acc += s.norm_sqr();
        }
        rows.push(CrosscorrRow {
            tau_p,
            overlap,
            random: acc / trials as f64,
            dft: dft_pair_power(tau_p, overlap, convention),
        });
    }
    let mut crossover = None;
    let mut below = false;
    for row in &rows {
        if row.dft > row.random {
            if below {
                crossover = Some(row.tau_p);
                break;
            }
        } else {
            below = true;
        }
    }
    Ok(CrosscorrTable {
        delay,
        convention,
        rows,
        crossover,
    })
}

/// Mean and spread of per-link NMSE values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NmseSummary {
    pub count: usize,
    pub mean_linear: f64,
    /// `to_db` of the linear mean.
    pub mean_db: f64,
    pub p10_db: f64,
    pub p90_db: f64,
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn nmse_aggregate(values: &[f64]) -> Result<NmseSummary> {
    if values.is_empty() {
        return Err(Error::Dimension("no links to aggregate".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut db: Vec<f64> = values.iter().map(|&v| to_db(v)).collect();
    db.sort_by(f64::total_cmp);
    Ok(NmseSummary {
        count: values.len(),
        mean_linear: mean,
        mean_db: to_db(mean),
        p10_db: percentile_sorted(&db, 0.1),
        p90_db: percentile_sorted(&db, 0.9),
    })
}

/// What the rate bound needs to know about one served link's estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkQuality {
    pub r: usize,
    pub u: usize,
    /// Scalar LMMSE gain `a`, so that `h_hat = a y`.
    pub gain: C64,
    /// Per-antenna estimate variance `gamma = E|h_hat|^2 / M`.
    pub gamma: f64,
    /// Pilot coupling `c_k` of every UE into this link's matched filter.
    pub couplings: Vec<C64>,
}

impl LinkQuality {
    /// Error-free estimate of a link with gain `beta_psi`.
    pub fn perfect(r: usize, u: usize, beta_psi: f64, ue_count: usize) -> Self {
        let mut couplings = vec![C64::new(0.0, 0.0); ue_count];
        couplings[u] = C64::new(1.0, 0.0);
        LinkQuality {
            r,
            u,
            gain: C64::new(1.0, 0.0),
            gamma: beta_psi,
            couplings,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub antennas: usize,
    pub noise_power: f64,
    pub p_dl: f64,
    /// Coherence block length in samples.
    pub tau_c: usize,
    pub tau_p: usize,
    pub tau_ex: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub overhead: f64,
    pub sinr: Vec<f64>,
    /// `overhead * log2(1 + sinr)` per UE; zero for unserved UEs.
    pub rate: Vec<f64>,
    pub served: Vec<bool>,
}

impl RateReport {
    /// Mean net rate over UEs with at least one serving AP.
    pub fn mean_served(&self) -> f64 {
        let (sum, n) = self
            .rate
            .iter()
            .zip(&self.served)
            .filter(|(_, &s)| s)
            .fold((0.0, 0usize), |(s, n), (r, _)| (s + r, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// `(tau_c - tau_p - tau_ex) / tau_c`, clipped to `[0, 1]`.
pub fn overhead_factor(tau_c: usize, tau_p: usize, tau_ex: usize) -> f64 {
    if tau_c == 0 {
        return 0.0;
    }
    (tau_c as f64 - tau_p as f64 - tau_ex as f64).clamp(0.0, tau_c as f64) / tau_c as f64
}

/// Channel-hardening lower bound on the downlink rate with conjugate
/// beamforming and equal per-AP power split `eta_ru = 1 / (|U_r| M gamma_ru)`:
///
/// ```text
/// DS_k = | sum_{r in R_k} sqrt(eta_rk) a_rk c_{rk,k} beta_rk psi_rk |
/// PC_k = sum_{u != k} | sum_{r in R_u} sqrt(eta_ru) a_ru c_{ru,k} beta_rk psi_rk |^2
/// BU_k = (1/M) sum_u sum_{r in R_u} eta_ru gamma_ru beta_rk psi_rk
/// SINR_k = DS_k^2 / (PC_k + BU_k + sigma^2 / (p_dl M^2))
/// ```
pub fn conjugate_bf_rate(
    net: &NetworkRealization,
    gains: &LargeScale,
    links: &[LinkQuality],
    params: &RateParams,
) -> Result<RateReport> {
    let ues = net.ue_count();
    let aps = net.ap_count();
    let m = params.antennas as f64;
    if !(params.p_dl > 0.0) {
        return Err(Error::Domain {
            what: "downlink power (W)",
            value: params.p_dl,
        });
    }
    let mut load = vec![0usize; aps];
    for l in links {
        if l.r >= aps || l.u >= ues || l.couplings.len() != ues {
            return Err(Error::Dimension(alloc::format!("link ({}, {}) does not fit the network", l.r, l.u)));
        }
        load[l.r] += 1;
    }
    let sqrt_eta: Vec<f64> = links
        .iter()
        .map(|l| {
            if l.gamma > 0.0 {
                (1.0 / (load[l.r] as f64 * m * l.gamma)).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut by_ue: Vec<Vec<usize>> = vec![Vec::new(); ues];
    for (i, l) in links.iter().enumerate() {
        by_ue[l.u].push(i);
    }

    let noise = params.noise_power / (params.p_dl * m * m);
    let overhead = overhead_factor(params.tau_c, params.tau_p, params.tau_ex);
    let mut sinr = vec![0.0; ues];
    let mut rate = vec![0.0; ues];
    let mut served = vec![false; ues];
    for k in 0..ues {
        if by_ue[k].is_empty() {
            continue;
        }
        served[k] = true;
        let mut ds = C64::new(0.0, 0.0);
        let mut pc = 0.0;
        let mut bu = 0.0;
        for (u, idx) in by_ue.iter().enumerate() {
            let mut coherent = C64::new(0.0, 0.0);
            for &i in idx {
                let l = &links[i];
                let bp = gains.combined(l.r, k);
                coherent += l.gain * l.couplings[k] * (sqrt_eta[i] * bp);
                bu += sqrt_eta[i] * sqrt_eta[i] * l.gamma * bp;
            }
            if u == k {
                ds = coherent;
            } else {
                pc += coherent.norm_sqr();
            }
        }
        let s = ds.norm_sqr() / (pc + bu / m + noise);
        sinr[k] = s;
        rate[k] = overhead * (1.0 + s).log2();
    }
    Ok(RateReport {
        overhead,
        sinr,
        rate,
        served,
    })
}
