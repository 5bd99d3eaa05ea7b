//! Pilot books and matched-filter sequences.
//!
//! Three schemes are supported: i.i.d. quantized random phases, rows of the
//! DFT matrix, and DFT rows with a cyclic extension of `tau_ex` samples.
//! Because consecutive DFT entries differ by the constant factor
//! `exp(j 2 pi m / tau_p)`, every length-`tau_p` window of an extended row is
//! a phase-rotated copy of the base row, which keeps rows orthogonal inside
//! a matched-filter window even when arrivals are misaligned.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;
use rand::Rng;

use crate::geometry::{NetworkRealization, Point};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PilotScheme {
    Random,
    Dft,
    ExtendedDft,
}

impl PilotScheme {
    pub fn name(self) -> &'static str {
        match self {
            PilotScheme::Random => "random",
            PilotScheme::Dft => "dft",
            PilotScheme::ExtendedDft => "dft_ext",
        }
    }

    pub fn is_dft(self) -> bool {
        !matches!(self, PilotScheme::Random)
    }
}

/// How UEs are mapped to pilot indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assignment {
    /// `m = u mod tau_p`.
    RoundRobin,
    /// Greedy: each UE in turn takes the index whose current holders are
    /// farthest from it.
    MaxMinDistance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotConfig {
    pub scheme: PilotScheme,
    pub tau_p: usize,
    /// Cyclic extension, nonzero only for [`PilotScheme::ExtendedDft`].
    pub tau_ex: usize,
    /// Phase quantization levels of random pilots.
    pub phase_levels: usize,
    pub assignment: Assignment,
}

impl PilotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_p == 0 {
            return Err(Error::config("pilot.tau_p", "must be at least 1"));
        }
        if self.tau_ex > 0 && self.scheme != PilotScheme::ExtendedDft {
            return Err(Error::config(
                "pilot.tau_ex",
                "a cyclic extension requires the dft_ext scheme",
            ));
        }
        if self.scheme == PilotScheme::Random && self.phase_levels == 0 {
            return Err(Error::config("pilot.P", "must be at least 1"));
        }
        Ok(())
    }
}

/// Non-fatal conditions recorded in a book.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BookWarning {
    /// `tau_ex >= tau_p`: the extension wraps the base row more than once.
    ExtensionWrapsPilot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PilotBook {
    scheme: PilotScheme,
    tau_p: usize,
    tau_ex: usize,
    phase_levels: usize,
    indices: Vec<usize>,
    sequences: Vec<Vec<C64>>,
    warnings: Vec<BookWarning>,
}

/// `exp(j 2 pi m n / tau_p)` with the exponent reduced modulo `tau_p`.
pub fn dft_entry(m: usize, n: usize, tau_p: usize) -> C64 {
    let k = ((m % tau_p) * (n % tau_p)) % tau_p;
    C64::from_polar(1.0, 2.0 * PI * k as f64 / tau_p as f64)
}

/// Row `m` of the DFT matrix, cyclically extended to `len` entries.
pub fn dft_row(m: usize, tau_p: usize, len: usize) -> Vec<C64> {
    (0..len).map(|n| dft_entry(m, n % tau_p, tau_p)).collect()
}

fn round_robin(ue_count: usize, tau_p: usize) -> Vec<usize> {
    (0..ue_count).map(|u| u % tau_p).collect()
}

fn maxmin_distance(positions: &[Point], tau_p: usize) -> Vec<usize> {
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); tau_p];
    let mut indices = Vec::with_capacity(positions.len());
    for (u, p) in positions.iter().enumerate() {
        let mut best = 0;
        let mut best_dist = f64::NEG_INFINITY;
        for (m, hs) in holders.iter().enumerate() {
            let d = hs
                .iter()
                .map(|&v| positions[v].distance(p))
                .fold(f64::INFINITY, f64::min);
            if d > best_dist {
                best = m;
                best_dist = d;
            }
        }
        holders[best].push(u);
        indices.push(best);
    }
    indices
}

/// Builds the pilot book for `ue_positions.len()` UEs.
///
/// Positions are only consulted by [`Assignment::MaxMinDistance`].
pub fn make_pilot_book<R: Rng + ?Sized>(
    config: &PilotConfig,
    ue_positions: &[Point],
    rng: &mut R,
) -> Result<PilotBook> {
    config.validate()?;
    let ue_count = ue_positions.len();
    let tau_p = config.tau_p;
    let indices = match config.assignment {
        Assignment::RoundRobin => round_robin(ue_count, tau_p),
        Assignment::MaxMinDistance => maxmin_distance(ue_positions, tau_p),
    };
    let len = tau_p + config.tau_ex;
    let sequences = match config.scheme {
        PilotScheme::Random => {
            let levels = config.phase_levels;
            (0..ue_count)
                .map(|_| {
                    (0..tau_p)
                        .map(|_| {
                            let k = rng.random_range(0..levels);
                            C64::from_polar(1.0, 2.0 * PI * k as f64 / levels as f64)
                        })
                        .collect()
                })
                .collect()
        }
        PilotScheme::Dft | PilotScheme::ExtendedDft => {
            indices.iter().map(|&m| dft_row(m, tau_p, len)).collect()
        }
    };
    let mut warnings = Vec::new();
    if config.scheme == PilotScheme::ExtendedDft && config.tau_ex >= tau_p {
        warnings.push(BookWarning::ExtensionWrapsPilot);
    }
    Ok(PilotBook {
        scheme: config.scheme,
        tau_p,
        tau_ex: config.tau_ex,
        phase_levels: config.phase_levels,
        indices,
        sequences,
        warnings,
    })
}

impl PilotBook {
    pub fn scheme(&self) -> PilotScheme {
        self.scheme
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn tau_ex(&self) -> usize {
        self.tau_ex
    }

    /// Transmitted pilot length, `tau_p + tau_ex`.
    pub fn transmitted_len(&self) -> usize {
        self.tau_p + self.tau_ex
    }

    pub fn phase_levels(&self) -> usize {
        self.phase_levels
    }

    pub fn ue_count(&self) -> usize {
        self.sequences.len()
    }

    /// Pilot index of UE `u`. Meaningful for DFT schemes only.
    pub fn index(&self, u: usize) -> usize {
        self.indices[u]
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Whether `u` and `v` share a pilot (never for random pilots).
    pub fn is_copilot(&self, u: usize, v: usize) -> bool {
        self.scheme.is_dft() && self.indices[u] == self.indices[v]
    }

    /// Full transmitted pilot of UE `u`, including any extension.
    pub fn transmitted(&self, u: usize) -> &[C64] {
        &self.sequences[u]
    }

    /// Base (unextended) pilot of UE `u`.
    pub fn base(&self, u: usize) -> &[C64] {
        &self.sequences[u][..self.tau_p]
    }

    pub fn warnings(&self) -> &[BookWarning] {
        &self.warnings
    }

    /// Column count of AP `r`'s pilot frame: `tau_p + tau_ex + t_max_r`.
    pub fn frame_len(&self, net: &NetworkRealization, r: usize) -> usize {
        self.transmitted_len() + net.t_max(r)
    }
}

/// Matched-filter sequence of link (r, u): the base pilot placed at
/// `window_start` inside an otherwise zero row of `len` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MfSequence {
    pub window_start: usize,
    pub len: usize,
    pub taps: Vec<C64>,
}

impl MfSequence {
    pub fn window(&self) -> core::ops::Range<usize> {
        self.window_start..self.window_start + self.taps.len()
    }

    /// Zero-padded row.
    pub fn row(&self) -> Vec<C64> {
        let mut row = vec![C64::new(0.0, 0.0); self.len];
        row[self.window()].copy_from_slice(&self.taps);
        row
    }
}

/// Window start used by AP `r` for UE `u`: the UE's own arrival for random
/// and DFT pilots, the AP's common window `t_w,r` for extended DFT pilots.
pub fn window_start(book: &PilotBook, net: &NetworkRealization, r: usize, u: usize) -> usize {
    match book.scheme {
        PilotScheme::Random | PilotScheme::Dft => net.delay(r, u),
        PilotScheme::ExtendedDft => net.t_window(r),
    }
}

/// Matched-filter sequence for link (r, u). For extended DFT pilots the
/// window is meant for served UEs; other UEs get the same common window.
pub fn make_mf_sequence(book: &PilotBook, net: &NetworkRealization, r: usize, u: usize) -> MfSequence {
    MfSequence {
        window_start: window_start(book, net, r, u),
        len: book.frame_len(net, r),
        taps: book.base(u).to_vec(),
    }
}

/// Inner product of DFT rows `n` (later arrival) and `m` (earlier arrival)
/// over `overlap` samples: the leading samples of row `n` against the
/// trailing samples of row `m`, conjugating row `m`.
///
/// Closed form with `w = exp(-j 2 pi / tau_p)`:
/// `w^(m (tau_p - overlap)) (w^((m - n) overlap) - 1) / (w^(m - n) - 1)`,
/// and `w^(m (tau_p - overlap)) overlap` when `m == n (mod tau_p)`.
/// Overlaps are clamped to `[0, tau_p]`.
pub fn dft_cross_inner(m: usize, n: usize, tau_p: usize, overlap: i64) -> C64 {
    if overlap <= 0 {
        return C64::new(0.0, 0.0);
    }
    let tp = tau_p as i64;
    let overlap = overlap.min(tp);
    let w = |k: i64| C64::from_polar(1.0, -2.0 * PI * k.rem_euclid(tp) as f64 / tau_p as f64);
    let lead = w(m as i64 * (tp - overlap));
    let diff = (m as i64 - n as i64).rem_euclid(tp);
    if diff == 0 {
        return lead * overlap as f64;
    }
    lead * (w(diff * overlap) - 1.0) / (w(diff) - 1.0)
}

/// Power of [`dft_cross_inner`] for `m != n`:
/// `sin^2(pi (m - n) overlap / tau_p) / sin^2(pi (m - n) / tau_p)`.
pub fn dft_cross_power_factor(m: usize, n: usize, tau_p: usize, overlap: i64) -> Result<f64> {
    let tp = tau_p as i64;
    let diff = (m as i64 - n as i64).rem_euclid(tp);
    if diff == 0 {
        return Err(Error::Domain {
            what: "co-pilot power factor (use overlap^2)",
            value: m as f64,
        });
    }
    if overlap <= 0 {
        return Ok(0.0);
    }
    let overlap = overlap.min(tp);
    // sin^2(pi x) has period 1, so reduce the numerator argument exactly.
    let num = (PI * (diff * overlap).rem_euclid(tp) as f64 / tau_p as f64).sin();
    let den = (PI * diff as f64 / tau_p as f64).sin();
    Ok(num * num / (den * den))
}

/// Cosine form of [`dft_cross_power_factor`]:
/// `(1 - cos(2 pi (m - n) overlap / tau_p)) / (1 - cos(2 pi (m - n) / tau_p))`.
pub fn dft_cross_power_factor_cos(m: usize, n: usize, tau_p: usize, overlap: i64) -> Result<f64> {
    let tp = tau_p as i64;
    let diff = (m as i64 - n as i64).rem_euclid(tp);
    if diff == 0 {
        return Err(Error::Domain {
            what: "co-pilot power factor (use overlap^2)",
            value: m as f64,
        });
    }
    if overlap <= 0 {
        return Ok(0.0);
    }
    let overlap = overlap.min(tp);
    let num = 1.0 - (2.0 * PI * (diff * overlap).rem_euclid(tp) as f64 / tau_p as f64).cos();
    let den = 1.0 - (2.0 * PI * diff as f64 / tau_p as f64).cos();
    Ok(num / den)
}
