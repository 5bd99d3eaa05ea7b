//! Augmented transmit rows and received pilot-phase frames.
//!
//! At AP `r`, UE `u` contributes the row `[0^t_ur, pilot_u, tail]`, where
//! the tail (length `t_max_r - t_ur`) is silent with a guard time (UPG) or
//! carries the UE's first uplink data symbols without one (UPNG). Each UE
//! has a single data stream; every AP sees a prefix of it.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::channel::{complex_gaussian, ChannelMatrixSet};
use crate::geometry::NetworkRealization;
use crate::pilot::{MfSequence, PilotBook};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Guard time between pilots and uplink data.
    Upg,
    /// No guard time: earlier UEs' data overlaps later UEs' pilots.
    Upng,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Upg => "upg",
            Regime::Upng => "upng",
        }
    }
}

/// Unit-magnitude data alphabet used for UPNG symbols.
pub const DATA_ALPHABET: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

fn draw_symbols<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<C64> {
    (0..count)
        .map(|_| DATA_ALPHABET[rng.random_range(0..DATA_ALPHABET.len())])
        .collect()
}

/// Everything the UEs transmit during the pilot phase of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Transmissions {
    regime: Regime,
    /// Per-UE data streams; empty under UPG.
    data: Vec<Vec<C64>>,
}

impl Transmissions {
    pub fn draw<R: Rng + ?Sized>(
        book: &PilotBook,
        net: &NetworkRealization,
        regime: Regime,
        rng: &mut R,
    ) -> Self {
        let data = match regime {
            Regime::Upg => vec![Vec::new(); net.ue_count()],
            Regime::Upng => (0..net.ue_count())
                .map(|u| {
                    let longest = (0..net.ap_count())
                        .map(|r| net.t_max(r) - net.delay(r, u))
                        .max()
                        .unwrap_or(0);
                    draw_symbols(longest, rng)
                })
                .collect(),
        };
        debug_assert_eq!(book.ue_count(), net.ue_count());
        Transmissions { regime, data }
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Sample `col` of UE `u`'s augmented row at AP `r`.
    #[inline]
    pub fn sample(&self, book: &PilotBook, net: &NetworkRealization, r: usize, u: usize, col: usize) -> C64 {
        let t = net.delay(r, u);
        if col < t {
            return C64::new(0.0, 0.0);
        }
        let pos = col - t;
        let pilot = book.transmitted(u);
        if pos < pilot.len() {
            pilot[pos]
        } else {
            self.data[u].get(pos - pilot.len()).copied().unwrap_or(C64::new(0.0, 0.0))
        }
    }

    /// Dense augmented row of UE `u` at AP `r`, length `tau_p + tau_ex + t_max_r`.
    pub fn augmented_row(&self, book: &PilotBook, net: &NetworkRealization, r: usize, u: usize) -> Vec<C64> {
        (0..book.frame_len(net, r))
            .map(|col| self.sample(book, net, r, u, col))
            .collect()
    }

    /// `x_{u,r,aug} mf^H`, evaluated over the matched-filter window only.
    pub fn window_inner(
        &self,
        book: &PilotBook,
        net: &NetworkRealization,
        r: usize,
        u: usize,
        mf: &MfSequence,
    ) -> C64 {
        let t = net.delay(r, u);
        let pilot = book.transmitted(u);
        let data = &self.data[u];
        let mut acc = C64::new(0.0, 0.0);
        for (i, tap) in mf.taps.iter().enumerate() {
            let col = mf.window_start + i;
            if col < t {
                continue;
            }
            let pos = col - t;
            let x = if pos < pilot.len() {
                pilot[pos]
            } else if let Some(s) = data.get(pos - pilot.len()) {
                *s
            } else {
                continue;
            };
            acc += x * tap.conj();
        }
        acc
    }
}

/// Augmented row of UE `u` at AP `r`, drawing fresh UPNG data from `rng`.
pub fn build_augmented_sequence<R: Rng + ?Sized>(
    book: &PilotBook,
    net: &NetworkRealization,
    regime: Regime,
    r: usize,
    u: usize,
    rng: &mut R,
) -> Vec<C64> {
    let t = net.delay(r, u);
    let tail = net.t_max(r) - t;
    let mut row = Vec::with_capacity(book.frame_len(net, r));
    row.resize(t, C64::new(0.0, 0.0));
    row.extend_from_slice(book.transmitted(u));
    match regime {
        Regime::Upg => row.resize(row.len() + tail, C64::new(0.0, 0.0)),
        Regime::Upng => row.extend(draw_symbols(tail, rng)),
    }
    row
}

/// `antennas x columns` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ApFrame {
    pub antennas: usize,
    pub columns: usize,
    pub samples: Vec<C64>,
}

impl ApFrame {
    pub fn zeros(antennas: usize, columns: usize) -> Self {
        ApFrame {
            antennas,
            columns,
            samples: vec![C64::new(0.0, 0.0); antennas * columns],
        }
    }

    pub fn row(&self, antenna: usize) -> &[C64] {
        &self.samples[antenna * self.columns..(antenna + 1) * self.columns]
    }

    pub fn get(&self, antenna: usize, col: usize) -> C64 {
        self.samples[antenna * self.columns + col]
    }

    /// Energy of each column summed over antennas.
    pub fn column_energy(&self) -> Vec<f64> {
        (0..self.columns)
            .map(|c| (0..self.antennas).map(|a| self.get(a, c).norm_sqr()).sum())
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `self * mf^H` restricted to the window.
    pub fn correlate(&self, mf: &MfSequence) -> Vec<C64> {
        (0..self.antennas)
            .map(|a| {
                let row = &self.row(a)[mf.window()];
                row.iter().zip(&mf.taps).map(|(y, p)| y * p.conj()).sum()
            })
            .collect()
    }
}

/// Receiver noise of every AP for one frame, CN(0, sigma^2) entries.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseField {
    pub aps: Vec<ApFrame>,
}

impl NoiseField {
    pub fn draw<R: Rng + ?Sized>(
        book: &PilotBook,
        net: &NetworkRealization,
        antennas: usize,
        noise_power: f64,
        rng: &mut R,
    ) -> Self {
        let std = noise_power.sqrt();
        let aps = (0..net.ap_count())
            .map(|r| {
                let columns = book.frame_len(net, r);
                ApFrame {
                    antennas,
                    columns,
                    samples: (0..antennas * columns).map(|_| complex_gaussian(rng) * std).collect(),
                }
            })
            .collect();
        NoiseField { aps }
    }

    pub fn silent(book: &PilotBook, net: &NetworkRealization, antennas: usize) -> Self {
        NoiseField {
            aps: (0..net.ap_count())
                .map(|r| ApFrame::zeros(antennas, book.frame_len(net, r)))
                .collect(),
        }
    }
}

/// Pilot-phase signal at every AP.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedFrame {
    pub p_ul: f64,
    pub aps: Vec<ApFrame>,
}

/// `Y_r = sqrt(p_ul) sum_u h_ru x_{u,r,aug} + Z_r` over all UEs.
pub fn assemble_frame(
    book: &PilotBook,
    net: &NetworkRealization,
    chan: &ChannelMatrixSet,
    tx: &Transmissions,
    noise: &NoiseField,
    p_ul: f64,
) -> Result<ReceivedFrame> {
    if book.ue_count() != net.ue_count() {
        return Err(Error::Dimension(alloc::format!(
            "pilot book has {} UEs, network has {}",
            book.ue_count(),
            net.ue_count()
        )));
    }
    if noise.aps.len() != net.ap_count() {
        return Err(Error::Dimension(alloc::format!(
            "noise for {} APs, network has {}",
            noise.aps.len(),
            net.ap_count()
        )));
    }
    let amp = p_ul.sqrt();
    let m = chan.antennas();
    let mut aps = Vec::with_capacity(net.ap_count());
    for r in 0..net.ap_count() {
        let columns = book.frame_len(net, r);
        let z = &noise.aps[r];
        if z.columns != columns || z.antennas != m {
            return Err(Error::Dimension(alloc::format!(
                "AP {r}: noise is {}x{}, frame is {m}x{columns}",
                z.antennas,
                z.columns
            )));
        }
        let mut frame = z.clone();
        for u in 0..net.ue_count() {
            let x = tx.augmented_row(book, net, r, u);
            let h = chan.vector(r, u);
            for (a, ha) in h.iter().enumerate() {
                let g = ha * amp;
                let row = &mut frame.samples[a * columns..(a + 1) * columns];
                for (y, xs) in row.iter_mut().zip(&x) {
                    *y += g * xs;
                }
            }
        }
        aps.push(frame);
    }
    Ok(ReceivedFrame { p_ul, aps })
}

/// Draws transmissions and noise from `rng` and assembles the frame.
pub fn synthesize_frame<R: Rng + ?Sized>(
    book: &PilotBook,
    net: &NetworkRealization,
    chan: &ChannelMatrixSet,
    regime: Regime,
    p_ul: f64,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let tx = Transmissions::draw(book, net, regime, rng);
    let noise = NoiseField::draw(book, net, chan.antennas(), chan.noise_power, rng);
    assemble_frame(book, net, chan, &tx, &noise, p_ul)
}
