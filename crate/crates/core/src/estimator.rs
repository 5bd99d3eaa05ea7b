//! Matched filtering and LMMSE channel estimation.
//!
//! After matched filtering, link (r, u) observes
//! `y = sum_k c_k h_rk + z / sqrt(p)`, where `c_k` is UE `k`'s transmitted
//! row correlated against the matched-filter taps. The closed-form
//! covariances below take the expectation over fading, noise, data
//! symbols and (for random pilots) pilot phases, and keep the
//! deterministic DFT correlations at their exact values.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::airframe::{synthesize_frame, ApFrame, NoiseField, Regime, Transmissions};
use crate::analytics;
use crate::channel::{ChannelMatrixSet, LargeScale};
use crate::geometry::NetworkRealization;
use crate::linalg::CMatrix;
use crate::pilot::{make_mf_sequence, make_pilot_book, MfSequence, PilotBook, PilotConfig, PilotScheme};
use crate::{Error, Result, C64};

/// Matched-filter output of one link, with its decomposition when the
/// realization is known.
#[derive(Clone, Debug, PartialEq)]
pub struct MfOutput {
    pub y: Vec<C64>,
    /// `c_uu h_ru`
    pub desired: Vec<C64>,
    /// `sum_{k != u} c_k h_rk`
    pub interference: Vec<C64>,
    /// `Z mf^H / sqrt(p)`
    pub noise: Vec<C64>,
}

impl MfOutput {
    pub fn desired_power(&self) -> f64 {
        energy(&self.desired)
    }

    pub fn interference_power(&self) -> f64 {
        energy(&self.interference)
    }

    pub fn noise_power(&self) -> f64 {
        energy(&self.noise)
    }
}

fn energy(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn check_power(p_ul: f64) -> Result<()> {
    if !(p_ul > 0.0) || !p_ul.is_finite() {
        return Err(Error::Domain {
            what: "uplink power (W)",
            value: p_ul,
        });
    }
    Ok(())
}

/// `Y_r mf^H / sqrt(p_ul)`.
pub fn matched_filter(frame: &ApFrame, mf: &MfSequence, p_ul: f64) -> Result<Vec<C64>> {
    check_power(p_ul)?;
    if mf.len != frame.columns {
        return Err(Error::Dimension(alloc::format!(
            "matched filter of length {} for a frame of {} columns",
            mf.len,
            frame.columns
        )));
    }
    let scale = 1.0 / p_ul.sqrt();
    Ok(frame.correlate(mf).into_iter().map(|z| z * scale).collect())
}

/// Matched-filter output of link (r, u) assembled term by term from the
/// transmissions, channels and noise. Equal to [`matched_filter`] on the
/// frame built from the same realization.
#[allow(clippy::too_many_arguments)]
pub fn mf_components(
    book: &PilotBook,
    net: &NetworkRealization,
    chan: &ChannelMatrixSet,
    tx: &Transmissions,
    noise: &NoiseField,
    r: usize,
    u: usize,
    p_ul: f64,
) -> Result<MfOutput> {
    check_power(p_ul)?;
    let mf = make_mf_sequence(book, net, r, u);
    let m = chan.antennas();
    let mut desired = vec![C64::new(0.0, 0.0); m];
    let mut interference = vec![C64::new(0.0, 0.0); m];
    for k in 0..net.ue_count() {
        let c = tx.window_inner(book, net, r, k, &mf);
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let acc = if k == u { &mut desired } else { &mut interference };
        for (a, h) in acc.iter_mut().zip(chan.vector(r, k)) {
            *a += c * h;
        }
    }
    let scale = 1.0 / p_ul.sqrt();
    let noise: Vec<C64> = noise.aps[r].correlate(&mf).into_iter().map(|z| z * scale).collect();
    let y = (0..m).map(|a| desired[a] + interference[a] + noise[a]).collect();
    Ok(MfOutput {
        y,
        desired,
        interference,
        noise,
    })
}

/// Deterministic correlation of UE `k`'s pilot with the matched-filter taps,
/// and how many of its data samples fall inside the window under UPNG.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub pilot: C64,
    pub data_samples: usize,
}

impl Coupling {
    /// Expected `|c_k|^2` over data symbols.
    pub fn power(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Upg => self.pilot.norm_sqr(),
            Regime::Upng => self.pilot.norm_sqr() + self.data_samples as f64,
        }
    }
}

pub fn pilot_coupling(book: &PilotBook, net: &NetworkRealization, r: usize, k: usize, mf: &MfSequence) -> Coupling {
    let t = net.delay(r, k);
    let pilot = book.transmitted(k);
    let l = pilot.len();
    let mut acc = C64::new(0.0, 0.0);
    let mut data_samples = 0;
    for (i, tap) in mf.taps.iter().enumerate() {
        let col = mf.window_start + i;
        if col < t {
            continue;
        }
        let pos = col - t;
        if pos < l {
            acc += pilot[pos] * tap.conj();
        } else {
            data_samples += 1;
        }
    }
    Coupling {
        pilot: acc,
        data_samples,
    }
}

/// Everything the closed-form covariances depend on.
#[derive(Clone, Copy, Debug)]
pub struct LinkModel<'a> {
    pub book: &'a PilotBook,
    pub net: &'a NetworkRealization,
    pub gains: &'a LargeScale,
    pub regime: Regime,
    pub antennas: usize,
    pub noise_power: f64,
    pub p_ul: f64,
}

/// Per-antenna terms of the matched-filter signal variance.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceTerms {
    /// `E[y h^H]` per antenna: `c_uu beta psi`.
    pub cross: C64,
    /// `|c_uu|^2 beta psi`.
    pub desired: f64,
    /// `(k, beta' psi' q_k)` for every other UE with a nonzero term.
    pub interference: Vec<(usize, f64)>,
    /// `sigma^2 tau_p / p`.
    pub noise: f64,
}

impl CovarianceTerms {
    pub fn interference_total(&self) -> f64 {
        self.interference.iter().map(|(_, v)| v).sum()
    }

    /// Per-antenna variance of the matched-filter output.
    pub fn signal(&self) -> f64 {
        self.desired + self.interference_total() + self.noise
    }

    /// Scalar LMMSE gain `conj(cross) / signal`.
    pub fn gain(&self) -> C64 {
        self.cross.conj() / self.signal()
    }

    /// Per-antenna variance of the estimate, `|cross|^2 / signal`.
    pub fn estimate_variance(&self) -> f64 {
        self.cross.norm_sqr() / self.signal()
    }

    pub fn pair(&self, antennas: usize) -> CovariancePair {
        CovariancePair {
            cross: CMatrix::scaled_identity(antennas, self.cross),
            signal: CMatrix::scaled_identity(antennas, C64::new(self.signal(), 0.0)),
        }
    }
}

/// `cross = E[y h^H]` and `signal = E[y y^H]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariancePair {
    pub cross: CMatrix,
    pub signal: CMatrix,
}

/// Closed-form covariance terms of link (r, u).
///
/// Random pilots use the phase-averaged overlap time, plain DFT pilots the
/// sin-ratio power factor, and extended DFT pilots the exact correlation of
/// each UE's zero-padded row with the common window. UPNG adds one unit of
/// power per data sample inside the window.
pub fn covariance_terms(model: &LinkModel<'_>, r: usize, u: usize) -> Result<CovarianceTerms> {
    check_power(model.p_ul)?;
    let LinkModel { book, net, gains, regime, .. } = *model;
    let tau_p = book.tau_p();
    let bp = gains.combined(r, u);
    let mf = make_mf_sequence(book, net, r, u);
    let own = pilot_coupling(book, net, r, u, &mf).pilot;
    let t_u = net.delay(r, u);
    let mut interference = Vec::new();
    for k in 0..net.ue_count() {
        if k == u {
            continue;
        }
        let t_k = net.delay(r, k);
        let q = match book.scheme() {
            PilotScheme::Random => analytics::overlap_time(regime, t_u, t_k, tau_p) as f64,
            PilotScheme::Dft => analytics::dft_interference_power(
                regime,
                book.index(u),
                book.index(k),
                1.0,
                1.0,
                1,
                tau_p,
                t_u,
                t_k,
            ),
            PilotScheme::ExtendedDft => pilot_coupling(book, net, r, k, &mf).power(regime),
        };
        if q > 0.0 {
            interference.push((k, gains.combined(r, k) * q));
        }
    }
    Ok(CovarianceTerms {
        cross: own * bp,
        desired: own.norm_sqr() * bp,
        interference,
        noise: model.noise_power * tau_p as f64 / model.p_ul,
    })
}

pub fn closed_form_covariances(model: &LinkModel<'_>, r: usize, u: usize) -> Result<CovariancePair> {
    Ok(covariance_terms(model, r, u)?.pair(model.antennas))
}

/// `h_hat = cross^H signal^{-1} y`, by a Cholesky solve.
pub fn lmmse_estimate(y: &[C64], cov: &CovariancePair) -> Result<Vec<C64>> {
    let x = cov.signal.cholesky_solve(y)?;
    Ok(cov.cross.adjoint().mul_vec(&x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: Vec<C64>,
    pub nmse: f64,
}

/// `||h - h_hat||^2 / ||h||^2`.
pub fn nmse(h: &[C64], h_hat: &[C64]) -> f64 {
    let err: f64 = h.iter().zip(h_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
    err / energy(h)
}

pub fn estimate_link(y: &[C64], cov: &CovariancePair, h: &[C64]) -> Result<ChannelEstimate> {
    let h_hat = lmmse_estimate(y, cov)?;
    let nmse = nmse(h, &h_hat);
    Ok(ChannelEstimate { h_hat, nmse })
}

/// Monte-Carlo `E[y y^H]` and `E[y h^H]` for link (r, u), redrawing fading,
/// noise, data and (for random pilots) the pilot book every trial, with the
/// large-scale gains frozen. Frames are synthesized in full and matched
/// filtered, so this checks the closed forms end to end.
#[allow(clippy::too_many_arguments)]
pub fn empirical_covariance_oracle<R: Rng + ?Sized>(
    pilots: &PilotConfig,
    net: &NetworkRealization,
    gains: &LargeScale,
    regime: Regime,
    antennas: usize,
    noise_power: f64,
    p_ul: f64,
    r: usize,
    u: usize,
    trials: usize,
    rng: &mut R,
) -> Result<CovariancePair> {
    check_power(p_ul)?;
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let mut signal = CMatrix::zeros(antennas);
    let mut cross = CMatrix::zeros(antennas);
    let mut book = make_pilot_book(pilots, net.ue_positions(), rng)?;
    for trial in 0..trials {
        if trial > 0 && pilots.scheme == PilotScheme::Random {
            book = make_pilot_book(pilots, net.ue_positions(), rng)?;
        }
        let chan = ChannelMatrixSet::draw(gains, net.ap_count(), antennas, noise_power, rng);
        let frame = synthesize_frame(&book, net, &chan, regime, p_ul, rng)?;
        let mf = make_mf_sequence(&book, net, r, u);
        let y = matched_filter(&frame.aps[r], &mf, p_ul)?;
        signal.add_outer(&y, &y, 1.0);
        cross.add_outer(&y, chan.vector(r, u), 1.0);
    }
    let inv = C64::new(1.0 / trials as f64, 0.0);
    let scale = |m: &CMatrix| {
        let n = m.dim();
        let data = (0..n * n).map(|i| m.get(i / n, i % n) * inv).collect();
        CMatrix::from_row_major(n, data)
    };
    Ok(CovariancePair {
        cross: scale(&cross)?,
        signal: scale(&signal)?,
    })
}
