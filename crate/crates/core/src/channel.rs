//! Large-scale (path loss, shadowing) and small-scale (Rayleigh) channels.

use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::NetworkRealization;
use crate::{Error, Result, C64};

/// Walfisch-Ikegami intercept, `log10` of the gain at 1 km.
pub const PATH_LOSS_INTERCEPT_LOG10: f64 = -11.2427;
pub const PATH_LOSS_EXPONENT: f64 = 3.8;

/// Linear path-loss gain at distance `d_km` kilometres.
pub fn path_loss(d_km: f64) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(Error::Domain {
            what: "path-loss distance (km)",
            value: d_km,
        });
    }
    Ok(10f64.powf(PATH_LOSS_INTERCEPT_LOG10) * d_km.powf(-PATH_LOSS_EXPONENT))
}

/// Log-normal shadowing gain with `sigma_db` standard deviation.
pub fn sample_shadowing<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    10f64.powf(sigma_db * x / 10.0)
}

/// One standard circularly-symmetric complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// `M` i.i.d. CN(0, 1) entries.
pub fn sample_fading<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> Vec<C64> {
    (0..antennas).map(|_| complex_gaussian(rng)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkGain {
    /// Path loss.
    pub beta: f64,
    /// Shadowing.
    pub psi: f64,
}

impl LinkGain {
    pub fn combined(&self) -> f64 {
        self.beta * self.psi
    }
}

/// Large-scale gains of every (AP, UE) pair, frozen for a network draw.
#[derive(Clone, Debug, PartialEq)]
pub struct LargeScale {
    ue_count: usize,
    gains: Vec<LinkGain>,
}

impl LargeScale {
    pub fn sample<R: Rng + ?Sized>(net: &NetworkRealization, sigma_db: f64, rng: &mut R) -> Result<Self> {
        let mut gains = Vec::with_capacity(net.ap_count() * net.ue_count());
        for r in 0..net.ap_count() {
            for u in 0..net.ue_count() {
                let beta = path_loss(net.distance(r, u) * 1e-3)?;
                let psi = sample_shadowing(sigma_db, rng);
                gains.push(LinkGain { beta, psi });
            }
        }
        Ok(LargeScale {
            ue_count: net.ue_count(),
            gains,
        })
    }

    /// Builds gains from explicit values, AP-major.
    pub fn from_gains(ap_count: usize, ue_count: usize, gains: Vec<LinkGain>) -> Result<Self> {
        if gains.len() != ap_count * ue_count {
            return Err(Error::Dimension(alloc::format!(
                "{} gains for {ap_count} APs and {ue_count} UEs",
                gains.len()
            )));
        }
        Ok(LargeScale { ue_count, gains })
    }

    pub fn get(&self, r: usize, u: usize) -> LinkGain {
        self.gains[r * self.ue_count + u]
    }

    /// `beta * psi` of link (r, u).
    pub fn combined(&self, r: usize, u: usize) -> f64 {
        self.get(r, u).combined()
    }

    /// Multiplies every gain by `factor` (applied to path loss).
    pub fn scaled(&self, factor: f64) -> Self {
        let gains = self
            .gains
            .iter()
            .map(|g| LinkGain {
                beta: g.beta * factor,
                psi: g.psi,
            })
            .collect();
        LargeScale {
            ue_count: self.ue_count,
            gains,
        }
    }
}

/// Channel vectors `h_ru = sqrt(beta psi) g_ru` for every (AP, UE) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrixSet {
    antennas: usize,
    ue_count: usize,
    h: Vec<C64>,
    pub noise_power: f64,
}

impl ChannelMatrixSet {
    /// Draws fresh Rayleigh fading on top of `gains`.
    pub fn draw<R: Rng + ?Sized>(
        gains: &LargeScale,
        ap_count: usize,
        antennas: usize,
        noise_power: f64,
        rng: &mut R,
    ) -> Self {
        let ue_count = gains.ue_count;
        let mut h = Vec::with_capacity(ap_count * ue_count * antennas);
        for r in 0..ap_count {
            for u in 0..ue_count {
                let amp = gains.combined(r, u).sqrt();
                h.extend((0..antennas).map(|_| complex_gaussian(rng) * amp));
            }
        }
        ChannelMatrixSet {
            antennas,
            ue_count,
            h,
            noise_power,
        }
    }

    /// Wraps explicit channel vectors, AP-major then UE then antenna.
    pub fn from_vectors(
        ap_count: usize,
        ue_count: usize,
        antennas: usize,
        h: Vec<C64>,
        noise_power: f64,
    ) -> Result<Self> {
        if h.len() != ap_count * ue_count * antennas {
            return Err(Error::Dimension(alloc::format!(
                "{} channel entries for {ap_count}x{ue_count}x{antennas}",
                h.len()
            )));
        }
        Ok(ChannelMatrixSet {
            antennas,
            ue_count,
            h,
            noise_power,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn vector(&self, r: usize, u: usize) -> &[C64] {
        let start = (r * self.ue_count + u) * self.antennas;
        &self.h[start..start + self.antennas]
    }

    /// Multiplies every link's vector by an independent uniform phase.
    pub fn rotate_links<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for link in self.h.chunks_mut(self.antennas.max(1)) {
            let rot = C64::from_polar(1.0, 2.0 * core::f64::consts::PI * rng.random::<f64>());
            link.iter_mut().for_each(|z| *z *= rot);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use alloc::vec;

    #[test]
    fn path_loss_values() {
        // 10^(-11.2427 + 3.8) = 10^(-7.4427)
        let g = path_loss(0.1).unwrap();
        assert!((g / 3.60828e-8 - 1.0).abs() < 1e-4, "{g}");
        let g = path_loss(1.0).unwrap();
        assert!((g / 5.71874e-12 - 1.0).abs() < 1e-4, "{g}");
        let ratio = path_loss(0.05).unwrap() / path_loss(0.1).unwrap();
        assert!((ratio - 2f64.powf(3.8)).abs() < 1e-9 * ratio);
        assert!(matches!(path_loss(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn zero_sigma_shadowing_is_unity() {
        let mut rng = substream(1, 0, Stream::Aux(0));
        for _ in 0..100 {
            assert_eq!(sample_shadowing(0.0, &mut rng), 1.0);
        }
    }

    #[test]
    fn shadowing_statistics() {
        let mut rng = substream(2, 0, Stream::Aux(0));
        let n = 100_000;
        let db: Vec<f64> = (0..n).map(|_| 10.0 * sample_shadowing(4.0, &mut rng).log10()).collect();
        let mean = db.iter().sum::<f64>() / n as f64;
        let var = db.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        // Standard error of the mean is 4 / sqrt(1e5) = 0.013 dB.
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var.sqrt() - 4.0).abs() < 0.05, "{}", var.sqrt());
    }

    #[test]
    fn fading_energy_and_correlation() {
        let mut rng = substream(3, 0, Stream::Fading);
        let n = 100_000;
        let mut energy = 0.0;
        let mut cross = C64::new(0.0, 0.0);
        for _ in 0..n {
            let g = sample_fading(8, &mut rng);
            energy += g.iter().map(|z| z.norm_sqr()).sum::<f64>();
            cross += g[0] * g[1].conj();
        }
        let mean = energy / n as f64;
        assert!((mean / 8.0 - 1.0).abs() < 0.01, "{mean}");
        // E|g0 g1*|^2 = 1, so the sample mean has std 1/sqrt(n) per component.
        let bound = 3.0 / (n as f64).sqrt();
        assert!((cross / n as f64).norm() < bound * 2f64.sqrt());
        assert_eq!(sample_fading(1, &mut rng).len(), 1);
    }

    #[test]
    fn channel_covariance_matches_large_scale_gain() {
        use crate::geometry::{NetworkRealization, Point, SimArea, SPEED_OF_LIGHT};
        let area = SimArea {
            side_m: 500.0,
            ap_count: 1,
            ue_mean: 1.0,
            restricted_radius_m: 20.0,
            bandwidth_hz: 20e6,
            propagation_speed: SPEED_OF_LIGHT,
        };
        let net = NetworkRealization::from_positions(
            &area,
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(120.0, 0.0)],
            1,
        )
        .unwrap();
        let gains = LargeScale::sample(&net, 4.0, &mut substream(4, 0, Stream::Network)).unwrap();
        let bp = gains.combined(0, 0);
        let m = 4;
        let n = 100_000;
        let mut cov = vec![C64::new(0.0, 0.0); m * m];
        let mut rng = substream(4, 0, Stream::Fading);
        for _ in 0..n {
            let set = ChannelMatrixSet::draw(&gains, 1, m, 1e-14, &mut rng);
            let h = set.vector(0, 0);
            for i in 0..m {
                for j in 0..m {
                    cov[i * m + j] += h[i] * h[j].conj();
                }
            }
        }
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { bp } else { 0.0 };
                err += (cov[i * m + j] / n as f64 - target).norm_sqr();
                norm += target * target;
            }
        }
        assert!((err / norm).sqrt() < 0.02, "{}", (err / norm).sqrt());
    }
}
