//! Network layout, user-centric serving clusters and sample delays.

use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Resampling budget per UE before placement is declared infeasible.
const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Square simulation region and the timing constants tied to it.
#[derive(Clone, Debug, PartialEq)]
pub struct SimArea {
    pub side_m: f64,
    pub ap_count: usize,
    /// Mean of the Poisson UE count.
    pub ue_mean: f64,
    /// No UE may be closer than this to any AP.
    pub restricted_radius_m: f64,
    /// System bandwidth; the sample period is its inverse.
    pub bandwidth_hz: f64,
    pub propagation_speed: f64,
}

impl SimArea {
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// Distance travelled during one sample period.
    pub fn meters_per_sample(&self) -> f64 {
        self.propagation_speed / self.bandwidth_hz
    }

    pub fn area_km2(&self) -> f64 {
        self.side_m * self.side_m * 1e-6
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_m > 0.0) {
            return Err(Error::config("area.side_m", "must be positive"));
        }
        if self.ap_count == 0 {
            return Err(Error::config("area.ap_count", "must be at least 1"));
        }
        if !(self.ue_mean > 0.0) {
            return Err(Error::config("area.ue_mean", "must be positive"));
        }
        if !(self.restricted_radius_m >= 0.0) {
            return Err(Error::config("area.gamma_m", "must be nonnegative"));
        }
        if self.restricted_radius_m >= self.side_m / 2.0 {
            return Err(Error::config(
                "area.gamma_m",
                "restricted radius must be smaller than half the side length",
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::config("sys.bw_hz", "must be positive"));
        }
        if !(self.propagation_speed > 0.0) {
            return Err(Error::config("sys.propagation_speed", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Propagation delay in whole samples: `floor(d / (c * tau_smp))`.
pub fn discretize_delay(distance_m: f64, area: &SimArea) -> usize {
    debug_assert!(distance_m >= 0.0);
    let samples = distance_m * area.bandwidth_hz / area.propagation_speed;
    // Absorb rounding when the distance is an exact multiple of a sample.
    (samples + 1e-9).floor().max(0.0) as usize
}

/// Radius of the region whose pilots fully cover an AP's matched-filter
/// window for an extension of `tau_ex` samples.
pub fn significant_region_radius(tau_ex: usize, area: &SimArea) -> f64 {
    tau_ex as f64 * area.sample_period() * area.propagation_speed
}

/// One draw of the network: positions, clusters and per-link delays.
///
/// Per-link arrays are stored row-major by AP (`r * ue_count + u`).
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkRealization {
    ap_positions: Vec<Point>,
    ue_positions: Vec<Point>,
    serving_sets: Vec<Vec<usize>>,
    serving_aps: Vec<Vec<usize>>,
    distances: Vec<f64>,
    delays: Vec<usize>,
    clock_offsets: Vec<usize>,
    t_max: Vec<usize>,
    t_window: Vec<usize>,
}

impl NetworkRealization {
    /// Builds a realization from fixed positions. Each AP serves its
    /// `cluster_size` nearest UEs (all UEs if there are fewer).
    pub fn from_positions(
        area: &SimArea,
        ap_positions: Vec<Point>,
        ue_positions: Vec<Point>,
        cluster_size: usize,
    ) -> Result<Self> {
        if ap_positions.is_empty() {
            return Err(Error::config("area.ap_count", "at least one AP is required"));
        }
        if ue_positions.is_empty() {
            return Err(Error::config("area.ue_mean", "at least one UE is required"));
        }
        if cluster_size == 0 {
            return Err(Error::config("cluster.size", "must be at least 1"));
        }
        let aps = ap_positions.len();
        let ues = ue_positions.len();
        let mut distances = Vec::with_capacity(aps * ues);
        for ap in &ap_positions {
            for ue in &ue_positions {
                distances.push(ap.distance(ue));
            }
        }

        let mut serving_sets = Vec::with_capacity(aps);
        let mut serving_aps = alloc::vec![Vec::new(); ues];
        for r in 0..aps {
            let row = &distances[r * ues..(r + 1) * ues];
            let mut order: Vec<usize> = (0..ues).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            order.truncate(cluster_size.min(ues));
            order.sort_unstable();
            for &u in &order {
                serving_aps[u].push(r);
            }
            serving_sets.push(order);
        }

        let delays = distances.iter().map(|&d| discretize_delay(d, area)).collect();
        let mut net = NetworkRealization {
            ap_positions,
            ue_positions,
            serving_sets,
            serving_aps,
            distances,
            delays,
            clock_offsets: alloc::vec![0; ues],
            t_max: Vec::new(),
            t_window: Vec::new(),
        };
        net.refresh_delay_maxima();
        Ok(net)
    }

    /// Draws APs uniformly on the square, a Poisson number of UEs (at least
    /// one) placed uniformly outside every AP's restricted disk, and the
    /// nearest-UE clusters.
    pub fn sample<R: Rng + ?Sized>(area: &SimArea, cluster_size: usize, rng: &mut R) -> Result<Self> {
        area.validate()?;
        let side = area.side_m;
        let ap_positions: Vec<Point> = (0..area.ap_count)
            .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect();

        let poisson = Poisson::new(area.ue_mean)
            .map_err(|_| Error::config("area.ue_mean", "not a valid Poisson mean"))?;
        let ue_count = loop {
            let n: f64 = poisson.sample(rng);
            if n >= 1.0 {
                break n as usize;
            }
        };

        let gamma = area.restricted_radius_m;
        let mut ue_positions = Vec::with_capacity(ue_count);
        for _ in 0..ue_count {
            let mut attempts = 0;
            let p = loop {
                if attempts == MAX_PLACEMENT_ATTEMPTS {
                    return Err(Error::InfeasiblePlacement { attempts });
                }
                attempts += 1;
                let p = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
                if ap_positions.iter().all(|ap| ap.distance(&p) >= gamma) {
                    break p;
                }
            };
            ue_positions.push(p);
        }

        Self::from_positions(area, ap_positions, ue_positions, cluster_size)
    }

    /// Adds a per-UE transmit clock offset (in samples) to every delay of
    /// that UE.
    pub fn with_clock_offsets(mut self, offsets: &[usize]) -> Result<Self> {
        if offsets.len() != self.ue_count() {
            return Err(Error::Dimension(alloc::format!(
                "{} clock offsets for {} UEs",
                offsets.len(),
                self.ue_count()
            )));
        }
        let ues = self.ue_count();
        for row in self.delays.chunks_mut(ues) {
            for ((d, &old), &new) in row.iter_mut().zip(&self.clock_offsets).zip(offsets) {
                *d = *d - old + new;
            }
        }
        self.clock_offsets = offsets.to_vec();
        self.refresh_delay_maxima();
        Ok(self)
    }

    /// Same layout and clusters with every delay forced to zero.
    pub fn synchronized(&self) -> Self {
        let mut net = self.clone();
        net.delays.iter_mut().for_each(|t| *t = 0);
        net.clock_offsets.iter_mut().for_each(|t| *t = 0);
        net.refresh_delay_maxima();
        net
    }

    fn refresh_delay_maxima(&mut self) {
        let ues = self.ue_count();
        self.t_max = (0..self.ap_count())
            .map(|r| self.delays[r * ues..(r + 1) * ues].iter().copied().max().unwrap_or(0))
            .collect();
        self.t_window = (0..self.ap_count())
            .map(|r| self.serving_sets[r].iter().map(|&u| self.delay(r, u)).max().unwrap_or(0))
            .collect();
    }

    pub fn ap_count(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn ue_count(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn ap_positions(&self) -> &[Point] {
        &self.ap_positions
    }

    pub fn ue_positions(&self) -> &[Point] {
        &self.ue_positions
    }

    /// UEs served by AP `r`, ascending.
    pub fn serving_set(&self, r: usize) -> &[usize] {
        &self.serving_sets[r]
    }

    /// APs serving UE `u`, ascending.
    pub fn serving_aps(&self, u: usize) -> &[usize] {
        &self.serving_aps[u]
    }

    pub fn distance(&self, r: usize, u: usize) -> f64 {
        self.distances[r * self.ue_count() + u]
    }

    /// Arrival delay of UE `u` at AP `r`, in samples.
    pub fn delay(&self, r: usize, u: usize) -> usize {
        self.delays[r * self.ue_count() + u]
    }

    /// Latest arrival at AP `r` over all UEs.
    pub fn t_max(&self, r: usize) -> usize {
        self.t_max[r]
    }

    /// Matched-filter window start at AP `r`: latest arrival among served UEs.
    pub fn t_window(&self, r: usize) -> usize {
        self.t_window[r]
    }

    /// Served (AP, UE) links in AP-major order.
    pub fn served_links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.serving_sets
            .iter()
            .enumerate()
            .flat_map(|(r, set)| set.iter().map(move |&u| (r, u)))
    }
}

/// Smallest extension that makes every served UE fully cover its AP's
/// matched-filter window: the largest within-cluster delay spread.
pub fn delay_spread_min_extension(net: &NetworkRealization) -> usize {
    (0..net.ap_count())
        .map(|r| {
            let delays = net.serving_set(r).iter().map(|&u| net.delay(r, u));
            let hi = delays.clone().max().unwrap_or(0);
            let lo = delays.min().unwrap_or(0);
            hi - lo
        })
        .max()
        .unwrap_or(0)
}

/// UEs whose extended pilot spans AP `r`'s whole matched-filter window,
/// plus the served set. Ascending.
pub fn significant_set(net: &NetworkRealization, r: usize, tau_ex: usize) -> Vec<usize> {
    let tw = net.t_window(r);
    let served = net.serving_set(r);
    (0..net.ue_count())
        .filter(|&u| {
            let t = net.delay(r, u);
            (t <= tw && tw - t <= tau_ex) || served.binary_search(&u).is_ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use alloc::vec;
    use proptest::prelude::*;

    fn full_area() -> SimArea {
        SimArea {
            side_m: (0.7e6f64).sqrt(),
            ap_count: 70,
            ue_mean: 98.0,
            restricted_radius_m: 20.0,
            bandwidth_hz: 20e6,
            propagation_speed: SPEED_OF_LIGHT,
        }
    }

    fn desk_area() -> SimArea {
        SimArea {
            side_m: (0.1e6f64).sqrt(),
            ap_count: 10,
            ue_mean: 14.0,
            ..full_area()
        }
    }

    #[test]
    fn delay_floor_rule() {
        let area = full_area();
        assert_eq!(discretize_delay(0.0, &area), 0);
        assert_eq!(discretize_delay(150.0, &area), 10);
        // 100 / 15 = 20/3, floor 6.
        assert_eq!(discretize_delay(100.0, &area), 6);
        assert_eq!(discretize_delay(14.999, &area), 0);
        assert_eq!(discretize_delay(15.0, &area), 1);
    }

    #[test]
    fn delay_matches_rational_arithmetic() {
        // With 20 MHz one sample is exactly 15 m, so floor(d/15) in integers.
        let area = full_area();
        for d in 0..2000u32 {
            assert_eq!(discretize_delay(f64::from(d), &area), (d / 15) as usize, "d = {d}");
        }
    }

    #[test]
    fn fixed_single_link() {
        let area = SimArea { ap_count: 1, ..full_area() };
        let net = NetworkRealization::from_positions(
            &area,
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(60.0, 80.0)],
            4,
        )
        .unwrap();
        assert!((net.distance(0, 0) - 100.0).abs() < 1e-12);
        assert_eq!(net.delay(0, 0), 6);
        assert_eq!(net.serving_set(0), &[0]);
        assert_eq!(significant_set(&net, 0, 0), vec![0]);
        assert_eq!(delay_spread_min_extension(&net), 0);
    }

    #[test]
    fn region_radius() {
        let area = full_area();
        assert_eq!(significant_region_radius(0, &area), 0.0);
        assert!((significant_region_radius(4, &area) - 60.0).abs() < 1e-9);
        assert!((significant_region_radius(6, &area) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn spread_of_hand_built_cluster() {
        // UEs at 45, 105 and 135 m: delays 3, 7, 9.
        let area = SimArea { ap_count: 1, ..full_area() };
        let net = NetworkRealization::from_positions(
            &area,
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(45.0, 0.0), Point::new(0.0, 105.0), Point::new(-135.0, 0.0)],
            3,
        )
        .unwrap();
        assert_eq!(
            (0..3).map(|u| net.delay(0, u)).collect::<Vec<_>>(),
            vec![3, 7, 9]
        );
        assert_eq!(delay_spread_min_extension(&net), 6);
        assert_eq!(net.t_window(0), 9);
    }

    #[test]
    fn equidistant_cluster_has_zero_spread() {
        let area = SimArea { ap_count: 1, ..full_area() };
        let ues = (0..4)
            .map(|k| {
                let a = k as f64 * core::f64::consts::FRAC_PI_2;
                Point::new(50.0 * a.cos(), 50.0 * a.sin())
            })
            .collect();
        let net =
            NetworkRealization::from_positions(&area, vec![Point::new(0.0, 0.0)], ues, 4).unwrap();
        assert_eq!(delay_spread_min_extension(&net), 0);
    }

    #[test]
    fn tau_ex_zero_keeps_latest_served_ties() {
        // Delays 2, 5, 5, 8 with cluster of 3: window at 5.
        let area = SimArea { ap_count: 1, ..full_area() };
        let net = NetworkRealization::from_positions(
            &area,
            vec![Point::new(0.0, 0.0)],
            vec![
                Point::new(30.0, 0.0),
                Point::new(75.0, 0.0),
                Point::new(0.0, 75.0),
                Point::new(120.0, 0.0),
            ],
            3,
        )
        .unwrap();
        assert_eq!(net.t_window(0), 5);
        assert_eq!(significant_set(&net, 0, 0), vec![0, 1, 2]);
        // UE 0 is served, so it is always included; nothing else joins at 0.
        let brute: Vec<usize> = (0..4).filter(|&u| net.delay(0, u) == 5).collect();
        assert_eq!(brute, vec![1, 2]);
    }

    #[test]
    fn sampled_network_invariants() {
        let area = full_area();
        for trial in 0..5 {
            let mut rng = substream(11, trial, Stream::Network);
            let net = NetworkRealization::sample(&area, 4, &mut rng).unwrap();
            assert!(net.ue_count() >= 1);
            for r in 0..net.ap_count() {
                assert_eq!(net.serving_set(r).len(), 4.min(net.ue_count()));
                assert!(net.t_window(r) <= net.t_max(r));
                let tmax = (0..net.ue_count()).map(|u| net.delay(r, u)).max().unwrap();
                assert_eq!(net.t_max(r), tmax);
                for &u in net.serving_set(r) {
                    assert!(u < net.ue_count());
                    assert!(net.serving_aps(u).contains(&r));
                }
                for u in 0..net.ue_count() {
                    assert!(net.distance(r, u) >= 20.0);
                    assert_eq!(
                        net.serving_aps(u).contains(&r),
                        net.serving_set(r).contains(&u)
                    );
                }
            }
            // Exhaustive (r, u, u') spread oracle.
            let mut brute = 0;
            for r in 0..net.ap_count() {
                for &u in net.serving_set(r) {
                    for &v in net.serving_set(r) {
                        brute = brute.max(net.delay(r, u).saturating_sub(net.delay(r, v)));
                    }
                }
            }
            assert_eq!(delay_spread_min_extension(&net), brute);
            let tau = delay_spread_min_extension(&net);
            for r in 0..net.ap_count() {
                let s = significant_set(&net, r, tau);
                assert!(net.serving_set(r).iter().all(|u| s.contains(u)));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let area = desk_area();
        let a = NetworkRealization::sample(&area, 4, &mut substream(5, 0, Stream::Network)).unwrap();
        let b = NetworkRealization::sample(&area, 4, &mut substream(5, 0, Stream::Network)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_placement_is_rejected() {
        let area = SimArea { restricted_radius_m: 400.0, ..desk_area() };
        assert!(matches!(area.validate(), Err(Error::Config { .. })));
        // Passes validation, but 400 disks of radius 4.9 m cover the square.
        let area = SimArea {
            side_m: 10.0,
            ap_count: 400,
            ue_mean: 3.0,
            restricted_radius_m: 4.9,
            ..desk_area()
        };
        area.validate().unwrap();
        let mut rng = substream(1, 0, Stream::Network);
        assert!(matches!(
            NetworkRealization::sample(&area, 1, &mut rng),
            Err(Error::InfeasiblePlacement { .. })
        ));
    }

    #[test]
    fn clock_offsets_shift_delays() {
        let area = SimArea { ap_count: 1, ..full_area() };
        let net = NetworkRealization::from_positions(
            &area,
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(45.0, 0.0), Point::new(105.0, 0.0)],
            2,
        )
        .unwrap();
        let shifted = net.clone().with_clock_offsets(&[4, 0]).unwrap();
        assert_eq!(shifted.delay(0, 0), 7);
        assert_eq!(shifted.delay(0, 1), 7);
        assert_eq!(delay_spread_min_extension(&shifted), 0);
        let back = shifted.with_clock_offsets(&[0, 0]).unwrap();
        assert_eq!(back, net);
        assert_eq!(net.synchronized().t_max(0), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn significant_set_grows_with_extension(seed in any::<u64>(), a in 0usize..12, b in 0usize..12) {
            let area = desk_area();
            let net = NetworkRealization::sample(&area, 4, &mut substream(seed, 0, Stream::Network)).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for r in 0..net.ap_count() {
                let small = significant_set(&net, r, lo);
                let large = significant_set(&net, r, hi);
                prop_assert!(small.iter().all(|u| large.contains(u)));
            }
        }

        #[test]
        fn region_radius_is_linear(t in 0usize..1000) {
            let area = full_area();
            let slope = area.sample_period() * area.propagation_speed;
            prop_assert!((significant_region_radius(t, &area) - slope * t as f64).abs() < 1e-9 * (1.0 + t as f64));
        }
    }
}
