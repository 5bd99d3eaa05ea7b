use cellfree_core::airframe::Regime;
use cellfree_core::channel::{LargeScale, LinkGain};
use cellfree_core::estimator::{closed_form_covariances, covariance_terms, empirical_covariance_oracle, LinkModel};
use cellfree_core::geometry::{NetworkRealization, Point, SimArea, SPEED_OF_LIGHT};
use cellfree_core::pilot::{make_pilot_book, Assignment, PilotConfig, PilotScheme};
use cellfree_core::rng::{substream, Stream};
use proptest::prelude::*;

fn area() -> SimArea {
    SimArea {
        side_m: 2000.0,
        ap_count: 1,
        ue_mean: 5.0,
        restricted_radius_m: 0.0,
        bandwidth_hz: 20e6,
        propagation_speed: SPEED_OF_LIGHT,
    }
}

fn one_ap(delays: &[usize]) -> NetworkRealization {
    let ues = delays.iter().map(|&t| Point::new(15.0 * t as f64 + 1.0, 0.0)).collect();
    NetworkRealization::from_positions(&area(), vec![Point::new(0.0, 0.0)], ues, delays.len()).unwrap()
}

fn gains(values: &[f64]) -> LargeScale {
    let g = values.iter().map(|&beta| LinkGain { beta, psi: 1.0 }).collect();
    LargeScale::from_gains(1, values.len(), g).unwrap()
}

fn pilots(scheme: PilotScheme, tau_p: usize, tau_ex: usize) -> PilotConfig {
    PilotConfig {
        scheme,
        tau_p,
        tau_ex,
        phase_levels: 8,
        assignment: Assignment::RoundRobin,
    }
}

#[test]
fn oracle_matches_closed_forms_on_toy() {
    let net = one_ap(&[0, 2, 3, 6, 9]);
    let g = gains(&[2e-10, 1e-10, 3e-10, 5e-11, 1.5e-10]);
    let (sigma2, p, m) = (1e-14, 1e-4, 2);
    let schemes = [
        (PilotScheme::Random, 0),
        (PilotScheme::Dft, 0),
        (PilotScheme::ExtendedDft, 9),
    ];
    for (scheme, tau_ex) in schemes {
        for regime in [Regime::Upg, Regime::Upng] {
            let cfg = pilots(scheme, 4, tau_ex);
            let mut rng = substream(21, 0, Stream::Aux(3));
            let book = make_pilot_book(&cfg, net.ue_positions(), &mut rng).unwrap();
            for u in [0, 3] {
                let model = LinkModel {
                    book: &book,
                    net: &net,
                    gains: &g,
                    regime,
                    antennas: m,
                    noise_power: sigma2,
                    p_ul: p,
                };
                let closed = closed_form_covariances(&model, 0, u).unwrap();
                let emp = empirical_covariance_oracle(&cfg, &net, &g, regime, m, sigma2, p, 0, u, 20_000, &mut rng).unwrap();
                for a in 0..m {
                    let (cs, es) = (closed.signal.get(a, a).re, emp.signal.get(a, a).re);
                    assert!((es / cs - 1.0).abs() < 0.03, "{scheme:?} {regime:?} u={u}: signal {es} vs {cs}");
                    let (cc, ec) = (closed.cross.get(a, a), emp.cross.get(a, a));
                    assert!((ec - cc).norm() < 0.03 * cc.norm(), "{scheme:?} {regime:?} u={u}: cross {ec} vs {cc}");
                }
            }
        }
    }
}

fn expected_nmse(model: &LinkModel<'_>, u: usize) -> f64 {
    let t = covariance_terms(model, 0, u).unwrap();
    1.0 - t.estimate_variance() / model.gains.combined(0, u)
}

proptest! {
    #[test]
    fn expected_nmse_falls_with_power(
        delays in prop::collection::vec(0usize..12, 1..6),
        p_lo in -40.0f64..10.0,
        step in 0.1f64..30.0,
        ext in any::<bool>(),
    ) {
        let net = one_ap(&delays);
        let g = gains(&vec![1e-10; delays.len()]);
        let (scheme, tau_ex) = if ext { (PilotScheme::ExtendedDft, 12) } else { (PilotScheme::Dft, 0) };
        let book = make_pilot_book(&pilots(scheme, 8, tau_ex), net.ue_positions(), &mut substream(0, 0, Stream::Pilots(0))).unwrap();
        let model = |dbm: f64| LinkModel {
            book: &book,
            net: &net,
            gains: &g,
            regime: Regime::Upng,
            antennas: 4,
            noise_power: 1e-14,
            p_ul: 10f64.powf((dbm - 30.0) / 10.0),
        };
        for u in 0..delays.len() {
            let lo = expected_nmse(&model(p_lo), u);
            let hi = expected_nmse(&model(p_lo + step), u);
            prop_assert!(hi <= lo + 1e-12, "u={} {} -> {}", u, lo, hi);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&lo));
        }
    }

    #[test]
    fn extension_removes_all_but_copilot_terms(delays in prop::collection::vec(0usize..10, 1..8)) {
        let net = one_ap(&delays);
        let g = gains(&vec![1e-10; delays.len()]);
        let book = make_pilot_book(&pilots(PilotScheme::ExtendedDft, 8, 10), net.ue_positions(), &mut substream(0, 0, Stream::Pilots(2))).unwrap();
        let model = LinkModel {
            book: &book,
            net: &net,
            gains: &g,
            regime: Regime::Upng,
            antennas: 4,
            noise_power: 1e-14,
            p_ul: 1e-3,
        };
        for u in 0..delays.len() {
            let t = covariance_terms(&model, 0, u).unwrap();
            for (k, v) in t.interference {
                let coupling_sq = v / g.combined(0, k);
                prop_assert!(book.is_copilot(u, k) || coupling_sq <= (1e-9 * 8.0f64).powi(2), "u={} k={} {}", u, k, coupling_sq);
            }
        }
    }
}

fn realization_mean_nmse(net: &NetworkRealization, g: &LargeScale, tau_ex: usize) -> f64 {
    let book = make_pilot_book(&pilots(PilotScheme::ExtendedDft, 32, tau_ex), net.ue_positions(), &mut substream(0, 0, Stream::Pilots(2))).unwrap();
    let model = LinkModel {
        book: &book,
        net,
        gains: g,
        regime: Regime::Upng,
        antennas: 8,
        noise_power: 1e-14,
        p_ul: 0.1,
    };
    let per_link: Vec<f64> = net
        .served_links()
        .map(|(r, u)| 1.0 - covariance_terms(&model, r, u).unwrap().estimate_variance() / g.combined(r, u))
        .collect();
    per_link.iter().sum::<f64>() / per_link.len() as f64
}

#[test]
fn averaged_nmse_falls_with_extension() {
    use cellfree_core::experiment::ExperimentConfig;
    use cellfree_core::geometry::delay_spread_min_extension;
    let cfg = ExperimentConfig::desk();
    let mut curve = [0.0f64; 9];
    for trial in 0..200u64 {
        let mut rng = substream(3, trial, Stream::Network);
        let net = NetworkRealization::sample(&cfg.area, cfg.cluster_size, &mut rng).unwrap();
        let g = LargeScale::sample(&net, cfg.shadowing_db, &mut rng).unwrap();
        for (tau_ex, acc) in curve.iter_mut().enumerate() {
            *acc += realization_mean_nmse(&net, &g, tau_ex);
        }
        let auto = realization_mean_nmse(&net, &g, delay_spread_min_extension(&net));
        assert!(auto <= realization_mean_nmse(&net, &g, 0) * (1.0 + 1e-9), "trial {trial}");
    }
    for w in curve.windows(2) {
        assert!(w[1] <= w[0], "{curve:?}");
    }
}
