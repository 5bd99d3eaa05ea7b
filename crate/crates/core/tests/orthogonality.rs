use cellfree_core::airframe::{Regime, Transmissions};
use cellfree_core::experiment::ExperimentConfig;
use cellfree_core::geometry::{delay_spread_min_extension, significant_set, NetworkRealization};
use cellfree_core::pilot::{make_mf_sequence, make_pilot_book, Assignment, PilotConfig, PilotScheme};
use cellfree_core::rng::{substream, Stream};

fn book_for(net: &NetworkRealization, scheme: PilotScheme, tau_p: usize, tau_ex: usize) -> cellfree_core::pilot::PilotBook {
    let cfg = PilotConfig {
        scheme,
        tau_p,
        tau_ex,
        phase_levels: 8,
        assignment: Assignment::RoundRobin,
    };
    make_pilot_book(&cfg, net.ue_positions(), &mut substream(0, 0, Stream::Pilots(2))).unwrap()
}

/// Largest matched-filter coupling from a non-co-pilot UE of `S_r` onto any
/// served link, over every AP.
fn worst_significant_leak(net: &NetworkRealization, tau_p: usize, tau_ex: usize, regime: Regime, seed: u64) -> f64 {
    let book = book_for(net, PilotScheme::ExtendedDft, tau_p, tau_ex);
    let tx = Transmissions::draw(&book, net, regime, &mut substream(seed, 0, Stream::Data(2)));
    let mut worst: f64 = 0.0;
    for r in 0..net.ap_count() {
        let sig = significant_set(net, r, tau_ex);
        for &u in net.serving_set(r) {
            let mf = make_mf_sequence(&book, net, r, u);
            for &k in &sig {
                if k == u || book.is_copilot(u, k) {
                    continue;
                }
                worst = worst.max(tx.window_inner(&book, net, r, k, &mf).norm());
            }
        }
    }
    worst
}

#[test]
fn extension_cancels_significant_interference_on_desk_networks() {
    let cfg = ExperimentConfig::desk();
    for trial in 0..100u64 {
        let net = NetworkRealization::sample(&cfg.area, cfg.cluster_size, &mut substream(7, trial, Stream::Network)).unwrap();
        let tau_ex = delay_spread_min_extension(&net);
        for regime in [Regime::Upg, Regime::Upng] {
            let leak = worst_significant_leak(&net, cfg.tau_p, tau_ex, regime, trial);
            assert!(leak <= 1e-9 * cfg.tau_p as f64, "trial {trial} {regime:?}: {leak}");
        }
    }
}

#[test]
fn served_users_are_significant_at_auto_min() {
    let cfg = ExperimentConfig::desk();
    for trial in 0..50u64 {
        let net = NetworkRealization::sample(&cfg.area, cfg.cluster_size, &mut substream(8, trial, Stream::Network)).unwrap();
        let tau_ex = delay_spread_min_extension(&net);
        for r in 0..net.ap_count() {
            let sig = significant_set(&net, r, tau_ex);
            assert!(net.serving_set(r).iter().all(|u| sig.contains(u)));
        }
    }
}

#[test]
fn plain_dft_leaks_under_the_same_delays() {
    let cfg = ExperimentConfig::desk();
    let mut leaked = 0;
    for trial in 0..20u64 {
        let net = NetworkRealization::sample(&cfg.area, cfg.cluster_size, &mut substream(9, trial, Stream::Network)).unwrap();
        let book = book_for(&net, PilotScheme::Dft, cfg.tau_p, 0);
        let tx = Transmissions::draw(&book, &net, Regime::Upg, &mut substream(9, trial, Stream::Data(1)));
        for (r, u) in net.served_links() {
            let mf = make_mf_sequence(&book, &net, r, u);
            let others = net.serving_set(r).iter().filter(|&&k| k != u && !book.is_copilot(u, k));
            if others.map(|&k| tx.window_inner(&book, &net, r, k, &mf).norm()).any(|c| c > 1e-6) {
                leaked += 1;
            }
        }
    }
    assert!(leaked > 0);
}
