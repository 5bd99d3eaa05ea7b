use cellfree_core::airframe::Regime;
use cellfree_core::analytics::{dft_interference_power, overlap_time, random_seq_interference_power};
use cellfree_core::pilot::{dft_cross_inner, dft_cross_power_factor, dft_cross_power_factor_cos, dft_row};
use cellfree_core::C64;
use proptest::prelude::*;

/// Expected `|<window of m at t_u, row of n at t_k>|^2` with unit-power data
/// after the interferer's pilot under UPNG.
fn brute_force(regime: Regime, m: usize, n: usize, tau_p: usize, t_u: usize, t_k: usize) -> f64 {
    let mf = dft_row(m, tau_p, tau_p);
    let pilot = dft_row(n, tau_p, tau_p);
    let mut inner = C64::new(0.0, 0.0);
    let mut data = 0usize;
    for col in t_u..t_u + tau_p {
        let tap = mf[col - t_u].conj();
        if col >= t_k && col < t_k + tau_p {
            inner += tap * pilot[col - t_k];
        } else if col >= t_k + tau_p && regime == Regime::Upng {
            data += 1;
        }
    }
    inner.norm_sqr() + data as f64
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn dft_interference_matches_direct_inner_products() {
    for tau_p in [4usize, 8, 16, 32] {
        for m in 0..tau_p {
            for n in 0..tau_p {
                if m == n {
                    continue;
                }
                for t_u in 0..=tau_p + 1 {
                    for t_k in 0..=tau_p + 1 {
                        for regime in [Regime::Upg, Regime::Upng] {
                            let want = brute_force(regime, m, n, tau_p, t_u, t_k);
                            let got = dft_interference_power(regime, m, n, 1.0, 1.0, 1, tau_p, t_u, t_k);
                            assert!(
                                close(got, want, 1e-9),
                                "tau_p={tau_p} m={m} n={n} t_u={t_u} t_k={t_k} {regime:?}: {got} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn copilot_interference_is_squared_overlap() {
    for tau_p in [4usize, 8, 16] {
        for t_k in 0..=tau_p + 1 {
            let want = brute_force(Regime::Upg, 3 % tau_p, 3 % tau_p, tau_p, 0, t_k);
            let got = dft_interference_power(Regime::Upg, 3 % tau_p, 3 % tau_p, 1.0, 1.0, 1, tau_p, 0, t_k);
            assert!(close(got, want, 1e-9), "{got} vs {want}");
        }
    }
}

#[test]
fn sine_and_cosine_forms_agree() {
    for tau_p in [4usize, 8, 16, 32] {
        for m in 0..tau_p {
            for n in 0..tau_p {
                if m == n {
                    continue;
                }
                for o in 0..=tau_p as i64 {
                    let s = dft_cross_power_factor(m, n, tau_p, o).unwrap();
                    let c = dft_cross_power_factor_cos(m, n, tau_p, o).unwrap();
                    assert!((s - c).abs() <= 1e-12 * s.abs().max(c.abs()).max(1.0), "{tau_p} {m} {n} {o}: {s} vs {c}");
                }
            }
        }
    }
}

#[test]
fn random_power_scales_with_gain_and_overlap() {
    assert_eq!(random_seq_interference_power(2.0, 0.5, 8, 0), 0.0);
    let base = random_seq_interference_power(1e-9, 1.0, 1, 1);
    assert!(close(random_seq_interference_power(1e-9, 2.0, 4, 5) / base, 40.0, 1e-12));
}

proptest! {
    #[test]
    fn inner_power_is_the_sine_ratio(tau_p in 2usize..48, m in 0usize..48, n in 0usize..48, o in 0i64..60) {
        let (m, n) = (m % tau_p, n % tau_p);
        prop_assume!(m != n);
        let p = dft_cross_inner(m, n, tau_p, o).norm_sqr();
        let f = dft_cross_power_factor(m, n, tau_p, o).unwrap();
        prop_assert!((p - f).abs() <= 1e-9 * f.max(1.0), "{} vs {}", p, f);
        prop_assert!(f <= (o.clamp(0, tau_p as i64) as f64).powi(2) + 1e-9);
    }

    #[test]
    fn overlap_time_is_bounded(tau_p in 1usize..64, t_u in 0usize..100, t_k in 0usize..100) {
        let upg = overlap_time(Regime::Upg, t_u, t_k, tau_p);
        let upng = overlap_time(Regime::Upng, t_u, t_k, tau_p);
        prop_assert!(upg <= tau_p);
        prop_assert!(upg <= upng && upng <= tau_p);
        prop_assert_eq!(upg, overlap_time(Regime::Upg, t_k, t_u, tau_p));
        if t_u <= t_k {
            prop_assert_eq!(upg, upng);
        }
    }

    #[test]
    fn upng_never_reduces_dft_interference(tau_p in 2usize..40, m in 0usize..40, n in 0usize..40, t_u in 0usize..50, t_k in 0usize..50) {
        let (m, n) = (m % tau_p, n % tau_p);
        let upg = dft_interference_power(Regime::Upg, m, n, 1.0, 1.0, 1, tau_p, t_u, t_k);
        let upng = dft_interference_power(Regime::Upng, m, n, 1.0, 1.0, 1, tau_p, t_u, t_k);
        prop_assert!(upng >= upg);
        prop_assert!(upng - upg <= tau_p as f64);
    }
}
