use gasrelax::chain::simulate_chain;
use gasrelax::crossing::{
    classify_state, crossing_frequency_curve, crossing_number, recurrence_evidence, time_crossing_frequency,
    CrossingRecord, StateLabel,
};
use gasrelax::{GasParams, StreamFamily};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn memoryless() -> GasParams {
    GasParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
}

fn heavy() -> GasParams {
    GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0).unwrap()
}

/// Brute-force rescan: count label changes in the first `n + 1` entries.
fn rescan(labels: &[StateLabel], n: usize) -> u64 {
    (1..=n).filter(|&i| labels[i] != labels[i - 1]).count() as u64
}

proptest! {
    #[test]
    fn running_count_matches_rescan(tail in prop::collection::vec(any::<bool>(), 0..64)) {
        let mut labels = vec![StateLabel::D];
        labels.extend(tail.iter().map(|&f| if f { StateLabel::F } else { StateLabel::D }));
        let c = crossing_number(&labels).unwrap();
        prop_assert_eq!(c.len(), labels.len() - 1);
        for (i, &ci) in c.iter().enumerate() {
            prop_assert_eq!(ci, rescan(&labels, i + 1));
        }
    }

    #[test]
    fn record_agrees_with_labels(seed in 0u64..500) {
        let tr = simulate_chain(&heavy(), 50, StreamFamily::new(seed), 0);
        let path: Vec<f64> = tr.path().collect();
        let rec = CrossingRecord::from_path(0, &path).unwrap();
        let labels: Vec<StateLabel> = path.iter().map(|&v| classify_state(v, path[0])).collect();
        for (i, &c) in rec.c_n.iter().enumerate() {
            prop_assert_eq!(c, rescan(&labels, i + 1));
        }
        let first_f = labels.iter().position(|l| *l == StateLabel::F).map(|i| i as u64);
        prop_assert_eq!(rec.n1, first_f);
    }
}

#[test]
fn sequences_must_start_low() {
    assert!(crossing_number(&[StateLabel::F, StateLabel::D]).is_err());
    assert!(crossing_number(&[]).unwrap().is_empty());
}

#[test]
fn first_crossing_is_a_fair_coin_without_memory() {
    let curve = crossing_frequency_curve(&memoryless(), 1, 200_000, StreamFamily::new(11)).unwrap();
    let z = (curve.mean_w[0] - 0.5) / curve.se[0];
    assert!(z.abs() < 4.0, "E(W_1) = {} (z = {z})", curve.mean_w[0]);
}

#[test]
fn memoryless_curve_matches_exact_values() {
    // iid velocities: first step crosses w.p. 1/2, each later step w.p. 1/3
    let curve = crossing_frequency_curve(&memoryless(), 200, 100_000, StreamFamily::new(12)).unwrap();
    for n in [1usize, 2, 10, 200] {
        let exact = (0.5 + (n as f64 - 1.0) / 3.0) / n as f64;
        let (m, se) = (curve.mean_w[n - 1], curve.se[n - 1]);
        assert!((m - exact).abs() < 4.0 * se, "n = {n}: {m} vs {exact} (se {se})");
    }
}

#[test]
fn first_step_frequency_matches_quadrature() {
    let p = heavy();
    let (c, s0, sx) = (p.c(), p.sigma0_sq().sqrt(), p.sigmax_sq().sqrt());
    let std = Normal::new(0.0, 1.0).unwrap();
    // P(|c v + X| > |v|) integrated against the density of V_0 (Simpson on [0, 12 s0])
    let integrand = |v: f64| {
        let tail = std.sf((1.0 - c) * v / sx) + std.sf((1.0 + c) * v / sx);
        2.0 * (-(v * v) / (2.0 * s0 * s0)).exp() / (s0 * (2.0 * std::f64::consts::PI).sqrt()) * tail
    };
    let (m, b) = (4000usize, 12.0 * s0);
    let h = b / m as f64;
    let exact = h / 3.0
        * (0..=m)
            .map(|i| {
                let wgt = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                wgt * integrand(i as f64 * h)
            })
            .sum::<f64>();
    assert!((exact - 0.3524).abs() < 5e-4, "quadrature {exact}");
    let curve = crossing_frequency_curve(&p, 1, 200_000, StreamFamily::new(13)).unwrap();
    assert!((curve.mean_w[0] - exact).abs() < 4.0 * curve.se[0], "{} vs {exact}", curve.mean_w[0]);
}

#[test]
fn long_run_frequency_plateaus() {
    let curve = crossing_frequency_curve(&heavy(), 400, 40_000, StreamFamily::new(14)).unwrap();
    let (a, b) = (curve.mean_w[199], curve.mean_w[399]);
    let pooled = (curve.se[199].powi(2) + curve.se[399].powi(2)).sqrt();
    // slow 1/n drift from the early transient is allowed on top of the noise
    assert!((a - b).abs() < 2.0 * pooled + 2e-3, "{a} vs {b}");
}

#[test]
fn time_curve_starts_empty_and_tracks_the_chain() {
    let p = heavy();
    let times = [1e-4, 1.0, 10.0, 100.0];
    let tc = time_crossing_frequency(&p, &times, 40_000, StreamFamily::new(15)).unwrap();
    assert!(tc.zero_fraction[0] > 0.99, "zero fraction {}", tc.zero_fraction[0]);
    assert!(tc.zero_fraction[3] == 0.0);
    let chain = crossing_frequency_curve(&p, 200, 40_000, StreamFamily::new(16)).unwrap();
    let (wt, se_t) = (tc.mean_w[3].unwrap(), tc.se[3].unwrap());
    let (wn, se_n) = (chain.mean_w[199], chain.se[199]);
    assert!((wt - wn).abs() < 4.0 * (se_t.powi(2) + se_n.powi(2)).sqrt() + 3e-3, "{wt} vs {wn}");
}

#[test]
fn time_curve_rejects_unordered_times() {
    assert!(time_crossing_frequency(&heavy(), &[2.0, 1.0], 10, StreamFamily::new(0)).is_err());
}

#[test]
fn recurrence_fractions() {
    let rows = recurrence_evidence(&heavy(), &[10, 100], 0, 100, StreamFamily::new(17)).unwrap();
    assert!(rows.iter().all(|r| r.fraction.estimate == 1.0));

    let rows = recurrence_evidence(&heavy(), &[10, 100, 1000], 3, 5_000, StreamFamily::new(18)).unwrap();
    assert!(rows.windows(2).all(|w| w[0].fraction.successes <= w[1].fraction.successes));

    // leaving D within 20 iid draws fails only if V_0 is the largest of 21
    let rows = recurrence_evidence(&memoryless(), &[20], 1, 200_000, StreamFamily::new(19)).unwrap();
    let f = &rows[0].fraction;
    let exact = 20.0 / 21.0;
    assert!(f.ci_lo - 1e-3 <= exact && exact <= f.ci_hi + 1e-3, "{f:?}");
}
