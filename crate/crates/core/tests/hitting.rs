use gasrelax::crossing::hitting::{tau1_lower_bound, temperature_scaling_experiment, LambdaMode};
use gasrelax::crossing::{dephasing_ensemble, fit_decay_rate, kubo_envelope, kubo_trace};
use gasrelax::crossing::hitting_time_stats;
use gasrelax::{GasParams, StreamFamily};
use rand::SeedableRng;

fn memoryless(lambda: f64) -> GasParams {
    GasParams::new(1.0, 1.0, 1.0, 1.0, lambda).unwrap()
}

#[test]
fn first_step_hits_half_the_time() {
    let (records, _) = hitting_time_stats(&memoryless(1.0), 100, 100_000, StreamFamily::new(1)).unwrap();
    let p = records.iter().filter(|r| r.n1 == 1).count() as f64 / records.len() as f64;
    let se = (0.25 / records.len() as f64).sqrt();
    assert!((p - 0.5).abs() < 4.0 * se, "P(N1 = 1) = {p}");
}

#[test]
fn capped_mean_is_harmonic_number() {
    // P(N1 > k) = 1/(k+1), so E[min(N1, cap)] = H_cap
    for (cap, seed) in [(100u64, 2u64), (1_000, 3), (10_000, 4)] {
        let (_, s) = hitting_time_stats(&memoryless(1.0), cap, 100_000, StreamFamily::new(seed)).unwrap();
        let h: f64 = (1..=cap).map(|k| 1.0 / k as f64).sum();
        let est = s.capped_mean_n1;
        assert!(est.within(h, 4.0), "cap {cap}: {} vs {h} (se {})", est.value, est.se);
        let censored = 1.0 / (cap + 1) as f64;
        assert!((s.censored_fraction - censored).abs() < 4.0 * (censored / 1e5).sqrt() + 1e-5);
    }
}

#[test]
fn wald_identity_links_time_and_count() {
    for lambda in [0.5, 2.0, 8.0] {
        let p = GasParams::new(3.0, 1.0, 4.0, 1.0, lambda).unwrap();
        let (_, s) = hitting_time_stats(&p, 1_000, 50_000, StreamFamily::new(5)).unwrap();
        assert!((s.wald_ratio - 1.0).abs() < 0.02, "lambda {lambda}: ratio {}", s.wald_ratio);
    }
}

#[test]
fn bound_reduces_to_mean_free_time() {
    for lambda in [0.5, 1.0, 4.0] {
        assert!((tau1_lower_bound(&memoryless(lambda)) - 1.0 / lambda).abs() < 1e-15);
    }
    let rows = temperature_scaling_experiment(&memoryless(2.0), &[1.0], LambdaMode::Fixed, 10, 0, StreamFamily::new(0))
        .unwrap();
    assert!((rows[0].bound - 0.5).abs() < 1e-15);
    assert!(rows[0].mean_tau1.is_nan());
}

#[test]
fn hotter_start_raises_bound_and_mean() {
    let base = GasParams::new(3.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let rows =
        temperature_scaling_experiment(&base, &[1.0, 4.0, 16.0], LambdaMode::Fixed, 1_000, 20_000, StreamFamily::new(6))
            .unwrap();
    assert!(rows.windows(2).all(|w| w[1].bound > w[0].bound));
    for r in &rows {
        assert!(r.ci_hi >= r.bound, "ratio {}: mean {} below bound {}", r.ratio, r.mean_tau1, r.bound);
    }
    let scaled = temperature_scaling_experiment(&base, &[4.0], LambdaMode::KineticScaled, 10, 0, StreamFamily::new(0))
        .unwrap();
    assert!((scaled[0].lambda - 0.25).abs() < 1e-15);
}

#[test]
fn hitting_rejects_degenerate_inputs() {
    assert!(hitting_time_stats(&memoryless(1.0), 0, 10, StreamFamily::new(0)).is_err());
    assert!(hitting_time_stats(&memoryless(1.0), 10, 1, StreamFamily::new(0)).is_err());
}

#[test]
fn ensemble_energy_decays_at_relaxation_rate() {
    let p = GasParams::new(3.0, 1.0, 9.0, 1.0, 1.0).unwrap();
    let s = dephasing_ensemble(&p, 20_000, 6.0, 0.05, 3, StreamFamily::new(7)).unwrap();
    let fit = fit_decay_rate(&s, 5.0).unwrap();
    let rate = p.relaxation_rate();
    assert!((fit.rate - rate).abs() / rate < 0.05, "fit {} vs {rate}", fit.rate);
    assert_eq!(s.per_molecule_state_traces.len(), 3);
    assert!(s.per_molecule_state_traces.iter().all(|t| t.len() == s.times.len()));
    assert!((s.mean_ke_trace[0] - 1.5 * 9.0).abs() < 5.0 * s.se[0]);
}

#[test]
fn lone_particle_cannot_be_fitted_without_signal() {
    let p = GasParams::new(3.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let s = dephasing_ensemble(&p, 1, 5.0, 0.1, 1, StreamFamily::new(8)).unwrap();
    assert!(fit_decay_rate(&s, 3.0).is_err());
}

#[test]
fn kubo_without_noise_is_a_sine() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let tr = kubo_trace(2.0, 0.0, 5.0, 0.01, &mut rng).unwrap();
    assert_eq!(tr.times.len(), 501);
    for (t, y) in tr.times.iter().zip(&tr.y) {
        assert!((y - (2.0 * t).sin()).abs() < 1e-12);
    }
}

#[test]
fn kubo_envelope_follows_cubic_decay() {
    let sigma = 0.8;
    let at = [0.5, 1.0, 1.5, 2.0];
    let est = kubo_envelope(0.0, sigma, &at, 0.005, 40_000, StreamFamily::new(9)).unwrap();
    for (t, e) in at.iter().zip(&est) {
        let exact = (-sigma * sigma * t.powi(3) / 6.0).exp();
        assert!((e.value - exact).abs() < 4.0 * e.se + 5e-3, "t = {t}: {} vs {exact}", e.value);
    }
}
