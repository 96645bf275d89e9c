use sunqp::synth::{generate, Component, SynthSpec};
use sunqp::wavelet::{analyze, default_jmax, morlet_cwt, WaveletParams};
use sunqp::{Hemisphere, SeriesKind};

/// Reconstruction factor of the Morlet wavelet with omega0 = 6.
const C_DELTA: f64 = 0.776;

fn series(n: usize, seed: u64, c: Component) -> Vec<f64> {
    generate(&SynthSpec {
        n,
        seed,
        components: vec![c],
    })
    .unwrap()
}

#[test]
fn scale_sum_recovers_variance() {
    let (dt, s0, dj) = (1.0, 2.0, 0.125);
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let x = series(512, seed, Component::WhiteNoise { sigma: 1.0 });
        let jmax = default_jmax(x.len(), dt, s0, dj, 6.0);
        let c = morlet_cwt(&x, dt, s0, dj, jmax, 6.0).unwrap();
        // power is normalised by the variance, so the sum should give 1
        let sum: f64 = c
            .power
            .iter()
            .zip(&c.scales)
            .map(|(row, s)| row.iter().sum::<f64>() / s)
            .sum();
        ratios.push(dj * dt / C_DELTA * sum / x.len() as f64);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 1.0).abs() < 0.15, "{mean}");
}

#[test]
fn red_noise_false_positive_rate() {
    let params = WaveletParams::default();
    let (mut hits, mut cells) = (0usize, 0usize);
    for seed in 0..100 {
        let x = series(256, 500 + seed, Component::Ar1 { phi: 0.5, sigma: 1.0 });
        let w = analyze(&x, Hemisphere::North, 0, SeriesKind::Original, &params, 0.95).unwrap();
        for j in 0..w.periods.len() {
            for t in 0..w.len() {
                if !w.in_coi(j, t) {
                    cells += 1;
                    hits += w.significant[j][t] as usize;
                }
            }
        }
    }
    let rate = hits as f64 / cells as f64;
    assert!((rate - 0.05).abs() < 0.02, "{rate}");
}

#[test]
fn peak_period_tracks_input_period() {
    for period in [6.0, 10.0, 17.0, 23.0] {
        let x = series(
            200,
            0,
            Component::Sinusoid {
                period,
                amplitude: 1.0,
                phase: 0.3,
            },
        );
        let w = analyze(
            &x,
            Hemisphere::South,
            0,
            SeriesKind::Original,
            &WaveletParams::default(),
            0.95,
        )
        .unwrap();
        let p = w.argmax().unwrap().period;
        assert!((p / period - 1.0).abs() < 0.05, "{period}: {p}");
    }
}
