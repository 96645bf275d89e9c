//! Seeded synthetic series: sinusoids, white and AR(1) noise, and skewed
//! pulse trains. Each component draws from its own ChaCha8 stream of the
//! spec seed, so adding or reordering components never perturbs the others.

use std::f64::consts::PI;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calendar::{CarringtonEphemeris, CycleTable};
use crate::error::{Error, Result};
use crate::ingest::DailyAreaRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Amplitude {
    Constant {
        value: f64,
    },
    /// `exp(N(mu, sigma^2))`.
    Lognormal {
        mu: f64,
        sigma: f64,
    },
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::Lognormal { mu: 0.0, sigma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Component {
    /// `amplitude * sin(2 pi i / period + phase)`.
    Sinusoid {
        period: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    WhiteNoise {
        sigma: f64,
    },
    /// Stationary AR(1): `x_i = phi x_{i-1} + e_i`, `e_i ~ N(0, sigma^2)`.
    Ar1 {
        phi: f64,
        sigma: f64,
    },
    /// Single-sample pulses arriving with probability `1 / mean_spacing`
    /// per step.
    PulseTrain {
        mean_spacing: f64,
        #[serde(default)]
        amplitude: Amplitude,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub components: Vec<Component>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v < 0.0 {
        return Err(invalid(format!("{name} {v} is negative")));
    }
    Ok(())
}

impl Component {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Component::Sinusoid {
                period,
                amplitude,
                phase,
            } => {
                finite("amplitude", amplitude)?;
                finite("phase", phase)?;
                if !(period > 0.0 && period.is_finite()) {
                    return Err(invalid(format!("period {period} must be positive")));
                }
            }
            Component::WhiteNoise { sigma } => non_negative("sigma", sigma)?,
            Component::Ar1 { phi, sigma } => {
                non_negative("sigma", sigma)?;
                if !(phi.abs() < 1.0) {
                    return Err(invalid(format!("ar1 phi {phi} must satisfy |phi| < 1")));
                }
            }
            Component::PulseTrain {
                mean_spacing,
                amplitude,
            } => {
                if !(mean_spacing >= 1.0 && mean_spacing.is_finite()) {
                    return Err(invalid(format!("mean_spacing {mean_spacing} must be >= 1")));
                }
                match amplitude {
                    Amplitude::Constant { value } => finite("amplitude", value)?,
                    Amplitude::Lognormal { mu, sigma } => {
                        finite("mu", mu)?;
                        non_negative("sigma", sigma)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn add_to(&self, out: &mut [f64], rng: &mut ChaCha8Rng) {
        match *self {
            Component::Sinusoid {
                period,
                amplitude,
                phase,
            } => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v += amplitude * (2.0 * PI * i as f64 / period + phase).sin();
                }
            }
            Component::WhiteNoise { sigma } => {
                for v in out.iter_mut() {
                    let e: f64 = rng.sample(StandardNormal);
                    *v += sigma * e;
                }
            }
            Component::Ar1 { phi, sigma } => {
                let e0: f64 = rng.sample(StandardNormal);
                let mut prev = e0 * sigma / (1.0 - phi * phi).sqrt();
                for (i, v) in out.iter_mut().enumerate() {
                    if i > 0 {
                        let e: f64 = rng.sample(StandardNormal);
                        prev = phi * prev + sigma * e;
                    }
                    *v += prev;
                }
            }
            Component::PulseTrain {
                mean_spacing,
                amplitude,
            } => {
                let p = 1.0 / mean_spacing;
                for v in out.iter_mut() {
                    let hit = rng.random::<f64>() < p;
                    let a = match amplitude {
                        Amplitude::Constant { value } => value,
                        Amplitude::Lognormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
                    };
                    if hit {
                        *v += a;
                    }
                }
            }
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        self.components.iter().try_for_each(Component::validate)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Random stream for component `index` of a spec with this seed.
pub fn component_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut out = vec![0.0; spec.n];
    for (k, c) in spec.components.iter().enumerate() {
        c.add_to(&mut out, &mut component_rng(spec.seed, k));
    }
    Ok(out)
}

/// Shape of the bundled daily-record fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    /// Each hemisphere-cycle gets a modulation period drawn uniformly from
    /// this range, in rotations.
    pub period_range: (f64, f64),
    /// Relative depth of the quasi-periodic modulation.
    pub modulation: f64,
    /// Relative Gaussian day-to-day noise.
    pub daily_noise: f64,
    /// Probability that a rotation hosts an activity-complex burst.
    pub burst_probability: f64,
    /// Lognormal `sigma` of burst strength (relative to the envelope).
    pub burst_sigma: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            period_range: (9.0, 11.5),
            modulation: 0.45,
            daily_noise: 0.15,
            burst_probability: 0.2,
            burst_sigma: 0.6,
        }
    }
}

impl FixtureSpec {
    /// Noise-free modulation at exactly `period` rotations.
    pub fn pure_sinusoid(period: f64) -> Self {
        FixtureSpec {
            period_range: (period, period),
            modulation: 0.45,
            daily_noise: 0.0,
            burst_probability: 0.0,
            burst_sigma: 0.0,
        }
    }
}

struct FixtureHemisphere {
    rng: ChaCha8Rng,
    /// Per cycle: modulation period, phase, peak envelope area.
    cycles: Vec<(f64, f64, f64)>,
    /// Burst factor per rotation offset from the first fixture rotation.
    bursts: Vec<f64>,
}

/// Bundled daily hemispheric sunspot areas with the default shape.
pub fn fixture_daily_records(seed: u64) -> Vec<DailyAreaRecord> {
    fixture_daily_records_with(&FixtureSpec::default(), seed)
}

/// Daily hemispheric sunspot areas covering the shipped cycle table. Each
/// cycle has a smooth activity envelope modulated by a sinusoid of a few
/// rotations, on top of which whole rotations are occasionally boosted by
/// lognormal activity-complex bursts, plus Gaussian day-to-day noise.
/// Areas are clipped at zero and rounded to whole millionths.
pub fn fixture_daily_records_with(spec: &FixtureSpec, seed: u64) -> Vec<DailyAreaRecord> {
    let table = CycleTable::shipped();
    let eph = CarringtonEphemeris::default();
    let (start, end) = table.span();
    let cycles = table.entries();
    let rotation_of = |d: NaiveDate| {
        ((crate::calendar::JulianDate::noon(d).0 - eph.epoch_julian_date) / eph.synodic_period_days).floor() as i64
    };
    let first_rot = rotation_of(start);
    let n_rot = (rotation_of(end) - first_rot + 1) as usize;

    let peak = Normal::new(1500.0f64, 250.0).expect("valid");
    let burst = LogNormal::new(0.0, spec.burst_sigma.max(0.0)).expect("valid");
    let (plo, phi) = spec.period_range;
    let mut hemis: Vec<FixtureHemisphere> = (0..2)
        .map(|h| {
            let mut rng = component_rng(seed, h);
            let cycles = (0..cycles.len())
                .map(|_| {
                    let period = if phi > plo { rng.random_range(plo..=phi) } else { plo };
                    (
                        period,
                        rng.random_range(0.0..2.0 * PI),
                        peak.sample(&mut rng).max(600.0),
                    )
                })
                .collect();
            let bursts = (0..n_rot)
                .map(|_| {
                    if rng.random::<f64>() < spec.burst_probability {
                        burst.sample(&mut rng)
                    } else {
                        0.0
                    }
                })
                .collect();
            FixtureHemisphere { rng, cycles, bursts }
        })
        .collect();

    let mut records = Vec::new();
    let mut day = start;
    let mut ci = 0;
    while day < end {
        while day >= cycles[ci].end_date {
            ci += 1;
        }
        let entry = &cycles[ci];
        let len = (entry.end_date - entry.start_date).num_days() as f64;
        let phase = (day - entry.start_date).num_days() as f64 / len;
        let envelope = (PI * phase).sin().powi(2);
        let rot = (crate::calendar::JulianDate::noon(day).0 - eph.epoch_julian_date) / eph.synodic_period_days;
        let rot_offset = (rot.floor() as i64 - first_rot) as usize;

        let mut areas = [0.0f64; 2];
        for (h, hemi) in hemis.iter_mut().enumerate() {
            let (period, ph, peak_area) = hemi.cycles[ci];
            let modulation = 1.0 + spec.modulation * (2.0 * PI * rot / period + ph).sin();
            let noise = if spec.daily_noise > 0.0 {
                hemi.rng.sample::<f64, _>(StandardNormal) * spec.daily_noise
            } else {
                0.0
            };
            let a = peak_area * envelope * (modulation + noise + hemi.bursts[rot_offset]);
            areas[h] = a.max(0.0).round();
        }
        records.push(DailyAreaRecord {
            date: day,
            area_total: areas[0] + areas[1],
            area_north: areas[0],
            area_south: areas[1],
        });
        day += Duration::days(1);
    }
    records
}
