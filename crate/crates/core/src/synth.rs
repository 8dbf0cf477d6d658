//! Seeded synthetic station data: a smooth field of Gaussian bumps moving on
//! closed orbits, a diurnal wave and optional AR(1) modes with fixed spatial
//! footprints, observed by several source types.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{format_timestamp, Station};

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub id: String,
    pub count: usize,
    pub targets: Vec<String>,
}

impl SourceSpec {
    pub fn new(id: &str, count: usize, targets: &[&str]) -> Self {
        Self {
            id: id.into(),
            count,
            targets: targets.iter().map(|t| t.to_string()).collect(),
        }
    }
}

impl std::str::FromStr for SourceSpec {
    type Err = Error;

    /// `NAME:COUNT:TARGET|TARGET...`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("source spec {s:?} must look like NAME:COUNT:T1|T2"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let count = parts[1].parse().map_err(|_| bad())?;
        let targets: Vec<String> = parts[2].split('|').filter(|t| !t.is_empty()).map(String::from).collect();
        Ok(Self {
            id: parts[0].to_string(),
            count,
            targets,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub sources: Vec<SourceSpec>,
    pub hours: usize,
    /// Standard deviation of additive Gaussian observation noise.
    pub noise: f64,
    /// Per-hour probability that a gap starts in a series.
    pub gap_prob: f64,
    pub max_gap_len: usize,
    pub bumps: usize,
    /// Stationary standard deviation of the AR(1) mode amplitudes; 0 disables them.
    pub innovation: f64,
    /// Hours by which each target leads the shared field; missing entries are 0.
    pub lead_hours: Vec<(String, usize)>,
    pub start: NaiveDateTime,
}

fn default_start() -> NaiveDateTime {
    NaiveDateTime::parse_from_str("2020-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S").expect("valid literal")
}

impl SynthConfig {
    /// 13 stations over three sources measuring 2, 3 and 2 targets.
    pub fn three_source_layout(seed: u64, hours: usize) -> Self {
        Self {
            seed,
            sources: vec![
                SourceSpec::new("src1", 5, &["k1", "k2"]),
                SourceSpec::new("src2", 4, &["k3", "k4", "k5"]),
                SourceSpec::new("src3", 4, &["k6", "k7"]),
            ],
            hours,
            noise: 0.0,
            gap_prob: 0.0,
            max_gap_len: 0,
            bumps: 4,
            innovation: 0.0,
            lead_hours: Vec::new(),
            start: default_start(),
        }
    }

    /// 15 stations, two sources, three targets; `pm25` trails the two
    /// meteorological targets by a few hours.
    pub fn diffusion(seed: u64, hours: usize) -> Self {
        Self {
            seed,
            sources: vec![
                SourceSpec::new("met", 8, &["temp", "wind"]),
                SourceSpec::new("aq", 7, &["pm25"]),
            ],
            hours,
            noise: 0.01,
            gap_prob: 0.0,
            max_gap_len: 0,
            bumps: 4,
            innovation: 0.3,
            lead_hours: vec![("temp".into(), 3), ("wind".into(), 6)],
            start: default_start(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() || self.sources.iter().any(|s| s.count == 0 || s.targets.is_empty()) {
            return Err(Error::Config("every source needs at least one station and one target".into()));
        }
        if self.hours == 0 || self.bumps == 0 {
            return Err(Error::Config("hours and bumps must be positive".into()));
        }
        if !(self.innovation >= 0.0 && self.innovation.is_finite()) {
            return Err(Error::Config("innovation must be >= 0".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(0.0..1.0).contains(&self.gap_prob) {
            return Err(Error::Config("noise must be >= 0 and gap_prob in [0, 1)".into()));
        }
        Ok(())
    }

    fn lead(&self, target: &str) -> usize {
        self.lead_hours
            .iter()
            .find(|(t, _)| t == target)
            .map_or(0, |(_, h)| *h)
    }
}

#[derive(Debug, Clone)]
struct Bump {
    centre: [f64; 2],
    orbit: [f64; 2],
    omega: f64,
    phase: f64,
    radius: f64,
    amplitude: f64,
}

const MODE_RHO: f64 = 0.9;

#[derive(Debug, Clone)]
struct Mode {
    centre: [f64; 2],
    radius: f64,
}

/// The latent smooth field sampled by every target, defined on integer hours.
#[derive(Debug, Clone)]
pub struct Field {
    bumps: Vec<Bump>,
    diurnal_amp: f64,
    modes: Vec<Mode>,
    /// `amplitudes[t][j]` of mode `j`.
    amplitudes: Vec<Vec<f64>>,
}

impl Field {
    fn random(rng: &mut ChaCha8Rng, n: usize, innovation: f64, hours: usize) -> Self {
        let bumps = (0..n)
            .map(|_| Bump {
                centre: [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)],
                orbit: [rng.gen_range(0.25..0.45), rng.gen_range(0.25..0.45)],
                omega: std::f64::consts::TAU / rng.gen_range(36.0..90.0),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                radius: rng.gen_range(0.2..0.35),
                amplitude: rng.gen_range(0.6..1.4),
            })
            .collect();
        let mut modes = Vec::new();
        let mut amplitudes = vec![Vec::new(); hours];
        if innovation > 0.0 {
            modes = (0..4)
                .map(|_| Mode {
                    centre: [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)],
                    radius: rng.gen_range(0.25..0.4),
                })
                .collect();
            let normal = Normal::new(0.0, innovation * (1.0 - MODE_RHO * MODE_RHO).sqrt()).expect("finite sd");
            let stationary = Normal::new(0.0, innovation).expect("finite sd");
            let mut a: Vec<f64> = (0..modes.len()).map(|_| stationary.sample(rng)).collect();
            for slot in amplitudes.iter_mut() {
                for v in a.iter_mut() {
                    *v = MODE_RHO * *v + normal.sample(rng);
                }
                slot.clone_from(&a);
            }
        }
        Self {
            bumps,
            diurnal_amp: 0.4,
            modes,
            amplitudes,
        }
    }

    /// Field value at point `p` and hour `t`; `t` must be below the generated length.
    pub fn value(&self, p: [f64; 2], t: usize) -> f64 {
        let tf = t as f64;
        let mut v = self.diurnal_amp * (std::f64::consts::TAU * tf / 24.0 + 1.5 * p[0]).sin();
        for b in &self.bumps {
            let a = b.omega * tf + b.phase;
            let cx = b.centre[0] + b.orbit[0] * a.cos();
            let cy = b.centre[1] + b.orbit[1] * a.sin();
            let d2 = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
            v += b.amplitude * (-d2 / (2.0 * b.radius * b.radius)).exp();
        }
        for (m, a) in self.modes.iter().zip(&self.amplitudes[t]) {
            let d2 = (p[0] - m.centre[0]).powi(2) + (p[1] - m.centre[1]).powi(2);
            v += a * (-d2 / (2.0 * m.radius * m.radius)).exp();
        }
        v
    }
}

/// Stations, field and the T×S×K observation array (NaN = missing or not measured).
#[derive(Debug, Clone)]
pub struct SynthData {
    pub stations: Vec<Station>,
    pub target_ids: Vec<String>,
    pub timestamps: Vec<NaiveDateTime>,
    pub values: ndarray::Array3<f64>,
    pub field: Field,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stations: Vec<Station> = Vec::new();
    for src in &cfg.sources {
        for i in 0..src.count {
            // keep stations apart so the RBF systems stay well posed
            let (x, y) = loop {
                let cand = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                if stations
                    .iter()
                    .all(|s| (s.x - cand.0).hypot(s.y - cand.1) > 0.05)
                {
                    break cand;
                }
            };
            stations.push(Station {
                id: format!("{}_{:02}", src.id, i + 1),
                source_id: src.id.clone(),
                x,
                y,
                targets: src.targets.clone(),
            });
        }
    }
    let target_ids = crate::ingest::target_union(&stations);
    let max_lead = cfg.lead_hours.iter().map(|(_, h)| *h).max().unwrap_or(0);
    let field = Field::random(&mut rng, cfg.bumps, cfg.innovation, cfg.hours + max_lead);
    let offsets: Vec<(f64, f64)> = target_ids
        .iter()
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)))
        .collect();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let (t_len, s_len, k_len) = (cfg.hours, stations.len(), target_ids.len());
    let mut values = ndarray::Array3::from_elem((t_len, s_len, k_len), f64::NAN);
    for (si, st) in stations.iter().enumerate() {
        for (ki, target) in target_ids.iter().enumerate() {
            if !st.measures(target) {
                continue;
            }
            let lead = cfg.lead(target);
            let (offset, scale) = offsets[ki];
            let mut gap_left = 0usize;
            for t in 0..t_len {
                let clean = offset + scale * field.value([st.x, st.y], t + lead);
                let noisy = clean + cfg.noise * scale * normal.sample(&mut rng);
                if cfg.gap_prob > 0.0 && gap_left == 0 && rng.gen::<f64>() < cfg.gap_prob {
                    gap_left = rng.gen_range(1..=cfg.max_gap_len.max(1));
                }
                if gap_left > 0 {
                    gap_left -= 1;
                } else {
                    values[[t, si, ki]] = noisy;
                }
            }
        }
    }
    let timestamps = (0..t_len)
        .map(|h| cfg.start + chrono::Duration::hours(h as i64))
        .collect();
    Ok(SynthData {
        stations,
        target_ids,
        timestamps,
        values,
        field,
    })
}

impl SynthData {
    pub fn stations_csv(&self) -> String {
        let mut out = String::from("station_id,source_id,x,y,targets\n");
        for s in &self.stations {
            let _ = writeln!(out, "{},{},{},{},{}", s.id, s.source_id, s.x, s.y, s.targets.join("|"));
        }
        out
    }

    pub fn observations_csv(&self) -> String {
        let mut out = String::from("timestamp,station_id,target_id,value\n");
        for (t, ts) in self.timestamps.iter().enumerate() {
            let stamp = format_timestamp(ts);
            for (si, st) in self.stations.iter().enumerate() {
                for (ki, target) in self.target_ids.iter().enumerate() {
                    if !st.measures(target) {
                        continue;
                    }
                    let v = self.values[[t, si, ki]];
                    if v.is_nan() {
                        let _ = writeln!(out, "{stamp},{},{target},", st.id);
                    } else {
                        let _ = writeln!(out, "{stamp},{},{target},{v}", st.id);
                    }
                }
            }
        }
        out
    }

    /// Writes `stations.csv` and `observations.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("stations.csv", self.stations_csv()),
            ("observations.csv", self.observations_csv()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
