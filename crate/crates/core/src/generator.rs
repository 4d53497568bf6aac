//! Synthetic group traces from an alternating ON/OFF renewal model.
//!
//! Every user alternates OFF (silent) and ON (session) periods. Inside an ON
//! period the user posts at its start and then after each sampled
//! inter-message time until the period ends. User `u` (1-based) has its OFF
//! durations stretched by `u^s`, so session frequency, and with it message
//! volume, falls off roughly as `u^-s`. Timestamps are truncated to whole
//! minutes; same-minute messages stay distinct.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ContentFlags, Message, MessageLog, Minute};
use crate::metrics::user_toff;
use crate::sessionizer::build_user_sessions;
use crate::statfit::{rank_frequency, zipf_fit_ranked, ZipfFit};

/// Duration law in minutes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationDist {
    Exponential { mean: f64 },
    /// `exp(N(mu, sigma^2))`.
    Lognormal { mu: f64, sigma: f64 },
}

impl DurationDist {
    pub fn mean(&self) -> f64 {
        match *self {
            DurationDist::Exponential { mean } => mean,
            DurationDist::Lognormal { mu, sigma } => (mu + sigma * sigma / 2.0).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DurationDist::Exponential { mean } => mean * mean,
            DurationDist::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * (2.0 * mu + s2).exp()
            }
        }
    }

    /// Same family with every duration multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            DurationDist::Exponential { mean } => DurationDist::Exponential { mean: mean * factor },
            DurationDist::Lognormal { mu, sigma } => DurationDist::Lognormal {
                mu: mu + factor.ln(),
                sigma,
            },
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            DurationDist::Exponential { mean } => mean.is_finite() && mean > 0.0,
            DurationDist::Lognormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: invalid parameters {self:?}")))
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate("distribution")?;
        Ok(match *self {
            DurationDist::Exponential { mean } => {
                Sampler::Exp(Exp::new(1.0 / mean).map_err(|e| Error::Config(e.to_string()))?)
            }
            DurationDist::Lognormal { mu, sigma } => {
                Sampler::LogNormal(LogNormal::new(mu, sigma).map_err(|e| Error::Config(e.to_string()))?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Sampler {
    Exp(Exp<f64>),
    LogNormal(LogNormal<f64>),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exp(d) => d.sample(rng),
            Sampler::LogNormal(d) => d.sample(rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentMixEntry {
    pub flags: ContentFlags,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub group: String,
    pub n_users: usize,
    pub start_minute: Minute,
    pub horizon_min: Minute,
    pub on_duration: DurationDist,
    pub off_duration: DurationDist,
    pub intra_session_iat: DurationDist,
    /// Zipf exponent `s >= 0` applied to per-user activity.
    pub user_activity_skew: f64,
    pub content_mix: Vec<ContentMixEntry>,
    pub seed: u64,
}

impl Default for GeneratorParams {
    /// Conventional values, not fitted to any dataset: four weeks, 50 users,
    /// 20 minute sessions, 81 minute silences, a message every 2 minutes.
    fn default() -> Self {
        Self {
            group: "synthetic".into(),
            n_users: 50,
            // 2017-10-01 00:00 UTC
            start_minute: 25_113_600,
            horizon_min: 28 * 24 * 60,
            on_duration: DurationDist::Exponential { mean: 20.0 },
            off_duration: DurationDist::Exponential { mean: 81.0 },
            intra_session_iat: DurationDist::Exponential { mean: 2.0 },
            user_activity_skew: 1.0,
            content_mix: vec![
                ContentMixEntry { flags: ContentFlags::TEXT, probability: 0.62 },
                ContentMixEntry { flags: ContentFlags::MEDIA, probability: 0.18 },
                ContentMixEntry { flags: ContentFlags::TEXT.union(ContentFlags::EMOJI), probability: 0.08 },
                ContentMixEntry { flags: ContentFlags::EMOJI, probability: 0.04 },
                ContentMixEntry { flags: ContentFlags::TEXT.union(ContentFlags::LINK), probability: 0.06 },
                ContentMixEntry { flags: ContentFlags::MEDIA.union(ContentFlags::TEXT), probability: 0.02 },
            ],
            seed: 0,
        }
    }
}

impl GeneratorParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_min < 0 {
            return Err(Error::Config("horizon_min must not be negative".into()));
        }
        self.on_duration.validate("on_duration")?;
        self.off_duration.validate("off_duration")?;
        self.intra_session_iat.validate("intra_session_iat")?;
        if !(self.user_activity_skew.is_finite() && self.user_activity_skew >= 0.0) {
            return Err(Error::Config("user_activity_skew must be finite and >= 0".into()));
        }
        if self.content_mix.is_empty() {
            return Err(Error::Config("content_mix is empty".into()));
        }
        if let Some(e) = self
            .content_mix
            .iter()
            .find(|e| e.flags.is_empty() || !(e.probability >= 0.0 && e.probability.is_finite()))
        {
            return Err(Error::Config(format!("bad content_mix entry {e:?}")));
        }
        let total: f64 = self.content_mix.iter().map(|e| e.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("content_mix probabilities sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn user_id(u: usize) -> String {
        format!("user{u:04}")
    }
}

/// What the generator actually drew, for comparison with estimates.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GroundTruth {
    /// ON periods that started inside the horizon (each holds at least one
    /// message).
    pub on_periods: u64,
    /// OFF periods that ended inside the horizon, excluding the initial
    /// random offset.
    pub off_durations: Vec<f64>,
    pub messages_per_user: Vec<u64>,
}

impl GroundTruth {
    pub fn off_mean(&self) -> Option<f64> {
        (!self.off_durations.is_empty())
            .then(|| self.off_durations.iter().sum::<f64>() / self.off_durations.len() as f64)
    }
}

pub fn generate_trace(params: &GeneratorParams) -> Result<MessageLog> {
    generate_with_truth(params).map(|(log, _)| log)
}

pub fn generate_with_truth(params: &GeneratorParams) -> Result<(MessageLog, GroundTruth)> {
    params.validate()?;
    let mut truth = GroundTruth::default();
    if params.n_users == 0 || params.horizon_min == 0 {
        return Ok((MessageLog::empty(params.group.clone()), truth));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let on = params.on_duration.sampler()?;
    let iat = params.intra_session_iat.sampler()?;
    let mix = WeightedIndex::new(params.content_mix.iter().map(|e| e.probability))
        .map_err(|e| Error::Config(e.to_string()))?;
    let start = params.start_minute as f64;
    let end = (params.start_minute + params.horizon_min) as f64;

    let mut messages = Vec::new();
    for u in 1..=params.n_users {
        let user = GeneratorParams::user_id(u);
        let stretch = (u as f64).powf(params.user_activity_skew);
        let off = params.off_duration.scaled(stretch).sampler()?;
        let mut emitted = 0u64;
        let mut emit = |rng: &mut ChaCha8Rng, at: f64| {
            let flags = params.content_mix[mix.sample(rng)].flags;
            let text_len = if flags.has_text { rng.gen_range(1..=120) } else { 0 };
            messages.push(Message::new(&params.group, &user, at.floor() as Minute, flags, text_len));
            emitted += 1;
        };

        let mut t = start + rng.gen::<f64>() * off.sample(&mut rng);
        while t < end {
            truth.on_periods += 1;
            let on_end = t + on.sample(&mut rng);
            emit(&mut rng, t);
            let mut next = t + iat.sample(&mut rng);
            while next <= on_end && next < end {
                emit(&mut rng, next);
                next += iat.sample(&mut rng);
            }
            let silence = off.sample(&mut rng);
            t = on_end + silence;
            if t < end {
                truth.off_durations.push(silence);
            }
        }
        truth.messages_per_user.push(emitted);
    }
    Ok((MessageLog::new(params.group.clone(), messages), truth))
}

/// Estimates recovered from a generated trace next to the generator's truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub messages: usize,
    pub user_threshold: Minute,
    pub generated_on_periods: u64,
    pub recovered_user_sessions: u64,
    pub session_count_rel_err: f64,
    pub generated_off_mean: Option<f64>,
    pub recovered_toff_mean: Option<f64>,
    pub toff_mean_rel_err: Option<f64>,
    pub expected_zipf_slope: f64,
    pub zipf_fit: Option<ZipfFit<f64>>,
    pub zipf_slope_abs_err: Option<f64>,
}

fn rel_err(estimate: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (estimate - truth).abs() / truth.abs()
    }
}

/// Generates a trace, sessionizes it and compares session count, mean user
/// T_off and the Zipf slope of per-user message counts with ground truth.
pub fn round_trip_check(params: &GeneratorParams, user_threshold: Minute) -> Result<RoundTripReport> {
    if user_threshold <= 0 {
        return Err(Error::Config("user threshold must be positive".into()));
    }
    let (log, truth) = generate_with_truth(params)?;
    let sessions = build_user_sessions(&log, user_threshold);
    let toff = user_toff(&sessions);
    let recovered_toff_mean =
        (!toff.is_empty()).then(|| toff.iter().sum::<Minute>() as f64 / toff.len() as f64);
    let generated_off_mean = truth.off_mean();

    let mut counts = std::collections::BTreeMap::new();
    for m in log.messages() {
        *counts.entry(m.user_id.clone()).or_insert(0u64) += 1;
    }
    let zipf_fit = zipf_fit_ranked::<f64, _>(&rank_frequency(&counts)).ok();
    let expected_zipf_slope = -params.user_activity_skew;

    Ok(RoundTripReport {
        messages: log.len(),
        user_threshold,
        generated_on_periods: truth.on_periods,
        recovered_user_sessions: sessions.len() as u64,
        session_count_rel_err: rel_err(sessions.len() as f64, truth.on_periods as f64),
        toff_mean_rel_err: match (recovered_toff_mean, generated_off_mean) {
            (Some(r), Some(g)) => Some(rel_err(r, g)),
            _ => None,
        },
        generated_off_mean,
        recovered_toff_mean,
        expected_zipf_slope,
        zipf_slope_abs_err: zipf_fit.map(|f| (f.slope - expected_zipf_slope).abs()),
        zipf_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorParams {
        GeneratorParams {
            n_users: 10,
            horizon_min: 3 * 24 * 60,
            seed: 3,
            ..GeneratorParams::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_trace(&small()).unwrap();
        let b = generate_trace(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_trace(&GeneratorParams { seed: 4, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_cases() {
        assert!(generate_trace(&GeneratorParams { n_users: 0, ..small() }).unwrap().is_empty());
        assert!(generate_trace(&GeneratorParams { horizon_min: 0, ..small() }).unwrap().is_empty());
    }

    #[test]
    fn output_is_a_valid_log() {
        let p = small();
        let log = generate_trace(&p).unwrap();
        assert!(!log.is_empty());
        let ts: Vec<Minute> = log.timestamps().collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        assert!(ts.iter().all(|t| *t >= p.start_minute && *t < p.start_minute + p.horizon_min));
        assert!(log.messages().iter().all(|m| !m.content.is_empty()));
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            GeneratorParams { off_duration: DurationDist::Exponential { mean: 0.0 }, ..small() },
            GeneratorParams { on_duration: DurationDist::Lognormal { mu: 1.0, sigma: -1.0 }, ..small() },
            GeneratorParams { user_activity_skew: -0.5, ..small() },
            GeneratorParams {
                content_mix: vec![ContentMixEntry { flags: ContentFlags::TEXT, probability: 0.5 }],
                ..small()
            },
            GeneratorParams { horizon_min: -1, ..small() },
        ];
        for p in bad {
            assert!(generate_trace(&p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn params_from_toml() {
        let text = r#"
            n_users = 3
            seed = 9
            [off_duration]
            family = "lognormal"
            mu = 4.0
            sigma = 0.5
        "#;
        let p = GeneratorParams::from_toml(text).unwrap();
        assert_eq!(p.n_users, 3);
        assert_eq!(p.off_duration, DurationDist::Lognormal { mu: 4.0, sigma: 0.5 });
        assert!(GeneratorParams::from_toml("n_users = \"x\"").is_err());
    }

    fn moments(d: DurationDist, n: usize) -> (f64, f64) {
        let s = d.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, var)
    }

    #[test]
    fn sampler_moments_match_requested_law() {
        for d in [
            DurationDist::Exponential { mean: 81.0 },
            DurationDist::Exponential { mean: 2.0 },
            DurationDist::Lognormal { mu: 2.0, sigma: 0.5 },
        ] {
            let (mean, var) = moments(d, 100_000);
            assert!((mean - d.mean()).abs() / d.mean() < 0.05, "{d:?} mean {mean}");
            assert!((var - d.variance()).abs() / d.variance() < 0.05, "{d:?} var {var}");
        }
    }

    #[test]
    fn scaling_multiplies_the_mean() {
        let d = DurationDist::Lognormal { mu: 1.0, sigma: 0.3 };
        assert!((d.scaled(4.0).mean() - 4.0 * d.mean()).abs() < 1e-9);
        assert_eq!(DurationDist::Exponential { mean: 2.0 }.scaled(3.0).mean(), 6.0);
    }

    #[test]
    fn recovered_sessions_track_on_periods() {
        let p = GeneratorParams {
            n_users: 40,
            horizon_min: 400 * 24 * 60,
            on_duration: DurationDist::Exponential { mean: 10.0 },
            off_duration: DurationDist::Exponential { mean: 1000.0 },
            intra_session_iat: DurationDist::Exponential { mean: 1.0 },
            user_activity_skew: 0.0,
            seed: 5,
            ..GeneratorParams::default()
        };
        let r = round_trip_check(&p, 15).unwrap();
        assert!(r.generated_on_periods > 10_000);
        assert!(r.session_count_rel_err < 0.02, "{r:?}");
        assert!(r.toff_mean_rel_err.unwrap() < 0.05, "{r:?}");
    }

    #[test]
    fn no_skew_gives_flat_rank_curve() {
        let p = GeneratorParams {
            n_users: 50,
            horizon_min: 200 * 24 * 60,
            user_activity_skew: 0.0,
            seed: 21,
            ..GeneratorParams::default()
        };
        let r = round_trip_check(&p, 15).unwrap();
        assert!(r.zipf_fit.unwrap().slope.abs() < 0.05, "{r:?}");
    }
}
