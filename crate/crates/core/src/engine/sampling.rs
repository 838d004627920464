use serde::{Deserialize, Serialize};

use super::RngStream;

/// Triangular distribution over minutes, given as (min, mode, max).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangularDist {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl TriangularDist {
    pub const fn new(min: f64, mode: f64, max: f64) -> Self {
        Self { min, mode, max }
    }

    pub const fn point(value: f64) -> Self {
        Self::new(value, value, value)
    }

    /// Names of the violated invariants, empty when valid.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !(self.min.is_finite() && self.mode.is_finite() && self.max.is_finite()) {
            out.push("non-finite");
            return out;
        }
        if self.min < 0.0 {
            out.push("min<0");
        }
        if self.min > self.mode {
            out.push("min>mode");
        }
        if self.mode > self.max {
            out.push("mode>max");
        }
        out
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.mode + self.max) / 3.0
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (a, c, b) = (self.min, self.mode, self.max);
        if x <= a {
            0.0
        } else if x >= b {
            1.0
        } else if x <= c {
            (x - a) * (x - a) / ((b - a) * (c - a))
        } else {
            1.0 - (b - x) * (b - x) / ((b - a) * (b - c))
        }
    }

    /// Inverse CDF at `u` in [0, 1].
    pub fn quantile(&self, u: f64) -> f64 {
        let (a, c, b) = (self.min, self.mode, self.max);
        let width = b - a;
        if width <= 0.0 {
            return a;
        }
        let split = (c - a) / width;
        if u < split {
            a + (u * width * (c - a)).sqrt()
        } else {
            b - ((1.0 - u) * width * (b - c)).sqrt()
        }
    }
}

pub fn sample_triangular(d: &TriangularDist, rng: &mut RngStream) -> f64 {
    let x = d.quantile(rng.uniform());
    x.clamp(d.min, d.max)
}

/// One Bernoulli trial. Always draws, so stream consumption does not depend on `p`.
pub fn sample_bernoulli(p: f64, rng: &mut RngStream) -> bool {
    rng.uniform() < p
}

/// Arrival offsets (minutes from opening) of a non-homogeneous Poisson
/// process with piecewise-constant hourly rates, by thinning against the
/// peak rate. `hourly_rates[h]` is customers per hour during hour `h`.
pub fn generate_arrivals(hourly_rates: &[f64], rng: &mut RngStream) -> Vec<f64> {
    let peak = hourly_rates.iter().copied().fold(0.0f64, f64::max);
    if peak <= 0.0 || hourly_rates.is_empty() {
        return Vec::new();
    }
    let horizon = hourly_rates.len() as f64 * 60.0;
    let peak_per_minute = peak / 60.0;
    let mut out = Vec::with_capacity((horizon * peak_per_minute * 1.2) as usize + 4);
    let mut t = 0.0;
    loop {
        t += -(1.0 - rng.uniform()).ln() / peak_per_minute;
        if t >= horizon {
            break;
        }
        let hour = ((t / 60.0) as usize).min(hourly_rates.len() - 1);
        if rng.uniform() * peak < hourly_rates[hour] {
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StreamId;

    fn stream() -> RngStream {
        RngStream::new(2024, StreamId::Durations)
    }

    #[test]
    fn point_mass_is_exact() {
        let mut rng = stream();
        for _ in 0..100 {
            assert_eq!(
                sample_triangular(&TriangularDist::point(7.0), &mut rng),
                7.0
            );
        }
    }

    #[test]
    fn browse_samples_stay_in_support() {
        let d = TriangularDist::new(1.0, 7.0, 15.0);
        let mut rng = stream();
        for _ in 0..100_000 {
            let s = sample_triangular(&d, &mut rng);
            assert!((1.0..=15.0).contains(&s));
        }
    }

    #[test]
    fn browse_mean_matches_closed_form() {
        let d = TriangularDist::new(1.0, 7.0, 15.0);
        let expected = (1.0 + 7.0 + 15.0) / 3.0;
        let mut rng = stream();
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_triangular(&d, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - expected).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn bernoulli_extremes_and_frequency() {
        let mut rng = stream();
        assert!((0..1000).all(|_| !sample_bernoulli(0.0, &mut rng)));
        assert!((0..1000).all(|_| sample_bernoulli(1.0, &mut rng)));
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_bernoulli(0.37, &mut rng)).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.37).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn zero_profile_has_no_arrivals() {
        let mut rng = stream();
        assert!(generate_arrivals(&[0.0; 10], &mut rng).is_empty());
        assert!(generate_arrivals(&[], &mut rng).is_empty());
    }

    #[test]
    fn single_hour_profile_stays_inside_that_hour() {
        let mut rng = stream();
        let mut profile = vec![0.0; 10];
        profile[4] = 120.0;
        for _ in 0..200 {
            let arrivals = generate_arrivals(&profile, &mut rng);
            assert!(arrivals.iter().all(|t| (240.0..300.0).contains(t)));
            assert!(arrivals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = TriangularDist::new(5.0, 12.0, 20.0);
        for i in 1..100 {
            let u = i as f64 / 100.0;
            assert!((d.cdf(d.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn violations_are_named() {
        assert_eq!(
            TriangularDist::new(5.0, 3.0, 10.0).violations(),
            vec!["min>mode"]
        );
        assert_eq!(
            TriangularDist::new(1.0, 9.0, 4.0).violations(),
            vec!["mode>max"]
        );
        assert_eq!(
            TriangularDist::new(-1.0, 0.0, 4.0).violations(),
            vec!["min<0"]
        );
        assert!(TriangularDist::new(1.0, 7.0, 15.0).violations().is_empty());
    }
}
