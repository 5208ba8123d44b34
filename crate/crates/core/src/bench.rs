//! Timing of the bottom-up meta-interpreter on triangular programs.
//!
//! Each size is a target number of proposition occurrences; the program run
//! is the largest triangular one within that target. Only the query is timed:
//! generating, parsing and loading the program are not.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::engine::{Engine, EngineConfig, Schedule};
use crate::error::{Error, Result};
use crate::meta::{largest_within, occurrences, triangular, BOTTOM_UP};
use crate::program::parse_program;

pub const QUERY: &str = "interp_atom(p1)";

/// Sizes used by the linearity check.
pub const DEFAULT_SIZES: [u64; 5] = [10_000, 20_000, 100_000, 200_000, 1_000_000];

#[derive(Clone, Debug)]
pub struct BenchSpec {
    /// Occurrence targets, positive and strictly increasing.
    pub sizes: Vec<u64>,
    pub reps: usize,
    pub warmup: usize,
    pub schedule: Schedule,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec { sizes: DEFAULT_SIZES.to_vec(), reps: 5, warmup: 1, schedule: Schedule::Model }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Invalid("no benchmark sizes given".into()));
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("benchmark sizes must be positive and increasing".into()));
        }
        if self.reps == 0 {
            return Err(Error::Invalid("at least one repetition is needed".into()));
        }
        if let Some(&s) = self.sizes.iter().find(|&&s| largest_within(s) == 0) {
            return Err(Error::Invalid(format!("no triangular program has at most {s} occurrences")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BenchPoint {
    pub target: u64,
    /// Number of rules in the program run.
    pub n: u64,
    pub occurrences: u64,
    /// Timed repetitions, warmup excluded.
    pub times: Vec<Duration>,
    pub steps: u64,
}

impl BenchPoint {
    pub fn median(&self) -> Duration {
        median(&self.times)
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
}

impl BenchReport {
    /// Median time of each size over that of the previous size.
    pub fn ratios(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| secs(w[1].median()) / secs(w[0].median())).collect()
    }

    /// Least-squares slope of log median time against log occurrences.
    pub fn exponent(&self) -> Option<f64> {
        let xs: Vec<f64> = self.points.iter().map(|p| (p.occurrences as f64).ln()).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| secs(p.median()).ln()).collect();
        slope(&xs, &ys)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>10} {:>6} {:>12} {:>12} {:>7}", "target", "n", "occurrences", "median_ms", "ratio");
        let ratios = self.ratios();
        for (i, p) in self.points.iter().enumerate() {
            let ratio = if i == 0 { "-".to_string() } else { format!("{:.2}", ratios[i - 1]) };
            let ms = secs(p.median()) * 1e3;
            let _ = writeln!(out, "{:>10} {:>6} {:>12} {:>12.3} {:>7}", p.target, p.n, p.occurrences, ms, ratio);
        }
        if let Some(e) = self.exponent() {
            let _ = writeln!(out, "exponent {e:.3}");
        }
        out
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub fn median(times: &[Duration]) -> Duration {
    let mut sorted = times.to_vec();
    sorted.sort();
    match sorted.len() {
        0 => Duration::ZERO,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2,
    }
}

/// Ordinary least-squares slope; `None` with fewer than two distinct x values.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One timed run of the query on a freshly loaded engine.
pub fn time_once(program: &crate::program::Program, schedule: Schedule) -> Result<(Duration, u64)> {
    let mut engine = Engine::new(program, EngineConfig { schedule, ..Default::default() })?;
    let start = Instant::now();
    let solution = engine.solve_text(QUERY)?;
    let elapsed = start.elapsed();
    if solution.answers.len() != 1 {
        return Err(Error::Invalid(format!("{QUERY} should have one answer, got {}", solution.answers.len())));
    }
    Ok((elapsed, solution.steps))
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport> {
    spec.validate()?;
    let mut points = Vec::new();
    for &target in &spec.sizes {
        let n = largest_within(target);
        let program = parse_program(&format!("{BOTTOM_UP}{}", triangular(n)))?;
        for _ in 0..spec.warmup {
            time_once(&program, spec.schedule)?;
        }
        let mut times = Vec::new();
        let mut steps = 0;
        for _ in 0..spec.reps {
            let (t, s) = time_once(&program, spec.schedule)?;
            times.push(t);
            steps = s;
        }
        points.push(BenchPoint { target, n, occurrences: occurrences(n), times, steps });
    }
    Ok(BenchReport { points })
}
