//! Repeated timing with a trimmed mean: the fastest and slowest runs are
//! dropped and the rest averaged.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Source of durations. Tests substitute a scripted clock.
pub trait Timer {
    /// Runs `f` once and returns its duration in seconds.
    fn time(&mut self, f: &mut dyn FnMut()) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock;

impl Timer for WallClock {
    fn time(&mut self, f: &mut dyn FnMut()) -> f64 {
        let t = Instant::now();
        f();
        t.elapsed().as_secs_f64()
    }
}

/// Runs the closure but reports durations from a fixed script, cycling when
/// it runs out.
#[derive(Debug, Clone)]
pub struct ScriptedTimer {
    script: Vec<f64>,
    next: usize,
}

impl ScriptedTimer {
    pub fn new(script: Vec<f64>) -> Self {
        assert!(!script.is_empty(), "empty timing script");
        Self { script, next: 0 }
    }
}

impl Timer for ScriptedTimer {
    fn time(&mut self, f: &mut dyn FnMut()) -> f64 {
        f();
        let t = self.script[self.next % self.script.len()];
        self.next += 1;
        t
    }
}

/// Mean after removing one smallest and one largest sample.
pub fn trimmed_mean(samples: &[f64]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(BenchError::Config(format!(
            "trimmed mean needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = &s[1..s.len() - 1];
    Ok(mid.iter().sum::<f64>() / mid.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub samples: Vec<f64>,
    pub trimmed_mean: f64,
}

/// `warmup` untimed runs (still passed through the timer), then `repeats`
/// timed ones.
pub fn measure(timer: &mut dyn Timer, warmup: usize, repeats: usize, f: &mut dyn FnMut()) -> Result<Timing> {
    for _ in 0..warmup {
        timer.time(f);
    }
    let samples: Vec<f64> = (0..repeats).map(|_| timer.time(f)).collect();
    let trimmed_mean = trimmed_mean(&samples)?;
    Ok(Timing { samples, trimmed_mean })
}
