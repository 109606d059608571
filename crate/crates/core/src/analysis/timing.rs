use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Wall time of the two accounting phases, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub propagation: f64,
    pub interpolation: f64,
}

/// Monotonic stopwatch read once per phase boundary.
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    /// Seconds since the last lap (or start), restarting the clock.
    pub fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let s = (now - self.0).as_secs_f64();
        self.0 = now;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLedger {
    pub label: String,
    pub t_prop: f64,
    pub t_int: f64,
    pub t_cal: f64,
    /// Shares of (propagation, interpolation) in the total.
    pub ratios: [f64; 2],
    /// t_cal relative to the Monte Carlo reference, when one is given.
    pub normalized: Option<f64>,
}

pub fn timing_ledger(label: &str, times: PhaseTimes, mc_t_cal: Option<f64>) -> TimingLedger {
    let t_cal = times.propagation + times.interpolation;
    let ratios = if t_cal > 0.0 {
        [times.propagation / t_cal, times.interpolation / t_cal]
    } else {
        [0.5, 0.5]
    };
    TimingLedger {
        label: label.to_string(),
        t_prop: times.propagation,
        t_int: times.interpolation,
        t_cal,
        ratios,
        normalized: mc_t_cal.filter(|&m| m > 0.0).map(|m| t_cal / m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_four_one() {
        let l = timing_ledger("x", PhaseTimes { propagation: 4.0, interpolation: 1.0 }, Some(10.0));
        assert_eq!(l.t_cal, 5.0);
        assert_eq!(l.ratios, [0.8, 0.2]);
        assert_eq!(l.normalized, Some(0.5));
    }
}
