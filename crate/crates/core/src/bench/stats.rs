use super::{BenchError, ThroughputSample};

/// Environment variable holding the nominal CPU clock in GHz used to turn
/// nanoseconds per byte into cycles per byte.
pub const CLOCK_ENV: &str = "SEQIO_CLOCK_GHZ";

/// Where a nominal clock frequency came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockSource {
    Explicit,
    Environment,
    CpuInfo,
    Assumed,
}

/// Nominal clock used for cycles/byte: `explicit`, else `SEQIO_CLOCK_GHZ`,
/// else the first `cpu MHz` line of `/proc/cpuinfo`, else 1 GHz.
pub fn nominal_clock_ghz(explicit: Option<f64>) -> (f64, ClockSource) {
    if let Some(ghz) = explicit.filter(|g| g.is_finite() && *g > 0.0) {
        return (ghz, ClockSource::Explicit);
    }
    if let Some(ghz) = std::env::var(CLOCK_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|g| g.is_finite() && *g > 0.0)
    {
        return (ghz, ClockSource::Environment);
    }
    if let Some(mhz) = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("cpu MHz"))
                .and_then(|l| l.split(':').nth(1))
                .and_then(|v| v.trim().parse::<f64>().ok())
        })
    {
        if mhz > 0.0 {
            return (mhz / 1000.0, ClockSource::CpuInfo);
        }
    }
    (1.0, ClockSource::Assumed)
}

/// Median (mean of the two middle values for even counts) and population
/// standard deviation.
pub fn summarize(rates: &[f64]) -> Result<(f64, f64), BenchError> {
    if rates.is_empty() {
        return Err(BenchError::NoTrials);
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = rates.iter().sum::<f64>() / n as f64;
    let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
    Ok((median, var.sqrt()))
}

/// CPU nanoseconds and cycles per transferred byte.
pub fn per_byte_cost(sample: &ThroughputSample, clock_ghz: f64) -> Result<(f64, f64), BenchError> {
    if sample.bytes_moved == 0 {
        return Err(BenchError::ZeroBytes);
    }
    let ns = sample.cpu_seconds * 1e9 / sample.bytes_moved as f64;
    Ok((ns, ns * clock_ghz))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn median_and_stddev() {
        assert_eq!(summarize(&[3.0, 1.0, 2.0]).unwrap().0, 2.0);
        assert_eq!(summarize(&[5.0, 5.0, 5.0, 5.0]).unwrap(), (5.0, 0.0));
        let (m, s) = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        // sqrt(1.25)
        assert!(close(s, 1.118_033_988_749_895, 1e-12));
        assert!(matches!(summarize(&[]), Err(BenchError::NoTrials)));
    }

    #[test]
    fn cost_arithmetic() {
        let s = ThroughputSample {
            bytes_moved: 200_000_000,
            wall_seconds: 2.0,
            cpu_seconds: 1.0,
            request_count: 1,
            touched_bytes: 0,
        };
        let (ns, cyc) = per_byte_cost(&s, 2.8).unwrap();
        assert!(close(ns, 5.0, 1e-12));
        assert!(close(cyc, 14.0, 1e-9));
        let idle = ThroughputSample {
            cpu_seconds: 0.0,
            ..s
        };
        assert_eq!(per_byte_cost(&idle, 2.8).unwrap(), (0.0, 0.0));
        let none = ThroughputSample {
            bytes_moved: 0,
            ..s
        };
        assert!(matches!(
            per_byte_cost(&none, 2.8),
            Err(BenchError::ZeroBytes)
        ));
    }

    #[test]
    fn explicit_clock_wins() {
        assert_eq!(nominal_clock_ghz(Some(2.8)), (2.8, ClockSource::Explicit));
        let (ghz, _) = nominal_clock_ghz(None);
        assert!(ghz > 0.0);
    }
}
