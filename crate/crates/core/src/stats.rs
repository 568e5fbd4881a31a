//! Order-stable reductions for Monte Carlo output.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let mean = compensated_sum(values.iter().copied()) / count as f64;
        let stderr = if count > 1 {
            let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (count - 1) as f64 / count as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            mean,
            stderr,
            count,
        }
    }
}

/// `√(a² + b²)`, the standard error of a difference of independent estimates.
pub fn combined_stderr(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut v = vec![1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v.iter().copied()), 1.0);
        v.reverse();
        assert_eq!(compensated_sum(v.iter().copied()), 1.0);
    }

    #[test]
    fn summary_of_known_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // sample variance 5/3, stderr √(5/12)
        assert!((s.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn order_insensitive() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 * 1e-3 + 1e6).collect();
        let mut w = v.clone();
        w.reverse();
        assert!((Summary::of(&v).mean - Summary::of(&w).mean).abs() <= 1e-12 * 1e6);
    }
}
