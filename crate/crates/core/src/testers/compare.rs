use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::PcondOracle;

/// Estimate of `D(y) / D(x)`, or a flag that it lies outside `[1/K, K]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareResult {
    Ratio(f64),
    High,
    Low,
}

/// Number of pair queries: `ceil(c K ln(1/delta) / eta^2)`.
pub fn compare_queries(eta: f64, k: f64, delta: f64, c: f64) -> u64 {
    (c * k * (1.0 / delta).ln() / (eta * eta)).ceil().max(1.0) as u64
}

/// Estimates the weight ratio of `y` to `x` from pair-conditional queries.
///
/// With `p` the fraction of queries answered by `y` and
/// `margin = eta / (2 (K + 1))`: `High` when `p >= K/(K+1) + margin`, `Low`
/// when `p <= 1/(K+1) - margin`, and `Ratio(p / (1 - p))` otherwise.
pub fn compare(
    oracle: &mut PcondOracle,
    x: usize,
    y: usize,
    eta: f64,
    k: f64,
    delta: f64,
    c: f64,
) -> Result<CompareResult> {
    if x == y {
        return Err(Error::InvalidArgument("compare needs two distinct points".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("K must be at least 1, got {k}")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    let q = compare_queries(eta, k, delta, c);
    let hits = oracle.count_second(x, y, q)?;
    let p = hits as f64 / q as f64;
    let margin = eta / (2.0 * (k + 1.0));
    Ok(if p >= k / (k + 1.0) + margin {
        CompareResult::High
    } else if p <= 1.0 / (k + 1.0) - margin {
        CompareResult::Low
    } else {
        CompareResult::Ratio(p / (1.0 - p))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ExplicitDistribution;

    #[test]
    fn zero_mass_y_is_low() {
        let d = ExplicitDistribution::new(vec![1.0, 0.0]).unwrap();
        let mut o = PcondOracle::new(&d, 1);
        for _ in 0..50 {
            assert_eq!(compare(&mut o, 1, 2, 0.1, 2.0, 0.05, 1.0).unwrap(), CompareResult::Low);
        }
    }

    #[test]
    fn equal_masses_give_ratio_near_one() {
        let d = ExplicitDistribution::uniform(2).unwrap();
        let mut o = PcondOracle::new(&d, 2);
        let good = (0..200)
            .filter(|_| {
                matches!(compare(&mut o, 1, 2, 0.1, 2.0, 0.05, 8.0).unwrap(),
                    CompareResult::Ratio(r) if (0.9..=1.1).contains(&r))
            })
            .count();
        assert!(good >= 190, "{good}");
    }

    #[test]
    fn query_count_and_errors() {
        let d = ExplicitDistribution::uniform(3).unwrap();
        let mut o = PcondOracle::new(&d, 3);
        compare(&mut o, 1, 2, 0.5, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(o.cond_queries(), compare_queries(0.5, 1.0, 0.5, 1.0));
        assert!(compare(&mut o, 2, 2, 0.5, 1.0, 0.5, 1.0).is_err());
        assert!(compare(&mut o, 1, 2, 0.5, 0.5, 0.5, 1.0).is_err());
        assert!(compare(&mut o, 1, 2, 0.5, 1.0, 0.6, 1.0).is_err());
    }
}
