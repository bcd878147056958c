//! Scalar resource cost of an upgrade, used as the efficiency denominator.

use crate::model::ResourceVector;

pub trait CostModel: Send + Sync {
    fn name(&self) -> &str;

    /// Cost of consuming `delta` given what is still free. Only components
    /// where `delta` is positive contribute.
    fn cost(&self, delta: &ResourceVector, remaining: &ResourceVector, max: &ResourceVector)
        -> f64;
}

fn ratio(d: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        d / denom
    } else {
        f64::INFINITY
    }
}

/// `sum_k delta[k] / remaining[k]`. Saturated resources cost the most.
#[derive(Clone, Copy, Debug, Default)]
pub struct RemainingSum;

impl CostModel for RemainingSum {
    fn name(&self) -> &str {
        "remaining-sum"
    }

    fn cost(
        &self,
        delta: &ResourceVector,
        remaining: &ResourceVector,
        _max: &ResourceVector,
    ) -> f64 {
        delta
            .iter()
            .zip(remaining.iter())
            .filter(|(d, _)| **d > 0.0)
            .map(|(d, r)| ratio(*d, *r))
            .sum()
    }
}

/// `max_k delta[k] / remaining[k]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxComponent;

impl CostModel for MaxComponent {
    fn name(&self) -> &str {
        "max-component"
    }

    fn cost(
        &self,
        delta: &ResourceVector,
        remaining: &ResourceVector,
        _max: &ResourceVector,
    ) -> f64 {
        delta
            .iter()
            .zip(remaining.iter())
            .filter(|(d, _)| **d > 0.0)
            .map(|(d, r)| ratio(*d, *r))
            .fold(0.0, f64::max)
    }
}

/// `sum_k delta[k] / max[k]`, blind to current saturation.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxCapacitySum;

impl CostModel for MaxCapacitySum {
    fn name(&self) -> &str {
        "max-capacity-sum"
    }

    fn cost(
        &self,
        delta: &ResourceVector,
        _remaining: &ResourceVector,
        max: &ResourceVector,
    ) -> f64 {
        delta
            .iter()
            .zip(max.iter())
            .filter(|(d, _)| **d > 0.0)
            .map(|(d, m)| ratio(*d, *m))
            .sum()
    }
}
