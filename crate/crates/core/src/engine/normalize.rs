use serde::{Deserialize, Serialize};

/// Running power range for min-max normalisation across one session.
///
/// The first swing anchors the range at `[0, raw]` and reads 100%.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizerState {
    min_power_observed: Option<f64>,
    max_power_observed: Option<f64>,
    swing_count: u64,
}

impl NormalizerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn min_power_observed(&self) -> Option<f64> {
        self.min_power_observed
    }

    pub fn max_power_observed(&self) -> Option<f64> {
        self.max_power_observed
    }

    pub fn swing_count(&self) -> u64 {
        self.swing_count
    }

    /// Folds `raw` into the observed range and returns it as a percentage
    /// of that range, clamped to `[0, 100]`.
    pub fn normalize(&mut self, raw: f64) -> f64 {
        self.swing_count += 1;
        let (min, max) = match (self.min_power_observed, self.max_power_observed) {
            (Some(min), Some(max)) => (min.min(raw), max.max(raw)),
            _ => {
                self.min_power_observed = Some(0.0);
                self.max_power_observed = Some(raw);
                return 100.0;
            }
        };
        self.min_power_observed = Some(min);
        self.max_power_observed = Some(max);
        // every observed swing had the same power
        if max == min {
            return 100.0;
        }
        ((raw - min) / (max - min) * 100.0).clamp(0.0, 100.0)
    }
}

/// Functional form of [`NormalizerState::normalize`].
pub fn normalize_power(raw: f64, state: NormalizerState) -> (f64, NormalizerState) {
    let mut next = state;
    let pct = next.normalize(raw);
    (pct, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_swing_is_full_scale() {
        let (pct, state) = normalize_power(5.0, NormalizerState::new());
        assert_eq!(pct, 100.0);
        assert_eq!(state.min_power_observed(), Some(0.0));
        assert_eq!(state.max_power_observed(), Some(5.0));
        assert_eq!(state.swing_count(), 1);
    }

    #[test]
    fn stronger_swing_raises_max() {
        let (_, s) = normalize_power(5.0, NormalizerState::new());
        let (pct, s) = normalize_power(8.0, s);
        assert_eq!(pct, 100.0);
        assert_eq!(s.max_power_observed(), Some(8.0));
        let (pct, s) = normalize_power(4.0, s);
        assert_eq!(pct, 50.0);
        assert_eq!(s.swing_count(), 3);
    }

    #[test]
    fn degenerate_range_reads_full() {
        let (_, s) = normalize_power(0.0, NormalizerState::new());
        let (pct, _) = normalize_power(0.0, s);
        assert_eq!(pct, 100.0);
    }

    proptest! {
        #[test]
        fn range_invariants(raws in proptest::collection::vec(0.0..50.0f64, 1..40)) {
            let mut state = NormalizerState::new();
            let mut last_max = f64::NEG_INFINITY;
            for (i, raw) in raws.iter().enumerate() {
                let pct = state.normalize(*raw);
                prop_assert!((0.0..=100.0).contains(&pct));
                if i == 0 {
                    prop_assert_eq!(pct, 100.0);
                }
                let (min, max) = (state.min_power_observed().unwrap(), state.max_power_observed().unwrap());
                prop_assert!(min <= max);
                prop_assert!(max >= last_max);
                last_max = max;
            }
        }
    }
}
