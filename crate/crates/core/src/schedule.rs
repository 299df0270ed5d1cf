//! Continuation paths between an easy endpoint and the target.
//!
//! Every path here is a convex blend of two endpoint log-densities,
//! `E_l = (1 - w_l) E_start + w_l E_end`:
//!
//! | kind              | start       | end         | levels | `w_l`                     |
//! |-------------------|-------------|-------------|--------|---------------------------|
//! | `AisReference`    | `E_R`       | `E`         | `L`    | `c(l/L)`                  |
//! | `AisTemperature`  | `E` at β=0  | `E`         | `L`    | `c(l/L)`                  |
//! | `TtReference`     | `E`         | `E_R`       | `2L`   | `c(min(l, 2L-l)/L)`       |
//! | `TtTemperature`   | `E`         | `E` at β=0  | `2L`   | `c(min(l, 2L-l)/L)`       |
//!
//! so temperature paths are the `β_l = w_l β` (or `(1 - w_l) β`) ladders.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::dynamics::SweepPlan;
use crate::error::{Error, Result};
use crate::spin_model::{QuadraticModel, SpinConfig};

/// Strictly increasing `c: [0, 1] -> [0, 1]` with exact endpoints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationCurve {
    #[default]
    Linear,
    /// `c(t) = t^gamma`, `gamma > 0`.
    Power(f64),
}

impl InterpolationCurve {
    pub fn eval(self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self {
            InterpolationCurve::Linear => t,
            InterpolationCurve::Power(gamma) => t.powf(gamma),
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            InterpolationCurve::Power(g) if !(g.is_finite() && g > 0.0) => Err(
                Error::InvalidInput(format!("power curve exponent must be positive, got {g}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    AisReference,
    TtReference,
    AisTemperature,
    TtTemperature,
}

impl PathKind {
    pub fn is_palindromic(self) -> bool {
        matches!(self, PathKind::TtReference | PathKind::TtTemperature)
    }
}

/// Indexed family of log-densities `E_0, ..., E_levels`.
///
/// Intermediate level models are materialized on first use and cached; the
/// two halves of a palindromic path share cache entries.
#[derive(Debug)]
pub struct PathFamily {
    kind: PathKind,
    half_levels: usize,
    curve: InterpolationCurve,
    start: Arc<QuadraticModel>,
    end: Arc<QuadraticModel>,
    weights: Vec<f64>,
    cache: Vec<OnceLock<Arc<QuadraticModel>>>,
}

impl PathFamily {
    fn build(
        kind: PathKind,
        start: Arc<QuadraticModel>,
        end: Arc<QuadraticModel>,
        half_levels: usize,
        curve: InterpolationCurve,
    ) -> Result<Self> {
        if half_levels == 0 {
            return Err(Error::InvalidInput("path needs at least one level".into()));
        }
        curve.validate()?;
        if start.len() != end.len() {
            return Err(Error::DimensionMismatch {
                expected: end.len(),
                actual: start.len(),
            });
        }
        let weights: Vec<f64> = (0..=half_levels)
            .map(|l| curve.eval(l as f64 / half_levels as f64))
            .collect();
        if weights.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "interpolation curve is not strictly increasing on the level grid".into(),
            ));
        }
        Ok(Self {
            kind,
            half_levels,
            curve,
            start,
            end,
            weights,
            cache: (0..=half_levels).map(|_| OnceLock::new()).collect(),
        })
    }

    /// `E_R -> E` over `levels` steps.
    pub fn ais_reference(
        reference: &QuadraticModel,
        target: &QuadraticModel,
        levels: usize,
        curve: InterpolationCurve,
    ) -> Result<Self> {
        Self::build(
            PathKind::AisReference,
            Arc::new(reference.clone()),
            Arc::new(target.clone()),
            levels,
            curve,
        )
    }

    /// `beta = 0 -> beta` over `levels` steps.
    pub fn ais_temperature(
        target: &QuadraticModel,
        levels: usize,
        curve: InterpolationCurve,
    ) -> Result<Self> {
        Self::build(
            PathKind::AisTemperature,
            Arc::new(target.with_beta(0.0)),
            Arc::new(target.clone()),
            levels,
            curve,
        )
    }

    /// `E -> E_R -> E` with `half_levels` steps each way.
    pub fn tt_reference(
        target: &QuadraticModel,
        reference: &QuadraticModel,
        half_levels: usize,
        curve: InterpolationCurve,
    ) -> Result<Self> {
        Self::build(
            PathKind::TtReference,
            Arc::new(target.clone()),
            Arc::new(reference.clone()),
            half_levels,
            curve,
        )
    }

    /// `beta -> 0 -> beta` with `half_levels` steps each way.
    pub fn tt_temperature(
        target: &QuadraticModel,
        half_levels: usize,
        curve: InterpolationCurve,
    ) -> Result<Self> {
        Self::build(
            PathKind::TtTemperature,
            Arc::new(target.clone()),
            Arc::new(target.with_beta(0.0)),
            half_levels,
            curve,
        )
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn curve(&self) -> InterpolationCurve {
        self.curve
    }

    /// `L`: AIS level count, or the number of steps from the target to the
    /// turning point of a palindromic path.
    pub fn half_levels(&self) -> usize {
        self.half_levels
    }

    /// Index of the last level: `L` for AIS paths, `2L` for palindromic ones.
    pub fn levels(&self) -> usize {
        if self.kind.is_palindromic() {
            2 * self.half_levels
        } else {
            self.half_levels
        }
    }

    pub fn start(&self) -> &QuadraticModel {
        &self.start
    }

    pub fn end(&self) -> &QuadraticModel {
        &self.end
    }

    fn fold(&self, l: usize) -> usize {
        assert!(
            l <= self.levels(),
            "level {l} out of range 0..={}",
            self.levels()
        );
        if l > self.half_levels {
            2 * self.half_levels - l
        } else {
            l
        }
    }

    /// Blend weight `w_l` of the `end` model at level `l`.
    pub fn weight(&self, l: usize) -> f64 {
        self.weights[self.fold(l)]
    }

    /// Materialized model for level `l`. Panics when `l` is out of range.
    pub fn model(&self, l: usize) -> &QuadraticModel {
        let k = self.fold(l);
        if k == 0 {
            return &self.start;
        }
        if k == self.half_levels {
            return &self.end;
        }
        self.cache[k].get_or_init(|| {
            Arc::new(
                QuadraticModel::blend(&self.start, &self.end, self.weights[k])
                    .expect("endpoints validated at construction"),
            )
        })
    }

    pub fn level_log_density(&self, l: usize, s: &SpinConfig) -> f64 {
        self.model(l).log_density(s)
    }

    /// `(E_start(s), E_end(s))`.
    pub fn endpoint_log_densities(&self, s: &SpinConfig) -> (f64, f64) {
        (self.start.log_density(s), self.end.log_density(s))
    }

    /// `E_l(s) - E_{l-1}(s)` from the endpoint values at `s`.
    #[inline]
    pub fn increment_from(&self, l: usize, start: f64, end: f64) -> f64 {
        assert!(l >= 1, "increments start at level 1");
        (self.weight(l) - self.weight(l - 1)) * (end - start)
    }

    /// `E_l(s) - E_{l-1}(s)`; `1 <= l <= levels`.
    pub fn level_increment(&self, l: usize, s: &SpinConfig) -> f64 {
        let (a, b) = self.endpoint_log_densities(s);
        self.increment_from(l, a, b)
    }

    /// Sweep plan valid at every level (coloring of the union of both endpoint supports).
    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        SweepPlan::for_models(&[&self.start, &self.end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::spin_model::{build_example1, build_example2, Lattice};
    use crate::symmetry::{build_double_flip, build_paired_flip, build_reference, DistanceNorm};
    use proptest::prelude::*;

    fn example2_pair() -> (QuadraticModel, QuadraticModel) {
        let m = build_example2(7, 9, 0.8).unwrap();
        let g = build_paired_flip(&Lattice::new(7, 9).unwrap(), DistanceNorm::Linf);
        let r = build_reference(&m, &g).unwrap();
        (m, r.reference)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn curve_endpoints_exact() {
        for c in [InterpolationCurve::Linear, InterpolationCurve::Power(2.5)] {
            assert_eq!(c.eval(0.0), 0.0);
            assert_eq!(c.eval(1.0), 1.0);
        }
        assert!(InterpolationCurve::Power(-1.0).validate().is_err());
    }

    #[test]
    fn ais_endpoints_exact() {
        let (m, r) = example2_pair();
        let path = PathFamily::ais_reference(&r, &m, 16, InterpolationCurve::Linear).unwrap();
        let mut rng = RngStream::new(1);
        for _ in 0..20 {
            let s = SpinConfig::uniform(m.len(), &mut rng);
            assert_eq!(path.level_log_density(0, &s), r.log_density(&s));
            assert_eq!(path.level_log_density(16, &s), m.log_density(&s));
        }
    }

    #[test]
    fn tt_path_is_palindromic_with_reference_midpoint() {
        let (m, r) = example2_pair();
        let path = PathFamily::tt_reference(&m, &r, 8, InterpolationCurve::Linear).unwrap();
        assert_eq!(path.levels(), 16);
        let mut rng = RngStream::new(2);
        let s = SpinConfig::uniform(m.len(), &mut rng);
        for l in 0..=16 {
            assert_eq!(
                path.level_log_density(l, &s).to_bits(),
                path.level_log_density(16 - l, &s).to_bits()
            );
        }
        assert_eq!(path.level_log_density(0, &s), m.log_density(&s));
        assert_eq!(path.level_log_density(8, &s), r.log_density(&s));
    }

    #[test]
    fn midpoint_is_average() {
        let (m, r) = example2_pair();
        let path = PathFamily::ais_reference(&r, &m, 64, InterpolationCurve::Linear).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..50 {
            let s = SpinConfig::uniform(m.len(), &mut rng);
            let avg = 0.5 * (r.log_density(&s) + m.log_density(&s));
            assert!(close(path.level_log_density(32, &s), avg));
        }
    }

    #[test]
    fn linear_increment_is_one_over_levels_of_gap() {
        let (m, r) = example2_pair();
        let path = PathFamily::ais_reference(&r, &m, 64, InterpolationCurve::Linear).unwrap();
        let s = SpinConfig::uniform(m.len(), &mut RngStream::new(4));
        let gap = m.log_density(&s) - r.log_density(&s);
        for l in 1..=64 {
            assert!(close(path.level_increment(l, &s), gap / 64.0));
        }
    }

    #[test]
    fn zero_defect_model_has_zero_increments() {
        let m = build_example1(6, 0.8, 0.0, 0).unwrap();
        let g = build_double_flip(&Lattice::square(6).unwrap()).unwrap();
        let r = build_reference(&m, &g).unwrap();
        let path =
            PathFamily::ais_reference(&r.reference, &m, 8, InterpolationCurve::Linear).unwrap();
        let mut rng = RngStream::new(5);
        for _ in 0..20 {
            let s = SpinConfig::uniform(m.len(), &mut rng);
            for l in 1..=8 {
                assert_eq!(path.level_increment(l, &s), 0.0);
            }
        }
    }

    #[test]
    fn temperature_increment_form() {
        let m = build_example2(5, 6, 0.8).unwrap();
        let path = PathFamily::ais_temperature(&m, 10, InterpolationCurve::Linear).unwrap();
        assert_eq!(path.model(0).beta(), 0.0);
        let s = SpinConfig::uniform(m.len(), &mut RngStream::new(6));
        // U(s) = -E(s) / beta
        let u = -m.log_density(&s) / 0.8;
        for l in 1..=10 {
            let db = path.model(l).beta() - path.model(l - 1).beta();
            assert!(close(path.level_increment(l, &s), -db * u));
        }
        let tt = PathFamily::tt_temperature(&m, 4, InterpolationCurve::Linear).unwrap();
        assert_eq!(tt.model(4).beta(), 0.0);
        assert_eq!(tt.model(8).beta(), 0.8);
    }

    #[test]
    fn level_models_fit_the_union_plan() {
        let (m, r) = example2_pair();
        let path = PathFamily::tt_reference(&m, &r, 6, InterpolationCurve::Power(2.0)).unwrap();
        let plan = path.sweep_plan().unwrap();
        for l in 0..=path.levels() {
            assert!(plan.is_valid_for(path.model(l)));
        }
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn out_of_range_level_panics() {
        let (m, r) = example2_pair();
        let path = PathFamily::ais_reference(&r, &m, 4, InterpolationCurve::Linear).unwrap();
        path.model(5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn increments_telescope(seed in any::<u64>(), levels in 1usize..40, gamma in 0.3f64..3.0, tt in any::<bool>()) {
            let (m, r) = example2_pair();
            let curve = InterpolationCurve::Power(gamma);
            let path = if tt {
                PathFamily::tt_reference(&m, &r, levels, curve).unwrap()
            } else {
                PathFamily::ais_reference(&r, &m, levels, curve).unwrap()
            };
            let s = SpinConfig::uniform(m.len(), &mut RngStream::new(seed));
            let total: f64 = (1..=path.levels()).map(|l| path.level_increment(l, &s)).sum();
            let direct = path.level_log_density(path.levels(), &s) - path.level_log_density(0, &s);
            prop_assert!((total - direct).abs() < 1e-10);
            for l in 1..=path.levels() {
                let two_calls = path.level_log_density(l, &s) - path.level_log_density(l - 1, &s);
                prop_assert!((path.level_increment(l, &s) - two_calls).abs() < 1e-10 * (1.0 + two_calls.abs()));
            }
        }
    }
}
