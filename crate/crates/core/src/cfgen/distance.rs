//! Mixed-type distances over a feature schema.
//!
//! Numeric gaps are divided by the width of the feature's observed range
//! (frozen at training time) and capped at 1; categorical features score 0
//! on a match and 1 otherwise. A numeric feature whose range has zero width
//! behaves like a categorical one.

use crate::dataset::{FeatureKind, FeatureSpec};
use crate::{Error, Result};

/// Per-feature distance in `[0, 1]`.
#[inline]
pub fn feature_distance(spec: &FeatureSpec, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    match spec.kind {
        FeatureKind::Categorical => 1.0,
        FeatureKind::Numeric => {
            let w = spec.range_width();
            if w > 0.0 && w.is_finite() {
                ((a - b).abs() / w).min(1.0)
            } else {
                1.0
            }
        }
    }
}

fn check(a: &[f64], b: &[f64], specs: &[FeatureSpec]) -> Result<()> {
    if a.len() != specs.len() || b.len() != specs.len() {
        return Err(Error::Shape {
            expected: specs.len(),
            got: if a.len() != specs.len() { a.len() } else { b.len() },
        });
    }
    Ok(())
}

/// Sum of per-feature distances; callers guarantee equal arity.
#[inline]
pub(crate) fn l1_unchecked(a: &[f64], b: &[f64], specs: &[FeatureSpec]) -> f64 {
    specs
        .iter()
        .zip(a.iter().zip(b))
        .map(|(s, (x, y))| feature_distance(s, *x, *y))
        .sum()
}

#[inline]
pub(crate) fn gower_unchecked(a: &[f64], b: &[f64], specs: &[FeatureSpec]) -> f64 {
    if specs.is_empty() {
        0.0
    } else {
        l1_unchecked(a, b, specs) / specs.len() as f64
    }
}

/// Gower distance: mean per-feature distance, in `[0, 1]`.
pub fn gower_distance(a: &[f64], b: &[f64], specs: &[FeatureSpec]) -> Result<f64> {
    check(a, b, specs)?;
    Ok(gower_unchecked(a, b, specs))
}

/// Heterogeneous Euclidean-overlap distance combined as an L1 sum.
pub fn heom_distance(a: &[f64], b: &[f64], specs: &[FeatureSpec]) -> Result<f64> {
    check(a, b, specs)?;
    Ok(l1_unchecked(a, b, specs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Interval;

    fn spec(name: &str, lo: f64, hi: f64) -> FeatureSpec {
        let mut s = FeatureSpec::numeric(name, lo, hi);
        s.observed_range = Some(Interval { lo, hi });
        s
    }

    #[test]
    fn gower_examples() {
        let specs: Vec<_> = (0..5).map(|j| spec(&format!("f{j}"), 0.0, 10.0)).collect();
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(gower_distance(&a, &a, &specs).unwrap(), 0.0);
        let mut b = a;
        b[2] += 5.0;
        assert!((gower_distance(&a, &b, &specs).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(gower_distance(&a, &a[..4], &specs), Err(Error::Shape { .. })));
    }

    #[test]
    fn heom_examples() {
        let specs = vec![spec("n", 0.0, 10.0), FeatureSpec::categorical("c")];
        assert_eq!(heom_distance(&[2.0, 1.0], &[7.0, 1.0], &specs).unwrap(), 0.5);
        assert_eq!(heom_distance(&[2.0, 1.0], &[2.0, 3.0], &specs).unwrap(), 1.0);
    }

    #[test]
    fn zero_range_features() {
        let s = spec("z", 3.0, 3.0);
        assert_eq!(feature_distance(&s, 3.0, 3.0), 0.0);
        assert_eq!(feature_distance(&s, 3.0, 4.0), 1.0);
    }

    #[test]
    fn out_of_range_capped() {
        let s = spec("n", 0.0, 1.0);
        assert_eq!(feature_distance(&s, -5.0, 5.0), 1.0);
    }
}
