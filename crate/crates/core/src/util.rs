//! Small numeric helpers.

/// Sums `values` in a canonical order (ascending by total order).
///
/// Member-axis reductions go through this so that reordering the ensemble
/// members cannot change the rounding of any normalization constant; fused
/// predictions are then exactly invariant under member permutation.
pub(crate) fn stable_sum(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.iter().sum()
}

/// `count` evenly spaced points covering `[lo, hi]` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}
