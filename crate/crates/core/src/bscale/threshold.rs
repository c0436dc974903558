//! Thresholding of weighted b-scale scenes into rough-object masks.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{BinaryMask, Volume, WbsScene};

/// Mask of voxels with `lo ≤ r'(c) ≤ hi`.
pub fn threshold_wbs<T: Real>(wbs: &WbsScene<T>, lo: T, hi: T) -> Result<BinaryMask<T>> {
    if !(lo <= hi) {
        return Err(Error::param(
            "interval",
            format!("need lo <= hi, got [{}, {}]", lo.as_f64(), hi.as_f64()),
        ));
    }
    let data = wbs.data().iter().map(|&v| lo <= v && v <= hi).collect();
    Volume::new(wbs.grid().clone(), data)
}

/// Linear-interpolation percentile (`p` in `[0, 100]`) of a sorted slice.
pub fn percentile_sorted<T: Real>(sorted: &[T], p: f64) -> Option<T> {
    if sorted.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Default interval `[P_p, max]` over the non-zero weighted radii.
pub fn percentile_interval<T: Real>(wbs: &WbsScene<T>, percentile: f64) -> Result<(T, T)> {
    crate::config::validate_percentile(percentile)?;
    let mut nz: Vec<T> = wbs.data().iter().copied().filter(|&v| v > T::zero()).collect();
    if nz.is_empty() {
        return Err(Error::RecognitionFailed(
            "weighted b-scale scene has no non-zero voxels".into(),
        ));
    }
    nz.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite weighted radii"));
    let lo = percentile_sorted(&nz, percentile).expect("non-empty");
    Ok((lo, *nz.last().expect("non-empty")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    fn wbs(values: Vec<f64>) -> WbsScene<f64> {
        let n = values.len();
        Volume::new(Grid::new([n, 1, 1], [1.0; 3]).unwrap(), values).unwrap()
    }

    #[test]
    fn full_and_empty_intervals() {
        let w = wbs(vec![0.0, 3.0, 10.0, 2.5]);
        let all = threshold_wbs(&w, 0.0, f64::INFINITY).unwrap();
        assert_eq!(all.count(), 4);
        let none = threshold_wbs(&w, 10.0 + 1e-9, f64::INFINITY).unwrap();
        assert_eq!(none.count(), 0);
        assert!(threshold_wbs(&w, 2.0, 1.0).is_err());
        let mid = threshold_wbs(&w, 2.5, 3.0).unwrap();
        assert_eq!(mid.data(), &[false, true, false, true]);
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&v, 0.0), Some(1.0));
        assert_eq!(percentile_sorted(&v, 100.0), Some(5.0));
        assert_eq!(percentile_sorted(&v, 75.0), Some(4.0));
        assert_eq!(percentile_sorted(&v, 62.5), Some(3.5));
        assert_eq!(percentile_sorted::<f64>(&[], 50.0), None);
    }

    #[test]
    fn interval_ignores_zeros() {
        let w = wbs(vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(percentile_interval(&w, 75.0).unwrap(), (4.0, 5.0));
        assert!(percentile_interval(&wbs(vec![0.0; 3]), 75.0).is_err());
    }
}
