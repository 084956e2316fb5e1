//! L2 distance kernels.
//!
//! The index compares squared distances in `f32`; the exact oracle
//! accumulates in `f64` so that ground truth out-precisions the index.

#[inline]
pub fn squared_l2(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        for lane in 0..4 {
            let d = a[j + lane] - b[j + lane];
            acc[lane] += d * d;
        }
    }
    let mut sum = acc[0] + acc[1] + acc[2] + acc[3];
    for j in chunks * 4..a.len() {
        let d = a[j] - b[j];
        sum += d * d;
    }
    sum
}

#[inline]
pub fn squared_l2_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

#[inline]
pub fn l2_f64(a: &[f32], b: &[f32]) -> f64 {
    squared_l2_f64(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_agree() {
        let a: Vec<f32> = (0..13).map(|i| i as f32 * 0.5).collect();
        let b: Vec<f32> = (0..13).map(|i| (i as f32).sin()).collect();
        let f = squared_l2(&a, &b) as f64;
        let d = squared_l2_f64(&a, &b);
        assert!((f - d).abs() / d < 1e-5);
        assert_eq!(l2_f64(&[0.0, 3.0], &[4.0, 0.0]), 5.0);
    }
}
