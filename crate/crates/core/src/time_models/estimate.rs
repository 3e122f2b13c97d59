use crate::{invalid, Error, Result};

/// Smallest `R > 0` with `(1/N) sum_j exp(|x_j - mean| / R) = 2`: the
/// sub-exponential scale of an observed delay sample.
///
/// The left side decreases strictly in `R`, so the root is unique and lies
/// in `[max_dev / ln(2N), max_dev / ln 2]`; it is found by bisection to a
/// relative tolerance of 1e-9.
pub fn estimate_r(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(invalid("samples", "must be finite"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let max_dev = samples.iter().map(|s| libm::fabs(s - mean)).fold(0.0, f64::max);
    if max_dev == 0.0 {
        return Err(Error::ZeroDispersion);
    }
    // mean of exp(|dev| / R) - 2, evaluated stably relative to the largest term
    let excess = |r: f64| -> f64 {
        let top = max_dev / r;
        let scaled: f64 = samples
            .iter()
            .map(|s| libm::exp(libm::fabs(s - mean) / r - top))
            .sum::<f64>()
            / n;
        // sign of mean(exp) - 2 = sign of ln(scaled) + top - ln 2
        libm::log(scaled) + top - core::f64::consts::LN_2
    };
    let mut lo = max_dev / libm::log(2.0 * n);
    let mut hi = max_dev / core::f64::consts::LN_2;
    if excess(hi) >= 0.0 {
        return Ok(hi);
    }
    while (hi - lo) > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::worker_stream;
    use crate::time_models::DelayDistribution;
    use alloc::vec::Vec;

    #[test]
    fn two_point_sample() {
        // both deviations equal 1: exp(1/R) = 2
        let r = estimate_r(&[0.0, 2.0]).unwrap();
        assert!((r - 1.0 / core::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_sample_solves_the_equation() {
        let xs = [0.0, 0.0, 0.0, 4.0];
        let r = estimate_r(&xs).unwrap();
        let lhs: f64 = xs.iter().map(|x| ((x - 1.0f64).abs() / r).exp()).sum::<f64>() / 4.0;
        assert!((lhs - 2.0).abs() < 1e-7);
    }

    #[test]
    fn degenerate_samples() {
        assert_eq!(estimate_r(&[5.0, 5.0, 5.0]), Err(Error::ZeroDispersion));
        assert!(estimate_r(&[1.0]).is_err());
    }

    #[test]
    fn exponential_scale() {
        let d = DelayDistribution::exponential(1.0).unwrap();
        let mut rng = worker_stream(5, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let r = estimate_r(&xs).unwrap();
        assert!((0.3..=3.0).contains(&r), "R = {r}");
    }

    #[test]
    fn scales_with_dispersion() {
        let xs = [1.0, 1.3, 0.2, 2.5, 1.1, 0.9];
        let r = estimate_r(&xs).unwrap();
        for c in [2.0, 10.0, 0.5] {
            let ys: Vec<f64> = xs.iter().map(|x| 7.0 + c * (x - 1.0)).collect();
            let rc = estimate_r(&ys).unwrap();
            assert!((rc / r - c).abs() < 1e-8 * c, "c={c}: {rc} vs {}", c * r);
        }
    }
}
