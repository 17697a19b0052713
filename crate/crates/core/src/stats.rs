//! Small descriptive-statistics helpers shared across modules.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the n-1 denominator.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Standardizes the present entries to mean 0 and sample sd 1; missing stay missing.
pub fn zscore(values: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 2 non-missing values, got {}",
            present.len()
        )));
    }
    let m = mean(&present);
    let sd = sample_sd(&present);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    Ok(values.iter().map(|v| v.map(|x| (x - m) / sd)).collect())
}

/// Quantile with linear interpolation between order statistics (the common
/// "type 7" definition). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median with the mean-of-middle-pair convention for even counts.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Two-sided p-value of a standard-normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    let n = Normal::standard();
    2.0 * n.sf(z.abs())
}

/// Upper-tail probability of a chi-square variate.
pub fn chi2_sf(stat: f64, df: usize) -> f64 {
    let c = ChiSquared::new(df as f64).expect("df > 0");
    c.sf(stat)
}

/// 97.5% standard-normal quantile, used for pointwise 95% bands.
pub const Z_975: f64 = 1.959_963_984_540_054;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_small() {
        let z = zscore(&[Some(1.0), Some(2.0), Some(3.0)]).unwrap();
        assert_eq!(z, vec![Some(-1.0), Some(0.0), Some(1.0)]);
    }

    #[test]
    fn zscore_keeps_missing() {
        let z = zscore(&[Some(1.0), None, Some(3.0)]).unwrap();
        assert!(z[1].is_none());
    }

    #[test]
    fn zscore_constant_fails() {
        assert!(matches!(
            zscore(&[Some(4.0), Some(4.0), Some(4.0)]),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 3.0);
        assert!((quantile_sorted(&xs, 0.1) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn median_even_uses_middle_mean() {
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&mut [0.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn normal_p_values() {
        let p = normal_two_sided_p(Z_975);
        assert!((p - 0.05).abs() < 1e-10, "{p:e}");
        assert!((normal_two_sided_p(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi2_tail() {
        // chi2(5) upper 5% point
        assert!((chi2_sf(11.070497693516351, 5) - 0.05).abs() < 1e-9);
    }
}
