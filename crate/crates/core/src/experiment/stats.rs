/// z-score of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Bessel-corrected standard deviation; zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// `1.96 * s / sqrt(n)`.
pub fn ci95_halfwidth(values: &[f64]) -> f64 {
    Z95 * sample_std(values) / (values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_have_zero_width() {
        assert_eq!(ci95_halfwidth(&[0.9; 5]), 0.0);
    }

    #[test]
    fn known_sample() {
        // mean 5, sample variance 32/7
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&v), 5.0);
        assert!((sample_std(&v) - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert!((ci95_halfwidth(&v) - 1.96 * (32.0f64 / 7.0).sqrt() / 8f64.sqrt()).abs() < 1e-15);
    }
}
