//! Number formatting shared by the CSV writers.

/// Scientific notation with six significant digits and a signed two-digit
/// exponent, e.g. `2.93259e-01`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exponent) = s.split_once('e').expect("`e` format has an exponent");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");
    let sign = if exponent < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exponent.abs())
}

/// Fixed-point with four decimals, used for convergence orders.
pub fn order(x: f64) -> String {
    format!("{x:.4}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific() {
        assert_eq!(sci(0.293259), "2.93259e-01");
        assert_eq!(sci(1.02621), "1.02621e+00");
        assert_eq!(sci(340461.0), "3.40461e+05");
        assert_eq!(sci(-1.5e-12), "-1.50000e-12");
        assert_eq!(sci(0.0), "0.00000e+00");
        assert_eq!(sci(f64::NAN), "NaN");
        assert_eq!(order(0.99891), "0.9989");
    }

    proptest::proptest! {
        #[test]
        fn round_trips_to_six_digits(x in proptest::num::f64::NORMAL) {
            let s = sci(x);
            let back: f64 = s.parse().unwrap();
            proptest::prop_assert!((back - x).abs() <= 5e-6 * x.abs());
            let exponent = s.split_once('e').unwrap().1;
            proptest::prop_assert!(exponent.len() >= 3 && (exponent.starts_with('+') || exponent.starts_with('-')));
        }
    }
}
