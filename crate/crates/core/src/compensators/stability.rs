use super::CompensatorError;
use crate::lti::poly;

const EPS: f64 = 1e-12;

/// Routh–Hurwitz test: true iff every root lies in the open left half-plane.
pub fn stability_check(p: &[f64]) -> Result<bool, CompensatorError> {
    if poly::is_zero(p) {
        return Err(CompensatorError::ZeroPolynomial);
    }
    let p = poly::trim(p);
    let sign = p[0].signum();
    let p: Vec<f64> = p.iter().map(|c| c * sign).collect();
    // a missing or negative coefficient already rules out stability
    if p.iter().any(|&c| c <= 0.0) {
        return Ok(false);
    }
    let n = p.len() - 1;
    if n == 0 {
        return Ok(true);
    }
    let width = n / 2 + 1;
    let row = |start: usize| -> Vec<f64> {
        (0..width).map(|k| p.get(start + 2 * k).copied().unwrap_or(0.0)).collect()
    };
    let mut upper = row(0);
    let mut lower = row(1);
    // rows s^(n-1) down to s^0
    for _ in 1..=n {
        if lower.iter().all(|&c| c == 0.0) {
            // roots symmetric about the origin: on or right of the axis
            return Ok(false);
        }
        if lower[0] == 0.0 {
            lower[0] = EPS;
        }
        if lower[0] < 0.0 {
            return Ok(false);
        }
        let next: Vec<f64> = (0..width)
            .map(|k| {
                let a = upper.get(k + 1).copied().unwrap_or(0.0);
                let b = lower.get(k + 1).copied().unwrap_or(0.0);
                (lower[0] * a - upper[0] * b) / lower[0]
            })
            .collect();
        upper = std::mem::replace(&mut lower, next);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order() {
        assert!(stability_check(&[1.0, 1.0]).unwrap());
        assert!(!stability_check(&[1.0, -1.0]).unwrap());
        assert!(stability_check(&[-2.0, -1.0]).unwrap());
        assert!(stability_check(&[3.0]).unwrap());
        assert!(matches!(stability_check(&[0.0, 0.0]), Err(CompensatorError::ZeroPolynomial)));
    }

    #[test]
    fn marginal_and_degenerate() {
        // s^2 + 1: imaginary-axis pair
        assert!(!stability_check(&[1.0, 0.0, 1.0]).unwrap());
        // s^3 + s^2 + s + 1 = (s + 1)(s^2 + 1): zero row
        assert!(!stability_check(&[1.0, 1.0, 1.0, 1.0]).unwrap());
        // (s + 1)^3
        assert!(stability_check(&[1.0, 3.0, 3.0, 1.0]).unwrap());
        // s^3 + s^2 + 2s + 8 has a right-half-plane pair
        assert!(!stability_check(&[1.0, 1.0, 2.0, 8.0]).unwrap());
    }
}
