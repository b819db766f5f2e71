//! Real polynomials stored as coefficient vectors in descending powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Drops exactly-zero leading coefficients, keeping at least one entry.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len().saturating_sub(1));
    if p.is_empty() {
        return vec![0.0];
    }
    p[first..].to_vec()
}

pub fn degree(p: &[f64]) -> usize {
    trim(p).len() - 1
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|&c| c == 0.0)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (o, c) in out[n - a.len()..].iter_mut().zip(a) {
        *o += c;
    }
    for (o, c) in out[n - b.len()..].iter_mut().zip(b) {
        *o += c;
    }
    trim(&out)
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    trim(&a.iter().map(|c| c * k).collect::<Vec<_>>())
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&out)
}

/// Horner evaluation at a complex point.
pub fn eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Roots as eigenvalues of the companion matrix.
pub fn roots(p: &[f64]) -> Vec<Complex64> {
    let p = trim(p);
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(add(&[1.0, 2.0], &[3.0]), vec![1.0, 5.0]);
        assert_eq!(add(&[1.0, 2.0], &[-1.0, 0.0]), vec![2.0]);
        assert_eq!(mul(&[1.0, 5.0], &[1.0, 0.2]), vec![1.0, 5.2, 1.0]);
        assert_eq!(trim(&[0.0, 0.0, 3.0]), vec![3.0]);
        assert_eq!(trim(&[0.0]), vec![0.0]);
        assert_eq!(degree(&[0.0, 1.0, 2.0]), 1);
    }

    #[test]
    fn roots_of_quadratic() {
        let mut r: Vec<f64> = roots(&[1.0, 5.2, 1.0]).iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 5.0).abs() < 1e-12 && (r[1] + 0.2).abs() < 1e-12);
        let z = roots(&[1.0, 0.0, 1.0]);
        assert!(z.iter().all(|z| z.re.abs() < 1e-12 && (z.im.abs() - 1.0).abs() < 1e-12));
    }
}
