use std::f64::consts::FRAC_1_SQRT_2;

use super::{poly, LtiError, RationalTF};
use crate::compensators::stability_check;

/// Log-spaced angular frequencies, rad per time unit.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self, LtiError> {
        if !(min > 0.0 && max > min && count >= 2) {
            return Err(LtiError::InvalidParameter("grid needs 0 < min < max and count >= 2"));
        }
        let (a, b) = (min.log10(), max.log10());
        let step = (b - a) / (count - 1) as f64;
        let omegas = (0..count)
            .map(|k| if k == count - 1 { max } else { 10f64.powf(a + step * k as f64) })
            .collect();
        Ok(Self { omegas })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.omegas[0]
    }

    pub fn max(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }
}

impl Default for FrequencyGrid {
    /// 400 points over `[1e-4, 1e3]` rad/ms.
    fn default() -> Self {
        Self::log_spaced(1e-4, 1e3, 400).expect("valid default grid")
    }
}

/// `1 + P*C` numerator, i.e. the nominal closed-loop characteristic polynomial.
pub fn closed_loop_polynomial(p: &RationalTF, c: &RationalTF) -> Vec<f64> {
    poly::add(
        &poly::mul(p.den(), c.den()),
        &poly::mul(p.num(), c.num()),
    )
}

fn point_value(
    p: &RationalTF,
    c: &RationalTF,
    w_p: &RationalTF,
    w_l: &RationalTF,
    omega: f64,
) -> Result<f64, LtiError> {
    let l = p.freq_response(omega)? * c.freq_response(omega)?;
    let s = 1.0 / (1.0 + l);
    let t = l * s;
    let a = (w_p.freq_response(omega)? * s).norm();
    let b = (w_l.freq_response(omega)? * t).norm();
    Ok(a.hypot(b))
}

/// `max_w sqrt(|w_p S|^2 + |w_l T|^2)`; the grid maximum is refined by a
/// golden-section search in `log w` between its neighbours.
pub fn mixed_sensitivity_norm(
    p: &RationalTF,
    c: &RationalTF,
    w_p: &RationalTF,
    w_l: &RationalTF,
    grid: &FrequencyGrid,
) -> Result<f64, LtiError> {
    let char_poly = closed_loop_polynomial(p, c);
    if !stability_check(&char_poly).unwrap_or(false) {
        return Err(LtiError::UnstableNominal);
    }
    let w = grid.omegas();
    let values = w
        .iter()
        .map(|&omega| point_value(p, c, w_p, w_l, omega))
        .collect::<Result<Vec<_>, _>>()?;
    let mut peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if w.len() < 3 {
        return Ok(peak);
    }
    // minimax designs flatten several peaks to nearly equal heights, so
    // every local maximum is refined, not just the largest sample
    let f = |x: f64| point_value(p, c, w_p, w_l, x.exp()).unwrap_or(f64::NEG_INFINITY);
    for k in 0..w.len() {
        let left = if k > 0 { values[k - 1] } else { f64::NEG_INFINITY };
        let right = values.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if values[k] >= left && values[k] >= right {
            let lo = w[k.saturating_sub(1)].ln();
            let hi = w[(k + 1).min(w.len() - 1)].ln();
            peak = peak.max(golden_max(f, lo, hi, 1e-10));
        }
    }
    Ok(peak)
}

/// Robust performance predicate: norm below `1/sqrt(2)`.
pub fn rp_holds(norm: f64) -> bool {
    norm < FRAC_1_SQRT_2
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}
