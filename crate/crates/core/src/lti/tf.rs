use num_complex::Complex64;

use super::{poly, LtiError};

/// Unit of the Laplace variable's reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnit {
    #[default]
    Milliseconds,
}

/// Ratio of real polynomials in `s`, coefficients in descending powers.
/// No pole/zero cancellation is ever performed.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
    unit: TimeUnit,
}

impl RationalTF {
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self, LtiError> {
        Self::with_unit(num, den, TimeUnit::Milliseconds)
    }

    pub fn with_unit(num: &[f64], den: &[f64], unit: TimeUnit) -> Result<Self, LtiError> {
        if den.is_empty() || poly::is_zero(den) || den.iter().chain(num).any(|c| !c.is_finite()) {
            return Err(LtiError::DegenerateDenominator);
        }
        let num = if num.is_empty() { vec![0.0] } else { poly::trim(num) };
        Ok(Self {
            num,
            den: poly::trim(den),
            unit,
        })
    }

    pub fn gain(k: f64) -> Self {
        Self::new(&[k], &[1.0]).expect("unit denominator")
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn unit(&self) -> TimeUnit {
        self.unit
    }

    pub fn is_proper(&self) -> bool {
        poly::degree(&self.num) <= poly::degree(&self.den)
    }

    pub fn is_strictly_proper(&self) -> bool {
        poly::is_zero(&self.num) || poly::degree(&self.num) < poly::degree(&self.den)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly::roots(&self.den)
    }

    fn check_unit(&self, other: &Self) -> Result<(), LtiError> {
        if self.unit != other.unit {
            return Err(LtiError::UnitMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LtiError> {
        self.check_unit(other)?;
        let num = poly::add(&poly::mul(&self.num, &other.den), &poly::mul(&other.num, &self.den));
        Self::with_unit(&num, &poly::mul(&self.den, &other.den), self.unit)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LtiError> {
        self.check_unit(other)?;
        Self::with_unit(
            &poly::mul(&self.num, &other.num),
            &poly::mul(&self.den, &other.den),
            self.unit,
        )
    }

    /// `self / (1 + self * h)`.
    pub fn feedback(&self, h: &Self) -> Result<Self, LtiError> {
        self.check_unit(h)?;
        let num = poly::mul(&self.num, &h.den);
        let den = poly::add(&poly::mul(&self.den, &h.den), &poly::mul(&self.num, &h.num));
        Self::with_unit(&num, &den, self.unit)
    }

    /// Value at `s = j*omega`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        let s = Complex64::new(0.0, omega);
        let d = poly::eval(&self.den, s);
        if d.norm() < 1e-300 {
            return Err(LtiError::PoleOnGrid { omega });
        }
        Ok(poly::eval(&self.num, s) / d)
    }
}
