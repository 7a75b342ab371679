use serde::{Deserialize, Serialize};

/// Polynomial edge latency `l(x) = a_0 + a_1 x + ... + a_r x^r` with
/// nonnegative coefficients.
///
/// Edges whose latency does not depend on the load (the `0` and `1` edges of
/// the two-link examples) must be built with [`PolyLatency::constant`]; any
/// other latency needs a positive coefficient of degree at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyLatency {
    coeffs: Vec<f64>,
    #[serde(default)]
    constant: bool,
}

impl PolyLatency {
    /// Builds a load-dependent latency. Trailing zero coefficients are
    /// dropped. Validation happens in [`crate::RoutingGame::new`].
    pub fn new(coeffs: Vec<f64>) -> Self {
        PolyLatency {
            coeffs: trim(coeffs),
            constant: false,
        }
    }

    pub fn constant(value: f64) -> Self {
        PolyLatency {
            coeffs: trim(vec![value]),
            constant: true,
        }
    }

    /// `l(x) = x`.
    pub fn identity() -> Self {
        PolyLatency::new(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation of `l(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// `l'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, &a)| acc * x + j as f64 * a)
    }

    /// `∫_0^x l(t) dt`.
    pub fn integral(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (j, &a)| acc * x + a / (j + 1) as f64)
            * x
    }

    /// Marginal latency `l(x) + x l'(x)`, i.e. the derivative of `x l(x)`.
    pub fn marginal(&self) -> PolyLatency {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| (j + 1) as f64 * a)
            .collect();
        PolyLatency {
            coeffs: trim(coeffs),
            constant: self.constant,
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if let Some((j, a)) = self
            .coeffs
            .iter()
            .enumerate()
            .find(|(_, a)| !a.is_finite() || **a < 0.0)
        {
            return Err(format!("coefficient a_{j} = {a} is negative or not finite"));
        }
        if !self.constant && !self.coeffs.iter().skip(1).any(|&a| a > 0.0) {
            return Err("latency is not strictly increasing and not flagged constant".into());
        }
        Ok(())
    }
}

fn trim(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        coeffs.push(0.0);
    }
    coeffs
}
