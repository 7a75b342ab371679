//! Central-cut ellipsoid method state.
//!
//! An ellipsoid `{c + A u : ‖u‖ ≤ 1}` is stored through its factor `A`
//! together with `A⁻¹`, so membership tests and updates never need to
//! invert the (increasingly ill-conditioned) shape matrix `B = A Aᵀ`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: Vec<f64>,
    /// Row-major `D × D` factor `A`.
    factor: Vec<f64>,
    /// Row-major `A⁻¹`.
    inverse: Vec<f64>,
    log_det: f64,
}

fn ln_unit_ball_volume(d: usize) -> f64 {
    // V_d = π^{d/2} / Γ(d/2 + 1), via the recurrence V_d = V_{d-2} 2π / d.
    let mut ln_v = if d % 2 == 0 { 0.0 } else { 2f64.ln() };
    let mut j = if d % 2 == 0 { 2 } else { 3 };
    while j <= d {
        ln_v += (2.0 * std::f64::consts::PI / j as f64).ln();
        j += 2;
    }
    ln_v
}

/// Exact volume ratio of one central cut in dimension `d`.
pub fn central_cut_volume_ratio(d: usize) -> f64 {
    if d == 1 {
        return 0.5;
    }
    let d = d as f64;
    (d / (d + 1.0)) * (d * d / (d * d - 1.0)).powf((d - 1.0) / 2.0)
}

impl Ellipsoid {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let d = center.len();
        let mut factor = vec![0.0; d * d];
        let mut inverse = vec![0.0; d * d];
        for i in 0..d {
            factor[i * d + i] = radius;
            inverse[i * d + i] = 1.0 / radius;
        }
        Ellipsoid {
            center,
            factor,
            inverse,
            log_det: d as f64 * radius.ln(),
        }
    }

    /// `{x : (x − c)ᵀ B⁻¹ (x − c) ≤ 1}` for a symmetric positive-definite
    /// row-major `shape`.
    pub fn from_shape(center: Vec<f64>, shape: &[f64]) -> Result<Self> {
        let d = center.len();
        if shape.len() != d * d {
            return Err(Error::Dimension(format!("shape has {} entries for dimension {d}", shape.len())));
        }
        let lower = cholesky(shape, d)?;
        let inverse = lower_inverse(&lower, d);
        let log_det = (0..d).map(|i| lower[i * d + i].ln()).sum();
        Ok(Ellipsoid {
            center,
            factor: lower,
            inverse,
            log_det,
        })
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Shape matrix `B = A Aᵀ`, row-major.
    pub fn shape(&self) -> Vec<f64> {
        let d = self.dimension();
        let a = &self.factor;
        let mut b = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v: f64 = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum();
                b[i * d + j] = v;
                b[j * d + i] = v;
            }
        }
        b
    }

    pub fn log_volume(&self) -> f64 {
        ln_unit_ball_volume(self.dimension()) + self.log_det
    }

    pub fn volume(&self) -> f64 {
        self.log_volume().exp()
    }

    /// `‖A⁻¹ (x − c)‖`; at most one inside the ellipsoid.
    pub fn normalized_radius(&self, x: &[f64]) -> f64 {
        let d = self.dimension();
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        (0..d)
            .map(|i| {
                let v: f64 = (0..d).map(|k| self.inverse[i * d + k] * diff[k]).sum();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.normalized_radius(x) <= 1.0 + tol
    }

    /// Half-width of the ellipsoid along the unit direction of `g`, i.e.
    /// `√(gᵀ B g) / ‖g‖`.
    pub fn width_along(&self, g: &[f64]) -> f64 {
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.transposed_times(g).iter().map(|v| v * v).sum::<f64>().sqrt() / norm
    }

    fn transposed_times(&self, g: &[f64]) -> Vec<f64> {
        let d = self.dimension();
        (0..d)
            .map(|j| (0..d).map(|i| self.factor[i * d + j] * g[i]).sum())
            .collect()
    }

    /// Smallest ellipsoid containing `self ∩ {x : g·x ≥ g·c}`.
    pub fn update(&self, g: &[f64]) -> Result<Ellipsoid> {
        let mut next = self.clone();
        next.cut(g)?;
        Ok(next)
    }

    /// In-place form of [`Ellipsoid::update`].
    pub fn cut(&mut self, g: &[f64]) -> Result<()> {
        let d = self.dimension();
        if g.len() != d {
            return Err(Error::Dimension(format!("cut of length {} in dimension {d}", g.len())));
        }
        let a = self.transposed_times(g);
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NumericBreakdown(format!("gᵀBg = {:e}", norm * norm)));
        }
        let h: Vec<f64> = a.iter().map(|v| v / norm).collect();
        // A ĥ: the step direction in the original space.
        let step: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|k| self.factor[i * d + k] * h[k]).sum())
            .collect();

        if d == 1 {
            self.center[0] += 0.5 * step[0];
            self.factor[0] *= 0.5;
            self.inverse[0] *= 2.0;
            self.log_det += 0.5f64.ln();
            return Ok(());
        }

        let df = d as f64;
        let scale = df / (df * df - 1.0).sqrt();
        let beta = 1.0 - ((df - 1.0) / (df + 1.0)).sqrt();
        let gamma = beta / (1.0 - beta);
        for (c, s) in self.center.iter_mut().zip(&step) {
            *c += s / (df + 1.0);
        }
        // A' = s (A − β (A ĥ) ĥᵀ)
        for i in 0..d {
            for j in 0..d {
                let idx = i * d + j;
                self.factor[idx] = scale * (self.factor[idx] - beta * step[i] * h[j]);
            }
        }
        // A'⁻¹ = (A⁻¹ + γ ĥ (ĥᵀ A⁻¹)) / s
        let row: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|k| h[k] * self.inverse[k * d + j]).sum())
            .collect();
        for i in 0..d {
            for j in 0..d {
                let idx = i * d + j;
                self.inverse[idx] = (self.inverse[idx] + gamma * h[i] * row[j]) / scale;
            }
        }
        self.log_det += df * scale.ln() + (1.0 - beta).ln();
        if !self.log_det.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NumericBreakdown("non-finite ellipsoid after cut".into()));
        }
        Ok(())
    }
}

fn cholesky(b: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = 0.5 * (b[i * d + j] + b[j * d + i]);
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NumericBreakdown("shape matrix is not positive definite".into()));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

fn lower_inverse(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    for col in 0..d {
        for i in col..d {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[i * d + k] * inv[k * d + col];
            }
            inv[i * d + col] = s / l[i * d + i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disc_cut() {
        let e = Ellipsoid::ball(vec![0.0, 0.0], 1.0);
        let next = e.update(&[1.0, 0.0]).unwrap();
        assert!((next.center()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(next.center()[1], 0.0);
        let b = next.shape();
        assert!((b[0].sqrt() - 2.0 / 3.0).abs() < 1e-15);
        assert!((b[3].sqrt() - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(b[1].abs() < 1e-15);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((Ellipsoid::ball(vec![0.0; 2], 1.0).volume() - std::f64::consts::PI).abs() < 1e-12);
        let v3 = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((Ellipsoid::ball(vec![0.0; 3], 1.0).volume() - v3).abs() < 1e-12);
        assert!((Ellipsoid::ball(vec![0.0], 2.0).volume() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_cut_halves() {
        let mut e = Ellipsoid::ball(vec![0.0], 1.0);
        e.cut(&[-1.0]).unwrap();
        assert_eq!(e.center(), &[-0.5]);
        assert!(e.contains(&[-1.0], 1e-12) && e.contains(&[0.0], 1e-12));
    }

    #[test]
    fn zero_cut_breaks_down() {
        let e = Ellipsoid::ball(vec![0.0, 0.0], 1.0);
        assert!(matches!(e.update(&[0.0, 0.0]), Err(Error::NumericBreakdown(_))));
    }

    #[test]
    fn from_shape_matches_factor() {
        let shape = [4.0, 1.0, 1.0, 2.0];
        let e = Ellipsoid::from_shape(vec![1.0, -1.0], &shape).unwrap();
        for (a, b) in e.shape().iter().zip(shape) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(Ellipsoid::from_shape(vec![0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn alternating_cuts_shrink() {
        let mut e = Ellipsoid::ball(vec![0.0; 3], 1.0);
        let mut last = e.log_volume();
        for t in 0..20 {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            e.cut(&[sign, 0.0, 0.0]).unwrap();
            assert!(e.log_volume() < last);
            last = e.log_volume();
        }
    }
}
