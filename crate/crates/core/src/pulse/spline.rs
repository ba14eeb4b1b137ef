use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Uniform cubic B-spline basis function, support `[-2, 2]`.
pub fn cubic_bspline(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// `s(t) = Σ c_j B((t − t_j)/h)` with centers `t_j = origin + (j − 1)·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSpline {
    pub origin: f64,
    pub spacing: f64,
    pub coeffs: Vec<f64>,
}

impl UniformSpline {
    /// Enough coefficients to cover `[t0, t1]` fully.
    pub fn covering(t0: f64, t1: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(t1 > t0) {
            return Err(Error::invalid("spline", "need t1 > t0 and positive knot spacing"));
        }
        let n = ((t1 - t0) / spacing).ceil() as usize + 3;
        Ok(Self {
            origin: t0,
            spacing,
            coeffs: vec![0.0; n],
        })
    }

    pub fn center(&self, j: usize) -> f64 {
        self.origin + (j as f64 - 1.0) * self.spacing
    }

    /// Interval on which coefficient `j` has influence.
    pub fn support(&self, j: usize) -> (f64, f64) {
        let c = self.center(j);
        (c - 2.0 * self.spacing, c + 2.0 * self.spacing)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (t - self.origin) / self.spacing + 1.0;
        let k = x.floor() as i64;
        let mut s = 0.0;
        for j in (k - 1)..=(k + 2) {
            if j >= 0 && (j as usize) < self.coeffs.len() {
                s += self.coeffs[j as usize] * cubic_bspline(x - j as f64);
            }
        }
        s
    }

    /// Least-squares fit of the coefficients to samples, with a small ridge
    /// term so that coefficients without data stay at zero.
    pub fn fit(&mut self, times: &[f64], values: &[f64]) -> Result<()> {
        let n = self.coeffs.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for (&t, &v) in times.iter().zip(values) {
            let x = (t - self.origin) / self.spacing + 1.0;
            let k = x.floor() as i64;
            let mut idx = [(0usize, 0.0f64); 4];
            let mut m = 0;
            for j in (k - 1)..=(k + 2) {
                if j >= 0 && (j as usize) < n {
                    idx[m] = (j as usize, cubic_bspline(x - j as f64));
                    m += 1;
                }
            }
            for &(i, bi) in &idx[..m] {
                b[i] += bi * v;
                for &(j, bj) in &idx[..m] {
                    a[(i, j)] += bi * bj;
                }
            }
        }
        let scale = a.diagonal().max().max(1.0);
        for i in 0..n {
            a[(i, i)] += 1e-9 * scale;
        }
        let sol = a
            .cholesky()
            .ok_or_else(|| Error::FitFailure("singular spline system".into()))?
            .solve(&b);
        self.coeffs.copy_from_slice(sol.as_slice());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        let mut s = UniformSpline::covering(0.0, 10.0, 1.0).unwrap();
        s.coeffs.iter_mut().for_each(|c| *c = 1.0);
        for k in 0..=100 {
            let t = k as f64 * 0.1;
            assert!((s.eval(t) - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn fits_smooth_function() {
        let mut s = UniformSpline::covering(0.0, 20.0, 1.0).unwrap();
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| (t / 3.0).sin()).collect();
        s.fit(&times, &values).unwrap();
        for (&t, &v) in times.iter().zip(&values) {
            assert!((s.eval(t) - v).abs() < 1e-3);
        }
    }
}
