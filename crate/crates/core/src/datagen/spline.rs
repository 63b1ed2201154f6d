//! Natural cubic spline on a uniform knot grid.

/// Interpolating natural cubic spline through `values` at knots
/// `0, h, 2h, ...` (second derivative zero at both ends).
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    h: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    m2: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn fit(h: f64, values: &[f64]) -> Self {
        assert!(h > 0.0, "knot spacing must be positive");
        assert!(!values.is_empty(), "need at least one knot");
        let n = values.len();
        let mut m2 = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior second derivatives:
            // (h/6) m_{i-1} + (2h/3) m_i + (h/6) m_{i+1}
            //   = (y_{i+1} - 2 y_i + y_{i-1}) / h,  m_0 = m_{n-1} = 0.
            let k = n - 2;
            let diag = 2.0 * h / 3.0;
            let off = h / 6.0;
            let mut c_prime = vec![0.0; k];
            let mut d_prime = vec![0.0; k];
            for i in 0..k {
                let rhs = (values[i + 2] - 2.0 * values[i + 1] + values[i]) / h;
                if i == 0 {
                    c_prime[0] = off / diag;
                    d_prime[0] = rhs / diag;
                } else {
                    let denom = diag - off * c_prime[i - 1];
                    c_prime[i] = off / denom;
                    d_prime[i] = (rhs - off * d_prime[i - 1]) / denom;
                }
            }
            m2[k] = d_prime[k - 1];
            for i in (0..k - 1).rev() {
                m2[i + 1] = d_prime[i] - c_prime[i] * m2[i + 2];
            }
        }
        NaturalCubicSpline {
            h,
            values: values.to_vec(),
            m2,
        }
    }

    /// Evaluate at `t` in `[0, (n-1) * h]`; clamps outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let span = (n - 1) as f64 * self.h;
        let t = t.clamp(0.0, span);
        let mut i = (t / self.h).floor() as usize;
        if i >= n - 1 {
            i = n - 2;
        }
        let a = t - i as f64 * self.h;
        let b = self.h - a;
        let h = self.h;
        // Standard segment formula in terms of second derivatives.
        self.m2[i] * b * b * b / (6.0 * h)
            + self.m2[i + 1] * a * a * a / (6.0 * h)
            + (self.values[i] / h - self.m2[i] * h / 6.0) * b
            + (self.values[i + 1] / h - self.m2[i + 1] * h / 6.0) * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interpolates_every_knot() {
        let values = [0.3, -1.2, 2.0, 0.5, -0.8, 1.7];
        let s = NaturalCubicSpline::fit(0.5, &values);
        for (i, &v) in values.iter().enumerate() {
            assert_abs_diff_eq!(s.eval(0.5 * i as f64), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn natural_end_conditions() {
        // Second difference quotient vanishes at both ends.
        let values = [1.0, 0.2, -0.7, 1.5, 0.1];
        let s = NaturalCubicSpline::fit(1.0, &values);
        let dd = |t: f64| {
            let e = 1e-4;
            (s.eval(t + e) - 2.0 * s.eval(t) + s.eval(t - e)) / (e * e)
        };
        assert_abs_diff_eq!(dd(1e-4), 0.0, epsilon = 1e-2);
        assert_abs_diff_eq!(dd(4.0 - 1e-4), 0.0, epsilon = 1e-2);
    }

    #[test]
    fn reproduces_straight_lines_exactly() {
        let values: Vec<f64> = (0..7).map(|i| 0.4 * i as f64 - 1.0).collect();
        let s = NaturalCubicSpline::fit(0.25, &values);
        for k in 0..=60 {
            let t = 0.025 * k as f64;
            assert_abs_diff_eq!(s.eval(t), 0.4 * (t / 0.25) - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_knots_reduce_to_linear_interpolation() {
        let s = NaturalCubicSpline::fit(2.0, &[1.0, 3.0]);
        assert_abs_diff_eq!(s.eval(1.0), 2.0, epsilon = 1e-12);
    }
}
