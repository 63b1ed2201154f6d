//! Classical fourth-order Runge-Kutta with a fixed step.

use ndarray::Array1;

/// One RK4 step of size `h` for the autonomous system `dy/dt = f(y)`.
pub fn rk4_step<F>(f: F, y: &Array1<f64>, h: f64) -> Array1<f64>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    let k1 = f(y);
    let k2 = f(&(y + &(&k1 * (h / 2.0))));
    let k3 = f(&(y + &(&k2 * (h / 2.0))));
    let k4 = f(&(y + &(&k3 * h)));
    y + &((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}
