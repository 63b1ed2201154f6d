//! Built-in ODE plants.

use ndarray::Array1;

use crate::types::Observation;

use super::{Plant, PlantState};

/// Decoupled stable linear channels: `dy_i/dt = -a*y_i + b*u_i`, `z = y`.
#[derive(Debug, Clone)]
pub struct Linear {
    dim: usize,
    a: f64,
    b: f64,
    dt_plant: f64,
}

impl Linear {
    pub fn new(dim: usize, a: f64, b: f64, dt_plant: f64) -> Self {
        Linear { dim, a, b, dt_plant }
    }
}

impl Plant for Linear {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn dt_plant(&self) -> f64 {
        self.dt_plant
    }

    fn rhs(&self, y: &Array1<f64>, u: &Array1<f64>) -> Array1<f64> {
        y * (-self.a) + u * self.b
    }

    fn observe(&self, y: &PlantState) -> Observation {
        Observation(y.0.clone())
    }

    fn initial_state(&self) -> PlantState {
        PlantState(Array1::ones(self.dim))
    }
}

/// Van der Pol oscillator with the control entering the velocity equation:
/// `dy1 = y2`, `dy2 = mu*(1 - y1^2)*y2 - y1 + u`. Full-state observation.
#[derive(Debug, Clone)]
pub struct VanDerPol {
    mu: f64,
    dt_plant: f64,
}

impl VanDerPol {
    pub fn new(mu: f64, dt_plant: f64) -> Self {
        VanDerPol { mu, dt_plant }
    }
}

impl Plant for VanDerPol {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn dt_plant(&self) -> f64 {
        self.dt_plant
    }

    fn rhs(&self, y: &Array1<f64>, u: &Array1<f64>) -> Array1<f64> {
        ndarray::array![
            y[1],
            self.mu * (1.0 - y[0] * y[0]) * y[1] - y[0] + u[0]
        ]
    }

    fn observe(&self, y: &PlantState) -> Observation {
        Observation(y.0.clone())
    }

    fn initial_state(&self) -> PlantState {
        PlantState(ndarray::array![2.0, 0.0])
    }
}

/// Lorenz system with the control added to the `dy2` equation:
/// `dy1 = sigma*(y2 - y1)`, `dy2 = y1*(rho - y3) - y2 + u`,
/// `dy3 = y1*y2 - beta*y3`. Full-state observation.
#[derive(Debug, Clone)]
pub struct LorenzControlled {
    sigma: f64,
    rho: f64,
    beta: f64,
    dt_plant: f64,
}

impl LorenzControlled {
    pub fn new(sigma: f64, rho: f64, beta: f64, dt_plant: f64) -> Self {
        LorenzControlled {
            sigma,
            rho,
            beta,
            dt_plant,
        }
    }
}

impl Plant for LorenzControlled {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn dt_plant(&self) -> f64 {
        self.dt_plant
    }

    fn rhs(&self, y: &Array1<f64>, u: &Array1<f64>) -> Array1<f64> {
        ndarray::array![
            self.sigma * (y[1] - y[0]),
            y[0] * (self.rho - y[2]) - y[1] + u[0],
            y[0] * y[1] - self.beta * y[2]
        ]
    }

    fn observe(&self, y: &PlantState) -> Observation {
        Observation(y.0.clone())
    }

    fn initial_state(&self) -> PlantState {
        PlantState(ndarray::array![1.0, 1.0, 1.0])
    }
}

/// Two cross-coupled Van der Pol oscillators with a mirror equivariance.
///
/// State `(a1, b1, a2, b2)`:
/// `da_i = b_i`, `db_i = mu*(1 - a_i^2)*b_i - a_i - kappa*a_j + u_i`.
/// Observation `z = (a1, a2, a1 + a2, b1^2, b2^2, b1^2 + b2^2)`, so the
/// state map `(a1, b1, a2, b2) -> (-a2, -b2, -a1, -b1)` together with
/// `u -> (-u2, -u1)` acts on `z` as the signed channel swap
/// `(z1, z2, z3, z4, z5, z6) -> (-z2, -z1, -z3, z5, z4, z6)`.
#[derive(Debug, Clone)]
pub struct MirrorOscillator {
    mu: f64,
    kappa: f64,
    dt_plant: f64,
}

impl MirrorOscillator {
    pub fn new(mu: f64, kappa: f64, dt_plant: f64) -> Self {
        MirrorOscillator {
            mu,
            kappa,
            dt_plant,
        }
    }

    /// The state-space involution paired with the control swap `(-u2, -u1)`.
    pub fn state_symmetry(y: &PlantState) -> PlantState {
        PlantState(ndarray::array![-y.0[2], -y.0[3], -y.0[0], -y.0[1]])
    }
}

impl Plant for MirrorOscillator {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        6
    }

    fn dt_plant(&self) -> f64 {
        self.dt_plant
    }

    fn rhs(&self, y: &Array1<f64>, u: &Array1<f64>) -> Array1<f64> {
        let (a1, b1, a2, b2) = (y[0], y[1], y[2], y[3]);
        ndarray::array![
            b1,
            self.mu * (1.0 - a1 * a1) * b1 - a1 - self.kappa * a2 + u[0],
            b2,
            self.mu * (1.0 - a2 * a2) * b2 - a2 - self.kappa * a1 + u[1]
        ]
    }

    fn observe(&self, y: &PlantState) -> Observation {
        let (a1, b1, a2, b2) = (y.0[0], y.0[1], y.0[2], y.0[3]);
        Observation(ndarray::array![
            a1,
            a2,
            a1 + a2,
            b1 * b1,
            b2 * b2,
            b1 * b1 + b2 * b2
        ])
    }

    fn initial_state(&self) -> PlantState {
        PlantState(ndarray::array![2.0, 0.0, -1.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ControlVector;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn van_der_pol_full_state_observation() {
        let plant = VanDerPol::new(1.0, 0.01);
        let y = PlantState(array![0.3, -0.7]);
        assert_eq!(plant.observe(&y).0, array![0.3, -0.7]);
    }

    #[test]
    fn van_der_pol_settles_onto_bounded_oscillation() {
        // From (2, 0) with mu=1 the uncontrolled system stays on a bounded,
        // non-decaying orbit: amplitude of y1 keeps returning near 2.
        let plant = VanDerPol::new(1.0, 0.01);
        let u = ControlVector(array![0.0]);
        let mut y = plant.initial_state();
        let mut max_late = 0.0_f64;
        let mut max_mid = 0.0_f64;
        for i in 0..4000 {
            y = plant.step(&y, &u, 0.05).unwrap();
            let amp = y.0[0].abs();
            if i >= 2000 {
                max_late = max_late.max(amp);
            } else if i >= 1000 {
                max_mid = max_mid.max(amp);
            }
        }
        assert!(max_late > 1.5, "oscillation decayed: {max_late}");
        assert!(max_late < 3.0, "oscillation grew: {max_late}");
        assert_abs_diff_eq!(max_late, max_mid, epsilon = 0.05);
    }

    #[test]
    fn mirror_observation_components() {
        let plant = MirrorOscillator::new(1.0, 0.3, 0.01);
        let y = PlantState(array![0.5, -0.2, 1.5, 0.3]);
        let z = plant.observe(&y).0;
        assert_eq!(z[0], 0.5);
        assert_eq!(z[1], 1.5);
        assert_eq!(z[2], 2.0);
        assert_abs_diff_eq!(z[3], 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(z[4], 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(z[5], 0.13, epsilon = 1e-15);
    }

    #[test]
    fn mirror_step_commutes_with_state_symmetry() {
        // Stepping then mirroring equals mirroring then stepping with the
        // swapped-and-negated control.
        let plant = MirrorOscillator::new(1.0, 0.3, 0.005);
        let y = PlantState(array![1.2, -0.3, 0.4, 0.8]);
        let u = ControlVector(array![0.7, -1.1]);
        let u_hat = ControlVector(array![1.1, -0.7]);

        let stepped = plant.step(&y, &u, 0.1).unwrap();
        let route_a = MirrorOscillator::state_symmetry(&stepped);
        let route_b = plant
            .step(&MirrorOscillator::state_symmetry(&y), &u_hat, 0.1)
            .unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(route_a.0[i], route_b.0[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn state_symmetry_is_an_involution() {
        let y = PlantState(array![1.0, 2.0, 3.0, 4.0]);
        let twice = MirrorOscillator::state_symmetry(&MirrorOscillator::state_symmetry(&y));
        assert_eq!(twice, y);
    }
}
