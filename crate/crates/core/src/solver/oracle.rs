//! Reference solution for shear flows: `rho0(y) dU/dt = nu d2U/dy2` with
//! `U = 0` at both walls, integrated by Crank-Nicolson on a fine vertex grid.
//!
//! Kept independent of the 2D machinery (own grid, own tridiagonal solve) so
//! it can serve as a test oracle for the channel solver.

/// Vertex samples of a wall-normal profile, ends included.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1d {
    pub y: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile1d {
    /// Piecewise-linear interpolation.
    pub fn eval(&self, y: f64) -> f64 {
        let h = self.y[1] - self.y[0];
        let n = self.y.len() - 1;
        let k = ((y / h).floor() as usize).min(n - 1);
        let w = (y - self.y[k]) / h;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// Oracle output. Energies and dissipations are per unit streamwise length.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatOracle1d {
    pub profile: Profile1d,
    pub times: Vec<f64>,
    /// `1/2 int rho0 (U(t) - U0)^2` at each time.
    pub e1: Vec<f64>,
    /// `nu int_0^t int |dU/dy|^2`.
    pub diss_total: Vec<f64>,
    /// Same, restricted to the strips of width `layer` at both walls.
    pub diss_layer: Vec<f64>,
}

impl HeatOracle1d {
    pub fn e_sup(&self) -> f64 {
        self.e1.iter().fold(0.0, |m, &x| m.max(x))
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = upper[0] / d;
    rhs[0] /= d;
    for k in 1..n {
        d = diag[k] - lower[k] * c[k - 1];
        c[k] = upper[k] / d;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / d;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

/// Runs the oracle to `horizon` with `cells` intervals and `steps` equal time
/// steps. `layer` is the strip width for the layer dissipation.
#[allow(clippy::too_many_arguments)]
pub fn heat_oracle_1d(
    u0: impl Fn(f64) -> f64,
    rho0: impl Fn(f64) -> f64,
    length_y: f64,
    nu: f64,
    horizon: f64,
    cells: usize,
    steps: usize,
    layer: f64,
) -> HeatOracle1d {
    let n = cells;
    let h = length_y / n as f64;
    let y: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let start: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(k, &yk)| if k == 0 || k == n { 0.0 } else { u0(yk) })
        .collect();
    let rho: Vec<f64> = y.iter().map(|&yk| rho0(yk)).collect();
    let dt = horizon / steps as f64;

    let strip_lo = layer.min(0.5 * length_y);
    let strip_hi = (length_y - layer).max(0.5 * length_y);
    let rates = |u: &[f64]| -> (f64, f64) {
        let (mut total, mut inner) = (0.0, 0.0);
        for k in 0..n {
            let g = (u[k + 1] - u[k]) / h;
            let g2 = g * g;
            total += g2 * h;
            let w = overlap(y[k], y[k + 1], 0.0, strip_lo) + overlap(y[k], y[k + 1], strip_hi, length_y);
            inner += g2 * w;
        }
        (nu * total, nu * inner)
    };
    let energy = |u: &[f64]| -> f64 {
        let mut s = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 * h } else { h };
            s += w * rho[k] * (u[k] - start[k]).powi(2);
        }
        0.5 * s
    };

    // interior unknowns 1..n-1
    let m = n - 1;
    let r = nu * dt / (2.0 * h * h);
    let lower: Vec<f64> = (1..n).map(|k| -r / rho[k]).collect();
    let upper = lower.clone();
    let diag: Vec<f64> = (1..n).map(|k| 1.0 + 2.0 * r / rho[k]).collect();

    let mut u = start.clone();
    let mut times = vec![0.0];
    let mut e1 = vec![0.0];
    let mut diss_total = vec![0.0];
    let mut diss_layer = vec![0.0];
    let (mut prev_t, mut prev_l) = rates(&u);
    let mut rhs = vec![0.0; m];
    for step in 1..=steps {
        for k in 1..n {
            let lap = u[k - 1] - 2.0 * u[k] + u[k + 1];
            rhs[k - 1] = u[k] + r / rho[k] * lap;
        }
        thomas(&lower, &diag, &upper, &mut rhs);
        u[1..n].copy_from_slice(&rhs);
        let (t_rate, l_rate) = rates(&u);
        times.push(step as f64 * dt);
        e1.push(energy(&u));
        diss_total.push(diss_total[step - 1] + 0.5 * dt * (prev_t + t_rate));
        diss_layer.push(diss_layer[step - 1] + 0.5 * dt * (prev_l + l_rate));
        prev_t = t_rate;
        prev_l = l_rate;
    }
    HeatOracle1d {
        profile: Profile1d { y, values: u },
        times,
        e1,
        diss_total,
        diss_layer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_mode_matches_series() {
        let nu = 0.01;
        let out = heat_oracle_1d(|y| (PI * y).sin(), |_| 1.0, 1.0, nu, 1.0, 4096, 1000, 0.01);
        let decay = (-nu * PI * PI).exp();
        let err = out
            .profile
            .y
            .iter()
            .zip(&out.profile.values)
            .fold(0.0f64, |m, (y, u)| m.max((u - (PI * y).sin() * decay).abs()));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let out = heat_oracle_1d(|_| 0.0, |_| 1.0, 1.0, 0.1, 1.0, 64, 10, 0.1);
        assert!(out.profile.values.iter().all(|&v| v == 0.0));
        assert_eq!(out.diss_total.last(), Some(&0.0));
    }

    #[test]
    fn doubled_density_halves_diffusivity() {
        let a = heat_oracle_1d(|y| (2.0 * PI * y).sin(), |_| 2.0, 1.0, 0.05, 1.0, 256, 200, 0.05);
        let b = heat_oracle_1d(|y| (2.0 * PI * y).sin(), |_| 1.0, 1.0, 0.05, 0.5, 256, 200, 0.05);
        for (x, y) in a.profile.values.iter().zip(&b.profile.values) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_budget_closes() {
        // for U0 = sin(pi y) and rho = 1: kinetic(t) + diss(t) = kinetic(0)
        let nu = 0.1;
        let out = heat_oracle_1d(|y| (PI * y).sin(), |_| 1.0, 1.0, nu, 1.0, 1024, 400, 0.1);
        let kinetic = 0.25 * (-2.0 * nu * PI * PI).exp();
        let diss = *out.diss_total.last().unwrap();
        assert!((kinetic + diss - 0.25).abs() < 1e-5, "{}", kinetic + diss);
        assert!(out.diss_layer.last().unwrap() < &diss);
    }
}
