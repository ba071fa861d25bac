//! Fixed-step explicit integrators over flat state vectors.

use super::scenario::Method;

pub(crate) struct Stepper {
    method: Method,
    k: [Vec<f64>; 4],
    probe: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(method: Method, dim: usize) -> Self {
        Self {
            method,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            probe: vec![0.0; dim],
        }
    }

    /// Advances `x` from `t` to `t + h` with the vector field `f(t, x, dx)`.
    pub(crate) fn step<F>(&mut self, f: &mut F, t: f64, x: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        match self.method {
            Method::ForwardEuler => {
                f(t, x, &mut self.k[0]);
                for (xi, ki) in x.iter_mut().zip(&self.k[0]) {
                    *xi += h * ki;
                }
            }
            Method::Rk4 => {
                let [k1, k2, k3, k4] = &mut self.k;
                let probe = &mut self.probe;
                f(t, x, k1);
                axpy(probe, x, 0.5 * h, k1);
                f(t + 0.5 * h, probe, k2);
                axpy(probe, x, 0.5 * h, k2);
                f(t + 0.5 * h, probe, k3);
                axpy(probe, x, h, k3);
                f(t + h, probe, k4);
                for i in 0..x.len() {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
    }
}

fn axpy(out: &mut [f64], x: &[f64], a: f64, y: &[f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut f = |_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0];
        for (method, tol) in [(Method::Rk4, 1e-9), (Method::ForwardEuler, 5e-3)] {
            let mut s = Stepper::new(method, 1);
            let mut x = [1.0];
            for k in 0..100 {
                s.step(&mut f, k as f64 * 0.01, &mut x, 0.01);
            }
            assert!((x[0] - (-1.0f64).exp()).abs() < tol, "{method:?}: {}", x[0]);
        }
    }

    #[test]
    fn rk4_is_exact_on_cubics_in_time() {
        let mut f = |t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 3.0 * t * t;
        let mut s = Stepper::new(Method::Rk4, 1);
        let mut x = [0.0];
        s.step(&mut f, 0.0, &mut x, 0.5);
        s.step(&mut f, 0.5, &mut x, 0.5);
        assert!((x[0] - 1.0).abs() < 1e-15);
    }
}
