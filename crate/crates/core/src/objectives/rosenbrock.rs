use super::{Objective, ObjectiveError};

/// Chained Rosenbrock function
/// `f(θ) = Σ_{i<d-1} 100 (θ_{i+1} - θ_i²)² + (1 - θ_i)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rosenbrock {
    d: usize,
}

impl Rosenbrock {
    pub fn new(d: usize) -> Result<Self, ObjectiveError> {
        if d < 2 {
            return Err(ObjectiveError::DimensionTooSmall {
                name: "rosenbrock",
                min: 2,
                got: d,
            });
        }
        Ok(Self { d })
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.d
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut f = 0.0;
        for i in 0..self.d - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
            grad[i] += -400.0 * x[i] * a - 2.0 * b;
            grad[i + 1] += 200.0 * a;
        }
        f
    }
}

/// Value and gradient of the chained Rosenbrock function at `theta`.
pub fn rosenbrock(theta: &[f64]) -> Result<(f64, Vec<f64>), ObjectiveError> {
    let obj = Rosenbrock::new(theta.len())?;
    let mut g = vec![0.0; theta.len()];
    let f = obj.value_grad(theta, &mut g);
    Ok((f, g))
}
