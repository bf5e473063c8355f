use crate::optim::Integrator;

/// Undamped oscillator `f(x) = ½ ω² x²` stepped with size `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCase {
    pub h: f64,
    pub omega: f64,
    pub integrator: Integrator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySpectrum {
    pub det: f64,
    pub trace: f64,
    pub spectral_radius: f64,
}

impl StabilityCase {
    /// One-step update matrix acting on `(x, v)`.
    pub fn update_matrix(&self) -> [[f64; 2]; 2] {
        let h = self.h;
        let w2 = self.omega * self.omega;
        match self.integrator {
            Integrator::SemiImplicit => [[1.0 - h * h * w2, h], [-h * w2, 1.0]],
            Integrator::ExplicitEuler => [[1.0, h], [-h * w2, 1.0]],
        }
    }
}

/// Determinant, trace and spectral radius of the update matrix. The radius
/// comes from the eigenvalues of the 2×2 characteristic polynomial.
pub fn stability_spectrum(case: &StabilityCase) -> StabilitySpectrum {
    let [[a, b], [c, d]] = case.update_matrix();
    let det = a * d - b * c;
    let trace = a + d;
    let half = 0.5 * trace;
    let disc = half * half - det;
    let spectral_radius = if disc < 0.0 {
        // complex pair half ± i sqrt(-disc)
        (half * half - disc).sqrt()
    } else {
        let root = disc.sqrt();
        (half + root).abs().max((half - root).abs())
    };
    StabilitySpectrum {
        det,
        trace,
        spectral_radius,
    }
}
