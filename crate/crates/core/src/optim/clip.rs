/// Euclidean norm with left-to-right summation.
pub fn global_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |acc, x| acc + x * x).sqrt()
}

/// Rescales `g` by `min(1, c / (‖g‖ + 1e-12))`.
///
/// Gradients already inside the ball are returned unchanged (bitwise), which
/// includes the zero vector.
pub fn clip_gradient(g: &[f64], c: f64) -> Vec<f64> {
    let scale = c / (global_norm(g) + 1e-12);
    if scale >= 1.0 {
        g.to_vec()
    } else {
        g.iter().map(|x| x * scale).collect()
    }
}
