#![allow(dead_code)]

/// `x1^2 x2 - x2^2 x1`, shared with the expression-language tests.
pub fn cubic(p: &[f64]) -> f64 {
    p[0] * p[0] * p[1] - p[1] * p[1] * p[0]
}

/// `(∂1, ∂2)` of [`cubic`].
pub fn cubic_gradient(p: &[f64]) -> [f64; 2] {
    [2.0 * p[0] * p[1] - p[1] * p[1], p[0] * p[0] - 2.0 * p[1] * p[0]]
}
