//! Small closed forms shared across modules.

use std::f64::consts::PI;

/// Surface area of the unit sphere S^m ⊂ ℝ^{m+1}.
///
/// Uses |S^0| = 2, |S^1| = 2π and |S^m| = 2π/(m-1) · |S^{m-2}|, which is
/// exact for every m and equals 2π^{(m+1)/2}/Γ((m+1)/2).
pub fn sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_area(m - 2),
    }
}

/// The factor 2^{n-2} |S^{n-2}| relating `∫_{S^{n-1}} b dω` to `β_b(0, 0)`.
pub fn cutoff_factor(n: usize) -> f64 {
    assert!(n >= 2, "dimension must be at least 2");
    2f64.powi(n as i32 - 2) * sphere_area(n - 2)
}

/// Conjugate exponent; `p = 1` maps to ∞ and `p = ∞` to 1.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// 1/p with 1/∞ = 0.
pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(0), 2.0);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn cutoff_factors() {
        assert_eq!(cutoff_factor(2), 2.0);
        assert!((cutoff_factor(3) - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn conjugates() {
        assert!(conjugate(1.0).is_infinite());
        assert_eq!(conjugate(f64::INFINITY), 1.0);
        assert_eq!(conjugate(2.0), 2.0);
        assert_eq!(recip(f64::INFINITY), 0.0);
    }
}
