//! Fixed quadrature rules on the reference cells.

/// Three-point Gauss rule on `[0, 1]`, exact for degree 5.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Six-point symmetric rule on the reference triangle in barycentric
/// coordinates, exact for degree 4; weights sum to one.
pub(crate) const TRI6: [([f64; 3], f64); 6] = {
    const A: f64 = 0.108_103_018_168_070;
    const B: f64 = 0.445_948_490_915_965;
    const C: f64 = 0.816_847_572_980_459;
    const D: f64 = 0.091_576_213_509_771;
    const WA: f64 = 0.223_381_589_678_011;
    const WC: f64 = 0.109_951_743_655_322;
    [
        ([A, B, B], WA),
        ([B, A, B], WA),
        ([B, B, A], WA),
        ([C, D, D], WC),
        ([D, C, D], WC),
        ([D, D, C], WC),
    ]
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_for_quintics() {
        let s: f64 = GAUSS3.iter().map(|&(x, w)| w * x.powi(5)).sum();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_rule_integrates_quartics() {
        // ∫ λ₀⁴ over the reference triangle normalised to unit area = 4!·2!/6! = 1/15.
        let s: f64 = TRI6.iter().map(|&(b, w)| w * b[0].powi(4)).sum();
        assert!((s - 1.0 / 15.0).abs() < 1e-12);
        // ∫ λ₀²λ₁² normalised = 2!2!2!/6! = 1/90.
        let s: f64 = TRI6.iter().map(|&(b, w)| w * b[0].powi(2) * b[1].powi(2)).sum();
        assert!((s - 1.0 / 90.0).abs() < 1e-12);
    }
}
