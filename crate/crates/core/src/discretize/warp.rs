use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Profile γ(t) of a warped product `dt² + γ(t)² g_{S^{n−1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WarpProfile {
    /// γ(r) = r on `[0, radius]`: the Euclidean ball in polar coordinates.
    Radial { radius: f64 },
    /// Piecewise-linear interpolation of samples.
    Samples { t: Vec<f64>, gamma: Vec<f64> },
    /// Round hemisphere of radius `cap`, a cylinder of the given length and
    /// radius `cap`, and a second hemisphere. Both ends close at poles.
    Capsule {
        length: f64,
        #[serde(default = "one")]
        cap: f64,
    },
    /// Unit capsule whose central cylinder `s ∈ [−2, 2]` is pinched to
    /// radius `eps` on `|s| ≤ ½`, with linear transitions on `½ ≤ |s| ≤ 1`.
    Neck { eps: f64 },
}

fn one() -> f64 {
    1.0
}

impl WarpProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDescriptor(m.to_string()));
        match self {
            WarpProfile::Radial { radius } if !(*radius > 0.0) => bad("radius must be positive"),
            WarpProfile::Samples { t, gamma } => {
                if t.len() != gamma.len() || t.len() < 2 {
                    return bad("profile samples need matching t/gamma lists of length ≥ 2");
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("profile sample abscissae must be increasing");
                }
                if gamma.iter().any(|g| !(*g >= 0.0)) {
                    return bad("profile values must be nonnegative");
                }
                let interior_zero = gamma[1..gamma.len() - 1].contains(&0.0);
                if interior_zero {
                    return bad("profile may vanish only at the end points");
                }
                Ok(())
            }
            WarpProfile::Capsule { length, cap } if !(*length > 0.0) || !(*cap > 0.0) => {
                bad("capsule length and cap radius must be positive")
            }
            WarpProfile::Neck { eps } if !(*eps > 0.0 && *eps <= 1.0) => {
                bad("neck radius must lie in (0, 1]")
            }
            _ => Ok(()),
        }
    }

    /// Parameter interval `[t0, t1]`.
    pub fn range(&self) -> (f64, f64) {
        match self {
            WarpProfile::Radial { radius } => (0.0, *radius),
            WarpProfile::Samples { t, .. } => (t[0], *t.last().unwrap()),
            WarpProfile::Capsule { length, cap } => (0.0, cap * PI + length),
            WarpProfile::Neck { .. } => (0.0, PI + 4.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WarpProfile::Radial { .. } => t.max(0.0),
            WarpProfile::Samples { t: ts, gamma } => {
                let n = ts.len();
                if t <= ts[0] {
                    return gamma[0];
                }
                if t >= ts[n - 1] {
                    return gamma[n - 1];
                }
                let k = ts.partition_point(|&x| x <= t) - 1;
                let s = (t - ts[k]) / (ts[k + 1] - ts[k]);
                gamma[k] + s * (gamma[k + 1] - gamma[k])
            }
            WarpProfile::Capsule { length, cap } => {
                let end = cap * PI + length;
                let q = cap * PI / 2.0;
                if t < q {
                    cap * (t / cap).sin().max(0.0)
                } else if t > q + length {
                    cap * ((end - t) / cap).sin().max(0.0)
                } else {
                    *cap
                }
            }
            WarpProfile::Neck { eps } => {
                let end = PI + 4.0;
                let q = PI / 2.0;
                if t < q {
                    t.sin().max(0.0)
                } else if t > q + 4.0 {
                    (end - t).sin().max(0.0)
                } else {
                    let s = (t - q - 2.0).abs();
                    if s <= 0.5 {
                        *eps
                    } else if s <= 1.0 {
                        eps + (1.0 - eps) * (s - 0.5) / 0.5
                    } else {
                        1.0
                    }
                }
            }
        }
    }

    /// Points where the profile has a kink; the grid must contain them.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            WarpProfile::Radial { .. } => vec![],
            WarpProfile::Samples { t, .. } => t.clone(),
            WarpProfile::Capsule { length, cap } => {
                let q = cap * PI / 2.0;
                vec![q, q + length]
            }
            WarpProfile::Neck { .. } => {
                let q = PI / 2.0;
                [0.0, 1.0, 1.5, 2.5, 3.0, 4.0].iter().map(|s| q + s).collect()
            }
        }
    }
}

/// Area of the unit sphere `S^{n−1}` in `ℝⁿ`, i.e. `n·ω_n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * sphere_area(n - 2) / (n - 2) as f64,
    }
}

/// Volume `ω_n` of the unit ball in `ℝⁿ`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Eigenvalue `ℓ(ℓ+n−2)` of the Laplacian on `S^{n−1}` for harmonics of degree ℓ.
pub fn angular_eigenvalue(l: usize, n: usize) -> f64 {
    (l * (l + n).saturating_sub(2)) as f64
}

/// Dimension of the space of degree-ℓ spherical harmonics on `S^{n−1}`.
pub fn harmonic_multiplicity(l: usize, n: usize) -> usize {
    match n {
        1 => usize::from(l <= 1),
        2 => {
            if l == 0 {
                1
            } else {
                2
            }
        }
        _ => binomial(l + n - 1, n - 1) - if l >= 2 { binomial(l + n - 3, n - 1) } else { 0 },
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_constants() {
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(harmonic_multiplicity(2, 3), 5);
        assert_eq!(harmonic_multiplicity(1, 4), 4);
        assert_eq!(harmonic_multiplicity(3, 2), 2);
        assert_eq!(angular_eigenvalue(2, 3), 6.0);
    }

    #[test]
    fn capsule_is_continuous_and_closes() {
        let p = WarpProfile::Capsule { length: 3.0, cap: 1.0 };
        let (a, b) = p.range();
        assert_eq!(p.eval(a), 0.0);
        assert!(p.eval(b).abs() < 1e-12);
        for k in p.knots() {
            assert!((p.eval(k - 1e-9) - p.eval(k + 1e-9)).abs() < 1e-6);
        }
    }

    #[test]
    fn neck_profile_values() {
        let p = WarpProfile::Neck { eps: 0.1 };
        let mid = PI / 2.0 + 2.0;
        assert_eq!(p.eval(mid), 0.1);
        assert!((p.eval(mid + 0.75) - 0.55).abs() < 1e-12);
        assert_eq!(p.eval(mid + 1.5), 1.0);
    }
}
