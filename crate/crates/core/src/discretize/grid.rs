use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Controls for a 1-D node distribution on `[a, b]`.
///
/// Without grading the spacing is uniform, `h = (b − a) / cells`. With a
/// grading factor `κ` the local spacing near the focus points shrinks to
/// `clamp(κ·dist, min_spacing, h)`, which resolves concentrated densities
/// without paying for a globally fine mesh. Breakpoints are always nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grading {
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    #[serde(default)]
    pub focus: Vec<f64>,
    #[serde(default)]
    pub factor: Option<f64>,
    #[serde(default)]
    pub min_spacing: Option<f64>,
}

impl Grading {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn with_breakpoints(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(pts);
        self
    }

    pub fn focused(mut self, focus: impl IntoIterator<Item = f64>, factor: f64) -> Self {
        self.focus.extend(focus);
        self.factor = Some(factor);
        self
    }

    pub fn with_min_spacing(mut self, h: f64) -> Self {
        self.min_spacing = Some(h);
        self
    }
}

/// Nondecreasing node list on `[a, b]` containing `a`, `b`, and every
/// breakpoint strictly inside.
pub fn graded_nodes(a: f64, b: f64, cells: usize, grading: &Grading) -> Result<Vec<f64>> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidDescriptor(format!("empty or non-finite range [{a}, {b}]")));
    }
    if cells < 1 {
        return Err(Error::InvalidDescriptor("resolution must be positive".into()));
    }
    let h = (b - a) / cells as f64;
    let mut cuts: Vec<f64> = vec![a];
    let mut bps: Vec<f64> = grading
        .breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    if grading.breakpoints.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidDescriptor("non-finite breakpoint".into()));
    }
    bps.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let tiny = 1e-12 * (b - a);
    for p in bps {
        if p - cuts.last().unwrap() > tiny {
            cuts.push(p);
        }
    }
    if b - cuts.last().unwrap() <= tiny {
        cuts.pop();
    }
    cuts.push(b);

    let spacing = |x: f64| -> f64 {
        match grading.factor {
            Some(k) if !grading.focus.is_empty() => {
                let d = grading
                    .focus
                    .iter()
                    .map(|f| (x - f).abs())
                    .fold(f64::INFINITY, f64::min);
                let hmin = grading.min_spacing.unwrap_or(h * 1e-3);
                (k * d).clamp(hmin, h)
            }
            _ => h,
        }
    };
    if let Some(k) = grading.factor {
        if !(k > 0.0) {
            return Err(Error::InvalidDescriptor("grading factor must be positive".into()));
        }
    }

    let mut nodes = vec![a];
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if grading.factor.is_none() || grading.focus.is_empty() {
            let m = (((q - p) / h) - 1e-9).ceil().max(1.0) as usize;
            for k in 1..m {
                nodes.push(p + (q - p) * k as f64 / m as f64);
            }
        } else {
            // Equidistribute the stretched coordinate ξ(x) = ∫ dx / s(x).
            const SAMPLES: usize = 4000;
            let dx = (q - p) / SAMPLES as f64;
            let mut xi = Vec::with_capacity(SAMPLES + 1);
            xi.push(0.0);
            for i in 0..SAMPLES {
                let x = p + (i as f64 + 0.5) * dx;
                let prev = *xi.last().unwrap();
                xi.push(prev + dx / spacing(x));
            }
            let total = xi[SAMPLES];
            let m = (total - 1e-6).ceil().max(1.0) as usize;
            let mut seg = 0usize;
            for k in 1..m {
                let target = total * k as f64 / m as f64;
                while xi[seg + 1] < target {
                    seg += 1;
                }
                let frac = (target - xi[seg]) / (xi[seg + 1] - xi[seg]);
                nodes.push(p + (seg as f64 + frac) * dx);
            }
        }
        nodes.push(q);
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_has_requested_cells() {
        let x = graded_nodes(0.0, 1.0, 10, &Grading::uniform()).unwrap();
        assert_eq!(x.len(), 11);
        assert!((x[3] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn breakpoints_become_nodes() {
        let g = Grading::uniform().with_breakpoints([0.013, 0.026]);
        let x = graded_nodes(0.0, 1.0, 50, &g).unwrap();
        assert!(x.contains(&0.013) && x.contains(&0.026));
        assert!(x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grading_refines_near_focus() {
        let g = Grading::uniform().focused([0.0], 0.1).with_min_spacing(1e-4);
        let x = graded_nodes(0.0, 1.0, 50, &g).unwrap();
        assert!(x[1] - x[0] < 2e-4);
        let last = x[x.len() - 1] - x[x.len() - 2];
        assert!(last <= 0.02 + 1e-12);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(graded_nodes(1.0, 1.0, 4, &Grading::uniform()).is_err());
        assert!(graded_nodes(0.0, 1.0, 0, &Grading::uniform()).is_err());
    }
}
