//! Explicit density families and piecewise-linear test functions.
//!
//! Every family is a continuous, piecewise-linear function of the distance
//! to its center(s) (or of the axial coordinate on warped products). The
//! break radii are exposed through [`FamilySpec::breakpoints`] so that grids
//! can place nodes on them and the nodal interpolant reproduces the profile
//! exactly.

use crate::discretize::{Domain, DomainKind, WarpProfile};
use crate::error::{Error, Result};
use crate::DensityField;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// ρ = ε⁻ⁿ on B(x₀, ε), ε outside B(x₀, 2ε).
    ConcentrationI {
        eps: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// σ = ε⁵ on B(x₀, ε), a constant b outside B(x₀, 2ε), mean one.
    ConductivityIi {
        eps: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// ρ = ε⁻ⁿ on each B(x_i, ε), εⁿ outside the union of B(x_i, 2ε).
    /// Used together with σ = ρᵖ.
    WittenIii {
        eps: f64,
        #[serde(default = "default_p")]
        p: f64,
        centers: Vec<Vec<f64>>,
    },
    /// Nonincreasing radial σ = ε^{−1−a} on B(ε), b on B¹ ∖ B(2ε), ∫σ = |B¹|.
    BuserSigma {
        eps: f64,
        #[serde(default = "default_a")]
        a: f64,
    },
    /// Radial step ρ = ε^{−1−a} on B(ε), b outside, ∫ρ = |B¹|.
    BuserRho {
        eps: f64,
        #[serde(default = "default_a")]
        a: f64,
    },
    /// Pullback 4t²/(1 + t²|z|²)² of the round metric under the cap map.
    CapRhoT { t: f64 },
    /// ρ = ε on the half-radius ball V, a constant outside a transition
    /// shell, mean one; paired with the conformal factor of
    /// [`blowup_conformal_factor`].
    BlowupPhi {
        eps: f64,
        #[serde(default = "default_half")]
        v_radius: f64,
        #[serde(default = "default_shell")]
        shell: f64,
    },
    /// Ratio γ_ε / γ₁ of the pinched neck profile to the unpinched one.
    NeckGamma { eps: f64 },
    /// σ = γ^{1−n} on the cylinder of a neck profile, 1 on the caps.
    CylinderSigma {},
}

fn default_p() -> f64 {
    1.0
}
fn default_a() -> f64 {
    0.5
}
fn default_half() -> f64 {
    0.5
}
fn default_shell() -> f64 {
    0.1
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::ConcentrationI { .. } => "concentration_i",
            FamilySpec::ConductivityIi { .. } => "conductivity_ii",
            FamilySpec::WittenIii { .. } => "witten_iii",
            FamilySpec::BuserSigma { .. } => "buser_sigma",
            FamilySpec::BuserRho { .. } => "buser_rho",
            FamilySpec::CapRhoT { .. } => "cap_rho_t",
            FamilySpec::BlowupPhi { .. } => "blowup_phi",
            FamilySpec::NeckGamma { .. } => "neck_gamma",
            FamilySpec::CylinderSigma {} => "cylinder_sigma",
        }
    }

    /// Radii (distances from the family center) that should be grid nodes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            FamilySpec::ConcentrationI { eps, .. }
            | FamilySpec::ConductivityIi { eps, .. }
            | FamilySpec::WittenIii { eps, .. }
            | FamilySpec::BuserSigma { eps, .. } => vec![*eps, 2.0 * eps],
            FamilySpec::BuserRho { eps, .. } => vec![*eps],
            FamilySpec::BlowupPhi { v_radius, shell, .. } => vec![*v_radius, v_radius + shell],
            FamilySpec::CapRhoT { .. } | FamilySpec::NeckGamma { .. } | FamilySpec::CylinderSigma {} => vec![],
        }
    }

    /// The parameter ε, when the family has one.
    pub fn eps(&self) -> Option<f64> {
        match self {
            FamilySpec::ConcentrationI { eps, .. }
            | FamilySpec::ConductivityIi { eps, .. }
            | FamilySpec::WittenIii { eps, .. }
            | FamilySpec::BuserSigma { eps, .. }
            | FamilySpec::BuserRho { eps, .. }
            | FamilySpec::BlowupPhi { eps, .. }
            | FamilySpec::NeckGamma { eps } => Some(*eps),
            _ => None,
        }
    }

    /// Same family with ε replaced (no-op for families without ε).
    pub fn with_eps(&self, e: f64) -> FamilySpec {
        let mut s = self.clone();
        match &mut s {
            FamilySpec::ConcentrationI { eps, .. }
            | FamilySpec::ConductivityIi { eps, .. }
            | FamilySpec::WittenIii { eps, .. }
            | FamilySpec::BuserSigma { eps, .. }
            | FamilySpec::BuserRho { eps, .. }
            | FamilySpec::BlowupPhi { eps, .. }
            | FamilySpec::NeckGamma { eps } => *eps = e,
            _ => {}
        }
        s
    }
}

/// A generated field plus the normalization constant solved for it (b_ε,
/// or the outer level of the blow-up family), when there is one.
#[derive(Debug, Clone)]
pub struct FamilyField {
    pub field: DensityField,
    pub constant: Option<f64>,
}

fn mismatch(spec: &FamilySpec, domain: &Domain) -> Error {
    Error::FamilyDomainMismatch {
        family: spec.name().to_string(),
        kind: domain.kind().name().to_string(),
    }
}

fn check_eps(eps: f64, hi: f64, inclusive: bool) -> Result<()> {
    let ok = eps > 0.0 && if inclusive { eps <= hi } else { eps < hi };
    if !ok {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, {hi})")));
    }
    Ok(())
}

/// Distance from node `i` to `center`, respecting periodicity. On reduced
/// kinds the only admissible center is the origin (pole), and the distance
/// is the radial or axial coordinate.
pub fn distance(domain: &Domain, i: usize, center: &[f64]) -> Result<f64> {
    let p = domain.nodes()[i];
    let c = |k: usize| center.get(k).copied().unwrap_or(0.0);
    Ok(match domain.kind() {
        DomainKind::RadialBall | DomainKind::WarpedProduct => {
            if center.iter().any(|&x| x != 0.0) {
                return Err(Error::InvalidGeometry(
                    "reduced models only support centers at the pole".into(),
                ));
            }
            p[0]
        }
        DomainKind::Interval => (p[0] - c(0)).abs(),
        DomainKind::Circle => {
            let l = domain.period().map_or(0.0, |q| q[0]);
            let d = (p[0] - c(0)).rem_euclid(l);
            d.min(l - d)
        }
        DomainKind::FlatTorus => {
            let per = domain.period().unwrap_or([0.0, 0.0]);
            let mut s = 0.0;
            for k in 0..2 {
                let d = (p[k] - c(k)).rem_euclid(per[k]);
                s += d.min(per[k] - d).powi(2);
            }
            s.sqrt()
        }
        DomainKind::Disc | DomainKind::TriangleMesh => {
            ((p[0] - c(0)).powi(2) + (p[1] - c(1)).powi(2) + (p[2] - c(2)).powi(2)).sqrt()
        }
    })
}

/// Continuous piecewise-linear profile: `inner` for d ≤ r1, `outer` for
/// d ≥ r2, linear in between.
fn ramp(d: f64, r1: f64, r2: f64, inner: f64, outer: f64) -> f64 {
    // Grid nodes placed on a break radius may carry a rounding error.
    let snap = 1e-10 * r2;
    if d <= r1 + snap {
        inner
    } else if d >= r2 - snap {
        outer
    } else {
        inner + (outer - inner) * (d - r1) / (r2 - r1)
    }
}

fn radial_only(spec: &FamilySpec, domain: &Domain) -> Result<usize> {
    match domain.kind() {
        DomainKind::RadialBall | DomainKind::Disc => Ok(domain.dimension()),
        _ => Err(mismatch(spec, domain)),
    }
}

/// Bisection for the level `b` making `∫ field(b) = target`, where the
/// integral is nondecreasing in `b`.
fn solve_level(domain: &Domain, target: f64, mut lo: f64, mut hi: f64, field: impl Fn(f64) -> Vec<f64>) -> Result<f64> {
    let mass = |b: f64| domain.integrate(&field(b));
    let mut grow = 0;
    while mass(hi) < target {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::InvalidParameter("normalization level diverges".into()));
        }
    }
    if mass(lo) > target {
        return Err(Error::InvalidParameter(
            "inner plateau already exceeds the prescribed total mass".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn make_density(domain: &Domain, spec: &FamilySpec) -> Result<DensityField> {
    Ok(make_density_detailed(domain, spec)?.field)
}

pub fn make_density_detailed(domain: &Domain, spec: &FamilySpec) -> Result<FamilyField> {
    let n = domain.dimension() as i32;
    let nn = domain.n_nodes();
    let dists = |center: &[f64]| -> Result<Vec<f64>> { (0..nn).map(|i| distance(domain, i, center)).collect() };
    let plain = |v: Vec<f64>| -> Result<FamilyField> {
        Ok(FamilyField {
            field: DensityField::new(domain, v)?,
            constant: None,
        })
    };
    match spec {
        FamilySpec::ConcentrationI { eps, center } => {
            check_eps(*eps, 0.5, false)?;
            let d = dists(center)?;
            let hi = eps.powi(-n);
            plain(d.iter().map(|&r| ramp(r, *eps, 2.0 * eps, hi, *eps)).collect())
        }
        FamilySpec::ConductivityIi { eps, center } => {
            check_eps(*eps, 0.5, false)?;
            let d = dists(center)?;
            let inner = eps.powi(5);
            let field = |b: f64| d.iter().map(|&r| ramp(r, *eps, 2.0 * eps, inner, b)).collect::<Vec<_>>();
            let b = solve_level(domain, domain.volume(), inner, 2.0, field)?;
            Ok(FamilyField {
                field: DensityField::new(domain, field(b))?,
                constant: Some(b),
            })
        }
        FamilySpec::WittenIii { eps, p, centers } => {
            check_eps(*eps, 0.5, false)?;
            if !(*p > 0.0) {
                return Err(Error::InvalidParameter(format!("exponent p = {p} must be positive")));
            }
            if centers.is_empty() {
                return Err(Error::InvalidParameter("witten_iii needs at least one center".into()));
            }
            let mut dmin = vec![f64::INFINITY; nn];
            for c in centers {
                for (m, d) in dmin.iter_mut().zip(dists(c)?) {
                    *m = m.min(d);
                }
            }
            for (a, ca) in centers.iter().enumerate() {
                for cb in &centers[a + 1..] {
                    let sep: f64 = ca.iter().zip(cb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    if sep < 8.0 * eps {
                        return Err(Error::InvalidParameter(
                            "witten_iii balls of radius 4ε must be disjoint".into(),
                        ));
                    }
                }
            }
            plain(dmin.iter().map(|&r| ramp(r, *eps, 2.0 * eps, eps.powi(-n), eps.powi(n))).collect())
        }
        FamilySpec::BuserSigma { eps, a } => {
            check_eps(*eps, 0.5, false)?;
            check_a(*a)?;
            radial_only(spec, domain)?;
            let d = dists(&[])?;
            let inner = eps.powf(-1.0 - a);
            let field = |b: f64| d.iter().map(|&r| ramp(r, *eps, 2.0 * eps, inner, b)).collect::<Vec<_>>();
            let b = solve_level(domain, domain.volume(), 0.0, 1.0, field)?;
            Ok(FamilyField {
                field: DensityField::new(domain, field(b))?,
                constant: Some(b),
            })
        }
        FamilySpec::BuserRho { eps, a } => {
            check_eps(*eps, 0.5, false)?;
            check_a(*a)?;
            radial_only(spec, domain)?;
            let d = dists(&[])?;
            let inner = eps.powf(-1.0 - a);
            let tol = 1e-12 * eps;
            let field = |b: f64| d.iter().map(|&r| if r <= eps + tol { inner } else { b }).collect::<Vec<_>>();
            let b = solve_level(domain, domain.volume(), 0.0, 1.0, field)?;
            Ok(FamilyField {
                field: DensityField::new(domain, field(b))?,
                constant: Some(b),
            })
        }
        FamilySpec::CapRhoT { t } => {
            if !(*t > 0.0) {
                return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
            }
            if radial_only(spec, domain)? != 2 {
                return Err(mismatch(spec, domain));
            }
            let d = dists(&[])?;
            plain(d.iter().map(|&r| 4.0 * t * t / (1.0 + t * t * r * r).powi(2)).collect())
        }
        FamilySpec::BlowupPhi { eps, v_radius, shell } => {
            check_eps(*eps, 1.0, false)?;
            if !(*v_radius > 0.0 && *shell > 0.0) {
                return Err(Error::InvalidParameter("blow-up radii must be positive".into()));
            }
            if !matches!(domain.kind(), DomainKind::Disc | DomainKind::RadialBall | DomainKind::TriangleMesh) {
                return Err(mismatch(spec, domain));
            }
            let d = dists(&[])?;
            let field =
                |c: f64| d.iter().map(|&r| ramp(r, *v_radius, v_radius + shell, *eps, c)).collect::<Vec<_>>();
            let c = solve_level(domain, domain.volume(), *eps, 2.0, field)?;
            if c > 2.0 {
                return Err(Error::InvalidParameter(
                    "set V is too large for a density bounded by 2".into(),
                ));
            }
            Ok(FamilyField {
                field: DensityField::new(domain, field(c))?,
                constant: Some(c),
            })
        }
        FamilySpec::NeckGamma { eps } => {
            check_eps(*eps, 1.0, true)?;
            if domain.kind() != DomainKind::WarpedProduct {
                return Err(mismatch(spec, domain));
            }
            let pinched = WarpProfile::Neck { eps: *eps };
            let open = WarpProfile::Neck { eps: 1.0 };
            let v = domain
                .nodes()
                .iter()
                .map(|p| {
                    let g1 = open.eval(p[0]);
                    if g1 > 0.0 {
                        pinched.eval(p[0]) / g1
                    } else {
                        1.0
                    }
                })
                .collect();
            plain(v)
        }
        FamilySpec::CylinderSigma {} => {
            let Some(WarpProfile::Neck { .. }) = domain.warp() else {
                return Err(mismatch(spec, domain));
            };
            let w = domain.warp().unwrap();
            let (lo, hi) = (PI / 2.0, PI / 2.0 + 4.0);
            let v = domain
                .nodes()
                .iter()
                .map(|p| {
                    let t = p[0];
                    if t >= lo && t <= hi {
                        w.eval(t).powi(1 - n)
                    } else {
                        1.0
                    }
                })
                .collect();
            plain(v)
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("a = {a} outside (0, 1)")));
    }
    Ok(())
}

/// Bracket for b_ε from the mass balance of the Buser-type σ family:
/// `(1 − 2ⁿε^{n−1−a})/(1 − 2ⁿεⁿ) ≤ b_ε ≤ (1 − ε^{n−1−a})/(1 − εⁿ)`.
pub fn buser_bracket(eps: f64, a: f64, n: usize) -> (f64, f64) {
    let n_f = n as f64;
    let p = n_f - 1.0 - a;
    let two_n = 2f64.powi(n as i32);
    (
        (1.0 - two_n * eps.powf(p)) / (1.0 - two_n * eps.powf(n_f)),
        (1.0 - eps.powf(p)) / (1.0 - eps.powf(n_f)),
    )
}

/// Conformal factor φ² for the blow-up construction in dimension two:
/// `φ² = (|M| / ∫ρ⁻¹) / ρ`, so that `ρφ²` is constant and `∫φ² = |M|`.
/// Returns the factor and the constant `c = |M| / ∫ρ⁻¹`.
pub fn blowup_conformal_factor(domain: &Domain, rho: &DensityField) -> Result<(Vec<f64>, f64)> {
    if domain.dimension() != 2 {
        return Err(Error::UnsupportedDimension(domain.dimension()));
    }
    let inv: Vec<f64> = rho.values().iter().map(|r| 1.0 / r).collect();
    let c = domain.volume() / domain.integrate(&inv);
    Ok((inv.iter().map(|v| c * v).collect(), c))
}

/// [`random_density`] driven by a ChaCha stream seeded with `seed`, so the
/// field is identical on every platform.
pub fn seeded_random_density(domain: &Domain, seed: u64, modes: usize, amplitude: f64) -> Result<DensityField> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_density(domain, &mut rng, modes, amplitude)
}

/// Smooth random density with mean one: `exp` of a random trigonometric
/// sum of a few low frequencies, scaled so that the log-amplitude is at most
/// `amplitude`. Periodic domains use frequencies compatible with the period,
/// so the field stays continuous across the seam.
pub fn random_density<R: rand::Rng + ?Sized>(
    domain: &Domain,
    rng: &mut R,
    modes: usize,
    amplitude: f64,
) -> Result<DensityField> {
    if modes == 0 || !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter("random density needs modes ≥ 1 and a finite amplitude".into()));
    }
    let dim = if domain.kind().is_one_dimensional() { 1 } else { 2 };
    let period = domain.period();
    let (lo, hi) = bounding_box(domain);
    let waves: Vec<([f64; 2], f64, f64)> = (0..modes)
        .map(|_| {
            let mut k = [0.0; 2];
            for (a, ka) in k.iter_mut().enumerate().take(dim) {
                *ka = match &period {
                    Some(p) => 2.0 * PI * rng.gen_range(-2i32..=2) as f64 / p[a],
                    None => PI * rng.gen_range(-2.0..2.0) / (hi[a] - lo[a]).max(f64::MIN_POSITIVE),
                };
            }
            (k, rng.gen_range(0.0..2.0 * PI), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let raw: Vec<f64> = domain
        .nodes()
        .iter()
        .map(|p| waves.iter().map(|(k, ph, c)| c * (k[0] * p[0] + k[1] * p[1] + ph).cos()).sum())
        .collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let field = DensityField::new(domain, raw.iter().map(|v| (scale * v).exp()).collect())?;
    field.normalize_mean(domain)
}

fn bounding_box(domain: &Domain) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in domain.nodes() {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

/// Test functions from the upper-bound constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestShape {
    /// 0 inside r/2, ramp to 1 on [r/2, r], 1 on [r, R], ramp to 0 on [R, 2R].
    Annulus {
        #[serde(default)]
        center: Vec<f64>,
        r: f64,
        big_r: f64,
    },
    /// 1 on B(center, radius), decaying linearly to 0 over `ramp`.
    Plateau {
        #[serde(default)]
        center: Vec<f64>,
        radius: f64,
        ramp: f64,
    },
    /// Tent on the j-th of the 2(k+1) sub-cylinders of length 1/(2(k+1)ε),
    /// starting at axial coordinate `start` (default: the cylinder start of
    /// the domain profile).
    CylinderTent {
        k: usize,
        j: usize,
        eps: f64,
        #[serde(default)]
        start: Option<f64>,
    },
}

/// Largest radius around `center` that stays inside the domain.
fn inner_radius(domain: &Domain, center: &[f64]) -> Result<f64> {
    match domain.kind() {
        DomainKind::FlatTorus => {
            let p = domain.period().unwrap();
            Ok(0.5 * p[0].min(p[1]))
        }
        DomainKind::Circle => Ok(0.5 * domain.period().unwrap()[0]),
        _ => {
            let b = domain.boundary_nodes();
            if b.is_empty() {
                return Ok(f64::INFINITY);
            }
            let mut m = f64::INFINITY;
            for &i in b {
                m = m.min(distance(domain, i, center)?);
            }
            Ok(m)
        }
    }
}

pub fn make_test_function(domain: &Domain, shape: &TestShape) -> Result<Vec<f64>> {
    let nn = domain.n_nodes();
    match shape {
        TestShape::Annulus { center, r, big_r } => {
            if !(*r > 0.0 && r < big_r) {
                return Err(Error::InvalidGeometry(format!("annulus needs 0 < r < R, got r={r}, R={big_r}")));
            }
            if 2.0 * big_r > inner_radius(domain, center)? * (1.0 + 1e-12) {
                return Err(Error::InvalidGeometry("2R exceeds the domain".into()));
            }
            (0..nn)
                .map(|i| {
                    let d = distance(domain, i, center)?;
                    Ok(if d <= r / 2.0 || d >= 2.0 * big_r {
                        0.0
                    } else if d <= *r {
                        2.0 * d / r - 1.0
                    } else if d <= *big_r {
                        1.0
                    } else {
                        2.0 - d / big_r
                    })
                })
                .collect()
        }
        TestShape::Plateau { center, radius, ramp: w } => {
            if !(*radius > 0.0 && *w > 0.0) {
                return Err(Error::InvalidGeometry("plateau radius and ramp must be positive".into()));
            }
            (0..nn)
                .map(|i| {
                    let d = distance(domain, i, center)?;
                    Ok((1.0 - (d - radius) / w).clamp(0.0, 1.0))
                })
                .collect()
        }
        TestShape::CylinderTent { k, j, eps, start } => {
            if !(*eps > 0.0) || *j >= 2 * (k + 1) {
                return Err(Error::InvalidGeometry(format!(
                    "cylinder tent needs eps > 0 and j < 2(k+1), got eps={eps}, j={j}"
                )));
            }
            let t0 = match (start, domain.warp()) {
                (Some(s), _) => *s,
                (None, Some(WarpProfile::Capsule { cap, .. })) => cap * PI / 2.0,
                (None, Some(WarpProfile::Neck { .. })) => PI / 2.0,
                (None, Some(_)) => 0.0,
                (None, None) => {
                    return Err(Error::InvalidGeometry("cylinder tent needs a warped domain".into()));
                }
            };
            let kk = (k + 1) as f64;
            let len = 1.0 / (2.0 * kk * eps);
            let a = t0 + *j as f64 * len;
            let (lo, hi) = domain
                .nodes()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[0]), h.max(p[0])));
            if a < lo - 1e-12 || a + len > hi + 1e-12 {
                return Err(Error::InvalidGeometry("tent support leaves the domain".into()));
            }
            let slope = 6.0 * kk * eps;
            Ok(domain
                .nodes()
                .iter()
                .map(|p| {
                    let s = p[0] - a;
                    if s <= 0.0 || s >= len {
                        0.0
                    } else if s <= len / 3.0 {
                        slope * s
                    } else if s <= 2.0 * len / 3.0 {
                        1.0
                    } else {
                        3.0 - slope * s
                    }
                    .clamp(0.0, 1.0)
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{build_domain, disc, interval, DomainDescriptor, Grading};

    fn ball(n: usize, cells: usize, bps: &[f64]) -> Domain {
        build_domain(&DomainDescriptor::RadialBall {
            dimension: n,
            radius: 1.0,
            n: cells,
            mode: 0,
            grading: Grading::uniform().with_breakpoints(bps.iter().copied()).focused([0.0], 0.1),
        })
        .unwrap()
    }

    #[test]
    fn buser_sigma_level_lies_in_bracket() {
        let spec = FamilySpec::BuserSigma { eps: 0.01, a: 0.5 };
        let d = ball(2, 200, &spec.breakpoints());
        let out = make_density_detailed(&d, &spec).unwrap();
        let b = out.constant.unwrap();
        let (lo, hi) = buser_bracket(0.01, 0.5, 2);
        assert!((lo - 0.600_24).abs() < 1e-4 && (hi - 0.900_09).abs() < 1e-4);
        assert!(b >= lo && b <= hi, "b = {b}");
        assert!((out.field.mean() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn buser_rho_mass_matches_ball_volume() {
        let spec = FamilySpec::BuserRho { eps: 0.02, a: 0.5 };
        let d = ball(2, 200, &spec.breakpoints());
        let f = make_density(&d, &spec).unwrap();
        assert!((d.integrate(f.values()) - PI).abs() < 1e-10);
    }

    #[test]
    fn cap_density_integrates_to_hemisphere() {
        let d = ball(2, 400, &[]);
        let f = make_density(&d, &FamilySpec::CapRhoT { t: 1.0 }).unwrap();
        assert!((d.integrate(f.values()) - 2.0 * PI).abs() < 0.002 * 2.0 * PI);
    }

    #[test]
    fn plateau_values_are_exact_on_nodes() {
        let spec = FamilySpec::ConcentrationI { eps: 0.05, center: vec![] };
        let d = ball(3, 100, &spec.breakpoints());
        let f = make_density(&d, &spec).unwrap();
        for (i, p) in d.nodes().iter().enumerate() {
            if p[0] <= 0.05 {
                assert!((f.values()[i] / 8000.0 - 1.0).abs() < 1e-14);
            }
            if p[0] >= 0.1 {
                assert_eq!(f.values()[i], 0.05);
            }
        }
    }

    #[test]
    fn incompatible_domain_is_reported() {
        let d = interval(0.0, 1.0, 10, &Grading::uniform()).unwrap();
        let e = make_density(&d, &FamilySpec::CapRhoT { t: 1.0 }).unwrap_err();
        assert!(matches!(e, Error::FamilyDomainMismatch { .. }));
        let e = make_density(&d, &FamilySpec::ConcentrationI { eps: 0.7, center: vec![] }).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter(_)));
    }

    #[test]
    fn annulus_geometry_checks() {
        let d = disc(1.0, 8, 16, &Grading::uniform()).unwrap();
        let bad = TestShape::Annulus { center: vec![], r: 0.2, big_r: 0.2 };
        assert!(matches!(make_test_function(&d, &bad), Err(Error::InvalidGeometry(_))));
        let far = TestShape::Annulus { center: vec![], r: 0.2, big_r: 0.6 };
        assert!(matches!(make_test_function(&d, &far), Err(Error::InvalidGeometry(_))));
        let ok = TestShape::Annulus { center: vec![], r: 0.2, big_r: 0.4 };
        let u = make_test_function(&d, &ok).unwrap();
        assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
