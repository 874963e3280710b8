//! Certificate runners: one entry point per inequality or construction,
//! each producing a [`CertificateReport`] with the computed quantities, the
//! checks that decide the verdict, and a sweep table.
//!
//! A failed verdict is a valid report. Errors are reserved for sub-module
//! failures and carry the sweep point that produced them.
//!
//! Trend kinds fit a least-squares line to `(ln ε, ln value)` and compare
//! the slope with the exponent of the construction.

use crate::cheeger::{cheeger_constant, CheegerMethod};
use crate::densities::{
    blowup_conformal_factor, buser_bracket, make_density, make_density_detailed, seeded_random_density, FamilySpec,
};
use crate::discretize::{
    build_domain, BoundaryCondition, DensityField, Domain, DomainDescriptor, DomainKind,
    Grading, WarpProfile,
};
use crate::eigen::SolveOptions;
use crate::error::{Error, Result};
use crate::extremal::{maximize_mu1, OptimizeOptions, Target};
use crate::hersch::hersch_trial_bound;
use crate::modal::{solve_modal, ModalSpectrum};
use crate::schur::{errors_nonincreasing, zerorho_convergence, Partition};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtLeast,
    AtMost,
}

/// One inequality `value ≥ bound` or `value ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub holds: bool,
    /// Signed distance to the bound, positive when the check holds.
    pub slack: f64,
}

impl Check {
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Check {
        let slack = value - bound;
        Check {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            holds: slack >= 0.0,
            slack,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Check {
        let slack = bound - value;
        Check {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            bound,
            holds: slack >= 0.0,
            slack,
        }
    }
}

/// One CSV record: `(sweep_param, k, value, residual, extra…)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub k: usize,
    pub value: f64,
    pub residual: f64,
    pub extra: BTreeMap<String, f64>,
}

impl SweepRow {
    fn new(param: f64, k: usize, value: f64, residual: f64) -> Self {
        SweepRow {
            param,
            k,
            value,
            residual,
            extra: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: String,
    /// The configuration that produced the report.
    pub inputs: serde_json::Value,
    pub quantities: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub rows: Vec<SweepRow>,
    pub verdict: Verdict,
    /// Smallest slack over all checks.
    pub margin: f64,
    pub notes: Vec<String>,
}

impl CertificateReport {
    fn new(cert: &Certificate) -> Self {
        CertificateReport {
            kind: cert.kind().to_string(),
            inputs: serde_json::to_value(cert).unwrap_or(serde_json::Value::Null),
            quantities: BTreeMap::new(),
            checks: Vec::new(),
            rows: Vec::new(),
            verdict: Verdict::Fail,
            margin: f64::NEG_INFINITY,
            notes: Vec::new(),
        }
    }

    fn quantity(&mut self, name: impl Into<String>, v: f64) {
        self.quantities.insert(name.into(), v);
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn finish(mut self) -> Self {
        self.margin = self.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        let ok = !self.checks.is_empty() && self.checks.iter().all(|c| c.holds);
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

// ---------------------------------------------------------------- fitting

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("a trend fit needs at least two matching points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("trend fit needs distinct sweep values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

fn push_slope_window(report: &mut CertificateReport, name: &str, slope: f64, expected: f64, tol: f64) {
    report.check(Check::at_least(format!("{name}_slope_min"), slope, expected - tol));
    report.check(Check::at_most(format!("{name}_slope_max"), slope, expected + tol));
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

// ---------------------------------------------------------------- field specs

/// Density given by a closed form of the first node coordinate (the axial
/// or radial coordinate on 1-D kinds), or by a named family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// `inside` where the coordinate is below `at`, `outside` elsewhere.
    Step { at: f64, inside: f64, outside: f64 },
    /// `a + b·|x|^p`.
    Power { a: f64, b: f64, p: f64 },
    /// `a + b·cos(k·x)`.
    Cosine { a: f64, b: f64, k: f64 },
    Family { spec: FamilySpec },
}

impl FieldSpec {
    pub fn build(&self, domain: &Domain) -> Result<DensityField> {
        let f = |g: &dyn Fn(f64) -> f64| DensityField::from_fn(domain, |p| g(p[0]));
        match self {
            FieldSpec::Constant { value } => DensityField::constant(domain, *value),
            FieldSpec::Step { at, inside, outside } => f(&|x| if x < *at { *inside } else { *outside }),
            FieldSpec::Power { a, b, p } => f(&|x| a + b * x.abs().powf(*p)),
            FieldSpec::Cosine { a, b, k } => f(&|x| a + b * (k * x).cos()),
            FieldSpec::Family { spec } => make_density(domain, spec),
        }
    }
}

// ---------------------------------------------------------------- configs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheegerCase {
    pub name: String,
    pub domain: DomainDescriptor,
    pub rho: FieldSpec,
    pub sigma: FieldSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheegerLowerConfig {
    pub cases: Vec<CheegerCase>,
}

impl Default for CheegerLowerConfig {
    fn default() -> Self {
        let interval = DomainDescriptor::Interval {
            a: 0.0,
            b: 1.0,
            n: 400,
            grading: Grading::uniform(),
        };
        let circle = DomainDescriptor::Circle {
            length: 2.0 * PI,
            n: 400,
        };
        let ball = DomainDescriptor::RadialBall {
            dimension: 2,
            radius: 1.0,
            n: 400,
            mode: 0,
            grading: Grading::uniform().with_breakpoints([0.1, 0.2]),
        };
        let one = FieldSpec::Constant { value: 1.0 };
        let case = |name: &str, d: &DomainDescriptor, rho: FieldSpec, sigma: FieldSpec| CheegerCase {
            name: name.to_string(),
            domain: d.clone(),
            rho,
            sigma,
        };
        CheegerLowerConfig {
            cases: vec![
                case("interval_constant", &interval, one.clone(), one.clone()),
                case(
                    "interval_rho_step",
                    &interval,
                    FieldSpec::Step { at: 0.5, inside: 3.0, outside: 0.5 },
                    one.clone(),
                ),
                case(
                    "interval_sigma_step",
                    &interval,
                    one.clone(),
                    FieldSpec::Step { at: 0.3, inside: 0.2, outside: 2.0 },
                ),
                case(
                    "interval_monotone_pair",
                    &interval,
                    FieldSpec::Power { a: 1.0, b: 1.0, p: 2.0 },
                    FieldSpec::Power { a: 1.0, b: 2.0, p: 1.0 },
                ),
                case("circle_constant", &circle, one.clone(), one.clone()),
                case(
                    "circle_rho_cosine",
                    &circle,
                    FieldSpec::Cosine { a: 1.0, b: 0.5, k: 1.0 },
                    one.clone(),
                ),
                case(
                    "circle_sigma_step",
                    &circle,
                    one.clone(),
                    FieldSpec::Step { at: PI, inside: 4.0, outside: 0.5 },
                ),
                case("disc_constant", &ball, one.clone(), one.clone()),
                case(
                    "disc_rho_decreasing",
                    &ball,
                    FieldSpec::Power { a: 2.0, b: -1.5, p: 2.0 },
                    one.clone(),
                ),
                case(
                    "disc_sigma_concentrated",
                    &ball,
                    one.clone(),
                    FieldSpec::Family {
                        spec: FamilySpec::BuserSigma { eps: 0.1, a: 0.5 },
                    },
                ),
            ],
        }
    }
}

/// Sweep of a concentration family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MuinfConfig {
    pub domain: DomainDescriptor,
    pub family: FamilySpec,
    pub eps: Vec<f64>,
    /// Eigenvalue index (μ_k).
    pub k: usize,
    /// Allowed slope deviation; defaults to 0.25 (0.5 for the Witten family).
    pub tolerance: Option<f64>,
}

impl Default for MuinfConfig {
    fn default() -> Self {
        MuinfConfig {
            domain: DomainDescriptor::RadialBall {
                dimension: 3,
                radius: 1.0,
                n: 400,
                mode: 0,
                grading: Grading::uniform().focused([0.0], 0.25),
            },
            family: FamilySpec::ConcentrationI {
                eps: 0.1,
                center: vec![],
            },
            eps: vec![0.1, 0.05, 0.02, 0.01],
            k: 1,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuserConfig {
    pub dimension: usize,
    pub a: f64,
    pub eps: Vec<f64>,
    pub cells: usize,
    pub grading_factor: f64,
    /// Relative tolerance on the eigenvalue floors.
    pub tolerance: f64,
}

impl Default for BuserConfig {
    fn default() -> Self {
        BuserConfig {
            dimension: 2,
            a: 0.5,
            eps: vec![0.05, 0.02, 0.01],
            cells: 400,
            grading_factor: 0.25,
            tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnboundConfig {
    pub domain: DomainDescriptor,
    pub v_radius: f64,
    pub shell: f64,
    pub eps: Vec<f64>,
    pub tolerance: f64,
}

impl Default for UnboundConfig {
    fn default() -> Self {
        UnboundConfig {
            domain: DomainDescriptor::Disc {
                radius: 1.0,
                rings: 24,
                sectors: 64,
                grading: Grading::uniform(),
            },
            v_radius: 0.5,
            shell: 0.1,
            eps: vec![0.1, 0.05, 0.02, 0.01],
            tolerance: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrogerConfig {
    pub domains: Vec<DomainDescriptor>,
    pub samples: usize,
    pub k_max: usize,
    /// Lower end of the index window used for the minimum.
    pub k_floor: usize,
    pub modes: usize,
    pub amplitude: f64,
    pub ratio_limit: f64,
    pub targets: Vec<Target>,
}

impl Default for KrogerConfig {
    fn default() -> Self {
        KrogerConfig {
            domains: vec![
                DomainDescriptor::FlatTorus {
                    lx: 1.0,
                    ly: 1.0,
                    nx: 24,
                    ny: 24,
                    grading_x: Grading::uniform(),
                    grading_y: Grading::uniform(),
                },
                DomainDescriptor::Disc {
                    radius: 1.0,
                    rings: 16,
                    sectors: 48,
                    grading: Grading::uniform(),
                },
            ],
            samples: 5,
            k_max: 20,
            k_floor: 5,
            modes: 4,
            amplitude: 1.0,
            ratio_limit: 10.0,
            targets: vec![Target::Rho, Target::Sigma],
        }
    }
}

/// Optimized μ₁ on capsules of growing length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfSupConfig {
    pub dimension: usize,
    pub eps: Vec<f64>,
    pub cap: f64,
    pub cells_per_unit: f64,
    pub tolerance: f64,
    pub optimizer: OptimizeOptions,
}

impl InfSupConfig {
    fn for_dimension(dimension: usize) -> Self {
        InfSupConfig {
            dimension,
            eps: vec![0.2, 0.1, 0.05],
            cap: 1.0,
            cells_per_unit: 40.0,
            tolerance: 0.25,
            optimizer: OptimizeOptions {
                max_iter: 300,
                ..OptimizeOptions::default()
            },
        }
    }
}

impl Default for InfSupConfig {
    fn default() -> Self {
        InfSupConfig::for_dimension(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallBigConfig {
    pub dimension: usize,
    pub eps: Vec<f64>,
    pub cells: usize,
    /// Required ratio λ₁(g_ε_first) / λ₁(g_ε_last).
    pub min_drop: f64,
    pub tolerance: f64,
}

impl Default for SmallBigConfig {
    fn default() -> Self {
        SmallBigConfig {
            dimension: 3,
            eps: vec![0.2, 0.1, 0.05],
            cells: 600,
            min_drop: 10.0,
            tolerance: 0.05,
        }
    }
}

/// Subset M₀ kept at full density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// First coordinate at most `at`.
    Below { at: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    fn contains(&self, p: &[f64; 3]) -> bool {
        match self {
            Region::Below { at } => p[0] <= at + 1e-12,
            Region::Ball { center, radius } => {
                let c = |k: usize| center.get(k).copied().unwrap_or(0.0);
                let d2: f64 = (0..3).map(|k| (p[k] - c(k)).powi(2)).sum();
                d2.sqrt() <= radius + 1e-12
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroRhoConfig {
    pub domain: DomainDescriptor,
    pub region: Region,
    pub rho: FieldSpec,
    pub eps: Vec<f64>,
    pub count: usize,
    /// Closed-form value of γ₁, when one is known.
    pub oracle: Option<f64>,
    pub tolerance: f64,
    /// Relative growth allowed between consecutive errors.
    pub slack: f64,
}

impl Default for ZeroRhoConfig {
    fn default() -> Self {
        ZeroRhoConfig {
            domain: DomainDescriptor::Interval {
                a: 0.0,
                b: 1.0,
                n: 400,
                grading: Grading::uniform(),
            },
            region: Region::Below { at: 0.5 },
            rho: FieldSpec::Constant { value: 1.0 },
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4],
            count: 3,
            oracle: Some(4.0 * PI * PI),
            tolerance: 0.01,
            slack: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarPoint {
    pub t: f64,
    pub domain: DomainDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerRun {
    pub domain: DomainDescriptor,
    #[serde(default)]
    pub options: OptimizeOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanarConfig {
    /// t = 1: the disc is a hemisphere, μ₁·⨍ρ = 4.
    pub hemisphere: PlanarPoint,
    /// Large t: the disc covers almost the whole sphere, μ₁·⨍ρ → 8.
    pub concentrated: PlanarPoint,
    pub hemisphere_tolerance: f64,
    pub lower_tolerance: f64,
    pub upper_tolerance: f64,
    pub random_samples: usize,
    pub random_modes: usize,
    pub random_amplitude: f64,
    pub optimizer: Option<OptimizerRun>,
    pub optimizer_tolerance: f64,
}

impl Default for PlanarConfig {
    fn default() -> Self {
        PlanarConfig {
            hemisphere: PlanarPoint {
                t: 1.0,
                domain: DomainDescriptor::Disc {
                    radius: 1.0,
                    rings: 40,
                    sectors: 96,
                    grading: Grading::uniform(),
                },
            },
            concentrated: PlanarPoint {
                t: 30.0,
                domain: DomainDescriptor::Disc {
                    radius: 1.0,
                    rings: 80,
                    sectors: 128,
                    grading: Grading::uniform().focused([0.0], 0.1),
                },
            },
            hemisphere_tolerance: 0.01,
            lower_tolerance: 0.03,
            upper_tolerance: 0.02,
            random_samples: 20,
            random_modes: 4,
            random_amplitude: 1.5,
            optimizer: Some(OptimizerRun {
                domain: DomainDescriptor::RadialBall {
                    dimension: 2,
                    radius: 1.0,
                    n: 400,
                    mode: 0,
                    grading: Grading::uniform(),
                },
                options: OptimizeOptions {
                    max_iter: 150,
                    ..OptimizeOptions::default()
                },
            }),
            optimizer_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogeneousConfig {
    pub domain: DomainDescriptor,
    pub targets: Vec<Target>,
    /// Log-amplitude of the random starting density (0 starts from 1).
    pub start_amplitude: f64,
    pub start_modes: usize,
    pub lower_tolerance: f64,
    pub upper_tolerance: f64,
    pub optimizer: OptimizeOptions,
}

impl Default for HomogeneousConfig {
    fn default() -> Self {
        HomogeneousConfig {
            domain: DomainDescriptor::FlatTorus {
                lx: 1.0,
                ly: 1.0,
                nx: 32,
                ny: 32,
                grading_x: Grading::uniform(),
                grading_y: Grading::uniform(),
            },
            targets: vec![Target::Rho, Target::Sigma],
            start_amplitude: 0.4,
            start_modes: 4,
            lower_tolerance: 0.05,
            upper_tolerance: 0.01,
            optimizer: OptimizeOptions {
                max_iter: 100,
                ..OptimizeOptions::default()
            },
        }
    }
}

/// A certificate request: the kind name is the serde tag.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    CheegerLower(CheegerLowerConfig),
    MuinfDecayI(MuinfConfig),
    MuinfDecayIi(MuinfConfig),
    MuinfDecayIii(MuinfConfig),
    BuserFailI(BuserConfig),
    BuserFailIi(BuserConfig),
    UnboundBlowup(UnboundConfig),
    KrogerTrend(KrogerConfig),
    InfsupRhoDecay(InfSupConfig),
    InfsupSigmaDecay(InfSupConfig),
    SmallBig(SmallBigConfig),
    ZerorhoConv(ZeroRhoConfig),
    PlanarSharp(PlanarConfig),
    HomogeneousEq(HomogeneousConfig),
}

impl Certificate {
    pub const KINDS: [&'static str; 14] = [
        "cheeger_lower",
        "muinf_decay_i",
        "muinf_decay_ii",
        "muinf_decay_iii",
        "buser_fail_i",
        "buser_fail_ii",
        "unbound_blowup",
        "kroger_trend",
        "infsup_rho_decay",
        "infsup_sigma_decay",
        "small_big",
        "zerorho_conv",
        "planar_sharp",
        "homogeneous_eq",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::CheegerLower(_) => "cheeger_lower",
            Certificate::MuinfDecayI(_) => "muinf_decay_i",
            Certificate::MuinfDecayIi(_) => "muinf_decay_ii",
            Certificate::MuinfDecayIii(_) => "muinf_decay_iii",
            Certificate::BuserFailI(_) => "buser_fail_i",
            Certificate::BuserFailIi(_) => "buser_fail_ii",
            Certificate::UnboundBlowup(_) => "unbound_blowup",
            Certificate::KrogerTrend(_) => "kroger_trend",
            Certificate::InfsupRhoDecay(_) => "infsup_rho_decay",
            Certificate::InfsupSigmaDecay(_) => "infsup_sigma_decay",
            Certificate::SmallBig(_) => "small_big",
            Certificate::ZerorhoConv(_) => "zerorho_conv",
            Certificate::PlanarSharp(_) => "planar_sharp",
            Certificate::HomogeneousEq(_) => "homogeneous_eq",
        }
    }

    /// The certificate with its default configuration.
    pub fn default_for(kind: &str) -> Result<Certificate> {
        Ok(match kind {
            "cheeger_lower" => Certificate::CheegerLower(Default::default()),
            "muinf_decay_i" => Certificate::MuinfDecayI(Default::default()),
            "muinf_decay_ii" => Certificate::MuinfDecayIi(MuinfConfig {
                family: FamilySpec::ConductivityIi {
                    eps: 0.1,
                    center: vec![],
                },
                ..Default::default()
            }),
            "muinf_decay_iii" => Certificate::MuinfDecayIii(MuinfConfig {
                domain: DomainDescriptor::FlatTorus {
                    lx: 1.0,
                    ly: 1.0,
                    nx: 80,
                    ny: 80,
                    grading_x: Grading::uniform().focused([], 0.25),
                    grading_y: Grading::uniform().focused([], 0.25),
                },
                family: FamilySpec::WittenIii {
                    eps: 0.02,
                    p: 1.0,
                    centers: vec![vec![0.25, 0.5], vec![0.75, 0.5]],
                },
                eps: vec![0.04, 0.02, 0.01, 0.005],
                ..Default::default()
            }),
            "buser_fail_i" => Certificate::BuserFailI(Default::default()),
            "buser_fail_ii" => Certificate::BuserFailIi(BuserConfig {
                tolerance: 0.05,
                ..Default::default()
            }),
            "unbound_blowup" => Certificate::UnboundBlowup(Default::default()),
            "kroger_trend" => Certificate::KrogerTrend(Default::default()),
            "infsup_rho_decay" => Certificate::InfsupRhoDecay(InfSupConfig::for_dimension(3)),
            "infsup_sigma_decay" => Certificate::InfsupSigmaDecay(InfSupConfig::for_dimension(2)),
            "small_big" => Certificate::SmallBig(Default::default()),
            "zerorho_conv" => Certificate::ZerorhoConv(Default::default()),
            "planar_sharp" => Certificate::PlanarSharp(Default::default()),
            "homogeneous_eq" => Certificate::HomogeneousEq(Default::default()),
            other => return Err(Error::InvalidParameter(format!("unknown certificate kind `{other}`"))),
        })
    }
}

/// Runs a certificate. `seed` drives every random choice (random densities
/// and starting points), so reports are reproducible.
pub fn run_certificate(cert: &Certificate, seed: u64) -> Result<CertificateReport> {
    let report = CertificateReport::new(cert);
    let report = match cert {
        Certificate::CheegerLower(c) => cheeger_lower(report, c)?,
        Certificate::MuinfDecayI(c) => muinf(report, c, Construction::I)?,
        Certificate::MuinfDecayIi(c) => muinf(report, c, Construction::Ii)?,
        Certificate::MuinfDecayIii(c) => muinf(report, c, Construction::Iii)?,
        Certificate::BuserFailI(c) => buser_i(report, c)?,
        Certificate::BuserFailIi(c) => buser_ii(report, c)?,
        Certificate::UnboundBlowup(c) => unbound(report, c)?,
        Certificate::KrogerTrend(c) => kroger(report, c, seed)?,
        Certificate::InfsupRhoDecay(c) => infsup(report, c, Target::Rho)?,
        Certificate::InfsupSigmaDecay(c) => infsup(report, c, Target::Sigma)?,
        Certificate::SmallBig(c) => small_big(report, c)?,
        Certificate::ZerorhoConv(c) => zerorho(report, c)?,
        Certificate::PlanarSharp(c) => planar(report, c, seed)?,
        Certificate::HomogeneousEq(c) => homogeneous(report, c, seed)?,
    };
    Ok(report.finish())
}

// ---------------------------------------------------------------- helpers

fn spectrum(domain: &Domain, rho: &DensityField, sigma: &DensityField, bc: BoundaryCondition, count: usize) -> Result<ModalSpectrum> {
    solve_modal(domain, rho, sigma, &bc, &SolveOptions::count(count))
}

/// `(μ_k, residual)` counted with multiplicity.
fn eigenvalue(domain: &Domain, rho: &DensityField, sigma: &DensityField, bc: BoundaryCondition, k: usize) -> Result<(f64, f64)> {
    let s = spectrum(domain, rho, sigma, bc, k)?;
    let e = s.entry_at(k).ok_or(Error::InvalidParameter(format!("spectrum has no index {k}")))?;
    Ok((e.value, e.residual))
}

fn family_centers(spec: &FamilySpec) -> Vec<Vec<f64>> {
    match spec {
        FamilySpec::ConcentrationI { center, .. } | FamilySpec::ConductivityIi { center, .. } => vec![center.clone()],
        FamilySpec::WittenIii { centers, .. } => centers.clone(),
        _ => vec![vec![]],
    }
}

/// Domain with the family's break radii inserted as grid points and, when
/// the descriptor asks for grading, focused on the family's centers.
pub fn family_domain(desc: &DomainDescriptor, spec: &FamilySpec) -> Result<Domain> {
    let mut radii = spec.breakpoints();
    radii.push(0.0);
    let centers = family_centers(spec);
    let coord = |c: &Vec<f64>, a: usize| c.get(a).copied().unwrap_or(0.0);
    let add = |g: &mut Grading, axis: usize, wrap: Option<f64>| {
        for c in &centers {
            let c0 = coord(c, axis);
            for r in &radii {
                for x in [c0 - r, c0 + r] {
                    let x = match wrap {
                        Some(l) => x.rem_euclid(l),
                        None => x,
                    };
                    g.breakpoints.push(x);
                }
            }
            if g.factor.is_some() && !g.focus.contains(&c0) {
                g.focus.push(c0);
            }
        }
    };
    let mut d = desc.clone();
    match &mut d {
        DomainDescriptor::FlatTorus {
            lx,
            ly,
            grading_x,
            grading_y,
            ..
        } => {
            add(grading_x, 0, Some(*lx));
            add(grading_y, 1, Some(*ly));
        }
        DomainDescriptor::Interval { grading, .. } => add(grading, 0, None),
        DomainDescriptor::Disc { grading, .. }
        | DomainDescriptor::RadialBall { grading, .. }
        | DomainDescriptor::WarpedProduct { grading, .. } => {
            grading.breakpoints.extend(radii.iter().copied().filter(|r| *r > 0.0));
            if grading.factor.is_some() && grading.focus.is_empty() {
                grading.focus.push(0.0);
            }
        }
        _ => {}
    }
    build_domain(&d)
}

fn dimension_of(desc: &DomainDescriptor, domain: &Domain) -> usize {
    match desc {
        DomainDescriptor::RadialBall { dimension, .. } | DomainDescriptor::WarpedProduct { dimension, .. } => *dimension,
        _ => domain.dimension(),
    }
}

fn at_eps<T: Send>(eps: &[f64], f: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    eps.par_iter()
        .map(|&e| f(e).map_err(|err| err.context(format!("sweep point eps = {e}"))))
        .collect()
}

fn ensure_eps(eps: &[f64], min_len: usize) -> Result<()> {
    if eps.len() < min_len || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "sweep needs at least {min_len} positive eps values"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- kinds

fn cheeger_lower(mut report: CertificateReport, cfg: &CheegerLowerConfig) -> Result<CertificateReport> {
    if cfg.cases.is_empty() {
        return Err(Error::InvalidParameter("cheeger_lower needs at least one case".into()));
    }
    let results: Vec<(f64, f64, f64, f64)> = cfg
        .cases
        .par_iter()
        .map(|c| {
            let run = || -> Result<_> {
                let d = build_domain(&c.domain)?;
                let rho = c.rho.build(&d)?;
                let sigma = c.sigma.build(&d)?;
                let (mu, res) = eigenvalue(&d, &rho, &sigma, BoundaryCondition::Neumann, 1)?;
                let h_ss = cheeger_constant(&d, &sigma, &sigma, &CheegerMethod::scan())?.value;
                let h_rs = cheeger_constant(&d, &rho, &sigma, &CheegerMethod::scan())?.value;
                Ok((mu, res, h_ss, h_rs))
            };
            run().map_err(|e| e.context(format!("case {}", c.name)))
        })
        .collect::<Result<_>>()?;
    for (i, (c, (mu, res, h_ss, h_rs))) in cfg.cases.iter().zip(results).enumerate() {
        let bound = 0.25 * h_ss * h_rs;
        report.check(Check::at_least(format!("{}:mu1_ge_quarter_hh", c.name), mu, bound));
        report.rows.push(
            SweepRow::new(i as f64, 1, mu, res)
                .with("h_sigma_sigma", h_ss)
                .with("h_rho_sigma", h_rs)
                .with("bound", bound),
        );
    }
    report.quantity("cases", cfg.cases.len() as f64);
    Ok(report)
}

#[derive(Clone, Copy)]
enum Construction {
    I,
    Ii,
    Iii,
}

fn muinf(mut report: CertificateReport, cfg: &MuinfConfig, which: Construction) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 2)?;
    if cfg.k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let p = match (&cfg.family, which) {
        (FamilySpec::ConcentrationI { .. }, Construction::I) | (FamilySpec::ConductivityIi { .. }, Construction::Ii) => 1.0,
        (FamilySpec::WittenIii { p, .. }, Construction::Iii) => *p,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "family `{}` does not belong to certificate `{}`",
                cfg.family.name(),
                report.kind
            )))
        }
    };
    let probe = build_domain(&cfg.domain)?;
    let n = dimension_of(&cfg.domain, &probe) as f64;
    let (expected, rate_bound, tol): (f64, Box<dyn Fn(f64) -> f64 + Sync>, f64) = match which {
        Construction::I => ((n - 2.0) / 2.0, Box::new(move |e: f64| 2f64.powf(n + 2.0) * e.powf((n - 2.0) / 2.0)), 0.25),
        Construction::Ii => (1.0, Box::new(move |e: f64| 2f64.powf(n + 2.0) * e), 0.25),
        Construction::Iii => {
            let x = (p + 1.0) * n - 2.0;
            (x, Box::new(move |e: f64| 2f64.powf(2.0 * n) * e.powf(x)), 0.5)
        }
    };
    let tol = cfg.tolerance.unwrap_or(tol);
    let rows = at_eps(&cfg.eps, |e| {
        let spec = cfg.family.with_eps(e);
        let d = family_domain(&cfg.domain, &spec)?;
        let f = make_density(&d, &spec)?;
        let one = DensityField::constant(&d, 1.0)?;
        let (rho, sigma) = match which {
            Construction::I => (f.clone(), one),
            Construction::Ii => (one, f.clone()),
            Construction::Iii => {
                let s = DensityField::new(&d, f.values().iter().map(|v| v.powf(p)).collect())?;
                (f.clone(), s)
            }
        };
        let (mu, res) = eigenvalue(&d, &rho, &sigma, BoundaryCondition::Neumann, cfg.k)?;
        Ok((mu, res, f.mean()))
    })?;
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let fit = fit_loglog(&cfg.eps, &values)?;
    for (&e, &(mu, res, mean)) in cfg.eps.iter().zip(&rows) {
        report.rows.push(
            SweepRow::new(e, cfg.k, mu, res)
                .with("rate_bound", rate_bound(e))
                .with("normalized", mu * mean),
        );
    }
    report.quantity("slope", fit.slope);
    report.quantity("expected_slope", expected);
    report.quantity("r_squared", fit.r_squared);
    push_slope_window(&mut report, "mu", fit.slope, expected, tol);
    Ok(report)
}

fn buser_domain(cfg: &BuserConfig, eps: f64) -> Result<Domain> {
    let g = Grading::uniform()
        .with_breakpoints([eps, 2.0 * eps])
        .focused([0.0], cfg.grading_factor);
    build_domain(&DomainDescriptor::RadialBall {
        dimension: cfg.dimension,
        radius: 1.0,
        n: cfg.cells,
        mode: 0,
        grading: g,
    })
}

fn buser_i(mut report: CertificateReport, cfg: &BuserConfig) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 2)?;
    let n = cfg.dimension as f64;
    let rows = at_eps(&cfg.eps, |e| {
        let d = buser_domain(cfg, e)?;
        let ff = make_density_detailed(&d, &FamilySpec::BuserSigma { eps: e, a: cfg.a })?;
        let sigma = ff.field;
        let b = ff.constant.unwrap_or(f64::NAN);
        let one = DensityField::constant(&d, 1.0)?;
        let h_1s = cheeger_constant(&d, &one, &sigma, &CheegerMethod::scan())?.value;
        let h_ss = cheeger_constant(&d, &sigma, &sigma, &CheegerMethod::scan())?.value;
        let (mu, res) = eigenvalue(&d, &one, &sigma, BoundaryCondition::Neumann, 1)?;
        let (lam_ball, _) = eigenvalue(&d, &one, &one, BoundaryCondition::Neumann, 1)?;
        Ok((h_1s, h_ss, mu, res, b, lam_ball))
    })?;
    let mut products = Vec::new();
    for (&e, &(h_1s, h_ss, mu, res, b, lam_ball)) in cfg.eps.iter().zip(&rows) {
        let chain = 4f64.powf(1.0 / n) * n * n * 2f64.powf(n - 1.0) * e.powf(cfg.a);
        let (lo, hi) = buser_bracket(e, cfg.a, cfg.dimension);
        let floor = b * lam_ball * (1.0 - cfg.tolerance);
        let tag = format!("eps={e}");
        report.check(Check::at_most(format!("{tag}:h_product_le_chain"), h_1s * h_ss, chain));
        report.check(Check::at_least(format!("{tag}:mu1_ge_b_lambda1"), mu, floor));
        report.check(Check::at_least(format!("{tag}:b_ge_bracket"), b, lo));
        report.check(Check::at_most(format!("{tag}:b_le_bracket"), b, hi));
        products.push(h_1s * h_ss);
        report.rows.push(
            SweepRow::new(e, 1, mu, res)
                .with("h_1_sigma", h_1s)
                .with("h_sigma_sigma", h_ss)
                .with("h_product", h_1s * h_ss)
                .with("chain_bound", chain)
                .with("b_eps", b)
                .with("lambda1_ball", lam_ball),
        );
    }
    // Only h_{σ,σ} is forced down like ε^a. The other factor is merely
    // bounded, and on moderate ε it still climbs toward its bound, so the
    // product slope is reported rather than judged.
    let fit = fit_loglog(&cfg.eps, &products)?;
    let ss: Vec<f64> = rows.iter().map(|r| r.1).collect();
    report.quantity("h_product_slope", fit.slope);
    report.quantity("h_sigma_sigma_slope", fit_loglog(&cfg.eps, &ss)?.slope);
    report.quantity("a", cfg.a);
    if (fit.slope - cfg.a).abs() > 0.25 {
        report.notes.push(format!(
            "h-product slope {:.3} is outside a ± 0.25 on this sweep; the bounded factor h_1σ has not saturated",
            fit.slope
        ));
    }
    Ok(report)
}

fn buser_ii(mut report: CertificateReport, cfg: &BuserConfig) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 1)?;
    let n = cfg.dimension as f64;
    let rows = at_eps(&cfg.eps, |e| {
        let d = buser_domain(cfg, e)?;
        let rho = make_density(&d, &FamilySpec::BuserRho { eps: e, a: cfg.a })?;
        let one = DensityField::constant(&d, 1.0)?;
        let (lam_d, res_d) = eigenvalue(&d, &rho, &one, BoundaryCondition::Dirichlet, 0)?;
        let (lam_star, _) = eigenvalue(&d, &one, &one, BoundaryCondition::Dirichlet, 0)?;
        let neu = spectrum(&d, &rho, &one, BoundaryCondition::Neumann, 2)?;
        let mu = neu.entry_at(1).ok_or(Error::InvalidParameter("missing μ₁".into()))?;
        let radial = neu.spectrum_of(0).and_then(|s| s.values.get(1).copied()).unwrap_or(f64::NAN);
        let tangential = neu.spectrum_of(1).and_then(|s| s.values.first().copied()).unwrap_or(f64::NAN);
        let h = cheeger_constant(&d, &rho, &one, &CheegerMethod::scan())?.value;
        Ok((lam_d, res_d, lam_star, mu.value, mu.residual, radial, tangential, h))
    })?;
    for (&e, &(lam_d, res_d, lam_star, mu, res, radial, tangential, h)) in cfg.eps.iter().zip(&rows) {
        let tag = format!("eps={e}");
        let quarter = 0.25 * lam_star;
        report.check(Check::at_least(
            format!("{tag}:dirichlet_ge_quarter_lambda_star"),
            lam_d,
            quarter * (1.0 - cfg.tolerance),
        ));
        report.check(Check::at_least(
            format!("{tag}:neumann_ge_floor"),
            mu,
            (n - 1.0).min(quarter) * (1.0 - cfg.tolerance),
        ));
        report.check(Check::at_most(format!("{tag}:h_le_n_eps_a"), h, n * e.powf(cfg.a)));
        report.rows.push(SweepRow::new(e, 0, lam_d, res_d).with("lambda_star", lam_star).with("dirichlet", 1.0));
        let mut row = SweepRow::new(e, 1, mu, res).with("h_rho_1", h);
        for (key, v) in [("radial_branch", radial), ("tangential_branch", tangential)] {
            if v.is_finite() {
                row = row.with(key, v);
            }
        }
        report.rows.push(row);
    }
    Ok(report)
}

fn unbound(mut report: CertificateReport, cfg: &UnboundConfig) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 2)?;
    let base = build_domain(&cfg.domain)?;
    let n = dimension_of(&cfg.domain, &base);
    if n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let one = DensityField::constant(&base, 1.0)?;
    let (lam0, _) = eigenvalue(&base, &one, &one, BoundaryCondition::Neumann, 1)?;
    let spec = FamilySpec::BlowupPhi {
        eps: cfg.eps[0],
        v_radius: cfg.v_radius,
        shell: cfg.shell,
    };
    let rows = at_eps(&cfg.eps, |e| {
        let d = family_domain(&cfg.domain, &spec.with_eps(e))?;
        let rho = make_density(&d, &spec.with_eps(e))?;
        let (phi2, c) = blowup_conformal_factor(&d, &rho)?;
        // In dimension two only the volume form sees the conformal factor;
        // on reduced models the factor is folded into the density instead.
        let (dg, r) = match d.conformal_rescale_2d(&phi2) {
            Ok(dg) => (dg, rho.clone()),
            Err(Error::UnsupportedDimension(_)) => {
                let v = rho.values().iter().zip(&phi2).map(|(a, b)| a * b).collect();
                (d.clone(), DensityField::new(&d, v)?)
            }
            Err(e) => return Err(e),
        };
        let one = DensityField::constant(&dg, 1.0)?;
        let (mu, res) = eigenvalue(&dg, &r, &one, BoundaryCondition::Neumann, 1)?;
        Ok((mu, res, c))
    })?;
    let nf = n as f64;
    let mut values = Vec::new();
    for (&e, &(mu, res, c)) in cfg.eps.iter().zip(&rows) {
        let bound = lam0 / (2f64.powf((nf - 2.0) / nf) * 10.0 * e.powf(2.0 / nf));
        report.check(Check::at_least(format!("eps={e}:mu1_ge_blowup_bound"), mu, bound));
        values.push(mu);
        report.rows.push(SweepRow::new(e, 1, mu, res).with("lower_bound", bound).with("c", c));
    }
    let fit = fit_loglog(&cfg.eps, &values)?;
    report.quantity("lambda1_base", lam0);
    report.quantity("slope", fit.slope);
    report.quantity("expected_slope", -2.0 / nf);
    push_slope_window(&mut report, "mu", fit.slope, -2.0 / nf, cfg.tolerance);
    Ok(report)
}

fn kroger(mut report: CertificateReport, cfg: &KrogerConfig, seed: u64) -> Result<CertificateReport> {
    if cfg.k_floor < 1 || cfg.k_floor > cfg.k_max || cfg.samples == 0 {
        return Err(Error::InvalidParameter("kroger_trend needs 1 ≤ k_floor ≤ k_max and samples ≥ 1".into()));
    }
    // Jobs are enumerated up front so that random draws do not depend on
    // scheduling.
    let mut jobs = Vec::new();
    for (di, desc) in cfg.domains.iter().enumerate() {
        for s in 0..cfg.samples {
            for &t in &cfg.targets {
                jobs.push((di, desc, s, t));
            }
        }
    }
    let results: Vec<Vec<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(di, desc, s, t)| {
            let run = || -> Result<Vec<(f64, f64)>> {
                let d = build_domain(desc)?;
                let f = seeded_random_density(&d, seed ^ ((di as u64) << 32) ^ ((s as u64) << 8), cfg.modes, cfg.amplitude)?;
                let one = DensityField::constant(&d, 1.0)?;
                let (rho, sigma) = match t {
                    Target::Rho => (f, one),
                    Target::Sigma => (one, f),
                };
                let spec = spectrum(&d, &rho, &sigma, BoundaryCondition::Neumann, cfg.k_max)?;
                let vals = spec.values(cfg.k_max);
                let res: Vec<f64> = (0..=cfg.k_max).map(|k| spec.entry_at(k).map_or(f64::NAN, |e| e.residual)).collect();
                Ok(vals.into_iter().zip(res).collect())
            };
            run().map_err(|e| e.context(format!("domain {di}, sample {s}, target {t:?}")))
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for ((di, desc, s, t), vals) in jobs.iter().zip(results) {
        let d = build_domain(desc)?;
        let n = dimension_of(desc, &d) as f64;
        let vol = d.volume();
        let norm: Vec<f64> = (1..=cfg.k_max)
            .map(|k| vals[k].0 * vol.powf(2.0 / n) / (k as f64).powf(2.0 / n))
            .collect();
        let max = norm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = norm[cfg.k_floor - 1..].iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = max / min;
        worst = worst.max(ratio);
        let tag = format!("domain={di}:sample={s}:{}", target_name(*t));
        report.check(Check::at_most(format!("{tag}:ratio"), ratio, cfg.ratio_limit));
        for (k, v) in norm.iter().enumerate() {
            report.rows.push(
                SweepRow::new(*s as f64, k + 1, vals[k + 1].0, vals[k + 1].1)
                    .with("domain", *di as f64)
                    .with("target_sigma", if *t == Target::Sigma { 1.0 } else { 0.0 })
                    .with("normalized", *v),
            );
        }
    }
    report.quantity("worst_ratio", worst);
    Ok(report)
}

fn target_name(t: Target) -> &'static str {
    match t {
        Target::Rho => "rho",
        Target::Sigma => "sigma",
    }
}

fn capsule(cfg: &InfSupConfig, eps: f64) -> Result<Domain> {
    let length = 1.0 / eps;
    let total = PI * cfg.cap + length;
    build_domain(&DomainDescriptor::WarpedProduct {
        dimension: cfg.dimension,
        profile: WarpProfile::Capsule { length, cap: cfg.cap },
        n: (total * cfg.cells_per_unit).ceil() as usize,
        mode: 0,
        grading: Grading::uniform(),
    })
}

fn infsup(mut report: CertificateReport, cfg: &InfSupConfig, target: Target) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 2)?;
    let n = cfg.dimension as f64;
    let expected = match target {
        Target::Rho => {
            if cfg.dimension < 3 {
                return Err(Error::UnsupportedDimension(cfg.dimension));
            }
            (n - 2.0) / n
        }
        Target::Sigma => 2.0 * (n - 1.0) / n,
    };
    let rows = at_eps(&cfg.eps, |e| {
        let d = capsule(cfg, e)?;
        let r = maximize_mu1(&d, target, &cfg.optimizer, None)?;
        Ok((r.best_value, r.history[0].value, d.volume(), r.history.len() - 1))
    })?;
    let normalized: Vec<f64> = rows.iter().map(|(v, _, vol, _)| v * vol.powf(2.0 / n)).collect();
    for (&e, (&(v, start, vol, steps), &nv)) in cfg.eps.iter().zip(rows.iter().zip(&normalized)) {
        report.rows.push(
            SweepRow::new(e, 1, nv, f64::NAN)
                .with("raw", v)
                .with("constant_density", start * vol.powf(2.0 / n))
                .with("volume", vol)
                .with("steps", steps as f64),
        );
    }
    let fit = fit_loglog(&cfg.eps, &normalized)?;
    report.quantity("slope", fit.slope);
    report.quantity("expected_slope", expected);
    report.notes.push(
        "values are volume-normalized radial-restricted lower bounds of the supremum over densities".into(),
    );
    let gaps: Vec<f64> = normalized.windows(2).map(|w| w[0] - w[1]).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    report.check(Check::at_least("monotone_decay", min_gap, 0.0));
    if !strictly_decreasing(&normalized) {
        report.notes.push("optimized values are not strictly decreasing".into());
    }
    report.check(Check::at_least("slope_min", fit.slope, expected - cfg.tolerance));
    Ok(report)
}

fn small_big(mut report: CertificateReport, cfg: &SmallBigConfig) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 2)?;
    let neck = |e: f64| {
        build_domain(&DomainDescriptor::WarpedProduct {
            dimension: cfg.dimension,
            profile: WarpProfile::Neck { eps: e },
            n: cfg.cells,
            mode: 0,
            grading: Grading::uniform(),
        })
    };
    let base = neck(1.0)?;
    let one = DensityField::constant(&base, 1.0)?;
    let (lam_base, _) = eigenvalue(&base, &one, &one, BoundaryCondition::Neumann, 1)?;
    let rows = at_eps(&cfg.eps, |e| {
        let d = neck(e)?;
        let one = DensityField::constant(&d, 1.0)?;
        let (lam, lres) = eigenvalue(&d, &one, &one, BoundaryCondition::Neumann, 1)?;
        let sigma = make_density(&d, &FamilySpec::CylinderSigma {})?;
        let (mu, res) = eigenvalue(&d, &one, &sigma, BoundaryCondition::Neumann, 1)?;
        Ok((lam, lres, mu, res, d.volume()))
    })?;
    for (&e, &(lam, lres, mu, res, vol)) in cfg.eps.iter().zip(&rows) {
        report.check(Check::at_least(
            format!("eps={e}:mu1_sigma_ge_lambda1_base"),
            mu,
            lam_base * (1.0 - cfg.tolerance),
        ));
        report.rows.push(SweepRow::new(e, 1, mu, res).with("lambda1_eps", lam).with("lambda1_residual", lres).with("volume", vol));
    }
    let drop = rows[0].0 / rows[rows.len() - 1].0;
    report.quantity("lambda1_base", lam_base);
    report.quantity("lambda1_drop", drop);
    report.check(Check::at_least("lambda1_drop", drop, cfg.min_drop));
    Ok(report)
}

fn zerorho(mut report: CertificateReport, cfg: &ZeroRhoConfig) -> Result<CertificateReport> {
    ensure_eps(&cfg.eps, 2)?;
    let d = build_domain(&cfg.domain)?;
    let part = Partition::from_predicate(&d, |p| cfg.region.contains(p))?;
    let rho = cfg.rho.build(&d)?;
    let rows = zerorho_convergence(&d, &part, &rho, &cfg.eps, cfg.count)?;
    for r in &rows {
        for (k, ((m, g), err)) in r.mu.iter().zip(&r.gamma).zip(&r.rel_err).enumerate() {
            report.rows.push(SweepRow::new(r.eps, k + 1, *m, f64::NAN).with("gamma", *g).with("rel_err", *err));
        }
    }
    let last = rows.last().expect("non-empty sweep");
    let gamma1 = last.gamma[0];
    report.quantity("gamma1", gamma1);
    report.check(Check::at_most("final_rel_err_vs_schur", last.rel_err[0], cfg.tolerance));
    if let Some(o) = cfg.oracle {
        let err = (last.mu[0] - o).abs() / o;
        report.quantity("oracle", o);
        report.check(Check::at_most("final_rel_err_vs_oracle", err, cfg.tolerance));
    }
    let worst_growth = rows
        .windows(2)
        .flat_map(|w| w[1].rel_err.iter().zip(&w[0].rel_err).map(|(b, a)| b / a.max(f64::MIN_POSITIVE)))
        .fold(0.0f64, f64::max);
    debug_assert_eq!(worst_growth <= 1.0 + cfg.slack, errors_nonincreasing(&rows, cfg.slack));
    report.quantity("worst_error_growth", worst_growth);
    report.check(Check::at_most("errors_nonincreasing", worst_growth, 1.0 + cfg.slack));
    Ok(report)
}

fn normalized_mu1(domain: &Domain, rho: &DensityField) -> Result<(f64, f64)> {
    let one = DensityField::constant(domain, 1.0)?;
    let (mu, res) = eigenvalue(domain, rho, &one, BoundaryCondition::Neumann, 1)?;
    Ok((mu * domain.integrate(rho.values()) / domain.volume(), res))
}

fn planar(mut report: CertificateReport, cfg: &PlanarConfig, seed: u64) -> Result<CertificateReport> {
    let point = |p: &PlanarPoint| -> Result<(f64, f64, f64)> {
        let d = build_domain(&p.domain)?;
        if d.dimension() != 2 {
            return Err(Error::UnsupportedDimension(d.dimension()));
        }
        let rho = make_density(&d, &FamilySpec::CapRhoT { t: p.t })?;
        let (v, res) = normalized_mu1(&d, &rho)?;
        let h = match d.kind() {
            DomainKind::RadialBall => f64::NAN,
            _ => hersch_trial_bound(&d, &rho)?.normalized_bound,
        };
        Ok((v, res, h))
    };
    let (v1, r1, h1) = point(&cfg.hemisphere).map_err(|e| e.context("hemisphere point"))?;
    let (v2, r2, h2) = point(&cfg.concentrated).map_err(|e| e.context("concentrated point"))?;
    let upper = 8.0 * (1.0 + cfg.upper_tolerance);
    report.check(Check::at_most("hemisphere_rel_err", (v1 - 4.0).abs() / 4.0, cfg.hemisphere_tolerance));
    report.check(Check::at_least("concentrated_lower", v2, 8.0 * (1.0 - cfg.lower_tolerance)));
    report.check(Check::at_most("concentrated_upper", v2, upper));
    report.rows.push(SweepRow::new(cfg.hemisphere.t, 1, v1, r1).with("hersch_bound", h1));
    report.rows.push(SweepRow::new(cfg.concentrated.t, 1, v2, r2).with("hersch_bound", h2));
    report.quantity("upper_cap", upper);

    if cfg.random_samples > 0 {
        let d = build_domain(&cfg.hemisphere.domain)?;
        let samples: Vec<(f64, f64, f64)> = (0..cfg.random_samples)
            .into_par_iter()
            .map(|s| {
                let run = || -> Result<_> {
                    let rho = seeded_random_density(&d, seed.wrapping_add(s as u64), cfg.random_modes, cfg.random_amplitude)?;
                    let one = DensityField::constant(&d, 1.0)?;
                    let (mu, res) = eigenvalue(&d, &rho, &one, BoundaryCondition::Neumann, 1)?;
                    let h = hersch_trial_bound(&d, &rho)?;
                    Ok((mu, res, h.bound))
                };
                run().map_err(|e| e.context(format!("random sample {s}")))
            })
            .collect::<Result<_>>()?;
        let mut violations = 0usize;
        let mut worst = f64::INFINITY;
        for (s, &(mu, res, h)) in samples.iter().enumerate() {
            // the trial space is a subspace of the discrete one, so the
            // bound holds up to the eigensolver tolerance
            let slack = (h - mu) / mu;
            worst = worst.min(slack);
            if slack < -1e-8 {
                violations += 1;
            }
            report.rows.push(SweepRow::new(s as f64, 1, mu, res).with("hersch_bound", h).with("random", 1.0));
        }
        report.quantity("hersch_violations", violations as f64);
        report.check(Check::at_least("hersch_bound_over_mu1", worst, -1e-8));
    }

    if let Some(opt) = &cfg.optimizer {
        let d = build_domain(&opt.domain)?;
        let r = maximize_mu1(&d, Target::Rho, &opt.options, None).map_err(|e| e.context("disc optimizer"))?;
        let v = r.best_value * r.best_field.mean();
        report.quantity("optimized_mu1", v);
        report.quantity("optimizer_steps", (r.history.len() - 1) as f64);
        report.check(Check::at_least("optimizer_lower", v, 8.0 * (1.0 - cfg.optimizer_tolerance)));
        report.check(Check::at_most("optimizer_le_cap", v, upper));
        report.rows.push(SweepRow::new(f64::INFINITY, 1, v, f64::NAN).with("optimized", 1.0));
    }
    Ok(report)
}

fn homogeneous(mut report: CertificateReport, cfg: &HomogeneousConfig, seed: u64) -> Result<CertificateReport> {
    let d = build_domain(&cfg.domain)?;
    let one = DensityField::constant(&d, 1.0)?;
    let (lam, lres) = eigenvalue(&d, &one, &one, BoundaryCondition::Neumann, 1)?;
    let exact = match &cfg.domain {
        DomainDescriptor::FlatTorus { lx, ly, .. } if (lx - ly).abs() <= 1e-12 * lx => Some((2.0 * PI / lx).powi(2)),
        _ => None,
    };
    let reference = exact.unwrap_or(lam);
    report.quantity("lambda1_constant", lam);
    report.quantity("reference", reference);
    report.rows.push(SweepRow::new(0.0, 1, lam, lres).with("constant", 1.0));
    let start = if cfg.start_amplitude > 0.0 {
        Some(seeded_random_density(&d, seed, cfg.start_modes, cfg.start_amplitude)?)
    } else {
        None
    };
    let results: Vec<_> = cfg
        .targets
        .par_iter()
        .map(|&t| {
            maximize_mu1(&d, t, &cfg.optimizer, start.as_ref())
                .map_err(|e| e.context(format!("optimizer target {}", target_name(t))))
        })
        .collect::<Result<_>>()?;
    let upper = reference * (1.0 + cfg.upper_tolerance);
    for (i, (t, r)) in cfg.targets.iter().zip(&results).enumerate() {
        let name = target_name(*t);
        report.quantity(format!("{name}_best"), r.best_value);
        report.quantity(format!("{name}_start"), r.history[0].value);
        report.check(Check::at_least(format!("{name}_lower"), r.best_value, reference * (1.0 - cfg.lower_tolerance)));
        report.check(Check::at_most(format!("{name}_le_cap"), r.best_value, upper));
        report.rows.push(
            SweepRow::new((i + 1) as f64, 1, r.best_value, f64::NAN)
                .with("start", r.history[0].value)
                .with("steps", (r.history.len() - 1) as f64)
                .with("target_sigma", if *t == Target::Sigma { 1.0 } else { 0.0 }),
        );
    }
    report.quantity("upper_cap", upper);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_fit_recovers_power_laws() {
        let x = [0.1, 0.05, 0.02, 0.01];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(1.5)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_loglog(&[1.0], &[1.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn check_slack_signs() {
        assert!(Check::at_least("a", 2.0, 1.0).holds);
        assert!(!Check::at_most("b", 2.0, 1.0).holds);
        assert_eq!(Check::at_most("b", 2.0, 1.0).slack, -1.0);
    }

    #[test]
    fn cheeger_lower_on_the_unit_interval() {
        let d = DomainDescriptor::Interval {
            a: 0.0,
            b: 1.0,
            n: 400,
            grading: Grading::uniform(),
        };
        let one = FieldSpec::Constant { value: 1.0 };
        let cert = Certificate::CheegerLower(CheegerLowerConfig {
            cases: vec![CheegerCase {
                name: "unit".into(),
                domain: d,
                rho: one.clone(),
                sigma: one,
            }],
        });
        let r = run_certificate(&cert, 0).unwrap();
        assert!(r.passed());
        // μ₁ = π², h = 2 for both constants
        assert!((r.margin - (PI * PI - 1.0)).abs() < 0.01, "{}", r.margin);
    }

    #[test]
    fn config_round_trips_through_json_with_kind_tag() {
        for kind in Certificate::KINDS {
            let c = Certificate::default_for(kind).unwrap();
            assert_eq!(c.kind(), kind);
            let text = serde_json::to_string(&c).unwrap();
            let back: Certificate = serde_json::from_str(&text).unwrap();
            assert_eq!(back, c);
        }
        let e = serde_json::from_str::<Certificate>(r#"{"kind":"cheeger_lower","bogus":1}"#);
        assert!(e.is_err());
        assert!(Certificate::default_for("nope").is_err());
    }

    #[test]
    fn family_mismatch_is_an_error_not_a_verdict() {
        let cert = Certificate::MuinfDecayIi(MuinfConfig::default());
        assert!(matches!(run_certificate(&cert, 0), Err(Error::InvalidParameter(_))));
    }
}
