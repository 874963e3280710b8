//! Versioned run configuration shared by the command-line runner and any
//! other front end. Parsing is strict: unknown fields are rejected so that
//! typos surface as schema errors instead of silently using defaults.

use crate::certify::{Certificate, FieldSpec};
use crate::cheeger::CheegerMethod;
use crate::densities::FamilySpec;
use crate::discretize::{BoundaryCondition, DomainDescriptor};
use crate::eigen::SolveOptions;
use crate::extremal::{OptimizeOptions, Target};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Cheeger,
    Family,
    Certify,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Cheeger => "cheeger",
            Command::Family => "family",
            Command::Certify => "certify",
            Command::Optimize => "optimize",
        }
    }
}

/// Which weight a family sweep replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyRole {
    #[default]
    Rho,
    Sigma,
    /// ρ = σ = the family field.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySweep {
    pub spec: FamilySpec,
    #[serde(default)]
    pub role: FamilyRole,
    /// ε values; empty runs the spec once as written.
    #[serde(default)]
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub target: Target,
    #[serde(default)]
    pub options: OptimizeOptions,
    /// Log-amplitude of a seeded random starting density; 0 starts from 1.
    #[serde(default)]
    pub start_amplitude: f64,
    #[serde(default = "default_modes")]
    pub start_modes: usize,
}

fn default_modes() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    /// Optional; when present it must agree with the command being run.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub domain: Option<DomainDescriptor>,
    #[serde(default)]
    pub rho: Option<FieldSpec>,
    #[serde(default)]
    pub sigma: Option<FieldSpec>,
    #[serde(default)]
    pub boundary: BoundaryCondition,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub cheeger: Option<CheegerMethod>,
    #[serde(default)]
    pub family: Option<FamilySweep>,
    #[serde(default)]
    pub certificate: Option<Certificate>,
    #[serde(default)]
    pub optimize: Option<OptimizeSection>,
}

/// A configuration that parsed but cannot drive the requested command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigIssue {}

fn issue(field: &str, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Checks the semantic requirements of `command`. `seed` is the
    /// effective seed after any environment override.
    pub fn validate(&self, command: Command, seed: Option<u64>) -> Result<(), ConfigIssue> {
        if self.spec_version != SPEC_VERSION {
            return Err(issue(
                "spec_version",
                format!("unsupported version {}, expected {SPEC_VERSION}", self.spec_version),
            ));
        }
        if let Some(c) = self.command {
            if c != command {
                return Err(issue(
                    "command",
                    format!("config is for `{}` but `{}` was requested", c.name(), command.name()),
                ));
            }
        }
        let need_domain = || self.domain.as_ref().map(|_| ()).ok_or(issue("domain", "required by this command"));
        match command {
            Command::Solve | Command::Cheeger => need_domain()?,
            Command::Family => {
                need_domain()?;
                let f = self.family.as_ref().ok_or(issue("family", "required by the family command"))?;
                if f.eps.iter().any(|e| !(*e > 0.0)) {
                    return Err(issue("family.eps", "sweep values must be positive"));
                }
            }
            Command::Certify => {
                self.certificate
                    .as_ref()
                    .ok_or(issue("certificate", "required by the certify command"))?;
            }
            Command::Optimize => {
                need_domain()?;
                self.optimize
                    .as_ref()
                    .ok_or(issue("optimize", "required by the optimize command"))?;
                if seed.is_none() {
                    return Err(issue("seed", "optimize runs need a seed (config or SPECWEIGHTS_SEED)"));
                }
            }
        }
        if self.solver.count == 0 {
            return Err(issue("solver.count", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Result<RunConfig> {
        serde_json::from_str(s)
    }

    #[test]
    fn minimal_solve_config() {
        let c = parse(r#"{"spec_version":1,"domain":{"kind":"interval","n":400}}"#).unwrap();
        assert!(c.validate(Command::Solve, None).is_ok());
        assert_eq!(c.validate(Command::Certify, None).unwrap_err().field, "certificate");
    }

    #[test]
    fn version_and_seed_rules() {
        let c = parse(r#"{"spec_version":2,"domain":{"kind":"interval","n":8}}"#).unwrap();
        assert_eq!(c.validate(Command::Solve, None).unwrap_err().field, "spec_version");
        let c = parse(
            r#"{"spec_version":1,"domain":{"kind":"interval","n":8},"optimize":{"target":"rho"}}"#,
        )
        .unwrap();
        assert_eq!(c.validate(Command::Optimize, None).unwrap_err().field, "seed");
        assert!(c.validate(Command::Optimize, Some(3)).is_ok());
    }

    #[test]
    fn unknown_fields_and_families_are_rejected() {
        assert!(parse(r#"{"spec_version":1,"colour":3}"#).is_err());
        let e = parse(r#"{"spec_version":1,"family":{"spec":{"family":"no_such_family","eps":0.1}}}"#).unwrap_err();
        assert!(e.to_string().contains("no_such_family"), "{e}");
    }
}
