//! Run configuration: a TOML file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::defaults;
use crate::geometry::{read_geometry, DeviceGeometry, FlipmonParams, NetRole, PlanarParams, PlatePairParams, ValidatedGeometry};
use crate::solver::{GridPolicy, PreconditionerKind, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    #[default]
    Flipmon,
    Planar,
    Plates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: defaults::SOLVER_TOLERANCE,
            max_iter: defaults::SOLVER_MAX_ITER,
            preconditioner: PreconditionerKind::Mic,
        }
    }
}

/// Overrides of the geometry's interface layers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterfaceOverride {
    pub thickness_nm: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitConfig {
    /// The two nets across the junction. Defaults to the pad_top and
    /// pad_bottom nets of the geometry.
    pub pads: Option<[String; 2]>,
    /// Junction capacitance, fF.
    pub c_j_ff: f64,
    /// Josephson energy used for predicted spectra, GHz.
    pub ej_ghz: f64,
}

impl Default for QubitConfig {
    fn default() -> Self {
        Self {
            pads: None,
            c_j_ff: 0.0,
            ej_ghz: defaults::SWEEP_EJ_GHZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

/// Derived quantities a sweep can report.
pub const SWEEP_OUTPUTS: [&str; 10] = [
    "C12_fF",
    "C1g_fF",
    "C2g_fF",
    "C_sigma_fF",
    "E_C_MHz",
    "E_C_plate_MHz",
    "p_Vacuum",
    "p_VacuumGapOnly",
    "f01_GHz",
    "eta_MHz",
];

pub const DEFAULT_SWEEP_OUTPUTS: [&str; 5] = ["C_sigma_fF", "E_C_MHz", "E_C_plate_MHz", "p_Vacuum", "eta_MHz"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Option<Vec<f64>>,
    pub range: Option<SweepRange>,
    pub outputs: Option<Vec<String>>,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                if r.steps < 2 {
                    return Err(CliError::Config("a sweep range needs steps >= 2".into()));
                }
                (0..r.steps)
                    .map(|i| r.min + (r.max - r.min) * i as f64 / (r.steps - 1) as f64)
                    .collect()
            }
            (Some(_), Some(_)) => return Err(CliError::Config("give sweep values or a range, not both".into())),
            (None, None) => return Err(CliError::Config("sweep needs values or a range".into())),
        };
        if pts.len() < 2 {
            return Err(CliError::Config(format!("a sweep needs at least 2 points, got {}", pts.len())));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep values must be finite".into()));
        }
        Ok(pts)
    }

    pub fn outputs(&self) -> Result<Vec<String>, CliError> {
        let outs: Vec<String> = match &self.outputs {
            Some(o) if !o.is_empty() => o.clone(),
            _ => DEFAULT_SWEEP_OUTPUTS.iter().map(|s| s.to_string()).collect(),
        };
        for o in &outs {
            if !SWEEP_OUTPUTS.contains(&o.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown sweep output `{o}` (choose from {})",
                    SWEEP_OUTPUTS.join(", ")
                )));
            }
        }
        Ok(outs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Geometry file; relative paths resolve against the config file.
    pub geometry: Option<PathBuf>,
    /// Template used when no geometry file is given.
    pub template: Option<TemplateKind>,
    /// Template parameter overrides, by name.
    pub params: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub deterministic: bool,
    pub mesh: GridPolicy,
    pub solver: SolverConfig,
    pub interface: InterfaceOverride,
    pub qubit: QubitConfig,
    pub sweep: Option<SweepSpec>,
    /// Slice planes such as `y=0`.
    pub slices: Vec<String>,
}

impl RunConfig {
    /// Read a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(g) = &cfg.geometry {
            if g.is_relative() {
                cfg.geometry = Some(base.join(g));
            }
        }
        Ok(cfg)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            tolerance: self.solver.tolerance,
            max_iter: self.solver.max_iter,
            deterministic: self.deterministic,
            preconditioner: self.solver.preconditioner,
        }
    }

    pub fn template_kind(&self) -> TemplateKind {
        self.template.unwrap_or_default()
    }

    /// Build the device from the geometry file or the template, with
    /// `overrides` applied on top of the configured template parameters.
    pub fn device(&self, overrides: &[(String, f64)]) -> Result<DeviceGeometry, CliError> {
        let mut g = match &self.geometry {
            Some(path) => {
                if !self.params.is_empty() || !overrides.is_empty() {
                    return Err(CliError::Config(
                        "template parameters cannot be combined with a geometry file".into(),
                    ));
                }
                if !path.exists() {
                    return Err(CliError::Config(format!("geometry file {} not found", path.display())));
                }
                read_geometry(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => {
                let params = self
                    .params
                    .iter()
                    .map(|(k, v)| (k.clone(), *v))
                    .chain(overrides.iter().cloned());
                build_template(self.template_kind(), params)?
            }
        };
        if let Some(t) = self.interface.thickness_nm {
            g.interface.thickness = t * crate::constants::NANOMETER;
        }
        if let Some(e) = self.interface.epsilon {
            g.interface.epsilon_layer = e;
        }
        Ok(g)
    }

    /// The junction nets: configured, or the pad_top / pad_bottom nets.
    pub fn pads(&self, g: &ValidatedGeometry) -> Result<(String, String), CliError> {
        if let Some(pads) = &self.qubit.pads {
            let [a, b] = pads.clone().map(|n| {
                g.net_index(&n)
                    .map(|i| g.electrical_nets()[i].name.clone())
                    .ok_or_else(|| CliError::Config(format!("pad net `{n}` not in geometry")))
            });
            let (a, b) = (a?, b?);
            if a == b {
                return Err(CliError::Config(format!("pads `{a}` and `{b}` are one conductor")));
            }
            return Ok((a, b));
        }
        let pick = |role: NetRole| -> Result<String, CliError> {
            g.nets_with_role(role)
                .first()
                .map(|&i| g.electrical_nets()[i].name.clone())
                .ok_or_else(|| CliError::Config(format!("geometry has no {role:?} net; set qubit.pads")))
        };
        Ok((pick(NetRole::PadTop)?, pick(NetRole::PadBottom)?))
    }
}

pub fn build_template(
    kind: TemplateKind,
    params: impl IntoIterator<Item = (String, f64)>,
) -> Result<DeviceGeometry, CliError> {
    let cfg = |e: crate::geometry::GeometryError| CliError::Config(e.to_string());
    match kind {
        TemplateKind::Flipmon => {
            let mut p = FlipmonParams::default();
            for (k, v) in params {
                p.set(&k, v).map_err(cfg)?;
            }
            p.build().map_err(cfg)
        }
        TemplateKind::Planar => {
            let mut p = PlanarParams::default();
            for (k, v) in params {
                p.set(&k, v).map_err(cfg)?;
            }
            p.build().map_err(cfg)
        }
        TemplateKind::Plates => {
            let mut p = PlatePairParams::default();
            for (k, v) in params {
                p.set(&k, v).map_err(cfg)?;
            }
            p.build().map_err(cfg)
        }
    }
}

/// `name=value`.
pub fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("invalid number in `{s}`"))?;
    Ok((k.trim().to_string(), v))
}

/// `min:max:steps`.
pub fn parse_range(s: &str) -> Result<SweepRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected MIN:MAX:STEPS, got `{s}`"));
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("invalid number `{x}`"));
    Ok(SweepRange {
        min: num(parts[0])?,
        max: num(parts[1])?,
        steps: parts[2].trim().parse().map_err(|_| format!("invalid step count `{}`", parts[2]))?,
    })
}
