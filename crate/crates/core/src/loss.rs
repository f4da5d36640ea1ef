//! Dielectric loss budgets from participation ratios, loss-tangent extraction
//! from measured T1, and coupling strengths from dispersive shifts.
//!
//! Frequencies are GHz, times are us and rates are 1/s unless noted.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::GHZ;
use crate::participation::RegionId;
use crate::records::MeasuredQubitRecord;

/// Convention used by [`g_from_chi`].
pub const CHI_CONVENTION: &str =
    "chi = g^2 alpha / (Delta (Delta + alpha)), alpha = -eta, Delta = f_q - f_r; g_alt assumes the quoted shift is 2 chi";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("loss tangent for {0} must be finite and >= 0, got {1}")]
    InvalidTangent(RegionId, f64),
    #[error("background rate must be finite and >= 0, got {0}")]
    InvalidBackground(f64),
    #[error("tangents for Vacuum and VacuumGapOnly would count the gap twice")]
    OverlappingRegions,
    #[error("frequency must be > 0, got {0} GHz")]
    InvalidFrequency(f64),
    #[error("record `{label}` has no {field}")]
    MissingValue { label: String, field: &'static str },
    #[error("participation of {0} must be > 0, got {1}")]
    NonPositiveParticipation(RegionId, f64),
    #[error("background rate {gamma0} /s exceeds the measured rate {measured} /s")]
    NegativeTangent { gamma0: f64, measured: f64 },
    #[error("both designs have the same participation; the system is singular")]
    SingularSystem,
    #[error("qubit `{0}` sits at a straddling point (Delta = 0 or Delta = eta)")]
    StraddlePoint(String),
    #[error("tangent table: {0}")]
    Parse(String),
}

/// Loss tangent per region, plus a region-independent background rate.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LossTangentTable {
    pub tangents: BTreeMap<RegionId, f64>,
    /// Extra decay rate `Gamma0`, 1/s.
    pub background_rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TangentFile {
    #[serde(default)]
    background_rate_per_s: f64,
    tan_delta: BTreeMap<String, f64>,
}

impl LossTangentTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, region: RegionId, tan_delta: f64) -> Self {
        self.tangents.insert(region, tan_delta);
        self
    }

    pub fn with_background(mut self, rate: f64) -> Self {
        self.background_rate = rate;
        self
    }

    pub fn validate(&self) -> Result<(), LossError> {
        for (&r, &t) in &self.tangents {
            if !(t.is_finite() && t >= 0.0) {
                return Err(LossError::InvalidTangent(r, t));
            }
        }
        if !(self.background_rate.is_finite() && self.background_rate >= 0.0) {
            return Err(LossError::InvalidBackground(self.background_rate));
        }
        if self.tangents.contains_key(&RegionId::Vacuum) && self.tangents.contains_key(&RegionId::VacuumGapOnly) {
            return Err(LossError::OverlappingRegions);
        }
        Ok(())
    }

    /// ```toml
    /// background_rate_per_s = 0.0
    /// [tan_delta]
    /// MA_t = 1.5e-2
    /// SM_b = 2e-3   # MS_b
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, LossError> {
        let file: TangentFile = toml::from_str(text).map_err(|e| LossError::Parse(e.to_string()))?;
        let mut table = Self::new().with_background(file.background_rate_per_s);
        for (name, t) in file.tan_delta {
            let r: RegionId = name.parse().map_err(LossError::Parse)?;
            table.tangents.insert(r, t);
        }
        table.validate()?;
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionLoss {
    pub region: RegionId,
    pub p: f64,
    pub tan_delta: f64,
    /// `p * tan_delta`.
    pub inv_q: f64,
    /// T1 if this were the only loss channel; `None` when lossless, us.
    pub t1_limit_us: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBudget {
    pub f01_ghz: f64,
    pub regions: Vec<RegionLoss>,
    /// Sum of the per-region `1/Q`.
    pub inv_q: f64,
    pub background_rate: f64,
    /// Predicted T1, us; `None` when there is no loss at all.
    pub t1_us: Option<f64>,
}

impl LossBudget {
    pub fn is_unbounded(&self) -> bool {
        self.t1_us.is_none()
    }

    pub fn quality_factor(&self) -> f64 {
        1.0 / self.inv_q
    }

    /// `region,p,tan_delta,inv_Q,T1_limit_us`, then a `total` row whose T1
    /// includes the background rate. Unbounded limits print `inf`.
    pub fn to_csv(&self) -> String {
        let t1 = |v: Option<f64>| v.map_or("inf".to_string(), |x| format!("{x:.6e}"));
        let mut out = String::from("region,p,tan_delta,inv_Q,T1_limit_us\n");
        for r in &self.regions {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{}\n",
                r.region.name(),
                r.p,
                r.tan_delta,
                r.inv_q,
                t1(r.t1_limit_us)
            ));
        }
        out.push_str(&format!("total,,,{:.6e},{}\n", self.inv_q, t1(self.t1_us)));
        out
    }
}

fn omega(f_ghz: f64) -> Result<f64, LossError> {
    if !(f_ghz > 0.0 && f_ghz.is_finite()) {
        return Err(LossError::InvalidFrequency(f_ghz));
    }
    Ok(2.0 * PI * f_ghz * GHZ)
}

/// `1/Q = sum_i p_i tan_i` and `T1 = 1 / (2 pi f01 / Q + Gamma0)`.
/// Regions without a tangent do not contribute.
pub fn predict_t1(
    participation: &BTreeMap<RegionId, f64>,
    tangents: &LossTangentTable,
    f01_ghz: f64,
) -> Result<LossBudget, LossError> {
    tangents.validate()?;
    let w = omega(f01_ghz)?;
    let regions: Vec<RegionLoss> = tangents
        .tangents
        .iter()
        .map(|(&region, &tan_delta)| {
            let p = participation.get(&region).copied().unwrap_or(0.0);
            let inv_q = p * tan_delta;
            RegionLoss {
                region,
                p,
                tan_delta,
                inv_q,
                t1_limit_us: (inv_q > 0.0).then(|| 1e6 / (w * inv_q)),
            }
        })
        .collect();
    let inv_q: f64 = regions.iter().map(|r| r.inv_q).sum();
    let rate = w * inv_q + tangents.background_rate;
    Ok(LossBudget {
        f01_ghz,
        regions,
        inv_q,
        background_rate: tangents.background_rate,
        t1_us: (rate > 0.0).then(|| 1e6 / rate),
    })
}

/// A loss tangent inferred by attributing all non-background loss to one
/// region. Other channels are ignored, so this is an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentEstimate {
    pub region: RegionId,
    pub tan_delta: f64,
    pub upper_bound: bool,
}

fn t1_rate(record: &MeasuredQubitRecord) -> Result<f64, LossError> {
    let t1 = record.t1.ok_or_else(|| LossError::MissingValue {
        label: record.label.clone(),
        field: "T1",
    })?;
    Ok(1e6 / t1)
}

/// `tan = (1/T1 - Gamma0) / (2 pi f_q p)`.
pub fn extract_tangent(
    record: &MeasuredQubitRecord,
    participation: &BTreeMap<RegionId, f64>,
    region: RegionId,
    background_rate: f64,
) -> Result<TangentEstimate, LossError> {
    let measured = t1_rate(record)?;
    let w = omega(record.f_q)?;
    let p = participation.get(&region).copied().unwrap_or(0.0);
    if !(p > 0.0) {
        return Err(LossError::NonPositiveParticipation(region, p));
    }
    if background_rate > measured {
        return Err(LossError::NegativeTangent {
            gamma0: background_rate,
            measured,
        });
    }
    Ok(TangentEstimate {
        region,
        tan_delta: (measured - background_rate) / (w * p),
        upper_bound: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub tan_delta: f64,
    /// Shared background rate, 1/s.
    pub background_rate: f64,
    /// Set when either solution component came out negative.
    pub negative: bool,
}

/// Solve `1/T1_k = Gamma0 + 2 pi f_k p_k tan` for two designs that share the
/// loss tangent of one region and the background rate.
pub fn two_design_decomposition(
    rec_a: &MeasuredQubitRecord,
    p_a: f64,
    rec_b: &MeasuredQubitRecord,
    p_b: f64,
) -> Result<Decomposition, LossError> {
    let (ga, gb) = (t1_rate(rec_a)?, t1_rate(rec_b)?);
    let (wa, wb) = (omega(rec_a.f_q)?, omega(rec_b.f_q)?);
    let (ka, kb) = (wa * p_a, wb * p_b);
    let det = ka - kb;
    if (p_a - p_b).abs() <= 1e-12 * p_a.abs().max(p_b.abs()) || det.abs() <= 1e-12 * ka.abs().max(kb.abs()) {
        return Err(LossError::SingularSystem);
    }
    let tan_delta = (ga - gb) / det;
    let background_rate = (ka * gb - kb * ga) / det;
    Ok(Decomposition {
        tan_delta,
        background_rate,
        negative: tan_delta < 0.0 || background_rate < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingEstimate {
    /// MHz.
    pub g: f64,
    /// `g / sqrt(2)`, for a quoted shift that is the full pull `2 chi`, MHz.
    pub g_alt: f64,
    pub convention: &'static str,
}

fn detunings(label: &str, f_q: f64, f_r: f64, eta: f64) -> Result<(f64, f64), LossError> {
    let delta = (f_q - f_r) * 1e3;
    let delta_alpha = delta - eta;
    // 1 kHz from a pole is treated as on it.
    if delta.abs() < 1e-3 || delta_alpha.abs() < 1e-3 {
        return Err(LossError::StraddlePoint(label.into()));
    }
    Ok((delta.abs(), delta_alpha.abs()))
}

/// `g = sqrt(|chi| |Delta| |Delta - eta| / eta)` in MHz.
pub fn g_from_chi(record: &MeasuredQubitRecord) -> Result<CouplingEstimate, LossError> {
    let missing = |field| LossError::MissingValue {
        label: record.label.clone(),
        field,
    };
    let eta = record.eta.ok_or_else(|| missing("eta"))?;
    let chi = record.chi.ok_or_else(|| missing("chi"))?;
    let (d, da) = detunings(&record.label, record.f_q, record.f_r, eta)?;
    let g = (chi.abs() * d * da / eta).sqrt();
    Ok(CouplingEstimate {
        g,
        g_alt: g / SQRT_2,
        convention: CHI_CONVENTION,
    })
}

/// Magnitude of the dispersive shift for coupling `g` (MHz).
pub fn chi_from_g(g: f64, f_q: f64, f_r: f64, eta: f64) -> Result<f64, LossError> {
    let (d, da) = detunings("", f_q, f_r, eta)?;
    Ok(g * g * eta / (d * da))
}
