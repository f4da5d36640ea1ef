//! Transmon spectra by charge-basis diagonalization, and the inverse problem.
//!
//! Energies are frequencies in GHz throughout (`E / h`). The anharmonicity is
//! reported as `eta = f01 - f12`, positive in the transmon regime; the
//! conventional `alpha = f12 - f01` is its negative.

use serde::Serialize;
use thiserror::Error;

use crate::constants::{charging_energy_ghz, ELEMENTARY_CHARGE, GHZ, HBAR, PLANCK};
use crate::defaults;
use crate::solver::CapacitanceMatrix;
use crate::tridiag::SymTridiagonal;

/// Boundary population above which the charge basis is grown.
const BOUNDARY_POPULATION: f64 = 1e-12;
/// Largest charge-basis half-width tried by the auto-grow loop.
const MAX_CUTOFF: usize = 1000;
/// Ratio below which a warning about the charge regime is logged.
const TRANSMON_REGIME: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransmonError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("charge cutoff exceeded {0} without converging")]
    CutoffTooSmall(usize),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("fit landed at E_J/E_C = {0:.2}, outside the transmon regime")]
    Ambiguous(f64),
    #[error("critical current must be positive, got {0}")]
    NonPositive(f64),
    #[error("net `{0}` not in capacitance matrix")]
    MissingNet(String),
    #[error("total capacitance is not positive: {0:e} F")]
    NonPositiveCSigma(f64),
}

/// Josephson energy and an optional junction capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionParams {
    /// E_J / h, GHz.
    pub ej_ghz: f64,
    /// Critical current the energy came from, if any, A.
    pub critical_current: Option<f64>,
    /// Junction capacitance, F.
    pub c_j: f64,
}

impl JunctionParams {
    pub fn from_ej(ej_ghz: f64) -> Result<Self, TransmonError> {
        if !(ej_ghz > 0.0 && ej_ghz.is_finite()) {
            return Err(TransmonError::InvalidParams(format!("E_J must be > 0, got {ej_ghz}")));
        }
        Ok(Self {
            ej_ghz,
            critical_current: None,
            c_j: 0.0,
        })
    }

    pub fn from_critical_current(ic: f64) -> Result<Self, TransmonError> {
        let ej = ej_from_ic(ic)?;
        Ok(Self {
            ej_ghz: ej.ghz,
            critical_current: Some(ic),
            c_j: 0.0,
        })
    }

    pub fn with_capacitance(mut self, c_j: f64) -> Self {
        self.c_j = c_j;
        self
    }
}

/// Josephson energy from a critical current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JosephsonEnergy {
    pub joules: f64,
    pub ghz: f64,
    /// Set when `I_c` exceeds the junction sanity bound.
    pub out_of_regime: bool,
}

/// `E_J = hbar I_c / 2e`.
pub fn ej_from_ic(ic: f64) -> Result<JosephsonEnergy, TransmonError> {
    if !(ic > 0.0 && ic.is_finite()) {
        return Err(TransmonError::NonPositive(ic));
    }
    let joules = HBAR * ic / (2.0 * ELEMENTARY_CHARGE);
    let out_of_regime = ic > defaults::MAX_JUNCTION_CRITICAL_CURRENT;
    if out_of_regime {
        log::warn!(
            "critical current {ic:e} A exceeds the junction bound of {:e} A",
            defaults::MAX_JUNCTION_CRITICAL_CURRENT
        );
    }
    Ok(JosephsonEnergy {
        joules,
        ghz: joules / PLANCK / GHZ,
        out_of_regime,
    })
}

/// Capacitance network seen by the junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargingEnergy {
    /// Pad-to-pad capacitance, F.
    pub c12: f64,
    /// Capacitance of each pad to everything except the other pad, F.
    pub c1g: f64,
    pub c2g: f64,
    pub c_j: f64,
    pub c_sigma: f64,
    /// E_C / h, GHz.
    pub ec_ghz: f64,
}

/// `C_sigma = C_J + C_12 + C_1g C_2g / (C_1g + C_2g)` and `E_C = e^2 / 2 C_sigma`.
///
/// `C_ig` is the total capacitance of pad i minus its coupling to the other
/// pad, i.e. to ground nets, other nets and the outer boundary together.
pub fn ec_from_capacitance(
    cmat: &CapacitanceMatrix,
    pads: (&str, &str),
    c_j: f64,
) -> Result<ChargingEnergy, TransmonError> {
    let i = cmat
        .index(pads.0)
        .ok_or_else(|| TransmonError::MissingNet(pads.0.into()))?;
    let j = cmat
        .index(pads.1)
        .ok_or_else(|| TransmonError::MissingNet(pads.1.into()))?;
    let c = &cmat.entries;
    let c12 = -c[i][j];
    let c1g = c[i][i] + c[i][j];
    let c2g = c[j][j] + c[i][j];
    let series = if c1g + c2g != 0.0 {
        c1g * c2g / (c1g + c2g)
    } else {
        0.0
    };
    let c_sigma = c_j + c12 + series;
    if !(c_sigma > 0.0) {
        return Err(TransmonError::NonPositiveCSigma(c_sigma));
    }
    Ok(ChargingEnergy {
        c12,
        c1g,
        c2g,
        c_j,
        c_sigma,
        ec_ghz: charging_energy_ghz(c_sigma),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmonParams {
    /// E_J / h, GHz.
    pub ej: f64,
    /// E_C / h, GHz.
    pub ec: f64,
    /// Offset charge, in units of 2e.
    pub ng: f64,
    /// Initial charge-basis half-width; grown automatically when too small.
    pub cutoff: usize,
}

impl TransmonParams {
    pub fn new(ej: f64, ec: f64) -> Self {
        Self {
            ej,
            ec,
            ng: 0.0,
            cutoff: defaults::CHARGE_CUTOFF,
        }
    }

    pub fn with_ng(mut self, ng: f64) -> Self {
        self.ng = ng;
        self
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn ratio(&self) -> f64 {
        self.ej / self.ec
    }

    fn validate(&self) -> Result<(), TransmonError> {
        if !(self.ec > 0.0 && self.ec.is_finite()) {
            return Err(TransmonError::InvalidParams(format!("E_C must be > 0, got {}", self.ec)));
        }
        if !(self.ej >= 0.0 && self.ej.is_finite()) {
            return Err(TransmonError::InvalidParams(format!("E_J must be >= 0, got {}", self.ej)));
        }
        if !self.ng.is_finite() {
            return Err(TransmonError::InvalidParams("n_g must be finite".into()));
        }
        if self.cutoff == 0 {
            return Err(TransmonError::InvalidParams("cutoff must be >= 1".into()));
        }
        Ok(())
    }

    /// `H = 4 E_C (n - n_g)^2 - E_J/2 sum (|n><n+1| + h.c.)` on `n = -N..=N`.
    pub fn hamiltonian(&self, cutoff: usize) -> SymTridiagonal {
        let n = cutoff as i64;
        let diag = (-n..=n)
            .map(|k| 4.0 * self.ec * (k as f64 - self.ng).powi(2))
            .collect();
        let off = vec![-0.5 * self.ej; 2 * cutoff];
        SymTridiagonal::new(diag, off).expect("finite parameters")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmonSpectrum {
    /// Transition frequencies from the ground state, `f_k - f_0`, GHz.
    pub levels: Vec<f64>,
    pub f01: f64,
    pub f12: f64,
    /// `f01 - f12`, GHz.
    pub anharmonicity: f64,
    /// `|f01(n_g = 1/2) - f01(n_g = 0)|`, GHz.
    pub charge_dispersion: f64,
    /// Charge-basis half-width actually used.
    pub cutoff: usize,
}

/// Lowest `count` eigenvalues (absolute, GHz) with an automatically grown
/// charge basis.
fn lowest_levels(params: &TransmonParams, count: usize) -> Result<(Vec<f64>, usize), TransmonError> {
    params.validate()?;
    // Start above the charge states the lowest levels can reach.
    let mut cutoff = params.cutoff.max(count).max(params.ng.abs().ceil() as usize + count);
    loop {
        let h = params.hamiltonian(cutoff);
        let levels = h
            .lowest_eigenvalues(count)
            .map_err(|e| TransmonError::InvalidParams(e.to_string()))?;
        let top = *levels.last().unwrap();
        let v = h.eigenvector(top);
        let edge = v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1];
        if edge < BOUNDARY_POPULATION {
            return Ok((levels, cutoff));
        }
        if cutoff >= MAX_CUTOFF {
            return Err(TransmonError::CutoffTooSmall(MAX_CUTOFF));
        }
        cutoff = (cutoff + 10).min(MAX_CUTOFF);
    }
}

fn f01_at(params: &TransmonParams, ng: f64) -> Result<f64, TransmonError> {
    let (l, _) = lowest_levels(&params.with_ng(ng), 2)?;
    Ok(l[1] - l[0])
}

/// `|f01(n_g = 1/2) - f01(n_g = 0)|`, GHz.
pub fn charge_dispersion(params: &TransmonParams) -> Result<f64, TransmonError> {
    Ok((f01_at(params, 0.5)? - f01_at(params, 0.0)?).abs())
}

/// The lowest `count` (at least 3) levels at the given offset charge.
pub fn spectrum_levels(params: &TransmonParams, count: usize) -> Result<TransmonSpectrum, TransmonError> {
    let count = count.max(3);
    if params.ej < TRANSMON_REGIME * params.ec {
        log::warn!("E_J/E_C = {:.2} is below the transmon regime", params.ratio());
    }
    let (abs, cutoff) = lowest_levels(params, count)?;
    let levels: Vec<f64> = abs.iter().map(|e| e - abs[0]).collect();
    let f01 = levels[1];
    let f12 = levels[2] - levels[1];
    Ok(TransmonSpectrum {
        f01,
        f12,
        anharmonicity: f01 - f12,
        charge_dispersion: charge_dispersion(params)?,
        levels,
        cutoff,
    })
}

/// The lowest five levels.
pub fn spectrum(params: &TransmonParams) -> Result<TransmonSpectrum, TransmonError> {
    spectrum_levels(params, 5)
}

/// `(f01, f12)` at `n_g = 0` only, for the fitting loop.
fn f01_eta(ej: f64, ec: f64) -> Result<(f64, f64), TransmonError> {
    let (l, _) = lowest_levels(&TransmonParams::new(ej, ec), 3)?;
    let f01 = l[1] - l[0];
    Ok((f01, f01 - (l[2] - l[1])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmonFit {
    pub ej: f64,
    pub ec: f64,
    pub iterations: usize,
    /// Remaining mismatch in f01 and eta, Hz.
    pub residual_f01_hz: f64,
    pub residual_eta_hz: f64,
}

impl TransmonFit {
    pub fn ratio(&self) -> f64 {
        self.ej / self.ec
    }
}

/// Find `(E_J, E_C)` reproducing a measured `f01` and anharmonicity (GHz) by
/// damped Newton iteration with a finite-difference Jacobian.
pub fn fit_ej_ec(f01: f64, eta: f64) -> Result<TransmonFit, TransmonError> {
    if !(f01.is_finite() && eta.is_finite() && eta > 0.0 && eta < f01) {
        return Err(TransmonError::NoRoot(format!(
            "need 0 < eta < f01, got f01 = {f01} GHz, eta = {eta} GHz"
        )));
    }
    const STEP_TOL: f64 = 1e-6;
    const MAX_ITER: usize = 100;
    let mut ec = eta;
    let mut ej = (f01 + ec).powi(2) / (8.0 * ec);
    let residual = |ej: f64, ec: f64| -> Result<[f64; 2], TransmonError> {
        let (a, b) = f01_eta(ej, ec)?;
        Ok([a - f01, b - eta])
    };
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let mut r = residual(ej, ec)?;
    for it in 1..=MAX_ITER {
        let hj = 1e-6 * ej;
        let hc = 1e-6 * ec;
        let rj = residual(ej + hj, ec)?;
        let rc = residual(ej, ec + hc)?;
        let jac = [
            [(rj[0] - r[0]) / hj, (rc[0] - r[0]) / hc],
            [(rj[1] - r[1]) / hj, (rc[1] - r[1]) / hc],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(TransmonError::NoRoot("singular Jacobian".into()));
        }
        let dej = -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det;
        let dec = -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det;
        let mut lambda = 1.0;
        let (next, rn) = loop {
            let cand = (ej + lambda * dej, ec + lambda * dec);
            if cand.0 > 0.0 && cand.1 > 0.0 {
                let rn = residual(cand.0, cand.1)?;
                if norm(rn) < norm(r) || lambda < 1e-3 {
                    break (cand, rn);
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(TransmonError::NoRoot("line search failed".into()));
            }
        };
        let step = ((next.0 - ej).powi(2) + (next.1 - ec).powi(2)).sqrt();
        ej = next.0;
        ec = next.1;
        r = rn;
        if step < STEP_TOL && norm(r) < 1e-7 {
            if ej / ec < 5.0 {
                return Err(TransmonError::Ambiguous(ej / ec));
            }
            return Ok(TransmonFit {
                ej,
                ec,
                iterations: it,
                residual_f01_hz: r[0] * GHZ,
                residual_eta_hz: r[1] * GHZ,
            });
        }
    }
    Err(TransmonError::NoRoot(format!(
        "no convergence after {MAX_ITER} iterations (residual {:e} GHz)",
        norm(r)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::FEMTOFARAD;
    use crate::geometry::NetRole;

    #[test]
    fn josephson_energy_of_a_junction_and_a_bump() {
        // I_c / (4 pi e), evaluated independently.
        let oracle = |ic: f64| ic / (4.0 * std::f64::consts::PI * 1.602_176_634e-19) / 1e9;
        let j = ej_from_ic(29.4e-9).unwrap();
        assert!((j.ghz - oracle(29.4e-9)).abs() < 1e-12 * j.ghz);
        assert!((j.ghz - 14.6).abs() < 0.05);
        assert!(!j.out_of_regime);
        assert!((ej_from_ic(58.8e-9).unwrap().ghz / j.ghz - 2.0).abs() < 1e-14);
        let bump = ej_from_ic(10.001e-3).unwrap();
        assert!(bump.out_of_regime);
        assert!((bump.ghz / 4.97e6 - 1.0).abs() < 0.01);
        assert_eq!(ej_from_ic(0.0), Err(TransmonError::NonPositive(0.0)));
        assert!(ej_from_ic(-1.0).is_err());
    }

    fn two_pad(c12: f64, c1g: f64, c2g: f64) -> CapacitanceMatrix {
        CapacitanceMatrix::from_raw(
            vec!["a".into(), "b".into()],
            vec![NetRole::PadTop, NetRole::PadBottom],
            vec![vec![c12 + c1g, -c12], vec![-c12, c12 + c2g]],
        )
    }

    #[test]
    fn charging_energy_network() {
        let m = two_pad(86.1 * FEMTOFARAD, 0.0, 0.0);
        let e = ec_from_capacitance(&m, ("a", "b"), 0.0).unwrap();
        assert!((e.ec_ghz / 0.225 - 1.0).abs() < 1e-3, "{}", e.ec_ghz);
        let m = two_pad(50.0, 0.0, 20.0);
        assert_eq!(ec_from_capacitance(&m, ("a", "b"), 3.0).unwrap().c_sigma, 53.0);
        let m = two_pad(50.0, 30.0, 20.0);
        assert_eq!(ec_from_capacitance(&m, ("a", "b"), 0.0).unwrap().c_sigma, 62.0);
        let e1 = ec_from_capacitance(&two_pad(5e-14, 3e-14, 2e-14), ("a", "b"), 0.0).unwrap();
        let e2 = ec_from_capacitance(&two_pad(10e-14, 6e-14, 4e-14), ("a", "b"), 0.0).unwrap();
        assert!((e1.ec_ghz / e2.ec_ghz - 2.0).abs() < 1e-12);
        assert_eq!(
            ec_from_capacitance(&m, ("a", "x"), 0.0),
            Err(TransmonError::MissingNet("x".into()))
        );
        assert!(matches!(
            ec_from_capacitance(&two_pad(0.0, 0.0, 0.0), ("a", "b"), 0.0),
            Err(TransmonError::NonPositiveCSigma(_))
        ));
    }

    #[test]
    fn free_rotor_levels() {
        // E_J = 0: eigenvalues are 4 E_C (n - n_g)^2.
        let p = TransmonParams::new(0.0, 0.25).with_ng(0.2);
        let s = spectrum(&p).unwrap();
        // 4 E_C = 1 here, so the levels are (n - n_g)^2.
        let e = |n: f64| (n - 0.2f64).powi(2);
        let mut bare: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0].iter().map(|&n| e(n)).collect();
        bare.sort_by(f64::total_cmp);
        for k in 1..5 {
            assert!((s.levels[k] - (bare[k] - bare[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn free_rotor_dispersion_matches_parabolas() {
        // n_g = 0: f01 = 4 E_C (1 - 0). n_g = 1/2: degenerate ground, f01 = 0.
        let p = TransmonParams::new(0.0, 0.3);
        assert!((charge_dispersion(&p).unwrap() - 4.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn integer_offset_periodicity() {
        let p = TransmonParams::new(10.0, 0.3).with_ng(0.37);
        let a = spectrum(&p).unwrap();
        let b = spectrum(&p.with_ng(1.37)).unwrap();
        for (x, y) in a.levels.iter().zip(&b.levels) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cutoff_is_stable_and_grows() {
        let p = TransmonParams::new(14.6, 0.222);
        let a = spectrum(&p).unwrap();
        let b = spectrum(&p.with_cutoff(45)).unwrap();
        assert!((a.f01 - b.f01).abs() * GHZ < 1.0);
        assert!((a.anharmonicity - b.anharmonicity).abs() * GHZ < 1.0);
        let tiny = spectrum(&p.with_cutoff(2)).unwrap();
        assert!(tiny.cutoff > 2);
        assert!((tiny.f01 - a.f01).abs() * GHZ < 1.0);
    }

    #[test]
    fn levels_strictly_increase_and_eta_positive() {
        for ratio in [20.0, 50.0, 100.0] {
            let s = spectrum(&TransmonParams::new(0.2 * ratio, 0.2)).unwrap();
            assert!(s.levels.windows(2).all(|w| w[1] > w[0]));
            assert!(s.anharmonicity > 0.0);
        }
    }

    #[test]
    fn fit_round_trip() {
        let (f01, eta) = f01_eta(14.6, 0.222).unwrap();
        let fit = fit_ej_ec(f01, eta).unwrap();
        assert!((fit.ej - 14.6).abs() < 1e-4 * 14.6);
        assert!((fit.ec - 0.222).abs() < 1e-4 * 0.222);
        assert!(fit.residual_f01_hz.abs() < 1e3 && fit.residual_eta_hz.abs() < 1e3);
    }

    #[test]
    fn fit_preconditions() {
        assert!(matches!(fit_ej_ec(4.8, 4.9), Err(TransmonError::NoRoot(_))));
        assert!(matches!(fit_ej_ec(4.8, 0.0), Err(TransmonError::NoRoot(_))));
        assert!(matches!(fit_ej_ec(f64::NAN, 0.2), Err(TransmonError::NoRoot(_))));
    }

    #[test]
    fn invalid_params() {
        assert!(spectrum(&TransmonParams::new(1.0, 0.0)).is_err());
        assert!(spectrum(&TransmonParams::new(-1.0, 0.2)).is_err());
        assert!(JunctionParams::from_ej(0.0).is_err());
        let j = JunctionParams::from_critical_current(29.4e-9).unwrap().with_capacitance(1e-15);
        assert_eq!(j.c_j, 1e-15);
    }
}
