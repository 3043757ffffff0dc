//! Machine-readable suite reports.

use std::time::Instant;

use serde::Serialize;

use crate::Result;

/// Direction in which a case residual is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes iff `residual < tolerance`.
    Below,
    /// Passes iff `residual > tolerance`.
    Above,
}

/// One checked quantity.
#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CaseRecord {
    /// Non-finite residuals never pass.
    pub fn new(id: impl Into<String>, residual: f64, tolerance: f64, bound: Bound, wall_time_s: f64) -> Self {
        let pass = residual.is_finite()
            && match bound {
                Bound::Below => residual < tolerance,
                Bound::Above => residual > tolerance,
            };
        Self {
            id: id.into(),
            residual,
            tolerance,
            bound,
            pass,
            wall_time_s,
            error: None,
        }
    }

    pub fn failed(id: impl Into<String>, tolerance: f64, bound: Bound, wall_time_s: f64, error: String) -> Self {
        Self {
            id: id.into(),
            residual: f64::NAN,
            tolerance,
            bound,
            pass: false,
            wall_time_s,
            error: Some(error),
        }
    }
}

/// Convention constants measured by calibration cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinnedConstants {
    /// `d^c` calibration: `dd^c|z|² = 2·c0 dx∧dy`.
    pub c0: f64,
    /// Fitted Cartan constant `d^c₊ω₊ = c·s_R([·,·],·)`, when measured.
    pub cartan_c: Option<f64>,
    /// Normalization of the imaginary part of the annulus form on `Λ_Z`.
    pub c_z: f64,
}

/// Outcome of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub config_digest: String,
    pub constants: PinnedConstants,
    pub pass: bool,
    pub failures: Vec<String>,
    pub cases: Vec<CaseRecord>,
}

impl SuiteReport {
    /// Recomputes `pass` and `failures` from the cases.
    pub fn finalize(&mut self) {
        self.failures = self.cases.iter().filter(|c| !c.pass).map(|c| c.id.clone()).collect();
        self.pass = self.failures.is_empty();
    }

    pub fn case(&self, id: &str) -> Option<&CaseRecord> {
        self.cases.iter().find(|c| c.id == id)
    }
}

/// Accumulates timed cases, applying an optional tolerance override to
/// [`Bound::Below`] cases.
#[derive(Debug, Default)]
pub struct Recorder {
    pub cases: Vec<CaseRecord>,
    tol_override: Option<f64>,
}

impl Recorder {
    pub fn new(tol_override: Option<f64>) -> Self {
        Self {
            cases: Vec::new(),
            tol_override,
        }
    }

    fn run(&mut self, id: String, tol: f64, bound: Bound, f: impl FnOnce() -> Result<f64>) -> Option<f64> {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(v) => {
                self.cases.push(CaseRecord::new(id, v, tol, bound, secs));
                Some(v)
            }
            Err(e) => {
                self.cases.push(CaseRecord::failed(id, tol, bound, secs, e.to_string()));
                None
            }
        }
    }

    /// Records a residual that must stay below `tol`.
    pub fn below(&mut self, id: impl Into<String>, tol: f64, f: impl FnOnce() -> Result<f64>) -> Option<f64> {
        let tol = self.tol_override.unwrap_or(tol);
        self.run(id.into(), tol, Bound::Below, f)
    }

    /// Records a residual with a tolerance the override does not touch.
    pub fn fixed(&mut self, id: impl Into<String>, tol: f64, f: impl FnOnce() -> Result<f64>) -> Option<f64> {
        self.run(id.into(), tol, Bound::Below, f)
    }

    /// Records a quantity that must exceed `bound`.
    pub fn above(&mut self, id: impl Into<String>, bound: f64, f: impl FnOnce() -> Result<f64>) -> Option<f64> {
        self.run(id.into(), bound, Bound::Above, f)
    }

    pub fn into_report(self, suite: &str, seed: u64, constants: PinnedConstants) -> SuiteReport {
        let mut rep = SuiteReport {
            suite: suite.to_string(),
            seed,
            config_digest: String::new(),
            constants,
            pass: false,
            failures: Vec::new(),
            cases: self.cases,
        };
        rep.finalize();
        rep
    }
}
