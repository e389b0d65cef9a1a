use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticCoefficients, Field, Grid1D, SpectralBasis};
use crate::evolution::{SourceTerm, TimeQuadrature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Forward,
    Backward,
    MlTable,
    Stability,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientPreset {
    Constant {
        a11: f64,
        b1: f64,
        c: f64,
    },
    /// a₁₁ = a0 + a1·x/ℓ
    Affine {
        a0: f64,
        a1: f64,
        b1: f64,
        c: f64,
    },
    /// a₁₁ = a11·(1 + amplitude·sin(2πkx/ℓ)), b₁ = b1·cos(πx/ℓ)
    SinePerturbed {
        a11: f64,
        amplitude: f64,
        wavenumber: u32,
        b1: f64,
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourcePreset {
    None,
    /// F = amplitude·sin(kπx/ℓ)·(1 + rate·t)
    Sine {
        mode: u32,
        amplitude: f64,
        #[serde(default)]
        rate: f64,
        epsilon: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataPreset {
    /// amplitude·sin(kπx/ℓ)
    Sine { mode: u32, amplitude: f64 },
    /// the discrete eigenvector φ_index of A₀ (0-based)
    Eigenmode { index: usize },
    /// amplitude·x(ℓ − x)·e^{x}
    Bump { amplitude: f64 },
    /// x,value rows as written by the forward mode, boundary rows included
    Csv { path: PathBuf },
}

fn default_length() -> f64 {
    1.0
}

fn default_samples() -> usize {
    50
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "T1", default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(rename = "T2", default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    pub coefficients: CoefficientPreset,
    pub source: SourcePreset,
    pub data: DataPreset,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub seed: u64,
    /// random samples for the stability mode
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub quadrature: TimeQuadrature,
    /// keep only this many modes of S(T)⁻¹b in the backward mode
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_cutoff: Option<usize>,
}

/// A configuration problem, tied to the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.reason)
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.to_string();
            // a missing field is reported at its parent
            let key = match msg.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
                Some(field) if path == "." => field.to_string(),
                Some(field) => format!("{path}.{field}"),
                None => path,
            };
            bad(&key, msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(bad("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(bad("T", format!("{} must be positive", self.horizon)));
        }
        if self.n < 2 {
            return Err(bad("N", format!("{} must be at least 2", self.n)));
        }
        if self.m < 1 {
            return Err(bad("M", "must be at least 1"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(bad("length", format!("{} must be positive", self.length)));
        }
        match (self.t1, self.t2) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                if !(a > 0.0 && b > 0.0 && a != b) {
                    return Err(bad("T1", "T1 and T2 must be positive and distinct"));
                }
            }
            (Some(_), None) => return Err(bad("T2", "T1 is set but T2 is missing")),
            (None, Some(_)) => return Err(bad("T1", "T2 is set but T1 is missing")),
        }
        if self.samples < 2 {
            return Err(bad("samples", "need at least 2"));
        }
        if let Some(k) = self.spectral_cutoff {
            if k == 0 || k > self.n {
                return Err(bad("spectral_cutoff", format!("{k} is outside 1..=N")));
            }
        }
        self.ellipticity()?;
        match &self.source {
            SourcePreset::None => {}
            SourcePreset::Sine { mode, epsilon, .. } => {
                if *mode == 0 {
                    return Err(bad("source.mode", "must be at least 1"));
                }
                if !(*epsilon > 0.0 && *epsilon <= 1.0) {
                    return Err(bad("source.epsilon", format!("{epsilon} is outside (0, 1]")));
                }
            }
        }
        match &self.data {
            DataPreset::Sine { mode: 0, .. } => return Err(bad("data.mode", "must be at least 1")),
            DataPreset::Eigenmode { index } if *index >= self.n => {
                return Err(bad("data.index", format!("{index} is outside 0..N")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Lower bound of a₁₁ over the domain.
    fn ellipticity(&self) -> Result<f64, ConfigError> {
        let kappa = match self.coefficients {
            CoefficientPreset::Constant { a11, .. } => a11,
            CoefficientPreset::Affine { a0, a1, .. } => a0.min(a0 + a1),
            CoefficientPreset::SinePerturbed { a11, amplitude, .. } => a11 * (1.0 - amplitude.abs()),
        };
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(bad("coefficients", format!("a11 is not uniformly positive (lower bound {kappa})")));
        }
        Ok(kappa)
    }

    pub fn coefficients(&self) -> Result<EllipticCoefficients, ConfigError> {
        let kappa = self.ellipticity()?;
        let l = self.length;
        Ok(match self.coefficients {
            CoefficientPreset::Constant { a11, b1, c } => EllipticCoefficients::constant(a11, b1, c),
            CoefficientPreset::Affine { a0, a1, b1, c } => {
                EllipticCoefficients::new(move |x| a0 + a1 * x / l, move |_| b1, move |_| c, kappa)
            }
            CoefficientPreset::SinePerturbed {
                a11,
                amplitude,
                wavenumber,
                b1,
                c,
            } => {
                let k = f64::from(wavenumber);
                EllipticCoefficients::new(
                    move |x| a11 * (1.0 + amplitude * (2.0 * PI * k * x / l).sin()),
                    move |x| b1 * (PI * x / l).cos(),
                    move |_| c,
                    kappa,
                )
            }
        })
    }

    pub fn source_term(&self) -> SourceTerm {
        let l = self.length;
        match self.source {
            SourcePreset::None => SourceTerm::zero(),
            SourcePreset::Sine {
                mode,
                amplitude,
                rate,
                epsilon,
            } => {
                let k = f64::from(mode);
                SourceTerm::separable(epsilon, move |x| amplitude * (k * PI * x / l).sin(), move |t| 1.0 + rate * t)
            }
        }
    }

    pub fn data_field(&self, grid: Grid1D, basis: &SpectralBasis) -> Result<Field, ConfigError> {
        let l = self.length;
        match &self.data {
            DataPreset::Sine { mode, amplitude } => {
                let k = f64::from(*mode);
                Ok(Field::from_fn(grid, |x| amplitude * (k * PI * x / l).sin()))
            }
            DataPreset::Eigenmode { index } => Ok(basis.mode(*index)),
            DataPreset::Bump { amplitude } => Ok(Field::from_fn(grid, |x| amplitude * x * (l - x) * x.exp())),
            DataPreset::Csv { path } => read_field_csv(path, grid),
        }
    }
}

fn read_field_csv(path: &Path, grid: Grid1D) -> Result<Field, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad("data.path", format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad("data.path", format!("line {}: {e}", i + 1)))?;
        if parsed.len() != 2 {
            return Err(bad("data.path", format!("line {}: expected x,value", i + 1)));
        }
        rows.push((parsed[0], parsed[1]));
    }
    let n = grid.n_interior();
    if rows.len() != n + 2 {
        return Err(bad("data.path", format!("{} rows, expected N + 2 = {}", rows.len(), n + 2)));
    }
    let tol = 1e-9 * grid.length();
    for (i, (x, _)) in rows[1..=n].iter().enumerate() {
        if (x - grid.x(i)).abs() > tol {
            return Err(bad("data.path", format!("node {i} at x = {x}, grid has {}", grid.x(i))));
        }
    }
    Field::new(grid, rows[1..=n].iter().map(|r| r.1).collect()).map_err(|e| bad("data.path", e.to_string()))
}
