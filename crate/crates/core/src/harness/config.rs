//! TOML scenario files.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::detector::{Factorization, NoiseModel};
use crate::error::{io_err, Error, Result};
use crate::field::{HarmonicCoefficients, MultipoleSource, MultipoleTensor, SourceModel, TrajectoryGeometry, Units};
use crate::harness::experiment::{default_pfa_grid, ExperimentConfig, ReceiverSpec, SelectionConfig};
use crate::harness::rng::RngStream;
use crate::harness::scenarios::{run_random_source_batch, scenario_by_name};
use crate::mobf::BasisKind;
use crate::order_selection::CriterionSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(rename = "V", default = "default_speed")]
    pub speed: f64,
    #[serde(rename = "D", default = "default_distance")]
    pub distance: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(rename = "K", default = "default_samples")]
    pub samples: usize,
    #[serde(rename = "R", default = "default_window")]
    pub window: f64,
    /// Defaults to the number of rows of `Pi`, or 3.
    #[serde(default)]
    pub d: Option<usize>,
    /// `d` rows of 3 entries; identity when omitted with `d = 3`.
    #[serde(rename = "Pi", default)]
    pub projection: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub units: Option<String>,
}

fn default_speed() -> f64 {
    85.0
}
fn default_distance() -> f64 {
    100.0
}
fn default_samples() -> usize {
    1001
}
fn default_window() -> f64 {
    20.0
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            speed: default_speed(),
            distance: default_distance(),
            t0: 0.0,
            beta: 0.0,
            samples: default_samples(),
            window: default_window(),
            d: None,
            projection: None,
            units: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub l: usize,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    /// `3^l` components, row-major.
    #[serde(default)]
    pub tensor: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `white` or `kronecker`.
    #[serde(default = "default_noise_kind")]
    pub kind: String,
    #[serde(default = "default_variance")]
    pub variance: f64,
    /// Spatial covariance rows (`kronecker`); identity when omitted.
    #[serde(default)]
    pub spatial: Option<Vec<Vec<f64>>>,
    /// AR(1) coefficient of the temporal covariance (`kronecker`).
    #[serde(default)]
    pub temporal_ar1: Option<f64>,
    /// `cholesky` or `eigen`.
    #[serde(default)]
    pub factorization: Option<String>,
}

fn default_noise_kind() -> String {
    "white".into()
}
fn default_variance() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// One of `G`, `F`, `F_gs`, `G_gs`, or a list of them.
    #[serde(default = "default_kinds")]
    pub basis: Vec<String>,
    #[serde(default = "default_pfa")]
    pub pfa: f64,
    /// Normalized threshold; overrides `pfa` when present.
    #[serde(default)]
    pub threshold: Option<f64>,
}

fn default_orders() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn default_kinds() -> Vec<String> {
    vec!["G".into()]
}
fn default_pfa() -> f64 {
    1e-2
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self { orders: default_orders(), basis: default_kinds(), pfa: default_pfa(), threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_snrs")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pfa_grid: Option<Vec<f64>>,
    /// Draw one random harmonic source through this order instead of `[[source]]`.
    #[serde(default)]
    pub random_source_order: Option<usize>,
    /// Index of the random scenario drawn from the seed.
    #[serde(default)]
    pub random_source_index: usize,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<String>,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

fn default_snrs() -> Vec<f64> {
    vec![-22.0]
}
fn default_trials() -> usize {
    10_000
}
fn default_criteria() -> Vec<String> {
    vec!["aic".into(), "bic".into()]
}
fn default_max_order() -> usize {
    4
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            snr_db: default_snrs(),
            trials: default_trials(),
            seed: 0,
            pfa_grid: None,
            random_source_order: None,
            random_source_index: 0,
            criteria: default_criteria(),
            max_order: default_max_order(),
        }
    }
}

/// Top-level scenario file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Built-in scenario (`S1` or `S2`) supplying geometry angle and source.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default, rename = "source")]
    pub sources: Vec<SourceSection>,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub receiver: Option<ReceiverSection>,
    #[serde(default)]
    pub experiment: Option<ExperimentSection>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn matrix_from_rows(rows: &[Vec<f64>], cols: Option<usize>, name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let width = cols.unwrap_or(n);
    if n == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(cfg_err(format!("{name} must have non-empty rows of length {width}")));
    }
    Ok(DMatrix::from_row_iterator(n, width, rows.iter().flatten().copied()))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| Error::Parse { path: PathBuf::from(path), message: e.to_string() })
    }

    pub fn receiver(&self) -> ReceiverSection {
        self.receiver.clone().unwrap_or_default()
    }

    pub fn experiment(&self) -> ExperimentSection {
        self.experiment.clone().unwrap_or_default()
    }

    pub fn units(&self) -> Result<Units> {
        match self.geometry.units.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("normalized") => Ok(Units::Normalized),
            Some("physical") => Ok(Units::Physical),
            Some(other) => Err(cfg_err(format!("unknown units {other:?} (expected normalized or physical)"))),
        }
    }

    fn preset(&self) -> Result<Option<crate::harness::scenarios::QuadrupoleScenario>> {
        match &self.preset {
            None => Ok(None),
            Some(name) => scenario_by_name(name)
                .map(Some)
                .ok_or_else(|| cfg_err(format!("unknown preset {name:?} (expected S1 or S2)"))),
        }
    }

    fn random_scenario(&self) -> Result<Option<crate::harness::scenarios::RandomScenario>> {
        let exp = self.experiment();
        match exp.random_source_order {
            None => Ok(None),
            Some(order) => {
                let batch = run_random_source_batch(order, exp.random_source_index + 1, &RngStream::new(exp.seed))?;
                Ok(batch.into_iter().last())
            }
        }
    }

    pub fn geometry(&self) -> Result<TrajectoryGeometry> {
        let g = &self.geometry;
        let projection = match &g.projection {
            Some(rows) => matrix_from_rows(rows, Some(3), "Pi")?,
            None => DMatrix::identity(g.d.unwrap_or(3), 3),
        };
        if let Some(d) = g.d {
            if d != projection.nrows() {
                return Err(cfg_err(format!("d = {d} but Pi has {} rows", projection.nrows())));
            }
        }
        let beta = if let Some(p) = self.preset()? {
            p.beta
        } else if let Some(r) = self.random_scenario()? {
            r.beta
        } else {
            g.beta
        };
        TrajectoryGeometry::new(g.speed, g.distance, g.t0, beta, projection, g.samples, g.window)
    }

    pub fn sources(&self) -> Result<Vec<MultipoleSource>> {
        if let Some(p) = self.preset()? {
            return Ok(p.harmonic_source());
        }
        if let Some(r) = self.random_scenario()? {
            return Ok(r.sources);
        }
        self.sources
            .iter()
            .map(|s| match (&s.a, &s.b, &s.tensor) {
                (Some(a), b, None) => Ok(MultipoleSource::Harmonic(HarmonicCoefficients::new(
                    s.l,
                    a.clone(),
                    b.clone().unwrap_or_default(),
                )?)),
                (None, None, Some(t)) => Ok(MultipoleSource::Tensor(MultipoleTensor::new(s.l, t.clone())?)),
                _ => Err(cfg_err(format!("source of order {} needs either a/b or tensor", s.l))),
            })
            .collect()
    }

    pub fn source_model(&self) -> Result<SourceModel> {
        SourceModel::new(self.sources()?, self.units()?)
    }

    pub fn noise_model(&self, samples: usize) -> Result<NoiseModel> {
        let Some(n) = &self.noise else {
            return NoiseModel::white(1.0);
        };
        let d = self.geometry()?.sensor_dim();
        let model = match n.kind.to_ascii_lowercase().as_str() {
            "white" => NoiseModel::White { variance: n.variance },
            "kronecker" => {
                let spatial = match &n.spatial {
                    Some(rows) => matrix_from_rows(rows, None, "spatial")?,
                    None => DMatrix::identity(d, d) * n.variance,
                };
                let rho = n.temporal_ar1.unwrap_or(0.0);
                if !(rho.abs() < 1.0) {
                    return Err(cfg_err("temporal_ar1 must lie in (-1, 1)"));
                }
                NoiseModel::Kronecker { spatial, temporal: crate::harness::noise::ar1_covariance(samples, rho, 1.0) }
            }
            other => return Err(cfg_err(format!("unknown noise kind {other:?} (expected white or kronecker)"))),
        };
        model.validate()?;
        model.check_shape(d, samples)?;
        Ok(model)
    }

    pub fn factorization(&self) -> Result<Factorization> {
        match self.noise.as_ref().and_then(|n| n.factorization.as_deref()).map(str::to_ascii_lowercase).as_deref() {
            None | Some("cholesky") => Ok(Factorization::Cholesky),
            Some("eigen") => Ok(Factorization::Eigen),
            Some(other) => Err(cfg_err(format!("unknown factorization {other:?}"))),
        }
    }

    pub fn receiver_specs(&self) -> Result<Vec<ReceiverSpec>> {
        let r = self.receiver();
        if r.orders.is_empty() || r.basis.is_empty() {
            return Err(cfg_err("receiver orders and basis kinds must be non-empty"));
        }
        let kinds = r.basis.iter().map(|k| BasisKind::parse(k)).collect::<Result<Vec<_>>>()?;
        Ok(r.orders.iter().flat_map(|&order| kinds.iter().map(move |&kind| ReceiverSpec { order, kind })).collect())
    }

    pub fn criteria(&self) -> Result<Vec<CriterionSpec>> {
        let exp = self.experiment();
        let g = self.geometry()?;
        exp.criteria
            .iter()
            .map(|c| CriterionSpec::preset(c, g.sensor_dim(), g.samples(), exp.max_order))
            .collect()
    }

    /// Experiment with CLI overrides applied.
    pub fn experiment_config(&self, seed: Option<u64>, trials: Option<usize>) -> Result<ExperimentConfig> {
        let exp = self.experiment();
        let geom = self.geometry()?;
        let signal = self.source_model()?.signal(&geom)?;
        Ok(ExperimentConfig {
            signal,
            receivers: self.receiver_specs()?,
            noise: self.noise_model(geom.samples())?,
            snr_db: exp.snr_db.clone(),
            trials: trials.unwrap_or(exp.trials),
            pfa_grid: exp.pfa_grid.clone().unwrap_or_else(default_pfa_grid),
            seed: seed.unwrap_or(exp.seed),
            factorization: self.factorization()?,
        })
    }

    pub fn selection_config(&self, seed: Option<u64>, trials: Option<usize>) -> Result<SelectionConfig> {
        let exp = self.experiment();
        let geom = self.geometry()?;
        let variance = match self.noise_model(geom.samples())? {
            NoiseModel::White { variance } => variance,
            _ => return Err(cfg_err("order selection supports white noise only")),
        };
        let snr_db = match exp.snr_db.as_slice() {
            [s] => *s,
            _ => return Err(cfg_err("order selection needs exactly one SNR")),
        };
        let kinds = self.receiver_specs()?;
        Ok(SelectionConfig {
            signal: self.source_model()?.signal(&geom)?,
            variance,
            snr_db,
            trials: trials.unwrap_or(exp.trials),
            seed: seed.unwrap_or(exp.seed),
            criteria: self.criteria()?,
            kind: kinds[0].kind,
        })
    }
}
