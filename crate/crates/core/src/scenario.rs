//! Scenario files: every input of a pipeline run in one JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criteria::{EmissivityTable, ReliabilityTable};
use crate::demand::{EvClass, TrafficProfile};
use crate::dispatch::{BatteryParams, DispatchRules, EconParams};
use crate::error::{io_err, Error, Result};
use crate::mcdm::WeightVector;
use crate::predesign::ComponentMenu;
use crate::resources::{DailyVariability, PowerCurve, SolarResource, WindFluctuation, WindResource};
use crate::verify::VerificationLimits;

const VALENCIA: &str = include_str!("../../../scenarios/valencia.json");

/// Hourly vehicle counts, given inline or as a CSV path relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficSource {
    Profile(Vec<f64>),
    Csv(PathBuf),
}

/// A measured per-source profile CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub path: PathBuf,
    pub nameplate_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarSection {
    #[serde(flatten)]
    pub resource: SolarResource,
    pub derate: f64,
    /// Replaces synthesis when present.
    #[serde(default)]
    pub profile_csv: Option<ProfileFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSection {
    #[serde(flatten)]
    pub resource: WindResource,
    pub power_curve: PowerCurve,
    /// Replaces synthesis when present.
    #[serde(default)]
    pub profile_csv: Option<ProfileFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSpec {
    /// Lab-scale peak power, kW.
    pub p_lab: f64,
    #[serde(flatten)]
    pub limits: VerificationLimits,
    pub initial_soc: f64,
    pub step_min: u32,
    /// Day of year (0-based) of the verification day.
    pub day_of_year: usize,
    /// Hour of day at which the verification day starts.
    pub start_hour: usize,
    pub wind_fluctuation: WindFluctuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub ev_classes: Vec<EvClass>,
    pub traffic: TrafficSource,
    pub solar: SolarSection,
    pub wind: WindSection,
    #[serde(default)]
    pub variability: Option<DailyVariability>,
    pub menu: ComponentMenu,
    /// Battery behaviour for the annual simulation; capacity comes from each configuration.
    pub battery: BatteryParams,
    #[serde(default)]
    pub dispatch: DispatchRules,
    pub economics: EconParams,
    pub emissivity: EmissivityTable,
    pub reliability: ReliabilityTable,
    #[serde(default)]
    pub weights: WeightVector,
    pub max_shortage: f64,
    pub verification: VerificationSpec,
}

/// Values that replace scenario fields for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub weights: Option<WeightVector>,
    pub max_shortage: Option<f64>,
    pub step_min: Option<u32>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.weights.is_none() && self.max_shortage.is_none() && self.step_min.is_none()
    }
}

/// A parsed scenario with the hash of its source bytes and the directory relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub sha256: String,
    pub base_dir: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn field(path: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidParameter(msg) => Error::Validation { field: path.to_string(), msg },
        other => other,
    }
}

impl LoadedScenario {
    pub fn from_str(text: &str, base_dir: PathBuf) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(Self { scenario, sha256: sha256_hex(text.as_bytes()), base_dir })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self::from_str(&text, base)?;
        loaded.check_files()?;
        Ok(loaded)
    }

    /// The bundled Valencia case study.
    pub fn valencia() -> Self {
        Self::from_str(VALENCIA, PathBuf::from(".")).expect("bundled scenario is valid")
    }

    /// Applies command-line overrides. The hash then covers both the file and the overrides.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if o.is_empty() {
            return Ok(self);
        }
        if let Some(w) = o.weights {
            self.scenario.weights = w;
        }
        if let Some(m) = o.max_shortage {
            self.scenario.max_shortage = m;
        }
        if let Some(s) = o.step_min {
            self.scenario.verification.step_min = s;
        }
        self.scenario.validate()?;
        let tag = serde_json::to_string(o)?;
        self.sha256 = sha256_hex(format!("{}\n{tag}", self.sha256).as_bytes());
        Ok(self)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn check_files(&self) -> Result<()> {
        let mut refs: Vec<(&str, &Path)> = Vec::new();
        if let TrafficSource::Csv(p) = &self.scenario.traffic {
            refs.push(("traffic.csv", p));
        }
        if let Some(f) = &self.scenario.solar.profile_csv {
            refs.push(("solar.profile_csv.path", &f.path));
        }
        if let Some(f) = &self.scenario.wind.profile_csv {
            refs.push(("wind.profile_csv.path", &f.path));
        }
        for (name, p) in refs {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::Validation {
                    field: name.into(),
                    msg: format!("file {} does not exist", full.display()),
                });
            }
        }
        Ok(())
    }

    pub fn traffic(&self) -> Result<TrafficProfile> {
        match &self.scenario.traffic {
            TrafficSource::Profile(v) => TrafficProfile::new(v.clone()),
            TrafficSource::Csv(p) => TrafficProfile::load_csv(&self.resolve(p)),
        }
    }
}

impl Scenario {
    /// Checks every section, reporting the first failure with its field path.
    pub fn validate(&self) -> Result<()> {
        if self.ev_classes.is_empty() {
            return Err(Error::Validation { field: "ev_classes".into(), msg: "no EV classes".into() });
        }
        for (i, c) in self.ev_classes.iter().enumerate() {
            c.validate().map_err(field(&format!("ev_classes[{i}]")))?;
        }
        if let TrafficSource::Profile(v) = &self.traffic {
            TrafficProfile::new(v.clone()).map_err(field("traffic.profile"))?;
            if v.len() != 24 {
                return Err(Error::Validation {
                    field: "traffic.profile".into(),
                    msg: format!("expected 24 hourly values, got {}", v.len()),
                });
            }
        }
        self.solar.resource.validate().map_err(field("solar"))?;
        if !(self.solar.derate > 0.0 && self.solar.derate <= 1.0) {
            return Err(Error::Validation { field: "solar.derate".into(), msg: "must lie in (0, 1]".into() });
        }
        self.wind.resource.validate().map_err(field("wind"))?;
        self.wind.power_curve.validate().map_err(field("wind.power_curve"))?;
        for (name, f) in [("solar.profile_csv", &self.solar.profile_csv), ("wind.profile_csv", &self.wind.profile_csv)]
        {
            if let Some(f) = f {
                if !(f.nameplate_kw > 0.0) {
                    return Err(Error::Validation {
                        field: format!("{name}.nameplate_kw"),
                        msg: "must be positive".into(),
                    });
                }
            }
        }
        if let Some(v) = &self.variability {
            v.validate().map_err(field("variability"))?;
        }
        self.menu.validate().map_err(field("menu"))?;
        self.battery.validate().map_err(field("battery"))?;
        self.dispatch.validate().map_err(field("dispatch"))?;
        self.economics.validate().map_err(field("economics"))?;
        self.emissivity.validate().map_err(field("emissivity"))?;
        self.reliability.validate().map_err(field("reliability"))?;
        WeightVector::new(self.weights.values()).map_err(field("weights"))?;
        if !(0.0..=1.0).contains(&self.max_shortage) {
            return Err(Error::Validation { field: "max_shortage".into(), msg: "must lie in [0, 1]".into() });
        }
        let v = &self.verification;
        if !(v.p_lab > 0.0) {
            return Err(Error::Validation { field: "verification.p_lab".into(), msg: "must be positive".into() });
        }
        v.limits.validate().map_err(field("verification"))?;
        if !(v.limits.soc_min..=v.limits.soc_max).contains(&v.initial_soc) {
            return Err(Error::Validation {
                field: "verification.initial_soc".into(),
                msg: "must lie within the verification SOC bounds".into(),
            });
        }
        if v.step_min == 0 || 1440 % v.step_min != 0 {
            return Err(Error::Validation {
                field: "verification.step_min".into(),
                msg: format!("{} min does not divide 24 h", v.step_min),
            });
        }
        if v.day_of_year >= 365 || v.start_hour >= 24 {
            return Err(Error::Validation {
                field: "verification.day_of_year".into(),
                msg: "day must be below 365 and start hour below 24".into(),
            });
        }
        if !(v.wind_fluctuation.sigma >= 0.0 && (0.0..1.0).contains(&v.wind_fluctuation.phi)) {
            return Err(Error::Validation {
                field: "verification.wind_fluctuation".into(),
                msg: "needs sigma >= 0 and phi in [0, 1)".into(),
            });
        }
        Ok(())
    }
}
