//! EV charging station demand from a traffic profile and per-class recharge parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EvClassId {
    BevCar,
    PhevCar,
    BevMoto,
}

impl EvClassId {
    pub fn as_str(self) -> &'static str {
        match self {
            EvClassId::BevCar => "BEV_CAR",
            EvClassId::PhevCar => "PHEV_CAR",
            EvClassId::BevMoto => "BEV_MOTO",
        }
    }
}

/// Recharge parameters of one vehicle class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvClass {
    pub id: EvClassId,
    /// Battery capacity, kWh.
    pub c_bat: f64,
    pub soc_max: f64,
    pub soc_init: f64,
    /// Recharge duration, minutes.
    pub t_recharge: f64,
    /// Electrification fraction of the class's fleet segment.
    pub f: f64,
    /// Fraction of electrified vehicles recharging at the station.
    pub r: f64,
    /// Share of total traffic belonging to this class's segment.
    pub fleet_share: f64,
}

impl EvClass {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{}: {name} = {v} outside [0, 1]", self.id.as_str())))
            }
        };
        unit("soc_init", self.soc_init)?;
        unit("soc_max", self.soc_max)?;
        unit("f", self.f)?;
        unit("r", self.r)?;
        unit("fleet_share", self.fleet_share)?;
        if self.soc_init > self.soc_max {
            return Err(invalid(format!(
                "{}: soc_init {} exceeds soc_max {}",
                self.id.as_str(),
                self.soc_init,
                self.soc_max
            )));
        }
        if !(self.c_bat > 0.0) {
            return Err(invalid(format!("{}: c_bat must be positive", self.id.as_str())));
        }
        if !(self.t_recharge > 0.0) {
            return Err(invalid(format!("{}: t_recharge must be positive", self.id.as_str())));
        }
        Ok(())
    }
}

/// Hourly vehicle counts N(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub n_total: Vec<f64>,
}

impl TrafficProfile {
    pub fn new(n_total: Vec<f64>) -> Result<Self> {
        if n_total.is_empty() {
            return Err(invalid("traffic profile is empty"));
        }
        if let Some((i, v)) = n_total.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(invalid(format!("traffic count at hour {i} is {v}; must be >= 0")));
        }
        Ok(Self { n_total })
    }

    /// Reads a `hour, vehicles_per_hour` CSV with a header row.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let shown = path.display().to_string();
        let mut reader =
            csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
        let mut counts = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            let fmt = |msg: String| Error::Format { path: shown.clone(), row, msg };
            if rec.len() != 2 {
                return Err(fmt(format!("expected 2 columns, found {}", rec.len())));
            }
            let hour: usize = rec[0].parse().map_err(|_| fmt(format!("bad hour `{}`", &rec[0])))?;
            if hour != counts.len() {
                return Err(fmt(format!("expected hour {}, found {hour}", counts.len())));
            }
            let n: f64 = rec[1].parse().map_err(|_| fmt(format!("bad count `{}`", &rec[1])))?;
            if !(n >= 0.0) {
                return Err(fmt(format!("negative vehicle count {n}")));
            }
            counts.push(n);
        }
        if counts.len() != 24 {
            return Err(Error::Format {
                path: shown,
                row: counts.len(),
                msg: format!("expected 24 hourly rows, found {}", counts.len()),
            });
        }
        Self::new(counts)
    }
}

/// Station power demand per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandCurve {
    /// Power per step, kW.
    pub p: Vec<f64>,
    /// Hours per step.
    pub resolution: f64,
}

impl DemandCurve {
    pub fn hourly(p: Vec<f64>) -> Self {
        Self { p, resolution: 1.0 }
    }

    pub fn peak(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }

    /// Total energy over the horizon, kWh.
    pub fn energy(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.resolution
    }

    /// Repeats the curve `times` times.
    pub fn tile(&self, times: usize) -> Self {
        let mut p = Vec::with_capacity(self.p.len() * times);
        for _ in 0..times {
            p.extend_from_slice(&self.p);
        }
        Self { p, resolution: self.resolution }
    }
}

/// Power drawn by one recharging vehicle, kW.
pub fn ev_recharge_power(cls: &EvClass) -> Result<f64> {
    if !(cls.t_recharge > 0.0) {
        return Err(invalid(format!("t_recharge must be positive, got {}", cls.t_recharge)));
    }
    cls.validate()?;
    Ok(cls.c_bat * (cls.soc_max - cls.soc_init) / (cls.t_recharge / 60.0))
}

/// Vehicles of a class recharging per hour given total traffic `n_t`.
pub fn vehicles_recharging(n_t: f64, cls: &EvClass) -> Result<f64> {
    if !(n_t >= 0.0) {
        return Err(invalid(format!("vehicle count must be >= 0, got {n_t}")));
    }
    Ok(n_t * cls.fleet_share * cls.f * cls.r)
}

/// Per-class demand curves, in the order of `classes`.
pub fn demand_by_class(traffic: &TrafficProfile, classes: &[EvClass]) -> Result<Vec<DemandCurve>> {
    if classes.is_empty() {
        return Err(invalid("no EV classes given"));
    }
    if traffic.n_total.is_empty() {
        return Err(invalid("traffic profile is empty"));
    }
    classes
        .iter()
        .map(|cls| {
            let power = ev_recharge_power(cls)?;
            let p = traffic
                .n_total
                .iter()
                .map(|&n| Ok(vehicles_recharging(n, cls)? * power))
                .collect::<Result<Vec<_>>>()?;
            Ok(DemandCurve::hourly(p))
        })
        .collect()
}

/// Station demand: sum over classes of recharging vehicles times recharge power.
pub fn evcs_demand_curve(traffic: &TrafficProfile, classes: &[EvClass]) -> Result<DemandCurve> {
    let parts = demand_by_class(traffic, classes)?;
    let mut p = vec![0.0; traffic.n_total.len()];
    for part in &parts {
        for (acc, v) in p.iter_mut().zip(&part.p) {
            *acc += v;
        }
    }
    Ok(DemandCurve::hourly(p))
}
