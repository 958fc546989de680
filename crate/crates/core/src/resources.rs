//! Hourly solar PV and wind output profiles from monthly site averages.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, io_err, Error, Result};

pub const DAYS_IN_MONTH: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
pub const HOURS_PER_YEAR: usize = 8760;

/// RNG stream identifiers, so one scenario seed drives independent sequences.
pub(crate) const STREAM_SOLAR: u64 = 1;
pub(crate) const STREAM_WIND: u64 = 2;
pub(crate) const STREAM_WIND_FINE: u64 = 3;

/// Month index (0-based) of each day of a non-leap year.
pub fn month_of_day(day: usize) -> usize {
    let mut acc = 0;
    for (m, d) in DAYS_IN_MONTH.iter().enumerate() {
        acc += d;
        if day < acc {
            return m;
        }
    }
    11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarResource {
    /// Mean daily irradiation per month, kWh/m²/day.
    pub monthly_daily_irradiation: Vec<f64>,
    /// Monthly clearness index.
    pub clearness_index: Vec<f64>,
    /// Site latitude, degrees north.
    pub latitude_deg: f64,
}

impl SolarResource {
    pub fn validate(&self) -> Result<()> {
        check_twelve("monthly_daily_irradiation", &self.monthly_daily_irradiation)?;
        check_twelve("clearness_index", &self.clearness_index)?;
        if self.monthly_daily_irradiation.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("irradiation values must be >= 0"));
        }
        if self.clearness_index.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("clearness index values must lie in [0, 1]"));
        }
        if !(self.latitude_deg.abs() < 66.0) {
            return Err(invalid("latitude must lie within the polar circles"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindResource {
    /// Mean speed per month at the measurement height, m/s.
    pub monthly_mean_speed: Vec<f64>,
    pub measurement_height: f64,
    pub hub_height: f64,
    pub shear_exponent: f64,
    /// Relative amplitude of the daily speed cycle.
    #[serde(default)]
    pub diurnal_amplitude: f64,
    /// Hour of day at which the daily speed cycle peaks.
    #[serde(default = "default_peak_hour")]
    pub diurnal_peak_hour: f64,
}

fn default_peak_hour() -> f64 {
    15.0
}

impl WindResource {
    pub fn validate(&self) -> Result<()> {
        check_twelve("monthly_mean_speed", &self.monthly_mean_speed)?;
        if self.monthly_mean_speed.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("wind speeds must be >= 0"));
        }
        if !(self.measurement_height > 0.0 && self.hub_height > 0.0) {
            return Err(invalid("heights must be positive"));
        }
        if !(0.0..1.0).contains(&self.diurnal_amplitude) {
            return Err(invalid("diurnal amplitude must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn hub_factor(&self) -> f64 {
        (self.hub_height / self.measurement_height).powf(self.shear_exponent)
    }
}

/// Turbine power curve with a cubic rise between cut-in and rated speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,
}

impl Default for PowerCurve {
    fn default() -> Self {
        Self { cut_in: 3.0, rated: 11.0, cut_out: 25.0 }
    }
}

impl PowerCurve {
    pub fn validate(&self) -> Result<()> {
        if !(self.cut_in < self.cut_out) {
            return Err(invalid(format!("cut-in {} must be below cut-out {}", self.cut_in, self.cut_out)));
        }
        if !(self.cut_in >= 0.0 && self.rated > self.cut_in && self.rated <= self.cut_out) {
            return Err(invalid("rated speed must lie in (cut-in, cut-out]"));
        }
        Ok(())
    }

    /// Output as a fraction of nameplate at hub speed `v`.
    pub fn fraction(&self, v: f64) -> f64 {
        if v < self.cut_in || v >= self.cut_out {
            0.0
        } else if v >= self.rated {
            1.0
        } else {
            let ci3 = self.cut_in.powi(3);
            (v.powi(3) - ci3) / (self.rated.powi(3) - ci3)
        }
    }
}

/// Seeded day-to-day variability: an AR(1) multiplier per day, renormalized to mean one in each
/// month so monthly totals are unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyVariability {
    pub sigma: f64,
    pub phi: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    0.05
}

impl DailyVariability {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !(0.0..1.0).contains(&self.phi) || !(0.0..1.0).contains(&self.floor) {
            return Err(invalid("variability needs sigma >= 0, phi in [0, 1), floor in [0, 1)"));
        }
        Ok(())
    }

    /// One factor per day of the year. `sigma_scale` scales sigma per month.
    fn factors(&self, seed: u64, stream: u64, sigma_scale: &[f64; 12]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let innov = (1.0 - self.phi * self.phi).sqrt();
        let mut z = 0.0;
        let mut out = Vec::with_capacity(365);
        for (m, &days) in DAYS_IN_MONTH.iter().enumerate() {
            let start = out.len();
            for _ in 0..days {
                let e: f64 = StandardNormal.sample(&mut rng);
                z = self.phi * z + innov * e;
                out.push((1.0 + self.sigma * sigma_scale[m] * z).max(self.floor));
            }
            let mean = out[start..].iter().sum::<f64>() / days as f64;
            out[start..].iter_mut().for_each(|f| *f /= mean);
        }
        out
    }
}

/// Hourly output of one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationProfile {
    /// Power per hour, kW.
    pub p: Vec<f64>,
    /// Nameplate capacity, kW.
    pub nameplate: f64,
}

impl GenerationProfile {
    pub fn zeros(len: usize) -> Self {
        Self { p: vec![0.0; len], nameplate: 0.0 }
    }

    /// Annual energy per kW of nameplate, kWh/kW.
    pub fn equivalent_hours(&self) -> f64 {
        if self.nameplate > 0.0 {
            self.p.iter().sum::<f64>() / self.nameplate
        } else {
            0.0
        }
    }

    pub fn energy(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Builds a profile of `nameplate` kW from a per-kW shape.
    pub fn from_per_kw(per_kw: &[f64], nameplate: f64) -> Self {
        Self { p: per_kw.iter().map(|f| f * nameplate).collect(), nameplate }
    }
}

fn check_twelve(name: &str, v: &[f64]) -> Result<()> {
    if v.len() == 12 {
        Ok(())
    } else {
        Err(invalid(format!("{name} needs 12 monthly values, got {}", v.len())))
    }
}

fn declination_rad(day: usize) -> f64 {
    (23.45f64).to_radians() * (2.0 * PI * (284.0 + day as f64 + 1.0) / 365.0).sin()
}

/// Day length in hours for a day of year (0-based) at latitude `lat_deg`.
pub fn day_length_hours(lat_deg: f64, day: usize) -> f64 {
    let x = -lat_deg.to_radians().tan() * declination_rad(day).tan();
    2.0 * x.clamp(-1.0, 1.0).acos().to_degrees() / 15.0
}

/// Half-sine daylight irradiance synthesis.
#[derive(Debug, Clone)]
pub struct SolarModel {
    derate: f64,
    /// Daily irradiation per day of year, kWh/m², after variability.
    daily: Vec<f64>,
    day_length: Vec<f64>,
}

impl SolarModel {
    /// Builds the model. `variability` with a seed adds day-to-day weather, preserving each
    /// month's total.
    pub fn new(res: &SolarResource, derate: f64, variability: Option<(&DailyVariability, u64)>) -> Result<Self> {
        res.validate()?;
        if !(derate > 0.0 && derate <= 1.0) {
            return Err(invalid(format!("derate must lie in (0, 1], got {derate}")));
        }
        let day_length: Vec<f64> = (0..365).map(|d| day_length_hours(res.latitude_deg, d)).collect();
        let mut factors = vec![1.0; 365];
        if let Some((var, seed)) = variability {
            var.validate()?;
            let mean_cloud = res.clearness_index.iter().map(|k| 1.0 - k).sum::<f64>() / 12.0;
            let mut scale = [1.0; 12];
            if mean_cloud > 0.0 {
                for (s, k) in scale.iter_mut().zip(&res.clearness_index) {
                    *s = (1.0 - k) / mean_cloud;
                }
            }
            factors = var.factors(seed, STREAM_SOLAR, &scale);
        }
        let mut daily = vec![0.0; 365];
        let mut start = 0;
        for (m, &days) in DAYS_IN_MONTH.iter().enumerate() {
            let h = res.monthly_daily_irradiation[m];
            // Peak irradiance may not exceed 1 kW/m² after derating.
            let caps: Vec<f64> = (start..start + days)
                .map(|d| if h > 0.0 { 2.0 * day_length[d] / (PI * h * derate) } else { f64::INFINITY })
                .collect();
            let f = water_fill(&factors[start..start + days], &caps)
                .ok_or_else(|| invalid(format!("month {} irradiation exceeds clear-sky capacity", m + 1)))?;
            for (i, fi) in f.into_iter().enumerate() {
                daily[start + i] = h * fi;
            }
            start += days;
        }
        Ok(Self { derate, daily, day_length })
    }

    /// Energy per kW of PV between hours `t0` and `t1` of `day`, kWh/kW.
    pub fn energy_between(&self, day: usize, t0: f64, t1: f64) -> f64 {
        let l = self.day_length[day];
        let h = self.daily[day];
        if l <= 0.0 || h <= 0.0 {
            return 0.0;
        }
        let sunrise = 12.0 - l / 2.0;
        let cum = |t: f64| {
            let tau = (t - sunrise).clamp(0.0, l);
            h / 2.0 * (1.0 - (PI * tau / l).cos())
        };
        self.derate * (cum(t1) - cum(t0))
    }

    /// Per-kW hourly output over the year.
    pub fn hourly_per_kw(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(HOURS_PER_YEAR);
        for day in 0..365 {
            for h in 0..24 {
                out.push(self.energy_between(day, h as f64, h as f64 + 1.0));
            }
        }
        out
    }

    pub fn profile(&self, pv_kw: f64) -> Result<GenerationProfile> {
        if !(pv_kw >= 0.0) {
            return Err(invalid(format!("PV capacity must be >= 0, got {pv_kw}")));
        }
        Ok(GenerationProfile::from_per_kw(&self.hourly_per_kw(), pv_kw))
    }
}

/// Rescales `f` to mean one while keeping each entry at or below its cap.
fn water_fill(f: &[f64], caps: &[f64]) -> Option<Vec<f64>> {
    let n = f.len() as f64;
    if caps.iter().sum::<f64>() < n {
        return None;
    }
    let mut out: Vec<f64> = f.to_vec();
    for _ in 0..100 {
        let mut capped_sum = 0.0;
        let mut free_sum = 0.0;
        for (v, c) in out.iter_mut().zip(caps) {
            if *v >= *c {
                *v = *c;
                capped_sum += *c;
            } else {
                free_sum += *v;
            }
        }
        if free_sum <= 0.0 {
            break;
        }
        let k = (n - capped_sum) / free_sum;
        if (k - 1.0).abs() < 1e-14 {
            break;
        }
        for (v, c) in out.iter_mut().zip(caps) {
            if *v < *c {
                *v *= k;
            }
        }
    }
    Some(out)
}

/// Diurnally modulated wind speed synthesis.
#[derive(Debug, Clone)]
pub struct WindModel {
    res: WindResource,
    curve: PowerCurve,
    factors: Vec<f64>,
}

impl WindModel {
    pub fn new(res: &WindResource, curve: PowerCurve, variability: Option<(&DailyVariability, u64)>) -> Result<Self> {
        res.validate()?;
        curve.validate()?;
        let factors = match variability {
            Some((var, seed)) => {
                var.validate()?;
                var.factors(seed, STREAM_WIND, &[1.0; 12])
            }
            None => vec![1.0; 365],
        };
        Ok(Self { res: res.clone(), curve, factors })
    }

    pub fn curve(&self) -> &PowerCurve {
        &self.curve
    }

    /// Hub-height speed at hour `t` (0..24) of `day`, m/s.
    pub fn speed_at(&self, day: usize, t: f64) -> f64 {
        let base = self.res.monthly_mean_speed[month_of_day(day)] * self.res.hub_factor();
        let cycle = 1.0 + self.res.diurnal_amplitude * (2.0 * PI * (t - self.res.diurnal_peak_hour) / 24.0).cos();
        (base * self.factors[day] * cycle).max(0.0)
    }

    /// Per-kW hourly output over the year, from the speed at each half hour.
    pub fn hourly_per_kw(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(HOURS_PER_YEAR);
        for day in 0..365 {
            for h in 0..24 {
                out.push(self.curve.fraction(self.speed_at(day, h as f64 + 0.5)));
            }
        }
        out
    }

    pub fn profile(&self, turbine_kw: f64) -> Result<GenerationProfile> {
        if !(turbine_kw >= 0.0) {
            return Err(invalid(format!("turbine capacity must be >= 0, got {turbine_kw}")));
        }
        Ok(GenerationProfile::from_per_kw(&self.hourly_per_kw(), turbine_kw))
    }
}

/// Deterministic solar synthesis without day-to-day variability.
pub fn synthesize_solar(res: &SolarResource, pv_kw: f64, derate: f64) -> Result<GenerationProfile> {
    SolarModel::new(res, derate, None)?.profile(pv_kw)
}

/// Deterministic wind synthesis without day-to-day variability.
pub fn synthesize_wind(res: &WindResource, turbine_kw: f64, curve: &PowerCurve) -> Result<GenerationProfile> {
    WindModel::new(res, *curve, None)?.profile(turbine_kw)
}

/// Derate giving `target` equivalent hours. Exact because synthesis preserves monthly energy.
pub fn calibrate_derate(res: &SolarResource, target: f64) -> f64 {
    let yearly: f64 = res.monthly_daily_irradiation.iter().zip(DAYS_IN_MONTH).map(|(h, d)| h * d as f64).sum();
    target / yearly
}

/// Rated speed giving `target` equivalent hours, by bisection.
pub fn calibrate_rated_speed(
    res: &WindResource,
    curve: PowerCurve,
    variability: Option<(&DailyVariability, u64)>,
    target: f64,
) -> Result<f64> {
    let hours = |rated: f64| -> Result<f64> {
        let c = PowerCurve { rated, ..curve };
        Ok(WindModel::new(res, c, variability)?.hourly_per_kw().iter().sum())
    };
    let (mut lo, mut hi) = (curve.cut_in + 0.1, curve.cut_out);
    if hours(lo)? < target || hours(hi)? > target {
        return Err(invalid(format!("no rated speed reaches {target} equivalent hours")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hours(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reads a `hour_of_year, power_kw` CSV of 8760 rows with a header.
pub fn load_profile_csv(path: &Path, nameplate: f64) -> Result<GenerationProfile> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let mut p = Vec::with_capacity(HOURS_PER_YEAR);
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let fmt = |msg: String| Error::Format { path: shown.clone(), row, msg };
        if rec.len() != 2 {
            return Err(fmt(format!("expected 2 columns, found {}", rec.len())));
        }
        let hour: usize = rec[0].parse().map_err(|_| fmt(format!("bad hour `{}`", &rec[0])))?;
        if hour != p.len() {
            return Err(fmt(format!("expected hour {}, found {hour}", p.len())));
        }
        let v: f64 = rec[1].parse().map_err(|_| fmt(format!("bad power `{}`", &rec[1])))?;
        if !(v >= 0.0) {
            return Err(fmt(format!("negative power {v}")));
        }
        if v > nameplate + 1e-9 {
            return Err(fmt(format!("power {v} exceeds nameplate {nameplate}")));
        }
        p.push(v);
    }
    if p.len() != HOURS_PER_YEAR {
        return Err(Error::Format {
            path: shown,
            row: p.len(),
            msg: format!("expected {HOURS_PER_YEAR} rows, found {}", p.len()),
        });
    }
    Ok(GenerationProfile { p, nameplate })
}

/// Per-step fluctuation applied to wind speed in fine-step traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindFluctuation {
    /// Relative standard deviation of the speed fluctuation.
    pub sigma: f64,
    /// Step-to-step autocorrelation.
    pub phi: f64,
}

impl WindFluctuation {
    pub fn none() -> Self {
        Self { sigma: 0.0, phi: 0.0 }
    }
}

/// Day window used by fine-step traces: `steps` steps of `step_min` minutes starting at
/// `start_hour` on `day`.
#[derive(Debug, Clone, Copy)]
pub struct DayWindow {
    pub day: usize,
    pub start_hour: usize,
    pub step_min: u32,
}

impl DayWindow {
    pub fn steps(&self) -> usize {
        (24 * 60 / self.step_min) as usize
    }

    /// Day of year and hour within it for step `k`, at the step start.
    pub fn locate(&self, k: usize) -> (usize, f64) {
        let t = self.start_hour as f64 + k as f64 * self.step_min as f64 / 60.0;
        let day = (self.day + (t / 24.0).floor() as usize) % 365;
        (day, t.rem_euclid(24.0))
    }

    pub fn step_hours(&self) -> f64 {
        self.step_min as f64 / 60.0
    }
}

/// Per-kW solar output averaged over each step of the window.
pub fn solar_fine_trace(model: &SolarModel, w: &DayWindow) -> Vec<f64> {
    let dt = w.step_hours();
    (0..w.steps())
        .map(|k| {
            let (day, t) = w.locate(k);
            model.energy_between(day, t, t + dt) / dt
        })
        .collect()
}

/// Per-kW wind output at each step, with seeded speed fluctuation.
pub fn wind_fine_trace(model: &WindModel, w: &DayWindow, fluct: &WindFluctuation, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_WIND_FINE);
    let innov = (1.0 - fluct.phi * fluct.phi).sqrt();
    let mut z = 0.0;
    let dt = w.step_hours();
    (0..w.steps())
        .map(|k| {
            let (day, t) = w.locate(k);
            let e: f64 = StandardNormal.sample(&mut rng);
            z = fluct.phi * z + innov * e;
            let v = model.speed_at(day, t + dt / 2.0) * (1.0 + fluct.sigma * z).max(0.0);
            model.curve().fraction(v)
        })
        .collect()
}

/// Piecewise-constant fine trace from an hourly per-kW profile.
pub fn hourly_fine_trace(per_kw: &[f64], w: &DayWindow) -> Vec<f64> {
    (0..w.steps())
        .map(|k| {
            let (day, t) = w.locate(k);
            per_kw[(day * 24 + t.floor() as usize) % per_kw.len()]
        })
        .collect()
}
