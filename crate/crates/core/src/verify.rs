//! Lab-scale, fine-step verification of selected designs.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::dispatch::{BatteryParams, Configuration, DispatchRules, Kernel, StepRecord};
use crate::error::{invalid, Result};
use crate::mcdm::RankedDesign;

const MINUTES_PER_DAY: u32 = 24 * 60;

/// A design and its day of inputs divided by the scale factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledScenario {
    /// Full-scale peak demand over lab power.
    pub sf: f64,
    /// Configuration with every capacity divided by `sf`.
    pub config: Configuration,
    /// Step length, minutes.
    pub step_min: u32,
    /// Scaled demand per step, kW.
    pub demand: Vec<f64>,
    /// Scaled PV output per step, kW.
    pub pv: Vec<f64>,
    /// Scaled wind output per step, kW.
    pub wind: Vec<f64>,
}

/// Scales `cfg` and `demand` so the demand peak equals `p_lab`. Generation traces start at zero;
/// attach them with [`ScaledScenario::with_generation`].
pub fn scale(cfg: &Configuration, demand: &DemandCurve, p_lab: f64) -> Result<ScaledScenario> {
    if !(p_lab > 0.0) {
        return Err(invalid(format!("lab power must be positive, got {p_lab}")));
    }
    let peak = demand.peak();
    if !(peak > 0.0) {
        return Err(invalid("demand peak must be positive"));
    }
    let step_min = (demand.resolution * 60.0).round();
    if !(step_min >= 1.0) || (demand.resolution * 60.0 - step_min).abs() > 1e-9 {
        return Err(invalid("demand resolution must be a whole number of minutes"));
    }
    let sf = round_significant(peak / p_lab, 12);
    let mut config = cfg.clone();
    config.pv_kw /= sf;
    config.wind_kw /= sf;
    config.grid_limit_kw /= sf;
    config.diesel_kw /= sf;
    config.battery_kwh /= sf;
    let n = demand.p.len();
    Ok(ScaledScenario {
        sf,
        config,
        step_min: step_min as u32,
        demand: demand.p.iter().map(|p| p / sf).collect(),
        pv: vec![0.0; n],
        wind: vec![0.0; n],
    })
}

/// Rounds to `digits` significant decimal digits, so 270 / 1.08 gives 250.
fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

impl ScaledScenario {
    /// Attaches per-kW generation shapes, scaled to this scenario's capacities.
    pub fn with_generation(mut self, pv_per_kw: &[f64], wind_per_kw: &[f64]) -> Result<Self> {
        if pv_per_kw.len() != self.demand.len() || wind_per_kw.len() != self.demand.len() {
            return Err(invalid("generation traces must match the demand length"));
        }
        self.pv = pv_per_kw.iter().map(|f| f * self.config.pv_kw).collect();
        self.wind = wind_per_kw.iter().map(|f| f * self.config.wind_kw).collect();
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationLimits {
    /// Largest acceptable per-step loss rate.
    pub max_loss_rate: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Default for VerificationLimits {
    fn default() -> Self {
        Self { max_loss_rate: 0.05, soc_min: 0.3, soc_max: 1.0 }
    }
}

impl VerificationLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_loss_rate > 0.0 && self.max_loss_rate < 1.0) {
            return Err(invalid("max loss rate must lie in (0, 1)"));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(invalid("verification SOC bounds need 0 <= soc_min < soc_max <= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    PowerBalance,
    SocBounds,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::PowerBalance => "power-balance",
            Condition::SocBounds => "soc-bounds",
        })
    }
}

/// First violated condition of a failed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub step: usize,
    /// Loss rate or SOC at the violating step.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail(Violation),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub sf: f64,
    pub step_min: u32,
    pub max_loss_rate: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_start: f64,
    pub soc_end: f64,
    pub verdict: Verdict,
    /// Per-step loss rate; zero for skipped steps.
    #[serde(skip)]
    pub loss: Vec<f64>,
    #[serde(skip)]
    pub steps: Vec<StepRecord>,
}

impl VerificationReport {
    /// Writes per-step traces as CSV with a header row.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "minute",
            "demand_kw",
            "pv_kw",
            "wind_kw",
            "discharge_kw",
            "charge_kw",
            "grid_import_kw",
            "grid_export_kw",
            "diesel_kw",
            "curtailed_kw",
            "unmet_kw",
            "soc",
            "loss_rate",
        ])?;
        for (k, (s, loss)) in self.steps.iter().zip(&self.loss).enumerate() {
            let minute = (k as u32 * self.step_min).to_string();
            let values = [
                s.load,
                s.pv,
                s.wind,
                s.discharge,
                s.charge,
                s.grid_import,
                s.grid_export,
                s.diesel,
                s.curtailed,
                s.unmet,
                s.soc,
                *loss,
            ];
            out.write_record(std::iter::once(minute).chain(values.iter().map(|v| v.to_string())))?;
        }
        out.flush().map_err(|e| crate::Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Runs the dispatch kernel over the scaled day and checks loss rate and SOC bounds.
/// `bat` supplies battery behaviour; its capacity is taken from the scaled configuration.
pub fn verify_run(
    sc: &ScaledScenario,
    bat: &BatteryParams,
    limits: &VerificationLimits,
    rules: &DispatchRules,
) -> Result<VerificationReport> {
    limits.validate()?;
    if sc.step_min == 0 || !MINUTES_PER_DAY.is_multiple_of(sc.step_min) {
        return Err(invalid(format!("step of {} min does not divide 24 h", sc.step_min)));
    }
    let n = (MINUTES_PER_DAY / sc.step_min) as usize;
    if sc.demand.len() != n || sc.pv.len() != n || sc.wind.len() != n {
        return Err(invalid(format!("scenario must cover 24 h in {n} steps")));
    }
    let bat = bat.with_capacity(sc.config.battery_kwh);
    bat.validate()?;
    let has_battery = bat.capacity_kwh > 0.0;
    let dt = sc.step_min as f64 / 60.0;
    let mut kernel = Kernel::new(&sc.config, &bat, rules);
    let mut loss = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    let mut first: Option<Violation> = None;
    let mut max_loss: f64 = 0.0;
    let (mut soc_lo, mut soc_hi) = (bat.initial_soc, bat.initial_soc);
    let tol = 1e-9;
    for k in 0..n {
        let s = kernel.step(sc.demand[k], sc.pv[k], sc.wind[k], dt);
        let supplied = s.supplied();
        let rate = if supplied > tol * s.load.max(1e-12) {
            (supplied - s.load).abs() / supplied
        } else if s.load > 0.0 {
            1.0
        } else {
            0.0
        };
        max_loss = max_loss.max(rate);
        if first.is_none() && rate > limits.max_loss_rate {
            first = Some(Violation { condition: Condition::PowerBalance, step: k, value: rate });
        }
        if has_battery {
            soc_lo = soc_lo.min(s.soc);
            soc_hi = soc_hi.max(s.soc);
            if first.is_none() && (s.soc < limits.soc_min - tol || s.soc > limits.soc_max + tol) {
                first = Some(Violation { condition: Condition::SocBounds, step: k, value: s.soc });
            }
        }
        loss.push(rate);
        steps.push(s);
    }
    Ok(VerificationReport {
        sf: sc.sf,
        step_min: sc.step_min,
        max_loss_rate: max_loss,
        soc_min: soc_lo,
        soc_max: soc_hi,
        soc_start: bat.initial_soc,
        soc_end: kernel.soc(),
        verdict: first.map_or(Verdict::Pass, Verdict::Fail),
        loss,
        steps,
    })
}

/// Reports from a cascade and the index of the first passing design, if any.
#[derive(Debug, Clone)]
pub struct CascadeOutcome {
    pub passed: Option<usize>,
    pub reports: Vec<VerificationReport>,
}

/// Verifies designs in rank order until one passes. `build` prepares each design's scaled day.
pub fn verify_cascade<T>(
    ranked: &[RankedDesign<T>],
    mut build: impl FnMut(&RankedDesign<T>) -> Result<ScaledScenario>,
    bat: &BatteryParams,
    limits: &VerificationLimits,
    rules: &DispatchRules,
) -> Result<CascadeOutcome> {
    if ranked.is_empty() {
        return Err(invalid("no ranked designs to verify"));
    }
    let mut reports = Vec::new();
    for (i, design) in ranked.iter().enumerate() {
        let report = verify_run(&build(design)?, bat, limits, rules)?;
        let ok = report.verdict.passed();
        reports.push(report);
        if ok {
            return Ok(CascadeOutcome { passed: Some(i), reports });
        }
    }
    Ok(CascadeOutcome { passed: None, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bat() -> BatteryParams {
        BatteryParams {
            capacity_kwh: 0.0,
            soc_min: 0.3,
            soc_max: 1.0,
            roundtrip_efficiency: 0.85,
            max_c_rate: 0.5,
            initial_soc: 0.4,
        }
    }

    fn day(demand: f64, pv: f64) -> (Configuration, DemandCurve, Vec<f64>) {
        let cfg = Configuration::new(100.0, 0.0, None, 0.0, 0.0);
        let d = DemandCurve { p: vec![demand; 1440], resolution: 1.0 / 60.0 };
        (cfg, d, vec![pv; 1440])
    }

    #[test]
    fn scale_factor_exact() {
        let cfg = Configuration::new(500.0, 330.0, None, 0.0, 4800.0);
        let d = DemandCurve::hourly(vec![100.0, 270.0]);
        let sc = scale(&cfg, &d, 1.08).unwrap();
        assert_eq!(sc.sf, 250.0);
        assert_eq!(sc.config.pv_kw, 2.0);
        let id = scale(&cfg, &d, 270.0).unwrap();
        assert_eq!(id.sf, 1.0);
        assert_eq!(id.demand, d.p);
        assert!(scale(&cfg, &d, 0.0).is_err());
    }

    #[test]
    fn balanced_day_passes() {
        let (cfg, d, pv) = day(50.0, 0.5);
        let sc = scale(&cfg, &d, 50.0).unwrap().with_generation(&pv, &vec![0.0; 1440]).unwrap();
        let r = verify_run(&sc, &bat(), &VerificationLimits::default(), &DispatchRules::default()).unwrap();
        assert!(r.verdict.passed());
        assert_eq!(r.max_loss_rate, 0.0);
    }

    #[test]
    fn deficit_fails_on_power_balance() {
        let (cfg, d, mut pv) = day(50.0, 0.5);
        pv[700] = 0.5 / 1.1;
        let sc = scale(&cfg, &d, 50.0).unwrap().with_generation(&pv, &vec![0.0; 1440]).unwrap();
        let r = verify_run(&sc, &bat(), &VerificationLimits::default(), &DispatchRules::default()).unwrap();
        match r.verdict {
            Verdict::Fail(v) => {
                assert_eq!(v.condition, Condition::PowerBalance);
                assert_eq!(v.step, 700);
                assert!((v.value - 0.1).abs() < 1e-12);
            }
            Verdict::Pass => panic!("expected failure"),
        }
    }

    #[test]
    fn zero_supply_rules() {
        let (cfg, d, pv) = day(0.0, 0.0);
        let d = DemandCurve { p: d.p.iter().enumerate().map(|(k, _)| if k == 3 { 1.0 } else { 0.0 }).collect(), ..d };
        let sc = scale(&cfg, &d, 1.0).unwrap().with_generation(&pv, &pv).unwrap();
        let r = verify_run(&sc, &bat(), &VerificationLimits::default(), &DispatchRules::default()).unwrap();
        assert_eq!(r.loss[0], 0.0);
        assert!(matches!(r.verdict, Verdict::Fail(Violation { step: 3, .. })));
    }

    #[test]
    fn step_must_divide_day() {
        let (cfg, _, _) = day(1.0, 1.0);
        let d = DemandCurve { p: vec![1.0; 206], resolution: 7.0 / 60.0 };
        let sc = scale(&cfg, &d, 1.0).unwrap();
        assert!(verify_run(&sc, &bat(), &VerificationLimits::default(), &DispatchRules::default()).is_err());
    }

    #[test]
    fn cascade_returns_first_pass() {
        let ranked: Vec<RankedDesign<f64>> = [0.9, 1.2, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &pv)| RankedDesign {
                rank: i + 1,
                label: format!("d{i}"),
                npc: 0.0,
                scores: crate::criteria::CriteriaScores::from_array([0.0; 5]),
                cp: 0.0,
                item: pv,
            })
            .collect();
        let build = |d: &RankedDesign<f64>| {
            let (cfg, dem, _) = day(50.0, 0.0);
            scale(&cfg, &dem, 50.0)?.with_generation(&vec![d.item * 0.5; 1440], &vec![0.0; 1440])
        };
        let out =
            verify_cascade(&ranked, build, &bat(), &VerificationLimits::default(), &DispatchRules::default()).unwrap();
        assert_eq!(out.passed, Some(1));
        assert_eq!(out.reports.len(), 2);
    }
}
