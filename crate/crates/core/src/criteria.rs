//! The five criterion scores: emissions reduction, renewable degree, economic factor, security of
//! supply and sizing adequacy.

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::dispatch::{cost_breakdown, Configuration, EconParams, EnergyLedger};
use crate::error::{invalid, Result};

/// Carbon intensity per source, gCO2/kWh, and the renewable fraction of grid energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissivityTable {
    pub pv: f64,
    pub wind: f64,
    pub diesel: f64,
    pub grid: f64,
    pub grid_renewable_fraction: f64,
}

impl EmissivityTable {
    pub fn validate(&self) -> Result<()> {
        if [self.pv, self.wind, self.diesel, self.grid].iter().any(|g| !(*g >= 0.0)) {
            return Err(invalid("emissivities must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.grid_renewable_fraction) {
            return Err(invalid("grid renewable fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Security coefficient per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub pv: f64,
    pub wind: f64,
    pub diesel: f64,
    pub grid: f64,
    pub battery: f64,
}

impl ReliabilityTable {
    pub fn validate(&self) -> Result<()> {
        if [self.pv, self.wind, self.diesel, self.grid, self.battery].iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(invalid("security coefficients must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Criterion values as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaScores {
    pub emr: f64,
    pub reg: f64,
    pub ecf: f64,
    pub ss: f64,
    pub esa: f64,
}

impl CriteriaScores {
    pub const NAMES: [&'static str; 5] = ["EmR", "ReG", "EcF", "SS", "ESA"];

    pub fn as_array(&self) -> [f64; 5] {
        [self.emr, self.reg, self.ecf, self.ss, self.esa]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self { emr: v[0], reg: v[1], ecf: v[2], ss: v[3], esa: v[4] }
    }
}

/// Relative emission reduction against the grid serving the same demand.
pub fn emissions_reduction(ledger: &EnergyLedger, em: &EmissivityTable) -> Result<f64> {
    let served = ledger.served_kwh();
    if !(served > 0.0) || !(em.grid > 0.0) {
        return Err(invalid("emissions reduction needs positive served demand and grid emissivity"));
    }
    let baseline = served * em.grid;
    let hres = ledger.pv_kwh * em.pv
        + ledger.wind_kwh * em.wind
        + ledger.grid_import_kwh * em.grid
        + ledger.diesel_kwh * em.diesel;
    Ok(((baseline - hres) / baseline).clamp(0.0, 1.0))
}

/// Renewable share of generation, counting the grid's renewable fraction.
pub fn renewable_degree(ledger: &EnergyLedger, em: &EmissivityTable) -> Result<f64> {
    let total = ledger.e_hres();
    if !(total > 0.0) {
        return Err(invalid("renewable degree needs positive generation"));
    }
    let ren = ledger.pv_kwh + ledger.wind_kwh + em.grid_renewable_fraction * ledger.grid_import_kwh;
    Ok((ren / total).clamp(0.0, 1.0))
}

/// Discounted costs over discounted energy. Index `t` of each slice is year `t`, year 0 first.
pub fn levelized_cost(costs: &[f64], energy: &[f64], discount_rate: f64) -> Result<f64> {
    if costs.len() != energy.len() {
        return Err(invalid("cost and energy streams differ in length"));
    }
    let df = |t: usize| (1.0 + discount_rate).powi(-(t as i32));
    let c: f64 = costs.iter().enumerate().map(|(t, v)| v * df(t)).sum();
    let e: f64 = energy.iter().enumerate().map(|(t, v)| v * df(t)).sum();
    if !(e > 0.0) {
        return Err(invalid("levelized cost needs positive discounted energy"));
    }
    Ok(c / e)
}

/// Levelized cost of the energy served to the station, €/kWh.
pub fn lcoe(cfg: &Configuration, ledger: &EnergyLedger, econ: &EconParams) -> Result<f64> {
    let c = cost_breakdown(cfg, ledger, econ)?;
    let n = econ.lifetime_years as usize;
    let mut costs = vec![c.annual(); n + 1];
    costs[0] = c.investment;
    if c.replacement > 0.0 {
        // Stored as a present value; undo the discount so the stream discounts it once.
        let year = econ.battery_replacement_year as usize;
        costs[year] += c.replacement * (1.0 + econ.discount_rate).powi(year as i32);
    }
    let mut energy = vec![ledger.served_kwh(); n + 1];
    energy[0] = 0.0;
    levelized_cost(&costs, &energy, econ.discount_rate)
}

pub fn economic_factor(lcoe_hres: f64, lcoe_grid: f64) -> Result<f64> {
    if !(lcoe_hres > 0.0) {
        return Err(invalid(format!("LCOE must be positive, got {lcoe_hres}")));
    }
    Ok((lcoe_grid / lcoe_hres).min(1.0))
}

/// Combined reliability 1 - Π(1 - f_j) over installed sources.
pub fn security_of_supply(
    cfg: &Configuration,
    ledger: &EnergyLedger,
    rel: &ReliabilityTable,
    demand: &DemandCurve,
) -> Result<f64> {
    let peak = demand.peak();
    let energy = demand.energy();
    if !(peak > 0.0) {
        return Err(invalid("security of supply needs a positive demand peak"));
    }
    let days = demand.p.len() as f64 * demand.resolution / 24.0;
    let daily = energy / days;
    let mut factors = Vec::new();
    if cfg.pv_kw > 0.0 {
        factors.push((ledger.pv_kwh / energy).min(1.0) * rel.pv);
    }
    if cfg.wind_kw > 0.0 {
        factors.push((ledger.wind_kwh / energy).min(1.0) * rel.wind);
    }
    if cfg.grid_connected {
        factors.push((cfg.grid_limit_kw / peak).min(1.0) * rel.grid);
    }
    if cfg.diesel_kw > 0.0 {
        factors.push((cfg.diesel_kw / peak).min(1.0) * rel.diesel);
    }
    if cfg.battery_kwh > 0.0 {
        factors.push((cfg.battery_kwh / daily).min(1.0) * rel.battery);
    }
    Ok(combine_reliability(&factors))
}

/// 1 - Π(1 - f_j), clamped to [0, 1]; zero for no sources.
pub fn combine_reliability(factors: &[f64]) -> f64 {
    if factors.is_empty() {
        return 0.0;
    }
    (1.0 - factors.iter().map(|f| 1.0 - f).product::<f64>()).clamp(0.0, 1.0)
}

/// Demand over generation, saturating at one.
pub fn sizing_adequacy(ledger: &EnergyLedger) -> Result<f64> {
    let total = ledger.e_hres();
    if !(total > 0.0) {
        return Err(invalid("sizing adequacy needs positive generation"));
    }
    Ok((ledger.demand_kwh / total).min(1.0))
}

/// All five scores for one simulated configuration.
pub fn score(
    cfg: &Configuration,
    ledger: &EnergyLedger,
    demand: &DemandCurve,
    econ: &EconParams,
    em: &EmissivityTable,
    rel: &ReliabilityTable,
) -> Result<CriteriaScores> {
    Ok(CriteriaScores {
        emr: emissions_reduction(ledger, em)?,
        reg: renewable_degree(ledger, em)?,
        ecf: economic_factor(lcoe(cfg, ledger, econ)?, econ.grid_price)?,
        ss: security_of_supply(cfg, ledger, rel, demand)?,
        esa: sizing_adequacy(ledger)?,
    })
}
