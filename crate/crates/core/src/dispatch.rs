//! Hourly energy balance of a candidate system over one year, and its net present cost.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::error::{invalid, Result};
use crate::resources::GenerationProfile;

/// One candidate system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub pv_kw: f64,
    pub wind_kw: f64,
    pub grid_connected: bool,
    pub grid_limit_kw: f64,
    pub diesel_kw: f64,
    pub battery_kwh: f64,
    /// Component family, e.g. "Ren + grid + bat".
    pub label: String,
}

impl Configuration {
    /// Builds a configuration; `grid_limit_kw` of `None` means off-grid.
    pub fn new(pv_kw: f64, wind_kw: f64, grid_limit_kw: Option<f64>, diesel_kw: f64, battery_kwh: f64) -> Self {
        let mut cfg = Self {
            pv_kw,
            wind_kw,
            grid_connected: grid_limit_kw.is_some(),
            grid_limit_kw: grid_limit_kw.unwrap_or(0.0),
            diesel_kw,
            battery_kwh,
            label: String::new(),
        };
        cfg.label = cfg.family();
        cfg
    }

    pub fn family(&self) -> String {
        let mut parts = Vec::new();
        if self.pv_kw > 0.0 || self.wind_kw > 0.0 {
            parts.push("ren");
        }
        if self.grid_connected {
            parts.push("grid");
        }
        if self.diesel_kw > 0.0 {
            parts.push("gen");
        }
        if self.battery_kwh > 0.0 {
            parts.push("bat");
        }
        if parts.is_empty() {
            return "None".into();
        }
        let joined = parts.join(" + ");
        let mut chars = joined.chars();
        let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
        format!("{first}{}", chars.as_str())
    }

    /// Unique component key, e.g. `PV500-W330-G270-D0-B4800`.
    pub fn key(&self) -> String {
        format!(
            "PV{}-W{}-G{}-D{}-B{}",
            self.pv_kw,
            self.wind_kw,
            if self.grid_connected { self.grid_limit_kw } else { 0.0 },
            self.diesel_kw,
            self.battery_kwh
        )
    }

    pub fn has_renewables(&self) -> bool {
        self.pv_kw > 0.0 || self.wind_kw > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pv_kw", self.pv_kw),
            ("wind_kw", self.wind_kw),
            ("grid_limit_kw", self.grid_limit_kw),
            ("diesel_kw", self.diesel_kw),
            ("battery_kwh", self.battery_kwh),
        ] {
            if !(v >= 0.0) {
                return Err(invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.grid_connected != (self.grid_limit_kw > 0.0) {
            return Err(invalid("grid_limit_kw must be positive exactly when grid_connected"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub capacity_kwh: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub roundtrip_efficiency: f64,
    /// Maximum charge or discharge power per kWh of capacity, 1/h.
    pub max_c_rate: f64,
    pub initial_soc: f64,
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_kwh >= 0.0) {
            return Err(invalid("battery capacity must be >= 0"));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(invalid("battery SOC bounds need 0 <= soc_min < soc_max <= 1"));
        }
        if !(self.roundtrip_efficiency > 0.0 && self.roundtrip_efficiency <= 1.0) {
            return Err(invalid("roundtrip efficiency must lie in (0, 1]"));
        }
        if !(self.max_c_rate > 0.0) {
            return Err(invalid("max C-rate must be positive"));
        }
        if !(self.soc_min <= self.initial_soc && self.initial_soc <= self.soc_max) {
            return Err(invalid("initial SOC must lie within the SOC bounds"));
        }
        Ok(())
    }

    pub fn with_capacity(&self, capacity_kwh: f64) -> Self {
        Self { capacity_kwh, ..self.clone() }
    }
}

/// Dispatch options. The default is plain load following: renewables, then battery, then grid,
/// then diesel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchRules {
    /// Draw from the grid before discharging the battery.
    #[serde(default)]
    pub grid_first: bool,
    /// With a diesel present, the battery discharges only down to this SOC before the diesel
    /// starts; it may go on to `soc_min` if the diesel cannot cover the deficit.
    #[serde(default)]
    pub diesel_start_soc: Option<f64>,
    /// Minimum diesel output while running, fraction of rating. Excess charges the battery.
    #[serde(default)]
    pub diesel_min_load: f64,
    /// Fuel use per kWh delivered, L/kWh.
    #[serde(default = "default_fuel_per_kwh")]
    pub fuel_l_per_kwh: f64,
    /// Fuel use per rated kW per running hour, L/(kW·h).
    #[serde(default)]
    pub fuel_l_per_kw_h: f64,
}

fn default_fuel_per_kwh() -> f64 {
    0.3
}

impl Default for DispatchRules {
    fn default() -> Self {
        Self {
            grid_first: false,
            diesel_start_soc: None,
            diesel_min_load: 0.0,
            fuel_l_per_kwh: default_fuel_per_kwh(),
            fuel_l_per_kw_h: 0.0,
        }
    }
}

impl DispatchRules {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.diesel_start_soc {
            if !(0.0..=1.0).contains(&s) {
                return Err(invalid("diesel start SOC must lie in [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.diesel_min_load) {
            return Err(invalid("diesel minimum load must lie in [0, 1]"));
        }
        if !(self.fuel_l_per_kwh >= 0.0 && self.fuel_l_per_kw_h >= 0.0) {
            return Err(invalid("fuel coefficients must be >= 0"));
        }
        Ok(())
    }
}

/// Power flows of one step, kW. Multiply by the step length for energy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub load: f64,
    pub pv: f64,
    pub wind: f64,
    /// Renewable power serving the load directly.
    pub ren_to_load: f64,
    /// Power drawn from the bus into the battery.
    pub charge: f64,
    /// Power delivered by the battery to the bus.
    pub discharge: f64,
    pub grid_import: f64,
    pub grid_export: f64,
    pub diesel: f64,
    pub curtailed: f64,
    pub unmet: f64,
    /// SOC at the end of the step.
    pub soc: f64,
}

impl StepRecord {
    /// Power delivered to the load.
    pub fn supplied(&self) -> f64 {
        self.load - self.unmet
    }

    /// Supply minus use; zero up to rounding.
    pub fn balance_residual(&self) -> f64 {
        self.pv + self.wind + self.discharge + self.grid_import + self.diesel + self.unmet
            - self.load
            - self.charge
            - self.grid_export
            - self.curtailed
    }
}

/// Stateful single-step dispatch shared by the annual simulation and the verification harness.
#[derive(Debug, Clone)]
pub struct Kernel<'a> {
    cfg: &'a Configuration,
    bat: &'a BatteryParams,
    rules: &'a DispatchRules,
    soc: f64,
}

impl<'a> Kernel<'a> {
    pub fn new(cfg: &'a Configuration, bat: &'a BatteryParams, rules: &'a DispatchRules) -> Self {
        Self { cfg, bat, rules, soc: bat.initial_soc }
    }

    pub fn soc(&self) -> f64 {
        self.soc
    }

    fn cap(&self) -> f64 {
        self.cfg.battery_kwh
    }

    fn eta(&self) -> f64 {
        self.bat.roundtrip_efficiency.sqrt()
    }

    fn discharge(&mut self, want: f64, floor: f64, dt: f64) -> f64 {
        let cap = self.cap();
        if cap <= 0.0 || want <= 0.0 {
            return 0.0;
        }
        let available = (self.soc - floor).max(0.0) * cap * self.eta() / dt;
        let x = want.min(self.bat.max_c_rate * cap).min(available);
        self.soc = (self.soc - x * dt / (self.eta() * cap)).max(floor.min(self.soc));
        x
    }

    fn charge(&mut self, offer: f64, dt: f64) -> f64 {
        let cap = self.cap();
        if cap <= 0.0 || offer <= 0.0 {
            return 0.0;
        }
        let room = (self.bat.soc_max - self.soc).max(0.0) * cap / (self.eta() * dt);
        let x = offer.min(self.bat.max_c_rate * cap).min(room);
        self.soc = (self.soc + x * self.eta() * dt / cap).min(self.bat.soc_max.max(self.soc));
        x
    }

    fn import(&self, want: f64) -> f64 {
        if self.cfg.grid_connected && want > 0.0 {
            want.min(self.cfg.grid_limit_kw)
        } else {
            0.0
        }
    }

    /// Advances one step of `dt` hours with the given load and renewable output, kW.
    pub fn step(&mut self, load: f64, pv: f64, wind: f64, dt: f64) -> StepRecord {
        let mut r = StepRecord { load, pv, wind, ..Default::default() };
        let ren = pv + wind;
        r.ren_to_load = ren.min(load);
        let mut surplus = ren - r.ren_to_load;
        let mut deficit = load - r.ren_to_load;

        if deficit > 0.0 {
            let has_diesel = self.cfg.diesel_kw > 0.0;
            let floor = if has_diesel {
                self.rules.diesel_start_soc.map_or(self.bat.soc_min, |s| s.max(self.bat.soc_min))
            } else {
                self.bat.soc_min
            };
            if self.rules.grid_first {
                r.grid_import = self.import(deficit);
                deficit -= r.grid_import;
                r.discharge = self.discharge(deficit, floor, dt);
                deficit -= r.discharge;
            } else {
                r.discharge = self.discharge(deficit, floor, dt);
                deficit -= r.discharge;
                r.grid_import = self.import(deficit);
                deficit -= r.grid_import;
            }
            if has_diesel && deficit > 1e-12 {
                let rating = self.cfg.diesel_kw;
                // A running diesel takes over what the battery just supplied, up to its rating.
                let back = r.discharge.min((rating - deficit).max(0.0));
                if back > 0.0 {
                    self.soc += back * dt / (self.eta() * self.cap());
                    r.discharge -= back;
                    deficit += back;
                }
                r.diesel = deficit.max(self.rules.diesel_min_load * rating).min(rating);
                let used = r.diesel.min(deficit);
                deficit -= used;
                surplus += r.diesel - used;
            }
            let more = self.discharge(deficit, self.bat.soc_min, dt);
            r.discharge += more;
            deficit -= more;
            r.unmet = deficit.max(0.0);
        }

        if surplus > 0.0 {
            r.charge = self.charge(surplus, dt);
            surplus -= r.charge;
            if self.cfg.grid_connected {
                r.grid_export = surplus.min(self.cfg.grid_limit_kw);
                surplus -= r.grid_export;
            }
            r.curtailed = surplus.max(0.0);
        }
        r.soc = self.soc;
        r
    }
}

/// Per-source output profiles sized to a configuration.
#[derive(Debug, Clone)]
pub struct SourceProfiles {
    pub pv: GenerationProfile,
    pub wind: GenerationProfile,
}

impl SourceProfiles {
    /// Scales per-kW shapes to the capacities of `cfg`.
    pub fn for_config(pv_per_kw: &[f64], wind_per_kw: &[f64], cfg: &Configuration) -> Self {
        Self {
            pv: GenerationProfile::from_per_kw(pv_per_kw, cfg.pv_kw),
            wind: GenerationProfile::from_per_kw(wind_per_kw, cfg.wind_kw),
        }
    }
}

/// Annual dispatch result. Energies in kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub demand_kwh: f64,
    pub peak_demand_kw: f64,
    pub pv_kwh: f64,
    pub wind_kwh: f64,
    pub pv_to_load_kwh: f64,
    pub wind_to_load_kwh: f64,
    pub battery_to_load_kwh: f64,
    pub grid_import_kwh: f64,
    pub grid_export_kwh: f64,
    pub diesel_kwh: f64,
    pub diesel_hours: f64,
    pub diesel_fuel_l: f64,
    pub unmet_kwh: f64,
    pub curtailed_kwh: f64,
    pub battery_charge_kwh: f64,
    /// Energy delivered by the battery over the year.
    pub battery_throughput_kwh: f64,
    pub soc_min_seen: f64,
    pub soc_max_seen: f64,
    /// Largest absolute hourly balance residual.
    pub max_residual_kwh: f64,
    #[serde(skip)]
    pub steps: Vec<StepRecord>,
}

impl EnergyLedger {
    /// Total generation: PV, wind, grid purchases and diesel.
    pub fn e_hres(&self) -> f64 {
        self.pv_kwh + self.wind_kwh + self.grid_import_kwh + self.diesel_kwh
    }

    pub fn served_kwh(&self) -> f64 {
        self.demand_kwh - self.unmet_kwh
    }

    pub fn shortage(&self) -> f64 {
        if self.demand_kwh > 0.0 {
            self.unmet_kwh / self.demand_kwh
        } else {
            0.0
        }
    }

    /// Writes the hourly trace as CSV with a header row.
    pub fn write_hourly_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "hour",
            "load_kw",
            "pv_kw",
            "wind_kw",
            "charge_kw",
            "discharge_kw",
            "grid_import_kw",
            "grid_export_kw",
            "diesel_kw",
            "curtailed_kw",
            "unmet_kw",
            "soc",
        ])?;
        for (h, s) in self.steps.iter().enumerate() {
            out.write_record(
                std::iter::once(h.to_string()).chain(
                    [
                        s.load,
                        s.pv,
                        s.wind,
                        s.charge,
                        s.discharge,
                        s.grid_import,
                        s.grid_export,
                        s.diesel,
                        s.curtailed,
                        s.unmet,
                        s.soc,
                    ]
                    .iter()
                    .map(|v| v.to_string()),
                ),
            )?;
        }
        out.flush().map_err(|e| crate::Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Simulates a year of hourly dispatch.
pub fn simulate_year(
    cfg: &Configuration,
    demand: &DemandCurve,
    profiles: &SourceProfiles,
    bat: &BatteryParams,
    rules: &DispatchRules,
) -> Result<EnergyLedger> {
    cfg.validate()?;
    bat.validate()?;
    rules.validate()?;
    let mismatch = |a: f64, b: f64| (a - b).abs() > 1e-9 * a.abs().max(1.0);
    if mismatch(profiles.pv.nameplate, cfg.pv_kw) || mismatch(profiles.wind.nameplate, cfg.wind_kw) {
        return Err(invalid(format!(
            "profile nameplates (PV {}, wind {}) do not match configuration (PV {}, wind {})",
            profiles.pv.nameplate, profiles.wind.nameplate, cfg.pv_kw, cfg.wind_kw
        )));
    }
    if mismatch(bat.capacity_kwh, cfg.battery_kwh) {
        return Err(invalid("battery capacity does not match configuration"));
    }
    let n = demand.p.len();
    if profiles.pv.p.len() != n || profiles.wind.p.len() != n {
        return Err(invalid(format!(
            "profile lengths ({}, {}) differ from demand length {n}",
            profiles.pv.p.len(),
            profiles.wind.p.len()
        )));
    }
    let dt = demand.resolution;
    let mut kernel = Kernel::new(cfg, bat, rules);
    let mut steps = Vec::with_capacity(n);
    let mut ledger = EnergyLedger {
        demand_kwh: 0.0,
        peak_demand_kw: demand.peak(),
        pv_kwh: 0.0,
        wind_kwh: 0.0,
        pv_to_load_kwh: 0.0,
        wind_to_load_kwh: 0.0,
        battery_to_load_kwh: 0.0,
        grid_import_kwh: 0.0,
        grid_export_kwh: 0.0,
        diesel_kwh: 0.0,
        diesel_hours: 0.0,
        diesel_fuel_l: 0.0,
        unmet_kwh: 0.0,
        curtailed_kwh: 0.0,
        battery_charge_kwh: 0.0,
        battery_throughput_kwh: 0.0,
        soc_min_seen: bat.initial_soc,
        soc_max_seen: bat.initial_soc,
        max_residual_kwh: 0.0,
        steps: Vec::new(),
    };
    for t in 0..n {
        let s = kernel.step(demand.p[t], profiles.pv.p[t], profiles.wind.p[t], dt);
        let ren = s.pv + s.wind;
        let pv_share = if ren > 0.0 { s.pv / ren } else { 0.0 };
        ledger.demand_kwh += s.load * dt;
        ledger.pv_kwh += s.pv * dt;
        ledger.wind_kwh += s.wind * dt;
        ledger.pv_to_load_kwh += s.ren_to_load * pv_share * dt;
        ledger.wind_to_load_kwh += s.ren_to_load * (1.0 - pv_share) * dt;
        ledger.battery_to_load_kwh += s.discharge * dt;
        ledger.grid_import_kwh += s.grid_import * dt;
        ledger.grid_export_kwh += s.grid_export * dt;
        ledger.diesel_kwh += s.diesel * dt;
        if s.diesel > 0.0 {
            ledger.diesel_hours += dt;
            ledger.diesel_fuel_l += rules.fuel_l_per_kw_h * cfg.diesel_kw * dt;
        }
        ledger.diesel_fuel_l += rules.fuel_l_per_kwh * s.diesel * dt;
        ledger.unmet_kwh += s.unmet * dt;
        ledger.curtailed_kwh += s.curtailed * dt;
        ledger.battery_charge_kwh += s.charge * dt;
        ledger.battery_throughput_kwh += s.discharge * dt;
        ledger.soc_min_seen = ledger.soc_min_seen.min(s.soc);
        ledger.soc_max_seen = ledger.soc_max_seen.max(s.soc);
        ledger.max_residual_kwh = ledger.max_residual_kwh.max((s.balance_residual() * dt).abs());
        steps.push(s);
    }
    ledger.steps = steps;
    Ok(ledger)
}

/// True when unmet load is at most `max_shortage` of demand.
pub fn feasible(ledger: &EnergyLedger, max_shortage: f64) -> bool {
    ledger.unmet_kwh <= max_shortage * ledger.demand_kwh
}

/// Economic inputs. Currency units are euros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    pub pv_investment_per_kw: f64,
    pub pv_om_per_kw_year: f64,
    pub wind_investment_per_kw: f64,
    pub wind_om_per_kw_year: f64,
    pub diesel_investment_per_kw: f64,
    pub diesel_om_per_hour: f64,
    pub fuel_price_per_l: f64,
    pub battery_investment_per_unit: f64,
    pub battery_om_per_unit_year: f64,
    /// Capacity of one priced battery unit, kWh.
    pub battery_unit_kwh: f64,
    /// Lifetime energy throughput per kWh of capacity before replacement, kWh/kWh.
    pub battery_throughput_per_kwh: f64,
    pub battery_replacement_year: u32,
    /// Grid purchase price, €/kWh.
    pub grid_price: f64,
    /// Grid sale price, €/kWh. Defaults to the purchase price.
    #[serde(default)]
    pub grid_export_price: Option<f64>,
    pub lifetime_years: u32,
    pub discount_rate: f64,
}

impl EconParams {
    pub fn validate(&self) -> Result<()> {
        if self.lifetime_years == 0 {
            return Err(invalid("project lifetime must be at least one year"));
        }
        if !(0.0..1.0).contains(&self.discount_rate) {
            return Err(invalid("discount rate must lie in [0, 1)"));
        }
        if !(self.battery_unit_kwh > 0.0) {
            return Err(invalid("battery unit size must be positive"));
        }
        let costs = [
            self.pv_investment_per_kw,
            self.pv_om_per_kw_year,
            self.wind_investment_per_kw,
            self.wind_om_per_kw_year,
            self.diesel_investment_per_kw,
            self.diesel_om_per_hour,
            self.fuel_price_per_l,
            self.battery_investment_per_unit,
            self.battery_om_per_unit_year,
            self.grid_price,
            self.grid_export_price.unwrap_or(0.0),
            self.battery_throughput_per_kwh,
        ];
        if costs.iter().any(|c| !(*c >= 0.0)) {
            return Err(invalid("costs must be >= 0"));
        }
        Ok(())
    }

    pub fn export_price(&self) -> f64 {
        self.grid_export_price.unwrap_or(self.grid_price)
    }

    fn discount(&self, year: u32) -> f64 {
        (1.0 + self.discount_rate).powi(-(year as i32))
    }

    /// Sum of discount factors over years 1..=n.
    pub fn annuity_factor(&self) -> f64 {
        (1..=self.lifetime_years).map(|t| self.discount(t)).sum()
    }
}

/// Cost components of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub investment: f64,
    /// Present value of the battery replacement, if any.
    pub replacement: f64,
    pub om_per_year: f64,
    pub fuel_per_year: f64,
    /// Purchases minus sales per year.
    pub grid_net_per_year: f64,
}

impl CostBreakdown {
    pub fn annual(&self) -> f64 {
        self.om_per_year + self.fuel_per_year + self.grid_net_per_year
    }
}

pub fn cost_breakdown(cfg: &Configuration, ledger: &EnergyLedger, econ: &EconParams) -> Result<CostBreakdown> {
    econ.validate()?;
    let units = cfg.battery_kwh / econ.battery_unit_kwh;
    let battery_investment = units * econ.battery_investment_per_unit;
    let investment = cfg.pv_kw * econ.pv_investment_per_kw
        + cfg.wind_kw * econ.wind_investment_per_kw
        + cfg.diesel_kw * econ.diesel_investment_per_kw
        + battery_investment;
    let lifetime_throughput = ledger.battery_throughput_kwh * econ.lifetime_years as f64;
    let replace = cfg.battery_kwh > 0.0
        && econ.battery_replacement_year < econ.lifetime_years
        && lifetime_throughput > econ.battery_throughput_per_kwh * cfg.battery_kwh;
    let replacement = if replace { battery_investment * econ.discount(econ.battery_replacement_year) } else { 0.0 };
    Ok(CostBreakdown {
        investment,
        replacement,
        om_per_year: cfg.pv_kw * econ.pv_om_per_kw_year
            + cfg.wind_kw * econ.wind_om_per_kw_year
            + ledger.diesel_hours * econ.diesel_om_per_hour
            + units * econ.battery_om_per_unit_year,
        fuel_per_year: ledger.diesel_fuel_l * econ.fuel_price_per_l,
        grid_net_per_year: ledger.grid_import_kwh * econ.grid_price - ledger.grid_export_kwh * econ.export_price(),
    })
}

/// Net present cost: investment at year 0 plus discounted recurring costs over years 1..=n.
pub fn npc(cfg: &Configuration, ledger: &EnergyLedger, econ: &EconParams) -> Result<f64> {
    let c = cost_breakdown(cfg, ledger, econ)?;
    Ok(c.investment + c.replacement + c.annual() * econ.annuity_factor())
}
