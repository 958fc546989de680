//! Configuration menu enumeration, discard rules and NPC-ranked feasible candidates.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::dispatch::{
    feasible, npc, simulate_year, BatteryParams, Configuration, DispatchRules, EconParams, EnergyLedger, SourceProfiles,
};
use crate::error::{invalid, Error, Result};

/// Sizing options per component. Grid options are connection limits in kW, `None` for off-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMenu {
    pub pv_kw: Vec<f64>,
    pub wind_kw: Vec<f64>,
    pub grid_limit_kw: Vec<Option<f64>>,
    pub diesel_kw: Vec<f64>,
    pub battery_kwh: Vec<f64>,
}

impl ComponentMenu {
    pub fn validate(&self) -> Result<()> {
        let sets: [(&str, usize); 5] = [
            ("pv_kw", self.pv_kw.len()),
            ("wind_kw", self.wind_kw.len()),
            ("grid_limit_kw", self.grid_limit_kw.len()),
            ("diesel_kw", self.diesel_kw.len()),
            ("battery_kwh", self.battery_kwh.len()),
        ];
        for (name, len) in sets {
            if len == 0 {
                return Err(invalid(format!("menu option set `{name}` is empty")));
            }
        }
        let all = self.pv_kw.iter().chain(&self.wind_kw).chain(&self.diesel_kw).chain(&self.battery_kwh);
        if all.chain(self.grid_limit_kw.iter().flatten()).any(|v| !(*v >= 0.0)) {
            return Err(invalid("menu sizes must be >= 0"));
        }
        if self.grid_limit_kw.iter().flatten().any(|v| *v <= 0.0) {
            return Err(invalid("grid connection limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscardReason {
    NoRenewable,
    GeneratorRedundantWithGrid,
    Infeasible { shortage: f64, max_shortage: f64 },
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscardReason::NoRenewable => f.write_str("no renewable generation"),
            DiscardReason::GeneratorRedundantWithGrid => f.write_str("generator redundant with grid"),
            DiscardReason::Infeasible { shortage, max_shortage } => {
                write!(f, "capacity shortage {:.2}% exceeds {:.2}%", shortage * 100.0, max_shortage * 100.0)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub config: Configuration,
    pub ledger: EnergyLedger,
    pub npc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discard {
    pub config: Configuration,
    pub reason: DiscardReason,
}

/// Feasible survivors sorted by NPC, plus the discard log.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub discards: Vec<Discard>,
}

/// Inputs shared by every simulation of a candidate build.
#[derive(Debug, Clone, Copy)]
pub struct SimContext<'a> {
    pub demand: &'a DemandCurve,
    pub pv_per_kw: &'a [f64],
    pub wind_per_kw: &'a [f64],
    /// Battery parameters; capacity is taken from each configuration.
    pub battery: &'a BatteryParams,
    pub rules: &'a DispatchRules,
    pub econ: &'a EconParams,
}

impl SimContext<'_> {
    pub fn simulate(&self, cfg: &Configuration) -> Result<EnergyLedger> {
        let profiles = SourceProfiles::for_config(self.pv_per_kw, self.wind_per_kw, cfg);
        simulate_year(cfg, self.demand, &profiles, &self.battery.with_capacity(cfg.battery_kwh), self.rules)
    }
}

/// Full Cartesian product of the menu.
pub fn enumerate(menu: &ComponentMenu) -> Vec<Configuration> {
    let mut out = Vec::new();
    for &pv in &menu.pv_kw {
        for &wind in &menu.wind_kw {
            for &grid in &menu.grid_limit_kw {
                for &diesel in &menu.diesel_kw {
                    for &bat in &menu.battery_kwh {
                        out.push(Configuration::new(pv, wind, grid, diesel, bat));
                    }
                }
            }
        }
    }
    out
}

pub fn discard_reason(cfg: &Configuration) -> Option<DiscardReason> {
    if !cfg.has_renewables() {
        Some(DiscardReason::NoRenewable)
    } else if cfg.grid_connected && cfg.diesel_kw > 0.0 {
        Some(DiscardReason::GeneratorRedundantWithGrid)
    } else {
        None
    }
}

/// Splits configurations into those kept and those removed by the discard rules.
pub fn apply_discard_rules(cfgs: Vec<Configuration>) -> (Vec<Configuration>, Vec<Discard>) {
    let mut kept = Vec::new();
    let mut discards = Vec::new();
    for cfg in cfgs {
        match discard_reason(&cfg) {
            Some(reason) => discards.push(Discard { config: cfg, reason }),
            None => kept.push(cfg),
        }
    }
    (kept, discards)
}

/// Ascending NPC, then label, then component key.
pub fn npc_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.npc
        .total_cmp(&b.npc)
        .then_with(|| a.config.label.cmp(&b.config.label))
        .then_with(|| a.config.key().cmp(&b.config.key()))
}

/// Enumerates, applies the discard rules, simulates the rest in parallel, drops infeasible
/// configurations and sorts the survivors by NPC.
pub fn build_candidates(menu: &ComponentMenu, ctx: &SimContext<'_>, max_shortage: f64) -> Result<CandidateSet> {
    menu.validate()?;
    if !(0.0..=1.0).contains(&max_shortage) {
        return Err(invalid(format!("max shortage must lie in [0, 1], got {max_shortage}")));
    }
    let (kept, mut discards) = apply_discard_rules(enumerate(menu));
    let simulated: Vec<(Configuration, EnergyLedger, f64)> = kept
        .into_par_iter()
        .map(|cfg| {
            let wrap = |e: Error| Error::Simulation { config: cfg.key(), source: Box::new(e) };
            let ledger = ctx.simulate(&cfg).map_err(wrap)?;
            let cost = npc(&cfg, &ledger, ctx.econ).map_err(wrap)?;
            Ok((cfg, ledger, cost))
        })
        .collect::<Result<_>>()?;
    let mut candidates = Vec::new();
    for (config, ledger, cost) in simulated {
        if feasible(&ledger, max_shortage) {
            candidates.push(Candidate { config, ledger, npc: cost });
        } else {
            let reason = DiscardReason::Infeasible { shortage: ledger.shortage(), max_shortage };
            discards.push(Discard { config, reason });
        }
    }
    candidates.sort_by(npc_order);
    Ok(CandidateSet { candidates, discards })
}
