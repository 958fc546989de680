#![allow(dead_code)]

use hres_core::dispatch::SourceProfiles;
use hres_core::resources::GenerationProfile;
use hres_core::{BatteryParams, Configuration, DemandCurve, DispatchRules, EnergyLedger};

/// Battery size of the toy instance; the only reachable states are empty and full.
pub const TOY_CAP: i64 = 10;

/// A 3-hour instance with PV, wind, an optional grid and a two-state battery. Powers are kW in
/// multiples of `TOY_CAP` with one-hour steps.
#[derive(Debug, Clone)]
pub struct Toy {
    pub load: [i64; 3],
    pub pv: [i64; 3],
    pub wind: [i64; 3],
    pub full_at_start: bool,
    pub grid_limit: Option<i64>,
    pub grid_first: bool,
}

/// Energy flows of one hour chosen by the exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub ren_to_load: i64,
    pub charge: i64,
    pub discharge: i64,
    pub import: i64,
    pub export: i64,
    pub curtailed: i64,
    pub unmet: i64,
    pub soc_after: i64,
}

impl Choice {
    /// Lower is better, compared lexicographically. Unmet load comes first; the two backup
    /// orders differ in whether battery discharge or grid import is minimised next. Curtailment
    /// comes before export so surplus fills the battery, then the grid.
    fn key(&self, grid_first: bool) -> [i64; 6] {
        let (a, b) = if grid_first { (self.discharge, self.import) } else { (self.import, self.discharge) };
        [self.unmet, a, b, self.curtailed, self.export, self.charge + self.discharge]
    }
}

fn hour_choices(t: &Toy, h: usize, soc: i64) -> Vec<Choice> {
    let step = TOY_CAP;
    let gen = t.pv[h] + t.wind[h];
    let load = t.load[h];
    let limit = t.grid_limit.unwrap_or(0);
    let mut out = Vec::new();
    for ren_to_load in (0..=gen.min(load)).step_by(step as usize) {
        for charge in [0, step] {
            for discharge in [0, step] {
                let soc_after = soc + charge - discharge;
                if !(0..=TOY_CAP).contains(&soc_after) || discharge > soc {
                    continue;
                }
                for import in (0..=limit).step_by(step as usize) {
                    for export in (0..=limit).step_by(step as usize) {
                        let unmet = load - ren_to_load - discharge - import;
                        let curtailed = gen - ren_to_load - charge - export;
                        if unmet < 0 || curtailed < 0 {
                            continue;
                        }
                        out.push(Choice {
                            ren_to_load,
                            charge,
                            discharge,
                            import,
                            export,
                            curtailed,
                            unmet,
                            soc_after,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Enumerates every feasible 3-hour dispatch and returns the lexicographically best path.
pub fn brute_force(t: &Toy) -> Vec<Choice> {
    let start = if t.full_at_start { TOY_CAP } else { 0 };
    let mut best: Option<(Vec<[i64; 6]>, Vec<Choice>)> = None;
    let mut stack = vec![(0usize, start, Vec::<Choice>::new())];
    while let Some((h, soc, path)) = stack.pop() {
        if h == 3 {
            let key: Vec<[i64; 6]> = path.iter().map(|c| c.key(t.grid_first)).collect();
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, path));
            }
            continue;
        }
        for c in hour_choices(t, h, soc) {
            let mut next = path.clone();
            next.push(c);
            stack.push((h + 1, c.soc_after, next));
        }
    }
    best.expect("idle dispatch is always feasible").1
}

/// Runs the toy instance through `simulate_year`.
pub fn simulate_toy(t: &Toy) -> EnergyLedger {
    let f = |v: [i64; 3]| v.iter().map(|x| *x as f64).collect::<Vec<_>>();
    let cfg = Configuration::new(30.0, 30.0, t.grid_limit.map(|g| g as f64), 0.0, TOY_CAP as f64);
    let bat = BatteryParams {
        capacity_kwh: TOY_CAP as f64,
        soc_min: 0.0,
        soc_max: 1.0,
        roundtrip_efficiency: 1.0,
        max_c_rate: 1.0,
        initial_soc: if t.full_at_start { 1.0 } else { 0.0 },
    };
    let rules = DispatchRules { grid_first: t.grid_first, ..DispatchRules::default() };
    let profiles = SourceProfiles {
        pv: GenerationProfile { p: f(t.pv), nameplate: 30.0 },
        wind: GenerationProfile { p: f(t.wind), nameplate: 30.0 },
    };
    hres_core::dispatch::simulate_year(&cfg, &DemandCurve::hourly(f(t.load)), &profiles, &bat, &rules)
        .expect("toy instance is valid")
}

/// Compares the kernel against the oracle, returning a description of the first difference.
pub fn oracle_mismatch(t: &Toy) -> Option<String> {
    let want = brute_force(t);
    let got = simulate_toy(t);
    for (h, (w, g)) in want.iter().zip(&got.steps).enumerate() {
        let pairs = [
            ("unmet", w.unmet, g.unmet),
            ("import", w.import, g.grid_import),
            ("export", w.export, g.grid_export),
            ("curtailed", w.curtailed, g.curtailed),
            ("charge", w.charge, g.charge),
            ("discharge", w.discharge, g.discharge),
            ("soc", w.soc_after, g.soc * TOY_CAP as f64),
        ];
        for (name, a, b) in pairs {
            if (a as f64 - b).abs() > 1e-9 {
                return Some(format!("{t:?}: hour {h} {name} oracle {a} kernel {b}"));
            }
        }
    }
    None
}

/// One row of the reference multicriteria table: option number, reference position, the five
/// criteria and the total, all in percent.
pub struct GoldenRow {
    pub option: u32,
    pub position: usize,
    pub scores: [f64; 5],
    pub total: f64,
}

const fn row(option: u32, position: usize, s: [f64; 5], total: f64) -> GoldenRow {
    GoldenRow { option, position, scores: s, total }
}

pub const REFERENCE_SCORES: [GoldenRow; 27] = [
    row(10, 1, [88.84, 100.0, 83.13, 83.29, 88.85], 88.82),
    row(37, 2, [67.95, 91.04, 68.56, 98.14, 80.89], 81.32),
    row(11, 3, [49.05, 80.96, 88.08, 98.44, 65.64], 76.43),
    row(43, 4, [56.65, 86.83, 63.94, 96.17, 77.15], 76.15),
    row(18, 5, [49.05, 80.96, 83.13, 98.73, 65.65], 75.50),
    row(4, 6, [31.70, 57.81, 97.79, 98.20, 88.62], 74.83),
    row(1, 7, [31.11, 64.80, 100.0, 98.26, 79.53], 74.74),
    row(25, 8, [49.09, 80.97, 78.24, 99.02, 65.66], 74.59),
    row(6, 9, [31.12, 64.80, 95.68, 98.58, 79.54], 73.94),
    row(32, 10, [49.11, 80.98, 74.30, 99.31, 65.67], 73.87),
    row(39, 11, [49.67, 81.18, 67.86, 99.67, 65.91], 72.86),
    row(9, 12, [31.12, 64.80, 89.86, 98.91, 79.53], 72.84),
    row(16, 13, [31.71, 57.81, 83.65, 98.54, 88.63], 72.07),
    row(15, 14, [31.12, 64.80, 84.18, 99.05, 79.54], 71.74),
    row(23, 15, [31.74, 57.82, 78.70, 98.80, 88.65], 71.14),
    row(30, 16, [31.76, 57.82, 75.14, 98.80, 88.67], 70.44),
    row(29, 17, [31.13, 64.81, 75.57, 99.05, 79.55], 70.02),
    row(44, 18, [40.15, 81.35, 56.60, 94.55, 72.28], 68.98),
    row(38, 19, [31.76, 57.82, 67.86, 98.80, 88.67], 68.98),
    row(45, 20, [0.0, 56.46, 47.16, 94.71, 86.84], 57.04),
    row(46, 21, [0.0, 54.94, 45.70, 94.71, 84.50], 55.97),
    row(47, 22, [0.0, 40.97, 39.00, 93.33, 86.19], 51.90),
    row(48, 23, [0.0, 41.11, 38.55, 93.33, 86.49], 51.89),
    row(49, 24, [0.0, 40.78, 38.55, 93.33, 85.81], 51.69),
    row(52, 25, [0.0, 59.77, 25.63, 91.30, 53.11], 45.96),
    row(53, 26, [0.0, 40.47, 23.54, 90.30, 62.24], 43.31),
    row(54, 27, [0.0, 31.69, 22.06, 90.01, 66.67], 42.09),
];

/// PV kW, wind kW, grid connection, diesel kW and battery kWh.
pub type Sizing = (f64, f64, bool, f64, f64);

/// The retained configurations by option number. Option 49 uses the 330 kW turbine of the menu.
pub const RETAINED: [(u32, Sizing); 27] = [
    (1, (500.0, 0.0, true, 0.0, 0.0)),
    (4, (0.0, 330.0, true, 0.0, 0.0)),
    (6, (500.0, 0.0, true, 0.0, 960.0)),
    (9, (500.0, 0.0, true, 0.0, 1920.0)),
    (10, (500.0, 330.0, false, 0.0, 4800.0)),
    (11, (500.0, 330.0, true, 0.0, 0.0)),
    (15, (500.0, 0.0, true, 0.0, 2880.0)),
    (16, (0.0, 330.0, true, 0.0, 960.0)),
    (18, (500.0, 330.0, true, 0.0, 960.0)),
    (23, (500.0, 0.0, true, 0.0, 1920.0)),
    (25, (500.0, 330.0, true, 0.0, 1920.0)),
    (29, (500.0, 0.0, true, 0.0, 4800.0)),
    (30, (0.0, 330.0, true, 0.0, 2880.0)),
    (32, (500.0, 330.0, true, 0.0, 2880.0)),
    (37, (500.0, 330.0, false, 280.0, 4800.0)),
    (38, (0.0, 330.0, true, 0.0, 4800.0)),
    (39, (500.0, 330.0, true, 0.0, 4800.0)),
    (43, (500.0, 330.0, false, 280.0, 2880.0)),
    (44, (500.0, 330.0, false, 280.0, 1920.0)),
    (45, (500.0, 0.0, false, 280.0, 4800.0)),
    (46, (500.0, 0.0, false, 280.0, 2880.0)),
    (47, (0.0, 330.0, false, 280.0, 2880.0)),
    (48, (0.0, 330.0, false, 280.0, 4800.0)),
    (49, (0.0, 330.0, false, 280.0, 1920.0)),
    (52, (500.0, 330.0, false, 280.0, 0.0)),
    (53, (500.0, 0.0, false, 280.0, 0.0)),
    (54, (0.0, 330.0, false, 280.0, 0.0)),
];

/// Key of a retained configuration at the bundled grid limit.
pub fn retained_key(sizing: Sizing) -> String {
    let (pv, wind, grid, diesel, bat) = sizing;
    Configuration::new(pv, wind, grid.then_some(270.0), diesel, bat).key()
}
