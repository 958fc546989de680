use hres_core::criteria::{combine_reliability, emissions_reduction, score, security_of_supply};
use hres_core::demand::evcs_demand_curve;
use hres_core::dispatch::{simulate_year, SourceProfiles};
use hres_core::mcdm::{rank, Scored};
use hres_core::resources::{SolarModel, WindModel};
use hres_core::verify::{scale, verify_run};
use hres_core::{
    Configuration, CriteriaScores, DemandCurve, EmissivityTable, LoadedScenario, TrafficProfile, WeightVector,
};
use proptest::prelude::*;

fn valencia() -> LoadedScenario {
    LoadedScenario::valencia()
}

fn config() -> impl Strategy<Value = Configuration> {
    (
        prop_oneof![Just(0.0), 50.0..300.0],
        prop_oneof![Just(0.0), 50.0..300.0],
        prop_oneof![Just(None), (20.0..200.0).prop_map(Some)],
        prop_oneof![Just(0.0), 20.0..150.0],
        prop_oneof![Just(0.0), 10.0..800.0],
    )
        .prop_map(|(pv, wind, grid, diesel, bat)| Configuration::new(pv, wind, grid, diesel, bat))
}

#[derive(Debug)]
struct Case {
    cfg: Configuration,
    load: Vec<f64>,
    pv: Vec<f64>,
    wind: Vec<f64>,
    grid_first: bool,
}

fn case(hours: usize) -> impl Strategy<Value = Case> {
    (
        config(),
        prop::collection::vec(0.0..250.0f64, hours),
        prop::collection::vec(0.0..=1.0f64, hours),
        prop::collection::vec(0.0..=1.0f64, hours),
        any::<bool>(),
    )
        .prop_map(|(cfg, load, pv, wind, grid_first)| Case { cfg, load, pv, wind, grid_first })
}

fn run(c: &Case) -> hres_core::EnergyLedger {
    let sc = valencia().scenario;
    let bat = sc.battery.with_capacity(c.cfg.battery_kwh);
    let rules = hres_core::DispatchRules { grid_first: c.grid_first, ..sc.dispatch };
    let profiles = SourceProfiles::for_config(&c.pv, &c.wind, &c.cfg);
    simulate_year(&c.cfg, &DemandCurve::hourly(c.load.clone()), &profiles, &bat, &rules).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_step_conserves_energy(c in case(72)) {
        let sc = valencia().scenario;
        let l = run(&c);
        prop_assert!(l.max_residual_kwh < 1e-6);
        for s in &l.steps {
            prop_assert!(s.balance_residual().abs() < 1e-6);
            for v in [s.ren_to_load, s.charge, s.discharge, s.grid_import, s.grid_export, s.diesel, s.curtailed, s.unmet] {
                prop_assert!(v >= -1e-12);
            }
            if c.cfg.battery_kwh > 0.0 {
                prop_assert!(s.soc >= sc.battery.soc_min - 1e-9 && s.soc <= sc.battery.soc_max + 1e-9);
            }
            if c.cfg.grid_connected {
                prop_assert!(s.grid_import <= c.cfg.grid_limit_kw + 1e-9);
            }
            prop_assert!(s.diesel <= c.cfg.diesel_kw + 1e-9);
        }
    }

    #[test]
    fn soc_rises_while_diesel_exceeds_load(c in case(72), diesel in 50.0..300.0f64, min_load in 0.0..=1.0f64) {
        let sc = valencia().scenario;
        let cfg = Configuration { diesel_kw: diesel, ..c.cfg.clone() };
        prop_assume!(cfg.battery_kwh > 0.0);
        let rules = hres_core::DispatchRules { grid_first: c.grid_first, diesel_min_load: min_load, ..sc.dispatch };
        let bat = sc.battery.with_capacity(cfg.battery_kwh);
        let profiles = SourceProfiles::for_config(&c.pv, &c.wind, &cfg);
        let l = simulate_year(&cfg, &DemandCurve::hourly(c.load.clone()), &profiles, &bat, &rules).unwrap();
        let mut before = bat.initial_soc;
        for s in &l.steps {
            if s.diesel > s.load {
                prop_assert!(s.soc >= before - 1e-12, "{s:?} from {before}");
            }
            before = s.soc;
        }
    }

    #[test]
    fn scores_lie_in_unit_interval(c in case(48)) {
        let sc = valencia().scenario;
        let l = run(&c);
        prop_assume!(l.e_hres() > 0.0 && l.served_kwh() > 0.0);
        let demand = DemandCurve::hourly(c.load.clone());
        let s = score(&c.cfg, &l, &demand, &sc.economics, &sc.emissivity, &sc.reliability).unwrap();
        for v in s.as_array() {
            prop_assert!((0.0..=1.0).contains(&v), "{s:?}");
        }
    }

    #[test]
    fn adding_a_factor_never_lowers_reliability(
        fs in prop::collection::vec(0.0..=1.0f64, 0..6),
        extra in 0.0..=1.0f64,
        bump in 0.0..=1.0f64,
    ) {
        let base = combine_reliability(&fs);
        let mut more = fs.clone();
        more.push(extra);
        prop_assert!(combine_reliability(&more) >= base - 1e-12);
        if let Some(first) = fs.first() {
            let mut up = fs.clone();
            up[0] = (first + bump).min(1.0);
            prop_assert!(combine_reliability(&up) >= base - 1e-12);
        }
    }

    #[test]
    fn adding_a_source_never_lowers_security_of_supply(c in case(24), grid in 20.0..300.0, diesel in 20.0..300.0, bat in 10.0..5000.0) {
        let sc = valencia().scenario;
        prop_assume!(c.load.iter().any(|p| *p > 0.0));
        let l = run(&c);
        let demand = DemandCurve::hourly(c.load.clone());
        let base = security_of_supply(&c.cfg, &l, &sc.reliability, &demand).unwrap();
        let mut with = c.cfg.clone();
        if !with.grid_connected {
            with.grid_connected = true;
            with.grid_limit_kw = grid;
        }
        prop_assert!(security_of_supply(&with, &l, &sc.reliability, &demand).unwrap() >= base - 1e-12);
        let mut with = c.cfg.clone();
        with.diesel_kw += diesel;
        prop_assert!(security_of_supply(&with, &l, &sc.reliability, &demand).unwrap() >= base - 1e-12);
        let mut with = c.cfg.clone();
        with.battery_kwh += bat;
        prop_assert!(security_of_supply(&with, &l, &sc.reliability, &demand).unwrap() >= base - 1e-12);
    }

    #[test]
    fn emissions_reduction_extremes(load in prop::collection::vec(1.0..250.0f64, 24), pv in prop::collection::vec(0.0..=1.0f64, 24)) {
        let sc = valencia().scenario;
        let grid_only = Case {
            cfg: Configuration::new(0.0, 0.0, Some(300.0), 0.0, 0.0),
            load: load.clone(),
            pv: vec![0.0; 24],
            wind: vec![0.0; 24],
            grid_first: false,
        };
        let l = run(&grid_only);
        prop_assert!(emissions_reduction(&l, &sc.emissivity).unwrap().abs() < 1e-12);

        let mixed = Case {
            cfg: Configuration::new(200.0, 0.0, Some(300.0), 100.0, 0.0),
            load,
            pv,
            wind: vec![0.0; 24],
            grid_first: false,
        };
        let l = run(&mixed);
        let clean = EmissivityTable { pv: 0.0, wind: 0.0, diesel: 0.0, ..sc.emissivity.clone() };
        let off_grid = hres_core::EnergyLedger { grid_import_kwh: 0.0, ..l };
        prop_assert_eq!(emissions_reduction(&off_grid, &clean).unwrap(), 1.0);
    }

    #[test]
    fn ranking_ignores_input_order(
        rows in prop::collection::vec((prop::array::uniform5(0.0..=1.0f64), 1e5..1e7f64), 1..30)
            .prop_flat_map(|rows| { let n = rows.len(); (Just(rows.clone()), Just(rows).prop_shuffle(), Just(n)) }),
    ) {
        let (original, shuffled, _) = rows;
        let scored = |v: &[([f64; 5], f64)]| -> Vec<Scored<()>> {
            v.iter()
                .map(|(s, npc)| Scored { item: (), label: format!("{s:?}{npc}"), npc: *npc, scores: CriteriaScores::from_array(*s) })
                .collect()
        };
        let w = WeightVector::equal();
        let a: Vec<String> = rank(scored(&original), &w).unwrap().into_iter().map(|r| r.label).collect();
        let b: Vec<String> = rank(scored(&shuffled), &w).unwrap().into_iter().map(|r| r.label).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn demand_is_linear_in_traffic(n in prop::collection::vec(0.0..3000.0f64, 24), k in 0.0..10.0f64) {
        let classes = valencia().scenario.ev_classes;
        let base = evcs_demand_curve(&TrafficProfile::new(n.clone()).unwrap(), &classes).unwrap();
        let scaled = evcs_demand_curve(&TrafficProfile::new(n.iter().map(|v| v * k).collect()).unwrap(), &classes).unwrap();
        for (a, b) in base.p.iter().zip(&scaled.p) {
            prop_assert!(*a >= 0.0);
            prop_assert!((a * k - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn verification_is_scale_invariant(c in case(24), p_lab in 0.1..100.0f64) {
        let sc = valencia().scenario;
        prop_assume!(c.load.iter().any(|p| *p > 0.0));
        let fine = |v: &[f64]| v.iter().flat_map(|x| std::iter::repeat_n(*x, 60)).collect::<Vec<_>>();
        let demand = DemandCurve { p: fine(&c.load), resolution: 1.0 / 60.0 };
        let bat = sc.battery.clone();
        let run = |p: f64| {
            let s = scale(&c.cfg, &demand, p).unwrap().with_generation(&fine(&c.pv), &fine(&c.wind)).unwrap();
            verify_run(&s, &bat, &sc.verification.limits, &sc.dispatch).unwrap()
        };
        let a = run(p_lab);
        let b = run(demand.peak());
        prop_assert!((a.max_loss_rate - b.max_loss_rate).abs() <= 1e-9 * a.max_loss_rate.max(1.0));
        prop_assert!((a.soc_min - b.soc_min).abs() < 1e-9 && (a.soc_max - b.soc_max).abs() < 1e-9);
        prop_assert_eq!(a.verdict.passed(), b.verdict.passed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn synthesis_is_deterministic_per_seed(seed in any::<u64>()) {
        let sc = valencia().scenario;
        let var = sc.variability.as_ref().unwrap();
        let solar = |s| SolarModel::new(&sc.solar.resource, sc.solar.derate, Some((var, s))).unwrap().hourly_per_kw();
        let wind = |s| WindModel::new(&sc.wind.resource, sc.wind.power_curve, Some((var, s))).unwrap().hourly_per_kw();
        prop_assert_eq!(solar(seed), solar(seed));
        prop_assert_eq!(wind(seed), wind(seed));
        prop_assert_ne!(wind(seed), wind(seed.wrapping_add(1)));
        let total: f64 = solar(seed).iter().sum();
        prop_assert!((total - 1735.0).abs() < 1735.0 * 0.02);
        for v in solar(seed).into_iter().chain(wind(seed)) {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
