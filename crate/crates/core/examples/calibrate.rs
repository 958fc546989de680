//! Prints the solar derate and wind rated speed that reproduce the target equivalent hours
//! for a scenario, then the top of the resulting ranking.
//!
//! `cargo run --release -p hres-core --example calibrate [scenario.json]`

use hres_core::pipeline::{summary_table, Pipeline};
use hres_core::resources::{calibrate_derate, calibrate_rated_speed};
use hres_core::{LoadedScenario, Result};

const SOLAR_HOURS: f64 = 1735.0;
const WIND_HOURS: f64 = 1889.0;

fn main() -> Result<()> {
    let mut loaded = match std::env::args().nth(1) {
        Some(p) => LoadedScenario::load(p.as_ref())?,
        None => LoadedScenario::valencia(),
    };
    let sc = &mut loaded.scenario;
    let derate = calibrate_derate(&sc.solar.resource, SOLAR_HOURS);
    let var = sc.variability.as_ref().map(|v| (v, sc.seed));
    let rated = calibrate_rated_speed(&sc.wind.resource, sc.wind.power_curve, var, WIND_HOURS)?;
    println!("solar derate {derate:.6}");
    println!("wind rated speed {rated:.6} m/s");
    sc.solar.derate = derate;
    sc.wind.power_curve.rated = rated;

    let p = Pipeline::new(loaded, None);
    let demand = p.demand()?;
    let res = p.resources()?;
    let ranked = p.rank(&demand.total, &res)?;
    print!("{}", summary_table(&ranked.ranking[..ranked.ranking.len().min(12)]));
    for d in ranked.ranking.iter().take(3) {
        let r = p.verify(&d.item.configuration, &demand.total, &res)?;
        println!("rank {}: {:?} loss {:.4} soc {:.3}..{:.3}", d.rank, r.verdict, r.max_loss_rate, r.soc_min, r.soc_max);
    }
    Ok(())
}
