//! End-to-end driver: demand, resources, predesign, scoring, ranking and verification, with
//! persisted artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{lcoe, score};
use crate::demand::{demand_by_class, DemandCurve, EvClassId, TrafficProfile};
use crate::dispatch::{BatteryParams, Configuration};
use crate::error::{io_err, Error, Result};
use crate::mcdm::{percent, rank, RankedDesign, Scored, WeightVector};
use crate::predesign::{build_candidates, CandidateSet, SimContext};
use crate::resources::{
    hourly_fine_trace, load_profile_csv, solar_fine_trace, wind_fine_trace, DayWindow, SolarModel, WindModel,
};
use crate::scenario::{LoadedScenario, Scenario};
use crate::verify::{scale, verify_run, ScaledScenario, VerificationReport};

pub const TOOL_VERSION: &str = concat!("hres ", env!("CARGO_PKG_VERSION"));

pub const DEMAND_CSV: &str = "demand.csv";
pub const CANDIDATES_JSON: &str = "candidates.json";
pub const RANKING_CSV: &str = "ranking.csv";
pub const RANKING_JSON: &str = "ranking.json";
pub const RANKING_TXT: &str = "ranking.txt";
pub const VERIFICATION_DIR: &str = "verification";
pub const LEDGER_DIR: &str = "ledgers";

/// Verification reports keyed by rank.
pub type RankReports = Vec<(usize, VerificationReport)>;

/// Identifies the inputs an artifact was produced from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario_sha256: String,
    pub seed: u64,
    pub tool_version: String,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        format!("# scenario_sha256={} seed={} tool={}", self.scenario_sha256, self.seed, self.tool_version)
    }

    fn parse_comment(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# ")?;
        let mut hash = None;
        let mut seed = None;
        let mut tool = None;
        for part in rest.splitn(3, ' ') {
            let (k, v) = part.split_once('=')?;
            match k {
                "scenario_sha256" => hash = Some(v.to_string()),
                "seed" => seed = v.parse().ok(),
                "tool" => tool = Some(v.to_string()),
                _ => return None,
            }
        }
        Some(Self { scenario_sha256: hash?, seed: seed?, tool_version: tool? })
    }
}

/// Station demand per class and in total over the daily template.
#[derive(Debug, Clone)]
pub struct DemandStage {
    pub traffic: TrafficProfile,
    pub per_class: Vec<(EvClassId, DemandCurve)>,
    pub total: DemandCurve,
}

impl DemandStage {
    /// Share of daily demand energy per class.
    pub fn class_shares(&self) -> Vec<(EvClassId, f64)> {
        let total = self.total.energy();
        self.per_class.iter().map(|(id, c)| (*id, if total > 0.0 { c.energy() / total } else { 0.0 })).collect()
    }
}

/// Per-kW generation shapes for the year, and the models behind them when synthesized.
#[derive(Debug, Clone)]
pub struct Resources {
    pub pv_per_kw: Vec<f64>,
    pub wind_per_kw: Vec<f64>,
    pub solar: Option<SolarModel>,
    pub wind: Option<WindModel>,
}

/// What the ranking carries for each design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub key: String,
    pub configuration: Configuration,
    /// €/kWh served.
    pub lcoe: f64,
    /// Unmet fraction of annual demand.
    pub shortage: f64,
}

#[derive(Debug, Clone)]
pub struct RankStage {
    pub candidates: CandidateSet,
    pub ranking: Vec<RankedDesign<Design>>,
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    /// Rank of the first design passing verification.
    pub passed_rank: Option<usize>,
    pub reports: RankReports,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub loaded: LoadedScenario,
    pub seed: u64,
}

impl Pipeline {
    pub fn new(loaded: LoadedScenario, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(loaded.scenario.seed);
        Self { loaded, seed }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.loaded.scenario
    }

    pub fn provenance(&self) -> Provenance {
        Provenance { scenario_sha256: self.loaded.sha256.clone(), seed: self.seed, tool_version: TOOL_VERSION.into() }
    }

    pub fn demand(&self) -> Result<DemandStage> {
        let traffic = self.loaded.traffic()?;
        let classes = &self.scenario().ev_classes;
        let parts = demand_by_class(&traffic, classes)?;
        let mut total = vec![0.0; traffic.n_total.len()];
        for part in &parts {
            total.iter_mut().zip(&part.p).for_each(|(t, p)| *t += p);
        }
        let per_class = classes.iter().map(|c| c.id).zip(parts).collect();
        Ok(DemandStage { traffic, per_class, total: DemandCurve::hourly(total) })
    }

    pub fn resources(&self) -> Result<Resources> {
        let sc = self.scenario();
        let var = sc.variability.as_ref().map(|v| (v, self.seed));
        let (pv_per_kw, solar) = match &sc.solar.profile_csv {
            Some(f) => {
                let p = load_profile_csv(&self.loaded.resolve(&f.path), f.nameplate_kw)?;
                (p.p.iter().map(|v| v / f.nameplate_kw).collect(), None)
            }
            None => {
                let m = SolarModel::new(&sc.solar.resource, sc.solar.derate, var)?;
                (m.hourly_per_kw(), Some(m))
            }
        };
        let (wind_per_kw, wind) = match &sc.wind.profile_csv {
            Some(f) => {
                let p = load_profile_csv(&self.loaded.resolve(&f.path), f.nameplate_kw)?;
                (p.p.iter().map(|v| v / f.nameplate_kw).collect(), None)
            }
            None => {
                let m = WindModel::new(&sc.wind.resource, sc.wind.power_curve, var)?;
                (m.hourly_per_kw(), Some(m))
            }
        };
        Ok(Resources { pv_per_kw, wind_per_kw, solar, wind })
    }

    /// Simulates, filters, scores and ranks the menu against the daily demand template.
    pub fn rank(&self, demand_day: &DemandCurve, res: &Resources) -> Result<RankStage> {
        let sc = self.scenario();
        let demand = demand_day.tile(365);
        let ctx = SimContext {
            demand: &demand,
            pv_per_kw: &res.pv_per_kw,
            wind_per_kw: &res.wind_per_kw,
            battery: &sc.battery,
            rules: &sc.dispatch,
            econ: &sc.economics,
        };
        let candidates = build_candidates(&sc.menu, &ctx, sc.max_shortage)?;
        let scored = candidates
            .candidates
            .par_iter()
            .map(|c| {
                let wrap = |e: Error| Error::Simulation { config: c.config.key(), source: Box::new(e) };
                let scores = score(&c.config, &c.ledger, &demand, &sc.economics, &sc.emissivity, &sc.reliability)
                    .map_err(wrap)?;
                let design = Design {
                    key: c.config.key(),
                    configuration: c.config.clone(),
                    lcoe: lcoe(&c.config, &c.ledger, &sc.economics).map_err(wrap)?,
                    shortage: c.ledger.shortage(),
                };
                Ok(Scored { label: design.key.clone(), npc: c.npc, scores, item: design })
            })
            .collect::<Result<Vec<_>>>()?;
        let ranking = if scored.is_empty() { Vec::new() } else { rank(scored, &sc.weights)? };
        Ok(RankStage { candidates, ranking })
    }

    /// Battery behaviour during verification: the verification SOC window and start SOC.
    pub fn verification_battery(&self) -> BatteryParams {
        let sc = self.scenario();
        BatteryParams {
            soc_min: sc.verification.limits.soc_min,
            soc_max: sc.verification.limits.soc_max,
            initial_soc: sc.verification.initial_soc,
            ..sc.battery.clone()
        }
    }

    /// The verification day for `cfg`, scaled to lab size.
    pub fn scaled_day(&self, cfg: &Configuration, demand_day: &DemandCurve, res: &Resources) -> Result<ScaledScenario> {
        let v = &self.scenario().verification;
        let w = DayWindow { day: v.day_of_year, start_hour: v.start_hour, step_min: v.step_min };
        let demand: Vec<f64> =
            (0..w.steps()).map(|k| demand_day.p[w.locate(k).1.floor() as usize % demand_day.p.len()]).collect();
        let pv = match &res.solar {
            Some(m) => solar_fine_trace(m, &w),
            None => hourly_fine_trace(&res.pv_per_kw, &w),
        };
        let wind = match &res.wind {
            Some(m) => wind_fine_trace(m, &w, &v.wind_fluctuation, self.seed),
            None => hourly_fine_trace(&res.wind_per_kw, &w),
        };
        let curve = DemandCurve { p: demand, resolution: w.step_hours() };
        scale(cfg, &curve, v.p_lab)?.with_generation(&pv, &wind)
    }

    pub fn verify(&self, cfg: &Configuration, demand_day: &DemandCurve, res: &Resources) -> Result<VerificationReport> {
        let sc = self.scaled_day(cfg, demand_day, res)?;
        verify_run(&sc, &self.verification_battery(), &self.scenario().verification.limits, &self.scenario().dispatch)
    }

    /// Verifies ranked designs in order until one passes.
    pub fn verify_cascade(
        &self,
        ranking: &[RankedDesign<Design>],
        demand_day: &DemandCurve,
        res: &Resources,
    ) -> Result<(Option<usize>, RankReports)> {
        let mut reports = Vec::new();
        for d in ranking {
            let r = self.verify(&d.item.configuration, demand_day, res)?;
            let ok = r.verdict.passed();
            reports.push((d.rank, r));
            if ok {
                return Ok((Some(d.rank), reports));
            }
        }
        Ok((None, reports))
    }

    /// Runs every stage and writes all artifacts to `out`.
    pub fn run(&self, out: &Path) -> Result<RunSummary> {
        let demand = self.demand()?;
        write_demand(out, &self.provenance(), &demand)?;
        let res = self.resources()?;
        let ranked = self.rank(&demand.total, &res)?;
        write_rank(out, &self.provenance(), &ranked, &self.scenario().weights)?;
        let (passed_rank, reports) = self.verify_cascade(&ranked.ranking, &demand.total, &res)?;
        write_verification(out, &self.provenance(), &reports, passed_rank)?;
        self.write_ledgers(out, &ranked, reports.iter().map(|(r, _)| *r))?;
        Ok(RunSummary { out_dir: out.to_path_buf(), passed_rank, reports })
    }

    /// Writes hourly ledgers of the given ranks.
    pub fn write_ledgers(&self, out: &Path, ranked: &RankStage, ranks: impl Iterator<Item = usize>) -> Result<()> {
        let dir = out.join(LEDGER_DIR);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for r in ranks {
            let Some(d) = ranked.ranking.iter().find(|d| d.rank == r) else { continue };
            let Some(c) = ranked.candidates.candidates.iter().find(|c| c.config.key() == d.item.key) else {
                continue;
            };
            let path = dir.join(format!("rank_{r:02}.csv"));
            let mut w = create(&path)?;
            writeln!(w, "{}", self.provenance().comment_line()).map_err(io_err(&path))?;
            c.ledger.write_hourly_csv(&mut w)?;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Writes `demand.csv`: the daily template per class and in total.
pub fn write_demand(out: &Path, prov: &Provenance, d: &DemandStage) -> Result<()> {
    let path = out.join(DEMAND_CSV);
    let mut w = create(&path)?;
    writeln!(w, "{}", prov.comment_line()).map_err(io_err(&path))?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        let mut header = vec!["hour".to_string(), "vehicles_per_hour".to_string()];
        header.extend(d.per_class.iter().map(|(id, _)| format!("{}_kw", id.as_str().to_lowercase())));
        header.push("power_kw".into());
        csv.write_record(&header)?;
        for h in 0..d.total.p.len() {
            let mut row = vec![h.to_string(), d.traffic.n_total[h].to_string()];
            row.extend(d.per_class.iter().map(|(_, c)| c.p[h].to_string()));
            row.push(d.total.p[h].to_string());
            csv.write_record(&row)?;
        }
        csv.flush().map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))
}

fn check_provenance(path: &Path, found: Option<Provenance>, want: &Provenance, need_seed: bool) -> Result<()> {
    let Some(found) = found else {
        return Err(Error::StaleArtifact { path: path.into(), msg: "no provenance record".into() });
    };
    if found.scenario_sha256 != want.scenario_sha256 {
        return Err(Error::StaleArtifact { path: path.into(), msg: "produced from a different scenario".into() });
    }
    if need_seed && found.seed != want.seed {
        return Err(Error::StaleArtifact {
            path: path.into(),
            msg: format!("produced with seed {}, expected {}", found.seed, want.seed),
        });
    }
    Ok(())
}

/// Reads the total demand column of `demand.csv`.
pub fn read_demand(out: &Path, prov: &Provenance) -> Result<DemandCurve> {
    let path = out.join(DEMAND_CSV);
    if !path.is_file() {
        return Err(Error::MissingArtifact { path, stage: "demand" });
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let found = text.lines().next().and_then(Provenance::parse_comment);
    check_provenance(&path, found, prov, false)?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let col = reader.headers()?.iter().position(|h| h == "power_kw").ok_or_else(|| Error::Format {
        path: path.display().to_string(),
        row: 0,
        msg: "no power_kw column".into(),
    })?;
    let mut p = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec.get(col).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            row: i + 1,
            msg: "bad power_kw value".into(),
        })?;
        p.push(v);
    }
    Ok(DemandCurve::hourly(p))
}

#[derive(Serialize)]
struct CandidateRecord<'a> {
    npc_position: usize,
    key: String,
    configuration: &'a Configuration,
    npc: f64,
    feasible: bool,
    ledger: &'a crate::dispatch::EnergyLedger,
}

#[derive(Serialize)]
struct DiscardRecord<'a> {
    key: String,
    configuration: &'a Configuration,
    reason: String,
    detail: &'a crate::predesign::DiscardReason,
}

#[derive(Serialize)]
struct CandidatesFile<'a> {
    provenance: &'a Provenance,
    candidates: Vec<CandidateRecord<'a>>,
    discards: Vec<DiscardRecord<'a>>,
}

#[derive(Serialize, Deserialize)]
struct RankingFile {
    provenance: Provenance,
    weights: WeightVector,
    designs: Vec<RankedDesign<Design>>,
}

/// Writes the candidate set and the ranking as JSON, CSV and a percent table.
pub fn write_rank(out: &Path, prov: &Provenance, ranked: &RankStage, weights: &WeightVector) -> Result<()> {
    let file = CandidatesFile {
        provenance: prov,
        candidates: ranked
            .candidates
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| CandidateRecord {
                npc_position: i + 1,
                key: c.config.key(),
                configuration: &c.config,
                npc: c.npc,
                feasible: true,
                ledger: &c.ledger,
            })
            .collect(),
        discards: ranked
            .candidates
            .discards
            .iter()
            .map(|d| DiscardRecord {
                key: d.config.key(),
                configuration: &d.config,
                reason: d.reason.to_string(),
                detail: &d.reason,
            })
            .collect(),
    };
    write_json(&out.join(CANDIDATES_JSON), &file)?;
    write_json(
        &out.join(RANKING_JSON),
        &RankingFile { provenance: prov.clone(), weights: *weights, designs: ranked.ranking.clone() },
    )?;

    let path = out.join(RANKING_CSV);
    let mut w = create(&path)?;
    writeln!(w, "{}", prov.comment_line()).map_err(io_err(&path))?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record([
            "rank",
            "key",
            "label",
            "pv_kw",
            "wind_kw",
            "grid_limit_kw",
            "diesel_kw",
            "battery_kwh",
            "npc",
            "lcoe",
            "shortage",
            "emr",
            "reg",
            "ecf",
            "ss",
            "esa",
            "cp",
        ])?;
        for d in &ranked.ranking {
            let c = &d.item.configuration;
            let mut row = vec![d.rank.to_string(), d.item.key.clone(), c.label.clone()];
            let nums =
                [c.pv_kw, c.wind_kw, c.grid_limit_kw, c.diesel_kw, c.battery_kwh, d.npc, d.item.lcoe, d.item.shortage];
            row.extend(nums.iter().map(|v| v.to_string()));
            row.extend(d.scores.as_array().iter().map(|v| v.to_string()));
            row.push(d.cp.to_string());
            csv.write_record(&row)?;
        }
        csv.flush().map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = out.join(RANKING_TXT);
    let mut w = create(&path)?;
    writeln!(w, "{}", prov.comment_line()).map_err(io_err(&path))?;
    writeln!(w, "{}", summary_table(&ranked.ranking)).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))
}

/// Human-readable ranking with percentages to two decimals.
pub fn summary_table(ranking: &[RankedDesign<Design>]) -> String {
    let mut s = format!(
        "{:>4}  {:<22} {:<18} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "rank", "design", "family", "EmR", "ReG", "EcF", "SS", "ESA", "Total"
    );
    for d in ranking {
        let sc = d.scores;
        s.push_str(&format!(
            "{:>4}  {:<22} {:<18} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
            d.rank,
            d.item.key,
            d.item.configuration.label,
            percent(sc.emr),
            percent(sc.reg),
            percent(sc.ecf),
            percent(sc.ss),
            percent(sc.esa),
            percent(d.cp)
        ));
    }
    s
}

/// Reads `ranking.json`.
pub fn read_ranking(out: &Path, prov: &Provenance) -> Result<Vec<RankedDesign<Design>>> {
    let path = out.join(RANKING_JSON);
    if !path.is_file() {
        return Err(Error::MissingArtifact { path, stage: "rank" });
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let file: RankingFile = serde_json::from_str(&text)?;
    check_provenance(&path, Some(file.provenance), prov, true)?;
    Ok(file.designs)
}

#[derive(Serialize)]
struct VerificationSummary<'a> {
    provenance: &'a Provenance,
    passed_rank: Option<usize>,
    attempted: Vec<usize>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    provenance: &'a Provenance,
    rank: usize,
    report: &'a VerificationReport,
}

/// Writes one JSON verdict and one CSV trace per report, plus a summary.
pub fn write_verification(
    out: &Path,
    prov: &Provenance,
    reports: &[(usize, VerificationReport)],
    passed_rank: Option<usize>,
) -> Result<()> {
    let dir = out.join(VERIFICATION_DIR);
    for (rank, report) in reports {
        write_json(&dir.join(format!("rank_{rank:02}.json")), &ReportFile { provenance: prov, rank: *rank, report })?;
        let path = dir.join(format!("rank_{rank:02}.csv"));
        let mut w = create(&path)?;
        writeln!(w, "{}", prov.comment_line()).map_err(io_err(&path))?;
        report.write_trace_csv(&mut w)?;
    }
    write_json(
        &dir.join("summary.json"),
        &VerificationSummary { provenance: prov, passed_rank, attempted: reports.iter().map(|(r, _)| *r).collect() },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        let p = Provenance { scenario_sha256: "ab12".into(), seed: 7, tool_version: "hres 0.1.0".into() };
        assert_eq!(Provenance::parse_comment(&p.comment_line()), Some(p));
        assert_eq!(Provenance::parse_comment("hour,power"), None);
    }
}
