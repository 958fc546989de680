use std::fmt::Write as _;
use std::io::{ErrorKind, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hres_core::pipeline::{
    read_demand, read_ranking, summary_table, write_demand, write_rank, write_verification, Pipeline,
};
use hres_core::{LoadedScenario, Overrides, WeightVector};

/// Design, rank and verify hybrid renewable energy systems for EV charging stations.
#[derive(Debug, Parser)]
#[command(name = "hres", version)]
struct Cli {
    /// Scenario JSON file. Defaults to the bundled Valencia case study.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for resource variability and wind fluctuation. Defaults to the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Criterion weights `emr,reg,ecf,ss,esa`, summing to 1.
    #[arg(long, global = true)]
    weights: Option<WeightVector>,

    /// Largest acceptable unmet fraction of annual demand.
    #[arg(long, global = true)]
    max_shortage: Option<f64>,

    /// Verification step, minutes.
    #[arg(long, global = true)]
    step_min: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage and write all artifacts. Exits 0 iff a design passes verification.
    Run,
    /// Write the station demand curve.
    Demand,
    /// Simulate, score and rank the menu from a persisted demand curve.
    Rank,
    /// Verify ranked designs in order until one passes, or only the design at `--design`.
    Verify {
        /// Rank of the single design to verify.
        #[arg(long)]
        design: Option<usize>,
    },
}

fn pipeline(cli: &Cli) -> Result<Pipeline> {
    let loaded = match &cli.scenario {
        Some(p) => LoadedScenario::load(p).with_context(|| format!("loading scenario {}", p.display()))?,
        None => LoadedScenario::valencia(),
    };
    let overrides = Overrides { weights: cli.weights, max_shortage: cli.max_shortage, step_min: cli.step_min };
    Ok(Pipeline::new(loaded.with_overrides(&overrides)?, cli.seed))
}

/// Command output and whether the command succeeded.
type Report = (String, bool);

fn run(p: &Pipeline, out: &Path) -> Result<Report> {
    let summary = p.run(out)?;
    let ranking = read_ranking(out, &p.provenance())?;
    let mut s = summary_table(&ranking);
    for (rank, r) in &summary.reports {
        writeln!(
            s,
            "verification rank {rank}: {} (max loss {:.2}%, SOC {:.1}%..{:.1}%)",
            if r.verdict.passed() { "pass" } else { "fail" },
            r.max_loss_rate * 100.0,
            r.soc_min * 100.0,
            r.soc_max * 100.0
        )?;
    }
    match summary.passed_rank {
        Some(k) => writeln!(s, "selected design: rank {k} ({})", ranking[k - 1].item.key)?,
        None => writeln!(s, "no design passed verification")?,
    }
    Ok((s, summary.passed_rank.is_some()))
}

fn verify(p: &Pipeline, out: &Path, design: Option<usize>) -> Result<Report> {
    let prov = p.provenance();
    let demand = read_demand(out, &prov)?;
    let ranking = read_ranking(out, &prov)?;
    if ranking.is_empty() {
        bail!("the ranking is empty: no feasible design survived predesign");
    }
    let res = p.resources()?;
    let (passed, reports) = match design {
        Some(k) => {
            let d = ranking
                .iter()
                .find(|d| d.rank == k)
                .with_context(|| format!("no design at rank {k}; the ranking has {}", ranking.len()))?;
            let r = p.verify(&d.item.configuration, &demand, &res)?;
            (r.verdict.passed().then_some(k), vec![(k, r)])
        }
        None => p.verify_cascade(&ranking, &demand, &res)?,
    };
    write_verification(out, &prov, &reports, passed)?;
    let mut s = String::new();
    for (rank, r) in &reports {
        writeln!(s, "rank {rank}: {:?}, max loss {:.2}%", r.verdict, r.max_loss_rate * 100.0)?;
    }
    Ok((s, passed.is_some()))
}

fn execute(cli: &Cli) -> Result<Report> {
    let p = pipeline(cli)?;
    match &cli.command {
        Command::Run => run(&p, &cli.out),
        Command::Demand => {
            let d = p.demand()?;
            write_demand(&cli.out, &p.provenance(), &d)?;
            let s = format!("peak demand {:.2} kW, daily energy {:.1} kWh\n", d.total.peak(), d.total.energy());
            Ok((s, true))
        }
        Command::Rank => {
            let demand = read_demand(&cli.out, &p.provenance())?;
            let ranked = p.rank(&demand, &p.resources()?)?;
            write_rank(&cli.out, &p.provenance(), &ranked, &p.scenario().weights)?;
            Ok((summary_table(&ranked.ranking), true))
        }
        Command::Verify { design } => verify(&p, &cli.out, *design),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((text, ok)) => {
            let written = std::io::stdout().lock().write_all(text.as_bytes());
            if let Err(e) = written {
                if e.kind() != ErrorKind::BrokenPipe {
                    eprintln!("error: writing output: {e}");
                    return ExitCode::FAILURE;
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
