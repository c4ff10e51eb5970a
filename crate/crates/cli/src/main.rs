use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ulearn_core::cases::{parse_stereotypes, CaseBase};
use ulearn_core::context::ContextTemplate;
use ulearn_core::engine::{Engine, EngineConfig};
use ulearn_core::geo::{format_pois, parse_pois, parse_track, GeoPoint, PoiStore};
use ulearn_core::sim::{self, Body, Scenario};

/// Context-aware learning recommendations over a POI store.
#[derive(Parser)]
#[command(name = "ulearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a POI file, report rejected lines on stderr and write the
    /// accepted records in canonical form.
    IngestPois {
        /// Tab-separated POI file.
        input: PathBuf,
        /// Where to write the canonical store file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a scenario through the agent pipeline.
    RunScenario(RunArgs),
    /// Radius or nearest-neighbour lookup.
    Query(QueryArgs),
    /// Case counts by kind, demotions and covered members.
    CasebaseStats {
        #[arg(long)]
        casebase: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// POI store file.
    #[arg(long)]
    pois: PathBuf,
    /// Case base (JSON lines). Created if missing, rewritten after the run.
    #[arg(long)]
    casebase: PathBuf,
    /// Engine configuration (key=value). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the event log.
    #[arg(long)]
    log: PathBuf,
    /// Stereotype catalog (JSON lines).
    #[arg(long)]
    stereotypes: Option<PathBuf>,
    /// Context template replacing the standard one.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Where to write the bus trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["radius", "nearest"]))]
struct QueryArgs {
    #[arg(long)]
    pois: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    lon: f64,
    /// Radius in meters.
    #[arg(long)]
    radius: Option<f64>,
    /// Nearest POI of this category.
    #[arg(long)]
    nearest: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_store(path: &Path) -> Result<PoiStore> {
    let ingest = parse_pois(&read(path)?);
    if let Some(r) = ingest.rejected.first() {
        bail!("{}: line {}: {}", path.display(), r.line, r.reason);
    }
    Ok(ingest.store)
}

fn ingest(input: &Path, out: &Path) -> Result<()> {
    let ingest = parse_pois(&read(input)?);
    for r in &ingest.rejected {
        eprintln!("{}: line {}: {}", input.display(), r.line, r.reason);
    }
    write(out, &format_pois(&ingest.store))?;
    println!("ingested {} rejected {}", ingest.store.len(), ingest.rejected.len());
    Ok(())
}

fn run_scenario(args: &RunArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario).map_err(anyhow::Error::msg)?;
    let store = load_store(&args.pois)?;
    let config = match &args.config {
        Some(p) => EngineConfig::parse(&read(p)?).with_context(|| p.display().to_string())?,
        None => EngineConfig::default(),
    };
    let cases = CaseBase::load_or_empty(&args.casebase).with_context(|| args.casebase.display().to_string())?;
    let mut engine = Engine::new(config, Arc::new(store)).with_cases(cases);
    if let Some(p) = &args.stereotypes {
        engine = engine.with_stereotypes(parse_stereotypes(&read(p)?).with_context(|| p.display().to_string())?);
    }
    if let Some(p) = &args.template {
        engine = engine.with_template(ContextTemplate::parse(&read(p)?).with_context(|| p.display().to_string())?);
    }
    let track = match &scenario.body {
        Body::Static { .. } => None,
        Body::Dynamic { track } => Some(parse_track(&read(track)?).map_err(|r| {
            anyhow::anyhow!("{}: line {}: {}", track.display(), r.line, r.reason)
        })?),
    };
    let out = sim::run(&scenario, track.as_ref(), engine)?;
    write(&args.log, &out.log.to_string())?;
    if let Some(p) = &args.trace {
        let text: String = out.trace.iter().map(|e| format!("{e}\n")).collect();
        write(p, &text)?;
    }
    out.engine
        .cases()
        .save(&args.casebase)
        .with_context(|| args.casebase.display().to_string())?;
    print!("{}", out.log);
    Ok(())
}

fn query(args: &QueryArgs) -> Result<()> {
    let store = load_store(&args.pois)?;
    let at = GeoPoint::new(args.lat, args.lon)?;
    let hits = match (&args.radius, &args.nearest) {
        (Some(r), _) => store.pois_in_radius(&at, *r)?,
        (None, Some(cat)) => store.nearest_poi(&at, Some(cat)).into_iter().collect(),
        (None, None) => unreachable!("clap requires one of them"),
    };
    for h in hits {
        println!("{}\t{}\t{}\t{:.1}", h.poi.id(), h.poi.name(), h.poi.category(), h.distance_m);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::IngestPois { input, out } => ingest(input, out),
        Command::RunScenario(args) => run_scenario(args),
        Command::Query(args) => query(args),
        Command::CasebaseStats { casebase } => CaseBase::load(casebase)
            .with_context(|| casebase.display().to_string())
            .map(|cb| print!("{}", cb.stats())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
