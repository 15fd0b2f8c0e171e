use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use survey_core::ingest::{load_network, load_rides, read_gps, write_lines, write_rides, write_stops, RideRecord};
use survey_core::link_times::estimate_link_times;
use survey_core::pipeline::{infer_preferences, AnalysisConfig, Analyzer, RideAnalysis};
use survey_core::preference::{ClassifierConfig, PREFERENCE_CSV_HEADER};
use survey_core::quality::Verdict;
use survey_core::sim::{generate_synthetic_city, run_scenarios, scenario_csv, ScenarioResult};
use survey_core::snapshot::{build_snapshot, ranking_csv, AnalysisSnapshot, SnapshotParts};
use survey_core::{CoordinateMode, LinkTimeTable, Network, RouterConfig, TimeDefaults};

use crate::settings::{Settings, DEFAULT_BIND, DEFAULT_TOP_N};

pub const STOPS: &str = "stops.csv";
pub const LINES: &str = "lines.csv";
pub const RIDES: &str = "rides.jsonl";
pub const REJECTED: &str = "rejected_rides.csv";
pub const LINK_TIMES: &str = "link_times.json";
pub const INGEST: &str = "ingest.json";
pub const ROUTES: &str = "routes.jsonl";
pub const ANALYSIS: &str = "analysis.jsonl";
pub const PREFERENCES: &str = "preferences.csv";
pub const VERDICTS: &str = "verdicts.csv";
pub const CLASSIFY: &str = "classify.json";
pub const RANKING: &str = "ranking.csv";
pub const REPORTS: &str = "reports";
pub const SIM: &str = "sim";

#[derive(Debug, Serialize, Deserialize)]
struct IngestSummary {
    mode: CoordinateMode,
    stops: usize,
    lines: usize,
    rides: usize,
    rejected_rides: usize,
    gps_fixes: usize,
    gps_unparseable: usize,
    link_passes: usize,
    discarded_passes: usize,
}

#[derive(Debug, Serialize)]
struct ClassifySummary {
    lambda: f64,
    criterion: String,
    unit: String,
    unsatisfied: usize,
    satisfied: usize,
    unclassified: usize,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn need(out: &Path, file: &str, stage: &str) -> Result<PathBuf> {
    let p = out.join(file);
    if !p.exists() {
        bail!("{} not found; run `{stage}` first", p.display());
    }
    Ok(p)
}

fn write_network(dir: &Path, network: &Network) -> Result<()> {
    let mut w = create(&dir.join(STOPS))?;
    write_stops(network, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(LINES))?;
    write_lines(network, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_ride_file(path: &Path, rides: &[RideRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_rides(rides, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn ingest(s: &Settings) -> Result<()> {
    let out = s.out_dir();
    let mode = s.mode();
    let network = load_network(
        open(&s.required(s.stops.as_ref(), "stops")?)?,
        open(&s.required(s.lines.as_ref(), "lines")?)?,
        mode,
    )?;
    let loaded = load_rides(BufReader::new(open(&s.required(s.rides.as_ref(), "rides")?)?), &network, false)?;
    let (times, gps_fixes, gps_unparseable, report) = match &s.gps {
        Some(path) => {
            let gps = read_gps(open(path)?, mode)?;
            let n = gps.fixes.len();
            let (table, report) = estimate_link_times(gps.fixes, &network, TimeDefaults::default());
            (table, n, gps.unparseable, Some(report))
        }
        None => (LinkTimeTable::fallback(TimeDefaults::default()), 0, 0, None),
    };

    write_network(&out, &network)?;
    write_ride_file(&out.join(RIDES), &loaded.rides)?;
    let mut w = create(&out.join(REJECTED))?;
    writeln!(w, "line,error")?;
    for (line, err) in &loaded.rejected {
        writeln!(w, "{line},\"{}\"", err.to_string().replace('"', "'"))?;
    }
    w.flush()?;
    write_text(&out.join(LINK_TIMES), &(times.to_json() + "\n"))?;
    write_json(
        &out.join(INGEST),
        &IngestSummary {
            mode,
            stops: network.stop_count(),
            lines: network.line_count(),
            rides: loaded.rides.len(),
            rejected_rides: loaded.rejected.len(),
            gps_fixes,
            gps_unparseable,
            link_passes: report.as_ref().map_or(0, |r| r.passes),
            discarded_passes: report.as_ref().map_or(0, |r| r.discarded_passes),
        },
    )?;
    eprintln!(
        "ingested {} stops, {} lines, {} rides ({} rejected)",
        network.stop_count(),
        network.line_count(),
        loaded.rides.len(),
        loaded.rejected.len()
    );
    Ok(())
}

fn cached_network(out: &Path) -> Result<Network> {
    let summary: IngestSummary = serde_json::from_reader(open(&need(out, INGEST, "ingest")?)?)?;
    Ok(load_network(open(&out.join(STOPS))?, open(&out.join(LINES))?, summary.mode)?)
}

fn analysis_config(s: &Settings) -> AnalysisConfig {
    let mut c = AnalysisConfig::default();
    if let Some(m) = s.max_transfers {
        c.router = RouterConfig { max_transfers: m };
    }
    c
}

pub fn route(s: &Settings) -> Result<()> {
    let out = s.out_dir();
    let network = cached_network(&out)?;
    let times = LinkTimeTable::from_json(&fs::read_to_string(need(&out, LINK_TIMES, "ingest")?)?)?;
    let rides = load_rides(BufReader::new(open(&need(&out, RIDES, "ingest")?)?), &network, true)?.rides;
    let analyzer = Analyzer::new(network, times, analysis_config(s));
    let routed = analyzer.route_all(&rides)?;
    write_jsonl(&out.join(ROUTES), &routed)?;
    let unreachable = routed.iter().filter(|r| r.optimal.iter().any(Option::is_none)).count();
    eprintln!("routed {} rides ({unreachable} missing an optimum)", routed.len());
    Ok(())
}

fn snapshot_from(s: &Settings, out: &Path, analyses: Vec<RideAnalysis>, scenarios: Option<Vec<ScenarioResult>>) -> Result<AnalysisSnapshot> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(build_snapshot(SnapshotParts {
        network: Some(cached_network(out)?),
        analyses: Some(analyses),
        scenarios,
        seed: s.seed,
        config: serde_json::to_value(s)?,
        defaults: s.defaults()?,
        created_unix_s: created,
    })?)
}

/// Snapshot over the classified rides in `out`, or an error naming the
/// missing stage.
pub fn load_snapshot(s: &Settings, out: &Path) -> Result<AnalysisSnapshot> {
    need(out, INGEST, "ingest")?;
    let analyses = if out.join(ANALYSIS).exists() {
        read_jsonl(&out.join(ANALYSIS))?
    } else if out.join(ROUTES).exists() {
        // unclassified rides make the build fail with the stage name
        read_jsonl(&out.join(ROUTES))?
    } else {
        bail!("{} not found; run `route` then `classify` first", out.join(ROUTES).display());
    };
    let scenarios_path = out.join(SIM).join("scenarios.json");
    let scenarios = if scenarios_path.exists() {
        Some(serde_json::from_reader(open(&scenarios_path)?)?)
    } else {
        None
    };
    snapshot_from(s, out, analyses, scenarios)
}

pub fn classify(s: &Settings) -> Result<()> {
    let out = s.out_dir();
    let mut analyses: Vec<RideAnalysis> = read_jsonl(&need(&out, ROUTES, "route")?)?;
    let classifier = ClassifierConfig::default();
    for a in &mut analyses {
        infer_preferences(a, &classifier);
    }
    write_jsonl(&out.join(ANALYSIS), &analyses)?;

    let mut w = csv_writer(&out.join(PREFERENCES))?;
    w.write_record(PREFERENCE_CSV_HEADER)?;
    for a in &analyses {
        for p in [&a.preference, &a.baseline].into_iter().flatten() {
            w.write_record(p.csv_row())?;
        }
    }
    w.flush()?;

    let (lambda, criterion) = (s.lambda()?, s.criterion()?);
    let snap = snapshot_from(s, &out, analyses, None)?;
    let records = snap.records(lambda, criterion)?;
    let mut w = csv_writer(&out.join(VERDICTS))?;
    w.write_record(["rider_id", "origin", "criterion", "unit", "valc_real", "valc_opt", "gap", "lambda", "verdict"])?;
    for r in &records {
        w.write_record([
            r.rider_id.clone(),
            r.origin.clone(),
            r.criterion.to_string(),
            r.criterion.unit().to_owned(),
            r.valc_real.to_string(),
            r.valc_opt.to_string(),
            r.gap().to_string(),
            lambda.to_string(),
            verdict_str(r.verdict).to_owned(),
        ])?;
    }
    w.flush()?;
    let unsatisfied = records.iter().filter(|r| r.verdict == Verdict::Unsatisfactory).count();
    let summary = ClassifySummary {
        lambda,
        criterion: criterion.map_or("auto".to_owned(), |c| c.to_string()),
        unit: criterion.map_or("criterion", |c| c.unit()).to_owned(),
        unsatisfied,
        satisfied: records.len() - unsatisfied,
        unclassified: snap.rides().len() - records.len(),
    };
    write_json(&out.join(CLASSIFY), &summary)?;
    eprintln!("{unsatisfied} of {} rides unsatisfactory at lambda {lambda}", records.len());
    Ok(())
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Satisfactory => "satisfactory",
        Verdict::Unsatisfactory => "unsatisfactory",
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn rank(s: &Settings) -> Result<()> {
    let out = s.out_dir();
    let snap = load_snapshot(s, &out)?;
    let d = s.defaults()?;
    let heat = snap.heat(d.lambda, d.criterion, d.min_sample)?;
    write_text(&out.join(RANKING), &ranking_csv(&heat))?;
    eprintln!("ranked {} stops", heat.len());
    Ok(())
}

pub fn report(s: &Settings) -> Result<()> {
    let out = s.out_dir();
    let snap = load_snapshot(s, &out)?;
    let (lambda, criterion) = (s.lambda()?, s.criterion()?);
    let top = snap.top_unsatisfied(lambda, criterion, s.top_n.unwrap_or(DEFAULT_TOP_N))?;
    let dir = out.join(REPORTS);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    let mut index = csv_writer(&dir.join("index.csv"))?;
    index.write_record(["rank", "rider_id", "origin", "destination", "criterion", "gap"])?;
    for (i, r) in top.iter().enumerate() {
        let rep = snap.report(&r.rider_id, lambda, criterion)?;
        write_json(&dir.join(format!("{}.json", r.rider_id)), &rep)?;
        write_text(&dir.join(format!("{}.txt", r.rider_id)), &rep.render_text())?;
        index.write_record([
            (i + 1).to_string(),
            r.rider_id.clone(),
            r.origin.clone(),
            r.destination.clone(),
            r.criterion.to_string(),
            r.gap.to_string(),
        ])?;
    }
    index.flush()?;
    eprintln!("wrote {} reports", top.len());
    Ok(())
}

pub fn simulate(s: &Settings) -> Result<()> {
    let dir = s.out_dir().join(SIM);
    let sim = s.sim();
    sim.scenarios.validate()?;
    let city = generate_synthetic_city(&sim.city)?;
    let city_dir = dir.join("city");
    write_network(&city_dir, &city.network)?;
    write_ride_file(&city_dir.join(RIDES), &city.rides)?;
    write_text(&city_dir.join(LINK_TIMES), &(city.times.to_json() + "\n"))?;
    let mut w = csv_writer(&city_dir.join("planted.csv"))?;
    w.write_record(["rider_id", "criterion", "suboptimal", "gap"])?;
    for p in &city.planted {
        w.write_record([p.rider_id.clone(), p.criterion.to_string(), p.suboptimal.to_string(), p.gap.to_string()])?;
    }
    w.flush()?;

    let analyzer = Analyzer::new(city.network.clone(), city.times.clone(), city.analysis_config());
    let analyses = analyzer.analyze_all(&city.rides)?;
    let results = run_scenarios(&analyses, &sim.scenarios)?;
    write_json(&dir.join("params.json"), &sim)?;
    write_text(&dir.join("scenarios.csv"), &scenario_csv(&results))?;
    write_json(&dir.join("scenarios.json"), &results)?;
    for r in results.iter().filter(|r| r.is_clamped()) {
        eprintln!(
            "note: {} selection clamped from {} to {} stops",
            r.method, r.requested_stop_count, r.stop_count
        );
    }
    eprintln!("simulated {} scenarios on {} riders", results.len(), city.rides.len());
    Ok(())
}

pub fn serve(s: &Settings) -> Result<()> {
    let out = s.out_dir();
    let snap = load_snapshot(s, &out)?;
    let addr = s.bind.unwrap_or_else(|| DEFAULT_BIND.parse().expect("valid default address"));
    let store = survey_api::SnapshotStore::new(snap);
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("serving {} on http://{addr}", out.display());
    rt.block_on(survey_api::serve(store, addr, s.static_dir.clone()))?;
    Ok(())
}

pub fn all(s: &Settings) -> Result<()> {
    ingest(s)?;
    route(s)?;
    classify(s)?;
    rank(s)?;
    report(s)
}
