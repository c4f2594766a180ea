//! Experiment orchestration: the six run modes and their on-disk artefacts.
//!
//! Every file written here is a pure function of the scenario and the seed
//! list, so repeated runs produce byte-identical output directories.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::distribution::{distribution, DistributionKind};
use crate::dqn::{
    evaluate, extract_best_position, load_policy, save_policy, train, BestPosition, EpisodeTrace, TrainedPolicy,
};
use crate::error::{Error, Result};
use crate::feasibility::{sphere_radius, FeasibleRegion};
use crate::geometry::Vec3;
use crate::network_model::{capacity_max, metrics_at, surrogate_throughput, NetworkMetrics};
use crate::oracle::{certify, exhaustive_search, write_point_table, Certificate, OracleOptions, OracleResult};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Validate,
    Feasibility,
    Oracle,
    Train,
    Eval,
    Report,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::Feasibility => "feasibility",
            Mode::Oracle => "oracle",
            Mode::Train => "train",
            Mode::Eval => "eval",
            Mode::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Also write full per-step traces and the oracle's per-point table.
    pub trace: bool,
    /// Oracle worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

/// What a run concluded, used for the process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    CertificationFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilitySummary {
    pub radii_m: Vec<f64>,
    pub lattice_points: usize,
    pub feasible_points: usize,
}

pub fn feasibility_summary(scenario: &Scenario) -> Result<FeasibilitySummary> {
    let region = FeasibleRegion::new(&scenario.ues, &scenario.radio, &scenario.mcs_table, scenario.zone)?;
    let ues = scenario.ue_positions();
    let feasible_points = (0..scenario.zone.len())
        .filter(|&i| region.contains_unchecked(&scenario.zone.point_at(i), &ues))
        .count();
    Ok(FeasibilitySummary {
        radii_m: scenario
            .ues
            .iter()
            .map(|u| sphere_radius(u, &scenario.radio, &scenario.mcs_table))
            .collect::<Result<_>>()?,
        lattice_points: scenario.zone.len(),
        feasible_points,
    })
}

/// Comparison positions around the chosen one, clamped into the zone.
pub fn offset_positions(scenario: &Scenario, chosen: Vec3) -> Vec<(&'static str, Vec3)> {
    let d = scenario.offset_m;
    let zone = &scenario.zone;
    [
        ("offset_x_plus", Vec3::new(d, 0.0, 0.0)),
        ("offset_x_minus", Vec3::new(-d, 0.0, 0.0)),
        ("offset_y_plus", Vec3::new(0.0, d, 0.0)),
        ("offset_y_minus", Vec3::new(0.0, -d, 0.0)),
    ]
    .into_iter()
    .map(|(label, delta)| {
        let raw = chosen + delta;
        let clamped = Vec3::new(
            raw.x.clamp(zone.min_corner.x, zone.max_corner.x),
            raw.y.clamp(zone.min_corner.y, zone.max_corner.y),
            raw.z.clamp(zone.min_corner.z, zone.max_corner.z),
        );
        if clamped != raw {
            log::warn!("{label} position {raw} leaves the positioning zone; clamped to {clamped}");
        }
        (label, clamped)
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub training: Vec<EpisodeTrace>,
    pub evaluation: EpisodeTrace,
    pub best: BestPosition,
    pub certificate: Certificate,
    /// `(label, metrics)` for the chosen, baseline and offset positions.
    pub metrics: Vec<(&'static str, NetworkMetrics)>,
    pub policy: TrainedPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub scenario: Scenario,
    pub oracle: OracleResult,
    pub runs: Vec<SeedRun>,
}

impl RunReport {
    pub fn all_certified(&self) -> bool {
        self.runs.iter().all(|r| r.certificate.pass)
    }
}

/// Best position over training and evaluation traces, surrogate throughput
/// breaking reward ties.
pub fn choose_position(scenario: &Scenario, traces: &[EpisodeTrace]) -> Result<BestPosition> {
    let mut failure = None;
    let best = extract_best_position(traces, |p| {
        surrogate_throughput(scenario, *p).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            0.0
        })
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

fn seed_run(scenario: &Scenario, oracle: &OracleResult, seed: u64) -> Result<SeedRun> {
    let run = train(scenario, seed)?;
    let evaluation = evaluate(&run.policy, scenario)?;
    let mut traces = run.episodes.clone();
    traces.push(evaluation.clone());
    let best = choose_position(scenario, &traces)?;
    let certificate = certify(best.position, oracle, scenario)?;
    let mut metrics = vec![
        ("chosen", metrics_at(scenario, best.position)?),
        ("baseline", metrics_at(scenario, scenario.baseline_position)?),
    ];
    for (label, p) in offset_positions(scenario, best.position) {
        metrics.push((label, metrics_at(scenario, p)?));
    }
    Ok(SeedRun {
        seed,
        training: run.episodes,
        evaluation,
        best,
        certificate,
        metrics,
        policy: run.policy,
    })
}

/// Runs `f` over `seeds` on up to `threads` workers, keeping seed order.
fn per_seed<T: Send, F>(seeds: &[u64], threads: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T> + Sync,
{
    let workers = match threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .clamp(1, seeds.len().max(1));
    if workers == 1 {
        return seeds.iter().map(|&s| f(s)).collect();
    }
    let chunk = seeds.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(|&s| f(s)).collect::<Result<Vec<T>>>())
            })
            .collect();
        let mut out = Vec::with_capacity(seeds.len());
        for h in handles {
            out.extend(h.join().expect("seed worker panicked")?);
        }
        Ok(out)
    })
}

/// Train, evaluate, certify and measure every seed.
pub fn run_report(scenario: &Scenario, seeds: &[u64], threads: usize) -> Result<RunReport> {
    let oracle = exhaustive_search(
        scenario,
        OracleOptions {
            threads,
            keep_table: false,
        },
    )?;
    let runs = per_seed(seeds, threads, |seed| seed_run(scenario, &oracle, seed))?;
    Ok(RunReport {
        scenario: scenario.clone(),
        oracle,
        runs,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    seeds: &'a [u64],
    network_layers: Vec<usize>,
    hidden_activation: &'static str,
    scenario: serde_json::Value,
}

pub fn write_metadata(scenario: &Scenario, mode: Mode, seeds: &[u64], out_dir: &Path) -> Result<()> {
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        mode: mode.label(),
        seeds,
        network_layers: scenario.train.layer_dims(),
        hidden_activation: "relu",
        scenario: serde_json::from_str(&scenario.to_json()).expect("scenario JSON parses"),
    };
    write_file(&out_dir.join("metadata.json"), &json(&meta))
}

/// Step-level CSV: `episode,step,x,y,z,action,reward,nlos,in_sp`.
pub fn write_trace<W: Write>(traces: &[EpisodeTrace], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "episode,step,x,y,z,action,reward,nlos,in_sp")?;
    for t in traces {
        for s in &t.steps {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                t.episode,
                s.step,
                s.position.x,
                s.position.y,
                s.position.z,
                s.action.index(),
                s.reward,
                s.nlos,
                u8::from(s.in_sp)
            )?;
        }
    }
    Ok(())
}

/// Per-episode reward CDF, one row per distinct reward value.
pub fn reward_cdf_csv(traces: &[EpisodeTrace]) -> Result<String> {
    let mut out = String::from("episode,reward,cdf\n");
    for t in traces {
        let mut series = distribution(&t.rewards(), DistributionKind::Cdf)?;
        series.dedup();
        for (v, p) in series {
            writeln!(out, "{},{v},{p}", t.episode).expect("string write");
        }
    }
    Ok(out)
}

fn write_training_artifacts(
    out_dir: &Path,
    seed: u64,
    training: &[EpisodeTrace],
    policy: &TrainedPolicy,
    trace: bool,
) -> Result<()> {
    save_policy(policy, &out_dir.join(format!("policy_seed{seed}.rltq")))?;
    write_file(
        &out_dir.join(format!("reward_cdf_seed{seed}.csv")),
        reward_cdf_csv(training)?.as_bytes(),
    )?;
    if trace {
        write_with(&out_dir.join(format!("trace_seed{seed}.csv")), |w| write_trace(training, w))?;
    }
    Ok(())
}

fn metrics_header(users: usize) -> String {
    let mut h = String::from(
        "seed,position,x,y,z,nlos,aggregate_throughput_bps,mean_delay_s,jain_fairness,saturated,total_airtime",
    );
    for i in 0..users {
        write!(h, ",r_{i}_bps").expect("string write");
    }
    h.push('\n');
    h
}

fn metrics_row(out: &mut String, seed: u64, label: &str, m: &NetworkMetrics) {
    write!(
        out,
        "{seed},{label},{},{},{},{},{},{},{},{},{}",
        m.position.x,
        m.position.y,
        m.position.z,
        m.nlos,
        m.aggregate_throughput_bps,
        m.mean_delay_s,
        m.jain_fairness,
        u8::from(m.saturated),
        m.total_airtime
    )
    .expect("string write");
    for r in &m.achieved_bps {
        write!(out, ",{r}").expect("string write");
    }
    out.push('\n');
}

#[derive(Serialize)]
struct CertificateRow {
    seed: u64,
    chosen: Vec3,
    chosen_reward: f64,
    degenerate: bool,
    certificate: Certificate,
}

#[derive(Serialize)]
struct CertificateSummary<'a> {
    scenario: &'a str,
    max_nlos: usize,
    users: usize,
    argmax_size: usize,
    oracle_best: Vec3,
    oracle_best_throughput_bps: f64,
    capacity_max_bps: f64,
    certified: usize,
    runs: Vec<CertificateRow>,
}

/// Positions labels in the order they appear in `SeedRun::metrics`.
fn position_labels(report: &RunReport) -> Vec<&'static str> {
    report
        .runs
        .first()
        .map(|r| r.metrics.iter().map(|(l, _)| *l).collect())
        .unwrap_or_default()
}

fn distribution_csv(report: &RunReport, kind: DistributionKind, pick: fn(&NetworkMetrics) -> f64) -> Result<String> {
    let mut out = format!("position,value,{}\n", kind.label());
    for (k, label) in position_labels(report).into_iter().enumerate() {
        let samples: Vec<f64> = report.runs.iter().map(|r| pick(&r.metrics[k].1)).collect();
        for (v, p) in distribution(&samples, kind)? {
            writeln!(out, "{label},{v},{p}").expect("string write");
        }
    }
    Ok(out)
}

fn summary_text(report: &RunReport) -> String {
    let s = &report.scenario;
    let mut out = String::new();
    writeln!(out, "scenario: {}", s.name).unwrap();
    writeln!(out, "users: {}", s.ues.len()).unwrap();
    writeln!(
        out,
        "oracle: max_nlos {} of {}, {} argmax positions, best {}",
        report.oracle.max_nlos,
        report.oracle.users,
        report.oracle.argmax.len(),
        report.oracle.best().position
    )
    .unwrap();
    writeln!(out, "buildings (x_min x_max y_min y_max z_min z_max floors x_rooms y_rooms):").unwrap();
    for b in &s.venue.buildings {
        writeln!(
            out,
            "  {} {} {} {} {} {} {} {} {}",
            b.x_min, b.x_max, b.y_min, b.y_max, b.z_min, b.z_max, b.floors, b.x_rooms, b.y_rooms
        )
        .unwrap();
    }
    writeln!(out, "runs:").unwrap();
    for r in &report.runs {
        let chosen = &r.metrics[0].1;
        let baseline = &r.metrics[1].1;
        writeln!(
            out,
            "  seed {}: chosen {} nlos {} {} | throughput {} vs baseline {} bit/s | delay {} vs {} s",
            r.seed,
            r.best.position,
            r.certificate.nlos,
            if r.certificate.pass { "PASS" } else { "FAIL" },
            chosen.aggregate_throughput_bps,
            baseline.aggregate_throughput_bps,
            chosen.mean_delay_s,
            baseline.mean_delay_s
        )
        .unwrap();
    }
    let passed = report.runs.iter().filter(|r| r.certificate.pass).count();
    writeln!(out, "certified: {passed}/{}", report.runs.len()).unwrap();
    out
}

/// Writes every artefact of a report run into `out_dir`.
pub fn emit_report(report: &RunReport, out_dir: &Path, trace: bool) -> Result<()> {
    create_dir(out_dir)?;
    let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
    write_metadata(&report.scenario, Mode::Report, &seeds, out_dir)?;

    let users = report.scenario.ues.len();
    let mut metrics = metrics_header(users);
    for r in &report.runs {
        for (label, m) in &r.metrics {
            metrics_row(&mut metrics, r.seed, label, m);
        }
        write_training_artifacts(out_dir, r.seed, &r.training, &r.policy, trace)?;
        if trace {
            write_with(&out_dir.join(format!("eval_trace_seed{}.csv", r.seed)), |w| {
                write_trace(std::slice::from_ref(&r.evaluation), w)
            })?;
        }
    }
    write_file(&out_dir.join("metrics.csv"), metrics.as_bytes())?;
    if !report.runs.is_empty() {
        write_file(
            &out_dir.join("throughput_ccdf.csv"),
            distribution_csv(report, DistributionKind::Ccdf, |m| m.aggregate_throughput_bps)?.as_bytes(),
        )?;
        write_file(
            &out_dir.join("delay_cdf.csv"),
            distribution_csv(report, DistributionKind::Cdf, |m| m.mean_delay_s)?.as_bytes(),
        )?;
    }

    let best = report.oracle.best();
    let summary = CertificateSummary {
        scenario: &report.scenario.name,
        max_nlos: report.oracle.max_nlos,
        users,
        argmax_size: report.oracle.argmax.len(),
        oracle_best: best.position,
        oracle_best_throughput_bps: best.throughput_bps,
        capacity_max_bps: capacity_max(users, &report.scenario.mcs_table),
        certified: report.runs.iter().filter(|r| r.certificate.pass).count(),
        runs: report
            .runs
            .iter()
            .map(|r| CertificateRow {
                seed: r.seed,
                chosen: r.best.position,
                chosen_reward: r.best.reward,
                degenerate: r.best.degenerate,
                certificate: r.certificate,
            })
            .collect(),
    };
    write_file(&out_dir.join("certificate.json"), &json(&summary))?;
    write_file(&out_dir.join("summary.txt"), summary_text(report).as_bytes())
}

#[derive(Serialize)]
struct OracleSummary<'a> {
    scenario: &'a str,
    #[serde(flatten)]
    result: &'a OracleResult,
}

/// Runs one mode end to end, writing its artefacts under `options.out_dir`.
pub fn run_mode(scenario: &Scenario, mode: Mode, options: &RunOptions) -> Result<Outcome> {
    let out = &options.out_dir;
    match mode {
        Mode::Validate => {
            println!(
                "{}: valid ({} users, {} buildings, {} lattice points)",
                scenario.name,
                scenario.ues.len(),
                scenario.venue.buildings.len(),
                scenario.zone.len()
            );
            Ok(Outcome::Ok)
        }
        Mode::Feasibility => {
            let summary = feasibility_summary(scenario)?;
            create_dir(out)?;
            write_metadata(scenario, mode, &options.seeds, out)?;
            write_file(&out.join("feasibility.json"), &json(&summary))?;
            println!(
                "{}: {} of {} lattice points feasible",
                scenario.name, summary.feasible_points, summary.lattice_points
            );
            if summary.feasible_points == 0 {
                return Err(Error::Infeasible);
            }
            Ok(Outcome::Ok)
        }
        Mode::Oracle => {
            let result = exhaustive_search(
                scenario,
                OracleOptions {
                    threads: options.threads,
                    keep_table: options.trace,
                },
            )?;
            create_dir(out)?;
            write_metadata(scenario, mode, &options.seeds, out)?;
            write_file(
                &out.join("oracle.json"),
                &json(&OracleSummary {
                    scenario: &scenario.name,
                    result: &result,
                }),
            )?;
            if let Some(table) = &result.table {
                write_with(&out.join("oracle_points.csv"), |w| write_point_table(table, w))?;
            }
            println!(
                "{}: max_nlos {} of {} at {} ({} argmax positions)",
                scenario.name,
                result.max_nlos,
                result.users,
                result.best().position,
                result.argmax.len()
            );
            Ok(Outcome::Ok)
        }
        Mode::Train => {
            feasible_or_fail(scenario)?;
            let runs = per_seed(&options.seeds, options.threads, |seed| train(scenario, seed))?;
            create_dir(out)?;
            write_metadata(scenario, mode, &options.seeds, out)?;
            for (seed, run) in options.seeds.iter().zip(&runs) {
                write_training_artifacts(out, *seed, &run.episodes, &run.policy, options.trace)?;
                let best = choose_position(scenario, &run.episodes)?;
                println!("seed {seed}: best visited {} reward {}", best.position, best.reward);
            }
            Ok(Outcome::Ok)
        }
        Mode::Eval => {
            let oracle = exhaustive_search(
                scenario,
                OracleOptions {
                    threads: options.threads,
                    keep_table: false,
                },
            )?;
            let mut all_pass = true;
            let mut rows = Vec::new();
            for &seed in &options.seeds {
                let policy = load_policy(&out.join(format!("policy_seed{seed}.rltq")))?;
                let trace = evaluate(&policy, scenario)?;
                let best = choose_position(scenario, std::slice::from_ref(&trace))?;
                let certificate = certify(best.position, &oracle, scenario)?;
                all_pass &= certificate.pass;
                println!(
                    "seed {seed}: greedy best {} nlos {}/{} {}",
                    best.position,
                    certificate.nlos,
                    oracle.max_nlos,
                    if certificate.pass { "PASS" } else { "FAIL" }
                );
                if options.trace {
                    write_with(&out.join(format!("eval_trace_seed{seed}.csv")), |w| {
                        write_trace(std::slice::from_ref(&trace), w)
                    })?;
                }
                rows.push(CertificateRow {
                    seed,
                    chosen: best.position,
                    chosen_reward: best.reward,
                    degenerate: best.degenerate,
                    certificate,
                });
            }
            write_file(&out.join("eval_certificate.json"), &json(&rows))?;
            Ok(if all_pass { Outcome::Ok } else { Outcome::CertificationFailed })
        }
        Mode::Report => {
            feasible_or_fail(scenario)?;
            let report = run_report(scenario, &options.seeds, options.threads)?;
            emit_report(&report, out, options.trace)?;
            print!("{}", summary_text(&report));
            Ok(if report.all_certified() {
                Outcome::Ok
            } else {
                Outcome::CertificationFailed
            })
        }
    }
}

fn feasible_or_fail(scenario: &Scenario) -> Result<()> {
    if feasibility_summary(scenario)?.feasible_points == 0 {
        return Err(Error::Infeasible);
    }
    Ok(())
}

/// Parses `a..b` (inclusive), `a,b,c` or a single seed.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range start in {text:?}"))?;
        let b: u64 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad seed range end in {text:?}"))?;
        if b < a {
            return Err(format!("empty seed range {text:?}"));
        }
        return Ok((a..=b).collect());
    }
    let seeds = text
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| format!("bad seed {s:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_parsing() {
        assert_eq!(parse_seeds("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("1..=2").unwrap(), vec![1, 2]);
        assert_eq!(parse_seeds("5").unwrap(), vec![5]);
        assert_eq!(parse_seeds("4, 2").unwrap(), vec![4, 2]);
        assert_eq!(parse_seeds("1..30").unwrap().len(), 30);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
