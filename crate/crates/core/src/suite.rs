//! Benchmark runs: generate instances, run planners in parallel and average
//! the results over the solved instances.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::baselines::{run_base, run_pas};
use crate::decomp::{run, DecompConfig, RunOutput};
use crate::domain::Instance;
use crate::error::PlanFailure;
use crate::generate::{generate, GeneratorSpec};
use crate::pp::run_pp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Nivf,
    Ivf,
    IvfR,
    Pp,
    Base,
    Pas,
}

impl Algo {
    pub const ALL: [Algo; 6] = [Algo::Nivf, Algo::Ivf, Algo::IvfR, Algo::Pp, Algo::Base, Algo::Pas];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Nivf => "nivf",
            Algo::Ivf => "ivf",
            Algo::IvfR => "ivf-r",
            Algo::Pp => "pp",
            Algo::Base => "base",
            Algo::Pas => "pas",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected one of nivf, ivf, ivf-r, pp, base, pas)"))
    }
}

/// Planner settings shared by all algorithms of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Lookahead of IVF and IVF-R.
    pub k: usize,
    pub suboptimality: f64,
    pub time_budget: Duration,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { k: 8, suboptimality: 1.2, time_budget: Duration::from_secs(60) }
    }
}

impl Settings {
    pub fn config(&self, algo: Algo, seed: u64) -> DecompConfig {
        let base = match algo {
            Algo::Nivf => DecompConfig::nivf(),
            Algo::Ivf => DecompConfig::ivf(self.k),
            Algo::IvfR | Algo::Pp | Algo::Base => DecompConfig::ivf_r(self.k),
            Algo::Pas => DecompConfig::ivf(self.k),
        };
        DecompConfig { seed, ..base.with_suboptimality(self.suboptimality).with_budget(self.time_budget) }
    }
}

pub fn solve(algo: Algo, instance: &Instance, settings: &Settings, seed: u64) -> Result<RunOutput, PlanFailure> {
    let config = settings.config(algo, seed);
    match algo {
        Algo::Nivf | Algo::Ivf | Algo::IvfR => run(instance, &config),
        Algo::Pp => run_pp(instance, &config),
        Algo::Base => run_base(instance, &config),
        Algo::Pas => run_pas(instance, &config),
    }
}

/// Result of one planner on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub size: usize,
    pub density: f64,
    pub shelves: usize,
    pub agents: usize,
    pub seed: u64,
    pub algo: Algo,
    pub outcome: Result<RunMetrics, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub makespan: usize,
    pub flowtime: usize,
    pub total_time: Duration,
    pub agent_time: Duration,
    /// The run's log passed validation.
    pub valid: bool,
}

/// Reason tag of a failed run: `a`, `b`, `c`, `g` (generation failed) or
/// `v` (the log did not validate).
pub fn failure_tag(record: &RunRecord) -> Option<char> {
    match &record.outcome {
        Ok(m) if m.valid => None,
        Ok(_) => Some('v'),
        Err(e) => Some(e.chars().nth(1).filter(|c| "abc".contains(*c)).unwrap_or('g')),
    }
}

/// Where per-run artifacts are written.
fn instance_path(dir: &Path, spec: &GeneratorSpec) -> PathBuf {
    dir.join(format!("{}_{}", spec.size, (spec.density * 100.0).round() as u32)).join(format!("{}.json", spec.seed))
}

/// Runs every algorithm on `reps` instances of every spec, with seeds
/// `spec.seed .. spec.seed + reps`. With `out`, instances go to
/// `out/<size>_<den>/<seed>.json` and logs next to them.
pub fn run_all(specs: &[GeneratorSpec], algos: &[Algo], reps: usize, settings: &Settings, out: Option<&Path>) -> Vec<RunRecord> {
    let jobs: Vec<(GeneratorSpec, Algo)> = specs
        .iter()
        .flat_map(|s| (0..reps as u64).map(move |r| s.with_seed(s.seed + r)))
        .flat_map(|s| algos.iter().map(move |&a| (s.clone(), a)))
        .collect();
    let mut records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|(spec, algo)| {
            let mut record = RunRecord {
                size: spec.size,
                density: spec.density,
                shelves: spec.shelves(),
                agents: spec.agents,
                seed: spec.seed,
                algo: *algo,
                outcome: Err(String::new()),
            };
            let instance = match generate(spec) {
                Ok(i) => i,
                Err(e) => {
                    record.outcome = Err(format!("(g) {e}"));
                    return record;
                }
            };
            record.shelves = instance.num_shelves();
            let path = out.map(|dir| instance_path(dir, spec));
            if let Some(path) = &path {
                // every algorithm writes the same bytes, so racing writers are harmless
                if let Err(e) = crate::io::save_instance(path, &instance) {
                    record.outcome = Err(format!("(g) {e}"));
                    return record;
                }
            }
            record.outcome = solve(*algo, &instance, settings, spec.seed).map_err(|e| e.to_string()).map(|o| {
                let valid = crate::domain::validate(&instance, &o.log).is_ok_and(|r| r.is_valid());
                if let Some(path) = &path {
                    let log = path.with_extension(format!("{algo}.log.json"));
                    let _ = crate::io::save_log(&log, instance.map(), &o.log);
                }
                RunMetrics {
                    makespan: o.stats.makespan,
                    flowtime: o.stats.flowtime,
                    total_time: o.stats.total_time,
                    agent_time: o.stats.agent_time,
                    valid,
                }
            });
            record
        })
        .collect();
    records.sort_by(|a, b| {
        (a.size, a.agents, a.algo, a.seed)
            .cmp(&(b.size, b.agents, b.algo, b.seed))
            .then(a.density.total_cmp(&b.density))
    });
    records
}

/// One CSV row: means over the solved instances of one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub size: usize,
    pub density: f64,
    pub shelves: f64,
    pub agents: usize,
    pub algo: Algo,
    pub makespan: f64,
    pub flowtime: f64,
    pub total_time: f64,
    pub agent_time: f64,
    pub suboptimality: f64,
    /// Fraction of instances solved with a valid log.
    pub success: f64,
    /// Failures per reason tag, e.g. `a:2;c:1`.
    pub failure_reason: String,
}

pub fn summarize(records: &[RunRecord], settings: &Settings) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let first = &records[i];
        let same = |r: &RunRecord| {
            r.size == first.size && r.density == first.density && r.agents == first.agents && r.algo == first.algo
        };
        let group: Vec<&RunRecord> = records[i..].iter().take_while(|r| same(r)).collect();
        i += group.len();
        let solved: Vec<RunMetrics> = group
            .iter()
            .filter(|r| failure_tag(r).is_none())
            .filter_map(|r| r.outcome.as_ref().ok().copied())
            .collect();
        let mean = |f: &dyn Fn(&RunMetrics) -> f64| {
            if solved.is_empty() {
                f64::NAN
            } else {
                solved.iter().map(f).sum::<f64>() / solved.len() as f64
            }
        };
        let mut tally = std::collections::BTreeMap::new();
        for r in &group {
            if let Some(tag) = failure_tag(r) {
                *tally.entry(tag).or_insert(0) += 1;
            }
        }
        rows.push(SummaryRow {
            size: first.size,
            density: first.density,
            shelves: group.iter().map(|r| r.shelves as f64).sum::<f64>() / group.len() as f64,
            agents: first.agents,
            algo: first.algo,
            makespan: mean(&|m| m.makespan as f64),
            flowtime: mean(&|m| m.flowtime as f64),
            total_time: mean(&|m| m.total_time.as_secs_f64()),
            agent_time: mean(&|m| m.agent_time.as_secs_f64()),
            suboptimality: settings.suboptimality,
            success: solved.len() as f64 / group.len() as f64,
            failure_reason: tally.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(";"),
        });
    }
    rows
}

pub const CSV_HEADER: [&str; 12] = [
    "size", "den", "M", "N", "algo", "makespan", "flowtime", "total_time", "agent_time", "ω", "success", "failure_reason",
];

pub fn write_csv<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.size.to_string(),
            r.density.to_string(),
            format!("{:.1}", r.shelves),
            r.agents.to_string(),
            r.algo.to_string(),
            format!("{:.2}", r.makespan),
            format!("{:.2}", r.flowtime),
            format!("{:.4}", r.total_time),
            format!("{:.4}", r.agent_time),
            r.suboptimality.to_string(),
            format!("{:.3}", r.success),
            r.failure_reason.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generates, runs and summarizes in one go, writing the CSV to `out`.
pub fn run_suite<W: Write>(
    specs: &[GeneratorSpec],
    algos: &[Algo],
    reps: usize,
    settings: &Settings,
    artifacts: Option<&Path>,
    out: W,
) -> csv::Result<Vec<SummaryRow>> {
    let rows = summarize(&run_all(specs, algos, reps, settings, artifacts), settings);
    write_csv(&rows, out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Settings {
        Settings { suboptimality: 1.8, time_budget: Duration::from_secs(2), ..Default::default() }
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("cbs".parse::<Algo>().is_err());
    }

    #[test]
    fn empty_algo_list_gives_header_only() {
        let mut buf = Vec::new();
        let rows = run_suite(&[GeneratorSpec::new(8, 0.4, 4, 0)], &[], 3, &quick(), None, &mut buf).unwrap();
        assert!(rows.is_empty());
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("size,den,M,N,algo,makespan"));
    }

    #[test]
    fn paired_rows_per_algorithm() {
        let dir = tempfile::tempdir().unwrap();
        let mut buf = Vec::new();
        let rows = run_suite(
            &[GeneratorSpec::new(8, 0.4, 4, 0)],
            &[Algo::Nivf, Algo::Ivf],
            3,
            &quick(),
            Some(dir.path()),
            &mut buf,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].algo, rows[1].algo), (Algo::Nivf, Algo::Ivf));
        for r in &rows {
            assert_eq!(r.success, 1.0, "{r:?}");
            assert_eq!(r.shelves, 25.0);
        }
        assert!(dir.path().join("8_40/2.json").exists());
        assert!(dir.path().join("8_40/2.map").exists());
        assert!(dir.path().join("8_40/1.ivf.log.json").exists());
    }

    #[test]
    fn generation_failures_are_tallied() {
        let records = run_all(&[GeneratorSpec::new(8, 0.0, 2, 0)], &[Algo::Ivf], 2, &quick(), None);
        let rows = summarize(&records, &quick());
        assert_eq!(rows[0].success, 0.0);
        assert_eq!(rows[0].failure_reason, "g:2");
    }
}
