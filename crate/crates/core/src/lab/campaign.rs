use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{LabConfig, NoiseOverrides, TrialConfig, DEFAULT_ATTEMPTS};
use super::metrics::{wilson_interval, MeanStd};
use super::trial::{run_trial_detailed, TrialRecord};
use super::LabError;
use crate::mission::ObjectCatalog;
use crate::simsuite::{JsonlWriter, LogRecord};

/// Bench-top success rates per object, in `[0, 1]`.
pub const REFERENCE_SUCCESS: [(&str, f64); 4] = [("styrofoam", 1.00), ("box", 0.94), ("roll", 0.75), ("bottle", 0.61)];
/// Allowed distance of a simulated success rate from its reference.
pub const SUCCESS_TOLERANCE: f64 = 0.07;
/// Accepted band for the mean grasping velocity, m/s.
pub const VELOCITY_BAND: (f64, f64) = (0.9, 1.15);
/// Largest accepted spread of grasping velocity, m/s.
pub const VELOCITY_MAX_STD: f64 = 0.1;
/// Accepted band for the mean styrofoam speed at closure, m/s.
pub const MIN_SPEED_BAND: (f64, f64) = (0.3, 0.6);
/// Below this many attempts the ordering check is not applied.
pub const ORDERING_MIN_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub objects: Vec<String>,
    pub attempts: usize,
    pub seed: u64,
    pub noise: NoiseOverrides,
    pub lab: LabConfig,
    /// Run trials on the rayon pool when the `parallel` feature is built.
    pub parallel: bool,
    /// Full JSONL logs are written for the first this-many attempts of each
    /// object; the rest only appear in `trials.jsonl`.
    pub log_limit: usize,
}

impl CampaignConfig {
    pub fn new(objects: Vec<String>, attempts: usize, seed: u64) -> Self {
        Self {
            objects,
            attempts,
            seed,
            noise: NoiseOverrides::default(),
            lab: LabConfig::default(),
            parallel: true,
            log_limit: DEFAULT_ATTEMPTS,
        }
    }

    fn trial_config(&self, object: &str, index: usize) -> TrialConfig {
        TrialConfig {
            object: object.to_string(),
            seed: self.seed,
            attempts: self.attempts,
            noise: self.noise,
            lab: self.lab.clone(),
            domain_base: (index * self.attempts % 233) as u32,
            record_log: false,
        }
    }
}

/// Five-number-ish summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p05: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Distribution {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let MeanStd { n, mean, std } = MeanStd::of(xs)?;
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        Some(Self {
            n,
            mean,
            std,
            min: v[0],
            p05: q(0.05),
            median: q(0.5),
            p95: q(0.95),
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectStats {
    pub object: String,
    /// Width the fingers close across, m.
    pub width: f64,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Wilson 95% interval on the success rate.
    pub success_interval: (f64, f64),
    pub velocity: Option<MeanStd>,
    pub min_speed: Option<Distribution>,
    pub lateral_offset: Option<MeanStd>,
    /// Attempts the fingers never closed in.
    pub no_closure: usize,
    pub faults: usize,
}

impl ObjectStats {
    pub fn from_records(object: &str, width: f64, records: &[&TrialRecord]) -> Self {
        let attempts = records.len();
        let successes = records.iter().filter(|r| r.success).count();
        let collect = |f: &dyn Fn(&TrialRecord) -> Option<f64>| records.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
        Self {
            object: object.to_string(),
            width,
            attempts,
            successes,
            success_rate: if attempts == 0 {
                0.0
            } else {
                successes as f64 / attempts as f64
            },
            success_interval: wilson_interval(successes, attempts),
            velocity: MeanStd::of(&collect(&|r| r.average_grasp_velocity)),
            min_speed: Distribution::of(&collect(&|r| r.min_speed)),
            lateral_offset: MeanStd::of(&collect(&|r| r.outcome.map(|o| o.lateral_offset_at_grasp))),
            no_closure: records.iter().filter(|r| r.outcome.is_none()).count(),
            faults: records.iter().filter(|r| r.fault.is_some()).count(),
        }
    }
}

/// Per-object results of a campaign, in the order the objects were given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub seed: u64,
    pub attempts: usize,
    pub objects: Vec<ObjectStats>,
}

impl SummaryStats {
    pub fn get(&self, object: &str) -> Option<&ObjectStats> {
        self.objects.iter().find(|o| o.object == object)
    }

    /// Wider objects succeed strictly more often.
    pub fn ordered_by_width(&self) -> bool {
        let mut v: Vec<&ObjectStats> = self.objects.iter().collect();
        v.sort_by(|a, b| b.width.total_cmp(&a.width));
        v.windows(2)
            .all(|w| w[0].width == w[1].width || w[0].success_rate > w[1].success_rate)
    }

    /// Threshold checks against the reference table, for objects present.
    pub fn check(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for o in &self.objects {
            if let Some(&(_, reference)) = REFERENCE_SUCCESS.iter().find(|(n, _)| *n == o.object) {
                out.push(Check::new(
                    format!("{} success rate", o.object),
                    (o.success_rate - reference).abs() <= SUCCESS_TOLERANCE + 1e-12,
                    format!("{:.1}% vs {:.0}% ± {:.0}", 100.0 * o.success_rate, 100.0 * reference, 100.0 * SUCCESS_TOLERANCE),
                ));
            }
            let (lo, hi) = VELOCITY_BAND;
            out.push(match o.velocity {
                Some(v) => Check::new(
                    format!("{} grasp velocity", o.object),
                    v.mean >= lo && v.mean <= hi && v.std < VELOCITY_MAX_STD,
                    format!("{:.3} ± {:.3} m/s, want [{lo}, {hi}] and std < {VELOCITY_MAX_STD}", v.mean, v.std),
                ),
                None => Check::new(format!("{} grasp velocity", o.object), o.attempts == 0, "no completed window".into()),
            });
            if o.object == "styrofoam" {
                let (lo, hi) = MIN_SPEED_BAND;
                out.push(match o.min_speed {
                    Some(d) => Check::new(
                        "styrofoam min speed".into(),
                        d.mean >= lo && d.mean <= hi,
                        format!("{:.3} m/s, want [{lo}, {hi}]", d.mean),
                    ),
                    None => Check::new("styrofoam min speed".into(), false, "no samples".into()),
                });
            }
        }
        if self.attempts >= ORDERING_MIN_ATTEMPTS && self.objects.len() > 1 {
            let rates: Vec<String> = self
                .objects
                .iter()
                .map(|o| format!("{} {:.1}%", o.object, 100.0 * o.success_rate))
                .collect();
            out.push(Check::new("ordered by width".into(), self.ordered_by_width(), rates.join(", ")));
        }
        out
    }

    /// One row per object.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LabError> {
        let mut w = csv::Writer::from_writer(out);
        for o in &self.objects {
            w.serialize(SummaryRow::from_stats(self.seed, o)).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows as written by [`SummaryStats::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<SummaryRow>, LabError> {
        csv::Reader::from_reader(input)
            .deserialize()
            .collect::<Result<Vec<SummaryRow>, _>>()
            .map_err(csv_err)
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Csv(e.to_string())
}

impl fmt::Display for SummaryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>6} {:>9} {:>8} {:>15} {:>17} {:>11} {:>8}",
            "object", "width", "attempts", "success", "95% interval", "velocity m/s", "min speed", "dy std"
        )?;
        for o in &self.objects {
            let v = o
                .velocity
                .map_or_else(|| "-".to_string(), |v| format!("{:.3} ± {:.3}", v.mean, v.std));
            let m = o.min_speed.map_or_else(|| "-".to_string(), |d| format!("{:.3}", d.mean));
            let dy = o
                .lateral_offset
                .map_or_else(|| "-".to_string(), |d| format!("{:.1} cm", 100.0 * d.std));
            writeln!(
                f,
                "{:<10} {:>4.0}cm {:>9} {:>7.1}% {:>15} {:>17} {:>11} {:>8}",
                o.object,
                100.0 * o.width,
                o.attempts,
                100.0 * o.success_rate,
                format!("[{:.1}, {:.1}]", 100.0 * o.success_interval.0, 100.0 * o.success_interval.1),
                v,
                m,
                dy
            )?;
        }
        Ok(())
    }
}

/// Flat CSV form of [`ObjectStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub object: String,
    pub width: f64,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub success_lo: f64,
    pub success_hi: f64,
    pub velocity_mean: Option<f64>,
    pub velocity_std: Option<f64>,
    pub min_speed_mean: Option<f64>,
    pub min_speed_std: Option<f64>,
    pub min_speed_p05: Option<f64>,
    pub min_speed_median: Option<f64>,
    pub min_speed_p95: Option<f64>,
    pub lateral_offset_std: Option<f64>,
    pub no_closure: usize,
    pub faults: usize,
}

impl SummaryRow {
    pub fn from_stats(seed: u64, o: &ObjectStats) -> Self {
        Self {
            seed,
            object: o.object.clone(),
            width: o.width,
            attempts: o.attempts,
            successes: o.successes,
            success_rate: o.success_rate,
            success_lo: o.success_interval.0,
            success_hi: o.success_interval.1,
            velocity_mean: o.velocity.map(|v| v.mean),
            velocity_std: o.velocity.map(|v| v.std),
            min_speed_mean: o.min_speed.map(|d| d.mean),
            min_speed_std: o.min_speed.map(|d| d.std),
            min_speed_p05: o.min_speed.map(|d| d.p05),
            min_speed_median: o.min_speed.map(|d| d.median),
            min_speed_p95: o.min_speed.map(|d| d.p95),
            lateral_offset_std: o.lateral_offset.map(|d| d.std),
            no_closure: o.no_closure,
            faults: o.faults,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: String, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    /// Object-major, then by trial id.
    pub records: Vec<TrialRecord>,
    pub summary: SummaryStats,
}

struct Job {
    object: usize,
    trial: u64,
    log: bool,
}

fn run_job(
    cfgs: &[TrialConfig],
    catalog: &ObjectCatalog,
    job: &Job,
) -> Result<(TrialRecord, Option<Vec<LogRecord>>), LabError> {
    if job.log {
        let mut cfg = cfgs[job.object].clone();
        cfg.record_log = true;
        let run = run_trial_detailed(&cfg, catalog, job.trial)?;
        Ok((run.record, Some(run.log)))
    } else {
        Ok((run_trial_detailed(&cfgs[job.object], catalog, job.trial)?.record, None))
    }
}

#[cfg(feature = "parallel")]
fn run_jobs<T: Send>(jobs: &[Job], parallel: bool, f: impl Fn(&Job) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    if parallel {
        jobs.par_iter().map(f).collect()
    } else {
        jobs.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<T: Send>(jobs: &[Job], _parallel: bool, f: impl Fn(&Job) -> T + Sync + Send) -> Vec<T> {
    jobs.iter().map(f).collect()
}

/// Runs `attempts` trials of every object and aggregates them.
///
/// Trial `i` of every object uses the same seed, so objects are compared
/// under identical disturbances. With `out` set, writes `summary.csv`,
/// `trials.jsonl` and `logs/<object>-<id>.jsonl` there.
pub fn run_campaign(
    cfg: &CampaignConfig,
    catalog: &ObjectCatalog,
    out: Option<&Path>,
) -> Result<CampaignResult, LabError> {
    let mut specs = Vec::with_capacity(cfg.objects.len());
    for name in &cfg.objects {
        specs.push(catalog.get(name)?.clone());
    }
    let cfgs: Vec<TrialConfig> = cfg
        .objects
        .iter()
        .enumerate()
        .map(|(i, name)| cfg.trial_config(name, i))
        .collect();
    if let Some(c) = cfgs.first() {
        c.effective_lab()?;
    } else if cfg.attempts == 0 {
        return Err(LabError::Config("attempts must be at least 1".into()));
    }

    let keep_logs = out.is_some();
    let jobs: Vec<Job> = (0..cfgs.len())
        .flat_map(|object| {
            (0..cfg.attempts).map(move |t| Job {
                object,
                trial: t as u64,
                log: keep_logs && t < cfg.log_limit,
            })
        })
        .collect();

    let log_dir = out.map(|d| d.join("logs"));
    if let Some(d) = &log_dir {
        fs::create_dir_all(d)?;
    }
    let results = run_jobs(&jobs, cfg.parallel, |job| {
        let (mut record, log) = run_job(&cfgs, catalog, job)?;
        if let (Some(log), Some(dir)) = (log, &log_dir) {
            let name = format!("{}-{:05}.jsonl", record.object, record.trial_id);
            let mut w = JsonlWriter::new(BufWriter::new(File::create(dir.join(&name))?));
            for r in &log {
                w.write(r)?;
            }
            w.flush()?;
            record.log = Some(format!("logs/{name}"));
        }
        Ok::<_, LabError>(record)
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let objects = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let rs: Vec<&TrialRecord> = records[i * cfg.attempts..(i + 1) * cfg.attempts].iter().collect();
            ObjectStats::from_records(&spec.name, spec.width(), &rs)
        })
        .collect();
    let summary = SummaryStats {
        seed: cfg.seed,
        attempts: cfg.attempts,
        objects,
    };

    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        summary.write_csv(BufWriter::new(File::create(dir.join("summary.csv"))?))?;
        let mut w = BufWriter::new(File::create(dir.join("trials.jsonl"))?);
        for r in &records {
            serde_json::to_writer(&mut w, r).map_err(|e| LabError::Config(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    Ok(CampaignResult { records, summary })
}
