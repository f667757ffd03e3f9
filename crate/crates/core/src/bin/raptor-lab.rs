use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use raptor::bus::TransportKind;
use raptor::lab::{bench, run_campaign, run_trial_detailed, CampaignConfig, LabConfig, LabError, TrialConfig};
use raptor::mission::ObjectCatalog;
use raptor::simsuite::{JsonlWriter, LogRecord};
use raptor::trajgen::SwoopParams;

#[derive(Parser)]
#[command(name = "raptor-lab", version, about = "Swoop-grasp campaigns, single trials and bus latency benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run many attempts per object and print the summary table.
    Campaign(CampaignArgs),
    /// Round-trip latency, direct against double conversion.
    Bench(BenchArgs),
    /// Run one attempt and print its record.
    Trial(TrialArgs),
}

#[derive(Args)]
struct Setup {
    /// Lab configuration (TOML); defaults to the shipped one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swoop parameters (JSON), replacing those in the lab configuration.
    #[arg(long)]
    swoop_config: Option<PathBuf>,
    /// Object catalog (TOML).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Turn off every noise source.
    #[arg(long)]
    noiseless: bool,
}

impl Setup {
    fn load(&self) -> Result<(LabConfig, ObjectCatalog), LabError> {
        let mut lab = match &self.config {
            Some(p) => LabConfig::from_toml(&fs::read_to_string(p)?)?,
            None => LabConfig::default(),
        };
        if let Some(p) = &self.swoop_config {
            lab.swoop = SwoopParams::from_json(&fs::read_to_string(p)?).map_err(|e| LabError::Config(e.to_string()))?;
        }
        if self.noiseless {
            lab = lab.noiseless();
        }
        let catalog = match &self.catalog {
            Some(p) => ObjectCatalog::from_toml(&fs::read_to_string(p)?)?,
            None => ObjectCatalog::default(),
        };
        Ok((lab, catalog))
    }
}

#[derive(Args)]
struct CampaignArgs {
    /// Comma-separated object names, or `all`.
    #[arg(long, default_value = "all")]
    objects: String,
    #[arg(long, default_value_t = raptor::lab::DEFAULT_ATTEMPTS)]
    attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for summary.csv, trials.jsonl and per-trial logs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full logs for at most this many attempts per object.
    #[arg(long, default_value_t = raptor::lab::DEFAULT_ATTEMPTS)]
    log_limit: usize,
    /// Run trials one after another.
    #[arg(long)]
    sequential: bool,
    /// Exit with status 2 if a reference threshold is missed.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    setup: Setup,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    #[value(alias = "intra_process")]
    Intra,
    #[value(alias = "udp_loopback")]
    Udp,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "intra")]
    transport: Transport,
    /// Comma-separated payload sizes in bytes.
    #[arg(long, value_delimiter = ',', default_value = "64,1024")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    /// Write the table as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 unless double conversion is slower at every size.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    object: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attempt index within the seeded run.
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Write the JSONL log here.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    setup: Setup,
}

fn campaign(a: &CampaignArgs) -> Result<bool, LabError> {
    let (lab, catalog) = a.setup.load()?;
    let objects: Vec<String> = if a.objects == "all" {
        catalog.names().map(str::to_string).collect()
    } else {
        a.objects
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    let mut cfg = CampaignConfig::new(objects, a.attempts, a.seed);
    cfg.lab = lab;
    cfg.parallel = !a.sequential;
    cfg.log_limit = a.log_limit;
    let result = run_campaign(&cfg, &catalog, a.out.as_deref())?;
    print!("{}", result.summary);
    if let Some(dir) = &a.out {
        println!("wrote {}", dir.display());
    }
    if !a.check {
        return Ok(true);
    }
    let checks = result.summary.check();
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn bench_cmd(a: &BenchArgs) -> Result<bool, LabError> {
    let transport = match a.transport {
        Transport::Intra => TransportKind::IntraProcess,
        Transport::Udp => TransportKind::UdpLoopback,
    };
    let table = bench(transport, &a.sizes, a.iterations)?;
    print!("{table}");
    if let Some(p) = &a.out {
        table.write_csv(fs::File::create(p)?)?;
    }
    Ok(!a.check || table.rows.iter().all(|r| r.ratio() > 1.0))
}

fn write_log(path: &Path, log: &[LogRecord]) -> Result<(), LabError> {
    let mut w = JsonlWriter::new(std::io::BufWriter::new(fs::File::create(path)?));
    for r in log {
        w.write(r)?;
    }
    w.flush()?;
    Ok(())
}

fn trial(a: &TrialArgs) -> Result<bool, LabError> {
    let (lab, catalog) = a.setup.load()?;
    let mut cfg = TrialConfig::new(&a.object, a.seed);
    cfg.lab = lab;
    cfg.record_log = a.log.is_some();
    let mut run = run_trial_detailed(&cfg, &catalog, a.index)?;
    if let Some(p) = &a.log {
        write_log(p, &run.log)?;
        run.record.log = Some(p.display().to_string());
    }
    let text = serde_json::to_string_pretty(&run.record).map_err(|e| LabError::Config(e.to_string()))?;
    println!("{text}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Campaign(a) => campaign(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Trial(a) => trial(a),
    };
    match r {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("raptor-lab: {e}");
            ExitCode::FAILURE
        }
    }
}
