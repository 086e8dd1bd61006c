use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rissim::control::{PhaseAlgorithm, PinvTarget};
use rissim::error::{ConfigError, Error};
use rissim::harness::{
    coverage_map, dump_channels, run_campaign, write_coverage_csv, write_statistics_csv, Scenario, SweepAxis,
};
use rissim::model::{validate_config, SimConfig};

/// Channel simulator for RIS-assisted mmWave MIMO links.
#[derive(Parser)]
#[command(name = "rissim", version)]
struct Cli {
    /// Log progress at info level (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rate-statistics campaign.
    Run {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        control: ControlArgs,
        /// Quantity to sweep.
        #[arg(long, value_parser = parse_axis)]
        axis: Option<SweepAxis>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Statistics CSV to write.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Map the mean rate over receiver positions.
    Coverage {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        control: ControlArgs,
        #[arg(long, value_delimiter = ',')]
        x_range: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        y_range: Option<Vec<f64>>,
        /// Cell size in meters.
        #[arg(long)]
        cell: Option<f64>,
        /// Receiver height in meters.
        #[arg(long)]
        z: Option<f64>,
        /// Realizations per cell.
        #[arg(long)]
        cell_realizations: Option<usize>,
        /// Coverage CSV to write.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write channel matrices and a manifest.
    DumpChannels {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of realizations to dump; defaults to the configured count.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a configuration and print its hash and warnings.
    Validate {
        #[command(flatten)]
        scene: SceneArgs,
    },
}

#[derive(Args)]
struct SceneArgs {
    /// Scenario TOML file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Built-in scene used for keys the file does not set.
    #[arg(long)]
    preset: Option<String>,
    /// Override any field, e.g. `--set seed=7 --set tx.count=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<PhaseAlgorithm>,
    #[arg(long, value_parser = parse_target)]
    target: Option<PinvTarget>,
    /// Phase quantization bits.
    #[arg(long)]
    bits: Option<u8>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_algorithm(s: &str) -> Result<PhaseAlgorithm, String> {
    s.parse().map_err(|e: ConfigError| e.to_string())
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    toml::Value::String(s.to_string())
        .try_into()
        .map_err(|e: toml::de::Error| e.message().to_string())
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    parse_kebab(s)
}

fn parse_target(s: &str) -> Result<PinvTarget, String> {
    parse_kebab(s)
}

/// Failure with its exit status: 1 for configuration problems, 2 otherwise.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn config_failure(message: String) -> Failure {
    Failure { code: 1, message }
}

/// Insert `value` at the dotted `key`, creating tables along the way.
/// Numeric segments index into arrays that already exist, e.g. `ris.0.elements`.
fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), Failure> {
    let bad = |why: &str| config_failure(format!("cannot set `{key}`: {why}"));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty segment"));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cur = table
        .entry(parents.first().copied().unwrap_or(last).to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if parents.is_empty() {
        *cur = value;
        return Ok(());
    }
    for p in parents[1..].iter().chain(std::iter::once(last)) {
        cur = match cur {
            toml::Value::Table(t) => t
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(a) => {
                let i: usize = p.parse().map_err(|_| bad("array segment must be an index"))?;
                a.get_mut(i).ok_or_else(|| bad("index out of range"))?
            }
            _ => return Err(bad("path runs through a scalar")),
        };
    }
    *cur = value;
    Ok(())
}

/// Copy an array such as `ris` from the base scene into `table` so that an
/// indexed key like `ris.0.elements` edits one entry instead of replacing it.
fn seed_array(table: &mut toml::Table, key: &str) -> Result<(), Failure> {
    let mut parts = key.split('.');
    let (Some(head), Some(index)) = (parts.next(), parts.next()) else {
        return Ok(());
    };
    if table.contains_key(head) || index.parse::<usize>().is_err() {
        return Ok(());
    }
    let scene = match table.get("scene") {
        Some(toml::Value::String(s)) => SimConfig::preset(s)?,
        _ => SimConfig::indoor(),
    };
    let base = toml::Table::try_from(&scene).map_err(|e| config_failure(e.to_string()))?;
    if let Some(v @ toml::Value::Array(_)) = base.get(head) {
        table.insert(head.to_string(), v.clone());
    }
    Ok(())
}

/// Parse the right-hand side as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn load_scenario(args: &SceneArgs, extra: Vec<(&str, toml::Value)>) -> Result<Scenario, Failure> {
    let mut table = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| config_failure(format!("{}: {e}", path.display())))?
            .parse::<toml::Table>()
            .map_err(|e| config_failure(format!("{}: {e}", path.display())))?,
        None => toml::Table::new(),
    };
    if let Some(p) = &args.preset {
        table.insert("scene".into(), toml::Value::String(p.clone()));
    }
    if let Some(s) = args.seed {
        let s = i64::try_from(s).map_err(|_| config_failure("seed must fit in 63 bits on the command line".into()))?;
        table.insert("seed".into(), toml::Value::Integer(s));
    }
    if let Some(r) = args.realizations {
        table.insert("realizations".into(), toml::Value::Integer(r as i64));
    }
    for (k, v) in extra {
        set_path(&mut table, k, v)?;
    }
    for s in &args.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_failure(format!("expected KEY=VALUE, got `{s}`")))?;
        seed_array(&mut table, k.trim())?;
        set_path(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    reshape_resized_surfaces(&mut table, &args.sets);
    Ok(Scenario::from_toml_table(table)?)
}

/// A surface whose element count was overridden without a new shape gets
/// its shape re-derived instead of keeping the base scene's rows and cols.
fn reshape_resized_surfaces(table: &mut toml::Table, sets: &[String]) {
    let keys: Vec<&str> = sets
        .iter()
        .filter_map(|s| s.split_once('='))
        .map(|(k, _)| k.trim())
        .collect();
    let Some(toml::Value::Array(list)) = table.get_mut("ris") else {
        return;
    };
    for (i, entry) in list.iter_mut().enumerate() {
        let set = |field: &str| keys.contains(&format!("ris.{i}.{field}").as_str());
        if set("elements") && !["shape", "rows", "cols"].iter().any(|f| set(f)) {
            if let toml::Value::Table(t) = entry {
                t.remove("rows");
                t.remove("cols");
            }
        }
    }
}

fn control_overrides(c: &ControlArgs) -> Vec<(&'static str, toml::Value)> {
    let mut out = Vec::new();
    if let Some(a) = c.algorithm {
        out.push(("campaign.algorithm", variant(&a)));
    }
    if let Some(t) = c.target {
        out.push(("campaign.target", variant(&t)));
    }
    if let Some(b) = c.bits {
        out.push(("campaign.bits", toml::Value::Integer(i64::from(b))));
    }
    if let Some(t) = c.threads {
        out.push(("campaign.threads", toml::Value::Integer(t as i64)));
    }
    out
}

/// Serialized form of a unit enum variant.
fn variant<T: serde::Serialize>(v: &T) -> toml::Value {
    toml::Value::try_from(v).expect("unit variants serialize to strings")
}

fn floats(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scene,
            control,
            axis,
            values,
            out,
        } => {
            let mut extra = control_overrides(&control);
            if let Some(a) = axis {
                extra.push(("campaign.axis", variant(&a)));
            }
            if !values.is_empty() {
                extra.push(("campaign.values", floats(&values)));
            }
            let scenario = load_scenario(&scene, extra)?;
            let campaign = scenario.campaign()?;
            log::info!("campaign {}", campaign.hash());
            if matches!(campaign.sweep(), rissim::harness::Sweep::RxGrid(_)) {
                let grid = coverage_map(&campaign)?;
                write_coverage_csv(&out, &grid)?;
                return Ok(());
            }
            let stats = run_campaign(&campaign)?;
            write_statistics_csv(&out, &stats)?;
            Ok(())
        }
        Command::Coverage {
            scene,
            control,
            x_range,
            y_range,
            cell,
            z,
            cell_realizations,
            out,
        } => {
            let mut extra = control_overrides(&control);
            if let Some(r) = &x_range {
                extra.push(("coverage.x_range", floats(r)));
            }
            if let Some(r) = &y_range {
                extra.push(("coverage.y_range", floats(r)));
            }
            if let Some(c) = cell {
                extra.push(("coverage.cell", toml::Value::Float(c)));
            }
            if let Some(z) = z {
                extra.push(("coverage.z", toml::Value::Float(z)));
            }
            if let Some(n) = cell_realizations {
                extra.push(("coverage.realizations", toml::Value::Integer(n as i64)));
            }
            let scenario = load_scenario(&scene, extra)?;
            let grid = coverage_map(&scenario.coverage_campaign()?)?;
            write_coverage_csv(&out, &grid)?;
            Ok(())
        }
        Command::DumpChannels {
            scene,
            out_dir,
            count,
            threads,
        } => {
            let scenario = load_scenario(&scene, Vec::new())?;
            let cfg = validate_config(scenario.config)?;
            let count = count.unwrap_or(cfg.config().realizations);
            let manifest = dump_channels(&out_dir, &cfg, count, threads)?;
            println!(
                "wrote {} realizations to {} (config_hash {})",
                manifest.realizations.len(),
                out_dir.display(),
                manifest.config_hash
            );
            Ok(())
        }
        Command::Validate { scene } => {
            let scenario = load_scenario(&scene, Vec::new())?;
            scenario.campaign()?;
            let cfg = validate_config(scenario.config)?;
            println!("ok: config_hash {}", cfg.hash());
            for w in cfg.warnings() {
                println!("warning: {w}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
