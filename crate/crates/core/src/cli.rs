//! Command-line front end. Exit codes: 0 success, 1 decode failure (the
//! report is still written), 2 usage or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::degrade::{age_disk, AgedDiskImage, DamageScenario, DegradeError, GrayLevels, Segment};
use crate::layout::{build_layout, render_mask, LayoutError, LayoutParams, Manifest, MaskBitmap};
use crate::optics::{
    load_index_table, optimize_thicknesses, ContrastTemplate, IndexTable, MediumDesign,
    OpticsError, StackPair,
};
use crate::qrcodec::{EcLevel, Version};
use crate::readout::{read_disk, ReadMode, ReadOptions, ReadoutError, ReadoutReport};
use crate::retention::{
    joules_to_ev, kelvin_to_joules, required_barrier, test_temperature, years_to_seconds,
    RetentionError, TestPlan, SECONDS_PER_YEAR,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Retention(#[from] RetentionError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Degrade(#[from] DegradeError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gigastore", version, about = "Retention planning, medium design, mastering, aging and readout for archival discs")]
pub struct Cli {
    /// JSON file whose keys are flag names of the chosen subcommand; flags on
    /// the command line take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Refuse to run randomized subcommands without an explicit --seed
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy barrier needed to keep a bit for the requested time
    #[command(args_override_self = true)]
    Retention(RetentionArgs),
    /// Oven temperature that proves a storage requirement in a given test time
    #[command(args_override_self = true)]
    PlanTest(PlanTestArgs),
    /// Search nitride thicknesses for maximum bare/tungsten contrast
    #[command(args_override_self = true)]
    OptimizeStack(OptimizeArgs),
    /// Encode a nested QR disk and write the mask bitmap and manifest
    #[command(args_override_self = true)]
    Master(MasterArgs),
    /// Age a mask bitmap and write the reflectance image
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Decode an aged image and write the readout report
    #[command(args_override_self = true)]
    Read(ReadArgs),
    /// master, simulate and read in one go
    #[command(args_override_self = true)]
    Pipeline(PipelineArgs),
}

const SUBCOMMANDS: [&str; 7] = [
    "retention",
    "plan-test",
    "optimize-stack",
    "master",
    "simulate",
    "read",
    "pipeline",
];

#[derive(Debug, Args)]
pub struct RetentionArgs {
    /// Storage time [years]
    #[arg(long)]
    pub storage_years: f64,
    /// Tolerable fraction of lost bits
    #[arg(long)]
    pub alpha: f64,
    /// Attempt frequency [Hz]
    #[arg(long, default_value_t = 1e9)]
    pub f0: f64,
    /// Storage temperature [K]
    #[arg(long, default_value_t = 300.0)]
    pub temp_k: f64,
}

#[derive(Debug, Args)]
pub struct PlanTestArgs {
    /// Storage time to prove [years]
    #[arg(long, required_unless_present = "table")]
    pub storage_years: Option<f64>,
    /// Oven test duration [hours]
    #[arg(long, required_unless_present = "table")]
    pub test_hours: Option<f64>,
    /// Tolerable error fraction during storage
    #[arg(long, default_value_t = 1e-6)]
    pub alpha: f64,
    /// Error fraction allowed during the test
    #[arg(long, default_value_t = 1e-6)]
    pub alpha_t: f64,
    /// Attempt frequency [Hz]
    #[arg(long, default_value_t = 1e9)]
    pub f0: f64,
    /// Storage temperature [K]
    #[arg(long, default_value_t = 300.0)]
    pub temp_k: f64,
    /// Print the grid for 1e6 and 1e9 years against 1 hour, 1 week and 1 year
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args, Clone)]
pub struct StackArgs {
    /// Top nitride thickness [nm]
    #[arg(long, default_value_t = 225.0)]
    pub top_nm: f64,
    /// Bottom nitride thickness [nm]
    #[arg(long, default_value_t = 338.0)]
    pub bottom_nm: f64,
    /// Tungsten thickness [nm]
    #[arg(long, default_value_t = 50.0)]
    pub tungsten_nm: f64,
    /// Illumination wavelength [nm]
    #[arg(long, default_value_t = 550.0)]
    pub wavelength_nm: f64,
    /// CSV of refractive indices (material,wavelength_nm,n_real,n_imag);
    /// the bundled table is used when absent
    #[arg(long, value_name = "PATH")]
    pub index_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Tungsten thickness [nm]
    #[arg(long, default_value_t = 50.0)]
    pub tungsten_nm: f64,
    /// Illumination wavelength [nm]
    #[arg(long, default_value_t = 550.0)]
    pub wavelength_nm: f64,
    /// Bottom nitride search range [nm]
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [50.0, 500.0])]
    pub bottom_range_nm: Vec<f64>,
    /// Top nitride search range [nm]
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [50.0, 500.0])]
    pub top_range_nm: Vec<f64>,
    /// Grid points per axis before refinement
    #[arg(long, default_value_t = 91)]
    pub grid: usize,
    /// CSV of refractive indices; the bundled table is used when absent
    #[arg(long, value_name = "PATH")]
    pub index_table: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct LayoutArgs {
    /// Payload of the outer symbol
    #[arg(long, default_value = "ARCHIVE INDEX")]
    pub outer_payload: String,
    /// File holding one inner document; repeatable, order is kept
    #[arg(long = "doc", value_name = "PATH")]
    pub docs: Vec<PathBuf>,
    /// Inner document given inline; used after any --doc files
    #[arg(long = "doc-text", value_name = "TEXT")]
    pub doc_texts: Vec<String>,
    /// Number of generated documents when none are given
    #[arg(long, default_value_t = 64)]
    pub generated_docs: usize,
    /// Outer symbol version (1-10)
    #[arg(long, default_value_t = 2)]
    pub outer_version: u8,
    /// Outer error-correction level (L, M, Q, H)
    #[arg(long, default_value_t = EcLevel::H)]
    pub outer_level: EcLevel,
    /// Inner symbol version (1-10)
    #[arg(long, default_value_t = 1)]
    pub inner_version: u8,
    /// Inner error-correction level (L, M, Q, H)
    #[arg(long, default_value_t = EcLevel::M)]
    pub inner_level: EcLevel,
    /// Size of one inner module [µm]
    #[arg(long, default_value_t = 2.0)]
    pub pitch_um: f64,
    /// Blank border in outer modules
    #[arg(long, default_value_t = 4)]
    pub quiet_zone: usize,
}

#[derive(Debug, Args)]
pub struct MasterArgs {
    #[command(flatten)]
    pub layout: LayoutArgs,
    /// Output mask bitmap (binary PBM)
    #[arg(long, default_value = "disk.pbm")]
    pub mask: PathBuf,
    /// Output manifest (JSON)
    #[arg(long, default_value = "manifest.json")]
    pub manifest: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct ScenarioArgs {
    /// Scenario JSON; individual flags below override its fields
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Oven temperature [K]; repeat together with --hours for a schedule.
    /// No temperature means no aging.
    #[arg(long = "temp-k")]
    pub temp_k: Vec<f64>,
    /// Duration of each schedule segment [hours]
    #[arg(long)]
    pub hours: Vec<f64>,
    /// Bit barrier [k_B·300 K]
    #[arg(long)]
    pub barrier_kt: Option<f64>,
    /// Attempt frequency [Hz]
    #[arg(long)]
    pub f0: Option<f64>,
    /// Cracks per mm² per 100 K above onset
    #[arg(long)]
    pub crack_density: Option<f64>,
    /// Crack onset [K]
    #[arg(long)]
    pub crack_onset_k: Option<f64>,
    /// Random seed; defaults to 0, mandatory with --deterministic
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Input mask bitmap (binary PBM)
    #[arg(long, default_value = "disk.pbm")]
    pub mask: PathBuf,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub stack: StackArgs,
    /// Output image (binary PGM)
    #[arg(long, default_value = "aged.pgm")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct ReadFlags {
    /// monochromatic or whitelight
    #[arg(long, default_value = "monochromatic")]
    pub mode: ReadMode,
    /// Retry failed symbols after redrawing their finder patterns
    #[arg(long)]
    pub repair_finders: bool,
    /// Largest bit-error fraction that counts as a pass
    #[arg(long, default_value_t = crate::readout::DEFAULT_ALPHA_TARGET)]
    pub alpha_target: f64,
    /// Erasure band around the threshold, relative to the threshold
    #[arg(long, default_value_t = crate::readout::DEFAULT_ERASURE_BAND)]
    pub erasure_band: f64,
}

#[derive(Debug, Args)]
pub struct ReadArgs {
    /// Input image (binary PGM)
    #[arg(long, default_value = "aged.pgm")]
    pub image: PathBuf,
    /// Manifest written by `master`
    #[arg(long, default_value = "manifest.json")]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub read: ReadFlags,
    #[command(flatten)]
    pub stack: StackArgs,
    /// Seed of the white-light classifier; defaults to 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output report (JSON)
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub stack: StackArgs,
    #[command(flatten)]
    pub read: ReadFlags,
    /// Directory for disk.pbm, manifest.json, scenario.json, aged.pgm and
    /// report.json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Turns the JSON object in `--config` into flags placed right after the
/// subcommand name, so explicit flags that follow override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let path = it
                .next()
                .ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let value: serde_json::Value = serde_json::from_str(&read_text(&path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let object = value
        .as_object()
        .ok_or_else(|| CliError::Usage(format!("{}: expected a JSON object", path.display())))?;
    let mut flags = Vec::new();
    for (key, v) in object {
        let flag = OsString::from(format!("--{key}"));
        let scalar = |v: &serde_json::Value| -> Result<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                other => Err(CliError::Usage(format!("config key {key}: unsupported value {other}"))),
            }
        };
        match v {
            serde_json::Value::Bool(true) => flags.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                for item in items {
                    flags.push(flag.clone());
                    flags.push(scalar(item)?.into());
                }
            }
            other => {
                flags.push(flag);
                flags.push(scalar(other)?.into());
            }
        }
    }
    let at = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or_else(|| CliError::Usage("--config given without a subcommand".into()))?;
    rest.splice(at + 1..at + 1, flags);
    Ok(rest)
}

fn index_table(path: Option<&Path>) -> Result<IndexTable> {
    Ok(match path {
        Some(p) => load_index_table(p)?,
        None => IndexTable::bundled(),
    })
}

impl StackArgs {
    pub fn stacks(&self) -> Result<StackPair> {
        let table = index_table(self.index_table.as_deref())?;
        Ok(MediumDesign {
            bottom_nitride: self.bottom_nm * 1e-9,
            tungsten: self.tungsten_nm * 1e-9,
            top_nitride: self.top_nm * 1e-9,
            wavelength: self.wavelength_nm * 1e-9,
        }
        .stacks(&table)?)
    }
}

fn version(v: u8) -> Result<Version> {
    Version::new(v).ok_or_else(|| CliError::Usage(format!("unsupported QR version {v}")))
}

impl LayoutArgs {
    pub fn params(&self) -> Result<LayoutParams> {
        Ok(LayoutParams {
            outer_version: version(self.outer_version)?,
            outer_ec_level: self.outer_level,
            inner_version: version(self.inner_version)?,
            inner_ec_level: self.inner_level,
            pitch: self.pitch_um * 1e-6,
            quiet_zone: self.quiet_zone,
        })
    }

    pub fn documents(&self) -> Result<Vec<Vec<u8>>> {
        let mut docs = Vec::new();
        for p in &self.docs {
            docs.push(std::fs::read(p).map_err(io_err(p))?);
        }
        docs.extend(self.doc_texts.iter().map(|t| t.as_bytes().to_vec()));
        if docs.is_empty() {
            docs = default_documents(self.generated_docs);
        }
        Ok(docs)
    }
}

/// Placeholder documents `record 00`, `record 01`, …
pub fn default_documents(n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| format!("record {i:02}").into_bytes()).collect()
}

fn require_seed(seed: Option<u64>, deterministic: bool) -> Result<u64> {
    match (seed, deterministic) {
        (Some(s), _) => Ok(s),
        (None, false) => Ok(0),
        (None, true) => Err(CliError::Usage(
            "--deterministic requires an explicit --seed".into(),
        )),
    }
}

impl ScenarioArgs {
    pub fn scenario(&self, deterministic: bool) -> Result<DamageScenario> {
        let mut s = match &self.scenario {
            Some(p) => DamageScenario::from_json(&read_text(p)?)?,
            None => DamageScenario::default(),
        };
        if !self.temp_k.is_empty() || !self.hours.is_empty() {
            if self.temp_k.len() != self.hours.len() {
                return Err(CliError::Usage(format!(
                    "{} --temp-k values but {} --hours values",
                    self.temp_k.len(),
                    self.hours.len()
                )));
            }
            s.schedule = self
                .temp_k
                .iter()
                .zip(&self.hours)
                .map(|(&temperature, &h)| Segment {
                    temperature,
                    duration: h * 3600.0,
                })
                .collect();
        }
        if let Some(kt) = self.barrier_kt {
            s.bit_barrier = kelvin_to_joules(kt, 300.0);
        }
        if let Some(f0) = self.f0 {
            s.attempt_frequency = f0;
        }
        if let Some(d) = self.crack_density {
            s.crack_density = d;
        }
        if let Some(t) = self.crack_onset_k {
            s.crack_onset_temp = t;
        }
        if self.seed.is_some() || self.scenario.is_none() || deterministic {
            s.seed = require_seed(self.seed, deterministic)?;
        }
        s.validate()?;
        Ok(s)
    }
}

impl ReadFlags {
    fn options(&self, stacks: &StackPair, seed: u64) -> ReadOptions {
        let mut o = ReadOptions::new(GrayLevels::of(stacks), self.mode);
        o.repair_finders = self.repair_finders;
        o.alpha_target = self.alpha_target;
        o.classify.erasure_band = self.erasure_band;
        o.classify.seed = seed;
        o
    }
}

fn summarize(report: &ReadoutReport) -> String {
    format!(
        "decoded {}/{} ({} after repair), alpha observed {:.3e}, target {:.1e}: {}",
        report.decoded,
        report.total_inner,
        report.decoded_after_repair,
        report.alpha_observed,
        report.alpha_target,
        if report.passed { "PASS" } else { "FAIL" }
    )
}

fn report_exit(report: &ReadoutReport) -> ExitCode {
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

const TABLE_STORAGE_YEARS: [f64; 2] = [1e6, 1e9];
const TABLE_TEST_TIMES: [(&str, f64); 3] = [
    ("1 hour", 3600.0),
    ("1 week", 7.0 * 86400.0),
    ("1 year", SECONDS_PER_YEAR),
];

fn plan(args: &PlanTestArgs, storage_years: f64, test_seconds: f64) -> Result<f64> {
    Ok(test_temperature(&TestPlan {
        storage_time: years_to_seconds(storage_years),
        storage_temperature: args.temp_k,
        storage_error_fraction: args.alpha,
        test_time: test_seconds,
        test_error_fraction: args.alpha_t,
        attempt_frequency: args.f0,
    })?)
}

fn run_command(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Retention(a) => {
            let kt = required_barrier(years_to_seconds(a.storage_years), a.alpha, a.f0)?;
            let ev = joules_to_ev(kelvin_to_joules(kt, a.temp_k));
            println!("required barrier: {kt:.1} kBT ({ev:.2} eV) at T = {} K", a.temp_k);
        }
        Command::PlanTest(a) => {
            if a.table {
                let header: Vec<&str> = TABLE_TEST_TIMES.iter().map(|(n, _)| *n).collect();
                println!("storage period | {}", header.join(" | "));
                for years in TABLE_STORAGE_YEARS {
                    let cells = TABLE_TEST_TIMES
                        .iter()
                        .map(|&(_, t)| plan(&a, years, t).map(|k| format!("{k:.1} K")))
                        .collect::<Result<Vec<_>>>()?;
                    println!("{years:e} years | {}", cells.join(" | "));
                }
            } else {
                let (Some(y), Some(h)) = (a.storage_years, a.test_hours) else {
                    return Err(CliError::Usage("--storage-years and --test-hours are required".into()));
                };
                println!("test temperature: {:.1} K", plan(&a, y, h * 3600.0)?);
            }
        }
        Command::OptimizeStack(a) => {
            let table = index_table(a.index_table.as_deref())?;
            let template = ContrastTemplate::medium(&table, a.tungsten_nm * 1e-9, a.wavelength_nm * 1e-9)?;
            let nm = |v: &[f64]| (v[0] * 1e-9, v[1] * 1e-9);
            let best = optimize_thicknesses(&template, [nm(&a.bottom_range_nm), nm(&a.top_range_nm)], a.grid)?;
            println!(
                "bottom nitride {:.1} nm, top nitride {:.1} nm, contrast {:.4}",
                best.thicknesses[0] * 1e9,
                best.thicknesses[1] * 1e9,
                best.contrast
            );
        }
        Command::Master(a) => {
            let layout = build_layout(a.layout.outer_payload.as_bytes(), &a.layout.documents()?, &a.layout.params()?)?;
            write_bytes(&a.mask, &render_mask(&layout).to_pbm())?;
            write_bytes(&a.manifest, layout.manifest().to_json().as_bytes())?;
            println!(
                "{} inner symbols on a {} px disk",
                layout.dark_module_count(),
                layout.geometry().side_px()
            );
        }
        Command::Simulate(a) => {
            let mask = MaskBitmap::read_pbm(&a.mask, crate::layout::DEFAULT_PITCH)?;
            let scenario = a.scenario.scenario(cli.deterministic)?;
            let image = age_disk(&mask, &a.stack.stacks()?, &scenario)?;
            write_bytes(&a.out, &image.to_pgm())?;
            println!("{}", serde_json::to_string(&image.stats).expect("stats serialize"));
        }
        Command::Read(a) => {
            let seed = require_seed(a.seed, cli.deterministic)?;
            let image = AgedDiskImage::read_pgm(&a.image)?;
            let manifest = Manifest::from_json(&read_text(&a.manifest)?)?;
            let report = read_disk(&image, &manifest, &a.read.options(&a.stack.stacks()?, seed))?;
            write_bytes(&a.report, report.to_json().as_bytes())?;
            println!("{}", summarize(&report));
            return Ok(report_exit(&report));
        }
        Command::Pipeline(a) => {
            let scenario = a.scenario.scenario(cli.deterministic)?;
            let stacks = a.stack.stacks()?;
            let dir = &a.out_dir;
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            let layout = build_layout(a.layout.outer_payload.as_bytes(), &a.layout.documents()?, &a.layout.params()?)?;
            let mask = render_mask(&layout);
            let manifest = layout.manifest();
            write_bytes(&dir.join("disk.pbm"), &mask.to_pbm())?;
            write_bytes(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
            write_bytes(&dir.join("scenario.json"), scenario.to_json().as_bytes())?;
            let image = age_disk(&mask, &stacks, &scenario)?;
            write_bytes(&dir.join("aged.pgm"), &image.to_pgm())?;
            let report = read_disk(&image, &manifest, &a.read.options(&stacks, scenario.seed))?;
            write_bytes(&dir.join("report.json"), report.to_json().as_bytes())?;
            println!("{}", serde_json::to_string(&image.stats).expect("stats serialize"));
            println!("{}", summarize(&report));
            return Ok(report_exit(&report));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = expand_config(args).and_then(|args| match Cli::try_parse_from(args) {
        Ok(cli) => run_command(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            Ok(ExitCode::from(code))
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
