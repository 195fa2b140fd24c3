//! Command-line front end.
//!
//! Every flag of a subcommand can also be given in a TOML file passed with
//! `--config`; keys are the flag names without the leading dashes (for example
//! `snr-db = "0:0.5:15"`). Flags on the command line win over the file.

use crate::cgf::{cgf_observation, saddle_seed_high_snr, saddle_seed_low_snr, solve};
use crate::correction::{
    alpha_high_snr, alpha_low_snr, alpha_saddlepoint_channel, CorrectionMethod,
};
use crate::error::{Error, Result};
use crate::experiments::ber::{
    run_ber_with_table, BerConfig, InterferenceModel, LlrMode, BER_HEADER,
};
use crate::experiments::gmi_table::GmiTable;
use crate::experiments::output::{fmt_real, write_csv};
use crate::experiments::sweep::{run_alpha_sweep, SweepConfig, SWEEP_HEADER};
use crate::fec::ConvCodeSpec;
use crate::llr::ChannelParams;
use crate::pep::{
    pep_bhattacharyya_2sm, pep_exact_2sm, pep_mc_oracle, pep_spa_2sm, PepEstimate, PepQuery,
};
use crate::quadrature::DEFAULT_ORDER;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Deserialize;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Parser)]
#[command(
    name = "saddle-llr",
    version,
    about = "Saddlepoint correction of mismatched L-values"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Saddlepoint, its asymptotic seeds and the correction factors at one point.
    Saddlepoint(SaddleArgs),
    /// Correction factors of several estimators over an (SNR, SIR) grid.
    AlphaSweep(SweepArgs),
    /// Pairwise error probability by every available method.
    Pep(PepArgs),
    /// Coded BER over a Rayleigh-faded interference channel.
    Ber(BerArgs),
}

/// List of reals written as `a,b,c` and/or `start:step:stop` ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |t: &str| {
            Error::Config(format!(
                "cannot read `{t}` as a number or start:step:stop range"
            ))
        };
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [x] => out.push(x.parse().map_err(|_| bad(item))?),
                [a, step, b] => {
                    let (a, step, b): (f64, f64, f64) = (
                        a.parse().map_err(|_| bad(item))?,
                        step.parse().map_err(|_| bad(item))?,
                        b.parse().map_err(|_| bad(item))?,
                    );
                    if !(step > 0.0) || b < a {
                        return Err(bad(item));
                    }
                    let n = ((b - a) / step + 1e-9).floor() as usize;
                    out.extend((0..=n).map(|i| a + i as f64 * step));
                }
                _ => return Err(bad(item)),
            }
        }
        if out.is_empty() {
            return Err(Error::Config("empty grid".into()));
        }
        Ok(Grid(out))
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            One(f64),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::One(x) => Ok(Grid(vec![x])),
            Raw::List(v) if !v.is_empty() => Ok(Grid(v)),
            Raw::List(_) => Err(serde::de::Error::custom("empty grid")),
        }
    }
}

/// Comma-separated names, or an array of strings in the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Names(pub Vec<String>);

impl FromStr for Names {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Names(
            s.split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect(),
        ))
    }
}

impl<'de> Deserialize<'de> for Names {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<String>),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom)?,
            Raw::List(v) => Names(v),
        })
    }
}

impl Names {
    fn parse_each<T: FromStr<Err = Error>>(&self) -> Result<Vec<T>> {
        self.0.iter().map(|s| s.parse()).collect()
    }
}

/// Fills every `None` field of `$cli` from `$file`.
macro_rules! merge_fields {
    ($cli:ident, $file:ident; $($f:ident),+ $(,)?) => {
        $( if $cli.$f.is_none() { $cli.$f = $file.$f; } )+
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SaddleArgs {
    /// TOML file with default values for these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SNR = h²/N0 in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// SIR = h²/g² in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub sir_db: Option<f64>,
    /// Channel gain h (default 1).
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SNR grid in dB (default 0:0.5:15).
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<Grid>,
    /// SIR grid in dB (default 3,6,10,12).
    #[arg(long, allow_hyphen_values = true)]
    pub sir_db: Option<Grid>,
    /// Estimators (default saddlepoint,gmi,wlsf,gauss_moment,low_snr,high_snr).
    #[arg(long)]
    pub methods: Option<Names>,
    /// Quadrature order for GMI and WLSF (default 64).
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Mismatched L-values per error event for grid_2sm (default 4).
    #[arg(long)]
    pub d1: Option<usize>,
    /// Exact L-values per error event for grid_2sm (default 4).
    #[arg(long)]
    pub d2: Option<usize>,
    /// Grid step for grid_2sm (default 0.001).
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct PepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub d1: Option<usize>,
    #[arg(long)]
    pub d2: Option<usize>,
    /// Correction factor applied to the mismatched L-values.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sir_db: Option<f64>,
    /// Monte Carlo trials (default 10^6).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct BerArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Average SNR grid in dB (default 10:1:20).
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<Grid>,
    /// SIR in dB (default 6).
    #[arg(long, allow_hyphen_values = true)]
    pub sir_db: Option<f64>,
    /// L-value modes (default uncorrected,saddlepoint,gmi_table,gauss0,true).
    #[arg(long)]
    pub modes: Option<Names>,
    /// Interference gain: fixed, proportional or independent (default fixed).
    #[arg(long)]
    pub interference: Option<String>,
    /// Octal generators (default 15,17).
    #[arg(long)]
    pub generators: Option<String>,
    /// Constraint length (default 4).
    #[arg(long)]
    pub constraint_length: Option<usize>,
    /// Information bits per block (default 1000).
    #[arg(long)]
    pub block_bits: Option<usize>,
    /// Bit errors that end an SNR point (default 200).
    #[arg(long)]
    pub min_errors: Option<u64>,
    /// Block cap per SNR point (default 100000).
    #[arg(long)]
    pub max_blocks: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("reading {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

impl SaddleArgs {
    fn merged(mut self) -> Result<Self> {
        let file: Self = load(self.config.as_deref())?;
        merge_fields!(self, file; out, snr_db, sir_db, h);
        Ok(self)
    }
}

impl SweepArgs {
    fn merged(mut self) -> Result<Self> {
        let file: Self = load(self.config.as_deref())?;
        merge_fields!(self, file; out, snr_db, sir_db, methods, quad_order, d1, d2, grid_step);
        Ok(self)
    }
}

impl PepArgs {
    fn merged(mut self) -> Result<Self> {
        let file: Self = load(self.config.as_deref())?;
        merge_fields!(self, file; out, d1, d2, alpha, snr_db, sir_db, samples, seed);
        Ok(self)
    }
}

impl BerArgs {
    fn merged(mut self) -> Result<Self> {
        let file: Self = load(self.config.as_deref())?;
        merge_fields!(self, file; out, snr_db, sir_db, modes, interference, generators,
            constraint_length, block_bits, min_errors, max_blocks, seed);
        Ok(self)
    }
}

/// A required value that is missing after merging flags and config.
#[derive(Debug)]
struct Missing(&'static str);

fn need<T>(v: Option<T>, flag: &'static str) -> std::result::Result<T, Missing> {
    v.ok_or(Missing(flag))
}

enum Failure {
    Missing {
        subcommand: &'static str,
        flag: &'static str,
    },
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type Table = (Vec<&'static str>, Vec<Vec<String>>);

fn saddlepoint(a: SaddleArgs) -> std::result::Result<(Option<PathBuf>, Table), Failure> {
    let a = a.merged()?;
    let missing = |m: Missing| Failure::Missing {
        subcommand: "saddlepoint",
        flag: m.0,
    };
    let snr_db = need(a.snr_db, "--snr-db").map_err(missing)?;
    let sir_db = need(a.sir_db, "--sir-db").map_err(missing)?;
    let p = ChannelParams::from_snr_sir_db(a.h.unwrap_or(1.0), snr_db, sir_db)?;
    let s = solve(&cgf_observation(&p))?;
    let row = vec![
        fmt_real(snr_db),
        fmt_real(sir_db),
        fmt_real(s.s_hat),
        fmt_real(saddle_seed_low_snr(&p)),
        fmt_real(saddle_seed_high_snr(&p)?),
        fmt_real(alpha_saddlepoint_channel(&p)?.alpha),
        fmt_real(alpha_low_snr(&p).alpha),
        fmt_real(alpha_high_snr(&p)?.alpha),
    ];
    let header = vec![
        "snr_db",
        "sir_db",
        "s_hat",
        "s_low_snr",
        "s_high_snr",
        "alpha",
        "alpha_low_snr",
        "alpha_high_snr",
    ];
    Ok((a.out, (header, vec![row])))
}

fn alpha_sweep(a: SweepArgs) -> std::result::Result<(Option<PathBuf>, Table), Failure> {
    let a = a.merged()?;
    let methods = match &a.methods {
        Some(n) => n.parse_each::<CorrectionMethod>()?,
        None => CorrectionMethod::ALL[..6].to_vec(),
    };
    let mut cfg = SweepConfig::new(
        a.snr_db
            .map_or_else(|| "0:0.5:15".parse::<Grid>().map(|g| g.0), |g| Ok(g.0))?,
        a.sir_db.map_or(vec![3.0, 6.0, 10.0, 12.0], |g| g.0),
        methods,
    )?;
    cfg.quad_order = a.quad_order.unwrap_or(DEFAULT_ORDER);
    cfg.d1 = a.d1.unwrap_or(cfg.d1);
    cfg.d2 = a.d2.unwrap_or(cfg.d2);
    cfg.grid_step = a.grid_step.unwrap_or(cfg.grid_step);
    let rows = run_alpha_sweep(&cfg)?
        .iter()
        .map(|r| r.to_record())
        .collect();
    Ok((a.out, (SWEEP_HEADER.to_vec(), rows)))
}

fn pep(a: PepArgs) -> std::result::Result<(Option<PathBuf>, Table), Failure> {
    let a = a.merged()?;
    let missing = |m: Missing| Failure::Missing {
        subcommand: "pep",
        flag: m.0,
    };
    let d1 = need(a.d1, "--d1").map_err(missing)?;
    let d2 = need(a.d2, "--d2").map_err(missing)?;
    let alpha = need(a.alpha, "--alpha").map_err(missing)?;
    let snr_db = need(a.snr_db, "--snr-db").map_err(missing)?;
    let sir_db = need(a.sir_db, "--sir-db").map_err(missing)?;
    let seed = need(a.seed, "--seed").map_err(missing)?;
    let p = ChannelParams::from_snr_sir_db(1.0, snr_db, sir_db)?;
    let q = PepQuery::new(d1, d2, alpha)?;
    let ests: Vec<PepEstimate> = vec![
        pep_exact_2sm(&q, &p)?,
        pep_bhattacharyya_2sm(&q, &p)?,
        pep_spa_2sm(&q, &p)?,
        pep_mc_oracle(&q, &p, a.samples.unwrap_or(1_000_000), seed)?,
    ];
    let rows = ests
        .iter()
        .map(|e| {
            vec![
                e.method.tag().to_string(),
                fmt_real(e.value),
                e.stderr.map_or(String::new(), fmt_real),
            ]
        })
        .collect();
    Ok((a.out, (vec!["method", "value", "stderr"], rows)))
}

fn ber(a: BerArgs) -> std::result::Result<(Option<PathBuf>, Table), Failure> {
    let a = a.merged()?;
    let seed = need(a.seed, "--seed").map_err(|m| Failure::Missing {
        subcommand: "ber",
        flag: m.0,
    })?;
    let modes = match &a.modes {
        Some(n) => n.parse_each::<LlrMode>()?,
        None => LlrMode::ALL.to_vec(),
    };
    let grid = a
        .snr_db
        .map_or_else(|| "10:1:20".parse::<Grid>().map(|g| g.0), |g| Ok(g.0))?;
    let mut cfg = BerConfig::new(a.sir_db.unwrap_or(6.0), grid, modes[0], seed);
    if a.generators.is_some() || a.constraint_length.is_some() {
        cfg.code = ConvCodeSpec::from_octal(
            a.generators.as_deref().unwrap_or("15,17"),
            a.constraint_length.unwrap_or(4),
        )?;
    }
    if let Some(m) = &a.interference {
        cfg.interference = m.parse::<InterferenceModel>()?;
    }
    cfg.block_info_bits = a.block_bits.unwrap_or(cfg.block_info_bits);
    cfg.min_errors = a.min_errors.unwrap_or(cfg.min_errors);
    cfg.max_blocks = a.max_blocks.unwrap_or(cfg.max_blocks);
    cfg.validate()?;
    let table = if modes.contains(&LlrMode::GmiTable) {
        Some(GmiTable::build(&cfg.gmi_table_spec())?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for mode in modes {
        cfg.llr_mode = mode;
        rows.extend(
            run_ber_with_table(&cfg, table.as_ref())?
                .rows
                .iter()
                .map(|r| r.to_record()),
        );
    }
    Ok((a.out, (BER_HEADER.to_vec(), rows)))
}

fn dispatch(command: Command) -> std::result::Result<(Option<PathBuf>, Table), Failure> {
    match command {
        Command::Saddlepoint(a) => saddlepoint(a),
        Command::AlphaSweep(a) => alpha_sweep(a),
        Command::Pep(a) => pep(a),
        Command::Ber(a) => ber(a),
    }
}

fn emit(out: Option<PathBuf>, (header, rows): Table, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(&path)
                .map_err(|e| Error::Config(format!("creating {}: {e}", path.display())))?;
            write_csv(BufWriter::new(file), &header, &rows)
        }
        None => write_csv(stdout, &header, &rows),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 for usage errors, 1 for failures.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let run = || dispatch(cli.command);
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot start {n} worker threads: {e}");
                return 1;
            }
        },
        None => run(),
    };
    let result = outcome.and_then(|(out, table)| emit(out, table, stdout).map_err(Failure::Run));
    match result {
        Ok(()) => 0,
        Err(Failure::Missing { subcommand, flag }) => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = cmd
                .find_subcommand_mut(subcommand)
                .map(|c| c.render_usage().to_string())
                .unwrap_or_default();
            let _ = writeln!(stderr, "error: missing required value {flag}\n\n{usage}");
            2
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// [`cli_main`] on the process arguments and standard streams.
pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    cli_main(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
