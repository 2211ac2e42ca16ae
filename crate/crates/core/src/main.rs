//! Batch frontend: each subcommand validates its parameters, delegates to
//! the library, and emits one machine-readable record (JSON canonical,
//! CSV as a flat projection of the rows).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use heegner_heights::asymptotics::{lang_silverman_bound, scan_sampled, weil_scaling};
use heegner_heights::cache::SpectralCache;
use heegner_heights::error::{Error, Result};
use heegner_heights::gzheight::{height, SpectralEvalConfig};
use heegner_heights::heegner::{genus_x0, HeegnerLevel};
use heegner_heights::quadfield::{make_discriminant, reduced_forms};

const SCHEMA_VERSION: &str = "1";
const CACHE_ENV: &str = "HEEGNER_CACHE_PATH";

#[derive(Parser)]
#[command(name = "heegner", about = "Heegner point heights on J0(N)")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Suppress the metadata block (timings, cache statistics)
    #[arg(long, global = true)]
    no_meta: bool,
    /// Spectral cache file (also read from HEEGNER_CACHE_PATH)
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Bypass the cache entirely
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct SpectralFlags {
    /// Comma-separated s grid, strictly decreasing toward 1
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    /// Series truncation M
    #[arg(long)]
    truncation: Option<usize>,
    /// Extrapolation degree in (s-1)
    #[arg(long)]
    extrap_degree: Option<usize>,
    /// Smoke-test preset: halve the truncation
    #[arg(long)]
    fast: bool,
}

impl SpectralFlags {
    fn config(&self) -> Result<SpectralEvalConfig> {
        let mut cfg = SpectralEvalConfig::default();
        if let Some(grid) = &self.s_grid {
            cfg.s_grid = grid.clone();
        }
        if let Some(t) = self.truncation {
            cfg.truncation = t;
        }
        if let Some(d) = self.extrap_degree {
            cfg.extrap_degree = d;
        }
        if self.fast {
            cfg.truncation /= 2;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Admissible levels for D up to a bound, with β witnesses
    Levels {
        #[arg(short = 'D', long = "disc", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        max: u64,
    },
    /// Reduced binary quadratic forms of discriminant D
    Classgroup {
        #[arg(short = 'D', long = "disc", allow_hyphen_values = true)]
        d: i64,
    },
    /// Four-term height breakdown at one level
    Height {
        #[arg(short = 'D', long = "disc", allow_hyphen_values = true)]
        d: i64,
        #[arg(short = 'N', long = "level")]
        n: u64,
        #[command(flatten)]
        spectral: SpectralFlags,
    },
    /// Height scan over a level range
    Scan {
        #[arg(short = 'D', long = "disc", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        n_min: u64,
        #[arg(long)]
        n_max: u64,
        /// Thin the scan to at most this many evenly spaced levels
        #[arg(long)]
        max_rows: Option<usize>,
        #[command(flatten)]
        spectral: SpectralFlags,
    },
    /// Genus of X0(N)
    Genus {
        #[arg(short = 'N', long = "level")]
        n: u64,
    },
    /// Lang-Silverman constant bound 3h/g at one level
    Bound {
        #[arg(short = 'D', long = "disc", allow_hyphen_values = true)]
        d: i64,
        #[arg(short = 'N', long = "level")]
        n: u64,
    },
    /// Exact Weil-restriction scaling sequence
    Scaling {
        #[arg(long)]
        base_height: f64,
        #[arg(long)]
        g: u64,
        #[arg(long)]
        hst: f64,
        #[arg(long, value_delimiter = ',')]
        degrees: Vec<u64>,
    },
}

#[derive(Serialize)]
struct OutputRecord {
    schema_version: String,
    command: String,
    params: BTreeMap<String, String>,
    rows: Vec<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<Value>,
}

fn to_row<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("row serializes")
}

/// CSV projection: nested objects flatten to underscore-joined columns,
/// keys in the (already sorted) JSON order.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}_{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn emit(record: &OutputRecord, format: Format) {
    match format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(record).expect("record serializes"));
        }
        Format::Csv => {
            let mut lines = Vec::new();
            let mut header: Option<Vec<String>> = None;
            for row in &record.rows {
                let mut cols = Vec::new();
                flatten("", row, &mut cols);
                if header.is_none() {
                    header = Some(cols.iter().map(|(k, _)| k.clone()).collect());
                }
                lines.push(
                    cols.iter()
                        .map(|(_, v)| v.clone())
                        .collect::<Vec<_>>()
                        .join(","),
                );
            }
            if let Some(h) = header {
                println!("{}", h.join(","));
            }
            for line in lines {
                println!("{line}");
            }
        }
    }
}

fn open_cache(cli: &Cli) -> Result<Option<SpectralCache>> {
    if cli.no_cache {
        return Ok(None);
    }
    let path = cli
        .cache
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    match path {
        Some(p) => Ok(Some(SpectralCache::open(&p)?)),
        None => Ok(None),
    }
}

fn run(cli: &Cli) -> Result<OutputRecord> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let cache = open_cache(cli)?;
    let started = Instant::now();
    let mut params = BTreeMap::new();
    let mut failures = Vec::new();

    let (command, rows) = match &cli.command {
        Command::Levels { d, max } => {
            let disc = make_discriminant(*d)?;
            params.insert("d".into(), d.to_string());
            params.insert("max".into(), max.to_string());
            let rows = heegner_heights::heegner::enum_levels(&disc, *max)
                .into_iter()
                .map(|n| {
                    let lvl = HeegnerLevel::new(&disc, n).expect("enumerated level is valid");
                    json!({"n": n, "beta": lvl.beta(), "genus": lvl.genus()})
                })
                .collect();
            ("levels", rows)
        }
        Command::Classgroup { d } => {
            let disc = make_discriminant(*d)?;
            params.insert("d".into(), d.to_string());
            params.insert("h".into(), disc.h().to_string());
            params.insert("u".into(), disc.u().to_string());
            let rows = reduced_forms(&disc)
                .forms
                .into_iter()
                .map(|f| json!({"a": f.a, "b": f.b, "c": f.c}))
                .collect();
            ("classgroup", rows)
        }
        Command::Height { d, n, spectral } => {
            let disc = make_discriminant(*d)?;
            let level = HeegnerLevel::new(&disc, *n)?;
            let cfg = spectral.config()?;
            params.insert("d".into(), d.to_string());
            params.insert("n".into(), n.to_string());
            params.insert("truncation".into(), cfg.truncation.to_string());
            let breakdown = height(&disc, &level, &cfg, cache.as_ref())?;
            ("height", vec![to_row(&breakdown)])
        }
        Command::Scan {
            d,
            n_min,
            n_max,
            max_rows,
            spectral,
        } => {
            let disc = make_discriminant(*d)?;
            let cfg = spectral.config()?;
            params.insert("d".into(), d.to_string());
            params.insert("n_min".into(), n_min.to_string());
            params.insert("n_max".into(), n_max.to_string());
            params.insert("truncation".into(), cfg.truncation.to_string());
            let result = scan_sampled(&disc, *n_min, *n_max, &cfg, cache.as_ref(), *max_rows)?;
            failures = result
                .failures
                .iter()
                .map(|(n, msg)| json!({"n": n, "error": msg}))
                .collect();
            ("scan", result.rows.iter().map(to_row).collect())
        }
        Command::Genus { n } => {
            params.insert("n".into(), n.to_string());
            let g = genus_x0(*n)?;
            ("genus", vec![json!({"n": n, "genus": g})])
        }
        Command::Bound { d, n } => {
            let disc = make_discriminant(*d)?;
            let level = HeegnerLevel::new(&disc, *n)?;
            params.insert("d".into(), d.to_string());
            params.insert("n".into(), n.to_string());
            let bound = lang_silverman_bound(&disc, &level)?;
            let weighted = bound * disc.u() as f64;
            (
                "bound",
                vec![json!({
                    "n": n,
                    "genus": level.genus(),
                    "lang_bound": bound,
                    "ls_bound": weighted,
                })],
            )
        }
        Command::Scaling {
            base_height,
            g,
            hst,
            degrees,
        } => {
            params.insert("base_height".into(), base_height.to_string());
            params.insert("g".into(), g.to_string());
            params.insert("hst".into(), hst.to_string());
            let rows = weil_scaling(*base_height, *g, *hst, degrees)?;
            ("scaling", rows.iter().map(to_row).collect())
        }
    };

    let metadata = if cli.no_meta {
        None
    } else {
        let mut m = Map::new();
        m.insert(
            "elapsed_ms".into(),
            json!(started.elapsed().as_millis() as u64),
        );
        if let Some(c) = &cache {
            let (hits, misses) = c.stats();
            m.insert("cache_hits".into(), json!(hits));
            m.insert("cache_misses".into(), json!(misses));
        }
        Some(Value::Object(m))
    };

    Ok(OutputRecord {
        schema_version: SCHEMA_VERSION.into(),
        command: command.into(),
        params,
        rows,
        failures,
        metadata,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(record) => {
            emit(&record, cli.format);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
