//! Run configuration: flag > `DIVLAB_*` env var > config file > default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use divlab::Limits;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Per command: text for `eval`, JSON for certificates, CSV for tables.
    Auto,
    Csv,
    Json,
    Text,
}

impl Format {
    fn from_str_value(s: &str) -> Result<Self> {
        <Format as ValueEnum>::from_str(s, true).map_err(|e| anyhow::anyhow!("output_format: {e}"))
    }
}

/// Accepts `1000000`, `1_000_000`, `1e6` and `10^6`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim().replace('_', "");
    let bad = || format!("not a positive count: `{s}`");
    let pow = |b: &str, e: &str| -> std::result::Result<u64, String> {
        let b: u64 = b.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        b.checked_pow(e).ok_or_else(bad)
    };
    if let Some((m, e)) = t.split_once(['e', 'E']) {
        let m: u64 = m.parse().map_err(|_| bad())?;
        return m.checked_mul(pow("10", e)?).ok_or_else(bad);
    }
    if let Some((b, e)) = t.split_once('^') {
        return pow(b, e);
    }
    t.parse().map_err(|_| bad())
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    parse_count(s).and_then(|v| usize::try_from(v).map_err(|e| e.to_string()))
}

fn parse_u32(s: &str) -> std::result::Result<u32, String> {
    parse_count(s).and_then(|v| u32::try_from(v).map_err(|e| e.to_string()))
}

/// Global flags; every one can also come from the environment.
#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// key=value file with defaults for the flags below.
    #[arg(long, env = "DIVLAB_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Working precision in bits for fractional s (>= 64) [default: 128].
    #[arg(long, env = "DIVLAB_PRECISION_BITS", global = true, value_parser = parse_u32)]
    pub precision_bits: Option<u32>,
    /// Largest prime any search may use [default: 1e9].
    #[arg(long, env = "DIVLAB_PRIME_CAP", global = true, value_parser = parse_count)]
    pub prime_cap: Option<u64>,
    /// Largest N for exhaustive scans [default: 1e8].
    #[arg(long, env = "DIVLAB_SCAN_CAP", global = true, value_parser = parse_count)]
    pub scan_cap: Option<u64>,
    /// Largest prime exponent the density solver may assign [default: 1e4].
    #[arg(long, env = "DIVLAB_EXPONENT_CAP", global = true, value_parser = parse_u32)]
    pub exponent_cap: Option<u32>,
    /// Node budget for certificate searches [default: 20000].
    #[arg(long, env = "DIVLAB_SEARCH_NODES", global = true, value_parser = parse_usize)]
    pub search_nodes: Option<usize>,
    /// Membership-scan bound used to cross-check shifted certificates [default: 1e5].
    #[arg(long, env = "DIVLAB_MEMBER_BOUND", global = true, value_parser = parse_count)]
    pub member_bound: Option<u64>,
    #[arg(long = "format", env = "DIVLAB_OUTPUT_FORMAT", global = true)]
    pub output_format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(
        long = "output",
        short = 'o',
        env = "DIVLAB_OUTPUT_PATH",
        global = true
    )]
    pub output_path: Option<PathBuf>,
    /// Seed for randomized sampling [default: 0].
    #[arg(long, env = "DIVLAB_SEED", global = true, value_parser = parse_count)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs the sequential path [default: all cores].
    #[arg(long, env = "DIVLAB_THREADS", global = true, value_parser = parse_usize)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub prime_cap: u64,
    pub scan_cap: u64,
    pub exponent_cap: u32,
    pub search_nodes: usize,
    pub member_bound: u64,
    pub output_format: Format,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let l = Limits::default();
        RunConfig {
            precision_bits: l.precision_bits,
            prime_cap: l.prime_cap,
            scan_cap: l.scan_cap,
            exponent_cap: l.exponent_cap,
            search_nodes: l.search_nodes,
            member_bound: l.member_bound,
            output_format: Format::Auto,
            output_path: None,
            seed: 0,
            threads: None,
        }
    }
}

const KEYS: [&str; 10] = [
    "precision_bits",
    "prime_cap",
    "scan_cap",
    "exponent_cap",
    "search_nodes",
    "member_bound",
    "output_format",
    "output_path",
    "seed",
    "threads",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), i + 1);
        };
        let k = k.trim().to_ascii_lowercase().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            bail!("{}:{}: unknown key `{k}`", path.display(), i + 1);
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let d = RunConfig::default();
        fn pick<T>(
            flag: Option<T>,
            file: &BTreeMap<String, String>,
            key: &str,
            parse: impl Fn(&str) -> std::result::Result<T, String>,
            default: T,
        ) -> Result<T> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match file.get(key) {
                Some(s) => parse(s).map_err(|e| anyhow::anyhow!("config {key}: {e}")),
                None => Ok(default),
            }
        }
        let cfg = RunConfig {
            precision_bits: pick(
                args.precision_bits,
                &file,
                "precision_bits",
                parse_u32,
                d.precision_bits,
            )?,
            prime_cap: pick(args.prime_cap, &file, "prime_cap", parse_count, d.prime_cap)?,
            scan_cap: pick(args.scan_cap, &file, "scan_cap", parse_count, d.scan_cap)?,
            exponent_cap: pick(
                args.exponent_cap,
                &file,
                "exponent_cap",
                parse_u32,
                d.exponent_cap,
            )?,
            search_nodes: pick(
                args.search_nodes,
                &file,
                "search_nodes",
                parse_usize,
                d.search_nodes,
            )?,
            member_bound: pick(
                args.member_bound,
                &file,
                "member_bound",
                parse_count,
                d.member_bound,
            )?,
            output_format: pick(
                args.output_format,
                &file,
                "output_format",
                |s| Format::from_str_value(s).map_err(|e| e.to_string()),
                d.output_format,
            )?,
            output_path: pick(
                args.output_path.clone().map(Some),
                &file,
                "output_path",
                |s| Ok(Some(PathBuf::from(s))),
                None,
            )?,
            seed: pick(args.seed, &file, "seed", parse_count, d.seed)?,
            threads: pick(
                args.threads.map(Some),
                &file,
                "threads",
                |s| parse_usize(s).map(Some),
                None,
            )?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_bits < 64 {
            bail!("precision_bits must be >= 64, got {}", self.precision_bits);
        }
        for (name, v) in [
            ("prime_cap", self.prime_cap),
            ("scan_cap", self.scan_cap),
            ("exponent_cap", self.exponent_cap as u64),
            ("search_nodes", self.search_nodes as u64),
            ("member_bound", self.member_bound),
        ] {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.prime_cap < 2 {
            bail!("prime_cap must be at least 2");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            precision_bits: self.precision_bits,
            prime_cap: self.prime_cap,
            scan_cap: self.scan_cap,
            exponent_cap: self.exponent_cap,
            search_nodes: self.search_nodes,
            member_bound: self.member_bound,
            ..Limits::default()
        }
    }

    pub fn strategy(&self) -> divlab::Strategy {
        if self.threads == Some(1) {
            divlab::Strategy::Sequential
        } else {
            divlab::Strategy::Parallel
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e9"), Ok(1_000_000_000));
        assert_eq!(parse_count("10^6"), Ok(1_000_000));
        assert_eq!(parse_count("1_000"), Ok(1000));
        assert!(parse_count("-3").is_err());
        assert!(parse_count("2^70").is_err());
    }

    #[test]
    fn precedence() {
        let dir = std::env::temp_dir().join(format!("divlab-cfg-{}", std::process::id()));
        std::fs::write(
            &dir,
            "prime_cap = 1e6\nseed = 9 # comment\nformat_unused_ok = 1\n",
        )
        .unwrap();
        let args = GlobalArgs {
            config: Some(dir.clone()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args).is_err());
        std::fs::write(&dir, "prime_cap = 1e6\nseed = 9 # comment\n").unwrap();
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!((cfg.prime_cap, cfg.seed), (1_000_000, 9));
        let args = GlobalArgs {
            seed: Some(3),
            ..args
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!((cfg.prime_cap, cfg.seed), (1_000_000, 3));
        std::fs::remove_file(dir).unwrap();
    }

    #[test]
    fn validation() {
        let cfg = RunConfig {
            precision_bits: 32,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
