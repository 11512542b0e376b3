//! `divlab`: data emitter for the normalized divisor functions.

mod check;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{GlobalArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "divlab",
    version,
    about = "Exact and certified computations with f_s(n) = sigma_s(n)/n^s"
)]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// f_s(n) and sigma_s(n); n may be factored, e.g. 2^3*5^2*11.
    Eval {
        n: String,
        #[arg(long, short, default_value = "1")]
        s: String,
    },
    /// Linked cars over primes not dividing the base (CSV).
    Train {
        n: String,
        #[arg(long, short, default_value = "1")]
        s: String,
        #[arg(long, default_value_t = 3)]
        cars: usize,
        #[arg(long, default_value_t = 10)]
        length: usize,
    },
    /// f_s(n) for every n <= N (CSV).
    Scan {
        #[arg(value_parser = config::parse_count)]
        n: u64,
        #[arg(long, short, default_value = "1")]
        s: String,
    },
    /// n with |f_s(n) - a| < eps for 0 < s <= 1 (JSON).
    Approx {
        a: String,
        #[arg(long, short, default_value = "1")]
        s: String,
        #[arg(long, default_value = "0.01")]
        eps: String,
    },
    /// Squarefree sequence approaching a from below (CSV).
    Wolke {
        a: String,
        #[arg(long, short, default_value = "1")]
        s: String,
        #[arg(long, default_value = "0.1")]
        eps: String,
        #[arg(long, default_value_t = 15)]
        steps: usize,
    },
    /// Certified non-value of f_s inside (lo, hi) (JSON).
    Complement {
        lo: String,
        hi: String,
        #[arg(long, short, default_value_t = 1)]
        s: u32,
    },
    /// Bounded search for m with f_s(m) = q (JSON).
    Member {
        q: String,
        #[arg(long, short, default_value_t = 1)]
        s: u32,
        #[arg(long, default_value = "1e6", value_parser = config::parse_count)]
        bound: u64,
        /// Also try to prove exclusion when nothing is found.
        #[arg(long)]
        prove: bool,
    },
    /// Empirical moments of f_s over 1..N against zeta(s+1) (CSV).
    Stats {
        #[arg(value_parser = config::parse_count)]
        n: u64,
        /// Comma-separated exponents.
        #[arg(long, short, default_value = "1,2,3", value_delimiter = ',')]
        s: Vec<String>,
    },
    /// Whether a lies in a gap of the range for s > 1 (JSON).
    Rupture {
        a: String,
        #[arg(long, short, default_value = "2")]
        s: String,
    },
    /// Seeded spot checks of the library invariants (CSV).
    Check {
        #[arg(long, default_value_t = 50)]
        cases: usize,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<divlab::Error>() {
        Some(divlab::Error::Domain(_) | divlab::Error::Parse(_)) => 2,
        Some(divlab::Error::Resource(_) | divlab::Error::Undecidable { .. }) => 3,
        Some(divlab::Error::Invariant(_)) => 4,
        None if err.downcast_ref::<check::Failed>().is_some() => 4,
        None if err.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(&cli.globals)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let lab = divlab::Lab::new(cfg.limits());
    let mut failures = 0;
    let (name, out) = match cli.command {
        Command::Eval { n, s } => ("eval", commands::eval(&lab, &n, &s)?),
        Command::Train { n, s, cars, length } => {
            ("train", commands::train(&lab, &n, &s, cars, length)?)
        }
        Command::Scan { n, s } => ("scan", commands::scan(&lab, &cfg, n, &s)?),
        Command::Approx { a, s, eps } => ("approx", commands::approx(&lab, &a, &s, &eps)?),
        Command::Wolke { a, s, eps, steps } => {
            ("wolke", commands::wolke(&lab, &a, &s, &eps, steps)?)
        }
        Command::Complement { lo, hi, s } => {
            ("complement", commands::complement(&lab, &lo, &hi, s)?)
        }
        Command::Member { q, s, bound, prove } => {
            ("member", commands::member(&lab, &cfg, &q, s, bound, prove)?)
        }
        Command::Stats { n, s } => ("stats", commands::stats(&lab, &cfg, n, &s)?),
        Command::Rupture { a, s } => ("rupture", commands::rupture(&lab, &a, &s)?),
        Command::Check { cases } => {
            let (out, failed) = check::run(&lab, &cfg, cases)?;
            failures = failed;
            ("check", out)
        }
    };
    output::emit(&cfg, name, out)?;
    if failures > 0 {
        return Err(check::Failed(failures).into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
