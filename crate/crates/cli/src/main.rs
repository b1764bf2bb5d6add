use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use setsum::{ClassSpec, Law, Region64};
use setsum_cli::config::{parse_class, parse_r_range, VarianceSource};
use setsum_cli::{default_out_dir, exit_code, run, CliError, ConfigDocument, Kind};

#[derive(Parser)]
#[command(
    name = "setsum",
    version,
    about = "Simulate and check set-indexed partial-sum processes of random fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $SETSUM_OUT/<kind> or results/<kind>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: machine parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian fidi and covariance checks under n^(d/2) normalization
    Fclt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        law: Option<Law>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Regions separated by ';' or given repeatedly
        #[arg(long, value_delimiter = ';')]
        regions: Vec<Region64>,
        #[arg(long, value_parser = parse_variance)]
        variance: Option<VarianceSource>,
        #[arg(long)]
        ks_tolerance: Option<f64>,
    },
    /// Self-normalized limits, scale invariance and U_n^2 / b_n^2
    Selfnorm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        law: Option<Law>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ';')]
        regions: Vec<Region64>,
        #[arg(long)]
        scale: Option<f64>,
        /// 0 skips the U_n^2 / b_n^2 study
        #[arg(long)]
        raikov_n: Option<usize>,
        #[arg(long)]
        raikov_reps: Option<usize>,
    },
    /// Non-tightness construction against the exact binomial oracle
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        /// Inclusive range a..b or list a,b,c
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        delta_factor: Option<f64>,
    },
    /// Covering numbers, entropy integrals and the construction's series
    Entropy {
        #[command(flatten)]
        common: Common,
        /// quadrants:m=<m>:d=<d> or cells:m=<m>:k=<k>:d=<d>
        #[arg(long, value_parser = |s: &str| parse_class(s).map_err(|e| e.to_string()))]
        class: Option<ClassSpec>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        r_max: Option<u32>,
    },
    /// Luxemburg norms against closed forms
    Orlicz {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        constants: Vec<f64>,
        #[arg(long)]
        gaussian_reps: Option<usize>,
    },
    /// L2 distance between S_n(A) and the lattice sum over nA along n
    Lemma2 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        law: Option<Law>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        region: Option<Region64>,
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<usize>,
    },
    /// Empirical constant of the maximal inequality over a sweep
    Lemma1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Print the version
    Version,
}

fn parse_variance(s: &str) -> Result<VarianceSource, String> {
    match s {
        "law" => Ok(VarianceSource::Law),
        "empirical" => Ok(VarianceSource::Empirical),
        _ => Err(format!("expected law or empirical, got {s}")),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_vec<T>(slot: &mut Vec<T>, v: Vec<T>) {
    if !v.is_empty() {
        *slot = v;
    }
}

fn base(kind: Kind, common: &Common) -> Result<ConfigDocument, CliError> {
    match &common.config {
        Some(path) => ConfigDocument::load(kind, path),
        None => Ok(ConfigDocument::default_for(kind)),
    }
}

fn build(command: Command) -> Result<(ConfigDocument, Common), CliError> {
    let (doc, common) = match command {
        Command::Fclt {
            common,
            law,
            d,
            n,
            regions,
            variance,
            ks_tolerance,
        } => {
            let mut doc = base(Kind::Fclt, &common)?;
            if let ConfigDocument::Fclt(c) = &mut doc {
                set(&mut c.law, law);
                set(&mut c.d, d);
                set(&mut c.n, n);
                set_vec(&mut c.regions, regions);
                c.variance = variance.or(c.variance);
                c.ks_tolerance = ks_tolerance.or(c.ks_tolerance);
                set(&mut c.reps, common.reps);
                set(&mut c.seed, common.seed);
            }
            (doc, common)
        }
        Command::Selfnorm {
            common,
            law,
            d,
            n,
            regions,
            scale,
            raikov_n,
            raikov_reps,
        } => {
            let mut doc = base(Kind::Selfnorm, &common)?;
            if let ConfigDocument::Selfnorm(c) = &mut doc {
                set(&mut c.law, law);
                set(&mut c.d, d);
                set(&mut c.n, n);
                set_vec(&mut c.regions, regions);
                set(&mut c.scale, scale);
                set(&mut c.raikov_n, raikov_n);
                set(&mut c.raikov_reps, raikov_reps);
                set(&mut c.reps, common.reps);
                set(&mut c.seed, common.seed);
            }
            (doc, common)
        }
        Command::Counterexample {
            common,
            p,
            d,
            r,
            delta_factor,
        } => {
            let mut doc = base(Kind::Counterexample, &common)?;
            if let ConfigDocument::Counterexample(c) = &mut doc {
                set(&mut c.p, p);
                set(&mut c.d, d);
                set(&mut c.rs, r.as_deref().map(parse_r_range).transpose()?);
                set(&mut c.delta_factor, delta_factor);
                set(&mut c.reps, common.reps);
                set(&mut c.seed, common.seed);
            }
            (doc, common)
        }
        Command::Entropy {
            common,
            class,
            eps,
            p,
            d,
            r_max,
        } => {
            let mut doc = base(Kind::Entropy, &common)?;
            if let ConfigDocument::Entropy(c) = &mut doc {
                set(&mut c.class, class);
                set_vec(&mut c.eps, eps);
                set(&mut c.p, p);
                set(&mut c.d, d);
                set(&mut c.r_max, r_max);
            }
            (doc, common)
        }
        Command::Orlicz {
            common,
            constants,
            gaussian_reps,
        } => {
            let mut doc = base(Kind::Orlicz, &common)?;
            if let ConfigDocument::Orlicz(c) = &mut doc {
                set_vec(&mut c.constants, constants);
                set(&mut c.gaussian_reps, gaussian_reps.or(common.reps));
                set(&mut c.seed, common.seed);
            }
            (doc, common)
        }
        Command::Lemma2 {
            common,
            law,
            d,
            region,
            ladder,
        } => {
            let mut doc = base(Kind::Lemma2, &common)?;
            if let ConfigDocument::Lemma2(c) = &mut doc {
                set(&mut c.law, law);
                set(&mut c.d, d);
                set(&mut c.region, region);
                set_vec(&mut c.ladder, ladder);
                set(&mut c.reps, common.reps);
                set(&mut c.seed, common.seed);
            }
            (doc, common)
        }
        Command::Lemma1 { common, ns, tau } => {
            let mut doc = base(Kind::Lemma1, &common)?;
            if let ConfigDocument::Lemma1(c) = &mut doc {
                set_vec(&mut c.ns, ns);
                set(&mut c.tau, tau);
                set(&mut c.reps, common.reps);
                set(&mut c.seed, common.seed);
            }
            (doc, common)
        }
        Command::Version => unreachable!("handled before building a config"),
    };
    Ok((doc, common))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Version = cli.command {
        println!("setsum {}", env!("CARGO_PKG_VERSION"));
        return ExitCode::SUCCESS;
    }
    let (mut doc, common) = match build(cli.command) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = doc.resolve() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if common.dry_run {
        print!("{}", doc.to_toml());
        return ExitCode::SUCCESS;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir(doc.kind()));
    match run(&doc, &out, common.threads) {
        Ok(outcome) => {
            for r in &outcome.reports {
                println!(
                    "{:<12} {} observed={} target={} tol={}",
                    r.verdict.to_string(),
                    r.statistic,
                    r.observed,
                    r.target,
                    r.tolerance
                );
            }
            println!(
                "artifacts in {} ({:.2}s)",
                out.display(),
                outcome.runtime_secs
            );
            ExitCode::from(exit_code(&outcome))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
