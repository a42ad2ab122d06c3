use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ddval_harness::experiments::{compare, gas, ledger_demo, scale, value};
use ddval_harness::{output, parse_seeds, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "ddval",
    version,
    about = "Data valuation experiments for federated and swarm learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds, e.g. `0..12` or `1,4,9`. Overrides the config file.
    #[arg(long, value_parser = |s: &str| parse_seeds(s).map(SeedList))]
    seed: Option<SeedList>,
    /// Output directory for JSON and CSV reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(SeedList(seeds)) = &self.seed {
            cfg.seeds = seeds.clone();
        }
        anyhow::ensure!(!cfg.seeds.is_empty(), "no seeds configured");
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Value every training point under per-client label flipping.
    Value(Common),
    /// Compare DDVal, OR and SaFE client values with exact retraining.
    Compare(Common),
    /// Time valuation as points and clients grow.
    Scale(Common),
    /// Run a swarm session over the simulated ledger and settle the payout.
    LedgerDemo {
        #[command(flatten)]
        common: Common,
        /// Number of peer institutions
        #[arg(long)]
        peers: Option<usize>,
        /// Plateau window W in rounds
        #[arg(long)]
        window: Option<usize>,
        /// Fund deposited by the owner, in token units
        #[arg(long)]
        fund: Option<u64>,
        /// Give up when no transaction arrives for this long
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
    /// Estimate contract deployment cost in USD.
    Gas {
        #[command(flatten)]
        common: Common,
        /// Institutions covered by the deployment
        #[arg(long)]
        institutions: Option<usize>,
        /// Gas price in Gwei
        #[arg(long)]
        gas_price_gwei: Option<f64>,
        /// ETH price in USD
        #[arg(long)]
        eth_usd: Option<f64>,
    },
}

fn report_violations(violations: &[String]) -> ExitCode {
    for v in violations {
        eprintln!("invariant violated: {v}");
    }
    if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Value(common) => {
            let cfg = common.resolve()?;
            let report = value::run_value_points(&cfg)?;
            output::write_value(&common.out, &report)?;
            println!("{}", report.interpretation.statement);
            for (flips, s) in &report.flip_summary {
                println!(
                    "flips={flips}: mean {:.4e} [{:.4e}, {:.4e}]",
                    s.mean, s.ci_low, s.ci_high
                );
            }
            Ok(report_violations(&report.violations))
        }
        Command::Compare(common) => {
            let cfg = common.resolve()?;
            let report = compare::run_compare_institutional(&cfg)?;
            output::write_compare(&common.out, &report)?;
            for (mode, methods) in &report.summary {
                for (m, s) in methods {
                    println!("{mode} {m}: cosine {:.5} [{:.5}, {:.5}]", s.mean, s.ci_low, s.ci_high);
                }
            }
            Ok(report_violations(&report.violations))
        }
        Command::Scale(common) => {
            let cfg = common.resolve()?;
            let report = scale::run_scale(&cfg)?;
            output::write_scale(&common.out, &report)?;
            for t in &report.ddval {
                println!("ddval n={}: {:.4}s", t.n_points, t.best);
            }
            if let Some(r) = report.ddval_largest_ratio {
                println!("ddval time ratio at the largest pair: {r:.3}");
            }
            for c in &report.clients {
                println!(
                    "clients={}: OR {} evaluations, SaFE {} evaluations",
                    c.n_clients, c.or_evaluations, c.safe_evaluations
                );
            }
            Ok(report_violations(&report.violations))
        }
        Command::LedgerDemo {
            common,
            peers,
            window,
            fund,
            timeout_ms,
        } => {
            let mut cfg = common.resolve()?;
            let l = &mut cfg.ledger;
            l.peers = peers.unwrap_or(l.peers);
            l.window = window.unwrap_or(l.window);
            l.fund = fund.unwrap_or(l.fund);
            l.timeout_ms = timeout_ms.unwrap_or(l.timeout_ms);
            let (report, trace) = ledger_demo::run_ledger_demo(&cfg)?;
            output::write_ledger(&common.out, &report, &trace)?;
            let paid: u64 = report.payouts.values().sum();
            println!(
                "payouts {paid} + leftover {} = fund {} ({})",
                report.leftover,
                report.fund,
                if report.conserved { "conserved" } else { "NOT conserved" }
            );
            println!(
                "deployment: {} gas, {:.2} USD",
                report.deployment_gas, report.deployment_usd
            );
            Ok(report_violations(&report.violations))
        }
        Command::Gas {
            common,
            institutions,
            gas_price_gwei,
            eth_usd,
        } => {
            let mut cfg = common.resolve()?;
            let g = &mut cfg.gas;
            g.institutions = institutions.unwrap_or(g.institutions);
            g.gas_price_gwei = gas_price_gwei.unwrap_or(g.gas_price_gwei);
            g.eth_usd = eth_usd.unwrap_or(g.eth_usd);
            let report = gas::run_gas(&cfg);
            output::write_gas(&common.out, &report)?;
            println!(
                "{} institutions: {} gas, {:.2} USD; {:.2} USD per additional institution",
                report.deployment.institutions,
                report.deployment.gas,
                report.deployment.usd,
                report.per_institution_usd
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()).context("ddval failed") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
