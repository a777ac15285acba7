use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use privavg_core::consensus::{decimal_string, rational_string};
use privavg_core::experiment::ExperimentConfig;
use privavg_core::privacy_audit::{
    self, check_conditional_masks, check_corollary2, check_lemma2, check_lemma3, check_raw_pair_consistency,
    check_theorem1, enumerate_effective_inputs, enumerate_mask_distribution, view_histogram, AuditVerdict, Claim,
    Histogram, SampledTest, DEFAULT_BUDGET,
};
use privavg_core::{simulate, AdversarySpec, Modulus, Variant};

#[derive(Parser)]
#[command(name = "privavg", version, about = "Private average consensus: runs, audits and graph checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one protocol run and write its report and replay.
    Run(RunArgs),
    /// Check the configured privacy claims.
    Audit(AuditArgs),
    /// Report connectivity and whether the adversary set is a vertex cut.
    GraphCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "privavg-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Flood,
    Gossip,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&args.config)
        .with_context(|| format!("invalid config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(args: RunArgs) -> Result<bool> {
    let mut cfg = load(&args.common)?;
    if let Some(algo) = args.algo {
        cfg.algo.variant = match algo {
            AlgoArg::Flood => Variant::FloodSum,
            AlgoArg::Gossip => Variant::GossipAvg,
        };
    }
    let gossip = cfg.algo.variant == Variant::GossipAvg;
    let out = simulate(&cfg.sim_config().record_gossip_trace(gossip))?;
    let dir = &args.common.out;
    write(dir, "report.toml", &out.report.to_text()?)?;
    write(dir, "replay.txt", &out.replay.to_text())?;
    if gossip {
        let mut csv = String::from("round,spread\n");
        for (round, spread) in &out.gossip_trace {
            csv.push_str(&format!("{round},{spread:e}\n"));
        }
        write(dir, "gossip.csv", &csv)?;
    }
    let average = cfg.inputs.restore(&out.report.average);
    println!("average = {} (= {})", rational_string(&average), decimal_string(&average));
    Ok(true)
}

fn graph_check(args: CommonArgs) -> Result<bool> {
    let cfg = load(&args)?;
    let t = &cfg.topology;
    println!("agents: {}, edges: {}", t.n(), t.edges().len());
    println!("connected: {}", if t.is_connected() { "yes" } else { "no" });
    match t.vertex_connectivity() {
        Ok(k) => println!("vertex connectivity: {k}"),
        Err(e) => println!("vertex connectivity: n/a ({e})"),
    }
    if let Some(adv) = &cfg.adversary {
        let members: Vec<String> = adv.members.iter().map(|v| v.to_string()).collect();
        println!("adversary: {{{}}}", members.join(","));
        let cut = t.is_vertex_cut(&adv.members)?;
        let parts = t.components_without(&adv.members)?;
        println!("vertex cut: {}; components: {parts}", if cut { "yes" } else { "no" });
    }
    Ok(true)
}

fn require_adversary(cfg: &ExperimentConfig, claim: Claim) -> Result<&AdversarySpec> {
    cfg.adversary.as_ref().with_context(|| format!("claim {} needs an [adversary] section", claim.id()))
}

fn require_prime(cfg: &ExperimentConfig, claim: Claim) -> Result<&[u64]> {
    cfg.audit.s_prime.as_deref().with_context(|| format!("claim {} needs audit.inputs_prime", claim.id()))
}

struct Outcome {
    verdict: AuditVerdict,
    histograms: Vec<(String, Histogram)>,
}

fn exact_fits(cfg: &ExperimentConfig, p: u64) -> bool {
    (p as u128).checked_pow(cfg.topology.edges().len() as u32).is_some_and(|x| x <= DEFAULT_BUDGET)
}

fn audit_claim(cfg: &ExperimentConfig, claim: Claim, p: Modulus, alpha: f64) -> Result<Outcome> {
    let t = &cfg.topology;
    let s = &cfg.inputs.s;
    let done = |verdict, histograms| Ok(Outcome { verdict, histograms });
    match claim {
        Claim::Lemma2 => done(check_lemma2(t, p)?, vec![("masks".into(), enumerate_mask_distribution(t, p)?)]),
        Claim::Lemma3 => done(check_lemma3(t, p, s)?, vec![("effective".into(), enumerate_effective_inputs(t, p, s)?)]),
        Claim::ConditionalMasks => done(check_conditional_masks(t, p, require_adversary(cfg, claim)?)?, vec![]),
        Claim::RawPairConsistency => {
            let adv = require_adversary(cfg, claim)?;
            done(check_raw_pair_consistency(t, p, adv, s, require_prime(cfg, claim)?)?, vec![])
        }
        Claim::Theorem1 | Claim::Corollary2 => {
            let adv = require_adversary(cfg, claim)?;
            let s2 = require_prime(cfg, claim)?;
            let target = if claim == Claim::Corollary2 {
                Some(cfg.audit.target.clone().context("claim corollary2 needs audit.target")?)
            } else {
                None
            };
            let singleton = target.as_ref().is_some_and(|h| h.len() == 1);
            if singleton || (!cfg.audit.sampled && exact_fits(cfg, p.get())) {
                let verdict = match &target {
                    Some(h) => check_corollary2(t, p, adv, h, s, s2)?,
                    None => check_theorem1(t, p, adv, s, s2)?,
                };
                let histograms = if singleton {
                    vec![]
                } else {
                    vec![
                        ("s".into(), view_histogram(t, p, adv, s)?),
                        ("s-prime".into(), view_histogram(t, p, adv, s2)?),
                    ]
                };
                return done(verdict, histograms);
            }
            let mut test = SampledTest::new(t.clone(), cfg.params, adv.clone(), s.clone(), s2.to_vec())
                .samples(cfg.audit.samples)
                .alpha(alpha)
                .base_seed(cfg.seed);
            if let Some(h) = target {
                test = test.target(h);
            }
            done(privacy_audit::sampled_view_test(&test)?, vec![])
        }
    }
}

fn uses_sampling(cfg: &ExperimentConfig, claim: Claim, p: u64) -> bool {
    let singleton = cfg.audit.target.as_ref().is_some_and(|h| h.len() == 1);
    match claim {
        Claim::Theorem1 => cfg.audit.sampled || !exact_fits(cfg, p),
        Claim::Corollary2 => !singleton && (cfg.audit.sampled || !exact_fits(cfg, p)),
        _ => false,
    }
}

fn audit(args: AuditArgs) -> Result<bool> {
    let mut cfg = load(&args.common)?;
    if let Some(samples) = args.samples {
        cfg.audit.samples = samples;
    }
    if let Some(alpha) = args.alpha {
        if !(alpha > 0.0 && alpha < 1.0) {
            bail!("--alpha must lie in (0, 1), got {alpha}");
        }
        cfg.audit.alpha = alpha;
    }
    if cfg.audit.claims.is_empty() {
        bail!("no claims selected: set audit.claims in {}", args.common.config.display());
    }
    let p = Modulus::new(cfg.audit.p)?;
    let sampled = cfg.audit.claims.iter().filter(|&&c| uses_sampling(&cfg, c, p.get())).count();
    let alpha = cfg.audit.alpha / sampled.max(1) as f64;
    let dir = &args.common.out;
    let mut all_pass = true;
    for &claim in &cfg.audit.claims {
        let outcome = audit_claim(&cfg, claim, p, alpha).with_context(|| format!("claim {}", claim.id()))?;
        let v = &outcome.verdict;
        write(dir, &format!("verdict-{}.txt", claim.id()), &v.to_string())?;
        for (name, h) in &outcome.histograms {
            write(dir, &format!("histogram-{}-{name}.csv", claim.id()), &h.to_csv())?;
        }
        println!(
            "{}: {} ({}; {}) {}",
            claim.id(),
            if v.pass { "pass" } else { "fail" },
            v.method.id(),
            if v.hypothesis_holds { "hypothesis holds" } else { "hypothesis does not hold" },
            v.details
        );
        all_pass &= v.pass;
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Audit(args) => audit(args),
        Command::GraphCheck(args) => graph_check(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
