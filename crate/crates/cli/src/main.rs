use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depsub::greedy::{self, GreedyConfig, SampleCount, WeightMode, WeightVariant};
use depsub::harness::generators::{generate_common_cause_with, generate_random_product, CommonCauseSpec, CoverageSpec};
use depsub::harness::pipeline::run_pipeline;
use depsub::harness::report::Report;
use depsub::harness::scenario::{bundled_suite, read_scenarios, scenarios_to_json};
use depsub::independence::{self, IndependenceReport, KappaVariant, DEFAULT_INDEPENDENCE_CAP};
use depsub::model::io::{read_document, save_document, ConstraintFile, InstanceDocument};
use depsub::model::prob::{parse_prob, zero};
use depsub::model::utility::DEFAULT_VALIDATE_CAP;
use depsub::policies;
use depsub::{Constraint, Error, Instance, Multilinear};

#[derive(Parser)]
#[command(name = "depsub", version, about = "Submodular maximization with dependent item states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree of independence of an instance's prior.
    Kappa {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "literal")]
        variant: KappaArg,
        #[arg(long, default_value_t = DEFAULT_INDEPENDENCE_CAP)]
        cap: usize,
    },
    /// Second-form degree of independence.
    Gamma {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_INDEPENDENCE_CAP)]
        cap: usize,
    },
    /// Optimistic continuous greedy.
    Greedy(GreedyArgs),
    /// Exact policy oracles.
    Oracle {
        #[arg(value_enum)]
        which: OracleKind,
        instance: PathBuf,
        #[command(flatten)]
        constraint: ConstraintArg,
    },
    /// Adaptive optimum against the best fixed set and the virtual policy.
    Gap {
        instance: PathBuf,
        #[command(flatten)]
        constraint: ConstraintArg,
    },
    /// Runs a scenario file and prints the report.
    Experiment {
        scenarios: PathBuf,
        /// Exit with status 3 when any bound flag fails.
        #[arg(long)]
        strict: bool,
        /// Write the tab-separated report here instead of stdout.
        #[arg(long)]
        tsv: Option<PathBuf>,
        /// Write the JSON dump here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print per-scenario wall time to stderr.
        #[arg(long)]
        timings: bool,
    },
    /// Writes a generated instance.
    Generate {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Checks that an instance parses and its utility is monotone submodular.
    Validate {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VALIDATE_CAP)]
        cap: usize,
    },
    /// Prints the bundled scenario suite.
    Suite,
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaArg {
    Literal,
    Conditioned,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Adaptive,
    Nonadaptive,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Optimistic,
    Standard,
}

#[derive(Args)]
struct ConstraintArg {
    /// `uniform:K`, inline JSON, or a JSON file; defaults to the instance's own.
    #[arg(long)]
    constraint: Option<String>,
}

#[derive(Args)]
struct GreedyArgs {
    instance: PathBuf,
    #[command(flatten)]
    constraint: ConstraintArg,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    /// Samples per weight in sampled mode: a count or `paper`.
    #[arg(long, default_value = "paper")]
    samples: String,
    #[arg(long, value_enum, default_value = "optimistic")]
    variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the per-round trajectory table.
    #[arg(long)]
    trajectory: bool,
}

#[derive(Subcommand)]
enum Generator {
    CommonCause {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long)]
        worlds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that an item ignores the world, as `p/q`.
        #[arg(long)]
        noise: Option<String>,
        #[command(flatten)]
        constraint: ConstraintArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Product {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        constraint: ConstraintArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Error(Error),
    Violations(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(n)) => {
            eprintln!("{n} scenario(s) violated a bound");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Capacity { .. } => 2,
                _ => 1,
            })
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Kappa { instance, variant, cap } => {
            let inst = read_document(&instance)?.instance;
            let variant = match variant {
                KappaArg::Literal => KappaVariant::Literal,
                KappaArg::Conditioned => KappaVariant::Conditioned,
            };
            print_independence("kappa", &independence::kappa_with(&inst, variant, cap)?, &inst);
        }
        Command::Gamma { instance, cap } => {
            let inst = read_document(&instance)?.instance;
            print_independence("gamma", &independence::gamma_with_cap(&inst, cap)?, &inst);
        }
        Command::Greedy(args) => greedy_command(args)?,
        Command::Oracle {
            which,
            instance,
            constraint,
        } => {
            let (inst, c) = load_with_constraint(&instance, &constraint)?;
            match which {
                OracleKind::Adaptive => {
                    let opt = policies::optimal_adaptive(&inst, &c)?;
                    println!("value\t{}", opt.value);
                    println!("depth\t{}", opt.policy.depth());
                    println!("policy\t{}", opt.policy.to_json(&inst));
                }
                OracleKind::Nonadaptive => {
                    let (set, value) = policies::best_nonadaptive(&inst, &c)?;
                    println!("value\t{value}");
                    println!("set\t{}", names(&inst, set.iter()));
                }
            }
        }
        Command::Gap { instance, constraint } => {
            let (inst, c) = load_with_constraint(&instance, &constraint)?;
            let g = independence::gamma(&inst)?;
            let opt = policies::optimal_adaptive(&inst, &c)?;
            let (_, best) = policies::best_nonadaptive(&inst, &c)?;
            let virt = policies::virtual_nonadaptive_value(&inst, &opt.policy)?;
            println!("gamma\t{}", g.clamped);
            println!("adaptive\t{}", opt.value);
            println!("nonadaptive\t{best}");
            if best > 0.0 {
                println!("gap\t{}", opt.value / best);
            }
            match independence::adaptivity_gap_bound(g.clamped_f64()) {
                Ok(b) => println!("gap_bound\t{b}"),
                Err(_) => println!("gap_bound\tNA"),
            }
            println!("virtual\t{virt}");
        }
        Command::Experiment {
            scenarios,
            strict,
            tsv,
            json,
            timings,
        } => {
            let suite = read_scenarios(&scenarios)?;
            let base = scenarios.parent().unwrap_or(Path::new("."));
            let mut report = Report::default();
            for s in &suite {
                let start = Instant::now();
                report.rows.push(run_pipeline(s, base));
                if timings {
                    eprintln!("{}\t{:.3}s", s.name, start.elapsed().as_secs_f64());
                }
            }
            match tsv {
                Some(path) => std::fs::write(path, report.to_tsv()).map_err(Error::from)?,
                None => print!("{}", report.to_tsv()),
            }
            if let Some(path) = json {
                std::fs::write(path, report.to_json()).map_err(Error::from)?;
            }
            let bad = report.violations();
            if strict && bad > 0 {
                return Err(Failure::Violations(bad));
            }
        }
        Command::Generate { generator } => {
            let (inst, constraint, output) = match generator {
                Generator::CommonCause {
                    m,
                    states,
                    worlds,
                    seed,
                    noise,
                    constraint,
                    output,
                } => {
                    let inst = generate_common_cause_with(&CommonCauseSpec {
                        m,
                        states,
                        worlds,
                        seed,
                        noise: noise.as_deref().map(parse_prob).transpose()?.unwrap_or_else(zero),
                        coverage: CoverageSpec::default(),
                    })?;
                    (inst, constraint, output)
                }
                Generator::Product {
                    m,
                    states,
                    seed,
                    constraint,
                    output,
                } => (generate_random_product(m, states, seed, &CoverageSpec::default())?, constraint, output),
            };
            let constraint = constraint
                .constraint
                .as_deref()
                .map(|s| parse_constraint(s, &inst))
                .transpose()?;
            let text = save_document(&InstanceDocument {
                instance: inst,
                constraint,
            });
            match output {
                Some(path) => std::fs::write(path, text).map_err(Error::from)?,
                None => print!("{text}"),
            }
        }
        Command::Validate { instance, cap } => {
            let doc = read_document(&instance)?;
            let report = doc.instance.validate_utility(cap)?;
            println!("items\t{}", doc.instance.m());
            println!("states\t{}", doc.instance.n_states());
            println!("support\t{}", doc.instance.distribution().support().len());
            println!("monotone\t{}", report.monotone);
            println!("submodular\t{}", report.submodular);
            if let Some(note) = &report.note {
                println!("note\t{note}");
            }
            if let Some(w) = &report.witness {
                return Err(Error::Input(format!("utility check failed: {w:?}")).into());
            }
        }
        Command::Suite => print!("{}", scenarios_to_json(&bundled_suite())),
    }
    Ok(())
}

fn greedy_command(args: GreedyArgs) -> CliResult {
    let (inst, c) = load_with_constraint(&args.instance, &args.constraint)?;
    let weight_mode = match args.mode {
        ModeArg::Exact => WeightMode::Exact,
        ModeArg::Sampled if args.samples == "paper" => WeightMode::Sampled(SampleCount::Paper),
        ModeArg::Sampled => WeightMode::Sampled(SampleCount::Fixed(
            args.samples
                .parse()
                .map_err(|_| Error::Input(format!("bad sample count {:?}", args.samples)))?,
        )),
    };
    let config = GreedyConfig {
        delta: args.delta,
        weight_mode,
        seed: args.seed,
        variant: match args.variant {
            VariantArg::Optimistic => WeightVariant::Optimistic,
            VariantArg::Standard => WeightVariant::Standard,
        },
    };
    let ml = match Multilinear::new(&inst) {
        Ok(ml) => ml,
        Err(_) if args.mode == ModeArg::Sampled => Multilinear::sampled(&inst),
        Err(e) => return Err(e.into()),
    };
    let traj = greedy::run_with(&ml, &c, &config)?;
    if args.trajectory {
        print!("{}", traj.to_tsv(&ml));
    } else {
        for (name, v) in inst.items().iter().zip(traj.final_point.coords()) {
            println!("y_{name}\t{v}");
        }
        match ml.value(&traj.final_point) {
            Ok(v) => println!("F\t{v}"),
            Err(_) => println!("F\tNA"),
        }
    }
    Ok(())
}

fn print_independence(label: &str, report: &IndependenceReport, inst: &Instance) {
    println!("{label}\t{}", report.value);
    println!("clamped\t{}", report.clamped);
    println!("ratios\t{}", report.ratios_examined);
    println!("witness\t{}", report.to_json(inst)["witness"]);
}

fn names(inst: &Instance, items: impl Iterator<Item = usize>) -> String {
    items.map(|e| inst.items()[e].as_str()).collect::<Vec<_>>().join(",")
}

fn load_with_constraint(path: &Path, arg: &ConstraintArg) -> Result<(Instance, Constraint), Error> {
    let doc = read_document(path)?;
    let c = match (&arg.constraint, doc.constraint) {
        (Some(s), _) => parse_constraint(s, &doc.instance)?,
        (None, Some(c)) => c,
        (None, None) => return Err(Error::Input("no constraint given and none stored with the instance".into())),
    };
    Ok((doc.instance, c))
}

fn parse_constraint(text: &str, inst: &Instance) -> Result<Constraint, Error> {
    if let Some(k) = text.strip_prefix("uniform:") {
        let k = k.parse().map_err(|_| Error::Input(format!("bad rank in {text:?}")))?;
        return Ok(Constraint::uniform(k));
    }
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text)?
    };
    let file: ConstraintFile = serde_json::from_str(&json)?;
    file.resolve(inst)
}
