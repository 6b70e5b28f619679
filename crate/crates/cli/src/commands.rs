//! Subcommand implementations.

use std::io;

use clap::{Args, Subcommand, ValueEnum};
use mixprior_core::eppf::{log_eppf_dpm, log_eppf_mfm, LabelledSizes};
use mixprior_core::functionals::{
    functional_stats_multi, marginal_size_pmf, relative_entropy_stats_multi, weighted_stats,
    Functional, FunctionalStats, StatTarget,
};
use mixprior_core::kplus::kplus_pmf;
use mixprior_core::priors::{ModelClass, ModelSpec};
use mixprior_core::simulate::{estimate_kplus_pmf, simulate_partition_at};
use serde_json::json;

use crate::model::{parse_f64_list, parse_u32_list, usage, ModelArgs, ModelKind};
use crate::output::{fmt_float, report_coverage, write_csv, write_json, Format, OutputArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(io::Error),
}

impl From<mixprior_core::Error> for CliError {
    fn from(e: mixprior_core::Error) -> Self {
        use mixprior_core::Error::*;
        match e {
            InvalidSpec(_) | Domain(_) | Parse { .. } | KPlusTooLarge { .. } => {
                CliError::Usage(e.to_string())
            }
            InfiniteSupport | InsufficientCoverage { .. } | BudgetExhausted { .. }
            | ImpossibleKPlus { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Prior pmf of the number of data clusters, with summary statistics.
    Kplus(KplusArgs),
    /// Conditional or weighted moments of a partition functional.
    Functional(FunctionalArgs),
    /// Hyperparameter or sample-size sweep in long format.
    Sweep(SweepArgs),
    /// Simulate partitions from the generative model.
    Simulate(SimulateArgs),
    /// Marginal prior of a single cluster size given the cluster count.
    Marginal(MarginalArgs),
    /// Prior probability of an explicit partition.
    Eppf(EppfArgs),
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Kplus(args) => cmd_kplus(args),
        Command::Functional(args) => cmd_functional(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Marginal(args) => cmd_marginal(args),
        Command::Eppf(args) => cmd_eppf(args),
    }
}

#[derive(Args)]
pub struct KplusArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Quantile level reported in the summary.
    #[arg(long, default_value_t = 0.99)]
    quantile: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_kplus(args: KplusArgs) -> Result<(), CliError> {
    let spec = args.model.to_spec()?;
    let pmf = kplus_pmf(&spec)?;
    let summary = pmf.summaries(args.quantile)?;
    report_coverage("kplus", &pmf.coverage());
    eprintln!(
        "summary: mean={} sd={} q{}={} p_homogeneity={} covered_mass={}",
        summary.mean,
        summary.sd,
        args.quantile,
        summary.quantile,
        summary.p_homogeneity,
        pmf.covered_mass()
    );
    match args.output.format {
        Format::Csv => write_csv(
            args.output.writer()?,
            &["k", "prob"],
            (1..=spec.n()).map(|k| vec![k.to_string(), fmt_float(pmf.prob(k))]),
        ),
        Format::Json => write_json(
            args.output.writer()?,
            &json!({
                "n": spec.n(),
                "covered_mass": pmf.covered_mass(),
                "probs": pmf.probs(),
                "summary": {
                    "mean": summary.mean,
                    "sd": summary.sd,
                    "q": args.quantile,
                    "quantile": summary.quantile,
                    "p_homogeneity": summary.p_homogeneity,
                },
            }),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FunctionalKind {
    /// Relative entropy of the partition.
    Entropy,
    /// Number of singleton clusters.
    Singletons,
    /// Kernel tabulated in --psi-file.
    Custom,
}

#[derive(Args)]
pub struct FunctionalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Which functional to evaluate.
    #[arg(long, value_enum)]
    kind: FunctionalKind,
    /// CSV file with header `n,psi` defining the kernel for n = 1..=N.
    #[arg(long = "psi-file")]
    psi_file: Option<std::path::PathBuf>,
    /// Cluster counts to condition on, e.g. 2,4,6,8.
    #[arg(long, default_value = "2,4,6,8")]
    kplus: String,
    /// Weight the conditional statistics by the prior of the cluster count.
    #[arg(long)]
    weighted: bool,
    #[command(flatten)]
    output: OutputArgs,
}

fn load_psi_file(path: &std::path::Path, n: u32) -> Result<Functional, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| usage(&format!("cannot read psi file: {e}")))?;
    let mut values = vec![f64::NAN; n as usize];
    for record in reader.records() {
        let record = record.map_err(|e| usage(&format!("bad psi file row: {e}")))?;
        let idx: u32 = record
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| usage("psi file rows must be `n,psi`"))?;
        let value: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| usage("psi file rows must be `n,psi`"))?;
        if idx >= 1 && idx <= n {
            values[(idx - 1) as usize] = value;
        }
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(usage(&format!(
            "psi file must define psi(n) for every n = 1..={n}"
        )));
    }
    Functional::from_table("custom", values).map_err(CliError::from)
}

fn cmd_functional(args: FunctionalArgs) -> Result<(), CliError> {
    let spec = args.model.to_spec()?;
    let custom = match args.kind {
        FunctionalKind::Custom => {
            let path = args
                .psi_file
                .as_deref()
                .ok_or_else(|| usage("--kind custom requires --psi-file"))?;
            Some(load_psi_file(path, spec.n())?)
        }
        _ => None,
    };

    let mut rows: Vec<(String, FunctionalStats)> = Vec::new();
    if args.weighted {
        let target = match args.kind {
            FunctionalKind::Entropy => StatTarget::RelativeEntropy,
            FunctionalKind::Singletons => StatTarget::Functional(&Functional::singleton()),
            FunctionalKind::Custom => StatTarget::Functional(custom.as_ref().expect("loaded")),
        };
        let stats = weighted_stats(&spec, target)?;
        report_coverage("functional (weighted)", &stats.coverage);
        rows.push(("weighted".to_string(), stats.value));
    } else {
        let ks = parse_u32_list(&args.kplus, "--kplus")?;
        let stats = match args.kind {
            FunctionalKind::Entropy => relative_entropy_stats_multi(&spec, &ks)?,
            FunctionalKind::Singletons => {
                functional_stats_multi(&spec, &ks, &Functional::singleton())?
            }
            FunctionalKind::Custom => {
                functional_stats_multi(&spec, &ks, custom.as_ref().expect("loaded"))?
            }
        };
        report_coverage("functional", &stats.coverage);
        for (k, s) in ks.iter().zip(stats.value) {
            rows.push((k.to_string(), s));
        }
    }

    match args.output.format {
        Format::Csv => write_csv(
            args.output.writer()?,
            &["k", "mean", "sd"],
            rows.iter()
                .map(|(k, s)| vec![k.clone(), fmt_float(s.mean), fmt_float(s.sd)]),
        ),
        Format::Json => write_json(
            args.output.writer()?,
            &json!({
                "kind": format!("{:?}", args.kind).to_lowercase(),
                "weighted": args.weighted,
                "rows": rows
                    .iter()
                    .map(|(k, s)| json!({"k": k, "mean": s.mean, "sd": s.sd, "variance": s.variance}))
                    .collect::<Vec<_>>(),
            }),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepTarget {
    Kplus,
    Entropy,
    Singletons,
    WeightedEntropy,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepAxis {
    Gamma,
    Alpha,
    N,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// What to compute at each grid point.
    #[arg(long, value_enum)]
    target: SweepTarget,
    /// Which parameter the grid runs over.
    #[arg(long, value_enum)]
    axis: SweepAxis,
    /// Strictly increasing comma-separated grid.
    #[arg(long)]
    grid: String,
    /// Cluster counts for the conditional targets.
    #[arg(long, default_value = "2,4,6,8")]
    kplus: String,
    /// Quantile level for the kplus target.
    #[arg(long, default_value_t = 0.99)]
    quantile: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Long-format row: (axis value, optional k, statistic name, value).
type SweepRow = (String, String, String, f64);

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let grid = parse_f64_list(&args.grid, "--grid")?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--grid must be strictly increasing"));
    }
    match (args.axis, args.model.model) {
        (SweepAxis::Gamma, ModelKind::Static)
        | (SweepAxis::Alpha, ModelKind::Dpm | ModelKind::Dynamic)
        | (SweepAxis::N, _) => {}
        (SweepAxis::Gamma, _) => {
            return Err(usage("--axis gamma applies only to --model static"))
        }
        (SweepAxis::Alpha, _) => {
            return Err(usage("--axis alpha applies only to --model dpm or dynamic"))
        }
    }
    let ks = parse_u32_list(&args.kplus, "--kplus")?;

    let mut rows: Vec<SweepRow> = Vec::new();
    for &x in &grid {
        let spec = match args.axis {
            SweepAxis::Gamma => args.model.spec_with(args.model.n, None, Some(x)),
            SweepAxis::Alpha => args.model.spec_with(args.model.n, Some(x), None),
            SweepAxis::N => {
                if x < 1.0 || x != x.trunc() {
                    Err(usage("--axis n needs a grid of positive integers"))
                } else {
                    args.model
                        .spec_with(x as u32, args.model.alpha, args.model.gamma)
                }
            }
        }
        .map_err(|e| at_point(x, e))?;
        let axis_label = fmt_axis(x);
        sweep_point(&args, &spec, &axis_label, &ks, &mut rows).map_err(|e| at_point(x, e))?;
    }

    match args.output.format {
        Format::Csv => write_csv(
            args.output.writer()?,
            &["axis", "k", "stat", "value"],
            rows.iter().map(|(axis, k, stat, value)| {
                vec![axis.clone(), k.clone(), stat.clone(), fmt_float(*value)]
            }),
        ),
        Format::Json => write_json(
            args.output.writer()?,
            &json!({
                "target": format!("{:?}", args.target).to_lowercase(),
                "axis": format!("{:?}", args.axis).to_lowercase(),
                "rows": rows
                    .iter()
                    .map(|(axis, k, stat, value)| json!({
                        "axis": axis,
                        "k": if k.is_empty() { serde_json::Value::Null } else { json!(k) },
                        "stat": stat,
                        "value": value,
                    }))
                    .collect::<Vec<_>>(),
            }),
        ),
    }
}

fn sweep_point(
    args: &SweepArgs,
    spec: &ModelSpec,
    axis: &str,
    ks: &[u32],
    rows: &mut Vec<SweepRow>,
) -> Result<(), CliError> {
    match args.target {
        SweepTarget::Kplus => {
            let pmf = kplus_pmf(spec)?;
            let s = pmf.summaries(args.quantile)?;
            rows.push((axis.into(), String::new(), "mean".into(), s.mean));
            rows.push((axis.into(), String::new(), "sd".into(), s.sd));
            rows.push((
                axis.into(),
                String::new(),
                "quantile".into(),
                s.quantile as f64,
            ));
            rows.push((
                axis.into(),
                String::new(),
                "p_homogeneity".into(),
                s.p_homogeneity,
            ));
        }
        SweepTarget::Entropy => {
            let stats = relative_entropy_stats_multi(spec, ks)?;
            for (k, s) in ks.iter().zip(stats.value) {
                rows.push((axis.into(), k.to_string(), "mean".into(), s.mean));
                rows.push((axis.into(), k.to_string(), "sd".into(), s.sd));
            }
        }
        SweepTarget::Singletons => {
            let stats = functional_stats_multi(spec, ks, &Functional::singleton())?;
            for (k, s) in ks.iter().zip(stats.value) {
                rows.push((axis.into(), k.to_string(), "mean".into(), s.mean));
                rows.push((axis.into(), k.to_string(), "sd".into(), s.sd));
            }
        }
        SweepTarget::WeightedEntropy => {
            let s = weighted_stats(spec, StatTarget::RelativeEntropy)?;
            rows.push((axis.into(), String::new(), "mean".into(), s.value.mean));
            rows.push((axis.into(), String::new(), "sd".into(), s.value.sd));
        }
        SweepTarget::Marginal => {
            for &k in ks {
                let probs = marginal_size_pmf(spec, k)?;
                for (i, &p) in probs.value.iter().enumerate() {
                    rows.push((
                        axis.into(),
                        k.to_string(),
                        format!("p{}", i + 1),
                        p,
                    ));
                }
            }
        }
    }
    Ok(())
}

fn at_point(x: f64, e: CliError) -> CliError {
    let wrap = |msg: String| format!("at grid point {x}: {msg}");
    match e {
        CliError::Usage(m) => CliError::Usage(wrap(m)),
        CliError::Numeric(m) => CliError::Numeric(wrap(m)),
        CliError::Io(m) => CliError::Io(m),
    }
}

fn fmt_axis(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of partitions to draw.
    #[arg(long)]
    draws: u64,
    /// Master seed; draw d uses stream d.
    #[arg(long)]
    seed: u64,
    /// Emit frequency summary instead of per-draw rows.
    #[arg(long)]
    summary: bool,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.draws < 1 {
        return Err(usage("--draws must be positive"));
    }
    let spec = args.model.to_spec()?;
    if args.summary {
        let pmf = estimate_kplus_pmf(&spec, args.draws, args.seed)?;
        match args.output.format {
            Format::Csv => write_csv(
                args.output.writer()?,
                &["k", "freq", "se"],
                (1..=spec.n()).map(|k| {
                    vec![
                        k.to_string(),
                        fmt_float(pmf.freq(k)),
                        fmt_float(pmf.se(k)),
                    ]
                }),
            ),
            Format::Json => write_json(
                args.output.writer()?,
                &json!({
                    "n": spec.n(),
                    "draws": args.draws,
                    "seed": args.seed,
                    "freq": (1..=spec.n()).map(|k| pmf.freq(k)).collect::<Vec<_>>(),
                    "se": (1..=spec.n()).map(|k| pmf.se(k)).collect::<Vec<_>>(),
                }),
            ),
        }
    } else {
        let k_plus: Vec<u32> = (0..args.draws)
            .map(|d| simulate_partition_at(&spec, args.seed, d).k_plus)
            .collect();
        match args.output.format {
            Format::Csv => write_csv(
                args.output.writer()?,
                &["draw", "k_plus"],
                k_plus
                    .iter()
                    .enumerate()
                    .map(|(d, k)| vec![d.to_string(), k.to_string()]),
            ),
            Format::Json => write_json(
                args.output.writer()?,
                &json!({
                    "n": spec.n(),
                    "draws": args.draws,
                    "seed": args.seed,
                    "k_plus": k_plus,
                }),
            ),
        }
    }
}

#[derive(Args)]
pub struct MarginalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Cluster count to condition on.
    #[arg(long)]
    kplus: u32,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_marginal(args: MarginalArgs) -> Result<(), CliError> {
    let spec = args.model.to_spec()?;
    let probs = marginal_size_pmf(&spec, args.kplus)?;
    report_coverage("marginal", &probs.coverage);
    match args.output.format {
        Format::Csv => write_csv(
            args.output.writer()?,
            &["n", "prob"],
            probs
                .value
                .iter()
                .enumerate()
                .map(|(i, &p)| vec![(i + 1).to_string(), fmt_float(p)]),
        ),
        Format::Json => write_json(
            args.output.writer()?,
            &json!({
                "n": spec.n(),
                "kplus": args.kplus,
                "probs": probs.value,
            }),
        ),
    }
}

#[derive(Args)]
pub struct EppfArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Labelled cluster sizes, e.g. 3,2,1.
    #[arg(long)]
    sizes: String,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_eppf(args: EppfArgs) -> Result<(), CliError> {
    let spec = args.model.to_spec()?;
    let sizes = LabelledSizes::new(parse_u32_list(&args.sizes, "--sizes")?)?;
    if sizes.n() != spec.n() {
        return Err(usage(&format!(
            "--sizes sums to {}, but --n is {}",
            sizes.n(),
            spec.n()
        )));
    }
    let log_prob = match spec.class() {
        ModelClass::Dpm { alpha } => log_eppf_dpm(&sizes, alpha),
        _ => {
            let value = log_eppf_mfm(&sizes, &spec)?;
            report_coverage("eppf", &value.coverage);
            value.value
        }
    };
    match args.output.format {
        Format::Csv => write_csv(
            args.output.writer()?,
            &["log_prob", "prob"],
            std::iter::once(vec![fmt_float(log_prob), fmt_float(log_prob.exp())]),
        ),
        Format::Json => write_json(
            args.output.writer()?,
            &json!({
                "sizes": sizes.sizes(),
                "n": sizes.n(),
                "log_prob": log_prob,
                "prob": log_prob.exp(),
            }),
        ),
    }
}
