use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tgd::data::{describe, embedded, FreqTable, EMBEDDED_NAMES};
use tgd::estimation::Method;
use tgd::inference::{test_battery, NullInformation, TestResult};
use tgd::report::{canonical_json, compare, round6, ModelSet};
use tgd::simulation::{
    run_bias_study, run_power_study, trend_report, BiasStudyConfig, PowerStudyConfig, StudyResult,
    TrendReport, TREND_SLACK,
};
use tgd::{RngSeed, TgdError, TgdParams};

#[derive(Parser, Debug)]
#[command(name = "tgd", version, about = "Transmuted geometric distribution toolkit")]
struct Cli {
    /// Master seed for sampling and simulation.
    #[arg(long, global = true, env = "TGD_SEED", default_value_t = 1)]
    seed: u64,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,

    /// Two-column `value,count` CSV file.
    #[arg(long, global = true, conflicts_with = "embedded")]
    data: Option<PathBuf>,

    /// Embedded dataset (`ntg` or `doctor_visit`).
    #[arg(long, global = true)]
    embedded: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean, variance and index of dispersion of the data.
    Describe,
    /// Fit TGD, geometric and negative binomial models and compare AIC.
    Fit {
        /// Models to fit.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModelArg::Mle, ModelArg::Em, ModelArg::Geometric, ModelArg::Nb])]
        models: Vec<ModelArg>,
        /// Skip the tests of alpha = 0.
        #[arg(long)]
        no_tests: bool,
    },
    /// Likelihood ratio, score and Wald tests of alpha = 0.
    Test,
    /// Reliability functions of TGD(q, alpha) for y = 0..=max-y.
    HazardTable {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 20)]
        max_y: u64,
    },
    /// Monte-Carlo studies.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Draw a sample from TGD(q, alpha) and print it as a frequency table.
    Sample {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mechanism::Inverse)]
        mechanism: Mechanism,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Mle,
    Em,
    Geometric,
    Nb,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mechanism {
    /// Inverse transform of the quantile function.
    Inverse,
    /// Minimum or maximum of two geometric draws.
    Mixture,
}

#[derive(Subcommand, Debug)]
enum Simulate {
    /// Bias, standard error and MSE of the MLE and EM estimators.
    Bias(BiasArgs),
    /// Rejection rates of the three tests.
    Power(PowerArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BiasPreset {
    /// alpha in {-0.75, -0.30}.
    Negative,
    /// alpha in {0.30, 0.75}.
    Positive,
    /// All four alpha values at 200 replications.
    Desk,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PowerPreset {
    Standard,
    Desk,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Mle,
    Em,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Override the q grid.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Override the alpha grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    /// Override the sample-size grid.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Override the number of replications.
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Args, Debug)]
struct BiasArgs {
    #[arg(long, value_enum, default_value_t = BiasPreset::Desk)]
    preset: BiasPreset,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    /// Drop boundary estimates from the averages.
    #[arg(long)]
    exclude_boundary: bool,
    /// Iteration cap for EM fits.
    #[arg(long)]
    em_max_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[arg(long, value_enum, default_value_t = PowerPreset::Desk)]
    preset: PowerPreset,
    #[command(flatten)]
    grid: GridArgs,
    /// Significance level.
    #[arg(long)]
    level: Option<f64>,
}

/// Failure reported to the shell.
struct Failure {
    code: u8,
    message: String,
}

impl From<TgdError> for Failure {
    fn from(e: TgdError) -> Self {
        let code = if e.is_convergence() { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<String, Failure>;

fn load(cli: &Cli) -> Result<(String, FreqTable), Failure> {
    match (&cli.data, &cli.embedded) {
        (Some(path), _) => Ok((path.display().to_string(), FreqTable::load_csv(path)?)),
        (None, Some(name)) => Ok((name.clone(), embedded(name)?.table)),
        (None, None) => Err(Failure {
            code: 1,
            message: format!(
                "no data: pass --data <path> or --embedded <{}>",
                EMBEDDED_NAMES.join("|")
            ),
        }),
    }
}

fn json<T: serde::Serialize>(v: &T) -> CliResult {
    Ok(canonical_json(v)? + "\n")
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Describe => {
            let (name, data) = load(cli)?;
            let d = describe(&data);
            match cli.output {
                Format::Json => json(&serde_json::json!({ "dataset": name, "descriptives": d })),
                Format::Csv => Ok(format!(
                    "dataset,n,mean,variance,index_of_dispersion,max\n{},{},{},{},{},{}\n",
                    name, d.n, d.mean, d.variance, d.index_of_dispersion, d.max
                )),
                Format::Text => Ok(format!(
                    "dataset: {name}\nn:                   {}\nmean:                {}\nvariance:            {}\nindex of dispersion: {}\nmax:                 {}\n",
                    d.n,
                    round6(d.mean),
                    round6(d.variance),
                    round6(d.index_of_dispersion),
                    d.max
                )),
            }
        }
        Command::Fit { models, no_tests } => {
            let (name, data) = load(cli)?;
            let set = ModelSet {
                tgd_mle: models.contains(&ModelArg::Mle),
                tgd_em: models.contains(&ModelArg::Em),
                geometric: models.contains(&ModelArg::Geometric),
                negbin: models.contains(&ModelArg::Nb),
                tests: !no_tests,
            };
            let report = compare(&name, &data, &set)?;
            let out = match cli.output {
                Format::Json => report.to_json()? + "\n",
                Format::Text => report.to_text(),
                Format::Csv => {
                    let mut s = String::from("model,method,parameter,estimate,se,loglik,aic,best,boundary,error\n");
                    for m in &report.models {
                        let model = serde_json::to_value(m.model).ok();
                        let model = model.as_ref().and_then(|v| v.as_str()).unwrap_or("");
                        let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                        let err = m.error.clone().unwrap_or_default().replace(',', ";");
                        if m.estimates.is_empty() {
                            let _ = writeln!(s, "{model},{},,,,,,{},{},{err}", m.method, m.best, m.boundary);
                        }
                        for e in &m.estimates {
                            let _ = writeln!(
                                s,
                                "{model},{},{},{},{},{},{},{},{},{err}",
                                m.method,
                                e.name,
                                e.value,
                                cell(e.se),
                                cell(m.loglik),
                                cell(m.aic),
                                m.best,
                                m.boundary
                            );
                        }
                    }
                    s
                }
            };
            // a failed TGD fit still prints the partial report
            if let Some(e) = report.models.iter().find_map(|m| m.failure.clone()) {
                print!("{out}");
                return Err(e.into());
            }
            Ok(out)
        }
        Command::Test => {
            let (name, data) = load(cli)?;
            let b = test_battery(&data);
            let rows: Vec<(&str, &Result<TestResult, TgdError>)> = vec![
                ("LRT", &b.lrt),
                ("Score", &b.score),
                ("Score (observed information)", &b.score_observed),
                ("Wald", &b.wald),
            ];
            if let Some((_, Err(e))) = rows.iter().find(|(_, r)| r.is_err()) {
                return Err(e.clone().into());
            }
            let ok: Vec<(&str, &TestResult)> = rows
                .iter()
                .filter_map(|(n, r)| r.as_ref().ok().map(|t| (*n, t)))
                .collect();
            let info = |n: &str| match n {
                "Score" => Some(NullInformation::Expected),
                "Score (observed information)" => Some(NullInformation::Observed),
                _ => None,
            };
            match cli.output {
                Format::Json => {
                    let tests: Vec<_> = ok
                        .iter()
                        .map(|(n, t)| {
                            serde_json::json!({
                                "test": t.method,
                                "information": info(n),
                                "statistic": t.statistic,
                                "df": t.df,
                                "p_value": t.p_value,
                                "null_q": t.null_q,
                                "alt": t.alt,
                            })
                        })
                        .collect();
                    json(&serde_json::json!({ "dataset": name, "tests": tests }))
                }
                Format::Csv => {
                    let mut s = String::from("test,information,statistic,df,p_value\n");
                    for (n, t) in &ok {
                        let i = match info(n) {
                            Some(NullInformation::Expected) => "expected",
                            Some(NullInformation::Observed) => "observed",
                            None => "",
                        };
                        let tag = if n.starts_with("Score") { "Score" } else { n };
                        let _ = writeln!(s, "{tag},{i},{},{},{}", t.statistic, t.df, t.p_value);
                    }
                    Ok(s)
                }
                Format::Text => {
                    let mut s = format!("dataset: {name}\n{:<30} {:>14} {:>4} {:>14}\n", "test", "statistic", "df", "p-value");
                    for (n, t) in &ok {
                        let _ = writeln!(s, "{n:<30} {:>14} {:>4} {:>14}", round6(t.statistic), t.df, round6(t.p_value));
                    }
                    Ok(s)
                }
            }
        }
        Command::HazardTable { q, alpha, max_y } => {
            let p = TgdParams::new(*q, *alpha)?;
            let rows = p.reliability_table(*max_y);
            match cli.output {
                Format::Json => json(&serde_json::json!({
                    "params": p,
                    "hazard_class": p.classify_hazard(),
                    "rows": rows,
                })),
                Format::Csv => {
                    let mut s = String::from("y,pmf,sf,hazard,second_hazard,reversed_hazard,mrl\n");
                    for r in &rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{}",
                            r.y, r.pmf, r.sf, r.hazard, r.second_hazard, r.reversed_hazard, r.mrl
                        );
                    }
                    Ok(s)
                }
                Format::Text => {
                    let mut s = format!(
                        "TGD(q={q}, alpha={alpha}), hazard {:?}\n{:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
                        p.classify_hazard(),
                        "y",
                        "pmf",
                        "sf",
                        "hazard",
                        "2nd hazard",
                        "rev hazard",
                        "mrl"
                    );
                    for r in &rows {
                        let _ = writeln!(
                            s,
                            "{:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
                            r.y,
                            round6(r.pmf),
                            round6(r.sf),
                            round6(r.hazard),
                            round6(r.second_hazard),
                            round6(r.reversed_hazard),
                            round6(r.mrl)
                        );
                    }
                    Ok(s)
                }
            }
        }
        Command::Simulate(Simulate::Bias(args)) => {
            let mut cfg = match args.preset {
                BiasPreset::Negative => BiasStudyConfig::negative_alpha(1000, cli.seed),
                BiasPreset::Positive => BiasStudyConfig::positive_alpha(1000, cli.seed),
                BiasPreset::Desk => BiasStudyConfig::desk(cli.seed),
            };
            apply_grid(&args.grid, &mut cfg.q_grid, &mut cfg.alpha_grid, &mut cfg.n_grid, &mut cfg.replications);
            if let Some(m) = &args.methods {
                cfg.methods = m
                    .iter()
                    .map(|m| match m {
                        MethodArg::Mle => Method::Mle,
                        MethodArg::Em => Method::Em,
                    })
                    .collect();
            }
            cfg.exclude_boundary = args.exclude_boundary;
            if let Some(k) = args.em_max_iter {
                cfg.em_max_iter = k;
            }
            let result = run_bias_study(&cfg)?;
            let trends = trend_report(StudyResult::Bias(&result), TREND_SLACK);
            study_output(cli.output, &result, |w| result.write_csv(w), &trends)
        }
        Command::Simulate(Simulate::Power(args)) => {
            let mut cfg = match args.preset {
                PowerPreset::Standard => PowerStudyConfig::standard(1000, cli.seed),
                PowerPreset::Desk => PowerStudyConfig::desk(cli.seed),
            };
            apply_grid(&args.grid, &mut cfg.q_grid, &mut cfg.alpha_grid, &mut cfg.n_grid, &mut cfg.replications);
            if let Some(l) = args.level {
                cfg.level = l;
            }
            let result = run_power_study(&cfg)?;
            let trends = trend_report(StudyResult::Power(&result), TREND_SLACK);
            study_output(cli.output, &result, |w| result.write_csv(w), &trends)
        }
        Command::Sample { q, alpha, n, mechanism } => {
            let p = TgdParams::new(*q, *alpha)?;
            let seed = RngSeed(cli.seed);
            let draws = match mechanism {
                Mechanism::Inverse => p.sample(*n, seed),
                Mechanism::Mixture => p.sample_mixture(*n, seed),
            };
            let table = FreqTable::from_samples(&draws)?;
            match cli.output {
                Format::Csv => {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf)?;
                    Ok(String::from_utf8_lossy(&buf).into_owned())
                }
                Format::Json => json(&serde_json::json!({
                    "params": p,
                    "n": n,
                    "seed": cli.seed,
                    "counts": table.entries(),
                })),
                Format::Text => {
                    let mut s = format!("TGD(q={q}, alpha={alpha}), n = {n}, seed = {}\n", cli.seed);
                    for (v, c) in table.entries() {
                        let _ = writeln!(s, "{v:>6} {c:>8}");
                    }
                    Ok(s)
                }
            }
        }
    }
}

fn apply_grid(g: &GridArgs, q: &mut Vec<f64>, a: &mut Vec<f64>, n: &mut Vec<usize>, reps: &mut usize) {
    if let Some(v) = &g.q {
        *q = v.clone();
    }
    if let Some(v) = &g.alpha {
        *a = v.clone();
    }
    if let Some(v) = &g.n {
        *n = v.clone();
    }
    if let Some(r) = g.replications {
        *reps = r;
    }
}

fn study_output<T, F>(format: Format, result: &T, csv: F, trends: &TrendReport) -> CliResult
where
    T: serde::Serialize,
    F: FnOnce(&mut Vec<u8>) -> tgd::Result<()>,
{
    match format {
        Format::Json => json(&serde_json::json!({ "study": result, "trends": trends })),
        Format::Csv => {
            let mut buf = Vec::new();
            csv(&mut buf)?;
            Ok(String::from_utf8_lossy(&buf).into_owned())
        }
        Format::Text => {
            let mut buf = Vec::new();
            csv(&mut buf)?;
            let mut s = String::from_utf8_lossy(&buf).into_owned();
            let _ = writeln!(s, "\ntrends (slack {}):", trends.slack);
            for r in &trends.rows {
                let _ = writeln!(
                    s,
                    "{:<32} {:<14} vs {:<8} {:?}{}",
                    r.family,
                    r.metric,
                    r.axis,
                    r.trend,
                    if r.violation { "  VIOLATION" } else { "" }
                );
            }
            Ok(s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
