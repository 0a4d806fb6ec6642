use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wilks::graphdata::{read_comparisons, read_edge_list};
use wilks::inference::{run_lrt_with, LrtOptions};
use wilks::montecarlo::qq_csv;
use wilks::{betamodel, btmodel};
use wilks::{Data, Model, NullHypothesis, RegimeChoice, Runner, Schedule, SimScenario, Tolerance, WilksError};

#[derive(Parser, Debug)]
#[command(name = "wilks", version, about = "Fit and test the beta-model and Bradley-Terry model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum-likelihood fit with standard errors.
    Fit(FitArgs),
    /// Likelihood-ratio test of a specified or homogeneous null.
    Test(TestArgs),
    /// Monte Carlo rejection rates for a scenario.
    Simulate(SimArgs),
    /// QQ table of the normalized statistic.
    Qq(SimArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Beta,
    Bt,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Beta => Model::Beta,
            ModelArg::Bt => Model::Bt,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NullArg {
    Specified,
    Homogeneous,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegimeArg {
    Chi2,
    Normal,
    Auto,
}

impl From<RegimeArg> for RegimeChoice {
    fn from(r: RegimeArg) -> RegimeChoice {
        match r {
            RegimeArg::Chi2 => RegimeChoice::Chi2,
            RegimeArg::Normal => RegimeChoice::Normal,
            RegimeArg::Auto => RegimeChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Residual tolerance of the solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl Common {
    fn tolerance(&self) -> Result<Tolerance, Failure> {
        let mut t = Tolerance::default();
        if let Some(eps) = self.tol {
            t.abs_eps = eps;
        }
        if let Some(m) = self.max_iter {
            t.max_iter = m;
        }
        t.validate().map_err(Failure::usage)?;
        Ok(t)
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Edge list (beta) or `i,j,wins` rows (bt); `-` reads standard input.
    #[arg(long)]
    input: String,
    /// Bradley-Terry reference item, 1-based.
    #[arg(long, default_value_t = 1)]
    reference: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, value_enum)]
    null: NullArg,
    /// 1-based indices: `1..5`, `2,4,9` or a mix such as `1..3,7`.
    #[arg(long)]
    indices: String,
    /// Null values for a specified null: a comma list or a file of numbers.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    regime: RegimeArg,
    /// Also report the Wald test (homogeneous nulls).
    #[arg(long)]
    wald: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// H01, H02, H03, H04 or power.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    ln: f64,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// Comparisons per pair.
    #[arg(long, default_value_t = 1)]
    k: u64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Significance levels, comma separated.
    #[arg(long, default_value = "0.05,0.1")]
    alpha: String,
    /// True values of the tested block under H03.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    regime: RegimeArg,
    #[arg(long)]
    wald: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// A terminal error with its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            kind: "Usage".into(),
            message: e.to_string(),
        }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            kind: "Io".into(),
            message: e.to_string(),
        }
    }
}

impl From<WilksError> for Failure {
    fn from(e: WilksError) -> Self {
        let code = if e.is_nonexistence() || e == WilksError::NoChiSquareApprox { 2 } else { 1 };
        Failure {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn parse_indices(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = |m: String| Failure::usage(format!("--indices: {m}"));
    let one = |s: &str| -> Result<usize, Failure> {
        let v: usize = s.trim().parse().map_err(|_| bad(format!("not an index: {s:?}")))?;
        if v == 0 {
            return Err(bad("indices are 1-based".into()));
        }
        Ok(v - 1)
    };
    let mut out = Vec::new();
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (one(a)?, one(b)?);
                if a > b {
                    return Err(bad(format!("empty range {part:?}")));
                }
                out.extend(a..=b);
            }
            None => out.push(one(part)?),
        }
    }
    if out.is_empty() {
        return Err(bad("no indices given".into()));
    }
    Ok(out)
}

fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Failure::usage(format!("{what}: not a number: {s:?}"))))
        .collect()
}

/// A comma list, or the path of a file holding the numbers.
fn read_values(arg: &str) -> Result<Vec<f64>, Failure> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("{arg}: {e}")))?;
        parse_numbers(&text, "--values")
    } else {
        parse_numbers(arg, "--values")
    }
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(Failure::io)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::io(format!("{path}: {e}")))
    }
}

enum Loaded {
    Graph(wilks::UndirectedGraph),
    Comparisons(wilks::ComparisonData),
}

impl Loaded {
    fn data(&self) -> Data<'_> {
        match self {
            Loaded::Graph(g) => Data::Graph(g),
            Loaded::Comparisons(c) => Data::Comparisons(c),
        }
    }
}

fn load(args: &FitArgs) -> Result<Loaded, Failure> {
    let text = read_input(&args.input)?;
    Ok(match Model::from(args.common.model) {
        Model::Beta => Loaded::Graph(read_edge_list(&text)?),
        Model::Bt => Loaded::Comparisons(read_comparisons(&text)?),
    })
}

fn reference(args: &FitArgs, n: usize) -> Result<usize, Failure> {
    if args.reference == 0 || args.reference > n {
        return Err(Failure::usage(format!("--reference must lie in 1..={n}")));
    }
    Ok(args.reference - 1)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(Failure::io),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let tol = args.common.tolerance()?;
    let fit = match load(args)? {
        Loaded::Graph(g) => betamodel::fit_mle(&g, &tol)?,
        Loaded::Comparisons(c) => {
            let r = reference(args, c.n())?;
            btmodel::bt_fit_mle_with_reference(&c, r, &tol)?
        }
    };
    let text = match args.format {
        Format::Json => to_json(&fit),
        Format::Csv => {
            let mut s = String::from("index,beta,se\n");
            for (i, b) in fit.beta_hat.values().iter().enumerate() {
                let se = match fit.reference() {
                    Some(r) if r == i => String::new(),
                    Some(r) => fit.se[if i > r { i - 1 } else { i }].to_string(),
                    None => fit.se[i].to_string(),
                };
                s.push_str(&format!("{},{},{}\n", i + 1, b, se));
            }
            s
        }
    };
    emit(&args.common.out, &text)
}

fn cmd_test(args: &TestArgs) -> Result<(), Failure> {
    let tol = args.fit.common.tolerance()?;
    let loaded = load(&args.fit)?;
    let data = loaded.data();
    let indices = parse_indices(&args.indices)?;
    let null = match args.null {
        NullArg::Homogeneous => {
            if args.values.is_some() {
                return Err(Failure::usage("--values only applies to a specified null"));
            }
            NullHypothesis::homogeneous(indices)?
        }
        NullArg::Specified => {
            let values = match &args.values {
                Some(v) => read_values(v)?,
                None => vec![0.0; indices.len()],
            };
            NullHypothesis::specified(indices, values)?
        }
    };
    let opts = LrtOptions {
        regime: args.regime.into(),
        wald: args.wald,
        reference: reference(&args.fit, data.n())?,
    };
    let result = run_lrt_with(data, &null, &opts, &tol)?;
    if args.fit.format == Format::Csv {
        return Err(Failure::usage("test writes JSON only"));
    }
    emit(&args.fit.common.out, &to_json(&result))
}

fn scenario(args: &SimArgs) -> Result<SimScenario, Failure> {
    let schedule: Schedule = args.scenario.parse()?;
    let mut s = SimScenario::new(args.common.model.into(), schedule, args.n);
    s.ln_factor = args.ln;
    s.r = args.r;
    s.c = args.c;
    s.k_common = args.k;
    s.reps = args.reps;
    s.master_seed = args.seed;
    s.alpha_levels = parse_numbers(&args.alpha, "--alpha")?;
    s.h03_values = args.values.as_deref().map(read_values).transpose()?;
    s.regime = args.regime.into();
    s.tol = args.common.tolerance()?;
    s.validate()?;
    Ok(s)
}

fn cmd_simulate(args: &SimArgs) -> Result<(), Failure> {
    let s = scenario(args)?;
    let runner = Runner::from_env();
    let report = if s.schedule == Schedule::Power {
        runner.power(&s)?
    } else {
        runner.simulate(&s, args.wald)?
    };
    let rates: Vec<String> = report
        .rejection_rates
        .iter()
        .map(|(a, r)| format!("alpha={a} rate={r}"))
        .collect();
    let summary = format!(
        "{} {} n={} reps={} effective={} {} nonexistence={}",
        s.model,
        s.schedule,
        s.n,
        s.reps,
        report.reps_effective(),
        rates.join(" "),
        report.nonexistence_rate
    );
    let text = match args.format {
        Format::Csv => return finish_table(&args.common.out, &report.to_csv(), &summary),
        Format::Json => to_json(&json!({
            "model": s.model,
            "scenario": s.schedule.to_string(),
            "n": s.n,
            "reps": s.reps,
            "seed": s.master_seed,
            "tested": report.tested,
            "rates": report.rejection_rates,
            "wald_rates": report.wald_rejection_rates,
            "nonexistence_rate": report.nonexistence_rate,
            "mean_stat": report.mean_stat,
            "var_stat": report.var_stat,
        })),
    };
    emit(&args.common.out, &text)?;
    if args.common.out.is_some() {
        println!("{summary}");
    }
    Ok(())
}

fn cmd_qq(args: &SimArgs) -> Result<(), Failure> {
    if args.format == Format::Json {
        return Err(Failure::usage("qq writes CSV only"));
    }
    let s = scenario(args)?;
    let rows = Runner::from_env().qq(&s)?;
    let summary = format!("{} {} n={} qq rows={}", s.model, s.schedule, s.n, rows.len());
    finish_table(&args.common.out, &qq_csv(&rows), &summary)
}

/// Table to the output, then the summary line; it is a `#` comment when sharing standard output.
fn finish_table(out: &Option<PathBuf>, text: &str, summary: &str) -> Result<(), Failure> {
    emit(out, text)?;
    let line = if out.is_some() { format!("{summary}\n") } else { format!("# {summary}\n") };
    io::stdout().write_all(line.as_bytes()).map_err(Failure::io)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Qq(a) => cmd_qq(a),
    }
}

fn report(f: &Failure) -> ExitCode {
    let doc = json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
    eprintln!("{doc}");
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report(&Failure::usage(e.render().to_string().trim_end()));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
