use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use neckforge::acceptance;
use neckforge::config::{parse_config_text, read_line_function_csv, Command, RunConfig};
use neckforge::extension::{dtn_cylinder, HalfCylinderProblem, DEFAULT_PHI_GRID};
use neckforge::indicial::{catalog_with, check_lemma, first_root};
use neckforge::modegreen::{green_solve, DecayProfile};
use neckforge::neck::{
    approximate_curvature_error, build_glued_factor, error_sweep, NeckConfig, WeightConvention,
    WeightedNormSpec,
};
use neckforge::solver::{newton_solve, IterationMethod, ModeModel, PeriodicCylinderState};
use neckforge::symbol::{theta, ModeSpec};
use neckforge::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "neckforge", version, about = "Boundary connected sums: symbols, Green operators, gluing and solves")]
struct Cli {
    /// Config file with `key = value` lines and `[command]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (also NECKFORGE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Omit the timestamp from output headers.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Tabulate the mode symbols.
    Symbol(SymbolArgs),
    /// Indicial roots per mode.
    Indicial(IndicialArgs),
    /// Check the structural properties of the indicial roots.
    CheckLemma(LemmaArgs),
    /// Apply the mode Green operator to CSV samples.
    Green(GreenArgs),
    /// Compare the bulk extension DtN map with the symbol.
    ExtensionValidate(ExtensionArgs),
    /// Glued neck factor and its curvature error.
    Glue(GlueArgs),
    /// Nonlinear solve on the periodic cylinder.
    Solve(SolveArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Args, Debug)]
struct SymbolArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Mode range, e.g. `0..4`.
    #[arg(long)]
    m: Option<String>,
    /// Frequency grid `a:step:b` or a list.
    #[arg(long)]
    xi: Option<String>,
}

#[derive(Args, Debug)]
struct IndicialArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Roots per mode.
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    tol: Option<String>,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    /// Dimension or range of dimensions.
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "m-max")]
    m_max: Option<String>,
    #[arg(long = "j-max")]
    j_max: Option<String>,
}

#[derive(Args, Debug)]
struct GreenArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// CSV with columns s,value.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    delta0: Option<String>,
}

#[derive(Args, Debug)]
struct ExtensionArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    xi: Option<String>,
    #[arg(long = "phi-grid")]
    phi_grid: Option<String>,
}

#[derive(Args, Debug)]
struct GlueArgs {
    #[arg(long)]
    n: Option<String>,
    /// One epsilon, or a list with --sweep.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// `centered` or `uncentered`.
    #[arg(long)]
    convention: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    ds: Option<String>,
    #[arg(long)]
    pad: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    perturbation: Option<String>,
    #[arg(long)]
    sweep: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "L")]
    period: Option<String>,
    #[arg(long)]
    mmax: Option<String>,
    #[arg(long)]
    ns: Option<String>,
    #[arg(long)]
    amp: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// `fixed-point` or `newton`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
}

#[derive(Args, Debug)]
struct AcceptArgs {
    /// Subset of criteria, e.g. `1..3` or `6,10`.
    #[arg(long)]
    only: Option<String>,
}

/// Flag values keyed as in the config file.
fn overrides(cli: &Cli) -> (Command, BTreeMap<String, String>) {
    let mut map = BTreeMap::new();
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    };
    let command = match &cli.command {
        Cmd::Symbol(a) => {
            put("n", &a.n);
            put("gamma", &a.gamma);
            put("m", &a.m);
            put("xi", &a.xi);
            Command::Symbol
        }
        Cmd::Indicial(a) => {
            put("n", &a.n);
            put("gamma", &a.gamma);
            put("m", &a.m);
            put("count", &a.count);
            put("tol", &a.tol);
            Command::Indicial
        }
        Cmd::CheckLemma(a) => {
            put("n", &a.n);
            put("m_max", &a.m_max);
            put("j_max", &a.j_max);
            Command::CheckLemma
        }
        Cmd::Green(a) => {
            put("n", &a.n);
            put("m", &a.m);
            put("input", &a.input);
            put("delta", &a.delta);
            put("delta0", &a.delta0);
            Command::Green
        }
        Cmd::ExtensionValidate(a) => {
            put("n", &a.n);
            put("m", &a.m);
            put("xi", &a.xi);
            put("phi_grid", &a.phi_grid);
            Command::ExtensionValidate
        }
        Cmd::Glue(a) => {
            put("n", &a.n);
            put("epsilon", &a.eps);
            put("mu", &a.mu);
            put("convention", &a.convention);
            put("delta", &a.delta);
            put("ds", &a.ds);
            put("pad", &a.pad);
            put("perturbation", &a.perturbation);
            if a.sweep {
                put("sweep", &Some("true".to_string()));
            }
            Command::Glue
        }
        Cmd::Solve(a) => {
            put("n", &a.n);
            put("L", &a.period);
            put("mmax", &a.mmax);
            put("ns", &a.ns);
            put("amp", &a.amp);
            put("mode", &a.mode);
            put("method", &a.method);
            put("tol", &a.tol);
            put("max_iter", &a.max_iter);
            Command::Solve
        }
        Cmd::Accept(a) => {
            put("only", &a.only);
            Command::Accept
        }
    };
    if let Some(t) = cli.threads {
        map.insert("threads".into(), t.to_string());
    }
    if let Some(o) = &cli.output {
        map.insert("output".into(), o.display().to_string());
    }
    (command, map)
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let (command, flags) = overrides(cli);
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut flags = flags;
    if !flags.contains_key("threads") {
        if let Ok(t) = std::env::var("NECKFORGE_THREADS") {
            flags.insert("threads".into(), t);
        }
    }
    RunConfig::from_file(command, &parse_config_text(&text)?, &flags)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(cfg: &RunConfig, deterministic: bool) -> String {
    let mut out = format!("# neckforge {VERSION}\n");
    if !deterministic {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(out, "# generated_unix = {secs}");
    }
    for line in cfg.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Command output plus whether an acceptance check failed.
struct Outcome {
    body: String,
    failed: bool,
}

fn ok(body: String) -> Result<Outcome, Error> {
    Ok(Outcome { body, failed: false })
}

fn symbol(cfg: &RunConfig) -> Result<Outcome, Error> {
    let n = cfg.int("n", 3);
    let gamma = cfg.float("gamma", 0.5);
    let mut out = String::from("n,gamma,m,xi,theta\n");
    for m in cfg.ints("m", &[0]) {
        let spec = ModeSpec::new(n, gamma, m)?;
        for xi in cfg.floats("xi", &[0.0]) {
            let _ = writeln!(out, "{n},{},{m},{},{}", num(gamma), num(xi), num(theta(&spec, xi)?));
        }
    }
    ok(out)
}

fn indicial(cfg: &RunConfig) -> Result<Outcome, Error> {
    let n = cfg.int("n", 3);
    let gamma = cfg.float("gamma", 0.5);
    let count = cfg.int("count", 3).max(1);
    let tol = cfg.float("tol", 1e-10);
    let mut out = String::from("n,gamma,m,j,sigma,tau\n");
    for m in cfg.ints("m", &[0]) {
        let spec = ModeSpec::new(n, gamma, m)?;
        let cat = catalog_with(&spec, count, tol)?;
        for (j, r) in cat.roots.iter().take(count).enumerate() {
            let _ = writeln!(out, "{n},{},{m},{j},{},{}", num(gamma), num(r.sigma), num(r.tau));
        }
    }
    ok(out)
}

fn lemma(cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut out = String::new();
    let mut failed = false;
    for n in cfg.ints("n", &[2, 3, 4, 5]) {
        let report = check_lemma(n, cfg.int("m_max", 6), cfg.int("j_max", 3))?;
        failed |= !report.all_passed();
        out.push_str(&report.render());
    }
    Ok(Outcome { body: out, failed })
}

fn green(cfg: &RunConfig) -> Result<Outcome, Error> {
    let n = cfg.int("n", 3);
    let m = cfg.int("m", 0);
    let path = cfg.text("input").ok_or_else(|| Error::Validation {
        key: "input".into(),
        message: "green needs an input CSV".into(),
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
    let h = read_line_function_csv(&text, m)?;
    let spec = ModeSpec::half(n, m)?;
    let profile = match cfg.get("delta") {
        Some(_) => {
            let delta = cfg.float("delta", 0.5);
            DecayProfile { delta, delta0: cfg.float("delta0", delta) }
        }
        None => {
            let sigma = first_root(&spec)?.sigma;
            DecayProfile::symmetric(if sigma > 0.0 { 0.5 * sigma } else { 0.5 })
        }
    };
    let v = green_solve(&spec, &h, profile)?;
    let mut out = String::from("s,value\n");
    for k in 0..v.len() {
        let _ = writeln!(out, "{},{}", num(v.s(k)), num(v.values[k]));
    }
    ok(out)
}

fn extension(cfg: &RunConfig) -> Result<Outcome, Error> {
    let grid = cfg.int("phi_grid", DEFAULT_PHI_GRID);
    let mut out = String::from("n,m,xi,dtn,theta,rel_err\n");
    for n in cfg.ints("n", &[2, 3]) {
        for m in cfg.ints("m", &[0, 1, 2, 3, 4]) {
            let spec = ModeSpec::half(n, m)?;
            for xi in cfg.floats("xi", &[0.0, 0.5, 1.0, 2.0, 4.0]) {
                let dtn = dtn_cylinder(&HalfCylinderProblem::new(spec, xi).with_grid(grid))?;
                let want = theta(&spec, xi)?;
                let rel = (dtn - want).abs() / want.abs();
                let _ = writeln!(out, "{n},{m},{},{},{},{}", num(xi), num(dtn), num(want), num(rel));
            }
        }
    }
    ok(out)
}

fn neck_config(cfg: &RunConfig, epsilon: f64) -> Result<NeckConfig, Error> {
    let convention: WeightConvention = cfg.text("convention").unwrap_or("centered").parse()?;
    let mut c = NeckConfig::new(epsilon)?.with_convention(convention);
    c.delta = cfg.float("delta", c.delta);
    c.ds = cfg.float("ds", c.ds);
    c.pad = cfg.float("pad", c.pad);
    c.perturbation = cfg.float("perturbation", c.perturbation);
    c.validate()?;
    Ok(c)
}

fn glue(cfg: &RunConfig) -> Result<Outcome, Error> {
    let n = cfg.int("n", 3);
    let norm = WeightedNormSpec::new(cfg.float("mu", -0.5), 0)?;
    let eps = cfg.floats("epsilon", &[1e-2]);
    if cfg.flag("sweep") {
        let convention: WeightConvention = cfg.text("convention").unwrap_or("centered").parse()?;
        let mut out = String::from("epsilon,E\n");
        for row in error_sweep(n, &eps, &norm, convention)? {
            let _ = writeln!(out, "{},{}", num(row.epsilon), num(row.e_norm));
        }
        return ok(out);
    }
    if eps.len() != 1 {
        return Err(Error::Validation {
            key: "epsilon".into(),
            message: "several values need --sweep".into(),
        });
    }
    let nc = neck_config(cfg, eps[0])?;
    let glued = build_glued_factor(&nc, n)?;
    let e = approximate_curvature_error(&nc, n, &norm)?;
    let mut out = String::from("s,factor,Q_error,weight\n");
    for k in 0..e.error.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(e.error.s(k)),
            num(glued.factor.values[k]),
            num(e.error.values[k]),
            num(e.weight.values[k])
        );
    }
    let _ = writeln!(out, "# summary epsilon = {}, E = {}", num(eps[0]), num(e.e_norm));
    ok(out)
}

fn solve(cfg: &RunConfig) -> Result<Outcome, Error> {
    let n = cfg.int("n", 3);
    let period = match cfg.get("L") {
        Some(_) => cfg.float("L", 1.0),
        None => ModeModel::default_period(n)?,
    };
    let model = ModeModel::cylinder(n, period, cfg.int("mmax", 8), cfg.int("ns", 64))?;
    let method: IterationMethod = cfg.text("method").unwrap_or("newton").parse()?;
    let state = PeriodicCylinderState::perturbed(model, cfg.float("amp", 0.01), cfg.int("mode", 1))?;
    let norm = WeightedNormSpec::new(-0.5, 0)?;
    let r = newton_solve(&state, &norm, method, cfg.float("tol", 1e-10), cfg.int("max_iter", 30))?;
    let dist = r.final_f.grid().iter().fold(0.0_f64, |a, f| a.max((f - 1.0).abs()));
    let mut out = String::new();
    let _ = writeln!(out, "# report method = {:?}", r.method);
    let _ = writeln!(out, "# report converged = {}", r.converged);
    let _ = writeln!(out, "# report iterations = {}", r.iterations);
    let _ = writeln!(out, "# report distance_to_one = {}", num(dist));
    let _ = writeln!(out, "# report quadratic_ratios = {:?}", r.quadratic_ratios(1e-13));
    out.push_str("iteration,residual\n");
    for (k, res) in r.residual_history.iter().enumerate() {
        let _ = writeln!(out, "{k},{}", num(*res));
    }
    Ok(Outcome { body: out, failed: !r.converged })
}

fn accept(cfg: &RunConfig) -> Result<Outcome, Error> {
    let ids: Vec<u8> = cfg.ints("only", &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]).iter().map(|&i| i as u8).collect();
    let mut out = String::new();
    let mut failed = false;
    for id in ids {
        let r = acceptance::run(id)?;
        failed |= !r.passed;
        out.push_str(&r.to_string());
        out.push('\n');
    }
    Ok(Outcome { body: out, failed })
}

fn execute(cli: &Cli) -> Result<(RunConfig, Outcome), Error> {
    let cfg = load(cli)?;
    if let Some(t) = cfg.get("threads").map(|_| cfg.int("threads", 1)) {
        // a second initialization only happens in tests and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let outcome = match cfg.command {
        Command::Symbol => symbol(&cfg),
        Command::Indicial => indicial(&cfg),
        Command::CheckLemma => lemma(&cfg),
        Command::Green => green(&cfg),
        Command::ExtensionValidate => extension(&cfg),
        Command::Glue => glue(&cfg),
        Command::Solve => solve(&cfg),
        Command::Accept => accept(&cfg),
    }?;
    Ok((cfg, outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, outcome) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_numerical() { 3 } else { 2 });
        }
    };
    let text = header(&cfg, cli.deterministic) + &outcome.body;
    let written = match cfg.text("output") {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if outcome.failed {
        ExitCode::from(if cfg.command == Command::Solve { 3 } else { 4 })
    } else {
        ExitCode::SUCCESS
    }
}
