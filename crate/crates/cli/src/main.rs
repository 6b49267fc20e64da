use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use entacc::apps::{self, FQRACParams, QKDParams};
use entacc::eat::{self, EatConfig, TradeoffConfig, TradeoffKind};
use entacc::entropy::{self, EntropyResult};
use entacc::sim::{self, ProcessSpec};
use entacc::state::{Event, TOL_MARKOV};
use entacc::verify::{self, Suite, VerifyOptions};
use entacc::{io, random, smooth, Error};

#[derive(Parser)]
#[command(name = "entacc", version, about = "Entropy accumulation toolkit")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit the report as JSON (numbers as 12-significant-digit strings).
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a conditional entropy of a state file.
    Entropy {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Conditioning registers, comma separated (may be empty).
        #[arg(long, value_delimiter = ',', default_value = "")]
        cond: Vec<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Run a seeded property suite and report the worst residual per check.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Only this n for the counterexample suite.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Evaluate the EAT bound of a configuration file and/or flags.
    EatBound {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        p_omega: Option<f64>,
        #[arg(long)]
        d_a: Option<usize>,
        #[arg(long)]
        h: Option<f64>,
        /// Affine tradeoff values on the vertices (alphabet 0, 1, ...), used without --config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        vertex_values: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = KindArg::Min)]
        kind: KindArg,
        /// Also evaluate the smooth bound at this α.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Finite-key and asymptotic rates of the entanglement-based protocol.
    QkdRate {
        #[arg(long)]
        e: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        theta_ec: f64,
        /// Number of rounds; only the asymptotic threshold is printed without it.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        p_omega: f64,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
    },
    /// Upper bound on the squared fidelity of a fully quantum random access code.
    Fqrac {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Run a process specification and compare its exact min-entropy with the EAT bound.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Pure inputs sampled per step for the constant tradeoff.
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    #[value(name = "von_neumann", alias = "von-neumann")]
    VonNeumann,
    #[value(name = "h_alpha", alias = "h-alpha")]
    HAlpha,
    #[value(name = "h_alpha_up", alias = "h-alpha-up")]
    HAlphaUp,
    #[value(name = "h_prime_alpha", alias = "h-prime-alpha")]
    HPrimeAlpha,
    #[value(name = "h_min", alias = "h-min")]
    HMin,
    #[value(name = "h_max", alias = "h-max")]
    HMax,
    #[value(name = "h_min_smooth", alias = "h-min-smooth")]
    HMinSmooth,
    #[value(name = "h_max_smooth", alias = "h-max-smooth")]
    HMaxSmooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    #[value(name = "chain_rule", alias = "chain-rule")]
    ChainRule,
    Lemmas,
    #[value(name = "eat_soundness", alias = "eat-soundness")]
    EatSoundness,
    Counterexample,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::ChainRule => Suite::ChainRule,
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::EatSoundness => Suite::EatSoundness,
            SuiteArg::Counterexample => Suite::Counterexample,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Min,
    Max,
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;

/// One printed value. Floats carry the number of decimals used in text mode;
/// `None` prints the shortest round-trip form.
enum Val {
    F(f64, Option<usize>),
    Sci(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

#[derive(Default)]
struct Report {
    headline: Option<String>,
    entries: Vec<(String, Val)>,
    warnings: Vec<String>,
    code: u8,
}

impl Report {
    fn f(&mut self, k: impl Into<String>, v: f64) {
        self.entries.push((k.into(), Val::F(v, None)));
    }
    fn fixed(&mut self, k: impl Into<String>, v: f64, digits: usize) {
        self.entries.push((k.into(), Val::F(v, Some(digits))));
    }
    fn sci(&mut self, k: impl Into<String>, v: f64) {
        self.entries.push((k.into(), Val::Sci(v)));
    }
    fn int(&mut self, k: impl Into<String>, v: u64) {
        self.entries.push((k.into(), Val::Int(v)));
    }
    fn flag(&mut self, k: impl Into<String>, v: bool) {
        self.entries.push((k.into(), Val::Bool(v)));
    }
    fn text(&mut self, k: impl Into<String>, v: impl Into<String>) {
        self.entries.push((k.into(), Val::Text(v.into())));
    }

    fn print_text(&self) {
        let mut out = String::new();
        if let Some(h) = &self.headline {
            out += &format!("{h}\n");
        }
        for (k, v) in &self.entries {
            let s = match v {
                Val::F(x, Some(d)) => format!("{x:.d$}"),
                Val::F(x, None) => format!("{x}"),
                Val::Sci(x) => format!("{x:e}"),
                Val::Int(x) => x.to_string(),
                Val::Bool(b) => b.to_string(),
                Val::Text(t) => t.clone(),
            };
            out += &format!("{k}: {s}\n");
        }
        for w in &self.warnings {
            out += &format!("warning: {w}\n");
        }
        emit(&out);
    }

    fn to_json(&self, command: &str) -> Value {
        let mut report = Map::new();
        for (k, v) in &self.entries {
            let leaf = match v {
                Val::F(x, _) | Val::Sci(x) => Value::String(sig12(*x)),
                Val::Int(x) => Value::String(x.to_string()),
                Val::Bool(b) => Value::Bool(*b),
                Val::Text(t) => Value::String(t.clone()),
            };
            insert_nested(&mut report, k, leaf);
        }
        let mut top = Map::new();
        top.insert("command".into(), command.into());
        if let Some(h) = &self.headline {
            top.insert("headline".into(), h.as_str().into());
        }
        top.insert("report".into(), Value::Object(report));
        top.insert("warnings".into(), self.warnings.iter().map(|w| Value::from(w.as_str())).collect());
        top.insert("exit_code".into(), self.code.into());
        Value::Object(top)
    }
}

/// Decimal string with 12 significant digits.
// A closed pipe (e.g. `| head`) is not an error worth panicking over.
fn emit(s: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

/// Dotted keys become nested objects.
fn insert_nested(map: &mut Map<String, Value>, key: &str, v: Value) {
    match key.split_once('.') {
        None => {
            map.insert(key.to_string(), v);
        }
        Some((head, rest)) => {
            let child = map.entry(head.to_string()).or_insert_with(|| Value::Object(Map::new()));
            if !child.is_object() {
                *child = Value::Object(Map::new());
            }
            insert_nested(child.as_object_mut().expect("object"), rest, v);
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => EXIT_PARSE,
        Error::Dimension(_) | Error::UnknownRegister(_) | Error::NotPsd(_) | Error::Precondition(_) => {
            EXIT_PRECONDITION
        }
        Error::NoConvergence(_) => EXIT_VIOLATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match &cli.cmd {
        Cmd::Entropy { .. } => "entropy",
        Cmd::Verify { .. } => "verify",
        Cmd::EatBound { .. } => "eat-bound",
        Cmd::QkdRate { .. } => "qkd-rate",
        Cmd::Fqrac { .. } => "fqrac",
        Cmd::Simulate { .. } => "simulate",
    };
    match dispatch(&cli) {
        Ok(r) => {
            if cli.json {
                emit(&format!("{}\n", serde_json::to_string_pretty(&r.to_json(command)).expect("json")));
            } else {
                r.print_text();
            }
            ExitCode::from(r.code)
        }
        Err(e) => {
            let code = exit_code_for(&e);
            if cli.json {
                let v = serde_json::json!({ "command": command, "error": e.to_string(), "exit_code": code });
                emit(&format!("{}\n", serde_json::to_string_pretty(&v).expect("json")));
            }
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: &Cli) -> entacc::Result<Report> {
    match &cli.cmd {
        Cmd::Entropy { state, quantity, cond, alpha, epsilon } => {
            cmd_entropy(state, *quantity, cond, *alpha, *epsilon)
        }
        Cmd::Verify { suite, trials, n } => {
            cmd_verify((*suite).into(), &VerifyOptions { seed: cli.seed, trials: *trials, n: *n })
        }
        Cmd::EatBound { config, n, eps, p_omega, d_a, h, vertex_values, kind, alpha } => {
            let cfg = eat_config(config.as_ref(), *n, *eps, *p_omega, *d_a, *h, vertex_values.as_deref(), *kind)?;
            cmd_eat_bound(&cfg, *alpha)
        }
        Cmd::QkdRate { e, mu, theta_ec, n, eps, p_omega, r } => cmd_qkd_rate(*e, *mu, *theta_ec, *n, *eps, *p_omega, *r),
        Cmd::Fqrac { m, n, k, eps } => cmd_fqrac(&FQRACParams { m: *m, n: *n, k: *k, epsilon: *eps }),
        Cmd::Simulate { spec, epsilon, samples } => cmd_simulate(spec, *epsilon, *samples, cli.seed),
    }
}

fn cmd_entropy(
    path: &PathBuf,
    quantity: Quantity,
    cond: &[String],
    alpha: Option<f64>,
    epsilon: f64,
) -> entacc::Result<Report> {
    let rho = io::load_state(path)?;
    let cond: Vec<&str> = cond.iter().map(|s| s.as_str()).filter(|s| !s.is_empty()).collect();
    let need_alpha = || alpha.ok_or_else(|| Error::Precondition("this quantity needs --alpha".into()));
    let res = match quantity {
        Quantity::VonNeumann => {
            EntropyResult::exact(entropy::von_neumann_conditional(&rho, &cond)?, entropy::Method::Eigensolve)
        }
        Quantity::HAlpha => EntropyResult::exact(entropy::h_alpha(&rho, &cond, need_alpha()?)?, entropy::Method::ClosedForm),
        Quantity::HPrimeAlpha => {
            EntropyResult::exact(entropy::h_prime_alpha(&rho, &cond, need_alpha()?)?, entropy::Method::ClosedForm)
        }
        Quantity::HAlphaUp => entropy::h_alpha_up(&rho, &cond, need_alpha()?)?,
        Quantity::HMin => smooth::h_min(&rho, &cond)?,
        Quantity::HMax => smooth::h_max(&rho, &cond)?,
        Quantity::HMinSmooth => smooth::h_min_smooth(&rho, &cond, epsilon)?,
        Quantity::HMaxSmooth => smooth::h_max_smooth(&rho, &cond, epsilon)?,
    };
    let mut r = Report::default();
    r.fixed("value", res.value, 6);
    r.text("method", res.method.name());
    r.sci("certified_gap", res.certified_gap);
    r.f("lower", res.lower);
    r.f("upper", res.upper);
    r.f("value_exact", res.value);
    Ok(r)
}

fn cmd_verify(suite: Suite, opts: &VerifyOptions) -> entacc::Result<Report> {
    let rep = verify::run(suite, opts)?;
    let mut r = Report::default();
    r.text("suite", suite.name());
    r.int("seed", opts.seed);
    r.int("trials", opts.trials as u64);
    for ch in &rep.checks {
        let p = format!("check.{}", ch.label);
        r.text(format!("{p}.status"), if ch.passed() { "ok" } else { "violated" });
        r.sci(format!("{p}.worst"), ch.worst);
        r.sci(format!("{p}.tolerance"), ch.tolerance);
        r.int(format!("{p}.instances"), ch.instances as u64);
        r.int(format!("{p}.failures"), ch.failures as u64);
        if let Some(s) = ch.worst_seed {
            r.int(format!("{p}.worst_seed"), s);
        }
        if let Some(e) = &ch.error {
            r.text(format!("{p}.error"), e.clone());
        }
    }
    for (k, v) in &rep.values {
        r.f(format!("value.{k}"), *v);
    }
    let worst = rep.checks.iter().map(|c| c.worst).fold(0.0, f64::max);
    r.sci("max_residual", worst);
    match rep.first_failure() {
        None => r.text("status", "ok"),
        Some(ch) => {
            r.text("status", "violation");
            r.text("violated", ch.label.clone());
            r.int("reproducer_seed", ch.worst_seed.unwrap_or(opts.seed));
            r.code = EXIT_VIOLATION;
        }
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn eat_config(
    path: Option<&PathBuf>,
    n: Option<u64>,
    eps: Option<f64>,
    p_omega: Option<f64>,
    d_a: Option<usize>,
    h: Option<f64>,
    vertex_values: Option<&[f64]>,
    kind: KindArg,
) -> entacc::Result<EatConfig> {
    let mut cfg = match path {
        Some(p) => io::load_json::<EatConfig>(p)?,
        None => {
            let vals = vertex_values
                .ok_or_else(|| Error::Precondition("give --config or --vertex-values".into()))?;
            let missing = |f: &str| Error::Precondition(format!("--{f} is required without --config"));
            EatConfig {
                tradeoff: TradeoffConfig {
                    alphabet: (0..vals.len()).map(|i| i.to_string()).collect(),
                    kind: match kind {
                        KindArg::Min => TradeoffKind::Min,
                        KindArg::Max => TradeoffKind::Max,
                    },
                    vertex_values: Some(vals.iter().map(|&v| Some(v)).collect()),
                    tangent: None,
                },
                n: n.ok_or_else(|| missing("n"))?,
                d_a: d_a.ok_or_else(|| missing("d-a"))?,
                epsilon: eps.ok_or_else(|| missing("eps"))?,
                p_omega: 1.0,
                h: None,
            }
        }
    };
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(e) = eps {
        cfg.epsilon = e;
    }
    if let Some(p) = p_omega {
        cfg.p_omega = p;
    }
    if let Some(d) = d_a {
        cfg.d_a = d;
    }
    if h.is_some() {
        cfg.h = h;
    }
    Ok(cfg)
}

fn cmd_eat_bound(cfg: &EatConfig, alpha: Option<f64>) -> entacc::Result<Report> {
    let (params, f) = cfg.build()?;
    let bound = match f.kind {
        TradeoffKind::Min => eat::eat_min_bound(&params, &f)?,
        TradeoffKind::Max => eat::eat_max_bound(&params, &f)?,
    };
    let mut r = Report::default();
    r.text("kind", if f.kind == TradeoffKind::Min { "min" } else { "max" });
    r.int("n", params.n);
    r.int("d_a", params.d_a as u64);
    r.f("epsilon", params.epsilon);
    r.f("p_omega", params.p_omega);
    r.f("h", params.h);
    r.f("grad_norm", bound.grad_norm);
    r.f("v", bound.v);
    r.f("c", bound.c);
    r.f("bound", bound.value);
    r.f("rate", bound.value / params.n as f64);
    let star = eat::eat_alpha_star(&params, &f)?;
    r.f("alpha_star", star.alpha);
    if f.kind == TradeoffKind::Min {
        if !star.vacuous {
            r.f("smooth_bound_at_alpha_star", eat::eat_smooth_bound_at(&params, &f, star.alpha)?);
        }
        if let Some(a) = alpha {
            r.f("smooth_bound_at_alpha", eat::eat_smooth_bound_at(&params, &f, a)?);
            r.f("renyi_bound_at_alpha", eat::eat_renyi_bound(&params, &f, a)?);
        }
        if bound.grad_norm == 0.0 && params.p_omega == 1.0 {
            r.f("aep_bound", eat::aep_bound_value(params.h, params.d_a, params.n, params.epsilon)?);
        }
    }
    r.flag("vacuous", bound.vacuous);
    if bound.vacuous {
        r.warnings.push(match f.kind {
            TradeoffKind::Min => "min-entropy bound is not positive (vacuous)".into(),
            TradeoffKind::Max => "max-entropy bound is at least n log d_A (vacuous)".into(),
        });
    }
    if star.vacuous {
        r.warnings.push("n ≤ log(2/(p_Ω²ε²)): the optimal α leaves the admissible range".into());
    }
    Ok(r)
}

fn cmd_qkd_rate(e: f64, mu: f64, theta: f64, n: Option<u64>, eps: f64, p_omega: f64, rr: f64) -> entacc::Result<Report> {
    let threshold = apps::qkd_asymptotic_threshold(e, theta, mu)?;
    let mut r = Report::default();
    r.fixed("threshold", threshold, 4);
    r.f("threshold_exact", threshold);
    let Some(n) = n else {
        return Ok(r);
    };
    let p = QKDParams { n, mu, e, theta_ec: theta, r: rr, epsilon: eps, p_omega };
    let (key, b) = apps::qkd_finite_key_length(&p)?;
    r.f("key_bits", key);
    r.f("rate", b.rate);
    r.f("raw_key_bits", b.raw_key_bits);
    r.f("eat_term", b.eat_term);
    r.f("h", b.h);
    r.f("tangent_e", b.tangent_e);
    r.f("eat_c", b.eat_c);
    r.f("tradeoff_gradient", b.tradeoff_gradient);
    r.f("max_entropy_term", b.max_entropy_term);
    r.f("max_entropy_c", b.max_entropy_c);
    r.f("ec_leakage", b.ec_leakage);
    r.f("chain_rule_slack", b.chain_rule_slack);
    r.f("pa_slack", b.pa_slack);
    r.flag("rate_admissible", b.rate_admissible);
    r.flag("vacuous", b.vacuous);
    if b.vacuous {
        r.warnings.push("finite-key length is not positive (vacuous); key_bits clamped to 0".into());
    }
    if !b.rate_admissible {
        r.warnings.push("requested rate r exceeds the asymptotic threshold".into());
    }
    Ok(r)
}

fn cmd_fqrac(p: &FQRACParams) -> entacc::Result<Report> {
    let rep = apps::fqrac_bound(p)?;
    let mut r = Report::default();
    r.headline = Some(format!("f^2 < {:.3}", rep.bound_fsq));
    r.f("bound_fsq", rep.bound_fsq);
    r.f("condition_lhs", rep.condition_lhs);
    r.f("condition_rhs", rep.condition_rhs);
    r.flag("condition_violated", rep.condition_violated);
    r.flag("necessary_condition_holds", rep.necessary_condition_holds);
    r.flag("vacuous", rep.vacuous);
    if rep.vacuous {
        r.warnings.push("bound is at least 1 (vacuous)".into());
    }
    Ok(r)
}

fn cmd_simulate(path: &PathBuf, epsilon: f64, samples: usize, seed: u64) -> entacc::Result<Report> {
    let spec: ProcessSpec = io::load_json(path)?;
    let process = spec.build()?;
    let out = sim::run_process(&process)?;
    let mut r = Report::default();
    r.int("n", out.a.len() as u64);
    r.int("d_a", out.d_a as u64);
    r.int("x_alphabet", out.x_alphabet as u64);
    let markov = sim::check_markov_chain_conditions(&out)?;
    for (i, m) in markov.iter().enumerate() {
        r.sci(format!("markov.step{}", i + 1), *m);
    }
    if let Some(i) = markov.iter().position(|m| *m > TOL_MARKOV) {
        r.text("status", "markov_violation");
        r.int("violated_step", i as u64 + 1);
        r.int("reproducer_seed", spec.seed);
        r.code = EXIT_VIOLATION;
        return Ok(r);
    }
    let f = sim::sampled_min_tradeoff(&process, samples, &mut random::rng(seed))?;
    let rep = sim::soundness_experiment(&out, &f, epsilon, &Event::Full)?;
    r.f("h", rep.h);
    r.f("p_omega", rep.p_omega);
    r.f("exact_hmin", rep.exact_hmin);
    r.f("exact_hmin_upper", rep.exact_hmin_upper);
    r.f("eat_bound", rep.eat_bound);
    r.f("c", rep.eat.c);
    r.f("slack", rep.slack);
    if rep.eat.vacuous {
        r.warnings.push("EAT bound is not positive (vacuous)".into());
    }
    if rep.eat_bound > rep.exact_hmin_upper {
        r.text("status", "violation");
        r.int("reproducer_seed", seed);
        r.code = EXIT_VIOLATION;
    } else {
        r.text("status", "ok");
    }
    Ok(r)
}
