use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use intersective::certify::{
    check_theorem1_with, corollary1_check_with, corollary2_check_with, CertifyError,
    ObstructionKind,
};
use intersective::lifting::root_mod;
use intersective::ntheory::DirectLegendre;
use intersective::oracle::{
    has_root_mod_with_budget, minimal_failing_modulus_with_budget, verify_counterexample,
};
use intersective::search::{search_families, LegendreCache, SearchQuery, VerdictFilter};
use intersective::wire::EXACT_DOUBLE_LIMIT;
use intersective::{validate_family, EngineConfig, Family, RootWitness, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

const SCHEMA_VERSION: &str = "1";
const ENV_SCAN_BUDGET: &str = "INTERSECTIVE_SCAN_BUDGET";
const ENV_PRIME_BOUND: &str = "INTERSECTIVE_PRIME_BOUND";
const ENV_SUBSET_CAP: &str = "INTERSECTIVE_SUBSET_CAP";

const EXIT_CERTIFICATE: u8 = 0;
const EXIT_COUNTEREXAMPLE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

/// Decide whether a product of quadratics x^2 - a_i has roots modulo every integer.
#[derive(Debug, Parser)]
#[command(name = "intersective", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify a family or produce a counterexample modulus.
    Check {
        /// Comma-separated members, e.g. 13,17,221 or -7,11,19.
        #[arg(allow_hyphen_values = true)]
        family: String,
        #[arg(long)]
        json: bool,
    },
    /// Construct a root modulo M for a certified family.
    Root {
        #[arg(allow_hyphen_values = true)]
        family: String,
        #[arg(long)]
        modulus: u64,
        #[arg(long)]
        json: bool,
    },
    /// List the obstructions of a non-certified family.
    Counterexample {
        #[arg(allow_hyphen_values = true)]
        family: String,
        /// Also scan for the smallest modulus without a root.
        #[arg(long, requires = "bound")]
        minimal: bool,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Confirm the verdict against an exhaustive scan of every modulus up to M.
    Verify {
        #[arg(allow_hyphen_values = true)]
        family: String,
        #[arg(long)]
        max_modulus: u64,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate families drawn from the square-free integers up to B.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pool_max: u64,
        #[arg(long)]
        negatives: bool,
        #[arg(long, value_enum, default_value_t = FilterArg::All)]
        verdict: FilterArg,
        #[arg(long, default_value_t = usize::MAX, hide_default_value = true)]
        limit: usize,
        #[arg(long)]
        json: bool,
    },
    /// Compare the two-prime criterion for (p, q, pq) with the engine.
    Corollary1 {
        p: u64,
        q: u64,
        #[arg(long)]
        json: bool,
    },
    /// Compare the listed conditions for (c, d, c1*d1) with the engine.
    Corollary2 {
        #[arg(allow_hyphen_values = true)]
        c: i64,
        #[arg(allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterArg {
    Certificate,
    Counterexample,
    All,
}

impl From<FilterArg> for VerdictFilter {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Certificate => VerdictFilter::Certificate,
            FilterArg::Counterexample => VerdictFilter::Counterexample,
            FilterArg::All => VerdictFilter::All,
        }
    }
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn invalid(arg: &str, msg: impl std::fmt::Display) -> Failure {
    Failure(format!("{arg}: {msg}"))
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: &'static str,
    command: &'static str,
    input_echo: Value,
    result: &'a Value,
    timing_ms: u64,
}

struct Ctx {
    config: EngineConfig,
    started: Instant,
    out: BufWriter<io::Stdout>,
}

impl Ctx {
    fn config_echo(&self) -> Value {
        json!({
            "scan_budget": int(self.config.scan_budget),
            "prime_search_bound": int(self.config.prime_search_bound),
            "subset_cap": self.config.subset_cap,
        })
    }

    fn emit(&mut self, command: &'static str, mut echo: Value, result: Value) -> io::Result<()> {
        echo["config"] = self.config_echo();
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            input_echo: echo,
            result: &result,
            timing_ms: self.started.elapsed().as_millis() as u64,
        };
        serde_json::to_writer(&mut self.out, &env)?;
        writeln!(self.out)
    }
}

fn int(v: u64) -> Value {
    if v <= EXACT_DOUBLE_LIMIT {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn opt_int(v: Option<u64>) -> Value {
    v.map_or(Value::Null, int)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn env_override<T: std::str::FromStr>(name: &str, default: T) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    match std::env::var(name) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|e| invalid(name, format!("{s:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(default),
        Err(e) => Err(invalid(name, e)),
    }
}

fn load_config() -> Result<EngineConfig, Failure> {
    let d = EngineConfig::default();
    Ok(EngineConfig {
        scan_budget: env_override(ENV_SCAN_BUDGET, d.scan_budget)?,
        prime_search_bound: env_override(ENV_PRIME_BOUND, d.prime_search_bound)?,
        subset_cap: env_override(ENV_SUBSET_CAP, d.subset_cap)?,
    })
}

fn parse_family(token: &str) -> Result<Family, Failure> {
    let values = token
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<i64>()
                .map_err(|_| invalid("FAMILY", format!("{s:?} is not an integer")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    validate_family(&values).map_err(|e| invalid("FAMILY", e))
}

fn family_echo(f: &Family) -> Value {
    json!({ "family": f.values() })
}

fn verdict_code(v: &Verdict) -> u8 {
    if v.is_certificate() {
        EXIT_CERTIFICATE
    } else {
        EXIT_COUNTEREXAMPLE
    }
}

fn inconclusive(bound: u64) -> Value {
    json!({ "verdict": "inconclusive", "prime_search_bound": int(bound) })
}

fn kind_name(k: ObstructionKind) -> &'static str {
    match k {
        ObstructionKind::NoQrPrime => "no residue modulo p",
        ObstructionKind::OddPrime => "odd prime divisor",
        ObstructionKind::Dyadic => "no member is 1 mod 8",
    }
}

fn describe_verdict(family: &Family, v: &Verdict) -> String {
    let mut s = String::new();
    match v {
        Verdict::Certificate(c) => {
            s.push_str(&format!("{family}: roots modulo every integer\n"));
            let t: Vec<String> = c.subset_t.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!("  subset T = {{{}}}\n", t.join(", ")));
            for (p, i) in &c.odd_prime_witnesses {
                let a = family.member(*i).map(|m| m.value()).unwrap_or_default();
                s.push_str(&format!("  p = {p}: a_{i} = {a} is a residue\n"));
            }
            let a = family
                .member(c.dyadic_witness)
                .map(|m| m.value())
                .unwrap_or_default();
            s.push_str(&format!(
                "  dyadic: a_{} = {a} = 1 mod 8\n",
                c.dyadic_witness
            ));
        }
        Verdict::Counterexample(cx) => {
            let primary = cx.primary_obstruction();
            s.push_str(&format!(
                "{family}: no root modulo {}\n",
                modulus_text(primary.prime, primary.exponent, primary.modulus)
            ));
            for (i, o) in cx.obstructions.iter().enumerate() {
                let mark = if i == cx.primary { "*" } else { " " };
                s.push_str(&format!(
                    " {mark} {} ({}), modulus {}\n",
                    o.prime,
                    kind_name(o.kind),
                    modulus_text(o.prime, o.exponent, o.modulus)
                ));
            }
        }
    }
    s
}

fn modulus_text(p: u64, e: u32, m: Option<u64>) -> String {
    match m {
        Some(m) => format!("{m} = {p}^{e}"),
        None => format!("{p}^{e}"),
    }
}

fn run_check(ctx: &mut Ctx, family: &str, json_out: bool) -> Result<u8, Failure> {
    let family = parse_family(family)?;
    let echo = family_echo(&family);
    match check_theorem1_with(&family, &ctx.config, &DirectLegendre) {
        Ok(v) => {
            if json_out {
                ctx.emit("check", echo, to_value(&v))?;
            } else {
                write!(ctx.out, "{}", describe_verdict(&family, &v))?;
            }
            Ok(verdict_code(&v))
        }
        Err(CertifyError::Inconclusive { bound }) => {
            if json_out {
                ctx.emit("check", echo, inconclusive(bound))?;
            } else {
                writeln!(
                    ctx.out,
                    "{family}: inconclusive (no witness prime below {bound})"
                )?;
            }
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

#[derive(Serialize)]
struct RootResult<'a> {
    verdict: &'a Verdict,
    witness: Option<RootWitness>,
}

fn run_root(ctx: &mut Ctx, family: &str, modulus: u64, json_out: bool) -> Result<u8, Failure> {
    let family = parse_family(family)?;
    if modulus == 0 {
        return Err(invalid("--modulus", "must be positive"));
    }
    let mut echo = family_echo(&family);
    echo["modulus"] = int(modulus);
    let verdict = match check_theorem1_with(&family, &ctx.config, &DirectLegendre) {
        Ok(v) => v,
        Err(CertifyError::Inconclusive { bound }) => {
            if json_out {
                ctx.emit("root", echo, inconclusive(bound))?;
            } else {
                writeln!(
                    ctx.out,
                    "{family}: inconclusive (no witness prime below {bound})"
                )?;
            }
            return Ok(EXIT_INCONCLUSIVE);
        }
    };
    let witness = match verdict.certificate() {
        Some(cert) => Some(root_mod(&family, cert, modulus).map_err(|e| invalid("--modulus", e))?),
        None => None,
    };
    if json_out {
        let result = to_value(&RootResult {
            verdict: &verdict,
            witness: witness.clone(),
        });
        ctx.emit("root", echo, result)?;
    } else if let Some(w) = &witness {
        writeln!(ctx.out, "f({}) = 0 mod {}", w.root, w.modulus)?;
        for c in &w.components {
            writeln!(
                ctx.out,
                "  {} mod {}^{} via x^2 - a_{}",
                c.root, c.prime, c.exponent, c.factor_index
            )?;
        }
    } else {
        write!(ctx.out, "{}", describe_verdict(&family, &verdict))?;
    }
    Ok(verdict_code(&verdict))
}

fn run_counterexample(
    ctx: &mut Ctx,
    family: &str,
    minimal: bool,
    bound: Option<u64>,
    json_out: bool,
) -> Result<u8, Failure> {
    let family = parse_family(family)?;
    let mut echo = family_echo(&family);
    echo["minimal"] = json!(minimal);
    echo["bound"] = opt_int(bound);
    let minimal_modulus = match (minimal, bound) {
        (true, Some(b)) => Some(
            minimal_failing_modulus_with_budget(&family, b, ctx.config.scan_budget)
                .map_err(|e| invalid("--bound", e))?,
        ),
        _ => None,
    };
    let verdict = check_theorem1_with(&family, &ctx.config, &DirectLegendre);
    let code = match &verdict {
        Ok(v) => verdict_code(v),
        Err(_) => EXIT_INCONCLUSIVE,
    };
    if json_out {
        let mut result = match &verdict {
            Ok(v) => to_value(v),
            Err(CertifyError::Inconclusive { bound }) => inconclusive(*bound),
        };
        if minimal {
            result["minimal_failing_modulus"] = opt_int(minimal_modulus.flatten());
        }
        ctx.emit("counterexample", echo, result)?;
    } else {
        match &verdict {
            Ok(v) => write!(ctx.out, "{}", describe_verdict(&family, v))?,
            Err(CertifyError::Inconclusive { bound }) => writeln!(
                ctx.out,
                "{family}: inconclusive (no witness prime below {bound})"
            )?,
        }
        if let (Some(found), Some(b)) = (minimal_modulus, bound) {
            match found {
                Some(m) => writeln!(ctx.out, "smallest modulus without a root: {m}")?,
                None => writeln!(ctx.out, "every modulus up to {b} has a root")?,
            }
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct VerifyResult<'a> {
    verdict: &'a Verdict,
    max_modulus: Value,
    moduli_checked: Value,
    /// Moduli where the sweep contradicts the verdict.
    disagreements: Vec<Value>,
    minimal_failing_modulus: Value,
    counterexample_audit: Option<Value>,
    consistent: bool,
}

fn run_verify(
    ctx: &mut Ctx,
    family: &str,
    max_modulus: u64,
    json_out: bool,
) -> Result<u8, Failure> {
    let family = parse_family(family)?;
    if max_modulus > ctx.config.scan_budget {
        return Err(invalid(
            "--max-modulus",
            format!(
                "{max_modulus} exceeds the scan budget {}",
                ctx.config.scan_budget
            ),
        ));
    }
    let mut echo = family_echo(&family);
    echo["max_modulus"] = int(max_modulus);
    let verdict = match check_theorem1_with(&family, &ctx.config, &DirectLegendre) {
        Ok(v) => v,
        Err(CertifyError::Inconclusive { bound }) => {
            if json_out {
                ctx.emit("verify", echo, inconclusive(bound))?;
            } else {
                writeln!(
                    ctx.out,
                    "{family}: inconclusive (no witness prime below {bound})"
                )?;
            }
            return Ok(EXIT_INCONCLUSIVE);
        }
    };

    let budget = ctx.config.scan_budget;
    let mut disagreements = Vec::new();
    let mut first_failure = None;
    for m in 1..=max_modulus {
        let scan = has_root_mod_with_budget(&family, m, budget)?;
        if !scan.solvable && first_failure.is_none() {
            first_failure = Some(m);
        }
        if let Some(cert) = verdict.certificate() {
            let built = root_mod(&family, cert, m)
                .ok()
                .filter(|w| family.eval_mod(w.root, m) == 0);
            if !scan.solvable || built.is_none() {
                disagreements.push(int(m));
            }
        }
    }
    let mut audit = None;
    if let Some(cx) = verdict.counterexample() {
        match verify_counterexample(&family, cx, budget) {
            Ok(a) => audit = Some(to_value(&a)),
            Err(e) => {
                audit = Some(json!({ "rejected": e.to_string() }));
                disagreements.push(opt_int(cx.primary_modulus()));
            }
        }
    }
    let consistent = disagreements.is_empty();
    let result = VerifyResult {
        verdict: &verdict,
        max_modulus: int(max_modulus),
        moduli_checked: int(max_modulus),
        disagreements,
        minimal_failing_modulus: opt_int(first_failure),
        counterexample_audit: audit,
        consistent,
    };
    if json_out {
        ctx.emit("verify", echo, to_value(&result))?;
    } else {
        write!(ctx.out, "{}", describe_verdict(&family, &verdict))?;
        match first_failure {
            Some(m) => writeln!(
                ctx.out,
                "sweep to {max_modulus}: first modulus without a root is {m}"
            )?,
            None => writeln!(ctx.out, "sweep to {max_modulus}: every modulus has a root")?,
        }
        writeln!(
            ctx.out,
            "{}",
            if consistent {
                "consistent"
            } else {
                "DISAGREEMENT"
            }
        )?;
        for d in &result.disagreements {
            writeln!(ctx.out, "  disagreement at {d}")?;
        }
    }
    Ok(if consistent { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn run_search(
    ctx: &mut Ctx,
    n: usize,
    pool_max: u64,
    negatives: bool,
    filter: FilterArg,
    limit: usize,
    json_out: bool,
) -> Result<u8, Failure> {
    let query = SearchQuery {
        pool_bound: pool_max,
        allow_negative: negatives,
        n,
        max_results: limit,
        require_verdict: filter.into(),
    };
    let cache = LegendreCache::new();
    let mut hits = search_families(&query, &ctx.config, &cache).map_err(|e| {
        let arg = match e {
            intersective::search::QueryError::PoolTooLarge(_) => "--pool-max",
            intersective::search::QueryError::BadSize(_) => "--n",
        };
        invalid(arg, e)
    })?;
    let mut count = 0usize;
    for hit in hits.by_ref() {
        count += 1;
        if json_out {
            serde_json::to_writer(&mut ctx.out, &hit)?;
            writeln!(ctx.out)?;
        } else {
            let line = match &hit.verdict {
                Verdict::Certificate(c) => format!("certificate T={:?}", c.subset_t),
                Verdict::Counterexample(cx) => {
                    let o = cx.primary_obstruction();
                    format!(
                        "counterexample {}",
                        modulus_text(o.prime, o.exponent, o.modulus)
                    )
                }
            };
            writeln!(ctx.out, "{}  {line}", hit.family)?;
        }
    }
    let skipped = hits.inconclusive_skipped();
    if json_out {
        let echo = json!({
            "n": n,
            "pool_max": int(pool_max),
            "negatives": negatives,
            "verdict": to_value(&VerdictFilter::from(filter)),
            "limit": if limit == usize::MAX { Value::Null } else { json!(limit) },
        });
        ctx.emit(
            "search",
            echo,
            json!({ "families": count, "inconclusive_skipped": skipped }),
        )?;
    } else {
        writeln!(ctx.out, "{count} families, {skipped} inconclusive skipped")?;
    }
    Ok(0)
}

fn run_corollary1(ctx: &mut Ctx, p: u64, q: u64, json_out: bool) -> Result<u8, Failure> {
    let report = match corollary1_check_with(p, q, &ctx.config, &DirectLegendre) {
        Ok(r) => r,
        Err(intersective::certify::CorollaryError::Certify(CertifyError::Inconclusive {
            bound,
        })) => {
            return inconclusive_out(
                ctx,
                "corollary1",
                json!({ "p": int(p), "q": int(q) }),
                bound,
                json_out,
            )
        }
        Err(e) => return Err(Failure(format!("corollary1: {e}"))),
    };
    if json_out {
        ctx.emit(
            "corollary1",
            json!({ "p": int(p), "q": int(q) }),
            to_value(&report),
        )?;
    } else {
        writeln!(
            ctx.out,
            "({p}/{q}) = {}, ({q}/{p}) = {}, two-prime condition {}",
            report.legendre_p_q,
            report.legendre_q_p,
            holds(report.paper_condition)
        )?;
        let family = validate_family(&[p as i64, q as i64, (p * q) as i64])?;
        write!(
            ctx.out,
            "{}",
            describe_verdict(&family, &report.engine_verdict)
        )?;
        if report.discrepancy {
            writeln!(ctx.out, "discrepancy: condition and engine disagree")?;
        }
    }
    Ok(verdict_code(&report.engine_verdict))
}

fn run_corollary2(ctx: &mut Ctx, c: i64, d: i64, json_out: bool) -> Result<u8, Failure> {
    let report = match corollary2_check_with(c, d, &ctx.config, &DirectLegendre) {
        Ok(r) => r,
        Err(intersective::certify::CorollaryError::Certify(CertifyError::Inconclusive {
            bound,
        })) => {
            return inconclusive_out(
                ctx,
                "corollary2",
                json!({ "c": c, "d": d }),
                bound,
                json_out,
            )
        }
        Err(e) => return Err(Failure(format!("corollary2: {e}"))),
    };
    if json_out {
        ctx.emit("corollary2", json!({ "c": c, "d": d }), to_value(&report))?;
    } else {
        writeln!(
            ctx.out,
            "gcd = {}, c1 = {}, d1 = {}, c1*d1 = {}",
            report.gcd, report.c1, report.d1, report.c1d1
        )?;
        writeln!(
            ctx.out,
            "odd prime condition {}, dyadic condition {}",
            holds(report.odd_prime_condition),
            holds(report.dyadic_condition)
        )?;
        if !report.failing_primes.is_empty() {
            writeln!(ctx.out, "failing primes: {:?}", report.failing_primes)?;
        }
        let family = validate_family(&[c, d, report.c1d1])?;
        write!(
            ctx.out,
            "{}",
            describe_verdict(&family, &report.engine_verdict)
        )?;
        if report.discrepancy {
            writeln!(ctx.out, "discrepancy: conditions and engine disagree")?;
        }
    }
    Ok(verdict_code(&report.engine_verdict))
}

fn inconclusive_out(
    ctx: &mut Ctx,
    command: &'static str,
    echo: Value,
    bound: u64,
    json_out: bool,
) -> Result<u8, Failure> {
    if json_out {
        ctx.emit(command, echo, inconclusive(bound))?;
    } else {
        writeln!(ctx.out, "inconclusive (no witness prime below {bound})")?;
    }
    Ok(EXIT_INCONCLUSIVE)
}

fn holds(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut ctx = Ctx {
        config: load_config()?,
        started: Instant::now(),
        out: BufWriter::new(io::stdout()),
    };
    let code = match cli.command {
        Command::Check { family, json } => run_check(&mut ctx, &family, json),
        Command::Root {
            family,
            modulus,
            json,
        } => run_root(&mut ctx, &family, modulus, json),
        Command::Counterexample {
            family,
            minimal,
            bound,
            json,
        } => run_counterexample(&mut ctx, &family, minimal, bound, json),
        Command::Verify {
            family,
            max_modulus,
            json,
        } => run_verify(&mut ctx, &family, max_modulus, json),
        Command::Search {
            n,
            pool_max,
            negatives,
            verdict,
            limit,
            json,
        } => run_search(&mut ctx, n, pool_max, negatives, verdict, limit, json),
        Command::Corollary1 { p, q, json } => run_corollary1(&mut ctx, p, q, json),
        Command::Corollary2 { c, d, json } => run_corollary2(&mut ctx, c, d, json),
    }?;
    ctx.out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            eprintln!(
                "{}",
                rendered
                    .lines()
                    .next()
                    .unwrap_or("error: invalid arguments")
            );
            return ExitCode::from(EXIT_INVALID);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
