use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use descent_core::descent_arith::{annihilator_n, enlarged_prime_set, jacobian_order_mod, JacobianLocalData};
use descent_core::iterated_words::observable_series;
use descent_core::lie_dims::{graded_dims, Genus};
use descent_core::padic_series::{SeparationReport, SeparationStatus, DEFAULT_DEPTH_CAP};
use descent_core::pipeline::{
    run_halting, run_report, run_separation, ExitKind, HaltingSummary, OutputFormat, PipelineConfig, StageError,
    Table, DEFAULT_N_CAP,
};
use descent_core::schema::{ChartJson, DiskJson, FormSystemJson, ObservableJson};
use descent_core::selmer_bounds::{bound_table, CurveParams, ParityMode};
use descent_core::two_sided_search::{DescentFixture, DescentOutcome};

#[derive(Parser)]
#[command(name = "descent", version, about = "Bounds, zero separation and descent arithmetic for hyperbolic curves")]
struct Cli {
    /// Output format; overrides the config file's `output`
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for parallel stages
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Faithful,
    PaperVerbatim,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Lucas terms, graded dimensions and cumulative dimensions
    Dims {
        #[arg(long, allow_negative_numbers = true)]
        g: i64,
        #[arg(long)]
        n: usize,
    },
    /// Selmer upper and de Rham lower bounds per level
    Bounds(CurveArgs),
    /// Least level where the bounds cross
    Halt {
        #[command(flatten)]
        curve: CurveArgs,
        /// Sweep the rank from --rank up to this value
        #[arg(long)]
        rank_to: Option<u64>,
    },
    /// Zero separation over the charts of a config file
    Separate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSON array of charts, instead of a full config
        #[arg(long, conflicts_with = "config")]
        charts: Option<PathBuf>,
        #[arg(long)]
        depth_cap: Option<u32>,
    },
    /// Evaluate an observable in iterated integrals as a residue-disk series
    Integrate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Order of J(Z/p^M), the annihilator N and the prime set T0
    Order {
        #[arg(long)]
        p: u64,
        /// Dimension of the Jacobian; inferred from --l-poly when given
        #[arg(long)]
        g: Option<u32>,
        #[arg(long, conflicts_with = "l_poly")]
        count_fp: Option<String>,
        /// Comma separated L-polynomial coefficients, constant term first
        #[arg(long)]
        l_poly: Option<String>,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Comma separated bad primes; enables T0 in the output
        #[arg(long)]
        bad_primes: Option<String>,
    },
    /// Run two-sided search on mock fixtures
    DescentSim {
        #[arg(long)]
        fixtures: PathBuf,
        /// Only run the fixture with this name
        #[arg(long)]
        name: Option<String>,
    },
    /// t, M, N and T0 in one document
    Report {
        #[command(flatten)]
        curve: CurveArgs,
    },
}

#[derive(Args, Clone)]
struct CurveArgs {
    /// JSON pipeline config; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    g: Option<i64>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    rank: Option<u64>,
    /// Comma separated bad primes
    #[arg(long)]
    bad_primes: Option<String>,
    /// Number of bad primes, when the primes themselves are not listed
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    n_cap: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    depth_cap: Option<u32>,
}

struct Failure {
    kind: ExitKind,
    stage: String,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { kind: ExitKind::Input, stage: "input".into(), message: message.into() }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure { kind: e.kind, stage: e.stage.to_string(), message: e.message }
    }
}

/// What a command prints, in both shapes.
struct Output {
    json: Value,
    table: Table,
}

type CmdResult = Result<(Output, Option<Failure>), Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        Failure::input(format!("{}: field `{p}`: {}", path.display(), e.inner()))
    })
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Failure::input(format!("{what}: cannot parse {s:?}"))))
        .collect()
}

impl CurveArgs {
    fn config(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => read_json::<PipelineConfig>(path)?,
            None => {
                let g = self.g.ok_or_else(|| Failure::input("missing --g (or --config)"))?;
                let p = self.p.ok_or_else(|| Failure::input("missing --p (or --config)"))?;
                let genus = Genus::new(g).map_err(|e| Failure::input(e.to_string()))?;
                PipelineConfig {
                    curve: CurveParams::new(genus, 0, p, 0),
                    mode: ParityMode::Faithful,
                    n_cap: DEFAULT_N_CAP,
                    charts: None,
                    jacobian: None,
                    depth_cap: DEFAULT_DEPTH_CAP,
                    output: OutputFormat::Json,
                }
            }
        };
        if let Some(g) = self.g {
            cfg.curve.g = Genus::new(g).map_err(|e| Failure::input(e.to_string()))?;
        }
        if let Some(p) = self.p {
            cfg.curve.p = p;
        }
        if let Some(r) = self.rank {
            cfg.curve.mw_rank = r;
        }
        if let Some(list) = &self.bad_primes {
            let primes: BTreeSet<u64> = parse_list(list, "--bad-primes")?.into_iter().collect();
            cfg.curve.bad_prime_count = primes.len();
            cfg.curve.bad_primes = Some(primes);
        }
        if let Some(s) = self.s {
            if cfg.curve.bad_primes.as_ref().is_some_and(|b| b.len() != s) {
                return Err(Failure::input("--s disagrees with the listed bad primes"));
            }
            cfg.curve.bad_prime_count = s;
        }
        if let Some(n) = self.n_cap {
            cfg.n_cap = n;
        }
        if let Some(d) = self.depth_cap {
            cfg.depth_cap = d;
        }
        match self.mode {
            Some(ModeArg::Faithful) => cfg.mode = ParityMode::Faithful,
            Some(ModeArg::PaperVerbatim) => cfg.mode = ParityMode::PaperVerbatim,
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn modes(&self, cfg: &PipelineConfig) -> Vec<ParityMode> {
        if self.mode == Some(ModeArg::Both) {
            vec![ParityMode::Faithful, ParityMode::PaperVerbatim]
        } else {
            vec![cfg.mode]
        }
    }
}

fn cmd_dims(g: i64, n: usize) -> CmdResult {
    let genus = Genus::new(g).map_err(|e| Failure::input(e.to_string()))?;
    let mut table = Table::new(["n", "lucas", "r", "dim_u"]);
    let mut rows = Vec::new();
    if n > 0 {
        let dims = graded_dims::<BigInt>(genus, n).map_err(|e| Failure::input(e.to_string()))?;
        let mut cumulative = BigInt::from(0);
        for k in 1..=n {
            let (l, r) = (dims.lucas(k), dims.r(k));
            table.push([k.to_string(), l.to_string(), r.to_string(), cumulative.to_string()]);
            rows.push(json!({"n": k, "lucas": l.to_string(), "r": r.to_string(), "dim_u": cumulative.to_string()}));
            cumulative += r;
        }
    }
    Ok((Output { json: json!({"g": g, "rows": rows}), table }, None))
}

fn bounds_rows(table: &mut Table, summary: &HaltingSummary) {
    for r in &summary.rows {
        table.push([
            summary.mode.label().to_string(),
            r.n.to_string(),
            r.selmer_ub.to_string(),
            r.derham_lb.to_string(),
            (r.selmer_ub < r.derham_lb).to_string(),
        ]);
    }
}

fn cmd_bounds(args: &CurveArgs) -> CmdResult {
    let cfg = args.config()?;
    let mut table = Table::new(["mode", "n", "selmer_ub", "derham_lb", "crossed"]);
    let mut docs = Vec::new();
    for mode in args.modes(&cfg) {
        let dims = graded_dims::<BigInt>(cfg.curve.g, cfg.n_cap.saturating_sub(1).max(1))
            .map_err(|e| Failure::input(e.to_string()))?;
        let t = bound_table(&cfg.curve, &dims, cfg.n_cap, mode).map_err(|e| Failure::input(e.to_string()))?;
        let summary = HaltingSummary { mode, n_cap: t.n_cap(), t: t.halting_level, rows: t.rows };
        bounds_rows(&mut table, &summary);
        docs.push(summary);
    }
    Ok((Output { json: json!({"curve": cfg.curve, "tables": docs}), table }, None))
}

fn cmd_halt(args: &CurveArgs, rank_to: Option<u64>) -> CmdResult {
    let cfg = args.config()?;
    let modes = args.modes(&cfg);
    if let Some(last) = rank_to {
        let jobs: Vec<(u64, ParityMode)> =
            (cfg.curve.mw_rank..=last).flat_map(|r| modes.iter().map(move |&m| (r, m))).collect();
        let results = jobs
            .par_iter()
            .map(|&(rank, mode)| {
                let mut c = cfg.clone();
                c.curve.mw_rank = rank;
                Ok::<_, StageError>((rank, mode, run_halting(&c, mode)?.t()))
            })
            .collect::<Vec<_>>();
        let mut table = Table::new(["rank", "mode", "t"]);
        let mut rows = Vec::new();
        let mut exhausted = false;
        for res in results {
            let (rank, mode, t) = res?;
            exhausted |= t.is_none();
            table.push([rank.to_string(), mode.label().to_string(), t.map_or("none".into(), |t| t.to_string())]);
            rows.push(json!({"rank": rank, "mode": mode, "t": t}));
        }
        let fail = exhausted.then(|| Failure {
            kind: ExitKind::BoundSearchExhausted,
            stage: "halt".into(),
            message: format!("some ranks have no halting level within n_cap = {}", cfg.n_cap),
        });
        return Ok((Output { json: json!({"curve": cfg.curve, "n_cap": cfg.n_cap, "sweep": rows}), table }, fail));
    }
    let mut table = Table::new(["mode", "n", "selmer_ub", "derham_lb", "crossed"]);
    let mut docs = Vec::new();
    let mut fail = None;
    for mode in modes {
        let summary = HaltingSummary::from_halting(&run_halting(&cfg, mode)?);
        if summary.t.is_none() {
            fail = Some(Failure {
                kind: ExitKind::BoundSearchExhausted,
                stage: "halt".into(),
                message: format!("no halting level within n_cap = {} ({})", cfg.n_cap, mode.label()),
            });
        }
        bounds_rows(&mut table, &summary);
        docs.push(summary);
    }
    Ok((Output { json: json!({"curve": cfg.curve, "results": docs}), table }, fail))
}

fn separation_output(report: &SeparationReport) -> (Output, Option<Failure>) {
    let mut table = Table::new(["record", "chart_id", "center_label", "center_digits", "depth", "zero_count", "note"]);
    let digits = |d: &[u64]| d.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    for d in &report.disks {
        table.push([
            "disk".to_string(),
            d.chart_id.clone(),
            d.center_label.clone(),
            digits(&d.center_digits),
            d.depth.to_string(),
            d.zero_count.to_string(),
            if d.multiplicity_flag { "uncertified".into() } else { "hensel".into() },
        ]);
    }
    for f in &report.diagnostics {
        table.push([
            "failure".to_string(),
            f.chart_id.clone(),
            f.center_label.clone(),
            digits(&f.center_digits),
            f.depth.to_string(),
            f.zero_count.map_or(String::new(), |c| c.to_string()),
            format!("{:?}: {}", f.kind, f.detail),
        ]);
    }
    table.push([
        "summary".to_string(),
        String::new(),
        String::new(),
        String::new(),
        report.m.to_string(),
        String::new(),
        format!("{:?}", report.status),
    ]);
    let fail = (report.status != SeparationStatus::Separated).then(|| Failure {
        kind: ExitKind::SeparationFailed,
        stage: "separate".into(),
        message: format!("separation status {:?}", report.status),
    });
    let json = serde_json::to_value(report).expect("report serializes");
    (Output { json, table }, fail)
}

fn cmd_separate(config: &Option<PathBuf>, charts: &Option<PathBuf>, depth_cap: Option<u32>) -> CmdResult {
    let (charts, cap) = match (config, charts) {
        (Some(path), _) => {
            let cfg: PipelineConfig = read_json(path)?;
            cfg.validate()?;
            let charts = cfg.charts.ok_or_else(|| Failure::input("missing field: charts"))?;
            (charts, cfg.depth_cap)
        }
        (None, Some(path)) => (read_json::<Vec<ChartJson>>(path)?, DEFAULT_DEPTH_CAP),
        (None, None) => return Err(Failure::input("one of --config or --charts is required")),
    };
    let report = run_separation(&charts, depth_cap.unwrap_or(cap))?;
    Ok(separation_output(&report))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegrateInput {
    forms: FormSystemJson,
    observable: ObservableJson,
    trunc: usize,
    #[serde(default)]
    weierstrass_bound: Option<usize>,
    #[serde(default)]
    center_label: Option<String>,
}

fn cmd_integrate(path: &Path) -> CmdResult {
    let input: IntegrateInput = read_json(path)?;
    let fs = input.forms.to_forms("forms").map_err(|e| Failure::input(e.to_string()))?;
    let obs = input
        .observable
        .to_observable(input.forms.p, "observable")
        .map_err(|e| Failure::input(e.to_string()))?;
    let bound = input.weierstrass_bound.unwrap_or(input.trunc);
    let f = observable_series(&obs, &fs, input.trunc, bound).map_err(|e| Failure::input(e.to_string()))?;
    let disk = DiskJson::from_series(input.center_label.as_deref().unwrap_or("disk"), &f);
    let mut table = Table::new(["m", "val", "unit", "prec"]);
    for (m, c) in disk.coeffs.iter().enumerate() {
        let val = serde_json::to_value(c.val).expect("valuation serializes");
        let val = val.as_str().map_or(val.to_string(), str::to_string);
        table.push([m.to_string(), val, c.unit.to_string(), c.prec.to_string()]);
    }
    let json = serde_json::to_value(&disk).expect("disk serializes");
    Ok((Output { json, table }, None))
}

fn cmd_order(
    p: u64,
    g: Option<u32>,
    count_fp: &Option<String>,
    l_poly: &Option<String>,
    m: u32,
    bad_primes: &Option<String>,
) -> CmdResult {
    let data = match (count_fp, l_poly) {
        (Some(c), None) => {
            let count: BigInt = c.trim().parse().map_err(|_| Failure::input(format!("--count-fp: cannot parse {c:?}")))?;
            let g = g.ok_or_else(|| Failure::input("--g is required with --count-fp"))?;
            JacobianLocalData::new(p, g, count)
        }
        (None, Some(l)) => {
            let coeffs: Vec<BigInt> = parse_list(l, "--l-poly")?;
            let d = JacobianLocalData::from_l_polynomial(p, &coeffs);
            if let (Ok(d), Some(g)) = (&d, g) {
                if d.g != g {
                    return Err(Failure::input(format!("--g = {g} but the L-polynomial has degree {}", 2 * d.g)));
                }
            }
            d
        }
        _ => return Err(Failure::input("exactly one of --count-fp or --l-poly is required")),
    }
    .map_err(|e| Failure::input(e.to_string()))?;
    let order = jacobian_order_mod(&data, m).map_err(|e| Failure::input(e.to_string()))?;
    let n = annihilator_n(&data, m).map_err(|e| Failure::input(e.to_string()))?;
    let mut doc = json!({
        "p": p, "g": data.g, "count_fp": data.count_fp.to_string(), "M": m,
        "order": order.to_string(), "N": n.to_string(),
    });
    let mut table = Table::new(["key", "value"]);
    table.push(["count_fp".to_string(), data.count_fp.to_string()]);
    table.push(["order".to_string(), order.to_string()]);
    table.push(["N".to_string(), n.to_string()]);
    if let Some(list) = bad_primes {
        let s: BTreeSet<u64> = parse_list(list, "--bad-primes")?.into_iter().collect();
        let t0 = enlarged_prime_set(&s, &n).map_err(|e| Failure::input(e.to_string()))?;
        let t0: Vec<String> = t0.iter().map(|q| q.to_string()).collect();
        table.push(["T0".to_string(), t0.join(" ")]);
        doc["T0"] = json!(t0);
    }
    if let Some(w) = data.weil_check() {
        eprintln!("warning: {}", w.message);
        table.push(["weil_warning".to_string(), w.message.clone()]);
        doc["weil_warning"] = json!(w.message);
    }
    Ok((Output { json: doc, table }, None))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    Many(Vec<DescentFixture>),
    One(Box<DescentFixture>),
}

fn cmd_descent_sim(path: &Path, name: &Option<String>) -> CmdResult {
    let fixtures = match read_json::<FixtureFile>(path)? {
        FixtureFile::Many(v) => v,
        FixtureFile::One(f) => vec![*f],
    };
    let selected: Vec<&DescentFixture> =
        fixtures.iter().filter(|f| name.as_ref().is_none_or(|n| &f.name == n)).collect();
    if selected.is_empty() {
        return Err(Failure::input("no fixture matches"));
    }
    let mut table = Table::new(["name", "result", "n", "m", "set", "steps", "expected"]);
    let mut docs = Vec::new();
    let mut mismatched = Vec::new();
    for f in selected {
        let run = f.run().map_err(|e| Failure::input(format!("{}: {e}", f.name)))?;
        let agrees = f.expected.as_ref().map(|e| e == &run.outcome);
        if agrees == Some(false) {
            mismatched.push(f.name.clone());
        }
        let (result, n, m, set) = match &run.outcome {
            DescentOutcome::Converged { set, n, m } => ("converged", n.to_string(), m.to_string(), set),
            DescentOutcome::CapExceeded { n_cap, m_cap, lower_last, .. } => {
                ("cap_exceeded", n_cap.to_string(), m_cap.to_string(), lower_last)
            }
        };
        let expected = match agrees {
            None => "",
            Some(true) => "match",
            Some(false) => "MISMATCH",
        };
        let set_text = set.iter().cloned().collect::<Vec<_>>().join(" ");
        table.push([f.name.clone(), result.into(), n, m, set_text, run.trace.len().to_string(), expected.into()]);
        docs.push(json!({"name": f.name, "outcome": run.outcome, "steps": run.trace.len(), "matches_expected": agrees}));
    }
    let fail = (!mismatched.is_empty()).then(|| Failure {
        kind: ExitKind::Internal,
        stage: "descent-sim".into(),
        message: format!("outcome differs from the recorded expectation: {}", mismatched.join(", ")),
    });
    Ok((Output { json: Value::Array(docs), table }, fail))
}

fn cmd_report(args: &CurveArgs) -> Result<(Output, Option<Failure>, OutputFormat), Failure> {
    let cfg = args.config()?;
    match run_report(&cfg) {
        Ok(report) => {
            let json = serde_json::to_value(&report).expect("report serializes");
            Ok((Output { json, table: report.summary_table() }, None, cfg.output))
        }
        Err(e) => {
            let out = e.partial.clone().map(|json| Output { json, table: Table::new(["stage", "message"]) });
            match out {
                Some(mut o) => {
                    o.table.push([e.stage.to_string(), e.message.clone()]);
                    Ok((o, Some(e.into()), cfg.output))
                }
                None => Err(e.into()),
            }
        }
    }
}

fn render(out: &Output, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).expect("json serializes");
            s.push('\n');
            s
        }
        OutputFormat::Csv => out.table.to_csv(),
        OutputFormat::Table => out.table.to_plain(),
    }
}

fn config_format(cmd: &Command) -> Option<OutputFormat> {
    let path = match cmd {
        Command::Bounds(c) | Command::Halt { curve: c, .. } => c.config.as_ref(),
        Command::Separate { config, .. } => config.as_ref(),
        _ => None,
    }?;
    read_json::<PipelineConfig>(path).ok().map(|c| c.output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[input]: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let flag_format = cli.format.map(|f| match f {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
        Format::Table => OutputFormat::Table,
    });
    let mut cfg_format = config_format(&cli.command);
    let result = match &cli.command {
        Command::Dims { g, n } => cmd_dims(*g, *n),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Halt { curve, rank_to } => cmd_halt(curve, *rank_to),
        Command::Separate { config, charts, depth_cap } => cmd_separate(config, charts, *depth_cap),
        Command::Integrate { input } => cmd_integrate(input),
        Command::Order { p, g, count_fp, l_poly, m, bad_primes } => cmd_order(*p, *g, count_fp, l_poly, *m, bad_primes),
        Command::DescentSim { fixtures, name } => cmd_descent_sim(fixtures, name),
        Command::Report { curve } => cmd_report(curve).map(|(o, f, fmt)| {
            cfg_format = Some(fmt);
            (o, f)
        }),
    };
    let format = flag_format.or(cfg_format).unwrap_or_default();
    let (out, fail) = match result {
        Ok(pair) => pair,
        Err(f) => (Output { json: Value::Null, table: Table::default() }, Some(f)),
    };
    if !out.json.is_null() {
        print!("{}", render(&out, format));
    }
    match fail {
        None => ExitCode::SUCCESS,
        Some(f) => {
            eprintln!("error[{}]: {}", f.stage, f.message);
            ExitCode::from(f.kind.code() as u8)
        }
    }
}
