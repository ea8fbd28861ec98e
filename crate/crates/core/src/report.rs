//! Run configurations and the serialized outputs of the command-line
//! front end: CSV rows, JSON documents and two-decimal tables.
//!
//! Floats are written in Rust's shortest round-trip form, so re-parsing any
//! CSV or JSON field yields the in-memory value bit for bit.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundReport};
use crate::error::{Error, Result};
use crate::exact::{exact_ept, exact_ept_rational, ExactConfig, ExactResult};
use crate::forcing::ForcingRule;
use crate::graph::{diameter, eccentricity, make_named_graph, Graph, GraphFamilySpec};
use crate::harness::{
    doubling_profile, estimate_ept, estimate_ept_min_over_starts, resolve_starts, EptSummary, HarnessOptions, Phase,
    StartPolicy, DEFAULT_TRIALS,
};

pub const CSV_HEADER: [&str; 12] = [
    "graph",
    "rule",
    "start",
    "trials",
    "seed",
    "mean",
    "variance",
    "std_error",
    "min",
    "max",
    "lower_bound",
    "upper_bound",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Table => "table",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "table" => Ok(OutputFormat::Table),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

/// Everything a `run`, `exact` or `profile` invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: GraphFamilySpec,
    pub rule: ForcingRule,
    pub start: StartPolicy,
    pub trials: u64,
    pub seed: u64,
    pub max_steps: Option<u64>,
    pub format: OutputFormat,
    /// Number of exact tail entries to emit.
    pub t_max: Option<usize>,
}

impl RunConfig {
    pub fn new(graph: GraphFamilySpec) -> Self {
        RunConfig {
            graph,
            rule: ForcingRule::Standard,
            start: StartPolicy::Corner,
            trials: DEFAULT_TRIALS,
            seed: 0,
            max_steps: None,
            format: OutputFormat::Json,
            t_max: None,
        }
    }
}

/// Canonical flag form, e.g. `--graph grid:4,5 --rule standard --start corner
/// --trials 1000 --seed 0 --format json`.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "--graph {} --rule {} --start {} --trials {} --seed {} --format {}",
            self.graph, self.rule, self.start, self.trials, self.seed, self.format
        )?;
        if let Some(m) = self.max_steps {
            write!(f, " --max-steps {m}")?;
        }
        if let Some(t) = self.t_max {
            write!(f, " --t-max {t}")?;
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        if !tokens.len().is_multiple_of(2) {
            return Err(Error::Config("flags must come in '--name value' pairs".into()));
        }
        let number = |v: &str| v.parse::<u64>().map_err(|_| Error::Config(format!("'{v}' is not a number")));
        let mut graph = None;
        let mut config = RunConfig::new(GraphFamilySpec::Path(1));
        for pair in tokens.chunks(2) {
            let (flag, value) = (pair[0], pair[1]);
            match flag {
                "--graph" => graph = Some(value.parse()?),
                "--rule" => config.rule = value.parse()?,
                "--start" => config.start = value.parse()?,
                "--trials" => config.trials = number(value)?,
                "--seed" => config.seed = number(value)?,
                "--max-steps" => config.max_steps = Some(number(value)?),
                "--format" => config.format = value.parse()?,
                "--t-max" => config.t_max = Some(number(value)? as usize),
                other => return Err(Error::Config(format!("unknown flag '{other}'"))),
            }
        }
        config.graph = graph.ok_or_else(|| Error::Config("--graph is required".into()))?;
        Ok(config)
    }
}

/// Rounds to two decimals, ties to even.
pub fn two_decimals(x: f64) -> String {
    format!("{:.2}", (x * 100.0).round_ties_even() / 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    pub name: String,
    pub value: f64,
}

/// Bound columns and advisory ratio attached to one summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub bounds: Vec<BoundReport>,
    pub advisory: Option<Advisory>,
}

pub fn annotate(spec: &GraphFamilySpec, g: &Graph, start: usize, mean: f64) -> Result<Annotation> {
    let mut bounds = Vec::new();
    let mut lower = None;
    let mut upper = None;
    let mut advisory = None;
    match *spec {
        GraphFamilySpec::Grid { m, n } => {
            let (lo, hi) = bounds::grid_bounds(m, n)?;
            lower = Some(lo.value);
            upper = Some(hi.value);
            bounds.extend([lo, hi]);
            advisory = Some(Advisory { name: "mean_over_m_plus_n".into(), value: mean / (m + n) as f64 });
        }
        GraphFamilySpec::Hypercube(dim) => {
            let hi = bounds::hypercube_upper_bound(dim)?;
            upper = Some(hi.value);
            bounds.push(hi);
            advisory = Some(Advisory { name: "mean_minus_dim".into(), value: mean - dim as f64 });
        }
        _ => {
            if let Some(d) = g.regular_degree().filter(|&d| d >= 2 && g.n_vertices() > d) {
                let hi = bounds::regular_upper_bound(g.n_vertices(), d)?;
                upper = Some(hi.value);
                bounds.push(hi);
            }
        }
    }
    if lower.is_none() {
        // a vertex at distance t cannot turn blue before step t
        if let Some(ecc) = eccentricity(g, start) {
            lower = Some(ecc as f64);
            bounds.insert(
                0,
                BoundReport {
                    name: "start_eccentricity".into(),
                    value: ecc as f64,
                    applicability: "any graph".into(),
                    applicable: true,
                    asymptotic: false,
                },
            );
        }
    }
    Ok(Annotation { lower_bound: lower, upper_bound: upper, bounds, advisory })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub graph: String,
    #[serde(flatten)]
    pub summary: EptSummary,
    #[serde(flatten)]
    pub annotation: Annotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub graph: String,
    pub rule: ForcingRule,
    pub start_policy: String,
    pub minimizer: usize,
    pub rows: Vec<RunRow>,
}

impl RunReport {
    pub fn best(&self) -> &RunRow {
        self.rows.iter().find(|r| r.summary.start_vertex == self.minimizer).unwrap_or(&self.rows[0])
    }
}

fn harness_options(config: &RunConfig, options: &HarnessOptions) -> HarnessOptions {
    HarnessOptions { max_steps: config.max_steps.or(options.max_steps), threads: options.threads }
}

pub fn run(config: &RunConfig, options: &HarnessOptions) -> Result<RunReport> {
    let g = make_named_graph(&config.graph)?;
    let starts = resolve_starts(config.start, Some(&config.graph), &g)?;
    let options = harness_options(config, options);
    let result = if starts.len() == 1 {
        let s = estimate_ept(&g, starts[0], config.rule, config.trials, config.seed, &options)?;
        (s.start_vertex, vec![s])
    } else {
        let r = estimate_ept_min_over_starts(&g, &starts, config.rule, config.trials, config.seed, &options)?;
        (r.minimizer, r.summaries)
    };
    let rows = result
        .1
        .into_iter()
        .map(|summary| {
            let annotation = annotate(&config.graph, &g, summary.start_vertex, summary.mean)?;
            Ok(RunRow { graph: config.graph.to_string(), summary, annotation })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        graph: config.graph.to_string(),
        rule: config.rule,
        start_policy: config.start.to_string(),
        minimizer: result.0,
        rows,
    })
}

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_record(row: &RunRow) -> Vec<String> {
    let s = &row.summary;
    vec![
        row.graph.clone(),
        s.rule.to_string(),
        s.start_vertex.to_string(),
        s.trials.to_string(),
        s.seed.to_string(),
        s.mean.to_string(),
        s.variance.to_string(),
        s.std_error.to_string(),
        s.min_time.to_string(),
        s.max_time.to_string(),
        opt_field(row.annotation.lower_bound),
        opt_field(row.annotation.upper_bound),
    ]
}

fn write_csv(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io { path: "<csv>".into(), reason: e.to_string() };
    writer.write_record(header).map_err(io)?;
    for record in records {
        writer.write_record(&record).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io { path: "<csv>".into(), reason: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Error::Io { path: "<csv>".into(), reason: e.to_string() })
}

pub fn run_csv(report: &RunReport) -> Result<String> {
    write_csv(&CSV_HEADER, report.rows.iter().map(csv_record))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io { path: "<json>".into(), reason: e.to_string() })
}

pub fn render_run(report: &RunReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => run_csv(report),
        OutputFormat::Json => to_json(report),
        OutputFormat::Table => {
            let mut out = format!("{}  rule={}  start={}\n", report.graph, report.rule, report.start_policy);
            out += "start      mean   std_err   min   max  cutoff   lower   upper\n";
            for row in &report.rows {
                let s = &row.summary;
                let flag = if s.start_vertex == report.minimizer && report.rows.len() > 1 { " *" } else { "" };
                out += &format!(
                    "{:>5} {:>9} {:>9.4} {:>5} {:>5} {:>7} {:>7} {:>7}{flag}\n",
                    s.start_vertex,
                    two_decimals(s.mean),
                    s.std_error,
                    s.min_time,
                    s.max_time,
                    s.cutoff,
                    row.annotation.lower_bound.map(two_decimals).unwrap_or_default(),
                    row.annotation.upper_bound.map(two_decimals).unwrap_or_default(),
                );
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub graph: String,
    pub rule: ForcingRule,
    pub start: usize,
    pub expected_time: f64,
    /// Exact value as `p/q`, for graphs small enough for rational mode.
    pub expected_rational: Option<String>,
    pub tail: Vec<f64>,
    pub tail_truncated: bool,
    pub states: usize,
    pub transitions: u64,
}

pub fn exact(config: &RunConfig) -> Result<ExactReport> {
    let g = make_named_graph(&config.graph)?;
    let exact_config = ExactConfig::default();
    if g.n_vertices() > exact_config.max_vertices {
        return Err(Error::BudgetExceeded(format!(
            "{} vertices exceeds the limit of {}",
            g.n_vertices(),
            exact_config.max_vertices
        )));
    }
    let starts = resolve_starts(config.start, Some(&config.graph), &g)?;
    let mut best: Option<(usize, ExactResult)> = None;
    for &v in &starts {
        let r = exact_ept(&g, &[v], config.rule)?;
        if best.as_ref().is_none_or(|(_, b)| r.expected_time < b.expected_time - 1e-12 * b.expected_time.max(1.0)) {
            best = Some((v, r));
        }
    }
    let (start, mut result) = best.ok_or_else(|| Error::Config("no start vertex".into()))?;
    if let Some(t) = config.t_max {
        result.tail.truncate(t + 1);
    }
    let rational = if g.n_vertices() <= exact_config.max_rational_vertices {
        Some(exact_ept_rational(&g, &[start], config.rule)?.to_string())
    } else {
        None
    };
    Ok(ExactReport {
        graph: config.graph.to_string(),
        rule: config.rule,
        start,
        expected_time: result.expected_time,
        expected_rational: rational,
        tail: result.tail,
        tail_truncated: result.tail_truncated,
        states: result.states,
        transitions: result.transitions,
    })
}

pub fn render_exact(report: &ExactReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => write_csv(
            &["graph", "rule", "start", "expected_time", "expected_rational", "states", "transitions"],
            [vec![
                report.graph.clone(),
                report.rule.to_string(),
                report.start.to_string(),
                report.expected_time.to_string(),
                report.expected_rational.clone().unwrap_or_default(),
                report.states.to_string(),
                report.transitions.to_string(),
            ]],
        ),
        OutputFormat::Table => {
            let mut out = format!(
                "{}  rule={}  start={}\nexpected time {}",
                report.graph, report.rule, report.start, report.expected_time
            );
            if let Some(r) = &report.expected_rational {
                out += &format!(" = {r}");
            }
            out += &format!("\nstates {}  transitions {}\n   t   P(T > t)\n", report.states, report.transitions);
            for (t, p) in report.tail.iter().enumerate() {
                out += &format!("{t:>4}   {p:.6e}\n");
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableFamily {
    /// Rows are `m`, columns `n`.
    Grid {
        rows: RangeInclusive<usize>,
        cols: RangeInclusive<usize>,
    },
    Hypercube {
        dims: RangeInclusive<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub family: TableFamily,
    pub rule: ForcingRule,
    /// One table block per policy, in order.
    pub starts: Vec<StartPolicy>,
    pub trials: u64,
    pub seed: u64,
}

impl TableConfig {
    /// Grids: corner start with the center start alongside. Hypercubes:
    /// vertex 0.
    pub fn default_starts(family: &TableFamily) -> Vec<StartPolicy> {
        match family {
            TableFamily::Grid { .. } => vec![StartPolicy::Corner, StartPolicy::Center],
            TableFamily::Hypercube { .. } => vec![StartPolicy::Vertex(0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableOutput {
    pub table: String,
    pub csv: String,
    /// Row-major per start policy, then per graph.
    pub rows: Vec<RunRow>,
}

/// Parses `a-b`, `a..b`, `a..=b` or a single `a` as an inclusive range.
pub fn parse_range<T: FromStr + Copy>(s: &str) -> Result<RangeInclusive<T>> {
    let bad = || Error::Config(format!("bad range '{s}'"));
    let parse = |x: &str| x.trim().parse::<T>().map_err(|_| bad());
    let s = s.trim();
    let parts = if let Some((a, b)) = s.split_once("..=") {
        (a, b)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b)
    } else if let Some((a, b)) = s.split_once('-') {
        (a, b)
    } else {
        (s, s)
    };
    Ok(parse(parts.0)?..=parse(parts.1)?)
}

pub fn table(config: &TableConfig, options: &HarnessOptions) -> Result<TableOutput> {
    let specs: Vec<GraphFamilySpec> = match &config.family {
        TableFamily::Grid { rows, cols } => {
            rows.clone().flat_map(|m| cols.clone().map(move |n| GraphFamilySpec::Grid { m, n })).collect()
        }
        TableFamily::Hypercube { dims } => dims.clone().map(GraphFamilySpec::Hypercube).collect(),
    };
    let mut rows = Vec::with_capacity(specs.len() * config.starts.len());
    let mut table = String::new();
    for (block, &start) in config.starts.iter().enumerate() {
        let first = rows.len();
        for spec in &specs {
            let run_config = RunConfig {
                rule: config.rule,
                start,
                trials: config.trials,
                seed: config.seed,
                ..RunConfig::new(spec.clone())
            };
            rows.push(run(&run_config, options)?.best().clone());
        }
        if specs.is_empty() {
            continue;
        }
        if block > 0 {
            table.push('\n');
        }
        if config.starts.len() > 1 {
            table += &format!("start = {start}\n");
        }
        let mean = |i: usize| two_decimals(rows[first + i].summary.mean);
        match &config.family {
            TableFamily::Grid { rows: ms, cols: ns } => {
                let n_cols = ns.clone().count();
                table += &format!("{:>5}", "ept");
                for n in ns.clone() {
                    table += &format!(" {n:>6}");
                }
                table.push('\n');
                for (r, m) in ms.clone().enumerate() {
                    table += &format!("{m:>5}");
                    for c in 0..n_cols {
                        table += &format!(" {:>6}", mean(r * n_cols + c));
                    }
                    table.push('\n');
                }
            }
            TableFamily::Hypercube { dims } => {
                table += &format!("{:>3} {:>7}\n", "n", "ept");
                for (i, d) in dims.clone().enumerate() {
                    table += &format!("{d:>3} {:>7}\n", mean(i));
                }
            }
        }
    }
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    header.push("advisory");
    let csv = write_csv(
        &header,
        rows.iter().map(|r| {
            let mut rec = csv_record(r);
            rec.push(opt_field(r.annotation.advisory.as_ref().map(|a| a.value)));
            rec
        }),
    )?;
    Ok(TableOutput { table, csv, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub phase: Phase,
    pub k: usize,
    pub mean_steps: f64,
    /// Per-level bound, on hypercubes.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub graph: String,
    pub rule: ForcingRule,
    pub start: usize,
    pub trials: u64,
    pub cutoff: u64,
    pub seed: u64,
    pub mean_time: f64,
    pub levels: Vec<LevelRecord>,
}

pub fn profile(config: &RunConfig, options: &HarnessOptions) -> Result<ProfileReport> {
    let g = make_named_graph(&config.graph)?;
    let start = resolve_starts(config.start, Some(&config.graph), &g)?[0];
    let options = harness_options(config, options);
    let p = doubling_profile(&g, start, config.rule, config.trials, config.seed, &options)?;
    let levels = p
        .entries()
        .into_iter()
        .map(|(phase, k, mean_steps)| {
            let bound = match (&config.graph, phase) {
                (&GraphFamilySpec::Hypercube(dim), Phase::Blue | Phase::White) => {
                    bounds::hypercube_level_bound(dim, k).ok().map(|b| b.value)
                }
                _ => None,
            };
            LevelRecord { phase, k, mean_steps, bound }
        })
        .collect();
    Ok(ProfileReport {
        graph: config.graph.to_string(),
        rule: config.rule,
        start,
        trials: p.trials,
        cutoff: p.cutoff,
        seed: config.seed,
        mean_time: p.mean_time,
        levels,
    })
}

pub fn render_profile(report: &ProfileReport, format: OutputFormat) -> Result<String> {
    let phase = |p: Phase| match p {
        Phase::Blue => "blue",
        Phase::White => "white",
        Phase::Final => "final",
    };
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => write_csv(
            &["phase", "k", "mean_steps", "bound"],
            report
                .levels
                .iter()
                .map(|l| vec![phase(l.phase).into(), l.k.to_string(), l.mean_steps.to_string(), opt_field(l.bound)]),
        ),
        OutputFormat::Table => {
            let mut out = format!(
                "{}  rule={}  start={}  trials={}  mean={}\nphase   k   mean_steps   bound\n",
                report.graph,
                report.rule,
                report.start,
                report.trials,
                two_decimals(report.mean_time)
            );
            for l in &report.levels {
                out += &format!(
                    "{:<6} {:>2} {:>12.4} {:>7}\n",
                    phase(l.phase),
                    l.k,
                    l.mean_steps,
                    l.bound.map(two_decimals).unwrap_or_default()
                );
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub graph: String,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub diameter: Option<usize>,
    pub bounds: Vec<BoundReport>,
}

/// Every closed-form bound that applies to the graph; `t` selects the star
/// tail horizon.
pub fn bounds_for(spec: &GraphFamilySpec, t: Option<u64>) -> Result<BoundsReport> {
    let g = make_named_graph(spec)?;
    let mut out = Vec::new();
    match *spec {
        GraphFamilySpec::Grid { m, n } => {
            let (lo, hi) = bounds::grid_bounds(m, n)?;
            out.extend([lo, hi]);
        }
        GraphFamilySpec::Hypercube(dim) => {
            out.push(bounds::hypercube_upper_bound(dim)?);
            for k in 0..(dim as usize).saturating_sub(1) {
                let mut b = bounds::hypercube_level_bound(dim, k)?;
                b.name = format!("hypercube_level_{k}");
                out.push(b);
            }
        }
        GraphFamilySpec::Star(leaves) => {
            if let Some(t) = t {
                out.push(bounds::star_tail_bound(leaves, t));
            }
        }
        _ => {}
    }
    if let Some(d) = g.regular_degree().filter(|&d| d >= 1) {
        out.push(bounds::diameter_bound(g.n_vertices(), d)?);
        if d >= 2 && g.n_vertices() > d {
            out.push(bounds::regular_upper_bound(g.n_vertices(), d)?);
        }
    }
    Ok(BoundsReport {
        graph: spec.to_string(),
        n_vertices: g.n_vertices(),
        n_edges: g.n_edges(),
        diameter: diameter(&g),
        bounds: out,
    })
}

pub fn render_bounds(report: &BoundsReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => write_csv(
            &["graph", "name", "value", "applicable", "asymptotic", "applicability"],
            report.bounds.iter().map(|b| {
                vec![
                    report.graph.clone(),
                    b.name.clone(),
                    b.value.to_string(),
                    b.applicable.to_string(),
                    b.asymptotic.to_string(),
                    b.applicability.clone(),
                ]
            }),
        ),
        OutputFormat::Table => {
            let mut out = format!(
                "{}  vertices={}  edges={}  diameter={}\n",
                report.graph,
                report.n_vertices,
                report.n_edges,
                report.diameter.map_or("inf".to_string(), |d| d.to_string())
            );
            for b in &report.bounds {
                let mut flags = Vec::new();
                if b.asymptotic {
                    flags.push("asymptotic");
                }
                if !b.applicable {
                    flags.push("not applicable");
                }
                out += &format!("{:<20} {:>14.6}  [{}] {}\n", b.name, b.value, b.applicability, flags.join(", "));
            }
            Ok(out)
        }
    }
}
