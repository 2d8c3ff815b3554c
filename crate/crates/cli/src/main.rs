use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use hfz2::analysis::{self, AnalysisError};
use hfz2::braid::build_marked_diagram_with;
use hfz2::oracle::{self, OracleError};
use hfz2::pipeline::PipelineError;
use hfz2::{BraidWord, Computation, Config, DimTable, Marking};

#[derive(Parser, Debug)]
#[command(name = "hfz2", version, about = "Z2 HOMFLYPT, E2 and Khovanov homology of closed braids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Braid word "b;g1,g2,..." (σ_k as k, inverse as -k).
    #[arg(long, global = true, default_value = "1;")]
    braid: String,
    /// Largest T; tables cover x-degrees 2T ≤ 2·cutoff.
    #[arg(long, global = true, default_value_t = 6)]
    cutoff: i32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, env = "HFZ2_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    /// Largest slice dimension before giving up.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    max_slice_dim: usize,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Which of the two χ-map presentations to use.
    #[arg(long, global = true, default_value_t = 0)]
    variant: usize,
    #[arg(long, global = true, value_enum, default_value_t = MarkingArg::PerArc)]
    marking: MarkingArg,
    /// Dump the marked diagram to stderr.
    #[arg(long, global = true)]
    emit_diagram: bool,
    /// Dump the assembled complex to stderr.
    #[arg(long, global = true)]
    emit_spec: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// HOMFLYPT homology tables (normalized and hat).
    Homfly,
    /// E2 page of the spectral sequence.
    E2,
    /// Khovanov homology.
    Khovanov {
        /// Largest |q|; defaults to the state-sum support bound.
        #[arg(long)]
        q_max: Option<i32>,
    },
    /// Hilbert polynomials of the rows and inferred component count.
    Hilbert,
    /// Compare the homfly table with the unlink pattern.
    DetectUnlink {
        /// Component count to test; defaults to the braid's.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Compare the Euler series of the hat table with the skein oracle.
    EulerCheck,
    /// HOMFLYPT series from the skein oracle.
    Skein,
    /// Jones polynomial from the state sum.
    Jones,
    /// Check d₋h + hd₋ = x² on E1 for one or all components (1-based).
    VerifyHomotopy {
        #[arg(long)]
        component: Option<usize>,
    },
    /// Compare homfly tables over conjugates and stabilizations.
    MarkovCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MarkingArg {
    PerArc,
    Endpoints,
}

impl From<MarkingArg> for Marking {
    fn from(m: MarkingArg) -> Self {
        match m {
            MarkingArg::PerArc => Marking::PerArc,
            MarkingArg::Endpoints => Marking::Endpoints,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Pipeline(PipelineError::Resource(_)) => 2,
            CliError::Pipeline(PipelineError::Braid(_) | PipelineError::Cutoff { .. }) => 1,
            CliError::Oracle(OracleError::TooManyCrossings { .. } | OracleError::Budget(_)) => 2,
            CliError::Oracle(OracleError::Truncation) => 1,
            CliError::Analysis(AnalysisError::BadComponentCount) => 1,
            _ => 3,
        }
    }
}

/// Everything a command produces.
#[derive(Default)]
struct Output {
    tables: Vec<DimTable>,
    reports: BTreeMap<String, Value>,
    /// Set when the output itself certifies a violated invariant.
    violation: Option<String>,
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
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let c = &cli.common;
    if c.cutoff < 0 {
        return Err(CliError::Usage("--cutoff must be nonnegative".into()));
    }
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if c.variant > 1 {
        return Err(CliError::Usage("--variant must be 0 or 1".into()));
    }
    let word: BraidWord = c
        .braid
        .parse()
        .map_err(|e| CliError::Usage(format!("bad braid {:?}: {e}", c.braid)))?;
    let config = Config {
        variant: c.variant,
        marking: c.marking.into(),
        max_slice_dim: c.max_slice_dim,
        cache_dir: if c.no_cache { None } else { c.cache_dir.clone() },
    };
    if c.emit_diagram {
        let d = build_marked_diagram_with(&word, config.marking);
        eprintln!("{}", serde_json::to_string_pretty(&d).expect("diagram serializes"));
    }
    if c.emit_spec {
        let comp = Computation::new(&word, &config)?;
        eprintln!("{}", comp.spec.serialize_json());
    }
    let out = execute(&cli.command, &word, &config, c.cutoff)?;
    let text = render(c.format, &word, &config, c.cutoff, &out);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    let _ = stdout.flush();
    if let Some(v) = out.violation {
        eprintln!("invariant violated: {v}");
        return Ok(3);
    }
    Ok(0)
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn execute(cmd: &Command, word: &BraidWord, config: &Config, cutoff: i32) -> Result<Output, CliError> {
    let mut out = Output::default();
    match cmd {
        Command::Homfly => {
            let (t, hat) = Computation::new(word, config)?.homfly_tables(cutoff)?;
            out.tables = vec![t, hat];
        }
        Command::E2 => {
            out.tables = vec![Computation::new(word, config)?.e2_table(cutoff)?];
        }
        Command::Khovanov { q_max } => {
            out.tables = vec![Computation::new(word, config)?.khovanov_table(*q_max)?];
        }
        Command::Hilbert => {
            let (t, _) = Computation::new(word, config)?.homfly_tables(cutoff)?;
            let report = analysis::hilbert_p_b(&t, word)?;
            out.reports.insert("hilbert".into(), to_json(&report));
            out.reports
                .insert("polynomial".into(), Value::String(report.polynomial.to_string()));
        }
        Command::DetectUnlink { m } => {
            let m = m.unwrap_or_else(|| word.components());
            let (t, _) = Computation::new(word, config)?.homfly_tables(cutoff)?;
            let report = analysis::detect_unlink(&t, m, 2 * cutoff)?;
            out.reports.insert("detection".into(), to_json(&report));
        }
        Command::EulerCheck => {
            let (_, hat) = Computation::new(word, config)?.homfly_tables(cutoff)?;
            let euler = analysis::euler_series(&hat, 2 * cutoff)?;
            let skein = oracle::homfly_series(word, 2 * cutoff)?;
            let mismatch: Vec<Value> = euler
                .coeffs
                .keys()
                .chain(skein.coeffs.keys())
                .filter(|&&(a, x)| euler.coeff(a, x) != skein.coeff(a, x))
                .map(|&(a, x)| json!({"a": a, "x": x, "euler": euler.coeff(a, x), "skein": skein.coeff(a, x)}))
                .collect();
            let equal = mismatch.is_empty();
            out.reports.insert(
                "euler_check".into(),
                json!({"equal": equal, "truncation": 2 * cutoff, "mismatches": mismatch, "series": euler.to_string()}),
            );
            if !equal {
                out.violation = Some("Euler series differs from the skein oracle".into());
            }
        }
        Command::Skein => {
            let s = oracle::homfly_series(word, 2 * cutoff)?;
            let terms: Vec<Value> = s
                .coeffs
                .iter()
                .map(|(&(a, x), &c)| json!({"a": a, "x": x, "coeff": c}))
                .collect();
            out.reports
                .insert("skein".into(), json!({"truncation": 2 * cutoff, "terms": terms, "series": s.to_string()}));
        }
        Command::Jones => {
            let j = oracle::jones_kauffman(word)?;
            let terms: Vec<Value> = j.iter().map(|(&q, &c)| json!({"q": q, "coeff": c})).collect();
            out.reports.insert("jones".into(), Value::Array(terms));
        }
        Command::VerifyHomotopy { component } => {
            let comps: Vec<usize> = match component {
                Some(0) => return Err(CliError::Usage("components are numbered from 1".into())),
                Some(k) if *k > word.components() => {
                    return Err(CliError::Usage(format!(
                        "component {k} out of range 1..={}",
                        word.components()
                    )))
                }
                Some(k) => vec![k - 1],
                None => (0..word.components()).collect(),
            };
            let mut reports = Vec::new();
            for k in comps {
                let r = Computation::with_homotopy(word, k, config)?.homotopy_report(k, cutoff)?;
                if !r.holds || !r.x_squared_zero_on_e2 {
                    out.violation = Some(format!("homotopy identity fails on component {}", k + 1));
                }
                let mut v = to_json(&r);
                v["component"] = json!(k + 1);
                reports.push(v);
            }
            out.reports.insert("homotopy".into(), Value::Array(reports));
        }
        Command::MarkovCheck => {
            let (base, _) = Computation::new(word, config)?.homfly_tables(cutoff)?;
            let mut results = Vec::new();
            for v in word.markov_variants() {
                let (t, _) = Computation::new(&v, config)?.homfly_tables(cutoff)?;
                let agree = t == base;
                if !agree {
                    out.violation = Some(format!("homfly table of {v} differs"));
                }
                results.push(json!({"variant": v.to_string(), "agree": agree}));
            }
            out.reports.insert("markov".into(), Value::Array(results));
            out.tables = vec![base];
        }
    }
    Ok(out)
}

fn render(format: Format, word: &BraidWord, config: &Config, cutoff: i32, out: &Output) -> String {
    match format {
        Format::Json => {
            let stats = word.closure_stats();
            let tables: serde_json::Map<String, Value> = out
                .tables
                .iter()
                .map(|t| (t.kind.name().to_string(), to_json(&t.rows())))
                .collect();
            let doc = json!({
                "input": {
                    "braid": word.to_string(),
                    "strands": stats.strands,
                    "components": stats.components,
                    "writhe": stats.writhe,
                    "self_linking": stats.self_linking,
                },
                "config": {
                    "cutoff": cutoff,
                    "variant": config.variant,
                    "marking": to_json(&config.marking),
                    "max_slice_dim": config.max_slice_dim,
                },
                "tables": tables,
                "reports": out.reports,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for t in &out.tables {
                let mut header = vec!["table"];
                header.extend(t.kind.axes());
                header.push("dim");
                w.write_record(&header).expect("in-memory write");
                for (k, d) in &t.entries {
                    let mut rec = vec![t.kind.name().to_string()];
                    rec.extend(k.iter().map(|v| v.to_string()));
                    rec.push(d.to_string());
                    w.write_record(&rec).expect("in-memory write");
                }
            }
            if !out.reports.is_empty() {
                w.write_record(["report", "value"]).expect("in-memory write");
                for (name, v) in &out.reports {
                    w.write_record([name.as_str(), &v.to_string()]).expect("in-memory write");
                }
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
        }
        Format::Text => {
            let mut s = String::new();
            for t in &out.tables {
                s.push_str(&format!("{} (cutoff {}, total {})\n", t.kind.name(), t.cutoff, t.total()));
                s.push_str(&format!("  {}  dim\n", t.kind.axes().join("  ")));
                for (k, d) in &t.entries {
                    let cols: Vec<String> = k.iter().map(|v| format!("{v:>3}")).collect();
                    s.push_str(&format!("{}  {d}\n", cols.join("")));
                }
            }
            for (name, v) in &out.reports {
                s.push_str(&format!("{name}: {}\n", serde_json::to_string_pretty(v).expect("report")));
            }
            s
        }
    }
}
