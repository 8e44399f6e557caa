//! Command-line front end: generate, factorize, verify, query, rewrite,
//! tables, bench and stats.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ssnfact::bench::{self, BenchOptions, CacheMode, GeneratorConfig};
use ssnfact::factorize::{factorize, verify_factorized, FactorizationState};
use ssnfact::rdf::{parse_ntriples, serialize_ntriples, stats, Graph};
use ssnfact::rewrite::{check_structure, hazards, rewrite_query};
use ssnfact::sparql::{parse_query, Evaluator, SolutionSet};
use ssnfact::ssn::Vocabulary;
use ssnfact::tabular::{self, TableSet};

#[derive(Parser, Debug)]
#[command(name = "ssnfact", version, about = "Factorize SSN sensor graphs and query them")]
struct Cli {
    /// Seed for generated data.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// JSON vocabulary file overriding the default IRIs.
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    /// Per-query timeout in seconds.
    #[arg(long = "timeout-s", global = true, default_value_t = 6000.0)]
    timeout_s: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic graph; prints its ground truth as JSON.
    Generate(GenerateArgs),
    /// Factorize a graph; prints the factorization report as JSON.
    Factorize {
        #[arg(long)]
        graph: PathBuf,
        /// State of an earlier run to extend.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the state sidecar (default: `<out>.state.json`).
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Check a factorized graph against its original; exits 1 on failure.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Also check loss-less joins and dependencies of the table layouts.
        #[arg(long)]
        tables: bool,
    },
    /// Evaluate a query; writes a TSV result table.
    Query {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a query for the factorized graph.
    Rewrite {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the structure report as JSON on stderr.
        #[arg(long)]
        report: bool,
    },
    /// Export a table layout as CSV files.
    Tables {
        #[arg(long)]
        graph: PathBuf,
        /// Factorized graph; computed from `--graph` when absent.
        #[arg(long, requires = "mapping")]
        factorized: Option<PathBuf>,
        /// State sidecar holding the entity mapping.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: TableMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time a query suite over a graph and its factorization.
    Bench(BenchArgs),
    /// Print triple count, node count and average neighbours as JSON.
    Stats {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// JSON generator config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    procedures: Option<usize>,
    /// Number of phenomena taken from the built-in list.
    #[arg(long)]
    phenomena: Option<usize>,
    #[arg(long)]
    domain: Option<usize>,
    #[arg(long)]
    zipf: Option<f64>,
    #[arg(long)]
    type_instants: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Graph to benchmark; a generated graph is used when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    generate: BenchGenerate,
    /// Directory of `.rq` files (default: the shipped suite).
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, value_enum, default_value_t = Cache::Warm)]
    cache: Cache,
    /// Also time the values-by-procedure plan on the table layouts.
    #[arg(long)]
    tables: bool,
    /// Directory for report.json, metrics.tsv, queries.tsv and tables.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchGenerate {
    #[arg(long = "gen-n", default_value_t = 5000)]
    n: usize,
    #[arg(long = "gen-procedures", default_value_t = 2)]
    procedures: usize,
    #[arg(long = "gen-phenomena", default_value_t = 2)]
    phenomena: usize,
    #[arg(long = "gen-domain", default_value_t = 100)]
    domain: usize,
    #[arg(long = "gen-zipf", default_value_t = 0.0)]
    zipf: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableMode {
    Universal,
    Factorized,
    Ct,
    Fct,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cache {
    Warm,
    Cold,
}

fn load_vocab(path: &Option<PathBuf>) -> Result<Vocabulary> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Vocabulary::from_json(&text)?)
        }
        None => Ok(Vocabulary::default()),
    }
}

fn read_graph(path: &Path) -> Result<Graph> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_ntriples(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_graph(g: &Graph, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serialize_ntriples(g, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes to stdout; a closed pipe on the reading side is not an error.
fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_or_print(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => emit(text),
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    emit(&format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn generator_config(args: &GenerateArgs, seed: u64) -> Result<GeneratorConfig> {
    let mut cfg = match &args.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => GeneratorConfig {
            seed,
            ..GeneratorConfig::default()
        },
    };
    if let Some(n) = args.n {
        cfg.n_observations = n;
    }
    if let Some(p) = args.procedures {
        cfg.n_procedures = p;
    }
    if let Some(k) = args.phenomena {
        let all = bench::default_phenomena();
        if k > all.len() {
            bail!("at most {} built-in phenomena", all.len());
        }
        cfg.phenomena = all[..k].to_vec();
    }
    if let Some(d) = args.domain {
        cfg.value_domain_size = d;
    }
    if let Some(z) = args.zipf {
        cfg.zipf_exponent = z;
    }
    cfg.type_instants |= args.type_instants;
    Ok(cfg)
}

fn state_path(out: &Path, state: &Option<PathBuf>) -> PathBuf {
    state.clone().unwrap_or_else(|| {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".state.json");
        out.with_file_name(name)
    })
}

/// Path of `target` relative to the directory of `base` when possible.
fn relative_to(base: &Path, target: &Path) -> PathBuf {
    let dir = base.parent().unwrap_or(Path::new(""));
    match (dir.canonicalize(), target.canonicalize()) {
        (Ok(d), Ok(t)) => t.strip_prefix(&d).map(Path::to_path_buf).unwrap_or(t),
        _ => target.to_path_buf(),
    }
}

/// Rows in canonical order unless the query fixes an order.
fn canonical(mut s: SolutionSet, ordered: bool) -> SolutionSet {
    if !ordered {
        s.rows = s.sorted_rows();
    }
    s
}

fn build_tables(mode: TableMode, g: &Graph, f: Option<(&Graph, &FactorizationState)>, v: &Vocabulary) -> Result<TableSet> {
    let factorized = || f.context("this layout needs a factorization");
    Ok(match mode {
        TableMode::Universal => tabular::build_universal(g, v),
        TableMode::Ct => tabular::build_ct_tables(g, v),
        TableMode::Factorized => {
            let (gp, st) = factorized()?;
            tabular::build_factorized_tables(gp, &st.mapping, v)?
        }
        TableMode::Fct => {
            let (gp, st) = factorized()?;
            tabular::build_factorized_ct_tables(gp, &st.mapping, v)?
        }
    })
}

fn run(cli: Cli) -> Result<bool> {
    let v = load_vocab(&cli.vocab)?;
    let timeout = Duration::from_secs_f64(cli.timeout_s.max(0.0));
    match cli.command {
        Command::Generate(args) => {
            let cfg = generator_config(&args, cli.seed)?;
            let generated = bench::generate(&cfg, &v)?;
            write_graph(&generated.graph, &args.out)?;
            print_json(&json!({
                "config": cfg,
                "truth": generated.truth,
                "factorized_triples": generated.truth.factorized_triples(cfg.type_instants),
            }))?;
        }
        Command::Factorize { graph, prior, out, state } => {
            let g = read_graph(&graph)?;
            let prior_state = match &prior {
                Some(p) => FactorizationState::load(p)?,
                None => FactorizationState::default(),
            };
            let f = factorize(&g, &prior_state, &v)?;
            write_graph(f.graph(), &out)?;
            let state_out = state_path(&out, &state);
            let file = f.state.to_state_file(Some(relative_to(&state_out, &out)));
            fs::write(&state_out, serde_json::to_string_pretty(&file)?)?;
            log::info!("state written to {}", state_out.display());
            print_json(&f.report)?;
        }
        Command::Verify { graph, state, tables } => {
            let g = read_graph(&graph)?;
            let st = FactorizationState::load(&state)?;
            let report = verify_factorized(&g, &st.factorized, &st.mapping, &v);
            let mut ok = report.all_passed();
            let mut out = json!({ "factorization": report });
            if tables {
                let u = tabular::build_universal(&g, &v);
                let ft = tabular::build_factorized_tables(&st.factorized, &st.mapping, &v)?;
                let ct = tabular::build_ct_tables(&g, &v);
                let fct = tabular::build_factorized_ct_tables(&st.factorized, &st.mapping, &v)?;
                let lossless = tabular::verify_lossless(&u, &ft);
                let lossless_ct = tabular::verify_lossless_ct(&ct, &fct);
                let fds = tabular::check_fds(&ft, &tabular::factorized_fds());
                ok &= lossless.holds() && lossless_ct.holds() && fds.all_hold();
                out["lossless"] = serde_json::to_value(&lossless)?;
                out["lossless_ct"] = serde_json::to_value(&lossless_ct)?;
                out["dependencies"] = serde_json::to_value(&fds)?;
            }
            out["passed"] = json!(ok);
            print_json(&out)?;
            return Ok(ok);
        }
        Command::Query { graph, query, out } => {
            let g = read_graph(&graph)?;
            let q = parse_query(&fs::read_to_string(&query)?).with_context(|| format!("parsing {}", query.display()))?;
            let result = Evaluator::with_timeout(&g, timeout).run(&q)?;
            write_or_print(&canonical(result, !q.order_by.is_empty()).to_tsv(), &out)?;
        }
        Command::Rewrite { query, out, report } => {
            let q = parse_query(&fs::read_to_string(&query)?).with_context(|| format!("parsing {}", query.display()))?;
            let qp = rewrite_query(&q, &v);
            for h in hazards(&q, &v) {
                log::warn!("{h}");
            }
            write_or_print(&format!("{qp}\n"), &out)?;
            if report {
                eprintln!("{}", serde_json::to_string_pretty(&check_structure(&q, &qp, &v))?);
            }
        }
        Command::Tables { graph, factorized, mapping, mode, out } => {
            let g = read_graph(&graph)?;
            let st = match (&factorized, &mapping) {
                (Some(fp), Some(mp)) => {
                    let mut st = FactorizationState::load(mp)?;
                    st.factorized = read_graph(fp)?;
                    Some(st)
                }
                (None, Some(mp)) => Some(FactorizationState::load(mp)?),
                _ if matches!(mode, TableMode::Factorized | TableMode::Fct) => {
                    Some(factorize(&g, &FactorizationState::default(), &v)?.state)
                }
                _ => None,
            };
            let ts = build_tables(mode, &g, st.as_ref().map(|s| (&s.factorized, s)), &v)?;
            let paths = tabular::write_table_set(&ts, &out)?;
            let relations: serde_json::Map<String, serde_json::Value> =
                ts.relations.iter().map(|(n, r)| (n.clone(), json!(r.len()))).collect();
            print_json(&json!({
                "layout": ts.kind.label(),
                "relations": relations,
                "files": paths,
                "omitted": ts.omitted.len(),
            }))?;
        }
        Command::Bench(args) => {
            let g = match &args.graph {
                Some(p) => read_graph(p)?,
                None => {
                    let all = bench::default_phenomena();
                    let cfg = GeneratorConfig {
                        n_observations: args.generate.n,
                        n_procedures: args.generate.procedures,
                        phenomena: all[..args.generate.phenomena.min(all.len())].to_vec(),
                        value_domain_size: args.generate.domain,
                        zipf_exponent: args.generate.zipf,
                        seed: cli.seed,
                        ..GeneratorConfig::default()
                    };
                    bench::generate(&cfg, &v)?.graph
                }
            };
            let suite = match &args.queries {
                Some(dir) => bench::load_suite(dir)?,
                None => bench::shipped_suite(),
            };
            let opts = BenchOptions {
                repetitions: args.repetitions,
                cache: match args.cache {
                    Cache::Warm => CacheMode::Warm,
                    Cache::Cold => CacheMode::Cold,
                },
                timeout,
                tables: args.tables,
            };
            let report = bench::bench(&g, &suite, &v, &opts)?;
            if let Some(dir) = &args.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
                fs::write(dir.join("metrics.tsv"), report.metrics.to_tsv())?;
                fs::write(dir.join("queries.tsv"), report.queries_tsv())?;
                fs::write(dir.join("tables.tsv"), report.tables_tsv())?;
            }
            emit(&format!("{}{}", report.summary(), report.queries_tsv()))?;
            return Ok(report.all_equivalent());
        }
        Command::Stats { graph } => print_json(&stats(&read_graph(&graph)?))?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
