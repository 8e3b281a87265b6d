use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pathcode::codec::{encode_path, pack, simulate, unpack, EncodedPath, PortLabels, SwitchTable};
use pathcode::exact::ExactConfig;
use pathcode::generate::{random_path_union, spine};
use pathcode::pipeline::{run, PipelineConfig, PipelineError, RunReport};
use pathcode::satgen::{build_gadget, parse_dimacs};
use pathcode::topology::{
    parse_graph, parse_topology, serialize_topology, shortest_path_set, ProblemInstance,
};

/// Worst-case-optimal port labels for source-routed networks.
#[derive(Parser)]
#[command(name = "pathcode", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute label lengths and port labels for a topology file.
    Optimize(OptimizeArgs),
    /// Concatenate port labels along a route into a packet header.
    Encode(EncodeArgs),
    /// Forward a packed header through the switches until delivery.
    Simulate(SimulateArgs),
    /// Optimize every .topo file in a directory and tabulate the results.
    Bench(BenchArgs),
    /// Emit a generated topology file.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Initial gradient step size.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Iteration budget for the relaxation.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Relative objective-change convergence threshold.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Slack when rounding real lengths up to integers.
    #[arg(long, default_value_t = 1e-6)]
    snap_eps: f64,
    /// Skip the single-bit tightening pass.
    #[arg(long)]
    no_local_search: bool,
}

impl SolverFlags {
    fn pipeline_config(&self, oracle: bool) -> PipelineConfig<f64> {
        let mut config = PipelineConfig::<f64>::default();
        config.solver.gamma = self.gamma;
        config.solver.max_iters = self.max_iters;
        config.solver.tol = self.tol;
        config.snap_eps = self.snap_eps;
        config.local_search = !self.no_local_search;
        config.oracle = oracle.then(ExactConfig::default);
        config
    }
}

#[derive(Args)]
struct OptimizeArgs {
    /// Topology file.
    topology: PathBuf,
    /// Ignore declared routes and use hop-count shortest paths between all
    /// ordered vertex pairs.
    #[arg(long)]
    shortest_paths: bool,
    /// Also compute the exact optimum by branch and bound (small inputs).
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    format: TextOrJson,
    /// Write the per-vertex port labels as JSON.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Port-label JSON produced by `optimize --labels-out`.
    #[arg(long)]
    labels: PathBuf,
    /// Comma-separated vertex names, source first.
    #[arg(long)]
    route: String,
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    format: TextOrJson,
}

#[derive(Args)]
struct SimulateArgs {
    /// Port-label JSON produced by `optimize --labels-out`.
    #[arg(long)]
    labels: PathBuf,
    /// Vertex the packet starts at.
    #[arg(long)]
    start: String,
    /// Packed header, lowercase or uppercase hex.
    #[arg(long)]
    packet: String,
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    format: TextOrJson,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory containing .topo files.
    dir: PathBuf,
    /// Derive hop-count shortest paths instead of reading declared routes.
    #[arg(long)]
    shortest_paths: bool,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, value_enum, default_value_t = TextOrCsv::Text)]
    format: TextOrCsv,
}

#[derive(Args)]
struct GenArgs {
    /// Build the hardness gadget for a DIMACS CNF file (clauses of size 2
    /// and 3, at most three occurrences per variable).
    #[arg(long, conflicts_with_all = ["random", "spine"])]
    sat: Option<PathBuf>,
    /// Sample a random instance whose arcs all carry traffic.
    #[arg(long, conflicts_with = "spine")]
    random: bool,
    /// Build the chain-with-leaves family of the given depth.
    #[arg(long)]
    spine: Option<usize>,
    /// Vertex budget for --random.
    #[arg(long, default_value_t = 7)]
    vertices: usize,
    /// Out-degree budget for --random.
    #[arg(long, default_value_t = 4)]
    out_degree: usize,
    /// Path budget for --random.
    #[arg(long, default_value_t = 8)]
    paths: usize,
    /// Random seed for --random.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TextOrCsv {
    Text,
    Csv,
}

/// Exit code 2: the input was unusable. Exit code 3: the input was fine
/// but the computation broke an internal guarantee.
enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path, shortest: bool) -> CliResult<ProblemInstance> {
    let text = read_file(path)?;
    if shortest {
        let (graph, _) = parse_graph(&text).map_err(CliError::input)?;
        let paths = shortest_path_set(&graph);
        ProblemInstance::new(graph, paths).map_err(CliError::input)
    } else {
        parse_topology(&text).map_err(CliError::input)
    }
}

fn run_pipeline(
    instance: &ProblemInstance,
    config: &PipelineConfig<f64>,
) -> CliResult<pathcode::pipeline::PipelineOutput<f64>> {
    run(instance, config).map_err(|e| match e {
        // Refusing an over-sized exact solve is an input-scale problem.
        PipelineError::Oracle(inner) => CliError::Input(inner.to_string()),
        PipelineError::Label(inner) => CliError::Internal(inner.to_string()),
    })
}

fn load_table(path: &Path) -> CliResult<SwitchTable> {
    let text = read_file(path)?;
    let labels: PortLabels =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    SwitchTable::new(&labels).map_err(CliError::input)
}

fn print_report_text(r: &RunReport) {
    println!("vertices  {}", r.vertices);
    println!("arcs      {}", r.arcs);
    println!("paths     {}", r.paths);
    println!("fixed     {} bits", r.fixed_bits);
    println!(
        "relaxed   {:.4} bits  ({}, {} iterations)",
        r.relaxed_bits, r.termination, r.iterations
    );
    match r.rounded_bits {
        Some(b) => println!("rounded   {b} bits"),
        None => println!("rounded   - (some arcs lost all mass; completed below)"),
    }
    if let Some(b) = r.tightened_bits {
        println!("tightened {b} bits");
    }
    println!("variable  {} bits", r.variable_bits);
    if let Some(b) = r.exact_bits {
        println!("exact     {b} bits");
    }
    if r.used_fixed_fallback {
        println!("note: variable labeling was worse; emitted uniform widths instead");
    }
    if r.ambiguous_paths > 0 {
        println!(
            "note: {} path(s) end where a zero-bit label continues; a decoder \
             cannot distinguish them from longer routes",
            r.ambiguous_paths
        );
    }
}

fn cmd_optimize(args: OptimizeArgs) -> CliResult {
    let instance = load_instance(&args.topology, args.shortest_paths)?;
    let config = args.solver.pipeline_config(args.oracle);
    let out = run_pipeline(&instance, &config)?;
    if let Some(path) = &args.labels_out {
        let json = serde_json::to_string_pretty(&out.labels)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(path, json).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    match args.format {
        TextOrJson::Text => print_report_text(&out.report),
        TextOrJson::Json => println!(
            "{}",
            serde_json::to_string_pretty(&out.report).map_err(|e| CliError::Internal(e.to_string()))?
        ),
    }
    Ok(())
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn from_hex(s: &str) -> CliResult<Vec<u8>> {
    let s = s.trim();
    if !s.len().is_multiple_of(2) || !s.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(CliError::Input(format!("not a hex string: {s:?}")));
    }
    Ok((0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).expect("checked hex digits"))
        .collect())
}

fn cmd_encode(args: EncodeArgs) -> CliResult {
    let table = load_table(&args.labels)?;
    let route: Vec<String> = args
        .route
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if route.len() < 2 {
        return Err(CliError::Input("a route needs at least two vertices".into()));
    }
    let packet = encode_path(&table, &route).map_err(CliError::input)?;
    let bytes = pack(&packet).map_err(CliError::input)?;
    match args.format {
        TextOrJson::Text => {
            println!("bits   {}", packet.bit_string());
            println!("length {} bits", packet.bits.len());
            println!("packet {}", to_hex(&bytes));
        }
        TextOrJson::Json => println!(
            "{}",
            serde_json::json!({
                "bits": packet.bit_string(),
                "bit_len": packet.bits.len(),
                "packet": to_hex(&bytes),
            })
        ),
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let table = load_table(&args.labels)?;
    let bytes = from_hex(&args.packet)?;
    let mut packet: EncodedPath = unpack(&bytes).map_err(CliError::input)?;
    let route = simulate(&table, &args.start, &mut packet).map_err(CliError::input)?;
    match args.format {
        TextOrJson::Text => {
            println!("route     {}", route.join(" "));
            println!("delivered {}", route.last().expect("routes are nonempty"));
        }
        TextOrJson::Json => println!(
            "{}",
            serde_json::json!({
                "route": route,
                "delivered": route.last(),
            })
        ),
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    let entries = fs::read_dir(&args.dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "topo"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "no .topo files in {}",
            args.dir.display()
        )));
    }

    let config = args.solver.pipeline_config(false);
    let mut rows: Vec<(String, RunReport)> = Vec::new();
    for file in &files {
        let name = file
            .file_name()
            .expect("read_dir yields named files")
            .to_string_lossy()
            .into_owned();
        let report = load_instance(file, args.shortest_paths)
            .and_then(|instance| run_pipeline(&instance, &config))
            .map(|out| out.report);
        match report {
            Ok(r) => rows.push((name, r)),
            Err(CliError::Input(msg)) | Err(CliError::Internal(msg)) => {
                eprintln!("skipping {name}: {msg}");
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Input("every input failed".into()));
    }

    match args.format {
        TextOrCsv::Csv => {
            println!("file,nodes,arcs,paths,fixed,variable");
            for (name, r) in &rows {
                println!(
                    "{name},{},{},{},{},{}",
                    r.vertices, r.arcs, r.paths, r.fixed_bits, r.variable_bits
                );
            }
        }
        TextOrCsv::Text => {
            let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(4).max(4);
            println!(
                "{:width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>8}",
                "file", "nodes", "arcs", "paths", "fixed", "variable"
            );
            for (name, r) in &rows {
                println!(
                    "{name:width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>8}",
                    r.vertices, r.arcs, r.paths, r.fixed_bits, r.variable_bits
                );
            }
        }
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> CliResult {
    let text = if let Some(cnf_path) = &args.sat {
        let cnf = parse_dimacs(&read_file(cnf_path)?).map_err(CliError::input)?;
        let gadget = build_gadget(&cnf).map_err(CliError::input)?;
        for warning in &gadget.warnings {
            eprintln!("warning: {warning}");
        }
        serialize_topology(&gadget.instance)
    } else if args.random {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        if args.vertices < 2 || args.out_degree < 1 || args.paths < 1 {
            return Err(CliError::Input(
                "--random needs --vertices >= 2, --out-degree >= 1, --paths >= 1".into(),
            ));
        }
        let instance = random_path_union(&mut rng, args.vertices, args.out_degree, args.paths);
        serialize_topology(&instance)
    } else if let Some(k) = args.spine {
        if k < 1 {
            return Err(CliError::Input("--spine needs a depth of at least 1".into()));
        }
        serialize_topology(&spine(k))
    } else {
        return Err(CliError::Input(
            "pick one of --sat, --random, or --spine".into(),
        ));
    };
    match &args.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}
