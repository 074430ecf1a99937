//! `vne`: generate scenarios, run online embedding batches, print topology
//! statistics.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vne_core::scenario::{self, gen_pss, IntRange, PssConfig, SliceSpec, SubstrateSpec, ZOO_BW, ZOO_CPU};
use vne_core::sim::{self, BatchJob, RunRow};
use vne_core::{AlgoConfig, Algorithm, GraphStats, RewardKind, Scenario, ScenarioConfig};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser, Debug)]
#[command(name = "vne", version, about = "Online virtual network embedding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scenario file.
    Generate(GenerateArgs),
    /// Run an algorithm over a scenario for several seeds.
    Run(RunArgs),
    /// Print distance and clustering statistics of topologies.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Waxman,
    Er,
    Pss,
    Zoo,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Substrate nodes (waxman, er).
    #[arg(long, default_value_t = 75)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Edge probability (er).
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// PSS index: slice sizes run from 7+i to 10+i.
    #[arg(long = "i", default_value_t = 0)]
    index: u64,
    #[arg(long, default_value_t = 0.93)]
    reuse: f64,
    /// GraphML or edge-list file (zoo).
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Number of slices; defaults to 500, or 100 for pss.
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long, default_value_t = 7)]
    size_min: u64,
    #[arg(long, default_value_t = 13)]
    size_max: u64,
    #[arg(long, default_value_t = 0.02)]
    arrival_rate: f64,
    #[arg(long, default_value_t = 0.005)]
    departure_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Precision {
    F64,
    F32,
}

#[derive(Args, Debug)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long, default_value = "nepa", value_parser = parse_algorithm)]
    algo: Algorithm,
    /// Iterations per level; 5, or 7 for nrpa and nrpa-w.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    level: u32,
    #[arg(long, default_value_t = 2)]
    refine_level: u32,
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Refinement rounds; defaults to the slice size.
    #[arg(long)]
    x: Option<usize>,
    #[arg(long, default_value = "rc", value_parser = parse_reward)]
    reward: RewardKind,
    /// Routing attempts per slice for uct.
    #[arg(long, default_value_t = 445)]
    budget: u64,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    exploration: f64,
    /// Number of seeds, run as seed-base, seed-base+1, ...
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, env = "VNE_JOBS")]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
    /// Per-run results CSV.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Per-slice long-form CSV.
    #[arg(long)]
    slices_csv: Option<PathBuf>,
    /// Replay every run through the feasibility checker.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Scenario JSON, GraphML or edge-list files.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn parse_reward(s: &str) -> Result<RewardKind, String> {
    match s {
        "rc" => Ok(RewardKind::Rc),
        "afbd" => Ok(RewardKind::Afbd),
        _ => Err(format!("unknown reward `{s}` (expected rc or afbd)")),
    }
}

fn generate(a: &GenerateArgs) -> CliResult {
    if a.kind == Kind::Pss {
        let cfg = PssConfig { index: a.index, slices: a.slices.unwrap_or(100), reuse_prob: a.reuse, ..PssConfig::default() };
        eprintln!("# generate pss i={} slices={} reuse={} seed={}", cfg.index, cfg.slices, cfg.reuse_prob, a.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let sc = gen_pss(&cfg, &mut rng).map_err(|e| match e {
            scenario::ScenarioError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::data(other),
        })?;
        return save(&sc, &a.out);
    }
    let (substrate, cpu, bw) = match a.kind {
        Kind::Waxman => (SubstrateSpec::Waxman { nodes: a.n, alpha: a.alpha, beta: a.beta }, IntRange::new(50, 100), IntRange::new(50, 100)),
        Kind::Er => (SubstrateSpec::ErdosRenyi { nodes: a.n, p: a.p }, IntRange::new(50, 100), IntRange::new(50, 100)),
        Kind::Zoo => {
            let path = a.topology.clone().ok_or_else(|| CliError::Usage("zoo needs --topology".into()))?;
            (SubstrateSpec::Topology { path }, ZOO_CPU, ZOO_BW)
        }
        Kind::Pss => unreachable!(),
    };
    let cfg = ScenarioConfig {
        substrate,
        cpu_capacity: cpu,
        bw_capacity: bw,
        slices: SliceSpec {
            count: a.slices.unwrap_or(500),
            size: IntRange::new(a.size_min, a.size_max),
            alpha: a.alpha,
            beta: a.beta,
            ..SliceSpec::default()
        },
        arrival_rate: a.arrival_rate,
        departure_rate: a.departure_rate,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    eprintln!("# generate {}", serde_json::to_string(&cfg).expect("config serializes"));
    let sc = vne_core::generate_scenario(&cfg).map_err(CliError::data)?;
    save(&sc, &a.out)
}

fn save(sc: &Scenario, out: &Path) -> CliResult {
    sc.save(out).map_err(CliError::data)?;
    println!(
        "wrote {}: |V|={} |E|={} slices={}",
        out.display(),
        sc.substrate.node_count(),
        sc.substrate.edge_count(),
        sc.requests.len()
    );
    Ok(())
}

fn algo_config(a: &RunArgs) -> AlgoConfig {
    let mut cfg = AlgoConfig::new(a.algo);
    if let Some(n) = a.n {
        cfg.iterations = n;
    }
    cfg.level = a.level;
    cfg.refine.level = a.refine_level;
    cfg.refine.k = a.k;
    cfg.refine.x = a.x;
    cfg.reward = a.reward;
    cfg.uct.budget = a.budget;
    cfg.uct.exploration = a.exploration;
    cfg.uct.reward = a.reward;
    cfg
}

fn fmt_interval(iv: &sim::Interval) -> String {
    match iv.half_width {
        Some(h) => format!("{:.4} ± {:.4}", iv.mean, h),
        None => format!("{:.4}", iv.mean),
    }
}

fn run(a: &RunArgs) -> CliResult {
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if a.n == Some(0) || a.budget == 0 || a.k == 0 {
        return Err(CliError::Usage("--n, --budget and --k must be positive".into()));
    }
    if let Some(j) = a.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let sc = Scenario::load(&a.scenario).map_err(CliError::data)?;
    let cfg = algo_config(a);
    let seeds: Vec<u64> = (a.seed_base..a.seed_base + a.seeds).collect();
    eprintln!(
        "# run scenario={} {} seeds={}..={} precision={:?} jobs={}",
        a.scenario.display(),
        cfg.describe(),
        seeds[0],
        seeds[seeds.len() - 1],
        a.precision,
        a.jobs.map_or("auto".to_string(), |j| j.to_string())
    );
    let jobs = [BatchJob { label: a.algo.to_string(), config: cfg }];
    let runs = match a.precision {
        Precision::F64 => sim::run_batch::<f64>(&sc, &jobs, &seeds),
        Precision::F32 => sim::run_batch::<f32>(&sc, &jobs, &seeds),
    }
    .map_err(CliError::data)?;

    if a.check {
        for (label, seed, rep) in &runs {
            let v = sim::feasibility_oracle(&sc.substrate, &sc.requests, rep);
            if !v.is_empty() {
                return Err(CliError::Data(format!("{label} seed {seed}: {} violations, first: {}", v.len(), v[0])));
            }
        }
        eprintln!("# feasibility check passed for {} runs", runs.len());
    }

    let rows: Vec<RunRow> = runs.iter().map(|(l, s, r)| RunRow::new(l, *s, r)).collect();
    match &a.out {
        Some(p) => sim::write_runs_csv(create(p)?, &rows),
        None => sim::write_runs_csv(io::stdout().lock(), &rows),
    }
    .map_err(CliError::data)?;
    if let Some(p) = &a.slices_csv {
        sim::write_slices_csv(create(p)?, &runs).map_err(CliError::data)?;
    }

    let mut err = io::stderr().lock();
    let _ = writeln!(err, "{:<8} {:>5} {:>20} {:>20} {:>20} {:>12}", "config", "runs", "acceptance", "rtc_sum", "rtc_mean", "ms/slice");
    for s in sim::summarize(&rows) {
        let _ = writeln!(
            err,
            "{:<8} {:>5} {:>20} {:>20} {:>20} {:>12.2}",
            s.config,
            s.runs,
            fmt_interval(&s.acceptance),
            fmt_interval(&s.rtc_sum),
            fmt_interval(&s.rtc_mean),
            s.ms_per_slice.mean
        );
    }
    Ok(())
}

fn create(p: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(p).map(BufWriter::new).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
}

fn stats_of(path: &Path) -> Result<(usize, usize, GraphStats), CliError> {
    let wrap = |e: &dyn std::fmt::Display| CliError::Data(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let sc = Scenario::load(path).map_err(|e| wrap(&e))?;
        let g = sc.substrate.graph_stats().map_err(|e| wrap(&e))?;
        Ok((sc.substrate.node_count(), sc.substrate.edge_count(), g))
    } else {
        let t = scenario::load_topology(path).map_err(|e| wrap(&e))?;
        let g = t.stats().map_err(|e| wrap(&e))?;
        Ok((t.node_count(), t.edge_count(), g))
    }
}

fn stats(a: &StatsArgs) -> CliResult {
    let mut rows = Vec::new();
    for p in &a.paths {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        let (n, m, g) = stats_of(p)?;
        rows.push((name, n, m, g));
    }
    println!("{:<20} {:>6} {:>6} {:>10} {:>9} {:>8} {:>11}", "topology", "nodes", "edges", "mean_dist", "diameter", "stddev", "clustering");
    for (name, n, m, g) in &rows {
        println!(
            "{:<20} {:>6} {:>6} {:>10.2} {:>9} {:>8.2} {:>11.3}",
            name, n, m, g.mean_distance, g.diameter, g.distance_stddev, g.clustering_coefficient
        );
    }
    if let Some(p) = &a.csv {
        let mut w = create(p)?;
        let mut put = || -> io::Result<()> {
            writeln!(w, "topology,nodes,edges,mean_distance,diameter,distance_stddev,clustering")?;
            for (name, n, m, g) in &rows {
                writeln!(
                    w,
                    "{name},{n},{m},{},{},{},{}",
                    g.mean_distance, g.diameter, g.distance_stddev, g.clustering_coefficient
                )?;
            }
            w.flush()
        };
        put().map_err(CliError::data)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Stats(a) => stats(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
