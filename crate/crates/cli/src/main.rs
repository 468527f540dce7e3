use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use mapf_bench::{ablation_horizon, ablation_sre, emit_csv, emit_plot, run_suite, sr_table, ModeName, ModeSpec, SuiteConfig};
use mapf_core::dataset::{load_dataset, save_dataset};
use mapf_core::movingai::{load_map_named, save_map};
use mapf_core::{generate_instance, GridMap};
use mapf_mapgen::{gen_maze, gen_random, gen_warehouse, manifest_csv, osm_to_tiles, BBox, MapTile, RasterConfig, TagRules, WarehouseParams};
use mapf_neural::{load_params, save_params, train_from, Example, ModelConfig, ModelParams, NeuralError, TrainOptions};
use mapf_policy::{run_episode, ModeConfig};
use rayon::prelude::*;

use mapf_cli::expert::{self, ExpertSpec};
use mapf_cli::provenance::Provenance;
use mapf_cli::render::render_frame;
use mapf_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "mapf", version, about = "Learned multi-agent path finding: maps, expert data, training, evaluation")]
struct Cli {
    /// Worker threads for map generation, expert data and evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Where to write the run record (defaults next to the outputs).
    #[arg(long, global = true)]
    provenance: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate .map files from OSM data or a synthetic family.
    Mapgen(MapgenArgs),
    /// Solve random instances with the expert and write a training dataset.
    Expert(ExpertArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Run an evaluation suite.
    Eval(EvalArgs),
    /// Run one episode and print it frame by frame.
    Play(PlayArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["osm", "fetch", "random", "maze", "warehouse"])))]
struct MapgenArgs {
    /// OSM XML export to rasterize.
    #[arg(long)]
    osm: Option<PathBuf>,
    /// Download a bbox `min_lon,min_lat,max_lon,max_lat` from $MAPGEN_OSM_URL.
    #[arg(long)]
    fetch: Option<String>,
    /// Random obstacles on a W×H grid.
    #[arg(long, num_args = 2, value_names = ["W", "H"])]
    random: Option<Vec<usize>>,
    /// Maze on a W×H grid (odd sides).
    #[arg(long, num_args = 2, value_names = ["W", "H"])]
    maze: Option<Vec<usize>>,
    /// Warehouse shelf layout.
    #[arg(long)]
    warehouse: bool,
    /// Meters per cell.
    #[arg(long, default_value_t = 1.0)]
    res: f64,
    /// Tile side in cells.
    #[arg(long, default_value_t = 256)]
    tile: usize,
    /// Morphological kernel radius in cells.
    #[arg(long, default_value_t = 1)]
    kernel: usize,
    /// Majority-filter boundaries after cleanup.
    #[arg(long)]
    smooth: bool,
    /// TOML file overriding the OSM tag rules.
    #[arg(long)]
    tags: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of synthetic maps, seeds `seed..seed+count`.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value = "maps")]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("maps_source").required(true).args(["maps", "empty"])))]
struct ExpertArgs {
    /// Directory of .map files.
    #[arg(long)]
    maps: Option<PathBuf>,
    /// Use a single empty W×H map.
    #[arg(long, num_args = 2, value_names = ["W", "H"])]
    empty: Option<Vec<usize>>,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    min_agents: usize,
    #[arg(long, default_value_t = 4)]
    max_agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit 1 if fewer than this fraction of instances is solved.
    #[arg(long, default_value_t = 0.95)]
    floor: f64,
    #[arg(long, default_value = "dataset.mwds")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Tiny,
    Toy,
    Default,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "params.mwld")]
    out: PathBuf,
    /// Training log CSV (defaults to `<out>.log.csv`).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Toy)]
    preset: Preset,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, value_enum)]
    sre: Option<OnOff>,
    /// Continue training these params; the step count carries over.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Global gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = 1.0)]
    clip: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fast,
    Slow,
    Thinking,
}

impl ModeArg {
    fn spec(self, horizon: usize) -> ModeSpec {
        match self {
            ModeArg::Fast => ModeSpec::fast(),
            ModeArg::Slow => ModeSpec::slow(horizon),
            ModeArg::Thinking => ModeSpec::thinking(horizon),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    params: PathBuf,
    /// Suite config (TOML); defaults to the mazes smoke suite.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Evaluate only this mode instead of the suite's modes.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long = "H", default_value_t = mapf_policy::DEFAULT_HORIZON)]
    horizon: usize,
    /// Sweep these horizons for the suite's Slow/Thinking modes.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Params trained without the spatial encoding, for a paired comparison.
    #[arg(long)]
    without_sre: Option<PathBuf>,
    #[arg(long, default_value = "eval")]
    out: PathBuf,
}

#[derive(Args)]
struct PlayArgs {
    #[arg(long)]
    params: PathBuf,
    /// Map file; defaults to an empty 8×8 grid.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Fast)]
    mode: ModeArg,
    #[arg(long = "H", default_value_t = mapf_policy::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = 128)]
    step_limit: usize,
    /// Color agents with ANSI escape codes.
    #[arg(long)]
    color: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().ok();
    let prov_path = cli.provenance.clone();
    let (name, default_prov) = match &cli.command {
        Command::Mapgen(a) => ("mapgen", a.out.join("provenance.json")),
        Command::Expert(a) => ("expert", sibling(&a.out, "provenance.json")),
        Command::Train(a) => ("train", sibling(&a.out, "provenance.json")),
        Command::Eval(a) => ("eval", a.out.join("provenance.json")),
        Command::Play(_) => ("play", PathBuf::from("play.provenance.json")),
    };
    let mut prov = Provenance::new(name, jobs);
    let result = match cli.command {
        Command::Mapgen(a) => cmd_mapgen(a, &mut prov),
        Command::Expert(a) => cmd_expert(a, &mut prov),
        Command::Train(a) => cmd_train(a, &mut prov),
        Command::Eval(a) => cmd_eval(a, jobs, &mut prov),
        Command::Play(a) => cmd_play(a, &mut prov),
    };
    if !matches!(result, Err(CliError::Usage(_))) {
        prov.write(&prov_path.unwrap_or(default_prov))?;
    }
    result
}

/// `<path>.<suffix>`, e.g. `params.mwld.provenance.json`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn pair(v: &[usize], flag: &str) -> Result<(usize, usize)> {
    match v {
        [w, h] if *w > 0 && *h > 0 => Ok((*w, *h)),
        _ => Err(CliError::Usage(format!("--{flag} needs two positive sides"))),
    }
}

fn read_input(path: &Path, prov: &mut Provenance) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    prov.input(path)?;
    Ok(text)
}

fn parse_bbox(s: &str) -> Result<BBox> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| CliError::Usage(format!("bad bbox '{s}'")))?;
    match v[..] {
        [min_lon, min_lat, max_lon, max_lat] if min_lon < max_lon && min_lat < max_lat => Ok(BBox { min_lat, min_lon, max_lat, max_lon }),
        _ => Err(CliError::Usage(format!("bbox '{s}' must be min_lon,min_lat,max_lon,max_lat"))),
    }
}

/// Downloads an OSM export with `curl`.
fn fetch_osm(bbox: &BBox, dest: &Path) -> Result<String> {
    let url = mapf_mapgen::export_url(bbox)
        .ok_or_else(|| CliError::Usage(format!("--fetch needs ${} to be set", mapf_mapgen::OSM_URL_VAR)))?;
    let out = std::process::Command::new("curl").args(["-sSfL", "-o"]).arg(dest).arg(&url).status()?;
    if !out.success() {
        return Err(CliError::Failed(format!("download of {url} failed")));
    }
    Ok(std::fs::read_to_string(dest)?)
}

fn cmd_mapgen(a: MapgenArgs, prov: &mut Provenance) -> Result<()> {
    let raster = RasterConfig { resolution: a.res, tile_size: a.tile, kernel_radius: a.kernel, smoothing: a.smooth };
    let rules = match &a.tags {
        Some(p) => TagRules::from_toml(&read_input(p, prov)?).map_err(|e| CliError::Usage(e.to_string()))?,
        None => TagRules::default(),
    };
    prov.seeds.push(a.seed);
    let tiles: Vec<MapTile> = if let Some(path) = &a.osm {
        raster.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let doc = read_input(path, prov)?;
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        osm_to_tiles(&doc, &rules, &raster, &stem)?
    } else if let Some(b) = &a.fetch {
        raster.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let bbox = parse_bbox(b)?;
        std::fs::create_dir_all(&a.out)?;
        let dest = a.out.join("fetched.osm");
        let doc = fetch_osm(&bbox, &dest)?;
        prov.input(&dest)?;
        osm_to_tiles(&doc, &rules, &raster, "fetched")?
    } else {
        let seeds: Vec<u64> = (0..a.count as u64).map(|i| a.seed + i).collect();
        let maps: Vec<GridMap> = if let Some(v) = &a.random {
            let (w, h) = pair(v, "random")?;
            if !(0.0..=mapf_mapgen::synth::MAX_DENSITY).contains(&a.density) {
                return Err(CliError::Usage(format!("--density must lie in [0, {}]", mapf_mapgen::synth::MAX_DENSITY)));
            }
            seeds.par_iter().map(|&s| gen_random(w, h, a.density, s)).collect::<mapf_mapgen::Result<_>>()?
        } else if let Some(v) = &a.maze {
            let (w, h) = pair(v, "maze")?;
            if w % 2 == 0 || h % 2 == 0 || w < 5 || h < 5 {
                return Err(CliError::Usage("maze sides must be odd and at least 5".into()));
            }
            seeds.par_iter().map(|&s| gen_maze(w, h, s)).collect::<mapf_mapgen::Result<_>>()?
        } else {
            let w = WarehouseParams::default();
            vec![gen_warehouse(w.rows, w.cols, w.shelf_len, w.aisle_w)?]
        };
        maps.into_iter().map(|map| MapTile { map, bbox: None }).collect()
    };
    if tiles.is_empty() {
        return Err(CliError::Failed("no tile passed the free-space filter".into()));
    }
    std::fs::create_dir_all(&a.out)?;
    for t in &tiles {
        let path = a.out.join(format!("{}.map", t.map.name));
        std::fs::write(&path, save_map(&t.map))?;
        prov.output(&path);
    }
    let manifest = a.out.join("manifest.csv");
    std::fs::write(&manifest, manifest_csv(&tiles))?;
    prov.output(&manifest);
    println!("wrote {} map(s) to {}", tiles.len(), a.out.display());
    Ok(())
}

fn load_map_dir(dir: &Path, prov: &mut Provenance) -> Result<Vec<GridMap>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "map"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no .map files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(load_map_named(&read_input(p, prov)?, &name)?)
        })
        .collect()
}

fn cmd_expert(a: ExpertArgs, prov: &mut Provenance) -> Result<()> {
    if a.min_agents == 0 || a.min_agents > a.max_agents {
        return Err(CliError::Usage("need 1 <= --min-agents <= --max-agents".into()));
    }
    if !(0.0..=1.0).contains(&a.floor) {
        return Err(CliError::Usage("--floor must lie in [0, 1]".into()));
    }
    let maps = match (&a.maps, &a.empty) {
        (Some(dir), _) => load_map_dir(dir, prov)?,
        (None, Some(v)) => {
            let (w, h) = pair(v, "empty")?;
            vec![GridMap::empty(w, h)]
        }
        (None, None) => unreachable!("clap requires a map source"),
    };
    prov.seeds.push(a.seed);
    let spec = ExpertSpec { instances: a.instances, min_agents: a.min_agents, max_agents: a.max_agents, seed: a.seed };
    let (records, stats) = expert::generate(&maps, &spec);
    save_dataset(&a.out, &records)?;
    prov.output(&a.out);
    println!("samples {}", stats.samples);
    println!("solve rate {:.4} ({}/{})", stats.solve_rate(), stats.solved, stats.instances);
    if stats.solve_rate() < a.floor {
        return Err(CliError::Failed(format!("solve rate {:.4} below floor {}", stats.solve_rate(), a.floor)));
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, prov: &mut Provenance) -> Result<()> {
    let records = load_dataset(&a.data).map_err(|e| CliError::Usage(format!("cannot load {}: {e}", a.data.display())))?;
    prov.input(&a.data)?;
    let examples: Vec<Example> = records.iter().map(Example::from).collect();
    let mut params = match &a.resume {
        Some(p) => {
            let params = load_params(p)?;
            prov.input(p)?;
            if a.sre.is_some_and(|s| (s == OnOff::On) != params.config.use_sre) {
                return Err(CliError::Usage("--sre disagrees with the resumed params".into()));
            }
            params
        }
        None => {
            let mut cfg = match a.preset {
                Preset::Tiny => ModelConfig::tiny(),
                Preset::Toy => ModelConfig::toy(),
                Preset::Default => ModelConfig::default(),
            };
            cfg.use_sre = a.sre != Some(OnOff::Off);
            ModelParams::init(&cfg).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    if let Some(s) = a.seed {
        params.config.seed = s;
    }
    if let Some(lr) = a.lr {
        params.config.learning_rate = lr;
    }
    if let Some(b) = a.batch {
        params.config.batch_size = b;
    }
    params.config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    prov.seeds.push(params.config.seed);
    let opts = TrainOptions { steps: a.steps, clip_norm: (a.clip > 0.0).then_some(a.clip) };
    let start_steps = params.trained_steps;
    let (params, log) = match train_from(params, &examples, &opts) {
        Err(e @ NeuralError::DivergenceDetected { .. }) => return Err(CliError::Failed(e.to_string())),
        r => r?,
    };
    save_params(&params, &a.out)?;
    let log_path = a.log.unwrap_or_else(|| sibling(&a.out, "log.csv"));
    log.save_csv(&log_path)?;
    prov.output(&a.out);
    prov.output(&log_path);
    if let (Some(first), Some(last)) = (log.entries.first(), log.last()) {
        println!("steps {} -> {}", start_steps, params.trained_steps);
        println!("total loss {:.4} -> {:.4}", first.total_loss, last.total_loss);
    }
    println!("sre {}", if params.config.use_sre { "on" } else { "off" });
    Ok(())
}

fn cmd_eval(a: EvalArgs, jobs: usize, prov: &mut Provenance) -> Result<()> {
    let mut suite = match &a.suite {
        Some(p) => SuiteConfig::from_toml(&read_input(p, prov)?).map_err(|e| CliError::Usage(e.to_string()))?,
        None => SuiteConfig::mazes_smoke(),
    };
    if let Some(m) = a.mode {
        suite.modes = vec![m.spec(a.horizon)];
    }
    if let Some(hs) = &a.horizons {
        if hs.iter().any(|&h| h < 2) {
            return Err(CliError::Usage("horizons must be at least 2".into()));
        }
    }
    suite.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    prov.seeds.push(suite.master_seed);
    let params = load_params(&a.params)?;
    prov.input(&a.params)?;
    std::fs::create_dir_all(&a.out)?;

    let result = match (&a.horizons, &a.without_sre) {
        (Some(hs), _) => ablation_horizon(&suite, &params, hs, jobs)?,
        (None, Some(p)) => {
            let without = load_params(p)?;
            prov.input(p)?;
            let ab = ablation_sre(&suite, &params, &without, jobs)?;
            let path = a.out.join("results_without_sre.csv");
            emit_csv(&ab.without_sre, &path)?;
            prov.output(&path);
            println!("without SRE:\n{}", sr_table(&ab.without_sre.points));
            for d in &ab.deltas {
                let label = if d.mode == ModeName::Fast { "fast".into() } else { format!("{} H={}", d.mode.as_str(), d.horizon) };
                println!("{} {label}: SR with {:.3}, without {:.3}, delta {:+.3}", d.family, d.sr_with, d.sr_without, d.delta);
            }
            ab.with_sre
        }
        (None, None) => run_suite(&suite, &params, jobs)?,
    };
    let csv = a.out.join("results.csv");
    let svg = a.out.join("results.svg");
    emit_csv(&result, &csv)?;
    emit_plot(&result, &svg)?;
    prov.output(&csv);
    prov.output(&svg);
    print!("{}", sr_table(&result.points));
    Ok(())
}

fn cmd_play(a: PlayArgs, prov: &mut Provenance) -> Result<()> {
    let cfg: ModeConfig = a.mode.spec(a.horizon).mode_config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.step_limit == 0 {
        return Err(CliError::Usage("--step-limit must be positive".into()));
    }
    let params = load_params(&a.params)?;
    prov.input(&a.params)?;
    let map = match &a.map {
        Some(p) => {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            load_map_named(&read_input(p, prov)?, &name)?
        }
        None => GridMap::empty(8, 8),
    };
    prov.seeds.push(a.seed);
    let inst = generate_instance(&map, a.agents, a.seed)?;
    let res = run_episode(&inst, &params, &cfg, a.step_limit)?;
    let goals = inst.goals();
    let mut out = std::io::stdout().lock();
    let printed = (|| -> std::io::Result<()> {
        for t in 0..=res.steps_used {
            let positions: Vec<_> = res.paths.iter().map(|p| p[t]).collect();
            writeln!(out, "t={t}")?;
            write!(out, "{}", render_frame(&map, &positions, &goals, a.color))?;
        }
        writeln!(out, "{}", if res.success { "SUCCESS" } else { "FAILURE" })
    })();
    match printed {
        // A closed pipe (e.g. `| head`) is not an error.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}
