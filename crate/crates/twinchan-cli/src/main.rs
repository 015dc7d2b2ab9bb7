//! `twinchan`: compile multipath descriptions into tap scenarios, emulate
//! links, sound the emulated channels, run the jamming demo, and compare
//! metric traces.
//!
//! Exit codes: 0 success, 1 internal error, 2 input/validation error.
//! Validation errors also print a machine-readable JSON object on stderr.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twinchan::analysis::{compare_runs, MetricSeries};
use twinchan::emulator::{EmulationSession, JammerKind};
use twinchan::scenario::{build_scenario, parse_ray_paths, pathloss_matrix, RayPathFile, Scenario};
use twinchan::sequences::{merit_report, CodeSequence};
use twinchan::sounder::{sound_link, sound_matrix, FrameRetention, LinkLoss, SoundingConfig};
use twinchan::types::Error;

use twinchan_cli::codespec::parse_code_spec;
use twinchan_cli::jamdemo::{run_jam_demo, JamDemoConfig};
use twinchan_cli::manifest::RunManifest;
use twinchan_cli::reproduce::{run_experiment, EXPERIMENT_IDS};
use twinchan_cli::scenario_spec::ScenarioSpecFile;
use twinchan_cli::svg::line_plot;

#[derive(Parser)]
#[command(
    name = "twinchan",
    version,
    about = "Wireless channel emulation twin: scenario compiler, emulator, sounder, and validation metrics"
)]
struct Cli {
    /// Worker thread cap (also TWINCHAN_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config file supplying defaults per subcommand; precedence is
    /// CLI flags > config file > built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Per-subcommand defaults loaded from `--config`.
struct ConfigFile(serde_json::Value);

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        match path {
            None => Ok(Self(serde_json::Value::Null)),
            Some(p) => Ok(Self(serde_json::from_slice(&std::fs::read(p)?)?)),
        }
    }

    fn get<T: serde::de::DeserializeOwned>(&self, section: &str, key: &str) -> Option<T> {
        self.0
            .get(section)
            .and_then(|s| s.get(key))
            .and_then(|v| serde_json::from_value(v.clone()).ok())
    }
}

fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[derive(Subcommand)]
enum Command {
    /// Generate code sequences and their correlation merit figures.
    Seq {
        #[command(subcommand)]
        action: SeqAction,
    },
    /// Build, inspect, and summarize tap scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Sound emulated channels.
    Sound {
        #[command(subcommand)]
        action: SoundAction,
    },
    /// Run the jamming demonstration and emit the SINR trace.
    Jam(JamArgs),
    /// Compare two metric traces with the similarity score.
    Compare(CompareArgs),
    /// Re-run a documented experiment and check its tolerances.
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand)]
enum SeqAction {
    /// Emit chips as one-column text and optionally as signed bytes.
    Gen(SeqGenArgs),
    /// Print autocorrelation merit figures for a code.
    Merit {
        /// Code spec, e.g. glfsr:8:0:1, gold:0x43:0x67:0, golaya128, ls:256.
        #[arg(long)]
        code: String,
    },
}

#[derive(Args)]
struct SeqGenArgs {
    /// Family: glfsr | gold | golaya128 | golayb128 | ls.
    #[arg(long)]
    family: String,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    mask: Option<u32>,
    #[arg(long)]
    seed: Option<u32>,
    /// Gold polynomial A (full form, e.g. 0x43 for degree 6).
    #[arg(long)]
    poly_a: Option<u64>,
    #[arg(long)]
    poly_b: Option<u64>,
    #[arg(long)]
    shift: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    /// One-column text output path.
    #[arg(short, long)]
    out: PathBuf,
    /// Optional signed-byte (+1/-1) stream output path.
    #[arg(long)]
    bin: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Compile a ray-path CSV and a nodes JSON into a .twsc bundle.
    Build {
        /// Ray-path CSV: t_s,tx,rx,toa_s,gain_db,phase_rad.
        #[arg(long)]
        paths: PathBuf,
        /// Scenario spec JSON: name, radio, sampling_interval_s, nodes.
        #[arg(long)]
        nodes: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print the bundle header and tap tables.
    Inspect {
        bundle: PathBuf,
        /// Limit the tap table to one frame.
        #[arg(long)]
        frame: Option<usize>,
    },
    /// Emit the modeled path-loss matrix of one frame as CSV.
    Heatmap {
        bundle: PathBuf,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SoundAction {
    /// Sound one directed link and write the result JSON and CIR trace CSV.
    Run(SoundRunArgs),
    /// Sound every active pair and write the measured loss matrix CSV.
    Matrix(SoundMatrixArgs),
}

#[derive(Args)]
struct SoundRunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    tx: u32,
    #[arg(long)]
    rx: u32,
    /// Code spec, e.g. glfsr:8:0:1.
    #[arg(long)]
    code: Option<String>,
    /// Sample rate, S/s.
    #[arg(long)]
    rate: Option<f64>,
    /// Capture duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    tx_gain_db: Option<f64>,
    #[arg(long)]
    rx_gain_db: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the receiver noise floor.
    #[arg(long)]
    no_noise: bool,
    /// Result JSON path.
    #[arg(short, long)]
    out: PathBuf,
    /// CIR magnitude trace CSV path (default: `<out>.cir.csv`).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SoundMatrixArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_noise: bool,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct JamArgs {
    /// narrowband | wideband.
    #[arg(long)]
    kind: Option<String>,
    /// Jammer occupied bandwidth, Hz (defaults per kind: 156 kHz / 10 MHz).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Jammer start, seconds.
    #[arg(long)]
    on: Option<f64>,
    /// Jammer stop, seconds.
    #[arg(long)]
    off: Option<f64>,
    /// Run length, seconds.
    #[arg(long)]
    total: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    jammer_power_db: Option<f64>,
    /// Moving jammer (approach/recede link-gain profile).
    #[arg(long)]
    mobile: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// SINR trace CSV path.
    #[arg(short, long)]
    out: PathBuf,
    /// Optional SVG plot path.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Real-world trace CSV (t_s,value).
    #[arg(long)]
    real: PathBuf,
    /// Emulated trace CSV (t_s,value).
    #[arg(long)]
    twin: PathBuf,
    #[arg(long)]
    max_lag: Option<usize>,
    /// Report JSON path; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// One of: seq-tuning, base-loss, multitap, jam-static, jam-mobile,
    /// similarity, or `all`.
    experiment: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("TWINCHAN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }

    let outcome = ConfigFile::load(cli.config.as_deref()).and_then(|cfg| dispatch(cli.command, &cfg));
    match outcome {
        Ok(code) => code,
        Err(err) => {
            let kind = if err.is_validation() { "validation" } else { "internal" };
            let payload = serde_json::json!({
                "error": { "kind": kind, "message": err.to_string() }
            });
            eprintln!("{payload}");
            if err.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(command: Command, cfg: &ConfigFile) -> Result<ExitCode, Error> {
    match command {
        Command::Seq { action } => match action {
            SeqAction::Gen(args) => seq_gen(args),
            SeqAction::Merit { code } => {
                let seq = parse_code_spec(&code)?;
                let report = merit_report(&seq);
                println!("{}", serde_json::to_string_pretty(&report)?);
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Scenario { action } => match action {
            ScenarioAction::Build { paths, nodes, out } => scenario_build(paths, nodes, out),
            ScenarioAction::Inspect { bundle, frame } => scenario_inspect(bundle, frame),
            ScenarioAction::Heatmap { bundle, frame, out } => scenario_heatmap(bundle, frame, out),
        },
        Command::Sound { action } => match action {
            SoundAction::Run(args) => sound_run(args, cfg),
            SoundAction::Matrix(args) => sound_matrix_cmd(args, cfg),
        },
        Command::Jam(args) => jam(args, cfg),
        Command::Compare(args) => compare(args, cfg),
        Command::Reproduce(args) => reproduce(args),
    }
}

fn seq_gen(args: SeqGenArgs) -> Result<ExitCode, Error> {
    let spec = match args.family.to_ascii_lowercase().as_str() {
        "glfsr" => format!(
            "glfsr:{}:{}:{}",
            args.degree
                .ok_or_else(|| Error::InvalidArgument("glfsr needs --degree".into()))?,
            args.mask.unwrap_or(0),
            args.seed.unwrap_or(1),
        ),
        "gold" => format!(
            "gold:{}:{}:{}",
            args.poly_a
                .ok_or_else(|| Error::InvalidArgument("gold needs --poly-a".into()))?,
            args.poly_b
                .ok_or_else(|| Error::InvalidArgument("gold needs --poly-b".into()))?,
            args.shift.unwrap_or(0),
        ),
        "golaya128" => "golaya128".to_string(),
        "golayb128" => "golayb128".to_string(),
        "ls" => format!(
            "ls:{}",
            args.length
                .ok_or_else(|| Error::InvalidArgument("ls needs --length".into()))?
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown family {other:?}"
            )));
        }
    };
    let seq = parse_code_spec(&spec)?;
    write_chips(&seq, &args.out, args.bin.as_deref())?;
    RunManifest::new(
        vec!["seq".into(), "gen".into(), spec.clone()],
        serde_json::json!({ "code": spec, "chips": seq.len() }),
    )
    .write_for(&args.out)?;
    println!("wrote {} chips to {}", seq.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn write_chips(seq: &CodeSequence, text_path: &Path, bin_path: Option<&Path>) -> Result<(), Error> {
    let mut text = String::with_capacity(seq.len() * 3);
    for &chip in seq.chips() {
        text.push_str(if chip > 0 { "1\n" } else { "-1\n" });
    }
    std::fs::write(text_path, text)?;
    if let Some(bin) = bin_path {
        let bytes: Vec<u8> = seq.chips().iter().map(|&c| c as u8).collect();
        std::fs::write(bin, bytes)?;
    }
    Ok(())
}

fn scenario_build(paths: PathBuf, nodes: PathBuf, out: PathBuf) -> Result<ExitCode, Error> {
    let spec = ScenarioSpecFile::from_path(&nodes)?;
    let ray_file = RayPathFile::from_path(&paths)?;
    let samples = parse_ray_paths(&ray_file)?;
    let scenario = build_scenario(
        spec.nodes.clone(),
        spec.radio,
        &samples,
        spec.sampling_interval_s,
        &spec.name,
    )?;
    scenario.save(&out)?;
    RunManifest::new(
        vec!["scenario".into(), "build".into()],
        serde_json::json!({
            "name": spec.name,
            "nodes": spec.nodes.len(),
            "links": scenario.links().len(),
            "frames": scenario.frame_count(),
        }),
    )
    .digest_input(&paths)?
    .digest_input(&nodes)?
    .write_for(&out)?;
    println!(
        "built scenario '{}': {} nodes, {} links, {} frames -> {}",
        scenario.metadata().name,
        scenario.nodes().len(),
        scenario.links().len(),
        scenario.frame_count(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn scenario_inspect(bundle: PathBuf, frame: Option<usize>) -> Result<ExitCode, Error> {
    let scenario = Scenario::load(&bundle)?;
    let frames: Vec<usize> = match frame {
        Some(f) => {
            if f >= scenario.frame_count() {
                return Err(Error::InvalidArgument(format!(
                    "frame {f} outside timeline of {} frames",
                    scenario.frame_count()
                )));
            }
            vec![f]
        }
        None => vec![0],
    };
    // a closed pipe (e.g. `inspect | head`) ends the dump, not the program
    match dump_scenario(&scenario, &frames) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(ExitCode::SUCCESS),
        Err(e) => Err(e.into()),
        Ok(()) => Ok(ExitCode::SUCCESS),
    }
}

fn dump_scenario(scenario: &Scenario, frames: &[usize]) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "name:             {}", scenario.metadata().name)?;
    writeln!(w, "nodes:            {}", scenario.nodes().len())?;
    writeln!(w, "links:            {}", scenario.links().len())?;
    writeln!(w, "frames:           {}", scenario.frame_count())?;
    writeln!(w, "update interval:  {} s", scenario.update_interval())?;
    writeln!(w, "sampling interval:{} s", scenario.sampling_interval())?;
    writeln!(
        w,
        "slot grid:        {} slots x {} ns",
        scenario.metadata().slot_count,
        scenario.metadata().slot_seconds * 1e9
    )?;
    for &f in frames {
        writeln!(w, "frame {f}:")?;
        writeln!(w, "  link      slot  gain_db   phase_rad")?;
        for (&(tx, rx), timeline) in scenario.links() {
            for tap in timeline.frames()[f].taps() {
                let (mag, phase) = tap.gain().to_polar();
                let gain_db = 20.0 * mag.log10();
                writeln!(
                    w,
                    "  {tx:>3}->{rx:<3} {:>5}  {gain_db:>8.2}  {phase:>9.4}",
                    tap.delay_slot()
                )?;
            }
        }
    }
    Ok(())
}

fn scenario_heatmap(bundle: PathBuf, frame: usize, out: PathBuf) -> Result<ExitCode, Error> {
    let scenario = Scenario::load(&bundle)?;
    let matrix = pathloss_matrix(&scenario, frame)?;
    let ids = scenario.node_ids();
    let mut csv = String::from("tx\\rx");
    for id in &ids {
        csv.push_str(&format!(",{id}"));
    }
    csv.push('\n');
    for (i, id) in ids.iter().enumerate() {
        csv.push_str(&id.to_string());
        for j in 0..ids.len() {
            match matrix[i][j] {
                Some(db) => csv.push_str(&format!(",{db:.4}")),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    std::fs::write(&out, csv)?;
    RunManifest::new(
        vec!["scenario".into(), "heatmap".into()],
        serde_json::json!({ "frame": frame }),
    )
    .digest_input(&bundle)?
    .write_for(&out)?;
    println!("wrote path-loss matrix for frame {frame} to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn sounding_config(
    code_spec: &str,
    rate: f64,
    duration: f64,
    tx_gain_db: f64,
    rx_gain_db: f64,
    keep: FrameRetention,
) -> Result<SoundingConfig, Error> {
    let code = parse_code_spec(code_spec)?;
    let mut cfg = SoundingConfig::new(code, rate)?.with_capture(duration)?;
    cfg.tx_gain_db = tx_gain_db;
    cfg.rx_gain_db = rx_gain_db;
    cfg.keep_frames = keep;
    Ok(cfg)
}

fn sound_run(args: SoundRunArgs, cfg: &ConfigFile) -> Result<ExitCode, Error> {
    let code = resolve(args.code, cfg.get("sound", "code"), "glfsr:8:0:1".to_string());
    let rate = resolve(args.rate, cfg.get("sound", "rate"), 1e6);
    let duration = resolve(args.duration, cfg.get("sound", "duration"), 3.0);
    let tx_gain_db = resolve(args.tx_gain_db, cfg.get("sound", "tx_gain_db"), 0.0);
    let rx_gain_db = resolve(args.rx_gain_db, cfg.get("sound", "rx_gain_db"), 0.0);
    let seed = resolve(args.seed, cfg.get("sound", "seed"), 1);
    let noise = !args.no_noise && !cfg.get("sound", "no_noise").unwrap_or(false);

    let scenario = Scenario::load(&args.scenario)?;
    let active = scenario.node_ids();
    let session = EmulationSession::new(scenario, &active, rate, seed, noise)?;
    let config = sounding_config(
        &code,
        rate,
        duration,
        tx_gain_db,
        rx_gain_db,
        FrameRetention::Averaged,
    )?;
    let result = sound_link(&session, args.tx, args.rx, &config)?;
    std::fs::write(&args.out, serde_json::to_vec_pretty(&result)?)?;
    let trace = args.trace.unwrap_or_else(|| {
        let mut os = args.out.as_os_str().to_os_string();
        os.push(".cir.csv");
        PathBuf::from(os)
    });
    let mut csv = String::from("lag_s,magnitude\n");
    if let Some(profile) = result.cir_frames.first() {
        for (i, v) in profile.iter().enumerate() {
            csv.push_str(&format!("{},{v}\n", i as f64 / rate));
        }
    }
    std::fs::write(&trace, csv)?;
    RunManifest::new(
        vec!["sound".into(), "run".into()],
        serde_json::json!({
            "tx": args.tx, "rx": args.rx, "code": code,
            "rate": rate, "duration": duration,
            "tx_gain_db": tx_gain_db, "rx_gain_db": rx_gain_db,
            "noise": noise,
        }),
    )
    .with_seed("session", seed)
    .digest_input(&args.scenario)?
    .write_for(&args.out)?;
    println!(
        "sounded {}->{}: loss {:.2} dB, {} taps, {} frames",
        args.tx,
        args.rx,
        result.path_loss_db,
        result.taps.len(),
        result.frames_used
    );
    Ok(ExitCode::SUCCESS)
}

fn sound_matrix_cmd(args: SoundMatrixArgs, cfg: &ConfigFile) -> Result<ExitCode, Error> {
    let code = resolve(args.code, cfg.get("sound", "code"), "glfsr:8:0:1".to_string());
    let rate = resolve(args.rate, cfg.get("sound", "rate"), 1e6);
    let duration = resolve(args.duration, cfg.get("sound", "duration"), 2.0);
    let seed = resolve(args.seed, cfg.get("sound", "seed"), 1);
    let noise = !args.no_noise && !cfg.get("sound", "no_noise").unwrap_or(false);

    let scenario = Scenario::load(&args.scenario)?;
    let active = scenario.node_ids();
    let session = EmulationSession::new(scenario, &active, rate, seed, noise)?;
    let config = sounding_config(&code, rate, duration, 0.0, 0.0, FrameRetention::None)?;
    let matrix = sound_matrix(&session, &config)?;
    let mut csv = String::from("tx\\rx");
    for id in &active {
        csv.push_str(&format!(",{id}"));
    }
    csv.push('\n');
    for &tx in &active {
        csv.push_str(&tx.to_string());
        for &rx in &active {
            if tx == rx {
                csv.push(',');
                continue;
            }
            match matrix[&(tx, rx)] {
                LinkLoss::Db(db) => csv.push_str(&format!(",{db:.4}")),
                LinkLoss::NoSignal => csv.push_str(",no_signal"),
            }
        }
        csv.push('\n');
    }
    std::fs::write(&args.out, csv)?;
    RunManifest::new(
        vec!["sound".into(), "matrix".into()],
        serde_json::json!({
            "code": code, "rate": rate,
            "duration": duration, "noise": noise,
        }),
    )
    .with_seed("session", seed)
    .digest_input(&args.scenario)?
    .write_for(&args.out)?;
    println!("wrote measured loss matrix to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn jam(args: JamArgs, cfg_file: &ConfigFile) -> Result<ExitCode, Error> {
    let kind_name = resolve(args.kind, cfg_file.get("jam", "kind"), "wideband".to_string());
    let kind = match kind_name.to_ascii_lowercase().as_str() {
        "narrowband" => JammerKind::Narrowband,
        "wideband" => JammerKind::Wideband,
        other => {
            return Err(Error::InvalidArgument(format!(
                "jammer kind must be narrowband or wideband, got {other:?}"
            )));
        }
    };
    let seed = resolve(args.seed, cfg_file.get("jam", "seed"), 1);
    let mobile = args.mobile || cfg_file.get("jam", "mobile").unwrap_or(false);
    let cfg = JamDemoConfig {
        kind,
        bandwidth_hz: args.bandwidth.or_else(|| cfg_file.get("jam", "bandwidth")),
        jam_on_s: resolve(args.on, cfg_file.get("jam", "on"), 20.0),
        jam_off_s: resolve(args.off, cfg_file.get("jam", "off"), 40.0),
        total_s: resolve(args.total, cfg_file.get("jam", "total"), 60.0),
        sample_rate: resolve(args.rate, cfg_file.get("jam", "rate"), 20e6),
        jammer_power_db: resolve(
            args.jammer_power_db,
            cfg_file.get("jam", "jammer_power_db"),
            0.0,
        ),
        mobile,
        seed,
        ..JamDemoConfig::default()
    };
    let trace = run_jam_demo(&cfg)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    std::fs::write(&args.out, &buf)?;
    if let Some(svg_path) = &args.svg {
        let svg = line_plot(
            &[("sinr", trace.values())],
            "time [s]",
            "SINR [dB]",
            &format!(
                "{kind_name} jamming, on [{}, {}) s",
                cfg.jam_on_s, cfg.jam_off_s
            ),
        );
        std::fs::write(svg_path, svg)?;
    }
    RunManifest::new(
        vec!["jam".into(), kind_name.clone()],
        serde_json::json!({
            "kind": kind_name, "bandwidth_hz": cfg.bandwidth(),
            "on": cfg.jam_on_s, "off": cfg.jam_off_s, "total": cfg.total_s,
            "rate": cfg.sample_rate, "mobile": cfg.mobile,
        }),
    )
    .with_seed("demo", seed)
    .write_for(&args.out)?;
    println!("wrote SINR trace to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn compare(args: CompareArgs, cfg: &ConfigFile) -> Result<ExitCode, Error> {
    let max_lag = resolve(args.max_lag, cfg.get("compare", "max_lag"), 10);
    let real = MetricSeries::from_csv_path(&args.real)?;
    let twin = MetricSeries::from_csv_path(&args.twin)?;
    let report = if max_lag == 10 {
        compare_runs(&real, &twin)?
    } else {
        twinchan::analysis::normalized_xcorr(&real, &twin, max_lag)?
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json)?;
            RunManifest::new(
                vec!["compare".into()],
                serde_json::json!({ "max_lag": max_lag }),
            )
            .digest_input(&args.real)?
            .digest_input(&args.twin)?
            .write_for(path)?;
            println!("score {:.4} at lag {}", report.score, report.best_lag);
        }
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn reproduce(args: ReproduceArgs) -> Result<ExitCode, Error> {
    let ids: Vec<&str> = if args.experiment == "all" {
        EXPERIMENT_IDS.to_vec()
    } else {
        vec![args.experiment.as_str()]
    };
    let mut all_passed = true;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for id in ids {
        let report = run_experiment(id)?;
        for check in &report.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            writeln!(out, "[{status}] {}: {} ({})", report.id, check.name, check.detail)?;
        }
        all_passed &= report.passed();
    }
    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
