//! Command-line entry point. `run` parses arguments, dispatches to a
//! subcommand and maps failures to exit codes: 2 for usage errors, 1 for
//! everything else.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::arrange::{
    arrange, builtin_voicing_chart, export_midi, ManifestEntry, RenderConfig, StimulusManifest,
    VoicingChart,
};
use crate::condition::{Algorithm, Modality};
use crate::net::{self, build_dataset, harmonize, persist, TrainConfig};
use crate::simulate::{simulate, SimulationConfig};
use crate::stats::{analyze, ObservationTable};
use crate::study::{AppState, StudyConfig, StudyEngine, StudySettings, SystemClock};
use crate::symbolic::io::{lead_sheet_to_json, read_lead_sheet, read_melody, write_lead_sheet};
use crate::symbolic::LeadSheet;

#[derive(Debug, Parser)]
#[command(
    name = "harmonist",
    version,
    about = "Harmonize melodies, build listening-study stimuli, run the study and analyze rankings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the chord predictor on a directory of lead sheets.
    Train(TrainArgs),
    /// Predict chords for a melody and write a lead sheet.
    Harmonize(HarmonizeArgs),
    /// Render a lead sheet as a piano-solo or group MIDI file.
    Arrange(ArrangeArgs),
    /// Harmonize and arrange the eight study melodies and write a manifest.
    BuildStimuli(BuildStimuliArgs),
    /// Serve the ranking study over HTTP.
    Serve(ServeArgs),
    /// Generate synthetic study responses.
    Simulate(SimulateArgs),
    /// Analyze exported responses.
    Analyze(AnalyzeArgs),
}

fn chords_per_bar(s: &str) -> Result<u32, String> {
    let n: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if n == 0 || !n.is_power_of_two() {
        return Err(format!("{n} is not a power of two"));
    }
    Ok(n)
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory of lead-sheet JSON files (read in name order).
    #[arg(long)]
    corpus: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    model: PathBuf,
    /// Loss log (`epoch<TAB>mean_loss` per line); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2, value_parser = chords_per_bar)]
    chords_per_bar: u32,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

#[derive(Debug, Args)]
struct HarmonizeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Melody as JSON or a MIDI file.
    #[arg(long)]
    melody: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = chords_per_bar)]
    chords_per_bar: u32,
    /// Output lead sheet; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// JSON file with guitar voicing overrides.
    #[arg(long)]
    voicings: Option<PathBuf>,
    #[arg(long, default_value_t = 120)]
    tempo: u32,
    #[arg(long, default_value_t = 96)]
    velocity: u8,
}

impl RenderArgs {
    fn load(&self) -> Result<(VoicingChart, RenderConfig)> {
        let chart = match &self.voicings {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                VoicingChart::with_overrides_json(&text)?
            }
            None => builtin_voicing_chart(),
        };
        let config = RenderConfig {
            tempo_bpm: self.tempo,
            velocity: self.velocity,
            ..RenderConfig::default()
        };
        config.validate()?;
        Ok((chart, config))
    }
}

#[derive(Debug, Args)]
struct ArrangeArgs {
    #[arg(long)]
    lead_sheet: PathBuf,
    #[arg(long, value_parser = parse_modality)]
    modality: Modality,
    /// Output MIDI file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
}

fn parse_modality(s: &str) -> Result<Modality, String> {
    s.parse()
}

#[derive(Debug, Args)]
struct BuildStimuliArgs {
    #[arg(long)]
    model: PathBuf,
    /// Directory with subdirectories `A/` and `B/`, four melodies each.
    #[arg(long)]
    melodies: PathBuf,
    /// Output directory for lead sheets, MIDI files and `manifest.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = chords_per_bar)]
    chords_per_bar: u32,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Study settings JSON (attention check, minimum duration).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Token expected in the `x-admin-token` header of export requests.
    #[arg(long, default_value = "")]
    admin_token: String,
    /// Append-only response log.
    #[arg(long, default_value = "responses.ndjson")]
    log: PathBuf,
    /// Directory of rendered audio; defaults to `audio/` next to the manifest.
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    /// Built participant interface to serve at `/`.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Seed for session randomization; drawn from the OS when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 61)]
    participants: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Utility advantage of algorithm A.
    #[arg(long, default_value_t = SimulationConfig::default().algorithm_effect)]
    algorithm_effect: f64,
    /// Extra advantage of A in the group arrangement.
    #[arg(long, default_value_t = SimulationConfig::default().group_amplification)]
    group_amplification: f64,
    /// Relative scaling of A's advantage for musicians.
    #[arg(long, default_value_t = 0.0)]
    musician_amplification: f64,
    /// Standard deviation of the utility noise.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Additional participants who fail the attention check.
    #[arg(long, default_value_t = 0)]
    inattentive: usize,
    /// Additional participants who finish too quickly.
    #[arg(long, default_value_t = 0)]
    hasty: usize,
    /// Response CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exclusion report CSV.
    #[arg(long)]
    exclusions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Response CSV; `-` or omitted reads stdin.
    input: Option<PathBuf>,
    /// Directory for the report and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Harmonize(a) => harmonize_cmd(a),
        Command::Arrange(a) => arrange_cmd(a),
        Command::BuildStimuli(a) => build_stimuli(a),
        Command::Serve(a) => serve(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
    }
}

fn write_output(out: Option<&Path>, body: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, body).with_context(|| format!("writing {}", p.display()))
        }
        None => io::stdout().write_all(body).context("writing to stdout"),
    }
}

fn sorted_files(dir: &Path, keep: impl Fn(&Path) -> bool) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    files.retain(|p| p.is_file() && keep(p));
    files.sort();
    Ok(files)
}

fn has_ext(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn train(a: TrainArgs) -> Result<()> {
    let config = TrainConfig {
        hidden_sizes: a.hidden,
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
    };
    config.validate()?;
    let files = sorted_files(&a.corpus, |p| has_ext(p, &["json"]))?;
    if files.is_empty() {
        bail!("no lead-sheet JSON files in {}", a.corpus.display());
    }
    let sheets = files
        .iter()
        .map(|p| read_lead_sheet(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<LeadSheet>>>()?;
    let dataset = build_dataset(&sheets, a.chords_per_bar)?;
    log::info!(
        "{} training windows from {} lead sheets",
        dataset.len(),
        sheets.len()
    );
    let mut log = String::new();
    let (model, _) = net::train_with_progress(&dataset, &config, |epoch, loss| {
        log.push_str(&format!("{epoch}\t{loss:.6}\n"));
    })?;
    persist::save(&model, &a.model)?;
    write_output(a.out.as_deref(), log.as_bytes())?;
    log::info!("training accuracy {:.4}", net::accuracy(&model, &dataset));
    Ok(())
}

fn harmonize_cmd(a: HarmonizeArgs) -> Result<()> {
    let model = persist::load(&a.model)?;
    let melody =
        read_melody(&a.melody).with_context(|| format!("reading {}", a.melody.display()))?;
    let sheet = harmonize(&model, &melody, a.chords_per_bar)?;
    let json = lead_sheet_to_json(&sheet, None) + "\n";
    write_output(a.out.as_deref(), json.as_bytes())
}

fn arrange_cmd(a: ArrangeArgs) -> Result<()> {
    let (chart, config) = a.render.load()?;
    let sheet = read_lead_sheet(&a.lead_sheet)
        .with_context(|| format!("reading {}", a.lead_sheet.display()))?;
    let arrangement = arrange(&sheet, a.modality, &chart, &config)?;
    write_output(Some(&a.out), &export_midi(&arrangement, &config)?)
}

fn build_stimuli(a: BuildStimuliArgs) -> Result<()> {
    let (chart, config) = a.render.load()?;
    let model = persist::load(&a.model)?;
    let mut inputs = Vec::new();
    for alg in Algorithm::ALL {
        let dir = a.melodies.join(alg.as_str());
        let files = sorted_files(&dir, |p| has_ext(p, &["json", "mid", "midi"]))?;
        if files.len() != 4 {
            bail!(
                "{} must hold exactly 4 melodies, found {}",
                dir.display(),
                files.len()
            );
        }
        inputs.extend(files.into_iter().map(|f| (alg, f)));
    }
    for sub in ["lead_sheets", "midi", "audio"] {
        fs::create_dir_all(a.out.join(sub))
            .with_context(|| format!("creating {}", a.out.join(sub).display()))?;
    }
    let mut manifest = StimulusManifest::default();
    for (alg, path) in inputs {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("melody");
        let id = format!("{}_{stem}", alg.as_str());
        let melody = read_melody(&path).with_context(|| format!("reading {}", path.display()))?;
        let sheet = harmonize(&model, &melody, a.chords_per_bar)?;
        let sheet_rel = format!("lead_sheets/{id}.json");
        write_lead_sheet(&a.out.join(&sheet_rel), &sheet, None)?;
        let mut midi = [String::new(), String::new()];
        for m in Modality::ALL {
            let arrangement = arrange(&sheet, m, &chart, &config)
                .with_context(|| format!("arranging {id} for {m}"))?;
            let rel = format!("midi/{id}_{m}.mid");
            write_output(
                Some(&a.out.join(&rel)),
                &export_midi(&arrangement, &config)?,
            )?;
            midi[m.index()] = rel;
        }
        let [piano_midi, group_midi] = midi;
        manifest.stimuli.push(ManifestEntry {
            algorithm: alg,
            lead_sheet: Some(sheet_rel),
            piano_midi,
            group_midi,
            piano_audio: format!("{id}_piano.mp3"),
            group_audio: format!("{id}_group.mp3"),
            id,
        });
    }
    manifest.save(&a.out.join("manifest.json"))?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let manifest = StimulusManifest::load(&a.manifest)?;
    let settings = match &a.config {
        Some(p) => StudySettings::load(p)?,
        None => StudySettings::default(),
    };
    let config = StudyConfig::from_manifest(&manifest, settings)?;
    let audio_dir = a.audio_dir.clone().unwrap_or_else(|| {
        a.manifest
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("audio")
    });
    if a.admin_token.is_empty() {
        log::warn!("no --admin-token given; the export endpoints are disabled");
    }
    let seed = a.seed.unwrap_or_else(rand::random);
    let engine = StudyEngine::open(config, &a.log, seed, Arc::new(SystemClock))?;
    log::info!(
        "{} sessions restored from {}",
        engine.session_count(),
        a.log.display()
    );
    let state = AppState {
        engine: Arc::new(engine),
        admin_token: a.admin_token,
        audio_dir,
        ui_dir: a.ui_dir,
    };
    let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    runtime
        .block_on(crate::study::serve(state, SocketAddr::new(a.host, a.port)))
        .context("serving")
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let config = SimulationConfig {
        participants: a.participants,
        seed: a.seed,
        algorithm_effect: a.algorithm_effect,
        group_amplification: a.group_amplification,
        musician_amplification: a.musician_amplification,
        noise: a.noise,
        inattentive: a.inattentive,
        hasty: a.hasty,
        ..SimulationConfig::default()
    };
    let export = simulate(&config)?;
    write_output(a.out.as_deref(), export.rows_csv().as_bytes())?;
    if let Some(p) = &a.exclusions {
        write_output(Some(p), export.exclusions_csv().as_bytes())?;
    }
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let table = match a.input.as_deref() {
        Some(p) if p != Path::new("-") => ObservationTable::from_csv_path(p)?,
        _ => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .context("reading stdin")?;
            ObservationTable::from_csv_reader(text.as_bytes())?
        }
    };
    let analysis = analyze(&table)?;
    if let Some(dir) = &a.out {
        analysis.write_dir(dir)?;
    }
    io::stdout()
        .write_all(analysis.to_text().as_bytes())
        .context("writing to stdout")
}
