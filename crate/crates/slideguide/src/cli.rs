//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use slideguide_core::corpus::{build_corpus, load_corpus, BuildConfig, BuildInput, CorpusError, SlideSource};
use slideguide_core::features::{FeatureConfig, FeatureExtractor, DEFAULT_PATTERN_SEED};
use slideguide_core::fontnet::{
    classify_font, load_model, render_synthetic_dataset, save_model, train_with_progress, write_training_log,
    FontError, TrainConfig,
};
use slideguide_core::ingest::{parse_layout_annotation, IngestError, DEFAULT_HASH_THRESHOLD};
use slideguide_core::layout::{heatmap_for_sketch, render_heatmap, ClassFilter, DEFAULT_HEATMAP_K};
use slideguide_core::matching::{image_similarity, retrieve_diagrams, MatcherConfig, MatcherConfigError};
use slideguide_core::raster::{load_image, save_image, RasterError};
use thiserror::Error;

use crate::service::{self, ServiceConfig, ServiceError, DEFAULT_DIAGRAM_TOP_K, DEFAULT_LAYOUT_TOP_K, DEFAULT_PORT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Training log written next to the model by `font train`.
pub const TRAIN_LOG_PATH: &str = "fonts/train_log.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Font(#[from] FontError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Matcher(#[from] MatcherConfigError),
    #[error("{path}: {source}")]
    Layout { path: PathBuf, source: IngestError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("output: {0}")]
    Output(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "slideguide", version, about = "Sketch-based slide design guidance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a corpus from video frames or slide images.
    Ingest(IngestArgs),
    /// Render the layout heat map of one region class.
    Heatmap(HeatmapArgs),
    /// Print the similarity score of two diagram images.
    Match(MatchArgs),
    /// Rank corpus diagrams against a sketch.
    Retrieve(RetrieveArgs),
    /// Train or apply the font classifier.
    #[command(subcommand)]
    Font(FontCommand),
    /// Run the HTTP retrieval service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["frames", "slides"])))]
struct IngestArgs {
    /// Directory of ordered video frames (sorted by file name).
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Directory of slide images; file stems become slide ids.
    #[arg(long)]
    slides: Option<PathBuf>,
    /// Directory of `.layout.json` annotations.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Output corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HASH_THRESHOLD, value_parser = clap::value_parser!(u32).range(0..=64))]
    hash_threshold: u32,
    /// Descriptor sampling-pattern seed.
    #[arg(long, default_value_t = DEFAULT_PATTERN_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// title, text, figure or all.
    #[arg(long = "class")]
    class: ClassFilter,
    /// Write a PNG (darker is denser) instead of printing the grid.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Condition on the top-K layouts for this `.layout.json` sketch.
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(short, default_value_t = DEFAULT_HEATMAP_K, value_parser = positive)]
    k: usize,
    #[arg(long, default_value_t = 320, value_parser = positive)]
    width: usize,
    #[arg(long, default_value_t = 180, value_parser = positive)]
    height: usize,
}

#[derive(Debug, Args)]
struct MatcherArgs {
    /// Distance-ratio test factor in (0, 1].
    #[arg(long, default_value_t = MatcherConfig::default().ratio)]
    ratio: f64,
    /// Also drop good matches whose cosine similarity is at most this.
    #[arg(long)]
    sim_floor: Option<f64>,
}

impl MatcherArgs {
    fn config(&self) -> Result<MatcherConfig, CliError> {
        Ok(MatcherConfig::new(self.ratio, self.sim_floor)?)
    }
}

#[derive(Debug, Args)]
struct MatchArgs {
    a: PathBuf,
    b: PathBuf,
    #[command(flatten)]
    matcher: MatcherArgs,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    sketch: PathBuf,
    #[arg(short, default_value_t = DEFAULT_DIAGRAM_TOP_K, value_parser = positive)]
    k: usize,
    #[command(flatten)]
    matcher: MatcherArgs,
}

#[derive(Debug, Subcommand)]
enum FontCommand {
    /// Train on synthetic word crops and store the model in the corpus.
    Train(FontTrainArgs),
    /// Classify the font of a text crop.
    Classify(FontClassifyArgs),
}

#[derive(Debug, Args)]
struct FontTrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 500, value_parser = positive)]
    per_font: usize,
    #[arg(long, default_value_t = TrainConfig::default().epochs, value_parser = positive)]
    epochs: usize,
    /// Seeds both the rendered dataset and training.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FontClassifyArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    crop: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Allowed browser origin (repeatable); any origin when omitted.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_LAYOUT_TOP_K, value_parser = positive)]
    layout_k: usize,
    #[arg(long, default_value_t = DEFAULT_DIAGRAM_TOP_K, value_parser = positive)]
    diagram_k: usize,
    #[arg(long, default_value_t = DEFAULT_HEATMAP_K, value_parser = positive)]
    heatmap_k: usize,
    #[command(flatten)]
    matcher: MatcherArgs,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// Runs the CLI on `args` (program name first) with the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// Runs the CLI writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(a) => ingest(a, out),
        Command::Heatmap(a) => heatmap(a, out),
        Command::Match(a) => match_images(a, out),
        Command::Retrieve(a) => retrieve(a, out),
        Command::Font(FontCommand::Train(a)) => font_train(a, out, err),
        Command::Font(FontCommand::Classify(a)) => font_classify(a, out),
        Command::Serve(a) => serve(a, out),
    }
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let source = match (a.frames, a.slides) {
        (Some(dir), _) => SlideSource::Frames(dir),
        (None, Some(dir)) => SlideSource::Slides(dir),
        (None, None) => unreachable!("clap requires one source"),
    };
    let input = BuildInput { source, annotations: a.annotations };
    let cfg = BuildConfig {
        hash_threshold: a.hash_threshold,
        features: FeatureConfig { pattern_seed: a.seed, ..FeatureConfig::default() },
        ..BuildConfig::default()
    };
    let corpus = build_corpus(&input, &a.corpus, &cfg)?;
    writeln!(
        out,
        "built {}: {} slides, {} diagrams",
        a.corpus.display(),
        corpus.slides().len(),
        corpus.diagrams().len()
    )?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn heatmap(a: HeatmapArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_corpus(&a.corpus)?;
    let query = match &a.layout {
        Some(p) => Some(
            parse_layout_annotation(&read_text(p)?).map_err(|source| CliError::Layout { path: p.clone(), source })?,
        ),
        None => None,
    };
    let h = heatmap_for_sketch(query.as_ref(), &corpus, a.class, a.k);
    match a.out {
        Some(path) => {
            save_image(&render_heatmap(&h, a.width, a.height), &path)?;
            writeln!(out, "wrote {} ({}x{}, class {})", path.display(), a.width, a.height, a.class)?;
        }
        None => {
            for row in h.intensities.chunks(h.grid_w) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
                writeln!(out, "{}", cells.join(" "))?;
            }
        }
    }
    Ok(())
}

fn match_images(a: MatchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.matcher.config()?;
    let ex = FeatureExtractor::new(FeatureConfig::default());
    let (ka, kb) = (ex.extract(&load_image(&a.a)?), ex.extract(&load_image(&a.b)?));
    let r = image_similarity(&ka, &kb, &cfg);
    writeln!(out, "S={:.6}", r.score)?;
    writeln!(out, "good_matches={} keypoints={}/{}", r.good.len(), ka.len(), kb.len())?;
    Ok(())
}

fn retrieve(a: RetrieveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.matcher.config()?;
    let corpus = load_corpus(&a.corpus)?;
    let sketch = load_image(&a.sketch)?;
    writeln!(out, "rank\tdiagram_id\tslide_id\tscore\tgood_matches")?;
    for (i, h) in retrieve_diagrams(&sketch, &corpus, a.k, &cfg).iter().enumerate() {
        let slide = corpus.diagram(&h.diagram_id).map(|d| d.slide_id.as_str()).unwrap_or("");
        writeln!(out, "{}\t{}\t{}\t{:.6}\t{}", i + 1, h.diagram_id, slide, h.score, h.good_matches)?;
    }
    Ok(())
}

fn font_model_path(corpus: &Path) -> PathBuf {
    corpus.join(slideguide_core::corpus::FONT_MODEL_PATH)
}

fn font_train(a: FontTrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if !a.corpus.is_dir() {
        return Err(CliError::Io { path: a.corpus, source: io::ErrorKind::NotFound.into() });
    }
    let data = render_synthetic_dataset(a.per_font, a.seed);
    let cfg = TrainConfig { epochs: a.epochs, seed: a.seed, ..TrainConfig::default() };
    let outcome = train_with_progress::<f32>(&data, &cfg, |s| {
        let _ = writeln!(
            err,
            "epoch {}: train mse {:.5} ce {:.4}; val accuracy {:.4}",
            s.epoch, s.train_mse, s.train_ce, s.val_accuracy
        );
    })?;
    let model_path = font_model_path(&a.corpus);
    save_model(&outcome.model, &model_path)?;
    let log_path = a.corpus.join(TRAIN_LOG_PATH);
    let mut log = Vec::new();
    write_training_log(&outcome.history, &mut log)?;
    fs::write(&log_path, log).map_err(|source| CliError::Io { path: log_path.clone(), source })?;
    let best = &outcome.history[outcome.best_epoch];
    writeln!(
        out,
        "saved {} (best epoch {}, val accuracy {:.4}); log {}",
        model_path.display(),
        outcome.best_epoch,
        best.val_accuracy,
        log_path.display()
    )?;
    Ok(())
}

fn font_classify(a: FontClassifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(&font_model_path(&a.corpus))?;
    let p = classify_font(&load_image(&a.crop)?, &model)?;
    writeln!(out, "{}\t{}\t{:.6}", p.label, p.font_name, p.confidence)?;
    Ok(())
}

fn serve(a: ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = ServiceConfig {
        host: a.host,
        port: a.port,
        layout_top_k: a.layout_k,
        diagram_top_k: a.diagram_k,
        heatmap_k: a.heatmap_k,
        matcher: a.matcher.config()?,
        cors_origins: a.cors_origins,
        ..ServiceConfig::new(a.corpus)
    };
    let state = service::AppState::load(config.clone())?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = service::bind(&config).await?;
        writeln!(
            out,
            "serving {} slides / {} diagrams on http://{}",
            state.corpus().slides().len(),
            state.corpus().diagrams().len(),
            listener.local_addr().map_err(ServiceError::Io)?
        )?;
        out.flush()?;
        service::serve_on(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}
