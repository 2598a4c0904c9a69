use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shotbound::classify::{AdaptiveParams, Arbitration, GbdtModel, PostfilterParams};
use shotbound::dataprep::{
    accepted_centers, finalize_annotations, merge_candidates, parse_frame_list, read_manifest, read_votes,
    vote_records, write_manifest,
};
use shotbound::evaluate::{format_table, match_events, EvalReport, Tally};
use shotbound::events::{format_detections, parse_events, sort_events, BoundaryEvent};
use shotbound::frameio::{read_image_sequence, Frame, FrameIoError, Y4mReader};
use shotbound::metrics::{format_g9, write_feature_csv, FeatureTrack, MetricConfig, SCALAR_NAMES};
use shotbound::pipeline::{extract_stream, run_detection, Detector};
use shotbound::synthkit::{benchmark_corpus, generate, parse_manifest, write_y4m, SequenceSpec};
use shotbound::train::{
    cross_validate, feature_importance, frame_labels, train_models, DetectParams, LabeledVideo, TrainParams,
};

#[derive(Parser)]
#[command(name = "shotbound", version, about = "Shot boundary detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect shot boundaries in a Y4M stream or image sequence.
    Detect(DetectArgs),
    /// Train cut and gradual models from annotated videos.
    Train(TrainArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Merge detector proposals into review segments.
    Candidates(CandidatesArgs),
    /// Aggregate observer votes into annotation files.
    Votes(VotesArgs),
    /// Generate synthetic clips with ground truth.
    Synth(SynthArgs),
    /// Dump per-frame features or metric tracks as CSV.
    Features(FeaturesArgs),
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// Block grid for luma mean/std.
    #[arg(long, default_value_t = 8)]
    stats_grid: usize,
    /// Block grid for cumulative edge histograms.
    #[arg(long, default_value_t = 4)]
    cum_grid: usize,
    /// Bins of the cumulative edge histograms.
    #[arg(long, default_value_t = 16)]
    cum_bins: usize,
    /// Bins per channel of the color histogram difference.
    #[arg(long, default_value_t = 16)]
    color_bins: usize,
    /// Sobel magnitude counted as an edge (0-255).
    #[arg(long, default_value_t = 64.0)]
    edge_thresh: f64,
    /// Edge density change that marks a block as different.
    #[arg(long, default_value_t = 0.15)]
    block_thresh: f64,
    /// Luma histogram bins for the Bhattacharyya distance.
    #[arg(long, default_value_t = 32)]
    luma_bins: usize,
    /// Frames of context on each side of the classified frame.
    #[arg(long, default_value_t = 2)]
    window_radius: usize,
}

impl MetricArgs {
    fn config(&self) -> MetricConfig {
        MetricConfig {
            stats_grid: self.stats_grid,
            cum_grid: self.cum_grid,
            cum_bins: self.cum_bins,
            color_bins: self.color_bins,
            edge_thresh: self.edge_thresh,
            block_thresh: self.block_thresh,
            luma_bins: self.luma_bins,
            window_radius: self.window_radius,
        }
    }
}

#[derive(Args, Clone)]
struct PostArgs {
    /// Events closer than this many frames are merged.
    #[arg(long, default_value_t = 10)]
    min_gap: usize,
    /// Longest flash, in frames.
    #[arg(long, default_value_t = 3)]
    flash_window: usize,
    /// Luma histogram distance below which frames count as identical.
    #[arg(long, default_value_t = 0.05)]
    flash_sim: f64,
    /// Skip merging and flash suppression.
    #[arg(long)]
    no_postfilter: bool,
}

impl PostArgs {
    fn params(&self) -> PostfilterParams {
        PostfilterParams {
            min_gap: self.min_gap,
            flash_window: self.flash_window,
            flash_sim: self.flash_sim,
        }
    }
}

#[derive(Args, Clone)]
struct ArbitrationArgs {
    /// Cut probability threshold.
    #[arg(long, default_value_t = 0.5)]
    p_cut: f64,
    /// Gradual probability threshold.
    #[arg(long, default_value_t = 0.5)]
    p_grad: f64,
}

impl ArbitrationArgs {
    fn params(&self) -> Arbitration {
        Arbitration {
            p_cut: self.p_cut,
            p_grad: self.p_grad,
        }
    }
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["cut_model", "threshold", "adaptive"])))]
struct DetectArgs {
    /// Y4M file, `-` for standard input, or a directory / wildcard pattern of PGM/PPM images.
    input: String,
    /// Cut model file (requires --grad-model).
    #[arg(long, requires = "grad_model")]
    cut_model: Option<PathBuf>,
    /// Gradual model file.
    #[arg(long, requires = "cut_model")]
    grad_model: Option<PathBuf>,
    /// Fixed threshold on one metric track.
    #[arg(long)]
    threshold: Option<f64>,
    /// Adaptive threshold on one metric track.
    #[arg(long)]
    adaptive: bool,
    /// Metric track for the threshold modes.
    #[arg(long, default_value = "blockmean", value_parser = clap::builder::PossibleValuesParser::new(SCALAR_NAMES))]
    metric: String,
    /// Adaptive window length, in frames.
    #[arg(long, default_value_t = 30)]
    window: usize,
    /// Adaptive threshold in standard deviations above the window mean.
    #[arg(long, default_value_t = 3.0)]
    k: f64,
    /// Adaptive threshold floor.
    #[arg(long, default_value_t = 0.05)]
    floor: f64,
    /// Output detection file (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    metrics: MetricArgs,
    #[command(flatten)]
    arbitration: ArbitrationArgs,
    #[command(flatten)]
    post: PostArgs,
}

#[derive(Args, Clone)]
struct GbdtArgs {
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5)]
    min_samples_leaf: usize,
    /// L2 regularization of leaf weights.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Negatives kept per positive sample.
    #[arg(long, default_value_t = 5.0)]
    neg_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GbdtArgs {
    fn params(&self) -> TrainParams {
        TrainParams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            min_samples_leaf: self.min_samples_leaf,
            l2_lambda: self.lambda,
            negative_subsample_ratio: self.neg_ratio,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training videos (Y4M). Each needs an annotation file next to it with
    /// the same stem and a `.txt` extension, unless --annotations is given.
    #[arg(required = true)]
    videos: Vec<PathBuf>,
    /// Directory holding `<stem>.txt` annotation files.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Where to write the cut model.
    #[arg(long, default_value = "cut.json")]
    cut_model: PathBuf,
    /// Where to write the gradual model.
    #[arg(long, default_value = "grad.json")]
    grad_model: PathBuf,
    /// Run grouped k-fold cross-validation and print the per-fold report.
    #[arg(long)]
    cv: Option<usize>,
    /// Print the top N features of the cut model by total gain.
    #[arg(long)]
    importance: Option<usize>,
    /// Write the labeled feature table (all frames) as CSV.
    #[arg(long)]
    dump_dataset: Option<PathBuf>,
    /// Matching tolerance used by --cv.
    #[arg(long, default_value_t = 2)]
    tolerance: usize,
    #[command(flatten)]
    gbdt: GbdtArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    #[command(flatten)]
    arbitration: ArbitrationArgs,
    #[command(flatten)]
    post: PostArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth annotation files.
    #[arg(long, required = true, num_args = 1..)]
    truth: Vec<PathBuf>,
    /// Detection files, in the same order as --truth.
    #[arg(long, required = true, num_args = 1..)]
    pred: Vec<PathBuf>,
    /// Frames of slack when matching events.
    #[arg(long, default_value_t = 2)]
    tolerance: usize,
    /// Throughput to show in the table.
    #[arg(long)]
    fps: Option<f64>,
    /// Frames processed, reported in JSON output.
    #[arg(long, default_value_t = 0)]
    frames: usize,
    /// Row label in the table.
    #[arg(long, default_value = "detector")]
    method: String,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("len").required(true).args(["length", "video"])))]
struct CandidatesArgs {
    /// Detector output files: one frame ordinal per line.
    #[arg(required = true)]
    detections: Vec<PathBuf>,
    /// Identifier written into the manifest.
    #[arg(long)]
    video_id: String,
    /// Stream length in frames.
    #[arg(long)]
    length: Option<usize>,
    /// Count frames of this Y4M stream instead of passing --length.
    #[arg(long)]
    video: Option<String>,
    /// Proposals closer than this are merged into one candidate.
    #[arg(long, default_value_t = 40)]
    min_separation: usize,
    /// Output manifest (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VotesArgs {
    /// Candidate manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// Votes CSV: segment_id,judgment.
    #[arg(long)]
    votes: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_votes: usize,
    #[arg(long, default_value_t = 2)]
    margin: usize,
    /// Write `<video_id>.txt` annotation files here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["manifest", "benchmark"])))]
struct SynthArgs {
    /// JSON list of sequence specs.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Generate the fixed 20-sequence benchmark corpus.
    #[arg(long)]
    benchmark: bool,
    /// Seed for --benchmark.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for `<name>.y4m` and `<name>.txt`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Y4M file, `-` for standard input, or an image sequence pattern.
    input: String,
    /// Output CSV (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write only the six per-pair metric tracks.
    #[arg(long)]
    tracks: bool,
    /// Annotation file; adds a label column.
    #[arg(long, conflicts_with = "tracks")]
    annotations: Option<PathBuf>,
    #[command(flatten)]
    metrics: MetricArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Candidates(a) => cmd_candidates(a),
        Command::Votes(a) => cmd_votes(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Features(a) => cmd_features(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>()
                .is_some_and(|e| matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe))
    })
}

type FrameSource = Box<dyn Iterator<Item = std::result::Result<Frame, FrameIoError>>>;

fn open_frames(input: &str) -> Result<FrameSource> {
    if input == "-" {
        let reader = Y4mReader::new(BufReader::new(io::stdin())).context("reading standard input")?;
        return Ok(Box::new(reader));
    }
    let path = Path::new(input);
    if path.is_dir() || input.contains(['*', '?']) {
        let seq = read_image_sequence(input).with_context(|| format!("reading images `{input}`"))?;
        return Ok(Box::new(seq));
    }
    let file = File::open(path).with_context(|| format!("opening `{input}`"))?;
    let reader = Y4mReader::new(BufReader::new(file)).with_context(|| format!("reading `{input}`"))?;
    Ok(Box::new(reader))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating `{}`", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading `{}`", path.display()))
}

fn load_model(path: &Path) -> Result<GbdtModel> {
    GbdtModel::from_json(&read_text(path)?).with_context(|| format!("loading model `{}`", path.display()))
}

fn load_events(path: &Path) -> Result<Vec<BoundaryEvent>> {
    let mut events = parse_events(&read_text(path)?).with_context(|| format!("parsing `{}`", path.display()))?;
    sort_events(&mut events);
    Ok(events)
}

fn cmd_detect(a: DetectArgs) -> Result<()> {
    let models = match (&a.cut_model, &a.grad_model) {
        (Some(c), Some(g)) => Some((load_model(c)?, load_model(g)?)),
        _ => None,
    };
    let detector = match (&models, a.threshold) {
        (Some((cut, gradual)), _) => Detector::Models {
            cut,
            gradual,
            arbitration: a.arbitration.params(),
        },
        (None, Some(theta)) => Detector::Threshold {
            metric: &a.metric,
            theta,
        },
        (None, None) => Detector::Adaptive {
            metric: &a.metric,
            params: AdaptiveParams {
                window: a.window,
                k: a.k,
                floor: a.floor,
            },
        },
    };
    let post = a.post.params();
    let frames = open_frames(&a.input)?;
    let run = run_detection(
        frames,
        &a.metrics.config(),
        &detector,
        (!a.post.no_postfilter).then_some(&post),
    )?;
    let mut out = open_output(a.output.as_deref())?;
    out.write_all(format_detections(&run.events).as_bytes())?;
    out.flush()?;
    eprintln!(
        "processed {} frames in {:.3} s ({:.1} fps), {} events",
        run.frames,
        run.elapsed_secs,
        run.fps,
        run.events.len()
    );
    Ok(())
}

fn annotation_path(video: &Path, dir: Option<&Path>) -> PathBuf {
    let stem = video.file_stem().unwrap_or_default();
    match dir {
        Some(d) => d.join(stem).with_extension("txt"),
        None => video.with_extension("txt"),
    }
}

fn load_labeled(videos: &[PathBuf], ann_dir: Option<&Path>, cfg: &MetricConfig) -> Result<Vec<LabeledVideo>> {
    videos
        .iter()
        .map(|v| {
            let name = v.to_string_lossy().into_owned();
            let track = extract_stream(open_frames(&name)?, cfg).with_context(|| format!("extracting `{name}`"))?;
            let truth = load_events(&annotation_path(v, ann_dir))?;
            let id = v.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(LabeledVideo { id, track, truth })
        })
        .collect()
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    let cfg = a.metrics.config();
    let params = a.gbdt.params();
    let videos = load_labeled(&a.videos, a.annotations.as_deref(), &cfg)?;
    if let Some(path) = &a.dump_dataset {
        dump_dataset(path, &videos)?;
    }
    if let Some(k) = a.cv {
        let detect = DetectParams {
            arbitration: a.arbitration.params(),
            postfilter: a.post.params(),
            tolerance: a.tolerance,
        };
        let cv = cross_validate(&videos, &params, k, &detect)?;
        for (i, f) in cv.folds.iter().enumerate() {
            writeln!(
                out,
                "fold {i}: held out {} F1 {:.4} P {:.4} R {:.4}",
                f.held_out.join(","),
                f.report.overall.f1,
                f.report.overall.precision,
                f.report.overall.recall
            )?;
        }
        writeln!(out, "mean F1 {:.4}", cv.mean_f1)?;
    }
    let models = train_models(&videos, &params)?;
    fs::write(&a.cut_model, models.cut.to_json()).with_context(|| format!("writing `{}`", a.cut_model.display()))?;
    fs::write(&a.grad_model, models.gradual.to_json())
        .with_context(|| format!("writing `{}`", a.grad_model.display()))?;
    if let Some(n) = a.importance {
        for (name, gain) in feature_importance(&models.cut).into_iter().take(n) {
            writeln!(out, "{name}\t{}", format_g9(gain))?;
        }
    }
    eprintln!(
        "trained {} cut trees and {} gradual trees on {} videos",
        models.cut.trees.len(),
        models.gradual.trees.len(),
        videos.len()
    );
    Ok(())
}

fn dump_dataset(path: &Path, videos: &[LabeledVideo]) -> Result<()> {
    let mut out = open_output(Some(path))?;
    // one header for the whole file: later videos are appended without theirs
    for (i, v) in videos.iter().enumerate() {
        let labels = frame_labels(&v.id, &v.truth, v.track.len())?;
        let labels: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &v.track, Some(&labels))?;
        let body = if i == 0 {
            &buf[..]
        } else {
            let skip = buf.iter().position(|&b| b == b'\n').map_or(buf.len(), |p| p + 1);
            &buf[skip..]
        };
        out.write_all(body)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    if a.truth.len() != a.pred.len() {
        bail!(
            "got {} truth files but {} prediction files",
            a.truth.len(),
            a.pred.len()
        );
    }
    let mut tally = Tally::default();
    for (t, p) in a.truth.iter().zip(&a.pred) {
        tally += Tally::from_matching(&match_events(&load_events(t)?, &load_events(p)?, a.tolerance)?);
    }
    let report = EvalReport::from_tally(&tally).with_throughput(a.frames, a.fps);
    if a.json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        write!(out, "{}", format_table(&[(a.method.as_str(), &report)]))?;
        writeln!(
            out,
            "cut: F1 {:.4}  gradual: F1 {:.4}  kind mismatches: {}",
            report.cut.f1, report.gradual.f1, report.kind_mismatches
        )?;
    }
    Ok(())
}

fn cmd_candidates(a: CandidatesArgs) -> Result<()> {
    let length = match (a.length, &a.video) {
        (Some(n), _) => n,
        (None, Some(v)) => {
            let mut n = 0;
            for f in open_frames(v)? {
                f?;
                n += 1;
            }
            n
        }
        (None, None) => unreachable!("clap requires one of --length/--video"),
    };
    let outputs = a
        .detections
        .iter()
        .map(|p| parse_frame_list(&read_text(p)?).with_context(|| format!("parsing `{}`", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let segments = merge_candidates(&a.video_id, &outputs, length, a.min_separation);
    write_manifest(&segments, open_output(a.output.as_deref())?)?;
    eprintln!("{} candidate segments", segments.len());
    Ok(())
}

fn cmd_votes(a: VotesArgs) -> Result<()> {
    let manifest = read_manifest(open_file(&a.manifest)?)?;
    let votes = read_votes(open_file(&a.votes)?)?;
    let records = vote_records(&votes, a.min_votes, a.margin);
    let mut out = io::stdout().lock();
    writeln!(out, "segment_id,yes,no,status")?;
    for r in &records {
        let yes = r.votes.iter().filter(|&&v| v).count();
        writeln!(
            out,
            "{},{},{},{}",
            r.segment_id,
            yes,
            r.votes.len() - yes,
            r.status.as_str()
        )?;
    }
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))?;
        let accepted = accepted_centers(&manifest, &records);
        let mut videos: BTreeMap<&str, Vec<usize>> =
            manifest.iter().map(|s| (s.video_id.as_str(), Vec::new())).collect();
        for (video, centers) in &accepted {
            videos.insert(video, centers.clone());
        }
        for (video, centers) in videos {
            let path = dir.join(format!("{video}.txt"));
            fs::write(&path, finalize_annotations(&centers))
                .with_context(|| format!("writing `{}`", path.display()))?;
        }
    }
    Ok(())
}

fn open_file(path: &Path) -> Result<impl Read> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening `{}`", path.display()))?,
    ))
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let specs: Vec<SequenceSpec> = match &a.manifest {
        Some(p) => parse_manifest(&read_text(p)?)?,
        None => benchmark_corpus(a.seed),
    };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating `{}`", a.out_dir.display()))?;
    for spec in &specs {
        let clip = generate(spec)?;
        let video = a.out_dir.join(format!("{}.y4m", spec.name));
        let sink = BufWriter::new(File::create(&video).with_context(|| format!("creating `{}`", video.display()))?);
        write_y4m(&clip.frames, &clip.info, sink)?.flush()?;
        let notes: String = clip
            .distractors
            .iter()
            .map(|d| format!("# distractor {:?} frames {}-{}\n", d.kind, d.start, d.end))
            .collect();
        let text = format!(
            "# {} ({} frames)\n{notes}{}",
            spec.name,
            clip.frames.len(),
            shotbound::events::format_annotations(&clip.truth)
        );
        fs::write(a.out_dir.join(format!("{}.txt", spec.name)), text)?;
        eprintln!(
            "{}: {} frames, {} events",
            spec.name,
            clip.frames.len(),
            clip.truth.len()
        );
    }
    Ok(())
}

fn write_tracks<W: Write>(mut sink: W, track: &FeatureTrack) -> Result<()> {
    writeln!(sink, "frame_index,{}", SCALAR_NAMES.join(","))?;
    for (i, p) in track.pairs.iter().enumerate() {
        let row: Vec<String> = p.scalars.iter().map(|&v| format_g9(v)).collect();
        writeln!(sink, "{i},{}", row.join(","))?;
    }
    sink.flush()?;
    Ok(())
}

fn cmd_features(a: FeaturesArgs) -> Result<()> {
    let track = extract_stream(open_frames(&a.input)?, &a.metrics.config())?;
    let out = open_output(a.output.as_deref())?;
    if a.tracks {
        return write_tracks(out, &track);
    }
    match &a.annotations {
        Some(p) => {
            let truth = load_events(p)?;
            let labels = frame_labels(&a.input, &truth, track.len())?;
            let labels: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
            write_feature_csv(out, &track, Some(&labels))?;
        }
        None => write_feature_csv(out, &track, None)?,
    }
    Ok(())
}
