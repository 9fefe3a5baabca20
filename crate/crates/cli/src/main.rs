use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hsreid_core::cube::{read_cube, uniform_wavelengths, write_cube, DataType, HyperCube, Interleave};
use hsreid_core::pipeline::{mode_cube, run_manifest, write_outputs, Mode, PipelineConfig};
use hsreid_core::pnm;
use hsreid_core::reid::{cmc, distance_matrix_with, DatasetManifest, DistanceMatrix};
use hsreid_core::segment::segment_cube;
use hsreid_core::spectral::{skin_signatures_with_overlap, SkinSignatureSet};
use hsreid_core::synth::{generate_scenes, write_dataset, Illumination, SignatureMode, SyntheticSpec};

mod rundir;

use rundir::RunDir;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or run directory: exit 2.
    Usage(String),
    /// A pipeline stage failed: exit 1.
    Stage(String),
}

impl From<hsreid_core::Error> for CliError {
    fn from(e: hsreid_core::Error) -> Self {
        CliError::Stage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(e: hsreid_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "hsreid",
    version,
    about = "Skin-signature person re-identification on hyperspectral cubes"
)]
#[command(propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic gallery/probe dataset with a manifest.
    Synth(SynthArgs),
    /// Segment one cube into superpixels.
    Segment(SegmentArgs),
    /// Extract skin signatures from a cube, a label map and a skin mask.
    Signatures(SignaturesArgs),
    /// Build the probe-by-gallery distance matrix from signature files.
    Match(MatchArgs),
    /// Compute the CMC curve from a distance matrix.
    Cmc(CmcArgs),
    /// Integrate a cube into a three-band RGB cube.
    Rgb(RgbArgs),
    /// Run segmentation, signatures, matching and CMC over a manifest.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Parent directory for run directories [default: output_dir from config, else "runs"].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Name of this run's directory under --out.
    #[arg(long, value_name = "NAME")]
    label: String,
    /// Replace an existing run directory with the same label.
    #[arg(long)]
    force: bool,
    /// Worker threads [default: all cores].
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

/// Flags mirroring the config keys. Kept as strings so `auto` works.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Superpixel count.
    #[arg(long = "k", visible_alias = "K", value_name = "K")]
    k: Option<String>,
    /// Balancing weight, or `auto`.
    #[arg(long)]
    lambda: Option<String>,
    /// Kernel width in radians, or `auto`.
    #[arg(long)]
    sigma: Option<String>,
    /// Per-image distance aggregation: mean or min.
    #[arg(long)]
    aggregation: Option<String>,
    /// RGB windows in nm as blue,green,red, e.g. 400-500,500-600,600-700.
    #[arg(long = "rgb-windows", value_name = "WINDOWS")]
    rgb_windows: Option<String>,
    /// Fraction of a superpixel that must be skin for it to count.
    #[arg(long = "min-overlap", value_name = "FRACTION")]
    min_overlap: Option<String>,
}

#[derive(Args)]
struct CubeArgs {
    /// ENVI header.
    #[arg(long, value_name = "HDR")]
    cube: PathBuf,
    /// Raster file [default: header path with .img extension].
    #[arg(long, value_name = "IMG")]
    raster: Option<PathBuf>,
}

impl CubeArgs {
    fn load(&self) -> CliResult<HyperCube> {
        let raster = self.raster.clone().unwrap_or_else(|| self.cube.with_extension("img"));
        Ok(read_cube(&self.cube, &raster)?)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 15)]
    persons: usize,
    #[arg(long, default_value_t = 48)]
    height: usize,
    #[arg(long, default_value_t = 48)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    bands: usize,
    /// Band range in nm, first and last band centers.
    #[arg(long, value_name = "LO-HI", default_value = "400-1000")]
    range: String,
    /// Skin patch size as HxW.
    #[arg(long, default_value = "12x12")]
    patch: String,
    /// Clutter rectangles per image.
    #[arg(long, default_value_t = 2)]
    clutter: usize,
    /// Gaussian noise level.
    #[arg(long, default_value_t = 0.005)]
    noise: f64,
    /// Probe illumination gain range as LO,HI.
    #[arg(long, value_name = "LO,HI", default_value = "0.7,1.3")]
    gain: String,
    /// Add a random linear spectral tilt of at most this strength to probes.
    #[arg(long, value_name = "STRENGTH")]
    tilt: Option<f64>,
    /// Skin signatures: metamer (identical RGB) or distinct.
    #[arg(long, default_value = "metamer")]
    signatures: String,
    /// Minimum pairwise angle between metamer skins, radians.
    #[arg(long, default_value_t = 0.15)]
    min_angle: f64,
    /// RGB windows the metamers are matched under, blue,green,red.
    #[arg(
        long = "rgb-windows",
        value_name = "WINDOWS",
        default_value = "400-500,500-600,600-700"
    )]
    rgb_windows: String,
    /// Raster sample type: f32, f64 or u16.
    #[arg(long = "data-type", default_value = "f32")]
    data_type: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    input: CubeArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SignaturesArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    input: CubeArgs,
    /// Label map written by `segment` (labels.bin).
    #[arg(long, value_name = "BIN")]
    labels: PathBuf,
    /// Skin mask (PBM or PGM, nonzero = skin).
    #[arg(long, value_name = "PNM")]
    mask: PathBuf,
    /// Image id used for the output file name [default: cube file stem].
    #[arg(long)]
    id: Option<String>,
    /// Integrate to RGB before averaging.
    #[arg(long, default_value = "hyper")]
    mode: Mode,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_name = "JSON")]
    manifest: PathBuf,
    /// Directories searched in order for `<image_id>.csv`.
    #[arg(long, value_name = "DIR", required = true, num_args = 1..)]
    signatures: Vec<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct CmcArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_name = "CSV")]
    distances: PathBuf,
    #[arg(long, value_name = "JSON")]
    manifest: PathBuf,
}

#[derive(Args)]
struct RgbArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    input: CubeArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output raster sample type: f32, f64 or u16.
    #[arg(long = "data-type", default_value = "f32")]
    data_type: String,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_name = "JSON")]
    manifest: PathBuf,
    #[arg(long, default_value = "hyper")]
    mode: Mode,
    #[command(flatten)]
    config: ConfigArgs,
}

/// Config file first, then flags on top.
fn resolve_config(run: &RunArgs, flags: &ConfigArgs) -> CliResult<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &run.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        config.apply_kv(&text).map_err(usage)?;
    }
    let pairs = [
        ("k", &flags.k),
        ("lambda", &flags.lambda),
        ("sigma", &flags.sigma),
        ("aggregation", &flags.aggregation),
        ("rgb_windows", &flags.rgb_windows),
        ("min_overlap", &flags.min_overlap),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            config.set(key, v).map_err(usage)?;
        }
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn plan_run(run: &RunArgs, config: &PipelineConfig) -> CliResult<RunDir> {
    let out = run.out.clone().unwrap_or_else(|| config.output_dir.clone());
    RunDir::plan(&out, &run.label, run.force)
}

fn write_text(dir: &Path, name: &str, text: &str) -> hsreid_core::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| hsreid_core::Error::Io { path, source: e })
}

fn parse_pair<T: std::str::FromStr>(s: &str, sep: char, what: &str) -> CliResult<(T, T)> {
    let err = || CliError::Usage(format!("{what}: expected two values separated by {sep:?}, got {s:?}"));
    let (a, b) = s.split_once(sep).ok_or_else(err)?;
    Ok((
        a.trim().parse().map_err(|_| err())?,
        b.trim().parse().map_err(|_| err())?,
    ))
}

fn synth(args: &SynthArgs) -> CliResult<PathBuf> {
    let (lo, hi): (f64, f64) = parse_pair(&args.range, '-', "--range")?;
    if args.bands < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Usage(format!(
            "need >= 2 bands over an increasing range, got {} over {lo}-{hi}",
            args.bands
        )));
    }
    let mode = match args.signatures.as_str() {
        "metamer" => SignatureMode::Metamer {
            min_angle: args.min_angle,
        },
        "distinct" => SignatureMode::Distinct,
        other => {
            return Err(CliError::Usage(format!(
                "--signatures must be metamer or distinct, got {other:?}"
            )))
        }
    };
    let spec = SyntheticSpec {
        height: args.height,
        width: args.width,
        wavelengths: uniform_wavelengths(lo, hi, args.bands),
        persons: args.persons,
        patch: parse_pair(&args.patch, 'x', "--patch")?,
        clutter: args.clutter,
        noise: args.noise,
        gain_range: parse_pair(&args.gain, ',', "--gain")?,
        illumination: args
            .tilt
            .map_or(Illumination::Scalar, |strength| Illumination::Tilted { strength }),
        mode,
        windows: args.rgb_windows.parse().map_err(usage)?,
        data_type: args.data_type.parse().map_err(usage)?,
        seed: args.seed,
    };
    spec.validate().map_err(usage)?;
    let config = resolve_config(&args.run, &ConfigArgs::default())?;
    let run = plan_run(&args.run, &config)?;
    let dataset = generate_scenes(&spec)?;
    run.commit(|dir| write_dataset(&dataset, dir, spec.data_type).map(|_| ()))
}

fn segment(args: &SegmentArgs) -> CliResult<PathBuf> {
    let config = resolve_config(&args.run, &args.config)?;
    let run = plan_run(&args.run, &config)?;
    let cube = args.input.load()?;
    let seg = segment_cube(&cube, &config.segment_params())?;
    let mut trace = String::from("step,edge,gain\n");
    for (step, (edge, gain)) in seg.trace.steps.iter().enumerate() {
        trace.push_str(&format!("{},{edge},{gain}\n", step + 1));
    }
    let params = format!(
        "k = {}\nlambda = {}\nsigma = {}\nobjective = {}\n",
        seg.map.k(),
        seg.lambda,
        seg.sigma,
        seg.trace.objective
    );
    run.commit(|dir| {
        pnm::write_label_map(&seg.map, dir, "labels")?;
        write_text(dir, "trace.csv", &trace)?;
        write_text(dir, "segment.txt", &params)
    })
}

fn signatures(args: &SignaturesArgs) -> CliResult<PathBuf> {
    let config = resolve_config(&args.run, &args.config)?;
    let run = plan_run(&args.run, &config)?;
    let id = match &args.id {
        Some(id) => id.clone(),
        None => args
            .input
            .cube
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Usage("cannot derive an image id from --cube; pass --id".into()))?
            .to_string(),
    };
    let cube = mode_cube(&args.input.load()?, args.mode, &config.rgb_windows)?;
    let map = pnm::read_label_map(&args.labels)?;
    let mask = pnm::read_mask(&args.mask)?;
    let set = skin_signatures_with_overlap(&id, &cube, &map, &mask, config.min_overlap)?;
    let csv = set.to_csv(cube.wavelengths())?;
    run.commit(|dir| write_text(dir, &format!("{id}.csv"), &csv))
}

fn find_signatures(dirs: &[PathBuf], id: &str) -> CliResult<SkinSignatureSet> {
    let name = format!("{id}.csv");
    let path = dirs
        .iter()
        .map(|d| d.join(&name))
        .find(|p| p.is_file())
        .ok_or_else(|| CliError::Stage(format!("no {name} in any --signatures directory")))?;
    let text = fs::read_to_string(&path).map_err(|e| CliError::Stage(format!("{}: {e}", path.display())))?;
    Ok(SkinSignatureSet::from_csv(id, &text)?.1)
}

fn match_cmd(args: &MatchArgs) -> CliResult<PathBuf> {
    let config = resolve_config(&args.run, &args.config)?;
    let run = plan_run(&args.run, &config)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let load = |ids: Vec<&str>| {
        ids.into_iter()
            .map(|id| find_signatures(&args.signatures, id))
            .collect::<CliResult<Vec<_>>>()
    };
    let probes = load(manifest.probes().map(|e| e.image_id.as_str()).collect())?;
    let gallery = load(manifest.gallery().map(|e| e.image_id.as_str()).collect())?;
    let matrix = distance_matrix_with(&probes, &gallery, config.aggregation)?;
    let csv = matrix.to_csv();
    run.commit(|dir| write_text(dir, "distances.csv", &csv))
}

fn cmc_cmd(args: &CmcArgs) -> CliResult<PathBuf> {
    let config = resolve_config(&args.run, &ConfigArgs::default())?;
    let run = plan_run(&args.run, &config)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let text = fs::read_to_string(&args.distances)
        .map_err(|e| CliError::Stage(format!("{}: {e}", args.distances.display())))?;
    let curve = cmc(&DistanceMatrix::from_csv(&text)?, &manifest)?;
    let csv = curve.to_csv();
    run.commit(|dir| write_text(dir, "cmc.csv", &csv))
}

fn rgb(args: &RgbArgs) -> CliResult<PathBuf> {
    let config = resolve_config(&args.run, &args.config)?;
    let data_type: DataType = args.data_type.parse().map_err(usage)?;
    let run = plan_run(&args.run, &config)?;
    let rgb = mode_cube(&args.input.load()?, Mode::Rgb, &config.rgb_windows)?;
    run.commit(|dir| {
        write_cube(
            &rgb,
            &dir.join("rgb.hdr"),
            &dir.join("rgb.img"),
            Interleave::Bip,
            data_type,
        )
    })
}

fn pipeline(args: &PipelineArgs) -> CliResult<PathBuf> {
    let config = resolve_config(&args.run, &args.config)?;
    let run = plan_run(&args.run, &config)?;
    let output = run_manifest(&args.manifest, args.mode, &config)?;
    let summary = format!(
        "mode = {}\nk = {}\naggregation = {}\nrgb_windows = {}\nmin_overlap = {}\nrank1 = {}\n",
        args.mode,
        config.k,
        config.aggregation,
        config.rgb_windows,
        config.min_overlap,
        output.curve.rank1()
    );
    run.commit(|dir| {
        write_outputs(&output, dir)?;
        write_text(dir, "summary.txt", &summary)
    })
}

fn run_args(command: &Command) -> &RunArgs {
    match command {
        Command::Synth(a) => &a.run,
        Command::Segment(a) => &a.run,
        Command::Signatures(a) => &a.run,
        Command::Match(a) => &a.run,
        Command::Cmc(a) => &a.run,
        Command::Rgb(a) => &a.run,
        Command::Pipeline(a) => &a.run,
    }
}

fn dispatch(command: &Command) -> CliResult<PathBuf> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = run_args(command).jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Stage(e.to_string()))?;
    pool.install(|| match command {
        Command::Synth(a) => synth(a),
        Command::Segment(a) => segment(a),
        Command::Signatures(a) => signatures(a),
        Command::Match(a) => match_cmd(a),
        Command::Cmc(a) => cmc_cmd(a),
        Command::Rgb(a) => rgb(a),
        Command::Pipeline(a) => pipeline(a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("usage error"));
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli.command) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Stage(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
