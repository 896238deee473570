use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chronoseries::io::{self as csio, CsvOptions};
use chronoseries::models::{
    detect_periodicity, AnomalyDetector, ForecasterModel, Metric, PeriodicAverage, ReconstructorModel,
};
use chronoseries::ops::{self, LabelValues};
use chronoseries::plot::{self, ImageOptions};
use chronoseries::transform::{self, AggOp, Interpolation};
use chronoseries::{AnySeries, Element, Error, PointSeries, Result, TimeSeries, TimeUnit, TimeZone};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

#[derive(Parser)]
#[command(name = "chronoseries", version, about = "Time series processing from the command line")]
struct Cli {
    /// Log verbosity on standard error.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the summary line, labels and per-label statistics.
    Info(InputArgs),
    /// Resample a point series onto a physical unit grid.
    Resample {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        unit: String,
        #[arg(long, default_value = "linear")]
        interpolation: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Aggregate a point series into slots.
    Aggregate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        unit: String,
        /// Comma separated list of min, max, avg, sum.
        #[arg(long, default_value = "avg")]
        ops: String,
        /// Zone to move the series to before aligning slots.
        #[arg(long)]
        tz: Option<String>,
        #[arg(long, default_value = "linear")]
        interpolation: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Apply operations in order, e.g. `--apply normalize --apply mavg:24`.
    Ops {
        #[command(flatten)]
        input: InputArgs,
        /// One of min, max, sum, avg, diff, csum, derivative, integral,
        /// normalize, offset:X, rescale:X, mavg:N, filter:a,b, slice:FROM,TO,
        /// merge:PATH, tz:ZONE.
        #[arg(long, required = true)]
        apply: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a forecaster and append predicted elements.
    Forecast {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Cross validate with this many rounds before fitting.
        #[arg(long)]
        cross_validate: Option<usize>,
        /// Evaluate one-step errors on the input after fitting.
        #[arg(long)]
        evaluate: bool,
        #[arg(long, default_value = "rmse,mae,mape")]
        metrics: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rebuild fully lost gaps.
    Reconstruct {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Add an anomaly index to every element.
    DetectAnomalies {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write an HTML page or a PNG/SVG image.
    Plot {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, conflicts_with = "image", required_unless_present = "image")]
        html: Option<PathBuf>,
        #[arg(long)]
        image: Option<PathBuf>,
        /// Comma separated labels to draw in images.
        #[arg(long)]
        labels: Option<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long, default_value_t = plot::DEFAULT_MAX_POINTS)]
        max_points: usize,
        #[arg(long, default_value_t = 1000)]
        width: u32,
        #[arg(long, default_value_t = 420)]
        height: u32,
        /// JavaScript file to inline as the page renderer.
        #[arg(long)]
        renderer: Option<PathBuf>,
    },
    /// Convert between CSV and the native format.
    Convert {
        #[command(flatten)]
        input: InputArgs,
        /// Defaults to the other format than the input's.
        #[arg(long, value_enum)]
        to: Option<Format>,
        #[arg(long, short, default_value = "-")]
        out: String,
    },
}

#[derive(Args)]
struct InputArgs {
    /// CSV or native file; "-" reads standard input.
    input: String,
    /// Zone for naive CSV timestamps.
    #[arg(long)]
    input_tz: Option<String>,
    /// Separator character for CSV input.
    #[arg(long)]
    separator: Option<char>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path; "-" writes standard output.
    #[arg(long, short, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = Format::Native)]
    format: Format,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::PeriodicAverage)]
    model: ModelKind,
    /// Cycle length in elements; detected from the data when omitted.
    #[arg(long)]
    periodicity: Option<usize>,
    /// Window length in elements; defaults to the periodicity.
    #[arg(long)]
    window: Option<usize>,
    /// Save the fitted model to this file.
    #[arg(long)]
    fit_save: Option<PathBuf>,
    /// Use a saved model instead of fitting.
    #[arg(long, conflicts_with_all = ["fit_save", "periodicity", "window"])]
    load: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Native,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    PeriodicAverage,
}

macro_rules! each {
    ($series:expr, $s:ident => $body:expr) => {
        match $series {
            AnySeries::Points($s) => AnySeries::from($body),
            AnySeries::Slots($s) => AnySeries::from($body),
        }
    };
}

fn read_input(args: &InputArgs) -> Result<AnySeries> {
    let bytes = if args.input == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).map_err(|e| io_error("<stdin>", e))?;
        buf
    } else {
        std::fs::read(&args.input).map_err(|e| io_error(&args.input, e))?
    };
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::NotEnoughData(format!("{} is empty", args.input)));
    }
    if csio::is_native(&String::from_utf8_lossy(&bytes[..bytes.len().min(64)])) {
        let text = String::from_utf8(bytes).map_err(|e| Error::Encoding(e.to_string()))?;
        return csio::load_str(&text);
    }
    let separator = args
        .separator
        .map(|c| u8::try_from(c).map_err(|_| Error::Invalid(format!("separator {c:?} is not a single byte"))))
        .transpose()?;
    let options = CsvOptions {
        separator,
        tz: args.input_tz.as_deref().map(str::parse).transpose()?,
        ..CsvOptions::default()
    };
    Ok(AnySeries::Points(csio::from_csv_bytes(&bytes, &options)?))
}

fn io_error(path: impl AsRef<Path>, e: std::io::Error) -> Error {
    Error::Io { path: path.as_ref().to_path_buf(), source: e }
}

fn points(series: AnySeries) -> Result<PointSeries> {
    match series {
        AnySeries::Points(p) => Ok(p),
        AnySeries::Slots(_) => Err(Error::KindMismatch("this command needs a point series, got slots".into())),
    }
}

/// Writes `bytes` to `out`, replacing the target only once fully written.
fn write_artifact(out: &str, bytes: &[u8]) -> Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| io_error("<stdout>", e))?;
        return Ok(());
    }
    let path = Path::new(out);
    let name = path.file_name().ok_or_else(|| Error::Invalid(format!("{out} is not a file path")))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io_error(path, e)
    })
}

fn serialize<E: Element>(series: &TimeSeries<E>, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Native => csio::save_writer(series, &mut buf)?,
        Format::Csv => csio::to_csv_writer(series, &mut buf)?,
    }
    Ok(buf)
}

fn write_series(series: &AnySeries, out: &OutputArgs) -> Result<()> {
    let bytes = match series {
        AnySeries::Points(s) => serialize(s, out.format)?,
        AnySeries::Slots(s) => serialize(s, out.format)?,
    };
    write_artifact(&out.out, &bytes)
}

fn print_stats(name: &str, values: &LabelValues) {
    let parts: Vec<String> = values.iter().map(|(l, v)| format!("{l:?}: {v}")).collect();
    println!("{name}: {{{}}}", parts.join(", "));
}

fn info_command(series: &AnySeries) -> Result<()> {
    println!("{}", series.summarize());
    println!("labels: {}", series.labels().join(", "));
    if !series.is_empty() {
        match series {
            AnySeries::Points(s) => stats(s),
            AnySeries::Slots(s) => stats(s),
        }
    }
    Ok(())
}

fn stats<E: Element>(s: &TimeSeries<E>) {
    let names = s.index_names();
    if !names.is_empty() {
        println!("indexes: {}", names.join(", "));
    }
    for (name, f) in [
        ("min", ops::min::<E> as fn(&TimeSeries<E>) -> Result<LabelValues>),
        ("max", ops::max::<E>),
        ("avg", ops::avg::<E>),
    ] {
        if let Ok(v) = f(s) {
            print_stats(name, &v);
        }
    }
}

fn split_op(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (spec, None),
    }
}

fn require<'a>(name: &str, arg: Option<&'a str>) -> Result<&'a str> {
    arg.ok_or_else(|| Error::Invalid(format!("operation {name} needs an argument, as in {name}:VALUE")))
}

fn number(name: &str, arg: Option<&str>) -> Result<f64> {
    let text = require(name, arg)?;
    text.parse().map_err(|_| Error::Invalid(format!("{name}: {text:?} is not a number")))
}

fn apply_op<E: Element>(series: &TimeSeries<E>, spec: &str) -> Result<Option<TimeSeries<E>>>
where
    AnySeries: From<TimeSeries<E>>,
{
    let (name, arg) = split_op(spec);
    let out = match name {
        "min" | "max" | "sum" | "avg" => {
            let values = match name {
                "min" => ops::min(series)?,
                "max" => ops::max(series)?,
                "sum" => ops::sum(series)?,
                _ => ops::avg(series)?,
            };
            print_stats(name, &values);
            return Ok(None);
        }
        "diff" => ops::diff(series)?,
        "csum" => ops::csum(series)?,
        "derivative" => ops::derivative(series)?,
        "integral" => ops::integral(series)?,
        "normalize" => ops::normalize(series)?,
        "offset" => ops::offset(series, number(name, arg)?)?,
        "rescale" => ops::rescale(series, number(name, arg)?)?,
        "mavg" => {
            let text = require(name, arg)?;
            let window = text.parse().map_err(|_| Error::Invalid(format!("mavg: {text:?} is not a window length")))?;
            ops::mavg(series, window)?
        }
        "filter" => {
            let labels: Vec<&str> = require(name, arg)?.split(',').map(str::trim).collect();
            ops::filter(series, &labels)?
        }
        "slice" => {
            let text = require(name, arg)?;
            let (from, to) = text
                .split_once(',')
                .ok_or_else(|| Error::Invalid(format!("slice needs FROM,TO epoch seconds, got {text:?}")))?;
            ops::slice(series, number(name, Some(from.trim()))?, number(name, Some(to.trim()))?)?
        }
        "tz" => series.change_tz(require(name, arg)?.parse()?),
        "merge" => {
            let path = require(name, arg)?;
            let other = read_input(&InputArgs { input: path.to_string(), input_tz: None, separator: None })?;
            let other: TimeSeries<E> = match (AnySeries::from(series.clone()), other) {
                (AnySeries::Points(_), AnySeries::Points(o)) => cast(AnySeries::Points(o))?,
                (AnySeries::Slots(_), AnySeries::Slots(o)) => cast(AnySeries::Slots(o))?,
                _ => return Err(Error::KindMismatch("cannot merge points with slots".into())),
            };
            ops::merge(&[series, &other])?
        }
        other => return Err(Error::UnknownName { what: "operation", name: other.to_string() }),
    };
    Ok(Some(out))
}

fn cast<E: Element>(series: AnySeries) -> Result<TimeSeries<E>> {
    let any: Box<dyn std::any::Any> = match series {
        AnySeries::Points(p) => Box::new(p),
        AnySeries::Slots(s) => Box::new(s),
    };
    any.downcast::<TimeSeries<E>>().map(|b| *b).map_err(|_| Error::KindMismatch("element kinds differ".into()))
}

fn ops_command(series: AnySeries, applies: &[String], out: &OutputArgs) -> Result<()> {
    let mut current = series;
    let mut produced = false;
    for spec in applies {
        let next = match &current {
            AnySeries::Points(s) => apply_op(s, spec)?.map(AnySeries::from),
            AnySeries::Slots(s) => apply_op(s, spec)?.map(AnySeries::from),
        };
        if let Some(next) = next {
            current = next;
            produced = true;
        }
    }
    if produced {
        write_series(&current, out)?;
    }
    Ok(())
}

fn base_model<E: Element>(series: &TimeSeries<E>, args: &ModelArgs) -> Result<PeriodicAverage> {
    let periodicity = match args.periodicity {
        Some(p) => p,
        None => {
            let p = detect_periodicity(series)?;
            info!("Detected periodicity of \"{p}\"");
            p
        }
    };
    let model = PeriodicAverage::new(periodicity);
    Ok(match args.window {
        Some(w) => model.with_window(w),
        None => model,
    })
}

fn save_json(path: &Path, json: &str) -> Result<()> {
    write_artifact(&path.to_string_lossy(), json.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

struct ForecastArgs<'a> {
    model: &'a ModelArgs,
    steps: usize,
    cross_validate: Option<usize>,
    evaluate: bool,
    metrics: &'a str,
}

fn forecast<E: Element>(series: &TimeSeries<E>, args: &ForecastArgs<'_>) -> Result<TimeSeries<E>> {
    let metrics = Metric::parse_list(args.metrics)?;
    let model = match &args.model.load {
        Some(path) => ForecasterModel::<PeriodicAverage>::from_json(&read_text(path)?)?,
        None => {
            let mut model = ForecasterModel::new(base_model(series, args.model)?);
            if let Some(rounds) = args.cross_validate {
                let report = model.cross_validate(series, rounds, &metrics)?;
                for (key, value) in &report {
                    info!("{key}: {value}");
                }
            }
            model.fit(series)?;
            if let Some(path) = &args.model.fit_save {
                save_json(path, &model.to_json()?)?;
            }
            model
        }
    };
    if args.evaluate {
        for (key, value) in model.evaluate(series, &metrics)? {
            info!("{key}: {value}");
        }
    }
    model.apply(series, args.steps)
}

fn reconstruct<E: Element>(series: &TimeSeries<E>, args: &ModelArgs) -> Result<TimeSeries<E>> {
    let model = match &args.load {
        Some(path) => ReconstructorModel::<PeriodicAverage>::from_json(&read_text(path)?)?,
        None => {
            let mut model = ReconstructorModel::new(base_model(series, args)?);
            model.fit(series)?;
            if let Some(path) = &args.fit_save {
                save_json(path, &model.to_json()?)?;
            }
            model
        }
    };
    model.apply(series)
}

fn detect<E: Element>(series: &TimeSeries<E>, args: &ModelArgs) -> Result<TimeSeries<E>> {
    let detector = match &args.load {
        Some(path) => AnomalyDetector::<PeriodicAverage>::from_json(&read_text(path)?)?,
        None => {
            let mut detector = AnomalyDetector::new(base_model(series, args)?);
            detector.fit(series)?;
            if let Some(path) = &args.fit_save {
                save_json(path, &detector.to_json()?)?;
            }
            detector
        }
    };
    detector.apply(series)
}

struct PlotArgs {
    html: Option<PathBuf>,
    image: Option<PathBuf>,
    labels: Option<String>,
    title: Option<String>,
    max_points: usize,
    width: u32,
    height: u32,
    renderer: Option<PathBuf>,
}

fn plot_command(series: &AnySeries, args: PlotArgs) -> Result<()> {
    let spec = match series {
        AnySeries::Points(s) => plot::prepare(s, args.max_points)?,
        AnySeries::Slots(s) => plot::prepare(s, args.max_points)?,
    };
    if let Some(path) = &args.html {
        let renderer = args.renderer.as_deref().map(read_text).transpose()?;
        let title = args.title.clone().unwrap_or_else(|| series.labels().join(", "));
        let html = plot::to_html_with(&spec, &title, renderer.as_deref())?;
        return write_artifact(&path.to_string_lossy(), html.as_bytes());
    }
    let path = args.image.expect("clap requires --html or --image");
    let opts = ImageOptions {
        width: args.width,
        height: args.height,
        labels: args.labels.map(|l| l.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
        title: args.title,
    };
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("png") => plot::to_png(&spec, &opts)?,
        Some("svg") => plot::to_svg(&spec, &opts)?.into_bytes(),
        _ => return Err(Error::Invalid(format!("{} must end in .png or .svg", path.display()))),
    };
    write_artifact(&path.to_string_lossy(), &bytes)
}

fn unit(text: &str) -> Result<TimeUnit> {
    text.parse()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Info(input) => info_command(&read_input(&input)?),
        Command::Resample { input, unit: u, interpolation, output } => {
            let series = points(read_input(&input)?)?;
            let method: Interpolation = interpolation.parse()?;
            let out = transform::resample(&series, unit(&u)?, method)?;
            write_series(&AnySeries::Points(out), &output)
        }
        Command::Aggregate { input, unit: u, ops, tz, interpolation, output } => {
            let mut series = points(read_input(&input)?)?;
            if let Some(zone) = tz {
                series = series.change_tz(zone.parse::<TimeZone>()?);
            }
            let ops = AggOp::parse_list(&ops)?;
            let method: Interpolation = interpolation.parse()?;
            let (slots, stats) = transform::aggregate_with_stats(&series, unit(&u)?, &ops, method)?;
            info!("Slots consumed {} of {} points", stats.consumed, stats.source);
            write_series(&AnySeries::Slots(slots), &output)
        }
        Command::Ops { input, apply, output } => ops_command(read_input(&input)?, &apply, &output),
        Command::Forecast { input, model, steps, cross_validate, evaluate, metrics, output } => {
            let args = ForecastArgs { model: &model, steps, cross_validate, evaluate, metrics: &metrics };
            let out = each!(read_input(&input)?, s => forecast(&s, &args)?);
            write_series(&out, &output)
        }
        Command::Reconstruct { input, model, output } => {
            let out = each!(read_input(&input)?, s => reconstruct(&s, &model)?);
            write_series(&out, &output)
        }
        Command::DetectAnomalies { input, model, output } => {
            let out = each!(read_input(&input)?, s => detect(&s, &model)?);
            write_series(&out, &output)
        }
        Command::Plot { input, html, image, labels, title, max_points, width, height, renderer } => {
            let series = read_input(&input)?;
            plot_command(&series, PlotArgs { html, image, labels, title, max_points, width, height, renderer })
        }
        Command::Convert { input, to, out } => {
            let native_in = input.input != "-"
                && std::fs::read(&input.input).map(|b| csio::is_native(&String::from_utf8_lossy(&b[..b.len().min(64)]))).unwrap_or(false);
            let series = read_input(&input)?;
            let format = to.unwrap_or(if native_in { Format::Csv } else { Format::Native });
            write_series(&series, &OutputArgs { out, format })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format(|buf, record| writeln!(buf, "[{}] {}", record.level(), record.args()))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
