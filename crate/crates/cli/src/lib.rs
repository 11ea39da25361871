//! `hexblur` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error (bad flags or parameter values),
//! 2 data error (unreadable or malformed input).

use std::fs;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use hexblur::binsfile::{looks_like_bins, read_bins, write_bins};
use hexblur::blur::{build_stencil_for_layout, DEFAULT_EPSILON};
use hexblur::render::Stroke;
use hexblur::{
    apply_blur_with_threads, bin_points, build_stencil, read_points_csv, BinGrid, BlurParams,
    Colormap, Error, KernelStencil, LayoutRequest, NormalizationMode, RenderSpec, Rgb,
};
use hexblur_service::ServiceConfig;

pub const THREADS_ENV: &str = "HEXBLUR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hexblur", version, about = "Hexagonal binning with anisotropic Gaussian blur")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bin a point CSV into a bins file.
    Bin {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Blur a point CSV or bins file into a bins file.
    Blur {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        blur: BlurArgs,
    },
    /// Render a bins file (or a point CSV, optionally blurred) as SVG.
    Render {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        blur: OptionalBlurArgs,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Print the kernel stencil as a table.
    Stencil {
        #[command(flatten)]
        blur: BlurArgs,
        /// Write to this file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP JSON service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Keep uploaded CSVs here and reload them at startup.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// CORS origin allowed to call the API (default: any).
        #[arg(long)]
        allow_origin: Option<String>,
        /// Maximum upload size in bytes.
        #[arg(long, default_value_t = hexblur_service::DEFAULT_MAX_BODY_BYTES)]
        max_body: usize,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input file; `-` or omitted reads standard input.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output file; omitted writes standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Skip malformed CSV rows instead of aborting.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub origin_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub origin_y: Option<f64>,
    /// Data units per hexagon side length along x.
    #[arg(long, allow_hyphen_values = true)]
    pub size_x: Option<f64>,
    /// Data units per hexagon side length along y.
    #[arg(long, allow_hyphen_values = true)]
    pub size_y: Option<f64>,
    /// Choose sizes so the data spans about N bins per axis.
    #[arg(long, conflicts_with_all = ["size_x", "size_y"])]
    pub auto_bins: Option<u32>,
}

impl LayoutArgs {
    fn request(&self) -> LayoutRequest {
        LayoutRequest {
            origin_x: self.origin_x,
            origin_y: self.origin_y,
            size_x: self.size_x,
            size_y: self.size_y,
            auto_bins: self.auto_bins,
        }
    }
}

#[derive(Debug, Args)]
pub struct BlurArgs {
    /// Standard deviation along x, in hexagon side lengths.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_x: f64,
    /// Standard deviation along y, in hexagon side lengths.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_y: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// center_relative or mass_preserving.
    #[arg(long, default_value = "mass_preserving")]
    pub mode: String,
    /// Interpret the sigmas in data units instead of side lengths.
    #[arg(long)]
    pub sigma_data: bool,
}

#[derive(Debug, Args)]
pub struct OptionalBlurArgs {
    #[arg(long, allow_hyphen_values = true, requires = "sigma_y")]
    pub sigma_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "sigma_x")]
    pub sigma_y: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON, allow_hyphen_values = true)]
    pub epsilon: f64,
    #[arg(long, default_value = "mass_preserving")]
    pub mode: String,
    #[arg(long)]
    pub sigma_data: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// grayscale or viridis.
    #[arg(long, default_value = "grayscale")]
    pub colormap: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub saturation: f64,
    /// Hexagon side length in pixels.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub tile_px: f64,
    /// Bins below this value are not drawn.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub floor: f64,
    /// Outline color as #rrggbb.
    #[arg(long)]
    pub stroke: Option<String>,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub stroke_width: f64,
    #[arg(long, default_value = "#ffffff")]
    pub background: String,
    /// Horizontal stretch; defaults to size_x / size_y of the layout.
    #[arg(long, allow_hyphen_values = true)]
    pub stretch_x: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { field, reason } => {
                CliError::Usage(format!("--{}: {reason}", field.replace('_', "-")))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hexblur: {e}");
            e.exit_code()
        }
    }
}

/// Worker count from `HEXBLUR_THREADS` (0 when unset: use all cores).
pub fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!("{THREADS_ENV}={v:?} is not a non-negative integer"))
        }),
        Err(_) => Ok(0),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bin { io, layout } => run_bin(&io, &layout),
        Command::Blur { io, layout, blur } => run_blur(&io, &layout, &blur),
        Command::Render {
            io,
            layout,
            blur,
            render,
        } => run_render(&io, &layout, &blur, &render),
        Command::Stencil { blur, output } => run_stencil(&blur, output.as_deref()),
        Command::Serve {
            port,
            host,
            data_dir,
            allow_origin,
            max_body,
        } => run_serve(SocketAddr::new(host, port), data_dir, allow_origin, max_body),
    }
}

fn read_input(path: Option<&Path>) -> CliResult<String> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))?;
        }
        _ => {
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::Data(format!("cannot read standard input: {e}")))?;
        }
    }
    Ok(text)
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write standard output: {e}"))),
    }
}

/// Grid from either a bins file or a point CSV, and the blur it already carries.
fn load_grid(io: &IoArgs, layout: &LayoutArgs) -> CliResult<(BinGrid, Option<BlurParams>)> {
    let text = read_input(io.input.as_deref())?;
    if looks_like_bins(&text) {
        let file = read_bins(text.as_bytes())?;
        return Ok((file.grid, file.blur));
    }
    let (dataset, skipped) = read_points_csv(text.as_bytes(), io.permissive)?;
    for s in &skipped {
        eprintln!("hexblur: skipped line {}: {}", s.line, s.message);
    }
    let layout = layout.request().resolve(&dataset)?;
    let grid = bin_points(&dataset, layout)?;
    eprintln!(
        "hexblur: read {} rows (total weight {}), {} bins",
        dataset.len(),
        dataset.total_weight(),
        grid.len()
    );
    Ok((grid, None))
}

fn parse_mode(mode: &str) -> CliResult<NormalizationMode> {
    Ok(mode.parse::<NormalizationMode>()?)
}

fn make_stencil(
    sigma_x: f64,
    sigma_y: f64,
    epsilon: f64,
    mode: NormalizationMode,
    sigma_data: bool,
    grid: &BinGrid,
) -> CliResult<KernelStencil> {
    let stencil = if sigma_data {
        build_stencil_for_layout(sigma_x, sigma_y, epsilon, mode, grid.layout())?
    } else {
        build_stencil(BlurParams::with_options(sigma_x, sigma_y, epsilon, mode)?)?
    };
    Ok(stencil)
}

fn blur_grid(grid: &BinGrid, stencil: &KernelStencil) -> CliResult<BinGrid> {
    let threads = threads_from_env()?;
    Ok(apply_blur_with_threads(grid, stencil, threads)?)
}

pub fn run_bin(io: &IoArgs, layout: &LayoutArgs) -> CliResult<()> {
    let (grid, blur) = load_grid(io, layout)?;
    write_output(io.output.as_deref(), &write_bins(&grid, blur.as_ref()))
}

pub fn run_blur(io: &IoArgs, layout: &LayoutArgs, args: &BlurArgs) -> CliResult<()> {
    let mode = parse_mode(&args.mode)?;
    if !args.sigma_data {
        BlurParams::with_options(args.sigma_x, args.sigma_y, args.epsilon, mode)?;
    }
    let (grid, _) = load_grid(io, layout)?;
    let stencil = make_stencil(
        args.sigma_x,
        args.sigma_y,
        args.epsilon,
        mode,
        args.sigma_data,
        &grid,
    )?;
    let blurred = blur_grid(&grid, &stencil)?;
    eprintln!(
        "hexblur: {} stencil entries, {} -> {} bins",
        stencil.len(),
        grid.len(),
        blurred.len()
    );
    write_output(
        io.output.as_deref(),
        &write_bins(&blurred, Some(stencil.params())),
    )
}

fn render_spec(args: &RenderArgs) -> CliResult<RenderSpec> {
    let stroke = args
        .stroke
        .as_deref()
        .map(|c| -> CliResult<Stroke> {
            Ok(Stroke {
                color: c.parse::<Rgb>().map_err(|_| {
                    CliError::Usage(format!("--stroke: {c:?} is not #rrggbb"))
                })?,
                width: args.stroke_width,
            })
        })
        .transpose()?;
    let background = args
        .background
        .parse::<Rgb>()
        .map_err(|_| CliError::Usage(format!("--background: {:?} is not #rrggbb", args.background)))?;
    let spec = RenderSpec {
        colormap: args.colormap.parse::<Colormap>()?,
        saturation: args.saturation,
        tile_side_px: args.tile_px,
        stroke,
        background,
        value_floor: args.floor,
        stretch_x: args.stretch_x,
        ..RenderSpec::default()
    };
    spec.validate()?;
    Ok(spec)
}

pub fn run_render(
    io: &IoArgs,
    layout: &LayoutArgs,
    blur: &OptionalBlurArgs,
    args: &RenderArgs,
) -> CliResult<()> {
    let spec = render_spec(args)?;
    let mode = parse_mode(&blur.mode)?;
    let (mut grid, _) = load_grid(io, layout)?;
    if let (Some(sx), Some(sy)) = (blur.sigma_x, blur.sigma_y) {
        let stencil = make_stencil(sx, sy, blur.epsilon, mode, blur.sigma_data, &grid)?;
        grid = blur_grid(&grid, &stencil)?;
    }
    let svg = hexblur::render_svg(&grid, &spec)?;
    write_output(io.output.as_deref(), &svg)
}

pub fn run_stencil(args: &BlurArgs, output: Option<&Path>) -> CliResult<()> {
    if args.sigma_data {
        return Err(CliError::Usage(
            "--sigma-data needs a layout; the stencil command works in side lengths".into(),
        ));
    }
    let mode = parse_mode(&args.mode)?;
    let stencil = build_stencil(BlurParams::with_options(
        args.sigma_x,
        args.sigma_y,
        args.epsilon,
        mode,
    )?)?;
    write_output(output, &stencil.to_table())
}

pub fn run_serve(
    addr: SocketAddr,
    data_dir: Option<PathBuf>,
    allow_origin: Option<String>,
    max_body_bytes: usize,
) -> CliResult<()> {
    let config = ServiceConfig {
        max_body_bytes,
        data_dir,
        allow_origin,
        threads: threads_from_env()?,
    };
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Data(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(hexblur_service::serve(addr, config))
        .map_err(|e| CliError::Data(format!("service failed: {e}")))
}
