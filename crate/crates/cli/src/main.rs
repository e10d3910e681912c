//! `bimoment`: runs analysis manifests and their individual stages, emits the
//! synthetic dataset, extracts fiber surfaces, renders CSPs and serves a run
//! over HTTP.
//!
//! Exit codes: 0 success, 2 invalid input, 3 runtime failure.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use bimoment_core::fiber::MeshFormat;
use bimoment_pipeline::stages::{
    fiber_for_source, gen_synthetic_dataset, manifest_step_source, read_polygon, render_stored_csp, run_step_source,
    write_mesh, GenOptions,
};
use bimoment_pipeline::{run_manifest, AnalysisManifest, PipelineError, RunOptions, Stage};
use bimoment_service::ServiceConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bimoment",
    version,
    about = "Moment tracks of continuous scatterplots over time"
)]
struct Cli {
    /// Worker threads for CSP accumulation (default: all cores).
    #[arg(long, global = true, env = "BIMOMENT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory, overriding the manifest's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for synthetic offsets, overriding the manifest's.
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed accumulation order; byte-identical outputs across runs.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: segmentation, CSPs, moments, PCA and tracks.
    Run(RunArgs),
    /// Label grids only.
    Segment(RunArgs),
    /// Through the peeled CSPs.
    Csp(RunArgs),
    /// Through the moments table.
    Moments(RunArgs),
    /// Same as `run`.
    Pca(RunArgs),
    /// Writes the rotating and scaling series as cube files with a manifest.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        steps: u32,
        /// Vertices per side in x and y.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Layers in z.
        #[arg(long, default_value_t = 2)]
        nz: usize,
        /// Scaling offset in [-0.5, 0]; drawn from the seed when omitted.
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fiber surface of one step under a control polygon (JSON file).
    Fiber {
        /// Manifest naming the step's field.
        #[arg(long, conflicts_with = "data_dir", required_unless_present = "data_dir")]
        manifest: Option<PathBuf>,
        /// Completed run directory naming the step's field.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        state: String,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        polygon: PathBuf,
        /// Mesh file; `.json` writes JSON, anything else OBJ.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Renders a stored CSP (`.bin` with its `.json` sidecar) as PNG.
    Render {
        #[arg(long)]
        csp: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serves a completed run directory over HTTP.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Address to bind.
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Seconds allowed per fiber request.
        #[arg(long, default_value_t = 30.0)]
        fiber_timeout: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Pipeline(PipelineError),
    Runtime(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Pipeline(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Pipeline(e) => e.exit_code() as u8,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Pipeline(e) => write!(f, "{e}"),
            Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn run_stage(args: RunArgs, until: Stage) -> Result<(), Failure> {
    let opts = RunOptions {
        strict: args.strict,
        seed: args.seed,
        out_dir: args.out,
    };
    let outcome = run_manifest(&args.manifest, &opts, until)?;
    let c = &outcome.report.counts;
    println!(
        "{}: {} steps, {} CSPs, {} moment rows, {} tracks; global mass residual {:.2e}",
        outcome.out_dir.display(),
        c.steps,
        c.csps,
        c.moment_rows,
        c.tracks,
        outcome.report.mass.global_relative_residual
    );
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run(a) | Command::Pca(a) => run_stage(a, Stage::Pca),
        Command::Segment(a) => run_stage(a, Stage::Segment),
        Command::Csp(a) => run_stage(a, Stage::Csp),
        Command::Moments(a) => run_stage(a, Stage::Moments),
        Command::Gen {
            out,
            steps,
            n,
            nz,
            b,
            seed,
        } => {
            let path = gen_synthetic_dataset(&out, &GenOptions { steps, n, nz, b, seed })?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Fiber {
            manifest,
            data_dir,
            state,
            t,
            polygon,
            out,
            seed,
        } => {
            let source = match (manifest, data_dir) {
                (Some(m), _) => {
                    let manifest = AnalysisManifest::load(&m)?;
                    let seed = seed.or(manifest.seed).unwrap_or(0);
                    manifest_step_source(&manifest, seed, &state, t)?
                }
                (None, Some(d)) => run_step_source(&d, &state, t)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mesh = fiber_for_source(&source, read_polygon(&polygon)?)?;
            let format = match out.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("json") => MeshFormat::Json,
                _ => MeshFormat::Obj,
            };
            write_mesh(&mesh, &out, format)?;
            println!("{}: {} triangles", out.display(), mesh.triangles.len());
            Ok(())
        }
        Command::Render { csp, out } => {
            render_stored_csp(&csp, &out)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Serve {
            data_dir,
            port,
            host,
            fiber_timeout,
        } => {
            if !data_dir.is_dir() {
                return Err(PipelineError::Validation(format!("{} is not a directory", data_dir.display())).into());
            }
            if !(fiber_timeout > 0.0) {
                return Err(PipelineError::Validation("--fiber-timeout must be positive".into()).into());
            }
            let mut config = ServiceConfig::new(data_dir);
            config.fiber_timeout = Duration::from_secs_f64(fiber_timeout);
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
            rt.block_on(bimoment_service::serve(config, SocketAddr::new(host, port)))
                .map_err(|e| Failure::Runtime(format!("server: {e}")))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
