//! Command-line front end: argument model, dispatch and exit codes.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use interference::{Arrangement, Species};

mod commands;
pub mod formats;

use formats::DeviceSpec;

/// Everything that ends a run early. Usage problems exit with 2, the rest
/// with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Domain(m) => f.write_str(m),
        }
    }
}

impl From<interference::Error> for Failure {
    fn from(e: interference::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "interference", version, about = "Many-particle interference in linear multiports")]
pub struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Leave the timestamp line out of the metadata header.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transition probability of one input/output pair.
    Prob(ProbArgs),
    /// Full output distribution of an input.
    Dist(DistArgs),
    /// Seeded event stream from an exact or alien source.
    Sample(SampleArgs),
    /// Fourier suppression law for one event, or the suppressed fraction.
    Suppression(SuppressionArgs),
    /// Run a certification test on an event stream.
    Certify(CertifyArgs),
    /// Two-mode signal against path-length difference.
    HomScan(HomScanArgs),
    /// Multimode signal along a line in delay space.
    MultimodeScan(MultimodeScanArgs),
    /// Post-selected multipartite state of a W matrix.
    Entangle(EntangleArgs),
    /// Time permanent evaluation against matrix order.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct DeviceArgs {
    /// fourier:<n>, bs:<R>, haar:<n>:<seed> or a matrix JSON file.
    #[arg(long)]
    pub device: DeviceSpec,

    /// Also write the resolved device matrix as JSON.
    #[arg(long)]
    pub save_device: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProbArgs {
    #[arg(long)]
    pub species: Species,
    #[arg(long)]
    pub r: Arrangement,
    #[arg(long)]
    pub s: Arrangement,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Sum over permutations instead of the permanent/determinant route.
    #[arg(long)]
    pub bruteforce: bool,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    #[arg(long)]
    pub species: Species,
    #[arg(long)]
    pub r: Arrangement,
    #[command(flatten)]
    pub device: DeviceArgs,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// exact-boson, exact-fermion, exact-distinguishable, classical-mc,
    /// uniform or meanfield.
    #[arg(long)]
    pub source: interference::sampling::Source,
    #[arg(long)]
    pub r: Arrangement,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SuppressionArgs {
    #[arg(long)]
    pub r: Arrangement,
    /// Output event; without it the suppressed fraction over all outputs is
    /// reported.
    #[arg(long)]
    pub s: Option<Arrangement>,
    /// Size of the Fourier multiport; defaults to the mode count of r.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "boson")]
    pub species: Species,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    Symmetric,
    MeanOccupation,
    AaDiscriminator,
    Suppression,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long, value_enum)]
    pub test: TestKind,
    /// Event stream CSV; "-" reads standard input.
    #[arg(long, default_value = "-")]
    pub events: String,
    /// Input arrangement; defaults to the one recorded in the stream.
    #[arg(long)]
    pub r: Option<Arrangement>,
    /// Device for the mean-occupation and aa-discriminator tests.
    #[arg(long)]
    pub device: Option<DeviceSpec>,
    #[arg(long, default_value_t = interference::certify::DEFAULT_Z)]
    pub z: f64,
    #[arg(long, default_value_t = 0)]
    pub allowed_violations: usize,
}

#[derive(Args, Debug)]
pub struct PacketArgs {
    /// Central wavelength in metres.
    #[arg(long, default_value_t = 800e-9)]
    pub lambda: f64,
    /// Spectral width in metres.
    #[arg(long, default_value_t = 2.5e-9)]
    pub dlambda: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Half-width of the grid in coherence lengths.
    #[arg(long, default_value_t = 2.0)]
    pub span: f64,
}

#[derive(Args, Debug)]
pub struct HomScanArgs {
    /// Two-mode input r1,r2.
    #[arg(long)]
    pub r: Arrangement,
    /// Output events to report; repeat for several. Defaults to all.
    #[arg(long)]
    pub s: Vec<Arrangement>,
    #[arg(long, default_value = "bs:0.5")]
    pub device: DeviceSpec,
    #[command(flatten)]
    pub packets: PacketArgs,
}

#[derive(Args, Debug)]
pub struct MultimodeScanArgs {
    #[arg(long)]
    pub r: Arrangement,
    /// Output events to report; repeat for several. Defaults to all.
    #[arg(long)]
    pub s: Vec<Arrangement>,
    #[arg(long)]
    pub device: DeviceSpec,
    /// Per-mode delay coefficients: mode j is displaced by a_j·x.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub direction: Vec<f64>,
    #[command(flatten)]
    pub packets: PacketArgs,
}

#[derive(Args, Debug)]
pub struct EntangleArgs {
    /// W matrix JSON of size (N·d)×(N·d).
    #[arg(long)]
    pub w: PathBuf,
    #[arg(long, default_value = "boson")]
    pub species: Species,
    /// Local dimension of each party.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Relative singular-value threshold for the cut ranks.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    pub min: usize,
    #[arg(long, default_value_t = 24)]
    pub max: usize,
    /// Seed of the random matrices.
    #[arg(long)]
    pub seed: u64,
    /// Repetitions per order; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("INTERFERENCE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("INTERFERENCE_THREADS='{v}' is not a non-negative integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Domain(format!("thread pool: {e}")))
}

/// Parses `argv`, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match configure_threads().and_then(|_| commands::dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            let _ = Cli::command().error(clap::error::ErrorKind::ArgumentConflict, m).print();
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
