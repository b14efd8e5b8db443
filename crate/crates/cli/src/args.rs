use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "qcs",
    version,
    about = "Quadrature coherence scale numerics for single-mode states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// QCS, purity, κ, total noise and nonclassicality bounds at t = 0.
    Qcs(QcsArgs),
    /// C(t), P(t), κ(t) under the thermal channel.
    Evolve(EvolveArgs),
    /// Exact and approximate half-lives of C and P.
    Halflife(HalflifeArgs),
    /// Photon-number populations and their strip-restricted parts.
    Interference(InterferenceArgs),
    /// Wigner function on a grid.
    Wigner(GridArgs),
    /// Position kernel ρ(x, x′) on a grid.
    Kernel(GridArgs),
    /// Parse and validate a state specification.
    Validate(StateArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false, id = "state_source")]
pub struct StateSource {
    /// Inline state: JSON object or shorthand such as `fock:5`, `even:4`, `thermal:5`.
    #[arg(long, group = "state_source")]
    pub state: Option<String>,
    /// File containing the state specification.
    #[arg(long, group = "state_source")]
    pub state_file: Option<PathBuf>,
}

impl StateSource {
    pub fn text(&self) -> Result<String> {
        match (&self.state, &self.state_file) {
            (Some(s), None) => Ok(s.clone()),
            (None, Some(p)) => std::fs::read_to_string(p)
                .with_context(|| format!("reading state file {}", p.display())),
            _ => bail!("give exactly one of --state and --state-file"),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ChannelArgs {
    /// Asymptotic mean photon number n̄_∞.
    #[arg(long, default_value_t = 1.0)]
    pub nbar_inf: f64,
    /// Relaxation time t_R.
    #[arg(long, default_value_t = 1.0)]
    pub t_rel: f64,
    /// Free rotation frequency ω.
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
}

#[derive(Args, Debug, Clone)]
pub struct QuadArgs {
    /// Relative error tolerance of the radial integrals.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct QcsArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Route used for the report.
    #[arg(long, value_enum, default_value_t = QcsRoute::Chi)]
    pub method: QcsRoute,
    /// Fock cutoff for the commutator route (automatic when absent).
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcsRoute {
    Chi,
    Commutator,
    Gaussian,
}

#[derive(Args, Debug, Clone)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Last time of the uniform grid.
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    /// Step of the uniform grid.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Explicit comma-separated times (overrides --t-max/--dt).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = EvolveMethod::Exact)]
    pub method: EvolveMethod,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveMethod {
    Exact,
    ClosedForm,
    Ode,
    Oracle,
}

#[derive(Args, Debug, Clone)]
pub struct HalflifeArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Bisection tolerance in units of t_R.
    #[arg(long, default_value_t = 1e-4)]
    pub halflife_tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct InterferenceArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Strip half-widths ℓ, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,3.3")]
    pub ell: Vec<f64>,
    /// Photon numbers: `A..B` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0..12")]
    pub n: String,
    /// Evolution times, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub t: Vec<f64>,
    /// Kernel grid: `N` points over the default range or `N,HALF`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Fock cutoff (automatic when absent).
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Evolution time before sampling.
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Grid: `N` points over the default range or `N,HALF`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Fock cutoff (automatic when absent).
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Component written to rasters.
    #[arg(long, value_enum, default_value_t = ComponentArg::Re)]
    pub component: ComponentArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Raster,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Raster => "raster",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentArg {
    Re,
    Im,
    Abs,
}

/// `A..B` (inclusive) or `a,b,c`.
pub fn parse_numbers(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a
            .trim()
            .parse()
            .with_context(|| format!("bad range start in `{text}`"))?;
        let b: usize = b
            .trim()
            .parse()
            .with_context(|| format!("bad range end in `{text}`"))?;
        if b < a {
            bail!("empty range `{text}`");
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("bad photon number `{s}`"))
        })
        .collect()
}

/// `N` or `N,HALF`.
pub fn parse_grid(text: &str) -> Result<(usize, Option<f64>)> {
    let mut parts = text.split(',').map(str::trim);
    let n: usize = parts
        .next()
        .unwrap_or_default()
        .parse()
        .with_context(|| format!("bad grid point count in `{text}`"))?;
    let half = match parts.next() {
        Some(h) => Some(
            h.parse::<f64>()
                .with_context(|| format!("bad grid half-width in `{text}`"))?,
        ),
        None => None,
    };
    if parts.next().is_some() {
        bail!("grid takes `N` or `N,HALF`, got `{text}`");
    }
    Ok((n, half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_lists() {
        assert_eq!(parse_numbers("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_numbers("4, 7").unwrap(), vec![4, 7]);
        assert!(parse_numbers("3..1").is_err());
        assert!(parse_numbers("x").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("201").unwrap(), (201, None));
        assert_eq!(parse_grid("101,6.5").unwrap(), (101, Some(6.5)));
        assert!(parse_grid("1,2,3").is_err());
    }
}
