//! Strict TOML run configuration.
//!
//! Every table rejects unknown keys and the TOML parser rejects duplicate
//! keys, so a typo in a grid can never be silently ignored.

use std::fs;
use std::path::{Path, PathBuf};

use relstable::bounds::TheoremTag;
use relstable::estimators::MonteCarloConfig;
use relstable::verify::{DomainSpec, EstimatorMode, ExitCheckConfig, GreenComparisonConfig, SweepConfig};
use relstable::ModelParams;
use serde::Deserialize;

use crate::error::CliError;
use crate::plot::PlotAxis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Levy,
    Kernel,
    Simulate,
    Estimate,
    Sweep,
    ExitCheck,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Levy => "levy",
            Command::Kernel => "kernel",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Sweep => "sweep",
            Command::ExitCheck => "exit-check",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem; defaults to the command name.
    #[serde(default)]
    pub stem: Option<String>,
    #[serde(default = "default_true")]
    pub plot: bool,
    #[serde(default)]
    pub plot_axis: PlotAxis,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_true() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            stem: None,
            plot: true,
            plot_axis: PlotAxis::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySpec {
    #[serde(default = "default_levy_r")]
    pub r: Vec<f64>,
}

/// Separations 10^{-2}, 10^{-1.75}, ..., 10.
fn default_levy_r() -> Vec<f64> {
    (0..=12).map(|k| 10f64.powf(-2.0 + 0.25 * k as f64)).collect()
}

impl Default for LevySpec {
    fn default() -> Self {
        Self { r: default_levy_r() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Subordination,
    Thinning,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub t: f64,
    pub paths: usize,
    #[serde(default = "default_steps")]
    pub grid_steps: usize,
    /// Start point; the origin when absent. Paths are killed on leaving
    /// `[domain]` when one is given.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub sampler: Sampler,
    /// Jumps below this size are replaced by a Gaussian in the thinning sampler.
    #[serde(default = "default_cut")]
    pub jump_cut: f64,
}

fn default_steps() -> usize {
    1
}

fn default_cut() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    KilledKernel,
    Survival,
    Lambda1,
    Green,
    ExitCdf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub quantity: Quantity,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
}

/// Sweep settings; `d`, `alpha`, the domain and Monte Carlo settings come
/// from their own tables.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub theorem_tag: TheoremTag,
    pub m_grid: Vec<f64>,
    #[serde(default)]
    pub m_max: Option<f64>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub r_grid: Vec<f64>,
    #[serde(default)]
    pub pairs_per_cell: Option<usize>,
    #[serde(default)]
    pub max_rel_se: Option<f64>,
    #[serde(default)]
    pub c_cap: Option<f64>,
    #[serde(default)]
    pub max_log_spread: Option<f64>,
    #[serde(default)]
    pub min_retained: Option<f64>,
    #[serde(default)]
    pub fit_c2: bool,
    #[serde(default)]
    pub mode: EstimatorMode,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenComparisonSpec {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_green_se")]
    pub max_rel_se: f64,
    #[serde(default = "default_green_cap")]
    pub c_cap: f64,
}

fn default_pairs() -> usize {
    5
}

fn default_green_se() -> f64 {
    0.1
}

fn default_green_cap() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitCheckSpec {
    pub m_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    /// JSON report written by an earlier sweep.
    pub json: PathBuf,
    /// Matching records CSV; defaults to the JSON path with a `.csv` extension.
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

/// File layout before cross-table validation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Command,
    seed: Option<u64>,
    params: Option<ModelParams<f64>>,
    domain: Option<DomainSpec>,
    mc: Option<toml::Table>,
    output: Option<OutputSpec>,
    levy: Option<LevySpec>,
    kernel: Option<KernelSpec>,
    simulate: Option<SimulateSpec>,
    estimate: Option<EstimateSpec>,
    sweep: Option<SweepSpec>,
    green_comparison: Option<GreenComparisonSpec>,
    exit_check: Option<ExitCheckSpec>,
    report: Option<ReportSpec>,
}

/// What a command runs on, fully validated.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Levy(LevySpec),
    Kernel(KernelSpec),
    Simulate(SimulateSpec),
    Estimate(EstimateSpec),
    Sweep(SweepConfig),
    GreenComparison(GreenComparisonConfig),
    ExitCheck(ExitCheckConfig),
    Report(ReportSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub params: Option<ModelParams<f64>>,
    pub domain: Option<DomainSpec>,
    pub mc: MonteCarloConfig,
    pub output: OutputSpec,
    pub job: Job,
}

impl RunConfig {
    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.command.name().replace('-', "_"))
    }

    pub fn output_path(&self, ext: &str) -> PathBuf {
        self.output.dir.join(format!("{}.{ext}", self.stem()))
    }

    pub fn params(&self) -> Result<&ModelParams<f64>, CliError> {
        self.params.as_ref().ok_or_else(|| missing("params"))
    }

    pub fn domain(&self) -> Result<&DomainSpec, CliError> {
        self.domain.as_ref().ok_or_else(|| missing("domain"))
    }
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing table `[{key}]`"))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Command-line values layered over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, table: &mut toml::Table) {
        if let Some(c) = &self.command {
            table.insert("command".into(), c.clone().into());
        }
        if let Some(s) = self.seed {
            table.insert("seed".into(), toml::Value::Integer(s as i64));
        }
        let mut set = |section: &str, key: &str, v: toml::Value| {
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if let toml::Value::Table(t) = entry {
                t.insert(key.into(), v);
            }
        };
        if let Some(d) = self.d {
            set("params", "d", toml::Value::Integer(d as i64));
        }
        if let Some(a) = self.alpha {
            set("params", "alpha", a.into());
        }
        if let Some(m) = self.m {
            set("params", "m", m.into());
        }
        if let Some(dir) = &self.out_dir {
            set("output", "dir", dir.display().to_string().into());
        }
    }
}

pub fn parse_config_file(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    overrides.apply(&mut table);
    let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig, CliError> {
    let seed = raw
        .seed
        .ok_or_else(|| invalid("missing key `seed`: runs must be seeded explicitly"))?;
    let mc = match raw.mc {
        Some(t) => {
            if t.contains_key("seed") {
                return Err(invalid("`mc.seed` is not allowed; use the top-level `seed`"));
            }
            let mc: MonteCarloConfig = toml::Value::Table(t)
                .try_into()
                .map_err(|e: toml::de::Error| invalid(format!("in `[mc]`: {e}")))?;
            mc
        }
        None => MonteCarloConfig::default(),
    }
    .with_seed(seed);
    mc.validate().map_err(|e| invalid(format!("in `[mc]`: {e}")))?;
    let output = raw.output.unwrap_or_default();
    let params = raw.params;
    let domain = raw.domain;

    let sections = [
        ("levy", raw.levy.is_some()),
        ("kernel", raw.kernel.is_some()),
        ("simulate", raw.simulate.is_some()),
        ("estimate", raw.estimate.is_some()),
        ("sweep", raw.sweep.is_some()),
        ("green_comparison", raw.green_comparison.is_some()),
        ("exit_check", raw.exit_check.is_some()),
        ("report", raw.report.is_some()),
    ];
    let allowed: &[&str] = match raw.command {
        Command::Levy => &["levy"],
        Command::Kernel => &["kernel"],
        Command::Simulate => &["simulate"],
        Command::Estimate => &["estimate"],
        Command::Sweep => &["sweep", "green_comparison"],
        Command::ExitCheck => &["exit_check"],
        Command::Report => &["report"],
    };
    let present: Vec<&str> = sections.iter().filter(|s| s.1).map(|s| s.0).collect();
    if let Some(bad) = present.iter().find(|s| !allowed.contains(s)) {
        return Err(invalid(format!(
            "table `[{bad}]` does not apply to command `{}`",
            raw.command.name()
        )));
    }
    let optional = raw.command == Command::Levy;
    if present.len() > 1 || (present.is_empty() && !optional) {
        return Err(invalid(format!(
            "command `{}` needs exactly one of: {}",
            raw.command.name(),
            allowed.iter().map(|s| format!("[{s}]")).collect::<Vec<_>>().join(", ")
        )));
    }

    let need_params = || params.ok_or_else(|| missing("params"));
    let need_domain = || domain.clone().ok_or_else(|| missing("domain"));
    let job = match raw.command {
        Command::Levy => {
            need_params()?;
            let spec = raw.levy.unwrap_or_default();
            if spec.r.iter().any(|&r| !(r > 0.0)) {
                return Err(invalid("`levy.r` values must be > 0"));
            }
            Job::Levy(spec)
        }
        Command::Kernel => {
            need_params()?;
            Job::Kernel(raw.kernel.unwrap())
        }
        Command::Simulate => {
            need_params()?;
            let s = raw.simulate.unwrap();
            if !(s.t > 0.0) || s.paths == 0 || s.grid_steps == 0 {
                return Err(invalid("`simulate` needs t > 0, paths >= 1 and grid_steps >= 1"));
            }
            Job::Simulate(s)
        }
        Command::Estimate => {
            need_params()?;
            need_domain()?;
            Job::Estimate(raw.estimate.unwrap())
        }
        Command::Sweep => {
            let p = need_params()?;
            let dom = need_domain()?;
            if let Some(s) = raw.sweep {
                let mut cfg = SweepConfig::new(s.theorem_tag, dom, p.d(), p.alpha());
                cfg.m_grid = s.m_grid;
                cfg.m_max = s
                    .m_max
                    .unwrap_or_else(|| cfg.m_grid.iter().cloned().fold(0.0, f64::max));
                cfg.t_grid = s.t_grid;
                cfg.r_grid = s.r_grid;
                if let Some(v) = s.pairs_per_cell {
                    cfg.pairs_per_cell = v;
                }
                if let Some(v) = s.max_rel_se {
                    cfg.max_rel_se = v;
                }
                if let Some(v) = s.c_cap {
                    cfg.c_cap = v;
                }
                cfg.max_log_spread = s.max_log_spread;
                if let Some(v) = s.min_retained {
                    cfg.min_retained = v;
                }
                cfg.fit_c2 = s.fit_c2;
                cfg.mode = s.mode;
                cfg.mc = mc;
                cfg.validate().map_err(|e| invalid(format!("in `[sweep]`: {e}")))?;
                Job::Sweep(cfg)
            } else {
                let g = raw.green_comparison.unwrap();
                Job::GreenComparison(GreenComparisonConfig {
                    domain: dom,
                    d: p.d(),
                    alpha: p.alpha(),
                    m: p.m(),
                    pairs: g.pairs,
                    mc,
                    max_rel_se: g.max_rel_se,
                    c_cap: g.c_cap,
                })
            }
        }
        Command::ExitCheck => {
            let p = need_params()?;
            let e = raw.exit_check.unwrap();
            let cfg = ExitCheckConfig {
                d: p.d(),
                alpha: p.alpha(),
                m_grid: e.m_grid,
                r_grid: e.r_grid,
                a: e.a,
                b: e.b,
                mc,
            };
            cfg.validate().map_err(|e| invalid(format!("in `[exit_check]`: {e}")))?;
            Job::ExitCheck(cfg)
        }
        Command::Report => Job::Report(raw.report.unwrap()),
    };
    if let Some(dom) = &domain {
        let built = dom.build().map_err(|e| invalid(format!("in `[domain]`: {e}")))?;
        if let Some(p) = &params {
            if built.dim() != p.d() {
                return Err(invalid(format!(
                    "`[domain]` has dimension {} but `params.d` = {}",
                    built.dim(),
                    p.d()
                )));
            }
        }
    }
    Ok(RunConfig {
        command: raw.command,
        seed,
        params,
        domain,
        mc,
        output,
        job,
    })
}

/// Creates the output directory and checks that it accepts files.
pub fn prepare_output_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let probe = dir.join(".relstable-write-probe");
    fs::write(&probe, b"").map_err(|e| CliError::Io(format!("{} is not writable: {e}", dir.display())))?;
    let _ = fs::remove_file(probe);
    Ok(())
}
