//! Run configuration and the five commands behind the `qlv` binary.
//!
//! A run is described by one JSON document:
//!
//! ```json
//! {
//!   "model":  { "kind": "black_scholes", "sigma": 0.2, "t_end": 1.0, "n_t": 32, "s0": 1.0 },
//!   "payoff": { "kind": "european_call", "strike": 1.0 },
//!   "engine": { "way": "classical", "n_paths": 65536 },
//!   "output": { "format": "json" }
//! }
//! ```
//!
//! Every command returns an [`Envelope`] holding the resolved configuration,
//! the library version and the command's result.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuit::DEFAULT_BUDGET;
use crate::error::{Error, Result};
use crate::fixedpoint::FxFormat;
use crate::icdf::{default_domain, eval_icdf, fit_icdf, FitOptions, IcdfApprox, DEFAULT_MAX_INTERVALS};
use crate::lvmodel::{monotonicity_check, price_enumerated, price_sampled, Arithmetic, LvModel, PayoffLeg, PayoffSpec, PriceEstimate, Violation};
use crate::prn_way::{PrnSimReport, PrnWay, PrnWayConfig};
use crate::prng::{lcg_jump, LcgParams, PermutationSpec, PrnSource};
use crate::resources::{compare_ways, render_table, Comparison, ResourceParams};
use crate::rn_way::{RnSimReport, RnWay, RnWayConfig, SnConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub payoff: PayoffSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSection {
    /// Per-step grids and coefficients.
    Explicit {
        times: Vec<f64>,
        grids: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        s0: f64,
    },
    /// One grid for all steps of a uniform time grid.
    Homogeneous {
        t_end: f64,
        n_t: usize,
        grid: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        s0: f64,
    },
    /// `σ(t, S) = σ S`.
    BlackScholes { sigma: f64, t_end: f64, n_t: usize, s0: f64 },
}

impl ModelSection {
    pub fn build(&self) -> Result<LvModel> {
        match self.clone() {
            Self::Explicit { times, grids, a, b, s0 } => LvModel::new(times, grids, a, b, s0),
            Self::Homogeneous { t_end, n_t, grid, a, b, s0 } => {
                check_steps(n_t)?;
                LvModel::homogeneous(t_end, n_t, grid, a, b, s0)
            }
            Self::BlackScholes { sigma, t_end, n_t, s0 } => {
                check_steps(n_t)?;
                LvModel::black_scholes(sigma, t_end, n_t, s0)
            }
        }
    }
}

fn check_steps(n_t: usize) -> Result<()> {
    if n_t == 0 {
        return Err(Error::Config("model.n_t must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffSection {
    EuropeanCall { strike: f64 },
    Zero,
    /// One leg per date.
    Legs { legs: Vec<PayoffLeg> },
}

impl PayoffSection {
    pub fn build(&self, n_t: usize) -> Result<PayoffSpec> {
        let spec = match self {
            Self::EuropeanCall { strike } => PayoffSpec::european_call(*strike, n_t),
            Self::Zero => PayoffSpec::zero(n_t),
            Self::Legs { legs } => PayoffSpec::new(legs.clone())?,
        };
        spec.check_dates(n_t)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Way {
    Prn,
    Rn,
    #[default]
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithmeticKind {
    #[default]
    Exact,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub way: Way,
    pub fmt: FxFormat,
    /// `2^n_samp` branches of the PRN circuit.
    pub n_samp: u32,
    /// Paths of the classical estimate.
    pub n_paths: usize,
    pub arithmetic: ArithmeticKind,
    /// Uniform digits per draw for exact arithmetic.
    pub n_dig: u32,
    pub prng: PrngSection,
    pub icdf: IcdfSection,
    pub sn: SnConfig,
    pub payoff_scale: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            way: Way::Classical,
            fmt: FxFormat { n_int: 4, n_frac: 12 },
            n_samp: 3,
            n_paths: 1 << 16,
            arithmetic: ArithmeticKind::Exact,
            n_dig: 24,
            prng: PrngSection::default(),
            icdf: IcdfSection::default(),
            sn: SnConfig::default(),
            payoff_scale: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrngSection {
    pub lcg: LcgParams,
    /// Defaults to the width's standard xorshift pair.
    pub permutation: Option<PermutationSpec>,
    pub x0: u64,
}

impl Default for PrngSection {
    fn default() -> Self {
        Self {
            lcg: LcgParams::default(),
            permutation: None,
            x0: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcdfSection {
    /// Previously fitted approximation; fitted on the fly when absent.
    pub path: Option<PathBuf>,
    pub target_err: f64,
    pub max_intervals: usize,
    pub domain: Option<(f64, f64)>,
}

impl Default for IcdfSection {
    fn default() -> Self {
        Self {
            path: None,
            target_err: 1e-6,
            max_intervals: DEFAULT_MAX_INTERVALS,
            domain: None,
        }
    }
}

impl IcdfSection {
    pub fn load_or_fit(&self) -> Result<IcdfApprox> {
        match &self.path {
            Some(p) => IcdfApprox::from_json(&read(p)?),
            None => {
                let (lo, hi) = self.domain.unwrap_or_else(default_domain);
                fit_icdf(
                    lo,
                    hi,
                    FitOptions {
                        target_err: self.target_err,
                        max_intervals: self.max_intervals,
                    },
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    pub path: Option<PathBuf>,
}

/// Command-line overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    /// Skips this many whole paths of the generator.
    pub seed_offset: i64,
    /// Simulator support and enumeration limit.
    pub budget: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed_offset: 0,
            budget: DEFAULT_BUDGET,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Builds and checks everything that does not need the inverse-CDF fit.
    pub fn resolve(&self, opts: &RunOptions) -> Result<Resolved> {
        let model = self.model.build()?;
        let payoffs = self.payoff.build(model.n_t())?;
        let e = &self.engine;
        e.fmt.validate()?;
        e.sn.validate()?;
        if !(e.payoff_scale > 0.0) {
            return Err(Error::Config("engine.payoff_scale must be positive".into()));
        }
        if e.n_paths == 0 {
            return Err(Error::Config("engine.n_paths must be positive".into()));
        }
        let lcg = e.prng.lcg;
        let perm = e.prng.permutation.clone().unwrap_or_else(|| PermutationSpec::default_for(lcg.n_prn()));
        let x0 = offset_seed(&lcg, e.prng.x0, opts.seed_offset, model.n_t())?;
        let source = PrnSource::new(lcg, perm, x0)?;
        Ok(Resolved { model, payoffs, source })
    }
}

/// `x0` moved forward by `offset` whole paths of `n_t` draws.
fn offset_seed(lcg: &LcgParams, x0: u64, offset: i64, n_t: usize) -> Result<u64> {
    if offset == 0 {
        return Ok(x0);
    }
    if offset < 0 && !lcg.is_full_period() {
        return Err(Error::Config("negative --seed-offset needs a full-period generator".into()));
    }
    let period = lcg.modulus_mask() + 1;
    let steps = (offset as i128 * n_t as i128).rem_euclid(period as i128) as u128;
    Ok(lcg_jump(lcg, x0 as u128, steps) as u64)
}

/// Built model inputs of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: LvModel,
    pub payoffs: PayoffSpec,
    pub source: PrnSource,
}

/// What every command emits.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<RunOptions>,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    fn new(command: &'static str, run: Option<(&RunConfig, &RunOptions)>, result: T) -> Self {
        Self {
            command,
            version: VERSION,
            config: run.map(|r| r.0.clone()),
            options: run.map(|r| *r.1),
            result,
        }
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalReport {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub arithmetic: ArithmeticKind,
    /// Exact-weight sum over every draw pattern of the SN grid, when the
    /// pattern count fits the budget.
    pub enumerated: Option<f64>,
}

pub fn cmd_price_classical(cfg: &RunConfig, opts: &RunOptions) -> Result<Envelope<ClassicalReport>> {
    let r = cfg.resolve(opts)?;
    let e = &cfg.engine;
    let icdf = e.icdf.load_or_fit()?;
    let arithmetic = match e.arithmetic {
        ArithmeticKind::Exact => Arithmetic::Exact { n_dig: e.n_dig },
        ArithmeticKind::Fixed => Arithmetic::Fixed(e.fmt),
    };
    let est: PriceEstimate = price_sampled(&r.model, &r.payoffs, &r.source, &icdf, e.n_paths, arithmetic)?;
    let grid = e.sn.grid()?;
    let enumerated = match price_enumerated(&r.model, &r.payoffs, &grid, None, opts.budget) {
        Ok(v) => Some(v),
        Err(Error::EnumerationBudget { .. }) => None,
        Err(err) => return Err(err),
    };
    Ok(Envelope::new(
        "price-classical",
        Some((cfg, opts)),
        ClassicalReport {
            price: est.price,
            std_error: est.std_error,
            n_paths: est.n_paths,
            arithmetic: e.arithmetic,
            enumerated,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "way", rename_all = "snake_case")]
pub enum SimulateReport {
    Prn {
        price: f64,
        classical_price: f64,
        /// Every branch carries the classical path bit for bit.
        bit_exact: bool,
        encoding_loss: f64,
        report: PrnSimReport,
    },
    Rn {
        price: f64,
        enumerated: f64,
        abs_diff: f64,
        bit_exact: bool,
        encoding_loss: f64,
        report: RnSimReport,
    },
}

pub fn cmd_simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<Envelope<SimulateReport>> {
    let r = cfg.resolve(opts)?;
    let e = &cfg.engine;
    let loss = encoding_loss(&r.model, &r.payoffs, e.fmt);
    let budget_hint = |err: Error| match err {
        Error::Budget { size, budget } => Error::Config(format!(
            "simulator support {size} exceeds budget {budget}; raise --budget or reduce n_t, n_samp or sn.n_dig"
        )),
        e => e,
    };
    let report = match e.way {
        Way::Prn => {
            let way = PrnWay::new(PrnWayConfig {
                model: r.model,
                payoffs: r.payoffs,
                source: r.source,
                icdf: e.icdf.load_or_fit()?,
                n_samp: e.n_samp,
                fmt: e.fmt,
                payoff_scale: e.payoff_scale,
            })?;
            let rep = way.simulate(opts.budget).map_err(budget_hint)?;
            SimulateReport::Prn {
                price: rep.price,
                classical_price: rep.classical_price,
                bit_exact: rep.all_match && rep.ancillas_clean && rep.count_ok,
                encoding_loss: loss,
                report: rep,
            }
        }
        Way::Rn => {
            let way = RnWay::new(RnWayConfig {
                model: r.model,
                payoffs: r.payoffs,
                sn: e.sn,
                fmt: e.fmt,
                payoff_scale: e.payoff_scale,
            })?;
            let rep = way.simulate(opts.budget).map_err(budget_hint)?;
            SimulateReport::Rn {
                price: rep.price,
                enumerated: rep.enumerated,
                abs_diff: (rep.price - rep.enumerated).abs(),
                bit_exact: rep.branches_ok,
                encoding_loss: loss,
                report: rep,
            }
        }
        Way::Classical => return Err(Error::Config("simulate needs engine.way \"prn\" or \"rn\"".into())),
    };
    Ok(Envelope::new("simulate", Some((cfg, opts)), report))
}

/// Largest rounding error over the model's and payoff's decimal inputs.
pub fn encoding_loss(model: &LvModel, payoffs: &PayoffSpec, fmt: FxFormat) -> f64 {
    let mut values = vec![model.s0()];
    for j in 1..=model.n_t() {
        let sq = model.dt(j).sqrt();
        let (a, b) = model.coeffs(j);
        values.extend(model.grid(j));
        values.extend(a.iter().map(|v| v * sq));
        values.extend(b.iter().map(|v| v * sq));
    }
    for l in payoffs.legs() {
        values.extend([l.a, l.b]);
        values.extend(l.floor);
        values.extend(l.cap);
    }
    values
        .iter()
        .map(|&v| fmt.encode(v).map_or(f64::INFINITY, |r| (v - fmt.decode(r)).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResourcesReport {
    #[serde(flatten)]
    pub comparison: Comparison,
    pub table: String,
}

pub fn cmd_resources(params: &ResourceParams) -> Result<Envelope<ResourcesReport>> {
    params.validate()?;
    let comparison = compare_ways(params);
    let table = render_table(&comparison);
    Ok(Envelope::new("resources", None, ResourcesReport { comparison, table }))
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub n_intervals: usize,
    pub max_err: f64,
    pub domain: (f64, f64),
    pub artifact: Option<PathBuf>,
}

/// Fits the inverse CDF and writes the approximation to `artifact` when given.
pub fn cmd_fit_icdf(spec: &IcdfSection, artifact: Option<&Path>) -> Result<(IcdfApprox, Envelope<FitReport>)> {
    let approx = IcdfSection { path: None, ..spec.clone() }.load_or_fit()?;
    if let Some(p) = artifact {
        std::fs::write(p, approx.to_json()?).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    }
    let report = FitReport {
        n_intervals: approx.n_intervals(),
        max_err: approx.max_err,
        domain: approx.domain,
        artifact: artifact.map(Path::to_path_buf),
    };
    Ok((approx, Envelope::new("fit-icdf", None, report)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, r: Result<String>) -> Check {
    match r {
        Ok(detail) => Check {
            name: name.into(),
            passed: true,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn describe(v: &Violation) -> String {
    match v {
        Violation::Denominator { step, interval, w, value } => {
            format!("step {step}, interval {interval}: 1 + a′w = {value} at w = {w}")
        }
        Violation::Discontinuity { step, point, left, right } => {
            format!("step {step}: σ jumps from {left} to {right} at S = {point}")
        }
    }
}

/// Runs every structural check; a failing check is reported, not raised.
/// Returns `Err` only when the configuration cannot be parsed into a model.
pub fn cmd_validate(cfg: &RunConfig, opts: &RunOptions) -> Result<Envelope<ValidateReport>> {
    let r = cfg.resolve(opts)?;
    let e = &cfg.engine;
    let mut checks = vec![check("model", Ok(format!("{} steps, σ ≥ 0 at every grid point", r.model.n_t())))];

    let icdf = e.icdf.load_or_fit();
    let (w_lo, w_hi) = match (e.way, &icdf) {
        (Way::Rn, _) => {
            let g = e.sn.grid()?;
            (g.point(0), g.point(g.n() - 1))
        }
        (_, Ok(a)) => (eval_icdf(a, 0.0), eval_icdf(a, 1.0 - f64::EPSILON)),
        (_, Err(_)) => (-6.0, 6.0),
    };
    let mono = monotonicity_check(&r.model, w_lo, w_hi);
    checks.push(Check {
        name: "monotonicity".into(),
        passed: mono.passed(),
        detail: if mono.passed() {
            format!("update increasing in S for w in [{w_lo:.4}, {w_hi:.4}], σ continuous")
        } else {
            mono.violations.iter().map(describe).collect::<Vec<_>>().join("; ")
        },
    });
    checks.push(check(
        "representability",
        r.model
            .encode(e.fmt)
            .and_then(|_| r.payoffs.encode(e.fmt))
            .map(|_| format!("max encoding loss {:.3e} in {}", encoding_loss(&r.model, &r.payoffs, e.fmt), e.fmt)),
    ));
    checks.push(check(
        "icdf",
        icdf.as_ref()
            .map(|a| format!("{} intervals, max error {:.3e}", a.n_intervals(), a.max_err))
            .map_err(Clone::clone),
    ));
    match e.way {
        Way::Prn => {
            let built = icdf.and_then(|icdf| {
                PrnWay::new(PrnWayConfig {
                    model: r.model.clone(),
                    payoffs: r.payoffs.clone(),
                    source: r.source.clone(),
                    icdf,
                    n_samp: e.n_samp,
                    fmt: e.fmt,
                    payoff_scale: e.payoff_scale,
                })
            });
            checks.push(check("prn_way", built.map(|w| format!("injectivity {:?}, {} draws", w.injectivity(), w.draw_set().len()))));
        }
        Way::Rn => {
            let built = RnWay::new(RnWayConfig {
                model: r.model.clone(),
                payoffs: r.payoffs.clone(),
                sn: e.sn,
                fmt: e.fmt,
                payoff_scale: e.payoff_scale,
            });
            checks.push(check("rn_way", built.map(|_| format!("N_SN = {}", e.sn.n_sn()))));
        }
        Way::Classical => {}
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Envelope::new("validate", Some((cfg, opts)), ValidateReport { passed, checks }))
}

/// JSON or `key,value` CSV with dotted keys.
pub fn render(value: &Value, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(value)? + "\n"),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", value, &mut rows);
            let mut out = String::from("key,value\n");
            for (k, v) in rows {
                out += &format!("{},{}\n", csv_field(&k), csv_field(&v));
            }
            Ok(out)
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Null => out.push((prefix.into(), String::new())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Machine-readable error object.
pub fn error_value(e: &Error) -> Value {
    let kind = format!("{e:?}");
    let kind = kind.split(['(', ' ', '{']).next().unwrap_or("Error");
    serde_json::json!({ "error": { "kind": kind, "message": e.to_string() } })
}
