//! Argument definitions and subcommand drivers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use condreg_core::conditional::{correlation_cautions, derive, resolve_fixed, t_coefficients, FixedValue};
use condreg_core::dataset::{column_stats, five_number, load_csv, pearson_matrix, quartiles};
use condreg_core::geometry::{classify_action, ellipse, ActionOptions, BOUNDARY_POINTS};
use condreg_core::ols::{fit_with, Assignment};
use condreg_core::relations::{bridge, detect_paradox_with, residualize, slr_slope, Sign};
use condreg_core::selection::{advisories_with, backward_stepwise, best_subset, StepwiseOptions};
use condreg_core::{BridgeReport, CsvOptions, Dataset, FitOptions, FittedModel, ModelSpec, Term};

use crate::config::{FileConfig, Overrides, Settings};
use crate::error::{CliError, CliResult};
use crate::formula;
use crate::report::{
    plot_tsv, ActionSection, BridgeSection, ClassifiedPoint, CoefSource, ColumnSummary, ConditionalSection,
    EffectSection, EllipseSection, ModelSection, RankedModel, Report, ResidualizeSection, StepwiseSection,
    SubsetSection, SummarySection, TraceStep,
};

#[derive(Debug, Parser)]
#[command(
    name = "condreg",
    version,
    about = "Regression with cross terms, conditional responses and coefficient diagnostics"
)]
pub struct Cli {
    /// TOML config file (keys: alpha, level, corr_threshold, antagonism_tolerance, delimiter, strict_hierarchy).
    #[arg(long, global = true, env = "CONDREG_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write the report here (atomically) instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV; the first row names the columns unless --no-header.
    #[arg(long, short = 'd', value_name = "CSV")]
    pub data: Option<PathBuf>,

    /// Field delimiter (single character, or "tab").
    #[arg(long)]
    pub delimiter: Option<String>,

    /// The CSV has no header; columns are named V1, V2, ...
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model formula, e.g. "Y ~ x1 + x2 + x1:x2".
    #[arg(long, short = 'f')]
    pub formula: String,

    /// Use these coefficients (intercept first, then terms in formula order) instead of fitting.
    #[arg(long, allow_hyphen_values = true, value_name = "LIST")]
    pub coef: Option<String>,

    /// Accept a saturated fit (as many parameters as observations).
    #[arg(long)]
    pub exact: bool,

    /// Refuse formulas with higher-order terms but missing linear terms.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub strict_hierarchy: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and report its coefficient table.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Section the model along one predictor with the others held fixed.
    Conditional {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        target: String,
        /// name=value or name=preset (min, q25, mean, q75, max); repeatable.
        #[arg(long = "fix", value_name = "NAME=VALUE")]
        fix: Vec<String>,
        /// Grid for the sweep table: min:max:steps.
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<String>,
        /// Write the sweep as TSV.
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
        #[arg(long)]
        corr_threshold: Option<f64>,
    },
    /// Change in the response for a unit step of one predictor.
    Effect {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        target: String,
        #[arg(long = "fix", value_name = "NAME=VALUE")]
        fix: Vec<String>,
        /// Starting value of the target.
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
    },
    /// Relate simple slopes to multiple-regression coefficients.
    Bridge {
        #[command(flatten)]
        data: DataArgs,
        /// Linear formula "Y ~ x1 + x2 + ..." (data mode).
        #[arg(long, short = 'f')]
        formula: Option<String>,
        #[arg(long)]
        target: String,
        /// Two-predictor constants instead of data: a1=..,a2=..,c12=..,c21=..,r=..
        #[arg(long, allow_hyphen_values = true)]
        constants: Option<String>,
        /// Name of the second predictor in constants mode.
        #[arg(long)]
        other: Option<String>,
        /// Expected sign of the target's effect (+ or -).
        #[arg(long, allow_hyphen_values = true)]
        expect: Option<String>,
        #[arg(long)]
        corr_threshold: Option<f64>,
    },
    /// Remove the co-predictors' linear influence from a predictor.
    Residualize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        target: String,
        /// Comma-separated co-predictors.
        #[arg(long)]
        on: String,
        /// Also compare the slope of this response on the residual with the full fit.
        #[arg(long)]
        response: Option<String>,
    },
    /// Backward elimination by p-value.
    Stepwise {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, short = 'f')]
        formula: String,
        #[arg(long)]
        alpha: Option<f64>,
        /// Terms never removed; repeatable.
        #[arg(long = "protect", value_name = "TERM")]
        protect: Vec<String>,
        /// Allow dropping linear terms still used by higher-order terms.
        #[arg(long)]
        no_hierarchy: bool,
    },
    /// Exhaustive search over fixed-size subsets of the formula's terms.
    Subset {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, short = 'f')]
        formula: String,
        #[arg(long)]
        size: usize,
        /// Number of ranked models to report.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Confidence ellipse of two predictors.
    Ellipse {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        level: Option<f64>,
        /// Point to classify as inside/outside: x,y; repeatable.
        #[arg(long = "point", allow_hyphen_values = true, value_name = "X,Y")]
        point: Vec<String>,
        /// Write the boundary polyline as TSV.
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
    },
    /// Classify the joint action of two factors from their cross term.
    Action {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// The two factors: a,b
        #[arg(long)]
        factors: String,
        #[arg(long)]
        alpha: Option<f64>,
        /// Low and high levels: lo1:hi1,lo2:hi2 (default -1:1,-1:1).
        #[arg(long, allow_hyphen_values = true)]
        levels: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long = "fix", value_name = "NAME=VALUE")]
        fix: Vec<String>,
    },
    /// Pearson correlations with p-values.
    Corr {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated columns (default: all).
        #[arg(long)]
        columns: Option<String>,
    },
    /// Per-column statistics and quartiles.
    Summary {
        #[command(flatten)]
        data: DataArgs,
    },
}

struct Output {
    report: Report,
    /// Replaces the JSON rendering when set.
    text: Option<String>,
}

impl From<Report> for Output {
    fn from(report: Report) -> Self {
        Self { report, text: None }
    }
}

/// Writes `contents` through a temporary file in the target directory.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write '{}': {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

struct Loaded {
    dataset: Dataset,
    dropped: usize,
}

fn load(args: &DataArgs, settings: &Settings) -> CliResult<Option<Loaded>> {
    let Some(path) = &args.data else { return Ok(None) };
    let file = File::open(path).map_err(|e| CliError::Io(format!("cannot open '{}': {e}", path.display())))?;
    let options = CsvOptions { delimiter: settings.delimiter, has_header: !args.no_header };
    let loaded = load_csv(std::io::BufReader::new(file), &options).map_err(CliError::from).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(Some(Loaded { dataset: loaded.dataset, dropped: loaded.dropped }))
}

fn require(data: Option<Loaded>, why: &str) -> CliResult<Loaded> {
    data.ok_or_else(|| CliError::Usage(format!("--data is required {why}")))
}

fn note_dropped(report: &mut Report, data: &Option<Loaded>) {
    if let Some(d) = data.as_ref().filter(|d| d.dropped > 0) {
        report.warnings.push(format!("{} rows with missing or non-numeric values were dropped", d.dropped));
    }
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Parse(format!("{what}: '{s}' is not a finite number")))
}

fn parse_coefs(src: &str) -> CliResult<Vec<f64>> {
    src.split(',').map(|s| parse_f64(s, "--coef")).collect()
}

fn parse_fixes(items: &[String]) -> CliResult<BTreeMap<String, FixedValue>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (name, value) =
            item.split_once('=').ok_or_else(|| CliError::Parse(format!("--fix expects NAME=VALUE, got '{item}'")))?;
        let v: FixedValue = value
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("--fix {name}: '{value}' is neither a number nor a preset")))?;
        if out.insert(name.trim().to_string(), v).is_some() {
            return Err(CliError::Usage(format!("'{name}' is fixed more than once")));
        }
    }
    Ok(out)
}

fn parse_sweep(src: &str) -> CliResult<(f64, f64, usize)> {
    let parts: Vec<&str> = src.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(CliError::Parse(format!("--sweep expects min:max:steps, got '{src}'")));
    };
    let steps: usize = steps
        .trim()
        .parse()
        .ok()
        .filter(|s| *s >= 2)
        .ok_or_else(|| CliError::Parse(format!("--sweep steps must be an integer >= 2, got '{steps}'")))?;
    let (lo, hi) = (parse_f64(lo, "--sweep")?, parse_f64(hi, "--sweep")?);
    if lo >= hi {
        return Err(CliError::Usage(format!("--sweep needs min < max, got {lo}:{hi}")));
    }
    Ok((lo, hi, steps))
}

fn parse_pair(src: &str, what: &str) -> CliResult<(f64, f64)> {
    let (a, b) = src
        .split_once([',', ':'])
        .ok_or_else(|| CliError::Parse(format!("{what} expects two numbers, got '{src}'")))?;
    Ok((parse_f64(a, what)?, parse_f64(b, what)?))
}

/// Fits from data, or builds the model from `--coef`.
fn obtain_model(
    args: &ModelArgs,
    data: Option<&Dataset>,
    settings: &Settings,
    report: &mut Report,
) -> CliResult<FittedModel> {
    let spec = formula::parse(&args.formula)?;
    let strict = args.strict_hierarchy.unwrap_or(settings.strict_hierarchy);
    spec.validate_hierarchy(strict)?;
    let model = if let Some(coef) = &args.coef {
        let coef = parse_coefs(coef)?;
        if coef.len() != spec.n_params() {
            return Err(CliError::Usage(format!(
                "--coef has {} values but '{}' has {} coefficients ({})",
                coef.len(),
                formula::print(&spec),
                spec.n_params(),
                spec.labels().join(", ")
            )));
        }
        report.warnings.push("coefficients supplied on the command line; no inference available".into());
        FittedModel::from_coefficients(spec, coef)?
    } else {
        let d = data.ok_or_else(|| CliError::Usage("either --data or --coef is required".into()))?;
        let m = fit_with(d, &spec, &FitOptions { allow_exact: args.exact })?;
        if m.inference.is_none() {
            report.warnings.push("saturated fit: no residual degrees of freedom, inference suppressed".into());
        }
        m
    };
    if let Some(d) = data {
        report.advisories = advisories_with(d, &model.spec, settings.corr_threshold);
    } else {
        let missing = condreg_core::terms::check_hierarchy(&model.spec);
        if !missing.is_empty() {
            report.advisories.push(condreg_core::selection::Advisory::Hierarchy { missing });
        }
    }
    let source = if args.coef.is_some() { CoefSource::Supplied } else { CoefSource::Fitted };
    report.model = Some(ModelSection::from_model(&model, source));
    Ok(model)
}

fn resolve(fix: &[String], data: Option<&Dataset>) -> CliResult<Assignment> {
    let fixes = parse_fixes(fix)?;
    let summary = data.map(quartiles);
    Ok(resolve_fixed(&fixes, summary.as_ref())?)
}

fn text_table(report: &Report) -> String {
    let Some(m) = &report.model else { return String::new() };
    let cell = |v: Option<f64>| v.map_or("—".to_string(), |x| format!("{x:.6}"));
    let mut rows: Vec<[String; 5]> = vec![["term".into(), "coef".into(), "se".into(), "t".into(), "p".into()]];
    for r in &m.table {
        rows.push([r.term.clone(), format!("{:.6}", r.coef), cell(r.se), cell(r.t), cell(r.p)]);
    }
    let widths: Vec<usize> = (0..5).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = format!("{}\n", m.formula);
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let pad = widths[c] - s.chars().count();
                if c == 0 {
                    format!("{s}{}", " ".repeat(pad))
                } else {
                    format!("{}{s}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    if let Some(f) = &m.fit {
        let adj = f.r2_adj.map_or("—".to_string(), |v| format!("{v:.6}"));
        out.push_str(&format!("n = {}  dof = {}  R2 = {:.6}  adj R2 = {adj}  RSS = {:.6}\n", f.n, f.dof, f.r2, f.rss));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    for a in &report.advisories {
        out.push_str(&format!("advisory: {}\n", serde_json::to_string(a).unwrap_or_default()));
    }
    out
}

fn run_command(command: Command, file: &FileConfig) -> CliResult<Output> {
    let settings_for = |data: &DataArgs, extra: Overrides| {
        Settings::resolve(file, &Overrides { delimiter: data.delimiter.clone(), ..extra })
    };
    match command {
        Command::Fit { data, model, format } => {
            let settings = settings_for(&data, Overrides::default())?;
            let loaded = require(load(&data, &settings)?, "to fit a model")?;
            let mut report = Report::new("fit");
            let loaded = Some(loaded);
            note_dropped(&mut report, &loaded);
            let args = ModelArgs { coef: None, ..model };
            obtain_model(&args, loaded.as_ref().map(|l| &l.dataset), &settings, &mut report)?;
            let text = (format == Format::Text).then(|| text_table(&report));
            Ok(Output { report, text })
        }
        Command::Conditional { data, model, target, fix, sweep, plot, corr_threshold } => {
            let settings = settings_for(&data, Overrides { corr_threshold, ..Default::default() })?;
            let loaded = load(&data, &settings)?;
            let ds = loaded.as_ref().map(|l| &l.dataset);
            let mut report = Report::new("conditional");
            note_dropped(&mut report, &loaded);
            let m = obtain_model(&model, ds, &settings, &mut report)?;
            let fixed = resolve(&fix, ds)?;
            let section = derive(&m, &target, &fixed)?;
            let t = t_coefficients(&m, &target, &fixed).ok();
            let grid = match (&sweep, ds) {
                (Some(s), _) => Some(parse_sweep(s)?),
                (None, Some(d)) if d.has_column(&target) => {
                    let s = column_stats(d, &target)?;
                    (s.max > s.min).then_some((s.min, s.max, 21))
                }
                _ => None,
            };
            let rows: Vec<[f64; 2]> = grid.map_or_else(Vec::new, |(lo, hi, n)| {
                section.sweep(lo, hi, n).into_iter().map(|(x, y)| [x, y]).collect()
            });
            let cautions = match ds {
                Some(d) if d.has_column(&target) && fixed.keys().all(|k| d.has_column(k)) => {
                    let mut cols: Vec<&str> = vec![target.as_str()];
                    cols.extend(fixed.keys().map(String::as_str));
                    match pearson_matrix(d, &cols) {
                        Ok(corr) => correlation_cautions(&target, &fixed, &corr, settings.corr_threshold),
                        Err(_) => Vec::new(),
                    }
                }
                _ => Vec::new(),
            };
            for c in &cautions {
                report.warnings.push(format!(
                    "'{}' correlates with '{target}' (r = {:.3}); holding it fixed may leave the observed region",
                    c.predictor, c.r
                ));
            }
            if let Some(path) = &plot {
                if rows.is_empty() {
                    return Err(CliError::Usage("--plot needs a sweep: pass --sweep or --data".into()));
                }
                let fixed_desc: Vec<String> = fixed.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let tsv = plot_tsv(
                    &[
                        format!("condreg conditional response of {} on {target}", m.spec.response),
                        format!("fixed: {}", if fixed_desc.is_empty() { "none".into() } else { fixed_desc.join(", ") }),
                    ],
                    &[target.as_str(), m.spec.response.as_str()],
                    rows.iter().map(|r| r.to_vec()),
                );
                write_atomic(path, &tsv)?;
            }
            report.conditional =
                Some(ConditionalSection { target, fixed, poly: section.poly, t, sweep: rows, cautions });
            Ok(report.into())
        }
        Command::Effect { data, model, target, fix, at } => {
            let settings = settings_for(&data, Overrides::default())?;
            let loaded = load(&data, &settings)?;
            let ds = loaded.as_ref().map(|l| &l.dataset);
            let mut report = Report::new("effect");
            note_dropped(&mut report, &loaded);
            let m = obtain_model(&model, ds, &settings, &mut report)?;
            let fixed = resolve(&fix, ds)?;
            let section = derive(&m, &target, &fixed)?;
            let constant = m.spec.terms().iter().filter(|t| t.contains(&target)).all(|t| t.degree() == 1);
            if !constant {
                report
                    .warnings
                    .push(format!("the effect of '{target}' depends on where it is measured and on the fixed values"));
            }
            report.effect = Some(EffectSection { target, fixed, at, delta: section.unit_effect(at), constant });
            Ok(report.into())
        }
        Command::Bridge { data, formula: f, target, constants, other, expect, corr_threshold } => {
            let settings = settings_for(&data, Overrides { corr_threshold, ..Default::default() })?;
            let expected: Option<Sign> = expect.as_deref().map(str::parse).transpose()?;
            let mut report = Report::new("bridge");
            let bridge_report = match (constants, f) {
                (Some(c), None) => {
                    let other = other.ok_or_else(|| CliError::Usage("--constants needs --other".into()))?;
                    let mut vals = BTreeMap::new();
                    for kv in c.split(',') {
                        let (k, v) = kv
                            .split_once('=')
                            .ok_or_else(|| CliError::Parse(format!("--constants expects key=value, got '{kv}'")))?;
                        vals.insert(k.trim().to_string(), parse_f64(v, "--constants")?);
                    }
                    let get = |k: &str| {
                        vals.get(k).copied().ok_or_else(|| CliError::Usage(format!("--constants is missing '{k}'")))
                    };
                    if let Some(extra) = vals.keys().find(|k| !["a1", "a2", "c12", "c21", "r"].contains(&k.as_str())) {
                        return Err(CliError::Usage(format!("unknown constant '{extra}' (use a1, a2, c12, c21, r)")));
                    }
                    BridgeReport::from_two_factor_constants(
                        &target,
                        &other,
                        get("a1")?,
                        get("a2")?,
                        get("c12")?,
                        get("c21")?,
                        get("r")?,
                    )?
                }
                (None, Some(f)) => {
                    let loaded = require(load(&data, &settings)?, "for a data bridge")?;
                    let loaded = Some(loaded);
                    note_dropped(&mut report, &loaded);
                    let spec = formula::parse(&f)?;
                    let preds: Vec<&str> = spec
                        .terms()
                        .iter()
                        .map(|t| {
                            t.as_linear().ok_or_else(|| {
                                CliError::Usage(format!("bridge needs a linear formula; '{t}' is not linear"))
                            })
                        })
                        .collect::<CliResult<_>>()?;
                    if !spec.intercept {
                        return Err(CliError::Usage("bridge needs a formula with an intercept".into()));
                    }
                    bridge(&loaded.as_ref().unwrap().dataset, &spec.response, &preds, &target)?
                }
                _ => return Err(CliError::Usage("give exactly one of --formula (with --data) or --constants".into())),
            };
            let bridge_report = match expected {
                Some(s) => bridge_report.with_expected_sign(s),
                None => bridge_report,
            };
            let findings = detect_paradox_with(&bridge_report, expected, settings.corr_threshold);
            report.bridge = Some(BridgeSection { report: bridge_report, findings });
            Ok(report.into())
        }
        Command::Residualize { data, target, on, response } => {
            let settings = settings_for(&data, Overrides::default())?;
            let loaded = Some(require(load(&data, &settings)?, "to residualize")?);
            let mut report = Report::new("residualize");
            note_dropped(&mut report, &loaded);
            let d = &loaded.as_ref().unwrap().dataset;
            let others = formula::parse_list(&on)?;
            let refs: Vec<&str> = others.iter().map(String::as_str).collect();
            let res = residualize(d, &target, &refs)?;
            let (mut response_slope, mut mlr_coef) = (None, None);
            if let Some(y) = &response {
                response_slope = Some(slr_slope(d.column(y)?, &res.values, &format!("{target}*"))?);
                let mut all = refs.clone();
                all.push(&target);
                let m = fit_with(d, &ModelSpec::linear(y, &all)?, &FitOptions::default())?;
                mlr_coef = m.coef_of(&Term::linear(&target));
            }
            report.residualize = Some(ResidualizeSection { residualized: res, response, response_slope, mlr_coef });
            Ok(report.into())
        }
        Command::Stepwise { data, formula: f, alpha, protect, no_hierarchy } => {
            let settings = settings_for(&data, Overrides { alpha, ..Default::default() })?;
            let loaded = Some(require(load(&data, &settings)?, "for stepwise selection")?);
            let mut report = Report::new("stepwise");
            note_dropped(&mut report, &loaded);
            let d = &loaded.as_ref().unwrap().dataset;
            let spec = formula::parse(&f)?;
            let protected = protect.iter().map(|t| formula::parse_term(t)).collect::<CliResult<Vec<_>>>()?;
            let opts = StepwiseOptions { alpha: settings.alpha, protected, enforce_hierarchy: !no_hierarchy };
            let result = backward_stepwise(d, &spec, &opts)?;
            let trace = result
                .steps
                .iter()
                .map(|s| TraceStep {
                    removed: s.removed.to_string(),
                    p: s.p_value,
                    terms: s.model.spec.terms().len(),
                    r2: s.model.r2(),
                    formula: formula::print(&s.model.spec),
                })
                .collect();
            let last = result.final_model();
            report.model = Some(ModelSection::from_model(last, CoefSource::Fitted));
            report.advisories = result.warnings.clone();
            report.stepwise = Some(StepwiseSection {
                alpha: settings.alpha,
                start: formula::print(&result.start.spec),
                trace,
                final_formula: formula::print(&last.spec),
            });
            Ok(report.into())
        }
        Command::Subset { data, formula: f, size, top } => {
            let settings = settings_for(&data, Overrides::default())?;
            let loaded = Some(require(load(&data, &settings)?, "for subset search")?);
            let mut report = Report::new("subset");
            note_dropped(&mut report, &loaded);
            let d = &loaded.as_ref().unwrap().dataset;
            let spec = formula::parse(&f)?;
            let result = best_subset(d, &spec.response, spec.terms(), size)?;
            let evaluated = result.ranked.len() + result.skipped.len();
            if let Some(best) = result.ranked.first() {
                report.model = Some(ModelSection::from_model(&best.model, CoefSource::Fitted));
            }
            report.advisories = result.warnings.clone();
            report.subset = Some(SubsetSection {
                size,
                evaluated,
                ranked: result
                    .ranked
                    .iter()
                    .take(top)
                    .map(|c| RankedModel { formula: formula::print(&c.spec), r2: c.r2, r2_adj: c.r2_adj })
                    .collect(),
                skipped: result.skipped,
            });
            Ok(report.into())
        }
        Command::Ellipse { data, x, y, level, point, plot } => {
            let settings = settings_for(&data, Overrides { level, ..Default::default() })?;
            let loaded = Some(require(load(&data, &settings)?, "for an ellipse")?);
            let mut report = Report::new("ellipse");
            note_dropped(&mut report, &loaded);
            let e = ellipse(&loaded.as_ref().unwrap().dataset, &x, &y, settings.level)?;
            let points = point
                .iter()
                .map(|p| {
                    let (px, py) = parse_pair(p, "--point")?;
                    Ok(ClassifiedPoint {
                        x: px,
                        y: py,
                        distance2: e.mahalanobis2((px, py)),
                        class: e.classify((px, py)),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            if let Some(path) = &plot {
                let tsv = plot_tsv(
                    &[
                        format!("condreg confidence ellipse of ({x}, {y})"),
                        format!("level {} threshold {}", e.level, crate::report::round_sig(e.threshold)),
                    ],
                    &[x.as_str(), y.as_str()],
                    e.boundary(BOUNDARY_POINTS).into_iter().map(|(a, b)| vec![a, b]),
                );
                write_atomic(path, &tsv)?;
            }
            let (eigenvalues, major_axis) = e.principal_axes();
            let eccentricity = e.eccentricity();
            report.ellipse = Some(EllipseSection { ellipse: e, eigenvalues, major_axis, eccentricity, points });
            Ok(report.into())
        }
        Command::Action { data, model, factors, alpha, levels, tolerance, fix } => {
            let settings =
                settings_for(&data, Overrides { alpha, antagonism_tolerance: tolerance, ..Default::default() })?;
            let loaded = load(&data, &settings)?;
            let ds = loaded.as_ref().map(|l| &l.dataset);
            let mut report = Report::new("action");
            note_dropped(&mut report, &loaded);
            let m = obtain_model(&model, ds, &settings, &mut report)?;
            let names = formula::parse_list(&factors)?;
            let [f1, f2] = names.as_slice() else {
                return Err(CliError::Usage(format!("--factors expects two names, got '{factors}'")));
            };
            let mut options = ActionOptions {
                tolerance_frac: settings.antagonism_tolerance,
                fixed: resolve(&fix, ds)?,
                ..Default::default()
            };
            if let Some(l) = &levels {
                let (a, b) = l
                    .split_once(',')
                    .ok_or_else(|| CliError::Parse(format!("--levels expects lo1:hi1,lo2:hi2, got '{l}'")))?;
                options.levels = [parse_pair(a, "--levels")?, parse_pair(b, "--levels")?];
            }
            let result = classify_action(&m, f1, f2, settings.alpha, &options)?;
            if result.evidence.cross_p.is_none() {
                report.warnings.push("no p-value for the cross term; it is treated as significant".into());
            }
            report.action = Some(ActionSection { factors: [f1.clone(), f2.clone()], alpha: settings.alpha, result });
            Ok(report.into())
        }
        Command::Corr { data, columns } => {
            let settings = settings_for(&data, Overrides::default())?;
            let loaded = Some(require(load(&data, &settings)?, "for correlations")?);
            let mut report = Report::new("corr");
            note_dropped(&mut report, &loaded);
            let d = &loaded.as_ref().unwrap().dataset;
            let cols = match &columns {
                Some(c) => formula::parse_list(c)?,
                None => d.names().to_vec(),
            };
            let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            report.correlation = Some(pearson_matrix(d, &refs)?);
            Ok(report.into())
        }
        Command::Summary { data } => {
            let settings = settings_for(&data, Overrides::default())?;
            let loaded = Some(require(load(&data, &settings)?, "for a summary")?);
            let mut report = Report::new("summary");
            note_dropped(&mut report, &loaded);
            let l = loaded.as_ref().unwrap();
            let columns = l
                .dataset
                .names()
                .iter()
                .map(|n| {
                    let values = l.dataset.column(n)?;
                    Ok(ColumnSummary {
                        name: n.clone(),
                        stats: column_stats(&l.dataset, n)?,
                        quartiles: five_number(values),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            report.summary = Some(SummarySection { n: l.dataset.n(), dropped: l.dropped, columns });
            Ok(report.into())
        }
    }
}

/// Runs one parsed invocation and writes its output.
pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let output = run_command(cli.command, &file)?;
    let text = output.text.unwrap_or_else(|| output.report.render());
    match &cli.out {
        Some(path) => write_atomic(path, &text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}
