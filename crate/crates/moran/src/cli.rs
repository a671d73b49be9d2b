//! The `moran` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use moran_core::diagnostics::{
    fmt_ratio, rho_limit_probe, symmetric_mask_identity, symmetric_split, tight_frame_identity, verify_rho_witness, wiener_average, RhoThresholds,
    RhoVerdict, RhoWitness, ScanParams,
};
use moran_core::measure::Atom;
use moran_core::spectra::{canonical_levels, default_probes, delta_lambda, greedy_spectrum, orthogonality_check, parseval_sum, GreedyParams};
use moran_core::sumsine::{bourgain_search, certified_sine_max, class_check, sine_profile, SineClass};
use moran_core::triples::{check_tower, check_triple, factorize_block, hadamard_exists, TowerVerdict, DEFAULT_UNITARITY_TOL};
use moran_core::{
    partial_measure, CertifiedComplex, DiscreteMeasure, EvalConfig, FourierTransform, Freq, MoranError, MoranSpec, TailSpec,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::{csv_path, Manifest, Report, Table};
use crate::scan::parallel_zero_scan;
use crate::specio::{inline_spec, load_spec};
use crate::treeio::TreeJson;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "moran", version, about = "Spectral Cantor-Moran measures: triples, spectra, diagnostics and sine sums")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a CSV side file next to --out (same name, .csv extension).
    #[arg(long, global = true)]
    pub csv: bool,
    /// Rerun the command recorded in a report and compare verdicts.
    #[arg(long, value_name = "REPORT")]
    pub verify: Option<PathBuf>,
    /// Worker threads for grid scans (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Radius target for certified transforms.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Stage depth cap for certified transforms.
    #[arg(long, global = true, env = "MORAN_DEPTH_CAP", default_value_t = 64)]
    pub depth_cap: usize,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Singular values and Hadamard test for (N, B, L).
    ///
    /// CSV columns: N, is_hadamard, epsilon, sigma_min, sigma_max
    CheckTriple(CheckTripleArgs),
    /// Search L ⊂ [0, N) with 0 ∈ L making (N, B, L) Hadamard.
    ///
    /// CSV columns: index, L (empty when none exists)
    #[command(name = "find-L")]
    #[serde(rename = "find-L")]
    FindL(FindLArgs),
    /// Collapse stages from..=to into one triple.
    ///
    /// CSV columns: index, B, L
    Factorize(FactorizeArgs),
    /// Canonical or greedy spectrum tree.
    ///
    /// CSV columns: level, lambda
    BuildSpectrum(BuildSpectrumArgs),
    /// Orthogonality, δ(Λ) and Parseval sums for a tree.
    ///
    /// CSV columns: level, probe, parseval, radius
    CheckSpectrum(CheckSpectrumArgs),
    /// Does ν_{>n} approach ρ = (δ_0 + δ_1)/2?
    ///
    /// CSV columns: n, half_value, half_radius, interior_mass, lower_mass
    Classify(ClassifyArgs),
    /// Points ξ ∈ [0, 1) where |μ̂(ξ + k)| is below tol for every |k| ≤ window.
    ///
    /// CSV columns: xi, max_abs
    ZeroScan(ZeroScanArgs),
    /// Integer-shift average of |μ̂|² for a discrete measure.
    ///
    /// CSV columns: average, folded_sum, atom_sum, defect, terms
    Wiener(WienerArgs),
    /// Symmetric split of a stage and its half-integer mask identities.
    ///
    /// CSV columns: k, lhs, rhs, defect
    Split(SplitArgs),
    /// Certified max of |Σ m_b sin 2πbx| on [0, 1/2 − δ0].
    ///
    /// CSV columns: x, f
    SineMax(SineMaxArgs),
    /// Class membership and lower bound for a sine set.
    ///
    /// CSV columns: member, lower_bound, max_delta0, epsilon0, certified_upper
    ClassCheck(ClassCheckArgs),
    /// Annealing search for sets with small sine maxima.
    ///
    /// CSV columns: x, f (profile of the best set)
    BourgainSearch(BourgainSearchArgs),
    /// Certified μ̂(ξ).
    ///
    /// CSV columns: xi, re, im, abs, radius
    EvalFt(EvalFtArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckTriple(_) => "check-triple",
            Command::FindL(_) => "find-L",
            Command::Factorize(_) => "factorize",
            Command::BuildSpectrum(_) => "build-spectrum",
            Command::CheckSpectrum(_) => "check-spectrum",
            Command::Classify(_) => "classify",
            Command::ZeroScan(_) => "zero-scan",
            Command::Wiener(_) => "wiener",
            Command::Split(_) => "split",
            Command::SineMax(_) => "sine-max",
            Command::ClassCheck(_) => "class-check",
            Command::BourgainSearch(_) => "bourgain-search",
            Command::EvalFt(_) => "eval-ft",
        }
    }

    /// Replaces spec and tree references by their contents so the manifest is self-contained.
    fn resolved(&self) -> Result<Command> {
        let mut c = self.clone();
        match &mut c {
            Command::Factorize(a) => a.spec = inline_spec(&load_spec(&a.spec)?),
            Command::BuildSpectrum(a) => a.spec = inline_spec(&load_spec(&a.spec)?),
            Command::CheckSpectrum(a) => {
                a.spec = inline_spec(&load_spec(&a.spec)?);
                a.tree = serde_json::to_string(&load_tree(&a.tree)?)?;
            }
            Command::Classify(a) => a.spec = inline_spec(&load_spec(&a.spec)?),
            Command::ZeroScan(a) => a.measure.resolve()?,
            Command::Wiener(a) => a.measure.resolve()?,
            Command::EvalFt(a) => a.measure.resolve()?,
            _ => {}
        }
        Ok(c)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
pub struct CheckTripleArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long = "B", value_delimiter = ',', required = true)]
    pub b: Vec<u64>,
    #[arg(long = "L", value_delimiter = ',', required = true)]
    pub l: Vec<i64>,
    /// Unitarity tolerance.
    #[arg(long = "unitarity-tol", default_value_t = DEFAULT_UNITARITY_TOL)]
    pub unitarity_tol: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindLArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long = "B", value_delimiter = ',', required = true)]
    pub b: Vec<u64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizeArgs {
    /// Built-in name (jp4, example45, example92), inline JSON or a JSON file.
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub from: usize,
    #[arg(long)]
    pub to: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Canonical,
    Greedy,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildSpectrumArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, value_enum, default_value_t = Mode::Canonical)]
    pub mode: Mode,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eps0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta0: f64,
    #[arg(long, default_value_t = 64)]
    pub window: i64,
    /// Greedy merging with every shift k' = 0 and no certification.
    #[arg(long)]
    pub force_zero_shifts: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpectrumArgs {
    #[arg(long)]
    pub spec: String,
    /// Tree JSON file, a build-spectrum report, or inline JSON.
    #[arg(long)]
    pub tree: String,
    /// Probe points x for Σ|μ̂(x + λ)|² (rationals like 1/3 or decimals).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub probe: Vec<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 8)]
    pub nmax: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

/// A tower (optionally a tail of it) or an explicit discrete measure.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureArgs {
    #[arg(long, conflicts_with = "atoms")]
    pub spec: Option<String>,
    /// Use the tail tower ν_{>n}.
    #[arg(long, default_value_t = 0)]
    pub tail: usize,
    /// Use the n-stage partial measure of --spec instead of the tower.
    #[arg(long)]
    pub partial: Option<usize>,
    /// Atom locations (rationals), uniform unless --weights is given.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub atoms: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', requires = "atoms")]
    pub weights: Option<Vec<f64>>,
}

enum Measure {
    Tower(MoranSpec, usize),
    Discrete(DiscreteMeasure),
}

impl MeasureArgs {
    fn resolve(&mut self) -> Result<()> {
        if let Some(s) = &self.spec {
            self.spec = Some(inline_spec(&load_spec(s)?));
        }
        Ok(())
    }

    fn load(&self) -> Result<Measure> {
        match (&self.spec, &self.atoms) {
            (Some(s), None) => {
                let spec = load_spec(s)?;
                match self.partial {
                    Some(n) => Ok(Measure::Discrete(partial_measure(&TailSpec::new(&spec, self.tail), n, 1_000_000)?)),
                    None => Ok(Measure::Tower(spec, self.tail)),
                }
            }
            (None, Some(a)) => {
                let locs = a.iter().map(|x| parse_rational(x)).collect::<Result<Vec<_>>>()?;
                let m = match &self.weights {
                    None => DiscreteMeasure::uniform(&locs)?,
                    Some(w) if w.len() == locs.len() => {
                        DiscreteMeasure::new(locs.into_iter().zip(w).map(|(location, &weight)| Atom { location, weight }).collect())?
                    }
                    Some(w) => bail!("{} weights for {} atoms", w.len(), locs.len()),
                };
                Ok(Measure::Discrete(m))
            }
            _ => bail!("give exactly one of --spec or --atoms"),
        }
    }
}

impl Measure {
    fn with<T>(&self, f: impl FnOnce(&(dyn FourierTransform + Sync)) -> T) -> T {
        match self {
            Measure::Tower(spec, skip) => f(&TailSpec::new(spec, *skip)),
            Measure::Discrete(m) => f(m),
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroScanArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    #[arg(long, default_value_t = 32)]
    pub window: i64,
    #[arg(long = "zero-tol", default_value_t = 1e-6)]
    pub zero_tol: f64,
    #[arg(long, default_value_t = 64)]
    pub snap_denominator: u64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub xi: String,
    #[arg(long, default_value_t = 1)]
    pub periods: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long = "B", value_delimiter = ',', required = true)]
    pub b: Vec<u64>,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Check the half-integer mask identity at these k.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub k: Vec<i64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineMaxArgs {
    #[arg(long = "B", value_delimiter = ',', required = true)]
    pub b: Vec<u64>,
    /// Multiplicities (1 or 2) per digit.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<u8>>,
    #[arg(long, default_value_t = 0.0)]
    pub delta0: f64,
    #[arg(long)]
    pub grid_h: Option<f64>,
    /// Profile points written with --csv.
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassName {
    Bounded,
    Dense,
    Lacunary,
    DenseTail,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCheckArgs {
    #[arg(long = "B", value_delimiter = ',', required = true)]
    pub b: Vec<u64>,
    #[arg(long, value_enum)]
    pub class: ClassName,
    /// Lacunarity ratio.
    #[arg(long = "A", default_value_t = 3.0)]
    pub a: f64,
    /// Density.
    #[arg(long = "c", default_value_t = 0.5)]
    pub c: f64,
    /// Size bound for the bounded class.
    #[arg(long = "M", default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub ell: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BourgainSearchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub range: u64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFtArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// Frequencies: integers, p/q, or decimals (exact); other floats carry half-ulp slack.
    /// Write negative fractions as --xi=-p/q.
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    pub xi: Vec<String>,
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

/// Integers, p/q, and plain decimals like -0.375.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if let Ok(r) = BigRational::from_str(t) {
        return Ok(r);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').ok_or_else(|| anyhow!("not a rational: {s:?}"))?;
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        bail!("not a rational: {s:?}");
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

pub fn parse_freq(s: &str) -> Result<Freq> {
    if let Ok(r) = parse_rational(s) {
        return Ok(Freq::exact(r));
    }
    let x: f64 = s.trim().parse().with_context(|| format!("bad frequency {s:?}"))?;
    if !x.is_finite() {
        bail!("frequency must be finite: {s:?}");
    }
    Ok(Freq::from_f64(x))
}

fn load_tree(arg: &str) -> Result<TreeJson> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading tree {arg}"))?
    };
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing tree {arg}"))?;
    let tree = v.pointer("/result/tree").cloned().unwrap_or(v);
    serde_json::from_value(tree).context("tree JSON needs levels and boundaries")
}

fn complex_json(c: &CertifiedComplex) -> Value {
    json!({ "re": c.value.re, "im": c.value.im, "abs": c.value.norm(), "radius": c.radius })
}

fn witness_json(w: &RhoWitness) -> Value {
    match w {
        RhoWitness::HullBound { c } => json!({ "kind": "hull_bound", "c": fmt_ratio(c) }),
        RhoWitness::BoundedModulus { sup_modulus, stage, period, interval, mass_lower } => json!({
            "kind": "bounded_modulus",
            "sup_modulus": sup_modulus,
            "stage": stage,
            "period": period,
            "interval": [fmt_ratio(&interval.0), fmt_ratio(&interval.1)],
            "mass_lower": fmt_ratio(mass_lower),
        }),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// What a command produced.
pub struct Outcome {
    pub result: Value,
    pub evidence: Value,
    pub negative: bool,
    pub table: Option<Table>,
    pub seed: Option<u64>,
}

impl Outcome {
    fn new(result: Value, evidence: Value, negative: bool) -> Self {
        Self { result, evidence, negative, table: None, seed: None }
    }
}

/// Analysis failures that are verdicts rather than tool errors.
fn negative_error(e: &anyhow::Error) -> Option<Value> {
    match e.downcast_ref::<MoranError>()? {
        MoranError::NoShiftFound { x, level } => Some(json!({ "verdict": "no_shift_found", "level": level, "x": x })),
        MoranError::TolUnreachable { tol, depth_cap } => Some(json!({ "verdict": "tol_unreachable", "tol": tol, "depth_cap": depth_cap })),
        _ => None,
    }
}

pub fn execute(cmd: &Command, cfg: &EvalConfig) -> Result<Outcome> {
    match cmd {
        Command::CheckTriple(a) => {
            let r = check_triple(a.n, &a.b, &a.l, a.unitarity_tol)?;
            let verdict = if r.is_hadamard { "hadamard" } else { "not_hadamard" };
            let mut table = Table::new(&["N", "is_hadamard", "epsilon", "sigma_min", "sigma_max"]);
            table.push(vec![a.n.to_string(), r.is_hadamard.to_string(), r.epsilon.to_string(), r.sigma_min.to_string(), r.sigma_max.to_string()]);
            let mut out = Outcome::new(
                json!({ "verdict": verdict, "is_hadamard": r.is_hadamard, "epsilon": r.epsilon, "sigma_min": r.sigma_min, "sigma_max": r.sigma_max }),
                json!({ "unitarity_defect": r.unitarity_defect, "size": r.size, "modulus": r.modulus.to_string() }),
                !r.is_hadamard,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::FindL(a) => {
            let l = hadamard_exists(a.n, &a.b)?;
            let verdict = if l.is_some() { "found" } else { "none" };
            let evidence = match &l {
                Some(l) => {
                    let r = check_triple(a.n, &a.b, l, DEFAULT_UNITARITY_TOL)?;
                    json!({ "unitarity_defect": r.unitarity_defect })
                }
                None => json!({ "searched": "all L ⊂ [0, N) with 0 ∈ L, lexicographic" }),
            };
            let negative = l.is_none();
            let mut table = Table::new(&["index", "L"]);
            for (i, x) in l.iter().flatten().enumerate() {
                table.push(vec![i.to_string(), x.to_string()]);
            }
            let mut out = Outcome::new(json!({ "verdict": verdict, "L": l }), evidence, negative);
            out.table = Some(table);
            Ok(out)
        }
        Command::Factorize(a) => {
            let spec = load_spec(&a.spec)?;
            let block = factorize_block(&spec, a.from, a.to)?;
            let digits: Vec<String> = block.digits.iter().map(|d| d.to_string()).collect();
            let spectrum: Option<Vec<String>> = block.spectrum.as_ref().map(|l| l.iter().map(|d| d.to_string()).collect());
            let (verdict, evidence, negative) = match &block.spectrum {
                Some(_) => {
                    let r = block.check(DEFAULT_UNITARITY_TOL)?;
                    let v = if r.is_hadamard { "hadamard" } else { "not_hadamard" };
                    (v, json!({ "unitarity_defect": r.unitarity_defect, "epsilon": r.epsilon }), !r.is_hadamard)
                }
                None => ("no_spectrum", Value::Null, false),
            };
            let mut table = Table::new(&["index", "B", "L"]);
            for (i, d) in digits.iter().enumerate() {
                let l = spectrum.as_ref().map(|l| l[i].clone()).unwrap_or_default();
                table.push(vec![i.to_string(), d.clone(), l]);
            }
            let mut out = Outcome::new(
                json!({ "verdict": verdict, "from": block.from, "to": block.to, "N": block.modulus.to_string(), "B": digits, "L": spectrum }),
                evidence,
                negative,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::BuildSpectrum(a) => {
            let spec = load_spec(&a.spec)?;
            let built = match a.mode {
                Mode::Canonical => canonical_levels(&spec, a.depth).map_err(anyhow::Error::from),
                Mode::Greedy => {
                    let p = GreedyParams { eps0: a.eps0, delta0: a.delta0, window: a.window, force_zero_shifts: a.force_zero_shifts };
                    greedy_spectrum(&spec, a.depth, &p, cfg).map_err(anyhow::Error::from)
                }
            };
            let tree = match built {
                Ok(t) => t,
                Err(e) => match negative_error(&e) {
                    Some(v) => return Ok(Outcome::new(v, json!({ "mode": a.mode, "error": e.to_string() }), true)),
                    None => return Err(e),
                },
            };
            let d = delta_lambda(&spec, &tree, cfg)?;
            let sizes: Vec<usize> = tree.levels.iter().map(Vec::len).collect();
            let mut table = Table::new(&["level", "lambda"]);
            for (i, level) in tree.levels.iter().enumerate() {
                for x in level {
                    table.push(vec![(i + 1).to_string(), x.to_string()]);
                }
            }
            let mut out = Outcome::new(
                json!({ "verdict": "built", "tree": TreeJson::from_tree(&tree), "sizes": sizes }),
                json!({
                    "delta_lambda": d.value.value,
                    "delta_lambda_radius": d.value.radius,
                    "per_level": d.per_level.iter().map(|v| v.value).collect::<Vec<_>>(),
                }),
                false,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::CheckSpectrum(a) => {
            let spec = load_spec(&a.spec)?;
            let tree = load_tree(&a.tree)?.to_tree()?;
            let probes = if a.probe.is_empty() { default_probes() } else { a.probe.iter().map(|p| parse_freq(p)).collect::<Result<_>>()? };
            let top = tree.depth();
            if top == 0 {
                bail!("empty tree");
            }
            let o = orthogonality_check(&spec, &tree, top, cfg)?;
            let orthogonal = o.max_abs <= o.radius;
            let mut table = Table::new(&["level", "probe", "parseval", "radius"]);
            let mut bessel = true;
            let mut sums = Vec::new();
            for x in &probes {
                let mut row = Vec::new();
                for level in 1..=top {
                    let s = parseval_sum(&spec, &tree, level, x, cfg)?;
                    bessel &= s.lower() <= 1.0;
                    table.push(vec![level.to_string(), x.to_string(), s.value.to_string(), s.radius.to_string()]);
                    row.push(s.value);
                }
                sums.push(json!({ "probe": x.to_string(), "parseval": row }));
            }
            let d = delta_lambda(&spec, &tree, cfg)?;
            let good = orthogonal && bessel;
            let verdict = if good { "orthogonal" } else { "not_orthogonal" };
            let mut out = Outcome::new(
                json!({ "verdict": verdict, "orthogonal": orthogonal, "bessel": bessel, "delta_lambda": d.value.value }),
                json!({ "max_pair_abs": o.max_abs, "pair_radius": o.radius, "pairs": o.pairs, "parseval": sums }),
                !good,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::Classify(a) => {
            let spec = load_spec(&a.spec)?;
            let r = rho_limit_probe(&spec, a.nmax, a.delta, &RhoThresholds::default(), cfg)?;
            let tower = check_tower(&spec, a.nmax, DEFAULT_UNITARITY_TOL).ok();
            let (verdict, witness) = match &r.verdict {
                RhoVerdict::ConvergesToRho => ("converges_to_rho", Value::Null),
                RhoVerdict::NotRho(w) => {
                    let ok = verify_rho_witness(&spec, w)?;
                    let mut j = witness_json(w);
                    j["verified"] = json!(ok);
                    ("not_rho", j)
                }
                RhoVerdict::Undetermined => ("undetermined", Value::Null),
            };
            let mut table = Table::new(&["n", "half_value", "half_radius", "interior_mass", "lower_mass"]);
            for s in &r.samples {
                table.push(vec![s.n.to_string(), s.half_value.value.to_string(), s.half_value.radius.to_string(), s.interior_mass.to_string(), s.lower_mass.to_string()]);
            }
            let tower_json = tower.map(|t| {
                let v = match t.verdict {
                    TowerVerdict::Summable => json!("summable"),
                    TowerVerdict::Divergent => json!("divergent"),
                    TowerVerdict::Undetermined { depth } => json!({ "undetermined": depth }),
                };
                json!({ "verdict": v, "partial_sum": t.partial_sum, "frame_bounds": [t.frame_bounds.0, t.frame_bounds.1] })
            });
            let samples: Vec<Value> = r
                .samples
                .iter()
                .map(|s| json!({ "n": s.n, "half_value": s.half_value.value, "half_radius": s.half_value.radius, "interior_mass": s.interior_mass, "lower_mass": s.lower_mass }))
                .collect();
            let mut out = Outcome::new(
                json!({ "verdict": verdict, "witness": witness, "tower": tower_json }),
                json!({ "delta": r.delta, "samples": samples }),
                verdict == "undetermined",
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::ZeroScan(a) => {
            let m = a.measure.load()?;
            let p = ScanParams { grid: a.grid, window: a.window, tol: a.zero_tol, snap_denominator: a.snap_denominator };
            let scan = m.with(|f| parallel_zero_scan(f, &p, cfg))?;
            let mut table = Table::new(&["xi", "max_abs"]);
            let cands: Vec<Value> = scan
                .candidates
                .iter()
                .map(|c| {
                    table.push(vec![fmt_ratio(&c.xi), c.max_abs.to_string()]);
                    json!({ "xi": fmt_ratio(&c.xi), "max_abs": c.max_abs })
                })
                .collect();
            let verdict = if cands.is_empty() { "no_zeros" } else { "zeros_found" };
            let mut out = Outcome::new(
                json!({ "verdict": verdict, "candidates": cands }),
                json!({
                    "refine_threshold": scan.refine_threshold,
                    "min_grid_value": scan.min_grid_value,
                    "radius_budget": scan.radius_budget,
                    "refined_cells": scan.refined_cells,
                }),
                false,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::Wiener(a) => {
            let m = match a.measure.load()? {
                Measure::Discrete(m) => m,
                Measure::Tower(..) => bail!("wiener needs a discrete measure: use --atoms or --spec with --partial"),
            };
            let xi = parse_freq(&a.xi)?;
            let w = wiener_average(&m, &xi, a.periods)?;
            let holds = w.defect <= 1e-9;
            let mut table = Table::new(&["average", "folded_sum", "atom_sum", "defect", "terms"]);
            table.push(vec![w.average.to_string(), w.folded_sum.to_string(), w.atom_sum.to_string(), w.defect.to_string(), w.terms.to_string()]);
            let mut out = Outcome::new(
                json!({ "verdict": if holds { "holds" } else { "fails" }, "average": w.average, "folded_sum": w.folded_sum, "atom_sum": w.atom_sum }),
                json!({ "defect": w.defect, "terms": w.terms, "atoms": m.len() }),
                !holds,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::Split(a) => {
            let s = symmetric_split(a.n, &a.b, a.delta)?;
            let frame = tight_frame_identity(a.n, &a.b)?;
            let mut table = Table::new(&["k", "lhs", "rhs", "defect"]);
            let ids = a
                .k
                .iter()
                .map(|&k| {
                    let r = symmetric_mask_identity(a.n, &a.b, a.delta, &BigInt::from(k))?;
                    table.push(vec![k.to_string(), r.lhs.to_string(), r.rhs.to_string(), r.defect.to_string()]);
                    Ok(json!({ "k": k, "lhs": r.lhs, "rhs": r.rhs, "defect": r.defect }))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = Outcome::new(
                json!({
                    "verdict": if s.is_symmetric { "symmetric" } else { "not_symmetric" },
                    "B0": s.b0, "B1": s.b1, "dropped": s.dropped,
                    "symmetric_at_half_delta": s.symmetric_at_half_delta,
                }),
                json!({ "tight_frame": { "lhs": frame.lhs, "rhs": frame.rhs, "defect": frame.defect }, "mask_identities": ids }),
                false,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::SineMax(a) => {
            let r = certified_sine_max(&a.b, a.weights.as_deref(), a.delta0, a.grid_h)?;
            let mut table = Table::new(&["x", "f"]);
            for (x, f) in sine_profile(&a.b, a.weights.as_deref(), 0.0, 0.5 - a.delta0, a.points)? {
                table.push(vec![x.to_string(), f.to_string()]);
            }
            let mut out = Outcome::new(
                json!({
                    "verdict": "certified",
                    "best_x": r.best_x, "best_value": r.best_value, "upper_bound": r.upper_bound,
                    "ratio_linear": r.ratio_linear, "ratio_bourgain": r.ratio_bourgain,
                }),
                json!({ "grid_h": r.grid_h, "lipschitz": r.lipschitz, "weights": r.weights }),
                false,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::ClassCheck(a) => {
            let class = match a.class {
                ClassName::Bounded => SineClass::Bounded { m: a.m },
                ClassName::Dense => SineClass::Dense { c: a.c },
                ClassName::Lacunary => SineClass::Lacunary { a: a.a },
                ClassName::DenseTail => SineClass::DenseTail { c: a.c, ell: a.ell },
            };
            let r = class_check(&a.b, class)?;
            let m = certified_sine_max(&a.b, None, r.max_delta0, None)?;
            let mut table = Table::new(&["member", "lower_bound", "max_delta0", "epsilon0", "certified_upper"]);
            table.push(vec![r.member.to_string(), r.lower_bound.to_string(), r.max_delta0.to_string(), r.epsilon0.map(|e| e.to_string()).unwrap_or_default(), m.upper_bound.to_string()]);
            let mut out = Outcome::new(
                json!({
                    "verdict": if r.member { "member" } else { "not_member" },
                    "lower_bound": r.lower_bound, "max_delta0": r.max_delta0, "epsilon0": r.epsilon0,
                }),
                json!({ "certified_max": m.best_value, "certified_upper": m.upper_bound, "bound_consistent": r.lower_bound <= m.upper_bound }),
                !r.member,
            );
            out.table = Some(table);
            Ok(out)
        }
        Command::BourgainSearch(a) => {
            let s = bourgain_search(a.n, a.range, a.iters, a.seed)?;
            let mut table = Table::new(&["x", "f"]);
            for (x, f) in sine_profile(&s.set, None, 0.0, 0.5, a.points)? {
                table.push(vec![x.to_string(), f.to_string()]);
            }
            let mut out = Outcome::new(
                json!({
                    "verdict": "certified",
                    "set": s.set, "objective": s.objective,
                    "certified_max": s.certified.best_value, "certified_upper": s.certified.upper_bound,
                    "ratio_bourgain": s.certified.ratio_bourgain,
                }),
                json!({ "initial_objective": s.initial_objective, "iterations": s.iterations }),
                false,
            );
            out.table = Some(table);
            out.seed = Some(a.seed);
            Ok(out)
        }
        Command::EvalFt(a) => {
            let m = a.measure.load()?;
            let xs = a.xi.iter().map(|x| parse_freq(x)).collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(&["xi", "re", "im", "abs", "radius"]);
            let mut values = Vec::with_capacity(xs.len());
            for (s, x) in a.xi.iter().zip(&xs) {
                let v = match m.with(|f| f.fourier(x, cfg)) {
                    Ok(v) => v,
                    Err(e) => {
                        let e = anyhow::Error::from(e);
                        return match negative_error(&e) {
                            Some(v) => Ok(Outcome::new(v, json!({ "xi": s }), true)),
                            None => Err(e),
                        };
                    }
                };
                table.push(vec![s.clone(), v.value.re.to_string(), v.value.im.to_string(), v.value.norm().to_string(), v.radius.to_string()]);
                let mut j = complex_json(&v);
                j["xi"] = json!(s);
                values.push(j);
            }
            let mut result = json!({ "verdict": "ok" });
            if values.len() == 1 {
                for key in ["re", "im", "abs", "radius"] {
                    result[key] = values[0][key].clone();
                }
            }
            let mut out = Outcome::new(result, json!({ "values": values }), false);
            out.table = Some(table);
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

fn config(tol: f64, depth_cap: usize) -> Result<EvalConfig> {
    if !(tol > 0.0) {
        bail!("--tol must be positive");
    }
    Ok(EvalConfig { tol, depth_cap })
}

fn emit(report: &Report, table: Option<&Table>, out: Option<&Path>, csv: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(p) => {
            std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
            if csv {
                if let Some(t) = table {
                    t.write(&csv_path(p))?;
                }
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn run_command(cmd: &Command, cfg: &EvalConfig) -> Result<(Report, Option<Table>, bool)> {
    let start = Instant::now();
    let resolved = cmd.resolved()?;
    let outcome = execute(&resolved, cfg)?;
    let manifest = Manifest {
        command: cmd.name().into(),
        parameters: serde_json::to_value(&resolved)?,
        seed: outcome.seed,
        tolerances: json!({ "tol": cfg.tol }),
        depth_cap: cfg.depth_cap,
        wall_time_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    Ok((Report { manifest, result: outcome.result, evidence: outcome.evidence }, outcome.table, outcome.negative))
}

fn verify(path: &Path) -> Result<(Report, bool)> {
    let start = Instant::now();
    let old = Report::read(path)?;
    let cmd: Command = serde_json::from_value(old.manifest.parameters.clone()).context("manifest parameters do not describe a command")?;
    let tol = old.manifest.tolerances.get("tol").and_then(Value::as_f64).unwrap_or(1e-10);
    let cfg = config(tol, old.manifest.depth_cap)?;
    let outcome = execute(&cmd, &cfg)?;
    let same_verdict = old.verdict().is_some() && outcome.result.get("verdict").and_then(Value::as_str) == old.verdict();
    let identical = outcome.result == old.result;
    let report = Report {
        manifest: Manifest {
            command: "verify".into(),
            parameters: json!({ "report": path.display().to_string() }),
            seed: old.manifest.seed,
            tolerances: old.manifest.tolerances.clone(),
            depth_cap: old.manifest.depth_cap,
            wall_time_s: start.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        result: json!({
            "verdict": if same_verdict { "reproduced" } else { "mismatch" },
            "command": old.manifest.command,
            "original_verdict": old.verdict(),
            "rerun_verdict": outcome.result.get("verdict"),
            "result_identical": identical,
        }),
        evidence: json!({ "rerun_result": outcome.result }),
    };
    Ok((report, same_verdict))
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // a pool already built by an earlier call is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match drive(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn drive(cli: &Cli) -> Result<i32> {
    init_threads(cli.threads);
    if cli.csv && cli.out.is_none() {
        bail!("--csv needs --out; the CSV is written next to it");
    }
    if let Some(path) = &cli.verify {
        if cli.command.is_some() {
            bail!("--verify takes no subcommand");
        }
        let (report, ok) = verify(path)?;
        emit(&report, None, cli.out.as_deref(), false)?;
        return Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE });
    }
    let cmd = cli.command.as_ref().ok_or_else(|| anyhow!("missing subcommand (see --help)"))?;
    let cfg = config(cli.tol, cli.depth_cap)?;
    let (report, table, negative) = run_command(cmd, &cfg)?;
    emit(&report, table.as_ref(), cli.out.as_deref(), cli.csv)?;
    Ok(if negative { EXIT_NEGATIVE } else { EXIT_OK })
}
