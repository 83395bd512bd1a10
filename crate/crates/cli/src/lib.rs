//! Command-line front end: argument parsing, subcommand execution and report output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hadamard_perturb::defect::{numeric_defect, summary, DEFAULT_RANK_TOL};
use hadamard_perturb::expansion::{
    apply_pattern, breakdown_scan_with_progress, trial_rng, truncated_unitarity_residual, AssignmentSampler,
    ConstraintPattern, OrderRecord, PatternLabel, Precision, ScanConfig, ScanReport, ScanStatus, SeriesState,
    BREAKDOWN_THRESHOLD, RNG_NAME,
};
use hadamard_perturb::families::{
    dita, dita_fourier_point, dita_sequence, dita_variant_factors, haagerup_family, permute_columns,
    prime_power_family, AffineFamily, SelfCognate,
};
use hadamard_perturb::genpert::{format_series, origin_series, shifted_series, toy_series, ToyBranch};
use hadamard_perturb::hcore::{h_of_x, is_hadamard, max_abs_diff, fourier, MatrixFile};
use hadamard_perturb::n12::{
    classify, evaluate_system, lift, reduce, relative_system_residual, sample_branch, selftest, N12Branch, N12Sampler,
    N12Vars, N,
};
use hadamard_perturb::Error;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Resolved run configuration; embedded verbatim in every report.
#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "hadperturb", version, about = "Perturbative analysis of complex Hadamard matrices near the Fourier matrix")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report here (a `.meta.json` sidecar holds timing data).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format on standard output when no --out is given.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Suppress progress lines on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Linear defect, affine and conjectured dimensions.
    Defect(DefectArgs),
    /// First breakdown order of the consistency conditions over random trials.
    Scan(ScanArgs),
    /// Expand one random first-order solution and report each order.
    Expand(ExpandArgs),
    /// Evaluate and classify the N = 12 fourth-order system.
    N12(N12Args),
    /// Construct affine families and check their members.
    Families(FamiliesArgs),
    /// Series solutions of the two-variable toy model.
    Toy(ToyArgs),
}

/// Inclusive range `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for NRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or("expected a..b")?;
        let start = a.trim().parse().map_err(|_| format!("bad range start '{a}'"))?;
        let end = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range end '{b}'"))?;
        if start > end {
            return Err(format!("empty range {s}"));
        }
        Ok(NRange { start, end })
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

fn dims(n: Option<usize>, range: Option<NRange>) -> Result<Vec<usize>, Error> {
    match (n, range) {
        (Some(n), None) => Ok(vec![n]),
        (None, Some(r)) => Ok((r.start..=r.end).collect()),
        _ => Err(Error::Domain("give exactly one of --n and --range".into())),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("tolerance must be positive".into())
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DefectArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub range: Option<NRange>,
    /// Also write the rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also compute the numeric defect of the Fourier matrix.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL, value_parser = positive)]
    pub rank_tol: f64,
}

/// `none`, `typeI`, `typeII` or `custom:<file>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternArg {
    Label(PatternLabel),
    Custom(PathBuf),
}

impl FromStr for PatternArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("custom:") {
            Some(path) if !path.is_empty() => Ok(PatternArg::Custom(PathBuf::from(path))),
            Some(_) => Err("custom:<file> needs a file".into()),
            None => match s.parse::<PatternLabel>()? {
                PatternLabel::Custom => Err("use custom:<file>".into()),
                label => Ok(PatternArg::Label(label)),
            },
        }
    }
}

impl fmt::Display for PatternArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternArg::Label(l) => write!(f, "{l}"),
            PatternArg::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

impl Serialize for PatternArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PatternArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl PatternArg {
    fn resolve(&self, n: usize) -> Result<ConstraintPattern, Error> {
        match self {
            PatternArg::Label(l) => apply_pattern(n, l.clone()),
            PatternArg::Custom(p) => ConstraintPattern::from_custom_json(n, &std::fs::read_to_string(p)?),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub range: Option<NRange>,
    #[arg(long, default_value_t = 8)]
    pub max_order: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = BREAKDOWN_THRESHOLD, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value = "none")]
    pub pattern: PatternArg,
    /// Sample an N = 12 solution branch instead of a pattern.
    #[arg(long, conflicts_with = "pattern")]
    pub branch: Option<N12Branch>,
    #[arg(long, default_value = "double")]
    pub precision: Precision,
    /// Report the raw breakdown without solving for higher homogeneous parts.
    #[arg(long)]
    pub no_correction: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExpandArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub pattern: PatternArg,
    /// Impose unitarity order by order.
    #[arg(long)]
    pub unitary: bool,
    /// Scale of the first-order data.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub eps: f64,
    #[arg(long, default_value_t = BREAKDOWN_THRESHOLD, value_parser = positive)]
    pub tol: f64,
    /// Write H = (1 - ΣX) F in the matrix JSON format.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct N12Args {
    /// JSON file with the reduced variables (complex values as [re, im]).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Cross-check the table against the expansion engine.
    #[arg(long)]
    pub selftest: bool,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Draw a random point on a branch.
    #[arg(long)]
    pub sample: Option<N12Branch>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Haagerup,
    PrimePower,
    SelfCognate,
    DitaVariant,
    DitaFourier,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FamiliesArgs {
    #[arg(long, value_enum)]
    pub kind: FamilyKind,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub p1: Option<usize>,
    #[arg(long)]
    pub p2: Option<usize>,
    /// Which Diţă ordering: 0 for p2, p2, p1 and 1 for p1, p2, p2.
    #[arg(long, default_value_t = 0)]
    pub variant: usize,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also compute the numeric defect of each sampled member.
    #[arg(long)]
    pub defect: bool,
    /// Directory for member matrices in the matrix JSON format.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ToyBranchArg {
    #[value(name = "origin")]
    Origin,
    #[value(name = "shifted_I")]
    ShiftedI,
    #[value(name = "shifted_II")]
    ShiftedII,
    #[value(name = "all")]
    All,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ToyArgs {
    #[arg(long, value_enum, default_value_t = ToyBranchArg::All)]
    pub branch: ToyBranchArg,
    /// Also print the alternate parametrizations.
    #[arg(long)]
    pub alternates: bool,
}

/// Outcome of a subcommand before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: Value,
    pub table: String,
    pub exit: i32,
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::Domain(format!("--{flag} is required")))
}

/// Left-aligned first column, right-aligned others.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (c, cell) in r.iter().enumerate().take(cols) {
            width[c] = width[c].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (c, cell) in cells.iter().enumerate() {
            let pad = width[c] - cell.chars().count();
            if c == 0 {
                out.push_str(cell);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str("  ");
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}

fn run_defect(a: &DefectArgs) -> Result<Outcome, Error> {
    let ns = dims(a.n, a.range)?;
    if ns.iter().any(|&n| n < 2) {
        return Err(Error::Domain("N must be at least 2".into()));
    }
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for &n in &ns {
        let s = summary(n);
        let numeric = if a.numeric { Some(numeric_defect(&fourier(n), a.rank_tol)?) } else { None };
        rows.push(vec![
            n.to_string(),
            s.total.to_string(),
            s.d1.to_string(),
            s.d_a.to_string(),
            opt(s.d_conj),
            opt(numeric.map(|d| d.defect)),
        ]);
        out.push(json!({ "summary": s, "numeric": numeric }));
    }
    let headers = ["N", "D1", "d1", "dA", "d_conj", "numeric"];
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Domain(e.to_string()))?;
        w.write_record(headers).map_err(|e| Error::Domain(e.to_string()))?;
        for r in &rows {
            w.write_record(r).map_err(|e| Error::Domain(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(Outcome { result: json!({ "rows": out }), table: table(&headers, &rows), exit: EXIT_OK })
}

fn scan_one(a: &ScanArgs, n: usize, quiet: bool) -> Result<ScanReport, Error> {
    let sampler: Box<dyn AssignmentSampler> = match a.branch {
        Some(branch) if n == N => Box::new(N12Sampler { branch }),
        Some(_) => return Err(Error::Domain("--branch needs --n 12".into())),
        None => Box::new(a.pattern.resolve(n)?),
    };
    let cfg = ScanConfig {
        n,
        max_order: a.max_order,
        trials: a.trials,
        seed: a.seed,
        tol: a.tol,
        precision: a.precision,
        correction: !a.no_correction,
    };
    let progress = |t: usize, r: &OrderRecord| {
        eprintln!("N={n} trial={t} order={} relative={:.3e}", r.order, r.relative);
    };
    breakdown_scan_with_progress(&cfg, sampler.as_ref(), if quiet { None } else { Some(&progress) })
}

fn run_scan(a: &ScanArgs, quiet: bool) -> Result<Outcome, Error> {
    let ns = dims(a.n, a.range)?;
    let reports: Vec<ScanReport> = ns.iter().map(|&n| scan_one(a, n, quiet)).collect::<Result<_, _>>()?;
    let rows = reports
        .iter()
        .map(|r| {
            let worst = r.per_order_max_residual.iter().map(|o| o.max_relative).fold(0.0, f64::max);
            vec![
                r.n.to_string(),
                r.pattern.clone(),
                format!("{:?}", r.status).to_lowercase(),
                opt(r.first_break),
                format!("{worst:.2e}"),
            ]
        })
        .collect::<Vec<_>>();
    let exit = if reports.iter().any(|r| r.status == ScanStatus::Inconclusive) { EXIT_INCONCLUSIVE } else { EXIT_OK };
    let result = if reports.len() == 1 { serde_json::to_value(&reports[0])? } else { json!({ "scans": reports }) };
    Ok(Outcome {
        result,
        table: table(&["N", "pattern", "status", "first_break", "max_relative"], &rows),
        exit,
    })
}

fn run_expand(a: &ExpandArgs) -> Result<Outcome, Error> {
    let pattern = a.pattern.resolve(a.n)?;
    let free = pattern.sample(&mut trial_rng(a.seed, 0))?;
    let scaled = free.iter().map(|(k, v)| (*k, v * a.eps)).collect();
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    let mut first_break = None;
    let mut st: SeriesState = if a.unitary {
        SeriesState::new_unitary(a.n, &scaled, ())?
    } else {
        SeriesState::new(a.n, &scaled, ())?.with_threshold(a.tol)
    };
    for s in 2..=a.order {
        let rep = st.consistency_residuals(s)?;
        let mut relative = rep.relative;
        let mut corrected = false;
        if rep.broken && !a.unitary {
            if let Some(info) = st.correct()? {
                relative = info.residual_after;
                corrected = info.success;
            }
        }
        rows.push(vec![s.to_string(), format!("{:.3e}", rep.relative), format!("{relative:.3e}"), corrected.to_string()]);
        orders.push(json!({ "order": s, "raw_relative": rep.relative, "relative": relative, "corrected": corrected }));
        if relative > a.tol {
            first_break = Some(s);
            if !a.unitary {
                break;
            }
        }
        if a.unitary {
            st.force_advance()?;
        } else {
            st.advance()?;
        }
    }
    let reached = st.order();
    let x = st.x_sum(reached);
    let h = h_of_x(&x);
    let unitarity = if a.unitary { Some(truncated_unitarity_residual(a.n, &free, a.eps, reached)?) } else { None };
    if let Some(path) = &a.matrix_out {
        MatrixFile::from_matrix(&h).write(path)?;
    }
    let result = json!({
        "n": a.n,
        "pattern": pattern.label.to_string(),
        "rng": RNG_NAME,
        "first_break": first_break,
        "reached_order": reached,
        "orders": orders,
        "unitarity_residual": unitarity,
        "hadamard": is_hadamard(&h, 1e-8),
    });
    Ok(Outcome { result, table: table(&["order", "raw", "relative", "corrected"], &rows), exit: EXIT_OK })
}

fn n12_point(v: &N12Vars, tol: f64) -> Value {
    let residuals: Vec<[f64; 2]> = evaluate_system(v).iter().map(|z| [z.re, z.im]).collect();
    json!({
        "vars": v,
        "residuals": residuals,
        "relative_residual": relative_system_residual(v),
        "type": classify(v, tol).to_string(),
    })
}

fn run_n12(a: &N12Args) -> Result<Outcome, Error> {
    let chosen = [a.input.is_some(), a.selftest, a.sample.is_some()].iter().filter(|b| **b).count();
    if chosen != 1 {
        return Err(Error::Domain("give exactly one of --input, --selftest and --sample".into()));
    }
    if a.selftest {
        let seed = require(a.seed, "seed")?;
        let rep = selftest(a.points, a.tol, &mut trial_rng(seed, 0))?;
        let rows = vec![vec![
            rep.points.to_string(),
            rep.disagreements.to_string(),
            rep.passes.to_string(),
        ]];
        let exit = if rep.passes { EXIT_OK } else { EXIT_DOMAIN };
        return Ok(Outcome {
            result: json!({ "seed": seed, "rng": RNG_NAME, "selftest": rep }),
            table: table(&["points", "disagreements", "passes"], &rows),
            exit,
        });
    }
    let v = if let Some(path) = &a.input {
        let v: N12Vars = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if v.dependent_violation() > 1e-12 * (1.0 + v.max_abs()) {
            return Err(Error::Domain("x3a + x3b + x3c and x9a + x9b + x9c must vanish".into()));
        }
        v
    } else {
        let seed = require(a.seed, "seed")?;
        let branch = a.sample.expect("checked above");
        let mut rng = trial_rng(seed, 0);
        let v = sample_branch(branch, &mut rng)?;
        let base = hadamard_perturb::expansion::random_assignment(N, &mut rng);
        reduce(&lift(&base, &v)?)
    };
    let point = n12_point(&v, a.tol);
    let mut rows: Vec<Vec<String>> = evaluate_system(&v)
        .iter()
        .enumerate()
        .map(|(k, z)| vec![format!("eq{}", k + 1), format!("{:.3e}", z.re), format!("{:.3e}", z.im)])
        .collect();
    rows.push(vec!["type".into(), point["type"].as_str().unwrap_or_default().into(), String::new()]);
    Ok(Outcome { result: point, table: table(&["equation", "re", "im"], &rows), exit: EXIT_OK })
}

fn export(dir: &Path, name: &str, h: &hadamard_perturb::ComplexMatrix) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    MatrixFile::from_matrix(h).write(&dir.join(format!("{name}.json")))
}

fn run_families(a: &FamiliesArgs) -> Result<Outcome, Error> {
    let mut rows = Vec::new();
    let mut members = Vec::new();
    let mut extra = json!({});
    if a.kind == FamilyKind::DitaFourier {
        let (n1, n2) = (require(a.n1, "n1")?, require(a.n2, "n2")?);
        let (spec, perm) = dita_fourier_point(n1, n2)?;
        let h = permute_columns(&dita(&spec)?, &perm)?;
        let diff = max_abs_diff(&h, &fourier(n1 * n2));
        if let Some(dir) = &a.export {
            export(dir, "fourier_point", &h)?;
        }
        rows.push(vec![format!("{n1}x{n2}"), format!("{diff:.2e}"), (diff <= 1e-12).to_string()]);
        return Ok(Outcome {
            result: json!({ "n1": n1, "n2": n2, "permutation": perm, "max_diff_to_fourier": diff }),
            table: table(&["factors", "max_diff", "matches"], &rows),
            exit: EXIT_OK,
        });
    }
    let seed = require(a.seed, "seed")?;
    let mut rng = trial_rng(seed, 0);
    let (family, label): (AffineFamily, String) = match a.kind {
        FamilyKind::Haagerup => (haagerup_family(), "haagerup".into()),
        FamilyKind::PrimePower => {
            let (p, k) = (require(a.p, "p")?, require(a.k, "k")?);
            (prime_power_family(p, k)?, format!("prime-power {p}^{k}"))
        }
        FamilyKind::SelfCognate => {
            let sc = SelfCognate::new(require(a.p1, "p1")?, require(a.p2, "p2")?)?;
            let mut worst: f64 = 0.0;
            for _ in 0..a.samples {
                let x = sc.random_params(&mut rng, false);
                let lhs = sc.member(&x)?.transpose();
                worst = worst.max(max_abs_diff(&lhs, &sc.member(&sc.transpose_partner(&x)?)?));
            }
            extra = json!({ "transpose_closure_max_diff": worst });
            (sc.affine()?, format!("self-cognate {}·{}²", sc.p1, sc.p2))
        }
        FamilyKind::DitaVariant => {
            let (p1, p2) = (require(a.p1, "p1")?, require(a.p2, "p2")?);
            let seq = *dita_variant_factors(p1, p2)
                .get(a.variant)
                .ok_or_else(|| Error::Domain("--variant must be 0 or 1".into()))?;
            (dita_sequence(&seq)?, format!("dita {seq:?}"))
        }
        FamilyKind::DitaFourier => unreachable!(),
    };
    for idx in 0..a.samples {
        let params = family.random_params(&mut rng);
        let h = family.member(&params)?;
        let rep = is_hadamard(&h, a.tol);
        let defect = if a.defect { Some(numeric_defect(&h, DEFAULT_RANK_TOL)?.defect) } else { None };
        if let Some(dir) = &a.export {
            export(dir, &format!("member_{idx:03}"), &h)?;
        }
        rows.push(vec![
            idx.to_string(),
            format!("{:.2e}", rep.unitarity_residual),
            format!("{:.2e}", rep.modulus_residual),
            rep.passes.to_string(),
            opt(defect),
        ]);
        members.push(json!({ "params": params, "hadamard": rep, "numeric_defect": defect }));
    }
    let all = members.iter().all(|m| m["hadamard"]["passes"].as_bool() == Some(true));
    let result = json!({
        "family": label,
        "n": family.size(),
        "dim": family.dim,
        "seed": seed,
        "rng": RNG_NAME,
        "members": members,
        "all_hadamard": all,
        "checks": extra,
    });
    let exit = if all { EXIT_OK } else { EXIT_DOMAIN };
    Ok(Outcome { result, table: table(&["member", "unitarity", "modulus", "hadamard", "defect"], &rows), exit })
}

fn series_json(coeffs: &[BigRational]) -> Value {
    let exact: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
    let decimal: Vec<f64> = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
    json!({ "exact": exact, "decimal": decimal })
}

fn run_toy(a: &ToyArgs) -> Result<Outcome, Error> {
    let branches = match a.branch {
        ToyBranchArg::Origin => vec![ToyBranch::Origin],
        ToyBranchArg::ShiftedI => vec![ToyBranch::ShiftedI],
        ToyBranchArg::ShiftedII => vec![ToyBranch::ShiftedII],
        ToyBranchArg::All => vec![ToyBranch::Origin, ToyBranch::ShiftedI, ToyBranch::ShiftedII],
    };
    let mut rows = Vec::new();
    let mut out = Vec::new();
    let mut push = |name: &str, s: &hadamard_perturb::genpert::ToySeries, var: &str, shifted: bool| {
        let body = format_series(&s.x, var);
        let x = match (shifted, body.strip_prefix('-')) {
            (false, _) => format!("X = {body}"),
            (true, Some(rest)) => format!("X = 1 - {rest}"),
            (true, None) => format!("X = 1 + {body}"),
        };
        let y = format!("Y = {}", format_series(&s.y, var));
        rows.push(vec![name.to_string(), x.clone(), y.clone()]);
        out.push(json!({
            "branch": name,
            "variable": var,
            "x_offset": if shifted { 1 } else { 0 },
            "x": series_json(&s.x),
            "y": series_json(&s.y),
            "x_text": x,
            "y_text": y,
        }));
    };
    for b in branches {
        let s = toy_series(b)?;
        let (name, var) = match b {
            ToyBranch::Origin => ("origin", "t"),
            ToyBranch::ShiftedI => ("shifted_I", "u"),
            ToyBranch::ShiftedII => ("shifted_II", "u"),
        };
        push(name, &s, var, b != ToyBranch::Origin);
    }
    if a.alternates {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let s = shifted_series(&[r(-1, 1), r(-1, 1), r(-7, 24)], -1)?;
        push("shifted_II_alt", &s, "t", true);
        let s = origin_series(&[r(1, 1), r(-1, 2), r(-2, 3), r(0, 1)])?;
        push("origin_alt", &s, "t", false);
    }
    Ok(Outcome { result: json!({ "series": out }), table: table(&["branch", "X", "Y"], &rows), exit: EXIT_OK })
}

/// Executes the configured subcommand.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, Error> {
    match &cfg.command {
        Command::Defect(a) => run_defect(a),
        Command::Scan(a) => run_scan(a, cfg.quiet),
        Command::Expand(a) => run_expand(a),
        Command::N12(a) => run_n12(a),
        Command::Families(a) => run_families(a),
        Command::Toy(a) => run_toy(a),
    }
}

/// Report written to JSON: the resolved configuration and the result.
pub fn report_json(cfg: &RunConfig, outcome: &Outcome) -> Result<String, Error> {
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "result": outcome.result,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

/// Runs the configuration and writes its outputs; returns the exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let outcome = match execute(cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DOMAIN;
        }
    };
    let written = (|| -> Result<(), Error> {
        let text = report_json(cfg, &outcome)?;
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        match &cfg.out {
            Some(path) => {
                std::fs::write(path, &text)?;
                let meta = json!({
                    "started_unix": started,
                    "elapsed_seconds": clock.elapsed().as_secs_f64(),
                    "argv": std::env::args().collect::<Vec<_>>(),
                });
                std::fs::write(meta_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
                lock.write_all(outcome.table.as_bytes())?;
            }
            None => match cfg.format {
                Format::Json => lock.write_all(text.as_bytes())?,
                Format::Text => lock.write_all(outcome.table.as_bytes())?,
            },
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_DOMAIN;
    }
    outcome.exit
}

/// Parses `args` (including the program name); usage errors map to exit 64.
pub fn parse<I, T>(args: I) -> Result<RunConfig, (String, i32)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    RunConfig::try_parse_from(args).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
            _ => EXIT_USAGE,
        };
        (e.render().to_string(), code)
    })
}
