use std::fmt::Write as _;
use std::path::PathBuf;

use berkdyn::berkovich::{apply_map, BerkMap, TypeIIPoint, TypeIPoint};
use berkdyn::error::{Error, Result};
use berkdyn::family::{parse_family, FamilySpec};
use berkdyn::hyperbolic::{
    equivalence_residual, lipschitz_probe, numeric_multiplier_spectrum, numeric_preimage_radius, probe_points, realize,
    ComplexMap, DEFAULT_SAMPLES,
};
use berkdyn::pl::{pl_cantor_intervals, interval_length, PLIntervalModel};
use berkdyn::puiseux::{qi, Q};
use berkdyn::tree::{
    analyze_staged, build_skeleton, extract_interval_model, fixed_points_with_degree, max_period, model_basepoint, periodic_ends,
    AnalysisOptions, AnalysisReport, EndClass, PeriodicEndRecord, Verdict,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::points::{parse_complex, parse_point, parse_rational, parse_t_values};
use crate::render::{render, transect_profile, Dynamics, RenderConfig};
use crate::report::{exit_code, kind_exit_code, CommandReport, FamilyInfo, StageError};

#[derive(Parser, Debug)]
#[command(name = "berkdyn", version, about = "Limiting dynamics of degenerating rational-map families")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each command picks its own defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Family expression in z and t, e.g. "z^2 + t/z^3".
    #[arg(long, allow_hyphen_values = true)]
    pub family: Option<String>,
    /// Parameter value, list "1e-4,1e-6" or decade ladder "1e-3..1e-8".
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Largest period examined.
    #[arg(long)]
    pub qmax: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Expansion order in t (rational).
    #[arg(long, allow_hyphen_values = true)]
    pub order: Option<String>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    pub json: bool,
    /// Output path: the image for `render`, the JSON report otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Skeleton, fixed points, periodic ends, interval model, verdict and normalization radius.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Quadrature size for the numeric cross-checks run at each --t.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Periodic ends with multipliers and translation lengths.
    Ends {
        #[command(flatten)]
        common: Common,
    },
    /// Numeric multiplier spectrum along a ladder of parameters.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Equivalence residuals and Lipschitz probes along a ladder.
    Equiv {
        #[command(flatten)]
        common: Common,
        /// Type II point, `gauss` or `zeta(center, radius)`; repeatable.
        #[arg(long = "point", allow_hyphen_values = true)]
        points: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Probe points per parameter value (0 disables the probe).
        #[arg(long, default_value_t = 8)]
        probe: usize,
    },
    /// Escape-time image of the Julia set at one parameter value.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 800)]
        resolution: usize,
        /// Window center as a complex number.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value_t = 1.5)]
        half_width: f64,
        #[arg(long, default_value_t = 256)]
        max_iter: u32,
        #[arg(long)]
        escape_radius: Option<f64>,
        #[arg(long, default_value_t = 16)]
        period_bound: usize,
        /// Direction of the transect ray, in radians.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        angle: f64,
    },
    /// Piecewise-linear interval model: from --degrees, or extracted from --family.
    PlModel {
        #[command(flatten)]
        common: Common,
        /// Branch degrees, e.g. "5,4,3".
        #[arg(long)]
        degrees: Option<String>,
        /// Model interval "a,b" with rational endpoints.
        #[arg(long, default_value = "0,1")]
        interval: String,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Analyze { common, .. }
            | Command::Ends { common }
            | Command::Spectrum { common }
            | Command::Equiv { common, .. }
            | Command::Render { common, .. }
            | Command::PlModel { common, .. } => common,
        }
    }
}

pub struct Outcome {
    pub report: CommandReport,
    pub summary: String,
    pub exit: i32,
}

impl Outcome {
    fn finish(report: CommandReport, summary: String) -> Self {
        let exit = report.errors.first().map_or(0, |e| kind_exit_code(e.kind));
        Self { report, summary, exit }
    }

    fn failed(mut report: CommandReport, stage: &str, e: &Error) -> Self {
        report.errors.push(StageError::new(stage, e));
        let summary = String::new();
        Self { report, summary, exit: exit_code(e) }
    }
}

fn load_family(src: Option<&str>) -> Result<(FamilySpec, BerkMap, FamilyInfo)> {
    let src = src.ok_or_else(|| Error::Parse { position: 0, message: "--family is required".into() })?;
    let spec = parse_family(src)?;
    let f = spec.to_map()?;
    let info = FamilyInfo { source: src.to_string(), canonical: spec.to_string(), degree: f.degree() };
    Ok((spec, f, info))
}

fn q_str(x: Q) -> String {
    x.to_string()
}

/// The leading term of a cycle point, e.g. `1i·t^(-1/2)`.
fn point_str(p: &TypeIPoint) -> String {
    match p {
        TypeIPoint::Infinity => "inf".into(),
        TypeIPoint::Finite(s) => match s.leading() {
            None => "0".into(),
            Some((e, c)) => {
                let c = if c.im.abs() < 1e-12 {
                    format!("{:.4}", c.re)
                } else if c.re.abs() < 1e-12 {
                    format!("{:.4}i", c.im)
                } else {
                    format!("({:.4}{:+.4}i)", c.re, c.im)
                };
                if *e.numer() == 0 {
                    c
                } else {
                    format!("{c}·t^({e})")
                }
            }
        },
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Analyze { common, samples } => analyze_command(common, *samples),
        Command::Ends { common } => ends_command(common),
        Command::Spectrum { common } => spectrum_command(common),
        Command::Equiv { common, points, samples, probe } => equiv_command(common, points, *samples, *probe),
        Command::Render { common, resolution, center, half_width, max_iter, escape_radius, period_bound, angle } => {
            render_command(common, *resolution, center, *half_width, *max_iter, *escape_radius, *period_bound, *angle)
        }
        Command::PlModel { common, degrees, interval } => pl_model_command(common, degrees.as_deref(), interval),
    }
}

macro_rules! stage {
    ($report:expr, $stage:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return Outcome::failed($report, $stage, &e),
        }
    };
}

fn analysis_options(c: &Common, default_q: usize) -> Result<AnalysisOptions> {
    let mut o = AnalysisOptions::default();
    o.q_max = c.qmax.unwrap_or(default_q);
    if let Some(d) = c.depth {
        o.depth = d;
    }
    if let Some(s) = &c.order {
        o.order = parse_rational(s)?;
    }
    Ok(o)
}

pub fn analyze_command(c: &Common, samples: usize) -> Outcome {
    let params = json!({ "qmax": c.qmax, "depth": c.depth, "order": c.order, "t": c.t, "samples": samples });
    let mut report = CommandReport::new("analyze", None, params, c.seed);
    let (_, f, info) = stage!(report, "family", load_family(c.family.as_deref()));
    report.family = Some(info);
    let opts = stage!(report, "options", analysis_options(c, 3));
    let ts = match &c.t {
        Some(s) => stage!(report, "options", parse_t_values(s)),
        None => Vec::new(),
    };
    let r = match analyze_staged(&f, &opts) {
        Ok(r) => r,
        Err((stage, e)) => return Outcome::failed(report, stage, &e),
    };
    let mut cross = Vec::new();
    for &t0 in &ts {
        let pre = numeric_preimage_radius(&f, t0, samples);
        let res = equivalence_residual(&f, &TypeIIPoint::gauss(), t0, samples);
        if let Err(e) = &pre {
            report.errors.push(StageError::new("cross_check", e));
        }
        if let Err(e) = &res {
            report.errors.push(StageError::new("cross_check", e));
        }
        cross.push(json!({
            "t": [t0.re, t0.im],
            "numeric_preimage_radius": pre.ok(),
            "gauss_equivalence_residual": res.ok(),
        }));
    }
    let summary = analysis_summary(&r, &cross);
    let mut result = serde_json::to_value(&r).expect("analysis report serializes");
    result["cross_checks"] = Value::Array(cross);
    report.result = result;
    let mut out = Outcome::finish(report, summary);
    if out.exit == 0 && r.verdict.is_none() {
        out.exit = 4;
    }
    out
}

fn analysis_summary(r: &AnalysisReport, cross: &[Value]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "degree {}", r.degree);
    let _ = writeln!(s, "fixed Type II points:");
    for p in &r.fixed_points {
        let _ = writeln!(s, "  {}  local degree {}", p.point, p.degree);
    }
    for seg in &r.fixed_segments {
        let to = seg.to.map_or("the end".to_string(), q_str);
        let _ = writeln!(s, "  fixed segment on ray {} from s = {} to {to}", seg.ray, seg.from);
    }
    let _ = writeln!(s, "periodic ends (q_max {}):", r.q_max_used);
    s.push_str(&ends_table(&r.periodic_ends));
    match &r.interval_model {
        Some(m) => {
            let _ = writeln!(s, "interval model on [{}, {}]:", m.a, m.b);
            for p in &m.pieces {
                let _ = writeln!(s, "  [{}, {}] slope {:+}", p.start, p.end, p.slope);
            }
            let _ = writeln!(s, "  sum 1/d_i = {}", m.reciprocal_sum());
        }
        None => {
            let _ = writeln!(s, "no interval model: {}", r.interval_model_absence.as_deref().unwrap_or("-"));
        }
    }
    match (&r.verdict, &r.verdict_error) {
        (Some(v), _) => {
            let _ = writeln!(s, "verdict: {}", verdict_str(v));
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "verdict unavailable: {e}");
        }
        _ => {}
    }
    match (&r.normalization_radius, &r.normalization_error) {
        (Some(n), _) => {
            let _ = writeln!(s, "normalization radius {} at {}", n.value, n.basepoint);
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "normalization radius unavailable: {e}");
        }
        _ => {}
    }
    let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let _ = writeln!(s, "checks: {} passed, {} failed {:?}", r.checks.len() - failed.len(), failed.len(), failed);
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    for c in cross {
        let _ = writeln!(
            s,
            "numeric at t = {}: preimage radius / -log|t| = {}, Gauss residual = {}",
            c["t"][0],
            c["numeric_preimage_radius"]["normalized"],
            c["gauss_equivalence_residual"]
        );
    }
    s
}

fn verdict_str(v: &Verdict) -> String {
    match v {
        Verdict::Nested { reciprocal_sum } => format!("NESTED (sum 1/d_i = {reciprocal_sum})"),
        Verdict::LattesLikeBoundary => "LATTES-LIKE-BOUNDARY".into(),
        Verdict::UnboundedSpectrum { witness_length, witness_period } => {
            format!("UNBOUNDED-SPECTRUM (period {witness_period} end of length {witness_length})")
        }
    }
}

fn ends_table(ends: &[PeriodicEndRecord]) -> String {
    let mut s = String::new();
    for e in ends {
        let pts: Vec<String> = e.cycle.iter().map(point_str).collect();
        let class = match e.classification {
            EndClass::Repelling => "repelling",
            EndClass::Indifferent => "indifferent",
            EndClass::Attracting => "attracting",
        };
        let _ = writeln!(
            s,
            "  period {}  length {}  {}{}  [{}]",
            e.period,
            e.translation_length.map_or("superattracting".into(), q_str),
            class,
            if e.unresolved { " (unresolved)" } else { "" },
            pts.join(", ")
        );
    }
    s
}

pub fn ends_command(c: &Common) -> Outcome {
    let params = json!({ "qmax": c.qmax, "order": c.order });
    let mut report = CommandReport::new("ends", None, params, c.seed);
    let (_, f, info) = stage!(report, "family", load_family(c.family.as_deref()));
    report.family = Some(info);
    let order = match &c.order {
        Some(s) => stage!(report, "options", parse_rational(s)),
        None => qi(1),
    };
    let want = c.qmax.unwrap_or(3);
    let q = want.min(max_period(f.degree()));
    let ends = stage!(report, "periodic_ends", periodic_ends(&f, q, order));
    let mut summary = format!("periodic ends of period <= {q}:\n");
    if q < want {
        summary.push_str(&format!("note: period bound lowered from {want} to {q} by the iterate degree cap\n"));
    }
    summary.push_str(&ends_table(&ends));
    report.result = json!({ "q_max_used": q, "periodic_ends": ends });
    Outcome::finish(report, summary)
}

pub fn spectrum_command(c: &Common) -> Outcome {
    let t_text = c.t.clone().unwrap_or_else(|| "1e-3..1e-8".into());
    let params = json!({ "qmax": c.qmax, "order": c.order, "t": t_text });
    let mut report = CommandReport::new("spectrum", None, params, c.seed);
    let (_, f, info) = stage!(report, "family", load_family(c.family.as_deref()));
    report.family = Some(info);
    let ts = stage!(report, "options", parse_t_values(&t_text));
    let order = match &c.order {
        Some(s) => stage!(report, "options", parse_rational(s)),
        None => qi(1),
    };
    let q_max = c.qmax.unwrap_or(1);
    let ends = stage!(report, "periodic_ends", periodic_ends(&f, q_max.min(max_period(f.degree())), order));
    let mut spectra = Vec::new();
    let mut summary = String::new();
    for q in 1..=q_max {
        let r = stage!(report, "spectrum", numeric_multiplier_spectrum(&f, q, &ts, &ends));
        let _ = writeln!(summary, "period {q}: {} cycles sampled, {} unmatched", r.samples.len(), r.unmatched);
        for fit in &r.fits {
            let _ = writeln!(
                summary,
                "  cycle {} [{}]: slope {:.4} over {} values (predicted {})",
                fit.cycle_id,
                ends[fit.cycle_id].cycle.iter().map(point_str).collect::<Vec<_>>().join(", "),
                fit.slope,
                fit.points,
                fit.predicted.map_or("-".into(), |p| format!("{p:.4}"))
            );
        }
        for flag in &r.flags {
            let _ = writeln!(summary, "  flag: {flag}");
        }
        spectra.push(r);
    }
    report.result = json!({ "spectra": spectra, "periodic_ends": ends });
    Outcome::finish(report, summary)
}

/// Residual differences below this are within quadrature resolution at the
/// default sample count.
pub const RESIDUAL_RESOLUTION: f64 = 1e-4;

/// Whether each value is at most 1.2 times the one before it, up to
/// `RESIDUAL_RESOLUTION`.
pub fn non_increasing_with_slack(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= 1.2 * w[0] + RESIDUAL_RESOLUTION)
}

pub fn equiv_command(c: &Common, points: &[String], samples: usize, probe: usize) -> Outcome {
    let t_text = c.t.clone().unwrap_or_else(|| "1e-4,1e-6,1e-8".into());
    let point_text: Vec<String> = if points.is_empty() { vec!["gauss".into()] } else { points.to_vec() };
    let params = json!({ "t": t_text, "points": point_text, "samples": samples, "probe": probe });
    let mut report = CommandReport::new("equiv", None, params, c.seed);
    let (_, f, info) = stage!(report, "family", load_family(c.family.as_deref()));
    report.family = Some(info);
    let mut ts = stage!(report, "options", parse_t_values(&t_text));
    ts.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    let mut rows = Vec::new();
    let mut summary = String::new();
    for text in &point_text {
        let x = stage!(report, "options", parse_point(text));
        let image = stage!(report, "apply_map", apply_map(&f, &x));
        let _ = writeln!(summary, "{x} -> {image}");
        let mut residuals = Vec::new();
        let mut entries = Vec::new();
        for &t0 in &ts {
            let res = stage!(report, "residual", equivalence_residual(&f, &x, t0, samples));
            residuals.push(res);
            let lip = if probe > 0 {
                let ft = stage!(report, "lipschitz", ComplexMap::from_family(&f, t0));
                let center = stage!(report, "lipschitz", realize(&x, t0));
                let pts = probe_points(&[center], probe, 1.0, c.seed);
                Some(stage!(report, "lipschitz", lipschitz_probe(&ft, &pts, 4000)).max)
            } else {
                None
            };
            let _ = writeln!(
                summary,
                "  t = {:e}: residual {:.5}{}",
                t0.norm(),
                res,
                lip.map_or(String::new(), |l| format!(", Lipschitz probe {l:.4}"))
            );
            entries.push(json!({ "t": [t0.re, t0.im], "residual": res, "lipschitz": lip }));
        }
        let monotone = non_increasing_with_slack(&residuals);
        let _ = writeln!(summary, "  non-increasing within 20%: {monotone}");
        rows.push(json!({ "point": x.to_string(), "image": image.to_string(), "ladder": entries, "non_increasing": monotone }));
    }
    report.result = json!({ "points": rows });
    Outcome::finish(report, summary)
}

#[allow(clippy::too_many_arguments)]
pub fn render_command(
    c: &Common,
    resolution: usize,
    center: &str,
    half_width: f64,
    max_iter: u32,
    escape_radius: Option<f64>,
    period_bound: usize,
    angle: f64,
) -> Outcome {
    let t_text = c.t.clone().unwrap_or_else(|| "1e-7".into());
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("julia.ppm"));
    let params = json!({
        "t": t_text, "resolution": resolution, "center": center, "half_width": half_width,
        "max_iter": max_iter, "escape_radius": escape_radius, "period_bound": period_bound,
        "angle": angle, "out": out,
    });
    let mut report = CommandReport::new("render", None, params, c.seed);
    let (spec, _, info) = stage!(report, "family", load_family(c.family.as_deref()));
    report.family = Some(info);
    let t0 = stage!(report, "options", parse_complex(&t_text));
    let center = stage!(report, "options", parse_complex(center));
    let cfg = RenderConfig { t0, center, half_width, resolution, max_iter, escape_radius, period_bound };
    let (p, q) = stage!(report, "family", spec.at(t0));
    let dynamics = stage!(report, "config", Dynamics::new(p, q, &cfg));
    let img = render(&dynamics, &cfg);
    if let Err(e) = img.write(&out) {
        report.errors.push(StageError { stage: "write".into(), kind: "io", message: e.to_string() });
        return Outcome { summary: format!("cannot write {}: {e}\n", out.display()), report, exit: 1 };
    }
    let tr = transect_profile(&dynamics, &cfg, angle);
    let summary = format!(
        "wrote {} ({}x{}), escaped {:.1}%, {} attracting cycles\ntransect at angle {}: {} separated maxima at radii {:?}\n",
        out.display(),
        resolution,
        resolution,
        100.0 * img.escaped_fraction(),
        img.cycles.len(),
        angle,
        tr.maxima,
        tr.peak_radii.iter().map(|r| format!("{r:.4e}")).collect::<Vec<_>>()
    );
    report.result = json!({
        "config": cfg,
        "escape_radius": dynamics.escape_radius,
        "escaped_fraction": img.escaped_fraction(),
        "cycles": img.cycles,
        "transect": { "angle": angle, "samples": tr.radii.len(), "maxima": tr.maxima, "peak_radii": tr.peak_radii },
    });
    Outcome::finish(report, summary)
}

fn model_json(m: &PLIntervalModel, depth: usize) -> (Value, String) {
    let degrees = m.degrees();
    let pieces: Vec<Value> = m
        .pieces
        .iter()
        .map(|p| json!({ "start": q_str(p.start), "end": q_str(p.end), "slope": p.slope }))
        .collect();
    let alternating = m.pieces.windows(2).all(|w| (w[0].slope > 0) != (w[1].slope > 0));
    let len = m.b - m.a;
    let depth1 = pl_cantor_intervals(m, 1);
    let depth1_lengths: Vec<String> = depth1.iter().map(|&iv| q_str(interval_length(iv))).collect();
    let depth1_exact = depth1.len() == degrees.len()
        && depth1.iter().zip(&degrees).all(|(&iv, &d)| interval_length(iv) == len / qi(d.abs()));
    let deep = pl_cantor_intervals(m, depth);
    let sum = m.reciprocal_sum();
    let cmp = match sum.cmp(&Q::from_integer(1)) {
        std::cmp::Ordering::Less => "less",
        std::cmp::Ordering::Equal => "equal",
        std::cmp::Ordering::Greater => "greater",
    };
    let value = json!({
        "a": q_str(m.a), "b": q_str(m.b), "k": m.k(), "pieces": pieces, "degrees": degrees,
        "degree_sum": m.degree_sum(), "reciprocal_sum": q_str(sum), "reciprocal_sum_vs_one": cmp,
        "alternating": alternating, "depth1_lengths": depth1_lengths, "depth1_lengths_exact": depth1_exact,
        "depth": depth, "interval_count": deep.len(),
    });
    let mut s = String::new();
    let _ = writeln!(s, "model on [{}, {}], k = {}", m.a, m.b, m.k());
    for p in &m.pieces {
        let _ = writeln!(s, "  [{}, {}] slope {:+}", p.start, p.end, p.slope);
    }
    let _ = writeln!(s, "sum d = {}, sum 1/d = {} ({cmp} than 1), alternating: {alternating}", m.degree_sum(), sum);
    let _ = writeln!(s, "depth 1 lengths {:?} (exact (b-a)/d_i: {depth1_exact})", depth1_lengths);
    let _ = writeln!(s, "{} intervals at depth {depth}", deep.len());
    (value, s)
}

pub fn pl_model_command(c: &Common, degrees: Option<&str>, interval: &str) -> Outcome {
    let depth = c.depth.unwrap_or(5);
    let params = json!({ "degrees": degrees, "interval": interval, "depth": depth, "order": c.order });
    let mut report = CommandReport::new("pl-model", None, params, c.seed);
    let model = if let Some(src) = c.family.as_deref() {
        let (_, f, info) = stage!(report, "family", load_family(Some(src)));
        report.family = Some(info);
        let opts = stage!(report, "options", analysis_options(c, 3));
        let sk = stage!(report, "skeleton", build_skeleton(&f, opts.order));
        let (fixed, _) = stage!(report, "fixed_points", fixed_points_with_degree(&f, &sk));
        let ends = stage!(
            report,
            "periodic_ends",
            periodic_ends(&f, opts.q_max.min(max_period(f.degree())), opts.ends_order)
        );
        let x0 = model_basepoint(&fixed);
        let x0 = stage!(
            report,
            "interval_model",
            x0.ok_or_else(|| Error::Classification("no fixed point of degree >= 2 on the axis".into()))
        );
        stage!(report, "interval_model", extract_interval_model(&f, &sk, x0, opts.depth, &ends))
    } else {
        let text = stage!(
            report,
            "options",
            degrees.ok_or_else(|| Error::Parse { position: 0, message: "give --degrees or --family".into() })
        );
        let ds: Vec<i64> = stage!(
            report,
            "options",
            text.split(',')
                .map(|d| d.trim().parse::<i64>().map_err(|_| Error::Parse {
                    position: 0,
                    message: format!("bad degree '{d}'")
                }))
                .collect::<Result<Vec<_>>>()
        );
        let (a, b) = stage!(
            report,
            "options",
            interval
                .split_once(',')
                .ok_or_else(|| Error::Parse { position: 0, message: "interval must be 'a,b'".into() })
                .and_then(|(a, b)| Ok((parse_rational(a)?, parse_rational(b)?)))
        );
        stage!(report, "model", PLIntervalModel::standard(a, b, &ds))
    };
    let (value, summary) = model_json(&model, depth);
    report.result = value;
    Outcome::finish(report, summary)
}
