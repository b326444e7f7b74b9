//! One PASS/FAIL line per acceptance criterion, with wall time and budget.

#[path = "../../core/tests/props/mod.rs"]
mod props;

use std::time::{Duration, Instant};

use berkdyn::berkovich::{BerkMap, TypeIIPoint, TypeIPoint};
use berkdyn::family::parse_family;
use berkdyn::hyperbolic::{
    equivalence_residual, lipschitz_probe, numeric_multiplier_spectrum, probe_points, realize, ComplexMap,
    DEFAULT_SAMPLES,
};
use berkdyn::pl::{interval_length, pl_cantor_intervals, PLIntervalModel};
use berkdyn::puiseux::{q, qi, Q, C64};
use berkdyn::tree::{analyze, AnalysisOptions, AnalysisReport, EndClass, Verdict};
use berkdyn_cli::commands::non_increasing_with_slack;
use berkdyn_cli::points::{parse_point, parse_t_values};
use berkdyn_cli::render::{render, transect_profile, Dynamics, RenderConfig};

const MCMULLEN: &str = "z^2 + t/z^3";
const DEGREE_TWELVE: &str = "z^2/(1-z^2) + t/z^10";
const ESCAPING: &str = "z^2 + 1/t";
const FAMILIES: [&str; 3] = [MCMULLEN, DEGREE_TWELVE, ESCAPING];

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

type Check = Result<Outcome, String>;

fn map(src: &str) -> Result<BerkMap, String> {
    parse_family(src).and_then(|s| s.to_map()).map_err(|e| e.to_string())
}

fn report(src: &str) -> Result<AnalysisReport, String> {
    analyze(&map(src)?, &AnalysisOptions::default()).map_err(|e| e.to_string())
}

fn real(t: f64) -> C64 {
    C64::new(t, 0.0)
}

fn axis_degrees(r: &AnalysisReport) -> Vec<(Q, usize)> {
    let mut v: Vec<_> = r
        .fixed_points
        .iter()
        .filter(|p| p.degree >= 2 && p.point.is_on_axis())
        .map(|p| (p.point.radius(), p.degree))
        .collect();
    v.sort();
    v
}

fn mcmullen() -> Check {
    let r = report(MCMULLEN)?;
    let mut fails = Vec::new();
    let fixed = axis_degrees(&r);
    let all_fixed = r.fixed_points.iter().filter(|p| p.degree >= 2).count();
    if fixed != vec![(qi(0), 2), (q(1, 4), 3)] || all_fixed != 2 {
        fails.push(format!("fixed points {fixed:?}"));
    }
    let pieces = r
        .interval_model
        .as_ref()
        .map(|m| ((m.a, m.b), m.pieces.iter().map(|p| (p.start, p.end, p.slope)).collect::<Vec<_>>()));
    let expected = ((qi(0), q(1, 3)), vec![(qi(0), q(1, 6), 2), (q(2, 9), q(1, 3), -3)]);
    if pieces.as_ref() != Some(&expected) {
        fails.push(format!("interval model {pieces:?}"));
    }
    match r.verdict {
        Some(Verdict::Nested { reciprocal_sum }) if reciprocal_sum == q(5, 6) => {}
        ref v => fails.push(format!("verdict {v:?}")),
    }
    let short: Vec<_> = r.periodic_ends.iter().filter(|e| e.period <= 3).collect();
    let through_infinity = short.iter().filter(|e| e.cycle.contains(&TypeIPoint::Infinity)).count();
    let bad: Vec<_> = short
        .iter()
        .filter(|e| !e.cycle.contains(&TypeIPoint::Infinity))
        .filter(|e| e.unresolved || e.translation_length != Some(qi(0)))
        .map(|e| (e.period, e.translation_length))
        .collect();
    if !bad.is_empty() || r.q_max_used < 3 {
        fails.push(format!("nonzero translation lengths {bad:?}"));
    }
    let norm = r.normalization_radius.as_ref().map(|n| n.value);
    if norm != Some(q(1, 11)) {
        fails.push(format!("normalization radius {norm:?}"));
    }
    Ok(Outcome::new(
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "x_g deg 2, ζ(0,1/4) deg 3; I = [0,1/3] with [0,1/6] slope +2 and [2/9,1/3] slope -3; Σ1/d = 5/6 NESTED; {} finite cycles of period ≤ 3 have length 0 ({} through ∞); radius 1/11",
                short.len() - through_infinity,
                through_infinity
            )
        } else {
            fails.join("; ")
        },
    ))
}

fn degree_twelve() -> Check {
    let r = report(DEGREE_TWELVE)?;
    let mut fails = Vec::new();
    let m = r.interval_model.as_ref().ok_or("no interval model")?;
    let order = m.degrees();
    let mut sorted = order.clone();
    sorted.sort();
    if m.k() != 2 || sorted != vec![2, 10] {
        fails.push(format!("degrees {order:?}"));
    }
    match r.verdict {
        Some(Verdict::Nested { reciprocal_sum }) if reciprocal_sum == q(3, 5) => {}
        ref v => fails.push(format!("verdict {v:?}")),
    }
    let cfg = RenderConfig { t0: real(1e-7), resolution: 800, ..RenderConfig::default() };
    let (p, qq) = parse_family(DEGREE_TWELVE).and_then(|s| s.at(cfg.t0)).map_err(|e| e.to_string())?;
    let dynamics = Dynamics::new(p, qq, &cfg).map_err(|e| e.to_string())?;
    let img = render(&dynamics, &cfg);
    let tr = transect_profile(&dynamics, &cfg, 0.0);
    if tr.maxima < 3 {
        fails.push(format!("transect has {} maxima", tr.maxima));
    }
    let detail = format!(
        "k = 2, d = {order:?} in piece order, Σ1/d = 3/5 NESTED; 800² render at t = 1e-7 escaped {:.1}%, transect maxima {} at radii {:?}",
        100.0 * img.escaped_fraction(),
        tr.maxima,
        tr.peak_radii.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
    );
    Ok(Outcome::new(fails.is_empty(), if fails.is_empty() { detail } else { fails.join("; ") }))
}

fn escaping() -> Check {
    let f = map(ESCAPING)?;
    let r = analyze(&f, &AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let repelling: Vec<_> =
        r.periodic_ends.iter().filter(|e| e.period == 1 && e.classification == EndClass::Repelling).collect();
    let halves = repelling.iter().filter(|e| e.translation_length == Some(q(1, 2))).count();
    let ts = parse_t_values("1e-3..1e-8").map_err(|e| e.to_string())?;
    let spectrum = numeric_multiplier_spectrum(&f, 1, &ts, &r.periodic_ends).map_err(|e| e.to_string())?;
    let slopes: Vec<f64> = spectrum.fits.iter().filter(|s| s.predicted == Some(0.5)).map(|s| s.slope).collect();
    let slopes_ok = slopes.len() == 2 && slopes.iter().all(|s| (s - 0.5).abs() <= 0.025);
    Ok(Outcome::new(
        repelling.len() == 2 && halves == 2 && slopes_ok,
        format!(
            "{} repelling fixed ends, {} of length 1/2; fitted slopes over t = 1e-3..1e-8: {:?}",
            repelling.len(),
            halves,
            slopes.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>()
        ),
    ))
}

fn ladder(f: &BerkMap, x: &TypeIIPoint, ts: &[f64]) -> Result<Vec<f64>, String> {
    ts.iter().map(|&t| equivalence_residual(f, x, real(t), DEFAULT_SAMPLES).map_err(|e| e.to_string())).collect()
}

fn equivalence() -> Check {
    let mut ok = true;
    let mut rows = Vec::new();
    for src in FAMILIES {
        let f = map(src)?;
        for point in ["gauss", "zeta(0, 1/5)"] {
            let x = parse_point(point).map_err(|e| e.to_string())?;
            let v = ladder(&f, &x, &[1e-4, 1e-6, 1e-8])?;
            let pass = v[2] <= 0.05 && non_increasing_with_slack(&v);
            ok &= pass;
            rows.push(format!(
                "{}{} at {}: {:.4}/{:.4}/{:.4}",
                if pass { "" } else { "FAIL " },
                src,
                x,
                v[0],
                v[1],
                v[2]
            ));
        }
    }
    Ok(Outcome::new(ok, format!("residuals at t = 1e-4/1e-6/1e-8, N = {DEFAULT_SAMPLES}: {}", rows.join("; "))))
}

fn pl_model() -> Check {
    let degrees = [5, 4, 3];
    let m = PLIntervalModel::standard(qi(0), qi(1), &degrees).map_err(|e| e.to_string())?;
    let alternating = m.pieces.windows(2).all(|w| w[0].slope.signum() == -w[1].slope.signum());
    let depth1 = pl_cantor_intervals(&m, 1);
    let lengths: Vec<Q> = depth1.iter().map(|&iv| interval_length(iv)).collect();
    let expected: Vec<Q> = degrees.iter().map(|&d| (m.b - m.a) / qi(d)).collect();
    let count = pl_cantor_intervals(&m, 5).len();
    let pass = alternating
        && m.degree_sum() == 12
        && m.reciprocal_sum() == q(47, 60)
        && lengths == expected
        && count == 243;
    Ok(Outcome::new(
        pass,
        format!(
            "slopes {:?}, Σd = {}, Σ1/d = {}, depth-1 lengths {:?}, {} intervals at depth 5",
            m.pieces.iter().map(|p| p.slope).collect::<Vec<_>>(),
            m.degree_sum(),
            m.reciprocal_sum(),
            lengths.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            count
        ),
    ))
}

fn property_suites() -> Check {
    let mut fails = Vec::new();
    let mut times = Vec::new();
    for (name, run) in props::SUITES {
        let start = Instant::now();
        if let Err(e) = run() {
            fails.push(format!("{name}: {}", e.lines().next().unwrap_or("")));
        }
        times.push(format!("{name} {:.1}s", start.elapsed().as_secs_f64()));
    }
    let detail = format!("{} suites × {} cases: {}", props::SUITES.len(), props::CASES, times.join(", "));
    Ok(Outcome::new(fails.is_empty(), if fails.is_empty() { detail } else { format!("{detail}; {}", fails.join("; ")) }))
}

fn lipschitz() -> Check {
    let ts = [1e-2, 1e-4, 1e-6, 1e-8];
    let mut ok = true;
    let mut rows = Vec::new();
    for src in FAMILIES {
        let f = map(src)?;
        let r = analyze(&f, &AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let mut xs = vec![TypeIIPoint::gauss(), parse_point("zeta(0, 1/5)").map_err(|e| e.to_string())?];
        xs.extend(r.fixed_points.iter().map(|p| p.point.clone()));
        let mut maxima = Vec::new();
        for &t in &ts {
            let ft = ComplexMap::from_family(&f, real(t)).map_err(|e| e.to_string())?;
            let centers: Vec<_> = xs.iter().map(|x| realize(x, real(t))).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            let pts = probe_points(&centers, 8, 1.0, 0);
            maxima.push(lipschitz_probe(&ft, &pts, 4000).map_err(|e| e.to_string())?.max);
        }
        let bound = 10.0 * f.degree() as f64;
        let blow_up = maxima.windows(2).all(|w| w[1] > w[0]) && maxima[3] > 2.0 * maxima[0];
        let pass = maxima.iter().all(|&m| m <= bound) && !blow_up;
        ok &= pass;
        rows.push(format!(
            "{}{src} (bound {bound}): {}",
            if pass { "" } else { "FAIL " },
            maxima.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join("/")
        ));
    }
    Ok(Outcome::new(ok, format!("max probe at t = 1e-2/1e-4/1e-6/1e-8: {}", rows.join("; "))))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 7] = [
        ("1 McMullen family analysis", Duration::from_secs(10), mcmullen),
        ("2 degree-12 nested family", Duration::from_secs(60), degree_twelve),
        ("3 escaping family length spectrum", Duration::from_secs(20), escaping),
        ("4 equivalence residual", Duration::from_secs(120), equivalence),
        ("5 PL model k=3, d=(5,4,3)", Duration::from_secs(1), pl_model),
        ("6 property suites", Duration::from_secs(120), property_suites),
        ("7 Lipschitz probe", Duration::from_secs(120), lipschitz),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(o) => (o.passed && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} criterion {name} [{:.2}s of {}s]: {detail}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
