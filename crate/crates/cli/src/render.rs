//! Escape-time pictures of the Julia set of `f_t0` and radial transects.
//!
//! Colors follow the ramp documented in `docs/colors.md`.

use std::io::Write;
use std::path::Path;

use berkdyn::cpoly::CPoly;
use berkdyn::error::{Error, Result};
use berkdyn::puiseux::C64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct RenderConfig {
    #[serde(serialize_with = "ser_c64")]
    pub t0: C64,
    #[serde(serialize_with = "ser_c64")]
    pub center: C64,
    pub half_width: f64,
    pub resolution: usize,
    pub max_iter: u32,
    /// Defaults to `max(4·scale, 100)` for the coefficient scale of the map.
    pub escape_radius: Option<f64>,
    pub period_bound: usize,
}

fn ser_c64<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            t0: C64::new(1e-7, 0.0),
            center: C64::new(0.0, 0.0),
            half_width: 1.5,
            resolution: 800,
            max_iter: 256,
            escape_radius: None,
            period_bound: 16,
        }
    }
}

pub const CYCLE_TOL: f64 = 1e-8;

/// Largest coefficient of `P` or `Q` relative to the leading coefficient of `P`.
pub fn coefficient_scale(num: &CPoly, den: &CPoly) -> f64 {
    let lead = num.leading().norm();
    let m = num.max_norm().max(den.max_norm());
    (m / lead).max(1.0)
}

/// The map `P/Q` at `t0` with a validated escape radius.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub num: CPoly,
    pub den: CPoly,
    pub escape_radius: f64,
    pub max_iter: u32,
    pub period_bound: usize,
}

impl Dynamics {
    pub fn new(num: CPoly, den: CPoly, cfg: &RenderConfig) -> Result<Self> {
        if cfg.t0.norm() == 0.0 {
            return Err(Error::Domain("rendering needs t0 != 0".into()));
        }
        if cfg.resolution < 16 {
            return Err(Error::Domain(format!("resolution {} is below 16", cfg.resolution)));
        }
        if !(cfg.half_width > 0.0) || cfg.max_iter == 0 || cfg.period_bound == 0 {
            return Err(Error::Domain("half width, iteration cap and period bound must be positive".into()));
        }
        let scale = coefficient_scale(&num, &den);
        let escape_radius = match cfg.escape_radius {
            Some(r) if r > 2.0 * scale => r,
            Some(r) => {
                return Err(Error::Domain(format!(
                    "escape radius {r} must exceed twice the coefficient scale {scale}"
                )))
            }
            None => (4.0 * scale).max(100.0),
        };
        Ok(Self { num, den, escape_radius, max_iter: cfg.max_iter, period_bound: cfg.period_bound })
    }

    fn step(&self, z: C64) -> Option<C64> {
        let q = self.den.eval(z);
        if q.norm() == 0.0 {
            return None;
        }
        let w = self.num.eval(z) / q;
        if w.re.is_finite() && w.im.is_finite() {
            Some(w)
        } else {
            None
        }
    }

    pub fn classify(&self, z0: C64) -> PixelClass {
        let mut hist = vec![z0];
        let mut z = z0;
        for k in 1..=self.max_iter {
            z = match self.step(z) {
                Some(w) if w.norm() <= self.escape_radius => w,
                _ => return PixelClass::Escaped(k),
            };
            let n = hist.len();
            for p in 1..=self.period_bound.min(n) {
                let w = hist[n - p];
                if (z - w).norm() < CYCLE_TOL * z.norm().max(1.0) {
                    let mut cycle: Vec<C64> = hist[n - p..].to_vec();
                    cycle.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
                    let r = cycle[0];
                    return PixelClass::Cycle {
                        period: p as u32,
                        key: ((r.re * 1e6).round() as i64, (r.im * 1e6).round() as i64),
                    };
                }
            }
            if hist.len() == self.period_bound {
                hist.remove(0);
            }
            hist.push(z);
        }
        PixelClass::Undecided
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PixelClass {
    Escaped(u32),
    /// Attracted to a cycle, keyed by its lexicographically least point on a `1e-6` grid.
    Cycle { period: u32, key: (i64, i64) },
    Undecided,
}

impl PixelClass {
    pub fn is_escaped(&self) -> bool {
        matches!(self, PixelClass::Escaped(_))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleInfo {
    pub period: u32,
    pub representative: [f64; 2],
    pub pixels: usize,
}

#[derive(Clone, Debug)]
pub struct Rendered {
    pub resolution: usize,
    pub max_iter: u32,
    pub classes: Vec<PixelClass>,
    pub cycles: Vec<CycleInfo>,
    cycle_keys: Vec<(u32, (i64, i64))>,
}

/// Complex coordinate of the center of pixel `(x, y)`; row 0 is the top.
pub fn pixel_point(cfg: &RenderConfig, x: usize, y: usize) -> C64 {
    let n = cfg.resolution as f64;
    let u = (2.0 * x as f64 + 1.0) / n - 1.0;
    let v = 1.0 - (2.0 * y as f64 + 1.0) / n;
    cfg.center + C64::new(u, v) * cfg.half_width
}

pub fn render(dyn_: &Dynamics, cfg: &RenderConfig) -> Rendered {
    let n = cfg.resolution;
    let classes: Vec<PixelClass> = (0..n * n)
        .into_par_iter()
        .map(|i| dyn_.classify(pixel_point(cfg, i % n, i / n)))
        .collect();
    let mut keys: Vec<(u32, (i64, i64))> = classes
        .iter()
        .filter_map(|c| match c {
            PixelClass::Cycle { period, key } => Some((*period, *key)),
            _ => None,
        })
        .collect();
    keys.sort_unstable();
    let mut cycles: Vec<CycleInfo> = Vec::new();
    let mut cycle_keys = Vec::new();
    for k in keys {
        if cycle_keys.last() == Some(&k) {
            cycles.last_mut().unwrap().pixels += 1;
        } else {
            cycle_keys.push(k);
            cycles.push(CycleInfo {
                period: k.0,
                representative: [k.1 .0 as f64 * 1e-6, k.1 .1 as f64 * 1e-6],
                pixels: 1,
            });
        }
    }
    Rendered { resolution: n, max_iter: cfg.max_iter, classes, cycles, cycle_keys }
}

const PALETTE: [[u8; 3]; 8] = [
    [230, 159, 0],
    [86, 180, 233],
    [0, 158, 115],
    [240, 228, 66],
    [0, 114, 178],
    [213, 94, 0],
    [204, 121, 167],
    [160, 160, 160],
];

fn channel(x: f64) -> u8 {
    (255.0 * x.clamp(0.0, 1.0)).round() as u8
}

/// The documented sRGB ramp for escape time `k` out of `max_iter`.
pub fn escape_color(k: u32, max_iter: u32) -> [u8; 3] {
    let u = if max_iter <= 1 { 1.0 } else { (k as f64).ln() / (max_iter as f64).ln() };
    [channel(u * u), channel(u), channel(0.25 + 0.75 * u.sqrt())]
}

impl Rendered {
    pub fn rgb(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.classes.len() * 3);
        for c in &self.classes {
            let px = match c {
                PixelClass::Escaped(k) => escape_color(*k, self.max_iter),
                PixelClass::Cycle { period, key } => {
                    let j = self.cycle_keys.binary_search(&(*period, *key)).unwrap_or(0);
                    PALETTE[j % PALETTE.len()]
                }
                PixelClass::Undecided => [0, 0, 0],
            };
            out.extend_from_slice(&px);
        }
        out
    }

    pub fn ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.resolution, self.resolution).into_bytes();
        out.extend(self.rgb());
        out
    }

    /// Writes PNG when the extension is `.png` and binary PPM otherwise.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if png {
            let n = self.resolution as u32;
            image::save_buffer(path, &self.rgb(), n, n, image::ColorType::Rgb8)
                .map_err(std::io::Error::other)
        } else {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            f.write_all(&self.ppm_bytes())?;
            f.flush()
        }
    }

    pub fn escaped_fraction(&self) -> f64 {
        self.classes.iter().filter(|c| c.is_escaped()).count() as f64 / self.classes.len() as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Transect {
    pub angle: f64,
    pub radii: Vec<f64>,
    /// Escape iteration, or `max_iter` for orbits that do not escape.
    pub values: Vec<u32>,
    pub maxima: usize,
    pub peak_radii: Vec<f64>,
}

pub const PEAK_RISE: u32 = 3;

/// Escape-time profile along the ray `r e^{iθ}` from the origin, sampled at
/// `8·resolution` log-spaced radii in `[10^-4 w, w]` for the half width `w`.
pub fn transect_profile(dyn_: &Dynamics, cfg: &RenderConfig, angle: f64) -> Transect {
    let n = 8 * cfg.resolution;
    let (lo, hi) = ((cfg.half_width * 1e-4).ln(), cfg.half_width.ln());
    let dir = C64::from_polar(1.0, angle);
    let radii: Vec<f64> = (0..n).map(|j| (lo + (hi - lo) * j as f64 / (n - 1) as f64).exp()).collect();
    let values: Vec<u32> = radii
        .par_iter()
        .map(|&r| match dyn_.classify(dir * r) {
            PixelClass::Escaped(k) => k,
            _ => cfg.max_iter,
        })
        .collect();
    let peaks = separated_maxima(&values, (n / 200).max(2));
    let peak_radii = peaks.iter().map(|&j| radii[j]).collect();
    Transect { angle, radii, values, maxima: peaks.len(), peak_radii }
}

/// Indices of the tops of runs rising at least [`PEAK_RISE`] above the local
/// floor (the minimum over `±w` samples), where runs closer than `w`
/// samples count as one.
pub fn separated_maxima(v: &[u32], w: usize) -> Vec<usize> {
    let n = v.len();
    let floor: Vec<u32> = (0..n)
        .map(|j| *v[j.saturating_sub(w)..(j + w + 1).min(n)].iter().min().unwrap())
        .collect();
    let high: Vec<bool> = (0..n).map(|j| v[j] >= floor[j] + PEAK_RISE).collect();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut j = 0;
    while j < n {
        if !high[j] {
            j += 1;
            continue;
        }
        let s = j;
        while j < n && high[j] {
            j += 1;
        }
        match runs.last_mut() {
            Some(last) if s - last.1 < w => last.1 = j,
            _ => runs.push((s, j)),
        }
    }
    runs.iter()
        .map(|&(s, e)| (s..e).max_by_key(|&k| (v[k], std::cmp::Reverse(k))).unwrap())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> (CPoly, CPoly) {
        let c = |x: f64| C64::new(x, 0.0);
        (CPoly::new(vec![c(0.0), c(0.0), c(1.0)]), CPoly::constant(c(1.0)))
    }

    #[test]
    fn rejects_bad_configs() {
        let (p, q) = square();
        let small = RenderConfig { resolution: 8, ..Default::default() };
        assert!(Dynamics::new(p.clone(), q.clone(), &small).is_err());
        let tight = RenderConfig { escape_radius: Some(1.5), ..Default::default() };
        assert!(Dynamics::new(p, q, &tight).is_err());
    }

    #[test]
    fn square_map_has_one_basin_and_one_circle() {
        let (p, q) = square();
        let cfg = RenderConfig { resolution: 64, ..Default::default() };
        let d = Dynamics::new(p, q, &cfg).unwrap();
        let img = render(&d, &cfg);
        assert_eq!(img.cycles.len(), 1);
        assert_eq!(img.cycles[0].period, 1);
        assert_eq!(img.cycles[0].representative, [0.0, 0.0]);
        assert_eq!(img.ppm_bytes().len(), "P6\n64 64\n255\n".len() + 64 * 64 * 3);
        assert_eq!(transect_profile(&d, &cfg, 0.3).maxima, 1);
    }

    #[test]
    fn maxima_merge_when_not_separated() {
        let v = [1, 1, 1, 9, 1, 9, 1, 1, 1, 1, 1, 1, 1, 1, 7, 1, 1, 1];
        assert_eq!(separated_maxima(&v, 3).len(), 2);
        assert_eq!(separated_maxima(&[2; 20], 3).len(), 0);
    }
}
