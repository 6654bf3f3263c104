//! Synthetic country panels with analytically known thrift index.
//!
//! * Thrift: capital grows only by net saving and every unit saved is a
//!   unit not consumed, so `c* = v - s*` with `s* = g` and every theta is 1.
//! * Free growth: capital grows at an exogenous rate while `c*` stays
//!   constant, so every theta is 0.
//! * Balanced: capital and consumption grow at one constant rate, so `Δg`
//!   vanishes and no theta is defined.
//!
//! Capital paths are accumulated as `K + r·K`. Observation noise, when
//! enabled, multiplies the emitted K and C by independent lognormal draws
//! from a ChaCha stream seeded per panel; the true process is unaffected.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::panel::{CountryPanel, PanelError, PanelRow};

#[derive(Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error("invalid scenario parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("scenario kind is {actual}, expected {expected}")]
    WrongKind {
        expected: ScenarioKind,
        actual: ScenarioKind,
    },
    #[error("consumption would be nonpositive in year {year} (c* = {c_star})")]
    NonPositiveConsumption { year: i32, c_star: f64 },
    #[error("capital would be nonpositive in year {year}")]
    NonPositiveCapital { year: i32 },
    #[error("scenario file line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Thrift,
    FreeGrowth,
    Balanced,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::Thrift => "thrift",
            ScenarioKind::FreeGrowth => "free-growth",
            ScenarioKind::Balanced => "balanced",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "thrift" => Ok(Self::Thrift),
            "free-growth" | "freegrowth" | "free" => Ok(Self::FreeGrowth),
            "balanced" => Ok(Self::Balanced),
            other => Err(format!("unknown scenario kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub kind: ScenarioKind,
    pub country: String,
    pub first_year: i32,
    pub n_years: usize,
    /// Initial capital.
    pub k0: f64,
    /// Net output per unit of capital (thrift only).
    pub v: f64,
    /// Net saving in each year `t`, added to capital for year `t + 1`
    /// (thrift only, `n_years - 1` entries).
    pub saving_path: Vec<f64>,
    /// Exogenous capital growth into each year after the first
    /// (free growth only, `n_years - 1` entries).
    pub growth_path: Vec<f64>,
    /// Constant consumption/capital ratio (free growth and balanced).
    pub c_star_const: f64,
    pub balanced_rate: f64,
    /// GDP is emitted as `gdp_ratio * K`.
    pub gdp_ratio: f64,
    pub seed: u64,
    pub noise_sd: f64,
}

impl ScenarioParams {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            country: "SIM".into(),
            first_year: 2000,
            n_years: 3,
            k0: 100.0,
            v: 0.9,
            saving_path: Vec::new(),
            growth_path: Vec::new(),
            c_star_const: 0.6,
            balanced_rate: 0.0,
            gdp_ratio: 0.5,
            seed: 0,
            noise_sd: 0.0,
        }
    }

    /// Random but reproducible scenario of the given kind: saving ratios
    /// in [0.02, 0.15] for thrift, growth in [-0.05, 0.15] for free
    /// growth, a rate in [0, 0.08] for balanced.
    pub fn random(kind: ScenarioKind, country: &str, n_years: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::new(kind);
        p.country = country.to_owned();
        p.n_years = n_years;
        p.seed = seed;
        p.k0 = rng.random_range(50.0..5000.0);
        p.gdp_ratio = rng.random_range(0.1..0.5);
        p.first_year = 1980;
        let steps = n_years.saturating_sub(1);
        match kind {
            ScenarioKind::Thrift => {
                p.v = rng.random_range(0.35..0.6);
                let mut k = p.k0;
                for _ in 0..steps {
                    let s = rng.random_range(0.02..0.15) * k;
                    p.saving_path.push(s);
                    k += s;
                }
            }
            ScenarioKind::FreeGrowth => {
                p.c_star_const = rng.random_range(0.1..0.5);
                p.growth_path = (0..steps).map(|_| rng.random_range(-0.05..0.15)).collect();
            }
            ScenarioKind::Balanced => {
                p.c_star_const = rng.random_range(0.1..0.5);
                p.balanced_rate = rng.random_range(0.0..0.08);
            }
        }
        p
    }

    fn validate(&self) -> Result<(), SimulationError> {
        let bad = |name: &'static str, reason: &str| {
            Err(SimulationError::Parameter {
                name,
                reason: reason.to_owned(),
            })
        };
        if self.n_years < 3 {
            return bad("n_years", "must be at least 3");
        }
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            return bad("k0", "must be positive");
        }
        if !(self.gdp_ratio.is_finite() && self.gdp_ratio > 0.0) {
            return bad("gdp_ratio", "must be positive");
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd", "must be nonnegative");
        }
        let steps = self.n_years - 1;
        match self.kind {
            ScenarioKind::Thrift => {
                if !(self.v.is_finite() && self.v > 0.0) {
                    return bad("v", "must be positive");
                }
                if self.saving_path.len() != steps {
                    return bad("saving_path", &format!("needs {steps} entries"));
                }
                if self.saving_path.iter().any(|s| !s.is_finite()) {
                    return bad("saving_path", "entries must be finite");
                }
            }
            ScenarioKind::FreeGrowth => {
                if self.growth_path.len() != steps {
                    return bad("growth_path", &format!("needs {steps} entries"));
                }
                if self
                    .growth_path
                    .iter()
                    .any(|g| !g.is_finite() || 1.0 + g <= 0.0)
                {
                    return bad("growth_path", "every 1 + g must be positive");
                }
            }
            ScenarioKind::Balanced => {
                if !self.balanced_rate.is_finite() || 1.0 + self.balanced_rate <= 0.0 {
                    return bad("balanced_rate", "1 + rate must be positive");
                }
            }
        }
        if self.kind != ScenarioKind::Thrift
            && !(self.c_star_const.is_finite() && self.c_star_const >= 0.0)
        {
            return bad("c_star_const", "must be nonnegative");
        }
        Ok(())
    }

    fn expect(&self, kind: ScenarioKind) -> Result<(), SimulationError> {
        if self.kind != kind {
            return Err(SimulationError::WrongKind {
                expected: kind,
                actual: self.kind,
            });
        }
        self.validate()
    }

    fn year(&self, t: usize) -> i32 {
        self.first_year + t as i32
    }

    /// Parses a `key=value` scenario file. Paths are comma-separated;
    /// `#` starts a comment.
    pub fn from_key_value(text: &str) -> Result<Self, SimulationError> {
        let mut kind = None;
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimulationError::Syntax {
                    line: i + 1,
                    reason: "expected key=value".into(),
                })?;
            let (k, v) = (k.trim(), v.trim());
            if k == "kind" {
                kind = Some(v.parse().map_err(|reason| SimulationError::Syntax {
                    line: i + 1,
                    reason,
                })?);
            } else {
                pairs.push((i + 1, k.to_owned(), v.to_owned()));
            }
        }
        let kind = kind.ok_or(SimulationError::Syntax {
            line: 0,
            reason: "missing `kind`".into(),
        })?;
        let mut p = Self::new(kind);
        for (line, key, value) in pairs {
            let err = |reason: String| SimulationError::Syntax { line, reason };
            let real = || -> Result<f64, SimulationError> {
                value
                    .parse()
                    .map_err(|_| err(format!("`{key}` is not a number")))
            };
            let path = || -> Result<Vec<f64>, SimulationError> {
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|_| err(format!("bad entry `{s}` in `{key}`")))
                    })
                    .collect()
            };
            match key.as_str() {
                "country" => p.country = value.clone(),
                "first_year" => p.first_year = real()? as i32,
                "n_years" => {
                    p.n_years = value
                        .parse()
                        .map_err(|_| err("`n_years` must be an integer".into()))?
                }
                "k0" => p.k0 = real()?,
                "v" => p.v = real()?,
                "saving_path" => p.saving_path = path()?,
                "growth_path" => p.growth_path = path()?,
                "c_star_const" => p.c_star_const = real()?,
                "balanced_rate" => p.balanced_rate = real()?,
                "gdp_ratio" => p.gdp_ratio = real()?,
                "seed" => {
                    p.seed = value
                        .parse()
                        .map_err(|_| err("`seed` must be an integer".into()))?
                }
                "noise_sd" => p.noise_sd = real()?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(p)
    }

    pub fn to_key_value(&self) -> String {
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::new();
        let _ = writeln!(out, "kind={}", self.kind);
        let _ = writeln!(out, "country={}", self.country);
        let _ = writeln!(out, "first_year={}", self.first_year);
        let _ = writeln!(out, "n_years={}", self.n_years);
        let _ = writeln!(out, "k0={:?}", self.k0);
        let _ = writeln!(out, "v={:?}", self.v);
        let _ = writeln!(out, "saving_path={}", join(&self.saving_path));
        let _ = writeln!(out, "growth_path={}", join(&self.growth_path));
        let _ = writeln!(out, "c_star_const={:?}", self.c_star_const);
        let _ = writeln!(out, "balanced_rate={:?}", self.balanced_rate);
        let _ = writeln!(out, "gdp_ratio={:?}", self.gdp_ratio);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "noise_sd={:?}", self.noise_sd);
        out
    }
}

/// True capital path `K_{t+1} = K_t + S_t` of a thrift scenario.
fn thrift_capital(params: &ScenarioParams) -> Result<Vec<f64>, SimulationError> {
    let mut k = Vec::with_capacity(params.n_years);
    k.push(params.k0);
    for (t, s) in params.saving_path.iter().enumerate() {
        let next = k[t] + s;
        if next <= 0.0 {
            return Err(SimulationError::NonPositiveCapital {
                year: params.year(t + 1),
            });
        }
        k.push(next);
    }
    Ok(k)
}

/// Net saving per unit of capital, `s*_t`, in the normalisation shared
/// with `g`: the saving that produced year `t`'s capital over the capital
/// it was added to. The first year carries the first period's ratio.
pub fn saving_ratio_series(params: &ScenarioParams) -> Result<Vec<(i32, f64)>, SimulationError> {
    params.expect(ScenarioKind::Thrift)?;
    let k = thrift_capital(params)?;
    let mut out: Vec<(i32, f64)> = k
        .windows(2)
        .enumerate()
        .map(|(t, w)| (params.year(t + 1), (w[1] - w[0]) / w[0]))
        .collect();
    out.insert(0, (params.year(0), out[0].1));
    Ok(out)
}

struct Noise(Option<ChaCha8Rng>, f64);

impl Noise {
    fn new(params: &ScenarioParams) -> Self {
        if params.noise_sd > 0.0 {
            Noise(
                Some(ChaCha8Rng::seed_from_u64(params.seed)),
                params.noise_sd,
            )
        } else {
            Noise(None, 0.0)
        }
    }

    fn apply(&mut self, x: f64) -> f64 {
        match &mut self.0 {
            Some(rng) => {
                let z: f64 = rng.sample(StandardNormal);
                x * (self.1 * z).exp()
            }
            None => x,
        }
    }
}

fn emit(
    params: &ScenarioParams,
    capital: &[f64],
    consumption: &[f64],
) -> Result<CountryPanel, SimulationError> {
    let mut noise = Noise::new(params);
    let rows: Vec<PanelRow> = capital
        .iter()
        .zip(consumption)
        .enumerate()
        .map(|(t, (&k, &c))| {
            let gdp = params.gdp_ratio * k;
            let k_obs = noise.apply(k);
            let c_obs = noise.apply(c);
            PanelRow::new(params.year(t), k_obs, c_obs, gdp)
        })
        .collect();
    Ok(CountryPanel::build(&params.country, rows)?)
}

/// Capital accumulates net saving; consumption is net output `v·K` less
/// net saving, both per unit of capital: `c*_t = v - s*_t`.
pub fn simulate_thrift(params: &ScenarioParams) -> Result<CountryPanel, SimulationError> {
    let ratios = saving_ratio_series(params)?;
    let k = thrift_capital(params)?;
    let mut c = Vec::with_capacity(k.len());
    for (&(year, s_star), &k) in ratios.iter().zip(&k) {
        let c_star = params.v - s_star;
        if c_star <= 0.0 {
            return Err(SimulationError::NonPositiveConsumption { year, c_star });
        }
        c.push(c_star * k);
    }
    emit(params, &k, &c)
}

/// Capital grows at the exogenous `growth_path`; consumption is a fixed
/// share of capital.
pub fn simulate_free_growth(params: &ScenarioParams) -> Result<CountryPanel, SimulationError> {
    params.expect(ScenarioKind::FreeGrowth)?;
    let mut k = vec![params.k0];
    for g in &params.growth_path {
        let last = k[k.len() - 1];
        k.push(last + g * last);
    }
    let c: Vec<f64> = k.iter().map(|k| params.c_star_const * k).collect();
    emit(params, &k, &c)
}

/// Capital and consumption both grow at `balanced_rate`.
pub fn simulate_balanced(params: &ScenarioParams) -> Result<CountryPanel, SimulationError> {
    params.expect(ScenarioKind::Balanced)?;
    let r = params.balanced_rate;
    let mut k = vec![params.k0];
    let mut c = vec![params.c_star_const * params.k0];
    for _ in 1..params.n_years {
        let (lk, lc) = (k[k.len() - 1], c[c.len() - 1]);
        k.push(lk + r * lk);
        c.push(lc + r * lc);
    }
    emit(params, &k, &c)
}

/// Dispatches on `params.kind`.
pub fn simulate(params: &ScenarioParams) -> Result<CountryPanel, SimulationError> {
    match params.kind {
        ScenarioKind::Thrift => simulate_thrift(params),
        ScenarioKind::FreeGrowth => simulate_free_growth(params),
        ScenarioKind::Balanced => simulate_balanced(params),
    }
}

/// `count` random countries of one kind, named `{prefix}000`, ..., with
/// seeds `seed, seed + 1, ...`.
pub fn simulate_batch(
    kind: ScenarioKind,
    count: usize,
    n_years: usize,
    seed: u64,
    noise_sd: f64,
) -> Result<Vec<CountryPanel>, SimulationError> {
    let prefix = match kind {
        ScenarioKind::Thrift => "T",
        ScenarioKind::FreeGrowth => "F",
        ScenarioKind::Balanced => "B",
    };
    (0..count)
        .map(|i| {
            let mut p =
                ScenarioParams::random(kind, &format!("{prefix}{i:03}"), n_years, seed + i as u64);
            p.noise_sd = noise_sd;
            simulate(&p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive::{derive_points, ScreenConfig};

    fn levels(panel: &CountryPanel) -> (Vec<f64>, Vec<f64>) {
        panel
            .observations()
            .iter()
            .map(|o| (o.capital, o.consumption))
            .unzip()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn thrift_reproduces_fixture_f1() {
        let mut p = ScenarioParams::new(ScenarioKind::Thrift);
        p.saving_path = vec![10.0, 22.0];
        let panel = simulate_thrift(&p).unwrap();
        let (k, c) = levels(&panel);
        assert!(close(&k, &[100.0, 110.0, 132.0]));
        assert!(close(&c, &[80.0, 88.0, 92.4]));
        let pts = derive_points(&panel, &ScreenConfig::delta_growth());
        assert!((pts[2].theta_c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thrift_constant_saving_ratio_has_no_theta() {
        let mut p = ScenarioParams::new(ScenarioKind::Thrift);
        p.n_years = 6;
        let mut k = p.k0;
        for _ in 0..5 {
            p.saving_path.push(0.125 * k);
            k += 0.125 * k;
        }
        let pts = derive_points(&simulate(&p).unwrap(), &ScreenConfig::delta_growth());
        assert!(pts.iter().all(|pt| !pt.passes_screen));

        p.saving_path = vec![0.0; 5];
        let panel = simulate(&p).unwrap();
        assert!(panel.observations().iter().all(|o| o.capital == 100.0));
        let pts = derive_points(&panel, &ScreenConfig::delta_growth());
        assert!(pts.iter().all(|pt| pt.theta_c.is_none()));
    }

    #[test]
    fn thrift_rejects_nonpositive_consumption() {
        let mut p = ScenarioParams::new(ScenarioKind::Thrift);
        p.saving_path = vec![95.0, 1.0];
        assert!(matches!(
            simulate_thrift(&p),
            Err(SimulationError::NonPositiveConsumption { year: 2000, .. })
        ));
    }

    #[test]
    fn free_growth_reproduces_fixture_f2() {
        let mut p = ScenarioParams::new(ScenarioKind::FreeGrowth);
        p.growth_path = vec![0.05, 0.10];
        let panel = simulate_free_growth(&p).unwrap();
        let (k, c) = levels(&panel);
        assert!(close(&k, &[100.0, 105.0, 115.5]));
        assert!(close(&c, &[60.0, 63.0, 69.3]));
        let pts = derive_points(&panel, &ScreenConfig::delta_growth());
        assert!(pts[2].theta_c.unwrap().abs() < 1e-12);
    }

    #[test]
    fn free_growth_edge_cases() {
        let mut p = ScenarioParams::new(ScenarioKind::FreeGrowth);
        p.n_years = 4;
        p.growth_path = vec![0.04; 3];
        let pts = derive_points(&simulate(&p).unwrap(), &ScreenConfig::delta_growth());
        assert!(pts.iter().all(|pt| !pt.passes_screen));

        p.growth_path = vec![0.05, 0.10, -0.02];
        p.c_star_const = 0.0;
        let pts = derive_points(&simulate(&p).unwrap(), &ScreenConfig::delta_growth());
        assert!(pts.iter().filter_map(|pt| pt.theta_c).all(|t| t == 0.0));

        p.growth_path = vec![0.05, -1.0, 0.1];
        assert!(matches!(
            simulate(&p),
            Err(SimulationError::Parameter {
                name: "growth_path",
                ..
            })
        ));
    }

    #[test]
    fn balanced_reproduces_fixture_f3() {
        let mut p = ScenarioParams::new(ScenarioKind::Balanced);
        p.balanced_rate = 0.10;
        p.c_star_const = 0.8;
        let panel = simulate_balanced(&p).unwrap();
        let (k, c) = levels(&panel);
        assert!(close(&k, &[100.0, 110.0, 121.0]));
        assert!(close(&c, &[80.0, 88.0, 96.8]));
        let screen = ScreenConfig::delta_growth().with_threshold(0.0).unwrap();
        assert!(derive_points(&panel, &screen)
            .iter()
            .all(|pt| pt.theta_c.is_none()));

        p.balanced_rate = 0.0;
        let screen = ScreenConfig::delta_growth();
        assert!(derive_points(&simulate(&p).unwrap(), &screen)
            .iter()
            .all(|pt| !pt.passes_screen));
    }

    #[test]
    fn wrong_kind_and_path_length() {
        let p = ScenarioParams::new(ScenarioKind::Balanced);
        assert!(matches!(
            simulate_thrift(&p),
            Err(SimulationError::WrongKind { .. })
        ));
        let mut t = ScenarioParams::new(ScenarioKind::Thrift);
        t.saving_path = vec![1.0];
        assert!(matches!(
            simulate(&t),
            Err(SimulationError::Parameter {
                name: "saving_path",
                ..
            })
        ));
    }

    #[test]
    fn noise_off_ignores_seed() {
        let mut a = ScenarioParams::random(ScenarioKind::Thrift, "X", 10, 3);
        let mut b = a.clone();
        a.seed = 1;
        b.seed = 999;
        assert_eq!(simulate(&a).unwrap(), simulate(&b).unwrap());
        a.noise_sd = 0.01;
        b.noise_sd = 0.01;
        assert_ne!(simulate(&a).unwrap(), simulate(&b).unwrap());
    }

    #[test]
    fn key_value_round_trip() {
        let p = ScenarioParams::random(ScenarioKind::Thrift, "ZZ", 5, 11);
        let text = p.to_key_value();
        assert_eq!(ScenarioParams::from_key_value(&text).unwrap(), p);

        let parsed =
            ScenarioParams::from_key_value("# f1\nkind = thrift\nsaving_path = 10, 22\n").unwrap();
        assert_eq!(parsed.saving_path, vec![10.0, 22.0]);
        assert!(ScenarioParams::from_key_value("k0=1\n").is_err());
        assert!(ScenarioParams::from_key_value("kind=thrift\nbogus=1\n").is_err());
    }
}
