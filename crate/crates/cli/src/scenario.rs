//! Scenario presets and JSON configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use valley_core::model::Side;
use valley_core::valley::{DEFAULT_GRID, DEFAULT_T};

use crate::error::{CliError, CliResult};

pub const DEFAULT_MAX_ORDER: usize = 200;
pub const DEFAULT_PRECISION: u32 = 50;
pub const PRECISION_ENV: &str = "VALLEY_PRECISION";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    CaseA,
    CaseB,
    CaseC,
    CaseD,
    Fig3,
    Fig4,
    ValleyProfile,
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        ScenarioName::CaseA,
        ScenarioName::CaseB,
        ScenarioName::CaseC,
        ScenarioName::CaseD,
        ScenarioName::Fig3,
        ScenarioName::Fig4,
        ScenarioName::ValleyProfile,
        ScenarioName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::CaseA => "case_a",
            ScenarioName::CaseB => "case_b",
            ScenarioName::CaseC => "case_c",
            ScenarioName::CaseD => "case_d",
            ScenarioName::Fig3 => "fig3",
            ScenarioName::Fig4 => "fig4",
            ScenarioName::ValleyProfile => "valley_profile",
            ScenarioName::Custom => "custom",
        }
    }

    /// Whether the scenario runs the large-order series analysis.
    pub fn is_series(self) -> bool {
        !matches!(self, ScenarioName::Fig4 | ScenarioName::ValleyProfile)
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<ScenarioName> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario {s:?}")))
    }
}

/// One perturbative level: exact decimal `ε`, level `N`, well.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub epsilon: String,
    pub n: usize,
    pub side: Side,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|A_fit/A_theory - 1|`.
    pub a_rel: f64,
    /// `|ĉ - c| / max(1, |c|)`.
    pub c_rel: f64,
    /// `|ΔE_num/ΔE_valley - 1|` at the smallest `g²` of the Fig. 4 sweep.
    pub fig4_final: f64,
    /// Fit of `S(R)` to `1/3 - 2e^{-R}` on `R ∈ [5, 10]`.
    pub valley_large_r: f64,
    /// `S/(R²/2) - 1` on the smallest-`R` samples.
    pub valley_small_r: f64,
    /// Relative error of the extrapolated `f(0)` and `f(1/3)`.
    pub valley_endpoint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { a_rel: 0.005, c_rel: 0.005, fig4_final: 0.2, valley_large_r: 1e-3, valley_small_r: 0.05, valley_endpoint: 0.02 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValleySettings {
    pub t_len: f64,
    pub grid_size: usize,
    pub n_samples: usize,
}

impl Default for ValleySettings {
    fn default() -> Self {
        ValleySettings { t_len: DEFAULT_T, grid_size: DEFAULT_GRID, n_samples: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub name: ScenarioName,
    pub points: Vec<LevelPoint>,
    /// Couplings for the spectrum comparison.
    pub g2: Vec<f64>,
    pub levels: Vec<usize>,
    pub epsilon_fig4: String,
    pub max_order: usize,
    pub window: (usize, usize),
    pub precision: u32,
    pub tolerances: Tolerances,
    pub valley: ValleySettings,
    pub out: PathBuf,
    pub full: bool,
}

/// `k/10` as a plain decimal string.
fn tenths(k: usize) -> String {
    if k.is_multiple_of(10) {
        (k / 10).to_string()
    } else {
        format!("{}.{}", k / 10, k % 10)
    }
}

/// `ε` values `0, step, 2·step, … ≤ max`, all in tenths.
fn grid(max_tenths: usize, step_tenths: usize) -> Vec<String> {
    (0..=max_tenths).step_by(step_tenths).map(tenths).collect()
}

fn levels(eps: &[String], ns: &[usize], side: Side) -> Vec<LevelPoint> {
    eps.iter()
        .flat_map(|e| ns.iter().map(move |n| LevelPoint { epsilon: e.clone(), n: *n, side }))
        .collect()
}

/// Fit window covering the top quarter of the computed orders.
pub fn default_window(max_order: usize) -> (usize, usize) {
    (max_order - max_order / 4, max_order)
}

impl Scenario {
    /// Paper-scale grids with `full`, otherwise every fifth grid point.
    pub fn preset(name: ScenarioName, full: bool) -> Scenario {
        let thin = if full { 1 } else { 5 };
        let mut tol = Tolerances::default();
        let points = match name {
            ScenarioName::CaseA | ScenarioName::Fig3 => levels(&grid(100, 2 * thin), &[0], Side::Minus),
            ScenarioName::CaseB => {
                tol.a_rel = 0.15;
                tol.c_rel = 0.15;
                levels(&grid(200, 2 * thin), &[0], Side::Plus)
            }
            ScenarioName::CaseC => levels(&grid(65, 5 * thin), &[3], Side::Plus),
            ScenarioName::CaseD => levels(&["2.5".to_string()], &[1, 2, 3, 4, 5, 6], Side::Minus),
            _ => Vec::new(),
        };
        Scenario {
            name,
            points,
            g2: vec![0.08, 0.05, 0.03],
            levels: vec![0, 1],
            epsilon_fig4: "2".into(),
            max_order: DEFAULT_MAX_ORDER,
            window: default_window(DEFAULT_MAX_ORDER),
            precision: DEFAULT_PRECISION,
            tolerances: tol,
            valley: ValleySettings::default(),
            out: PathBuf::from("out"),
            full,
        }
    }

    pub fn series_dir(&self) -> PathBuf {
        self.out.join("series")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.window.0 < 2 || self.window.0 >= self.window.1 || self.window.1 > self.max_order {
            return Err(CliError::Config(format!("window {:?} invalid for max order {}", self.window, self.max_order)));
        }
        if self.name.is_series() && self.points.is_empty() {
            return Err(CliError::Config(format!("scenario {} has no levels", self.name)));
        }
        if self.name == ScenarioName::Fig4 && self.g2.len() < 3 {
            return Err(CliError::Config("fig4 needs at least three g² values".into()));
        }
        Ok(())
    }
}

/// JSON configuration: a `scenario` key plus optional overrides.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<ScenarioName>,
    pub full: Option<bool>,
    pub out: Option<PathBuf>,
    pub precision: Option<u32>,
    pub max_order: Option<usize>,
    pub window: Option<(usize, usize)>,
    pub epsilons: Option<Vec<String>>,
    pub n: Option<Vec<usize>>,
    pub side: Option<Side>,
    pub g2: Option<Vec<f64>>,
    pub levels: Option<Vec<usize>>,
    pub fig4_epsilon: Option<String>,
    pub tolerances: Option<ToleranceOverrides>,
    pub valley: Option<ValleyOverrides>,
}

/// Tolerance keys present in a config file; absent keys keep the preset value.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub a_rel: Option<f64>,
    pub c_rel: Option<f64>,
    pub fig4_final: Option<f64>,
    pub valley_large_r: Option<f64>,
    pub valley_small_r: Option<f64>,
    pub valley_endpoint: Option<f64>,
}

impl ToleranceOverrides {
    fn apply(&self, t: &mut Tolerances) {
        let pairs = [
            (self.a_rel, &mut t.a_rel),
            (self.c_rel, &mut t.c_rel),
            (self.fig4_final, &mut t.fig4_final),
            (self.valley_large_r, &mut t.valley_large_r),
            (self.valley_small_r, &mut t.valley_small_r),
            (self.valley_endpoint, &mut t.valley_endpoint),
        ];
        for (src, dst) in pairs {
            if let Some(v) = src {
                *dst = v;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValleyOverrides {
    pub t_len: Option<f64>,
    pub grid_size: Option<usize>,
    pub n_samples: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Command-line values; each one that is set takes precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub full: bool,
    pub out: Option<PathBuf>,
    pub precision: Option<u32>,
    pub max_order: Option<usize>,
}

/// Preset, then config file, then command-line flags.
pub fn resolve(name: Option<ScenarioName>, config: Option<&ConfigFile>, flags: &Overrides) -> CliResult<Scenario> {
    let cfg = config.cloned().unwrap_or_default();
    let name = match (name, cfg.scenario) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!("scenario {a} conflicts with config scenario {b}")));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::Config("no scenario given".into())),
    };
    let full = flags.full || cfg.full.unwrap_or(false);
    let mut sc = Scenario::preset(name, full);
    if let Some(eps) = cfg.epsilons {
        let ns = cfg.n.clone().unwrap_or_else(|| vec![0]);
        sc.points = levels(&eps, &ns, cfg.side.unwrap_or(Side::Minus));
    } else if cfg.n.is_some() || cfg.side.is_some() {
        let ns = cfg.n.clone();
        let side = cfg.side;
        let eps: Vec<String> = sc.points.iter().map(|p| p.epsilon.clone()).fold(Vec::new(), |mut v, e| {
            if !v.contains(&e) {
                v.push(e);
            }
            v
        });
        let base_n: Vec<usize> = sc.points.iter().map(|p| p.n).fold(Vec::new(), |mut v, n| {
            if !v.contains(&n) {
                v.push(n);
            }
            v
        });
        let base_side = sc.points.first().map_or(Side::Minus, |p| p.side);
        sc.points = levels(&eps, &ns.unwrap_or(base_n), side.unwrap_or(base_side));
    }
    if let Some(g2) = cfg.g2 {
        sc.g2 = g2;
    }
    if let Some(l) = cfg.levels {
        sc.levels = l;
    }
    if let Some(e) = cfg.fig4_epsilon {
        sc.epsilon_fig4 = e;
    }
    if let Some(t) = cfg.tolerances {
        t.apply(&mut sc.tolerances);
    }
    if let Some(v) = cfg.valley {
        sc.valley.t_len = v.t_len.unwrap_or(sc.valley.t_len);
        sc.valley.grid_size = v.grid_size.unwrap_or(sc.valley.grid_size);
        sc.valley.n_samples = v.n_samples.unwrap_or(sc.valley.n_samples);
    }
    let max_order = flags.max_order.or(cfg.max_order).unwrap_or(DEFAULT_MAX_ORDER);
    sc.max_order = max_order;
    sc.window = match (flags.max_order, cfg.window) {
        (None, Some(w)) => w,
        _ => default_window(max_order),
    };
    sc.precision = match flags.precision.or(cfg.precision) {
        Some(p) => p,
        None => precision_from_env()?,
    };
    if let Some(out) = flags.out.clone().or(cfg.out) {
        sc.out = out;
    }
    sc.validate()?;
    Ok(sc)
}

fn precision_from_env() -> CliResult<u32> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("{PRECISION_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(DEFAULT_PRECISION),
    }
}
