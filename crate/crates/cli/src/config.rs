//! Run configuration: a flat `key = value` text format with one section per
//! bath, plus the named benchmark presets.
//!
//! Resolution order: built-in defaults, then the preset (if any), then
//! explicit config-file entries, then command-line flags — so a preset is a
//! base that explicit settings can override (the fig1 presets deliberately
//! leave their coupling at the overridable default).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use ctwa_core::exact_qc::TableParams;
use ctwa_core::model::{BathFamily, BenchmarkConfig, Branch, SpectralDensity};

/// Which solver a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Twa,
    Ctwa,
    Exact,
    Heom,
    DephasingOracle,
    Closed,
}

impl MethodKind {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "twa" => Ok(Self::Twa),
            "ctwa" => Ok(Self::Ctwa),
            "exact" => Ok(Self::Exact),
            "heom" => Ok(Self::Heom),
            "dephasing-oracle" => Ok(Self::DephasingOracle),
            "closed" => Ok(Self::Closed),
            other => Err(format!(
                "method: unknown value '{other}' (expected twa|ctwa|exact|heom|dephasing-oracle|closed)"
            )),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Twa => "twa",
            Self::Ctwa => "ctwa",
            Self::Exact => "exact",
            Self::Heom => "heom",
            Self::DephasingOracle => "dephasing-oracle",
            Self::Closed => "closed",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::Twa | Self::Ctwa | Self::Exact)
    }
}

/// One bath's configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathConfig {
    pub family: BathFamilyKind,
    pub coupling: f64,
    pub gamma: f64,
    pub omega: f64,
    pub branch: Branch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BathFamilyKind {
    Drude,
    Underdamped,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            family: BathFamilyKind::Drude,
            coupling: 0.1,
            gamma: 1.0,
            omega: 0.1,
            branch: Branch::Trig,
        }
    }
}

impl BathConfig {
    pub fn to_spectral_density(&self, temperature: f64) -> SpectralDensity {
        let family = match self.family {
            BathFamilyKind::Drude => BathFamily::Drude {
                coupling: self.coupling,
                gamma: self.gamma,
            },
            BathFamilyKind::Underdamped => BathFamily::Underdamped {
                coupling: self.coupling,
                gamma: self.gamma,
                omega: self.omega,
                branch: self.branch,
            },
        };
        SpectralDensity {
            family,
            temperature,
        }
    }

    fn from_family(family: &BathFamily) -> Self {
        match *family {
            BathFamily::Drude { coupling, gamma } => Self {
                family: BathFamilyKind::Drude,
                coupling,
                gamma,
                ..Self::default()
            },
            BathFamily::Underdamped {
                coupling,
                gamma,
                omega,
                branch,
            } => Self {
                family: BathFamilyKind::Underdamped,
                coupling,
                gamma,
                omega,
                branch,
            },
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: MethodKind,
    pub preset: Option<String>,
    pub delta: f64,
    pub h12: f64,
    /// Full real symmetric Hamiltonian rows (`h_row_k` keys); overrides the
    /// two-site (delta, h12) construction and sets the site count.
    pub h_rows: Option<Vec<Vec<f64>>>,
    pub temperature: f64,
    /// 0-based initially excited site.
    pub initial_site: usize,
    /// Default bath for every site.
    pub bath: BathConfig,
    /// Per-site overrides (0-based site → bath).
    pub bath_overrides: BTreeMap<usize, BathConfig>,
    pub n_sites: usize,
    pub dt: f64,
    pub t_max: f64,
    pub n_times: usize,
    pub n_traj: u64,
    pub seed: u64,
    /// 0 = use all available workers.
    pub workers: usize,
    pub output: PathBuf,
    pub high_t: bool,
    pub matsubara_l: usize,
    pub heom_max_depth: usize,
    pub heom_tol: f64,
    pub table: TableParams,
    pub table_cache: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::Twa,
            preset: None,
            delta: 1.0,
            h12: 0.4,
            h_rows: None,
            temperature: 2.0,
            initial_site: 0,
            bath: BathConfig::default(),
            bath_overrides: BTreeMap::new(),
            n_sites: 2,
            dt: 1e-3,
            t_max: 10.0,
            n_times: 101,
            n_traj: 10_000,
            seed: 1,
            workers: 0,
            output: PathBuf::from("out.csv"),
            high_t: true,
            matsubara_l: 0,
            heom_max_depth: 12,
            heom_tol: 1e-4,
            table: TableParams::default(),
            table_cache: None,
        }
    }
}

impl RunConfig {
    /// Applies a named preset over the model fields.
    pub fn apply_preset(&mut self, name: &str) -> Result<(), String> {
        let preset = BenchmarkConfig::by_name(name)
            .ok_or_else(|| format!("preset: unknown name '{name}'"))?;
        self.preset = Some(name.to_string());
        self.delta = preset.delta;
        self.h12 = preset.h12;
        self.h_rows = None;
        self.temperature = preset.temperature;
        self.initial_site = preset.initial_site;
        self.bath = BathConfig::from_family(&preset.bath);
        self.bath_overrides.clear();
        self.n_sites = 2;
        Ok(())
    }

    pub fn bath_for_site(&self, site: usize) -> BathConfig {
        *self.bath_overrides.get(&site).unwrap_or(&self.bath)
    }

    /// Canonical text form; parses back to the identical configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("method", self.method.as_str().into());
        if let Some(p) = &self.preset {
            kv("preset", p.clone());
        }
        kv("n_sites", self.n_sites.to_string());
        kv("delta", self.delta.to_string());
        kv("h12", self.h12.to_string());
        if let Some(rows) = &self.h_rows {
            for (i, row) in rows.iter().enumerate() {
                let joined: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                kv(&format!("h_row_{}", i + 1), joined.join(" "));
            }
        }
        kv("temperature", self.temperature.to_string());
        kv("initial_site", (self.initial_site + 1).to_string());
        kv("dt", self.dt.to_string());
        kv("t_max", self.t_max.to_string());
        kv("n_times", self.n_times.to_string());
        kv("n_traj", self.n_traj.to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        kv("output", self.output.display().to_string());
        kv("high_t", self.high_t.to_string());
        kv("matsubara_l", self.matsubara_l.to_string());
        kv("heom_max_depth", self.heom_max_depth.to_string());
        kv("heom_tol", self.heom_tol.to_string());
        kv("table_x_min", self.table.x_min.to_string());
        kv("table_x_max", self.table.x_max.to_string());
        kv("table_x_step", self.table.x_step.to_string());
        kv("table_r_max", self.table.r_max.to_string());
        kv("table_r_cells", self.table.r_cells.to_string());
        kv("table_quantiles", self.table.quantile_points.to_string());
        if let Some(c) = &self.table_cache {
            kv("table_cache", c.display().to_string());
        }
        let bath_text = |s: &mut String, b: &BathConfig| {
            let fam = match b.family {
                BathFamilyKind::Drude => "drude",
                BathFamilyKind::Underdamped => "underdamped",
            };
            let _ = writeln!(s, "family = {fam}");
            let _ = writeln!(s, "coupling = {}", b.coupling);
            let _ = writeln!(s, "gamma = {}", b.gamma);
            if b.family == BathFamilyKind::Underdamped {
                let _ = writeln!(s, "omega = {}", b.omega);
                let _ = writeln!(
                    s,
                    "branch = {}",
                    if b.branch == Branch::Trig { "trig" } else { "hyp" }
                );
            }
        };
        s.push_str("\n[bath]\n");
        bath_text(&mut s, &self.bath);
        for (site, b) in &self.bath_overrides {
            let _ = writeln!(s, "\n[bath.{}]", site + 1);
            bath_text(&mut s, b);
        }
        s
    }

    /// FNV-1a digest of the canonical text, for run identification.
    /// Execution-environment keys (output path, worker count, cache path)
    /// are excluded: two runs of the same physics and seed share a digest.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for line in self.to_text().lines() {
            let key = line.split('=').next().unwrap_or("").trim();
            if matches!(key, "output" | "workers" | "table_cache") {
                continue;
            }
            for b in line.bytes().chain([b'\n']) {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("fnv1a:{h:016x}")
    }

    /// Parses config text over the current values (so defaults or a preset
    /// base remain in effect for unmentioned keys). A `preset` key inside
    /// the text is applied first, before any other entries.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        #[derive(PartialEq)]
        enum Section {
            Root,
            Bath(Option<usize>),
            Ignored,
        }
        // Presets re-base the model, so apply them before everything else.
        for line in text.lines() {
            let line = strip_comment(line);
            if let Some(rest) = line.strip_prefix("preset") {
                let rest = rest.trim_start();
                if let Some(v) = rest.strip_prefix('=') {
                    self.apply_preset(v.trim())?;
                }
            }
        }
        let mut section = Section::Root;
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name {
                    "bath" => Section::Bath(None),
                    _ if name.starts_with("bath.") => {
                        let idx: usize = name[5..]
                            .parse()
                            .map_err(|_| format!("line {}: bad bath index '{name}'", lineno + 1))?;
                        if idx == 0 {
                            return Err(format!("line {}: bath sites are 1-based", lineno + 1));
                        }
                        Section::Bath(Some(idx - 1))
                    }
                    // Metadata sidecars carry extra sections; tolerate them
                    // so a sidecar is itself a valid config.
                    "meta" => Section::Ignored,
                    _ if name.starts_with("kernel") || name.starts_with("auxmap") => {
                        Section::Ignored
                    }
                    other => return Err(format!("line {}: unknown section [{other}]", lineno + 1)),
                };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| format!("line {}: expected 'key = value'", lineno + 1))?;
            match &section {
                Section::Ignored => {}
                Section::Root => self.set_root(key, value)?,
                Section::Bath(site) => {
                    let mut bath = match site {
                        None => self.bath,
                        Some(s) => self.bath_for_site(*s),
                    };
                    set_bath(&mut bath, key, value)?;
                    match site {
                        None => self.bath = bath,
                        Some(s) => {
                            self.bath_overrides.insert(*s, bath);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn set_root(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |k: &str, v: &str| format!("{k}: cannot parse '{v}'");
        match key {
            "method" => self.method = MethodKind::parse(value)?,
            "preset" => {} // applied in the pre-pass
            "n_sites" => self.n_sites = value.parse().map_err(|_| bad(key, value))?,
            "delta" => self.delta = value.parse().map_err(|_| bad(key, value))?,
            "h12" => self.h12 = value.parse().map_err(|_| bad(key, value))?,
            "temperature" => self.temperature = value.parse().map_err(|_| bad(key, value))?,
            "initial_site" => {
                let site: usize = value.parse().map_err(|_| bad(key, value))?;
                if site == 0 {
                    return Err("initial_site: sites are 1-based".into());
                }
                self.initial_site = site - 1;
            }
            "dt" => self.dt = value.parse().map_err(|_| bad(key, value))?,
            "t_max" => self.t_max = value.parse().map_err(|_| bad(key, value))?,
            "n_times" => self.n_times = value.parse().map_err(|_| bad(key, value))?,
            "n_traj" => self.n_traj = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "workers" => self.workers = value.parse().map_err(|_| bad(key, value))?,
            "output" => self.output = PathBuf::from(value),
            "high_t" => self.high_t = value.parse().map_err(|_| bad(key, value))?,
            "matsubara_l" => self.matsubara_l = value.parse().map_err(|_| bad(key, value))?,
            "heom_max_depth" => {
                self.heom_max_depth = value.parse().map_err(|_| bad(key, value))?
            }
            "heom_tol" => self.heom_tol = value.parse().map_err(|_| bad(key, value))?,
            "table_x_min" => self.table.x_min = value.parse().map_err(|_| bad(key, value))?,
            "table_x_max" => self.table.x_max = value.parse().map_err(|_| bad(key, value))?,
            "table_x_step" => self.table.x_step = value.parse().map_err(|_| bad(key, value))?,
            "table_r_max" => self.table.r_max = value.parse().map_err(|_| bad(key, value))?,
            "table_r_cells" => self.table.r_cells = value.parse().map_err(|_| bad(key, value))?,
            "table_quantiles" => {
                self.table.quantile_points = value.parse().map_err(|_| bad(key, value))?
            }
            "table_cache" => self.table_cache = Some(PathBuf::from(value)),
            _ if key.starts_with("h_row_") => {
                let i: usize = key[6..]
                    .parse()
                    .map_err(|_| format!("{key}: bad row index"))?;
                if i == 0 {
                    return Err(format!("{key}: rows are 1-based"));
                }
                let row: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(key, value))?;
                let rows = self.h_rows.get_or_insert_with(Vec::new);
                if rows.len() < i {
                    rows.resize(i, Vec::new());
                }
                rows[i - 1] = row;
                self.n_sites = rows.len();
            }
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Sanity checks independent of any solver.
    pub fn validate(&self) -> Result<(), String> {
        if self.n_sites < 1 {
            return Err("n_sites: must be at least 1".into());
        }
        if self.initial_site >= self.n_sites {
            return Err(format!(
                "initial_site: site {} out of range for {} sites",
                self.initial_site + 1,
                self.n_sites
            ));
        }
        if !(self.dt > 0.0) {
            return Err("dt: must be positive".into());
        }
        if self.t_max < 0.0 {
            return Err("t_max: must be nonnegative".into());
        }
        if self.n_times == 0 {
            return Err("n_times: must be at least 1".into());
        }
        if self.method.is_stochastic() && self.n_traj == 0 {
            return Err("n_traj: must be at least 1".into());
        }
        for (site, _) in self.bath_overrides.iter() {
            if *site >= self.n_sites {
                return Err(format!(
                    "bath.{}: site out of range for {} sites",
                    site + 1,
                    self.n_sites
                ));
            }
        }
        Ok(())
    }

    /// The recording grid: `n_times` points from 0 to t_max, snapped to
    /// exact multiples of dt (deduplicated).
    pub fn t_grid(&self) -> Vec<f64> {
        let mut grid = Vec::with_capacity(self.n_times);
        let mut last_step = u64::MAX;
        for k in 0..self.n_times {
            let target = if self.n_times == 1 {
                self.t_max
            } else {
                self.t_max * k as f64 / (self.n_times - 1) as f64
            };
            let step = (target / self.dt).round().max(0.0) as u64;
            if step != last_step {
                grid.push(step as f64 * self.dt);
                last_step = step;
            }
        }
        grid
    }
}

fn set_bath(bath: &mut BathConfig, key: &str, value: &str) -> Result<(), String> {
    let bad = |k: &str, v: &str| format!("bath {k}: cannot parse '{v}'");
    match key {
        "family" => {
            bath.family = match value {
                "drude" => BathFamilyKind::Drude,
                "underdamped" => BathFamilyKind::Underdamped,
                other => return Err(format!("bath family: unknown '{other}'")),
            }
        }
        "coupling" => bath.coupling = value.parse().map_err(|_| bad(key, value))?,
        "gamma" => bath.gamma = value.parse().map_err(|_| bad(key, value))?,
        "omega" => bath.omega = value.parse().map_err(|_| bad(key, value))?,
        "branch" => {
            bath.branch = match value {
                "trig" => Branch::Trig,
                "hyp" => Branch::Hyp,
                other => return Err(format!("bath branch: unknown '{other}'")),
            }
        }
        other => return Err(format!("unknown bath key '{other}'")),
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut cfg = RunConfig::default();
        cfg.apply_preset("fig2-g1-O01").unwrap();
        cfg.method = MethodKind::Ctwa;
        cfg.n_traj = 12345;
        cfg.dt = 0.002;
        let text = cfg.to_text();
        let mut parsed = RunConfig::default();
        parsed.apply_text(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.digest(), cfg.digest());
    }

    #[test]
    fn all_presets_round_trip() {
        for preset in BenchmarkConfig::presets() {
            let mut cfg = RunConfig::default();
            cfg.apply_preset(&preset.name).unwrap();
            let mut parsed = RunConfig::default();
            parsed.apply_text(&cfg.to_text()).unwrap();
            assert_eq!(parsed, cfg, "{}", preset.name);
            // Bit-exact bath parameters after the round trip.
            let a = cfg.bath_for_site(0).to_spectral_density(cfg.temperature);
            let b = parsed.bath_for_site(0).to_spectral_density(parsed.temperature);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn preset_base_allows_coupling_override() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("preset = fig1-g01\n[bath]\ncoupling = 0.25\n")
            .unwrap();
        assert_eq!(cfg.bath.coupling, 0.25);
        assert_eq!(cfg.bath.gamma, 0.1);
        assert_eq!(cfg.preset.as_deref(), Some("fig1-g01"));
    }

    #[test]
    fn unknown_key_names_the_field() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text("dtt = 0.1\n").unwrap_err();
        assert!(err.contains("dtt"), "{err}");
    }

    #[test]
    fn per_site_bath_override() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("[bath]\nfamily = drude\ngamma = 0.5\n[bath.2]\ngamma = 0.9\n")
            .unwrap();
        assert_eq!(cfg.bath_for_site(0).gamma, 0.5);
        assert_eq!(cfg.bath_for_site(1).gamma, 0.9);
    }

    #[test]
    fn grid_snaps_to_dt_multiples() {
        let cfg = RunConfig {
            dt: 1e-3,
            t_max: 0.01,
            n_times: 5,
            ..RunConfig::default()
        };
        let grid = cfg.t_grid();
        assert_eq!(grid.len(), 5);
        for (k, t) in grid.iter().enumerate() {
            let steps = (t / 1e-3).round();
            assert!((steps * 1e-3 - t).abs() < 1e-15);
            if k > 0 {
                assert!(t > &grid[k - 1]);
            }
        }
    }

    #[test]
    fn validation_catches_site_range() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("initial_site = 3\n").unwrap();
        assert!(cfg.validate().unwrap_err().contains("initial_site"));
    }

    #[test]
    fn metadata_sections_are_tolerated() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("dt = 0.5\n[meta]\nversion = 1\n[kernel.1]\nterm_1 = 0 0\n")
            .unwrap();
        assert_eq!(cfg.dt, 0.5);
    }
}
