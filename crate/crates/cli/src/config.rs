//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use robinfb::outer::SolveConfig;
use robinfb::problems::{BoundaryData, Exterior};
use robinfb::LateralBc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending entry; `None` for defaults.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Slab,
    SquareSymmetric,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Certificate {
    Optimality,
    Nondegeneracy,
    Holder,
    Robin,
    Curvature,
    AlmostMinimality,
    Symmetrization,
}

impl Certificate {
    pub const ALL: [Certificate; 7] = [
        Certificate::Optimality,
        Certificate::Nondegeneracy,
        Certificate::Holder,
        Certificate::Robin,
        Certificate::Curvature,
        Certificate::AlmostMinimality,
        Certificate::Symmetrization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Certificate::Optimality => "optimality",
            Certificate::Nondegeneracy => "nondegeneracy",
            Certificate::Holder => "holder",
            Certificate::Robin => "robin",
            Certificate::Curvature => "curvature",
            Certificate::AlmostMinimality => "almost_minimality",
            Certificate::Symmetrization => "symmetrization",
        }
    }
}

impl FromStr for Certificate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Certificate::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown certificate {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub solve: SolveConfig,
    pub h: f64,
    /// Unset means the preset's own lateral boundary.
    pub lateral_bc: Option<LateralBc>,
    pub slab_a: f64,
    pub slab_width: f64,
    pub square_side: f64,
    pub custom_width: f64,
    pub custom_height: f64,
    pub custom_exterior: Exterior,
    pub custom_disk_radius: f64,
    pub v: BoundaryData,
    pub output_dir: PathBuf,
    pub certificates: Vec<Certificate>,
    pub seed: u64,
    pub tol_cert: f64,
    pub holder_delta: f64,
    pub residual_envelope: f64,
    pub curvature_window: usize,
    pub almost_min_c_max: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::SquareSymmetric,
            solve: SolveConfig::default(),
            h: 1.0 / 32.0,
            lateral_bc: None,
            slab_a: 0.5,
            slab_width: 1.0,
            square_side: 1.0,
            custom_width: 1.0,
            custom_height: 1.0,
            custom_exterior: Exterior::UpperHalf,
            custom_disk_radius: 0.25,
            v: BoundaryData::default(),
            output_dir: PathBuf::from("out"),
            certificates: Certificate::ALL.to_vec(),
            seed: 0,
            tol_cert: robinfb::certificates::TOL_CERT,
            holder_delta: 0.1,
            residual_envelope: 10.0,
            curvature_window: 8,
            almost_min_c_max: 10.0,
        }
    }
}

fn number<T: FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("expected {what}, got {s:?}"))
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Slab => "slab",
        Preset::SquareSymmetric => "square_symmetric",
        Preset::Custom => "custom",
    }
}

fn bc_name(bc: LateralBc) -> &'static str {
    match bc {
        LateralBc::Dirichlet => "dirichlet",
        LateralBc::Periodic => "periodic",
    }
}

fn exterior_name(e: Exterior) -> &'static str {
    match e {
        Exterior::UpperHalf => "upper_half",
        Exterior::LowerHalf => "lower_half",
        Exterior::Disk => "disk",
    }
}

impl RunConfig {
    /// Lateral boundary actually used by the preset.
    pub fn effective_lateral_bc(&self) -> LateralBc {
        self.lateral_bc.unwrap_or(match self.preset {
            Preset::Slab => LateralBc::Periodic,
            _ => LateralBc::Dirichlet,
        })
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let f = |s: &str| number::<f64>(s, "a number");
        match key {
            "preset" => {
                self.preset = match value {
                    "slab" => Preset::Slab,
                    "square_symmetric" => Preset::SquareSymmetric,
                    "custom" => Preset::Custom,
                    _ => return Err(format!("expected slab, square_symmetric or custom, got {value:?}")),
                }
            }
            "beta" => self.solve.beta = f(value)?,
            "eps0" => self.solve.eps0 = f(value)?,
            "eps_min" => self.solve.eps_min = f(value)?,
            "rho" => self.solve.rho = f(value)?,
            "tol_outer" => self.solve.tol_outer = f(value)?,
            "max_outer" => self.solve.max_outer = number(value, "a non-negative integer")?,
            "tol_cg" => self.solve.tol_cg = f(value)?,
            "max_iter" => {
                self.solve.max_iter = match value {
                    "auto" => None,
                    _ => Some(number(value, "a non-negative integer or auto")?),
                }
            }
            "cold_start" => self.solve.cold_start = boolean(value)?,
            "grid.h" => self.h = f(value)?,
            "lateral_bc" => {
                self.lateral_bc = Some(match value {
                    "dirichlet" => LateralBc::Dirichlet,
                    "periodic" => LateralBc::Periodic,
                    _ => return Err(format!("expected dirichlet or periodic, got {value:?}")),
                })
            }
            "slab.a" => self.slab_a = f(value)?,
            "slab.width" => self.slab_width = f(value)?,
            "square.side" => self.square_side = f(value)?,
            "custom.width" => self.custom_width = f(value)?,
            "custom.height" => self.custom_height = f(value)?,
            "custom.exterior" => {
                self.custom_exterior = match value {
                    "upper_half" => Exterior::UpperHalf,
                    "lower_half" => Exterior::LowerHalf,
                    "disk" => Exterior::Disk,
                    _ => return Err(format!("expected upper_half, lower_half or disk, got {value:?}")),
                }
            }
            "custom.disk_radius" => self.custom_disk_radius = f(value)?,
            "v.const" => self.v.constant = f(value)?,
            "v.amplitude" => self.v.amplitude = f(value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err("output_dir must not be empty".into());
                }
                self.output_dir = PathBuf::from(value)
            }
            "certificates" => {
                self.certificates = match value {
                    "all" => Certificate::ALL.to_vec(),
                    "none" | "" => Vec::new(),
                    _ => {
                        let mut list = value
                            .split(',')
                            .map(|s| s.trim().parse::<Certificate>())
                            .collect::<Result<Vec<_>, _>>()?;
                        list.sort();
                        list.dedup();
                        list
                    }
                }
            }
            "seed" => self.seed = number(value, "a non-negative integer")?,
            "tol_cert" => self.tol_cert = f(value)?,
            "holder.delta" => self.holder_delta = f(value)?,
            "residual.envelope" => self.residual_envelope = f(value)?,
            "curvature.window" => self.curvature_window = number(value, "a non-negative integer")?,
            "almost_min.c_max" => self.almost_min_c_max = f(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Invariant violations, each tagged with the key it is reported against.
    fn check(&self) -> Result<(), (&'static str, String)> {
        let positive = |key: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err((key, format!("{key} must be positive, got {x}")))
            }
        };
        if !(self.solve.beta >= 0.0 && self.solve.beta.is_finite()) {
            return Err(("beta", format!("beta must be finite and >= 0, got {}", self.solve.beta)));
        }
        positive("eps0", self.solve.eps0)?;
        if let Err(e) = self.solve.validate() {
            let key = ["eps_min", "rho", "tol_outer", "max_outer", "tol_cg", "max_iter"]
                .into_iter()
                .find(|k| e.to_string().contains(k))
                .unwrap_or("eps_min");
            return Err((key, e.to_string()));
        }
        positive("grid.h", self.h)?;
        match (self.preset, self.effective_lateral_bc()) {
            (Preset::Slab, LateralBc::Dirichlet) => {
                return Err(("lateral_bc", "the slab preset requires a periodic lateral boundary".into()))
            }
            (Preset::SquareSymmetric, LateralBc::Periodic) => {
                return Err(("lateral_bc", "the square_symmetric preset requires a dirichlet lateral boundary".into()))
            }
            _ => {}
        }
        positive("slab.a", self.slab_a)?;
        positive("slab.width", self.slab_width)?;
        positive("square.side", self.square_side)?;
        positive("custom.width", self.custom_width)?;
        positive("custom.height", self.custom_height)?;
        positive("custom.disk_radius", self.custom_disk_radius)?;
        if !(self.v.constant.is_finite() && self.v.amplitude.is_finite()) {
            return Err(("v.const", "boundary data must be finite".into()));
        }
        if self.v.constant - self.v.amplitude.abs() <= 0.0 {
            return Err(("v.amplitude", "boundary data must stay positive: need v.const > |v.amplitude|".into()));
        }
        if self.solve.eps0 >= self.v.constant - self.v.amplitude.abs() {
            return Err(("eps0", format!(
                "eps0 = {} must be below min v = {}",
                self.solve.eps0,
                self.v.constant - self.v.amplitude.abs()
            )));
        }
        if !(self.tol_cert >= 0.0 && self.tol_cert.is_finite()) {
            return Err(("tol_cert", format!("tol_cert must be finite and >= 0, got {}", self.tol_cert)));
        }
        positive("holder.delta", self.holder_delta)?;
        positive("residual.envelope", self.residual_envelope)?;
        if self.curvature_window < 2 {
            return Err(("curvature.window", format!("curvature.window must be >= 2, got {}", self.curvature_window)));
        }
        positive("almost_min.c_max", self.almost_min_c_max)?;
        Ok(())
    }

    /// Canonical text form; [`parse_config`] reads it back to an equal value.
    pub fn to_text(&self) -> String {
        let s = &self.solve;
        let mut lines = vec![
            format!("preset = {}", preset_name(self.preset)),
            format!("beta = {}", s.beta),
            format!("eps0 = {}", s.eps0),
            format!("eps_min = {}", s.eps_min),
            format!("rho = {}", s.rho),
            format!("tol_outer = {}", s.tol_outer),
            format!("max_outer = {}", s.max_outer),
            format!("tol_cg = {}", s.tol_cg),
            format!("max_iter = {}", s.max_iter.map_or("auto".to_string(), |n| n.to_string())),
            format!("cold_start = {}", s.cold_start),
            format!("grid.h = {}", self.h),
        ];
        if let Some(bc) = self.lateral_bc {
            lines.push(format!("lateral_bc = {}", bc_name(bc)));
        }
        let certs: Vec<&str> = self.certificates.iter().map(|c| c.name()).collect();
        lines.extend([
            format!("slab.a = {}", self.slab_a),
            format!("slab.width = {}", self.slab_width),
            format!("square.side = {}", self.square_side),
            format!("custom.width = {}", self.custom_width),
            format!("custom.height = {}", self.custom_height),
            format!("custom.exterior = {}", exterior_name(self.custom_exterior)),
            format!("custom.disk_radius = {}", self.custom_disk_radius),
            format!("v.const = {}", self.v.constant),
            format!("v.amplitude = {}", self.v.amplitude),
            format!("output_dir = {}", self.output_dir.display()),
            format!("certificates = {}", if certs.is_empty() { "none".to_string() } else { certs.join(",") }),
            format!("seed = {}", self.seed),
            format!("tol_cert = {}", self.tol_cert),
            format!("holder.delta = {}", self.holder_delta),
            format!("residual.envelope = {}", self.residual_envelope),
            format!("curvature.window = {}", self.curvature_window),
            format!("almost_min.c_max = {}", self.almost_min_c_max),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Parses `key = value` lines; `#` starts a comment. Unset keys keep their
/// defaults. Every error names the line it comes from.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError { line: Some(line), message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected \"key = value\", got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.get(key) {
            return Err(err(format!("duplicate key {key:?} (first set on line {first})")));
        }
        config.set(key, value).map_err(|m| err(format!("{key}: {m}")))?;
        seen.insert(key.to_string(), line);
    }
    config.check().map_err(|(key, message)| ConfigError { line: seen.get(key).copied(), message })?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_example() {
        let c = parse_config("beta = 1.0\ngrid.h = 0.0078125\npreset = slab\nslab.a = 0.5").unwrap();
        assert_eq!(c.preset, Preset::Slab);
        assert_eq!(c.h, 1.0 / 128.0);
        assert_eq!(c.slab_a, 0.5);
        assert_eq!(c.effective_lateral_bc(), LateralBc::Periodic);
    }

    #[test]
    fn negative_beta_names_its_line() {
        let e = parse_config("# comment\nbeta = -1").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("beta"));
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.preset, Preset::SquareSymmetric);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn unknown_key_and_type_mismatch() {
        let e = parse_config("beta = 1\nbogus = 3").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("unknown key"));
        let e = parse_config("\n\nmax_outer = many").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(parse_config("beta 1").is_err());
        assert!(parse_config("beta = 1\nbeta = 2").unwrap_err().message.contains("duplicate"));
    }

    #[test]
    fn preset_consistency() {
        let e = parse_config("preset = slab\nlateral_bc = dirichlet").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(parse_config("preset = square_symmetric\nlateral_bc = periodic").is_err());
        assert!(parse_config("preset = custom\nlateral_bc = periodic").is_ok());
    }

    #[test]
    fn cross_field_invariants() {
        let e = parse_config("eps0 = 0.1\neps_min = 0.2").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("v.const = 0.4").unwrap_err();
        assert!(e.message.contains("eps0"));
        assert_eq!(e.line, None);
    }

    #[test]
    fn text_round_trip() {
        let text = "preset = custom\nbeta = 0.3\nmax_iter = 77\nlateral_bc = periodic\ncustom.exterior = disk\n\
                    certificates = robin, optimality\nseed = 9\noutput_dir = runs/a\nv.amplitude = 0.1";
        let c = parse_config(text).unwrap();
        assert_eq!(c.certificates, vec![Certificate::Optimality, Certificate::Robin]);
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(parse_config(&d.to_text()).unwrap(), d);
    }
}
