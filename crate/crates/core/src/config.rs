//! Run configuration files: INI-style `key = value` lines grouped under
//! `[section]` headers, `#` or `;` comments.
//!
//! ```text
//! [model]
//! system = swe1d
//!
//! [grid]
//! nx = 128
//! x_min = 0
//! x_max = 1
//!
//! [initial]
//! name = dambreak1d
//!
//! [time]
//! t_end = 0.2
//! ```
//!
//! Relative paths (weight bundles, initial snapshots, the output directory)
//! resolve against the directory of the config file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::equations::EquationModel;
use crate::error::{Error, Result};
use crate::field::{BcKind, BoundaryCondition};
use crate::flux::{FluxKind, FluxScheme};
use crate::initial::InitialCondition;
use crate::solver::Schedule;
use crate::state::System;
use crate::time_integration::{StepControl, StepMode, Stepper, DEFAULT_CFL};

#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    Line { nx: usize, x_min: f64, x_max: f64 },
    Plane { nx: usize, ny: usize, x: (f64, f64), y: (f64, f64) },
    /// Logically rectangular sphere grid; the radius comes from the model.
    Sphere { nx: usize, ny: usize },
}

impl GridSpec {
    pub fn ncells(&self) -> usize {
        match self {
            GridSpec::Line { nx, .. } => *nx,
            GridSpec::Plane { nx, ny, .. } | GridSpec::Sphere { nx, ny } => nx * ny,
        }
    }

    /// The same domain with `nx` cells along x. 2D grids keep their aspect ratio.
    pub fn with_resolution(&self, n: usize) -> GridSpec {
        match self {
            GridSpec::Line { x_min, x_max, .. } => GridSpec::Line {
                nx: n,
                x_min: *x_min,
                x_max: *x_max,
            },
            GridSpec::Plane { nx, ny, x, y } => GridSpec::Plane {
                nx: n,
                ny: ((n * ny) as f64 / *nx as f64).round().max(1.0) as usize,
                x: *x,
                y: *y,
            },
            GridSpec::Sphere { nx, ny } => GridSpec::Sphere {
                nx: n,
                ny: ((n * ny) as f64 / *nx as f64).round().max(1.0) as usize,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Named(InitialCondition),
    /// Start from a snapshot on the same grid.
    FromFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReconstructionSpec {
    FirstOrder,
    Minmod { literal_sign: bool },
    Coefficients(PathBuf),
    BoundaryStates(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BedSpec {
    Flat,
    Random { amplitude: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub prefix: String,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: EquationModel,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub bc: BoundaryCondition,
    pub flux: FluxScheme,
    pub reconstruction: ReconstructionSpec,
    pub stepper: Stepper,
    pub control: StepControl,
    pub output: OutputSpec,
    pub bed: BedSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        parse_config_in(&text, base)
    }
}

/// Parse a config whose relative paths are taken as given.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new(""))
}

/// Parse a config, resolving relative paths against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let mut doc = Document::parse(text)?;
    let cfg = build(&mut doc, base)?;
    doc.reject_unused()?;
    Ok(cfg)
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

const SECTIONS: [&str; 8] = ["model", "grid", "initial", "boundary", "scheme", "time", "output", "bed"];

struct Document {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
    missing: Vec<String>,
}

impl Document {
    fn parse(text: &str) -> Result<Document> {
        let mut sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config_at(line, format!("unterminated section header '{content}'")))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(Error::config_at(
                        line,
                        format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                    ));
                }
                if sections.contains_key(&name) {
                    return Err(Error::config_at(line, format!("section [{name}] appears twice")));
                }
                sections.insert(name.clone(), (line, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config_at(line, format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::config_at(line, "empty key"));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| Error::config_at(line, format!("key '{key}' outside any section")))?;
            let entries = &mut sections.get_mut(section).expect("section registered").1;
            if entries.contains_key(&key) {
                return Err(Error::config_at(line, format!("duplicate key '{key}' in [{section}]")));
            }
            let value = unquote(value.trim()).to_string();
            entries.insert(key, Entry { value, line, used: false });
        }
        Ok(Document {
            sections,
            missing: Vec::new(),
        })
    }

    fn entry(&mut self, section: &str, key: &str) -> Option<&mut Entry> {
        let e = self.sections.get_mut(section)?.1.get_mut(key)?;
        e.used = true;
        Some(e)
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.sections.get(section).is_some_and(|s| s.1.contains_key(key))
    }

    fn get<T>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        e.value
            .parse::<T>()
            .map(Some)
            .map_err(|err| Error::config_at(e.line, format!("invalid value '{}' for {key}: {err}", e.value)))
    }

    fn or<T>(&mut self, section: &str, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    /// Required value; absent keys are collected and reported together.
    fn need<T>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let v = self.get(section, key)?;
        if v.is_none() {
            self.missing.push(format!("{section}.{key}"));
        }
        Ok(v)
    }

    fn flag(&mut self, section: &str, key: &str, default: bool) -> Result<bool> {
        let Some(e) = self.entry(section, key) else {
            return Ok(default);
        };
        match e.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(Error::config_at(e.line, format!("invalid boolean '{}' for {key}", e.value))),
        }
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section)?.1.get(key).map(|e| e.line)
    }

    fn section_line(&self, section: &str) -> Option<usize> {
        self.sections.get(section).map(|s| s.0)
    }

    fn check_missing(&mut self) -> Result<()> {
        if self.missing.is_empty() {
            return Ok(());
        }
        let list = std::mem::take(&mut self.missing).join(", ");
        Err(Error::config(format!("missing required keys: {list}")))
    }

    fn reject_unused(&self) -> Result<()> {
        let unused = self
            .sections
            .iter()
            .flat_map(|(name, (_, entries))| entries.iter().map(move |(k, e)| (name, k, e)))
            .filter(|(_, _, e)| !e.used)
            .min_by_key(|(_, _, e)| e.line);
        match unused {
            Some((section, key, e)) => Err(Error::config_at(e.line, format!("unknown key '{key}' in [{section}]"))),
            None => Ok(()),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim_start();
    if trimmed.starts_with('#') || trimmed.starts_with(';') {
        return "";
    }
    // Inline comments need whitespace before the marker so paths may contain '#'.
    match line.find(" #").or_else(|| line.find("\t#")) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn unquote(v: &str) -> &str {
    for q in ['"', '\''] {
        if let Some(inner) = v.strip_prefix(q).and_then(|r| r.strip_suffix(q)) {
            return inner;
        }
    }
    v
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn build(doc: &mut Document, base: &Path) -> Result<RunConfig> {
    let system: Option<System> = doc.need("model", "system")?;
    let nx: Option<usize> = doc.need("grid", "nx")?;
    let two_d = system.is_some_and(|s| s.grid_dims() == 2);
    let ny: Option<usize> = if two_d { doc.need("grid", "ny")? } else { None };
    let ic_name: Option<String> = doc.need("initial", "name")?;
    let t_end: Option<f64> = doc.need("time", "t_end")?;
    doc.check_missing()?;
    let (system, nx, ic_name, t_end) = (system.unwrap(), nx.unwrap(), ic_name.unwrap(), t_end.unwrap());

    let model = model_section(doc, system)?;
    let grid = grid_section(doc, system, nx, ny)?;
    let bed = bed_section(doc)?;
    let initial = initial_section(doc, base, &ic_name)?;
    let bc = boundary_section(doc, system)?;
    let (flux, reconstruction, stepper) = scheme_section(doc, base)?;
    let control = time_section(doc, t_end)?;
    let output = output_section(doc, base)?;

    if bed != BedSpec::Flat && system == System::SweSphere {
        return Err(Error::Config {
            line: doc.section_line("bed"),
            msg: "bathymetry is not supported on the sphere".into(),
        });
    }
    if bed != BedSpec::Flat && !system.is_swe() {
        return Err(Error::Config {
            line: doc.section_line("bed"),
            msg: format!("a bed only applies to shallow water systems, not {system}"),
        });
    }
    Ok(RunConfig {
        model,
        grid,
        initial,
        bc,
        flux,
        reconstruction,
        stepper,
        control,
        output,
        bed,
    })
}

fn model_section(doc: &mut Document, system: System) -> Result<EquationModel> {
    let units_line = doc.line_of("model", "units");
    let units: String = doc.or("model", "units", "earth".to_string())?;
    let mut model = match (units.to_ascii_lowercase().as_str(), system) {
        ("earth", System::SweSphere) => EquationModel::earth_nondimensional(),
        ("earth" | "plain", _) => EquationModel::new(system),
        (other, _) => {
            return Err(Error::Config {
                line: units_line,
                msg: format!("unknown units '{other}' (expected earth or plain)"),
            })
        }
    };
    model.g = doc.or("model", "g", model.g)?;
    model.gamma = doc.or("model", "gamma", model.gamma)?;
    model.omega = doc.or("model", "omega", model.omega)?;
    model.radius = doc.or("model", "radius", model.radius)?;
    model.manning_n = doc.or("model", "manning_n", model.manning_n)?;
    model.strict_positivity = doc.flag("model", "strict_positivity", model.strict_positivity)?;
    model.validate_parameters().map_err(|e| with_line(e, doc.section_line("model")))?;
    Ok(model)
}

fn grid_section(doc: &mut Document, system: System, nx: usize, ny: Option<usize>) -> Result<GridSpec> {
    let line = doc.section_line("grid");
    if nx == 0 || ny == Some(0) {
        return Err(Error::Config {
            line,
            msg: "grid needs at least one cell per direction".into(),
        });
    }
    if system == System::SweSphere {
        for key in ["x_min", "x_max", "y_min", "y_max"] {
            if let Some(l) = doc.line_of("grid", key) {
                return Err(Error::config_at(l, format!("{key} does not apply to a sphere grid")));
            }
        }
        return Ok(GridSpec::Sphere { nx, ny: ny.unwrap() });
    }
    let x = (doc.or("grid", "x_min", 0.0)?, doc.or("grid", "x_max", 1.0)?);
    let spec = if system.grid_dims() == 1 {
        for key in ["ny", "y_min", "y_max"] {
            if let Some(l) = doc.line_of("grid", key) {
                return Err(Error::config_at(l, format!("{key} does not apply to a 1D system")));
            }
        }
        GridSpec::Line {
            nx,
            x_min: x.0,
            x_max: x.1,
        }
    } else {
        let y = (doc.or("grid", "y_min", 0.0)?, doc.or("grid", "y_max", 1.0)?);
        if !(y.1 > y.0) {
            return Err(Error::Config {
                line,
                msg: format!("y_max {} must exceed y_min {}", y.1, y.0),
            });
        }
        GridSpec::Plane {
            nx,
            ny: ny.unwrap(),
            x,
            y,
        }
    };
    if !(x.1 > x.0) {
        return Err(Error::Config {
            line,
            msg: format!("x_max {} must exceed x_min {}", x.1, x.0),
        });
    }
    Ok(spec)
}

fn initial_section(doc: &mut Document, base: &Path, name: &str) -> Result<InitialSpec> {
    let name_line = doc.line_of("initial", "name");
    if name.eq_ignore_ascii_case("from_file") {
        let file: Option<String> = doc.need("initial", "file")?;
        doc.check_missing()?;
        return Ok(InitialSpec::FromFile(resolve(base, &file.unwrap())));
    }
    let mut ic = InitialCondition::default_for(name).map_err(|e| with_line(e, name_line))?;
    match &mut ic {
        InitialCondition::DamBreak1D { h_left, h_right, x0 } => {
            *h_left = doc.or("initial", "h_left", *h_left)?;
            *h_right = doc.or("initial", "h_right", *h_right)?;
            *x0 = doc.or("initial", "x0", *x0)?;
        }
        InitialCondition::Gaussian2D {
            sigma,
            center,
            base,
            amplitude,
        } => {
            *sigma = doc.or("initial", "sigma", *sigma)?;
            center.0 = doc.or("initial", "center_x", center.0)?;
            center.1 = doc.or("initial", "center_y", center.1)?;
            *base = doc.or("initial", "base", *base)?;
            *amplitude = doc.or("initial", "amplitude", *amplitude)?;
        }
        InitialCondition::Sod1D { x0 } => *x0 = doc.or("initial", "x0", *x0)?,
        InitialCondition::Euler2DRiemann { split } => {
            split.0 = doc.or("initial", "split_x", split.0)?;
            split.1 = doc.or("initial", "split_y", split.1)?;
        }
        InitialCondition::RossbyHaurwitz => {}
        InitialCondition::LakeAtRest { level } => *level = doc.or("initial", "level", *level)?,
    }
    Ok(InitialSpec::Named(ic))
}

fn boundary_section(doc: &mut Document, system: System) -> Result<BoundaryCondition> {
    let kind_line = doc.line_of("boundary", "kind");
    let kind: BcKind = doc
        .get("boundary", "kind")
        .map_err(|e| with_line(e, kind_line))?
        .unwrap_or(BcKind::Periodic);
    let mut bc = BoundaryCondition::uniform(kind);
    bc.left = doc.or("boundary", "left", bc.left)?;
    bc.right = doc.or("boundary", "right", bc.right)?;
    let sides_2d = ["bottom", "top"];
    if system.grid_dims() == 1 {
        for key in sides_2d {
            if let Some(l) = doc.line_of("boundary", key) {
                return Err(Error::config_at(l, format!("{key} does not apply to a 1D system")));
            }
        }
    } else {
        bc.bottom = doc.or("boundary", "bottom", bc.bottom)?;
        bc.top = doc.or("boundary", "top", bc.top)?;
    }
    if system == System::SweSphere && bc != BoundaryCondition::periodic() {
        return Err(Error::Config {
            line: doc.section_line("boundary"),
            msg: "the sphere grid is closed; boundary kinds other than periodic do not apply".into(),
        });
    }
    bc.validate().map_err(|e| with_line(e, doc.section_line("boundary")))?;
    Ok(bc)
}

fn scheme_section(doc: &mut Document, base: &Path) -> Result<(FluxScheme, ReconstructionSpec, Stepper)> {
    let kind: FluxKind = doc.or("scheme", "flux", FluxKind::Rusanov)?;
    let mut flux = FluxScheme::new(kind);
    flux.entropy_fix = doc.flag("scheme", "entropy_fix", false)?;

    let recon_line = doc.line_of("scheme", "reconstruction");
    let recon: String = doc.or("scheme", "reconstruction", "minmod".to_string())?;
    let bundle_line = doc.line_of("scheme", "bundle");
    let bundle: Option<String> = doc.get("scheme", "bundle")?;
    let needs_bundle = |b: Option<String>| {
        b.map(|p| resolve(base, &p)).ok_or_else(|| Error::Config {
            line: recon_line,
            msg: format!("reconstruction '{recon}' needs a bundle = <weights file> key"),
        })
    };
    let reconstruction = match recon.to_ascii_lowercase().as_str() {
        "order1" | "first_order" | "none" => ReconstructionSpec::FirstOrder,
        "minmod" => ReconstructionSpec::Minmod { literal_sign: false },
        "minmod-literal" | "minmod_literal" => ReconstructionSpec::Minmod { literal_sign: true },
        "coeff" | "coefficients" => ReconstructionSpec::Coefficients(needs_bundle(bundle.clone())?),
        "nn" | "boundary_states" => ReconstructionSpec::BoundaryStates(needs_bundle(bundle.clone())?),
        other => {
            return Err(Error::Config {
                line: recon_line,
                msg: format!("unknown reconstruction '{other}' (expected order1, minmod, minmod-literal, coeff or nn)"),
            })
        }
    };
    if bundle.is_some()
        && !matches!(
            reconstruction,
            ReconstructionSpec::Coefficients(_) | ReconstructionSpec::BoundaryStates(_)
        )
    {
        return Err(Error::Config {
            line: bundle_line,
            msg: format!("bundle is only read by the coeff and nn reconstructions, not '{recon}'"),
        });
    }
    let stepper: Stepper = doc.or("scheme", "stepper", Stepper::TvdRk3)?;
    Ok((flux, reconstruction, stepper))
}

fn time_section(doc: &mut Document, t_end: f64) -> Result<StepControl> {
    let mode_line = doc.line_of("time", "mode");
    let mode: String = doc.or("time", "mode", "adaptive".to_string())?;
    let cfl = doc.or("time", "cfl", DEFAULT_CFL)?;
    let dt_max = doc.or("time", "dt_max", f64::INFINITY)?;
    let fixed_line = doc.line_of("time", "fixed_dt");
    let mode = match mode.to_ascii_lowercase().as_str() {
        "adaptive" => {
            if let Some(l) = fixed_line {
                return Err(Error::config_at(l, "fixed_dt needs mode = fixed"));
            }
            if let Some(l) = doc.line_of("time", "scale_with_resolution") {
                return Err(Error::config_at(l, "scale_with_resolution needs mode = fixed"));
            }
            StepMode::Adaptive
        }
        "fixed" => {
            let dt: Option<f64> = doc.need("time", "fixed_dt")?;
            doc.check_missing()?;
            StepMode::Fixed {
                dt: dt.unwrap(),
                scale_with_resolution: doc.flag("time", "scale_with_resolution", false)?,
            }
        }
        other => {
            return Err(Error::Config {
                line: mode_line,
                msg: format!("unknown time mode '{other}' (expected adaptive or fixed)"),
            })
        }
    };
    let control = StepControl {
        cfl,
        mode,
        t_end,
        dt_max,
    };
    let line = match control.validate() {
        Ok(()) => return Ok(control),
        Err(_) if !(cfl > 0.0 && cfl <= 1.0) => doc.line_of("time", "cfl"),
        Err(_) if !(dt_max > 0.0) => doc.line_of("time", "dt_max"),
        Err(_) if matches!(mode, StepMode::Fixed { .. }) && fixed_line.is_some() => fixed_line,
        Err(_) => doc.line_of("time", "t_end"),
    };
    Err(with_line(control.validate().unwrap_err(), line))
}

fn output_section(doc: &mut Document, base: &Path) -> Result<OutputSpec> {
    let dir: String = doc.or("output", "dir", "out".to_string())?;
    let prefix: String = doc.or("output", "prefix", "fvx".to_string())?;
    if prefix.is_empty() || prefix.contains(['/', '\\']) {
        return Err(Error::Config {
            line: doc.line_of("output", "prefix"),
            msg: format!("prefix '{prefix}' must be a plain file name stem"),
        });
    }
    let snapshot_every_time: Option<f64> = doc.get("output", "snapshot_every_time")?;
    if snapshot_every_time.is_some_and(|t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::Config {
            line: doc.line_of("output", "snapshot_every_time"),
            msg: "snapshot_every_time must be positive".into(),
        });
    }
    let schedule = Schedule {
        diagnostics_every: Some(doc.or("output", "diagnostics_every", 10)?),
        snapshot_every_steps: doc.get("output", "snapshot_every_steps")?,
        snapshot_every_time,
    };
    Ok(OutputSpec {
        dir: resolve(base, &dir),
        prefix,
        schedule,
    })
}

fn bed_section(doc: &mut Document) -> Result<BedSpec> {
    let kind_line = doc.line_of("bed", "kind");
    let kind: String = doc.or("bed", "kind", "flat".to_string())?;
    match kind.to_ascii_lowercase().as_str() {
        "flat" => {
            for key in ["amplitude", "seed"] {
                if doc.has("bed", key) {
                    let l = doc.line_of("bed", key).unwrap();
                    return Err(Error::config_at(l, format!("{key} needs kind = random")));
                }
            }
            Ok(BedSpec::Flat)
        }
        "random" => Ok(BedSpec::Random {
            amplitude: doc.or("bed", "amplitude", 0.1)?,
            seed: doc.or("bed", "seed", 0)?,
        }),
        other => Err(Error::Config {
            line: kind_line,
            msg: format!("unknown bed kind '{other}' (expected flat or random)"),
        }),
    }
}

/// Give a line-less config error the line it came from.
fn with_line(e: Error, line: Option<usize>) -> Error {
    match e {
        Error::Config { line: None, msg } => Error::Config { line, msg },
        other => other,
    }
}
