//! Run configuration: a single TOML file with strict key checking, plus
//! command-line overrides. Every run is fully validated before any
//! computation starts.

use ckyform::forms::default_l;
use ckyform::support::SupportSurface;
use ckyform::surface::{CapProfile, ParamSurface, SurfaceKind};
use ckyform::SpacetimeId;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `minkowski`, `ds`, or `ads`.
    pub spacetime: String,
    pub seed: u64,
    pub order: usize,
    /// Worker threads for suite items; 0 means all cores.
    pub workers: usize,
    /// Sample count for pointwise suites.
    pub points: usize,
    /// Zero the per-item wall-clock in the report (byte-stable reruns).
    pub no_timing: bool,
    pub surface: SurfaceConfig,
    pub form: FormConfig,
    pub flow: FlowCfg,
    pub suite: SuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spacetime: "minkowski".into(),
            seed: 7,
            order: 16,
            workers: 0,
            points: 100,
            no_timing: false,
            surface: SurfaceConfig::default(),
            form: FormConfig::default(),
            flow: FlowCfg::default(),
            suite: SuiteConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    /// `sphere`, `cap`, `ellipsoidal_cap`, `perturbed_cap`, `disk`,
    /// `ellipsoid`, or `graph`.
    pub kind: String,
    /// Cap or sphere radius; for caps a fraction of the support radius
    /// when `rho_fraction` is set instead.
    pub rho: Option<f64>,
    pub rho_fraction: Option<f64>,
    pub axis: usize,
    /// Perturbation amplitude of the non-round cap profiles.
    pub eps: f64,
    /// Radial-bump frequency.
    pub freq: f64,
    /// Explicit cap height overriding the orthogonal value.
    pub height: Option<f64>,
    pub shift: [f64; 3],
    pub semi: [f64; 3],
    pub center: [f64; 3],
    pub radius: f64,
    pub z0: f64,
    pub amp: f64,
    pub kx: f64,
    pub ky: f64,
    pub time_amp: f64,
    pub flip_orientation: bool,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig {
            kind: "cap".into(),
            rho: None,
            rho_fraction: Some(0.5),
            axis: 1,
            eps: 0.05,
            freq: 3.0,
            height: None,
            shift: [0.0; 3],
            semi: [1.0, 1.0, 0.5],
            center: [0.0; 3],
            radius: 0.8,
            z0: 0.5,
            amp: 0.0,
            kx: 0.0,
            ky: 0.0,
            time_amp: 0.0,
            flip_orientation: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormConfig {
    /// Direction index of the composite form.
    pub direction: usize,
    /// Support parameter; defaults to `cosh(1)` (ads) or `cos(1/2)` (ds).
    pub l: Option<f64>,
}

impl Default for FormConfig {
    fn default() -> Self {
        FormConfig {
            direction: 1,
            l: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowCfg {
    /// `constant_one` or `xi_over_h`.
    pub phi: String,
    pub step: f64,
    pub max_steps: usize,
    pub slice_tolerance: f64,
    /// Backward-transport distance used to seed the run off the slice.
    pub start_offset: f64,
}

impl Default for FlowCfg {
    fn default() -> Self {
        FlowCfg {
            phi: "constant_one".into(),
            step: 1e-3,
            max_steps: 200,
            slice_tolerance: 1e-6,
            start_offset: 0.2,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Item names whose failure is expected; their pass flag is inverted.
    pub expect_fail: Vec<String>,
}

/// A fully resolved run: parsed spacetime, support, composite parameter,
/// and surface.
pub struct Resolved {
    pub config: RunConfig,
    pub spacetime: SpacetimeId,
    pub l: f64,
    pub direction: usize,
    pub surface: ParamSurface,
}

pub fn resolve(config: RunConfig) -> Result<Resolved, String> {
    let spacetime = SpacetimeId::parse(&config.spacetime)
        .ok_or_else(|| format!("unknown spacetime {:?}", config.spacetime))?;
    let l = config.form.l.unwrap_or_else(|| default_l(spacetime));
    let direction = config.form.direction;
    if !(1..=3).contains(&direction) {
        return Err(format!("form.direction must be 1..=3, got {direction}"));
    }
    if config.order < 2 {
        return Err(format!("order must be at least 2, got {}", config.order));
    }
    let support = SupportSurface::for_spacetime(spacetime, l).map_err(|e| e.to_string())?;
    let sc = &config.surface;
    if !(1..=3).contains(&sc.axis) {
        return Err(format!("surface.axis must be 1..=3, got {}", sc.axis));
    }
    let r_s = support.slice_radius(spacetime);
    let rho = sc
        .rho
        .or(sc.rho_fraction.map(|f| f * r_s))
        .unwrap_or(0.5 * r_s);
    let kind = match sc.kind.as_str() {
        "sphere" => SurfaceKind::Sphere {
            rho,
            center: sc.center,
        },
        "ellipsoid" => SurfaceKind::Ellipsoid {
            semi: sc.semi,
            center: sc.center,
        },
        "disk" => SurfaceKind::Disk { axis: sc.axis },
        "cap" => SurfaceKind::Cap {
            rho,
            axis: sc.axis,
            height: sc.height,
            shift: sc.shift,
            profile: CapProfile::Round,
        },
        "ellipsoidal_cap" => SurfaceKind::Cap {
            rho,
            axis: sc.axis,
            height: sc.height,
            shift: sc.shift,
            profile: CapProfile::Angular { eps: sc.eps },
        },
        "perturbed_cap" => SurfaceKind::Cap {
            rho,
            axis: sc.axis,
            height: sc.height,
            shift: sc.shift,
            profile: CapProfile::RadialBump {
                eps: sc.eps,
                freq: sc.freq,
            },
        },
        "graph" => SurfaceKind::Graph {
            radius: sc.radius,
            z0: sc.z0,
            amp: sc.amp,
            kx: sc.kx,
            ky: sc.ky,
            time_amp: sc.time_amp,
        },
        other => return Err(format!("unknown surface kind {other:?}")),
    };
    let needs_support = matches!(kind, SurfaceKind::Cap { .. } | SurfaceKind::Disk { .. });
    let surface = ParamSurface {
        spacetime,
        kind,
        t0: 0.0,
        flip_orientation: sc.flip_orientation,
        support: needs_support.then_some(support),
    };
    surface.validate().map_err(|e| e.to_string())?;
    match config.flow.phi.as_str() {
        "constant_one" | "xi_over_h" => {}
        other => return Err(format!("unknown phi mode {other:?}")),
    }
    Ok(Resolved {
        config,
        spacetime,
        l,
        direction,
        surface,
    })
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
}
