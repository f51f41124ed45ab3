//! Free Gaussian packets, the collision probability W_c(t), and control-versus-duration sweeps.

use std::f64::consts::PI;

use crate::cross_sections::{control_depth, PacketEngine};
use crate::error::{check_positive, Error, Result};
use crate::grid::trapezoid;
use crate::superposition::PacketSpec;
use crate::units::{au_to_fs, Masses};

/// Free 1D Gaussian packet with momentum amplitude ∝ exp(−((p − p₀)/Δ)²/2).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GaussianPacket1D {
    pub mass: f64,
    pub momentum: f64,
    pub width: f64,
    /// The packet is narrowest at t = −focus_offset.
    pub focus_offset: f64,
    /// Center at t = 0 (bohr).
    pub center: f64,
}

impl GaussianPacket1D {
    pub fn validate(&self) -> Result<()> {
        check_positive("packet mass", self.mass)?;
        check_positive("packet width", self.width)
    }

    pub fn center_at(&self, t: f64) -> f64 {
        if self.mass.is_infinite() {
            return self.center;
        }
        self.center + self.momentum / self.mass * t
    }

    /// 1/(2Δ²) + Δ²(t + τ_d)²/(2m²)
    pub fn variance_at(&self, t: f64) -> f64 {
        let base = 0.5 / (self.width * self.width);
        if self.mass.is_infinite() {
            return base;
        }
        let s = self.width * (t + self.focus_offset) / self.mass;
        base + 0.5 * s * s
    }

    /// Electron and ion packets of a product-packet state, both centered at the origin at t = 0.
    pub fn pair_from_spec(spec: &PacketSpec, masses: &Masses) -> (Self, Self) {
        (
            GaussianPacket1D {
                mass: 1.0,
                momentum: spec.electron_momentum,
                width: spec.electron_width,
                focus_offset: spec.focus_offset,
                center: 0.0,
            },
            GaussianPacket1D {
                mass: masses.ion(),
                momentum: spec.ion_momentum,
                width: spec.ion_width,
                focus_offset: 0.0,
                center: 0.0,
            },
        )
    }
}

/// Position density at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDensity {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianDensity {
    pub fn eval(&self, x: f64) -> f64 {
        let z = x - self.mean;
        (-0.5 * z * z / self.variance).exp() / (2.0 * PI * self.variance).sqrt()
    }
}

pub fn propagate_density(packet: &GaussianPacket1D, t: f64) -> GaussianDensity {
    GaussianDensity {
        mean: packet.center_at(t),
        variance: packet.variance_at(t),
    }
}

/// ∫ ρ_e(z, t) ρ_I(z, t) dz
pub fn contact_overlap(elec: &GaussianPacket1D, ion: &GaussianPacket1D, t: f64) -> f64 {
    let a = propagate_density(elec, t);
    let b = propagate_density(ion, t);
    GaussianDensity {
        mean: a.mean - b.mean,
        variance: a.variance + b.variance,
    }
    .eval(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum CollisionMeasure {
    /// W_c ∝ ⟨δ(x − y)⟩
    #[default]
    Density,
    /// W_c ∝ ⟨δ(x − y)⟩²
    SquaredDensity,
}

impl std::str::FromStr for CollisionMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(CollisionMeasure::Density),
            "squared" | "squared_density" => Ok(CollisionMeasure::SquaredDensity),
            other => Err(Error::Config(format!("unknown collision measure '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CollisionProfile {
    /// Times (au).
    pub times: Vec<f64>,
    /// W_c(t), normalized to unit area.
    pub values: Vec<f64>,
    pub mean_time: f64,
    /// ΔW_c (au time).
    pub duration: f64,
    /// W_c at the window edges is not negligible.
    pub window_limited: bool,
}

impl CollisionProfile {
    pub fn duration_fs(&self) -> f64 {
        au_to_fs(self.duration)
    }
}

const NO_COLLISION: f64 = 1e-30;
const EDGE_FRACTION: f64 = 1e-3;

pub fn collision_probability(
    elec: &GaussianPacket1D,
    ion: &GaussianPacket1D,
    times: &[f64],
    measure: CollisionMeasure,
) -> Result<CollisionProfile> {
    elec.validate()?;
    ion.validate()?;
    if times.len() < 3 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be increasing with at least 3 points".into()));
    }
    let raw: Vec<f64> = times
        .iter()
        .map(|&t| {
            let o = contact_overlap(elec, ion, t);
            match measure {
                CollisionMeasure::Density => o,
                CollisionMeasure::SquaredDensity => o * o,
            }
        })
        .collect();
    let peak = raw.iter().fold(0.0_f64, |m, v| m.max(*v));
    if peak < NO_COLLISION {
        return Err(Error::NoCollision(peak));
    }
    let area = trapezoid(times, &raw);
    let values: Vec<f64> = raw.iter().map(|v| v / area).collect();
    let first: Vec<f64> = times.iter().zip(&values).map(|(t, w)| t * w).collect();
    let mean_time = trapezoid(times, &first);
    let second: Vec<f64> = times
        .iter()
        .zip(&values)
        .map(|(t, w)| (t - mean_time) * (t - mean_time) * w)
        .collect();
    let duration = 2.0 * trapezoid(times, &second).max(0.0).sqrt();
    let edge = values[0].max(values[values.len() - 1]);
    Ok(CollisionProfile {
        times: times.to_vec(),
        values,
        mean_time,
        duration,
        window_limited: edge > EDGE_FRACTION * peak / area,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TimeWindow {
    pub points: usize,
    /// Window width in units of the estimated duration.
    pub span: f64,
    /// Half-width used when the packets do not move relative to each other (au).
    pub fallback_half_width: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow {
            points: 2048,
            span: 20.0,
            fallback_half_width: 1000.0,
        }
    }
}

/// Grid centered on the classical meeting time, `span` estimated durations wide.
pub fn collision_time_grid(elec: &GaussianPacket1D, ion: &GaussianPacket1D, window: &TimeWindow) -> Vec<f64> {
    let v_rel = elec.momentum / elec.mass - ion.momentum / ion.mass;
    let (center, half) = if v_rel.abs() < 1e-14 {
        (0.0, window.fallback_half_width)
    } else {
        let tc = (ion.center - elec.center) / v_rel;
        let spread = (elec.variance_at(tc) + ion.variance_at(tc)).sqrt();
        // 2σ_t of a Gaussian W_c in time
        let estimate = 2.0 * spread / v_rel.abs();
        (tc, 0.5 * window.span * estimate)
    };
    let n = window.points.max(3);
    (0..n)
        .map(|i| center - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// ΔW_c in femtoseconds for a packet state.
pub fn collision_duration_fs(
    spec: &PacketSpec,
    masses: &Masses,
    window: &TimeWindow,
    measure: CollisionMeasure,
) -> Result<f64> {
    let (e, i) = GaussianPacket1D::pair_from_spec(spec, masses);
    let grid = collision_time_grid(&e, &i, window);
    Ok(collision_probability(&e, &i, &grid, measure)?.duration_fs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SweepMethod {
    /// Narrow the electron momentum distribution.
    ShrinkMomentumWidth,
    /// Move the electron focus away from the collision time.
    OffsetFocus,
}

impl SweepMethod {
    pub fn label(&self) -> &'static str {
        match self {
            SweepMethod::ShrinkMomentumWidth => "shrink_dp",
            SweepMethod::OffsetFocus => "offset_focus",
        }
    }
}

impl std::str::FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shrink_dp" => Ok(SweepMethod::ShrinkMomentumWidth),
            "offset_focus" => Ok(SweepMethod::OffsetFocus),
            other => Err(Error::Config(format!("unknown sweep method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepPoint {
    pub method: SweepMethod,
    pub target_fs: f64,
    pub duration_fs: f64,
    /// Δp (au) or τ_d (au time), depending on the method.
    pub parameter: f64,
    pub depth: f64,
}

pub const SWEEP_TOLERANCE: f64 = 0.02;

/// Packet spec whose collision duration hits `target_fs` by varying one parameter.
pub fn tune_duration(
    base: &PacketSpec,
    method: SweepMethod,
    target_fs: f64,
    masses: &Masses,
    window: &TimeWindow,
    measure: CollisionMeasure,
) -> Result<(PacketSpec, f64)> {
    check_positive("target duration", target_fs)?;
    let eval = |x: f64| -> Result<(PacketSpec, f64)> {
        let mut spec = base.clone();
        match method {
            SweepMethod::ShrinkMomentumWidth => spec.electron_width = x.exp(),
            SweepMethod::OffsetFocus => spec.focus_offset = x,
        }
        let d = collision_duration_fs(&spec, masses, window, measure)?;
        Ok((spec, d))
    };
    // bisection on g(x) = ΔW_c(x) − target with g(lo) ≤ 0 ≤ g(hi)
    let (mut lo, mut hi) = match method {
        SweepMethod::ShrinkMomentumWidth => {
            let l0 = base.electron_width.ln();
            (l0, l0 - 25.0)
        }
        SweepMethod::OffsetFocus => {
            let mut hi = 1.0;
            while eval(hi)?.1 < target_fs {
                hi *= 2.0;
                if hi > 1e15 {
                    return Err(Error::Bracket(format!(
                        "focus offset cannot reach ΔW_c = {target_fs} fs"
                    )));
                }
            }
            (0.0, hi)
        }
    };
    let g = |x: f64| -> Result<f64> { Ok(eval(x)?.1 - target_fs) };
    if g(lo)? > 0.0 || g(hi)? < 0.0 {
        return Err(Error::Bracket(format!(
            "ΔW_c = {target_fs} fs outside the reachable range for {}",
            method.label()
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (spec, d) = eval(mid)?;
        if (d - target_fs).abs() <= 1e-4 * target_fs {
            return Ok((spec, d));
        }
        if d < target_fs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (spec, d) = eval(0.5 * (lo + hi))?;
    if (d - target_fs).abs() > SWEEP_TOLERANCE * target_fs {
        return Err(Error::Bracket(format!("bisection stalled at ΔW_c = {d} fs")));
    }
    Ok((spec, d))
}

/// Control depth of the packet φ-scan at each target collision duration.
pub fn duration_sweep(
    engine: &PacketEngine,
    base: &PacketSpec,
    method: SweepMethod,
    targets_fs: &[f64],
    window: &TimeWindow,
    measure: CollisionMeasure,
) -> Result<Vec<SweepPoint>> {
    let masses = engine.masses();
    let mut out = Vec::with_capacity(targets_fs.len());
    for &target in targets_fs {
        let (spec, duration) = tune_duration(base, method, target, &masses, window, measure)?;
        let matrices = engine.matrices(&spec)?;
        let curve = matrices.phi_curve(&spec, &crate::cross_sections::phi_grid(engine.phi_points()));
        let depth = control_depth(&curve)?;
        let parameter = match method {
            SweepMethod::ShrinkMomentumWidth => spec.electron_width,
            SweepMethod::OffsetFocus => spec.focus_offset,
        };
        out.push(SweepPoint {
            method,
            target_fs: target,
            duration_fs: duration,
            parameter,
            depth,
        });
    }
    Ok(out)
}
