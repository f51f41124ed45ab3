//! Scenario dispatch: configuration in, tables and metadata out.

use std::f64::consts::PI;

use serde_json::{json, Value};

use scatter_core::collision_timing::{
    collision_probability, collision_time_grid, duration_sweep, CollisionMeasure, GaussianPacket1D, SweepMethod,
    TimeWindow,
};
use scatter_core::continuum_states::{solve_continuum, MatchOptions, SampledPotential};
use scatter_core::cross_sections::{
    boltzmann_weights, control_depth, incoherent_sigma, phi_grid, CrossSectionOptions, CurveMetadata,
    PacketEngine, ScatteringModel, SpectrumCurve,
};
use scatter_core::error::Error;
use scatter_core::grid::RadialGrid;
use scatter_core::kinematics::lab_to_cm;
use scatter_core::molecular_structure::{bound_expectation_r, vibrational_period_fs, Molecule, PotentialParams};
use scatter_core::superposition::{
    build_envelope_state, build_packet_state, build_two_state, contact_slice, density_map, two_level_internal,
    DiscreteState, Envelope, PacketSpec, SuperpositionState,
};
use scatter_core::units::{au_to_fs, Masses, AU_TIME_FS};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{ScenarioOutput, Table};

fn molecule(cfg: &Config) -> Result<Molecule, CliError> {
    let params = PotentialParams {
        depth: cfg.real("potential.depth")?,
        alpha: cfg.real("potential.alpha")?,
        r_eq: cfg.real("potential.r_eq")?,
        masses: Masses::new(cfg.real("potential.proton_mass")?),
    };
    let grid = RadialGrid::new(cfg.real("grid.r_min")?, cfg.real("grid.r_max")?, cfg.real("grid.dr")?)?;
    Ok(Molecule::new(params, grid)?)
}

fn match_options(cfg: &Config) -> Result<MatchOptions, CliError> {
    Ok(MatchOptions {
        tolerance: cfg.real("continuum.tolerance")?,
        min_radius: cfg.real("continuum.min_radius")?,
    })
}

fn cross_section_options(cfg: &Config) -> Result<CrossSectionOptions, CliError> {
    let options = CrossSectionOptions {
        e_max: cfg.real("spectrum.e_max")?,
        n_energy: cfg.count("spectrum.n_energy")?,
        l_start: cfg.count("partial_waves.l_start")?,
        l_cap: cfg.count("partial_waves.l_cap")?,
        l_tolerance: cfg.real("partial_waves.tolerance")?,
        angular_nodes: cfg.count("quadrature.angular_nodes")?,
        packet_nodes: cfg.count("quadrature.packet_nodes")?,
        phi_points: cfg.count("quadrature.phi_points")?,
        matching: match_options(cfg)?,
    };
    options.validate()?;
    Ok(options)
}

fn model(cfg: &Config) -> Result<ScatteringModel, CliError> {
    Ok(ScatteringModel::new(molecule(cfg)?, cross_section_options(cfg)?)?)
}

fn two_state(cfg: &Config, m: &Molecule, phi: f64) -> Result<SuperpositionState, Error> {
    let get = |k: &str| cfg.real(k).map_err(|e| Error::Config(e.to_string()));
    let nu = |k: &str| cfg.count(k).map_err(|e| Error::Config(e.to_string()));
    build_two_state(
        m,
        nu("state.nu1")?,
        nu("state.nu2")?,
        get("state.p1")?,
        get("state.P1")?,
        phi,
        get("state.c1")?,
        get("state.c2")?,
    )
}

fn packet(cfg: &Config, phi: f64) -> Result<SuperpositionState, Error> {
    let get = |k: &str| cfg.real(k).map_err(|e| Error::Config(e.to_string()));
    let nu = |k: &str| cfg.count(k).map_err(|e| Error::Config(e.to_string()));
    build_packet_state(
        two_level_internal(nu("state.nu1")?, nu("state.nu2")?, phi),
        get("packet.p0")?,
        get("packet.dp")?,
        get("packet.P0")?,
        get("packet.dP")?,
        get("packet.tau_d")?,
    )
}

fn packet_spec(cfg: &Config) -> Result<PacketSpec, CliError> {
    match packet(cfg, 0.0)? {
        SuperpositionState::Packet(p) => Ok(p),
        SuperpositionState::Discrete(_) => unreachable!("packet builder returns a packet"),
    }
}

fn discrete(state: SuperpositionState) -> DiscreteState {
    match state {
        SuperpositionState::Discrete(d) => d,
        SuperpositionState::Packet(_) => unreachable!("discrete builder returns a discrete state"),
    }
}

fn envelopes(cfg: &Config) -> Result<[(&'static str, Envelope); 2], CliError> {
    Ok([
        (
            "psi_max",
            Envelope {
                center: cfg.real("envelope.max_center")?,
                width: cfg.real("envelope.max_width")?,
                alternate_sign: true,
            },
        ),
        (
            "psi_min",
            Envelope {
                center: cfg.real("envelope.min_center")?,
                width: cfg.real("envelope.min_width")?,
                alternate_sign: false,
            },
        ),
    ])
}

fn window(cfg: &Config) -> Result<TimeWindow, CliError> {
    Ok(TimeWindow {
        points: cfg.count("timing.points")?,
        span: cfg.real("timing.span")?,
        ..TimeWindow::default()
    })
}

fn measure(cfg: &Config) -> Result<CollisionMeasure, CliError> {
    cfg.text("timing.measure")
        .parse()
        .map_err(|_| CliError::Config(format!("timing.measure: unknown '{}'", cfg.text("timing.measure"))))
}

fn sweep_methods(cfg: &Config) -> Result<Vec<SweepMethod>, CliError> {
    let methods: Vec<SweepMethod> = cfg
        .list("sweep.methods")
        .iter()
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("sweep.methods: unknown '{s}'"))))
        .collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Config("sweep.methods is empty".into()));
    }
    Ok(methods)
}

fn note_convergence(out: &mut ScenarioOutput, what: &str, meta: &CurveMetadata) {
    if !meta.converged {
        out.unconverged.push(format!(
            "{what}: partial-wave sum stopped at L = {} with last share {:.3e}",
            meta.l_max, meta.last_l_fraction
        ));
    }
}

fn curve_json(meta: &CurveMetadata) -> Value {
    serde_json::to_value(meta).expect("metadata serializes")
}

fn phi_table(name: &str, curve: &SpectrumCurve) -> Table {
    let mut t = Table::new(name, &["phi", "sigma"]);
    for (phi, s) in curve.grid.iter().zip(&curve.values) {
        t.push(vec![(*phi).into(), (*s).into()]);
    }
    t
}

/// Checks every key and the physical feasibility of the configured states without
/// computing any cross section.
pub fn preflight(cfg: &Config) -> Result<(), CliError> {
    cfg.check()?;
    let scenario = cfg.text("scenario");
    let m = molecule(cfg)?;
    cross_section_options(cfg)?;
    match_options(cfg)?;
    measure(cfg)?;
    sweep_methods(cfg)?;
    let count = m.levels.len();
    let needs_state = matches!(scenario, "fig1" | "fig3b" | "fig3c" | "custom" | "");
    if needs_state {
        for key in ["state.nu1", "state.nu2"] {
            let nu = cfg.count(key)?;
            if nu >= count {
                return Err(CliError::Config(format!("{key}: level {nu} not bound ({count} levels)")));
            }
        }
    }
    let single = cfg.text("custom.state") == "single";
    match scenario {
        "fig1" | "" => check_open(&m, &discrete(two_state(cfg, &m, 0.0)?))?,
        "custom" if single => {
            let (k, _) = lab_to_cm(cfg.real("state.p1")?, cfg.real("state.P1")?, &m.params.masses);
            if k <= 0.0 {
                return Err(Error::Infeasible(format!("relative momentum {k} must be positive")).into());
            }
        }
        "custom" if cfg.text("custom.state") == "two_state" => check_open(&m, &discrete(two_state(cfg, &m, 0.0)?))?,
        "fig3b" | "fig3c" | "custom" => {
            let spec = packet_spec(cfg)?;
            let (e, i) = GaussianPacket1D::pair_from_spec(&spec, &m.params.masses);
            e.validate()?;
            i.validate()?;
        }
        "fig2" => {
            let nu_max = cfg.count("envelope.nu_max")?;
            if nu_max >= count {
                return Err(CliError::Config(format!("envelope.nu_max: {nu_max} exceeds the top level {}", count - 1)));
            }
            for (_, env) in envelopes(cfg)? {
                build_envelope_state(&m, nu_max, env, cfg.real("envelope.k0")?)?;
            }
        }
        "thermal" if cfg.count("thermal.nu_max")? >= count => {
            return Err(CliError::Config(format!(
                "thermal.nu_max: {} exceeds the top level {}",
                cfg.count("thermal.nu_max")?,
                count - 1
            )));
        }
        _ => {}
    }
    Ok(())
}

/// Every component needs positive relative momentum and enough energy to reach the
/// dissociation threshold.
fn check_open(m: &Molecule, state: &DiscreteState) -> Result<(), CliError> {
    let m_rel = m.params.masses.relative();
    for c in &state.components {
        if c.k <= 0.0 {
            return Err(Error::Infeasible(format!("level {} has relative momentum {} ≤ 0", c.nu, c.k)).into());
        }
        let available = c.k * c.k / (2.0 * m_rel) + c.internal_energy;
        if available <= 0.0 {
            return Err(Error::Infeasible(format!(
                "dissociation closed from level {}: {available:.6} hartree available",
                c.nu
            ))
            .into());
        }
    }
    Ok(())
}

pub fn run(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    preflight(cfg)?;
    match cfg.text("scenario") {
        "bound" => bound(cfg),
        "continuum" => continuum(cfg),
        "fig1" => fig1(cfg),
        "fig2" => fig2(cfg),
        "fig3b" => fig3b(cfg),
        "fig3c" => fig3c(cfg),
        "thermal" => thermal(cfg),
        "custom" => custom(cfg),
        "" => Err(CliError::Config("scenario: not set (use --scenario or the config file)".into())),
        other => Err(CliError::Config(format!("scenario: unknown '{other}'"))),
    }
}

fn bound(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let m = molecule(cfg)?;
    let mut t = Table::new("bound_levels", &["nu", "energy", "mean_r"]);
    for level in &m.levels {
        t.push(vec![level.nu.into(), level.energy.into(), bound_expectation_r(level)?.into()]);
    }
    let mut out = ScenarioOutput::default();
    out.metadata.insert("levels".into(), json!(m.levels.len()));
    out.metadata.insert("vibrational_period_fs".into(), json!(vibrational_period_fs(&m.params)));
    out.tables.push(t);
    Ok(out)
}

fn continuum(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let m = molecule(cfg)?;
    let options = match_options(cfg)?;
    let potential = SampledPotential::sigma_u(&m.params, m.grid);
    let mu = m.params.masses.nuclear_reduced();
    let mut t = Table::new("continuum_phase_shifts", &["E", "L", "phase_shift", "match_radius"]);
    for e in cfg.reals("continuum.energies")? {
        for l in cfg.counts("continuum.l_values")? {
            let s = solve_continuum(e, l, &potential, mu, &options)?;
            t.push(vec![e.into(), l.into(), s.phase_shift.into(), s.match_radius.into()]);
        }
    }
    let mut out = ScenarioOutput::default();
    out.tables.push(t);
    Ok(out)
}

fn fig1(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let model = model(cfg)?;
    let m = &model.molecule;
    let mut out = ScenarioOutput::default();

    let phis = phi_grid(model.options.phi_points);
    let curve = model.phi_scan(&phis, |phi| two_state(cfg, m, phi))?;
    note_convergence(&mut out, "phi scan", &curve.metadata);

    let reference = discrete(two_state(cfg, m, 0.0)?);
    let mut spectra = Table::new("fig1bc_spectra", &["E", "dsigma_dE", "curve"]);
    let mut singles = Vec::new();
    for c in &reference.components {
        let r = model.single_state_sigma(c.nu, c.k)?;
        note_convergence(&mut out, &format!("single state nu={}", c.nu), &r.curve.metadata);
        let label = format!("single_nu{}", c.nu);
        for (e, v) in r.curve.grid.iter().zip(&r.curve.values) {
            spectra.push(vec![(*e).into(), (*v).into(), label.as_str().into()]);
        }
        singles.push(json!({ "nu": c.nu, "k": c.k, "sigma": r.total }));
    }
    let mut coherent = Vec::new();
    for (label, phi) in [("phi_0", 0.0), ("phi_pi", PI)] {
        let r = model.superposition_spectrum(&two_state(cfg, m, phi)?)?;
        note_convergence(&mut out, label, &r.curve.metadata);
        for (e, v) in r.curve.grid.iter().zip(&r.curve.values) {
            spectra.push(vec![(*e).into(), (*v).into(), label.into()]);
        }
        coherent.push(json!({ "curve": label, "sigma": r.total }));
    }
    let c1 = cfg.real("state.c1")?;
    let c2 = cfg.real("state.c2")?;
    let sigmas: Vec<f64> = singles.iter().map(|s| s["sigma"].as_f64().unwrap_or(0.0)).collect();
    let incoherent = if sigmas.len() == 2 {
        Some(incoherent_sigma(&[c1 * c1, c2 * c2], &sigmas)?)
    } else {
        None
    };

    out.metadata.insert("phi_scan".into(), curve_json(&curve.metadata));
    out.metadata.insert("control_depth".into(), json!(control_depth(&curve)?));
    out.metadata.insert("single_states".into(), json!(singles));
    out.metadata.insert("coherent".into(), json!(coherent));
    out.metadata.insert("incoherent_sigma".into(), json!(incoherent));
    out.tables.push(phi_table("fig1a_phi_scan", &curve));
    out.tables.push(spectra);
    Ok(out)
}

fn fig2(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let m = molecule(cfg)?;
    let nu_max = cfg.count("envelope.nu_max")?;
    let k0 = cfg.real("envelope.k0")?;
    let r = scatter_core::superposition::window(cfg.real("map.r_min")?, cfg.real("map.r_max")?, cfg.count("map.n_r")?);
    let x = scatter_core::superposition::window(cfg.real("map.x_min")?, cfg.real("map.x_max")?, cfg.count("map.n_x")?);

    let mut maps = Table::new("fig2_density_maps", &["state", "R", "x", "P"]);
    let mut slices = Table::new("fig2_contact_slices", &["state", "R", "density"]);
    let mut means = Table::new("fig2_mean_r", &["state", "mean_r"]);
    for level in &m.levels {
        means.push(vec![format!("nu{}", level.nu).as_str().into(), bound_expectation_r(level)?.into()]);
    }
    for (label, env) in envelopes(cfg)? {
        let state = discrete(build_envelope_state(&m, nu_max, env, k0)?);
        let map = density_map(&m, &state, &r, &x)?;
        for (i, rr) in map.r.iter().enumerate() {
            for (j, xx) in map.x.iter().enumerate() {
                maps.push(vec![label.into(), (*rr).into(), (*xx).into(), map.at(i, j).into()]);
            }
        }
        let slice = contact_slice(&m, &state)?;
        // the slice lives on the full radial grid; keep the mapped range
        let (lo, hi) = (r[0], r[r.len() - 1]);
        for (rr, a) in slice.r.iter().zip(&slice.amplitude) {
            if *rr >= lo && *rr <= hi {
                slices.push(vec![label.into(), (*rr).into(), a.norm_sqr().into()]);
            }
        }
        means.push(vec![label.into(), slice.mean_r.into()]);
    }
    let mut out = ScenarioOutput::default();
    out.metadata.insert("envelope_nu_max".into(), json!(nu_max));
    out.tables.extend([maps, slices, means]);
    Ok(out)
}

fn collision_table(cfg: &Config, spec: &PacketSpec, masses: &Masses, out: &mut ScenarioOutput) -> Result<Table, CliError> {
    let (e, i) = GaussianPacket1D::pair_from_spec(spec, masses);
    let times = collision_time_grid(&e, &i, &window(cfg)?);
    let profile = collision_probability(&e, &i, &times, measure(cfg)?)?;
    if profile.window_limited {
        out.unconverged.push("collision profile truncated by the time window".into());
    }
    let mut t = Table::new("fig3b_collision_profile", &["t_fs", "Wc_per_fs"]);
    for (tt, w) in profile.times.iter().zip(&profile.values) {
        t.push(vec![au_to_fs(*tt).into(), (w / AU_TIME_FS).into()]);
    }
    out.metadata.insert("collision_duration_fs".into(), json!(profile.duration_fs()));
    out.metadata.insert("collision_mean_time_fs".into(), json!(au_to_fs(profile.mean_time)));
    out.metadata.insert("collision_measure".into(), json!(cfg.text("timing.measure")));
    Ok(t)
}

fn fig3b(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let model = model(cfg)?;
    let spec = packet_spec(cfg)?;
    let mut out = ScenarioOutput::default();
    let phis = phi_grid(model.options.phi_points);
    let curve = model.phi_scan(&phis, |phi| packet(cfg, phi))?;
    note_convergence(&mut out, "packet phi scan", &curve.metadata);
    let profile = collision_table(cfg, &spec, &model.masses(), &mut out)?;
    out.metadata.insert("phi_scan".into(), curve_json(&curve.metadata));
    out.metadata.insert("control_depth".into(), json!(control_depth(&curve)?));
    if cfg.flag("quadrature.refine")? {
        let engine = PacketEngine::prepare(&model, &spec)?;
        let (sigma_rel, depth_rel) = engine.refinement(&spec)?;
        out.metadata.insert(
            "packet_refinement".into(),
            json!({ "sigma_relative_change": sigma_rel, "depth_relative_change": depth_rel }),
        );
    }
    out.tables.push(phi_table("fig3b_phi_scan", &curve));
    out.tables.push(profile);
    Ok(out)
}

fn fig3c(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let model = model(cfg)?;
    let base = packet_spec(cfg)?;
    let engine = PacketEngine::prepare(&model, &base)?;
    let targets = cfg.reals("sweep.targets")?;
    let window = window(cfg)?;
    let measure = measure(cfg)?;
    let mut t = Table::new("fig3c_sweep", &["method", "target_fs", "dWc", "parameter", "depth"]);
    let mut out = ScenarioOutput::default();
    for method in sweep_methods(cfg)? {
        for p in duration_sweep(&engine, &base, method, &targets, &window, measure)? {
            t.push(vec![
                method.label().into(),
                p.target_fs.into(),
                p.duration_fs.into(),
                p.parameter.into(),
                p.depth.into(),
            ]);
        }
    }
    let info = engine.info();
    if !info.converged {
        out.unconverged.push(format!("packet matrices: partial-wave sum stopped at L = {}", info.l_max()));
    }
    out.metadata.insert("partial_waves".into(), serde_json::to_value(info).expect("info serializes"));
    out.metadata.insert("vibrational_period_fs".into(), json!(vibrational_period_fs(&model.molecule.params)));
    out.tables.push(t);
    Ok(out)
}

fn thermal(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let model = model(cfg)?;
    let k = cfg.real("thermal.k")?;
    let levels: Vec<usize> = (0..=cfg.count("thermal.nu_max")?).collect();
    let mut out = ScenarioOutput::default();
    let mut per_level = Table::new("thermal_levels", &["nu", "energy", "sigma"]);
    let mut energies = Vec::new();
    let mut sigmas = Vec::new();
    for &nu in &levels {
        let r = model.single_state_sigma(nu, k)?;
        note_convergence(&mut out, &format!("single state nu={nu}"), &r.curve.metadata);
        let e = model.molecule.energy(nu)?;
        per_level.push(vec![nu.into(), e.into(), r.total.into()]);
        energies.push(e);
        sigmas.push(r.total);
    }
    let mut totals = Table::new("thermal_sigma", &["T", "sigma"]);
    for temp in cfg.reals("thermal.temperatures")? {
        let w = boltzmann_weights(&energies, temp)?;
        totals.push(vec![temp.into(), incoherent_sigma(&w, &sigmas)?.into()]);
    }
    out.metadata.insert("k".into(), json!(k));
    out.tables.extend([per_level, totals]);
    Ok(out)
}

fn custom(cfg: &Config) -> Result<ScenarioOutput, CliError> {
    let model = model(cfg)?;
    let m = &model.molecule;
    let mut out = ScenarioOutput::default();
    let result = match cfg.text("custom.state") {
        "single" => {
            let (k, _) = lab_to_cm(cfg.real("state.p1")?, cfg.real("state.P1")?, &m.params.masses);
            model.single_state_sigma(cfg.count("state.nu1")?, k)?
        }
        "packet" => model.superposition_spectrum(&packet(cfg, cfg.real("state.phi")?)?)?,
        _ => model.superposition_spectrum(&two_state(cfg, m, cfg.real("state.phi")?)?)?,
    };
    note_convergence(&mut out, "custom spectrum", &result.curve.metadata);
    let mut t = Table::new("custom_spectrum", &["E", "dsigma_dE"]);
    for (e, v) in result.curve.grid.iter().zip(&result.curve.values) {
        t.push(vec![(*e).into(), (*v).into()]);
    }
    out.metadata.insert("state".into(), json!(cfg.text("custom.state")));
    out.metadata.insert("sigma".into(), json!(result.total));
    out.metadata.insert("spectrum".into(), curve_json(&result.curve.metadata));
    out.tables.push(t);
    Ok(out)
}
