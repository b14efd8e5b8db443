use anyhow::{anyhow, Result};
use qcs_core::channel::{
    evolve_fock_oracle_times, gaussian_curve, halflife_with_tol, oracle_curve, oracle_matrix,
    time_grid, validate_times, ORACLE_DT,
};
use qcs_core::metrics::{commutator_matrix, qcs_commutator, qcs_gaussian, qcs_with};
use qcs_core::numfmt::csv;
use qcs_core::phase_space::{
    p_n_diag_kernel, position_kernel_matrix, wigner_default_grid, Component,
};
use qcs_core::states::AUTO_DEFICIT;
use qcs_core::{
    build_state, evolve_gaussian, nonclassicality_bounds, ode_curve, radial_moments_at,
    ChannelParams, EvolutionCurve, FockDensityMatrix, Grid2D, GridSpec, KappaPath, OdeSolver,
    QuadSettings, State, StateSpec,
};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::input_error;

/// Command result: text or a binary raster with its config as a sidecar.
pub enum Payload {
    Text(String),
    Raster { bytes: Vec<u8>, config: Value },
}

struct Loaded {
    spec: StateSpec,
    state: State,
}

fn load(source: &StateSource) -> Result<Loaded> {
    let spec = StateSpec::parse(&source.text().map_err(input_error)?)?;
    let state = build_state(spec.clone())?;
    Ok(Loaded { spec, state })
}

fn channel(a: &ChannelArgs) -> Result<ChannelParams> {
    Ok(ChannelParams::new(a.t_rel, a.nbar_inf, a.omega)?)
}

fn channel_json(a: &ChannelArgs) -> Value {
    json!({ "nbar_inf": a.nbar_inf, "t_rel": a.t_rel, "omega": a.omega })
}

fn quad(a: &QuadArgs) -> Result<QuadSettings> {
    let mut s = QuadSettings::default();
    if let Some(tol) = a.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(input_error(anyhow!("--tol must be positive, got {tol}")));
        }
        s.quad_tol = tol;
    }
    Ok(s)
}

fn quad_json(s: &QuadSettings) -> Value {
    json!({ "quad_tol": s.quad_tol, "rel_tol": s.rel_tol, "max_angles": s.max_angles })
}

fn format_or(common: &CommonArgs, default: Format, allowed: &[Format]) -> Result<Format> {
    let f = common.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(input_error(anyhow!(
            "format `{}` is not available for this command",
            f.as_str()
        )));
    }
    Ok(f)
}

fn base_config(command: &str, spec: &StateSpec, format: Format) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert(
        "state".into(),
        serde_json::to_value(spec).expect("specs serialise"),
    );
    m.insert("format".into(), json!(format.as_str()));
    m
}

fn with_config(config: Map<String, Value>, body: Value) -> String {
    let mut out = Map::new();
    out.insert("config".into(), Value::Object(config));
    if let Value::Object(fields) = body {
        out.extend(fields);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(out)).expect("JSON output");
    text.push('\n');
    text
}

fn csv_with_config(config: Map<String, Value>, body: &str) -> String {
    format!("# config: {}\n{body}", Value::Object(config))
}

pub fn qcs(a: &QcsArgs) -> Result<Payload> {
    let format = format_or(&a.state.common, Format::Json, &[Format::Json, Format::Csv])?;
    let Loaded { spec, state } = load(&a.state.source)?;
    let settings = quad(&a.quad)?;
    let mut report = match a.method {
        QcsRoute::Chi => qcs_with(&state, &settings)?,
        QcsRoute::Commutator => {
            let rho = match a.cutoff {
                Some(c) => state.to_fock_matrix(c)?.0,
                None => commutator_matrix(&state)?,
            };
            qcs_commutator(&rho)?
        }
        QcsRoute::Gaussian => {
            let g = state.gaussian_moments().ok_or_else(|| {
                qcs_core::Error::UnsupportedFamily(format!(
                    "`{}` is not a Gaussian state",
                    spec.family_name()
                ))
            })?;
            qcs_gaussian(&g)?
        }
    };
    report.total_noise.get_or_insert(state.total_noise());
    let (lower, upper) = nonclassicality_bounds(report.c);
    let mut config = base_config("qcs", &spec, format);
    config.insert(
        "method".into(),
        json!(format!("{:?}", a.method).to_lowercase()),
    );
    config.insert("quadrature".into(), quad_json(&settings));
    config.insert("cutoff".into(), json!(a.cutoff));
    Ok(Payload::Text(match format {
        Format::Csv => {
            let row = format!(
                "C,C_squared,P,kappa,total_noise,lower,upper,method\n{},{},{},{},{},{},{},{}\n",
                csv(report.c),
                csv(report.c_squared),
                csv(report.purity),
                report.kappa.map(csv).unwrap_or_default(),
                report.total_noise.map(csv).unwrap_or_default(),
                csv(lower),
                csv(upper),
                serde_json::to_value(report.method)
                    .expect("method")
                    .as_str()
                    .unwrap_or(""),
            );
            csv_with_config(config, &row)
        }
        _ => {
            let mut body = serde_json::to_value(&report)?;
            body["nonclassicality_bounds"] = json!({ "lower": lower, "upper": upper });
            with_config(config, body)
        }
    }))
}

fn evolve_times(a: &EvolveArgs) -> Result<Vec<f64>> {
    match &a.times {
        Some(ts) => {
            validate_times(ts)?;
            Ok(ts.clone())
        }
        None => Ok(time_grid(a.t_max, a.dt)?),
    }
}

pub fn evolve(a: &EvolveArgs) -> Result<Payload> {
    let format = format_or(&a.state.common, Format::Csv, &[Format::Csv, Format::Json])?;
    let Loaded { spec, state } = load(&a.state.source)?;
    let ch = channel(&a.channel)?;
    let settings = quad(&a.quad)?;
    let times = evolve_times(a)?;
    let curve: EvolutionCurve = match a.method {
        EvolveMethod::Exact => qcs_core::evolve_exact(&state, &ch, &times, &settings)?,
        EvolveMethod::ClosedForm => {
            let g = state.gaussian_moments().ok_or_else(|| {
                qcs_core::Error::UnsupportedFamily(format!(
                    "closed-form evolution needs a Gaussian state, got `{}`",
                    spec.family_name()
                ))
            })?;
            gaussian_curve(&g, &ch, &times)?
        }
        EvolveMethod::Ode => {
            let m = radial_moments_at(&state, &ch, 0.0, &settings)?;
            ode_curve(
                m.qcs_squared().sqrt(),
                m.purity().min(1.0),
                &KappaPath::Constant(m.kappa()),
                &ch,
                &times,
                OdeSolver::ClosedForm,
            )?
        }
        EvolveMethod::Oracle => oracle_curve(&state, &ch, &times, ORACLE_DT * ch.t_r())?,
    };
    let mut config = base_config("evolve", &spec, format);
    config.insert("channel".into(), channel_json(&a.channel));
    config.insert("method".into(), json!(curve.method.as_str()));
    config.insert("quadrature".into(), quad_json(&settings));
    match &a.times {
        Some(_) => config.insert("times".into(), json!(times)),
        None => {
            config.insert("t_max".into(), json!(a.t_max));
            config.insert("dt".into(), json!(a.dt))
        }
    };
    Ok(Payload::Text(match format {
        Format::Json => with_config(config, json!({ "curve": curve })),
        _ => csv_with_config(config, &curve.to_csv()),
    }))
}

pub fn halflife(a: &HalflifeArgs) -> Result<Payload> {
    let format = format_or(&a.state.common, Format::Json, &[Format::Json])?;
    let Loaded { spec, state } = load(&a.state.source)?;
    let ch = channel(&a.channel)?;
    let settings = quad(&a.quad)?;
    if !(a.halflife_tol > 0.0) {
        return Err(input_error(anyhow!("--halflife-tol must be positive")));
    }
    let report = halflife_with_tol(&state, &ch, &settings, a.halflife_tol * ch.t_r())?;
    let mut config = base_config("halflife", &spec, format);
    config.insert("channel".into(), channel_json(&a.channel));
    config.insert("quadrature".into(), quad_json(&settings));
    config.insert("halflife_tol".into(), json!(a.halflife_tol));
    Ok(Payload::Text(with_config(
        config,
        serde_json::to_value(&report)?,
    )))
}

/// Number-basis matrix of the input, at `cutoff` or converged automatically
/// with room for levels up to `min_dim − 1`.
fn input_matrix(state: &State, cutoff: Option<usize>, min_dim: usize) -> Result<FockDensityMatrix> {
    Ok(match cutoff {
        Some(c) => state.to_fock_matrix(c)?.0,
        None => {
            let start = state.default_cutoff().max(min_dim);
            state.to_fock_matrix_with_deficit(start, AUTO_DEFICIT)?.0
        }
    })
}

fn padded_for_channel(rho: &FockDensityMatrix) -> FockDensityMatrix {
    rho.resized(((rho.dim() as f64) * 1.2).ceil() as usize + 4)
}

fn grid_from(text: &Option<String>, default: GridSpec) -> Result<GridSpec> {
    match text {
        None => Ok(default),
        Some(t) => {
            let (n, half) = crate::args::parse_grid(t).map_err(input_error)?;
            Ok(GridSpec::square(n, half.unwrap_or(default.x_max))?)
        }
    }
}

pub fn interference(a: &InterferenceArgs) -> Result<Payload> {
    let format = format_or(&a.state.common, Format::Csv, &[Format::Csv, Format::Json])?;
    let Loaded { spec, state } = load(&a.state.source)?;
    let ch = channel(&a.channel)?;
    let ns = parse_numbers(&a.n).map_err(input_error)?;
    validate_times(&a.t)?;
    let top = ns.iter().copied().max().unwrap_or(0) + 1;
    let mut rho = input_matrix(&state, a.cutoff, top)?;
    let evolving = a.t.iter().any(|&t| t > 0.0);
    if evolving {
        rho = padded_for_channel(&rho);
    }
    let snapshots = if evolving {
        evolve_fock_oracle_times(&rho, &ch, &a.t, ORACLE_DT * ch.t_r())?
    } else {
        vec![rho.clone(); a.t.len()]
    };
    let grid = grid_from(&a.grid, GridSpec::kernel_default(rho.dim()))?;
    let mut rows = String::from("t,n,p_n,ell,p_diag,residual\n");
    let mut results = Vec::new();
    for (&t, m) in a.t.iter().zip(&snapshots) {
        let kernel = position_kernel_matrix(m, &grid)?;
        let reports = p_n_diag_kernel(m, &kernel, &ns, &a.ell)?;
        for r in &reports {
            for e in &r.entries {
                rows.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    csv(t),
                    r.n,
                    csv(r.p_n),
                    csv(e.ell),
                    csv(e.p_diag),
                    csv(e.residual)
                ));
            }
        }
        results.push(json!({ "t": t, "reports": reports }));
    }
    let mut config = base_config("interference", &spec, format);
    config.insert("channel".into(), channel_json(&a.channel));
    config.insert("ell".into(), json!(a.ell));
    config.insert("n".into(), json!(ns));
    config.insert("t".into(), json!(a.t));
    config.insert("cutoff".into(), json!(rho.dim()));
    config.insert("grid".into(), serde_json::to_value(grid)?);
    config.insert("oracle_dt".into(), json!(ORACLE_DT * ch.t_r()));
    Ok(Payload::Text(match format {
        Format::Json => with_config(config, json!({ "results": results })),
        _ => csv_with_config(config, &rows),
    }))
}

/// The state at time `t`: Gaussian propagation for Gaussian inputs, the
/// Fock oracle otherwise.
fn state_at(
    state: &State,
    cutoff: Option<usize>,
    ch: &ChannelParams,
    t: f64,
) -> Result<(State, Option<usize>)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(input_error(anyhow!("--t must be finite and ≥ 0, got {t}")));
    }
    if let (Some(g), None) = (state.gaussian_moments(), cutoff) {
        return Ok((State::from_gaussian(evolve_gaussian(&g, ch, t)?), None));
    }
    if t == 0.0 && cutoff.is_none() {
        return Ok((state.clone(), None));
    }
    let rho = match cutoff {
        Some(_) => input_matrix(state, cutoff, 1)?,
        None => oracle_matrix(state)?,
    };
    let rho = if t > 0.0 {
        let base = if cutoff.is_some() {
            padded_for_channel(&rho)
        } else {
            rho
        };
        evolve_fock_oracle_times(&base, ch, &[t], ORACLE_DT * ch.t_r())?.remove(0)
    } else {
        rho
    };
    let dim = rho.dim();
    Ok((State::from_matrix(rho), Some(dim)))
}

fn grid_payload(
    grid: Grid2D,
    format: Format,
    component: ComponentArg,
    config: Map<String, Value>,
) -> Payload {
    let component = match component {
        ComponentArg::Re => Component::Re,
        ComponentArg::Im => Component::Im,
        ComponentArg::Abs => Component::Abs,
    };
    match format {
        Format::Raster => Payload::Raster {
            bytes: grid.to_raster(component),
            config: Value::Object(config),
        },
        Format::Json => Payload::Text(with_config(
            config,
            json!({
                "grid": grid.spec,
                "re": grid.re,
                "im": grid.im,
            }),
        )),
        Format::Csv => Payload::Text(csv_with_config(config, &grid.to_csv())),
    }
}

fn grid_config(
    kind: &str,
    a: &GridArgs,
    spec: &StateSpec,
    format: Format,
    grid: &GridSpec,
    dim: Option<usize>,
) -> Map<String, Value> {
    let mut config = base_config(kind, spec, format);
    config.insert("channel".into(), channel_json(&a.channel));
    config.insert("t".into(), json!(a.t));
    config.insert("grid".into(), serde_json::to_value(grid).expect("grid"));
    config.insert("cutoff".into(), json!(dim));
    config.insert(
        "component".into(),
        json!(format!("{:?}", a.component).to_lowercase()),
    );
    config
}

pub fn wigner(a: &GridArgs) -> Result<Payload> {
    let format = format_or(
        &a.state.common,
        Format::Csv,
        &[Format::Csv, Format::Json, Format::Raster],
    )?;
    let Loaded { spec, state } = load(&a.state.source)?;
    let ch = channel(&a.channel)?;
    let (st, dim) = state_at(&state, a.cutoff, &ch, a.t)?;
    let grid = grid_from(&a.grid, wigner_default_grid(&st)?)?;
    let w = qcs_core::wigner_grid(&st, &grid)?;
    let config = grid_config("wigner", a, &spec, format, &grid, dim);
    Ok(grid_payload(w, format, a.component, config))
}

pub fn kernel(a: &GridArgs) -> Result<Payload> {
    let format = format_or(
        &a.state.common,
        Format::Csv,
        &[Format::Csv, Format::Json, Format::Raster],
    )?;
    let Loaded { spec, state } = load(&a.state.source)?;
    let ch = channel(&a.channel)?;
    let rho = if a.t > 0.0 {
        let base = match a.cutoff {
            Some(_) => padded_for_channel(&input_matrix(&state, a.cutoff, 1)?),
            None => oracle_matrix(&state)?,
        };
        validate_times(&[a.t])?;
        evolve_fock_oracle_times(&base, &ch, &[a.t], ORACLE_DT * ch.t_r())?.remove(0)
    } else {
        validate_times(&[a.t])?;
        input_matrix(&state, a.cutoff, 1)?
    };
    let grid = grid_from(&a.grid, GridSpec::kernel_default(rho.dim()))?;
    let k = position_kernel_matrix(&rho, &grid)?;
    let config = grid_config("kernel", a, &spec, format, &grid, Some(rho.dim()));
    Ok(grid_payload(k, format, a.component, config))
}

pub fn validate(a: &StateArgs) -> Result<Payload> {
    let format = format_or(&a.common, Format::Json, &[Format::Json])?;
    let Loaded { spec, state } = load(&a.source)?;
    let config = base_config("validate", &spec, format);
    let body = json!({
        "valid": true,
        "family": spec.family_name(),
        "mean_photon_number": state.mean_photon_number(),
        "purity": state.purity(),
        "total_noise": state.total_noise(),
        "gaussian": state.is_gaussian(),
        "rotation_invariant": state.is_rotation_invariant(),
        "default_cutoff": state.default_cutoff(),
    });
    Ok(Payload::Text(with_config(config, body)))
}
