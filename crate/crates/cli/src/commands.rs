//! Subcommand implementations. Each returns the rendered output together with
//! an optional deferred error, so that rows computed before a failure are
//! still written.

use beatlaser::{
    analytic, derive_coeffs, fock, langevin, moments, noise_diffusion, quant, threshold_margin, Coeffs, Complex,
    Density, Error, First, Second, State,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{with_value, FockSection, ParamsConfig, PhaseConfig, RunConfig, SweepVar};
use crate::error::CliError;
use crate::format::{num_value, Cell, Table};

/// Agreement required between the RK4 integration and the closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
/// Floor of the Fock-route tolerance; scaled up by the boundary population.
pub const FOCK_TOL_FLOOR: f64 = 1e-3;

pub enum Rendered {
    Table(Table),
    Json(Value),
}

pub struct Outcome {
    pub rendered: Rendered,
    pub deferred: Option<CliError>,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { rendered: Rendered::Table(table), deferred: None }
    }

    fn partial(table: Table, err: Option<CliError>) -> Self {
        Self { rendered: Rendered::Table(table), deferred: err }
    }
}

fn coeffs_of(p: &ParamsConfig) -> Result<Coeffs, CliError> {
    Ok(derive_coeffs(&p.to_params())?)
}

fn theta_of(p: &ParamsConfig) -> Option<f64> {
    match p.phase {
        PhaseConfig::Averaged { theta } => Some(theta),
        PhaseConfig::Fixed { .. } => None,
    }
}

fn cx_value(z: Complex) -> Value {
    if z.im == 0.0 {
        num_value(z.re)
    } else {
        json!({ "re": num_value(z.re), "im": num_value(z.im) })
    }
}

pub fn derive(cfg: &RunConfig) -> Result<Value, CliError> {
    let c = coeffs_of(&cfg.params)?;
    let noise = noise_diffusion(&c);
    let margin = threshold_margin(&c);
    let mut obj = Map::new();
    let real = [
        ("kappa", c.kappa),
        ("eta", c.eta),
        ("zeta", c.zeta),
        ("zeta_p", c.zeta_p),
        ("chi", c.chi),
        ("A", c.big_a),
        ("B", c.big_b),
        ("C_plus", c.c_plus),
        ("C_minus", c.c_minus),
        ("drive", c.drive),
        ("D_aa", noise.d_aa),
        ("margin", margin),
    ];
    for (k, v) in real {
        obj.insert(k.into(), num_value(v));
    }
    let complex = [
        ("theta_p", c.theta_p),
        ("theta_m", c.theta_m),
        ("D_plus", c.d_plus),
        ("D_minus", c.d_minus),
        ("E_plus", c.e_plus),
        ("E_minus", c.e_minus),
        ("a_plus", c.a_plus),
        ("a_minus", c.a_minus),
        ("b_plus", c.b_plus),
        ("b_minus", c.b_minus),
        ("lambda", c.lambda),
        ("Z_sq", c.z_sq),
        ("Z", c.z),
        ("epsilon", c.epsilon),
        ("p", c.p),
        ("q_plus", c.q_plus),
        ("q_minus", c.q_minus),
        ("D_ba", noise.d_ba),
    ];
    for (k, v) in complex {
        obj.insert(k.into(), cx_value(v));
    }
    obj.insert("averaged".into(), Value::Bool(c.averaged));
    obj.insert("extrapolated".into(), Value::Bool(c.is_extrapolated()));
    obj.insert("stable".into(), Value::Bool(margin > 0.0));
    Ok(Value::Object(obj))
}

/// `derive` flattened into `quantity,re,im` rows.
pub fn derive_table(v: &Value) -> Table {
    let mut t = Table::new(&["quantity", "re", "im"]);
    if let Value::Object(obj) = v {
        for (k, val) in obj {
            let (re, im) = match val {
                Value::Number(n) => (Cell::Num(n.as_f64().unwrap_or(f64::NAN)), Cell::Num(0.0)),
                Value::Object(o) => {
                    (Cell::from(o.get("re").and_then(Value::as_f64)), Cell::from(o.get("im").and_then(Value::as_f64)))
                }
                Value::Bool(b) => (Cell::Bool(*b), Cell::Empty),
                _ => (Cell::Empty, Cell::Empty),
            };
            t.push(vec![Cell::Text(k.clone()), re, im]);
        }
    }
    t
}

const STEADY_COLUMNS: [&str; 18] = [
    "eta",
    "theta",
    "Omega",
    "kappa",
    "n_a",
    "n_b",
    "re_m",
    "im_m",
    "var_minus",
    "var_plus",
    "S_dgcz",
    "log_neg",
    "g2_cross",
    "cs_ratio",
    "D_ba_re",
    "D_ba_im",
    "margin",
    "status",
];

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::Unstable(_) => "unstable",
        Error::UnphysicalCovariance(_) => "unphysical",
        Error::NonFinite { .. } => "nonfinite",
        _ => "error",
    }
}

/// A row plus the error that left it without a steady state, if any.
type SteadyRow = (Vec<Cell>, Option<Error>);

fn steady_row(p: &ParamsConfig) -> Result<SteadyRow, CliError> {
    let c = coeffs_of(p)?;
    let noise = noise_diffusion(&c);
    let mut row: Vec<Cell> = vec![p.eta.into(), theta_of(p).into(), p.omega.into(), p.kappa.into()];
    let tail = [Cell::Num(noise.d_ba.re), Cell::Num(noise.d_ba.im), Cell::Num(threshold_margin(&c))];
    let measured = moments::steady_state(&c).and_then(|s| quant::report(&s, &First::zero()).map(|r| (s, r)));
    match measured {
        Ok((s, r)) => {
            row.extend([s.n_a, s.n_b, s.m.re, s.m.im, r.var_minus, r.var_plus, r.dgcz, r.log_neg].map(Cell::Num));
            row.push(r.correlations.map(|k| k.g2_cross).into());
            row.push(r.correlations.map(|k| k.cs_ratio).into());
            row.extend(tail);
            row.push("ok".into());
            Ok((row, None))
        }
        Err(e) => {
            row.extend(std::iter::repeat_n(Cell::Empty, 10));
            row.extend(tail);
            row.push(status_of(&e).into());
            Ok((row, Some(e)))
        }
    }
}

pub fn steady(cfg: &RunConfig, with_fock: bool) -> Result<Outcome, CliError> {
    let mut cols: Vec<&str> = STEADY_COLUMNS.to_vec();
    if with_fock {
        cols.extend(["t_fock", "fock_n_a", "fock_n_b", "fock_re_m", "boundary_pop"]);
    }
    let mut table = Table::new(&cols);
    let (mut row, err) = steady_row(&cfg.params)?;
    if let Some(e) = err {
        if with_fock {
            row.extend(std::iter::repeat_n(Cell::Empty, 5));
        }
        table.push(row);
        return Ok(Outcome::partial(table, Some(e.into())));
    }
    if with_fock {
        // Relaxed Fock estimate at the end of the integration window.
        let c = coeffs_of(&cfg.params)?;
        let section = cfg.fock.unwrap_or_default();
        let fc = section.to_config();
        let t_final = cfg.integration.t_final;
        match fock::evolve(&c, &fc, Density::vacuum(&fc), t_final, section.dt) {
            Ok((rho, _)) => {
                let s = fock::moments_of(&rho).second;
                row.extend([t_final, s.n_a, s.n_b, s.m.re, rho.boundary_population()].map(Cell::Num));
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Empty, 5));
                table.push(row);
                return Ok(Outcome::partial(table, Some(e.into())));
            }
        }
    }
    table.push(row);
    Ok(Outcome::ok(table))
}

/// Moment trajectory from the vacuum, sampled at `times`, by RK4.
fn ode_samples(c: &Coeffs, times: &[f64], dt: f64) -> Result<Vec<State>, Error> {
    let mut out = Vec::with_capacity(times.len());
    let mut state = State::vacuum();
    for &t in times {
        let span = t - state.t;
        if span > 0.0 {
            state = *moments::integrate(c, &state, span, dt)?.last().expect("integration output");
            state.t = t;
        }
        out.push(state);
    }
    Ok(out)
}

fn quant_cells(s: &Second) -> Vec<Cell> {
    let f = First::zero();
    let (vm, _) = quant::quadrature_variances(s, &f);
    vec![Cell::Num(vm), Cell::Num(quant::dgcz_witness(s, &f)), quant::log_negativity(s, &f).ok().into()]
}

pub fn transient(cfg: &RunConfig, with_fock: bool) -> Result<Outcome, CliError> {
    let c = coeffs_of(&cfg.params)?;
    let times = cfg.integration.sample_times();
    let mut cols = vec![
        "t",
        "n_a",
        "n_b",
        "re_m",
        "im_m",
        "var_minus",
        "S_dgcz",
        "log_neg",
        "cf_n_a",
        "cf_n_b",
        "cf_re_m",
        "cf_im_m",
    ];
    if with_fock {
        cols.extend(["fock_n_a", "fock_n_b", "fock_re_m", "fock_im_m", "trace_dev", "min_eig", "boundary_pop"]);
    }
    let mut table = Table::new(&cols);
    let ode = match ode_samples(&c, &times, cfg.integration.dt) {
        Ok(v) => v,
        Err(e) => return Ok(Outcome::partial(table, Some(e.into()))),
    };

    let section = cfg.fock.unwrap_or_default();
    let fc = section.to_config();
    let mut evolver =
        if with_fock { Some(fock::Evolver::new(&c, &fc, Density::vacuum(&fc), section.dt)?) } else { None };

    for (t, st) in times.iter().zip(&ode) {
        let s = st.second;
        let mut row: Vec<Cell> = [*t, s.n_a, s.n_b, s.m.re, s.m.im].map(Cell::Num).to_vec();
        row.extend(quant_cells(&s));
        match analytic::second_moments_closed(&c, &Second::zero(), *t) {
            Ok(cf) => row.extend([cf.n_a, cf.n_b, cf.m.re, cf.m.im].map(Cell::Num)),
            Err(_) => row.extend(std::iter::repeat_n(Cell::Empty, 4)),
        }
        if let Some(ev) = evolver.as_mut() {
            if let Err(e) = ev.advance_to(*t) {
                return Ok(Outcome::partial(table, Some(e.into())));
            }
            let rho = ev.rho();
            let fm = fock::moments_of(rho).second;
            let d = fock::diagnostics(rho);
            row.extend(
                [fm.n_a, fm.n_b, fm.m.re, fm.m.im, d.trace_dev, d.min_eigenvalue, d.boundary_pop].map(Cell::Num),
            );
        }
        table.push(row);
    }
    if let Some(ev) = &evolver {
        let st = ev.stats();
        log::info!(
            "fock: {} steps, trace drift {:.2e}, hermiticity {:.2e}, boundary {:.2e}",
            st.steps,
            st.max_trace_drift,
            st.max_herm_dev,
            st.max_boundary_pop
        );
    }
    Ok(Outcome::ok(table))
}

fn var_name(v: SweepVar) -> &'static str {
    match v {
        SweepVar::Eta => "eta",
        SweepVar::Theta => "theta",
        SweepVar::Omega => "Omega",
        SweepVar::Kappa => "kappa",
    }
}

/// Steady state over a one- or two-axis grid; the second axis varies fastest.
/// Unstable points are flagged in the status column.
pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sw = cfg.sweep.ok_or_else(|| CliError::Config("sweep needs a `sweep` section".into()))?;
    let mut points = Vec::new();
    for v1 in sw.first.values() {
        let p1 = with_value(&cfg.params, sw.first.variable, v1);
        match &sw.second {
            None => points.push(p1),
            Some(ax) => points.extend(ax.values().into_iter().map(|v2| with_value(&p1, ax.variable, v2))),
        }
    }
    for p in &points {
        p.to_params()
            .validate()
            .map_err(|e| CliError::Config(format!("sweep point outside the parameter domain: {e}")))?;
    }
    let rows: Vec<Result<SteadyRow, CliError>> = points.par_iter().map(steady_row).collect();
    let mut table = Table::new(&STEADY_COLUMNS);
    let mut flagged = 0usize;
    for r in rows {
        let (row, err) = r?;
        if err.is_some() {
            flagged += 1;
        }
        table.push(row);
    }
    let axes = match &sw.second {
        Some(ax) => format!("{} x {}", var_name(sw.first.variable), var_name(ax.variable)),
        None => var_name(sw.first.variable).to_string(),
    };
    log::info!("sweep over {axes}: {} points, {flagged} without a steady state", table.rows.len());
    Ok(Outcome::ok(table))
}

pub fn mc(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let section = cfg.mc.ok_or_else(|| CliError::Config("mc needs an `mc` section".into()))?;
    let c = coeffs_of(&cfg.params)?;
    let dt = section.dt.unwrap_or(cfg.integration.dt);
    // The vacuum row carries no statistical information.
    let sample_times: Vec<f64> = cfg.integration.sample_times().into_iter().filter(|&t| t > 0.0).collect();
    let mut table = Table::new(&[
        "t", "n_a", "se_n_a", "n_b", "se_n_b", "re_m", "se_re_m", "im_m", "se_im_m", "ode_n_a", "ode_n_b", "ode_re_m",
        "z_n_a", "z_n_b", "z_re_m",
    ]);
    if sample_times.is_empty() {
        return Ok(Outcome::ok(table));
    }
    let mc_cfg = langevin::McConfig { n_traj: section.n_traj, dt, seed: section.seed, sample_times };
    let estimates = langevin::simulate(&c, &mc_cfg)?;
    let z = |x: f64, r: f64, se: f64| if se > 0.0 { Some((x - r) / se) } else { None };
    for e in estimates {
        let reference = moments::propagate_exact(&c, &State::vacuum(), e.t).second;
        let mut row: Vec<Cell> = [
            e.t,
            e.n_a,
            e.se_n_a,
            e.n_b,
            e.se_n_b,
            e.m.re,
            e.se_m_re,
            e.m.im,
            e.se_m_im,
            reference.n_a,
            reference.n_b,
            reference.m.re,
        ]
        .map(Cell::Num)
        .to_vec();
        row.push(z(e.n_a, reference.n_a, e.se_n_a).into());
        row.push(z(e.n_b, reference.n_b, e.se_n_b).into());
        row.push(z(e.m.re, reference.m.re, e.se_m_re).into());
        table.push(row);
    }
    Ok(Outcome::ok(table))
}

/// Tolerance for the Fock route given the boundary population it reached.
pub fn fock_tolerance(boundary_pop: f64) -> f64 {
    FOCK_TOL_FLOOR.max(10.0 * boundary_pop)
}

/// Cross-checks RK4, the closed form and the Fock evolution at every
/// sample time after t = 0.
pub fn oracle_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = coeffs_of(&cfg.params)?;
    let section: FockSection = cfg.fock.unwrap_or_default();
    let fc = section.to_config();
    let times: Vec<f64> = cfg.integration.sample_times().into_iter().filter(|&t| t > 0.0).collect();
    let mut table =
        Table::new(&["t", "quantity", "ode", "closed_form", "fock", "dev_closed_form", "dev_fock", "tol_fock", "pass"]);
    let ode = ode_samples(&c, &times, cfg.integration.dt)?;
    let mut ev = fock::Evolver::new(&c, &fc, Density::vacuum(&fc), section.dt)?;
    let mut failures = 0usize;
    for (t, st) in times.iter().zip(&ode) {
        let closed = analytic::second_moments_closed(&c, &Second::zero(), *t).ok();
        ev.advance_to(*t)?;
        let rho = ev.rho();
        let fm = fock::moments_of(rho).second;
        let tol = fock_tolerance(rho.boundary_population());
        let pick = |s: &Second| [s.n_a, s.n_b, s.m.re, s.m.im];
        let o = pick(&st.second);
        let f = pick(&fm);
        let cf = closed.as_ref().map(pick);
        for (k, name) in ["n_a", "n_b", "re_m", "im_m"].iter().enumerate() {
            let dev_cf = cf.map(|v| (v[k] - o[k]).abs());
            let dev_f = (f[k] - o[k]).abs();
            let pass = dev_f <= tol && dev_cf.is_none_or(|d| d <= CLOSED_FORM_TOL);
            if !pass {
                failures += 1;
            }
            table.push(vec![
                Cell::Num(*t),
                (*name).into(),
                Cell::Num(o[k]),
                cf.map(|v| v[k]).into(),
                Cell::Num(f[k]),
                dev_cf.into(),
                Cell::Num(dev_f),
                Cell::Num(tol),
                pass.into(),
            ]);
        }
    }
    let err =
        (failures > 0).then(|| CliError::Numerical(format!("oracle check: {failures} comparisons out of tolerance")));
    Ok(Outcome::partial(table, err))
}
