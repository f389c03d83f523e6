//! One function per subcommand. Each returns the primary output (CSV or
//! JSON text), a JSON summary, and optional diagnostics.

use qspec::grid::DEFAULT_BUDGET;
use qspec::qfi::{
    bandwidth_sweep, evaluate, far_frequency, log_space, optimal_pulse_for, qfi_bound, qfi_of_pulse, sweep_kappa,
    PulseFamily,
};
use qspec::scattering::{pulse_time_series, scatter_freq, scatter_time};
use qspec::{build_grid, default_window, ParameterTag, Regularization};
use serde_json::{json, Value};

use crate::run_config::Loaded;
use crate::table::{model_hash, Table};
use crate::CliError;

/// Flag overrides common to all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub parameter: Option<ParameterTag>,
    pub grid_budget: Option<usize>,
    pub kappa: Option<f64>,
    pub regularization: Option<Regularization>,
    pub time_domain: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: Option<Table>,
    /// Primary output text: the rendered table, or JSON.
    pub body: String,
    pub summary: Value,
    pub diagnostics: Option<Value>,
    /// Time-domain table of `scatter`, when requested.
    pub time_table: Option<String>,
}

impl Report {
    fn from_table(loaded: &Loaded, table: Table, summary: Value, diagnostics: Option<Value>) -> Self {
        let body = table.render(&hash(loaded));
        Self {
            table: Some(table),
            body,
            summary,
            diagnostics,
            time_table: None,
        }
    }
}

pub const DEFAULT_KAPPA: f64 = 1e-3;

pub fn default_kappas() -> Vec<f64> {
    log_space(1e2, 1e-3, 30)
}

pub fn default_bandwidths() -> Vec<f64> {
    log_space(0.05, 20.0, 41)
}

fn hash(loaded: &Loaded) -> String {
    model_hash(&loaded.model, &loaded.config.emitter.frequency_unit)
}

fn budget(loaded: &Loaded, o: &Overrides) -> usize {
    o.grid_budget.or(loaded.config.grid_budget).unwrap_or(DEFAULT_BUDGET)
}

fn compute(loaded: &Loaded, context: impl Into<String>) -> impl FnOnce(qspec::Error) -> CliError + '_ {
    let context = context.into();
    move |source| CliError::Compute {
        path: loaded.path.display().to_string(),
        context,
        source,
    }
}

/// Eigenvalue carrying the largest share of the coupling vector.
fn brightest_level(loaded: &Loaded) -> f64 {
    let s = loaded.model.spectral();
    let (k, _) = s.overlaps().iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (k, &o)| if o > best.1 { (k, o) } else { best },
    );
    s.eigenvalues()[k]
}

pub fn bounds(loaded: &Loaded, o: &Overrides) -> Result<Report, CliError> {
    let model = &loaded.model;
    let g2 = model.gamma_rate().powi(2);
    let mut table = Table::new(vec![
        "parameter",
        "bound_gamma2",
        "omega_max",
        "omega_min",
        "mu_max",
        "mu_min",
        "pulse_omega_plus",
        "pulse_omega_minus",
    ]);
    let (mut summary, mut diagnostics) = (Vec::new(), Vec::new());
    for theta in loaded.parameters(o.parameter)? {
        let b = qfi_bound(model, theta).map_err(compute(loaded, format!("bound for {theta}")))?;
        let far = |w: f64| if w.is_finite() { w } else { far_frequency(model) };
        table.push(vec![
            theta.to_string().into(),
            (b.bound * g2).into(),
            b.omega_max.into(),
            b.omega_min.into(),
            b.mu_max.into(),
            b.mu_min.into(),
            far(b.omega_max).into(),
            far(b.omega_min).into(),
        ]);
        let pulse = optimal_pulse_for(model, &b, DEFAULT_KAPPA * model.gamma_rate(), Regularization::Gaussian)
            .map_err(compute(loaded, "optimal pulse"))?;
        summary.push(json!({
            "parameter": theta,
            "bound": b.bound,
            "bound_gamma2": b.bound * g2,
            "mu_max": b.mu_max,
            "mu_min": b.mu_min,
            "omega_max": b.omega_max,
            "omega_min": if b.omega_min.is_finite() { json!(b.omega_min) } else { json!("inf") },
            "optimal_pulse": pulse,
        }));
        diagnostics.push(serde_json::to_value(&b.diagnostics).expect("plain data serializes"));
    }
    Ok(Report::from_table(
        loaded,
        table,
        json!({ "bounds": summary }),
        Some(json!(diagnostics)),
    ))
}

pub fn qfi(loaded: &Loaded, o: &Overrides) -> Result<Report, CliError> {
    let model = &loaded.model;
    let pulse = loaded.pulse()?;
    let field = build_grid(model, &pulse, default_window(model, &pulse), budget(loaded, o))
        .map_err(compute(loaded, "sampling the pulse"))?;
    let g2 = model.gamma_rate().powi(2);
    let mut table = Table::new(vec!["parameter", "qfi", "qfi_gamma2", "bound_gamma2", "saturation"]);
    let mut summary = Vec::new();
    for theta in loaded.parameters(o.parameter)? {
        let r = evaluate(model, &field, theta).map_err(compute(loaded, format!("QFI for {theta}")))?;
        table.push(vec![
            theta.to_string().into(),
            r.value.into(),
            (r.value * g2).into(),
            (r.bound * g2).into(),
            r.saturation.into(),
        ]);
        summary.push(json!({ "parameter": theta, "result": r }));
    }
    Ok(Report::from_table(
        loaded,
        table,
        json!({ "grid_points": field.len(), "qfi": summary }),
        None,
    ))
}

pub fn sweep(loaded: &Loaded, o: &Overrides) -> Result<Report, CliError> {
    let theta = loaded.parameter(o.parameter)?;
    let kappas = loaded.positive_list("kappas", loaded.config.kappas.as_ref(), default_kappas())?;
    let regs = loaded
        .config
        .regularizations
        .clone()
        .unwrap_or_else(|| Regularization::ALL.to_vec());
    let rows = sweep_kappa(&loaded.model, theta, &regs, &kappas, budget(loaded, o))
        .map_err(compute(loaded, "regularization sweep"))?;
    let mut table = Table::new(vec!["reg", "kappa_over_gamma", "qfi_gamma2"]);
    for r in &rows {
        table.push(vec![
            r.reg.name().into(),
            r.kappa_over_gamma.into(),
            r.qfi_gamma2.into(),
        ]);
    }
    let best: Vec<Value> = regs
        .iter()
        .map(|&reg| {
            let max = rows
                .iter()
                .filter(|r| r.reg == reg)
                .map(|r| r.qfi_gamma2)
                .fold(f64::NEG_INFINITY, f64::max);
            json!({ "reg": reg, "max_qfi_gamma2": max })
        })
        .collect();
    Ok(Report::from_table(
        loaded,
        table,
        json!({ "parameter": theta, "rows": rows.len(), "maxima": best }),
        None,
    ))
}

pub fn bandwidths(loaded: &Loaded, o: &Overrides) -> Result<Report, CliError> {
    let theta = loaded.parameter(o.parameter)?;
    let bws = loaded.positive_list("bandwidths", loaded.config.bandwidths.as_ref(), default_bandwidths())?;
    let families = loaded
        .config
        .families
        .clone()
        .unwrap_or_else(|| PulseFamily::ALL.to_vec());
    let center = loaded.config.center.unwrap_or_else(|| brightest_level(loaded));
    let s = bandwidth_sweep(&loaded.model, theta, &families, center, &bws, budget(loaded, o))
        .map_err(compute(loaded, "bandwidth sweep"))?;
    let mut table = Table::new(vec!["family", "bandwidth_over_gamma", "qfi_gamma2"]);
    for r in &s.rows {
        table.push(vec![
            r.family.name().into(),
            r.bandwidth_over_gamma.into(),
            r.qfi_gamma2.into(),
        ]);
    }
    Ok(Report::from_table(
        loaded,
        table,
        json!({ "parameter": theta, "center": center, "maxima": s.maxima }),
        None,
    ))
}

pub fn optimal(loaded: &Loaded, o: &Overrides) -> Result<Report, CliError> {
    let model = &loaded.model;
    let theta = loaded.parameter(o.parameter)?;
    let kappa = o.kappa.or(loaded.config.kappa).unwrap_or(DEFAULT_KAPPA);
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(loaded.error(
            format!("kappa {kappa} must be positive"),
            "pass --kappa in units of the rate, e.g. 1e-3",
        ));
    }
    let reg = o
        .regularization
        .or(loaded.config.regularization)
        .unwrap_or(Regularization::Gaussian);
    let b = qfi_bound(model, theta).map_err(compute(loaded, format!("bound for {theta}")))?;
    let pulse =
        optimal_pulse_for(model, &b, kappa * model.gamma_rate(), reg).map_err(compute(loaded, "optimal pulse"))?;
    let q =
        qfi_of_pulse(model, &pulse, theta, budget(loaded, o)).map_err(compute(loaded, "QFI of the optimal pulse"))?;
    let g2 = model.gamma_rate().powi(2);
    let out = json!({
        "parameter": theta,
        "bound_gamma2": b.bound * g2,
        "qfi_gamma2": q * g2,
        "saturation": if b.bound > 0.0 { q / b.bound } else { 0.0 },
        "pulse": pulse,
    });
    Ok(Report {
        table: None,
        body: serde_json::to_string_pretty(&out).expect("plain data serializes") + "\n",
        summary: out,
        diagnostics: Some(serde_json::to_value(&b.diagnostics).expect("plain data serializes")),
        time_table: None,
    })
}

pub fn scatter(loaded: &Loaded, o: &Overrides) -> Result<Report, CliError> {
    let model = &loaded.model;
    let pulse = loaded.pulse()?;
    let field = build_grid(model, &pulse, default_window(model, &pulse), budget(loaded, o))
        .map_err(compute(loaded, "sampling the pulse"))?;
    let r = scatter_freq(model, &field);
    let mut table = Table::new(vec!["omega", "re_in", "im_in", "re_out", "im_out", "phase"]);
    for k in 0..field.len() {
        let (a, b) = (field.amps()[k], r.out.amps()[k]);
        table.push(vec![
            field.freqs()[k].into(),
            a.re.into(),
            a.im.into(),
            b.re.into(),
            b.im.into(),
            r.phase_curve[k].into(),
        ]);
    }
    let mut summary = json!({ "grid_points": field.len(), "norm_error": r.norm_error });
    let mut report_time = None;
    if o.time_domain || loaded.config.time_domain {
        let input = pulse_time_series(model, &pulse).map_err(|e| {
            loaded.error(
                e.to_string(),
                "time-domain scattering needs a pulse with a closed temporal form",
            )
        })?;
        let output = scatter_time(model, &input).map_err(compute(loaded, "time-domain scattering"))?;
        let mut t = Table::new(vec!["t", "re_in", "im_in", "re_out", "im_out"]);
        for k in 0..input.samples.len() {
            let (a, b) = (input.samples[k], output.samples[k]);
            t.push(vec![
                input.time(k).into(),
                a.re.into(),
                a.im.into(),
                b.re.into(),
                b.im.into(),
            ]);
        }
        summary["time_norm_in"] = json!(input.norm_sqr());
        summary["time_norm_out"] = json!(output.norm_sqr());
        report_time = Some(t.render(&hash(loaded)));
    }
    let mut report = Report::from_table(loaded, table, summary, None);
    report.time_table = report_time;
    Ok(report)
}
