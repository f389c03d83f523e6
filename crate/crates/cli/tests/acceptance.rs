//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion with
//! its runtime and exits nonzero when any criterion fails.
//!
//! Run with `cargo test -p qspec-cli --test acceptance`. Set
//! `QSPEC_BLESS=1` to rewrite the golden sweep table.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qspec::config::EmitterConfig;
use qspec::grid::DEFAULT_BUDGET;
use qspec::optimizer::{find_extrema_certified, solve_chi_equals};
use qspec::qfi::{qfi_fidelity_oracle, qfi_pulse, sweep_kappa, FIDELITY_STEP};
use qspec::scattering::{inverse_fourier, pulse_time_series, scatter_freq, scatter_time};
use qspec::{build_grid, default_window, EmitterModel, ParameterTag, PulseSpec, Regularization, SampledField};
use qspec_cli::commands::{self, Overrides};
use qspec_cli::run_config::Loaded;
use qspec_cli::table::ParsedTable;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn config_path(name: &str) -> PathBuf {
    manifest().join("../../configs").join(name)
}

fn qspec(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_qspec"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run qspec: {e}"))?;
    if !o.status.success() {
        return Err(format!("qspec {args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    String::from_utf8(o.stdout).map_err(|e| e.to_string())
}

fn parse(text: &str) -> Result<ParsedTable, String> {
    ParsedTable::parse(text)
}

fn rows_by<'a>(t: &'a ParsedTable, key_col: usize, key: &str) -> Vec<&'a [String]> {
    t.rows
        .iter()
        .filter(|r| r[key_col] == key)
        .map(|r| r.as_slice())
        .collect()
}

/// Hermitian model with entries in [-3, 3] (rate `rate`) whose eigenvectors
/// all carry more than `min_overlap` of the coupling vector, built through
/// the JSON emitter block.
fn random_model(r: &mut StdRng, n: usize, rate: f64, min_overlap: f64) -> EmitterModel {
    loop {
        let mut re = vec![vec![0.0; n]; n];
        let mut im = vec![vec![0.0; n]; n];
        for i in 0..n {
            re[i][i] = rate * r.gen_range(-3.0..3.0);
            for j in 0..i {
                let (a, b) = (rate * r.gen_range(-1.5..1.5), rate * r.gen_range(-1.5..1.5));
                (re[i][j], im[i][j], re[j][i], im[j][i]) = (a, b, a, -b);
            }
        }
        let g: Vec<(f64, f64)> = (0..n)
            .map(|_| (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let norm = g.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        let c = EmitterConfig {
            n,
            h_m_re: re,
            h_m_im: Some(im),
            gamma_vec_re: g.iter().map(|p| p.0 / norm).collect(),
            gamma_vec_im: Some(g.iter().map(|p| p.1 / norm).collect()),
            gamma_rate: rate,
            frequency_unit: "arb".into(),
        };
        let m = c.to_model().expect("random model is valid");
        if m.spectral().overlaps().iter().all(|&o| o > min_overlap) {
            return m;
        }
    }
}

fn tls_bounds() -> Outcome {
    let out = qspec(&["bounds", "--config", config_path("tls.json").to_str().unwrap()])?;
    let t = parse(&out)?;
    let get = |k: &str| -> Result<f64, String> {
        rows_by(&t, 0, k).first().ok_or(format!("no {k} row"))?[1]
            .parse()
            .map_err(|_| format!("bad {k} value"))
    };
    let (g, d) = (get("Gamma")?, get("Detuning(1)")?);
    ensure(rel(g, 4.0) <= 1e-6 && rel(d, 16.0) <= 1e-6, || {
        format!("Gamma {g}, Detuning {d}")
    })?;
    Ok(format!("Gamma {g}, Detuning {d}"))
}

fn gamma_universality() -> Outcome {
    let mut r = StdRng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let count = 64;
    for k in 0..count {
        let n = 1 + k % 8;
        let rate = r.gen_range(0.2..5.0);
        let m = random_model(&mut r, n, rate, 1e-3);
        let text = serde_json::json!({ "emitter": EmitterConfig::from_model(&m, "arb") }).to_string();
        let loaded = Loaded::from_str(Path::new("<random>"), &text).map_err(|e| e.to_string())?;
        let o = Overrides {
            parameter: Some(ParameterTag::Gamma),
            ..Overrides::default()
        };
        let report = commands::bounds(&loaded, &o).map_err(|e| e.to_string())?;
        let v = report.summary["bounds"][0]["bound_gamma2"]
            .as_f64()
            .ok_or("missing bound")?;
        worst = worst.max((v - 4.0).abs());
    }
    ensure(worst <= 1e-6, || format!("max |bound - 4| = {worst:e}"))?;
    Ok(format!("{count} models, max |bound - 4| = {worst:.1e}"))
}

/// `rate^2 QFI` of the optimal TLS pair from an independent quadrature
/// (adaptive scipy integration of the exact line shapes, no shared code),
/// at widths 1e-3, 1e-2, 0.1, 1, 10.
const ORACLE_WIDTHS: [f64; 5] = [1e-3, 1e-2, 0.1, 1.0, 10.0];
const ORACLE_QFI: [(Regularization, [f64; 5]); 3] = [
    (
        Regularization::Lorentzian,
        [3.987048, 3.878874, 3.172413, 1.747526, 0.362155],
    ),
    (
        Regularization::Gaussian,
        [3.999984, 3.9984, 3.83802, 2.333748, 0.462874],
    ),
    (
        Regularization::Rectangular,
        [3.999995, 3.999467, 3.946370, 1.821313, 0.252898],
    ),
];

fn kappa_sweep() -> Outcome {
    let cfg = config_path("tls.json");
    let out = qspec(&["sweep-kappa", "--config", cfg.to_str().unwrap()])?;
    ensure(
        out == qspec(&["sweep-kappa", "--config", cfg.to_str().unwrap()])?,
        || "rerun differs".into(),
    )?;
    let t = parse(&out)?;
    ensure(t.rows.len() == 90, || format!("{} rows, expected 90", t.rows.len()))?;
    let mut notes = Vec::new();
    for reg in Regularization::ALL {
        let rows = rows_by(&t, 0, reg.name());
        let k: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        let q: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
        // widths descend, so the QFI must not decrease along the table
        for i in 1..q.len() {
            ensure(k[i] < k[i - 1] && q[i] >= q[i - 1], || {
                format!("{reg}: not monotone at kappa {}", k[i])
            })?;
        }
        let last = *q.last().unwrap();
        ensure(rel(*k.last().unwrap(), 1e-3) <= 1e-12, || {
            format!("{reg}: sweep ends at {}", k.last().unwrap())
        })?;
        ensure(last >= 0.98 * 4.0, || format!("{reg}: {last} at kappa 1e-3"))?;
        ensure(q.iter().all(|&v| v <= 4.0 * (1.0 + 1e-6)), || {
            format!("{reg}: exceeds the bound")
        })?;
        notes.push(format!("{reg} {last:.6}"));
    }

    // grid refinement: doubling the node budget leaves the small-width end put
    let m = EmitterModel::tls(0.0, 1.0).unwrap();
    for b in [2 * DEFAULT_BUDGET, 4 * DEFAULT_BUDGET] {
        let fine = sweep_kappa(&m, ParameterTag::Gamma, &Regularization::ALL, &[1e-3], b).map_err(|e| e.to_string())?;
        for row in fine {
            let coarse: f64 = rows_by(&t, 0, row.reg.name()).last().unwrap()[2].parse().unwrap();
            ensure(rel(coarse, row.qfi_gamma2) <= 1e-4, || {
                format!("{}: budget {b} gives {}", row.reg, row.qfi_gamma2)
            })?;
        }
    }

    // independent quadrature at round widths
    let rows = sweep_kappa(
        &m,
        ParameterTag::Gamma,
        &Regularization::ALL,
        &ORACLE_WIDTHS,
        DEFAULT_BUDGET,
    )
    .map_err(|e| e.to_string())?;
    for (reg, want) in ORACLE_QFI {
        for (row, w) in rows.iter().filter(|r| r.reg == reg).zip(want) {
            ensure(rel(row.qfi_gamma2, w) <= 2e-5, || {
                format!(
                    "{reg} at kappa {}: {} vs oracle {w}",
                    row.kappa_over_gamma, row.qfi_gamma2
                )
            })?;
        }
    }

    // golden table
    let golden = manifest().join("tests/golden/sweep_kappa_tls.csv");
    if std::env::var_os("QSPEC_BLESS").is_some() {
        fs::write(&golden, &out).map_err(|e| e.to_string())?;
        notes.push("golden rewritten".into());
    }
    let g = parse(
        &fs::read_to_string(&golden).map_err(|e| format!("{}: {e} (run with QSPEC_BLESS=1)", golden.display()))?,
    )?;
    ensure(g.model_hash == t.model_hash && g.rows.len() == t.rows.len(), || {
        "golden header or length differs".into()
    })?;
    let (gq, tq) = (g.numbers("qfi_gamma2").unwrap(), t.numbers("qfi_gamma2").unwrap());
    let dev = gq.iter().zip(&tq).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    ensure(dev <= 1e-9, || format!("golden deviation {dev:e}"))?;
    Ok(format!("{}; golden dev {dev:.1e}", notes.join(", ")))
}

fn bandwidth_maxima() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary = dir.path().join("s.json");
    qspec(&[
        "bandwidth-sweep",
        "--config",
        config_path("tls.json").to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ])?;
    let s: Value =
        serde_json::from_str(&fs::read_to_string(summary).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for m in s["maxima"].as_array().ok_or("no maxima")? {
        let family = m["family"].as_str().unwrap_or("?");
        let q = m["qfi_gamma2"].as_f64().ok_or("no value")?;
        let target = match family {
            "decaying_exp" | "rising_exp" => 2.0,
            "gaussian" | "rectangular" => 2.5,
            other => return Err(format!("unexpected family {other}")),
        };
        ensure(rel(q, target) <= 0.1, || format!("{family}: {q} vs {target}"))?;
        notes.push(format!("{family} {q:.4}"));
    }
    ensure(notes.len() == 4, || "missing families".into())?;
    Ok(notes.join(", "))
}

fn random_pulse(r: &mut StdRng, m: &EmitterModel) -> PulseSpec {
    let spread = m.spectral_spread().max(1.0);
    let center = r.gen_range(-spread..spread);
    match r.gen_range(0..3) {
        0 => PulseSpec::Gaussian {
            center,
            bandwidth: r.gen_range(0.2..2.0),
        },
        1 => PulseSpec::DeltaPair {
            omega_plus: center,
            omega_minus: r.gen_range(-spread..spread),
            kappa: r.gen_range(0.05..0.5),
            reg: Regularization::Gaussian,
            phase: r.gen_range(-3.0..3.0),
        },
        _ => PulseSpec::DeltaPair {
            omega_plus: center,
            omega_minus: r.gen_range(-spread..spread),
            kappa: r.gen_range(0.05..0.5),
            reg: Regularization::Rectangular,
            phase: 0.0,
        },
    }
}

fn two_route_qfi() -> Outcome {
    let mut r = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let rate = r.gen_range(0.5..2.0);
        let m = random_model(&mut r, 1 + k % 4, rate, 1e-3);
        let p = random_pulse(&mut r, &m);
        let all = ParameterTag::all(m.n());
        let theta = all[r.gen_range(0..all.len())];
        let field = build_grid(&m, &p, default_window(&m, &p), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let q = qfi_pulse(&m, &field, theta).map_err(|e| e.to_string())?;
        let o = qfi_fidelity_oracle(&m, &field, theta, FIDELITY_STEP * m.gamma_rate()).map_err(|e| e.to_string())?;
        let d = rel(o.qfi, q);
        ensure(d <= 5e-3, || format!("instance {k} ({theta}, {p:?}): {q} vs {}", o.qfi))?;
        worst = worst.max(d);
    }
    Ok(format!("20 instances, max relative gap {worst:.1e}"))
}

fn scattering_consistency() -> Outcome {
    let mut r = StdRng::seed_from_u64(17);
    let mut worst_norm = 0.0f64;
    for k in 0..20 {
        let m = random_model(&mut r, 1 + k % 5, 1.0, 1e-3);
        let p = random_pulse(&mut r, &m);
        let field = build_grid(&m, &p, default_window(&m, &p), DEFAULT_BUDGET)
            .and_then(|f| f.normalize())
            .map_err(|e| e.to_string())?;
        let out = scatter_freq(&m, &field);
        let n = out.out.norm_sqr().sqrt();
        worst_norm = worst_norm.max((n - 1.0).abs());
    }
    ensure(worst_norm <= 1e-9, || format!("norm deviation {worst_norm:e}"))?;

    let mut worst_time = 0.0f64;
    let cases = [
        (EmitterModel::tls(0.0, 1.0).unwrap(), 0.0, 1.0),
        (EmitterModel::tls(0.3, 2.0).unwrap(), 0.0, 0.64),
        (random_model(&mut r, 2, 1.0, 0.1), 0.5, 0.7),
        (random_model(&mut r, 3, 1.0, 0.05), -0.4, 1.2),
    ];
    for (m, center, bandwidth) in cases {
        let p = PulseSpec::Gaussian { center, bandwidth };
        let xt = pulse_time_series(&m, &p).map_err(|e| e.to_string())?;
        let yt = scatter_time(&m, &xt).map_err(|e| e.to_string())?;
        let half = 12.0 * bandwidth + 5.0 * m.gamma_rate() + m.spectral_spread();
        let xf = SampledField::uniform(center - half, center + half, 60001, |w| p.amplitude(w))
            .map_err(|e| e.to_string())?;
        let yf = scatter_freq(&m, &xf).out;
        let idx: Vec<usize> = (0..yt.samples.len()).step_by(11).collect();
        let times: Vec<f64> = idx.iter().map(|&k| yt.time(k)).collect();
        let oracle = inverse_fourier(&yf, &times);
        for (&k, o) in idx.iter().zip(&oracle) {
            worst_time = worst_time.max((yt.samples[k] - o).norm());
        }
    }
    ensure(worst_time <= 1e-4, || {
        format!("time/frequency deviation {worst_time:e}")
    })?;
    Ok(format!(
        "norm dev {worst_norm:.1e}, time/frequency dev {worst_time:.1e}"
    ))
}

fn roots_per_gap() -> Outcome {
    let mut r = StdRng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for k in 0..40 {
        let m = random_model(&mut r, 1 + k % 8, 1.0, 1e-3);
        let poles: Vec<f64> = m.poles().iter().map(|p| p.position).collect();
        let e = find_extrema_certified(&m, ParameterTag::Gamma).map_err(|e| e.to_string())?;
        for (c, w) in [(1.0, e.omega_max), (-1.0, e.omega_min)] {
            let roots = solve_chi_equals(&m, c).map_err(|e| e.to_string())?;
            for gap in poles.windows(2) {
                ensure(roots.iter().any(|&x| x > gap[0] && x < gap[1]), || {
                    format!("model {k}: gap {gap:?} has no root of chi = {c}")
                })?;
            }
            for &x in &roots {
                let res = (m.susceptibility(x).map_err(|e| e.to_string())? - c).abs();
                ensure(res <= 1e-10, || format!("model {k}: residual {res:e}"))?;
            }
            let d = roots.iter().map(|x| (x - w).abs()).fold(f64::INFINITY, f64::min);
            ensure(d <= 1e-8, || {
                format!("model {k}: extremizer {w} is {d:e} from the nearest root of chi = {c}")
            })?;
            worst = worst.max(d);
        }
    }
    Ok(format!("40 models, max extremizer/root distance {worst:.1e}"))
}

fn derivative_check() -> Outcome {
    let mut r = StdRng::seed_from_u64(31);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for k in 0..30 {
        let rate = r.gen_range(0.5..2.0);
        let m = random_model(&mut r, 1 + k % 6, rate, 1e-3);
        let h = 1e-6 * m.gamma_rate();
        let spread = m.spectral_spread() + m.gamma_rate();
        for theta in ParameterTag::all(m.n()) {
            // stay clear of poles, where the difference quotient is meaningless
            let w = loop {
                let w = r.gen_range(-spread..spread);
                if m.poles().iter().all(|p| (w - p.position).abs() > 0.05 * m.gamma_rate()) {
                    break w;
                }
            };
            let d = m.d_susceptibility(w, theta).map_err(|e| e.to_string())?;
            let up = m
                .shifted(theta, h)
                .and_then(|s| s.susceptibility(w))
                .map_err(|e| e.to_string())?;
            let down = m
                .shifted(theta, -h)
                .and_then(|s| s.susceptibility(w))
                .map_err(|e| e.to_string())?;
            let fd = (up - down) / (2.0 * h);
            let err = rel(fd, d);
            ensure(err <= 1e-5, || format!("model {k}, {theta} at {w}: {d} vs {fd}"))?;
            worst = worst.max(err);
            checked += 1;
        }
    }
    Ok(format!("{checked} derivatives, max relative error {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "1 TLS bounds are 4 and 16",
            limit: Duration::from_secs(1),
            run: tls_bounds,
        },
        Criterion {
            name: "2 rate bound is 4 for random emitters",
            limit: Duration::from_secs(30),
            run: gamma_universality,
        },
        Criterion {
            name: "3 line-width sweep",
            limit: Duration::from_secs(120),
            run: kappa_sweep,
        },
        Criterion {
            name: "4 bandwidth-sweep maxima",
            limit: Duration::from_secs(120),
            run: bandwidth_maxima,
        },
        Criterion {
            name: "5 variance and fidelity routes agree",
            limit: Duration::from_secs(60),
            run: two_route_qfi,
        },
        Criterion {
            name: "6 unitarity and time/frequency agreement",
            limit: Duration::from_secs(60),
            run: scattering_consistency,
        },
        Criterion {
            name: "7 roots in every gap match the extremizers",
            limit: Duration::from_secs(30),
            run: roots_per_gap,
        },
        Criterion {
            name: "8 susceptibility derivatives",
            limit: Duration::from_secs(10),
            run: derivative_check,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > c.limit => Err(format!("{msg}; took {took:.2?}, limit {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("[PASS] {} ({took:.2?}): {msg}", c.name),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {} ({took:.2?}): {msg}", c.name);
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
