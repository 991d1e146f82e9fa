//! Command implementations. Every command renders a deterministic document
//! (JSON or CSV) and reports an exit code:
//! 0 success, 2 convergence failure, 3 invalid input, 4 verification failure.

use std::path::Path;

use num_complex::Complex64;
use qkm_core::combinatorics::check_moment_cumulant;
use qkm_core::{
    compare_series, g0_diag, g0_oneone, g0_pair, g_matrix, residual_extension,
    residual_fractions, residual_lattice_2pt, residual_oneone_alpha, residual_oneone_functional,
    residual_reflection, sample_points, series_closed_form, series_oracle, solve_spectral,
    verify_schechter, CauchyNodes, Error as CoreError, ModelInput, OneOneFormula, PairFormula,
    ResidualReport, SpectralData,
};
use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::config::{OutputFormat, RunConfig};

pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub type CmdResult = Result<(String, i32), Failure>;

pub const VERIFY_THRESHOLD: f64 = 1e-8;

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn code_for(e: &CoreError) -> i32 {
    match e {
        CoreError::InvalidInput(_)
        | CoreError::OddN(_)
        | CoreError::InvalidType(_)
        | CoreError::NodeCollision(_) => 3,
        _ => 2,
    }
}

fn from_core(e: CoreError) -> Failure {
    fail(code_for(&e), e.to_string())
}

fn render_json(doc: &Json) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable document");
    s.push('\n');
    s
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn solve_from_config(cfg: &RunConfig) -> Result<SpectralData, Failure> {
    let input = cfg.model_input().map_err(from_core)?;
    solve_spectral(&input, &cfg.solver).map_err(from_core)
}

fn apply_overrides(cfg: &RunConfig, s: &mut SpectralData) -> Result<(), Failure> {
    if let Some(eps) = &cfg.override_eps {
        if eps.len() != s.eps.len() {
            return Err(fail(3, "override.eps has the wrong length"));
        }
        s.eps = eps.clone();
    }
    if let Some(rho) = &cfg.override_rho {
        if rho.len() != s.rho.len() {
            return Err(fail(3, "override.rho has the wrong length"));
        }
        s.rho = rho.clone();
    }
    Ok(())
}

fn input_json(s: &SpectralData) -> Json {
    json!({
        "E": s.input.e,
        "r": s.input.r,
        "N": s.input.n,
        "lambda": s.input.lambda,
    })
}

// ---------------------------------------------------------------------------

pub fn cmd_solve(cfg: &RunConfig) -> CmdResult {
    let s = solve_from_config(cfg)?;
    let alpha = s.curve().alpha_roots().map_err(from_core)?;
    match cfg.format {
        OutputFormat::Json => {
            let doc = json!({
                "schema": 1,
                "command": "solve",
                "input": input_json(&s),
                "eps": s.eps,
                "rho": s.rho,
                "alpha": alpha.alpha,
                "residual_max": s.residual_max,
            });
            Ok((render_json(&doc), 0))
        }
        OutputFormat::Csv => {
            let mut out = String::from("field,index,value\r\n");
            for (i, &x) in s.eps.iter().enumerate() {
                out.push_str(&format!("eps,{i},{}\r\n", fmt(x)));
            }
            for (i, &x) in s.rho.iter().enumerate() {
                out.push_str(&format!("rho,{i},{}\r\n", fmt(x)));
            }
            for (i, &x) in alpha.alpha.iter().enumerate() {
                out.push_str(&format!("alpha,{i},{}\r\n", fmt(x)));
            }
            out.push_str(&format!("residual_max,0,{}\r\n", fmt(s.residual_max)));
            Ok((out, 0))
        }
    }
}

// ---------------------------------------------------------------------------

pub fn cmd_correlator(cfg: &RunConfig, points_path: &Path, mode: &str) -> CmdResult {
    let s = solve_from_config(cfg)?;
    let points = read_points(points_path)?;
    let mut rows = Vec::new();
    let mut any_ok = false;
    for &(z, w) in &points {
        let outcome = match mode {
            "pair" => g0_pair(&s, z, w, PairFormula::All),
            "diag" => g0_diag(&s, z),
            "oneone" => g0_oneone(&s, z, w, OneOneFormula::All),
            other => return Err(fail(3, format!("unknown mode {other}"))),
        };
        match outcome {
            Ok(v) => {
                any_ok = true;
                rows.push((z, w, Some((v.value, v.cross_check_spread)), "ok".to_string()));
            }
            Err(e @ CoreError::SingularPoint(_)) | Err(e @ CoreError::PoleHit { .. }) => {
                rows.push((z, w, None, format!("singular: {e}")));
            }
            Err(e) => return Err(from_core(e)),
        }
    }
    let code = if any_ok { 0 } else { 3 };
    match cfg.format {
        OutputFormat::Json => {
            let rows_json: Vec<Json> = rows
                .iter()
                .map(|(z, w, val, status)| match val {
                    Some((v, spread)) => json!({
                        "z": [z.re, z.im], "w": [w.re, w.im],
                        "value": [v.re, v.im], "spread": spread, "status": status,
                    }),
                    None => json!({
                        "z": [z.re, z.im], "w": [w.re, w.im],
                        "value": Json::Null, "spread": Json::Null, "status": status,
                    }),
                })
                .collect();
            let doc = json!({
                "schema": 1,
                "command": "correlator",
                "mode": mode,
                "input": input_json(&s),
                "rows": rows_json,
            });
            Ok((render_json(&doc), code))
        }
        OutputFormat::Csv => {
            let mut out =
                String::from("z_re,z_im,w_re,w_im,value_re,value_im,spread,status\r\n");
            for (z, w, val, status) in &rows {
                match val {
                    Some((v, spread)) => out.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\r\n",
                        fmt(z.re), fmt(z.im), fmt(w.re), fmt(w.im),
                        fmt(v.re), fmt(v.im), fmt(*spread), status
                    )),
                    None => out.push_str(&format!(
                        "{},{},{},{},,,,{}\r\n",
                        fmt(z.re), fmt(z.im), fmt(w.re), fmt(w.im), status
                    )),
                }
            }
            Ok((out, code))
        }
    }
}

fn read_points(path: &Path) -> Result<Vec<(Complex64, Complex64)>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(3, format!("cannot read points file {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let nums = nums.map_err(|e| fail(3, format!("points line {}: {e}", lineno + 1)))?;
        if nums.len() != 4 {
            return Err(fail(3, format!("points line {}: expected re,im,re,im", lineno + 1)));
        }
        points.push((Complex64::new(nums[0], nums[1]), Complex64::new(nums[2], nums[3])));
    }
    if points.is_empty() {
        return Err(fail(3, "points file contains no points"));
    }
    Ok(points)
}

// ---------------------------------------------------------------------------

fn max_report(
    name: &str,
    samples: impl Iterator<Item = (String, Result<f64, CoreError>)>,
) -> Result<ResidualReport, Failure> {
    let mut max_residual = 0.0_f64;
    let mut worst_point = String::new();
    let mut count = 0usize;
    for (point, res) in samples {
        let r = res.map_err(|e| fail(4, format!("{name} at {point}: {e}")))?;
        count += 1;
        if r > max_residual {
            max_residual = r;
            worst_point = point;
        }
    }
    Ok(ResidualReport {
        name: name.into(),
        max_residual,
        sample_count: count,
        worst_point,
    })
}

pub fn build_verify_reports(cfg: &RunConfig, s: &SpectralData) -> Result<Vec<ResidualReport>, Failure> {
    let scale = s.input.scale();
    let pts = sample_points(scale, 10);
    let d = s.input.d;
    let mut reports = Vec::new();

    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect();
    reports.push(max_report(
        "extension_2pt",
        pairs.iter().map(|&(a, b)| {
            let zeta = Complex64::new(s.input.e[a] + 0.04 * scale, 0.01 * scale);
            let eta = Complex64::new(s.input.e[b] - 0.03 * scale, -0.02 * scale);
            (format!("zeta = {zeta}, eta = {eta}"), residual_extension(s, zeta, eta))
        }),
    )?);

    let lattice = residual_lattice_2pt(s).map_err(|e| fail(4, e.to_string()))?;
    reports.push(lattice);

    reports.push(max_report(
        "reflection",
        pts.iter().map(|&z| (format!("z = {z}"), residual_reflection(s, z))),
    )?);

    reports.push(max_report(
        "fractions",
        pts.iter().map(|&w| (format!("w = {w}"), residual_fractions(s, w))),
    )?);

    let curve = s.curve();
    reports.push(max_report(
        "factorization",
        pts.windows(2).map(|uv| {
            (
                format!("u = {}, z = {}", uv[0], uv[1]),
                curve.check_factorization(uv[0], uv[1]),
            )
        }),
    )?);

    if s.input.coupling() > 0.0 {
        let schechter = (|| -> qkm_core::Result<f64> {
            let alpha = curve.alpha_roots()?;
            let a: Vec<Complex64> = alpha
                .alpha
                .iter()
                .map(|&x| curve.eval(Complex64::new(x, 0.0)))
                .collect::<qkm_core::Result<_>>()?;
            let b: Vec<Complex64> = s
                .eps
                .iter()
                .map(|&x| curve.eval(Complex64::new(x, 0.0)))
                .collect::<qkm_core::Result<_>>()?;
            let nodes = CauchyNodes::new(a, b)?;
            let rep = verify_schechter(&nodes, Complex64::new(0.0, 0.3 * scale))?;
            Ok(rep
                .row_identity
                .max(rep.col_identity)
                .max(rep.row_sum_to_one)
                .max(rep.col_sum_to_one))
        })()
        .map_err(|e| fail(4, format!("schechter: {e}")))?;
        reports.push(ResidualReport {
            name: "schechter".into(),
            max_residual: schechter,
            sample_count: 1,
            worst_point: "structured node set from the solved curve".into(),
        });
    } else {
        reports.push(ResidualReport {
            name: "schechter".into(),
            max_residual: 0.0,
            sample_count: 0,
            worst_point: "skipped: node sets coincide at zero coupling".into(),
        });
    }

    reports.push(max_report(
        "oneone_functional",
        pts.windows(2).map(|zw| {
            (
                format!("z = {}, w = {}", zw[0], zw[1]),
                residual_oneone_functional(s, zw[0], zw[1]),
            )
        }),
    )?);

    reports.push(max_report(
        "oneone_alpha",
        pts.iter().take(4).map(|&w| (format!("w = {w}"), residual_oneone_alpha(s, w))),
    )?);

    let series = compare_series(&s.input, cfg.series_order.min(if d > 3 { 3 } else { 8 }))
        .map_err(|e| fail(4, e.to_string()))?;
    reports.push(series);

    let moment = (|| -> qkm_core::Result<f64> {
        let mut e_rat: Vec<num_rational::BigRational> = s
            .input
            .e
            .iter()
            .map(|&x| num_rational::BigRational::from_float(x).expect("finite"))
            .collect();
        if e_rat.len() < 2 {
            let one = num_rational::BigRational::from_float(1.0).unwrap();
            let extra = e_rat[0].clone() + one;
            e_rat.push(extra);
        }
        let n_rat = num_rational::BigRational::from_float(s.input.n).expect("finite");
        let mut worst = 0.0_f64;
        for n in [2usize, 4, 6] {
            let diff = check_moment_cumulant(&e_rat, &n_rat, n)?;
            if !num_traits::Zero::is_zero(&diff) {
                worst = 1.0;
            }
        }
        Ok(worst)
    })()
    .map_err(|e| fail(4, format!("moment_cumulant: {e}")))?;
    reports.push(ResidualReport {
        name: "moment_cumulant".into(),
        max_residual: moment,
        sample_count: 3,
        worst_point: "alternating entry word, exact rational arithmetic".into(),
    });

    Ok(reports)
}

pub fn cmd_verify(cfg: &RunConfig) -> CmdResult {
    let mut s = solve_from_config(cfg)?;
    apply_overrides(cfg, &mut s)?;
    let reports = build_verify_reports(cfg, &s)?;
    let pass = reports.iter().all(|r| r.max_residual <= VERIFY_THRESHOLD);
    let code = if pass { 0 } else { 4 };
    match cfg.format {
        OutputFormat::Json => {
            let reports_json: Vec<Json> = reports
                .iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "max_residual": r.max_residual,
                        "sample_count": r.sample_count,
                        "worst_point": r.worst_point,
                        "pass": r.max_residual <= VERIFY_THRESHOLD,
                    })
                })
                .collect();
            let doc = json!({
                "schema": 1,
                "command": "verify",
                "input": input_json(&s),
                "threshold": VERIFY_THRESHOLD,
                "reports": reports_json,
                "pass": pass,
            });
            Ok((render_json(&doc), code))
        }
        OutputFormat::Csv => {
            let mut out = String::from("name,max_residual,sample_count,worst_point,pass\r\n");
            for r in &reports {
                out.push_str(&format!(
                    "{},{},{},{:?},{}\r\n",
                    r.name,
                    fmt(r.max_residual),
                    r.sample_count,
                    r.worst_point,
                    r.max_residual <= VERIFY_THRESHOLD
                ));
            }
            Ok((out, code))
        }
    }
}

// ---------------------------------------------------------------------------

pub fn cmd_series(cfg: &RunConfig) -> CmdResult {
    let input = cfg.model_input().map_err(from_core)?;
    let order = cfg.series_order;
    let closed = series_closed_form(&input, order).map_err(from_core)?;
    let oracle = series_oracle(&input, order).map_err(from_core)?;
    let report = compare_series(&input, order).map_err(from_core)?;
    match cfg.format {
        OutputFormat::Json => {
            let mut entries = Vec::new();
            for a in 0..input.d {
                for b in 0..input.d {
                    let cc: Vec<f64> = (0..=order).map(|m| closed[a][b].coeff(m).re).collect();
                    let oc: Vec<f64> = (0..=order).map(|m| oracle[a][b].coeff(m).re).collect();
                    entries.push(json!({"k": a, "l": b, "closed": cc, "oracle": oc}));
                }
            }
            let doc = json!({
                "schema": 1,
                "command": "series",
                "order": order,
                "jets": entries,
                "max_deviation": report.max_residual,
                "worst": report.worst_point,
            });
            Ok((render_json(&doc), 0))
        }
        OutputFormat::Csv => {
            let mut out = String::from("k,l,order,closed,oracle\r\n");
            for a in 0..input.d {
                for b in 0..input.d {
                    for m in 0..=order {
                        out.push_str(&format!(
                            "{a},{b},{m},{},{}\r\n",
                            fmt(closed[a][b].coeff(m).re),
                            fmt(oracle[a][b].coeff(m).re)
                        ));
                    }
                }
            }
            Ok((out, 0))
        }
    }
}

// ---------------------------------------------------------------------------

pub fn cmd_sweep(cfg: &RunConfig, grid: &str) -> CmdResult {
    let lambdas = parse_grid(grid)?;
    let base = cfg.model_input().map_err(from_core)?;
    let d = base.d;
    let rows: Vec<Result<(ModelInput, SpectralData, Vec<f64>, Vec<f64>), String>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let input = ModelInput::new(base.e.clone(), base.r.clone(), Some(base.n), lambda)
                .map_err(|e| e.to_string())?;
            let s = solve_spectral(&input, &cfg.solver).map_err(|e| e.to_string())?;
            let alpha = s.curve().alpha_roots().map_err(|e| e.to_string())?.alpha;
            let g = g_matrix(&s).map_err(|e| e.to_string())?;
            let diag: Vec<f64> = (0..d).map(|k| g[k][k]).collect();
            Ok((input, s, alpha, diag))
        })
        .collect();
    let mut header = String::from("lambda");
    for k in 1..=d {
        header.push_str(&format!(",eps_{k}"));
    }
    for k in 1..=d {
        header.push_str(&format!(",rho_{k}"));
    }
    for k in 1..=d {
        header.push_str(&format!(",alpha_{k}"));
    }
    for k in 1..=d {
        header.push_str(&format!(",g_{k}{k}"));
    }
    header.push_str(",residual_max,status\r\n");
    let mut out = header;
    let mut any_ok = false;
    for (lambda, row) in lambdas.iter().zip(rows) {
        match row {
            Ok((_, s, alpha, diag)) => {
                any_ok = true;
                let mut line = fmt(*lambda);
                for &x in s.eps.iter().chain(&s.rho).chain(&alpha).chain(&diag) {
                    line.push(',');
                    line.push_str(&fmt(x));
                }
                line.push_str(&format!(",{},ok\r\n", fmt(s.residual_max)));
                out.push_str(&line);
            }
            Err(msg) => {
                let blanks = ",".repeat(4 * d + 1);
                out.push_str(&format!("{}{blanks},FAILED: {msg}\r\n", fmt(*lambda)));
            }
        }
    }
    let code = if any_ok { 0 } else { 2 };
    Ok((out, code))
}

fn parse_grid(grid: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(fail(3, "lambda grid must be a:b:step"));
    }
    let a: f64 = parts[0].parse().map_err(|e| fail(3, format!("bad grid start: {e}")))?;
    let b: f64 = parts[1].parse().map_err(|e| fail(3, format!("bad grid end: {e}")))?;
    let step: f64 = parts[2].parse().map_err(|e| fail(3, format!("bad grid step: {e}")))?;
    if !(step > 0.0) || b < a || a < 0.0 {
        return Err(fail(3, "lambda grid must satisfy 0 <= a <= b, step > 0"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| a + step * i as f64).collect())
}

// ---------------------------------------------------------------------------

pub fn cmd_selftest() -> CmdResult {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        lines.push(format!("{} {name}", if pass { "ok  " } else { "FAIL" }));
        ok &= pass;
    };

    let input = ModelInput::new(vec![1.0, 2.0], vec![1.0, 1.5], None, 0.1).unwrap();
    let solved = solve_spectral(&input, &qkm_core::SolveOptions::default());
    let s = match solved {
        Ok(s) => {
            check("spectral solve converges", s.residual_max < 1e-12 * s.input.scale());
            s
        }
        Err(e) => return Err(fail(2, format!("selftest solve failed: {e}"))),
    };

    let z = Complex64::new(0.7, 0.3);
    let w = Complex64::new(1.4, -0.2);
    match g0_pair(&s, z, w, PairFormula::All) {
        Ok(v) => check("two-point formulas agree", v.cross_check_spread < 1e-8),
        Err(_) => check("two-point formulas agree", false),
    }
    match g0_oneone(&s, z, w, OneOneFormula::All) {
        Ok(v) => check("1+1-point formulas agree", v.cross_check_spread < 1e-8),
        Err(_) => check("1+1-point formulas agree", false),
    }
    match residual_lattice_2pt(&s) {
        Ok(r) => check("lattice equation residual", r.max_residual < 1e-8),
        Err(_) => check("lattice equation residual", false),
    }
    match compare_series(&input, 4) {
        Ok(r) => check("series oracle agreement", r.max_residual < 1e-8),
        Err(_) => check("series oracle agreement", false),
    }
    let nodes = CauchyNodes::new(
        vec![Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
    )
    .unwrap();
    let inv = qkm_core::cauchy_inverse(&nodes);
    let expect = [[-6.0, 12.0], [4.0, -6.0]];
    let mut cauchy_ok = true;
    for k in 0..2 {
        for l in 0..2 {
            cauchy_ok &= (inv.entries[k][l] - Complex64::new(expect[k][l], 0.0)).norm() < 1e-13;
        }
    }
    check("structured matrix inverse", cauchy_ok);
    let e_rat: Vec<num_rational::BigRational> = [1.0, 2.0]
        .iter()
        .map(|&x| num_rational::BigRational::from_float(x).unwrap())
        .collect();
    let n_rat = num_rational::BigRational::from_float(2.5).unwrap();
    let mc = check_moment_cumulant(&e_rat, &n_rat, 4)
        .map(|d| num_traits::Zero::is_zero(&d))
        .unwrap_or(false);
    check("moment-cumulant identity", mc);

    let mut out = lines.join("\n");
    out.push('\n');
    Ok((out, if ok { 0 } else { 4 }))
}
