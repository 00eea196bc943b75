use std::io::Write;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use super::{svg, usage, CliResult, Failure, Format, RunConfig, CSV_HEADER, SCHEMA_VERSION};
use crate::bayes::{lattice_sets, never_update_prior, posterior_null_prob};
use crate::error::Error;
use crate::exact::{self, Rational};
use crate::freq::{
    mp_test, mp_test_exact, power_at_exact, power_scan, power_scan_streaming, size_of_exact, unbiased_power_bound,
    unbiased_power_lp, unbiased_test, wap_bound, wap_factor, PowerReport, TestFunction,
};
use crate::identification::{invert_moments, moments};
use crate::oracle::{enumerate_pmf, monte_carlo_pmf, science_table_from};
use crate::population::{pmf, support, Design, OutcomeCounts, TypeSpace};

type Out<'a> = &'a mut dyn Write;

pub(crate) fn dispatch(config: &RunConfig, w: Out) -> CliResult<()> {
    match config.command {
        "pmf" => cmd_pmf(config, w),
        "support" => cmd_support(config, w),
        "identify" => cmd_identify(config, w),
        "mp-test" => cmd_mp_test(config, w),
        "power-scan" => cmd_power_scan(config, w),
        "wap" => cmd_wap(config, w),
        "wap-bound" => cmd_wap_bound(config, w),
        "unbiased" => cmd_unbiased(config, w),
        "unbiased-bound" => cmd_unbiased_bound(config, w),
        "bayes-demo" => cmd_bayes_demo(config, w),
        "oracle-verify" => cmd_oracle_verify(config, w),
        other => Err(Failure::Usage(format!("unknown command {other}"))),
    }
}

fn formats(config: &RunConfig, allowed: &[Format]) -> CliResult<Format> {
    let f = config.args.format;
    usage!(
        allowed.contains(&f),
        "{} does not support --format {}",
        config.command,
        format!("{f:?}").to_lowercase()
    );
    Ok(f)
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn q(r: &Rational) -> String {
    exact::format(r)
}

fn json_out(w: Out, config: &RunConfig, mut body: Value) -> CliResult<()> {
    let obj = body.as_object_mut().expect("json bodies are objects");
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("command".into(), json!(config.command));
    let text = serde_json::to_string_pretty(&body).map_err(|e| Error::Inconsistent(e.to_string()))?;
    writeln!(w, "{text}")?;
    Ok(())
}

fn design_json(d: Design) -> Value {
    json!({ "n": d.n(), "n1": d.n1() })
}

fn report_row(r: &PowerReport) -> String {
    let t = r.theta;
    format!("{},{},{},{},{},{},{}", t.at, t.nt, t.d, t.c, real(r.power), real(r.wap), real(r.size))
}

fn cmd_pmf(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let theta = config.theta(design)?;
    let f = pmf(design, &theta)?;
    match format {
        Format::Text => {
            writeln!(w, "pmf of {theta} with n={} n1={}", design.n(), design.n1())?;
            for i in f.support_indices() {
                let m = f.mass_at(i);
                writeln!(w, "{}  {}  {}", design.outcome_at(i), q(&m), exact::to_f64(&m))?;
            }
        }
        Format::Csv => {
            writeln!(w, "y_t,y_u,mass,probability")?;
            for (i, m) in f.masses().iter().enumerate() {
                let y = design.outcome_at(i);
                writeln!(w, "{},{},{},{}", y.y_t, y.y_u, q(m), real(exact::to_f64(m)))?;
            }
        }
        _ => {
            let rows: Vec<Value> = f
                .masses()
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let y = design.outcome_at(i);
                    json!({ "y_t": y.y_t, "y_u": y.y_u, "mass": q(m) })
                })
                .collect();
            json_out(w, config, json!({ "design": design_json(design), "theta": theta, "pmf": rows }))?;
        }
    }
    Ok(())
}

fn cmd_support(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let theta = config.theta(design)?;
    let s = support(design, &theta)?;
    match format {
        Format::Text => {
            let items: Vec<String> = s.iter().map(|y| y.to_string()).collect();
            writeln!(w, "{}", items.join(" "))?;
        }
        Format::Csv => {
            writeln!(w, "y_t,y_u")?;
            for y in &s {
                writeln!(w, "{},{}", y.y_t, y.y_u)?;
            }
        }
        _ => json_out(w, config, json!({ "design": design_json(design), "theta": theta, "support": s }))?,
    }
    Ok(())
}

fn cmd_identify(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Json])?;
    let design = config.design()?;
    let theta = config.theta(design)?;
    let m = moments(&pmf(design, &theta)?);
    let recovered = invert_moments(&m, design)?;
    if recovered != theta {
        return Err(Error::Inconsistent(format!("moments of {theta} invert to {recovered}")).into());
    }
    match format {
        Format::Text => {
            writeln!(w, "mu_t={} mu_u={} mu_tu={}", q(&m.mu_t), q(&m.mu_u), q(&m.mu_tu))?;
            writeln!(w, "{recovered}")?;
        }
        _ => json_out(
            w,
            config,
            json!({ "design": design_json(design), "theta": theta, "moments": m, "recovered": recovered }),
        )?,
    }
    Ok(())
}

fn test_values_json(delta: &TestFunction) -> Vec<Value> {
    let d = delta.design();
    delta
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let y = d.outcome_at(i);
            json!({ "y_t": y.y_t, "y_u": y.y_u, "delta": v })
        })
        .collect()
}

fn cmd_mp_test(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let theta = config.alternative(design)?;
    let alpha = config.alpha()?;
    let space = TypeSpace::new(design);
    let (delta, report) = mp_test(&space, &theta, alpha)?;
    let exact_run = if config.args.exact_lp {
        Some(mp_test_exact(&space, &theta, &exact::from_f64(alpha)?)?)
    } else {
        None
    };
    match format {
        Format::Text => {
            writeln!(w, "theta={} power={} wap={} size={}", theta, report.power, report.wap, report.size)?;
            if let Some(ex) = &exact_run {
                writeln!(w, "exact power={} ({}) size={}", q(&ex.power), exact::to_f64(&ex.power), q(&ex.size))?;
            }
        }
        Format::Csv => {
            writeln!(w, "{CSV_HEADER}")?;
            writeln!(w, "{}", report_row(&report))?;
        }
        _ => json_out(
            w,
            config,
            json!({
                "design": design_json(design),
                "alpha": alpha,
                "report": report,
                "test": test_values_json(&delta),
                "exact": exact_run,
            }),
        )?,
    }
    Ok(())
}

struct Summary {
    rows: usize,
    above_015: usize,
    max_power: f64,
    min_power: f64,
    wap_above_005: usize,
    max_wap: f64,
    max_size: f64,
}

fn summarize(rows: &[PowerReport]) -> Summary {
    Summary {
        rows: rows.len(),
        above_015: rows.iter().filter(|r| r.power > 0.15).count(),
        max_power: rows.iter().map(|r| r.power).fold(f64::NEG_INFINITY, f64::max),
        min_power: rows.iter().map(|r| r.power).fold(f64::INFINITY, f64::min),
        wap_above_005: rows.iter().filter(|r| r.wap > 0.05).count(),
        max_wap: rows.iter().map(|r| r.wap).fold(f64::NEG_INFINITY, f64::max),
        max_size: rows.iter().map(|r| r.size).fold(f64::NEG_INFINITY, f64::max),
    }
}

fn cmd_power_scan(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = config.args.format;
    let design = config.design()?;
    let alpha = config.alpha()?;
    let space = TypeSpace::new(design);
    if format == Format::Csv {
        writeln!(w, "{CSV_HEADER}")?;
        let mut io_err = None;
        power_scan_streaming(&space, alpha, |r| {
            if let Err(e) = writeln!(w, "{}", report_row(r)) {
                io_err = Some(e);
                return Err(Error::Inconsistent("output write failed".into()));
            }
            Ok(())
        })
        .map_err(|e| match io_err.take() {
            Some(io) => Failure::Io(io),
            None => Failure::Compute(e),
        })?;
        return Ok(());
    }
    let rows = power_scan(&space, alpha)?;
    let s = summarize(&rows);
    match format {
        Format::Svg => w.write_all(svg::histogram_svg(&rows, design, alpha).as_bytes())?,
        Format::Json => json_out(
            w,
            config,
            json!({
                "design": design_json(design),
                "alpha": alpha,
                "summary": {
                    "alternatives": s.rows,
                    "power_above_0.15": s.above_015,
                    "max_power": s.max_power,
                    "min_power": s.min_power,
                    "wap_above_0.05": s.wap_above_005,
                    "max_wap": s.max_wap,
                    "max_size": s.max_size,
                },
                "rows": rows,
            }),
        )?,
        _ => {
            writeln!(w, "alternatives: {}", s.rows)?;
            writeln!(w, "power > 0.15: {}", s.above_015)?;
            writeln!(w, "max power: {}", s.max_power)?;
            writeln!(w, "min power: {}", s.min_power)?;
            writeln!(w, "WAP > 0.05: {}", s.wap_above_005)?;
            writeln!(w, "max WAP: {}", s.max_wap)?;
            writeln!(w, "max size: {}", s.max_size)?;
        }
    }
    Ok(())
}

fn violation_share(theta: &crate::population::TypeCounts) -> Rational {
    exact::ratio(theta.d.min(theta.c) as i64, theta.total() as i64)
}

fn cmd_wap(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let theta = config.alternative(design)?;
    let alpha = config.alpha()?;
    let space = TypeSpace::new(design);
    let (_, report) = mp_test(&space, &theta, alpha)?;
    let v = violation_share(&theta);
    let bound = if design.n() >= 4 {
        Some(wap_bound(design.n(), &v, alpha)?)
    } else {
        None
    };
    match format {
        Format::Text => {
            writeln!(w, "theta={theta} wap={} power={}", report.wap, report.power)?;
            if let Some(b) = bound {
                writeln!(w, "bound at v={}: {b}", q(&v))?;
            }
        }
        Format::Csv => {
            writeln!(w, "n_at,n_nt,n_d,n_c,wap,power,bound")?;
            let b = bound.map(real).unwrap_or_default();
            writeln!(w, "{},{},{},{},{},{},{b}", theta.at, theta.nt, theta.d, theta.c, real(report.wap), real(report.power))?;
        }
        _ => json_out(
            w,
            config,
            json!({ "design": design_json(design), "alpha": alpha, "report": report, "v": q(&v), "bound": bound }),
        )?,
    }
    Ok(())
}

fn cmd_wap_bound(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let n = config.n()?;
    let alpha = config.alpha()?;
    let v = config
        .args
        .v
        .clone()
        .ok_or_else(|| Failure::Usage("wap-bound needs --v".into()))?;
    usage!(n >= 4, "wap-bound needs --n >= 4, got {n}");
    usage!(
        v >= exact::ratio(1, n as i64) && v <= exact::ratio(1, 2),
        "--v must lie in [1/n, 1/2], got {}",
        q(&v)
    );
    let factor = wap_factor(n, &v)?;
    let bound = wap_bound(n, &v, alpha)?;
    match format {
        Format::Text => writeln!(w, "{bound}")?,
        Format::Csv => {
            writeln!(w, "n,v,alpha,factor,bound")?;
            writeln!(w, "{n},{},{},{},{}", q(&v), real(alpha), real(factor), real(bound))?;
        }
        _ => json_out(w, config, json!({ "n": n, "v": q(&v), "alpha": alpha, "factor": factor, "bound": bound }))?,
    }
    Ok(())
}

fn cmd_unbiased(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let alpha = config.alpha()?;
    usage!(
        design.n1() == design.n0() && design.n1() >= 2,
        "unbiased needs n1 = n0 >= 2, got n1={} n0={}",
        design.n1(),
        design.n0()
    );
    let space = TypeSpace::new(design);
    let delta = unbiased_test(&space, alpha)?;
    if format == Format::Csv {
        writeln!(w, "y_t,y_u,delta")?;
        for (i, v) in delta.values().iter().enumerate() {
            let y = design.outcome_at(i);
            writeln!(w, "{},{},{}", y.y_t, y.y_u, real(*v))?;
        }
        return Ok(());
    }
    let size = size_of_exact(&space, &delta)?;
    let mut min_power: Option<Rational> = None;
    for &t in space.alternatives() {
        let p = power_at_exact(&delta, &space.types()[t])?;
        if min_power.as_ref().is_none_or(|m| p < *m) {
            min_power = Some(p);
        }
    }
    let min_power = min_power.unwrap_or_else(Rational::zero);
    let bump = delta.value(OutcomeCounts::new(design.n1() - 1, 1));
    match format {
        Format::Text => {
            writeln!(w, "delta at ({},1) = {bump}", design.n1() - 1)?;
            writeln!(w, "size = {} ({})", q(&size), exact::to_f64(&size))?;
            writeln!(w, "min power over alternatives = {} ({})", q(&min_power), exact::to_f64(&min_power))?;
        }
        _ => json_out(
            w,
            config,
            json!({
                "design": design_json(design),
                "alpha": alpha,
                "size": q(&size),
                "min_alternative_power": q(&min_power),
                "test": test_values_json(&delta),
            }),
        )?,
    }
    Ok(())
}

/// Largest `n` at which unbiased-bound also solves the primal LP.
const UNBIASED_LP_MAX_N: u32 = 16;

fn cmd_unbiased_bound(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let theta = config.alternative(design)?;
    let alpha = config.alpha()?;
    usage!(design.n() >= 4, "unbiased-bound needs --n >= 4");
    let bound = unbiased_power_bound(design, &theta, alpha)?;
    let lp = if design.n() <= UNBIASED_LP_MAX_N {
        Some(unbiased_power_lp(&TypeSpace::new(design), &theta, alpha)?.objective)
    } else {
        None
    };
    match format {
        Format::Text => {
            if let Some(v) = lp {
                writeln!(w, "lp optimum = {v}")?;
            }
            writeln!(w, "dual bound = {}", bound.dual_bound)?;
            writeln!(w, "closed form = {}", bound.closed_form)?;
        }
        Format::Csv => {
            writeln!(w, "n_at,n_nt,n_d,n_c,lp_optimum,dual_bound,closed_form")?;
            let l = lp.map(real).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{l},{},{}",
                theta.at,
                theta.nt,
                theta.d,
                theta.c,
                real(bound.dual_bound),
                real(bound.closed_form)
            )?;
        }
        _ => json_out(
            w,
            config,
            json!({ "design": design_json(design), "alpha": alpha, "lp_optimum": lp, "bound": bound }),
        )?,
    }
    Ok(())
}

fn cmd_bayes_demo(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Csv, Format::Json])?;
    let design = config.design()?;
    let n = design.n();
    usage!(
        n >= 4 && n % 2 == 0 && design.n1() * 2 == n,
        "bayes-demo needs even n >= 4 and n1 = n/2"
    );
    let c = config.args.c.clone().unwrap_or_else(|| exact::ratio(1, 2));
    usage!(c.is_positive() && c < Rational::one(), "--c must lie in (0, 1), got {}", q(&c));
    let prior = never_update_prior(design, &c)?;
    let marginal = prior.marginal()?;
    let mut rows = Vec::new();
    for (i, m) in marginal.iter().enumerate() {
        if m.is_zero() {
            continue;
        }
        let y = design.outcome_at(i);
        rows.push((y, m.clone(), posterior_null_prob(&prior, y)?));
    }
    let lattice = lattice_sets(n)?;
    match format {
        Format::Text => {
            writeln!(w, "prior null probability = {}", q(&prior.null_probability()))?;
            for (y, m, p) in &rows {
                writeln!(w, "y={y} marginal={} posterior null={}", q(m), q(p))?;
            }
            let pts: Vec<String> = lattice.c.iter().map(|y| y.to_string()).collect();
            writeln!(w, "lattice: {}", pts.join(" "))?;
        }
        Format::Csv => {
            writeln!(w, "y_t,y_u,marginal,posterior_null")?;
            for (y, m, p) in &rows {
                writeln!(w, "{},{},{},{}", y.y_t, y.y_u, q(m), q(p))?;
            }
        }
        _ => {
            let post: Vec<Value> = rows
                .iter()
                .map(|(y, m, p)| json!({ "y_t": y.y_t, "y_u": y.y_u, "marginal": q(m), "posterior_null": q(p) }))
                .collect();
            json_out(
                w,
                config,
                json!({ "design": design_json(design), "c": q(&c), "prior": prior, "posteriors": post, "lattice": lattice }),
            )?;
        }
    }
    Ok(())
}

fn cmd_oracle_verify(config: &RunConfig, w: Out) -> CliResult<()> {
    let format = formats(config, &[Format::Text, Format::Json])?;
    let design = config.design()?;
    let theta = config.theta(design)?;
    usage!(config.args.reps >= 1, "--reps must be at least 1");
    let exact_pmf = pmf(design, &theta)?;
    let table = science_table_from(&theta);
    let mut checks: Vec<(&str, Option<bool>, String)> = Vec::new();

    match enumerate_pmf(design, &table, config.args.cap) {
        Ok(e) => {
            let ok = e == exact_pmf;
            let detail = if ok {
                "enumerated pmf equals the exact pmf".to_string()
            } else {
                let diffs: Vec<String> = (0..design.grid_len())
                    .filter(|&i| e.mass_at(i) != exact_pmf.mass_at(i))
                    .map(|i| format!("{}: {} vs {}", design.outcome_at(i), q(&e.mass_at(i)), q(&exact_pmf.mass_at(i))))
                    .collect();
                diffs.join("; ")
            };
            checks.push(("enumeration", Some(ok), detail));
        }
        Err(Error::TooLarge(m)) => checks.push(("enumeration", None, m)),
        Err(e) => return Err(e.into()),
    }

    let mc = monte_carlo_pmf(design, &table, config.args.seed, config.args.reps)?;
    let tv = mc.total_variation(&exact_pmf)?;
    let k = exact_pmf.support_indices().len() as f64;
    let tol = (k / config.args.reps as f64).sqrt();
    checks.push((
        "monte-carlo",
        Some(tv <= tol),
        format!("tv={tv} tolerance={tol} seed={} reps={}", config.args.seed, config.args.reps),
    ));

    let back = invert_moments(&moments(&exact_pmf), design)?;
    checks.push(("identification", Some(back == theta), format!("moments invert to {back}")));

    match format {
        Format::Text => {
            for (name, ok, detail) in &checks {
                let status = match ok {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "SKIP",
                };
                writeln!(w, "{status} {name}: {detail}")?;
            }
        }
        _ => {
            let items: Vec<Value> = checks
                .iter()
                .map(|(name, ok, detail)| json!({ "check": name, "passed": ok, "detail": detail }))
                .collect();
            json_out(w, config, json!({ "design": design_json(design), "theta": theta, "checks": items }))?;
        }
    }
    let failed: Vec<&str> = checks.iter().filter(|c| c.1 == Some(false)).map(|c| c.0).collect();
    if !failed.is_empty() {
        w.flush()?;
        return Err(Error::Inconsistent(format!("oracle checks failed: {}", failed.join(", "))).into());
    }
    Ok(())
}
