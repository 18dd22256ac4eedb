use std::io::Write;
use std::path::PathBuf;

use halfline::kernels::{EquationKind, KernelSpec, NormalizedKernel};
use halfline::oracle::{cn_evolve, spectral_heat_kernel, terms_needed, GridState, SpectralBasis};
use halfline::verify::{run_suite, Suite, VerifyConfig, SCHEMA_VERSION};
use halfline::Error;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::grid::{points, Axis};
use crate::{open_output, CompareArgs, Failure, Format, OracleArg, OutputArgs};

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn finish(mut out: Box<dyn Write>, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Bad input points are configuration errors; anything else is a failure.
fn classify(e: Error) -> Failure {
    match e {
        Error::Domain(m) => Failure::Config(m),
        other => Failure::Checks(other.to_string()),
    }
}

struct EvalRow {
    t: f64,
    x: f64,
    log_magnitude: f64,
    magnitude: f64,
    phase: f64,
    caustic: bool,
}

pub fn eval(spec: KernelSpec, t: &Axis, x: &Axis, output: &OutputArgs) -> Result<(), Failure> {
    let kernel = NormalizedKernel::analytic(spec);
    let rows: Vec<Result<EvalRow, Error>> = points(t, x)
        .into_par_iter()
        .map(|(t, x)| match kernel.evaluate(t, x) {
            Ok(v) => Ok(EvalRow {
                t,
                x,
                log_magnitude: v.log_magnitude,
                magnitude: v.magnitude(),
                phase: v.phase,
                caustic: false,
            }),
            Err(Error::Caustic { .. }) => Ok(EvalRow {
                t,
                x,
                log_magnitude: f64::INFINITY,
                magnitude: f64::INFINITY,
                phase: f64::NAN,
                caustic: true,
            }),
            Err(e) => Err(e),
        })
        .collect();
    let rows: Vec<EvalRow> = rows.into_iter().collect::<Result<_, _>>().map_err(classify)?;

    let text = match output.format {
        Format::Csv => {
            let mut s = String::from("t,x,log_magnitude,magnitude,phase,flag\n");
            for r in &rows {
                let flag = if r.caustic { "caustic" } else { "ok" };
                s += &format!(
                    "{},{},{},{},{},{flag}\n",
                    num(r.t),
                    num(r.x),
                    num(r.log_magnitude),
                    num(r.magnitude),
                    num(r.phase)
                );
            }
            s
        }
        Format::Json => json_text(&json!({
            "schema_version": SCHEMA_VERSION,
            "kernel": spec,
            "rows": rows.iter().map(|r| json!({
                "t": r.t,
                "x": r.x,
                "log_magnitude": r.log_magnitude,
                "magnitude": r.magnitude,
                "phase": r.phase,
                "flag": if r.caustic { "caustic" } else { "ok" },
            })).collect::<Vec<_>>(),
        })),
    };
    finish(open_output(&output.out)?, &text)
}

pub fn verify(suite: Suite, cfg: &VerifyConfig, format: Format, out: &Option<PathBuf>) -> Result<(), Failure> {
    let report = run_suite(suite, cfg).map_err(|e| Failure::Config(e.to_string()))?;
    let text = match format {
        Format::Json => json_text(&serde_json::to_value(&report).expect("serializable")),
        Format::Csv => {
            let mut s = String::from("name,value,tolerance,bound,pass\n");
            for r in &report.records {
                s += &format!(
                    "\"{}\",{},{},{:?},{}\n",
                    r.name.replace('"', "\"\""),
                    num(r.value),
                    num(r.tolerance),
                    r.bound,
                    r.pass
                );
            }
            s
        }
    };
    finish(open_output(out)?, &text)?;
    let failed: Vec<&str> = report.failures().map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))))
    }
}

struct CompareRow {
    t: f64,
    x: f64,
    closed: Complex64,
    oracle: Complex64,
}

impl CompareRow {
    fn relative_diff(&self) -> f64 {
        let d = (self.closed - self.oracle).norm();
        if d == 0.0 {
            0.0
        } else {
            d / self.oracle.norm()
        }
    }
}

fn max_and_median(mut v: Vec<f64>) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    for d in &mut v {
        if d.is_nan() {
            *d = f64::INFINITY;
        }
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    (v[n - 1], median)
}

pub fn compare(spec: KernelSpec, a: &CompareArgs) -> Result<(), Failure> {
    let kernel = NormalizedKernel::analytic(spec);
    let mut l2 = None;
    let rows: Vec<CompareRow> = match a.oracle {
        OracleArg::SelfCheck => points(&a.t, &a.x)
            .into_par_iter()
            .map(|(t, x)| {
                let closed = kernel.evaluate_complex(t, x)?;
                Ok(CompareRow { t, x, closed, oracle: kernel.evaluate_complex(t, x)? })
            })
            .collect::<Result<_, Error>>()
            .map_err(classify)?,
        OracleArg::Spectral => {
            if spec.kind.equation() != EquationKind::Heat || spec.kind.is_free() {
                return Err(Failure::Config("the spectral oracle needs a heat kernel with omega > 0".into()));
            }
            let pts = points(&a.t, &a.x);
            let terms = match a.terms {
                Some(n) => n,
                None => pts
                    .par_iter()
                    .map(|&(t, x)| terms_needed(spec.params, spec.convention, spec.xi, t, x, 1e-12, 4096))
                    .collect::<Result<Vec<_>, Error>>()
                    .map_err(classify)?
                    .into_iter()
                    .max()
                    .unwrap_or(1),
            };
            let basis = SpectralBasis::new(spec.params, spec.convention, terms).map_err(classify)?;
            pts
                .into_par_iter()
                .map(|(t, x)| {
                    let closed = kernel.evaluate_complex(t, x)?;
                    let s = spectral_heat_kernel(&basis, spec.xi, t, x, f64::INFINITY)?;
                    Ok(CompareRow { t, x, closed, oracle: Complex64::new(s.value, 0.0) })
                })
                .collect::<Result<_, Error>>()
                .map_err(classify)?
        }
        OracleArg::Cn => {
            let x_max = (a.x_max / a.h).round() * a.h;
            let start = GridState::from_fn(a.h, x_max, |x| {
                kernel.evaluate_complex(a.t0, x).unwrap_or(Complex64::new(0.0, 0.0))
            })
            .map_err(classify)?
            .with_time(a.t0);
            let t_end = a.t0 + a.span;
            let (end, stats) =
                cn_evolve(spec.kind.equation(), &spec.params, spec.convention, &start, t_end, a.dt)
                    .map_err(classify)?;
            let closed: Vec<Complex64> = end
                .nodes()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|x| kernel.evaluate_complex(t_end, x))
                .collect::<Result<_, Error>>()
                .map_err(classify)?;
            let mut j = 0;
            l2 = Some((end.relative_l2_error(|_| {
                j += 1;
                closed[j - 1]
            }), stats.max_step_mass_drift));
            let last = end.values.len() - 1;
            a.x.values()
                .iter()
                .map(|&x| {
                    let j = ((x / end.h).round() as usize).saturating_sub(1).min(last);
                    CompareRow { t: t_end, x: end.x(j), closed: closed[j], oracle: end.values[j] }
                })
                .collect()
        }
    };

    let (max, median) = max_and_median(rows.iter().map(CompareRow::relative_diff).collect());
    let tol = a.tol.unwrap_or(match a.oracle {
        OracleArg::Spectral => 1e-9,
        OracleArg::SelfCheck => 0.0,
        OracleArg::Cn => 5e-3,
    });
    let (measure, measured) = match l2 {
        Some((e, _)) => ("l2_relative_error", e),
        None => ("max_relative_diff", max),
    };
    let pass = measured <= tol;

    let mut summary = format!("max_relative_diff={}, median_relative_diff={}", num(max), num(median));
    if let Some((e, drift)) = l2 {
        summary += &format!(", l2_relative_error={}, max_step_mass_drift={}", num(e), num(drift));
    }
    let text = match a.output.format {
        Format::Csv => {
            let mut s = String::from("t,x,closed_re,closed_im,oracle_re,oracle_im,relative_diff\n");
            for r in &rows {
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    num(r.t),
                    num(r.x),
                    num(r.closed.re),
                    num(r.closed.im),
                    num(r.oracle.re),
                    num(r.oracle.im),
                    num(r.relative_diff())
                );
            }
            eprintln!("{summary}");
            s
        }
        Format::Json => {
            let mut sum = json!({
                "max_relative_diff": max,
                "median_relative_diff": median,
                "tolerance": tol,
                "pass": pass,
            });
            if let Some((e, drift)) = l2 {
                sum["l2_relative_error"] = json!(e);
                sum["max_step_mass_drift"] = json!(drift);
            }
            json_text(&json!({
                "schema_version": SCHEMA_VERSION,
                "kernel": spec,
                "rows": rows.iter().map(|r| json!({
                    "t": r.t,
                    "x": r.x,
                    "closed_form": [r.closed.re, r.closed.im],
                    "oracle": [r.oracle.re, r.oracle.im],
                    "relative_diff": r.relative_diff(),
                })).collect::<Vec<_>>(),
                "summary": sum,
            }))
        }
    };
    finish(open_output(&a.output.out)?, &text)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Checks(format!("{measure} {} exceeds tolerance {}", num(measured), num(tol))))
    }
}
