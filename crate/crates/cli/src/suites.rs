//! Property suites run by `logtr check`.

use logtr_core::bridge::{log_from_tr, tr_from_log};
use logtr_core::recursion::Engine;
use logtr_core::scalar::fmt_scalar;
use logtr_core::swap::{closed_budget, closed_trivial_dual, hat_x, sample_points, swap_budget, xy_swap, HatXMode};
use logtr_core::{check_loop_equations, check_projection, swap_curve, Error, Mode, Scalar};
use serde_json::{json, Value};

use crate::spec::parse_spec;
use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Loops,
    Projection,
    Symmetry,
    Swap,
    Bridge,
    Closed,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Loops => "loops",
            Suite::Projection => "projection",
            Suite::Symmetry => "symmetry",
            Suite::Swap => "swap",
            Suite::Bridge => "bridge",
            Suite::Closed => "closed",
        }
    }
}

fn strings(v: &[Scalar]) -> Vec<String> {
    v.iter().map(fmt_scalar).collect()
}

/// Runs a suite; the report carries one entry per checked item and an
/// overall `pass`.
pub fn run_suite(spec_text: &str, suite: Suite, mode: Mode, budget: u32) -> CliResult<Value> {
    let spec = parse_spec(spec_text)?;
    let curve = spec.curve()?;
    let engine = Engine::new(curve.clone());
    let mut results: Vec<Value> = Vec::new();
    let mut report_mode = mode;
    match suite {
        Suite::Loops => {
            let fam = engine.family(mode, budget)?;
            for e in check_loop_equations(&fam, &curve)?.entries {
                results.push(json!({
                    "g": e.g, "n": e.n, "point": fmt_scalar(&e.point),
                    "linear_margin": e.linear_margin, "quadratic_margin": e.quadratic_margin, "pass": e.pass,
                }));
            }
        }
        Suite::Projection => {
            for ((g, n), w) in engine.family(mode, budget)? {
                let r = check_projection(&w, &curve, mode)?;
                results.push(json!({
                    "g": g, "n": n, "support_ok": r.support_ok, "principal_ok": r.principal_ok,
                    "stray_points": strings(&r.stray_points), "pass": r.pass(),
                }));
            }
        }
        Suite::Symmetry => {
            for ((g, n), w) in engine.family(mode, budget)? {
                results.push(json!({"g": g, "n": n, "pass": w.check_symmetry()}));
            }
        }
        Suite::Swap => {
            report_mode = Mode::LogTr;
            let dual = swap_curve(&curve)?;
            let dual_engine = Engine::new(dual.clone());
            let fam = engine.family(Mode::LogTr, budget)?;
            for &(g, n) in fam.keys() {
                let z = sample_points(&[&curve, &dual], n);
                let swapped = xy_swap(&curve, &fam, g, n, &z)?;
                let mut direct = dual_engine.compute(Mode::LogTr, g, n)?.evaluate(&z)?;
                for p in &z {
                    direct /= dual.dx.eval(p)?;
                }
                results.push(json!({
                    "g": g, "n": n, "points": strings(&z), "swap": fmt_scalar(&swapped), "direct": fmt_scalar(&direct),
                    "u_budget": swap_budget(g, n), "pass": swapped == direct,
                }));
            }
        }
        Suite::Bridge => {
            let tr = engine.family(Mode::Tr, budget)?;
            let log = engine.family(Mode::LogTr, budget)?;
            for (&(g, n), w) in &log {
                let up = log_from_tr(&tr, &curve, g, n)? == *w;
                let down = tr_from_log(&log, &curve, g, n)? == tr[&(g, n)];
                results.push(json!({"g": g, "n": n, "tr_to_logtr": up, "logtr_to_tr": down, "pass": up && down}));
            }
        }
        Suite::Closed => {
            report_mode = Mode::LogTr;
            if !curve.has_trivial_dual() {
                return Err(Error::AssumptionViolation("the closed formula needs dy without zeros".into()).into());
            }
            let mode = if spec.split.is_empty() { HatXMode::PerResidue } else { HatXMode::Split(spec.split.clone()) };
            let hx = hat_x(&curve, &mode)?;
            for (g, n) in logtr_core::recursion::budget_pairs(budget) {
                let z = sample_points(&[&curve], n);
                let closed = closed_trivial_dual(&curve, g, n, &hx, &z)?;
                let direct = engine.compute(Mode::LogTr, g, n)?.evaluate(&z)?;
                results.push(json!({
                    "g": g, "n": n, "points": strings(&z), "closed": fmt_scalar(&closed), "direct": fmt_scalar(&direct),
                    "u_budget": closed_budget(g, n), "pass": closed == direct,
                }));
            }
        }
    }
    let pass = results.iter().all(|r| r["pass"] == Value::Bool(true));
    Ok(json!({
        "curve_hash": spec.hash(),
        "suite": suite.name(),
        "mode": report_mode.name(),
        "budget": budget,
        "results": results,
        "pass": pass,
    }))
}
