//! Library side of the `logtr` command: spec parsing, result documents and
//! the check suites.

pub mod output;
pub mod spec;
pub mod suites;

use std::path::Path;

use logtr_core::hurwitz::{check_conventions, check_expansion, frozen_conventions, hodge_extract, hurwitz_count, HurwitzQuery};
use logtr_core::recursion::{budget_pairs, Engine};
use logtr_core::scalar::fmt_scalar;
use logtr_core::{fixtures, Error, Mode, Scalar};
use serde_json::{json, Value};

use output::{write_atomic, ResultDoc};
use spec::parse_spec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("oracle: {0}")]
    Oracle(Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Oracle(Error::CapExceeded(_)) => 5,
            CliError::Oracle(e) | CliError::Core(e) => match e {
                Error::Parse(_) | Error::InvalidArgument(_) => 2,
                Error::AssumptionViolation(_) | Error::UnsupportedCurve(_) | Error::ChangeChart(_) => 3,
                Error::CapExceeded(_) | Error::InsufficientPrecision(_) => 4,
                _ => 1,
            },
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Rejects unstable `(g, n)` and requests beyond the budget.
pub fn check_budget(g: u32, n: usize, budget: u32) -> CliResult<()> {
    let chi = 2 * g as i64 - 2 + n as i64;
    if n == 0 || chi <= 0 {
        return Err(Error::InvalidArgument(format!("({g},{n}) is not stable")).into());
    }
    if chi > budget as i64 {
        return Err(Error::CapExceeded(format!("2g-2+n = {chi} exceeds the budget {budget}")).into());
    }
    Ok(())
}

fn certificates(engine: &Engine, mode: Mode, g: u32, n: usize) -> Value {
    let chi = (2 * g as i64 - 2 + n as i64) as u32;
    let windows: Vec<Value> = budget_pairs(chi)
        .into_iter()
        .filter_map(|(h, m)| engine.window(mode, h, m).map(|w| json!({"g": h, "n": m, "working_order": w})))
        .collect();
    json!({"windows": windows, "u_budget": null})
}

/// Computes `ω(g,n)` with `engine` and wraps it with its certificates.
pub fn compute_doc(engine: &Engine, curve_hash: String, mode: Mode, g: u32, n: usize) -> CliResult<ResultDoc> {
    let form = engine.compute(mode, g, n)?;
    Ok(ResultDoc { curve_hash, certificates: certificates(engine, mode, g, n), form })
}

/// Computes `ω(g,n)`, consulting `cache` (a directory) when given.
pub fn compute(spec_text: &str, mode: Mode, g: u32, n: usize, budget: u32, cache: Option<&Path>) -> CliResult<ResultDoc> {
    let spec = parse_spec(spec_text)?;
    check_budget(g, n, budget)?;
    let hash = spec.hash();
    let cached = cache.map(|d| d.join(format!("{hash}-{}-{g}-{n}.json", mode.name())));
    if let Some(p) = &cached {
        if let Ok(text) = std::fs::read_to_string(p) {
            // a damaged entry is recomputed
            if let Ok(doc) = ResultDoc::parse(&text) {
                if doc.curve_hash == hash && doc.form.mode == mode {
                    return Ok(doc);
                }
            }
        }
    }
    let doc = compute_doc(&Engine::new(spec.curve()?), hash, mode, g, n)?;
    if let (Some(p), Some(d)) = (&cached, cache) {
        std::fs::create_dir_all(d)?;
        write_atomic(p, &doc.to_text())?;
    }
    Ok(doc)
}

/// Parses a partition given as `"3,1"`, `"3 1"` or `"3"`.
pub fn parse_partition(s: &str) -> CliResult<Vec<usize>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad part {t:?} in {s:?}")).into()))
        .collect()
}

/// Connected simple Hurwitz number of genus `g` and profile `mu` of degree `d`.
pub fn oracle_hurwitz(d: usize, mu: &str, g: u32) -> CliResult<Scalar> {
    let mu = parse_partition(mu)?;
    if mu.iter().sum::<usize>() != d {
        return Err(Error::InvalidArgument(format!("partition {mu:?} does not have size {d}")).into());
    }
    let query = HurwitzQuery::new(g, mu).map_err(CliError::Oracle)?;
    hurwitz_count(&query).map_err(CliError::Oracle)
}

/// Genus-zero and genus-one intersection numbers read off the Lambert curve,
/// with their comparison against Hurwitz counts.
pub fn oracle_hodge() -> CliResult<Value> {
    let oracle = CliError::Oracle;
    let curve = fixtures::lambert();
    let family = Engine::new(curve.clone()).family(Mode::Tr, 3)?;
    let table = hodge_extract(&family, &curve)?;
    let conv = frozen_conventions()?;
    let mut checks = check_conventions(&table, &conv.hodge).map_err(oracle)?;
    for g in 1..=2 {
        checks.extend(check_expansion(&family, &curve, &conv.expansion, g, 4).map_err(oracle)?);
    }
    let consistent = checks.iter().all(|c| c.pass()) && table.psi_11 == table.lambda_11;
    let rows: Vec<Value> = checks
        .iter()
        .map(|c| json!({"g": c.g, "mu": c.mu, "predicted": fmt_scalar(&c.predicted), "counted": fmt_scalar(&c.counted), "pass": c.pass()}))
        .collect();
    Ok(json!({
        "one_03": fmt_scalar(&table.one_03),
        "psi_11": fmt_scalar(&table.psi_11),
        "lambda_11": fmt_scalar(&table.lambda_11),
        "checks": rows,
        "consistent": consistent,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::Parse("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::AssumptionViolation("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::CapExceeded("x".into())).exit_code(), 4);
        assert_eq!(CliError::Oracle(Error::CapExceeded("x".into())).exit_code(), 5);
        assert_eq!(CliError::Oracle(Error::InvalidArgument("x".into())).exit_code(), 2);
    }

    #[test]
    fn budget_and_stability() {
        assert!(check_budget(1, 1, 4).is_ok());
        assert_eq!(check_budget(0, 2, 4).unwrap_err().exit_code(), 2);
        assert_eq!(check_budget(2, 3, 4).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn partitions() {
        assert_eq!(parse_partition("3,1").unwrap(), vec![3, 1]);
        assert_eq!(parse_partition(" 2 2 ").unwrap(), vec![2, 2]);
        assert!(parse_partition("2,x").is_err());
    }

    #[test]
    fn hurwitz_oracle() {
        assert_eq!(fmt_scalar(&oracle_hurwitz(2, "2", 0).unwrap()), "1/2");
        assert_eq!(fmt_scalar(&oracle_hurwitz(1, "1", 0).unwrap()), "1");
        assert_eq!(oracle_hurwitz(3, "2", 0).unwrap_err().exit_code(), 2);
        assert_eq!(oracle_hurwitz(9, "9", 0).unwrap_err().exit_code(), 5);
    }
}
