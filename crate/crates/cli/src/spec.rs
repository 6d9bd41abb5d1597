//! Curve specification files.

use logtr_core::scalar::{fmt_scalar, parse_scalar};
use logtr_core::{build_curve, Error, LogRationalFunction, Mobius, Poly, RationalFunction, Result, Scalar, SpectralCurve};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// A parsed curve specification.
#[derive(Clone, Debug)]
pub struct CurveSpec {
    pub x: LogRationalFunction,
    pub y: LogRationalFunction,
    /// `z = (aζ + b)/(cζ + d)`, applied before any computation.
    pub chart: Option<Mobius>,
    /// Log points of `x` whose integer coefficient is split into unit terms.
    pub split: Vec<Scalar>,
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn scalar(v: &Value, what: &str) -> Result<Scalar> {
    match v {
        Value::String(s) => parse_scalar(s),
        Value::Number(_) => Err(perr(format!("{what}: rationals must be quoted \"p/q\" strings, got {v}"))),
        _ => Err(perr(format!("{what}: expected a rational string"))),
    }
}

fn scalars(v: Option<&Value>, what: &str, default: &[i64]) -> Result<Vec<Scalar>> {
    match v {
        None => Ok(default.iter().map(|&k| Scalar::from_integer(k.into())).collect()),
        Some(Value::Array(a)) => a.iter().map(|e| scalar(e, what)).collect(),
        Some(_) => Err(perr(format!("{what}: expected a list"))),
    }
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| perr(format!("{what}: expected an object")))
}

fn reject_unknown(m: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<()> {
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(perr(format!("{what}: unknown field {k:?}"))),
        None => Ok(()),
    }
}

fn function(v: &Value, name: &str) -> Result<LogRationalFunction> {
    let m = object(v, name)?;
    reject_unknown(m, &["rational", "log"], name)?;
    let (num, den) = match m.get("rational") {
        None => (vec![], vec![Scalar::from_integer(1.into())]),
        Some(r) => {
            let r = object(r, &format!("{name}.rational"))?;
            reject_unknown(r, &["num", "den"], &format!("{name}.rational"))?;
            (scalars(r.get("num"), &format!("{name}.rational.num"), &[])?, scalars(r.get("den"), &format!("{name}.rational.den"), &[1])?)
        }
    };
    let rational = RationalFunction::new(Poly::new(num), Poly::new(den)).map_err(|_| perr(format!("{name}.rational: zero denominator")))?;
    let mut logs = Vec::new();
    if let Some(l) = m.get("log") {
        let l = l.as_array().ok_or_else(|| perr(format!("{name}.log: expected a list")))?;
        for e in l {
            let t = object(e, &format!("{name}.log"))?;
            reject_unknown(t, &["point", "coeff"], &format!("{name}.log"))?;
            let get = |k: &str| t.get(k).ok_or_else(|| perr(format!("{name}.log: missing {k}")));
            logs.push((scalar(get("point")?, &format!("{name}.log.point"))?, scalar(get("coeff")?, &format!("{name}.log.coeff"))?));
        }
    }
    LogRationalFunction::checked(rational, logs).map_err(|e| perr(format!("{name}: {e}")))
}

/// Parses a specification document.
pub fn parse_spec(text: &str) -> Result<CurveSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| perr(e.to_string()))?;
    let m = object(&v, "spec")?;
    reject_unknown(m, &["x", "y", "chart", "deformation"], "spec")?;
    let x = function(m.get("x").ok_or_else(|| perr("missing x"))?, "x")?;
    let y = function(m.get("y").ok_or_else(|| perr("missing y"))?, "y")?;
    let chart = match m.get("chart") {
        None | Some(Value::Null) => None,
        Some(c) => {
            let c = object(c, "chart")?;
            reject_unknown(c, &["mobius"], "chart")?;
            let abcd = scalars(c.get("mobius"), "chart.mobius", &[])?;
            let [a, b, cc, d]: [Scalar; 4] = abcd.try_into().map_err(|_| perr("chart.mobius: expected [a, b, c, d]"))?;
            Some(Mobius::new(a, b, cc, d).map_err(|e| perr(format!("chart: {e}")))?)
        }
    };
    let split = match m.get("deformation") {
        None | Some(Value::Null) => vec![],
        Some(d) => {
            let d = object(d, "deformation")?;
            reject_unknown(d, &["split"], "deformation")?;
            scalars(d.get("split"), "deformation.split", &[])?
        }
    };
    Ok(CurveSpec { x, y, chart, split })
}

fn strings(v: &[Scalar]) -> Vec<String> {
    v.iter().map(fmt_scalar).collect()
}

fn function_json(f: &LogRationalFunction) -> Value {
    let logs: Vec<Value> = f.log_terms().iter().map(|(a, c)| json!({"point": fmt_scalar(a), "coeff": fmt_scalar(c)})).collect();
    json!({
        "rational": {"num": strings(f.rational.num().coeffs()), "den": strings(f.rational.den().coeffs())},
        "log": logs,
    })
}

impl CurveSpec {
    /// Canonical document: reduced rational parts, log terms sorted by point.
    pub fn canonical(&self) -> Value {
        let mut m = Map::new();
        m.insert("x".into(), function_json(&self.x));
        m.insert("y".into(), function_json(&self.y));
        if let Some(c) = &self.chart {
            m.insert("chart".into(), json!({"mobius": strings(&[c.a.clone(), c.b.clone(), c.c.clone(), c.d.clone()])}));
        }
        if !self.split.is_empty() {
            let mut s = self.split.clone();
            s.sort();
            m.insert("deformation".into(), json!({"split": strings(&s)}));
        }
        Value::Object(m)
    }

    /// SHA-256 of the canonical document.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().to_string().as_bytes()))
    }

    /// The curve in the working chart.
    pub fn curve(&self) -> Result<SpectralCurve> {
        let c = build_curve(self.x.clone(), self.y.clone())?;
        match &self.chart {
            Some(m) => c.mobius(m),
            None => Ok(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBERT: &str = r#"{"x": {"rational": {"num": ["0", "1"]}, "log": [{"point": "0", "coeff": "-1"}]},
                              "y": {"rational": {"num": ["0", "1"]}}}"#;

    #[test]
    fn parses_lambert() {
        let s = parse_spec(LAMBERT).unwrap();
        let c = s.curve().unwrap();
        assert_eq!(c.ram_points(), vec![Scalar::from_integer(1.into())]);
        assert!(c.vital_points().is_empty());
    }

    #[test]
    fn rejects_floats_and_unknown_fields() {
        for bad in [
            r#"{"x": {"rational": {"num": ["0.5"]}}, "y": {}}"#,
            r#"{"x": {"rational": {"num": [0.5]}}, "y": {}}"#,
            r#"{"x": {"rational": {"num": [1]}}, "y": {}}"#,
            r#"{"x": {"rational": {"num": ["1e3"]}}, "y": {}}"#,
            r#"{"x": {}, "y": {}, "extra": 1}"#,
            r#"{"x": {}}"#,
            r#"{"x": {"rational": {"num": ["1"], "den": ["0"]}}, "y": {}}"#,
            r#"{"x": {"log": [{"point": "0", "coeff": "1"}, {"point": "0", "coeff": "2"}]}, "y": {}}"#,
        ] {
            assert!(matches!(parse_spec(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_log_order_and_representation() {
        let a = r#"{"x": {"rational": {"num": ["0", "3/4"]}, "log": [{"point": "0", "coeff": "1"}, {"point": "-2", "coeff": "1"}]}, "y": {"rational": {"num": ["0", "1"]}}}"#;
        let b = r#"{"y": {"rational": {"num": ["0", "2"], "den": ["2"]}}, "x": {"log": [{"point": "-2", "coeff": "1"}, {"point": "0", "coeff": "1"}], "rational": {"num": ["0", "6/8"]}}}"#;
        let (a, b) = (parse_spec(a).unwrap(), parse_spec(b).unwrap());
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), parse_spec(LAMBERT).unwrap().hash());
    }

    #[test]
    fn canonical_reparses_to_itself() {
        let s = parse_spec(LAMBERT).unwrap();
        let text = s.canonical().to_string();
        assert_eq!(parse_spec(&text).unwrap().canonical().to_string(), text);
    }
}
