//! JSON result documents.

use logtr_core::scalar::{fmt_scalar, parse_scalar};
use logtr_core::{Error, FactorizedDifferential, Mode, PoleForm, Result};
use serde_json::{json, Value};

/// A computed differential with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultDoc {
    pub curve_hash: String,
    pub form: FactorizedDifferential,
    pub certificates: Value,
}

pub fn mode_from_name(s: &str) -> Result<Mode> {
    match s {
        "tr" => Ok(Mode::Tr),
        "logtr" => Ok(Mode::LogTr),
        _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
    }
}

impl ResultDoc {
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .form
            .records()
            .into_iter()
            .map(|(poles, c)| {
                let poles: Vec<Value> = poles.into_iter().map(|(q, d)| json!({"q": fmt_scalar(&q), "d": d})).collect();
                json!({"poles": poles, "coeff": fmt_scalar(&c)})
            })
            .collect();
        json!({
            "curve_hash": self.curve_hash,
            "mode": self.form.mode.name(),
            "g": self.form.g,
            "n": self.form.n,
            "terms": terms,
            "certificates": self.certificates,
        })
    }

    /// Pretty-printed with a trailing newline.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<ResultDoc> {
        let bad = |m: &str| Error::Parse(format!("result document: {m}"));
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let str_field = |k: &str| v.get(k).and_then(Value::as_str).ok_or_else(|| bad(&format!("missing {k}")));
        let uint_field = |k: &str| v.get(k).and_then(Value::as_u64).ok_or_else(|| bad(&format!("missing {k}")));
        let mode = mode_from_name(str_field("mode")?)?;
        let g = u32::try_from(uint_field("g")?).map_err(|_| bad("g out of range"))?;
        let n = usize::try_from(uint_field("n")?).map_err(|_| bad("n out of range"))?;
        let mut form = FactorizedDifferential::new(g, n, mode);
        for t in v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))? {
            let c = parse_scalar(t.get("coeff").and_then(Value::as_str).ok_or_else(|| bad("term without coeff"))?)?;
            let mut key = Vec::new();
            for p in t.get("poles").and_then(Value::as_array).ok_or_else(|| bad("term without poles"))? {
                let q = parse_scalar(p.get("q").and_then(Value::as_str).ok_or_else(|| bad("pole without q"))?)?;
                let d = p.get("d").and_then(Value::as_u64).and_then(|d| u32::try_from(d).ok()).ok_or_else(|| bad("pole without d"))?;
                key.push(PoleForm::new(q, d));
            }
            form.add_term(key, c).map_err(|e| bad(&e.to_string()))?;
        }
        Ok(ResultDoc {
            curve_hash: str_field("curve_hash")?.to_string(),
            form,
            certificates: v.get("certificates").cloned().unwrap_or(Value::Null),
        })
    }
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &std::path::Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path.file_name().ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}
