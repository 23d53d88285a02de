//! CSV and JSON writers, checkpoint (de)serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hybrid_thermal::{Complex64, ComplexMatrix, HybridState};
use serde_json::{json, Value};

use crate::CliError;

/// Shortest round-trip scientific notation.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn pairs(m: &ComplexMatrix) -> Value {
    Value::Array(m.as_slice().iter().map(|z| json!([z.re, z.im])).collect())
}

/// `{labels, dim_s, blocks}` with each block a row-major list of `[re, im]` pairs.
pub fn state_to_json(state: &HybridState, t: f64) -> Value {
    json!({
        "labels": state.num_labels(),
        "dim_s": state.dim(),
        "t": t,
        "blocks": state.blocks().iter().map(pairs).collect::<Vec<_>>(),
    })
}

pub fn state_from_json(v: &Value) -> Result<HybridState, CliError> {
    let bad = |m: &str| CliError::Input(format!("checkpoint: {m}"));
    let labels = v.get("labels").and_then(Value::as_u64).ok_or_else(|| bad("missing `labels`"))? as usize;
    let dim = v.get("dim_s").and_then(Value::as_u64).ok_or_else(|| bad("missing `dim_s`"))? as usize;
    let blocks = v.get("blocks").and_then(Value::as_array).ok_or_else(|| bad("missing `blocks`"))?;
    if blocks.len() != labels {
        return Err(bad("block count differs from `labels`"));
    }
    let mut out = Vec::with_capacity(labels);
    for b in blocks {
        let entries = b.as_array().filter(|a| a.len() == dim * dim).ok_or_else(|| bad("block has wrong size"))?;
        let data = entries
            .iter()
            .map(|e| match e.as_array().map(|p| (p.first().and_then(Value::as_f64), p.get(1).and_then(Value::as_f64))) {
                Some((Some(re), Some(im))) => Ok(Complex64::new(re, im)),
                _ => Err(bad("entries must be [re, im] pairs")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(ComplexMatrix::from_row_major(dim, data).map_err(CliError::model)?);
    }
    HybridState::new(out).map_err(CliError::model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybrid_thermal::random::random_hybrid_state;
    use rand::SeedableRng;

    #[test]
    fn checkpoint_round_trips_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let s = random_hybrid_state(&mut rng, 3, 2);
        let text = serde_json::to_string(&state_to_json(&s, 1.5)).unwrap();
        let back = state_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }
}
