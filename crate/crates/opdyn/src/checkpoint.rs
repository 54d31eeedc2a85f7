//! Plain-text regressor checkpoints.
//!
//! One `key = value` pair per line; blank lines and lines starting with `#`
//! are ignored. Arrays are whitespace separated, weights in row-major order
//! (`hidden_weights[j * window + k]` maps input `k` to hidden unit `j`).
//! Numbers carry 17 significant digits, so loading reproduces every bit.
//!
//! ```text
//! format = opdyn-mlp-1
//! window = 4
//! hidden = 32
//! seed = 0
//! hidden_weights = …   (hidden × window values)
//! hidden_bias = …      (hidden values)
//! output_weights = …   (hidden values)
//! output_bias = …
//! ```

use std::collections::HashMap;
use std::path::Path;

use opdyn_core::Mlp;

use crate::error::{Error, Result};
use crate::io::write_atomic;

const FORMAT: &str = "opdyn-mlp-1";

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn to_text(mlp: &Mlp) -> String {
    format!(
        "# linear MLP window -> hidden -> 1\nformat = {FORMAT}\nwindow = {}\nhidden = {}\nseed = {}\nhidden_weights = {}\nhidden_bias = {}\noutput_weights = {}\noutput_bias = {:.16e}\n",
        mlp.window(),
        mlp.hidden(),
        mlp.seed(),
        join(mlp.hidden_weights()),
        join(mlp.hidden_bias()),
        join(mlp.output_weights()),
        mlp.output_bias(),
    )
}

pub fn from_text(text: &str) -> std::result::Result<Mlp, String> {
    let mut fields = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            return Err(format!("duplicate key '{}'", k.trim()));
        }
    }
    let mut get = |key: &str| fields.remove(key).ok_or_else(|| format!("missing key '{key}'"));
    if get("format")? != FORMAT {
        return Err(format!("unsupported format, expected {FORMAT}"));
    }
    let int = |s: &str, key: &str| s.parse::<u64>().map_err(|e| format!("{key}: {e}"));
    let floats = |s: &str, key: &str| s.split_whitespace().map(|x| x.parse::<f64>().map_err(|e| format!("{key}: {e}"))).collect::<std::result::Result<Vec<_>, _>>();
    let window = int(get("window")?, "window")? as usize;
    let hidden = int(get("hidden")?, "hidden")? as usize;
    let seed = int(get("seed")?, "seed")?;
    let hidden_weights = floats(get("hidden_weights")?, "hidden_weights")?;
    let hidden_bias = floats(get("hidden_bias")?, "hidden_bias")?;
    let output_weights = floats(get("output_weights")?, "output_weights")?;
    let output_bias = get("output_bias")?.parse::<f64>().map_err(|e| format!("output_bias: {e}"))?;
    if let Some(extra) = fields.keys().next() {
        return Err(format!("unknown key '{extra}'"));
    }
    Mlp::from_parts(window, hidden, seed, hidden_weights, hidden_bias, output_weights, output_bias).map_err(|e| e.to_string())
}

pub fn save(path: &Path, mlp: &Mlp) -> Result<()> {
    write_atomic(path, to_text(mlp).as_bytes())
}

pub fn load(path: &Path) -> Result<Mlp> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    from_text(&text).map_err(|message| Error::Format { path: path.to_path_buf(), message })
}
