//! Plain-text policy checkpoints.
//!
//! ```text
//! RLQVO-CKPT v1
//! layers=2 dim=64 in=7 dropout=0.2 seed=0
//! W gcn0.weight 7 64
//! <7 lines of 64 values>
//! W gcn0.bias 1 64
//! ...
//! ```
//! Values are written with 17 significant digits, which round-trips `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CheckpointError, Error, Result};
use crate::features::FEATURE_WIDTH;
use crate::linalg::Matrix;
use crate::policy::{Dense, Parameters, PolicyConfig, PolicyModel};

const MAGIC: &str = "RLQVO-CKPT";
const VERSION: &str = "v1";

fn tensor_names(layers: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..layers).map(|l| format!("gcn{l}")).collect();
    names.push("mlp1".into());
    names.push("mlp2".into());
    names
}

pub fn save_model(model: &PolicyModel, mut writer: impl Write) -> Result<()> {
    let c = model.config();
    writeln!(writer, "{MAGIC} {VERSION}")?;
    writeln!(
        writer,
        "layers={} dim={} in={FEATURE_WIDTH} dropout={} seed={}",
        c.layers, c.hidden, c.dropout, c.seed
    )?;
    let p = model.parameters();
    let layers = p.gcn.iter().chain([&p.hidden, &p.output]);
    for (name, dense) in tensor_names(c.layers).iter().zip(layers) {
        let w = &dense.weight;
        writeln!(writer, "W {name}.weight {} {}", w.rows(), w.cols())?;
        for r in 0..w.rows() {
            write_row(&mut writer, w.row(r))?;
        }
        writeln!(writer, "W {name}.bias 1 {}", dense.bias.len())?;
        write_row(&mut writer, &dense.bias)?;
    }
    Ok(())
}

fn write_row(writer: &mut impl Write, values: &[f64]) -> Result<()> {
    let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(writer, "{}", line.join(" "))?;
    Ok(())
}

pub fn save_model_file(model: &PolicyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    save_model(model, &mut writer)?;
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn model_to_string(model: &PolicyModel) -> String {
    let mut buf = Vec::new();
    save_model(model, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("checkpoint text is ASCII")
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<PolicyModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_model(BufReader::new(file))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<(usize, String)> {
        self.number += 1;
        match self.inner.next() {
            Some(line) => Ok((self.number, line?)),
            None => Err(CheckpointError::Corrupt {
                line: self.number,
                reason: "unexpected end of file".into(),
            }
            .into()),
        }
    }
}

fn corrupt(line: usize, reason: impl Into<String>) -> Error {
    CheckpointError::Corrupt {
        line,
        reason: reason.into(),
    }
    .into()
}

fn dimension(line: usize, reason: impl Into<String>) -> Error {
    CheckpointError::Dimension {
        line,
        reason: reason.into(),
    }
    .into()
}

pub fn load_model(reader: impl BufRead) -> Result<PolicyModel> {
    let mut lines = Lines {
        inner: reader.lines(),
        number: 0,
    };
    let (_, magic) = lines.next_line().map_err(|_| CheckpointError::BadMagic)?;
    let mut parts = magic.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(CheckpointError::BadMagic.into());
    }
    match parts.next() {
        Some(VERSION) if parts.next().is_none() => {}
        other => return Err(CheckpointError::Version(other.unwrap_or("").to_string()).into()),
    }

    let (line, header) = lines.next_line()?;
    let mut layers = None;
    let mut hidden = None;
    let mut input = None;
    let mut dropout = None;
    let mut seed = None;
    for token in header.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| corrupt(line, format!("bad hyperparameter `{token}`")))?;
        let bad = || corrupt(line, format!("bad value for `{key}`"));
        match key {
            "layers" => layers = Some(value.parse::<usize>().map_err(|_| bad())?),
            "dim" => hidden = Some(value.parse::<usize>().map_err(|_| bad())?),
            "in" => input = Some(value.parse::<usize>().map_err(|_| bad())?),
            "dropout" => dropout = Some(value.parse::<f64>().map_err(|_| bad())?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
            _ => return Err(corrupt(line, format!("unknown hyperparameter `{key}`"))),
        }
    }
    let missing = |k: &str| corrupt(line, format!("missing `{k}`"));
    let config = PolicyConfig {
        layers: layers.ok_or_else(|| missing("layers"))?,
        hidden: hidden.ok_or_else(|| missing("dim"))?,
        dropout: dropout.ok_or_else(|| missing("dropout"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
    };
    let input = input.ok_or_else(|| missing("in"))?;
    if input != FEATURE_WIDTH {
        return Err(dimension(
            line,
            format!("input width {input}, expected {FEATURE_WIDTH}"),
        ));
    }
    if config.layers == 0 || config.hidden == 0 {
        return Err(dimension(line, "layers and dim must be positive"));
    }

    let d = config.hidden;
    let mut dense_layers = Vec::with_capacity(config.layers + 2);
    for (i, name) in tensor_names(config.layers).iter().enumerate() {
        let fan_in = if i == 0 { FEATURE_WIDTH } else { d };
        let fan_out = if i == config.layers + 1 { 1 } else { d };
        let weight = read_tensor(&mut lines, &format!("{name}.weight"), fan_in, fan_out)?;
        let bias = read_tensor(&mut lines, &format!("{name}.bias"), 1, fan_out)?;
        dense_layers.push(Dense {
            weight,
            bias: bias.as_slice().to_vec(),
        });
    }
    if let Some(extra) = lines.inner.next() {
        if !extra?.trim().is_empty() {
            return Err(corrupt(lines.number + 1, "trailing content"));
        }
    }
    let output = dense_layers.pop().unwrap();
    let hidden_layer = dense_layers.pop().unwrap();
    let params = Parameters {
        gcn: dense_layers,
        hidden: hidden_layer,
        output,
    };
    Ok(PolicyModel::from_parts(config, params))
}

fn read_tensor<R: BufRead>(lines: &mut Lines<R>, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let (line, header) = lines.next_line()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "W" {
        return Err(corrupt(line, format!("expected `W {name} <rows> <cols>`")));
    }
    if parts[1] != name {
        return Err(corrupt(
            line,
            format!("expected tensor `{name}`, found `{}`", parts[1]),
        ));
    }
    let declared_rows: usize = parts[2].parse().map_err(|_| corrupt(line, "bad row count"))?;
    let declared_cols: usize = parts[3].parse().map_err(|_| corrupt(line, "bad column count"))?;
    if (declared_rows, declared_cols) != (rows, cols) {
        return Err(dimension(
            line,
            format!("`{name}` is {declared_rows}x{declared_cols}, expected {rows}x{cols}"),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line, text) = lines.next_line()?;
        let before = data.len();
        for token in text.split_whitespace() {
            let value: f64 = token
                .parse()
                .map_err(|_| corrupt(line, format!("bad number `{token}`")))?;
            data.push(value);
        }
        if data.len() - before != cols {
            return Err(dimension(
                line,
                format!(
                    "row of `{name}` has {} values, expected {cols}",
                    data.len() - before
                ),
            ));
        }
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PolicyModel {
        PolicyModel::init(PolicyConfig {
            layers: 2,
            hidden: 4,
            dropout: 0.2,
            seed: 9,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut model = small();
        model.parameters_mut().output.bias[0] = -0.0;
        model.parameters_mut().hidden.bias[1] = 1e-300;
        let text = model_to_string(&model);
        let loaded = load_model(text.as_bytes()).unwrap();
        assert!(loaded.bit_eq(&model));
        assert_eq!(model_to_string(&loaded), text);
    }

    #[test]
    fn header_lines() {
        let text = model_to_string(&small());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("RLQVO-CKPT v1"));
        assert_eq!(lines.next(), Some("layers=2 dim=4 in=7 dropout=0.2 seed=9"));
        assert_eq!(lines.next(), Some("W gcn0.weight 7 4"));
    }

    #[test]
    fn wrong_magic() {
        let text = model_to_string(&small()).replacen("RLQVO-CKPT", "NOPE", 1);
        assert!(matches!(
            load_model(text.as_bytes()),
            Err(Error::Checkpoint(CheckpointError::BadMagic))
        ));
        assert!(matches!(
            load_model(&b""[..]),
            Err(Error::Checkpoint(CheckpointError::BadMagic))
        ));
    }

    #[test]
    fn wrong_version() {
        let text = model_to_string(&small()).replacen("v1", "v2", 1);
        assert!(matches!(
            load_model(text.as_bytes()),
            Err(Error::Checkpoint(CheckpointError::Version(_)))
        ));
    }

    #[test]
    fn declared_dim_disagrees_with_matrix() {
        let text = model_to_string(&small()).replacen("dim=4", "dim=8", 1);
        assert!(matches!(
            load_model(text.as_bytes()),
            Err(Error::Checkpoint(CheckpointError::Dimension { line: 3, .. }))
        ));
    }

    #[test]
    fn truncated_or_garbled() {
        let text = model_to_string(&small());
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            load_model(truncated.as_bytes()),
            Err(Error::Checkpoint(CheckpointError::Corrupt { .. }))
        ));
        let garbled = text.replacen("W gcn0.bias", "W gcn0.bais", 1);
        assert!(matches!(
            load_model(garbled.as_bytes()),
            Err(Error::Checkpoint(CheckpointError::Corrupt { .. }))
        ));
    }
}
