use std::path::Path;

use super::model::{Cnn, CnnArchitecture};
use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::features::FeatureNormalizer;

const MAGIC: &[u8; 4] = b"CNN1";
const FLAG_TRAINED: u32 = 1;
const FLAG_NORMALIZER: u32 = 2;

/// Serializes to the `CNN1` layout: magic; architecture as u32 fields
/// (rows, cols, kernel, #conv, conv widths, #hidden, hidden widths, output)
/// and the f64 dropout; u32 flags (1 = trained, 2 = target normalizer
/// follows); the optional `NRM1` block; then every layer's weights and
/// biases as little-endian f32, in layer order.
pub fn encode_model(model: &Cnn<f32>) -> Vec<u8> {
    let a = model.architecture();
    let mut w = ByteWriter::default();
    w.magic(MAGIC)
        .u32(a.input_rows as u32)
        .u32(a.input_cols as u32)
        .u32(a.kernel as u32)
        .u32(a.conv.len() as u32);
    for &c in &a.conv {
        w.u32(c as u32);
    }
    w.u32(a.hidden.len() as u32);
    for &h in &a.hidden {
        w.u32(h as u32);
    }
    w.u32(a.output as u32).f64(a.dropout);
    let mut flags = 0;
    if model.is_trained() {
        flags |= FLAG_TRAINED;
    }
    if model.target_norm.is_some() {
        flags |= FLAG_NORMALIZER;
    }
    w.u32(flags);
    if let Some(n) = &model.target_norm {
        n.encode(&mut w);
    }
    for l in model.layers() {
        w.f32s(l.weight.iter().copied()).f32s(l.bias.iter().copied());
    }
    w.buf
}

fn corrupt(e: Error) -> Error {
    match e {
        Error::Format(m) | Error::Invalid(m) => Error::CorruptModel(m),
        other => other,
    }
}

pub fn decode_model(buf: &[u8]) -> Result<Cnn<f32>> {
    let mut r = ByteReader::new(buf, "CNN1");
    decode_inner(&mut r).map_err(corrupt)
}

fn decode_inner(r: &mut ByteReader) -> Result<Cnn<f32>> {
    r.expect_magic(MAGIC)?;
    let mut u = || r.u32().map(|v| v as usize);
    let (input_rows, input_cols, kernel) = (u()?, u()?, u()?);
    let n_conv = u()?;
    if n_conv > 64 {
        return Err(Error::Format(format!("{n_conv} convolution layers")));
    }
    let conv = (0..n_conv)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let n_hidden = r.u32()? as usize;
    if n_hidden > 64 {
        return Err(Error::Format(format!("{n_hidden} hidden layers")));
    }
    let hidden = (0..n_hidden)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let output = r.u32()? as usize;
    let dropout = r.f64()?;
    let flags = r.u32()?;
    let arch = CnnArchitecture {
        input_rows,
        input_cols,
        kernel,
        conv,
        hidden,
        output,
        dropout,
    };
    let mut model = Cnn::<f32>::zeros(arch)?;
    if flags & FLAG_NORMALIZER != 0 {
        let n = FeatureNormalizer::decode(r)?;
        if n.dims() != output {
            return Err(Error::Format(format!(
                "normalizer has {} dims, model outputs {output}",
                n.dims()
            )));
        }
        model.target_norm = Some(n);
    }
    for l in model.layers_mut() {
        l.weight = r.f32s(l.weight.len())?;
        l.bias = r.f32s(l.bias.len())?;
    }
    r.finish()?;
    if !model.all_finite() {
        return Err(Error::Format("non-finite weights".into()));
    }
    if flags & FLAG_TRAINED != 0 {
        model.mark_trained();
    }
    Ok(model)
}

pub fn save_model(model: &Cnn<f32>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Cnn<f32>> {
    decode_model(&read_file(path)?)
}
