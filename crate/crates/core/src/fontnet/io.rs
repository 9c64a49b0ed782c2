//! `SGFM` model files: magic, `u16` version, `u32` layer count, then per
//! layer a `u16`-prefixed UTF-8 name, a `u8` rank, `u32` dims, and the
//! row-major f32 values. Little-endian throughout.
//!
//! The `meta` layer stores the architecture and trained flag as
//! `[input_h, input_w, kernel, enc_maps, latent_maps, hidden, classes,
//! dropout, trained]`.

use std::fs;
use std::path::Path;

use super::model::{BnStats, FontModel, FontNetArch, Weights, WEIGHT_NAMES};
use super::FontError;

pub const MODEL_MAGIC: &[u8; 4] = b"SGFM";
pub const MODEL_VERSION: u16 = 1;

const STAT_NAMES: [&str; 4] = ["bn1.running_mean", "bn1.running_var", "bn2.running_mean", "bn2.running_var"];

fn put_layer(out: &mut Vec<u8>, name: &str, shape: &[usize], values: &[f32]) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_model(model: &FontModel) -> Vec<u8> {
    let a = &model.arch;
    let mut out = Vec::with_capacity(4 * model.weights.param_count() + 1024);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(1 + WEIGHT_NAMES.len() as u32 + STAT_NAMES.len() as u32).to_le_bytes());
    let meta = [
        a.input_h as f32,
        a.input_w as f32,
        a.kernel as f32,
        a.enc_maps as f32,
        a.latent_maps as f32,
        a.hidden as f32,
        a.classes as f32,
        a.dropout as f32,
        if model.trained { 1.0 } else { 0.0 },
    ];
    put_layer(&mut out, "meta", &[meta.len()], &meta);
    for ((name, shape), t) in WEIGHT_NAMES.iter().zip(Weights::<f32>::shapes(a)).zip(model.weights.tensors()) {
        put_layer(&mut out, name, &shape, t);
    }
    let c = a.enc_maps;
    for (name, t) in STAT_NAMES.iter().zip([&model.bn1.mean, &model.bn1.var, &model.bn2.mean, &model.bn2.var]) {
        put_layer(&mut out, name, &[c], t);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FontError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| FontError::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, FontError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, FontError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, FontError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn layer(&mut self) -> Result<(String, Vec<usize>, Vec<f32>), FontError> {
        let len = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(len)?)
            .map_err(|_| FontError::ModelFormat("layer name is not UTF-8".into()))?;
        let rank = self.u8()? as usize;
        let shape = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let count = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let count = count.ok_or_else(|| FontError::ModelFormat(format!("layer {name}: shape overflow")))?;
        let bytes = self.take(count.checked_mul(4).ok_or_else(|| FontError::ModelFormat("layer too large".into()))?)?;
        let values = bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
        Ok((name.to_string(), shape, values))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<FontModel, FontError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(FontError::ModelFormat("bad magic".into()));
    }
    let version = r.u16()?;
    if version != MODEL_VERSION {
        return Err(FontError::ModelFormat(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let expected = 1 + WEIGHT_NAMES.len() + STAT_NAMES.len();
    if count != expected {
        return Err(FontError::ModelFormat(format!("{count} layers, expected {expected}")));
    }
    let (name, _, meta) = r.layer()?;
    if name != "meta" || meta.len() != 9 {
        return Err(FontError::ModelFormat("missing meta layer".into()));
    }
    let dim = |v: f32| v as usize;
    let arch = FontNetArch {
        input_h: dim(meta[0]),
        input_w: dim(meta[1]),
        kernel: dim(meta[2]),
        enc_maps: dim(meta[3]),
        latent_maps: dim(meta[4]),
        hidden: dim(meta[5]),
        classes: dim(meta[6]),
        dropout: meta[7] as f64,
    };
    let mut model = FontModel::new(arch, 0)?;
    model.trained = meta[8] != 0.0;
    let shapes = Weights::<f32>::shapes(&arch);
    for ((want, shape), slot) in WEIGHT_NAMES.iter().zip(shapes).zip(model.weights.tensors_mut()) {
        let (name, got_shape, values) = r.layer()?;
        if name != *want || got_shape != shape {
            return Err(FontError::ModelFormat(format!("layer {name} {got_shape:?}, expected {want} {shape:?}")));
        }
        *slot = values;
    }
    let c = arch.enc_maps;
    let mut stats = Vec::with_capacity(4);
    for want in STAT_NAMES {
        let (name, shape, values) = r.layer()?;
        if name != want || shape != [c] {
            return Err(FontError::ModelFormat(format!("layer {name} {shape:?}, expected {want} [{c}]")));
        }
        stats.push(values);
    }
    let mut it = stats.into_iter();
    let mut next = || it.next().expect("four stat layers");
    model.bn1 = BnStats { mean: next(), var: next() };
    model.bn2 = BnStats { mean: next(), var: next() };
    if r.pos != bytes.len() {
        return Err(FontError::ModelFormat("trailing bytes".into()));
    }
    let finite = model.weights.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()));
    let var_ok = model.bn1.var.iter().chain(&model.bn2.var).all(|&v| v > 0.0 && v.is_finite());
    if !finite || !var_ok {
        return Err(FontError::ModelFormat("non-finite weights or non-positive running variance".into()));
    }
    Ok(model)
}

pub fn save_model(model: &FontModel, path: &Path) -> Result<(), FontError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FontModel, FontError> {
    decode_model(&fs::read(path)?)
}
