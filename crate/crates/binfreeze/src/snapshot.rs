//! Binary snapshot container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    4 bytes  "BNFZ"
//! version  u16      currently 1
//! flavor   u8       0 = deploy, 1 = checkpoint
//! family   u8       0 = mlp, 1 = rescnn
//! mode     u8       index into the mode table (fp, ste_bwn, ...)
//! pad      3 bytes  zero
//! depth    u32
//! width    u32
//! input    u32 x 3  channels, height, width
//! classes  u32
//! records  u32      record count
//! ```
//!
//! followed by `records` records in canonical order (stem, blocks in index
//! order, classifier), each:
//!
//! ```text
//! name_len u16, name bytes (ASCII, e.g. "block3.bn.gamma")
//! encoding u8   0 = f32 LE, 1 = sign bits, 2 = mask runs
//! ndim     u8, dims u32 x ndim
//! len      u64, payload bytes
//! ```
//!
//! Sign bits pack row-major elements 8 per byte, most significant bit first,
//! 1 for +1 and 0 for -1; the final byte is zero-padded. Mask runs reuse the
//! run-length layout documented in the masking module.
//!
//! Deploy snapshots store scheduled block weights as sign bits and everything
//! else (stem, classifier, projections, batch-norm parameters and running
//! statistics) as f32; masks are omitted because deploy requires them
//! finalized. Checkpoints store all weights as f32 latents plus the current
//! masks, so a mid-run model reloads exactly; optimizer velocity is not
//! captured.

use crate::binarize::sign;
use crate::error::{Error, Result};
use crate::masking::{finalize, Mask};
use crate::model::{ArchFamily, ArchSpec, Model, QuantMode, Route};
use crate::tensor::Tensor;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"BNFZ";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Deploy,
    Checkpoint,
}

impl Flavor {
    fn code(self) -> u8 {
        match self {
            Flavor::Deploy => 0,
            Flavor::Checkpoint => 1,
        }
    }

    fn from_code(c: u8) -> Result<Flavor> {
        match c {
            0 => Ok(Flavor::Deploy),
            1 => Ok(Flavor::Checkpoint),
            _ => Err(Error::Format(format!("unknown snapshot flavor {}", c))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    F32Le,
    SignBits,
    MaskRuns,
}

impl Encoding {
    fn code(self) -> u8 {
        match self {
            Encoding::F32Le => 0,
            Encoding::SignBits => 1,
            Encoding::MaskRuns => 2,
        }
    }

    fn from_code(c: u8) -> Result<Encoding> {
        match c {
            0 => Ok(Encoding::F32Le),
            1 => Ok(Encoding::SignBits),
            2 => Ok(Encoding::MaskRuns),
            _ => Err(Error::Format(format!("unknown record encoding {}", c))),
        }
    }
}

/// One entry of the record table, as stored.
#[derive(Debug, Clone)]
pub struct RecordInfo {
    pub name: String,
    pub encoding: Encoding,
    pub dims: Vec<usize>,
    pub payload_len: u64,
}

/// Packs sign bits: 1 for values >= 0, MSB-first, row-major.
fn pack_signs(values: &[f32]) -> Vec<u8> {
    let mut out = vec![0u8; values.len().div_ceil(8)];
    for (i, &v) in values.iter().enumerate() {
        if sign(v) > 0.0 {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

fn unpack_signs(bytes: &[u8], n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| {
            if bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!(
                "snapshot truncated at byte {} while reading {}",
                self.pos, what
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Where a record's data lives in a model.
#[derive(Debug, Clone, Copy)]
enum Slot {
    StemW,
    StemGamma,
    StemBeta,
    StemMean,
    StemVar,
    BlockW(usize),
    BlockGamma(usize),
    BlockBeta(usize),
    BlockMean(usize),
    BlockVar(usize),
    ProjW(usize),
    ProjGamma(usize),
    ProjBeta(usize),
    ProjMean(usize),
    ProjVar(usize),
    MaskW(usize),
    MaskA(usize),
    ClsW,
}

type Record = (String, Encoding, Vec<usize>, Slot);

fn bn_records(recs: &mut Vec<Record>, prefix: &str, c: usize, slots: [Slot; 4]) {
    for (stat, slot) in ["gamma", "beta", "mean", "var"].iter().zip(slots) {
        recs.push((
            format!("{}.bn.{}", prefix, stat),
            Encoding::F32Le,
            vec![c],
            slot,
        ));
    }
}

/// Canonical record list for a model under a flavor. The reader requires the
/// file's records to match this list exactly, in order.
fn canonical_records(model: &Model, flavor: Flavor) -> Vec<Record> {
    let mut recs: Vec<Record> = Vec::new();
    let scheduled = model.mode.weight_route() != Route::Fp;
    let w_enc = if flavor == Flavor::Deploy && scheduled {
        Encoding::SignBits
    } else {
        Encoding::F32Le
    };
    recs.push((
        "stem.w".into(),
        Encoding::F32Le,
        model.stem.value.shape().to_vec(),
        Slot::StemW,
    ));
    bn_records(
        &mut recs,
        "stem",
        model.stem_bn.gamma.value.len(),
        [Slot::StemGamma, Slot::StemBeta, Slot::StemMean, Slot::StemVar],
    );
    for (i, b) in model.blocks.iter().enumerate() {
        recs.push((
            format!("block{}.w", i),
            w_enc,
            b.w.value.shape().to_vec(),
            Slot::BlockW(i),
        ));
        bn_records(
            &mut recs,
            &format!("block{}", i),
            b.bn.gamma.value.len(),
            [
                Slot::BlockGamma(i),
                Slot::BlockBeta(i),
                Slot::BlockMean(i),
                Slot::BlockVar(i),
            ],
        );
        if let Some((pw, pbn)) = &b.proj {
            recs.push((
                format!("block{}.proj.w", i),
                Encoding::F32Le,
                pw.value.shape().to_vec(),
                Slot::ProjW(i),
            ));
            bn_records(
                &mut recs,
                &format!("block{}.proj", i),
                pbn.gamma.value.len(),
                [
                    Slot::ProjGamma(i),
                    Slot::ProjBeta(i),
                    Slot::ProjMean(i),
                    Slot::ProjVar(i),
                ],
            );
        }
        if flavor == Flavor::Checkpoint {
            if let Some(m) = &b.w_mask {
                recs.push((
                    format!("block{}.mask.w", i),
                    Encoding::MaskRuns,
                    m.shape().to_vec(),
                    Slot::MaskW(i),
                ));
            }
            if let Some(m) = &b.a_mask {
                recs.push((
                    format!("block{}.mask.a", i),
                    Encoding::MaskRuns,
                    m.shape().to_vec(),
                    Slot::MaskA(i),
                ));
            }
        }
    }
    recs.push((
        "cls.w".into(),
        Encoding::F32Le,
        model.cls.value.shape().to_vec(),
        Slot::ClsW,
    ));
    recs
}

/// Serializes a model. Deploy flavor refuses masks that are not yet fully
/// frozen and reports each offending unit's progress.
pub fn write_snapshot(model: &Model, flavor: Flavor) -> Result<Vec<u8>> {
    if flavor == Flavor::Deploy {
        let mut unfinished = Vec::new();
        for (i, b) in model.blocks.iter().enumerate() {
            if let Some(m) = &b.w_mask {
                if !m.all_frozen() {
                    unfinished.push(format!(
                        "unit {} weights {:.1}% frozen",
                        i,
                        100.0 * m.frozen_fraction()
                    ));
                }
            }
            if let Some(m) = &b.a_mask {
                if !m.all_frozen() {
                    unfinished.push(format!(
                        "unit {} activations {:.1}% frozen",
                        i,
                        100.0 * m.frozen_fraction()
                    ));
                }
            }
        }
        if !unfinished.is_empty() {
            return Err(Error::Contract(format!(
                "deploy snapshot requires finalized masks: {}",
                unfinished.join(", ")
            )));
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    put_u16(&mut out, VERSION);
    out.push(flavor.code());
    out.push(match model.arch.family {
        ArchFamily::Mlp => 0,
        ArchFamily::ResCnn => 1,
    });
    let mode_idx = QuantMode::ALL
        .iter()
        .position(|m| *m == model.mode)
        .expect("mode is in the table") as u8;
    out.push(mode_idx);
    out.extend_from_slice(&[0, 0, 0]);
    put_u32(&mut out, model.arch.depth as u32);
    put_u32(&mut out, model.arch.width as u32);
    put_u32(&mut out, model.arch.input.0 as u32);
    put_u32(&mut out, model.arch.input.1 as u32);
    put_u32(&mut out, model.arch.input.2 as u32);
    put_u32(&mut out, model.arch.classes as u32);

    let recs = canonical_records(model, flavor);
    put_u32(&mut out, recs.len() as u32);
    for (name, enc, dims, slot) in recs {
        put_u16(&mut out, name.len() as u16);
        out.extend_from_slice(name.as_bytes());
        out.push(enc.code());
        out.push(dims.len() as u8);
        for d in &dims {
            put_u32(&mut out, *d as u32);
        }
        let payload = record_payload(model, slot, enc);
        put_u64(&mut out, payload.len() as u64);
        out.extend_from_slice(&payload);
    }
    Ok(out)
}

fn record_payload(model: &Model, slot: Slot, enc: Encoding) -> Vec<u8> {
    let proj = |i: usize| model.blocks[i].proj.as_ref().unwrap();
    let floats: &[f32] = match slot {
        Slot::StemW => model.stem.value.data(),
        Slot::StemGamma => model.stem_bn.gamma.value.data(),
        Slot::StemBeta => model.stem_bn.beta.value.data(),
        Slot::StemMean => &model.stem_bn.running_mean,
        Slot::StemVar => &model.stem_bn.running_var,
        Slot::BlockW(i) => model.blocks[i].w.value.data(),
        Slot::BlockGamma(i) => model.blocks[i].bn.gamma.value.data(),
        Slot::BlockBeta(i) => model.blocks[i].bn.beta.value.data(),
        Slot::BlockMean(i) => &model.blocks[i].bn.running_mean,
        Slot::BlockVar(i) => &model.blocks[i].bn.running_var,
        Slot::ProjW(i) => proj(i).0.value.data(),
        Slot::ProjGamma(i) => proj(i).1.gamma.value.data(),
        Slot::ProjBeta(i) => proj(i).1.beta.value.data(),
        Slot::ProjMean(i) => &proj(i).1.running_mean,
        Slot::ProjVar(i) => &proj(i).1.running_var,
        Slot::MaskW(i) => return model.blocks[i].w_mask.as_ref().unwrap().to_rle_bytes(),
        Slot::MaskA(i) => return model.blocks[i].a_mask.as_ref().unwrap().to_rle_bytes(),
        Slot::ClsW => model.cls.value.data(),
    };
    match enc {
        Encoding::F32Le => {
            let mut payload = Vec::with_capacity(4 * floats.len());
            put_f32s(&mut payload, floats);
            payload
        }
        Encoding::SignBits => pack_signs(floats),
        Encoding::MaskRuns => unreachable!("mask slots return early"),
    }
}

pub fn read_snapshot(bytes: &[u8]) -> Result<(Model, Flavor)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected \"BNFZ\"",
            magic
        )));
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported snapshot version {}, expected {}",
            version, VERSION
        )));
    }
    let flavor = Flavor::from_code(cur.u8("flavor")?)?;
    let family = match cur.u8("family")? {
        0 => ArchFamily::Mlp,
        1 => ArchFamily::ResCnn,
        f => return Err(Error::Format(format!("unknown arch family code {}", f))),
    };
    let mode_idx = cur.u8("mode")? as usize;
    let mode = *QuantMode::ALL
        .get(mode_idx)
        .ok_or_else(|| Error::Format(format!("unknown mode code {}", mode_idx)))?;
    cur.take(3, "padding")?;
    let depth = cur.u32("depth")? as usize;
    let width = cur.u32("width")? as usize;
    let c = cur.u32("input channels")? as usize;
    let h = cur.u32("input height")? as usize;
    let w = cur.u32("input width")? as usize;
    let classes = cur.u32("classes")? as usize;
    let arch = ArchSpec {
        family,
        depth,
        width,
        input: (c, h, w),
        classes,
    };
    let mut model = Model::build(arch, mode, 0)?;
    if flavor == Flavor::Deploy {
        for b in &mut model.blocks {
            if let Some(m) = &mut b.w_mask {
                finalize(m);
            }
            if let Some(m) = &mut b.a_mask {
                finalize(m);
            }
        }
    }

    let expected = canonical_records(&model, flavor);
    let count = cur.u32("record count")? as usize;
    if count != expected.len() {
        return Err(Error::Format(format!(
            "snapshot has {} records, this model needs {}",
            count,
            expected.len()
        )));
    }
    for (name, enc, dims, slot) in expected {
        let name_len = cur.u16("record name length")? as usize;
        let got_name = std::str::from_utf8(cur.take(name_len, "record name")?)
            .map_err(|_| Error::Format("record name is not UTF-8".into()))?;
        if got_name != name {
            return Err(Error::Format(format!(
                "record '{}' out of order, expected '{}'",
                got_name, name
            )));
        }
        let got_enc = Encoding::from_code(cur.u8("record encoding")?)?;
        if got_enc != enc {
            return Err(Error::Format(format!(
                "record '{}' has encoding {}, expected {}",
                name,
                got_enc.code(),
                enc.code()
            )));
        }
        let ndim = cur.u8("record rank")? as usize;
        let mut got_dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            got_dims.push(cur.u32("record dim")? as usize);
        }
        if got_dims != dims {
            return Err(Error::Format(format!(
                "record '{}' has dims {:?}, expected {:?}",
                name, got_dims, dims
            )));
        }
        let len = cur.u64("record payload length")? as usize;
        let n: usize = dims.iter().product();
        let expect_len = match enc {
            Encoding::F32Le => 4 * n,
            Encoding::SignBits => n.div_ceil(8),
            Encoding::MaskRuns => len, // variable; validated by the mask parser
        };
        if len != expect_len {
            return Err(Error::Format(format!(
                "record '{}' payload is {} bytes, expected {}",
                name, len, expect_len
            )));
        }
        let payload = cur.take(len, "record payload")?;
        apply_record(&mut model, slot, enc, &dims, payload, &name)?;
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last record",
            bytes.len() - cur.pos
        )));
    }
    Ok((model, flavor))
}

fn apply_record(
    model: &mut Model,
    slot: Slot,
    enc: Encoding,
    dims: &[usize],
    payload: &[u8],
    name: &str,
) -> Result<()> {
    let n: usize = dims.iter().product();
    let values = || -> Vec<f32> {
        match enc {
            Encoding::F32Le => payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            Encoding::SignBits => unpack_signs(payload, n),
            Encoding::MaskRuns => unreachable!("mask slots are handled below"),
        }
    };
    let read_mask = || -> Result<Mask> {
        let (m, consumed) = Mask::from_rle_bytes(payload)?;
        if consumed != payload.len() {
            return Err(Error::Format(format!(
                "record '{}' has {} unused payload bytes",
                name,
                payload.len() - consumed
            )));
        }
        if m.shape() != dims {
            return Err(Error::Format(format!(
                "record '{}' mask shape {:?} does not match dims {:?}",
                name,
                m.shape(),
                dims
            )));
        }
        Ok(m)
    };
    match slot {
        Slot::MaskW(i) => {
            model.blocks[i].w_mask = Some(read_mask()?);
            return Ok(());
        }
        Slot::MaskA(i) => {
            model.blocks[i].a_mask = Some(read_mask()?);
            return Ok(());
        }
        _ => {}
    }
    let vals = values();
    match slot {
        Slot::StemMean => model.stem_bn.running_mean = vals,
        Slot::StemVar => model.stem_bn.running_var = vals,
        Slot::BlockMean(i) => model.blocks[i].bn.running_mean = vals,
        Slot::BlockVar(i) => model.blocks[i].bn.running_var = vals,
        Slot::ProjMean(i) => model.blocks[i].proj.as_mut().unwrap().1.running_mean = vals,
        Slot::ProjVar(i) => model.blocks[i].proj.as_mut().unwrap().1.running_var = vals,
        _ => {
            let t: &mut Tensor = match slot {
                Slot::StemW => &mut model.stem.value,
                Slot::StemGamma => &mut model.stem_bn.gamma.value,
                Slot::StemBeta => &mut model.stem_bn.beta.value,
                Slot::BlockW(i) => &mut model.blocks[i].w.value,
                Slot::BlockGamma(i) => &mut model.blocks[i].bn.gamma.value,
                Slot::BlockBeta(i) => &mut model.blocks[i].bn.beta.value,
                Slot::ProjW(i) => &mut model.blocks[i].proj.as_mut().unwrap().0.value,
                Slot::ProjGamma(i) => &mut model.blocks[i].proj.as_mut().unwrap().1.gamma.value,
                Slot::ProjBeta(i) => &mut model.blocks[i].proj.as_mut().unwrap().1.beta.value,
                Slot::ClsW => &mut model.cls.value,
                Slot::StemMean
                | Slot::StemVar
                | Slot::BlockMean(_)
                | Slot::BlockVar(_)
                | Slot::ProjMean(_)
                | Slot::ProjVar(_)
                | Slot::MaskW(_)
                | Slot::MaskA(_) => unreachable!("handled above"),
            };
            *t = Tensor::new(dims.to_vec(), vals)?;
        }
    }
    Ok(())
}

/// Parses just the record table (no payload decoding) for inspection.
pub fn record_table(bytes: &[u8]) -> Result<Vec<RecordInfo>> {
    let mut cur = Cursor { bytes, pos: 0 };
    cur.take(4, "magic")?;
    cur.take(2, "version")?;
    cur.take(6, "header")?;
    cur.take(24, "arch header")?;
    let count = cur.u32("record count")? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u16("record name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "record name")?)
            .map_err(|_| Error::Format("record name is not UTF-8".into()))?
            .to_string();
        let encoding = Encoding::from_code(cur.u8("record encoding")?)?;
        let ndim = cur.u8("record rank")? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(cur.u32("record dim")? as usize);
        }
        let payload_len = cur.u64("record payload length")?;
        cur.take(payload_len as usize, "record payload")?;
        out.push(RecordInfo {
            name,
            encoding,
            dims,
            payload_len,
        });
    }
    Ok(out)
}

pub fn save(path: &Path, model: &Model, flavor: Flavor) -> Result<()> {
    let bytes = write_snapshot(model, flavor)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(Model, Flavor)> {
    let bytes = std::fs::read(path)?;
    read_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Profile;
    use crate::tape::Tape;

    fn arch() -> ArchSpec {
        ArchSpec {
            family: ArchFamily::Mlp,
            depth: 2,
            width: 16,
            input: (1, 4, 4),
            classes: 10,
        }
    }

    fn batch() -> Tensor {
        let mut t = Tensor::zeros(vec![3, 1, 4, 4]);
        for (i, v) in t.data_mut().iter_mut().enumerate() {
            *v = ((i * 7 % 23) as f32) / 23.0 - 0.4;
        }
        t
    }

    fn finalized_model(mode: QuantMode) -> Model {
        let mut m = Model::build(arch(), mode, 42).unwrap();
        for b in &mut m.blocks {
            if let Some(mask) = &mut b.w_mask {
                finalize(mask);
            }
            if let Some(mask) = &mut b.a_mask {
                finalize(mask);
            }
        }
        m
    }

    #[test]
    fn sixteen_binary_weights_pack_into_two_bytes() {
        let vals: Vec<f32> = (0..16).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let packed = pack_signs(&vals);
        assert_eq!(packed.len(), 2);
        assert_eq!(unpack_signs(&packed, 16), vals);
        // MSB-first: element 0 lands in bit 7 of byte 0
        assert_eq!(packed[0] & 0x80, 0x80);
    }

    #[test]
    fn deploy_roundtrip_preserves_deploy_forward_bitwise() {
        for mode in [QuantMode::StomppBnn, QuantMode::SteBwn, QuantMode::Fp] {
            let mut m = finalized_model(mode);
            let bytes = write_snapshot(&m, Flavor::Deploy).unwrap();
            let (mut loaded, flavor) = read_snapshot(&bytes).unwrap();
            assert_eq!(flavor, Flavor::Deploy);
            assert_eq!(loaded.mode, mode);
            let x = batch();
            let mut t1 = Tape::new();
            let (l1, _) = m.forward(&mut t1, &x, Profile::Deploy).unwrap();
            let mut t2 = Tape::new();
            let (l2, _) = loaded.forward(&mut t2, &x, Profile::Deploy).unwrap();
            assert_eq!(t1.value(l1).data(), t2.value(l2).data(), "mode {:?}", mode);
        }
    }

    #[test]
    fn checkpoint_roundtrip_preserves_latents_masks_and_stats() {
        let mut m = Model::build(arch(), QuantMode::StomppBnn, 7).unwrap();
        // dirty the state: some frozen bits, shifted running stats
        m.blocks[0].w_mask.as_mut().unwrap().set(3, true);
        m.blocks[0].w_mask.as_mut().unwrap().set(200, true);
        m.blocks[1].a_mask.as_mut().unwrap().set(5, true);
        m.stem_bn.running_mean[2] = 0.25;
        m.blocks[1].bn.running_var[7] = 3.5;
        let bytes = write_snapshot(&m, Flavor::Checkpoint).unwrap();
        let (loaded, flavor) = read_snapshot(&bytes).unwrap();
        assert_eq!(flavor, Flavor::Checkpoint);
        assert_eq!(loaded.blocks[0].w.value.data(), m.blocks[0].w.value.data());
        assert_eq!(
            loaded.blocks[0].w_mask.as_ref().unwrap().bits(),
            m.blocks[0].w_mask.as_ref().unwrap().bits()
        );
        assert_eq!(
            loaded.blocks[1].a_mask.as_ref().unwrap().bits(),
            m.blocks[1].a_mask.as_ref().unwrap().bits()
        );
        assert_eq!(loaded.stem_bn.running_mean, m.stem_bn.running_mean);
        assert_eq!(loaded.blocks[1].bn.running_var, m.blocks[1].bn.running_var);
        assert_eq!(loaded.stem.value.data(), m.stem.value.data());
        assert_eq!(loaded.cls.value.data(), m.cls.value.data());
    }

    #[test]
    fn deploy_refuses_unfinalized_masks_with_phase_report() {
        let mut m = Model::build(arch(), QuantMode::StomppBnn, 7).unwrap();
        m.blocks[0].w_mask.as_mut().unwrap().set(0, true);
        let err = write_snapshot(&m, Flavor::Deploy).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("finalized"), "{}", msg);
        assert!(msg.contains("unit 0 weights"), "{}", msg);
        assert!(msg.contains("unit 1 activations"), "{}", msg);
    }

    #[test]
    fn scheduled_tensors_compress_thirty_two_fold() {
        let m = finalized_model(QuantMode::StomppBnn);
        let dep = write_snapshot(&m, Flavor::Deploy).unwrap();
        let chk = write_snapshot(&m, Flavor::Checkpoint).unwrap();
        let sum = |bytes: &[u8], enc: Encoding| -> u64 {
            record_table(bytes)
                .unwrap()
                .iter()
                .filter(|r| {
                    r.name.starts_with("block")
                        && r.name.ends_with(".w")
                        && r.name.matches('.').count() == 1
                })
                .inspect(|r| assert_eq!(r.encoding, enc, "{}", r.name))
                .map(|r| r.payload_len)
                .sum()
        };
        let fp = sum(&chk, Encoding::F32Le);
        let packed = sum(&dep, Encoding::SignBits);
        let ratio = fp as f64 / packed as f64;
        assert!((31.9..=32.1).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn corrupt_inputs_are_format_errors() {
        let m = finalized_model(QuantMode::StomppBnn);
        let bytes = write_snapshot(&m, Flavor::Deploy).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        let err = read_snapshot(&bad_magic).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(err.to_string().contains("BNFZ"));

        let truncated = &bytes[..bytes.len() - 3];
        let err = read_snapshot(truncated).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(err.to_string().contains("truncated"));

        let mut trailing = bytes.clone();
        trailing.extend_from_slice(&[0, 1, 2]);
        let err = read_snapshot(&trailing).unwrap_err();
        assert!(err.to_string().contains("trailing"));

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        let err = read_snapshot(&bad_version).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn rescnn_checkpoint_roundtrips_projection_records() {
        let arch = ArchSpec {
            family: ArchFamily::ResCnn,
            depth: 2,
            width: 4,
            input: (3, 8, 8),
            classes: 10,
        };
        let m = Model::build(arch, QuantMode::StomppBwn, 3).unwrap();
        let bytes = write_snapshot(&m, Flavor::Checkpoint).unwrap();
        let names: Vec<String> = record_table(&bytes).unwrap().into_iter().map(|r| r.name).collect();
        assert!(names.contains(&"block1.proj.w".to_string()));
        assert!(names.contains(&"block1.proj.bn.mean".to_string()));
        assert!(names.contains(&"block0.mask.w".to_string()));
        let (loaded, _) = read_snapshot(&bytes).unwrap();
        let (pw, _) = m.blocks[1].proj.as_ref().unwrap();
        let (lw, _) = loaded.blocks[1].proj.as_ref().unwrap();
        assert_eq!(pw.value.data(), lw.value.data());
    }
}
