//! Dataset ingestion and augmentation.
//!
//! Three sources: IDX image/label pairs (the classic 28x28 digit layout),
//! CIFAR-style binary batches (1 label byte + 3072 channel-major pixel
//! bytes per record), and a built-in synthetic 16x16 glyph set generated
//! from a seed so the full pipeline runs with no files on disk. Images load
//! as [n, c, h, w] tensors scaled to [0, 1].

use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use crate::tensor::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Tensor,
    pub labels: Vec<u32>,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Keeps the first `n` samples (deterministic subsetting).
    pub fn truncate(&mut self, n: usize) {
        if n >= self.len() {
            return;
        }
        let per = self.images.len() / self.len();
        let mut shape = self.images.shape().to_vec();
        shape[0] = n;
        let data = self.images.data()[..n * per].to_vec();
        self.images = Tensor::new(shape, data).expect("prefix keeps per-sample size");
        self.labels.truncate(n);
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
    pub stats: ChannelStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Synth,
    /// 8x8 handwritten digits in the four-file IDX layout (a desk-scale
    /// corpus small enough to ship with the repository under data/digits).
    DigitsIdx,
    MnistIdx,
    CifarBin,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Synth => "synth",
            DatasetKind::DigitsIdx => "digits",
            DatasetKind::MnistIdx => "mnist",
            DatasetKind::CifarBin => "cifar10",
        }
    }

    pub fn parse(s: &str) -> Result<DatasetKind> {
        match s {
            "synth" => Ok(DatasetKind::Synth),
            "digits" => Ok(DatasetKind::DigitsIdx),
            "mnist" => Ok(DatasetKind::MnistIdx),
            "cifar10" => Ok(DatasetKind::CifarBin),
            _ => Err(Error::Config(format!(
                "unknown dataset '{}' (expected synth, digits, mnist, or cifar10)",
                s
            ))),
        }
    }

    /// (channels, height, width) of one sample.
    pub fn input_dims(self) -> (usize, usize, usize) {
        match self {
            DatasetKind::Synth => (1, 16, 16),
            DatasetKind::DigitsIdx => (1, 8, 8),
            DatasetKind::MnistIdx => (1, 28, 28),
            DatasetKind::CifarBin => (3, 32, 32),
        }
    }
}

/// Per-channel normalization constants.
#[derive(Debug, Clone)]
pub struct ChannelStats {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

/// Published CIFAR normalization constants.
pub fn cifar_stats() -> ChannelStats {
    ChannelStats {
        mean: vec![0.5071, 0.4865, 0.4409],
        std: vec![0.2673, 0.2564, 0.2762],
    }
}

/// Per-channel mean/std over a full split; std floored at 1e-3.
pub fn compute_stats(images: &Tensor) -> ChannelStats {
    let s = images.shape();
    let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
    let mut mean = vec![0.0f64; c];
    let mut var = vec![0.0f64; c];
    let count = (n * hw) as f64;
    for i in 0..n {
        for (ch, m) in mean.iter_mut().enumerate() {
            let base = (i * c + ch) * hw;
            for &v in &images.data()[base..base + hw] {
                *m += v as f64;
            }
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    for i in 0..n {
        for (ch, va) in var.iter_mut().enumerate() {
            let base = (i * c + ch) * hw;
            for &v in &images.data()[base..base + hw] {
                let d = v as f64 - mean[ch];
                *va += d * d;
            }
        }
    }
    ChannelStats {
        mean: mean.iter().map(|&m| m as f32).collect(),
        std: var
            .iter()
            .map(|&v| ((v / count).sqrt() as f32).max(1e-3))
            .collect(),
    }
}

// ---------------------------------------------------------------- IDX

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], off: usize, what: &str) -> Result<u32> {
    bytes
        .get(off..off + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| {
            Error::Format(format!(
                "IDX file truncated at byte {} while reading {}",
                off, what
            ))
        })
}

/// Parses an IDX image file (magic 0x00000803) into [n, 1, h, w] in [0, 1].
pub fn parse_idx_images(bytes: &[u8]) -> Result<Tensor> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic == IDX_LABELS_MAGIC {
        return Err(Error::Format(
            "IDX magic 0x00000801 is a label file, expected images (0x00000803)".into(),
        ));
    }
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX image magic {:#010x} at byte 0, expected 0x00000803",
            magic
        )));
    }
    let n = be_u32(bytes, 4, "image count")? as usize;
    let h = be_u32(bytes, 8, "image height")? as usize;
    let w = be_u32(bytes, 12, "image width")? as usize;
    let need = 16 + n * h * w;
    if bytes.len() != need {
        return Err(Error::Format(format!(
            "IDX image file is {} bytes, expected {} for {}x{}x{}",
            bytes.len(),
            need,
            n,
            h,
            w
        )));
    }
    let data = bytes[16..].iter().map(|&b| b as f32 / 255.0).collect();
    Tensor::new(vec![n, 1, h, w], data)
}

/// Parses an IDX label file (magic 0x00000801); labels must be < `classes`.
pub fn parse_idx_labels(bytes: &[u8], classes: usize) -> Result<Vec<u32>> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic == IDX_IMAGES_MAGIC {
        return Err(Error::Format(
            "IDX magic 0x00000803 is an image file, expected labels (0x00000801)".into(),
        ));
    }
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX label magic {:#010x} at byte 0, expected 0x00000801",
            magic
        )));
    }
    let n = be_u32(bytes, 4, "label count")? as usize;
    if bytes.len() != 8 + n {
        return Err(Error::Format(format!(
            "IDX label file is {} bytes, expected {} for {} labels",
            bytes.len(),
            8 + n,
            n
        )));
    }
    let mut labels = Vec::with_capacity(n);
    for (i, &b) in bytes[8..].iter().enumerate() {
        if (b as usize) >= classes {
            return Err(Error::Format(format!(
                "label {} at byte {} is out of range (classes: {})",
                b,
                8 + i,
                classes
            )));
        }
        labels.push(b as u32);
    }
    Ok(labels)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        Error::Format(format!("cannot read dataset file {}: {}", path.display(), e))
    })
}

fn idx_pair(dir: &Path, images: &str, labels: &str) -> Result<Dataset> {
    let imgs = parse_idx_images(&read_file(&dir.join(images))?)?;
    let lbls = parse_idx_labels(&read_file(&dir.join(labels))?, 10)?;
    if imgs.shape()[0] != lbls.len() {
        return Err(Error::Format(format!(
            "{} has {} images but {} has {} labels",
            images,
            imgs.shape()[0],
            labels,
            lbls.len()
        )));
    }
    Ok(Dataset {
        images: imgs,
        labels: lbls,
        classes: 10,
    })
}

/// Loads the four-file digit layout from `dir`: train-images-idx3-ubyte,
/// train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
pub fn load_mnist(dir: &Path) -> Result<Splits> {
    let train = idx_pair(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")?;
    let test = idx_pair(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?;
    let stats = compute_stats(&train.images);
    Ok(Splits { train, test, stats })
}

/// Serializes images (values in [0, 1], shape [n, 1, h, w]) as an IDX file.
pub fn write_idx_images(images: &Tensor) -> Result<Vec<u8>> {
    let s = images.shape();
    if s.len() != 4 || s[1] != 1 {
        return Err(Error::Contract(format!(
            "IDX images must be [n, 1, h, w], got {:?}",
            s
        )));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(s[0] as u32).to_be_bytes());
    out.extend_from_slice(&(s[2] as u32).to_be_bytes());
    out.extend_from_slice(&(s[3] as u32).to_be_bytes());
    out.extend(
        images
            .data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

pub fn write_idx_labels(labels: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend(labels.iter().map(|&l| l as u8));
    out
}

// ---------------------------------------------------------------- CIFAR

const CIFAR_RECORD: usize = 1 + 3 * 32 * 32;

/// Parses one CIFAR binary batch file: records of 1 label byte followed by
/// 3072 pixel bytes (red plane, green plane, blue plane, row-major).
pub fn parse_cifar_bin(bytes: &[u8]) -> Result<Dataset> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::Format(format!(
            "CIFAR batch is {} bytes, not a positive multiple of {}",
            bytes.len(),
            CIFAR_RECORD
        )));
    }
    let n = bytes.len() / CIFAR_RECORD;
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * 3072);
    for i in 0..n {
        let off = i * CIFAR_RECORD;
        let label = bytes[off];
        if label >= 10 {
            return Err(Error::Format(format!(
                "label {} at byte {} is out of range (classes: 10)",
                label, off
            )));
        }
        labels.push(label as u32);
        data.extend(bytes[off + 1..off + CIFAR_RECORD].iter().map(|&b| b as f32 / 255.0));
    }
    Ok(Dataset {
        images: Tensor::new(vec![n, 3, 32, 32], data)?,
        labels,
        classes: 10,
    })
}

/// Loads CIFAR-10 binary batches from `dir` (data_batch_1..5.bin and
/// test_batch.bin), using the published channel statistics.
pub fn load_cifar10(dir: &Path) -> Result<Splits> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for i in 1..=5 {
        let d = parse_cifar_bin(&read_file(&dir.join(format!("data_batch_{}.bin", i)))?)?;
        images.extend_from_slice(d.images.data());
        labels.extend_from_slice(&d.labels);
    }
    let n = labels.len();
    let train = Dataset {
        images: Tensor::new(vec![n, 3, 32, 32], images)?,
        labels,
        classes: 10,
    };
    let test = parse_cifar_bin(&read_file(&dir.join("test_batch.bin"))?)?;
    Ok(Splits {
        train,
        test,
        stats: cifar_stats(),
    })
}

// ---------------------------------------------------------------- synthetic

pub const SYNTH_CLASSES: usize = 10;
pub const SYNTH_SIDE: usize = 16;

/// Ten 16x16 glyph templates ('#' = ink). Classes are coarse shapes that
/// survive the +-2 pixel jitter the generator applies.
const GLYPHS: [[&str; 16]; 10] = [
    [
        // ring
        "................",
        "................",
        "....########....",
        "...##......##...",
        "...#........#...",
        "...#........#...",
        "...#........#...",
        "...#........#...",
        "...#........#...",
        "...#........#...",
        "...#........#...",
        "...#........#...",
        "...##......##...",
        "....########....",
        "................",
        "................",
    ],
    [
        // vertical bar
        "................",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "................",
        "................",
    ],
    [
        // horizontal bar
        "................",
        "................",
        "................",
        "................",
        "................",
        "..############..",
        "..############..",
        "..############..",
        "..############..",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
    ],
    [
        // plus
        "................",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "..############..",
        "..############..",
        "..############..",
        "..############..",
        "......####......",
        "......####......",
        "......####......",
        "......####......",
        "................",
        "................",
        "................",
    ],
    [
        // main diagonal
        "##..............",
        "###.............",
        ".###............",
        "..###...........",
        "...###..........",
        "....###.........",
        ".....###........",
        "......###.......",
        ".......###......",
        "........###.....",
        ".........###....",
        "..........###...",
        "...........###..",
        "............###.",
        ".............###",
        "..............##",
    ],
    [
        // anti-diagonal
        "..............##",
        ".............###",
        "............###.",
        "...........###..",
        "..........###...",
        ".........###....",
        "........###.....",
        ".......###......",
        "......###.......",
        ".....###........",
        "....###.........",
        "...###..........",
        "..###...........",
        ".###............",
        "###.............",
        "##..............",
    ],
    [
        // top-left block
        "########........",
        "########........",
        "########........",
        "########........",
        "########........",
        "########........",
        "########........",
        "########........",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
    ],
    [
        // bottom-right block
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
        "................",
        "........########",
        "........########",
        "........########",
        "........########",
        "........########",
        "........########",
        "........########",
        "........########",
    ],
    [
        // frame
        "################",
        "################",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "##............##",
        "################",
        "################",
    ],
    [
        // checkerboard
        "####....####....",
        "####....####....",
        "####....####....",
        "####....####....",
        "....####....####",
        "....####....####",
        "....####....####",
        "....####....####",
        "####....####....",
        "####....####....",
        "####....####....",
        "####....####....",
        "....####....####",
        "....####....####",
        "....####....####",
        "....####....####",
    ],
];

fn synth_dataset(n: usize, rng: &mut impl Rng) -> Dataset {
    let side = SYNTH_SIDE;
    let mut data = vec![0.0f32; n * side * side];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % SYNTH_CLASSES;
        labels.push(class as u32);
        let dy = rng.gen_range(-2i64..=2);
        let dx = rng.gen_range(-2i64..=2);
        let intensity = rng.gen_range(0.6..1.0) as f32;
        let img = &mut data[i * side * side..(i + 1) * side * side];
        for y in 0..side {
            for x in 0..side {
                let sy = y as i64 - dy;
                let sx = x as i64 - dx;
                let ink = if (0..side as i64).contains(&sy) && (0..side as i64).contains(&sx) {
                    GLYPHS[class][sy as usize].as_bytes()[sx as usize] == b'#'
                } else {
                    false
                };
                let base = if ink { intensity } else { 0.0 };
                let noise = rng.gen_range(-0.25..0.25) as f32;
                img[y * side + x] = (base + noise).clamp(0.0, 1.0);
            }
        }
        // clutter: four two-pixel-wide distractor strokes per image, random
        // position and orientation, so class identity needs shape rather than
        // raw ink statistics
        for _ in 0..4 {
            let orient = rng.gen_range(0..4u32);
            let y0 = rng.gen_range(0..side as i64);
            let x0 = rng.gen_range(0..side as i64);
            let len = rng.gen_range(6..=10i64);
            let shade = rng.gen_range(0.6..1.0) as f32;
            for t in 0..len {
                for thick in 0..2 {
                    let (y, x) = match orient {
                        0 => (y0 + thick, x0 + t),
                        1 => (y0 + t, x0 + thick),
                        2 => (y0 + t + thick, x0 + t),
                        _ => (y0 + t + thick, x0 - t),
                    };
                    if (0..side as i64).contains(&y) && (0..side as i64).contains(&x) {
                        let at = (y * side as i64 + x) as usize;
                        img[at] = img[at].max(shade);
                    }
                }
            }
        }
    }
    Dataset {
        images: Tensor::new(vec![n, 1, side, side], data).expect("sized above"),
        labels,
        classes: SYNTH_CLASSES,
    }
}

/// Seeded synthetic splits: jittered, noisy glyphs. Train and test draw from
/// one stream, so they are disjoint samples of the same distribution.
pub fn synth_splits(n_train: usize, n_test: usize, seed: u64) -> Splits {
    let mut rng = stream(seed, StreamRole::Synth, 0);
    let train = synth_dataset(n_train, &mut rng);
    let test = synth_dataset(n_test, &mut rng);
    let stats = compute_stats(&train.images);
    Splits { train, test, stats }
}

// ---------------------------------------------------------------- batching

/// A shuffled index order for one epoch.
pub fn epoch_order(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Copies the selected samples into a batch tensor plus labels.
pub fn gather(ds: &Dataset, idx: &[usize]) -> (Tensor, Vec<u32>) {
    let s = ds.images.shape();
    let per = s[1] * s[2] * s[3];
    let mut data = Vec::with_capacity(idx.len() * per);
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        data.extend_from_slice(&ds.images.data()[i * per..(i + 1) * per]);
        labels.push(ds.labels[i]);
    }
    let t = Tensor::new(vec![idx.len(), s[1], s[2], s[3]], data).expect("sized above");
    (t, labels)
}

// ---------------------------------------------------------------- augment

/// Per-channel (x - mean) / std, the eval-time transform.
pub fn normalize(images: &mut Tensor, stats: &ChannelStats) {
    let s = images.shape().to_vec();
    let (c, hw) = (s[1], s[2] * s[3]);
    for sample in images.data_mut().chunks_mut(c * hw) {
        for ch in 0..c {
            let m = stats.mean[ch];
            let d = stats.std[ch];
            for v in &mut sample[ch * hw..(ch + 1) * hw] {
                *v = (*v - m) / d;
            }
        }
    }
}

/// Training transform: zero-pad by `pad`, take a uniform random crop back to
/// the original size, flip horizontally with probability `flip_prob`, then
/// normalize. Crop offset (pad, pad) with no flip reproduces the original.
/// Each sample draws offsets and the flip from `rng` in a fixed order.
pub fn augment_normalize(
    images: &mut Tensor,
    rng: &mut impl Rng,
    stats: &ChannelStats,
    pad: usize,
    flip_prob: f64,
) {
    let s = images.shape().to_vec();
    let (c, h, w) = (s[1], s[2], s[3]);
    let hw = h * w;
    let mut crop = vec![0.0f32; hw];
    for sample in images.data_mut().chunks_mut(c * hw) {
        let oy = rng.gen_range(0..=2 * pad) as i64;
        let ox = rng.gen_range(0..=2 * pad) as i64;
        let flip = rng.gen_range(0.0..1.0) < flip_prob;
        for ch in 0..c {
            let plane = &mut sample[ch * hw..(ch + 1) * hw];
            for (y, row) in crop.chunks_mut(w).enumerate() {
                for (x, out) in row.iter_mut().enumerate() {
                    let sy = y as i64 + oy - pad as i64;
                    let sx = x as i64 + ox - pad as i64;
                    *out = if (0..h as i64).contains(&sy) && (0..w as i64).contains(&sx) {
                        plane[sy as usize * w + sx as usize]
                    } else {
                        0.0
                    };
                }
            }
            if flip {
                for row in crop.chunks_mut(w) {
                    row.reverse();
                }
            }
            plane.copy_from_slice(&crop);
        }
    }
    normalize(images, stats);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handcrafted_idx_bytes_decode_to_expected_pixels() {
        // 2 images of 2x2, bytes written out longhand
        let mut bytes = vec![0, 0, 8, 3];
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 51, 102, 255, 255, 204, 153, 0]);
        let t = parse_idx_images(&bytes).unwrap();
        assert_eq!(t.shape(), &[2, 1, 2, 2]);
        let expect: Vec<f32> = [0, 51, 102, 255, 255, 204, 153, 0]
            .iter()
            .map(|&b| b as f32 / 255.0)
            .collect();
        assert_eq!(t.data(), &expect[..]);

        let mut lbytes = vec![0, 0, 8, 1];
        lbytes.extend_from_slice(&2u32.to_be_bytes());
        lbytes.extend_from_slice(&[7, 3]);
        assert_eq!(parse_idx_labels(&lbytes, 10).unwrap(), vec![7, 3]);
    }

    #[test]
    fn idx_errors_name_offsets_and_magics() {
        let err = parse_idx_images(&[0, 0]).unwrap_err();
        assert!(err.to_string().contains("byte 0"), "{}", err);

        let mut label_file = vec![0, 0, 8, 1];
        label_file.extend_from_slice(&0u32.to_be_bytes());
        let err = parse_idx_images(&label_file).unwrap_err();
        assert!(err.to_string().contains("label file"), "{}", err);

        let mut truncated = vec![0, 0, 8, 3];
        truncated.extend_from_slice(&5u32.to_be_bytes());
        truncated.extend_from_slice(&2u32.to_be_bytes());
        truncated.extend_from_slice(&2u32.to_be_bytes());
        truncated.push(9); // 1 byte instead of 20
        let err = parse_idx_images(&truncated).unwrap_err();
        assert!(err.to_string().contains("expected"), "{}", err);

        let mut bad_label = vec![0, 0, 8, 1];
        bad_label.extend_from_slice(&2u32.to_be_bytes());
        bad_label.extend_from_slice(&[3, 11]);
        let err = parse_idx_labels(&bad_label, 10).unwrap_err();
        assert!(err.to_string().contains("byte 9"), "{}", err);
    }

    #[test]
    fn idx_roundtrip_preserves_quantized_pixels() {
        let spl = synth_splits(12, 4, 3);
        let bytes = write_idx_images(&spl.train.images).unwrap();
        let back = parse_idx_images(&bytes).unwrap();
        assert_eq!(back.shape(), spl.train.images.shape());
        for (&a, &b) in back.data().iter().zip(spl.train.images.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
        let lbytes = write_idx_labels(&spl.train.labels);
        assert_eq!(parse_idx_labels(&lbytes, 10).unwrap(), spl.train.labels);
    }

    #[test]
    fn cifar_records_decode_label_then_planes() {
        let mut bytes = vec![4u8];
        bytes.extend(std::iter::repeat_n(255u8, 1024)); // red plane
        bytes.extend(std::iter::repeat_n(0u8, 2048)); // green, blue
        bytes.push(9);
        bytes.extend(std::iter::repeat_n(51u8, 3072));
        let d = parse_cifar_bin(&bytes).unwrap();
        assert_eq!(d.labels, vec![4, 9]);
        assert_eq!(d.images.shape(), &[2, 3, 32, 32]);
        assert_eq!(d.images.data()[0], 1.0); // first red pixel of sample 0
        assert_eq!(d.images.data()[1024], 0.0); // first green pixel
        assert!((d.images.data()[3072] - 0.2).abs() < 1e-6); // sample 1 red

        let err = parse_cifar_bin(&bytes[..100]).unwrap_err();
        assert!(err.to_string().contains("multiple"), "{}", err);

        let mut bad = bytes.clone();
        bad[3073] = 12;
        let err = parse_cifar_bin(&bad).unwrap_err();
        assert!(err.to_string().contains("byte 3073"), "{}", err);
    }

    #[test]
    fn synth_is_seeded_balanced_and_in_range() {
        let a = synth_splits(40, 20, 5);
        let b = synth_splits(40, 20, 5);
        assert_eq!(a.train.images.data(), b.train.images.data());
        assert_ne!(
            a.train.images.data(),
            synth_splits(40, 20, 6).train.images.data()
        );
        for class in 0..10u32 {
            assert_eq!(a.train.labels.iter().filter(|&&l| l == class).count(), 4);
        }
        assert!(a.train.images.data().iter().all(|v| (0.0..=1.0).contains(v)));
        // train and test are different draws
        assert_ne!(
            &a.train.images.data()[..256],
            &a.test.images.data()[..256]
        );
    }

    #[test]
    fn center_crop_without_flip_recovers_original() {
        let spl = synth_splits(3, 1, 9);
        let mut images = spl.train.images.clone();
        let stats = ChannelStats {
            mean: vec![0.0],
            std: vec![1.0],
        };
        // rng that always yields the center offset: pad=2 -> gen_range(0..=4)
        // must return 2 twice. Drive the real path with a fixed rng and check
        // against the known draw instead: use pad=0 (only offset 0 exists).
        let mut rng = stream(1, StreamRole::Augment, 0);
        augment_normalize(&mut images, &mut rng, &stats, 0, 0.0);
        assert_eq!(images.data(), spl.train.images.data());
    }

    #[test]
    fn double_flip_is_identity_and_normalize_applies_affine() {
        let spl = synth_splits(2, 1, 11);
        let mut once = spl.train.images.clone();
        let stats = ChannelStats {
            mean: vec![0.25],
            std: vec![0.5],
        };
        let mut rng = stream(2, StreamRole::Augment, 0);
        augment_normalize(&mut once, &mut rng, &stats, 0, 1.0); // always flips
        let mut twice = once.clone();
        // undo normalization before the second pass so we flip raw pixels
        for v in twice.data_mut() {
            *v = *v * 0.5 + 0.25;
        }
        let mut rng2 = stream(3, StreamRole::Augment, 0);
        augment_normalize(&mut twice, &mut rng2, &stats, 0, 1.0);
        for (a, b) in twice.data().iter().zip(spl.train.images.data()) {
            let expect = (b - 0.25) / 0.5;
            assert!((a - expect).abs() < 1e-5);
        }
    }

    #[test]
    fn stats_standardize_the_split() {
        let spl = synth_splits(64, 8, 13);
        let mut images = spl.train.images.clone();
        normalize(&mut images, &spl.stats);
        let n = images.len() as f64;
        let mean: f64 = images.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var: f64 = images.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-4, "mean {}", mean);
        assert!((var - 1.0).abs() < 1e-3, "var {}", var);
    }

    #[test]
    fn epoch_order_is_a_seeded_permutation() {
        let mut rng = stream(7, StreamRole::DataOrder, 0);
        let a = epoch_order(100, &mut rng);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        let mut rng2 = stream(7, StreamRole::DataOrder, 0);
        assert_eq!(a, epoch_order(100, &mut rng2));
    }

    #[test]
    fn gather_copies_rows_and_labels() {
        let spl = synth_splits(10, 2, 17);
        let (batch, labels) = gather(&spl.train, &[3, 7]);
        assert_eq!(batch.shape(), &[2, 1, 16, 16]);
        assert_eq!(labels, vec![spl.train.labels[3], spl.train.labels[7]]);
        assert_eq!(
            &batch.data()[..256],
            &spl.train.images.data()[3 * 256..4 * 256]
        );
    }

    #[test]
    fn truncate_keeps_prefix() {
        let mut d = synth_splits(10, 2, 19).train;
        let keep = d.images.data()[..3 * 256].to_vec();
        d.truncate(3);
        assert_eq!(d.len(), 3);
        assert_eq!(d.images.data(), &keep[..]);
    }
}
