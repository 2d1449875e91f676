//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//! `b"HMLP"`, `u32` version, `u32` layer count L, L+1 `u32` widths,
//! then per layer the weights (`outputs × inputs`, row-major) followed by
//! the biases as `f64`.

use std::fs;
use std::path::Path;

use super::mlp::{DenseLayer, MlpModel};
use super::NetError;

const MAGIC: &[u8; 4] = b"HMLP";
const VERSION: u32 = 1;

pub fn to_bytes(model: &MlpModel) -> Vec<u8> {
    let sizes = model.layer_sizes();
    let mut out = Vec::with_capacity(16 + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for s in sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for v in model.parameters() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<MlpModel, NetError> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], NetError> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| NetError::Format(format!("truncated at byte {pos}")))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(NetError::Format("bad magic bytes".into()));
    }
    let read_u32 = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    let version = read_u32(take(4)?);
    if version != VERSION {
        return Err(NetError::Format(format!("unsupported version {version}")));
    }
    let count = read_u32(take(4)?) as usize;
    if count == 0 || count > 64 {
        return Err(NetError::Format(format!("implausible layer count {count}")));
    }
    let sizes = (0..=count)
        .map(|_| take(4).map(|s| read_u32(s) as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let mut layers = Vec::with_capacity(count);
    for w in sizes.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let mut floats = |n: usize| -> Result<Vec<f64>, NetError> {
            let raw = take(
                n.checked_mul(8)
                    .ok_or_else(|| NetError::Format("overflow".into()))?,
            )?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        let weights = floats(inputs * outputs)?;
        let bias = floats(outputs)?;
        layers.push(DenseLayer::new(inputs, outputs, weights, bias)?);
    }
    if pos != bytes.len() {
        return Err(NetError::Format(format!(
            "{} trailing bytes",
            bytes.len() - pos
        )));
    }
    MlpModel::from_layers(layers)
}

pub fn save(model: &MlpModel, path: &Path) -> Result<(), NetError> {
    fs::write(path, to_bytes(model)).map_err(|source| NetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a model and checks it has the harmonizer's 12 → 48 shape.
pub fn load(path: &Path) -> Result<MlpModel, NetError> {
    let bytes = fs::read(path).map_err(|source| NetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let model = from_bytes(&bytes)?;
    model.ensure_harmonizer_shape()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reload_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = MlpModel::initialized(&[12, 7, 5, 48], &mut rng).unwrap();
        let bytes = to_bytes(&model);
        assert_eq!(&bytes[..4], b"HMLP");
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let model = MlpModel::zeros(&[12, 4, 48]).unwrap();
        let bytes = to_bytes(&model);
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(from_bytes(&magic).is_err());
    }
}
