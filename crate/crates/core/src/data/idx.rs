//! MNIST-family IDX files: big-endian `u32` magic, `u32` dimensions, then
//! unsigned bytes.

use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

struct IdxFile {
    dims: Vec<usize>,
    payload: Vec<u8>,
}

fn read_idx(path: &Path, magic: u32, ndims: usize) -> Result<IdxFile> {
    let bytes = fs::read(path)?;
    let err = |message: String| Error::Idx {
        path: path.to_path_buf(),
        message,
    };
    let word = |i: usize| -> Result<u32> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| err("truncated header".into()))
    };
    let found = word(0)?;
    if found != magic {
        return Err(err(format!("bad magic {found}, expected {magic}")));
    }
    let dims: Vec<usize> = (1..=ndims)
        .map(|i| word(i).map(|v| v as usize))
        .collect::<Result<_>>()?;
    let header = 4 * (ndims + 1);
    let len: usize = dims.iter().product();
    if bytes.len() < header + len {
        return Err(err(format!(
            "truncated payload: {} of {len} bytes",
            bytes.len() - header
        )));
    }
    Ok(IdxFile {
        dims,
        payload: bytes[header..header + len].to_vec(),
    })
}

/// Loads `N x H x W` images flattened row-major to `N x (H*W)` plus labels.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = read_idx(images_path, IMAGE_MAGIC, 3)?;
    let labels = read_idx(labels_path, LABEL_MAGIC, 1)?;
    let n = images.dims[0];
    if n != labels.dims[0] {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.dims[0],
        });
    }
    let d = images.dims[1] * images.dims[2];
    let values = images.payload.iter().map(|&b| f64::from(b)).collect();
    let name = images_path
        .file_stem()
        .map_or_else(|| "idx".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(
        Tensor2D::from_vec(n, d, values)?,
        Some(labels.payload.iter().map(|&b| usize::from(b)).collect()),
        name,
    )
}

/// Serializes images and labels in IDX layout; used for fixtures and exports.
pub fn encode_idx(images: &[Vec<u8>], height: usize, width: usize, labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::new();
    img.extend(IMAGE_MAGIC.to_be_bytes());
    img.extend((images.len() as u32).to_be_bytes());
    img.extend((height as u32).to_be_bytes());
    img.extend((width as u32).to_be_bytes());
    for im in images {
        img.extend(im);
    }
    let mut lbl = Vec::new();
    lbl.extend(LABEL_MAGIC.to_be_bytes());
    lbl.extend((labels.len() as u32).to_be_bytes());
    lbl.extend(labels);
    (img, lbl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    /// Hand-built bytes: magic 0x00000803, n=4, 2x2 pixels.
    fn fixture_images() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 4, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend(0u8..16);
        b
    }

    #[test]
    fn hand_built_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(dir.path(), "img", &fixture_images());
        let lbl = write(dir.path(), "lbl", &[0, 0, 8, 1, 0, 0, 0, 4, 3, 1, 4, 1]);
        let ds = load_idx(&img, &lbl).unwrap();
        assert_eq!(ds.features.shape(), (4, 4));
        assert_eq!(ds.features.row(1), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(ds.labels, Some(vec![3, 1, 4, 1]));

        let (img2, lbl2) = encode_idx(
            &(0..4).map(|i| (4 * i..4 * i + 4).collect()).collect::<Vec<_>>(),
            2,
            2,
            &[3, 1, 4, 1],
        );
        assert_eq!(img2, fixture_images());
        assert_eq!(lbl2, vec![0, 0, 8, 1, 0, 0, 0, 4, 3, 1, 4, 1]);
    }

    #[test]
    fn bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = fixture_images();
        bytes[..4].copy_from_slice(&[0, 0, 0, 0]);
        let img = write(dir.path(), "img", &bytes);
        let lbl = write(dir.path(), "lbl", &[0, 0, 8, 1, 0, 0, 0, 4, 3, 1, 4, 1]);
        assert!(matches!(load_idx(&img, &lbl), Err(Error::Idx { .. })));
    }

    #[test]
    fn truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = fixture_images();
        bytes.truncate(20);
        let img = write(dir.path(), "img", &bytes);
        let lbl = write(dir.path(), "lbl", &[0, 0, 8, 1, 0, 0, 0, 4, 3, 1, 4, 1]);
        let err = load_idx(&img, &lbl).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(dir.path(), "img", &fixture_images());
        let lbl = write(dir.path(), "lbl", &[0, 0, 8, 1, 0, 0, 0, 3, 3, 1, 4]);
        assert!(matches!(
            load_idx(&img, &lbl),
            Err(Error::CountMismatch {
                images: 4,
                labels: 3
            })
        ));
    }
}
