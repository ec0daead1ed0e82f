//! Reader for the IDX container format: a 4-byte big-endian magic
//! (2051 = unsigned-byte images with 3 dimension sizes, 2049 = labels with
//! one), the big-endian dimension sizes, then the raw payload.

use crate::error::CliError;
use logitest_core::linalg::Matrix;
use std::path::Path;

pub const MAGIC_LABELS: u32 = 2049;
pub const MAGIC_IMAGES: u32 = 2051;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxDataset {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub payload: Vec<u8>,
}

impl IdxDataset {
    pub fn parse(bytes: &[u8]) -> Result<IdxDataset, CliError> {
        let take_u32 = |pos: usize| -> Result<u32, CliError> {
            bytes
                .get(pos..pos + 4)
                .map(|s| u32::from_be_bytes(s.try_into().unwrap()))
                .ok_or_else(|| CliError::Idx("truncated header".into()))
        };
        let magic = take_u32(0)?;
        let n_dims = match magic {
            MAGIC_LABELS => 1,
            MAGIC_IMAGES => 3,
            other => {
                return Err(CliError::Idx(format!(
                    "magic mismatch: got {other}, expected {MAGIC_LABELS} (labels) or {MAGIC_IMAGES} (images)"
                )))
            }
        };
        let mut dims = Vec::with_capacity(n_dims);
        for i in 0..n_dims {
            dims.push(take_u32(4 + 4 * i)? as usize);
        }
        let header = 4 + 4 * n_dims;
        let expected: usize = dims.iter().product();
        let payload = bytes
            .get(header..)
            .ok_or_else(|| CliError::Idx("truncated header".into()))?;
        if payload.len() != expected {
            return Err(CliError::Idx(format!(
                "truncated payload: {} bytes for {} declared entries",
                payload.len(),
                expected
            )));
        }
        Ok(IdxDataset {
            magic,
            dims,
            payload: payload.to_vec(),
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }
}

/// Read an images/labels file pair into a sample matrix scaled to `[0, 1]`
/// (row-major flattening, per-pixel scale 1/255), keeping only the rows
/// whose label passes the filter.
pub fn read_idx(
    images_path: &Path,
    labels_path: &Path,
    class_filter: &[u8],
) -> Result<Matrix, CliError> {
    let read = |p: &Path| -> Result<Vec<u8>, CliError> {
        std::fs::read(p).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            source: e,
        })
    };
    let images = IdxDataset::parse(&read(images_path)?)?;
    let labels = IdxDataset::parse(&read(labels_path)?)?;
    if images.magic != MAGIC_IMAGES {
        return Err(CliError::Idx(format!(
            "{} is not an image container (magic {})",
            images_path.display(),
            images.magic
        )));
    }
    if labels.magic != MAGIC_LABELS {
        return Err(CliError::Idx(format!(
            "{} is not a label container (magic {})",
            labels_path.display(),
            labels.magic
        )));
    }
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(CliError::Idx(format!(
            "count mismatch: {} images vs {} labels",
            n, labels.dims[0]
        )));
    }
    let pixels = images.dims[1] * images.dims[2];
    let keep = |l: u8| class_filter.is_empty() || class_filter.contains(&l);
    let mut rows = Vec::new();
    for i in 0..n {
        if keep(labels.payload[i]) {
            rows.extend(
                images.payload[i * pixels..(i + 1) * pixels]
                    .iter()
                    .map(|&b| f64::from(b) / 255.0),
            );
        }
    }
    let kept = rows.len() / pixels.max(1);
    if kept == 0 {
        return Err(CliError::Idx("class filter removed every sample".into()));
    }
    Ok(Matrix::from_vec(kept, pixels, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_pair() -> (Vec<u8>, Vec<u8>) {
        // Two 2x2 images: all-zero and all-255, labels 0 and 1.
        let images = IdxDataset {
            magic: MAGIC_IMAGES,
            dims: vec![2, 2, 2],
            payload: vec![0, 0, 0, 0, 255, 255, 255, 255],
        };
        let labels = IdxDataset {
            magic: MAGIC_LABELS,
            dims: vec![2],
            payload: vec![0, 1],
        };
        (images.encode(), labels.encode())
    }

    fn write_temp(name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = std::env::temp_dir().join(format!("logitest-idx-{name}-{}", std::process::id()));
        std::fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn scaling_and_flattening() {
        let (im, lb) = synthetic_pair();
        let pi = write_temp("im", &im);
        let pl = write_temp("lb", &lb);
        let m = read_idx(&pi, &pl, &[]).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.row(1), &[1.0, 1.0, 1.0, 1.0]);
        let only_one = read_idx(&pi, &pl, &[1]).unwrap();
        assert_eq!(only_one.rows(), 1);
        assert_eq!(only_one.row(0), &[1.0, 1.0, 1.0, 1.0]);
        std::fs::remove_file(pi).ok();
        std::fs::remove_file(pl).ok();
    }

    #[test]
    fn wrong_magic_is_reported() {
        let mut bad = synthetic_pair().0;
        bad[..4].copy_from_slice(&2050u32.to_be_bytes());
        let err = IdxDataset::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("magic mismatch"), "{err}");
        assert!(err.to_string().contains("2050"));
    }

    #[test]
    fn truncation_and_count_mismatch() {
        let (im, lb) = synthetic_pair();
        assert!(IdxDataset::parse(&im[..im.len() - 1]).is_err());
        // Labels shorter than images.
        let short = IdxDataset {
            magic: MAGIC_LABELS,
            dims: vec![1],
            payload: vec![0],
        };
        let pi = write_temp("im2", &im);
        let pl = write_temp("lb2", &short.encode());
        let err = read_idx(&pi, &pl, &[]).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
        std::fs::remove_file(pi).ok();
        std::fs::remove_file(pl).ok();
        let _ = lb;
    }
}
