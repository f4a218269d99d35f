//! Raw tensor input: little-endian IEEE-754 binary32, row-major, described
//! by a JSON manifest `{"dtype":"f32","shape":[...],"data":"<path>"}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::WorkloadError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorManifest {
    pub dtype: String,
    pub shape: Vec<usize>,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

/// Load a tensor from its JSON manifest; the data path is resolved relative
/// to the manifest location.
pub fn load_tensor(manifest_path: &Path) -> Result<Tensor, WorkloadError> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: TensorManifest =
        serde_json::from_str(&text).map_err(|e| WorkloadError::Manifest(e.to_string()))?;
    if manifest.dtype != "f32" {
        return Err(WorkloadError::Manifest(format!(
            "unsupported dtype '{}', expected f32",
            manifest.dtype
        )));
    }
    let data_path = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.data);
    let bytes = fs::read(&data_path)?;
    let expected: usize = manifest.shape.iter().product();
    if bytes.len() != expected * 4 {
        return Err(WorkloadError::Manifest(format!(
            "data file holds {} bytes, shape {:?} needs {}",
            bytes.len(),
            manifest.shape,
            expected * 4
        )));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Tensor {
        shape: manifest.shape,
        values,
    })
}

/// Write a tensor as raw binary32 plus its manifest.
pub fn save_tensor(
    tensor: &Tensor,
    manifest_path: &Path,
    data_filename: &str,
) -> Result<(), WorkloadError> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let bytes: Vec<u8> = tensor
        .values
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    fs::write(dir.join(data_filename), bytes)?;
    let manifest = TensorManifest {
        dtype: "f32".to_string(),
        shape: tensor.shape.clone(),
        data: data_filename.to_string(),
    };
    fs::write(
        manifest_path,
        serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let tensor = Tensor {
            shape: vec![2, 3],
            values: vec![1.0, -2.5, 0.0, 3.25, f32::MIN_POSITIVE, 1e9],
        };
        let manifest = dir.path().join("w.json");
        save_tensor(&tensor, &manifest, "w.bin").unwrap();
        assert_eq!(load_tensor(&manifest).unwrap(), tensor);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("w.json");
        std::fs::write(&manifest, r#"{"dtype":"f32","shape":[4],"data":"w.bin"}"#).unwrap();
        std::fs::write(dir.path().join("w.bin"), [0u8; 8]).unwrap();
        assert!(matches!(
            load_tensor(&manifest),
            Err(WorkloadError::Manifest(_))
        ));
    }

    #[test]
    fn unsupported_dtype_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("w.json");
        std::fs::write(&manifest, r#"{"dtype":"f64","shape":[1],"data":"w.bin"}"#).unwrap();
        assert!(load_tensor(&manifest).is_err());
    }
}
