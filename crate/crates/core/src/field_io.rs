//! Field files: a JSON header plus a sibling block of little-endian `f64`
//! samples in row-major, x1-fastest order.
//!
//! ```json
//! {"n1": 256, "n2": 256, "layout": "row-major-x1-fastest", "dtype": "f64-le", "data": "w.bin"}
//! ```
//!
//! `data` is resolved relative to the header's directory. When absent, the
//! block is looked up at the header path with its extension replaced by `bin`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmecticError};
use crate::torus_field::{GridSpec, TorusField};

pub const LAYOUT: &str = "row-major-x1-fastest";
pub const DTYPE: &str = "f64-le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n1: usize,
    pub n2: usize,
    pub layout: String,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

pub fn data_path_for(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

pub fn encode_samples(samples: &[f64]) -> Vec<u8> {
    samples.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(SmecticError::InvalidParameter(format!("sample block of {} bytes is not a whole number of f64", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

/// Header and sample bytes for `field`; the caller decides where they go.
pub fn encode_field(field: &TorusField, data_name: &str) -> Result<(String, Vec<u8>)> {
    let grid = field.grid();
    let header = FieldHeader {
        n1: grid.n1(),
        n2: grid.n2(),
        layout: LAYOUT.into(),
        dtype: DTYPE.into(),
        data: Some(data_name.into()),
    };
    let samples = field.physical()?;
    Ok((serde_json::to_string_pretty(&header)?, encode_samples(&samples)))
}

pub fn write_field(header_path: &Path, field: &TorusField) -> Result<()> {
    let data_path = data_path_for(header_path);
    let name = data_path.file_name().and_then(|s| s.to_str()).unwrap_or("field.bin").to_string();
    let (header, bytes) = encode_field(field, &name)?;
    fs::write(&data_path, bytes)?;
    fs::write(header_path, header)?;
    Ok(())
}

pub fn read_field(header_path: &Path) -> Result<TorusField> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    if header.layout != LAYOUT || header.dtype != DTYPE {
        return Err(SmecticError::InvalidParameter(format!(
            "unsupported field layout '{}' / dtype '{}'",
            header.layout, header.dtype
        )));
    }
    let grid = GridSpec::new(header.n1, header.n2)?;
    let data_path = match &header.data {
        Some(name) => header_path.parent().unwrap_or(Path::new(".")).join(name),
        None => data_path_for(header_path),
    };
    let samples = decode_samples(&fs::read(data_path)?)?;
    TorusField::from_samples(grid, samples)
}
