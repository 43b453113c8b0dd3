//! Versioned binary checkpoint format for [`ModelParams`].
//!
//! Layout: magic bytes `PGD1`, a shape header of little-endian u32
//! counts `(data_dim, embed_dim, hidden_dim, output_dim)`, then the
//! f64 arrays `w1, b1, w2, b2, w3, b3` row-major, little-endian. A JSON
//! sidecar at `<path>.json` records the architecture hyperparameters
//! and, for merged or distilled checkpoints, a provenance record.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::{Architecture, ModelParams, DATA_DIM};

const MAGIC: &[u8; 4] = b"PGD1";

/// How a checkpoint was produced, recorded in the sidecar.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    /// e.g. "pretrain", "dpo", "sft_positive", "pgd_merge", "distill".
    pub kind: String,
    /// Merge coefficient or guidance weight when applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    /// FNV-1a checksums of the source checkpoints.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub data_dim: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_params(path: &Path, params: &ModelParams, provenance: Option<Provenance>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(MAGIC)?;
    let arch = params.arch;
    for dim in [DATA_DIM, arch.embed_dim, arch.hidden_dim, arch.output_dim()] {
        f.write_all(&(dim as u32).to_le_bytes())?;
    }
    for buf in [&params.w1, &params.b1, &params.w2, &params.b2, &params.w3, &params.b3] {
        for &x in buf.iter() {
            f.write_all(&x.to_le_bytes())?;
        }
    }
    let sidecar = Sidecar {
        format: "PGD1".to_string(),
        data_dim: DATA_DIM,
        embed_dim: arch.embed_dim,
        hidden_dim: arch.hidden_dim,
        provenance,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams> {
    let err = |why: String| Error::Checkpoint {
        path: path.display().to_string(),
        why,
    };
    let mut f = fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)
        .map_err(|e| err(format!("short read on magic: {e}")))?;
    if &magic != MAGIC {
        return Err(err(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        let mut b = [0u8; 4];
        f.read_exact(&mut b)
            .map_err(|e| err(format!("short read on shape header: {e}")))?;
        *d = u32::from_le_bytes(b) as usize;
    }
    if dims[0] != DATA_DIM || dims[3] != DATA_DIM {
        return Err(err(format!(
            "data dims {}x{} unsupported, this build is 2D",
            dims[0], dims[3]
        )));
    }
    let arch = Architecture {
        embed_dim: dims[1],
        hidden_dim: dims[2],
    };
    let mut params = ModelParams::zeros(arch);
    {
        let mut read_buf = |buf: &mut Vec<f64>| -> Result<()> {
            let mut bytes = vec![0u8; buf.len() * 8];
            f.read_exact(&mut bytes)
                .map_err(|e| err(format!("short read on parameter block: {e}")))?;
            for (i, x) in buf.iter_mut().enumerate() {
                let mut b = [0u8; 8];
                b.copy_from_slice(&bytes[i * 8..i * 8 + 8]);
                *x = f64::from_le_bytes(b);
            }
            Ok(())
        };
        read_buf(&mut params.w1)?;
        read_buf(&mut params.b1)?;
        read_buf(&mut params.w2)?;
        read_buf(&mut params.b2)?;
        read_buf(&mut params.w3)?;
        read_buf(&mut params.b3)?;
    }
    let mut rest = Vec::new();
    f.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(err(format!("{} trailing bytes", rest.len())));
    }
    Ok(params)
}

pub fn load_sidecar(path: &Path) -> Result<Sidecar> {
    let sp = sidecar_path(path);
    let text = fs::read_to_string(&sp)?;
    serde_json::from_str(&text).map_err(|e| Error::Checkpoint {
        path: sp.display().to_string(),
        why: format!("bad sidecar: {e}"),
    })
}
