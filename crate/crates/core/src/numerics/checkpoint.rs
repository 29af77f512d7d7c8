//! Network checkpoint format: magic bytes, one JSON header line, then the
//! flat parameters as raw little-endian f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{NetParams, NetSpec};
use super::NumericsError;

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"ADPN1\n";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    spec: NetSpec,
    shapes: Vec<(usize, usize)>,
    param_count: usize,
    seed: Option<u64>,
    #[serde(default)]
    meta: serde_json::Value,
}

/// Writes a checkpoint. `meta` carries training metadata (steps, loss, ...);
/// it must not contain anything non-deterministic if byte-identical
/// checkpoints are expected.
pub fn save_net(
    path: &Path,
    spec: &NetSpec,
    params: &NetParams,
    seed: Option<u64>,
    meta: serde_json::Value,
) -> Result<(), NumericsError> {
    let header = Header {
        spec: spec.clone(),
        shapes: spec.shapes(),
        param_count: spec.param_count(),
        seed,
        meta,
    };
    let file = File::create(path).map_err(|e| NumericsError::Io(path.into(), e.to_string()))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| NumericsError::Io(path.into(), e.to_string());
    w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
    let header_line =
        serde_json::to_string(&header).map_err(|e| NumericsError::Io(path.into(), e.to_string()))?;
    w.write_all(header_line.as_bytes()).map_err(io_err)?;
    w.write_all(b"\n").map_err(io_err)?;
    for &x in params.as_slice() {
        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads a checkpoint written by [`save_net`].
pub fn load_net(
    path: &Path,
) -> Result<(NetSpec, NetParams, Option<u64>, serde_json::Value), NumericsError> {
    let file = File::open(path).map_err(|e| NumericsError::Io(path.into(), e.to_string()))?;
    let mut r = BufReader::new(file);
    let io_err = |e: std::io::Error| NumericsError::Io(path.into(), e.to_string());

    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NumericsError::BadCheckpoint(
            path.into(),
            "wrong magic bytes".into(),
        ));
    }
    let mut header_bytes = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte).map_err(io_err)?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| NumericsError::BadCheckpoint(path.into(), e.to_string()))?;
    header.spec.validate()?;
    if header.param_count != header.spec.param_count() {
        return Err(NumericsError::BadCheckpoint(
            path.into(),
            "header param count disagrees with spec".into(),
        ));
    }

    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(io_err)?;
    if raw.len() != header.param_count * 8 {
        return Err(NumericsError::BadCheckpoint(
            path.into(),
            format!(
                "expected {} parameter bytes, found {}",
                header.param_count * 8,
                raw.len()
            ),
        ));
    }
    let flat: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = NetParams::from_flat(&header.spec, flat)?;
    Ok((header.spec, params, header.seed, header.meta))
}
