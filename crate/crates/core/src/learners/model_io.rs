//! Model file layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VNFM"
//! 4       2     format version (currently 1)
//! 6       1     algorithm tag
//! 7       1     scalar width in bytes (4 = f32, 8 = f64)
//! 8       8     payload length
//! 16      32    SHA-256 of payload
//! 48      ..    payload: canonical JSON of the model
//! ```

use sha2::{Digest, Sha256};

use super::TrainedModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 4] = b"VNFM";
pub const MODEL_FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 48;

pub fn save_model<T: Scalar>(model: &TrainedModel<T>) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(model)?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.push(model.algorithm.tag());
    out.push(T::TAG);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn load_model<T: Scalar>(bytes: &[u8]) -> Result<TrainedModel<T>> {
    if bytes.len() < 6 || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::Corrupt("bad magic or truncated header".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corrupt("truncated header".into()));
    }
    let algo_tag = bytes[6];
    let width = bytes[7];
    if width != T::TAG {
        return Err(Error::ScalarWidth {
            found: width,
            expected: T::TAG,
        });
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != len {
        return Err(Error::Corrupt(format!(
            "payload length {} does not match header {len}",
            payload.len()
        )));
    }
    if Sha256::digest(payload).as_slice() != &bytes[16..48] {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    let model: TrainedModel<T> =
        serde_json::from_slice(payload).map_err(|e| Error::Corrupt(format!("payload: {e}")))?;
    if model.algorithm.tag() != algo_tag {
        return Err(Error::Corrupt("algorithm tag does not match payload".into()));
    }
    Ok(model)
}
