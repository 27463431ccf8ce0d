//! JSON messages exchanged over the live control socket, one object per
//! WebSocket text frame. The schema lives in `schema/control.schema.json`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    A,
    B,
}

/// Client → engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlMessage {
    SetK { k: f64 },
    Load { slot: Slot, path: PathBuf },
    Start,
    Stop,
    Status,
}

/// Engine → client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "status")]
pub struct StatusFrame {
    pub k: f64,
    pub rms: f64,
    pub hop: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ControlError {
    #[error("malformed control message: {0}")]
    Json(#[from] serde_json::Error),
    #[error("k must be a finite number")]
    NonFiniteK,
}

/// Parses one frame; `set_k` values are clamped into `[0, 1]`.
pub fn parse_control(text: &str) -> Result<ControlMessage, ControlError> {
    let mut msg: ControlMessage = serde_json::from_str(text)?;
    if let ControlMessage::SetK { k } = &mut msg {
        if !k.is_finite() {
            return Err(ControlError::NonFiniteK);
        }
        *k = k.clamp(0.0, 1.0);
    }
    Ok(msg)
}

impl StatusFrame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("status frames always serialize")
    }
}
