//! Detector adapters. The external protocol: one process per evaluation,
//! `{"image": path, "scale": s}` on stdin, a COCO results array in
//! original-image coordinates on stdout, non-zero exit on failure.

use std::convert::Infallible;
use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalkit::io::{parse_detections, DetectionsError};
use crate::evalkit::Detection;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("could not run detector: {0}")]
    Io(#[from] std::io::Error),
    #[error("detector exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("detector output: {0}")]
    Output(#[from] DetectionsError),
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl From<Infallible> for AdapterError {
    fn from(e: Infallible) -> Self {
        match e {}
    }
}

pub trait DetectorAdapter {
    /// Detections for `image` resized by `scale`, mapped back to the
    /// original image's coordinates.
    fn detect(&mut self, image: &str, scale: f64) -> Result<Vec<Detection>, AdapterError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterRequest {
    pub image: String,
    pub scale: f64,
}

impl AdapterRequest {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

pub fn parse_request(bytes: &[u8]) -> Result<AdapterRequest, AdapterError> {
    let r: AdapterRequest = serde_json::from_slice(bytes).map_err(|e| AdapterError::Protocol(e.to_string()))?;
    if !(r.scale.is_finite() && r.scale > 0.0) {
        return Err(AdapterError::Protocol(format!("scale must be positive, got {}", r.scale)));
    }
    Ok(r)
}

pub fn parse_output(bytes: &[u8]) -> Result<Vec<Detection>, AdapterError> {
    Ok(parse_detections(bytes)?)
}

/// Runs a shell command per evaluation.
#[derive(Debug, Clone)]
pub struct CommandAdapter {
    pub command: String,
}

impl CommandAdapter {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into() }
    }
}

impl DetectorAdapter for CommandAdapter {
    fn detect(&mut self, image: &str, scale: f64) -> Result<Vec<Detection>, AdapterError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        let request = AdapterRequest { image: image.to_string(), scale }.to_json_string();
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            // a detector may exit without reading its input
            if let Err(e) = stdin.write_all(request.as_bytes()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(AdapterError::Exit {
                status: out.status.to_string(),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        parse_output(&out.stdout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_parsing() {
        let r = parse_request(br#"{"image": "a.png", "scale": 1.5}"#).unwrap();
        assert_eq!(r, AdapterRequest { image: "a.png".into(), scale: 1.5 });
        assert!(parse_request(br#"{"image": "a.png", "scale": 0}"#).is_err());
        assert!(parse_request(br#"{"image": "a.png"}"#).is_err());
    }

    #[test]
    fn command_round_trip() {
        let mut a = CommandAdapter::new(
            r#"cat >/dev/null; echo '[{"image_id": 1, "category_id": 3, "bbox": [0, 0, 2, 2], "score": 0.9}]'"#,
        );
        let d = a.detect("x.png", 1.0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].class_id, 2);
    }

    #[test]
    fn command_sees_request() {
        let mut a = CommandAdapter::new(r#"grep -q '"scale":2.5' && echo '[]'"#);
        assert!(a.detect("x.png", 2.5).unwrap().is_empty());
        assert!(matches!(a.detect("x.png", 1.0), Err(AdapterError::Exit { .. })));
    }

    #[test]
    fn bad_output_is_an_error() {
        let mut a = CommandAdapter::new("echo nope");
        assert!(matches!(a.detect("x.png", 1.0), Err(AdapterError::Output(_))));
    }
}
