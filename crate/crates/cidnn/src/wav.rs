//! Reading and writing 16 kHz mono PCM-16 WAV files.
//!
//! Read maps samples to [-1, 1) by division by 32768; write quantizes with
//! `round(x * 32768)` clamped to the 16-bit range, so a read/write round trip
//! of PCM data is bit-stable and a write/read round trip of arbitrary samples
//! deviates by at most 1/32768.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::dsp::{TimeSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

fn wav_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Wav { path: path.to_path_buf(), reason: reason.into() }
}

fn u16_at(data: &[u8], pos: usize) -> u16 {
    u16::from_le_bytes([data[pos], data[pos + 1]])
}

fn u32_at(data: &[u8], pos: usize) -> u32 {
    u32::from_le_bytes([data[pos], data[pos + 1], data[pos + 2], data[pos + 3]])
}

/// Reads a mono 16 kHz PCM-16 WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<TimeSignal> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.len() < 44 || &data[0..4] != b"RIFF" || &data[8..12] != b"WAVE" {
        return Err(wav_err(path, "not a RIFF/WAVE file"));
    }

    // Walk the chunk list; require an fmt chunk before the data chunk.
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // codec, channels, rate, bits
    let mut samples: Option<Vec<f64>> = None;
    while pos + 8 <= data.len() {
        let id = &data[pos..pos + 4];
        let size = u32_at(&data, pos + 4) as usize;
        let body = pos + 8;
        if body + size > data.len() {
            return Err(wav_err(path, format!("truncated chunk {:?}", String::from_utf8_lossy(id))));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(wav_err(path, "fmt chunk too small"));
                }
                fmt = Some((
                    u16_at(&data, body),
                    u16_at(&data, body + 2),
                    u32_at(&data, body + 4),
                    u16_at(&data, body + 14),
                ));
            }
            b"data" => {
                let (codec, channels, rate, bits) =
                    fmt.ok_or_else(|| wav_err(path, "data chunk before fmt chunk"))?;
                if codec != 1 {
                    return Err(wav_err(path, format!("expected PCM (format 1), got format {codec}")));
                }
                if channels != 1 {
                    return Err(wav_err(path, format!("expected mono, got {channels} channels")));
                }
                if rate != SAMPLE_RATE {
                    return Err(wav_err(path, format!("expected {SAMPLE_RATE} Hz, got {rate} Hz")));
                }
                if bits != 16 {
                    return Err(wav_err(path, format!("expected 16-bit samples, got {bits}-bit")));
                }
                let out = data[body..body + size - size % 2]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                    .collect();
                samples = Some(out);
            }
            _ => {}
        }
        pos = body + size + size % 2; // chunks are word-aligned
    }
    match samples {
        Some(s) => Ok(TimeSignal::from_samples(s)),
        None => Err(wav_err(path, "no data chunk")),
    }
}

/// Writes a mono 16 kHz PCM-16 WAV file, clipping samples to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, signal: &TimeSignal) -> Result<()> {
    let path = path.as_ref();
    let n = signal.len();
    let data_size = (n * 2) as u32;
    let mut bytes = Vec::with_capacity(44 + n * 2);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_size).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
    bytes.extend_from_slice(&1u16.to_le_bytes()); // mono
    bytes.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    bytes.extend_from_slice(&(SAMPLE_RATE * 2).to_le_bytes()); // byte rate
    bytes.extend_from_slice(&2u16.to_le_bytes()); // block align
    bytes.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_size.to_le_bytes());
    for s in signal.samples() {
        let q = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        bytes.extend_from_slice(&q.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}
