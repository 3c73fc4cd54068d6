//! `FFS1` stream wire formats.
//!
//! Two encodings carry the same payload — a header declaring the token shape,
//! then one frame per step:
//!
//! - **binary**: 16-byte header (`"FFS1"` magic, version, S, D — all u32
//!   little-endian after the magic) followed by packed row-major `S*D` f32
//!   little-endian frames. Step indices are implicit in file order.
//! - **jsonl**: a header object on the first line, then one object per frame
//!   with an explicit `t` that must advance consecutively from 0.
//!
//! Values are 32-bit on the wire and widen to f64 in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::StreamError;
use crate::frame::FrameFeature;

pub const MAGIC: [u8; 4] = *b"FFS1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamFormat {
    Binary,
    Jsonl,
}

/// Declared token shape of a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub s: usize,
    pub d: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    magic: String,
    version: u32,
    #[serde(rename = "S")]
    s: u64,
    #[serde(rename = "D")]
    d: u64,
}

#[derive(Serialize, Deserialize)]
struct JsonlFrame {
    t: u64,
    tokens: Vec<Vec<f64>>,
}

fn validate_shape(s: u64, d: u64) -> Result<StreamHeader, StreamError> {
    if s == 0 || d == 0 || s > u32::MAX as u64 || d > u32::MAX as u64 {
        return Err(StreamError::InvalidShape { s, d });
    }
    Ok(StreamHeader {
        s: s as usize,
        d: d as usize,
    })
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct StreamWriter<W: Write> {
    inner: W,
    format: StreamFormat,
    header: StreamHeader,
    next_t: u64,
}

impl<W: Write> StreamWriter<W> {
    /// Wraps a sink and writes the stream header immediately.
    pub fn new(
        mut inner: W,
        format: StreamFormat,
        s: usize,
        d: usize,
    ) -> Result<Self, StreamError> {
        let header = validate_shape(s as u64, d as u64)?;
        match format {
            StreamFormat::Binary => {
                inner.write_all(&MAGIC)?;
                inner.write_all(&VERSION.to_le_bytes())?;
                inner.write_all(&(s as u32).to_le_bytes())?;
                inner.write_all(&(d as u32).to_le_bytes())?;
            }
            StreamFormat::Jsonl => {
                let line = serde_json::to_string(&JsonlHeader {
                    magic: "FFS1".to_string(),
                    version: VERSION,
                    s: s as u64,
                    d: d as u64,
                })
                .expect("header serialization cannot fail");
                inner.write_all(line.as_bytes())?;
                inner.write_all(b"\n")?;
            }
        }
        Ok(StreamWriter {
            inner,
            format,
            header,
            next_t: 0,
        })
    }

    pub fn header(&self) -> StreamHeader {
        self.header
    }

    pub fn frames_written(&self) -> u64 {
        self.next_t
    }

    /// Appends one frame. Steps must arrive consecutively from 0; values are
    /// narrowed to f32 on the way out.
    pub fn write_frame(&mut self, frame: &FrameFeature) -> Result<(), StreamError> {
        let (s, d) = frame.shape();
        if s != self.header.s || d != self.header.d {
            return Err(StreamError::ShapeMismatch {
                want_s: self.header.s,
                want_d: self.header.d,
                got_s: s,
                got_d: d,
            });
        }
        if frame.t() != self.next_t {
            return Err(StreamError::NonConsecutiveStep {
                expected: self.next_t,
                got: frame.t(),
            });
        }
        match self.format {
            StreamFormat::Binary => {
                let mut buf = Vec::with_capacity(s * d * 4);
                for v in frame.values() {
                    buf.extend_from_slice(&(*v as f32).to_le_bytes());
                }
                self.inner.write_all(&buf)?;
            }
            StreamFormat::Jsonl => {
                let tokens: Vec<Vec<f64>> = (0..s)
                    .map(|i| frame.token(i).iter().map(|v| (*v as f32) as f64).collect())
                    .collect();
                let line = serde_json::to_string(&JsonlFrame {
                    t: frame.t(),
                    tokens,
                })
                .expect("frame serialization cannot fail");
                self.inner.write_all(line.as_bytes())?;
                self.inner.write_all(b"\n")?;
            }
        }
        self.next_t += 1;
        Ok(())
    }

    /// Flushes and returns the sink.
    pub fn finish(mut self) -> Result<W, StreamError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Creates a stream file and writes its header.
pub fn create_stream(
    path: &Path,
    format: StreamFormat,
    s: usize,
    d: usize,
) -> Result<StreamWriter<BufWriter<File>>, StreamError> {
    let file = File::create(path)?;
    StreamWriter::new(BufWriter::new(file), format, s, d)
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct StreamReader<R: BufRead> {
    inner: R,
    format: StreamFormat,
    header: StreamHeader,
    next_t: u64,
    line: u64,
}

impl<R: BufRead> StreamReader<R> {
    /// Wraps a source and parses the stream header.
    pub fn new(mut inner: R, format: StreamFormat) -> Result<Self, StreamError> {
        let header = match format {
            StreamFormat::Binary => {
                let mut buf = [0u8; HEADER_LEN];
                let got = read_up_to(&mut inner, &mut buf)?;
                if got < HEADER_LEN {
                    return Err(StreamError::TruncatedHeader {
                        got,
                        need: HEADER_LEN,
                    });
                }
                if buf[0..4] != MAGIC {
                    let mut found = [0u8; 4];
                    found.copy_from_slice(&buf[0..4]);
                    return Err(StreamError::BadMagic { found });
                }
                let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
                if version != VERSION {
                    return Err(StreamError::UnsupportedVersion {
                        found: version,
                        expected: VERSION,
                    });
                }
                let s = u32::from_le_bytes(buf[8..12].try_into().unwrap());
                let d = u32::from_le_bytes(buf[12..16].try_into().unwrap());
                validate_shape(s as u64, d as u64)?
            }
            StreamFormat::Jsonl => {
                let mut line = String::new();
                let got = inner.read_line(&mut line)?;
                if got == 0 {
                    return Err(StreamError::TruncatedHeader { got: 0, need: 1 });
                }
                let parsed: JsonlHeader =
                    serde_json::from_str(line.trim_end()).map_err(|e| {
                        StreamError::MalformedJsonl {
                            line: 1,
                            reason: e.to_string(),
                        }
                    })?;
                if parsed.magic.as_bytes() != MAGIC {
                    let mut found = [0u8; 4];
                    let bytes = parsed.magic.as_bytes();
                    for (i, b) in found.iter_mut().enumerate() {
                        *b = bytes.get(i).copied().unwrap_or(0);
                    }
                    return Err(StreamError::BadMagic { found });
                }
                if parsed.version != VERSION {
                    return Err(StreamError::UnsupportedVersion {
                        found: parsed.version,
                        expected: VERSION,
                    });
                }
                validate_shape(parsed.s, parsed.d)?
            }
        };
        Ok(StreamReader {
            inner,
            format,
            header,
            next_t: 0,
            line: 1,
        })
    }

    /// Detects the format from the first byte (`{` means jsonl) and parses
    /// the header.
    pub fn sniff(mut inner: R) -> Result<Self, StreamError> {
        let first = inner.fill_buf()?.first().copied();
        let format = match first {
            Some(b'{') => StreamFormat::Jsonl,
            _ => StreamFormat::Binary,
        };
        StreamReader::new(inner, format)
    }

    pub fn header(&self) -> StreamHeader {
        self.header
    }

    pub fn format(&self) -> StreamFormat {
        self.format
    }

    /// Next frame, or `None` at a clean end of stream. Frames come back with
    /// consecutive steps starting at 0.
    pub fn read_frame(&mut self) -> Result<Option<FrameFeature>, StreamError> {
        let StreamHeader { s, d } = self.header;
        match self.format {
            StreamFormat::Binary => {
                let need = s * d * 4;
                let mut buf = vec![0u8; need];
                let got = read_up_to(&mut self.inner, &mut buf)?;
                if got == 0 {
                    return Ok(None);
                }
                if got < need {
                    return Err(StreamError::TruncatedFrame {
                        t: self.next_t,
                        got,
                        need,
                    });
                }
                let mut data = Vec::with_capacity(s * d);
                for (i, chunk) in buf.chunks_exact(4).enumerate() {
                    let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
                    if !v.is_finite() {
                        return Err(StreamError::NonFinite {
                            t: self.next_t,
                            s: i / d,
                            d: i % d,
                        });
                    }
                    data.push(v);
                }
                let frame = FrameFeature::new(self.next_t, s, d, data)
                    .expect("validated shape and finiteness");
                self.next_t += 1;
                Ok(Some(frame))
            }
            StreamFormat::Jsonl => {
                let mut line = String::new();
                let got = self.inner.read_line(&mut line)?;
                self.line += 1;
                if got == 0 || line.trim().is_empty() {
                    return Ok(None);
                }
                let parsed: JsonlFrame =
                    serde_json::from_str(line.trim_end()).map_err(|e| {
                        StreamError::MalformedJsonl {
                            line: self.line,
                            reason: e.to_string(),
                        }
                    })?;
                if parsed.t != self.next_t {
                    return Err(StreamError::NonConsecutiveStep {
                        expected: self.next_t,
                        got: parsed.t,
                    });
                }
                if parsed.tokens.len() != s {
                    return Err(StreamError::ShapeMismatch {
                        want_s: s,
                        want_d: d,
                        got_s: parsed.tokens.len(),
                        got_d: parsed.tokens.first().map_or(0, Vec::len),
                    });
                }
                let mut data = Vec::with_capacity(s * d);
                for (si, row) in parsed.tokens.iter().enumerate() {
                    if row.len() != d {
                        return Err(StreamError::ShapeMismatch {
                            want_s: s,
                            want_d: d,
                            got_s: parsed.tokens.len(),
                            got_d: row.len(),
                        });
                    }
                    for (di, v) in row.iter().enumerate() {
                        let v = (*v as f32) as f64;
                        if !v.is_finite() {
                            return Err(StreamError::NonFinite {
                                t: self.next_t,
                                s: si,
                                d: di,
                            });
                        }
                        data.push(v);
                    }
                }
                let frame = FrameFeature::new(self.next_t, s, d, data)
                    .expect("validated shape and finiteness");
                self.next_t += 1;
                Ok(Some(frame))
            }
        }
    }

    /// Drains the remaining frames.
    pub fn read_to_end(&mut self) -> Result<Vec<FrameFeature>, StreamError> {
        let mut frames = Vec::new();
        while let Some(f) = self.read_frame()? {
            frames.push(f);
        }
        Ok(frames)
    }
}

/// Opens a stream file, sniffing the format unless one is forced.
pub fn open_stream(
    path: &Path,
    format: Option<StreamFormat>,
) -> Result<StreamReader<BufReader<File>>, StreamError> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        Some(f) => StreamReader::new(reader, f),
        None => StreamReader::sniff(reader),
    }
}

// Reads until the buffer is full or EOF; returns bytes read. A frame boundary
// EOF shows up as 0 and mid-frame truncation as a short count.
fn read_up_to<R: Read>(inner: &mut R, buf: &mut [u8]) -> Result<usize, std::io::Error> {
    let mut got = 0;
    while got < buf.len() {
        match inner.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}
