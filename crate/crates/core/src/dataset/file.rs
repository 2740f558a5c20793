//! JSON-lines channel files. Line 1 is a header with band metadata; every
//! further non-blank line is one UE:
//! `{"ue_id", "x", "y", "z", "h_sub6", "h_mm_nb", "h_mm_b"}` with vectors as
//! `[[re, im], ...]`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ChannelSample;
use crate::channel::{BandConfig, ComplexVector};
use crate::error::{Error, Result};

pub const CHANNEL_FORMAT: &str = "bandswitch-channels";
pub const CHANNEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandHeader {
    pub center_frequency_hz: f64,
    pub antennas_y: usize,
    pub antennas_z: usize,
}

impl BandHeader {
    pub fn from_config(band: &BandConfig) -> Self {
        Self { center_frequency_hz: band.center_frequency_hz, antennas_y: band.antennas_y, antennas_z: band.antennas_z }
    }

    fn antenna_count(&self) -> Option<usize> {
        self.antennas_y.checked_mul(self.antennas_z)
    }

    fn check_against(&self, band: &BandConfig) -> Result<()> {
        let rel = (self.center_frequency_hz - band.center_frequency_hz).abs() / band.center_frequency_hz;
        if !(rel <= 1e-6) {
            return Err(Error::Config(format!(
                "{}: file center frequency {} Hz differs from configured {} Hz",
                band.band, self.center_frequency_hz, band.center_frequency_hz
            )));
        }
        if self.antennas_y != band.antennas_y || self.antennas_z != band.antennas_z {
            return Err(Error::Config(format!(
                "{}: file array {}x{} differs from configured {}x{}",
                band.band, self.antennas_y, self.antennas_z, band.antennas_y, band.antennas_z
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFileHeader {
    pub format: String,
    pub version: u32,
    pub sub6: BandHeader,
    pub mmwave: BandHeader,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_position: Option<[f64; 3]>,
}

impl ChannelFileHeader {
    pub fn new(sub6: &BandConfig, mmwave: &BandConfig) -> Self {
        Self {
            format: CHANNEL_FORMAT.into(),
            version: CHANNEL_VERSION,
            sub6: BandHeader::from_config(sub6),
            mmwave: BandHeader::from_config(mmwave),
            bs_position: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFile {
    pub header: ChannelFileHeader,
    pub samples: Vec<ChannelSample>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    ue_id: u64,
    x: f64,
    y: f64,
    z: f64,
    h_sub6: Vec<[f64; 2]>,
    h_mm_nb: Vec<[f64; 2]>,
    h_mm_b: Vec<[f64; 2]>,
}

fn to_vector(entries: Vec<[f64; 2]>) -> Result<ComplexVector> {
    ComplexVector::new(entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

fn from_vector(v: &ComplexVector) -> Vec<[f64; 2]> {
    v.as_slice().iter().map(|c| [c.re, c.im]).collect()
}

/// Parses and validates a channel file. Malformed JSON yields a parse error
/// with its 1-based line number; well-formed rows that break the schema
/// (vector lengths, non-finite values, duplicate ids, varying UE height)
/// yield a schema error naming the row.
pub fn read_channel_file<R: BufRead>(reader: R) -> Result<ChannelFile> {
    let mut lines = reader.lines().enumerate();
    let header: ChannelFileHeader = loop {
        match lines.next() {
            None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|e| Error::Parse { line: i + 1, message: format!("header: {e}") })?;
            }
        }
    };
    if header.format != CHANNEL_FORMAT {
        return Err(Error::Parse { line: 1, message: format!("unknown format '{}'", header.format) });
    }
    if header.version != CHANNEL_VERSION {
        return Err(Error::Parse { line: 1, message: format!("unsupported version {}", header.version) });
    }
    let n_sub6 = header.sub6.antenna_count().filter(|&n| n > 0);
    let n_mm = header.mmwave.antenna_count().filter(|&n| n > 0);
    let (Some(n_sub6), Some(n_mm)) = (n_sub6, n_mm) else {
        return Err(Error::Parse { line: 1, message: "antenna counts must be positive".into() });
    };
    if !(header.sub6.center_frequency_hz > 0.0 && header.mmwave.center_frequency_hz > 0.0) {
        return Err(Error::Parse { line: 1, message: "center frequencies must be positive".into() });
    }

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut height: Option<f64> = None;
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        let index = samples.len();
        let schema = |message: String| Error::Schema { row: index, ue_id: row.ue_id, message };
        for (name, len, want) in [
            ("h_sub6", row.h_sub6.len(), n_sub6),
            ("h_mm_nb", row.h_mm_nb.len(), n_mm),
            ("h_mm_b", row.h_mm_b.len(), n_mm),
        ] {
            if len != want {
                return Err(schema(format!("{name} has {len} entries, header implies {want}")));
            }
        }
        if ![row.x, row.y, row.z].iter().all(|c| c.is_finite()) {
            return Err(schema("non-finite coordinates".into()));
        }
        match height {
            None => height = Some(row.z),
            Some(z) if (z - row.z).abs() > 1e-9 => {
                return Err(schema(format!("UE height {} differs from {z}", row.z)));
            }
            _ => {}
        }
        if !seen.insert(row.ue_id) {
            return Err(schema("duplicate ue_id".into()));
        }
        let ue_id = row.ue_id;
        let coords = [row.x, row.y, row.z];
        let vec = |v: Vec<[f64; 2]>, name: &str| {
            to_vector(v).map_err(|e| Error::Schema { row: index, ue_id, message: format!("{name}: {e}") })
        };
        samples.push(ChannelSample {
            ue_id,
            coords,
            h_sub6: vec(row.h_sub6, "h_sub6")?,
            h_mm_nb: vec(row.h_mm_nb, "h_mm_nb")?,
            h_mm_b: vec(row.h_mm_b, "h_mm_b")?,
        });
    }
    Ok(ChannelFile { header, samples })
}

/// Reads a channel file and checks its header against the run's band setup.
pub fn load_channel_file(path: &Path, sub6: &BandConfig, mmwave: &BandConfig) -> Result<ChannelFile> {
    let file = read_channel_file(BufReader::new(File::open(path)?))?;
    file.header.sub6.check_against(sub6)?;
    file.header.mmwave.check_against(mmwave)?;
    Ok(file)
}

pub fn write_channel_file<W: Write>(mut out: W, header: &ChannelFileHeader, samples: &[ChannelSample]) -> Result<()> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for s in samples {
        let row = Row {
            ue_id: s.ue_id,
            x: s.coords[0],
            y: s.coords[1],
            z: s.coords[2],
            h_sub6: from_vector(&s.h_sub6),
            h_mm_nb: from_vector(&s.h_mm_nb),
            h_mm_b: from_vector(&s.h_mm_b),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
