//! Time-tag records and their on-disk formats.
//!
//! Binary records are 9 bytes: one channel byte (0 = signal, 1 = idler)
//! followed by a little-endian u64 timestamp in picoseconds. The CSV form is
//! `channel,time_ps` with the same channel numbering.

use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::PhotonError;

pub const RECORD_BYTES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Signal = 0,
    Idler = 1,
}

impl Channel {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Signal),
            1 => Some(Self::Idler),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeTag {
    pub channel: Channel,
    /// Picoseconds since stream start.
    pub time: u64,
}

/// Detection times of one channel, in picoseconds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimeTagStream {
    pub channel: Option<Channel>,
    pub times: Vec<u64>,
}

impl TimeTagStream {
    pub fn new(channel: Channel, times: Vec<u64>) -> Self {
        Self {
            channel: Some(channel),
            times,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.times.windows(2).all(|w| w[0] <= w[1])
    }

    /// Position of the first out-of-order tag, if any.
    pub fn first_unsorted(&self) -> Option<usize> {
        self.times.windows(2).position(|w| w[0] > w[1]).map(|i| i + 1)
    }

    pub fn tags(&self) -> impl Iterator<Item = TimeTag> + '_ {
        let channel = self.channel.unwrap_or(Channel::Signal);
        self.times.iter().map(move |&time| TimeTag { channel, time })
    }
}

/// Merge two channels into one time-ordered record list (signal first on
/// equal timestamps).
pub fn merge(signal: &TimeTagStream, idler: &TimeTagStream) -> Vec<TimeTag> {
    let mut out = Vec::with_capacity(signal.len() + idler.len());
    let (mut i, mut j) = (0, 0);
    while i < signal.times.len() || j < idler.times.len() {
        let take_signal = match (signal.times.get(i), idler.times.get(j)) {
            (Some(s), Some(d)) => s <= d,
            (Some(_), None) => true,
            _ => false,
        };
        if take_signal {
            out.push(TimeTag {
                channel: Channel::Signal,
                time: signal.times[i],
            });
            i += 1;
        } else {
            out.push(TimeTag {
                channel: Channel::Idler,
                time: idler.times[j],
            });
            j += 1;
        }
    }
    out
}

/// Split records by channel, keeping file order within each channel.
pub fn split(tags: &[TimeTag]) -> (TimeTagStream, TimeTagStream) {
    let mut signal = TimeTagStream::new(Channel::Signal, Vec::new());
    let mut idler = TimeTagStream::new(Channel::Idler, Vec::new());
    for t in tags {
        match t.channel {
            Channel::Signal => signal.times.push(t.time),
            Channel::Idler => idler.times.push(t.time),
        }
    }
    (signal, idler)
}

pub fn write_binary<W: Write>(tags: &[TimeTag], mut out: W) -> io::Result<()> {
    let mut rec = [0u8; RECORD_BYTES];
    for t in tags {
        rec[0] = t.channel as u8;
        rec[1..].copy_from_slice(&t.time.to_le_bytes());
        out.write_all(&rec)?;
    }
    out.flush()
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Vec<TimeTag>, PhotonError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(PhotonError::Format(format!(
            "file length {} is not a multiple of {RECORD_BYTES}",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(RECORD_BYTES)
        .enumerate()
        .map(|(i, rec)| {
            let channel = Channel::from_byte(rec[0]).ok_or_else(|| {
                PhotonError::Format(format!("record {i}: unknown channel byte {}", rec[0]))
            })?;
            let mut ts = [0u8; 8];
            ts.copy_from_slice(&rec[1..]);
            Ok(TimeTag {
                channel,
                time: u64::from_le_bytes(ts),
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(tags: &[TimeTag], mut out: W) -> io::Result<()> {
    writeln!(out, "channel,time_ps")?;
    for t in tags {
        writeln!(out, "{},{}", t.channel as u8, t.time)?;
    }
    out.flush()
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<TimeTag>, PhotonError> {
    let mut tags = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("channel")) {
            continue;
        }
        let bad = || PhotonError::Format(format!("line {}: expected `channel,time_ps`", lineno + 1));
        let (ch, t) = line.split_once(',').ok_or_else(bad)?;
        let channel = ch
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Channel::from_byte)
            .ok_or_else(bad)?;
        let time = t.trim().parse::<u64>().map_err(|_| bad())?;
        tags.push(TimeTag { channel, time });
    }
    Ok(tags)
}
