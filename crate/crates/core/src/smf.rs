//! Minimal Standard MIDI File reader and writer.
//!
//! Covers what the arranger emits and what melody import needs: channel
//! voice messages, meta events and sysex, with running status on read.
//! The writer never uses running status.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmfError {
    #[error("not a standard MIDI file: {0}")]
    Header(String),
    #[error("unexpected end of data at byte {0}")]
    Truncated(usize),
    #[error("malformed event at byte {offset}: {reason}")]
    Event { offset: usize, reason: String },
    #[error("SMPTE time division is not supported")]
    SmpteDivision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MidiMessage {
    NoteOff { key: u8, velocity: u8 },
    NoteOn { key: u8, velocity: u8 },
    Aftertouch { key: u8, pressure: u8 },
    Controller { controller: u8, value: u8 },
    ProgramChange { program: u8 },
    ChannelPressure { pressure: u8 },
    PitchBend { value: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Midi { channel: u8, message: MidiMessage },
    Meta { kind: u8, data: Vec<u8> },
    SysEx { status: u8, data: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackEvent {
    pub delta: u32,
    pub kind: EventKind,
}

pub mod meta {
    pub const TRACK_NAME: u8 = 0x03;
    pub const MARKER: u8 = 0x06;
    pub const END_OF_TRACK: u8 = 0x2f;
    pub const TEMPO: u8 = 0x51;
    pub const TIME_SIGNATURE: u8 = 0x58;
}

pub const CONTROLLER_VOLUME: u8 = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Smf {
    pub format: u16,
    pub ppq: u16,
    pub tracks: Vec<Vec<TrackEvent>>,
}

impl Smf {
    /// Converts a track's deltas to absolute ticks.
    pub fn absolute(track: &[TrackEvent]) -> impl Iterator<Item = (u32, &EventKind)> {
        track.iter().scan(0u32, |t, e| {
            *t += e.delta;
            Some((*t, &e.kind))
        })
    }
}

fn write_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 5];
    let mut i = buf.len() - 1;
    buf[i] = (value & 0x7f) as u8;
    value >>= 7;
    while value > 0 {
        i -= 1;
        buf[i] = (value & 0x7f) as u8 | 0x80;
        value >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

fn write_event(out: &mut Vec<u8>, kind: &EventKind) {
    match kind {
        EventKind::Midi { channel, message } => {
            let ch = channel & 0x0f;
            match *message {
                MidiMessage::NoteOff { key, velocity } => out.extend([0x80 | ch, key, velocity]),
                MidiMessage::NoteOn { key, velocity } => out.extend([0x90 | ch, key, velocity]),
                MidiMessage::Aftertouch { key, pressure } => out.extend([0xa0 | ch, key, pressure]),
                MidiMessage::Controller { controller, value } => {
                    out.extend([0xb0 | ch, controller, value])
                }
                MidiMessage::ProgramChange { program } => out.extend([0xc0 | ch, program]),
                MidiMessage::ChannelPressure { pressure } => out.extend([0xd0 | ch, pressure]),
                MidiMessage::PitchBend { value } => {
                    out.extend([0xe0 | ch, (value & 0x7f) as u8, ((value >> 7) & 0x7f) as u8])
                }
            }
        }
        EventKind::Meta { kind, data } => {
            out.extend([0xff, *kind]);
            write_vlq(out, data.len() as u32);
            out.extend_from_slice(data);
        }
        EventKind::SysEx { status, data } => {
            out.push(*status);
            write_vlq(out, data.len() as u32);
            out.extend_from_slice(data);
        }
    }
}

pub fn write(smf: &Smf) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&smf.format.to_be_bytes());
    out.extend_from_slice(&(smf.tracks.len() as u16).to_be_bytes());
    out.extend_from_slice(&smf.ppq.to_be_bytes());
    for track in &smf.tracks {
        let mut body = Vec::new();
        for event in track {
            write_vlq(&mut body, event.delta);
            write_event(&mut body, &event.kind);
        }
        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn byte(&mut self) -> Result<u8, SmfError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or(SmfError::Truncated(self.base + self.pos))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], SmfError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or(SmfError::Truncated(self.base + self.data.len()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn vlq(&mut self) -> Result<u32, SmfError> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.byte()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(SmfError::Event {
            offset: self.base + self.pos,
            reason: "variable-length quantity longer than 4 bytes".into(),
        })
    }

    fn data_byte(&mut self) -> Result<u8, SmfError> {
        let offset = self.base + self.pos;
        let b = self.byte()?;
        if b & 0x80 != 0 {
            return Err(SmfError::Event {
                offset,
                reason: format!("expected data byte, found status {b:#04x}"),
            });
        }
        Ok(b)
    }
}

fn parse_track(data: &[u8], base: usize) -> Result<Vec<TrackEvent>, SmfError> {
    let mut cur = Cursor { data, pos: 0, base };
    let mut events = Vec::new();
    let mut running: Option<u8> = None;
    while cur.pos < data.len() {
        let delta = cur.vlq()?;
        let offset = base + cur.pos;
        let first = cur.byte()?;
        let kind = match first {
            0xff => {
                let kind = cur.byte()?;
                let len = cur.vlq()? as usize;
                let data = cur.take(len)?.to_vec();
                running = None;
                EventKind::Meta { kind, data }
            }
            0xf0 | 0xf7 => {
                let len = cur.vlq()? as usize;
                let data = cur.take(len)?.to_vec();
                running = None;
                EventKind::SysEx {
                    status: first,
                    data,
                }
            }
            _ => {
                let (status, first_data) = if first & 0x80 != 0 {
                    running = Some(first);
                    (first, None)
                } else {
                    let status = running.ok_or_else(|| SmfError::Event {
                        offset,
                        reason: "data byte without running status".into(),
                    })?;
                    (status, Some(first))
                };
                let mut next = || match first_data {
                    Some(b) => Ok(b),
                    None => cur.data_byte(),
                };
                let a = next()?;
                let channel = status & 0x0f;
                let message = match status & 0xf0 {
                    0x80 => MidiMessage::NoteOff {
                        key: a,
                        velocity: cur.data_byte()?,
                    },
                    0x90 => MidiMessage::NoteOn {
                        key: a,
                        velocity: cur.data_byte()?,
                    },
                    0xa0 => MidiMessage::Aftertouch {
                        key: a,
                        pressure: cur.data_byte()?,
                    },
                    0xb0 => MidiMessage::Controller {
                        controller: a,
                        value: cur.data_byte()?,
                    },
                    0xc0 => MidiMessage::ProgramChange { program: a },
                    0xd0 => MidiMessage::ChannelPressure { pressure: a },
                    0xe0 => {
                        let b = cur.data_byte()?;
                        MidiMessage::PitchBend {
                            value: u16::from(a) | (u16::from(b) << 7),
                        }
                    }
                    _ => {
                        return Err(SmfError::Event {
                            offset,
                            reason: format!("unsupported status {status:#04x}"),
                        })
                    }
                };
                EventKind::Midi { channel, message }
            }
        };
        events.push(TrackEvent { delta, kind });
    }
    Ok(events)
}

pub fn parse(bytes: &[u8]) -> Result<Smf, SmfError> {
    let mut cur = Cursor {
        data: bytes,
        pos: 0,
        base: 0,
    };
    if cur
        .take(4)
        .map_err(|_| SmfError::Header("file too short".into()))?
        != b"MThd"
    {
        return Err(SmfError::Header("missing MThd".into()));
    }
    let len = u32::from_be_bytes(cur.take(4)?.try_into().unwrap()) as usize;
    if len < 6 {
        return Err(SmfError::Header(format!("header length {len}")));
    }
    let header = cur.take(len)?;
    let format = u16::from_be_bytes([header[0], header[1]]);
    let ntracks = u16::from_be_bytes([header[2], header[3]]) as usize;
    let division = u16::from_be_bytes([header[4], header[5]]);
    if division & 0x8000 != 0 {
        return Err(SmfError::SmpteDivision);
    }
    if format > 2 {
        return Err(SmfError::Header(format!("format {format}")));
    }
    let mut tracks = Vec::with_capacity(ntracks);
    while tracks.len() < ntracks {
        let id = cur.take(4)?;
        let len = u32::from_be_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let base = cur.pos;
        let body = cur.take(len)?;
        if id == b"MTrk" {
            tracks.push(parse_track(body, base)?);
        }
    }
    Ok(Smf {
        format,
        ppq: division,
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vlq_encoding_matches_reference_values() {
        let cases: [(u32, &[u8]); 6] = [
            (0, &[0x00]),
            (0x7f, &[0x7f]),
            (0x80, &[0x81, 0x00]),
            (0x2000, &[0xc0, 0x00]),
            (0x3fff, &[0xff, 0x7f]),
            (0x0fff_ffff, &[0xff, 0xff, 0xff, 0x7f]),
        ];
        for (value, bytes) in cases {
            let mut out = Vec::new();
            write_vlq(&mut out, value);
            assert_eq!(out, bytes);
            let mut cur = Cursor {
                data: bytes,
                pos: 0,
                base: 0,
            };
            assert_eq!(cur.vlq().unwrap(), value);
        }
    }

    #[test]
    fn running_status_is_expanded() {
        // delta 0 note-on C4, delta 10 running-status note-on E4, delta 5 end of track
        let body = [0x00, 0x90, 60, 100, 0x0a, 64, 100, 0x05, 0xff, 0x2f, 0x00];
        let track = parse_track(&body, 0).unwrap();
        assert_eq!(track.len(), 3);
        assert_eq!(
            track[1],
            TrackEvent {
                delta: 10,
                kind: EventKind::Midi {
                    channel: 0,
                    message: MidiMessage::NoteOn {
                        key: 64,
                        velocity: 100
                    }
                }
            }
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse(b"RIFF....").is_err());
        assert!(parse(b"MThd\0\0\0\x06\0\x01\0\x01\xe7\x28").is_err());
    }
}
