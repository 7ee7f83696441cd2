use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The eleven modulation schemes, in the canonical order used for every
/// confusion-matrix axis and serialized class list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeLabel {
    Am,
    Dsb,
    Lsb,
    Usb,
    Fm,
    Ask2,
    Ask4,
    Fsk2,
    Fsk4,
    Psk2,
    Psk4,
}

impl SchemeLabel {
    pub const ALL: [SchemeLabel; 11] = [
        SchemeLabel::Am,
        SchemeLabel::Dsb,
        SchemeLabel::Lsb,
        SchemeLabel::Usb,
        SchemeLabel::Fm,
        SchemeLabel::Ask2,
        SchemeLabel::Ask4,
        SchemeLabel::Fsk2,
        SchemeLabel::Fsk4,
        SchemeLabel::Psk2,
        SchemeLabel::Psk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeLabel::Am => "AM",
            SchemeLabel::Dsb => "DSB",
            SchemeLabel::Lsb => "LSB",
            SchemeLabel::Usb => "USB",
            SchemeLabel::Fm => "FM",
            SchemeLabel::Ask2 => "2ASK",
            SchemeLabel::Ask4 => "4ASK",
            SchemeLabel::Fsk2 => "2FSK",
            SchemeLabel::Fsk4 => "4FSK",
            SchemeLabel::Psk2 => "2PSK",
            SchemeLabel::Psk4 => "4PSK",
        }
    }

    /// Position in [`SchemeLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of symbol states for the keyed schemes, `None` for analog ones.
    pub fn levels(self) -> Option<usize> {
        match self {
            SchemeLabel::Ask2 | SchemeLabel::Fsk2 | SchemeLabel::Psk2 => Some(2),
            SchemeLabel::Ask4 | SchemeLabel::Fsk4 | SchemeLabel::Psk4 => Some(4),
            _ => None,
        }
    }

    pub fn valid_names() -> String {
        SchemeLabel::ALL
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for SchemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeLabel::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Scheme tag carried by a waveform: one of the known labels, or unlabeled
/// traffic whose scheme is to be determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    Known(SchemeLabel),
    Unknown,
}

impl SchemeTag {
    pub fn label(self) -> Option<SchemeLabel> {
        match self {
            SchemeTag::Known(l) => Some(l),
            SchemeTag::Unknown => None,
        }
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeTag::Known(l) => l.fmt(f),
            SchemeTag::Unknown => f.write_str("UNKNOWN"),
        }
    }
}

impl FromStr for SchemeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("UNKNOWN") {
            Ok(SchemeTag::Unknown)
        } else {
            s.parse().map(SchemeTag::Known)
        }
    }
}

impl From<SchemeLabel> for SchemeTag {
    fn from(l: SchemeLabel) -> Self {
        SchemeTag::Known(l)
    }
}
