use core::fmt;
use core::str::FromStr;

/// The two classes of the binary task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// Offensive.
    Off,
    /// Not offensive.
    Not,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Off, Label::Not];

    /// Exact on-disk spelling, `OFF` or `NOT`.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Off => "OFF",
            Label::Not => "NOT",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Label::Off => 0,
            Label::Not => 1,
        }
    }

    pub fn swapped(self) -> Label {
        match self {
            Label::Off => Label::Not,
            Label::Not => Label::Off,
        }
    }

    /// Probability-of-OFF decision rule shared by every scorer: ties go to OFF.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.5 {
            Label::Off
        } else {
            Label::Not
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?} (expected OFF or NOT)")]
pub struct ParseLabelError(pub alloc::string::String);

impl FromStr for Label {
    type Err = ParseLabelError;

    /// Case-sensitive: `off` is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "OFF" => Ok(Label::Off),
            "NOT" => Ok(Label::Not),
            other => Err(ParseLabelError(other.into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_is_case_sensitive() {
        assert_eq!("OFF".parse::<Label>().unwrap(), Label::Off);
        assert_eq!("NOT".parse::<Label>().unwrap(), Label::Not);
        assert!("off".parse::<Label>().is_err());
        assert!("Not".parse::<Label>().is_err());
    }

    #[test]
    fn half_score_is_off() {
        assert_eq!(Label::from_score(0.5), Label::Off);
        assert_eq!(Label::from_score(0.4999), Label::Not);
    }
}
