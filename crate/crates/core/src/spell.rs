//! Labour-market spells and the spell CSV format
//! `segment_id,origin,duration_days,wage,destination,censored`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPELL_HEADER: [&str; 6] = [
    "segment_id",
    "origin",
    "duration_days",
    "wage",
    "destination",
    "censored",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    E,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Destination {
    E,
    U,
    Censored,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::E => "E",
            Origin::U => "U",
        })
    }
}

impl fmt::Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Destination::E => "E",
            Destination::U => "U",
            Destination::Censored => "CENSORED",
        })
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "E" => Ok(Origin::E),
            "U" => Ok(Origin::U),
            other => Err(format!("origin must be E or U (got {other:?})")),
        }
    }
}

impl FromStr for Destination {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "E" => Ok(Destination::E),
            "U" => Ok(Destination::U),
            "CENSORED" => Ok(Destination::Censored),
            other => Err(format!("destination must be E, U or CENSORED (got {other:?})")),
        }
    }
}

/// One flow-sampled spell. For employment spells `wage` is the wage held; for
/// completed unemployment spells it is the accepted wage at exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spell {
    pub segment_id: String,
    pub origin: Origin,
    pub duration: f64,
    pub wage: Option<f64>,
    pub destination: Destination,
}

impl Spell {
    pub fn new(
        segment_id: impl Into<String>,
        origin: Origin,
        duration: f64,
        wage: Option<f64>,
        destination: Destination,
    ) -> Result<Self> {
        let spell = Self {
            segment_id: segment_id.into(),
            origin,
            duration,
            wage,
            destination,
        };
        spell.validate().map_err(Error::Schema)?;
        Ok(spell)
    }

    pub fn censored(&self) -> bool {
        self.destination == Destination::Censored
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(format!("duration must be positive and finite (got {})", self.duration));
        }
        match (self.origin, self.wage) {
            (Origin::E, None) => return Err("employment spell without a wage".into()),
            (Origin::U, None) if !self.censored() => {
                return Err("completed unemployment spell without an accepted wage".into())
            }
            (_, Some(w)) if !w.is_finite() => return Err(format!("wage is not finite ({w})")),
            _ => {}
        }
        if self.origin == Origin::U && self.destination == Destination::U {
            return Err("unemployment spell cannot end in unemployment".into());
        }
        Ok(())
    }
}

pub fn write_spells<W: Write>(writer: W, spells: &[Spell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SPELL_HEADER)?;
    for s in spells {
        let wage = s.wage.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            s.segment_id.as_str(),
            &s.origin.to_string(),
            &s.duration.to_string(),
            &wage,
            &s.destination.to_string(),
            if s.censored() { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spells_file(path: &Path, spells: &[Spell]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_spells(std::io::BufWriter::new(f), spells)
}

/// Strict reader. Errors carry the 1-based line number in the file.
pub fn read_spells<R: Read>(reader: R) -> Result<Vec<Spell>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::Schema("empty spell file: missing header row".into())),
        Some(r) => r?,
    };
    let got: Vec<&str> = header.iter().collect();
    if got != SPELL_HEADER {
        return Err(Error::Schema(format!(
            "header must be {:?} (got {:?})",
            SPELL_HEADER.join(","),
            got.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |reason: String| Error::Row { row, reason };
        if rec.len() != SPELL_HEADER.len() {
            return Err(bad(format!("expected 6 fields, found {}", rec.len())));
        }
        let origin: Origin = rec[1].parse().map_err(bad)?;
        let duration: f64 = rec[2]
            .parse()
            .map_err(|_| bad(format!("duration_days is not a number ({:?})", &rec[2])))?;
        let wage = if rec[3].is_empty() {
            None
        } else {
            Some(
                rec[3]
                    .parse::<f64>()
                    .map_err(|_| bad(format!("wage is not a number ({:?})", &rec[3])))?,
            )
        };
        let destination: Destination = rec[4].parse().map_err(bad)?;
        let censored = match &rec[5] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("censored must be 0 or 1 (got {other:?})"))),
        };
        if censored != (destination == Destination::Censored) {
            return Err(bad("censored flag disagrees with destination".into()));
        }
        let spell = Spell {
            segment_id: rec[0].to_string(),
            origin,
            duration,
            wage,
            destination,
        };
        spell.validate().map_err(bad)?;
        out.push(spell);
    }
    Ok(out)
}

pub fn read_spells_file(path: &Path) -> Result<Vec<Spell>> {
    let f = std::fs::File::open(path)?;
    read_spells(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_empty_and_bad_header() {
        assert!(matches!(read_spells(&b""[..]), Err(Error::Schema(_))));
        assert!(matches!(read_spells(&b"a,b,c\n"[..]), Err(Error::Schema(_))));
    }

    #[test]
    fn header_only_is_empty_sample() {
        let text = "segment_id,origin,duration_days,wage,destination,censored\n";
        assert!(read_spells(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn row_errors_carry_line_numbers() {
        let text = "segment_id,origin,duration_days,wage,destination,censored\n\
                    n,E,10,50,U,0\n\
                    n,E,10,,U,0\n";
        match read_spells(text.as_bytes()) {
            Err(Error::Row { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let text = "segment_id,origin,duration_days,wage,destination,censored\n\
                    n,U,10,,CENSORED,0\n";
        assert!(matches!(read_spells(text.as_bytes()), Err(Error::Row { row: 2, .. })));
    }

    #[test]
    fn censored_unemployment_may_omit_wage() {
        let s = Spell::new("n", Origin::U, 3.0, None, Destination::Censored).unwrap();
        assert!(s.censored());
        assert!(Spell::new("n", Origin::U, 3.0, None, Destination::E).is_err());
        assert!(Spell::new("n", Origin::E, -3.0, Some(1.0), Destination::E).is_err());
    }

    fn arb_spell() -> impl Strategy<Value = Spell> {
        (
            "[a-z]{1,8}",
            any::<bool>(),
            1e-6f64..1e5,
            0.0f64..1e4,
            0u8..3,
        )
            .prop_filter_map("valid spell", |(seg, is_e, d, w, dest)| {
                let origin = if is_e { Origin::E } else { Origin::U };
                let destination = match dest {
                    0 => Destination::E,
                    1 if is_e => Destination::U,
                    1 => Destination::E,
                    _ => Destination::Censored,
                };
                let wage = if !is_e && destination == Destination::Censored {
                    None
                } else {
                    Some(w)
                };
                Spell::new(seg, origin, d, wage, destination).ok()
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(spells in proptest::collection::vec(arb_spell(), 0..40)) {
            let mut buf = Vec::new();
            write_spells(&mut buf, &spells).unwrap();
            let back = read_spells(buf.as_slice()).unwrap();
            prop_assert_eq!(back, spells);
        }
    }
}
