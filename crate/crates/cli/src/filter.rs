//! Spell filters: `field op value` clauses joined by `&&`. A spell is kept
//! when every clause holds.
//!
//! Fields are the spell-file columns `segment_id`, `origin`, `duration_days`
//! (or `duration`), `wage`, `destination` and `censored`. Numeric columns take
//! `== != < <= > >=`; text columns take `==` and `!=`. A missing wage fails
//! every numeric comparison.

use std::fmt;
use std::str::FromStr;

use wagesearch::Spell;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Segment,
    Origin,
    Duration,
    Wage,
    Destination,
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    fn holds<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            Op::Eq => a == b,
            Op::Ne => a != b,
            Op::Lt => a < b,
            Op::Le => a <= b,
            Op::Gt => a > b,
            Op::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Clause {
    field: Field,
    op: Op,
    value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    source: String,
    clauses: Vec<Clause>,
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn parse_clause(text: &str) -> Result<Clause, CliError> {
    let bad = |m: String| CliError::Config(format!("filter clause {text:?}: {m}"));
    // two-character operators first so `<=` is not read as `<`
    const OPS: [(&str, Op); 6] = [("==", Op::Eq), ("!=", Op::Ne), ("<=", Op::Le), (">=", Op::Ge), ("<", Op::Lt), (">", Op::Gt)];
    let (at, sym, op) = OPS
        .iter()
        .filter_map(|&(s, op)| text.find(s).map(|i| (i, s, op)))
        .min_by_key(|&(i, s, _)| (i, std::cmp::Reverse(s.len())))
        .ok_or_else(|| bad("expected `field op value`".into()))?;
    let name = text[..at].trim();
    let raw = text[at + sym.len()..].trim().trim_matches(|c| c == '"' || c == '\'');
    let field = match name {
        "segment_id" | "segment" => Field::Segment,
        "origin" => Field::Origin,
        "duration_days" | "duration" => Field::Duration,
        "wage" => Field::Wage,
        "destination" => Field::Destination,
        "censored" => Field::Censored,
        other => return Err(bad(format!("unknown field {other:?}"))),
    };
    if raw.is_empty() {
        return Err(bad("missing value".into()));
    }
    let value = match field {
        Field::Duration | Field::Wage => {
            Value::Number(raw.parse().map_err(|_| bad(format!("{raw:?} is not a number")))?)
        }
        Field::Censored => match raw {
            "1" | "true" => Value::Number(1.0),
            "0" | "false" => Value::Number(0.0),
            _ => return Err(bad("censored compares with 0 or 1".into())),
        },
        Field::Origin => Value::Text(wagesearch::Origin::from_str(raw).map_err(bad)?.to_string()),
        Field::Destination => Value::Text(wagesearch::Destination::from_str(raw).map_err(bad)?.to_string()),
        Field::Segment => Value::Text(raw.to_string()),
    };
    if !matches!(field, Field::Duration | Field::Wage) && !matches!(op, Op::Eq | Op::Ne) {
        return Err(bad(format!("`{sym}` needs a numeric field")));
    }
    Ok(Clause { field, op, value })
}

impl FromStr for Filter {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let clauses = s.split("&&").map(|c| parse_clause(c.trim())).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { source: s.trim().to_string(), clauses })
    }
}

impl Clause {
    fn matches(&self, s: &Spell) -> bool {
        match (&self.value, self.field) {
            (Value::Number(v), Field::Duration) => self.op.holds(s.duration, *v),
            (Value::Number(v), Field::Wage) => s.wage.is_some_and(|w| self.op.holds(w, *v)),
            (Value::Number(v), Field::Censored) => self.op.holds(if s.censored() { 1.0 } else { 0.0 }, *v),
            (Value::Text(v), Field::Segment) => self.op.holds(s.segment_id.as_str(), v.as_str()),
            (Value::Text(v), Field::Origin) => self.op.holds(s.origin.to_string().as_str(), v.as_str()),
            (Value::Text(v), Field::Destination) => self.op.holds(s.destination.to_string().as_str(), v.as_str()),
            _ => unreachable!("value kind fixed by field at parse time"),
        }
    }
}

impl Filter {
    pub fn matches(&self, spell: &Spell) -> bool {
        self.clauses.iter().all(|c| c.matches(spell))
    }

    pub fn apply(&self, spells: Vec<Spell>) -> Vec<Spell> {
        spells.into_iter().filter(|s| self.matches(s)).collect()
    }
}
