//! Shared domain vocabulary: elements, analysed variables, units and the
//! number-or-missing monthly value.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// GHCN element code as it appears in column three of a by-year file.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Tmin,
    Tmax,
    Prcp,
    Tobs,
    Snow,
    Snwd,
    /// Any other four-character code (TAVG, AWND, WT01, ...). Parsed, then dropped.
    Other(String),
}

impl Element {
    pub fn parse(code: &str) -> Result<Self> {
        Ok(match code {
            "TMIN" => Element::Tmin,
            "TMAX" => Element::Tmax,
            "PRCP" => Element::Prcp,
            "TOBS" => Element::Tobs,
            "SNOW" => Element::Snow,
            "SNWD" => Element::Snwd,
            other if other.len() == 4 && other.bytes().all(|b| b.is_ascii_alphanumeric()) => {
                Element::Other(other.to_string())
            }
            other => return Err(Error::malformed(format!("bad element code {other:?}"))),
        })
    }

    pub fn code(&self) -> &str {
        match self {
            Element::Tmin => "TMIN",
            Element::Tmax => "TMAX",
            Element::Prcp => "PRCP",
            Element::Tobs => "TOBS",
            Element::Snow => "SNOW",
            Element::Snwd => "SNWD",
            Element::Other(code) => code,
        }
    }

    /// The analysed variable this element feeds, if any.
    pub fn variable(&self) -> Option<Variable> {
        match self {
            Element::Tmin => Some(Variable::Tmin),
            Element::Tmax => Some(Variable::Tmax),
            Element::Prcp => Some(Variable::Prcp),
            _ => None,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// The three variables the system stores and forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    #[serde(rename = "rainfall", alias = "prcp")]
    Prcp,
    Tmin,
    Tmax,
}

impl Variable {
    /// Column order of the standard view.
    pub const ALL: [Variable; 3] = [Variable::Prcp, Variable::Tmin, Variable::Tmax];

    pub fn element_code(self) -> &'static str {
        match self {
            Variable::Prcp => "PRCP",
            Variable::Tmin => "TMIN",
            Variable::Tmax => "TMAX",
        }
    }

    /// Attribute name used in ARFF views.
    pub fn view_name(self) -> &'static str {
        match self {
            Variable::Prcp => "rainfall",
            Variable::Tmin => "tmin",
            Variable::Tmax => "tmax",
        }
    }

    /// Monthly fused collection in a region database.
    pub fn total_collection(self) -> &'static str {
        match self {
            Variable::Prcp => "total_p",
            Variable::Tmin => "total_tmin",
            Variable::Tmax => "total_tmax",
        }
    }

    /// Daily aggregate collection for `year`: `2017`, `2017TMIN`, `2017TMAX`.
    pub fn daily_collection(self, year: i32) -> String {
        match self {
            Variable::Prcp => year.to_string(),
            Variable::Tmin => format!("{year}TMIN"),
            Variable::Tmax => format!("{year}TMAX"),
        }
    }

    /// Unit of monthly values in the standard view.
    pub fn base_unit(self) -> Unit {
        match self {
            Variable::Prcp => Unit::Mm,
            Variable::Tmin | Variable::Tmax => Unit::Celsius,
        }
    }

    pub fn is_temperature(self) -> bool {
        !matches!(self, Variable::Prcp)
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prcp" | "rainfall" | "precipitation" | "p" => Ok(Variable::Prcp),
            "tmin" => Ok(Variable::Tmin),
            "tmax" => Ok(Variable::Tmax),
            _ => Err(Error::malformed(format!("unknown variable {s:?}"))),
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.view_name())
    }
}

/// Physical unit of a converted value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm")]
    Mm,
    #[serde(rename = "°C", alias = "C")]
    Celsius,
    #[serde(rename = "°F", alias = "F")]
    Fahrenheit,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Mm => "mm",
            Unit::Celsius => "°C",
            Unit::Fahrenheit => "°F",
        }
    }

    pub fn check_compatible(self, variable: Variable) -> Result<()> {
        let ok = match variable {
            Variable::Prcp => self == Unit::Mm,
            Variable::Tmin | Variable::Tmax => self != Unit::Mm,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnitMismatch {
                variable: variable.to_string(),
                unit: self.symbol().to_string(),
            })
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches('°').to_ascii_lowercase().as_str() {
            "mm" => Ok(Unit::Mm),
            "c" | "celsius" => Ok(Unit::Celsius),
            "f" | "fahrenheit" => Ok(Unit::Fahrenheit),
            _ => Err(Error::malformed(format!("unknown unit {s:?}"))),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        debug_assert!((1..=12).contains(&month));
        YearMonth { year, month }
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            YearMonth::new(self.year + 1, 1)
        } else {
            YearMonth::new(self.year, self.month + 1)
        }
    }

    /// Months since year 0, for ordering arithmetic.
    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn days(self) -> u32 {
        match self.month {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            _ if is_leap(self.year) => 29,
            _ => 28,
        }
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Monthly value: a number, or the `?` sentinel. Serialises to a JSON number or
/// the string `"?"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MonthValue {
    Value(f64),
    #[default]
    Missing,
}

impl MonthValue {
    pub fn value(self) -> Option<f64> {
        match self {
            MonthValue::Value(v) => Some(v),
            MonthValue::Missing => None,
        }
    }

    pub fn is_missing(self) -> bool {
        matches!(self, MonthValue::Missing)
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            MonthValue::Value(v) => MonthValue::Value(f(v)),
            MonthValue::Missing => MonthValue::Missing,
        }
    }
}

impl From<Option<f64>> for MonthValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(MonthValue::Missing, MonthValue::Value)
    }
}

/// Shortest round-trip rendering; `?` for missing.
impl fmt::Display for MonthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonthValue::Value(v) => write!(f, "{v}"),
            MonthValue::Missing => f.write_str("?"),
        }
    }
}

impl Serialize for MonthValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MonthValue::Value(v) => s.serialize_f64(*v),
            MonthValue::Missing => s.serialize_str("?"),
        }
    }
}

impl<'de> Deserialize<'de> for MonthValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = MonthValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"?\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<MonthValue, E> {
                Ok(MonthValue::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<MonthValue, E> {
                Ok(MonthValue::Value(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<MonthValue, E> {
                Ok(MonthValue::Value(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<MonthValue, E> {
                if v == "?" {
                    Ok(MonthValue::Missing)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_unit<E: de::Error>(self) -> std::result::Result<MonthValue, E> {
                Ok(MonthValue::Missing)
            }
        }
        d.deserialize_any(V)
    }
}
