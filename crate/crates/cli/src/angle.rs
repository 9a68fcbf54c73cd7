//! Angles written as plain radians or as exact rational multiples of π.
//!
//! Accepted spellings: a number (`1.25`), or a string such as `"pi"`, `"-pi"`,
//! `"2/3 pi"`, `"3pi/4"`, `"pi/6"`, `"0.5"`. The rational coefficient is reduced
//! exactly and converted once as `(p·π)/q`.

use std::f64::consts::PI;
use std::fmt;

use num_rational::Ratio;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    pub radians: f64,
    /// Original spelling, kept for the config echo.
    text: Option<String>,
}

impl Angle {
    pub fn radians(value: f64) -> Self {
        Angle { radians: value, text: None }
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let lower = compact.to_ascii_lowercase();
        let value = match lower.find("pi") {
            None => lower.parse::<f64>().map_err(|_| format!("cannot parse angle {s:?}"))?,
            Some(at) => {
                let head = lower[..at].trim_end_matches('*');
                let tail = &lower[at + 2..];
                let coef = match head {
                    "" | "+" => Ratio::from_integer(1i64),
                    "-" => Ratio::from_integer(-1),
                    h => h.parse::<Ratio<i64>>().map_err(|_| format!("bad coefficient in angle {s:?}"))?,
                };
                let coef = match tail {
                    "" => coef,
                    t => {
                        let q: i64 = t
                            .strip_prefix('/')
                            .and_then(|q| q.parse().ok())
                            .ok_or_else(|| format!("bad divisor in angle {s:?}"))?;
                        if q == 0 {
                            return Err(format!("zero divisor in angle {s:?}"));
                        }
                        coef / Ratio::from_integer(q)
                    }
                };
                (*coef.numer() as f64 * PI) / *coef.denom() as f64
            }
        };
        if !value.is_finite() {
            return Err(format!("angle {s:?} is not finite"));
        }
        Ok(Angle { radians: value, text: Some(s.to_string()) })
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.text {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(self.radians),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct AngleVisitor;
        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a string like \"2/3 pi\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Angle, E> {
                Ok(Angle::radians(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle::radians(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle::radians(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Angle, E> {
                Angle::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(AngleVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spellings() {
        let cases = [
            ("pi", PI),
            ("-pi", -PI),
            ("2/3 pi", 2.0 * PI / 3.0),
            ("4/6 pi", 2.0 * PI / 3.0),
            ("3pi/4", 3.0 * PI / 4.0),
            ("pi/6", PI / 6.0),
            ("2 * pi", 2.0 * PI),
            ("0.5", 0.5),
            ("-1/2 PI", -PI / 2.0),
        ];
        for (s, want) in cases {
            assert_eq!(Angle::parse(s).unwrap().radians, want, "{s}");
        }
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "pie", "1/0 pi", "pi/0", "two pi", "pi/x", "inf"] {
            assert!(Angle::parse(s).is_err(), "{s}");
        }
    }

    #[test]
    fn echo_keeps_spelling() {
        let a: Angle = serde_json::from_str("\"2/3 pi\"").unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"2/3 pi\"");
        let b: Angle = serde_json::from_str("1.5").unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "1.5");
    }
}
