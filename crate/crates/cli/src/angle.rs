//! Angles written as rational multiples of π ("pi/16", "-3*pi/8") or as
//! plain radians.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq)]
pub struct Angle {
    radians: f64,
    text: String,
}

impl Angle {
    pub fn radians(&self) -> f64 {
        self.radians
    }

    pub fn from_radians(radians: f64) -> Self {
        Self { radians, text: format!("{radians}") }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(input: &str) -> Result<Self, String> {
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        let lower = compact.to_ascii_lowercase().replace('π', "pi");
        let Some(pos) = lower.find("pi") else {
            let radians = parse_number(&lower).map_err(|e| format!("invalid angle: {e}"))?;
            return Ok(Self { radians, text: input.trim().to_string() });
        };
        let (head, tail) = (&lower[..pos], &lower[pos + 2..]);
        let head = head.strip_suffix('*').unwrap_or(head);
        let numerator = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => parse_number(h).map_err(|e| format!("invalid angle '{input}': {e}"))?,
        };
        let denominator = match tail {
            "" => 1.0,
            t => {
                let d = t.strip_prefix('/').ok_or_else(|| format!("invalid angle '{input}': expected '/' after pi"))?;
                parse_number(d).map_err(|e| format!("invalid angle '{input}': {e}"))?
            }
        };
        if denominator == 0.0 {
            return Err(format!("invalid angle '{input}': zero denominator"));
        }
        Ok(Self { radians: numerator / denominator * PI, text: input.trim().to_string() })
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct AngleVisitor;

        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle such as \"pi/16\", \"-3*pi/8\" or a number of radians")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Angle, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Angle, E> {
                Ok(Angle::from_radians(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle::from_radians(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle::from_radians(v as f64))
            }
        }

        d.deserialize_any(AngleVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rad(s: &str) -> f64 {
        s.parse::<Angle>().unwrap().radians()
    }

    #[test]
    fn multiples_of_pi() {
        assert_eq!(rad("pi/16"), PI / 16.0);
        assert_eq!(rad("-pi/4"), -PI / 4.0);
        assert_eq!(rad("3*pi/8"), 3.0 / 8.0 * PI);
        assert_eq!(rad("3pi/8"), 3.0 / 8.0 * PI);
        assert_eq!(rad("0.25*pi"), PI / 4.0);
        assert_eq!(rad("π/2"), PI / 2.0);
        assert_eq!(rad("-pi"), -PI);
        assert_eq!(rad(" PI / 4 "), PI / 4.0);
        assert_eq!(rad("0"), 0.0);
        assert_eq!(rad("1.5"), 1.5);
    }

    #[test]
    fn malformed_angles() {
        for bad in ["pi/0", "pi*2", "xpi", "", "pi/", "nan", "inf*pi"] {
            assert!(bad.parse::<Angle>().is_err(), "{bad}");
        }
    }

    #[test]
    fn json_forms() {
        let a: Angle = serde_json::from_str("\"pi/16\"").unwrap();
        assert_eq!(a.radians(), PI / 16.0);
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"pi/16\"");
        let b: Angle = serde_json::from_str("0.5").unwrap();
        assert_eq!(b.radians(), 0.5);
        assert!(serde_json::from_str::<Angle>("\"pi/0\"").is_err());
    }
}
