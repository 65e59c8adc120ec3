//! Physical constants and unit-tagged quantities accepted in configuration files.
//!
//! Lengths are canonicalized to meters, energies to electron-volts and rates
//! to 1/s. A bare number is read in the canonical unit of the quantity except
//! for energies, which are read in μeV (the natural scale of exciton
//! splittings). Strings carry an explicit suffix: `"270nm"`, `"0.26um"`,
//! `"2ueV"`, `"1e9/s"`, `"5ueV"` for a rate expressed as ħ·rate.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (eV·s).
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

fn split_number(s: &str) -> Result<(f64, &str), Error> {
    let s = s.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && s[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let value: f64 = s[..end]
        .parse()
        .map_err(|_| Error::config(format!("cannot parse number in {s:?}")))?;
    Ok((value, s[end..].trim()))
}

/// A length in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Length(pub f64);

impl Length {
    pub fn meters(self) -> f64 {
        self.0
    }

    pub fn from_nm(nm: f64) -> Self {
        Length(nm * 1e-9)
    }

    pub fn from_um(um: f64) -> Self {
        Length(um * 1e-6)
    }
}

impl FromStr for Length {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (v, unit) = split_number(s)?;
        let scale = match unit {
            "" | "m" => 1.0,
            "mm" => 1e-3,
            "um" | "μm" | "µm" => 1e-6,
            "nm" => 1e-9,
            other => return Err(Error::config(format!("unknown length unit {other:?}"))),
        };
        Ok(Length(v * scale))
    }
}

/// An energy in electron-volts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Energy(pub f64);

impl Energy {
    pub fn ev(self) -> f64 {
        self.0
    }

    pub fn from_uev(uev: f64) -> Self {
        Energy(uev * 1e-6)
    }

    pub fn uev(self) -> f64 {
        self.0 * 1e6
    }

    /// Angular frequency E/ħ in rad/s.
    pub fn angular_frequency(self) -> f64 {
        self.0 / HBAR_EV_S
    }
}

fn energy_scale(unit: &str) -> Option<f64> {
    match unit {
        "eV" => Some(1.0),
        "meV" => Some(1e-3),
        "ueV" | "μeV" | "µeV" => Some(1e-6),
        "neV" => Some(1e-9),
        _ => None,
    }
}

impl FromStr for Energy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (v, unit) = split_number(s)?;
        if unit.is_empty() {
            return Ok(Energy::from_uev(v));
        }
        energy_scale(unit)
            .map(|k| Energy(v * k))
            .ok_or_else(|| Error::config(format!("unknown energy unit {unit:?}")))
    }
}

/// A rate in 1/s. Energy-tagged strings are converted through E/ħ.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Rate(pub f64);

impl Rate {
    pub fn per_second(self) -> f64 {
        self.0
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (v, unit) = split_number(s)?;
        match unit {
            "" | "/s" | "1/s" | "s^-1" => Ok(Rate(v)),
            "/ns" | "1/ns" => Ok(Rate(v * 1e9)),
            "/ps" | "1/ps" => Ok(Rate(v * 1e12)),
            other => energy_scale(other)
                .map(|k| Rate(Energy(v * k).angular_frequency()))
                .ok_or_else(|| Error::config(format!("unknown rate unit {other:?}"))),
        }
    }
}

macro_rules! quantity_serde {
    ($ty:ident, $expect:literal, $from_num:expr) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(self.0)
            }
        }
        quantity_serde!(@de $ty, $expect, $from_num);
    };
    // energies are written with an explicit unit so that a bare number
    // (read as μeV) never round-trips to a different value
    ($ty:ident, $expect:literal, $from_num:expr, suffixed $unit:literal) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&format!("{}{}", self.0, $unit))
            }
        }
        quantity_serde!(@de $ty, $expect, $from_num);
    };
    (@de $ty:ident, $expect:literal, $from_num:expr) => {

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $ty;
                    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                        f.write_str($expect)
                    }
                    fn visit_f64<E: de::Error>(self, v: f64) -> Result<$ty, E> {
                        Ok($from_num(v))
                    }
                    fn visit_i64<E: de::Error>(self, v: i64) -> Result<$ty, E> {
                        Ok($from_num(v as f64))
                    }
                    fn visit_u64<E: de::Error>(self, v: u64) -> Result<$ty, E> {
                        Ok($from_num(v as f64))
                    }
                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$ty, E> {
                        v.parse().map_err(E::custom)
                    }
                }
                d.deserialize_any(V)
            }
        }
    };
}

quantity_serde!(Length, "a length in meters or a string like \"270nm\"", Length);
quantity_serde!(Energy, "an energy in μeV or a string like \"2ueV\"", Energy::from_uev, suffixed "eV");
quantity_serde!(Rate, "a rate in 1/s or a string like \"5ueV\"", Rate);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_json_round_trip_is_exact() {
        let e = Energy::from_uev(2.0);
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.ends_with("eV\""));
        assert_eq!(serde_json::from_str::<Energy>(&text).unwrap(), e);
    }

    #[test]
    fn parses_length_suffixes() {
        assert_eq!("270nm".parse::<Length>().unwrap(), Length(270e-9));
        assert!(("0.26um".parse::<Length>().unwrap().0 - 0.26e-6).abs() < 1e-20);
        assert!(("0.26 μm".parse::<Length>().unwrap().0 - 0.26e-6).abs() < 1e-20);
        assert_eq!("1e-6".parse::<Length>().unwrap(), Length(1e-6));
        assert!("3 furlongs".parse::<Length>().is_err());
    }

    #[test]
    fn bare_energy_is_micro_ev() {
        let e: Energy = "2".parse().unwrap();
        assert!((e.ev() - 2e-6).abs() < 1e-18);
        let e: Energy = "2ueV".parse().unwrap();
        assert!((e.ev() - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn energy_rate_goes_through_hbar() {
        let r: Rate = "1ueV".parse().unwrap();
        assert!((r.0 - 1e-6 / HBAR_EV_S).abs() / r.0 < 1e-12);
        let r: Rate = "1e9/s".parse().unwrap();
        assert_eq!(r.0, 1e9);
    }

    #[test]
    fn deserializes_numbers_and_strings() {
        #[derive(Deserialize)]
        struct T {
            a: Length,
            b: Length,
            e: Energy,
        }
        let t: T = toml::from_str("a = 2.7e-7\nb = \"80nm\"\ne = 5").unwrap();
        assert_eq!(t.a, Length(2.7e-7));
        assert!((t.b.0 - 80e-9).abs() < 1e-20);
        assert!((t.e.uev() - 5.0).abs() < 1e-12);
    }
}
