//! Random groups at density below one sixth: words, van Kampen diagrams, small
//! cancellation checks, Cayley balls, band diagrams and experiments.

pub mod band;
pub mod cayley;
pub mod complex;
pub mod experiments;
pub mod lengths;
pub mod par;
pub mod search;
pub mod smallcancel;
pub mod words;

/// Rationals as `"p/q"` strings in JSON.
pub mod ratio_str {
    use num_rational::Ratio;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("bad rational {s:?}")))
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Ratio<i64>>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.collect_str(r),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Ratio<i64>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| s.parse().map_err(|_| D::Error::custom(format!("bad rational {s:?}"))))
                .transpose()
        }
    }
}
