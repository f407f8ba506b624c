//! Serde adapters that store generic scalars as `f64`.
//!
//! `f32 -> f64 -> f32` is exact, so the file formats stay bit-exact for both
//! scalar types.

pub mod vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Scalar;

    pub fn serialize<S: Scalar, Ser: Serializer>(v: &[S], ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        let wide: Vec<f64> = v.iter().map(|x| x.as_f64()).collect();
        wide.serialize(ser)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<Vec<S>, D::Error> {
        let wide = Vec::<f64>::deserialize(de)?;
        wide.into_iter()
            .map(|x| {
                S::from_f64(x)
                    .filter(|s| s.is_finite())
                    .ok_or_else(|| serde::de::Error::custom(format!("value {x} not representable")))
            })
            .collect()
    }
}
