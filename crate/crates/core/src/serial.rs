//! JSON helpers: complex numbers are written as `[re, im]`.

use serde_json::{json, Value};

use crate::{CMat2, CVec2, C64};

pub fn complex(c: C64) -> Value {
    json!([c.re, c.im])
}

pub fn vec2(v: CVec2) -> Value {
    json!([complex(v[0]), complex(v[1])])
}

pub fn mat2(m: &CMat2) -> Value {
    json!([
        [complex(m[(0, 0)]), complex(m[(0, 1)])],
        [complex(m[(1, 0)]), complex(m[(1, 1)])]
    ])
}

/// Parses `[re, im]`.
pub fn parse_complex(v: &Value) -> Option<C64> {
    let a = v.as_array()?;
    if a.len() != 2 {
        return None;
    }
    Some(C64::new(a[0].as_f64()?, a[1].as_f64()?))
}

/// Serde adapter for `[C64; 2]` fields.
pub mod cvec2 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::{CVec2, C64};

    pub fn serialize<S: Serializer>(v: &CVec2, s: S) -> Result<S::Ok, S::Error> {
        [[v[0].re, v[0].im], [v[1].re, v[1].im]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec2, D::Error> {
        let a = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok([C64::new(a[0][0], a[0][1]), C64::new(a[1][0], a[1][1])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_roundtrip() {
        let c = C64::new(1.5, -2.0);
        assert_eq!(parse_complex(&complex(c)), Some(c));
    }
}
