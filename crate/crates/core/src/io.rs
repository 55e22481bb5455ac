//! Constellation files.
//!
//! ```json
//! { "name": "C4", "bandwidth_factor": 2, "points": [[0.0, 0.0, 0.0], ...] }
//! ```
//!
//! Every coordinate is written with 17 significant digits, which is enough
//! for any `f64` to survive a save/load round trip unchanged. Rows must have
//! exactly three entries; shorter rows are rejected rather than padded.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::geometry::Constellation;

/// Pretty JSON whose floats carry 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Serializes any value as pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| Error::Parse {
        context: "serialize".into(),
        message: e.to_string(),
    })?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Parses and validates a constellation document.
pub fn from_json_str(text: &str, context: &str) -> Result<Constellation> {
    let raw: Constellation = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    })?;
    Constellation::new(raw.name, raw.bandwidth_factor, raw.points).map_err(|e| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Constellation> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    from_json_str(&text, &path.display().to_string())
}

pub fn save(c: &Constellation, path: impl AsRef<Path>) -> Result<()> {
    write_json(c, path)
}

/// Writes any serializable value as a full-precision JSON file.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::geometry::{BandwidthFactor, Point3};

    #[test]
    fn round_trip_is_exact() {
        for name in catalog::NAMES {
            let c = catalog::get(name).unwrap();
            let text = to_json_string(&c).unwrap();
            let back = from_json_str(&text, "mem").unwrap();
            assert_eq!(back, c, "{name}");
        }
        let odd = Constellation::new(
            "odd",
            BandwidthFactor::Double,
            vec![Point3::new(0.1 + 0.2, 1e-300, -7.123456789012345e17), Point3::new(f64::MIN_POSITIVE, 0.0, -0.0)],
        )
        .unwrap();
        assert_eq!(from_json_str(&to_json_string(&odd).unwrap(), "mem").unwrap(), odd);
    }

    #[test]
    fn writes_seventeen_digits() {
        let c = catalog::get("OOK").unwrap();
        let text = to_json_string(&c).unwrap();
        assert!(text.contains("1.0000000000000000e0"), "{text}");
        assert!(text.contains("\"bandwidth_factor\": 1"));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("conepack-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c4.json");
        let c4 = catalog::get("C4").unwrap();
        save(&c4, &path).unwrap();
        assert_eq!(load(&path).unwrap(), c4);
        fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(load(dir.join("missing.json")), Err(Error::Io(_))));
    }

    #[test]
    fn rejects_malformed_documents() {
        let missing = r#"{"name": "x", "bandwidth_factor": 2}"#;
        let err = from_json_str(missing, "f.json").unwrap_err().to_string();
        assert!(err.contains("points") && err.contains("line"), "{err}");

        let two_columns = "{\n  \"bandwidth_factor\": 2,\n  \"points\": [[0, 0, 0], [1, 0]]\n}";
        let err = from_json_str(two_columns, "f.json").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");

        let bad_factor = r#"{"bandwidth_factor": 3, "points": [[0, 0, 0]]}"#;
        assert!(from_json_str(bad_factor, "f.json").is_err());

        let off_axis = r#"{"bandwidth_factor": 1, "points": [[0, 0, 0], [1, 0.5, 0]]}"#;
        assert!(from_json_str(off_axis, "f.json").is_err());
    }
}
