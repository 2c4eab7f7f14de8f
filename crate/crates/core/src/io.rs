//! Text output shared by every file format: JSON documents, JSON lines and CSV.
//!
//! Floats are always written in scientific notation with 17 significant
//! digits, enough to reproduce every `f64` bit for bit.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

/// Formats a float with 17 significant digits, e.g. `2.5000000000000000e-1`.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Compact JSON formatter that writes floats via [`fmt_f64`].
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactFloatFormatter;

impl Formatter for ExactFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            // JSON has no representation for these; serde_json writes null too.
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_writer<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> serde_json::Result<()> {
    let mut ser = Serializer::with_formatter(writer, ExactFloatFormatter);
    value.serialize(&mut ser)
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    to_json_writer(&mut buf, value).expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}
