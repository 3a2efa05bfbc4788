//! Value types shared by the frontend, the analyzer and the engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Declared type of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemType {
    Bool,
    UInt8,
    UInt16,
    UInt32,
    UInt64,
    Int8,
    Int16,
    Int32,
    Int64,
    Float16,
    Float32,
    Float64,
}

/// The kind of a type, ignoring its width. Implicit conversions never cross kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Bool,
    Unsigned,
    Signed,
    Float,
}

impl SemType {
    pub const ALL: [SemType; 12] = [
        SemType::Bool,
        SemType::UInt8,
        SemType::UInt16,
        SemType::UInt32,
        SemType::UInt64,
        SemType::Int8,
        SemType::Int16,
        SemType::Int32,
        SemType::Int64,
        SemType::Float16,
        SemType::Float32,
        SemType::Float64,
    ];

    pub fn kind(self) -> TypeKind {
        use SemType::*;
        match self {
            Bool => TypeKind::Bool,
            UInt8 | UInt16 | UInt32 | UInt64 => TypeKind::Unsigned,
            Int8 | Int16 | Int32 | Int64 => TypeKind::Signed,
            Float16 | Float32 | Float64 => TypeKind::Float,
        }
    }

    /// Storage width in bits.
    pub fn bits(self) -> u32 {
        use SemType::*;
        match self {
            Bool => 1,
            UInt8 | Int8 => 8,
            UInt16 | Int16 | Float16 => 16,
            UInt32 | Int32 | Float32 => 32,
            UInt64 | Int64 | Float64 => 64,
        }
    }

    /// Storage width in whole bytes; a `Bool` occupies one byte.
    pub fn bytes(self) -> u64 {
        u64::from(self.bits().div_ceil(8))
    }

    pub fn is_signed(self) -> bool {
        matches!(self.kind(), TypeKind::Signed | TypeKind::Float)
    }

    pub fn is_numeric(self) -> bool {
        self.kind() != TypeKind::Bool
    }

    /// True if a value of `self` converts to `target` without loss and without
    /// changing kind.
    pub fn widens_to(self, target: SemType) -> bool {
        self.kind() == target.kind() && self.bits() <= target.bits()
    }

    /// The 64-bit type of the same kind.
    pub fn widest(self) -> SemType {
        match self.kind() {
            TypeKind::Bool => SemType::Bool,
            TypeKind::Unsigned => SemType::UInt64,
            TypeKind::Signed => SemType::Int64,
            TypeKind::Float => SemType::Float64,
        }
    }

    pub fn name(self) -> &'static str {
        use SemType::*;
        match self {
            Bool => "Bool",
            UInt8 => "UInt8",
            UInt16 => "UInt16",
            UInt32 => "UInt32",
            UInt64 => "UInt64",
            Int8 => "Int8",
            Int16 => "Int16",
            Int32 => "Int32",
            Int64 => "Int64",
            Float16 => "Float16",
            Float32 => "Float32",
            Float64 => "Float64",
        }
    }

    /// Brings a value into the representable range of this type. Integers wrap
    /// at the declared width; floats are kept at 64-bit precision.
    pub fn normalize(self, value: Value) -> Value {
        match (self.kind(), value) {
            (TypeKind::Unsigned, Value::Unsigned(v)) => {
                let bits = self.bits();
                if bits == 64 {
                    Value::Unsigned(v)
                } else {
                    Value::Unsigned(v & ((1u64 << bits) - 1))
                }
            }
            (TypeKind::Signed, Value::Signed(v)) => {
                let bits = self.bits();
                if bits == 64 {
                    Value::Signed(v)
                } else {
                    let shift = 64 - bits;
                    Value::Signed((v << shift) >> shift)
                }
            }
            (_, v) => v,
        }
    }

    /// Parses a textual cell into a value of this type, rejecting values outside
    /// the declared range.
    pub fn parse_value(self, text: &str) -> Option<Value> {
        let text = text.trim();
        match self.kind() {
            TypeKind::Bool => match text {
                "true" | "1" => Some(Value::Bool(true)),
                "false" | "0" => Some(Value::Bool(false)),
                _ => None,
            },
            TypeKind::Unsigned => {
                let v: u64 = text.parse().ok()?;
                (self.bits() == 64 || v < (1u64 << self.bits())).then_some(Value::Unsigned(v))
            }
            TypeKind::Signed => {
                let v: i64 = text.parse().ok()?;
                let bits = self.bits();
                let ok = bits == 64 || {
                    let lim = 1i64 << (bits - 1);
                    (-lim..lim).contains(&v)
                };
                ok.then_some(Value::Signed(v))
            }
            TypeKind::Float => text.parse::<f64>().ok().map(Value::Float),
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SemType::ALL.iter().copied().find(|t| t.name() == s).ok_or(())
    }
}

/// A runtime value. Arithmetic is carried out at 64-bit precision regardless of
/// the declared width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Unsigned(u64),
    Signed(i64),
    Float(f64),
}

impl Value {
    pub fn kind(self) -> TypeKind {
        match self {
            Value::Bool(_) => TypeKind::Bool,
            Value::Unsigned(_) => TypeKind::Unsigned,
            Value::Signed(_) => TypeKind::Signed,
            Value::Float(_) => TypeKind::Float,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    /// Numeric view of the value; booleans map to 0 and 1.
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Bool(b) => f64::from(u8::from(b)),
            Value::Unsigned(v) => v as f64,
            Value::Signed(v) => v as f64,
            Value::Float(v) => v,
        }
    }

    /// Converts to the representation of `target`, truncating towards zero for
    /// float-to-integer conversions.
    pub fn convert(self, target: SemType) -> Value {
        let raw = match target.kind() {
            TypeKind::Bool => Value::Bool(match self {
                Value::Bool(b) => b,
                other => other.as_f64() != 0.0,
            }),
            TypeKind::Unsigned => Value::Unsigned(match self {
                Value::Bool(b) => u64::from(b),
                Value::Unsigned(v) => v,
                Value::Signed(v) => v as u64,
                Value::Float(v) => v as u64,
            }),
            TypeKind::Signed => Value::Signed(match self {
                Value::Bool(b) => i64::from(b),
                Value::Unsigned(v) => v as i64,
                Value::Signed(v) => v,
                Value::Float(v) => v as i64,
            }),
            TypeKind::Float => Value::Float(self.as_f64()),
        };
        target.normalize(raw)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unsigned(v) => write!(f, "{v}"),
            Value::Signed(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
        }
    }
}
