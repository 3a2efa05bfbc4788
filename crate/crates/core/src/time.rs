//! Nanosecond timestamps and exact decimal scaling.

/// Nanoseconds since trace start.
pub type Timestamp = u64;

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

/// A non-negative decimal number held exactly as `mantissa * 10^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: u128,
    pub exponent: i32,
}

impl Decimal {
    /// Parses `digits[.digits][(e|E)[+|-]digits]`. Signs are not accepted.
    pub fn parse(text: &str) -> Option<Decimal> {
        let (body, exp) = match text.find(['e', 'E']) {
            Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut mantissa: u128 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            mantissa = mantissa.checked_mul(10)?.checked_add(u128::from(b - b'0'))?;
        }
        let exponent = exp.checked_sub(i32::try_from(frac.len()).ok()?)?;
        Some(Decimal { mantissa, exponent })
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.mantissa as f64 * 10f64.powi(self.exponent)
    }

    /// `self * scale` if that product is a whole number fitting in `u64`.
    pub fn scale_exact(&self, scale: u64) -> Option<u64> {
        let mut num = self.mantissa.checked_mul(u128::from(scale))?;
        if self.exponent >= 0 {
            for _ in 0..self.exponent {
                num = num.checked_mul(10)?;
            }
        } else {
            for _ in 0..(-self.exponent) {
                if num % 10 != 0 {
                    return None;
                }
                num /= 10;
            }
        }
        u64::try_from(num).ok()
    }

    /// `scale / self` if that quotient is a whole number fitting in `u64`.
    pub fn divide_exact(&self, scale: u64) -> Option<u64> {
        if self.mantissa == 0 {
            return None;
        }
        // scale / (m * 10^e) = scale * 10^-e / m
        let mut num = u128::from(scale);
        let mut den = self.mantissa;
        if self.exponent >= 0 {
            for _ in 0..self.exponent {
                den = den.checked_mul(10)?;
            }
        } else {
            for _ in 0..(-self.exponent) {
                num = num.checked_mul(10)?;
            }
        }
        if num % den != 0 {
            return None;
        }
        u64::try_from(num / den).ok()
    }
}

/// Converts a decimal string (seconds, milliseconds, ...) into whole nanoseconds.
/// Returns `None` when the value is not representable exactly.
pub fn decimal_to_nanos(text: &str, nanos_per_unit: u64) -> Option<Timestamp> {
    Decimal::parse(text)?.scale_exact(nanos_per_unit)
}

/// Formats nanoseconds as seconds with up to nine fractional digits.
pub fn format_secs(t: Timestamp) -> String {
    let secs = t / NANOS_PER_SEC;
    let frac = t % NANOS_PER_SEC;
    if frac == 0 {
        format!("{secs}")
    } else {
        let f = format!("{frac:09}");
        format!("{secs}.{}", f.trim_end_matches('0'))
    }
}
