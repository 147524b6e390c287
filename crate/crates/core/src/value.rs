//! Ground values, their total order, and the dictionary that encodes them as
//! dense integer ids for columnar storage.
//!
//! Values of different sorts are ordered by a fixed rank:
//!
//! | rank | sort        | order within the sort                  |
//! |------|-------------|----------------------------------------|
//! | 0    | IRI         | codepoint-lexicographic                |
//! | 1    | String      | codepoint-lexicographic                |
//! | 2    | LangString  | language tag, then text                |
//! | 3    | Integer     | numeric                                |
//! | 4    | Double      | numeric                                |
//! | 5    | Null        | label                                  |
//!
//! Integers and doubles are *not* compared numerically with each other here;
//! mixed numeric comparison belongs to constraint evaluation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use hashbrown::HashMap;

/// A 64-bit float that is never NaN.
///
/// Negative zero is normalised to positive zero so that equality, hashing and
/// ordering agree.
#[derive(Clone, Copy)]
pub struct Double(f64);

impl Double {
    /// Returns `None` for NaN and for infinities.
    pub fn new(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        Some(Double(if value == 0.0 { 0.0 } else { value }))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Double {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Double {}

impl Hash for Double {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Double {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Double {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for Double {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Double {
    /// Shortest decimal form that parses back to the same value; always
    /// carries a `.` or an exponent so it never reads as an integer.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A typed ground value.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum DataValue {
    Iri(String),
    String(String),
    LangString { text: String, lang: String },
    Integer(i64),
    Double(Double),
    /// A labelled null minted by the chase.
    Null(u64),
}

impl DataValue {
    pub fn iri(text: impl Into<String>) -> Self {
        DataValue::Iri(text.into())
    }

    pub fn string(text: impl Into<String>) -> Self {
        DataValue::String(text.into())
    }

    pub fn lang_string(text: impl Into<String>, lang: impl Into<String>) -> Self {
        DataValue::LangString {
            text: text.into(),
            lang: lang.into(),
        }
    }

    /// Returns `None` for NaN or infinite input.
    pub fn double(value: f64) -> Option<Self> {
        Double::new(value).map(DataValue::Double)
    }

    pub fn sort(&self) -> ValueSort {
        match self {
            DataValue::Iri(_) => ValueSort::Iri,
            DataValue::String(_) => ValueSort::String,
            DataValue::LangString { .. } => ValueSort::LangString,
            DataValue::Integer(_) => ValueSort::Integer,
            DataValue::Double(_) => ValueSort::Double,
            DataValue::Null(_) => ValueSort::Null,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, DataValue::Null(_))
    }

    /// Numeric view used by constraint evaluation.
    pub fn as_number(&self) -> Option<Number> {
        match self {
            DataValue::Integer(i) => Some(Number::Integer(*i)),
            DataValue::Double(d) => Some(Number::Double(d.get())),
            _ => None,
        }
    }
}

/// The sort of a [`DataValue`], listed in cross-sort order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ValueSort {
    Iri,
    String,
    LangString,
    Integer,
    Double,
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Number {
    Integer(i64),
    Double(f64),
}

impl Number {
    /// Exact comparison across integers and doubles.
    pub fn compare(self, other: Number) -> Ordering {
        match (self, other) {
            (Number::Integer(a), Number::Integer(b)) => a.cmp(&b),
            (Number::Double(a), Number::Double(b)) => a.total_cmp(&b),
            (Number::Integer(a), Number::Double(b)) => compare_int_double(a, b),
            (Number::Double(a), Number::Integer(b)) => compare_int_double(b, a).reverse(),
        }
    }
}

// i64 -> f64 loses precision above 2^53, so compare via the integral part.
fn compare_int_double(int: i64, double: f64) -> Ordering {
    const TWO_POW_63: f64 = 9_223_372_036_854_775_808.0;
    if double >= TWO_POW_63 {
        return Ordering::Less;
    }
    if double < -TWO_POW_63 {
        return Ordering::Greater;
    }
    let truncated = double as i64;
    match int.cmp(&truncated) {
        Ordering::Equal => {
            let fraction = double - truncated as f64;
            if fraction > 0.0 {
                Ordering::Less
            } else if fraction < 0.0 {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        }
        other => other,
    }
}

/// Total order over all values.
pub fn compare(a: &DataValue, b: &DataValue) -> Ordering {
    use DataValue::*;
    match (a, b) {
        (Iri(x), Iri(y)) | (String(x), String(y)) => x.cmp(y),
        (LangString { text: t1, lang: l1 }, LangString { text: t2, lang: l2 }) => {
            l1.cmp(l2).then_with(|| t1.cmp(t2))
        }
        (Integer(x), Integer(y)) => x.cmp(y),
        (Double(x), Double(y)) => x.cmp(y),
        (Null(x), Null(y)) => x.cmp(y),
        _ => a.sort().cmp(&b.sort()),
    }
}

impl PartialOrd for DataValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DataValue {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

impl fmt::Display for DataValue {
    /// Renders the value in rule-file constant syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataValue::Iri(iri) => {
                if is_bare_identifier(iri) {
                    f.write_str(iri)
                } else {
                    write!(f, "<{iri}>")
                }
            }
            DataValue::String(s) => write_quoted(f, s),
            DataValue::LangString { text, lang } => {
                write_quoted(f, text)?;
                write!(f, "@{lang}")
            }
            DataValue::Integer(i) => write!(f, "{i}"),
            DataValue::Double(d) => write!(f, "{d}"),
            DataValue::Null(n) => write!(f, "_:n{n}"),
        }
    }
}

/// `[A-Za-z][A-Za-z0-9_-]*`, the grammar of predicate names and bare
/// constants.
pub fn is_bare_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, text: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in text.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

/// Dense identifier of an interned value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ValueId(pub u32);

impl ValueId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownIdError(pub ValueId);

impl fmt::Display for UnknownIdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown value id {}", self.0 .0)
    }
}

impl core::error::Error for UnknownIdError {}

/// Orders value ids. Tries and joins are generic over this so they can sort
/// ids by the values they stand for.
pub trait IdOrder {
    fn cmp_ids(&self, a: ValueId, b: ValueId) -> Ordering;
}

/// Orders ids numerically. Useful when the order only needs to be
/// consistent, not meaningful.
#[derive(Clone, Copy, Debug, Default)]
pub struct RawIdOrder;

impl IdOrder for RawIdOrder {
    fn cmp_ids(&self, a: ValueId, b: ValueId) -> Ordering {
        a.cmp(&b)
    }
}

/// Bidirectional map between values and dense ids, assigned in first-seen
/// order starting at zero.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    ids: HashMap<DataValue, ValueId>,
    values: Vec<DataValue>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, value: DataValue) -> ValueId {
        if let Some(&id) = self.ids.get(&value) {
            return id;
        }
        let id = ValueId(u32::try_from(self.values.len()).expect("dictionary exceeds u32 ids"));
        self.values.push(value.clone());
        self.ids.insert(value, id);
        id
    }

    pub fn lookup(&self, value: &DataValue) -> Option<ValueId> {
        self.ids.get(value).copied()
    }

    pub fn resolve(&self, id: ValueId) -> Result<&DataValue, UnknownIdError> {
        self.values.get(id.index()).ok_or(UnknownIdError(id))
    }

    /// Like [`Dictionary::resolve`] for ids known to come from this
    /// dictionary.
    pub fn value(&self, id: ValueId) -> &DataValue {
        &self.values[id.index()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl IdOrder for Dictionary {
    fn cmp_ids(&self, a: ValueId, b: ValueId) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        compare(self.value(a), self.value(b))
    }
}

/// Declared type of one predicate position.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PositionType {
    Any,
    Integer,
    Double,
    String,
}

impl PositionType {
    pub fn name(self) -> &'static str {
        match self {
            PositionType::Any => "any",
            PositionType::Integer => "integer",
            PositionType::Double => "double",
            PositionType::String => "string",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "any" => Some(PositionType::Any),
            "integer" => Some(PositionType::Integer),
            "double" | "float" => Some(PositionType::Double),
            "string" => Some(PositionType::String),
            _ => None,
        }
    }
}

impl fmt::Display for PositionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypeDeclaration {
    pub predicate: String,
    pub positions: Vec<PositionType>,
}

impl TypeDeclaration {
    pub fn new(predicate: impl Into<String>, positions: Vec<PositionType>) -> Self {
        Self {
            predicate: predicate.into(),
            positions,
        }
    }

    /// Every position `any`; used for undeclared predicates.
    pub fn untyped(predicate: impl Into<String>, arity: usize) -> Self {
        Self::new(predicate, alloc::vec![PositionType::Any; arity])
    }

    pub fn arity(&self) -> usize {
        self.positions.len()
    }
}

/// A value could not be converted to the declared position type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoercionError {
    pub value: DataValue,
    pub expected: PositionType,
}

impl fmt::Display for CoercionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "value {} is not a valid {}", self.value, self.expected)
    }
}

impl core::error::Error for CoercionError {}

pub fn coerce(value: DataValue, declared: PositionType) -> Result<DataValue, CoercionError> {
    let converted = match (&value, declared) {
        (_, PositionType::Any) => Some(value.clone()),
        (DataValue::Null(_), _) => None,
        (DataValue::Integer(_), PositionType::Integer) => Some(value.clone()),
        (DataValue::String(text), PositionType::Integer) => parse_integer(text).map(DataValue::Integer),
        (DataValue::Double(_), PositionType::Double) => Some(value.clone()),
        (DataValue::Integer(i), PositionType::Double) => DataValue::double(*i as f64),
        (DataValue::String(text), PositionType::Double) => {
            parse_decimal(text).and_then(DataValue::double)
        }
        (DataValue::String(_) | DataValue::LangString { .. }, PositionType::String) => {
            Some(value.clone())
        }
        (DataValue::Iri(text), PositionType::String) => Some(DataValue::String(text.clone())),
        _ => None,
    };
    converted.ok_or(CoercionError {
        value,
        expected: declared,
    })
}

/// `[+-]?[0-9]+` within the i64 range.
pub fn parse_integer(text: &str) -> Option<i64> {
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Decimal or scientific notation: `[+-]?(D+(.D*)?|.D+)([eE][+-]?D+)?`.
/// Plain integers are accepted too. `inf` and `nan` spellings are not.
pub fn parse_decimal(text: &str) -> Option<f64> {
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(at) => (&body[..at], Some(&body[at + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !frac_part.is_none_or(all_digits) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_none_or(str::is_empty) {
        return None;
    }
    if let Some(exp) = exponent {
        let exp_digits = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        if exp_digits.is_empty() || !all_digits(exp_digits) {
            return None;
        }
    }
    text.parse().ok()
}

impl From<i64> for DataValue {
    fn from(value: i64) -> Self {
        DataValue::Integer(value)
    }
}

impl From<&str> for DataValue {
    fn from(value: &str) -> Self {
        DataValue::String(value.to_string())
    }
}
