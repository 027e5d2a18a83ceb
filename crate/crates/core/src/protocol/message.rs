use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A bit string, packed most-significant-bit first.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message {
    len: usize,
    bytes: Vec<u8>,
}

impl Message {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut w = BitWriter::new();
        for &b in bits {
            w.push_bit(b);
        }
        w.finish()
    }

    /// The low `width` bits of `value`, most significant first.
    pub fn from_uint(value: u64, width: usize) -> Self {
        let mut w = BitWriter::new();
        w.push_uint(value, width);
        w.finish()
    }

    pub fn bit(b: bool) -> Self {
        Self::from_bits(&[b])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for a {}-bit message", self.len);
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader { msg: self, pos: 0 }
    }

    /// Hex of the packed bytes; the bit length is carried separately.
    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Option<Self> {
        if !hex.len().is_multiple_of(2) || hex.len() / 2 != len.div_ceil(8) {
            return None;
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).ok())
            .collect::<Option<Vec<u8>>>()?;
        if !len.is_multiple_of(8) {
            let mask = 0xffu8 >> (len % 8);
            if bytes.last().is_some_and(|b| b & mask != 0) {
                return None;
            }
        }
        Some(Self { len, bytes })
    }
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Message(")?;
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct MessageRepr {
    bits: usize,
    hex: String,
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MessageRepr { bits: self.len, hex: self.to_hex() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = MessageRepr::deserialize(d)?;
        Message::from_hex(&repr.hex, repr.bits)
            .ok_or_else(|| serde::de::Error::custom("hex payload does not match bit length"))
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    len: usize,
    bytes: Vec<u8>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, b: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if b {
            let last = self.bytes.last_mut().expect("byte allocated above");
            *last |= 1 << (7 - self.len % 8);
        }
        self.len += 1;
    }

    pub fn push_uint(&mut self, value: u64, width: usize) {
        debug_assert!(width == 64 || value < (1u64 << width), "{value} does not fit in {width} bits");
        for k in (0..width).rev() {
            self.push_bit((value >> k) & 1 == 1);
        }
    }

    pub fn finish(self) -> Message {
        Message { len: self.len, bytes: self.bytes }
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    msg: &'a Message,
    pos: usize,
}

impl BitReader<'_> {
    pub fn read_bit(&mut self) -> bool {
        let b = self.msg.get(self.pos);
        self.pos += 1;
        b
    }

    pub fn read_uint(&mut self, width: usize) -> u64 {
        (0..width).fold(0u64, |acc, _| (acc << 1) | u64::from(self.read_bit()))
    }
}

/// Bits needed to store integers in `0..=max`.
pub fn bits_for(max: u64) -> usize {
    (u64::BITS - max.leading_zeros()) as usize
}
