//! Bit strings in Keccak order: bit `i` lives in byte `i / 8` at position
//! `i % 8` (least significant bit first).

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self {
            bytes: bytes.to_vec(),
            len: bytes.len() * 8,
        }
    }

    /// Takes the first `len` bits of `bytes`. Bits past `len` are cleared.
    ///
    /// Panics if `bytes` holds fewer than `len` bits.
    pub fn from_bytes_with_len(bytes: &[u8], len: usize) -> Self {
        assert!(bytes.len() * 8 >= len, "not enough bytes for {len} bits");
        let mut out = Self {
            bytes: bytes[..len.div_ceil(8)].to_vec(),
            len,
        };
        out.clear_tail();
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.bytes[i / 8] >> (i % 8)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if bit {
            self.bytes[i / 8] |= 1 << (i % 8);
        } else {
            self.bytes[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn extend(&mut self, other: &BitString) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    /// The first `len` bits.
    pub fn prefix(&self, len: usize) -> BitString {
        Self::from_bytes_with_len(&self.bytes, len.min(self.len))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= (1u8 << rem) - 1;
            }
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = BitString::new();
        for bit in iter {
            out.push(bit);
        }
        out
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({} bits, {})", self.len, hex::encode(&self.bytes))
    }
}

/// Multi-rate padding `pad10*1`, split into `rate`-bit blocks.
///
/// The output is the shortest multiple of `rate` strictly longer than the
/// message, so at least two bits are always appended.
pub fn pad(message: &BitString, rate: usize) -> Vec<BitString> {
    assert!(rate >= 2, "rate must be at least 2 bits");
    let mut padded = message.clone();
    padded.push(true);
    while (padded.len() + 1) % rate != 0 {
        padded.push(false);
    }
    padded.push(true);
    (0..padded.len() / rate)
        .map(|b| (b * rate..(b + 1) * rate).map(|i| padded.get(i)).collect())
        .collect()
}

/// Inverse of [`pad`]: strips the trailing `10*1` from the concatenated blocks.
pub fn unpad(blocks: &[BitString]) -> Option<BitString> {
    let mut all = BitString::new();
    for block in blocks {
        all.extend(block);
    }
    if all.len() < 2 || !all.get(all.len() - 1) {
        return None;
    }
    let mut end = all.len() - 1;
    while end > 0 {
        end -= 1;
        if all.get(end) {
            return Some(all.prefix(end));
        }
    }
    None
}
