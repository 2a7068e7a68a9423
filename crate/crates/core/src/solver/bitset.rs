//! Dense bit-vector over achievable parameter sums.
//!
//! Sums are bounded by the baseline parameter count, so a network with a
//! few million parameters needs well under a megabyte per state. The one
//! non-obvious operation is `or_shifted`, which merges a predecessor's sum
//! set translated by a layer contribution in one pass.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Bitset {
    words: Vec<u64>,
    nbits: usize,
}

impl Bitset {
    pub fn new(nbits: usize) -> Self {
        Bitset {
            words: vec![0; nbits.div_ceil(64)],
            nbits,
        }
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.nbits);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        if i >= self.nbits {
            return false;
        }
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn or(&mut self, other: &Bitset) {
        for (dst, src) in self.words.iter_mut().zip(&other.words) {
            *dst |= src;
        }
    }

    /// `self |= { s + shift : s in other }`. Bits that would land beyond
    /// this set's capacity are dropped; callers size sets so that cannot
    /// happen for sums of interest.
    pub fn or_shifted(&mut self, other: &Bitset, shift: usize) {
        let word_shift = shift / 64;
        let bit_shift = (shift % 64) as u32;
        let n = self.words.len();
        for (w, &src) in other.words.iter().enumerate() {
            if src == 0 {
                continue;
            }
            let lo = w + word_shift;
            if lo < n {
                self.words[lo] |= src << bit_shift;
            }
            if bit_shift != 0 && lo + 1 < n {
                self.words[lo + 1] |= src >> (64 - bit_shift);
            }
        }
        self.clear_tail();
    }

    fn clear_tail(&mut self) {
        let tail = self.nbits % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    #[cfg(test)]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Largest set bit in `lo..=hi`, if any.
    pub fn max_in_range(&self, lo: usize, hi: usize) -> Option<usize> {
        if lo > hi || lo >= self.nbits {
            return None;
        }
        let hi = hi.min(self.nbits - 1);
        let (hi_word, hi_bit) = (hi / 64, hi % 64);
        let (lo_word, lo_bit) = (lo / 64, lo % 64);
        for w in (lo_word..=hi_word).rev() {
            let mut word = self.words[w];
            if w == hi_word && hi_bit < 63 {
                word &= (1u64 << (hi_bit + 1)) - 1;
            }
            if w == lo_word && lo_bit > 0 {
                word &= !((1u64 << lo_bit) - 1);
            }
            if word != 0 {
                return Some(w * 64 + 63 - word.leading_zeros() as usize);
            }
        }
        None
    }

    /// Smallest set bit in `lo..=hi`, if any.
    pub fn min_in_range(&self, lo: usize, hi: usize) -> Option<usize> {
        if lo > hi || lo >= self.nbits {
            return None;
        }
        let hi = hi.min(self.nbits - 1);
        let (hi_word, hi_bit) = (hi / 64, hi % 64);
        let (lo_word, lo_bit) = (lo / 64, lo % 64);
        for w in lo_word..=hi_word {
            let mut word = self.words[w];
            if w == lo_word && lo_bit > 0 {
                word &= !((1u64 << lo_bit) - 1);
            }
            if w == hi_word && hi_bit < 63 {
                word &= (1u64 << (hi_bit + 1)) - 1;
            }
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }
}
