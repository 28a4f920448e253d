use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::alphabet::Alphabet;

/// Persistent, structurally shared symbol sequence.
///
/// Extending a prefix is O(1) and shares the parent. Equality short-circuits
/// on shared tails, so comparing an extension with a hypothesis that grew
/// from the same parent costs O(1).
#[derive(Clone, Default)]
pub struct Prefix(Option<Arc<Node>>);

struct Node {
    symbol: usize,
    len: usize,
    hash: u64,
    parent: Prefix,
}

#[inline]
fn mix(hash: u64, symbol: usize) -> u64 {
    // splitmix64 finalizer over the running hash and the new symbol
    let mut z = hash ^ (symbol as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const EMPTY_HASH: u64 = 0xcbf2_9ce4_8422_2325;

impl Prefix {
    pub fn empty() -> Self {
        Self(None)
    }

    pub fn from_symbols(symbols: &[usize]) -> Self {
        symbols.iter().fold(Self::empty(), |p, &s| p.push(s))
    }

    pub fn push(&self, symbol: usize) -> Self {
        Self(Some(Arc::new(Node {
            symbol,
            len: self.len() + 1,
            hash: mix(self.content_hash(), symbol),
            parent: self.clone(),
        })))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    #[inline]
    pub fn last(&self) -> Option<usize> {
        self.0.as_ref().map(|n| n.symbol)
    }

    /// The prefix without its last symbol, `None` when empty.
    pub fn parent(&self) -> Option<&Prefix> {
        self.0.as_ref().map(|n| &n.parent)
    }

    /// Hash of the symbol content; equal sequences hash equally.
    #[inline]
    pub fn content_hash(&self) -> u64 {
        self.0.as_ref().map_or(EMPTY_HASH, |n| n.hash)
    }

    pub fn symbols(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self.0.as_ref();
        while let Some(n) = cur {
            out.push(n.symbol);
            cur = n.parent.0.as_ref();
        }
        out.reverse();
        out
    }

    /// Lexicographic order of the rendered text.
    pub fn cmp_text(&self, other: &Prefix, alphabet: &Alphabet) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        cmp_symbols_text(&self.symbols(), &other.symbols(), alphabet)
    }
}

/// Lexicographic order of two symbol sequences by their characters.
pub(crate) fn cmp_symbols_text(a: &[usize], b: &[usize], alphabet: &Alphabet) -> Ordering {
    let chars = |s: &[usize]| -> Vec<char> { s.iter().map(|&i| alphabet.char_at(i).unwrap_or('\u{0}')).collect() };
    chars(a).cmp(&chars(b))
}

impl PartialEq for Prefix {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() || self.content_hash() != other.content_hash() {
            return false;
        }
        let (mut a, mut b) = (self.0.as_ref(), other.0.as_ref());
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.symbol != y.symbol {
                        return false;
                    }
                    a = x.parent.0.as_ref();
                    b = y.parent.0.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl Eq for Prefix {}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.symbols()).finish()
    }
}

impl Drop for Prefix {
    // unlink iteratively so long chains do not recurse
    fn drop(&mut self) {
        let mut cur = self.0.take();
        while let Some(node) = cur {
            match Arc::try_unwrap(node) {
                Ok(mut n) => cur = n.parent.0.take(),
                Err(_) => break,
            }
        }
    }
}
