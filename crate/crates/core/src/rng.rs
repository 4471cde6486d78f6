//! Keyed, counter-based random streams.
//!
//! Every stream is identified by `(master seed, namespace, message)` where the
//! message is usually a serialized address. The identity is compressed by
//! 128-bit SipHash-1-3 into a stream key, which seeds a Xoroshiro128++
//! generator for the few draws a node needs. The key depends only on the
//! identity, so the value attached to an address never depends on the order
//! in which addresses are visited.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoroshiro128PlusPlus;
use siphasher::sip128::{Hasher128, SipHasher13};
use std::hash::Hasher;

/// Disjoint key spaces. Draws in different namespaces are independent even
/// for the same seed and address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Namespace {
    Weights = 0x5745_4947_4854_5300,
    Perturbation = 0x5045_5254_5552_4200,
    Sampling = 0x5341_4d50_4c49_4e47,
    MonteCarlo = 0x4d4f_4e54_4543_4152,
}

#[derive(Debug, Clone)]
pub struct NodeStream(Xoroshiro128PlusPlus);

impl NodeStream {
    pub fn new(seed: u64, namespace: Namespace, message: &[u8]) -> Self {
        let mut h = SipHasher13::new_with_keys(seed, namespace as u64);
        h.write(message);
        let key = h.finish128().as_bytes();
        NodeStream(Xoroshiro128PlusPlus::from_seed(key))
    }

    /// A stream keyed by an integer label instead of an address.
    pub fn labelled(seed: u64, namespace: Namespace, label: u64) -> Self {
        Self::new(seed, namespace, &label.to_le_bytes())
    }

    /// Uniform draw from the open interval `(0, 1)`.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        to_open01(self.next_u64())
    }
}

#[inline]
pub(crate) fn to_open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl RngCore for NodeStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}
