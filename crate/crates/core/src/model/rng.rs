use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which random quantity a substream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkTag {
    /// Tx to RIS `k` (the H matrix).
    TxRis(u16),
    /// RIS `k` to Rx (the G matrix).
    RisRx(u16),
    /// Tx to Rx (the D matrix).
    Direct,
    RxOrientation,
    /// Baseline phases of RIS `k`.
    Phases(u16),
}

impl LinkTag {
    fn code(self) -> u32 {
        match self {
            LinkTag::Direct => 1,
            LinkTag::RxOrientation => 2,
            LinkTag::TxRis(k) => 0x1_0000 | u32::from(k),
            LinkTag::RisRx(k) => 0x2_0000 | u32::from(k),
            LinkTag::Phases(k) => 0x3_0000 | u32::from(k),
        }
    }
}

/// Deterministic random stream for one (seed, realization, link) triple.
///
/// Backed by ChaCha8 keyed by the master seed; the 64-bit ChaCha stream id is
/// `realization << 32 | tag`, so distinct triples never share keystream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `[lo, hi)`; returns `lo` when the interval is empty.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            lo + (hi - lo) * self.uniform()
        } else {
            lo
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Substream for `realization` (must fit in 32 bits) and `tag`.
pub fn spawn_rng(master_seed: u64, realization: u64, tag: LinkTag) -> RngStream {
    debug_assert!(realization <= u64::from(u32::MAX));
    let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
    inner.set_stream((realization << 32) | u64::from(tag.code()));
    RngStream { inner }
}
