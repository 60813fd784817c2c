//! Philox4x32-10 counter-based generator.
//!
//! Each output block is a pure function of a 128-bit counter and a 64-bit
//! key, so any draw can be regenerated in isolation and the order in which
//! blocks are produced does not matter.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

#[inline(always)]
fn round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let (hi0, lo0) = mulhilo(M0, ctr[0]);
    let (hi1, lo1) = mulhilo(M1, ctr[2]);
    [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0]
}

/// Ten rounds of Philox4x32 over `ctr` under `key`.
#[inline]
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    ctr = round(ctr, key);
    for _ in 1..10 {
        key[0] = key[0].wrapping_add(W0);
        key[1] = key[1].wrapping_add(W1);
        ctr = round(ctr, key);
    }
    ctr
}

/// Uniform draw strictly inside (0, 1) from the first 64 output bits. Uses
/// 52 bits so that the midpoint offset cannot round up to 1.
#[inline]
pub fn uniform_open(block: [u32; 4]) -> f64 {
    let bits = (u64::from(block[1]) << 32) | u64::from(block[0]);
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
