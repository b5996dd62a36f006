//! Dyadic block arithmetic.
//!
//! Rounds are 1-based and blocks 0-based: block `r` covers the rounds
//! `2^r ..= 2^(r+1) - 1`, so it has length `2^r` and the blocks partition
//! the positive integers.

use std::ops::RangeInclusive;

use crate::error::{invalid, Result};

/// Largest supported block index. Round indices stay below `2^63`.
pub const MAX_BLOCK: u32 = 62;

/// Block containing round `t`.
pub fn block_of(t: u64) -> Result<u32> {
    if t == 0 {
        return invalid("rounds are numbered from 1");
    }
    Ok(63 - t.leading_zeros())
}

fn check_block(r: u32) -> Result<()> {
    if r > MAX_BLOCK {
        return invalid(format!("block index {r} exceeds {MAX_BLOCK}"));
    }
    Ok(())
}

/// First round of block `r`.
pub fn block_start(r: u32) -> Result<u64> {
    check_block(r)?;
    Ok(1u64 << r)
}

/// Last round of block `r`.
pub fn block_end(r: u32) -> Result<u64> {
    check_block(r)?;
    Ok((1u64 << (r + 1)) - 1)
}

pub fn block_len(r: u32) -> Result<u64> {
    block_start(r)
}

/// Support of the prefix length used to select the action after block `r`:
/// `{1}` for `r = 0`, otherwise the second half `2^(r-1)+1 ..= 2^r` of the
/// block's in-block positions.
pub fn prefix_window(r: u32) -> Result<RangeInclusive<u64>> {
    check_block(r)?;
    if r == 0 {
        Ok(1..=1)
    } else {
        Ok((1u64 << (r - 1)) + 1..=1u64 << r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_examples() {
        assert_eq!(block_of(1).unwrap(), 0);
        assert_eq!(block_of(2).unwrap(), 1);
        assert_eq!(block_of(3).unwrap(), 1);
        assert_eq!(block_of(1024).unwrap(), 10);
        assert!(block_of(0).is_err());
        assert_eq!(block_of(u64::MAX >> 1).unwrap(), 62);
    }

    #[test]
    fn window_examples() {
        assert_eq!(prefix_window(0).unwrap(), 1..=1);
        assert_eq!(prefix_window(1).unwrap(), 2..=2);
        assert_eq!(prefix_window(3).unwrap(), 5..=8);
        assert!(prefix_window(63).is_err());
        for r in 1..=20 {
            let w = prefix_window(r).unwrap();
            assert_eq!(w.end() - w.start() + 1, 1 << (r - 1));
            assert_eq!(*w.end(), block_len(r).unwrap());
        }
    }

    #[test]
    fn blocks_partition_rounds() {
        let mut expected_block = 0;
        for t in 1u64..=(1 << 20) {
            let r = block_of(t).unwrap();
            if t == block_start(expected_block + 1).unwrap() {
                expected_block += 1;
            }
            assert_eq!(r, expected_block);
            assert!(block_start(r).unwrap() <= t && t <= block_end(r).unwrap());
            assert_eq!(block_end(r).unwrap() - block_start(r).unwrap() + 1, block_len(r).unwrap());
        }
    }
}
