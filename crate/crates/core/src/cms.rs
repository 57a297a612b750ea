//! CountMin sketch with pairwise-independent row hashes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracles::MemoryLedger;

/// Mersenne prime `2^61 - 1`, larger than any supported domain.
const PRIME: u64 = (1 << 61) - 1;

fn check_params(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sketch accuracy must lie in (0, 1], got {eps}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sketch failure probability must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Width `ceil(e / eps)` and depth `max(1, ceil(ln(1 / delta)))`.
pub fn dimensions(eps: f64, delta: f64) -> Result<(usize, usize)> {
    check_params(eps, delta)?;
    let w = (std::f64::consts::E / eps).ceil() as usize;
    let d = ((1.0 / delta).ln().ceil() as usize).max(1);
    Ok((w, d))
}

#[derive(Debug, Clone)]
pub struct CountMinSketch {
    width: usize,
    depth: usize,
    n: usize,
    hashes: Vec<(u64, u64)>,
    counts: Vec<u64>,
    total: u64,
}

impl CountMinSketch {
    /// Allocates a zeroed sketch over `[n]`, charging `w * d` cells.
    pub fn new<R: Rng + ?Sized>(
        eps: f64,
        delta: f64,
        n: usize,
        ledger: &mut MemoryLedger,
        rng: &mut R,
    ) -> Result<Self> {
        let (w, d) = dimensions(eps, delta)?;
        Self::with_dimensions(w, d, n, ledger, rng)
    }

    pub fn with_dimensions<R: Rng + ?Sized>(
        width: usize,
        depth: usize,
        n: usize,
        ledger: &mut MemoryLedger,
        rng: &mut R,
    ) -> Result<Self> {
        if width == 0 || depth == 0 {
            return Err(Error::InvalidArgument("sketch dimensions must be positive".into()));
        }
        if n as u64 >= PRIME {
            return Err(Error::InvalidArgument(format!("domain {n} too large to hash")));
        }
        ledger.store_counters((width * depth) as u64)?;
        let hashes = (0..depth)
            .map(|_| (rng.random_range(1..PRIME), rng.random_range(0..PRIME)))
            .collect();
        Ok(CountMinSketch {
            width,
            depth,
            n,
            hashes,
            counts: vec![0; width * depth],
            total: 0,
        })
    }

    /// Returns the sketch's cells to the ledger.
    pub fn free(self, ledger: &mut MemoryLedger) {
        ledger.release_counters((self.width * self.depth) as u64);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Bits the sketch occupies.
    pub fn bits(&self, ledger: &MemoryLedger) -> u64 {
        (self.width * self.depth) as u64 * ledger.counter_bits()
    }

    fn bucket(&self, row: usize, x: usize) -> usize {
        let (a, b) = self.hashes[row];
        let h = ((a as u128 * x as u128 + b as u128) % PRIME as u128) as u64;
        (h % self.width as u64) as usize
    }

    /// Hash of `x` in `row`, exposed for diagnostics.
    pub fn hash(&self, row: usize, x: usize) -> usize {
        self.bucket(row, x)
    }

    fn check(&self, x: usize) -> Result<()> {
        if x == 0 || x > self.n {
            return Err(Error::InvalidArgument(format!(
                "element {x} outside [1, {}]",
                self.n
            )));
        }
        Ok(())
    }

    pub fn update(&mut self, x: usize) -> Result<()> {
        self.check(x)?;
        for r in 0..self.depth {
            let c = self.bucket(r, x);
            self.counts[r * self.width + c] += 1;
        }
        self.total += 1;
        Ok(())
    }

    /// Minimum over rows: never below the true count.
    pub fn query(&self, x: usize) -> Result<u64> {
        self.check(x)?;
        Ok((0..self.depth)
            .map(|r| self.counts[r * self.width + self.bucket(r, x)])
            .min()
            .unwrap_or(0))
    }

    /// Sum of point queries over `group`.
    pub fn query_group(&self, group: &[usize]) -> Result<u64> {
        group.iter().map(|&x| self.query(x)).sum()
    }

    /// Counts of one row.
    pub fn row(&self, r: usize) -> &[u64] {
        &self.counts[r * self.width..(r + 1) * self.width]
    }
}
