//! Segmented sieve of Eratosthenes over odd numbers with an on-disk cache.
//!
//! Bit `i` of the table stands for the odd number `2i + 1`. Prime counts are
//! answered in constant time from per-word popcount prefixes.
//!
//! Cache layout (all little endian):
//!
//! ```text
//! offset 0   magic   b"PTBL"
//! offset 4   version u32
//! offset 8   limit   u64
//! offset 16  words   u64 * ceil(((limit + 1) / 2) / 64)
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"PTBL";
pub const CACHE_VERSION: u32 = 1;
/// Largest limit accepted unless the caller raises the cap explicitly.
pub const DEFAULT_HARD_CAP: u64 = 1 << 32;
/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "TAUBERLAB_CACHE_DIR";

const SEGMENT_ODDS: usize = 1 << 18;
const HEADER_LEN: usize = 16;

/// Primality bitset for the odd numbers up to `limit`. Immutable once built.
#[derive(Clone)]
pub struct PrimeTable {
    limit: u64,
    words: Vec<u64>,
    prefix: Vec<u32>,
    cache_path: Option<PathBuf>,
}

impl std::fmt::Debug for PrimeTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrimeTable").field("limit", &self.limit).field("cache_path", &self.cache_path).finish()
    }
}

/// How a table was obtained by [`PrimeTable::load_or_build`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Loaded,
    Built,
    /// The cache file existed but failed validation and was replaced.
    Rebuilt,
}

fn odd_bits(limit: u64) -> u64 {
    limit.div_ceil(2)
}

impl PrimeTable {
    /// Sieves all primes up to `limit` (`2 ≤ limit ≤ 2³²`).
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_cap(limit, DEFAULT_HARD_CAP)
    }

    pub fn build_with_cap(limit: u64, hard_cap: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::Domain(format!("prime table limit must be >= 2, got {limit}")));
        }
        if limit > hard_cap {
            return Err(Error::Resource(format!("prime table limit {limit} exceeds hard cap {hard_cap}")));
        }
        let words = sieve_odd_words(limit);
        Ok(Self::from_words(limit, words, None))
    }

    fn from_words(limit: u64, words: Vec<u64>, cache_path: Option<PathBuf>) -> Self {
        let mut prefix = Vec::with_capacity(words.len() + 1);
        let mut acc = 0u32;
        for w in &words {
            prefix.push(acc);
            acc += w.count_ones();
        }
        prefix.push(acc);
        Self { limit, words, prefix, cache_path }
    }

    /// Loads the table for `limit` from `cache_dir`, sieving and persisting it
    /// when the file is missing. A file that fails validation is rebuilt.
    pub fn load_or_build(limit: u64, cache_dir: &Path) -> Result<(Self, CacheStatus)> {
        Self::load_or_build_with_cap(limit, cache_dir, DEFAULT_HARD_CAP)
    }

    pub fn load_or_build_with_cap(limit: u64, cache_dir: &Path, hard_cap: u64) -> Result<(Self, CacheStatus)> {
        if limit > hard_cap {
            return Err(Error::Resource(format!("prime table limit {limit} exceeds hard cap {hard_cap}")));
        }
        let path = cache_file(cache_dir, limit);
        let mut status = CacheStatus::Built;
        if path.exists() {
            match read_cache(&path, limit) {
                Ok(words) => {
                    info!("loaded prime table for limit {limit} from {}", path.display());
                    let table = Self::from_words(limit, words, Some(path));
                    return Ok((table, CacheStatus::Loaded));
                }
                Err(e) => {
                    warn!("prime cache {} is unusable ({e}); rebuilding", path.display());
                    status = CacheStatus::Rebuilt;
                }
            }
        }
        let mut table = Self::build_with_cap(limit, hard_cap)?;
        fs::create_dir_all(cache_dir)?;
        write_cache(&path, limit, &table.words)?;
        table.cache_path = Some(path);
        Ok((table, status))
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn cache_path(&self) -> Option<&Path> {
        self.cache_path.as_deref()
    }

    /// Number of primes in the table.
    pub fn len(&self) -> u64 {
        self.pi_u64(self.limit)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n > self.limit {
            return false;
        }
        if n == 2 {
            return true;
        }
        if n.is_multiple_of(2) {
            return false;
        }
        let i = (n / 2) as usize;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn pi_u64(&self, n: u64) -> u64 {
        if n < 2 {
            return 0;
        }
        // Odd numbers 1, 3, ..., up to n occupy bits 0..=last.
        let last = ((n - 1) / 2) as usize;
        let w = last / 64;
        let bit = last % 64;
        let mask = if bit == 63 { u64::MAX } else { (1u64 << (bit + 1)) - 1 };
        1 + self.prefix[w] as u64 + (self.words[w] & mask).count_ones() as u64
    }

    /// `π(x)`, the number of primes `≤ x`.
    pub fn count(&self, x: f64) -> Result<u64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("prime count argument must be finite, got {x}")));
        }
        if x < 2.0 {
            return Ok(0);
        }
        let n = x.floor();
        if n > self.limit as f64 {
            return Err(Error::TableExhausted { required: n as u64, limit: self.limit });
        }
        Ok(self.pi_u64(n as u64))
    }

    /// Primes in the half-open range `(lo, hi]`, clipped to the table.
    pub fn primes_between(&self, lo: u64, hi: u64) -> impl Iterator<Item = u64> + '_ {
        let hi = hi.min(self.limit);
        let two = (lo < 2 && hi >= 2).then_some(2u64);
        // First odd number strictly above max(lo, 2).
        let start = (lo.max(2) + 1) | 1;
        let start_bit = (start / 2) as usize;
        let end_bit = if hi >= 3 { ((hi - 1) / 2) as usize + 1 } else { start_bit };
        two.into_iter().chain(BitIter::new(&self.words, start_bit, end_bit).map(|i| 2 * i as u64 + 1))
    }

    /// All primes in the table in increasing order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes_between(0, self.limit)
    }
}

struct BitIter<'a> {
    words: &'a [u64],
    end: usize,
    word_idx: usize,
    current: u64,
}

impl<'a> BitIter<'a> {
    fn new(words: &'a [u64], start: usize, end: usize) -> Self {
        if start >= end {
            return Self { words, end, word_idx: words.len(), current: 0 };
        }
        let word_idx = start / 64;
        let current = words[word_idx] & (u64::MAX << (start % 64));
        Self { words, end, word_idx, current }
    }
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let idx = self.word_idx * 64 + bit;
                return (idx < self.end).then_some(idx);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() || self.word_idx * 64 >= self.end {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

fn sieve_odd_words(limit: u64) -> Vec<u64> {
    let nbits = odd_bits(limit) as usize;
    let mut words = vec![0u64; nbits.div_ceil(64)];

    let root = (limit as f64).sqrt() as u64 + 1;
    let base = small_odd_primes(root);

    let mut segment = vec![true; SEGMENT_ODDS];
    let mut lo = 0usize;
    while lo < nbits {
        let hi = (lo + SEGMENT_ODDS).min(nbits);
        let seg = &mut segment[..hi - lo];
        seg.fill(true);
        for &p in &base {
            let p2 = p * p;
            if p2 > 2 * (hi as u64 - 1) + 1 {
                break;
            }
            // Smallest odd multiple of p that is >= max(p^2, 2*lo + 1).
            let first_num = 2 * lo as u64 + 1;
            let mut m = if p2 >= first_num { p2 } else { first_num.div_ceil(p) * p };
            if m % 2 == 0 {
                m += p;
            }
            let mut i = (m / 2) as usize;
            while i < hi {
                seg[i - lo] = false;
                i += p as usize;
            }
        }
        for (k, &flag) in seg.iter().enumerate() {
            if flag {
                let i = lo + k;
                words[i / 64] |= 1 << (i % 64);
            }
        }
        lo = hi;
    }
    // The number 1.
    words[0] &= !1;
    words
}

fn small_odd_primes(bound: u64) -> Vec<u64> {
    let n = bound as usize + 1;
    let mut composite = vec![false; n];
    let mut out = Vec::new();
    let mut p = 3;
    while p < n {
        if !composite[p] {
            out.push(p as u64);
            let mut m = p * p;
            while m < n {
                composite[m] = true;
                m += 2 * p;
            }
        }
        p += 2;
    }
    out
}

/// Cache directory: `$TAUBERLAB_CACHE_DIR`, else `$XDG_CACHE_HOME/tauberlab`,
/// else `$HOME/.cache/tauberlab`, else `./.tauberlab-cache`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(dir).join("tauberlab");
    }
    if let Some(home) = std::env::var_os("HOME") {
        return PathBuf::from(home).join(".cache").join("tauberlab");
    }
    PathBuf::from(".tauberlab-cache")
}

pub fn cache_file(dir: &Path, limit: u64) -> PathBuf {
    dir.join(format!("primes-{limit}.ptbl"))
}

fn write_cache(path: &Path, limit: u64, words: &[u64]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = io::BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&CACHE_VERSION.to_le_bytes())?;
        f.write_all(&limit.to_le_bytes())?;
        for w in words {
            f.write_all(&w.to_le_bytes())?;
        }
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_cache(path: &Path, limit: u64) -> Result<Vec<u64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let corrupt = |why: &str| Error::Parse(format!("{}: {why}", path.display()));
    if bytes.len() < HEADER_LEN || &bytes[..4] != CACHE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(corrupt(&format!("unsupported version {version}")));
    }
    let stored = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if stored != limit {
        return Err(corrupt(&format!("limit {stored} does not match {limit}")));
    }
    let nwords = (odd_bits(limit) as usize).div_ceil(64);
    let body = &bytes[HEADER_LEN..];
    if body.len() != nwords * 8 {
        return Err(corrupt(&format!("expected {} body bytes, found {}", nwords * 8, body.len())));
    }
    let words: Vec<u64> = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
    // Cheap structural checks: 1 is not prime, 3 is.
    if words[0] & 1 != 0 || (limit >= 3 && words[0] & 2 == 0) {
        return Err(corrupt("bitset fails sanity check"));
    }
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn membership_matches_trial_division_to_ten_thousand() {
        let table = PrimeTable::build(10_000).unwrap();
        let mut count = 0;
        for n in 0..=10_000u64 {
            assert_eq!(table.is_prime(n), trial_division(n), "n = {n}");
            if trial_division(n) {
                count += 1;
            }
            assert_eq!(table.count(n as f64).unwrap(), count, "pi({n})");
        }
    }

    #[test]
    fn small_tables() {
        let t = PrimeTable::build(30).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        let t = PrimeTable::build(2).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2]);
        assert_eq!(t.count(2.0).unwrap(), 1);
        let t = PrimeTable::build(3).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn segment_boundaries_are_seamless() {
        // Spans several segments; compare against a plain sieve.
        let limit = 3 * 2 * SEGMENT_ODDS as u64 + 12_345;
        let table = PrimeTable::build(limit).unwrap();
        let mut plain = vec![true; limit as usize + 1];
        plain[0] = false;
        plain[1] = false;
        let mut p = 2;
        while p * p <= limit as usize {
            if plain[p] {
                let mut m = p * p;
                while m <= limit as usize {
                    plain[m] = false;
                    m += p;
                }
            }
            p += 1;
        }
        let expected: Vec<u64> = (0..=limit).filter(|&n| plain[n as usize]).collect();
        assert_eq!(table.primes().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn primes_between_is_half_open() {
        let t = PrimeTable::build(100).unwrap();
        assert_eq!(t.primes_between(10, 30).collect::<Vec<_>>(), vec![11, 13, 17, 19, 23, 29]);
        assert_eq!(t.primes_between(11, 13).collect::<Vec<_>>(), vec![13]);
        assert_eq!(t.primes_between(0, 2).collect::<Vec<_>>(), vec![2]);
        assert_eq!(t.primes_between(2, 3).collect::<Vec<_>>(), vec![3]);
        assert!(t.primes_between(24, 28).next().is_none());
    }

    #[test]
    fn count_errors() {
        let t = PrimeTable::build(100).unwrap();
        assert_eq!(t.count(1.0).unwrap(), 0);
        assert_eq!(t.count(100.0).unwrap(), 25);
        assert!(matches!(t.count(101.0), Err(Error::TableExhausted { required: 101, limit: 100 })));
        assert!(matches!(t.count(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn limits_are_validated() {
        assert!(matches!(PrimeTable::build(1), Err(Error::Domain(_))));
        assert!(matches!(PrimeTable::build_with_cap(1000, 999), Err(Error::Resource(_))));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let (a, status) = PrimeTable::load_or_build(50_000, dir.path()).unwrap();
        assert_eq!(status, CacheStatus::Built);
        let (b, status) = PrimeTable::load_or_build(50_000, dir.path()).unwrap();
        assert_eq!(status, CacheStatus::Loaded);
        assert_eq!(a.primes().collect::<Vec<_>>(), b.primes().collect::<Vec<_>>());

        let path = cache_file(dir.path(), 50_000);
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"PTBL");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 50_000);

        fs::write(&path, &bytes[..100]).unwrap();
        let (c, status) = PrimeTable::load_or_build(50_000, dir.path()).unwrap();
        assert_eq!(status, CacheStatus::Rebuilt);
        assert_eq!(c.count(50_000.0).unwrap(), a.count(50_000.0).unwrap());
        let (_, status) = PrimeTable::load_or_build(50_000, dir.path()).unwrap();
        assert_eq!(status, CacheStatus::Loaded);
    }
}
