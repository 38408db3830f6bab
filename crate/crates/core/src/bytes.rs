//! Read-only file views and newline-aligned block slicing.
//!
//! A [`MappedBytes`] is the whole input file as an immutable byte slice, backed
//! by a shared read-only mapping where the platform allows it. Parallel readers
//! walk the view in fixed-size blocks; [`block_range`] realigns each block so
//! that it starts and ends on line boundaries and no line is seen twice.

use std::fs::File;
use std::io::{self, Read};
use std::ops::Deref;
use std::path::Path;

use memmap2::{Mmap, MmapOptions};

use crate::error::{Error, Result};
use crate::parse::find_next_line;

/// Default block size in bytes (256 KiB).
pub const DEFAULT_BLOCK_SIZE: usize = 256 * 1024;

enum Backing {
    Mapped(Mmap),
    Owned(Vec<u8>),
}

/// Immutable byte view of a file.
pub struct MappedBytes {
    backing: Backing,
}

impl MappedBytes {
    /// Wraps an in-memory buffer in the same interface as a mapped file.
    pub fn from_vec(bytes: Vec<u8>) -> Self {
        MappedBytes {
            backing: Backing::Owned(bytes),
        }
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_slice(&self) -> &[u8] {
        match &self.backing {
            Backing::Mapped(m) => m,
            Backing::Owned(v) => v,
        }
    }

    /// True when the bytes come from a live file mapping rather than a copy.
    pub fn is_mapped(&self) -> bool {
        matches!(self.backing, Backing::Mapped(_))
    }
}

impl Deref for MappedBytes {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        self.as_slice()
    }
}

impl AsRef<[u8]> for MappedBytes {
    fn as_ref(&self) -> &[u8] {
        self.as_slice()
    }
}

impl std::fmt::Debug for MappedBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MappedBytes")
            .field("len", &self.len())
            .field("mapped", &self.is_mapped())
            .finish()
    }
}

/// Maps `path` read-only and advises the kernel that the whole range will be
/// needed soon.
///
/// Empty files are returned as an empty owned buffer, since zero-length
/// mappings are rejected by some platforms. If the platform cannot map the
/// file at all the contents are read into memory instead.
pub fn map_file(path: impl AsRef<Path>) -> Result<MappedBytes> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::from_io(path, e))?;
    let meta = file.metadata().map_err(|e| Error::from_io(path, e))?;
    if !meta.is_file() {
        return Err(Error::NotAFile(path.to_path_buf()));
    }
    if meta.len() == 0 {
        return Ok(MappedBytes::from_vec(Vec::new()));
    }

    // SAFETY: the mapping is read-only. Concurrent truncation of the file by
    // another process is outside what this loader guards against, the same
    // caveat every mmap-based reader carries.
    match unsafe { MmapOptions::new().map(&file) } {
        Ok(mmap) => {
            #[cfg(unix)]
            {
                // Advisory only; failure changes nothing about correctness.
                let _ = mmap.advise(memmap2::Advice::WillNeed);
            }
            Ok(MappedBytes {
                backing: Backing::Mapped(mmap),
            })
        }
        Err(e) if e.kind() == io::ErrorKind::Unsupported => {
            let mut buf = Vec::with_capacity(meta.len() as usize);
            let mut file = file;
            file.read_to_end(&mut buf)
                .map_err(|e| Error::from_io(path, e))?;
            Ok(MappedBytes::from_vec(buf))
        }
        Err(source) => Err(Error::Mapping {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Half-open byte range `[begin, end)` covering whole lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRange {
    pub begin: usize,
    pub end: usize,
}

impl BlockRange {
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }
}

/// Returns the line-aligned block that starts at nominal offset `start` with
/// nominal size `block_size`.
///
/// The begin skips forward past a partial line (that line belongs to the
/// previous block) and the end extends forward to the next line start. When the
/// adjusted begin passes the adjusted end the block is empty.
pub fn block_range(data: &[u8], start: usize, block_size: usize) -> BlockRange {
    debug_assert!(block_size >= 1);
    let len = data.len();
    let mut begin = start.min(len);
    let mut end = start.saturating_add(block_size).min(len);
    if begin != 0 && data[begin - 1] != b'\n' {
        begin = find_next_line(data, begin, len);
    }
    if end != 0 && data[end - 1] != b'\n' {
        end = find_next_line(data, end, len);
    }
    if begin > end {
        begin = end;
    }
    BlockRange { begin, end }
}

/// Number of nominal blocks needed to cover `len` bytes.
pub fn block_count(len: usize, block_size: usize) -> usize {
    len.div_ceil(block_size)
}
