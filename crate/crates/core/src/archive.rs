//! Deterministic POSIX ustar archives.
//!
//! Every archive produced here is a pure function of its entries and the
//! build epoch: entries are sorted by path byte order, owner ids are zeroed,
//! and every mtime is set to the epoch. Two archives of equal trees built
//! with equal epochs are byte-identical, which is what makes image digests
//! content-addressable.

use std::io::Read;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("malformed archive: {0}")]
    Malformed(String),
    #[error("invalid entry path `{0}`")]
    BadPath(String),
    #[error("archive I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// One entry of an archived tree. Paths are root-relative, `/`-separated,
/// and never begin with `/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveEntry {
    pub path: String,
    pub mode: u32,
    pub kind: EntryKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryKind {
    File(Vec<u8>),
    Dir,
    Symlink(String),
}

impl ArchiveEntry {
    pub fn file(path: impl Into<String>, mode: u32, bytes: impl Into<Vec<u8>>) -> Self {
        ArchiveEntry { path: path.into(), mode, kind: EntryKind::File(bytes.into()) }
    }

    pub fn dir(path: impl Into<String>, mode: u32) -> Self {
        ArchiveEntry { path: path.into(), mode, kind: EntryKind::Dir }
    }

    pub fn symlink(path: impl Into<String>, target: impl Into<String>) -> Self {
        ArchiveEntry { path: path.into(), mode: 0o777, kind: EntryKind::Symlink(target.into()) }
    }
}

fn check_entry_path(path: &str) -> Result<(), ArchiveError> {
    if path.is_empty() || path.starts_with('/') || path.ends_with('/') {
        return Err(ArchiveError::BadPath(path.to_string()));
    }
    for comp in path.split('/') {
        if comp.is_empty() || comp == "." || comp == ".." {
            return Err(ArchiveError::BadPath(path.to_string()));
        }
    }
    Ok(())
}

/// Serialize `entries` as a deterministic uncompressed ustar stream.
///
/// Entries are sorted by path byte order before writing; duplicate paths are
/// rejected. An empty entry list yields the canonical empty archive (two
/// zero blocks).
pub fn write_archive(entries: &[ArchiveEntry], epoch: i64) -> Result<Vec<u8>, ArchiveError> {
    let mut sorted: Vec<&ArchiveEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.path.as_bytes().cmp(b.path.as_bytes()));
    for pair in sorted.windows(2) {
        if pair[0].path == pair[1].path {
            return Err(ArchiveError::BadPath(format!("duplicate entry {}", pair[0].path)));
        }
    }

    let mtime = u64::try_from(epoch)
        .map_err(|_| ArchiveError::Malformed(format!("negative epoch {epoch}")))?;
    let mut builder = tar::Builder::new(Vec::new());
    for entry in sorted {
        check_entry_path(&entry.path)?;
        let mut header = tar::Header::new_ustar();
        header.set_uid(0);
        header.set_gid(0);
        header.set_mtime(mtime);
        header.set_mode(entry.mode & 0o7777);
        match &entry.kind {
            EntryKind::File(bytes) => {
                header.set_entry_type(tar::EntryType::Regular);
                header.set_size(bytes.len() as u64);
                builder.append_data(&mut header, &entry.path, bytes.as_slice())?;
            }
            EntryKind::Dir => {
                header.set_entry_type(tar::EntryType::Directory);
                header.set_size(0);
                builder.append_data(&mut header, format!("{}/", entry.path), &[][..])?;
            }
            EntryKind::Symlink(target) => {
                header.set_entry_type(tar::EntryType::Symlink);
                header.set_size(0);
                header
                    .set_link_name(target)
                    .map_err(|e| ArchiveError::Malformed(format!("link target: {e}")))?;
                builder.append_data(&mut header, &entry.path, &[][..])?;
            }
        }
    }
    Ok(builder.into_inner()?)
}

/// Parse an archive back into its entry list, in stream order.
pub fn read_archive(bytes: &[u8]) -> Result<Vec<ArchiveEntry>, ArchiveError> {
    if bytes.len() % 512 != 0 {
        return Err(ArchiveError::Malformed(format!(
            "length {} is not block-aligned",
            bytes.len()
        )));
    }
    let mut archive = tar::Archive::new(bytes);
    let mut out = Vec::new();
    let entries = archive
        .entries()
        .map_err(|e| ArchiveError::Malformed(e.to_string()))?;
    for entry in entries {
        let mut entry = entry.map_err(|e| ArchiveError::Malformed(e.to_string()))?;
        let path = entry
            .path()
            .map_err(|e| ArchiveError::Malformed(e.to_string()))?
            .to_string_lossy()
            .into_owned();
        let path = path.strip_suffix('/').unwrap_or(&path).to_string();
        check_entry_path(&path)?;
        let mode = entry
            .header()
            .mode()
            .map_err(|e| ArchiveError::Malformed(e.to_string()))?
            & 0o7777;
        let kind = match entry.header().entry_type() {
            tar::EntryType::Regular => {
                let mut bytes = Vec::with_capacity(entry.size() as usize);
                entry.read_to_end(&mut bytes)?;
                EntryKind::File(bytes)
            }
            tar::EntryType::Directory => EntryKind::Dir,
            tar::EntryType::Symlink => {
                let target = entry
                    .link_name()
                    .map_err(|e| ArchiveError::Malformed(e.to_string()))?
                    .ok_or_else(|| ArchiveError::Malformed("symlink without target".into()))?
                    .to_string_lossy()
                    .into_owned();
                EntryKind::Symlink(target)
            }
            other => {
                return Err(ArchiveError::Malformed(format!(
                    "unsupported entry type {other:?} for {path}"
                )))
            }
        };
        out.push(ArchiveEntry { path, mode, kind });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::sha256_hex;

    #[test]
    fn empty_archive_is_stable() {
        let a = write_archive(&[], 0).unwrap();
        let b = write_archive(&[], 12345).unwrap();
        // Two zero end-of-archive blocks; the epoch never enters an empty stream.
        assert_eq!(a.len(), 1024);
        assert_eq!(a, b);
        assert!(read_archive(&a).unwrap().is_empty());
    }

    #[test]
    fn entries_round_trip_sorted() {
        let entries = vec![
            ArchiveEntry::file("b/data.txt", 0o644, b"hello".to_vec()),
            ArchiveEntry::dir("b", 0o755),
            ArchiveEntry::file("a.txt", 0o600, b"x".to_vec()),
            ArchiveEntry::symlink("b/link", "data.txt"),
        ];
        let bytes = write_archive(&entries, 1_700_000_000).unwrap();
        let back = read_archive(&bytes).unwrap();
        let paths: Vec<&str> = back.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, vec!["a.txt", "b", "b/data.txt", "b/link"]);
        assert_eq!(back[0].mode, 0o600);
        assert_eq!(back[2].kind, EntryKind::File(b"hello".to_vec()));
        assert_eq!(back[3].kind, EntryKind::Symlink("data.txt".into()));
    }

    #[test]
    fn write_is_deterministic_regardless_of_input_order() {
        let forward = vec![
            ArchiveEntry::dir("x", 0o755),
            ArchiveEntry::file("x/f", 0o644, b"1".to_vec()),
        ];
        let reversed: Vec<ArchiveEntry> = forward.iter().rev().cloned().collect();
        let a = write_archive(&forward, 7).unwrap();
        let b = write_archive(&reversed, 7).unwrap();
        assert_eq!(sha256_hex(&a), sha256_hex(&b));
    }

    #[test]
    fn epoch_changes_the_stream() {
        let entries = vec![ArchiveEntry::file("f", 0o644, b"1".to_vec())];
        let a = write_archive(&entries, 1).unwrap();
        let b = write_archive(&entries, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn traversal_paths_are_rejected() {
        for bad in ["../x", "/abs", "a//b", "a/./b", ""] {
            let entries = vec![ArchiveEntry::file(bad, 0o644, Vec::new())];
            assert!(write_archive(&entries, 0).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn duplicate_paths_are_rejected() {
        let entries = vec![
            ArchiveEntry::file("f", 0o644, b"1".to_vec()),
            ArchiveEntry::file("f", 0o644, b"2".to_vec()),
        ];
        assert!(write_archive(&entries, 0).is_err());
    }
}
