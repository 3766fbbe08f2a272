//! On-disk J-table cache: one file per (δ, accuracy), reused for any smaller
//! `pmax` by taking a prefix.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use wellgrav::quadrature::{
    build_table, delta_key, read_header, read_table, same_delta, write_table, JTable, TableSource, TABLE_VERSION,
};
use wellgrav::{Error, Result};

type Slot = Arc<Mutex<Option<Arc<JTable>>>>;

#[derive(Debug)]
pub struct DiskCache {
    dir: PathBuf,
    accuracy: f64,
    slots: Mutex<HashMap<String, Slot>>,
    builds: AtomicUsize,
    loads: AtomicUsize,
}

enum Lookup {
    Hit(JTable),
    Miss,
}

impl DiskCache {
    pub fn open(dir: &Path, accuracy: f64) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_owned(),
            accuracy,
            slots: Mutex::new(HashMap::new()),
            builds: AtomicUsize::new(0),
            loads: AtomicUsize::new(0),
        })
    }

    /// Tables computed by quadrature during this process.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::Relaxed)
    }

    /// Tables read from disk during this process.
    pub fn loads(&self) -> usize {
        self.loads.load(Ordering::Relaxed)
    }

    pub fn path_for(&self, delta: f64) -> PathBuf {
        self.dir
            .join(format!("j_delta{}_acc{:e}.tbl", delta_key(delta), self.accuracy))
    }

    fn lookup(&self, path: &Path, delta: f64, pmax: usize) -> Result<Lookup> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Lookup::Miss),
            Err(e) => return Err(e.into()),
        };
        let mut r = BufReader::new(file);
        let h = read_header(&mut r)?;
        let usable = h.version == TABLE_VERSION
            && same_delta(h.delta, delta)
            && h.accuracy == self.accuracy
            && h.pmax >= pmax;
        if !usable {
            return Ok(Lookup::Miss);
        }
        // reopen so the reader validates the whole file, header included
        let t = read_table(BufReader::new(File::open(path)?))?;
        Ok(Lookup::Hit(t))
    }

    fn store(&self, path: &Path, t: &JTable) -> Result<()> {
        // write then rename, so readers never see a half-written file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            write_table(t, &mut w)?;
            w.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    fn fetch(&self, delta: f64, pmax: usize) -> Result<JTable> {
        let path = self.path_for(delta);
        match self.lookup(&path, delta, pmax) {
            Ok(Lookup::Hit(t)) => {
                self.loads.fetch_add(1, Ordering::Relaxed);
                return Ok(t);
            }
            Ok(Lookup::Miss) => {}
            Err(Error::CorruptCache(msg)) => {
                log::warn!("{}: corrupt ({msg}); rebuilding", path.display());
            }
            Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::InvalidData => {
                log::warn!("{}: unreadable ({e}); rebuilding", path.display());
            }
            Err(e) => return Err(e),
        }
        log::info!("building J-table δ = {} up to p = {pmax}", delta_key(delta));
        let t = build_table(delta, pmax, self.accuracy)?;
        self.builds.fetch_add(1, Ordering::Relaxed);
        self.store(&path, &t)?;
        Ok(t)
    }
}

impl TableSource for DiskCache {
    fn table(&self, delta: f64, pmax: usize) -> Result<Arc<JTable>> {
        let slot = Arc::clone(
            self.slots
                .lock()
                .expect("cache index poisoned")
                .entry(delta_key(delta))
                .or_default(),
        );
        // one builder per δ; other workers wait and share the result
        let mut guard = slot.lock().expect("cache slot poisoned");
        if let Some(t) = guard.as_ref() {
            if t.pmax == pmax {
                return Ok(Arc::clone(t));
            }
            if t.pmax > pmax {
                return t.prefix(pmax).map(Arc::new);
            }
        }
        let t = Arc::new(self.fetch(delta, pmax)?);
        *guard = Some(Arc::clone(&t));
        if t.pmax > pmax {
            return t.prefix(pmax).map(Arc::new);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lookup_is_served_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let a = DiskCache::open(dir.path(), 1e-10).unwrap();
        let t1 = a.table(0.3, 12).unwrap();
        assert_eq!((a.builds(), a.loads()), (1, 0));
        let b = DiskCache::open(dir.path(), 1e-10).unwrap();
        let t2 = b.table(0.3, 12).unwrap();
        assert_eq!((b.builds(), b.loads()), (0, 1));
        assert_eq!(t1.values(), t2.values());
    }

    #[test]
    fn larger_cached_table_serves_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let big = DiskCache::open(dir.path(), 1e-10).unwrap().table(0.3, 20).unwrap();
        let c = DiskCache::open(dir.path(), 1e-10).unwrap();
        let small = c.table(0.3, 12).unwrap();
        assert_eq!(c.builds(), 0);
        assert_eq!(small.pmax, 12);
        assert_eq!(small.at(7, 11), big.at(7, 11));
    }

    #[test]
    fn smaller_cached_table_or_other_accuracy_misses() {
        let dir = tempfile::tempdir().unwrap();
        DiskCache::open(dir.path(), 1e-10).unwrap().table(0.3, 8).unwrap();
        let c = DiskCache::open(dir.path(), 1e-10).unwrap();
        c.table(0.3, 12).unwrap();
        assert_eq!(c.builds(), 1);
        let other = DiskCache::open(dir.path(), 1e-8).unwrap();
        other.table(0.3, 12).unwrap();
        assert_eq!(other.builds(), 1);
    }

    #[test]
    fn corrupt_file_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let c = DiskCache::open(dir.path(), 1e-10).unwrap();
        let good = c.table(0.3, 10).unwrap();
        std::fs::write(c.path_for(0.3), "wellgrav-jtable 1 delta=0.3 pmax=10 accuracy=1e-10\n1 2\n").unwrap();
        let again = DiskCache::open(dir.path(), 1e-10).unwrap();
        let t = again.table(0.3, 10).unwrap();
        assert_eq!(again.builds(), 1);
        assert_eq!(t.values(), good.values());
        // the rebuilt file is valid again
        let third = DiskCache::open(dir.path(), 1e-10).unwrap();
        third.table(0.3, 10).unwrap();
        assert_eq!(third.builds(), 0);
    }

    #[test]
    fn concurrent_requests_build_once() {
        use rayon::prelude::*;
        let dir = tempfile::tempdir().unwrap();
        let c = DiskCache::open(dir.path(), 1e-10).unwrap();
        (0..16).into_par_iter().for_each(|_| {
            c.table(0.7, 10).unwrap();
        });
        assert_eq!(c.builds(), 1);
    }
}
