//! One pipeline process per journal directory, enforced with an advisory
//! file lock. The lock is released when the guard drops (or the process
//! dies), so a crashed run never wedges the directory.

use std::fs::{self, File, OpenOptions};
use std::path::Path;

use fs2::FileExt;

const LOCK_FILE: &str = ".pipeline.lock";

#[derive(Debug)]
pub struct JournalLock {
    file: File,
}

impl JournalLock {
    /// Fails fast if another process already holds the directory.
    pub fn acquire(dir: &Path) -> std::io::Result<JournalLock> {
        fs::create_dir_all(dir)?;
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(dir.join(LOCK_FILE))?;
        file.try_lock_exclusive().map_err(|_| {
            std::io::Error::new(
                std::io::ErrorKind::WouldBlock,
                format!(
                    "another pipeline process is already running in {}",
                    dir.display()
                ),
            )
        })?;
        Ok(JournalLock { file })
    }
}

impl Drop for JournalLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}
