use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;

use crate::error::{Error, IoContext, Result};

/// Decompress `src` (a `.csv.gz`) into `dest_dir`, returning the CSV path.
///
/// Output is streamed through a temporary file and renamed on success.
pub fn decompress_gz(src: &Path, dest_dir: &Path) -> Result<PathBuf> {
    let name = src
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::malformed(format!("bad source path {}", src.display())))?;
    let stem = name.strip_suffix(".gz").unwrap_or(name);
    let stem = if stem.ends_with(".csv") { stem.to_string() } else { format!("{stem}.csv") };
    fs::create_dir_all(dest_dir).at(dest_dir)?;
    let dest = dest_dir.join(&stem);
    let tmp = dest_dir.join(format!("{stem}.part"));

    let input = File::open(src).at(src)?;
    if input.metadata().at(src)?.len() == 0 {
        return Err(Error::CorruptGz {
            path: src.to_path_buf(),
            reason: "zero-length file".into(),
        });
    }
    let mut decoder = MultiGzDecoder::new(BufReader::new(input));
    let result = (|| {
        let mut out = BufWriter::new(File::create(&tmp).at(&tmp)?);
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = match decoder.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    return Err(Error::CorruptGz {
                        path: src.to_path_buf(),
                        reason: e.to_string(),
                    })
                }
            };
            out.write_all(&buf[..n]).at(&tmp)?;
        }
        out.flush().at(&tmp)?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, &dest).at(&dest)?;
    Ok(dest)
}
