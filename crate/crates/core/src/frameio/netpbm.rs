use std::path::{Path, PathBuf};

use super::{color::yuv_from_rgb, Chroma, Frame, FrameIoError, Result, MAX_DIMENSION};

fn malformed(msg: &str) -> FrameIoError {
    FrameIoError::MalformedNetpbm(msg.to_owned())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.data.get(self.pos) {
            if c == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos || self.pos - start > 9 {
            return Err(malformed("expected a decimal header field"));
        }
        Ok(std::str::from_utf8(&self.data[start..self.pos])
            .unwrap()
            .parse()
            .unwrap())
    }
}

/// Decodes one binary PGM (P5) or PPM (P6) image with max value 255. PGM
/// input gets neutral chroma; PPM is converted to full-range 4:4:4 YUV.
pub fn parse_netpbm(data: &[u8], index: usize) -> Result<Frame> {
    let channels = match data.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(malformed("expected P5 or P6 magic")),
    };
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(malformed("bad dimensions"));
    }
    if maxval != 255 {
        return Err(malformed("only 8-bit images (max value 255) are supported"));
    }
    match data.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(malformed("missing whitespace after header")),
    }
    let n = width * height;
    let body = data
        .get(cur.pos..cur.pos + n * channels)
        .ok_or_else(|| malformed("pixel data is truncated"))?;
    if channels == 1 {
        return Frame::from_luma(index, width, height, body.to_vec());
    }
    let (mut y, mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for px in body.chunks_exact(3) {
        let [py, pu, pv] = yuv_from_rgb(px[0], px[1], px[2]);
        y.push(py);
        u.push(pu);
        v.push(pv);
    }
    Frame::from_planes(index, width, height, Chroma::C444, y, u, v)
}

fn wildcard_match(pattern: &[u8], name: &[u8]) -> bool {
    match (pattern.first(), name.first()) {
        (None, None) => true,
        (Some(b'*'), _) => {
            wildcard_match(&pattern[1..], name) || (!name.is_empty() && wildcard_match(pattern, &name[1..]))
        }
        (Some(b'?'), Some(_)) => wildcard_match(&pattern[1..], &name[1..]),
        (Some(p), Some(n)) if p == n => wildcard_match(&pattern[1..], &name[1..]),
        _ => false,
    }
}

fn is_netpbm(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

/// Files matching `pattern`, sorted by name. The pattern is either a
/// directory (every `.pgm`/`.ppm`/`.pnm` inside) or a path whose final
/// component may contain `*` and `?`.
fn matching_files(pattern: &str) -> Result<Vec<PathBuf>> {
    let path = Path::new(pattern);
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let p = entry?.path();
            if p.is_file() && is_netpbm(&p) {
                files.push(p);
            }
        }
    } else {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let name_pattern = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| FrameIoError::NoFilesMatched(pattern.to_owned()))?;
        if let Ok(entries) = std::fs::read_dir(&dir) {
            for entry in entries {
                let p = entry?.path();
                let matched = p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| wildcard_match(name_pattern.as_bytes(), n.as_bytes()));
                if matched && p.is_file() {
                    files.push(p);
                }
            }
        }
    }
    if files.is_empty() {
        return Err(FrameIoError::NoFilesMatched(pattern.to_owned()));
    }
    files.sort();
    Ok(files)
}

/// Frames from a sorted list of Netpbm files.
pub struct ImageSequence {
    files: std::vec::IntoIter<PathBuf>,
    next_index: usize,
    dims: Option<(usize, usize)>,
}

impl ImageSequence {
    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.len() == 0
    }
}

pub fn read_image_sequence(pattern: &str) -> Result<ImageSequence> {
    Ok(ImageSequence {
        files: matching_files(pattern)?.into_iter(),
        next_index: 0,
        dims: None,
    })
}

impl Iterator for ImageSequence {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        let path = self.files.next()?;
        let result = std::fs::read(&path)
            .map_err(FrameIoError::from)
            .and_then(|bytes| parse_netpbm(&bytes, self.next_index))
            .and_then(|frame| {
                let found = (frame.width(), frame.height());
                match self.dims {
                    Some(want) if want != found => Err(FrameIoError::InconsistentDimensions {
                        want_w: want.0,
                        want_h: want.1,
                        found_w: found.0,
                        found_h: found.1,
                    }),
                    _ => {
                        self.dims = Some(found);
                        Ok(frame)
                    }
                }
            });
        if result.is_ok() {
            self.next_index += 1;
        }
        Some(result)
    }
}
