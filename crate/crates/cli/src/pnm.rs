//! Binary PGM (P5) and PPM (P6) images with 8-bit samples, and directories
//! of numbered PGM frames. Samples map to `[0, 1]` as `v/maxval`.

use std::fs;
use std::path::{Path, PathBuf};

use chebshrink::DenseMat;

use crate::error::CliError;

/// One `height×width` matrix per channel (1 for PGM, 3 for PPM).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub channels: Vec<DenseMat>,
}

impl Image {
    pub fn gray(m: DenseMat) -> Self {
        Self { channels: vec![m] }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.channels[0].shape()
    }
}

fn malformed(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Parses a PNM header. Returns `(magic, width, height, maxval, offset)`.
fn header(path: &Path, bytes: &[u8]) -> Result<(u8, usize, usize, usize, usize), CliError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return Err(malformed(path, "not a binary PGM (P5) or PPM (P6) file"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, "bad header field"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(malformed(path, "header must end with one whitespace byte"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed(path, "empty image"));
    }
    if !(1..=255).contains(&maxval) {
        return Err(malformed(path, format!("only 8-bit samples are supported, maxval is {maxval}")));
    }
    Ok((bytes[1], width, height, maxval, pos + 1))
}

pub fn read_image(path: &Path) -> Result<Image, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (magic, width, height, maxval, offset) = header(path, &bytes)?;
    let nc = if magic == b'5' { 1 } else { 3 };
    let data = &bytes[offset..];
    if data.len() < width * height * nc {
        return Err(malformed(path, "truncated pixel data"));
    }
    let channels = (0..nc)
        .map(|c| DenseMat::from_fn(height, width, |i, j| data[(i * width + j) * nc + c] as f64 / maxval as f64))
        .collect();
    Ok(Image { channels })
}

/// Writes P5 for one channel and P6 for three; values are clamped to
/// `[0, 1]` and rounded to 8 bits.
pub fn write_image(path: &Path, img: &Image) -> Result<(), CliError> {
    let nc = img.channels.len();
    let magic = match nc {
        1 => "P5",
        3 => "P6",
        _ => return Err(CliError::Usage(format!("cannot write an image with {nc} channels"))),
    };
    let (h, w) = img.shape();
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * nc);
    for i in 0..h {
        for j in 0..w {
            for ch in &img.channels {
                out.push((ch[(i, j)].clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Observation mask from a PGM: nonzero pixels are observed. Row-major.
pub fn read_mask(path: &Path) -> Result<Vec<bool>, CliError> {
    let img = read_image(path)?;
    if img.channels.len() != 1 {
        return Err(malformed(path, "mask must be a PGM"));
    }
    Ok(img.channels[0].as_slice().iter().map(|&v| v > 0.0).collect())
}

pub fn write_mask(path: &Path, rows: usize, cols: usize, observed: &[bool]) -> Result<(), CliError> {
    let m = DenseMat::from_fn(rows, cols, |i, j| if observed[i * cols + j] { 1.0 } else { 0.0 });
    write_image(path, &Image::gray(m))
}

/// PGM files in `dir` whose stem is a number, ordered numerically.
fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut frames: Vec<(u64, PathBuf)> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .filter_map(|p| Some((p.file_stem()?.to_str()?.parse().ok()?, p)))
        .collect();
    frames.sort();
    Ok(frames.into_iter().map(|(_, p)| p).collect())
}

/// Reads numbered frames into a `pixels × frames` matrix, each frame
/// vectorized column-major. Returns the matrix and the frame shape.
pub fn read_frames(dir: &Path) -> Result<(DenseMat, (usize, usize)), CliError> {
    let paths = frame_paths(dir)?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no numbered .pgm frames in {}", dir.display())));
    }
    let mut shape = None;
    let mut cols = Vec::with_capacity(paths.len());
    for p in &paths {
        let img = read_image(p)?;
        if img.channels.len() != 1 {
            return Err(malformed(p, "frames must be PGM"));
        }
        let s = img.shape();
        if *shape.get_or_insert(s) != s {
            return Err(malformed(p, format!("frame is {}x{}, expected {:?}", s.0, s.1, shape.unwrap())));
        }
        let f = &img.channels[0];
        cols.push((0..s.1).flat_map(|j| (0..s.0).map(move |i| f[(i, j)])).collect::<Vec<_>>());
    }
    let (h, w) = shape.unwrap();
    let frames = DenseMat::from_fn(h * w, cols.len(), |p, k| cols[k][p]);
    Ok((frames, (h, w)))
}

/// Writes each column of `frames` as `dir/NNNN.pgm`, mapping values through
/// `f` first.
pub fn write_frames(dir: &Path, frames: &DenseMat, shape: (usize, usize), f: impl Fn(f64) -> f64) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let (h, w) = shape;
    let digits = frames.cols().saturating_sub(1).to_string().len().max(4);
    for k in 0..frames.cols() {
        let img = DenseMat::from_fn(h, w, |i, j| f(frames[(j * h + i, k)]));
        write_image(&dir.join(format!("{k:0digits$}.pgm")), &Image::gray(img))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantized(h: usize, w: usize, seed: usize) -> DenseMat {
        DenseMat::from_fn(h, w, |i, j| ((i * 31 + j * 17 + seed * 7) % 256) as f64 / 255.0)
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let gray = Image::gray(quantized(5, 7, 0));
        let color = Image {
            channels: (0..3).map(|c| quantized(4, 3, c)).collect(),
        };
        for (name, img) in [("g.pgm", &gray), ("c.ppm", &color)] {
            let p = dir.path().join(name);
            write_image(&p, img).unwrap();
            assert_eq!(&read_image(&p).unwrap(), img);
        }
    }

    #[test]
    fn header_comments_and_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        fs::write(&p, b"P5\n# comment\n2 1\n# more\n100\n\x00\x64").unwrap();
        let img = read_image(&p).unwrap();
        assert_eq!(img.channels[0].as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let cases: [&[u8]; 4] = [b"P2\n1 1\n255\n0", b"P5\n2 2\n255\n\x00", b"P5\n1 1\n65535\n\x00\x00", b"P5\n0 1\n255\n"];
        for (i, bytes) in cases.iter().enumerate() {
            let p = dir.path().join(format!("{i}.pgm"));
            fs::write(&p, bytes).unwrap();
            assert!(matches!(read_image(&p), Err(CliError::Format { .. })), "case {i}");
        }
    }

    #[test]
    fn frames_round_trip_in_numeric_order() {
        let dir = tempfile::tempdir().unwrap();
        let frames = DenseMat::from_fn(6, 12, |p, k| ((p + 3 * k) % 256) as f64 / 255.0);
        write_frames(dir.path(), &frames, (3, 2), |v| v).unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let (back, shape) = read_frames(dir.path()).unwrap();
        assert_eq!(shape, (3, 2));
        assert_eq!(back, frames);
        assert!(dir.path().join("0011.pgm").exists());
    }

    #[test]
    fn empty_frame_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_frames(dir.path()), Err(CliError::Usage(_))));
    }
}
