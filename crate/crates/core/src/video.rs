//! Grayscale video volumes: loading, storing, motion cropping, dataset
//! manifests, and synthetic dataset generation.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// A T×H×W grayscale intensity cube, frame-major then row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoVolume {
    frames: usize,
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl VideoVolume {
    pub fn new(frames: usize, height: usize, width: usize, data: Vec<u8>) -> Self {
        assert!(frames >= 1 && height >= 1 && width >= 1, "empty volume");
        assert_eq!(data.len(), frames * height * width, "data length mismatch");
        VideoVolume {
            frames,
            height,
            width,
            data,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.frames, self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> u8 {
        self.data[(t * self.height + y) * self.width + x]
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.data[t * n..(t + 1) * n]
    }
}

const DTVOL_MAGIC: &[u8; 4] = b"DTV1";

/// Load a volume from a `.dtvol` file or a directory of P5 (binary PGM) frames.
pub fn load_volume(path: &Path) -> Result<VideoVolume> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    if path.is_dir() {
        load_frame_directory(path)
    } else {
        load_dtvol(path)
    }
}

fn load_dtvol(path: &Path) -> Result<VideoVolume> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 || &bytes[0..4] != DTVOL_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "DTV1".into(),
        });
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if t == 0 || h == 0 || w == 0 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("zero dimension in header (T={t}, H={h}, W={w})"),
        });
    }
    let expected = t * h * w;
    let payload = &bytes[16..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    Ok(VideoVolume::new(t, h, w, payload[..expected].to_vec()))
}

/// Write a volume in the `.dtvol` format (magic, u32 LE T/H/W, raw bytes).
pub fn save_volume(v: &VideoVolume, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(DTVOL_MAGIC)?;
    f.write_all(&(v.frames as u32).to_le_bytes())?;
    f.write_all(&(v.height as u32).to_le_bytes())?;
    f.write_all(&(v.width as u32).to_le_bytes())?;
    f.write_all(&v.data)?;
    Ok(())
}

fn load_frame_directory(dir: &Path) -> Result<VideoVolume> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames: Vec<Vec<u8>> = Vec::with_capacity(paths.len());
    let mut dims: Option<(usize, usize)> = None;
    for p in &paths {
        let (w, h, pixels) = load_pgm(p)?;
        match dims {
            None => dims = Some((h, w)),
            Some(d) if d != (h, w) => {
                return Err(Error::InconsistentFrames {
                    dir: dir.to_path_buf(),
                    detail: format!(
                        "{} is {}x{}, expected {}x{}",
                        p.display(),
                        w,
                        h,
                        d.1,
                        d.0
                    ),
                });
            }
            _ => {}
        }
        frames.push(pixels);
    }
    let (h, w) = dims.unwrap();
    let mut data = Vec::with_capacity(frames.len() * h * w);
    for f in &frames {
        data.extend_from_slice(f);
    }
    Ok(VideoVolume::new(frames.len(), h, w, data))
}

/// Parse a binary (P5) PGM with maxval ≤ 255. Returns (width, height, pixels).
fn load_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let header_err = |detail: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        detail: detail.into(),
    };
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(header_err("not a P5 PGM"));
    }
    // header tokens: "P5", width, height, maxval; '#' starts a comment line
    let mut pos = 2usize;
    let mut tokens = Vec::with_capacity(3);
    while tokens.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(header_err("unexpected end of header"));
        }
        tokens.push(
            std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| header_err("non-numeric header token"))?,
        );
    }
    // exactly one whitespace byte separates maxval from the raster
    pos += 1;
    let (w, h, maxval) = (tokens[0], tokens[1], tokens[2]);
    if maxval == 0 || maxval > 255 {
        return Err(header_err("maxval out of range for 8-bit grayscale"));
    }
    if w == 0 || h == 0 {
        return Err(header_err("zero image dimension"));
    }
    let expected = w * h;
    if bytes.len() < pos + expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: bytes.len().saturating_sub(pos),
        });
    }
    Ok((w, h, bytes[pos..pos + expected].to_vec()))
}

/// Write one frame as a binary PGM.
pub fn save_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{} {}\n255\n", width, height)?;
    f.write_all(pixels)?;
    Ok(())
}

/// One dataset entry: video path, class label, optional split tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u32,
    pub split: Option<String>,
}

/// List of labeled videos, the unit the experiment harness consumes.
#[derive(Debug, Clone, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Parse `path,label[,split]` lines; `#` comments and blank lines allowed.
    /// Relative paths are resolved against the manifest's directory.
    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = fs::read_to_string(path)
            .map_err(|_| Error::MissingFile(path.to_path_buf()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let raw_path = parts.next().unwrap().trim();
            let label = parts
                .next()
                .map(str::trim)
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| Error::BadManifest {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    detail: "expected `path,label[,split]`".into(),
                })?;
            let split = parts.next().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            let video_path = if Path::new(raw_path).is_absolute() {
                PathBuf::from(raw_path)
            } else {
                base.join(raw_path)
            };
            entries.push(ManifestEntry {
                path: video_path,
                label,
                split,
            });
        }
        Ok(DatasetManifest { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.path.display().to_string());
            out.push(',');
            out.push_str(&e.label.to_string());
            if let Some(s) = &e.split {
                out.push(',');
                out.push_str(s);
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Number of classes; labels must form the contiguous range 0..C.
    pub fn class_count(&self) -> Result<u32> {
        if self.entries.is_empty() {
            return Err(Error::EmptyInput("manifest has no entries".into()));
        }
        let max = self.entries.iter().map(|e| e.label).max().unwrap();
        let mut seen = vec![false; max as usize + 1];
        for e in &self.entries {
            seen[e.label as usize] = true;
        }
        if seen.iter().all(|&s| s) {
            Ok(max + 1)
        } else {
            Err(Error::BadConfig(
                "class labels are not a contiguous range starting at 0".into(),
            ))
        }
    }
}

/// Extract the contiguous sub-cube of the given size maximizing summed
/// per-pixel temporal variance. Ties break toward the smallest (t, y, x).
pub fn crop_motion_window(
    v: &VideoVolume,
    out_t: usize,
    out_h: usize,
    out_w: usize,
) -> Result<VideoVolume> {
    let (tt, hh, ww) = v.dims();
    if out_t > tt || out_h > hh || out_w > ww || out_t == 0 || out_h == 0 || out_w == 0 {
        return Err(Error::CropTooLarge {
            requested: (out_t, out_h, out_w),
            actual: (tt, hh, ww),
        });
    }

    // Motion score of a window = sum over its pixels of the variance of that
    // pixel's intensity across the window's frames. Scanned with prefix sums
    // over (sum, sum-of-squares) along t, then 2-D prefix sums per t-window.
    let mut best_score = f64::NEG_INFINITY;
    let mut best = (0usize, 0usize, 0usize);
    let plane = hh * ww;
    let nt = out_t as f64;
    // per-pixel cumulative sums over t
    let mut cum = vec![0f64; (tt + 1) * plane];
    let mut cum2 = vec![0f64; (tt + 1) * plane];
    for t in 0..tt {
        let f = v.frame(t);
        for i in 0..plane {
            let x = f[i] as f64;
            cum[(t + 1) * plane + i] = cum[t * plane + i] + x;
            cum2[(t + 1) * plane + i] = cum2[t * plane + i] + x * x;
        }
    }
    let mut var = vec![0f64; plane];
    let mut integral = vec![0f64; (hh + 1) * (ww + 1)];
    for t0 in 0..=(tt - out_t) {
        for i in 0..plane {
            let s = cum[(t0 + out_t) * plane + i] - cum[t0 * plane + i];
            let s2 = cum2[(t0 + out_t) * plane + i] - cum2[t0 * plane + i];
            var[i] = s2 / nt - (s / nt) * (s / nt);
        }
        for y in 0..hh {
            for x in 0..ww {
                integral[(y + 1) * (ww + 1) + (x + 1)] = var[y * ww + x]
                    + integral[y * (ww + 1) + (x + 1)]
                    + integral[(y + 1) * (ww + 1) + x]
                    - integral[y * (ww + 1) + x];
            }
        }
        for y0 in 0..=(hh - out_h) {
            for x0 in 0..=(ww - out_w) {
                let score = integral[(y0 + out_h) * (ww + 1) + (x0 + out_w)]
                    - integral[y0 * (ww + 1) + (x0 + out_w)]
                    - integral[(y0 + out_h) * (ww + 1) + x0]
                    + integral[y0 * (ww + 1) + x0];
                if score > best_score {
                    best_score = score;
                    best = (t0, y0, x0);
                }
            }
        }
    }

    let (t0, y0, x0) = best;
    let mut data = Vec::with_capacity(out_t * out_h * out_w);
    for t in t0..t0 + out_t {
        for y in y0..y0 + out_h {
            let row = (t * hh + y) * ww + x0;
            data.extend_from_slice(&v.data[row..row + out_w]);
        }
    }
    Ok(VideoVolume::new(out_t, out_h, out_w, data))
}

/// Parameters for the synthetic dataset generator.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub classes: usize,
    pub videos_per_class: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Standard deviation of additive Gaussian pixel noise, in intensity units.
    pub noise: f64,
}

/// One generated video with its class label.
#[derive(Debug, Clone)]
pub struct SynthVideo {
    pub volume: VideoVolume,
    pub label: u32,
}

/// Generate a labeled dataset of moving sinusoidal gratings. Each class has a
/// distinct spatial frequency, orientation, and velocity; some classes add
/// temporal flicker. Per-video variation is a random phase offset.
pub fn synth_dataset(config: &SynthConfig, seed: u64) -> Result<Vec<SynthVideo>> {
    if config.classes == 0 || config.videos_per_class == 0 {
        return Err(Error::BadConfig(
            "synth dataset needs at least one class and one video per class".into(),
        ));
    }
    let mut videos = Vec::with_capacity(config.classes * config.videos_per_class);
    for class in 0..config.classes {
        let c = class as f64;
        let freq = 0.10 + 0.002 * c;
        let orientation = c * std::f64::consts::PI / (24 * config.classes.max(2)) as f64;
        let velocity = 0.10 + 0.005 * ((class % 3) as f64);
        let flicker = if class % 2 == 1 { 0.03 } else { 0.0 };
        for vid in 0..config.videos_per_class {
            let mut rng = ChaCha12Rng::seed_from_u64(
                seed ^ (class as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    ^ (vid as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9),
            );
            let phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let (dy, dx) = (orientation.sin(), orientation.cos());
            let mut data = Vec::with_capacity(config.frames * config.height * config.width);
            for t in 0..config.frames {
                let tf = t as f64;
                let flick = 1.0 + flicker * (std::f64::consts::TAU * 0.11 * tf).sin();
                for y in 0..config.height {
                    for x in 0..config.width {
                        let arg = std::f64::consts::TAU
                            * (freq * (dx * x as f64 + dy * y as f64) + velocity * tf)
                            + phase;
                        let mut val = 128.0 + 90.0 * flick * arg.sin();
                        if config.noise > 0.0 {
                            let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                            let gauss =
                                (-2.0 * u1.max(1e-300).ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                            val += config.noise * gauss;
                        }
                        data.push(val.round().clamp(0.0, 255.0) as u8);
                    }
                }
            }
            videos.push(SynthVideo {
                volume: VideoVolume::new(config.frames, config.height, config.width, data),
                label: class as u32,
            });
        }
    }
    Ok(videos)
}

/// Write a synthetic dataset to `dir` as `.dtvol` files plus a manifest.
pub fn write_synth_dataset(videos: &[SynthVideo], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut manifest = DatasetManifest::default();
    for (i, v) in videos.iter().enumerate() {
        let name = format!("video_{i:04}.dtvol");
        save_volume(&v.volume, &dir.join(&name))?;
        manifest.entries.push(ManifestEntry {
            path: PathBuf::from(name),
            label: v.label,
            split: None,
        });
    }
    let manifest_path = dir.join("manifest.txt");
    manifest.save(&manifest_path)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dtvol_raster_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.dtvol");
        let v = VideoVolume::new(2, 2, 2, (0..8).collect());
        save_volume(&v, &p).unwrap();
        let loaded = load_volume(&p).unwrap();
        assert_eq!(loaded.get(1, 1, 1), 7);
        assert_eq!(loaded, v);
    }

    #[test]
    fn dtvol_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.dtvol");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DTV1");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0, 1, 2]); // 3 of 8 bytes
        fs::write(&p, bytes).unwrap();
        match load_volume(&p) {
            Err(Error::TruncatedPayload { expected, found, .. }) => {
                assert_eq!(expected, 8);
                assert_eq!(found, 3);
            }
            other => panic!("expected truncated payload error, got {other:?}"),
        }
    }

    #[test]
    fn dtvol_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.dtvol");
        fs::write(&p, b"NOPE aaaaaaaaaaaaaaaa").unwrap();
        assert!(matches!(load_volume(&p), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn missing_file_is_distinct() {
        assert!(matches!(
            load_volume(Path::new("/nonexistent/v.dtvol")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn pgm_directory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = 5usize;
        let (h, w) = (4usize, 3usize);
        for t in 0..frames {
            let pixels: Vec<u8> = (0..h * w).map(|i| (t * 10 + i) as u8).collect();
            save_pgm(&dir.path().join(format!("f{t:03}.pgm")), w, h, &pixels).unwrap();
        }
        let v = load_volume(dir.path()).unwrap();
        assert_eq!(v.dims(), (frames, h, w));
        assert_eq!(v.get(2, 1, 2), 25);
    }

    #[test]
    fn pgm_inconsistent_sizes() {
        let dir = tempfile::tempdir().unwrap();
        save_pgm(&dir.path().join("a.pgm"), 3, 3, &[0; 9]).unwrap();
        save_pgm(&dir.path().join("b.pgm"), 2, 2, &[0; 4]).unwrap();
        assert!(matches!(
            load_volume(dir.path()),
            Err(Error::InconsistentFrames { .. })
        ));
    }

    #[test]
    fn empty_directory_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_volume(dir.path()),
            Err(Error::EmptyDirectory(_))
        ));
    }

    #[test]
    fn crop_static_video_picks_origin() {
        let frame: Vec<u8> = (0..25).collect();
        let mut data = Vec::new();
        for _ in 0..4 {
            data.extend_from_slice(&frame);
        }
        let v = VideoVolume::new(4, 5, 5, data);
        let c = crop_motion_window(&v, 2, 3, 3).unwrap();
        assert_eq!(c.dims(), (2, 3, 3));
        assert_eq!(c.get(0, 0, 0), v.get(0, 0, 0));
        assert_eq!(c.get(1, 2, 2), v.get(1, 2, 2));
    }

    #[test]
    fn crop_too_large_errors() {
        let v = VideoVolume::new(2, 2, 2, vec![0; 8]);
        assert!(matches!(
            crop_motion_window(&v, 3, 2, 2),
            Err(Error::CropTooLarge { .. })
        ));
    }

    /// Brute-force oracle: recompute window scores for every corner directly.
    fn brute_force_best_corner(
        v: &VideoVolume,
        out_t: usize,
        out_h: usize,
        out_w: usize,
    ) -> (usize, usize, usize) {
        let (tt, hh, ww) = v.dims();
        let mut best = (f64::NEG_INFINITY, (0, 0, 0));
        for t0 in 0..=(tt - out_t) {
            for y0 in 0..=(hh - out_h) {
                for x0 in 0..=(ww - out_w) {
                    let mut score = 0.0;
                    for y in y0..y0 + out_h {
                        for x in x0..x0 + out_w {
                            let vals: Vec<f64> = (t0..t0 + out_t)
                                .map(|t| v.get(t, y, x) as f64)
                                .collect();
                            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                            score += vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                                / vals.len() as f64;
                        }
                    }
                    if score > best.0 + 1e-9 {
                        best = (score, (t0, y0, x0));
                    }
                }
            }
        }
        best.1
    }

    #[test]
    fn crop_matches_brute_force_oracle() {
        let mut rng_state = 123456789u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as u8
        };
        for (dims, out) in [((8, 8, 8), (4, 4, 4)), ((6, 10, 7), (3, 5, 4))] {
            let (tt, hh, ww) = dims;
            let mut data: Vec<u8> = (0..tt * hh * ww).map(|_| next() % 8).collect();
            // inject motion in one region so the argmax is non-trivial
            for t in 0..tt {
                for y in hh / 2..hh {
                    for x in ww / 2..ww {
                        data[(t * hh + y) * ww + x] = ((t * 97 + y * 13 + x * 7) % 256) as u8;
                    }
                }
            }
            let v = VideoVolume::new(tt, hh, ww, data);
            let expected = brute_force_best_corner(&v, out.0, out.1, out.2);
            let got = crop_motion_window(&v, out.0, out.1, out.2).unwrap();
            for dt in 0..out.0 {
                for dy in 0..out.1 {
                    for dx in 0..out.2 {
                        assert_eq!(
                            got.get(dt, dy, dx),
                            v.get(expected.0 + dt, expected.1 + dy, expected.2 + dx)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn synth_counts_and_determinism() {
        let cfg = SynthConfig {
            classes: 4,
            videos_per_class: 5,
            frames: 10,
            height: 12,
            width: 12,
            noise: 3.0,
        };
        let a = synth_dataset(&cfg, 7).unwrap();
        let b = synth_dataset(&cfg, 7).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a.iter().filter(|v| v.label == 3).count(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.volume, y.volume);
            assert_eq!(x.label, y.label);
        }
        let c = synth_dataset(&cfg, 8).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.volume != y.volume));
    }

    #[test]
    fn synth_zero_classes_errors() {
        let cfg = SynthConfig {
            classes: 0,
            videos_per_class: 1,
            frames: 4,
            height: 4,
            width: 4,
            noise: 0.0,
        };
        assert!(synth_dataset(&cfg, 0).is_err());
    }

    #[test]
    fn manifest_roundtrip_and_classes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        fs::write(&p, "# comment\na.dtvol,0,train\nb.dtvol,1\n\nc.dtvol,2,test\n").unwrap();
        let m = DatasetManifest::load(&p).unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.class_count().unwrap(), 3);
        assert_eq!(m.entries[0].split.as_deref(), Some("train"));
        assert_eq!(m.entries[0].path, dir.path().join("a.dtvol"));
    }

    #[test]
    fn manifest_noncontiguous_labels_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        fs::write(&p, "a.dtvol,0\nb.dtvol,2\n").unwrap();
        let m = DatasetManifest::load(&p).unwrap();
        assert!(m.class_count().is_err());
    }
}
