//! Time-weighted mean-speed heatmaps over the room floor.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Room;
use crate::par;

use super::trajectory::TrajectoryEpisode;

pub const RAW_MAGIC: &str = "ANTHRO-HEATMAP 1";

/// Square grid over the room; row `r` covers `y ∈ [r·cell_h, (r+1)·cell_h)`.
/// Empty cells hold NaN in both fields.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub resolution: usize,
    pub cell_w: f64,
    pub cell_h: f64,
    pub sigma: f64,
    /// Σ v·Δt / Σ Δt per cell before smoothing, m/s.
    pub mean: Vec<f64>,
    pub smoothed: Vec<f64>,
}

impl HeatmapGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.mean[row * self.resolution + col]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let c = (x / self.cell_w).floor();
        let r = (y / self.cell_h).floor();
        let n = self.resolution as f64;
        (c >= 0.0 && r >= 0.0 && c < n && r < n).then(|| (r as usize, c as usize))
    }

    pub fn visited_cells(&self) -> usize {
        self.mean.iter().filter(|v| !v.is_nan()).count()
    }
}

/// Per-cell accumulators, kept separate so callers can merge episodes.
fn accumulate(episodes: &[TrajectoryEpisode], room: &Room, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let fps = episodes.first().map_or(1.0, |e| e.fps);
    for e in episodes {
        e.validate()?;
        if e.fps != fps {
            return Err(Error::Config(format!(
                "fps mismatch: episode `{}` has {} Hz, expected {fps} Hz",
                e.participant, e.fps
            )));
        }
        if e.samples.len() < 2 {
            return Err(Error::Config(format!(
                "episode `{}` needs at least two samples",
                e.participant
            )));
        }
    }
    let (cw, ch) = (room.width / n as f64, room.depth / n as f64);
    let dt = 1.0 / fps;
    let mut vdt = vec![0.0; n * n];
    let mut tdt = vec![0.0; n * n];
    for e in episodes {
        for w in e.samples.windows(2) {
            let (c, r) = ((w[0].x / cw).floor(), (w[0].y / ch).floor());
            if c < 0.0 || r < 0.0 || c >= n as f64 || r >= n as f64 {
                continue;
            }
            let v = (w[1].xy() - w[0].xy()).norm() * fps;
            let k = r as usize * n + c as usize;
            vdt[k] += v * dt;
            tdt[k] += dt;
        }
    }
    Ok((vdt, tdt))
}

fn gaussian_kernel(sigma_cells: f64) -> Vec<f64> {
    if sigma_cells <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma_cells).ceil() as i64;
    (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma_cells * sigma_cells)).exp())
        .collect()
}

fn convolve_rows(src: &[f64], n: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    par::map_range(n, |row| {
        let line = &src[row * n..(row + 1) * n];
        (0..n as i64)
            .map(|c| {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let j = c + k as i64 - r;
                    if j >= 0 && j < n as i64 {
                        acc += w * line[j as usize];
                    }
                }
                acc
            })
            .collect::<Vec<f64>>()
    })
    .concat()
}

fn transpose(src: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = src[r * n + c];
        }
    }
    out
}

fn separable(src: &[f64], n: usize, kernel: &[f64]) -> Vec<f64> {
    let rows = convolve_rows(src, n, kernel);
    transpose(&convolve_rows(&transpose(&rows, n), n, kernel), n)
}

/// Masked normalized Gaussian: visited cells average their visited
/// neighbours; empty cells stay empty.
fn smooth(mean: &[f64], n: usize, sigma_cells: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma_cells);
    let mask: Vec<f64> = mean.iter().map(|v| if v.is_nan() { 0.0 } else { 1.0 }).collect();
    let masked: Vec<f64> = mean.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
    let num = separable(&masked, n, &kernel);
    let den = separable(&mask, n, &kernel);
    (0..n * n)
        .map(|k| if mask[k] == 0.0 { f64::NAN } else { num[k] / den[k] })
        .collect()
}

/// Mean speed per cell: `v = ‖x_{t+1} − x_t‖·fps`, binned in the cell of
/// `x_t`, weighted by `Δt = 1/fps`, then smoothed with a masked Gaussian of
/// `sigma` meters.
pub fn mean_speed_heatmap(
    episodes: &[TrajectoryEpisode],
    room: &Room,
    resolution: usize,
    sigma: f64,
) -> Result<HeatmapGrid> {
    if resolution == 0 || !room.is_valid() {
        return Err(Error::Config("heatmap needs a valid room and resolution > 0".into()));
    }
    let n = resolution;
    let (vdt, tdt) = accumulate(episodes, room, n)?;
    let mean: Vec<f64> = vdt
        .iter()
        .zip(&tdt)
        .map(|(v, t)| if *t > 0.0 { v / t } else { f64::NAN })
        .collect();
    let (cw, ch) = (room.width / n as f64, room.depth / n as f64);
    // Cells may be slightly non-square; use the mean cell size.
    let sigma_cells = sigma / (0.5 * (cw + ch));
    let smoothed = smooth(&mean, n, sigma_cells);
    Ok(HeatmapGrid {
        resolution: n,
        cell_w: cw,
        cell_h: ch,
        sigma,
        mean,
        smoothed,
    })
}

/// 8-bit binary PGM of the smoothed field, north up. Empty cells are 0;
/// visited cells map `[0, vmax]` onto `[1, 255]`.
pub fn write_pgm(grid: &HeatmapGrid, vmax: Option<f64>, out: &mut impl Write) -> Result<()> {
    let n = grid.resolution;
    let vmax = vmax.unwrap_or_else(|| grid.smoothed.iter().filter(|v| !v.is_nan()).fold(0.0, |a, b| a.max(*b)));
    write!(out, "P5\n{n} {n}\n255\n")?;
    let mut bytes = Vec::with_capacity(n * n);
    for r in (0..n).rev() {
        for c in 0..n {
            let v = grid.smoothed[r * n + c];
            bytes.push(if v.is_nan() {
                0u8
            } else if vmax > 0.0 {
                (1.0 + 254.0 * (v / vmax).clamp(0.0, 1.0)).round() as u8
            } else {
                1
            });
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}

/// Text header, then `resolution²` little-endian f64 of the smoothed field,
/// row-major from the south-west cell, NaN for empty cells.
pub fn write_raw(grid: &HeatmapGrid, out: &mut impl Write) -> Result<()> {
    let n = grid.resolution;
    write!(
        out,
        "{RAW_MAGIC}\nrows {n}\ncols {n}\ncell_w {}\ncell_h {}\nsigma {}\norder row_major_south_to_north\nend\n",
        grid.cell_w, grid.cell_h, grid.sigma
    )?;
    for v in &grid.smoothed {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a dump written by [`write_raw`]; returns `(rows, cols, values)`.
pub fn read_raw(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut rows = None;
    let mut cols = None;
    let mut pos = 0;
    let mut first = true;
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| Error::Format("truncated heatmap header".into()))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| Error::Format("bad header".into()))?;
        pos += end + 1;
        if first {
            if line != RAW_MAGIC {
                return Err(Error::Format(format!("expected `{RAW_MAGIC}`, got `{line}`")));
            }
            first = false;
            continue;
        }
        match line.split_once(' ') {
            Some(("rows", v)) => rows = v.parse().ok(),
            Some(("cols", v)) => cols = v.parse().ok(),
            _ if line == "end" => break,
            _ => {}
        }
    }
    let (rows, cols): (usize, usize) = rows.zip(cols).ok_or_else(|| Error::Format("missing rows/cols".into()))?;
    let body = &bytes[pos..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Format("heatmap body size does not match header".into()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((rows, cols, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::trajectory::Sample;
    use proptest::prelude::*;

    fn line(speed: f64, fps: f64, frames: usize, y: f64) -> TrajectoryEpisode {
        let samples = (0..frames)
            .map(|k| Sample::new(k as f64 / fps, 0.3 + speed * k as f64 / fps, y))
            .collect();
        TrajectoryEpisode::new("p", fps, samples)
    }

    fn room() -> Room {
        Room::new(5.5, 5.5, 2.5)
    }

    #[test]
    fn stationary_is_zero() {
        let samples = (0..10).map(|k| Sample::new(k as f64 * 0.1, 2.0, 2.0)).collect();
        let g = mean_speed_heatmap(&[TrajectoryEpisode::new("p", 10.0, samples)], &room(), 64, 0.01).unwrap();
        assert_eq!(g.visited_cells(), 1);
        let (r, c) = g.cell_of(2.0, 2.0).unwrap();
        assert_eq!(g.at(r, c), 0.0);
    }

    #[test]
    fn constant_speed_line() {
        let g = mean_speed_heatmap(&[line(1.0, 30.0, 120, 2.7)], &room(), 1024, 0.01).unwrap();
        assert!(g.visited_cells() > 50);
        for v in g.mean.iter().filter(|v| !v.is_nan()) {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
        for v in g.smoothed.iter().filter(|v| !v.is_nan()) {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn two_speeds_average() {
        let hold = |speed: f64| {
            // oscillate inside one coarse cell with the given step speed
            let samples = (0..11)
                .map(|k| Sample::new(k as f64 * 0.1, 1.0 + if k % 2 == 0 { 0.0 } else { 0.1 * speed }, 1.0))
                .collect();
            TrajectoryEpisode::new("p", 10.0, samples)
        };
        let g = mean_speed_heatmap(&[hold(1.0), hold(2.0)], &room(), 4, 0.0).unwrap();
        let (r, c) = g.cell_of(1.0, 1.0).unwrap();
        assert!((g.at(r, c) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fps_mismatch() {
        assert!(mean_speed_heatmap(&[line(1.0, 30.0, 5, 1.0), line(1.0, 25.0, 5, 1.0)], &room(), 16, 0.01).is_err());
    }

    #[test]
    fn raw_round_trip_and_pgm() {
        let g = mean_speed_heatmap(&[line(1.0, 30.0, 60, 2.0)], &room(), 32, 0.2).unwrap();
        let mut buf = Vec::new();
        write_raw(&g, &mut buf).unwrap();
        let (r, c, v) = read_raw(&buf).unwrap();
        assert_eq!((r, c), (32, 32));
        assert!(v.iter().zip(&g.smoothed).all(|(a, b)| a.to_bits() == b.to_bits()));
        let mut pgm = Vec::new();
        write_pgm(&g, None, &mut pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n32 32\n255\n"));
        assert_eq!(pgm.len(), 13 + 32 * 32);
    }

    proptest! {
        #[test]
        fn splitting_an_episode_keeps_cell_means(cut in 1usize..38, seed in 0u64..1000) {
            let samples: Vec<Sample> = (0..40)
                .map(|k| {
                    let a = (k as f64 * 0.37 + seed as f64).sin();
                    Sample::new(k as f64 / 10.0, 2.0 + 1.5 * a, 2.0 + 0.1 * k as f64)
                })
                .collect();
            let whole = TrajectoryEpisode::new("p", 10.0, samples.clone());
            let first = TrajectoryEpisode::new("p", 10.0, samples[..=cut].to_vec());
            let second = TrajectoryEpisode::new("p", 10.0, samples[cut..].to_vec());
            let a = mean_speed_heatmap(&[whole], &room(), 128, 0.0).unwrap();
            let b = mean_speed_heatmap(&[first, second], &room(), 128, 0.0).unwrap();
            for (x, y) in a.mean.iter().zip(&b.mean) {
                prop_assert!(x.is_nan() == y.is_nan());
                if !x.is_nan() {
                    prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }
}
