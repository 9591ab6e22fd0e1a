//! Compositing a rendered object over a background and extracting the
//! dilated contour band handed to an external inpainter.

use std::path::Path;

use crate::render::{ImageRgb, ImageRgba};
use crate::{Error, Result};

/// Binary mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<bool>,
}

impl MaskImage {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![false; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Every set pixel of `self` is set in `other`.
    pub fn is_subset_of(&self, other: &MaskImage) -> bool {
        self.pixels.iter().zip(&other.pixels).all(|(&a, &b)| !a || b)
    }

    /// Single-channel PNG, 0 or 255.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let raw: Vec<u8> = self.pixels.iter().map(|&p| if p { 255 } else { 0 }).collect();
        image::save_buffer(path, &raw, self.width as u32, self.height as u32, image::ColorType::L8)?;
        Ok(())
    }
}

/// `out = α·fg + (1 − α)·bg` per channel with straight alpha.
pub fn alpha_composite(fg: &ImageRgba, bg: &ImageRgb) -> Result<ImageRgb> {
    bg.check_size(fg.width, fg.height)?;
    let pixels = fg
        .pixels
        .iter()
        .zip(&bg.pixels)
        .map(|(f, b)| {
            let a = f[3];
            [0, 1, 2].map(|c| a * f[c] + (1.0 - a) * b[c])
        })
        .collect();
    Ok(ImageRgb { width: fg.width, height: fg.height, pixels })
}

/// Band of width `radius` around the object's contour.
///
/// Alpha is binarized at `threshold` (`α ≥ threshold` is inside). Contour
/// pixels are inside pixels with at least one outside 4-neighbor; the mask
/// is the contour dilated by a disk of the given radius.
pub fn boundary_mask(alpha: &[f32], width: usize, height: usize, threshold: f32, radius: usize) -> Result<MaskImage> {
    if alpha.len() != width * height {
        return Err(Error::arg("alpha length does not match dimensions"));
    }
    let inside: Vec<bool> = alpha.iter().map(|&a| a >= threshold).collect();
    let at = |x: usize, y: usize| inside[y * width + x];
    let mut mask = MaskImage::empty(width, height);
    let r = radius as isize;
    let disk: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect();
    for y in 0..height {
        for x in 0..width {
            if !at(x, y) {
                continue;
            }
            let contour = (x > 0 && !at(x - 1, y))
                || (x + 1 < width && !at(x + 1, y))
                || (y > 0 && !at(x, y - 1))
                || (y + 1 < height && !at(x, y + 1));
            if !contour {
                continue;
            }
            for &(dx, dy) in &disk {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                    mask.pixels[ny as usize * width + nx as usize] = true;
                }
            }
        }
    }
    Ok(mask)
}
