use std::path::Path;

use crate::{Error, Result};

/// Straight-alpha RGBA image, row-major, channels in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRgba {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f32; 4]>,
}

/// RGB image, row-major, channels in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRgb {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f32; 3]>,
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl ImageRgba {
    pub fn transparent(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![[0.0; 4]; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 4] {
        self.pixels[y * self.width + x]
    }

    pub fn alpha(&self) -> Vec<f32> {
        self.pixels.iter().map(|p| p[3]).collect()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let raw: Vec<u8> = self.pixels.iter().flat_map(|p| p.map(to_u8)).collect();
        image::save_buffer(path, &raw, self.width as u32, self.height as u32, image::ColorType::Rgba8)?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.to_rgba8();
        Ok(Self {
            width: img.width() as usize,
            height: img.height() as usize,
            pixels: img.pixels().map(|p| p.0.map(|c| c as f32 / 255.0)).collect(),
        })
    }
}

impl ImageRgb {
    pub fn filled(width: usize, height: usize, color: [f32; 3]) -> Self {
        Self { width, height, pixels: vec![color; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let raw: Vec<u8> = self.pixels.iter().flat_map(|p| p.map(to_u8)).collect();
        image::save_buffer(path, &raw, self.width as u32, self.height as u32, image::ColorType::Rgb8)?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        Ok(Self {
            width: img.width() as usize,
            height: img.height() as usize,
            pixels: img.pixels().map(|p| p.0.map(|c| c as f32 / 255.0)).collect(),
        })
    }

    pub(crate) fn check_size(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::arg(format!(
                "image size {}x{} does not match {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}
