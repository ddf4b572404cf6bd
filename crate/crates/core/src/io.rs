//! Reading and writing rasters.
//!
//! PNG, binary PPM and uncompressed BMP are accepted on input; output is
//! always lossless (PNG or PPM, chosen by extension).

use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::color::Raster;
use crate::error::{Error, Result};

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)?;
    if !matches!(
        format,
        ImageFormat::Png | ImageFormat::Pnm | ImageFormat::Bmp
    ) {
        return Err(Error::Raster(format!(
            "{}: unsupported input format {format:?}",
            path.display()
        )));
    }
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Raster::new(w as usize, h as usize, img.into_raw())
}

pub fn write_raster(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::Raster(format!(
            "{}: output must be PNG or PPM",
            path.display()
        )));
    }
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .ok_or_else(|| Error::Raster("buffer does not match dimensions".into()))?;
    if format == ImageFormat::Pnm {
        // binary P6
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let encoder = image::codecs::pnm::PnmEncoder::new(file).with_subtype(
            image::codecs::pnm::PnmSubtype::Pixmap(image::codecs::pnm::SampleEncoding::Binary),
        );
        buf.write_with_encoder(encoder)?;
    } else {
        buf.save_with_format(path, format)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Raster {
        Raster::from_fn(16, 8, |r, c| {
            [(r * 30) as u8, (c * 15) as u8, (r * c) as u8]
        })
    }

    #[test]
    fn png_and_ppm_round_trip() {
        let dir = std::env::temp_dir().join(format!("wavemark-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for name in ["a.png", "a.ppm"] {
            let path = dir.join(name);
            write_raster(&sample(), &path).unwrap();
            assert_eq!(read_raster(&path).unwrap(), sample());
        }
        let ppm = std::fs::read(dir.join("a.ppm")).unwrap();
        assert_eq!(&ppm[..2], b"P6");
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn lossy_output_refused() {
        assert!(write_raster(&sample(), std::env::temp_dir().join("x.jpg")).is_err());
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(read_raster("/nonexistent/file.png").is_err());
    }
}
