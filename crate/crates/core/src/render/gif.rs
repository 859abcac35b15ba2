use std::io::Cursor;

use image::codecs::gif::{GifDecoder, GifEncoder, Repeat};
use image::{AnimationDecoder, Delay, Frame, ImageFormat};
use thiserror::Error;

pub const DEFAULT_FRAME_MS: u32 = 2000;

#[derive(Debug, Error)]
pub enum GifError {
    #[error("no frames to export")]
    EmptyFrameList,
    #[error("frame {index} is {got:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (u32, u32),
        got: (u32, u32),
    },
    #[error("frame duration must be positive")]
    ZeroDuration,
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

/// Encodes equally sized PNG frames, in order, as a looping GIF with
/// `frame_ms` per frame.
pub fn export_gif(frames: &[Vec<u8>], frame_ms: u32) -> Result<Vec<u8>, GifError> {
    if frames.is_empty() {
        return Err(GifError::EmptyFrameList);
    }
    if frame_ms == 0 {
        return Err(GifError::ZeroDuration);
    }
    let images = frames
        .iter()
        .map(|png| image::load_from_memory_with_format(png, ImageFormat::Png).map(|i| i.to_rgba8()))
        .collect::<Result<Vec<_>, _>>()?;
    let expected = images[0].dimensions();
    if let Some((index, img)) = images.iter().enumerate().find(|(_, i)| i.dimensions() != expected) {
        return Err(GifError::DimensionMismatch {
            index,
            expected,
            got: img.dimensions(),
        });
    }
    let mut out = Vec::new();
    {
        let mut enc = GifEncoder::new_with_speed(&mut out, 10);
        enc.set_repeat(Repeat::Infinite)?;
        let delay = Delay::from_numer_denom_ms(frame_ms, 1);
        enc.encode_frames(images.into_iter().map(|i| Frame::from_parts(i, 0, 0, delay)))?;
    }
    Ok(out)
}

/// Number of frames in GIF bytes.
pub fn gif_frame_count(gif: &[u8]) -> Result<usize, GifError> {
    let dec = GifDecoder::new(Cursor::new(gif))?;
    Ok(dec.into_frames().collect_frames()?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgba, RgbaImage};

    fn png(w: u32, h: u32, shade: u8) -> Vec<u8> {
        let mut out = Vec::new();
        RgbaImage::from_pixel(w, h, Rgba([shade, 0, 0, 255]))
            .write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
            .unwrap();
        out
    }

    #[test]
    fn one_gif_frame_per_png() {
        let gif = export_gif(&[png(8, 6, 0), png(8, 6, 120), png(8, 6, 250)], 500).unwrap();
        assert_eq!(gif_frame_count(&gif).unwrap(), 3);
        let frames = GifDecoder::new(Cursor::new(&gif)).unwrap().into_frames().collect_frames().unwrap();
        assert_eq!(frames[1].delay().numer_denom_ms(), (500, 1));
    }

    #[test]
    fn rejects_empty_and_mismatched_frames() {
        assert!(matches!(export_gif(&[], 100), Err(GifError::EmptyFrameList)));
        assert!(matches!(
            export_gif(&[png(8, 6, 0), png(9, 6, 0)], 100),
            Err(GifError::DimensionMismatch { index: 1, .. })
        ));
    }
}
