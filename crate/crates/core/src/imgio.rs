//! PNG/BMP frame I/O and overlay rendering (lossless formats only).

use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::eval::EvalError;
use crate::features::Frame;
use crate::geom::Rect;

fn io_err(path: &Path, detail: impl ToString) -> EvalError {
    EvalError::Io {
        path: path.display().to_string(),
        detail: detail.to_string(),
    }
}

/// Decodes a png/bmp file into a frame with the given index.
pub fn load_frame(path: &Path, index: usize) -> Result<Frame, EvalError> {
    let img = image::open(path).map_err(|e| io_err(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Frame::new(w as usize, h as usize, img.into_raw(), index))
}

/// Encodes a frame as PNG (or BMP by extension).
pub fn save_frame(frame: &Frame, path: &Path) -> Result<(), EvalError> {
    let img = RgbImage::from_raw(
        frame.width() as u32,
        frame.height() as u32,
        frame.data().to_vec(),
    )
    .expect("frame buffer length is consistent");
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("bmp") => ImageFormat::Bmp,
        _ => ImageFormat::Png,
    };
    img.save_with_format(path, format)
        .map_err(|e| io_err(path, e))
}

/// Burns an axis-aligned rectangle outline into the frame.
pub fn draw_rect(frame: &mut Frame, rect: Rect, rgb: [u8; 3]) {
    let (w, h) = (frame.width() as isize, frame.height() as isize);
    let x0 = rect.x.round() as isize;
    let y0 = rect.y.round() as isize;
    let x1 = (rect.x + rect.w).round() as isize;
    let y1 = (rect.y + rect.h).round() as isize;
    let mut put = |x: isize, y: isize| {
        if x >= 0 && y >= 0 && x < w && y < h {
            frame.set_pixel(x as usize, y as usize, rgb);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = std::env::temp_dir().join("jsar_imgio_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("frame.png");
        let mut frame = Frame::filled(20, 14, [10, 200, 45]);
        frame.set_pixel(3, 4, [255, 0, 0]);
        save_frame(&frame, &path).unwrap();
        let back = load_frame(&path, 7).unwrap();
        assert_eq!(back.width(), 20);
        assert_eq!(back.height(), 14);
        assert_eq!(back.index(), 7);
        assert_eq!(back.data(), frame.data());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn draw_rect_marks_border() {
        let mut frame = Frame::filled(10, 10, [0, 0, 0]);
        draw_rect(&mut frame, Rect::new(2.0, 3.0, 4.0, 3.0), [255, 255, 255]);
        assert_eq!(frame.pixel(2, 3), [255, 255, 255]);
        assert_eq!(frame.pixel(6, 6), [255, 255, 255]);
        assert_eq!(frame.pixel(4, 4), [0, 0, 0]);
    }
}
