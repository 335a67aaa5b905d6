//! Image byte streams: structural scanning, decoding, PNG encoding and XMP injection.
//!
//! Decoding itself is delegated to the `image` crate. Before handing bytes to
//! it, the container structure (PNG chunks, JPEG segments) is walked so that
//! truncation and corruption are reported with a byte offset, and so that XMP
//! packets can be replaced in place without re-encoding pixel data.

use std::io::Cursor;
use std::ops::Range;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};
use panotour_core::media::{build_xmp_packet, read_xmp_projection, ImageFormat, ProjectionMetadata};
use panotour_core::{Channels, Dimensions, EquirectImage, Raster};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";
const PNG_XMP_KEYWORD: &[u8] = b"XML:com.adobe.xmp";
const JPEG_XMP_NAMESPACE: &[u8] = b"http://ns.adobe.com/xap/1.0/\0";
const JPEG_MAX_SEGMENT: usize = 0xFFFF - 2;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("empty input")]
    Empty,
    #[error("unrecognised image format (expected PNG or JPEG signature at offset 0)")]
    UnknownFormat,
    #[error("{format:?} stream malformed at byte offset {offset}: {reason}")]
    Malformed {
        format: ImageFormat,
        offset: usize,
        reason: String,
    },
    #[error("{format:?} decoder failed: {reason}")]
    Decoder { format: ImageFormat, reason: String },
    #[error("XMP packet of {0} bytes does not fit in a single JPEG APP1 segment")]
    PacketTooLarge(usize),
}

fn malformed(format: ImageFormat, offset: usize, reason: impl Into<String>) -> DecodeError {
    DecodeError::Malformed {
        format,
        offset,
        reason: reason.into(),
    }
}

/// One PNG chunk or JPEG marker segment, as byte ranges into the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    /// PNG chunk type, or the JPEG marker as `[0xFF, marker, 0, 0]`.
    pub tag: [u8; 4],
    /// The whole block including headers and trailing CRC.
    pub span: Range<usize>,
    pub data: Range<usize>,
}

impl Block {
    pub fn is_xmp(&self, bytes: &[u8]) -> bool {
        let data = &bytes[self.data.clone()];
        match &self.tag {
            b"iTXt" => data.starts_with(PNG_XMP_KEYWORD) && data.get(PNG_XMP_KEYWORD.len()) == Some(&0),
            [0xFF, 0xE1, 0, 0] => data.starts_with(JPEG_XMP_NAMESPACE),
            _ => false,
        }
    }
}

/// Container layout of an image stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub format: ImageFormat,
    pub blocks: Vec<Block>,
}

/// Walks the container structure without decoding pixels.
pub fn scan_layout(bytes: &[u8]) -> Result<Layout, DecodeError> {
    if bytes.is_empty() {
        return Err(DecodeError::Empty);
    }
    match ImageFormat::detect(bytes) {
        Some(ImageFormat::Png) => scan_png(bytes),
        Some(ImageFormat::Jpeg) => scan_jpeg(bytes),
        None => Err(DecodeError::UnknownFormat),
    }
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn scan_png(bytes: &[u8]) -> Result<Layout, DecodeError> {
    let fmt = ImageFormat::Png;
    let mut blocks = Vec::new();
    let mut at = PNG_SIGNATURE.len();
    loop {
        if bytes.len() < at + 8 {
            return Err(malformed(fmt, at, "truncated chunk header"));
        }
        let len = be32(&bytes[at..]) as usize;
        let tag = [bytes[at + 4], bytes[at + 5], bytes[at + 6], bytes[at + 7]];
        let data = at + 8..at + 8 + len;
        let end = data.end + 4;
        if len > i32::MAX as usize || end > bytes.len() {
            return Err(malformed(fmt, at, format!("chunk {} overruns the stream", tag_name(&tag))));
        }
        if blocks.is_empty() && &tag != b"IHDR" {
            return Err(malformed(fmt, at, "first chunk is not IHDR"));
        }
        let crc = crc32fast::hash(&bytes[at + 4..data.end]);
        if crc != be32(&bytes[data.end..]) {
            return Err(malformed(fmt, data.end, format!("CRC mismatch in chunk {}", tag_name(&tag))));
        }
        blocks.push(Block {
            tag,
            span: at..end,
            data,
        });
        at = end;
        if &tag == b"IEND" {
            return Ok(Layout { format: fmt, blocks });
        }
    }
}

fn tag_name(tag: &[u8; 4]) -> String {
    String::from_utf8_lossy(tag).into_owned()
}

fn scan_jpeg(bytes: &[u8]) -> Result<Layout, DecodeError> {
    let fmt = ImageFormat::Jpeg;
    let mut blocks = vec![Block {
        tag: [0xFF, 0xD8, 0, 0],
        span: 0..2,
        data: 2..2,
    }];
    let mut at = 2;
    loop {
        if at + 2 > bytes.len() {
            return Err(malformed(fmt, at, "stream ends before EOI marker"));
        }
        if bytes[at] != 0xFF {
            return Err(malformed(fmt, at, format!("expected marker, found byte {:#04x}", bytes[at])));
        }
        let marker = bytes[at + 1];
        match marker {
            // fill bytes
            0xFF => {
                at += 1;
                continue;
            }
            0xD9 => {
                blocks.push(Block {
                    tag: [0xFF, marker, 0, 0],
                    span: at..at + 2,
                    data: at + 2..at + 2,
                });
                return Ok(Layout { format: fmt, blocks });
            }
            0x01 | 0xD0..=0xD7 => {
                at += 2;
                continue;
            }
            _ => {}
        }
        if at + 4 > bytes.len() {
            return Err(malformed(fmt, at, "truncated segment length"));
        }
        let len = u16::from_be_bytes([bytes[at + 2], bytes[at + 3]]) as usize;
        if len < 2 || at + 2 + len > bytes.len() {
            return Err(malformed(fmt, at, format!("segment {marker:#04x} overruns the stream")));
        }
        let mut end = at + 2 + len;
        blocks.push(Block {
            tag: [0xFF, marker, 0, 0],
            span: at..end,
            data: at + 4..end,
        });
        if marker == 0xDA {
            // entropy-coded data runs until the next non-RST marker
            loop {
                match memchr_ff(&bytes[end..]) {
                    None => return Err(malformed(fmt, bytes.len(), "entropy-coded data is truncated")),
                    Some(i) => {
                        let p = end + i;
                        match bytes.get(p + 1) {
                            None => return Err(malformed(fmt, p, "entropy-coded data is truncated")),
                            Some(0x00) | Some(0xD0..=0xD7) | Some(0xFF) => end = p + 1,
                            Some(_) => {
                                end = p;
                                break;
                            }
                        }
                    }
                }
            }
            let sos = blocks.last_mut().expect("just pushed");
            sos.span.end = end;
        }
        at = end;
    }
}

fn memchr_ff(b: &[u8]) -> Option<usize> {
    b.iter().position(|&x| x == 0xFF)
}

/// A decoded panorama and its source metadata.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: EquirectImage,
    pub metadata: ProjectionMetadata,
}

/// Decodes a PNG or JPEG stream into an RGB or RGBA raster.
pub fn decode_image(bytes: &[u8]) -> Result<Decoded, DecodeError> {
    let layout = scan_layout(bytes)?;
    let format = layout.format;
    let decoder_err = |e: image::ImageError| DecodeError::Decoder {
        format,
        reason: e.to_string(),
    };
    let img = ImageReader::with_format(
        Cursor::new(bytes),
        match format {
            ImageFormat::Png => image::ImageFormat::Png,
            ImageFormat::Jpeg => image::ImageFormat::Jpeg,
        },
    )
    .decode()
    .map_err(decoder_err)?;
    let raster = raster_from_dynamic(img).map_err(|reason| DecodeError::Decoder { format, reason })?;
    let metadata = ProjectionMetadata {
        projection_type: read_xmp_projection(bytes),
        byte_size: bytes.len() as u64,
        dims: raster.dims(),
        format,
    };
    Ok(Decoded {
        image: EquirectImage::with_metadata(raster, metadata.clone()),
        metadata,
    })
}

fn raster_from_dynamic(img: DynamicImage) -> Result<Raster, String> {
    let dims = Dimensions::new(img.width(), img.height()).map_err(|e| e.to_string())?;
    let (channels, pixels) = if img.color().has_alpha() {
        (Channels::Rgba, img.into_rgba8().into_raw())
    } else {
        (Channels::Rgb, img.into_rgb8().into_raw())
    };
    Raster::new(dims, channels, pixels).map_err(|e| e.to_string())
}

/// Encodes a raster as PNG. Output is a pure function of the raster.
pub fn encode_png(raster: &Raster) -> Vec<u8> {
    let mut out = Vec::new();
    let color = match raster.channels() {
        Channels::Rgb => ExtendedColorType::Rgb8,
        Channels::Rgba => ExtendedColorType::Rgba8,
    };
    let d = raster.dims();
    PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Adaptive)
        .write_image(raster.pixels(), d.width(), d.height(), color)
        .expect("in-memory PNG encoding of a consistent raster cannot fail");
    out
}

/// Encodes a raster as baseline JPEG at the given quality. Alpha is dropped.
pub fn encode_jpeg(raster: &Raster, quality: u8) -> Vec<u8> {
    let d = raster.dims();
    let rgb: Vec<u8> = match raster.channels() {
        Channels::Rgb => raster.pixels().to_vec(),
        Channels::Rgba => raster.pixels().chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
    };
    let mut out = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, quality)
        .write_image(&rgb, d.width(), d.height(), ExtendedColorType::Rgb8)
        .expect("in-memory JPEG encoding cannot fail");
    out
}

/// Returns a copy of `bytes` whose XMP packet carries `ProjectionType=value`.
///
/// Existing XMP blocks are removed, so repeated injection never accumulates
/// packets. Pixel data is copied through untouched.
pub fn inject_xmp_projection(bytes: &[u8], value: &str) -> Result<Vec<u8>, DecodeError> {
    let layout = scan_layout(bytes)?;
    let packet = build_xmp_packet(value);
    let (insert_after, block) = match layout.format {
        ImageFormat::Png => {
            let mut data = Vec::with_capacity(packet.len() + 32);
            data.extend_from_slice(PNG_XMP_KEYWORD);
            // NUL, uncompressed, method 0, empty language tag, empty translated keyword
            data.extend_from_slice(&[0, 0, 0, 0, 0]);
            data.extend_from_slice(packet.as_bytes());
            let ihdr = layout.blocks.first().expect("PNG layout starts with IHDR");
            (ihdr.span.end, png_chunk(b"iTXt", &data))
        }
        ImageFormat::Jpeg => {
            let len = JPEG_XMP_NAMESPACE.len() + packet.len();
            if len > JPEG_MAX_SEGMENT {
                return Err(DecodeError::PacketTooLarge(packet.len()));
            }
            let mut seg = vec![0xFF, 0xE1];
            seg.extend_from_slice(&((len + 2) as u16).to_be_bytes());
            seg.extend_from_slice(JPEG_XMP_NAMESPACE);
            seg.extend_from_slice(packet.as_bytes());
            // after SOI and a JFIF APP0, which readers expect first
            let after = layout
                .blocks
                .iter()
                .take(2)
                .filter(|b| b.tag[1] == 0xD8 || b.tag[1] == 0xE0)
                .map(|b| b.span.end)
                .max()
                .unwrap_or(2);
            (after, seg)
        }
    };

    let xmp: Vec<Range<usize>> = layout
        .blocks
        .iter()
        .filter(|b| b.is_xmp(bytes))
        .map(|b| b.span.clone())
        .collect();
    let mut out = Vec::with_capacity(bytes.len() + block.len());
    copy_except(&mut out, bytes, 0..insert_after, &xmp);
    out.extend_from_slice(&block);
    copy_except(&mut out, bytes, insert_after..bytes.len(), &xmp);
    Ok(out)
}

/// Copies `range` of `bytes`, skipping the `holes`, which never straddle its ends.
fn copy_except(out: &mut Vec<u8>, bytes: &[u8], range: Range<usize>, holes: &[Range<usize>]) {
    let mut at = range.start;
    for h in holes.iter().filter(|h| h.start >= range.start && h.end <= range.end) {
        out.extend_from_slice(&bytes[at..h.start]);
        at = h.end;
    }
    out.extend_from_slice(&bytes[at..range.end]);
}

fn png_chunk(tag: &[u8; 4], data: &[u8]) -> Vec<u8> {
    let mut c = Vec::with_capacity(data.len() + 12);
    c.extend_from_slice(&(data.len() as u32).to_be_bytes());
    c.extend_from_slice(tag);
    c.extend_from_slice(data);
    let crc = crc32fast::hash(&c[4..]);
    c.extend_from_slice(&crc.to_be_bytes());
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use panotour_core::media::{xmp_packets, EQUIRECTANGULAR};

    fn gradient(w: u32, h: u32, channels: Channels) -> Raster {
        Raster::from_fn(Dimensions::new(w, h).unwrap(), channels, |c, r| {
            [(c * 7) as u8, (r * 13) as u8, (c ^ r) as u8, 200]
        })
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(decode_image(&[]).unwrap_err(), DecodeError::Empty);
    }

    #[test]
    fn png_round_trip_is_exact() {
        for ch in [Channels::Rgb, Channels::Rgba] {
            let r = gradient(16, 8, ch);
            let d = decode_image(&encode_png(&r)).unwrap();
            assert_eq!(d.image.raster(), &r);
            assert_eq!(d.metadata.projection_type, None);
            assert_eq!(d.metadata.format, ImageFormat::Png);
        }
    }

    #[test]
    fn truncation_reports_an_offset() {
        let png = encode_png(&gradient(16, 8, Channels::Rgb));
        let cut = &png[..png.len() - 20];
        match decode_image(cut).unwrap_err() {
            DecodeError::Malformed { offset, .. } => assert!(offset < cut.len()),
            e => panic!("unexpected {e:?}"),
        }
        let jpg = encode_jpeg(&gradient(16, 8, Channels::Rgb), 90);
        assert!(matches!(
            decode_image(&jpg[..jpg.len() / 2]).unwrap_err(),
            DecodeError::Malformed { format: ImageFormat::Jpeg, .. }
        ));
    }

    #[test]
    fn corrupted_crc_is_located() {
        let mut png = encode_png(&gradient(4, 2, Channels::Rgb));
        let ihdr_crc = 8 + 8 + 13;
        png[ihdr_crc] ^= 1;
        assert_eq!(
            decode_image(&png).unwrap_err(),
            malformed(ImageFormat::Png, ihdr_crc, "CRC mismatch in chunk IHDR")
        );
    }

    #[test]
    fn inject_replaces_existing_packets() {
        for bytes in [
            encode_png(&gradient(16, 8, Channels::Rgba)),
            encode_jpeg(&gradient(16, 8, Channels::Rgb), 85),
        ] {
            let once = inject_xmp_projection(&bytes, "cylindrical").unwrap();
            let twice = inject_xmp_projection(&once, EQUIRECTANGULAR).unwrap();
            assert_eq!(xmp_packets(&twice).0.len(), 1);
            assert_eq!(read_xmp_projection(&twice).as_deref(), Some(EQUIRECTANGULAR));
            assert_eq!(inject_xmp_projection(&twice, EQUIRECTANGULAR).unwrap(), twice);
            let before = decode_image(&bytes).unwrap();
            let after = decode_image(&twice).unwrap();
            assert_eq!(before.image.raster(), after.image.raster());
        }
    }
}
