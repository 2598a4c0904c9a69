//! Frame streams: YUV4MPEG2 and Netpbm image sequences, plus the color
//! conversions used by the difference metrics.

mod color;
mod netpbm;
mod y4m;

use std::sync::OnceLock;

use thiserror::Error;

pub use color::{convert, hsv_from_rgb, rgb_from_yuv, yuv_from_rgb, ColorSpace, HsvPlanes, PlaneSet, RgbPlanes};
pub use netpbm::{parse_netpbm, read_image_sequence, ImageSequence};
pub use y4m::{parse_y4m_header, Y4mReader, Y4mWriter};

/// Largest accepted frame side, in pixels.
pub const MAX_DIMENSION: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("stream does not start with the YUV4MPEG2 signature")]
    MissingSignature,
    #[error("malformed stream parameter: {0}")]
    MalformedParam(String),
    #[error("unsupported chroma tag `{0}`")]
    UnsupportedChroma(String),
    #[error("stream ended in the middle of frame {0}")]
    TruncatedFrame(usize),
    #[error("expected a FRAME marker before frame {0}")]
    BadFrameMarker(usize),
    #[error("no files matched `{0}`")]
    NoFilesMatched(String),
    #[error("malformed netpbm image: {0}")]
    MalformedNetpbm(String),
    #[error("image is {found_w}x{found_h}, sequence is {want_w}x{want_h}")]
    InconsistentDimensions {
        want_w: usize,
        want_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("plane sizes do not match the declared geometry")]
    PlaneSize,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FrameIoError>;

/// Chroma subsampling of the U and V planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chroma {
    C420,
    C422,
    C444,
}

impl Chroma {
    /// Chroma plane dimensions for a luma plane of `width`x`height`.
    pub fn plane_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Chroma::C420 => (width.div_ceil(2), height.div_ceil(2)),
            Chroma::C422 => (width.div_ceil(2), height),
            Chroma::C444 => (width, height),
        }
    }

    /// Horizontal and vertical shift from luma to chroma coordinates.
    fn shifts(self) -> (u32, u32) {
        match self {
            Chroma::C420 => (1, 1),
            Chroma::C422 => (1, 0),
            Chroma::C444 => (0, 0),
        }
    }

    pub fn y4m_tag(self) -> &'static str {
        match self {
            Chroma::C420 => "420jpeg",
            Chroma::C422 => "422",
            Chroma::C444 => "444",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamInfo {
    pub width: usize,
    pub height: usize,
    pub fps_num: u32,
    pub fps_den: u32,
    pub chroma: Chroma,
    pub frame_count_hint: Option<usize>,
}

impl StreamInfo {
    pub fn new(width: usize, height: usize, chroma: Chroma) -> Self {
        StreamInfo {
            width,
            height,
            fps_num: 25,
            fps_den: 1,
            chroma,
            frame_count_hint: None,
        }
    }

    /// Octets in one frame payload (Y + U + V).
    pub fn frame_bytes(&self) -> usize {
        let (cw, ch) = self.chroma.plane_dims(self.width, self.height);
        self.width * self.height + 2 * cw * ch
    }
}

/// One decoded frame in planar 8-bit YUV. Derived views are computed on
/// first access and cached.
#[derive(Debug, Clone)]
pub struct Frame {
    index: usize,
    width: usize,
    height: usize,
    chroma: Chroma,
    y: Vec<u8>,
    u: Vec<u8>,
    v: Vec<u8>,
    rgb: OnceLock<RgbPlanes>,
    hsv: OnceLock<HsvPlanes>,
    pub(crate) edges: OnceLock<Vec<f64>>,
}

impl Frame {
    pub fn from_planes(
        index: usize,
        width: usize,
        height: usize,
        chroma: Chroma,
        y: Vec<u8>,
        u: Vec<u8>,
        v: Vec<u8>,
    ) -> Result<Self> {
        let (cw, ch) = chroma.plane_dims(width, height);
        if width == 0 || height == 0 || y.len() != width * height || u.len() != cw * ch || v.len() != cw * ch {
            return Err(FrameIoError::PlaneSize);
        }
        Ok(Frame {
            index,
            width,
            height,
            chroma,
            y,
            u,
            v,
            rgb: OnceLock::new(),
            hsv: OnceLock::new(),
            edges: OnceLock::new(),
        })
    }

    /// A frame filled with one YUV value.
    pub fn solid(index: usize, width: usize, height: usize, chroma: Chroma, yuv: [u8; 3]) -> Self {
        let (cw, ch) = chroma.plane_dims(width, height);
        Frame::from_planes(
            index,
            width,
            height,
            chroma,
            vec![yuv[0]; width * height],
            vec![yuv[1]; cw * ch],
            vec![yuv[2]; cw * ch],
        )
        .expect("solid frame geometry")
    }

    /// Luma-only frame with neutral chroma.
    pub fn from_luma(index: usize, width: usize, height: usize, luma: Vec<u8>) -> Result<Self> {
        let n = width * height;
        Frame::from_planes(index, width, height, Chroma::C444, luma, vec![128; n], vec![128; n])
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn chroma(&self) -> Chroma {
        self.chroma
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn u(&self) -> &[u8] {
        &self.u
    }

    pub fn v(&self) -> &[u8] {
        &self.v
    }

    /// Luma plane; the gray view is the luma plane unchanged.
    pub fn gray(&self) -> &[u8] {
        &self.y
    }

    pub fn rgb(&self) -> &RgbPlanes {
        self.rgb.get_or_init(|| color::rgb_planes(self))
    }

    pub fn hsv(&self) -> &HsvPlanes {
        self.hsv.get_or_init(|| color::hsv_planes(self.rgb()))
    }

    /// Chroma samples (U, V) co-sited with luma pixel (x, y), nearest neighbor.
    pub fn chroma_at(&self, x: usize, y: usize) -> (u8, u8) {
        let (sx, sy) = self.chroma.shifts();
        let (cw, _) = self.chroma.plane_dims(self.width, self.height);
        let i = (y >> sy) * cw + (x >> sx);
        (self.u[i], self.v[i])
    }

    pub fn same_geometry(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.chroma == other.chroma
    }

    /// True when all three planes are equal, ignoring the index.
    pub fn planes_eq(&self, other: &Frame) -> bool {
        self.same_geometry(other) && self.y == other.y && self.u == other.u && self.v == other.v
    }
}
