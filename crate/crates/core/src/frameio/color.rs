use super::Frame;

/// Target of [`convert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Gray,
    Rgb,
    Hsv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbPlanes {
    pub r: Vec<u8>,
    pub g: Vec<u8>,
    pub b: Vec<u8>,
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvPlanes {
    pub h: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum PlaneSet<'a> {
    Gray(&'a [u8]),
    Rgb(&'a RgbPlanes),
    Hsv(&'a HsvPlanes),
}

pub fn convert(frame: &Frame, target: ColorSpace) -> PlaneSet<'_> {
    match target {
        ColorSpace::Gray => PlaneSet::Gray(frame.gray()),
        ColorSpace::Rgb => PlaneSet::Rgb(frame.rgb()),
        ColorSpace::Hsv => PlaneSet::Hsv(frame.hsv()),
    }
}

fn to_u8(x: f64) -> u8 {
    (x.clamp(0.0, 255.0) + 0.5).floor() as u8
}

/// Full-range BT.601 inverse, rounded half-up.
pub fn rgb_from_yuv(y: u8, u: u8, v: u8) -> [u8; 3] {
    let (y, u, v) = (f64::from(y), f64::from(u) - 128.0, f64::from(v) - 128.0);
    [
        to_u8(y + 1.402 * v),
        to_u8(y - 0.344136 * u - 0.714136 * v),
        to_u8(y + 1.772 * u),
    ]
}

/// Full-range BT.601 forward transform.
pub fn yuv_from_rgb(r: u8, g: u8, b: u8) -> [u8; 3] {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    [
        to_u8(0.299 * r + 0.587 * g + 0.114 * b),
        to_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
        to_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b),
    ]
}

/// Achromatic pixels get hue 0.
pub fn hsv_from_rgb(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = f64::from(max) / 255.0;
    if max == 0 {
        return (0.0, 0.0, v);
    }
    let delta = f64::from(max - min);
    let s = delta / f64::from(max);
    if max == min {
        return (0.0, s, v);
    }
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let mut h = if max == r {
        60.0 * ((gf - bf) / delta)
    } else if max == g {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    (h, s, v)
}

pub(super) fn rgb_planes(frame: &Frame) -> RgbPlanes {
    let n = frame.width() * frame.height();
    let mut out = RgbPlanes {
        r: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
    };
    let w = frame.width();
    for (i, &y) in frame.y().iter().enumerate() {
        let (u, v) = frame.chroma_at(i % w, i / w);
        let [r, g, b] = rgb_from_yuv(y, u, v);
        out.r.push(r);
        out.g.push(g);
        out.b.push(b);
    }
    out
}

pub(super) fn hsv_planes(rgb: &RgbPlanes) -> HsvPlanes {
    let n = rgb.r.len();
    let mut out = HsvPlanes {
        h: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (h, s, v) = hsv_from_rgb(rgb.r[i], rgb.g[i], rgb.b[i]);
        out.h.push(h);
        out.s.push(s);
        out.v.push(v);
    }
    out
}
