use std::io::{BufRead, BufReader, Read, Write};

use super::{Chroma, Frame, FrameIoError, Result, StreamInfo, MAX_DIMENSION};

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const MAX_LINE: usize = 4096;

fn parse_chroma(tag: &str) -> Result<Chroma> {
    match tag {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(Chroma::C420),
        "422" => Ok(Chroma::C422),
        "444" => Ok(Chroma::C444),
        other => Err(FrameIoError::UnsupportedChroma(other.to_owned())),
    }
}

fn parse_dimension(name: char, value: &str) -> Result<usize> {
    match value.parse::<usize>() {
        Ok(v) if v > 0 && v <= MAX_DIMENSION => Ok(v),
        _ => Err(FrameIoError::MalformedParam(format!("{name}{value}"))),
    }
}

fn parse_rate(value: &str) -> Result<(u32, u32)> {
    let bad = || FrameIoError::MalformedParam(format!("F{value}"));
    let (num, den) = value.split_once(':').ok_or_else(bad)?;
    let num: u32 = num.parse().map_err(|_| bad())?;
    let den: u32 = den.parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(bad());
    }
    Ok((num, den))
}

fn parse_header_line(line: &[u8]) -> Result<StreamInfo> {
    if line.len() < SIGNATURE.len() || &line[..SIGNATURE.len()] != SIGNATURE {
        return Err(FrameIoError::MissingSignature);
    }
    let rest = &line[SIGNATURE.len()..];
    if !rest.is_empty() && rest[0] != b' ' {
        return Err(FrameIoError::MissingSignature);
    }
    let text = std::str::from_utf8(rest).map_err(|_| FrameIoError::MalformedParam("non-ASCII header".into()))?;

    let (mut width, mut height, mut rate) = (None, None, None);
    let mut chroma = Chroma::C420;
    for token in text.split(' ').filter(|t| !t.is_empty()) {
        let mut chars = token.chars();
        let key = chars.next().unwrap_or(' ');
        let value = chars.as_str();
        match key {
            'W' => width = Some(parse_dimension('W', value)?),
            'H' => height = Some(parse_dimension('H', value)?),
            'F' => rate = Some(parse_rate(value)?),
            'C' => chroma = parse_chroma(value)?,
            _ => {}
        }
    }
    let width = width.ok_or_else(|| FrameIoError::MalformedParam("missing W".into()))?;
    let height = height.ok_or_else(|| FrameIoError::MalformedParam("missing H".into()))?;
    let (fps_num, fps_den) = rate.ok_or_else(|| FrameIoError::MalformedParam("missing F".into()))?;
    Ok(StreamInfo {
        width,
        height,
        fps_num,
        fps_den,
        chroma,
        frame_count_hint: None,
    })
}

/// Parses the stream header at the start of `bytes`. Returns the stream
/// description and the number of octets consumed, newline included.
pub fn parse_y4m_header(bytes: &[u8]) -> Result<(StreamInfo, usize)> {
    let limit = bytes.len().min(MAX_LINE);
    match bytes[..limit].iter().position(|&b| b == b'\n') {
        Some(end) => Ok((parse_header_line(&bytes[..end])?, end + 1)),
        None => {
            // Report a bad signature before complaining about the missing newline.
            parse_header_line(&bytes[..limit])?;
            Err(FrameIoError::MalformedParam("header line is not terminated".into()))
        }
    }
}

/// Reads one `\n`-terminated line of at most `MAX_LINE` octets. `Ok(None)`
/// at a clean end of input.
fn read_line<R: BufRead>(reader: &mut R, buf: &mut Vec<u8>) -> std::io::Result<Option<bool>> {
    buf.clear();
    let n = reader.by_ref().take(MAX_LINE as u64).read_until(b'\n', buf)?;
    if n == 0 {
        return Ok(None);
    }
    let terminated = buf.last() == Some(&b'\n');
    if terminated {
        buf.pop();
    }
    Ok(Some(terminated))
}

/// Sequential YUV4MPEG2 reader. Frames are numbered from 0.
pub struct Y4mReader<R: Read> {
    reader: BufReader<R>,
    info: StreamInfo,
    next_index: usize,
    line: Vec<u8>,
}

impl<R: Read> Y4mReader<R> {
    pub fn new(inner: R) -> Result<Self> {
        let mut reader = BufReader::new(inner);
        let mut line = Vec::new();
        match read_line(&mut reader, &mut line)? {
            Some(true) => {}
            Some(false) => {
                parse_header_line(&line)?;
                return Err(FrameIoError::MalformedParam("header line is not terminated".into()));
            }
            None => return Err(FrameIoError::MissingSignature),
        }
        let info = parse_header_line(&line)?;
        Ok(Y4mReader {
            reader,
            info,
            next_index: 0,
            line,
        })
    }

    pub fn info(&self) -> &StreamInfo {
        &self.info
    }

    pub fn next_frame(&mut self) -> Result<Option<Frame>> {
        let index = self.next_index;
        match read_line(&mut self.reader, &mut self.line)? {
            None => return Ok(None),
            Some(terminated) => {
                let marker_ok = self.line.starts_with(b"FRAME") && (self.line.len() == 5 || self.line[5] == b' ');
                if !marker_ok {
                    return Err(FrameIoError::BadFrameMarker(index));
                }
                if !terminated {
                    return Err(FrameIoError::TruncatedFrame(index));
                }
            }
        }
        let info = &self.info;
        let (cw, ch) = info.chroma.plane_dims(info.width, info.height);
        let mut y = vec![0; info.width * info.height];
        let mut u = vec![0; cw * ch];
        let mut v = vec![0; cw * ch];
        for plane in [&mut y, &mut u, &mut v] {
            self.reader.read_exact(plane).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => FrameIoError::TruncatedFrame(index),
                _ => FrameIoError::Io(e),
            })?;
        }
        self.next_index += 1;
        Frame::from_planes(index, info.width, info.height, info.chroma, y, u, v).map(Some)
    }
}

impl<R: Read> Iterator for Y4mReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

pub struct Y4mWriter<W: Write> {
    sink: W,
    info: StreamInfo,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut sink: W, info: StreamInfo) -> Result<Self> {
        writeln!(
            sink,
            "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C{}",
            info.width,
            info.height,
            info.fps_num,
            info.fps_den,
            info.chroma.y4m_tag()
        )?;
        Ok(Y4mWriter { sink, info })
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<()> {
        if frame.width() != self.info.width || frame.height() != self.info.height || frame.chroma() != self.info.chroma
        {
            return Err(FrameIoError::PlaneSize);
        }
        self.sink.write_all(b"FRAME\n")?;
        self.sink.write_all(frame.y())?;
        self.sink.write_all(frame.u())?;
        self.sink.write_all(frame.v())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}
