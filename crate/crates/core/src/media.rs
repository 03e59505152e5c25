//! Planar 8-bit YUV 4:2:0 frames, raw I420 streams and YUV4MPEG2 files.
//!
//! Both readers decode lazily: [`RawYuvReader`] and [`Y4mReader`] are
//! iterators that pull one frame at a time from the underlying reader, so a
//! long 2160p sequence never needs to sit in memory as a whole.

use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const Y4M_SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";
const MAX_HEADER_LEN: usize = 4096;

/// One planar 8-bit 4:2:0 picture.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    index: usize,
    width: usize,
    height: usize,
    y: Vec<u8>,
    u: Vec<u8>,
    v: Vec<u8>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("index", &self.index)
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::OddDimensions { width, height });
    }
    Ok(())
}

/// Bytes occupied by one I420 frame.
pub fn frame_bytes(width: usize, height: usize) -> usize {
    width * height + 2 * (width / 2) * (height / 2)
}

impl Frame {
    pub fn new(
        index: usize,
        width: usize,
        height: usize,
        y: Vec<u8>,
        u: Vec<u8>,
        v: Vec<u8>,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let luma = width * height;
        let chroma = (width / 2) * (height / 2);
        for (plane, len, expected) in [("Y", y.len(), luma), ("U", u.len(), chroma), ("V", v.len(), chroma)] {
            if len != expected {
                return Err(Error::PlaneSize {
                    plane,
                    expected,
                    actual: len,
                });
            }
        }
        Ok(Self {
            index,
            width,
            height,
            y,
            u,
            v,
        })
    }

    /// Frame with the given luma and neutral (128) chroma.
    pub fn from_luma(index: usize, width: usize, height: usize, y: Vec<u8>) -> Result<Self> {
        let chroma = (width / 2) * (height / 2);
        Self::new(index, width, height, y, vec![128; chroma], vec![128; chroma])
    }

    fn from_i420(index: usize, width: usize, height: usize, buf: &[u8]) -> Self {
        let luma = width * height;
        let chroma = (width / 2) * (height / 2);
        Self {
            index,
            width,
            height,
            y: buf[..luma].to_vec(),
            u: buf[luma..luma + chroma].to_vec(),
            v: buf[luma + chroma..luma + 2 * chroma].to_vec(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn y_plane(&self) -> &[u8] {
        &self.y
    }

    pub fn u_plane(&self) -> &[u8] {
        &self.u
    }

    pub fn v_plane(&self) -> &[u8] {
        &self.v
    }

    pub(crate) fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    fn write_i420<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(&self.y)?;
        out.write_all(&self.u)?;
        out.write_all(&self.v)
    }
}

/// Borrowed 8-bit sample grid, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Plane<'a> {
    width: usize,
    height: usize,
    data: &'a [u8],
}

impl<'a> Plane<'a> {
    pub fn new(width: usize, height: usize, data: &'a [u8]) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::PlaneSize {
                plane: "sample",
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &'a [u8] {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &'a [u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.height).map(|y| self.row(y).to_vec()).collect()
    }
}

/// The Y plane of `frame` as a height×width grid.
pub fn luma(frame: &Frame) -> Plane<'_> {
    Plane {
        width: frame.width,
        height: frame.height,
        data: &frame.y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn fps(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        Self::new(30, 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    frames: Vec<Frame>,
    frame_rate: Option<FrameRate>,
}

impl VideoSequence {
    /// Builds a sequence, renumbering frames from 0 and checking that all
    /// share one size.
    pub fn new(frames: Vec<Frame>, frame_rate: Option<FrameRate>) -> Result<Self> {
        if let Some(first) = frames.first() {
            let dims = (first.width, first.height);
            for f in &frames {
                if (f.width, f.height) != dims {
                    return Err(Error::mismatch(dims, (f.width, f.height)));
                }
            }
        }
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.with_index(i))
            .collect();
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate(&self) -> Option<FrameRate> {
        self.frame_rate
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.width, f.height))
    }
}

/// Fills `buf` from `reader`, returning the number of bytes read before EOF.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Streaming reader for headerless I420 data.
pub struct RawYuvReader<R> {
    reader: R,
    width: usize,
    height: usize,
    next_index: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> RawYuvReader<R> {
    pub fn new(reader: R, width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            reader,
            width,
            height,
            next_index: 0,
            buf: vec![0; frame_bytes(width, height)],
            done: false,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

impl<R: Read> Iterator for RawYuvReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let got = match read_full(&mut self.reader, &mut self.buf) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        };
        if got == 0 {
            self.done = true;
            return None;
        }
        if got < self.buf.len() {
            self.done = true;
            return Some(Err(Error::PartialFrame {
                expected: self.buf.len(),
                actual: got,
            }));
        }
        let frame = Frame::from_i420(self.next_index, self.width, self.height, &self.buf);
        self.next_index += 1;
        Some(Ok(frame))
    }
}

pub fn read_raw_yuv420<R: Read>(reader: R, width: usize, height: usize) -> Result<VideoSequence> {
    let frames = RawYuvReader::new(reader, width, height)?.collect::<Result<Vec<_>>>()?;
    VideoSequence::new(frames, None)
}

pub fn write_raw_yuv420<W: Write>(seq: &VideoSequence, mut out: W) -> Result<()> {
    for f in seq.frames() {
        f.write_i420(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub frame_rate: FrameRate,
}

/// Largest frame a y4m header may declare; guards the frame buffer
/// allocation against corrupt headers.
const MAX_Y4M_PIXELS: usize = 1 << 26;

fn parse_ratio(token: &str) -> Result<(u32, u32)> {
    let (n, d) = token
        .split_once(':')
        .ok_or_else(|| Error::Y4mHeader(format!("expected ratio, got {token:?}")))?;
    let parse = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| Error::Y4mHeader(format!("bad ratio component {s:?}")))
    };
    Ok((parse(n)?, parse(d)?))
}

fn parse_y4m_header(line: &[u8]) -> Result<Y4mHeader> {
    let text = std::str::from_utf8(line).map_err(|_| Error::Y4mHeader("header is not ASCII".into()))?;
    let mut tokens = text.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::Y4mSignature);
    }
    let mut width = None;
    let mut height = None;
    let mut frame_rate = None;
    for token in tokens {
        let tag_len = token.chars().next().map_or(0, char::len_utf8);
        let (tag, value) = token.split_at(tag_len);
        match tag {
            "W" => {
                width = Some(value.parse::<usize>().map_err(|_| Error::Y4mHeader(format!("bad width {value:?}")))?)
            }
            "H" => {
                height = Some(value.parse::<usize>().map_err(|_| Error::Y4mHeader(format!("bad height {value:?}")))?)
            }
            "F" => {
                let (num, den) = parse_ratio(value)?;
                if num == 0 || den == 0 {
                    return Err(Error::Y4mHeader(format!("bad frame rate {value:?}")));
                }
                frame_rate = Some(FrameRate::new(num, den));
            }
            "C" => match value {
                "420" | "420jpeg" | "420paldv" | "420mpeg2" => {}
                other => return Err(Error::UnsupportedColorspace(other.to_string())),
            },
            // interlacing, aspect ratio and extensions carry nothing the metrics use
            "I" | "A" | "X" => {}
            _ => return Err(Error::Y4mHeader(format!("unknown tag {token:?}"))),
        }
    }
    let width = width.ok_or_else(|| Error::Y4mHeader("missing W".into()))?;
    let height = height.ok_or_else(|| Error::Y4mHeader("missing H".into()))?;
    let frame_rate = frame_rate.ok_or_else(|| Error::Y4mHeader("missing F".into()))?;
    check_dims(width, height)?;
    if width.checked_mul(height).is_none_or(|n| n > MAX_Y4M_PIXELS) {
        return Err(Error::Y4mHeader(format!(
            "frame size {width}x{height} exceeds {MAX_Y4M_PIXELS} pixels"
        )));
    }
    Ok(Y4mHeader {
        width,
        height,
        frame_rate,
    })
}

/// Reads bytes up to (not including) `\n`. Returns `None` on clean EOF
/// before any byte.
fn read_line<R: BufRead>(reader: &mut R, limit: usize) -> Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    let n = reader.take(limit as u64 + 1).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        if line.len() > limit {
            return Err(Error::Y4mHeader("header line too long".into()));
        }
        return Err(Error::Y4mHeader("unterminated header line".into()));
    }
    line.pop();
    Ok(Some(line))
}

/// Streaming YUV4MPEG2 reader.
pub struct Y4mReader<R> {
    reader: BufReader<R>,
    header: Y4mHeader,
    next_index: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> Y4mReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut signature = [0u8; 9];
        if read_full(&mut reader, &mut signature)? < signature.len() || signature != Y4M_SIGNATURE {
            return Err(Error::Y4mSignature);
        }
        let rest = read_line(&mut reader, MAX_HEADER_LEN)?
            .ok_or_else(|| Error::Y4mHeader("unterminated header line".into()))?;
        let mut line = signature.to_vec();
        line.extend_from_slice(&rest);
        let header = parse_y4m_header(&line)?;
        let buf = vec![0; frame_bytes(header.width, header.height)];
        Ok(Self {
            reader,
            header,
            next_index: 0,
            buf,
            done: false,
        })
    }

    pub fn header(&self) -> &Y4mHeader {
        &self.header
    }

    fn read_frame(&mut self) -> Result<Option<Frame>> {
        let Some(line) = read_line(&mut self.reader, MAX_HEADER_LEN)? else {
            return Ok(None);
        };
        if !line.starts_with(FRAME_MARKER)
            || !(line.len() == FRAME_MARKER.len() || line[FRAME_MARKER.len()] == b' ')
        {
            return Err(Error::Y4mHeader(format!(
                "expected FRAME marker before frame {}",
                self.next_index
            )));
        }
        let got = read_full(&mut self.reader, &mut self.buf)?;
        if got < self.buf.len() {
            return Err(Error::TruncatedFrame {
                index: self.next_index,
                expected: self.buf.len(),
                actual: got,
            });
        }
        let frame = Frame::from_i420(self.next_index, self.header.width, self.header.height, &self.buf);
        self.next_index += 1;
        Ok(Some(frame))
    }
}

impl<R: Read> Iterator for Y4mReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_frame() {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn read_y4m<R: Read>(reader: R) -> Result<VideoSequence> {
    let reader = Y4mReader::new(reader)?;
    let rate = reader.header.frame_rate;
    let frames = reader.collect::<Result<Vec<_>>>()?;
    VideoSequence::new(frames, Some(rate))
}

pub fn write_y4m<W: Write>(seq: &VideoSequence, mut out: W) -> Result<()> {
    let (width, height) = seq
        .dimensions()
        .ok_or_else(|| Error::InvalidArgument("cannot write an empty sequence as y4m".into()))?;
    let rate = seq.frame_rate.unwrap_or_default();
    writeln!(
        out,
        "YUV4MPEG2 W{width} H{height} F{}:{} Ip A1:1 C420jpeg",
        rate.num, rate.den
    )?;
    for f in seq.frames() {
        out.write_all(b"FRAME\n")?;
        f.write_i420(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

/// Frame source over either container.
pub enum FrameReader<R> {
    Raw(RawYuvReader<R>),
    Y4m(Y4mReader<R>),
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            FrameReader::Raw(r) => r.next(),
            FrameReader::Y4m(r) => r.next(),
        }
    }
}

/// Opens a video file, detecting y4m by its signature. Raw files need
/// `dims`.
pub fn open_video(
    path: &Path,
    dims: Option<(usize, usize)>,
) -> Result<FrameReader<BufReader<std::fs::File>>> {
    let mut file = BufReader::new(std::fs::File::open(path)?);
    let is_y4m = file.fill_buf()?.starts_with(Y4M_SIGNATURE);
    if is_y4m {
        return Ok(FrameReader::Y4m(Y4mReader::new(file)?));
    }
    let (w, h) = dims.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} is raw YUV; --width and --height are required",
            path.display()
        ))
    })?;
    Ok(FrameReader::Raw(RawYuvReader::new(file, w, h)?))
}
