use crate::error::{Error, Result};

/// Per-video descriptor tensor: `frames × locations × dim`, stored row-major
/// with the frame index outermost and the descriptor component innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    frames: usize,
    locations: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(frames: usize, locations: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let expected = frames
            .checked_mul(locations)
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| {
                Error::DimensionOverflow(format!("{frames}x{locations}x{dim}"))
            })?;
        if data.len() != expected {
            return Err(Error::mismatch("feature map data length", expected, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(Self {
            frames,
            locations,
            dim,
            data,
        })
    }

    /// Builds a map from a list of frames, each a list of descriptors.
    pub fn from_frames(frames: &[Vec<Vec<f64>>]) -> Result<Self> {
        let t = frames.len();
        let n = frames.first().map_or(0, Vec::len);
        let d = frames
            .first()
            .and_then(|f| f.first())
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(t * n * d);
        for frame in frames {
            if frame.len() != n {
                return Err(Error::mismatch("locations per frame", n, frame.len()));
            }
            for x in frame {
                if x.len() != d {
                    return Err(Error::mismatch("descriptor dim", d, x.len()));
                }
                data.extend_from_slice(x);
            }
        }
        Self::new(t, n, d, data)
    }

    /// Zero-descriptor map of the given dimensionality.
    pub fn empty(dim: usize) -> Self {
        Self {
            frames: 0,
            locations: 0,
            dim,
            data: Vec::new(),
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn locations(&self) -> usize {
        self.locations
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of local descriptors, `frames · locations`.
    pub fn len(&self) -> usize {
        self.frames * self.locations
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn descriptor(&self, frame: usize, location: usize) -> &[f64] {
        let start = (frame * self.locations + location) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Descriptors in canonical order (frame outer, location inner).
    pub fn descriptors(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let dim = self.dim;
        (0..self.len()).map(move |n| &self.data[n * dim..(n + 1) * dim])
    }
}
