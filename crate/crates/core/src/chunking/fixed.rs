use super::{ChunkLimits, Chunker};

/// Static chunking: a cut every `target` bytes; the last chunk may be shorter.
/// The cut list depends only on the content length.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticChunker;

impl StaticChunker {
    pub const NAME: &'static str = "sc";
}

impl Chunker for StaticChunker {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn cut_points(&self, content: &[u8], limits: &ChunkLimits) -> Vec<usize> {
        let step = usize::try_from(limits.target.max(1)).unwrap_or(usize::MAX);
        (1..)
            .map_while(|i: usize| i.checked_mul(step))
            .take_while(|&c| c < content.len())
            .collect()
    }
}
