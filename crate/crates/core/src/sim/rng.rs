use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Key for a family of independent ChaCha8 streams, one per path index.
#[derive(Debug, Clone)]
pub struct PathRng {
    base: ChaCha8Rng,
}

impl PathRng {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Fresh generator positioned at the start of stream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}
