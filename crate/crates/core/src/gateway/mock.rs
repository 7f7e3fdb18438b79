use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::endpoint::{Completer, Completion, CompletionRequest};
use super::prompt::PromptBundle;
use super::GatewayError;
use crate::letter::Letter;

/// Deterministic stand-in for a model.
///
/// With `context_aware` set and the gold option's text present verbatim in
/// the context, the gold letter is returned. Otherwise the letter is drawn
/// uniformly from the bundle's options by an RNG seeded from `seed` and the
/// bundle content. Both branches answer as `"The answer is X."`.
pub fn mock_complete(seed: u64, bundle: &PromptBundle, gold: Letter, context_aware: bool) -> Completion {
    let knows = context_aware
        && bundle
            .options
            .get(&gold)
            .is_some_and(|t| !t.is_empty() && bundle.context.contains(t.as_str()));
    let letter = if knows {
        gold
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, bundle));
        let n = bundle.options.len().max(1);
        *bundle
            .options
            .keys()
            .nth(rng.random_range(0..n))
            .unwrap_or(&Letter::A)
    };
    Completion {
        text: format!("The answer is {letter}."),
        latency_ms: 0,
        attempt: 1,
    }
}

fn mix_seed(seed: u64, bundle: &PromptBundle) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for part in [&bundle.context, &bundle.question] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    for (letter, text) in &bundle.options {
        h.update([letter.as_char() as u8]);
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockCompleter {
    pub context_aware: bool,
}

impl Completer for MockCompleter {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, GatewayError> {
        Ok(mock_complete(request.seed, request.bundle, request.gold, self.context_aware))
    }
}
