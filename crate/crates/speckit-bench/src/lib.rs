//! Shared synthetic-corpus helpers for the criterion benchmarks in
//! `benches/`.

use speckit_core::corpus::{ComponentKind, ComponentSpace, SpecComponent};

pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }
}

pub const WORDS: [&str; 32] = [
    "nas",
    "integrity",
    "protection",
    "registration",
    "procedure",
    "security",
    "mode",
    "control",
    "timer",
    "state",
    "message",
    "request",
    "accept",
    "reject",
    "emergency",
    "identity",
    "authentication",
    "context",
    "ue",
    "amf",
    "5.5.1",
    "5.4.2",
    "t3521",
    "clause",
    "ciphering",
    "handover",
    "bearer",
    "paging",
    "session",
    "release",
    "suci",
    "guti",
];

/// Deterministic corpus of `n_chunks` pseudo-clauses.
pub fn synthetic_space(n_chunks: usize) -> ComponentSpace {
    let mut rng = Lcg(42);
    let components: Vec<SpecComponent> = (0..n_chunks)
        .map(|i| {
            let len = 6 + (rng.next_u64() as usize) % 24;
            let content = (0..len)
                .map(|_| WORDS[(rng.next_u64() as usize) % WORDS.len()])
                .collect::<Vec<_>>()
                .join(" ");
            SpecComponent {
                component_id: format!("TS 24.501/{}/text/0", i + 1),
                kind: ComponentKind::Text,
                spec_id: "TS 24.501".to_string(),
                clause_id: format!("{}", i + 1),
                label: None,
                source_char_span: (0, content.len()),
                content,
            }
        })
        .collect();
    ComponentSpace {
        spec_ids: ["TS 24.501".to_string()].into_iter().collect(),
        components,
        stats: Default::default(),
    }
}
