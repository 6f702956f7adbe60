//! Write a ready-to-evaluate demo corpus and detection dump.
//!
//! ```text
//! cargo run -p drivevqa-core --example demo_corpus -- demo
//! ```
//!
//! creates `demo/corpus/` (manifest, human answers, ratings) and
//! `demo/batch.roif`, a 36-detection dump that the driving whitelist prunes
//! to 17 rows.

use std::path::PathBuf;

use drivevqa_core::dump::save_detection_dump;
use drivevqa_core::fixtures::{fixture_f1, write_fixture_f2};

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("demo"));

    let corpus = root.join("corpus");
    let fixture = write_fixture_f2(&corpus).expect("writing corpus");
    println!(
        "wrote corpus with {} samples / {} questions to {}",
        fixture.manifest.entries.len(),
        fixture.manifest.questions.len(),
        corpus.display()
    );

    let (dets, vocab) = fixture_f1();
    let dump = root.join("batch.roif");
    save_detection_dump(&dets, &vocab, &dump).expect("writing dump");
    println!("wrote {}-detection dump to {}", dets.len(), dump.display());

    // The human answers were collected against the seed-{seed} mock
    // backend, so evaluate with the same seed to line the two up.
    println!(
        "next: drivevqa evaluate --seed {} --corpus {} --out {}",
        fixture.seed,
        corpus.display(),
        root.join("report").display()
    );
}
